"""Cell-centred discretisation of G^(alpha) sigma on a Euclidean ball.

Cells of side h tile [-R, R]^n and are kept when their centre lies inside the
ball. The operator f -> sum_j G(x_i, x_j) theta_j f_j h^n is a convolution with
the translation-invariant stencil G(h |d|), applied by FFT on a 2m-periodic box;
the stencil's zero entry is the cell average of G over the ball of volume h^n.
"""
from dataclasses import dataclass, field
from pathlib import Path
from warnings import warn
import logging
import math
import struct
import numpy as np
from scipy import fft
from ..config import Config
from ..errors import ConfigError, CostGuardError, DomainError
from ..green import RieszGreen, riesz_constant
from ..profiles import MeasureProfile, PowerDensityMeasure, unit_ball_volume

logger = logging.getLogger(__name__)

CACHE_HEADER = struct.Struct('<4sIQ')
DENSE_CELL_LIMIT = 5000


@dataclass(frozen=True)
class ForcingSpec:
    """eta = amplitude on the ball of the given radius, zero elsewhere"""
    amplitude: float = Config.ETA_AMPLITUDE
    radius: float = Config.ETA_RADIUS

    def __post_init__(self):
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise DomainError(f"Invalid forcing amplitude '{self.amplitude}'. Must be finite and >= 0")
        if not self.radius > 0:
            raise DomainError(f"Invalid forcing radius '{self.radius}'. Must be positive")

    def scaled(self, factor: float) -> 'ForcingSpec':
        return ForcingSpec(self.amplitude * factor, self.radius)


def cell_diagonal(n: int, alpha: float, h: float) -> float:
    """Average of C(n, alpha) |z|^(2 alpha - n) over the ball of volume h^n"""
    r_h = h / unit_ball_volume(n) ** (1 / n)
    return riesz_constant(n, alpha) * n / (2 * alpha) * r_h ** (2 * alpha - n)


def stencil(n: int, alpha: float, h: float, box: int) -> np.ndarray:
    """G(h |d|) laid out on the 2*box periodic grid, index d mod 2*box"""
    size = 2 * box
    offsets = np.fft.fftfreq(size, 1 / size)
    squares = np.meshgrid(*([offsets ** 2] * n), indexing='ij', sparse=True)
    dist = h * np.sqrt(sum(squares))
    values = RieszGreen(n, alpha)(np.where(dist > 0, dist, 1.))
    values[(0,) * n] = cell_diagonal(n, alpha, h)
    return values


def kernel_cache_name(n: int, alpha: float, h: float, box: int) -> str:
    return f'riesz-n{n}-a{alpha!r}-h{h!r}-m{box}.fpk'


def save_kernel_cache(path, values: np.ndarray):
    """16-byte header (magic, version, entry count), then row-major float64 entries"""
    data = np.ascontiguousarray(values, dtype='<f8')
    with open(path, 'wb') as fh:
        fh.write(CACHE_HEADER.pack(Config.KERNEL_CACHE_MAGIC, Config.KERNEL_CACHE_VERSION, data.size))
        fh.write(data.tobytes(order='C'))


def load_kernel_cache(path, shape: tuple) -> np.ndarray:
    with open(path, 'rb') as fh:
        head = fh.read(CACHE_HEADER.size)
        if len(head) != CACHE_HEADER.size:
            raise ConfigError(f"kernel cache '{path}' is truncated")
        magic, version, count = CACHE_HEADER.unpack(head)
        if magic != Config.KERNEL_CACHE_MAGIC or version != Config.KERNEL_CACHE_VERSION:
            raise ConfigError(f"kernel cache '{path}' has an unsupported header")
        if count != math.prod(shape):
            raise ConfigError(f"kernel cache '{path}' holds {count} entries, expected {math.prod(shape)}")
        data = np.frombuffer(fh.read(), dtype='<f8')
    if data.size != count:
        raise ConfigError(f"kernel cache '{path}' is truncated")
    return data.reshape(shape).astype(float)


def _cached_stencil(n: int, alpha: float, h: float, box: int, cache_dir) -> np.ndarray:
    if cache_dir is None:
        return stencil(n, alpha, h, box)
    path = Path(cache_dir) / kernel_cache_name(n, alpha, h, box)
    if path.exists():
        try:
            return load_kernel_cache(path, (2 * box,) * n)
        except ConfigError as err:
            warn(f"{err}; rebuilding it")
    values = stencil(n, alpha, h, box)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_kernel_cache(path, values)
    logger.debug("kernel stencil written to %s", path)
    return values


@dataclass(eq=False)
class GridProblem:
    """Discretised v = G((v^q + eta) sigma) on the ball of radius ``radius``.

    An atom of sigma at the origin is carried separately: ``atom_mass`` with
    forcing ``eta_origin``; the origin is not a cell centre.
    """
    n: int
    alpha: float
    q: float
    radius: float
    h: float
    centers: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    atom_mass: float = 0.
    eta_origin: float = 0.
    measure: MeasureProfile | None = None
    forcing: ForcingSpec | None = None
    threads: int = 1
    box: int = 0
    index: np.ndarray = field(default=None, repr=False)
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def cells(self) -> int:
        return self.centers.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def diagonal(self) -> float:
        return cell_diagonal(self.n, self.alpha, self.h)

    @property
    def green(self) -> RieszGreen:
        return RieszGreen(self.n, self.alpha)

    @property
    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.centers, axis=1)

    @property
    def origin_green(self) -> np.ndarray:
        """G(x_i, o) at every cell centre"""
        return self.green(self.distances)

    def truncated_green(self, a: float) -> np.ndarray:
        """m = min(G(., o), 1/a) at the cell centres"""
        if not a > 0:
            raise DomainError(f"Invalid a '{a}'. a must be positive")
        return np.minimum(self.origin_green, 1 / a)

    def _convolve(self, mass: np.ndarray) -> np.ndarray:
        size = (2 * self.box,) * self.n
        grid = np.zeros(self.box ** self.n)
        grid[self.index] = mass
        grid = grid.reshape((self.box,) * self.n)
        out = fft.irfftn(fft.rfftn(grid, s=size, workers=self.threads) * self.spectrum, s=size,
                         workers=self.threads)
        return out[tuple(slice(0, self.box) for _ in range(self.n))].reshape(-1)[self.index]

    def apply(self, f, f_origin: float = 0.) -> tuple[np.ndarray, float]:
        """(G_sigma f at the cells, G_sigma f at the origin)"""
        f = np.asarray(f, dtype=float)
        mass = f * self.theta * self.cell_volume
        cells = self._convolve(mass) if np.any(mass) else np.zeros(self.cells)
        origin = math.fsum(self.origin_green * mass)
        if self.atom_mass > 0 and f_origin > 0:
            cells = cells + self.origin_green * self.atom_mass * f_origin
            origin = math.inf
        return cells, origin

    def potential_at(self, points, f, f_origin: float = 0.) -> np.ndarray:
        """G_sigma f at arbitrary points by direct summation over the cells"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mass = np.asarray(f, dtype=float) * self.theta * self.cell_volume
        dist = np.linalg.norm(points[:, None, :] - self.centers[None, :, :], axis=-1)
        values = self.green(dist) @ mass
        if self.atom_mass > 0 and f_origin > 0:
            values = values + self.green(np.linalg.norm(points, axis=1)) * self.atom_mass * f_origin
        return values

    def kernel_matrix(self) -> np.ndarray:
        """Dense cell-to-cell kernel, diagonal included; small problems only"""
        if self.cells > DENSE_CELL_LIMIT:
            raise CostGuardError(f"dense kernel for {self.cells} cells exceeds the limit {DENSE_CELL_LIMIT}")
        dist = np.linalg.norm(self.centers[:, None, :] - self.centers[None, :, :], axis=-1)
        np.fill_diagonal(dist, 1.)
        matrix = self.green(dist)
        np.fill_diagonal(matrix, self.diagonal)
        return matrix

    def companion(self, factor: float = 0.5, cache_dir=None) -> 'GridProblem':
        """Same problem on the ball of radius factor * radius"""
        return build_grid_problem(self.n, self.alpha, self.q, radius=self.radius * factor, h=self.h,
                                  eta_spec=self.forcing, measure=self.measure, threads=self.threads,
                                  cache_dir=cache_dir)

    def as_records(self, **columns) -> list[dict]:
        """One row per cell: centre coordinates, theta, eta and any extra per-cell columns"""
        records = []
        for i in range(self.cells):
            row = {f'x{k}': float(self.centers[i, k]) for k in range(self.n)}
            row['theta'] = float(self.theta[i])
            row['eta'] = float(self.eta[i])
            row.update({name: float(values[i]) for name, values in columns.items()})
            records.append(row)
        return records


def _cell_layout(n: int, radius: float, h: float, max_cells: int) -> tuple[int, np.ndarray, np.ndarray]:
    estimate = unit_ball_volume(n) * (radius / h) ** n
    if estimate > 2 * max_cells:
        raise CostGuardError(f"about {estimate:.3g} cells exceed the limit {max_cells}; raise h or lower R_max")
    box = 2 * int(math.ceil(radius / h))
    axis = h * (np.arange(box) - box / 2 + 0.5)
    coords = np.stack(np.meshgrid(*([axis] * n), indexing='ij'), axis=-1).reshape(-1, n)
    index = np.nonzero(np.linalg.norm(coords, axis=1) < radius)[0]
    if index.size > max_cells:
        raise CostGuardError(f"{index.size} cells exceed the limit {max_cells}; raise h or lower R_max")
    if index.size == 0:
        raise DomainError(f"no cell centre lies inside radius {radius} at spacing {h}")
    return box, index, coords[index]


def build_grid_problem(
    n: int,
    alpha: float,
    q: float,
    gamma: float | None = 0.,
    radius: float = 2.,
    h: float = 0.125,
    eta_spec: ForcingSpec | None = None,
    measure: MeasureProfile | None = None,
    max_cells: int = Config.MAX_CELLS,
    threads: int = 1,
    cache_dir=None,
) -> GridProblem:
    """Grid problem for (-Delta)^alpha v >= v^q sigma + eta sigma on the ball of radius R_max.

    sigma is |x|^gamma dx unless ``measure`` is given; a measure without a
    density must be an atom at the origin.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"Invalid dimension '{n}'. Grid problems need an integer n >= 1")
    n = int(n)
    riesz_constant(n, alpha)
    if not q > 1:
        raise DomainError(f"Invalid q '{q}'. q must be > 1")
    if not 0 < h < radius:
        raise DomainError(f"Invalid spacing h={h}; need 0 < h < R_max={radius}")
    eta_spec = ForcingSpec() if eta_spec is None else eta_spec
    if eta_spec.radius >= radius:
        raise DomainError(f"forcing radius {eta_spec.radius} must lie inside R_max={radius}")
    measure = PowerDensityMeasure(gamma, n) if measure is None else measure

    box, index, centers = _cell_layout(n, radius, h, max_cells)
    dist = np.linalg.norm(centers, axis=1)
    density = measure.density(dist)
    if density is None:
        if not measure.atom_mass > 0:
            raise DomainError(f"measure '{measure.kind.label}' has neither a density nor an atom at o")
        theta = np.zeros(index.size)
    else:
        theta = np.asarray(density, dtype=float) * np.ones(index.size)
    eta = np.where(dist < eta_spec.radius, eta_spec.amplitude, 0.)

    values = _cached_stencil(n, alpha, h, box, cache_dir)
    spectrum = fft.rfftn(values, workers=threads)
    logger.info("grid problem: n=%d R=%g h=%g, %d cells", n, radius, h, index.size)
    return GridProblem(
        n=n, alpha=alpha, q=q, radius=radius, h=h, centers=centers, theta=theta, eta=eta,
        atom_mass=float(measure.atom_mass), eta_origin=eta_spec.amplitude, measure=measure,
        forcing=eta_spec, threads=threads, box=box, index=index, spectrum=spectrum,
    )
