"""Finite kernel spaces (X, K, nu) and their plain-text codec."""
from dataclasses import dataclass
import json
import logging
import numpy as np
from ..config import Config
from ..errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

SPACE_FORMAT_HEADER = 'fracpot-space'


@dataclass(frozen=True, eq=False)
class DiscreteKernelSpace:
    """Point set with kernel K: X x X -> [0, inf] and atom weights nu.

    :param kernel: square matrix, symmetric unless ``symmetric`` is False
    :param weights: non-negative atom masses of nu
    :param coords: optional coordinate rows, one per point
    :param labels: optional point ids, defaults to 0..n-1
    """
    kernel: np.ndarray
    weights: np.ndarray
    coords: np.ndarray | None = None
    labels: tuple | None = None
    symmetric: bool = True

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
            raise DomainError(f"kernel must be a square matrix, got shape {kernel.shape}")
        if weights.shape != (kernel.shape[0],):
            raise DomainError(f"need one weight per point: {kernel.shape[0]} points, {weights.shape} weights")
        if np.any(np.isnan(kernel)) or np.any(kernel < 0):
            raise DomainError("kernel values must lie in [0, inf]")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise DomainError("weights must be finite and non-negative")
        if self.symmetric and not np.array_equal(kernel, kernel.T):
            raise DomainError("kernel is not symmetric")
        coords = None if self.coords is None else np.atleast_2d(np.array(self.coords, dtype=float))
        if coords is not None and coords.shape[0] != kernel.shape[0]:
            raise DomainError("need one coordinate row per point")
        labels = tuple(range(kernel.shape[0])) if self.labels is None else tuple(self.labels)
        kernel.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'kernel', kernel)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'coords', coords)
        object.__setattr__(self, 'labels', labels)

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @property
    def off_diagonal(self) -> np.ndarray:
        return self.kernel[~np.eye(self.size, dtype=bool)]

    def truncation_level(self, factor: float = Config.WMP_TRUNCATION_FACTOR) -> float:
        off = self.off_diagonal
        finite = off[np.isfinite(off)]
        return factor * (float(finite.max()) if finite.size else 1.)

    def truncated(self, level: float | None = None) -> 'DiscreteKernelSpace':
        """K_N = min(K, N), default N = factor * max off-diagonal entry"""
        level = self.truncation_level() if level is None else level
        if not level > 0:
            raise DomainError(f"truncation level must be positive, got {level}")
        return DiscreteKernelSpace(np.minimum(self.kernel, level), self.weights, self.coords,
                                   self.labels, self.symmetric)

    def multiplied(self, eta) -> 'DiscreteKernelSpace':
        """K(x, y) eta(y); generally not symmetric"""
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.size,) or np.any(~(eta > 0)) or np.any(~np.isfinite(eta)):
            raise DomainError("eta must be finite and positive at every point")
        return DiscreteKernelSpace(self.kernel * eta[None, :], self.weights, self.coords, self.labels,
                                   symmetric=False)

    def with_weights(self, weights) -> 'DiscreteKernelSpace':
        return DiscreteKernelSpace(self.kernel, weights, self.coords, self.labels, self.symmetric)

    def subspace(self, keep) -> 'DiscreteKernelSpace':
        idx = np.asarray(keep)
        if idx.dtype == bool:
            idx = np.nonzero(idx)[0]
        coords = None if self.coords is None else self.coords[idx]
        return DiscreteKernelSpace(self.kernel[np.ix_(idx, idx)], self.weights[idx], coords,
                                   tuple(self.labels[i] for i in idx), self.symmetric)

    def potential(self, f=None, weights=None) -> np.ndarray:
        """K_nu f(x) = sum_y K(x, y) f(y) nu(y); points where f nu vanishes contribute 0"""
        nu = self.weights if weights is None else np.asarray(weights, dtype=float)
        f = np.ones(self.size) if f is None else np.asarray(f, dtype=float)
        mass = f * nu
        active = mass != 0
        if not np.any(active):
            return np.zeros(self.size)
        return self.kernel[:, active] @ mass[active]


def dump_space(space: DiscreteKernelSpace) -> str:
    """Text form: header, point count, optional coordinates, kernel rows, weights, labels as a JSON list"""
    lines = [f'{SPACE_FORMAT_HEADER} {Config.SCHEMA_VERSION}', f'points {space.size}']
    lines.append('symmetric' if space.symmetric else 'asymmetric')
    if space.coords is None:
        lines.append('coords 0')
    else:
        lines.append(f'coords {space.coords.shape[1]}')
        lines.extend(' '.join(repr(float(v)) for v in row) for row in space.coords)
    lines.append('kernel')
    lines.extend(' '.join(repr(float(v)) for v in row) for row in space.kernel)
    lines.append('weights')
    lines.append(' '.join(repr(float(v)) for v in space.weights))
    lines.append('labels')
    lines.append(json.dumps([v.item() if isinstance(v, np.generic) else v for v in space.labels]))
    return '\n'.join(lines) + '\n'


def load_space(text: str) -> DiscreteKernelSpace:
    rows = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith('#')]
    try:
        header, version = rows[0].split()
        if header != SPACE_FORMAT_HEADER or int(version) != Config.SCHEMA_VERSION:
            raise ConfigError(f"unsupported space format '{rows[0]}'")
        count = int(rows[1].split()[1])
        symmetric = rows[2] == 'symmetric'
        dim = int(rows[3].split()[1])
        pos = 4
        coords = None
        if dim:
            coords = np.array([[float(v) for v in rows[pos + i].split()] for i in range(count)])
            pos += count
        if rows[pos] != 'kernel':
            raise ConfigError(f"expected 'kernel', got '{rows[pos]}'")
        kernel = np.array([[float(v) for v in rows[pos + 1 + i].split()] for i in range(count)])
        pos += 1 + count
        if rows[pos] != 'weights':
            raise ConfigError(f"expected 'weights', got '{rows[pos]}'")
        weights = np.array([float(v) for v in rows[pos + 1].split()])
        pos += 2
        labels = None
        # files without a labels section number their points 0..n-1
        if pos < len(rows):
            if rows[pos] != 'labels':
                raise ConfigError(f"expected 'labels', got '{rows[pos]}'")
            labels = json.loads(rows[pos + 1])
            if not isinstance(labels, list) or len(labels) != count:
                raise ConfigError(f"need one label per point, got {rows[pos + 1]}")
    except (IndexError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"malformed space file: {err}") from err
    return DiscreteKernelSpace(kernel, weights, coords, labels, symmetric=symmetric)


def write_space(space: DiscreteKernelSpace, path):
    with open(path, 'w') as fh:
        fh.write(dump_space(space))


def read_space(path) -> DiscreteKernelSpace:
    with open(path) as fh:
        return load_space(fh.read())
