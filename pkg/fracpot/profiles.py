"""Volume-growth and measure-growth models of radial spaces.

Every profile is immutable and evaluates vectorized over numpy arrays; scalar
input gives a scalar back.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import math
import numpy as np
from scipy.special import gamma as gamma_fn
from .config import Config
from .errors import DomainError, RecurrenceError, UnsupportedRangeError
from .kinds import MeasureKind, VolumeKind

logger = logging.getLogger(__name__)


def unit_ball_volume(n: float) -> float:
    """Lebesgue volume of the unit ball in dimension n"""
    return math.pi ** (n / 2) / gamma_fn(n / 2 + 1)


def _positive_radii(r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"radius must be positive, got {r}")
    return arr


def _like(values: np.ndarray, ref):
    # hand scalars back as floats so callers can use plain arithmetic
    if np.ndim(ref) == 0:
        return float(values)
    return values


def _power_segment(coef: float, p: float, lo, hi) -> np.ndarray:
    """int_lo^hi t^p / coef dt, vectorized, hi may be +inf"""
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        if p == -1:
            return np.log(hi / lo) / coef
        return (np.power(hi, p + 1) - np.power(lo, p + 1)) / ((p + 1) * coef)


class VolumeProfile(ABC):
    """Radial growth function r -> V(r) modelling mu(B(o, r))."""
    kind: VolumeKind

    @abstractmethod
    def __call__(self, r):
        pass

    @property
    @abstractmethod
    def tail_exponent(self) -> float | None:
        """n such that V(r) ~ r^n at infinity, None when not declared"""

    @property
    @abstractmethod
    def power_from(self) -> float | None:
        """Radius beyond which V is an exact power, None when unknown"""

    @property
    @abstractmethod
    def doubling_constant(self) -> float:
        pass

    @abstractmethod
    def scaled(self, c: float) -> 'VolumeProfile':
        pass

    def tail_integral(self, alpha: float, d):
        """Closed form of R(d) = int_d^inf t^(2 alpha - 1) / V(t) dt, None when unavailable"""
        return None


@dataclass(frozen=True)
class PowerLawVolume(VolumeProfile):
    c: float = 1.
    n: float = 3.
    kind = VolumeKind.POWER_LAW

    def __post_init__(self):
        if not self.c > 0 or not self.n > 0:
            raise DomainError(f"power-law volume needs c > 0 and n > 0, got c={self.c}, n={self.n}")

    def __call__(self, r):
        arr = _positive_radii(r)
        return _like(self.c * np.power(arr, self.n), r)

    @property
    def tail_exponent(self) -> float:
        return self.n

    @property
    def power_from(self) -> float:
        return 0.

    @property
    def doubling_constant(self) -> float:
        return 2. ** self.n

    def scaled(self, c: float) -> 'PowerLawVolume':
        return PowerLawVolume(c=self.c * c, n=self.n)

    def tail_integral(self, alpha: float, d):
        arr = np.asarray(d, dtype=float)
        if self.n <= 2 * alpha:
            return _like(np.full(arr.shape, np.inf), d)
        with np.errstate(divide='ignore'):
            value = np.power(arr, 2 * alpha - self.n) / (self.c * (self.n - 2 * alpha))
        return _like(value, d)


@dataclass(frozen=True)
class PiecewisePowerVolume(VolumeProfile):
    """V(r) = c_i r^(n_i) on (b_(i-1), b_i], coefficients matched for continuity.

    :param c0: coefficient of the first piece
    :type c0: float
    :param breakpoints: increasing radii separating the pieces
    :type breakpoints: tuple[float]
    :param exponents: one positive exponent per piece, len(breakpoints) + 1 of them
    :type exponents: tuple[float]
    """
    c0: float = 1.
    breakpoints: tuple = (1.,)
    exponents: tuple = (2., 4.)
    coefficients: tuple = field(init=False, repr=False, compare=False)
    kind = VolumeKind.PIECEWISE_POWER

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        exps = tuple(float(e) for e in self.exponents)
        if len(exps) != len(bps) + 1:
            raise DomainError(
                f"piecewise-power needs {len(bps) + 1} exponents for {len(bps)} breakpoints, got {len(exps)}")
        if any(b <= 0 for b in bps) or any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError(f"breakpoints must be positive and increasing, got {bps}")
        if any(e <= 0 for e in exps) or not self.c0 > 0:
            raise DomainError("piecewise-power exponents and c0 must be positive")
        coefs = [float(self.c0)]
        for b, e_prev, e_next in zip(bps, exps, exps[1:]):
            coefs.append(coefs[-1] * b ** (e_prev - e_next))
        object.__setattr__(self, 'breakpoints', bps)
        object.__setattr__(self, 'exponents', exps)
        object.__setattr__(self, 'coefficients', tuple(coefs))

    def __call__(self, r):
        arr = _positive_radii(r)
        idx = np.searchsorted(np.array(self.breakpoints), arr, side='left')
        coefs = np.array(self.coefficients)[idx]
        exps = np.array(self.exponents)[idx]
        return _like(coefs * np.power(arr, exps), r)

    @property
    def tail_exponent(self) -> float:
        return self.exponents[-1]

    @property
    def power_from(self) -> float:
        return self.breakpoints[-1] if self.breakpoints else 0.

    @property
    def doubling_constant(self) -> float:
        # log V is piecewise linear in log r, so the sup of V(2r)/V(r) sits where r or 2r is a breakpoint
        bps = np.array(self.breakpoints)
        candidates = np.concatenate((bps, bps / 2, [bps[0] / 4, bps[-1] * 4]))
        return float(np.max(self(2 * candidates) / self(candidates)))

    def scaled(self, c: float) -> 'PiecewisePowerVolume':
        return PiecewisePowerVolume(c0=self.c0 * c, breakpoints=self.breakpoints, exponents=self.exponents)

    def tail_integral(self, alpha: float, d):
        arr = np.asarray(d, dtype=float)
        if self.exponents[-1] <= 2 * alpha:
            return _like(np.full(arr.shape, np.inf), d)
        edges = (0.,) + self.breakpoints + (np.inf,)
        total = np.zeros(arr.shape)
        for i, (coef, n) in enumerate(zip(self.coefficients, self.exponents)):
            lo = np.maximum(arr, edges[i])
            hi = np.full(arr.shape, edges[i + 1])
            piece = _power_segment(coef, 2 * alpha - 1 - n, lo, hi)
            total = total + np.where(lo < hi, piece, 0.)
        return _like(total, d)


@dataclass(frozen=True)
class TableVolume(VolumeProfile):
    """Sampled (r, V(r)) pairs interpolated log-log linearly.

    Inside ``bounds`` but outside the samples the end segment's slope is
    continued; above the last sample a declared ``tail_exponent`` takes over.
    """
    radii: tuple = ()
    values: tuple = ()
    bounds: tuple | None = None
    declared_tail: float | None = None
    kind = VolumeKind.TABLE

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or radii.size < 2 or radii.size != values.size:
            raise DomainError("table profile needs at least two (r, V) samples of equal length")
        if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise DomainError("table radii must be positive and increasing")
        if np.any(values <= 0) or np.any(np.diff(values) < 0):
            raise DomainError("table values must be positive and non-decreasing")
        bounds = self.bounds if self.bounds is not None else (radii[0], radii[-1])
        object.__setattr__(self, 'radii', tuple(radii))
        object.__setattr__(self, 'values', tuple(values))
        object.__setattr__(self, 'bounds', (float(bounds[0]), float(bounds[1])))

    @property
    def _logs(self) -> tuple[np.ndarray, np.ndarray]:
        return np.log(np.array(self.radii)), np.log(np.array(self.values))

    def __call__(self, r):
        arr = _positive_radii(r)
        lr, lv = self._logs
        x = np.log(arr)
        out = np.interp(x, lr, lv)
        below = arr < self.radii[0]
        above = arr > self.radii[-1]
        if np.any(below):
            if np.any(arr[below] < self.bounds[0]):
                raise UnsupportedRangeError(
                    f"radius below declared table bound {self.bounds[0]}")
            slope = (lv[1] - lv[0]) / (lr[1] - lr[0])
            out = np.where(below, lv[0] + slope * (x - lr[0]), out)
        if np.any(above):
            if self.declared_tail is not None:
                slope = self.declared_tail
            elif np.all(arr[above] <= self.bounds[1]):
                slope = (lv[-1] - lv[-2]) / (lr[-1] - lr[-2])
            else:
                raise UnsupportedRangeError(
                    f"radius beyond declared table bound {self.bounds[1]} and no asymptotic exponent")
            out = np.where(above, lv[-1] + slope * (x - lr[-1]), out)
        return _like(np.exp(out), r)

    @property
    def tail_exponent(self) -> float | None:
        return self.declared_tail

    @property
    def power_from(self) -> float | None:
        return self.radii[-1] if self.declared_tail is not None else None

    @property
    def doubling_constant(self) -> float:
        radii = np.array(self.radii)
        inside = radii[2 * radii <= radii[-1]]
        if inside.size:
            return float(np.max(self(2 * inside) / self(inside)))
        lr, lv = self._logs
        return float(2. ** np.max(np.diff(lv) / np.diff(lr)))

    def scaled(self, c: float) -> 'TableVolume':
        return TableVolume(radii=self.radii, values=tuple(c * v for v in self.values),
                           bounds=self.bounds, declared_tail=self.declared_tail)


def euclidean_volume(n: float) -> PowerLawVolume:
    """V(r) = omega_n r^n"""
    return PowerLawVolume(c=unit_ball_volume(n), n=n)


def eval_volume(profile: VolumeProfile, r):
    return profile(r)


def check_doubling(profile: VolumeProfile, r_grid) -> float:
    """Empirical doubling constant max V(2r)/V(r) over r_grid"""
    grid = np.asarray(r_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("doubling check needs a non-empty radius grid")
    return float(np.max(profile(2 * grid) / profile(grid)))


class MeasureProfile(ABC):
    """Radial growth r -> sigma(B(o, r)) of the measure sigma."""
    kind: MeasureKind
    atom_mass: float = 0.

    @abstractmethod
    def sigma_ball(self, r):
        """sigma(B(o, r)); zero at r = 0"""

    def density(self, x_distance):
        """theta at distance |x|, None when sigma has no density"""
        return None

    @property
    @abstractmethod
    def tail_exponent(self) -> float | None:
        pass

    @property
    @abstractmethod
    def power_from(self) -> float | None:
        pass

    @abstractmethod
    def ball_upper(self, rho, s):
        """Upper bound of sigma(B(x, s)) for d(x, o) = rho"""

    @abstractmethod
    def ball_lower(self, rho, s):
        """Lower bound of sigma(B(x, s)) for d(x, o) = rho"""


@dataclass(frozen=True)
class PowerDensityMeasure(MeasureProfile):
    """d sigma = |x|^gamma dx on R^n"""
    gamma: float = 0.
    n: float = 3.
    kind = MeasureKind.POWER_DENSITY

    def __post_init__(self):
        if not self.n + self.gamma > 0:
            raise DomainError(f"|x|^gamma is not locally integrable for gamma={self.gamma} in dimension {self.n}")

    @property
    def _omega(self) -> float:
        return unit_ball_volume(self.n)

    def sigma_ball(self, r):
        arr = np.asarray(r, dtype=float)
        value = self.n * self._omega / (self.n + self.gamma) * np.power(arr, self.n + self.gamma)
        return _like(value, r)

    def density(self, x_distance):
        arr = np.asarray(x_distance, dtype=float)
        with np.errstate(divide='ignore'):
            return _like(np.power(arr, self.gamma), x_distance)

    @property
    def tail_exponent(self) -> float:
        return self.n + self.gamma

    @property
    def power_from(self) -> float:
        return 0.

    def ball_upper(self, rho, s):
        rho, s = np.broadcast_arrays(np.asarray(rho, float), np.asarray(s, float))
        with np.errstate(divide='ignore', invalid='ignore'):
            if self.gamma >= 0:
                theta_max = np.power(rho + s, self.gamma)
            else:
                theta_max = np.where(s < rho, np.power(np.abs(rho - s), self.gamma), np.inf)
        return theta_max * self._omega * np.power(s, self.n)

    def ball_lower(self, rho, s):
        rho, s = np.broadcast_arrays(np.asarray(rho, float), np.asarray(s, float))
        if self.gamma >= 0:
            theta_min = np.power(np.maximum(rho - s, 0.), self.gamma)
        else:
            theta_min = np.power(rho + s, self.gamma)
        return theta_min * self._omega * np.power(s, self.n)


@dataclass(frozen=True)
class DiracMeasure(MeasureProfile):
    """Unit point mass at the origin"""
    kind = MeasureKind.DIRAC_AT_ORIGIN
    atom_mass = 1.

    def sigma_ball(self, r):
        return _like(np.where(np.asarray(r, float) > 0, 1., 0.), r)

    @property
    def tail_exponent(self) -> float:
        return 0.

    @property
    def power_from(self) -> float:
        return 0.

    def ball_upper(self, rho, s):
        rho, s = np.broadcast_arrays(np.asarray(rho, float), np.asarray(s, float))
        return np.where(s > rho, 1., 0.)

    ball_lower = ball_upper


@dataclass(frozen=True)
class SameAsVolumeMeasure(MeasureProfile):
    """sigma = mu, the reference measure itself"""
    volume: VolumeProfile = field(default_factory=lambda: euclidean_volume(3))
    kind = MeasureKind.SAME_AS_VOLUME

    def sigma_ball(self, r):
        arr = np.asarray(r, dtype=float)
        safe = np.where(arr > 0, arr, 1.)
        return _like(np.where(arr > 0, self.volume(safe), 0.), r)

    def density(self, x_distance):
        return _like(np.ones(np.shape(x_distance)), x_distance)

    @property
    def tail_exponent(self) -> float | None:
        return self.volume.tail_exponent

    @property
    def power_from(self) -> float | None:
        return self.volume.power_from

    def ball_upper(self, rho, s):
        rho, s = np.broadcast_arrays(np.asarray(rho, float), np.asarray(s, float))
        return self.sigma_ball(s)

    ball_lower = ball_upper


@dataclass(frozen=True)
class TableMeasure(MeasureProfile):
    """Sampled sigma(B(o, r)) interpolated like TableVolume"""
    radii: tuple = ()
    values: tuple = ()
    bounds: tuple | None = None
    declared_tail: float | None = None
    kind = MeasureKind.TABLE

    @property
    def _table(self) -> TableVolume:
        return TableVolume(radii=self.radii, values=self.values,
                           bounds=self.bounds, declared_tail=self.declared_tail)

    def __post_init__(self):
        self._table  # validates the samples

    def sigma_ball(self, r):
        arr = np.asarray(r, dtype=float)
        safe = np.where(arr > 0, arr, self.radii[0])
        return _like(np.where(arr > 0, self._table(safe), 0.), r)

    @property
    def tail_exponent(self) -> float | None:
        return self.declared_tail

    @property
    def power_from(self) -> float | None:
        return self._table.power_from

    def ball_upper(self, rho, s):
        rho, s = np.broadcast_arrays(np.asarray(rho, float), np.asarray(s, float))
        return self.sigma_ball(rho + s)

    def ball_lower(self, rho, s):
        rho, s = np.broadcast_arrays(np.asarray(rho, float), np.asarray(s, float))
        return self.sigma_ball(np.maximum(s - rho, 0.))


@dataclass(eq=True)
class ModelParams:
    """Parameters of (-Delta)^alpha u >= u^q sigma on a model space"""
    alpha: float = 0.5
    q: float = 2.
    n: float = 3.
    gamma: float = 0.
    r0: float = Config.R0
    a: float = 1.
    o: str = 'o'
    _alpha: float = field(default=0.5, init=False, repr=False)
    _q: float = field(default=2., init=False, repr=False)
    _n: float = field(default=3., init=False, repr=False)
    _r0: float = field(default=Config.R0, init=False, repr=False)
    _a: float = field(default=1., init=False, repr=False)

    @property
    def alpha(self) -> float:
        return self._alpha

    @alpha.setter
    def alpha(self, val):
        if type(val) is property:
            val = ModelParams._alpha
        if not 0 < val < 1:
            raise DomainError(f"Invalid alpha '{val}'. alpha must lie in (0, 1)")
        self._alpha = float(val)

    @property
    def q(self) -> float:
        return self._q

    @q.setter
    def q(self, val):
        if type(val) is property:
            val = ModelParams._q
        if not val > 1:
            raise DomainError(f"Invalid q '{val}'. q must be > 1")
        self._q = float(val)

    @property
    def n(self) -> float:
        return self._n

    @n.setter
    def n(self, val):
        if type(val) is property:
            val = ModelParams._n
        if not val > 0:
            raise DomainError(f"Invalid n '{val}'. n must be positive")
        self._n = float(val)

    @property
    def r0(self) -> float:
        return self._r0

    @r0.setter
    def r0(self, val):
        if type(val) is property:
            val = ModelParams._r0
        if not val > 0:
            raise DomainError(f"Invalid r0 '{val}'. r0 must be positive")
        self._r0 = float(val)

    @property
    def a(self) -> float:
        return self._a

    @a.setter
    def a(self, val):
        if type(val) is property:
            val = ModelParams._a
        if not val > 0:
            raise DomainError(f"Invalid a '{val}'. a must be positive")
        self._a = float(val)

    def require_transient(self):
        if self.n <= 2 * self.alpha:
            raise RecurrenceError(f"not transient: n={self.n} <= 2 alpha={2 * self.alpha}")

    def require_gamma(self):
        if not self.gamma > -2 * self.alpha:
            raise DomainError(f"Invalid gamma '{self.gamma}'. gamma must exceed -2 alpha = {-2 * self.alpha}")


_VOLUME_FACTORIES: dict = {
    VolumeKind.POWER_LAW.label: PowerLawVolume,
    VolumeKind.PIECEWISE_POWER.label: PiecewisePowerVolume,
    VolumeKind.TABLE.label: TableVolume,
    'euclidean': euclidean_volume,
}

_MEASURE_FACTORIES: dict = {
    MeasureKind.POWER_DENSITY.label: PowerDensityMeasure,
    MeasureKind.DIRAC_AT_ORIGIN.label: DiracMeasure,
    MeasureKind.SAME_AS_VOLUME.label: SameAsVolumeMeasure,
    MeasureKind.TABLE.label: TableMeasure,
}


def register_volume_factory(name: str, func: callable):
    if name not in _VOLUME_FACTORIES.keys():
        _VOLUME_FACTORIES[name] = func


def get_volume_factory(name: str) -> callable:
    if name in _VOLUME_FACTORIES.keys():
        return _VOLUME_FACTORIES[name]
    else:
        key_str = "\n\t".join(_VOLUME_FACTORIES.keys())
        raise ValueError(
            f"'{name}' is not a registered volume profile. Available profiles are:\n\t{key_str}"
        )


def register_measure_factory(name: str, func: callable):
    if name not in _MEASURE_FACTORIES.keys():
        _MEASURE_FACTORIES[name] = func


def get_measure_factory(name: str) -> callable:
    if name in _MEASURE_FACTORIES.keys():
        return _MEASURE_FACTORIES[name]
    else:
        key_str = "\n\t".join(_MEASURE_FACTORIES.keys())
        raise ValueError(
            f"'{name}' is not a registered measure profile. Available profiles are:\n\t{key_str}"
        )
