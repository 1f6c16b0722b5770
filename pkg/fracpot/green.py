"""Fractional Green kernels: exact Riesz form, subordination quadrature and the volume estimate.

The volume estimate is R(d) = int_d^inf t^(2 alpha - 1) / V(t) dt; it is
comparable to G(x, y) at d = d(x, y) on doubling spaces with Li-Yau heat kernels.
"""
from dataclasses import dataclass
import logging
import math
import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn
from .config import Config
from .errors import DomainError, RecurrenceError
from .kinds import GreenRoute
from .profiles import VolumeProfile
from .quadrature import Integrand, integrate_singular, integrate_tail

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GreenValue:
    value: float
    route: GreenRoute
    distance: float

    def as_record(self) -> dict:
        return {'distance': self.distance, 'value': self.value, 'route': self.route.label}


@dataclass(frozen=True)
class HeatKernel:
    """p_s at distance r, with p_s ~ s^(-decay) as s -> inf"""
    func: callable
    decay: float | None = None

    def __call__(self, s, r):
        return self.func(s, r)


def euclidean_heat_kernel(n: float) -> HeatKernel:
    def gauss(s, r):
        return np.power(4 * math.pi * s, -n / 2) * np.exp(-r * r / (4 * s))
    return HeatKernel(gauss, decay=n / 2)


def _check_order(alpha: float):
    if not alpha > 0:
        raise DomainError(f"Invalid alpha '{alpha}'. alpha must be positive")


def riesz_constant(n: float, alpha: float) -> float:
    """C(n, alpha) = Gamma(n/2 - alpha) / (Gamma(alpha) 4^alpha pi^(n/2))"""
    _check_order(alpha)
    if n <= 2 * alpha:
        raise RecurrenceError(f"not transient: n={n} <= 2 alpha={2 * alpha}")
    return gamma_fn(n / 2 - alpha) / (gamma_fn(alpha) * 4 ** alpha * math.pi ** (n / 2))


def _riesz_values(n: float, alpha: float, r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"distance must be non-negative, got {r}")
    const = riesz_constant(n, alpha)
    with np.errstate(divide='ignore'):
        return np.where(arr > 0, const * np.power(arr, 2 * alpha - n), np.inf)


def green_riesz(n: float, alpha: float, r: float) -> GreenValue:
    return GreenValue(float(_riesz_values(n, alpha, r)), GreenRoute.RIESZ_EXACT, float(r))


def green_subordinated(heat_kernel: HeatKernel, alpha: float, r: float,
                       tol: float = Config.QUAD_TOL) -> GreenValue:
    """(1 / Gamma(alpha)) int_0^inf s^(alpha - 1) p_s(r) ds"""
    _check_order(alpha)
    if r < 0:
        raise DomainError(f"distance must be non-negative, got {r}")
    tail = None if heat_kernel.decay is None else alpha - 1 - heat_kernel.decay
    if tail is not None and tail >= -1:
        raise RecurrenceError(f"not transient: subordination tail exponent {tail} >= -1")
    if r == 0:
        return GreenValue(math.inf, GreenRoute.SUBORDINATION, 0.)

    def integrand(s):
        return np.power(s, alpha - 1) * heat_kernel(s, r)

    result = integrate_singular(integrand, math.inf, tol, beta=alpha - 1, tail_exponent=tail)
    if not result.is_finite:
        raise RecurrenceError(f"not transient: subordination integral is {result.status.label}")
    return GreenValue(result.value / gamma_fn(alpha), GreenRoute.SUBORDINATION, float(r))


def tail_integrand(profile: VolumeProfile, alpha: float) -> Integrand:
    """t -> t^(2 alpha - 1) / V(t) with the exponent data the profile declares"""
    n = profile.tail_exponent
    breakpoints = getattr(profile, 'breakpoints', None) or getattr(profile, 'radii', ())
    return Integrand(
        lambda t: np.power(t, 2 * alpha - 1) / profile(t),
        exponent=None if n is None else 2 * alpha - 1 - n,
        power_from=profile.power_from if n is not None else None,
        breakpoints=tuple(breakpoints),
    )


def volume_tail(profile: VolumeProfile, alpha: float, d, tol: float = Config.QUAD_TOL):
    """R(d), vectorized; inf at d = 0 and for recurrent profiles"""
    arr = np.asarray(d, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"distance must be non-negative, got {d}")
    positive = np.where(arr > 0, arr, 1.)
    closed = profile.tail_integral(alpha, positive)
    if closed is not None:
        values = np.asarray(closed, dtype=float)
    else:
        integrand = tail_integrand(profile, alpha)
        values = np.array([integrate_tail(integrand, float(x), tol).value for x in positive.ravel()])
        values = values.reshape(arr.shape)
    values = np.where(arr > 0, values, np.inf)
    return float(values) if np.ndim(d) == 0 else values


def green_volume_estimate(profile: VolumeProfile, alpha: float, d: float,
                          tol: float = Config.QUAD_TOL) -> GreenValue:
    _check_order(alpha)
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    if d == 0:
        return GreenValue(math.inf, GreenRoute.VOLUME_ESTIMATE, 0.)
    closed = profile.tail_integral(alpha, float(d))
    if closed is not None:
        if math.isinf(closed):
            raise RecurrenceError()
        return GreenValue(float(closed), GreenRoute.VOLUME_ESTIMATE, float(d))
    result = integrate_tail(tail_integrand(profile, alpha), float(d), tol)
    if not result.is_finite:
        raise RecurrenceError(f"not transient: volume tail is {result.status.label}")
    return GreenValue(result.value, GreenRoute.VOLUME_ESTIMATE, float(d))


@dataclass(frozen=True)
class RieszGreen:
    """C(n, alpha) d^(2 alpha - n) on R^n"""
    n: float = 3.
    alpha: float = 0.5
    route = GreenRoute.RIESZ_EXACT

    def __post_init__(self):
        riesz_constant(self.n, self.alpha)

    @property
    def constant(self) -> float:
        return riesz_constant(self.n, self.alpha)

    def __call__(self, d):
        values = _riesz_values(self.n, self.alpha, d)
        return float(values) if np.ndim(d) == 0 else values


@dataclass(frozen=True)
class VolumeGreen:
    """R(d) for a volume profile"""
    profile: VolumeProfile
    alpha: float = 0.5
    route = GreenRoute.VOLUME_ESTIMATE

    def __post_init__(self):
        _check_order(self.alpha)
        if math.isinf(volume_tail(self.profile, self.alpha, 1.)):
            raise RecurrenceError()

    def __call__(self, d):
        return volume_tail(self.profile, self.alpha, d)


@dataclass(frozen=True)
class TruncatedGreen:
    """m(x) = min(G(x, o), 1/a)"""
    base: callable
    a: float = 1.

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"Invalid a '{self.a}'. a must be positive")

    @property
    def cap(self) -> float:
        return 1 / self.a

    def __call__(self, d):
        values = np.minimum(np.asarray(self.base(d), dtype=float), self.cap)
        return float(values) if np.ndim(d) == 0 else values

    def level_radius(self) -> float | None:
        """Largest d with G(d) >= 1/a, found by bisection; None when G < 1/a everywhere"""
        lo, hi = 1e-12, 1.
        if self.base(lo) < self.cap:
            return None
        while self.base(hi) >= self.cap:
            hi *= 2
            if hi > 1e300:
                return math.inf
        return brentq(lambda d: math.log(self.base(d)) - math.log(self.cap), lo, hi, xtol=1e-14, rtol=1e-13)


def truncated_m(ctx, a: float, x_distance):
    return TruncatedGreen(ctx, a)(x_distance)


def comparison_ratio(profile: VolumeProfile, n: float, alpha: float, d_grid) -> tuple[float, float]:
    """Min and max of R(d) / G_riesz(d) over d_grid"""
    grid = np.asarray(d_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise DomainError("comparison grid must be non-empty and positive")
    ratios = volume_tail(profile, alpha, grid) / _riesz_values(n, alpha, grid)
    if np.any(~np.isfinite(ratios)):
        raise RecurrenceError()
    logger.debug("comparison ratios in [%g, %g] over %d distances", ratios.min(), ratios.max(), grid.size)
    return float(ratios.min()), float(ratios.max())


def tail_doubling_ratio(profile: VolumeProfile, alpha: float, rho_grid) -> float:
    """max over rho of R(rho) / R(2 rho)"""
    grid = np.asarray(rho_grid, dtype=float)
    return float(np.max(volume_tail(profile, alpha, grid) / volume_tail(profile, alpha, 2 * grid)))


def tail_quasi_metric_constant(profile: VolumeProfile, alpha: float, points) -> float:
    """kappa of the kernel R(|x - y|) over the given Euclidean points"""
    from .discrete import DiscreteKernelSpace
    from .discrete.checks import quasi_metric_constant
    coords = np.atleast_2d(np.asarray(points, dtype=float))
    dist = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)
    kernel = volume_tail(profile, alpha, dist)
    space = DiscreteKernelSpace(kernel=kernel, weights=np.ones(len(coords)), coords=coords)
    return quasi_metric_constant(space).kappa
