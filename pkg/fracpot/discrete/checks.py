"""Brute-force checks of the kernel lemmas on finite spaces.

Extended-real conventions: min(inf, v) = v; a ratio with an infinite
denominator, or 0/0, counts as 0.
"""
from dataclasses import dataclass
import logging
import math
import numpy as np
from . import DiscreteKernelSpace
from .lp import wmp_constant
from ..config import Config
from ..errors import DomainError
from ..quadrature import integrate_interval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuasiMetricResult:
    kappa: float
    witness: tuple | None


@dataclass(frozen=True)
class PtolemyResult:
    holds: bool
    minimal_constant: float
    kappa_squared: float
    witness: tuple | None


@dataclass(frozen=True)
class MinimalityResult:
    ratio: float
    bound: float
    holds: bool
    pointwise_holds: bool


@dataclass(frozen=True)
class InequalityCheck:
    """Outcome of a pointwise inequality lhs <= rhs"""
    holds: bool
    worst_ratio: float
    witness: tuple | None = None
    precondition_ok: bool = True


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = num / den
    return np.where(np.isnan(ratio) | np.isinf(den), 0., ratio)


def _require_symmetric(space: DiscreteKernelSpace):
    if not space.symmetric:
        raise DomainError("quasi-metric checks need a symmetric kernel")


def quasi_metric_constant(space: DiscreteKernelSpace) -> QuasiMetricResult:
    """kappa = max over ordered triples of min(K(x,y), K(y,z)) / K(x,z)"""
    _require_symmetric(space)
    kernel = space.kernel
    best, witness = -math.inf, None
    for x in range(space.size):
        ratios = _safe_ratio(np.minimum(kernel[x][:, None], kernel), kernel[x][None, :])
        flat = int(np.argmax(ratios))
        if ratios.flat[flat] > best:
            y, z = np.unravel_index(flat, ratios.shape)
            best, witness = float(ratios.flat[flat]), (space.labels[x], space.labels[y], space.labels[z])
    return QuasiMetricResult(best if witness is not None else 1., witness)


def ptolemy_check(space: DiscreteKernelSpace, kappa: float | None = None) -> PtolemyResult:
    """min(K(x,y) K(o,z), K(y,z) K(o,x)) <= kappa^2 K(x,z) K(o,y) over all o, x, y, z"""
    kappa = quasi_metric_constant(space).kappa if kappa is None else kappa
    if not math.isfinite(kappa):
        raise DomainError("Ptolemy check needs a finite quasi-metric constant")
    kernel = space.kernel
    best, witness = 0., None
    with np.errstate(invalid='ignore'):
        for o in range(space.size):
            ko = kernel[o]
            first = kernel[:, :, None] * ko[None, None, :]
            second = kernel[None, :, :] * ko[:, None, None]
            rhs = kernel[:, None, :] * ko[None, :, None]
            ratios = _safe_ratio(np.minimum(first, second), rhs)
            flat = int(np.argmax(ratios))
            if ratios.flat[flat] > best:
                x, y, z = np.unravel_index(flat, ratios.shape)
                best = float(ratios.flat[flat])
                witness = tuple(space.labels[i] for i in (o, x, y, z))
    return PtolemyResult(
        holds=best <= kappa ** 2 * (1 + 1e-12),
        minimal_constant=best,
        kappa_squared=kappa ** 2,
        witness=witness,
    )


def tilde_kernel(space: DiscreteKernelSpace, origin: int, c: float) -> DiscreteKernelSpace:
    """K(x, y) / (k(x) k(y)) with k = min(K(o, .), c); with c = inf the origin is dropped"""
    _require_symmetric(space)
    if not c > 0:
        raise DomainError(f"Invalid c '{c}'. c must be positive")
    k = np.minimum(space.kernel[origin], c)
    keep = np.isfinite(k)
    if not np.all(k[keep] > 0):
        raise DomainError("tilde kernel needs K(o, .) > 0")
    reduced = space.subspace(keep)
    k = k[keep]
    return DiscreteKernelSpace(reduced.kernel / np.outer(k, k), reduced.weights, reduced.coords, reduced.labels)


def minimality_bound(space: DiscreteKernelSpace, origin: int, a: float) -> MinimalityResult:
    """min over x != o of K_omega 1(x) / m(x), against (omega(A) / kappa) min(lambda a, 1)"""
    omega = space.weights
    mass = float(omega.sum())
    if not mass > 0:
        raise DomainError("minimality bound needs positive total mass")
    if not a > 0:
        raise DomainError(f"Invalid a '{a}'. a must be positive")
    kappa = quasi_metric_constant(space).kappa
    to_origin = space.kernel[:, origin]
    support = omega > 0
    lam = float(np.min(to_origin[support]))
    others = np.arange(space.size) != origin
    pot = space.potential()[others]
    m = np.minimum(to_origin[others], 1 / a)
    ratio = float(np.min(pot / m))
    bound = mass / kappa * min(lam * a, 1.)
    display = mass / kappa * np.minimum(lam, to_origin[others])
    rtol = 1 + Config.CHECK_RTOL
    return MinimalityResult(
        ratio=ratio,
        bound=bound,
        holds=ratio * rtol >= bound,
        pointwise_holds=bool(np.all(pot * rtol >= display)),
    )


@dataclass(frozen=True)
class RearrangementResult:
    holds: bool
    lhs: float
    rhs: float


def rearrangement_check(omega_weights, f_values, phi) -> RearrangementResult:
    """int_0^omega(Omega) phi(t) dt <= sum_y omega_y phi(omega({z: f(z) <= f(y)}))"""
    omega = np.asarray(omega_weights, dtype=float)
    f = np.asarray(f_values, dtype=float)
    if omega.shape != f.shape or np.any(omega < 0):
        raise DomainError("rearrangement check needs non-negative weights, one per value")
    total = float(omega.sum())
    lhs, _ = integrate_interval(lambda t: np.asarray(phi(t), dtype=float) * np.ones_like(t), 0., total)
    levels = (omega[None, :] * (f[None, :] <= f[:, None])).sum(axis=1)
    rhs = float(np.sum(omega * np.asarray(phi(levels), dtype=float)))
    return RearrangementResult(lhs <= rhs * (1 + Config.CHECK_RTOL) + 1e-300, lhs, rhs)


def _finite(space: DiscreteKernelSpace) -> DiscreteKernelSpace:
    return space if np.all(np.isfinite(space.kernel)) else space.truncated()


def _resolve_b(space: DiscreteKernelSpace, b: float | None) -> float:
    return wmp_constant(space).constant_b if b is None else b


def handy_lemma_check(space: DiscreteKernelSpace, f=None, b: float | None = None) -> InequalityCheck:
    """K_nu(1_{E_y} f)(x) <= b K_nu f(y) for all (x, y), E_y = {z: K_nu f(z) <= K_nu f(y)}"""
    space = _finite(space)
    b = _resolve_b(space, b)
    f = np.ones(space.size) if f is None else np.asarray(f, dtype=float)
    pot = space.potential(f)
    level_sets = (pot[None, :] <= pot[:, None]).astype(float)
    lhs = (space.kernel * (f * space.weights)[None, :]) @ level_sets.T
    ratios = _safe_ratio(lhs, b * pot[None, :])
    ratios = np.where((lhs > 0) & (pot[None, :] == 0), np.inf, ratios)
    flat = int(np.argmax(ratios))
    x, y = np.unravel_index(flat, ratios.shape)
    worst = float(ratios.flat[flat])
    return InequalityCheck(worst <= 1 + Config.CHECK_RTOL, worst, (space.labels[x], space.labels[y]))


def feasible_scaling(space: DiscreteKernelSpace, f, subset) -> np.ndarray:
    """Scale f so that K_nu_A f <= 1 on {f > 0} and A, with equality at the maximizer"""
    space = _finite(space)
    f = np.asarray(f, dtype=float)
    mask = np.zeros(space.size, dtype=bool)
    mask[list(subset)] = True
    pot = space.potential(f, weights=space.weights * mask)
    region = mask & (f > 0)
    peak = float(pot[region].max()) if np.any(region) else 0.
    return f / peak if peak > 0 else f


def max_principle_f_check(space: DiscreteKernelSpace, f, subset, b: float | None = None) -> InequalityCheck:
    """K_nu f <= 1 on {f > 0} and A implies K_nu f <= b on X, nu restricted to A"""
    space = _finite(space)
    b = _resolve_b(space, b)
    f = np.asarray(f, dtype=float)
    mask = np.zeros(space.size, dtype=bool)
    mask[list(subset)] = True
    pot = space.potential(f, weights=space.weights * mask)
    region = mask & (f > 0)
    precondition = bool(np.all(pot[region] <= 1 + Config.CHECK_RTOL))
    worst = float(pot.max()) / b
    return InequalityCheck(worst <= 1 + Config.CHECK_RTOL, worst, (space.labels[int(np.argmax(pot))],),
                           precondition)


def hardy_check(space: DiscreteKernelSpace, p: float, b: float | None = None) -> InequalityCheck:
    """(K_nu 1)^p <= p b^(p-1) K_nu((K_nu 1)^(p-1)) pointwise, p >= 1"""
    if not p >= 1:
        raise DomainError(f"Invalid p '{p}'. p must be >= 1")
    space = _finite(space)
    b = _resolve_b(space, b)
    f0 = space.potential()
    lhs = np.power(f0, p)
    rhs = p * b ** (p - 1) * space.potential(np.power(f0, p - 1))
    ratios = _safe_ratio(lhs, rhs)
    i = int(np.argmax(ratios))
    return InequalityCheck(float(ratios[i]) <= 1 + Config.CHECK_RTOL, float(ratios[i]), (space.labels[i],))


def integral_inequality_check(space: DiscreteKernelSpace, phi, b: float | None = None) -> InequalityCheck:
    """int_0^{K_nu 1(x)} phi(t) dt <= K_nu[phi(b K_nu 1)](x) for non-decreasing phi"""
    space = _finite(space)
    b = _resolve_b(space, b)
    f0 = space.potential()
    lhs = np.array([integrate_interval(lambda t: np.asarray(phi(t), dtype=float) * np.ones_like(t), 0., v)[0]
                    for v in f0])
    rhs = space.potential(np.asarray(phi(b * f0), dtype=float))
    ratios = _safe_ratio(lhs, rhs)
    i = int(np.argmax(ratios))
    return InequalityCheck(float(ratios[i]) <= 1 + Config.CHECK_RTOL, float(ratios[i]), (space.labels[i],))
