"""Supersolution bounds: u >= K_nu(u^q) + h forces K_nu(h^q) < b / (q - 1) h."""
from dataclasses import dataclass
import logging
import numpy as np
from ..config import Config
from ..discrete import DiscreteKernelSpace
from ..discrete.lp import wmp_constant
from ..errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SupersolutionCheck:
    """Outcome of one supersolution bound.

    ``holds`` is None when the supersolution inequality itself fails; the
    failing points are then listed in ``precondition_failures``.
    """
    holds: bool | None
    precondition_failures: tuple
    lhs: np.ndarray
    bound: np.ndarray
    b: float

    @property
    def precondition_ok(self) -> bool:
        return not self.precondition_failures

    @property
    def worst_ratio(self) -> float:
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(self.bound > 0, self.lhs / self.bound, 0.)
        return float(ratio.max()) if ratio.size else 0.


def _finite(space: DiscreteKernelSpace) -> DiscreteKernelSpace:
    return space if np.all(np.isfinite(space.kernel)) else space.truncated()


def _positive(values, size: int, name: str) -> np.ndarray:
    values = np.broadcast_to(np.asarray(values, dtype=float), (size,))
    if np.any(~(values > 0)) or np.any(~np.isfinite(values)):
        raise DomainError(f"{name} must be finite and positive at every point")
    return values


def _check_q(q: float):
    if not q > 1:
        raise DomainError(f"Invalid q '{q}'. q must be > 1")


def weighted_supersolution_check(space: DiscreteKernelSpace, q: float, h, u,
                                 b: float | None = None) -> SupersolutionCheck:
    """K_nu(h^q)(x) < b / (q - 1) h(x) wherever u >= K_nu(u^q) + h.

    b is the weak-maximum-principle constant of K(x, y) / (h(x) h(y)).
    """
    _check_q(q)
    space = _finite(space)
    h = _positive(h, space.size, 'h')
    u = np.asarray(u, dtype=float)
    if u.shape != (space.size,):
        raise DomainError("need one value of u per point")
    if b is None:
        scaled = DiscreteKernelSpace(space.kernel / np.outer(h, h), space.weights, space.coords,
                                     space.labels, space.symmetric)
        b = wmp_constant(scaled).constant_b
    residual = space.potential(np.power(u, q)) + h
    failing = tuple(space.labels[i] for i in np.nonzero(u < residual * (1 - Config.CHECK_RTOL))[0])
    lhs = space.potential(np.power(h, q))
    bound = b / (q - 1) * h
    if failing:
        logger.info("supersolution inequality fails at %d points", len(failing))
        return SupersolutionCheck(None, failing, lhs, bound, b)
    return SupersolutionCheck(bool(np.all(lhs < bound * (1 + Config.CHECK_RTOL))), (), lhs, bound, b)


def supersolution_bound_check(space: DiscreteKernelSpace, q: float, u,
                              b: float | None = None) -> SupersolutionCheck:
    """K_nu 1 < b / (q - 1) wherever u >= K_nu(u^q) + 1"""
    space = _finite(space)
    b = wmp_constant(space).constant_b if b is None else b
    return weighted_supersolution_check(space, q, np.ones(space.size), u, b)


def fixed_point(space: DiscreteKernelSpace, q: float, h, tol: float = 1e-13,
                max_iters: int = Config.PICARD_MAX_ITERS) -> np.ndarray | None:
    """Minimal solution of u = h + K_nu(u^q) by monotone iteration from u = h, or None on blow-up"""
    u = np.array(h, dtype=float)
    for _ in range(max_iters):
        with np.errstate(over='ignore', invalid='ignore'):
            nxt = h + space.potential(np.power(u, q))
        if not np.all(np.isfinite(nxt)) or np.max(nxt / h) > Config.BLOWUP_GUARD:
            return None
        if np.max(np.abs(nxt - u) / nxt) <= tol:
            return nxt
        u = nxt
    return None


def construct_supersolution(space: DiscreteKernelSpace, q: float, h=None,
                            max_halvings: int = Config.MAX_FORCING_HALVINGS) -> tuple[DiscreteKernelSpace, np.ndarray]:
    """Scale nu down by halves until u = h + K_nu(u^q) has a solution; return the scaled space and u"""
    _check_q(q)
    space = _finite(space)
    h = _positive(1. if h is None else h, space.size, 'h')
    weights = np.array(space.weights)
    for halving in range(max_halvings + 1):
        scaled = space.with_weights(weights)
        u = fixed_point(scaled, q, h)
        if u is not None:
            logger.debug("supersolution found after %d halvings of nu", halving)
            return scaled, u
        weights = weights / 2
    raise DomainError(f"no supersolution after {max_halvings} halvings of nu")
