"""Minimal solutions v = G((v^q + eta) sigma) by monotone Picard iteration from v_0 = 0."""
from dataclasses import dataclass, field
from warnings import warn
import logging
import math
import numpy as np
from .grid import GridProblem
from ..config import Config
from ..errors import DomainError

logger = logging.getLogger(__name__)


@dataclass
class PicardResult:
    v: np.ndarray
    v_origin: float
    converged: bool
    iterations: int
    residual: float
    amplitude: float
    halvings: int = 0
    blow_up: bool = False
    monotone: bool = True
    domination_c: float = math.nan
    trend_c: float = math.nan

    def as_record(self) -> dict:
        return {
            'converged': self.converged,
            'blow_up': self.blow_up,
            'iterations': self.iterations,
            'residual': self.residual,
            'amplitude': self.amplitude,
            'halvings': self.halvings,
            'monotone': self.monotone,
            'domination_c': self.domination_c,
            'trend_c': self.trend_c,
            'v_max': float(self.v.max()) if self.v.size else 0.,
        }


def _step(problem: GridProblem, v: np.ndarray, v_origin: float, amplitude: float) -> tuple[np.ndarray, float]:
    scale = amplitude / problem.eta_origin if problem.eta_origin > 0 else 0.
    with np.errstate(over='ignore', invalid='ignore'):
        f = np.power(v, problem.q) + scale * problem.eta
        f_origin = v_origin ** problem.q + scale * problem.eta_origin if math.isfinite(v_origin) else math.inf
    return problem.apply(f, f_origin)


def domination_constant(problem: GridProblem, v: np.ndarray, a: float = 1.) -> float:
    """Smallest c with v <= c m at the cell centres"""
    return float(np.max(v / problem.truncated_green(a)))


def trend_constant(problem: GridProblem, v: np.ndarray, v_origin: float, a: float = 1.) -> float:
    """sup of G((v^q) sigma) / m over the outer shell R/2 <= |x| < R.

    The forcing core dominates v / m on small domains; the self-interaction
    in the outer shell is what grows with R when no global solution exists.
    """
    with np.errstate(over='ignore', invalid='ignore'):
        cells, _ = problem.apply(np.power(v, problem.q), v_origin ** problem.q)
    shell = problem.distances >= problem.radius / 2
    if not np.any(shell):
        return 0.
    return float(np.max(cells[shell] / problem.truncated_green(a)[shell]))


def _iterate(problem: GridProblem, amplitude: float, max_iters: int, tol: float) -> PicardResult:
    v = np.zeros(problem.cells)
    v_origin = 0.
    monotone = True
    growing, last_inc = 0, math.inf
    for k in range(1, max_iters + 1):
        nxt, nxt_origin = _step(problem, v, v_origin, amplitude)
        if (problem.atom_mass > 0 and not math.isfinite(nxt_origin)) or not np.all(np.isfinite(nxt)) \
                or nxt.max(initial=0.) > Config.BLOWUP_GUARD:
            return PicardResult(nxt, nxt_origin, False, k, math.inf, amplitude, blow_up=True, monotone=monotone)
        # tolerate FFT round-off
        if np.any(nxt < v - 1e-12 * np.maximum(np.abs(v), 1e-300)):
            monotone = False
        inc = float(np.max(np.abs(nxt - v))) if nxt.size else 0.
        v, v_origin = nxt, nxt_origin
        if inc < tol:
            again, _ = _step(problem, v, v_origin, amplitude)
            residual = float(np.max(np.abs(again - v))) if v.size else 0.
            return PicardResult(v, v_origin, True, k, residual, amplitude, monotone=monotone)
        growing = growing + 1 if inc > last_inc else 0
        last_inc = inc
        if growing >= Config.GROWING_INCREMENTS:
            return PicardResult(v, v_origin, False, k, math.inf, amplitude, blow_up=True, monotone=monotone)
    return PicardResult(v, v_origin, False, max_iters, inc, amplitude, monotone=monotone)


def picard_minimal_solution(
    problem: GridProblem,
    max_iters: int = Config.PICARD_MAX_ITERS,
    tol: float = Config.PICARD_TOL,
    amplitude: float | None = None,
    auto_scale: bool = True,
    a: float = 1.,
) -> PicardResult:
    """Iterate v_(k+1) = G(v_k^q sigma) + G(eta sigma), halving eta on blow-up.

    With ``auto_scale`` the forcing amplitude is halved until a run converges
    without tripping the blow-up guard, at most MAX_FORCING_HALVINGS times.
    """
    amplitude = problem.eta_origin if amplitude is None else amplitude
    if amplitude < 0:
        raise DomainError(f"Invalid forcing amplitude '{amplitude}'. Must be >= 0")
    if amplitude == 0 or not (np.any(problem.eta > 0) or problem.eta_origin > 0):
        zero = np.zeros(problem.cells)
        return PicardResult(zero, 0., True, 0, 0., amplitude, domination_c=0., trend_c=0.)

    halvings = 0
    while True:
        result = _iterate(problem, amplitude, max_iters, tol)
        if not result.blow_up or not auto_scale or halvings >= Config.MAX_FORCING_HALVINGS:
            break
        logger.debug("blow-up at amplitude %g; halving", amplitude)
        amplitude /= 2
        halvings += 1
    result.halvings = halvings
    if result.converged:
        result.domination_c = domination_constant(problem, result.v, a)
        result.trend_c = trend_constant(problem, result.v, result.v_origin, a)
        if not result.monotone:
            warn("Picard iterates decreased somewhere; check the grid kernel")
    elif result.blow_up:
        logger.info("Picard iteration blew up at every forcing scale down to %g", amplitude)
    else:
        warn(f"Picard iteration did not converge in {max_iters} iterations")
    return result


def picard_sweep(problems: list, max_iters: int = Config.PICARD_MAX_ITERS, tol: float = Config.PICARD_TOL,
                 a: float = 1.) -> list[PicardResult]:
    """Solve every problem at one common forcing amplitude.

    The amplitude comes from auto-scaling on the largest domain, where the
    blow-up threshold is lowest, and is reused on the smaller domains.
    """
    if not problems:
        return []
    order = sorted(range(len(problems)), key=lambda i: problems[i].radius)
    largest = problems[order[-1]]
    lead = picard_minimal_solution(largest, max_iters, tol, a=a)
    results = {order[-1]: lead}
    for i in order[:-1]:
        results[i] = picard_minimal_solution(problems[i], max_iters, tol, amplitude=lead.amplitude,
                                             auto_scale=False, a=a)
    return [results[i] for i in range(len(problems))]


def growth_ratios(values) -> list[float]:
    values = list(values)
    return [b / a if a > 0 else math.inf for a, b in zip(values, values[1:])]


@dataclass
class EquivalenceReport:
    """Four conditions measured on the problem and on its half-radius companion.

    Each condition holds when its measured constant grows by less than
    TREND_GROWTH from the companion to the problem and stays stable at the
    points approaching the origin.
    """
    picard_exists: bool
    domination_bounded: bool
    level_integral_finite: bool
    level_sup_bounded: bool
    constants: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> tuple:
        return self.picard_exists, self.domination_bounded, self.level_integral_finite, self.level_sup_bounded

    @property
    def agree(self) -> bool:
        return len(set(self.verdicts)) == 1

    def as_record(self) -> dict:
        record = {
            'picard_exists': self.picard_exists,
            'domination_bounded': self.domination_bounded,
            'level_integral_finite': self.level_integral_finite,
            'level_sup_bounded': self.level_sup_bounded,
            'agree': self.agree,
        }
        record.update(self.constants)
        return record


def approach_points(problem: GridProblem, levels: int = Config.APPROACH_LEVELS) -> np.ndarray:
    """Points on the first axis at distance h/2, h/4, ... from the origin"""
    points = np.zeros((levels, problem.n))
    points[:, 0] = problem.h / 2 * 0.5 ** np.arange(levels)
    return points


def _stable(values) -> bool:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        return False
    return bool(values[-1] <= Config.TREND_GROWTH * values[-2]) if values.size > 1 else True


def _bounded(small: float, large: float) -> bool:
    if not (math.isfinite(small) and math.isfinite(large)):
        return False
    return large <= Config.TREND_GROWTH * small if small > 0 else large == 0


def _truncated_green_points(problem: GridProblem, points: np.ndarray, a: float) -> np.ndarray:
    return np.minimum(problem.green(np.linalg.norm(points, axis=1)), 1 / a)


def _domination(problem: GridProblem, a: float) -> tuple[float, np.ndarray]:
    """max G_sigma(m^q) / m over the cells, and the same ratio at the points approaching the origin"""
    m = problem.truncated_green(a)
    m_origin = 1 / a
    lhs, _ = problem.apply(np.power(m, problem.q), m_origin ** problem.q)
    points = approach_points(problem)
    at_points = problem.potential_at(points, np.power(m, problem.q), m_origin ** problem.q)
    return float(np.max(lhs / m)), at_points / _truncated_green_points(problem, points, a)


def _level_integral(problem: GridProblem, a: float) -> float:
    """int m^q d sigma over the truncated domain"""
    m = problem.truncated_green(a)
    return math.fsum(np.power(m, problem.q) * problem.theta * problem.cell_volume) \
        + problem.atom_mass * (1 / a) ** problem.q


def _level_sup(problem: GridProblem) -> tuple[float, np.ndarray]:
    """max over level radii rho of sup_x int_{G(o, y) > 1/r} G(x, y) d sigma(y) / r^(q - 1), G(rho) = 1/r"""
    points = approach_points(problem)
    dist = problem.distances
    best, at_points = 0., np.zeros(points.shape[0])
    for j in range(Config.APPROACH_LEVELS):
        rho = problem.radius * 0.5 ** j
        inside = (dist < rho).astype(float)
        if not np.any(inside) and problem.atom_mass == 0:
            continue
        r = 1 / problem.green(rho)
        scale = r ** (problem.q - 1)
        cells, _ = problem.apply(inside, 1.)
        near = problem.potential_at(points, inside, 1.)
        best = max(best, float(cells.max()) / scale)
        at_points = np.maximum(at_points, near / scale)
    return best, at_points


def equivalence_check(problem: GridProblem, a: float = 1., cache_dir=None,
                      max_iters: int = Config.PICARD_MAX_ITERS, tol: float = Config.PICARD_TOL) -> EquivalenceReport:
    """Measure the four equivalent conditions on problem and its half-radius companion"""
    if not a > 0:
        raise DomainError(f"Invalid a '{a}'. a must be positive")
    companion = problem.companion(0.5, cache_dir=cache_dir)
    small, large = picard_sweep([companion, problem], max_iters, tol, a)
    picard_exists = small.converged and large.converged and _bounded(small.trend_c, large.trend_c)

    dom_small, _ = _domination(companion, a)
    dom_large, dom_points = _domination(problem, a)
    domination_bounded = _bounded(dom_small, dom_large) and _stable(dom_points)

    int_small, int_large = _level_integral(companion, a), _level_integral(problem, a)
    level_integral_finite = _bounded(int_small, int_large)

    sup_small, _ = _level_sup(companion)
    sup_large, sup_points = _level_sup(problem)
    level_sup_bounded = _bounded(sup_small, sup_large) and _stable(sup_points)

    constants = {
        'radius': problem.radius,
        'domination_c_half': small.domination_c,
        'domination_c': large.domination_c,
        'trend_c_half': small.trend_c,
        'trend_c': large.trend_c,
        'green_domination_half': dom_small,
        'green_domination': dom_large,
        'level_integral_half': int_small,
        'level_integral': int_large,
        'level_sup_half': sup_small,
        'level_sup': sup_large,
    }
    return EquivalenceReport(picard_exists, domination_bounded, level_integral_finite, level_sup_bounded, constants)
