"""Existence criteria for (-Delta)^alpha u >= u^q sigma on radial model spaces.

mu(B(x, s)) is modelled by V(s) at every center; sigma enters through its
radial ball function and the center-shifted brackets of MeasureProfile.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math
import numpy as np
from scipy.optimize import brentq
from .config import Config
from .errors import DomainError, RecurrenceError
from .green import tail_integrand, volume_tail
from .kinds import Existence, IntegralStatus, MeasureKind, SupVerdict
from .profiles import (
    DiracMeasure, MeasureProfile, ModelParams, PowerDensityMeasure, PowerLawVolume,
    SameAsVolumeMeasure, VolumeProfile,
)
from .quadrature import IntegralResult, Integrand, composite_log_gauss, integrate_tail

logger = logging.getLogger(__name__)

# pairs per vectorized block of the cond-int2 sweep; fixed so results do not depend on threads
_SWEEP_BLOCK = 64


def log_grid(lo: float, hi: float, points_per_decade: int = Config.POINTS_PER_DECADE) -> np.ndarray:
    if not 0 < lo < hi:
        raise DomainError(f"log grid needs 0 < lo < hi, got [{lo}, {hi}]")
    count = int(round(math.log10(hi / lo) * points_per_decade)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), count)


def _join_power_from(*values):
    if any(v is None for v in values):
        return None
    return max(values)


def check_transience(profile: VolumeProfile, alpha: float) -> IntegralResult:
    """int_1^inf t^(2 alpha - 1) / V(t) dt"""
    return integrate_tail(tail_integrand(profile, alpha), 1.)


def _require_transient(profile: VolumeProfile, alpha: float):
    result = check_transience(profile, alpha)
    if not result.is_finite:
        raise RecurrenceError(f"not transient: tail integral is {result.status.label}")


def cond_int1_integrand(vol: VolumeProfile, meas: MeasureProfile, alpha: float, q: float) -> Integrand:
    """r -> R(r)^(q - 1) sigma(B(o, r)) / V(r) r^(2 alpha - 1)"""
    n, m = vol.tail_exponent, meas.tail_exponent
    exponent = None
    if n is not None and m is not None:
        exponent = (2 * alpha - n) * (q - 1) + m - n + 2 * alpha - 1

    def func(r):
        return (np.power(volume_tail(vol, alpha, r), q - 1) * meas.sigma_ball(r) / vol(r)
                * np.power(r, 2 * alpha - 1))

    breakpoints = getattr(vol, 'breakpoints', None) or getattr(vol, 'radii', ())
    return Integrand(func, exponent=exponent,
                     power_from=_join_power_from(vol.power_from, meas.power_from) if exponent is not None else None,
                     breakpoints=tuple(breakpoints))


def eval_cond_int1(vol: VolumeProfile, meas: MeasureProfile, alpha: float, q: float,
                   r0: float = Config.R0, tol: float = Config.QUAD_TOL) -> IntegralResult:
    _require_transient(vol, alpha)
    return integrate_tail(cond_int1_integrand(vol, meas, alpha, q), r0, tol)


def eval_cond_int1b(vol: VolumeProfile, alpha: float, q: float, r0: float = Config.R0,
                    tol: float = Config.QUAD_TOL) -> IntegralResult:
    """int_r0^inf r^(2 alpha q - 1) / V(r)^(q - 1) dr"""
    n = vol.tail_exponent
    breakpoints = getattr(vol, 'breakpoints', None) or getattr(vol, 'radii', ())
    integrand = Integrand(
        lambda r: np.power(r, 2 * alpha * q - 1) / np.power(vol(r), q - 1),
        exponent=None if n is None else 2 * alpha * q - 1 - n * (q - 1),
        power_from=vol.power_from if n is not None else None,
        breakpoints=tuple(breakpoints),
    )
    return integrate_tail(integrand, r0, tol)


@dataclass(frozen=True)
class BracketSweep:
    """cond-int2 values of one bracket on the (x, r) grid"""
    values: np.ndarray
    sup: float
    running_sup: np.ndarray
    edge_slopes: tuple
    verdict: SupVerdict


@dataclass(frozen=True)
class CondInt2Record:
    x_grid: np.ndarray
    r_grid: np.ndarray
    upper: BracketSweep
    lower: BracketSweep

    @property
    def sup_estimate(self) -> float:
        return self.upper.sup

    @property
    def agree(self) -> bool:
        return self.upper.verdict is self.lower.verdict

    @property
    def verdict(self) -> SupVerdict:
        return self.upper.verdict

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return [(float(x), float(r), float(self.upper.values[i, j]))
                for i, x in enumerate(self.x_grid) for j, r in enumerate(self.r_grid)]

    def sample_records(self) -> list[dict]:
        return [
            {'x_distance': float(x), 'r': float(r),
             'upper': float(self.upper.values[i, j]), 'lower': float(self.lower.values[i, j])}
            for i, x in enumerate(self.x_grid) for j, r in enumerate(self.r_grid)
        ]


def _upper_bracket(meas: MeasureProfile, rho, r, s):
    with np.errstate(invalid='ignore', over='ignore'):
        annulus = meas.sigma_ball(np.minimum(r, rho + s)) - meas.sigma_ball(np.maximum(0., rho - s))
        bound = np.minimum(np.minimum(meas.sigma_ball(r), annulus), meas.ball_upper(rho, s))
    return np.where(s <= rho - r, 0., bound)


def _lower_bracket(meas: MeasureProfile, rho, r, s):
    outer = np.where(s > rho, meas.sigma_ball(np.clip(s - rho, 0., r)), 0.)
    inside = s <= r - rho
    # both branches are evaluated; keep the radius handed to ball_lower positive
    inner = np.where(inside, meas.ball_lower(rho, np.where(inside, s, r)), 0.)
    return np.maximum(outer, inner)


def _inner_integrals(vol: VolumeProfile, meas: MeasureProfile, alpha: float, rho, r, bracket) -> np.ndarray:
    """int_0^inf bracket(s) / V(s) s^(2 alpha - 1) ds for each (rho, r) pair.

    For s >= rho + r the ball B(x, s) contains B(o, r) and the integral closes
    exactly as sigma(B(o, r)) R(rho + r).
    """
    gap = np.abs(rho - r)
    scale = np.minimum(np.minimum(rho, r), np.where(gap > 0, gap, np.inf))
    s_lo = 1e-8 * scale
    edges = np.sort(np.stack((s_lo, gap, rho, r, rho + r), axis=-1), axis=-1)
    edges = np.maximum(edges, s_lo[:, None])
    rho_b, r_b = rho[:, None, None], r[:, None, None]

    def func(s):
        return bracket(meas, rho_b, r_b, s) / vol(s) * np.power(s, 2 * alpha - 1)

    total = np.zeros(rho.shape)
    for k in range(edges.shape[1] - 1):
        total = total + composite_log_gauss(func, edges[:, k], edges[:, k + 1])

    # power remainder on (0, s_lo), slope read off the bracket between s_lo and 2 s_lo
    pair = np.stack((s_lo, 2 * s_lo), axis=-1)[:, None, :]
    f_pair = func(pair)[:, 0, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        slope = np.log2(f_pair[:, 1] / f_pair[:, 0])
        remainder = np.where(f_pair[:, 0] > 0, f_pair[:, 0] * s_lo / (slope + 1), 0.)
    remainder = np.where((f_pair[:, 0] > 0) & ~(slope > -1), np.inf, remainder)

    closing = meas.sigma_ball(r) * volume_tail(vol, alpha, rho + r)
    return total + remainder + closing


def _bracket_verdict(values: np.ndarray, x_grid: np.ndarray, r_grid: np.ndarray,
                     points_per_decade: int) -> BracketSweep:
    """bounded iff the running sup over r settles on the last two decades and
    neither x edge keeps a non-decaying power growth"""
    sup_over_x = values.max(axis=0)
    running = np.maximum.accumulate(sup_over_x)
    back = min(2 * points_per_decade, len(r_grid) - 1)
    stable = running[-1] <= (1 + Config.DECADE_STABILITY) * running[-1 - back]

    profile = np.log(np.maximum(values.max(axis=1), np.finfo(float).tiny))
    lx = np.log(x_grid)
    k = min(points_per_decade, (len(x_grid) - 1) // 2)
    edge_slopes = (0., 0.)
    edges_ok = True
    if k > 0:
        low_edge = (profile[0] - profile[k]) / (lx[0] - lx[k])
        low_next = (profile[k] - profile[2 * k]) / (lx[k] - lx[2 * k])
        high_edge = (profile[-1] - profile[-1 - k]) / (lx[-1] - lx[-1 - k])
        high_next = (profile[-1 - k] - profile[-1 - 2 * k]) / (lx[-1 - k] - lx[-1 - 2 * k])
        edge_slopes = (float(low_edge), float(high_edge))

        def grows(edge, nxt, direction):
            if direction * edge <= 0:
                return False
            return (abs(edge) >= Config.EDGE_SLOPE_FLOOR
                    and abs(edge) >= Config.EDGE_SLOPE_DECAY * abs(nxt))

        edges_ok = not grows(low_edge, low_next, -1) and not grows(high_edge, high_next, 1)

    bounded = bool(stable and edges_ok and np.all(np.isfinite(values)))
    return BracketSweep(
        values=values,
        sup=float(values.max()),
        running_sup=running,
        edge_slopes=edge_slopes,
        verdict=SupVerdict.BOUNDED if bounded else SupVerdict.UNBOUNDED_TREND,
    )


def eval_cond_int2(vol: VolumeProfile, meas: MeasureProfile, alpha: float, q: float,
                   r0: float = Config.R0, x_grid=None, r_grid=None,
                   points_per_decade: int = Config.POINTS_PER_DECADE, threads: int = 1) -> CondInt2Record:
    """Sampled sup over (x, r) of the inner sigma-integral times R(r)^(q - 1), both brackets"""
    _require_transient(vol, alpha)
    x_grid = np.asarray(x_grid if x_grid is not None
                        else log_grid(Config.X_GRID_MIN, Config.X_GRID_MAX, points_per_decade), dtype=float)
    r_grid = np.asarray(r_grid if r_grid is not None
                        else log_grid(r0, Config.R_GRID_MAX, points_per_decade), dtype=float)
    if np.any(x_grid <= 0) or np.any(r_grid < r0):
        raise DomainError("cond-int2 grids need x > 0 and r >= r0")

    rho, r = (a.ravel() for a in np.meshgrid(x_grid, r_grid, indexing='ij'))
    weight = np.power(volume_tail(vol, alpha, r), q - 1)

    def block(start: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(start, start + _SWEEP_BLOCK)
        upper = _inner_integrals(vol, meas, alpha, rho[sl], r[sl], _upper_bracket)
        lower = _inner_integrals(vol, meas, alpha, rho[sl], r[sl], _lower_bracket)
        return upper, lower

    starts = range(0, rho.size, _SWEEP_BLOCK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(block, starts))
        # pool.map keeps submission order
    else:
        blocks = [block(s) for s in starts]
    upper = np.concatenate([b[0] for b in blocks]) * weight
    lower = np.concatenate([b[1] for b in blocks]) * weight
    shape = (x_grid.size, r_grid.size)

    record = CondInt2Record(
        x_grid=x_grid,
        r_grid=r_grid,
        upper=_bracket_verdict(upper.reshape(shape), x_grid, r_grid, points_per_decade),
        lower=_bracket_verdict(lower.reshape(shape), x_grid, r_grid, points_per_decade),
    )
    logger.debug("cond-int2 upper %s (sup %g), lower %s (sup %g)", record.upper.verdict.label,
                 record.upper.sup, record.lower.verdict.label, record.lower.sup)
    return record


def henon_threshold(n: float, alpha: float, gamma: float) -> float:
    """(n + gamma) / (n - 2 alpha)"""
    if not 0 < alpha < 1:
        raise DomainError(f"Invalid alpha '{alpha}'. alpha must lie in (0, 1)")
    if n <= 2 * alpha:
        raise RecurrenceError(f"not transient: n={n} <= 2 alpha={2 * alpha}")
    if not gamma > -2 * alpha:
        raise DomainError(f"Invalid gamma '{gamma}'. gamma must exceed -2 alpha = {-2 * alpha}")
    return (n + gamma) / (n - 2 * alpha)


def henon_classify(n: float, alpha: float, gamma: float, q: float) -> Existence:
    threshold = henon_threshold(n, alpha, gamma)
    if not q > 1:
        raise DomainError(f"Invalid q '{q}'. q must be > 1")
    return Existence.EXISTS if q > threshold else Existence.NOT_EXISTS


@dataclass(frozen=True)
class PropSResult:
    holds: bool
    constant: float
    minimal_constant: float
    lhs: float
    integral_term: float
    boundary_term: float


def prop_s_constant(s: float, alpha: float) -> float:
    two_a = 2 * alpha
    return s * two_a ** (1 - s) * max((1 - 2 ** -two_a) ** (s - 1), (2 ** two_a - 1) ** s / (two_a * s))


def check_prop_s(phi, s: float, alpha: float, r: float, tol: float = Config.QUAD_TOL) -> PropSResult:
    """(int_r^inf phi t^(2a-1) dt)^s <= C int_r^inf phi^s t^(2as-1) dt + C r^(2as) phi(r)^s"""
    if not 0 < s < 1:
        raise DomainError(f"Invalid s '{s}'. s must lie in (0, 1)")
    if not r > 0:
        raise DomainError(f"Invalid r '{r}'. r must be positive")
    phi = phi if isinstance(phi, Integrand) else Integrand(phi)
    p = phi.exponent
    base = Integrand(lambda t: phi(t) * np.power(t, 2 * alpha - 1),
                     exponent=None if p is None else p + 2 * alpha - 1,
                     power_from=phi.power_from, breakpoints=phi.breakpoints)
    powered = Integrand(lambda t: np.power(phi(t), s) * np.power(t, 2 * alpha * s - 1),
                        exponent=None if p is None else s * p + 2 * alpha * s - 1,
                        power_from=phi.power_from, breakpoints=phi.breakpoints)
    left = integrate_tail(base, r, tol)
    right = integrate_tail(powered, r, tol)
    if not (left.is_finite and right.is_finite):
        raise DomainError("phi is not integrable against the prop-s weights on (r, inf)")
    lhs = left.value ** s
    boundary = r ** (2 * alpha * s) * float(phi(np.array([r]))[0]) ** s
    c = prop_s_constant(s, alpha)
    scale = right.value + boundary
    minimal = lhs / scale if scale > 0 else math.inf
    return PropSResult(
        holds=bool(lhs <= c * scale * (1 + Config.CHECK_RTOL)),
        constant=c,
        minimal_constant=minimal,
        lhs=lhs,
        integral_term=right.value,
        boundary_term=boundary,
    )


@dataclass(frozen=True)
class ElementaryLemmaResult:
    precondition_ok: bool
    holds: bool
    tail_share: float
    tail_estimate: float
    violations: list = field(default_factory=list)


def _series_tail(terms: np.ndarray) -> float:
    """Estimate of the terms past the truncation, the larger of a geometric
    and a power-law continuation of the last two; inf when they do not decay"""
    if terms.size < 2:
        return math.inf
    prev, last = float(terms[-2]), float(terms[-1])
    if last == 0:
        return 0.
    if not 0 < last < prev:
        return math.inf
    ratio = last / prev
    geometric = last * ratio / (1 - ratio)
    m = terms.size
    slope = math.log(prev / last) / math.log(m / (m - 1))
    power = last * m / (slope - 1) if slope > 1 else math.inf
    return max(geometric, power)


def check_elementary_lemma(a_seq, u_seq) -> ElementaryLemmaResult:
    """a_k u_k <= sum_(l >= k) a_l (u_l - u_(l+1)) for every k of the truncation.

    The series beyond the last term is continued by _series_tail. The
    precondition reads summability off the truncation: the continuation must
    be finite and the last half of the terms must carry a negligible share.
    """
    a = np.asarray(a_seq, dtype=float)
    u = np.asarray(u_seq, dtype=float)
    if a.shape != u.shape or a.ndim != 1 or a.size < 2:
        raise DomainError("elementary lemma needs two sequences of equal length >= 2")
    terms = a[:-1] * (u[:-1] - u[1:])
    total = float(terms.sum())
    half = terms.size // 2
    tail_share = float(terms[half:].sum() / total) if total > 0 else 0.
    tail = _series_tail(terms)
    monotone = bool(np.all(np.diff(a) >= 0) and np.all(np.diff(u) <= 0) and np.all(a > 0) and np.all(u > 0))
    precondition = monotone and math.isfinite(tail) and tail_share < Config.ELEMENTARY_TAIL_SHARE

    suffix = np.cumsum(terms[::-1])[::-1] + tail
    lhs = a[:-1] * u[:-1]
    bad = np.nonzero(lhs > suffix * (1 + Config.CHECK_RTOL) + np.finfo(float).tiny)[0]
    return ElementaryLemmaResult(
        precondition_ok=precondition,
        holds=bool(bad.size == 0),
        tail_share=tail_share,
        tail_estimate=tail,
        violations=[int(k) for k in bad],
    )


def _level_radius(vol: VolumeProfile, alpha: float, a: float) -> float:
    """r_a with R(r_a) = 1/a"""
    target = math.log(1 / a)

    def gap(r):
        return math.log(volume_tail(vol, alpha, r)) - target

    lo, hi = 1., 1.
    while gap(lo) < 0:
        lo /= 2
        if lo < 1e-200:
            raise DomainError(f"R stays below 1/a={1 / a} near o; the level set {{R > 1/a}} is empty")
    while gap(hi) > 0:
        hi *= 2
    return brentq(gap, lo, hi, xtol=1e-14, rtol=1e-13)


def eval_level_set_integral(vol: VolumeProfile, meas: MeasureProfile, alpha: float, q: float,
                            a: float, tol: float = Config.QUAD_TOL) -> IntegralResult:
    """int m^q d sigma for m = min(R, 1/a), in layer-cake form q int_{r_a}^inf (cond-int1 integrand)"""
    if not a > 0:
        raise DomainError(f"Invalid a '{a}'. a must be positive")
    _require_transient(vol, alpha)
    r_a = _level_radius(vol, alpha, a)
    logger.debug("level radius r_a=%g for a=%g", r_a, a)
    return integrate_tail(cond_int1_integrand(vol, meas, alpha, q).scaled(q), r_a, tol)


@dataclass(frozen=True)
class CriterionReport:
    transient: IntegralStatus
    existence_verdict: Existence
    cond_int1: IntegralResult | None = None
    cond_int2: CondInt2Record | None = None
    cond_int1b: IntegralResult | None = None
    henon_threshold: float | None = None

    def summary_record(self) -> dict:
        record = {
            'transient': self.transient.label,
            'existence_verdict': self.existence_verdict.label,
            'henon_threshold': self.henon_threshold,
        }
        for name in ('cond_int1', 'cond_int1b'):
            result = getattr(self, name)
            record[f'{name}_status'] = result.status.label if result is not None else None
            record[f'{name}_value'] = result.value if result is not None else None
            record[f'{name}_tail_exponent'] = result.tail_exponent if result is not None else None
        sweep = self.cond_int2
        record['cond_int2_verdict'] = sweep.verdict.label if sweep is not None else None
        record['cond_int2_sup_upper'] = sweep.upper.sup if sweep is not None else None
        record['cond_int2_sup_lower'] = sweep.lower.sup if sweep is not None else None
        record['cond_int2_agree'] = sweep.agree if sweep is not None else None
        return record


def _henon_threshold_for(vol: VolumeProfile, meas: MeasureProfile, alpha: float) -> float | None:
    if not isinstance(vol, PowerLawVolume):
        return None
    if isinstance(meas, PowerDensityMeasure) and meas.n == vol.n:
        return henon_threshold(vol.n, alpha, meas.gamma)
    if isinstance(meas, SameAsVolumeMeasure) and meas.volume == vol:
        return henon_threshold(vol.n, alpha, 0.)
    return None


def evaluate_criteria(vol: VolumeProfile, meas: MeasureProfile, params: ModelParams,
                      x_grid=None, r_grid=None, threads: int = 1) -> CriterionReport:
    transient = check_transience(vol, params.alpha)
    if not transient.is_finite:
        logger.info("profile is not transient for alpha=%g", params.alpha)
        return CriterionReport(transient=transient.status, existence_verdict=Existence.NOT_EXISTS)

    threshold = _henon_threshold_for(vol, meas, params.alpha)
    cond1 = eval_cond_int1(vol, meas, params.alpha, params.q, params.r0)
    sweep = eval_cond_int2(vol, meas, params.alpha, params.q, params.r0, x_grid, r_grid, threads=threads)

    if meas.kind is MeasureKind.SAME_AS_VOLUME:
        cond1b = eval_cond_int1b(vol, params.alpha, params.q, params.r0)
        verdict = Existence.EXISTS if cond1b.is_finite else Existence.NOT_EXISTS
        return CriterionReport(transient.status, verdict, cond1, sweep, cond1b, threshold)

    if not cond1.is_finite:
        verdict = Existence.NOT_EXISTS
    elif not sweep.agree:
        verdict = Existence.INCONCLUSIVE
    else:
        verdict = Existence.EXISTS if sweep.verdict.bounded else Existence.NOT_EXISTS
    return CriterionReport(transient.status, verdict, cond1, sweep, None, threshold)
