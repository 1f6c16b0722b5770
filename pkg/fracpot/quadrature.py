"""Adaptive quadrature for the improper integrals of the criteria.

Integrals over (rho, inf) are split into doubling windows [rho 2^k, rho 2^(k+1)]
and each window is handed to QUADPACK (scipy.integrate.quad) in the log
variable t = e^u, where the power-like integrands of this package are smooth.
What stays here is the bookkeeping around the windows: where to stop, how to
close the remainder and how to classify a tail that never settles.
"""
from dataclasses import dataclass
from warnings import warn
import logging
import math
import numpy as np
from scipy.integrate import quad
from scipy.special import roots_legendre
from .config import Config
from .errors import DomainError, NonIntegrableSingularityError
from .kinds import IntegralStatus

logger = logging.getLogger(__name__)

# Gauss-Legendre panel rule on [-1, 1] for the vectorized sweeps
NODES, WEIGHTS = roots_legendre(Config.PANEL_NODES)

_LN2 = math.log(2.)


@dataclass(frozen=True)
class Integrand:
    """Vectorized integrand with declared asymptotics.

    :param func: callable accepting numpy arrays
    :param exponent: p such that func(t) ~ t^p at infinity
    :param power_from: radius beyond which func is exactly proportional to t^p
    :param breakpoints: points where func has kinks or jumps
    """
    func: callable
    exponent: float | None = None
    power_from: float | None = None
    breakpoints: tuple = ()

    def __call__(self, t):
        return self.func(t)

    def scaled(self, factor: float) -> 'Integrand':
        func = self.func
        return Integrand(lambda t: factor * func(t), self.exponent, self.power_from, self.breakpoints)


def as_integrand(f, exponent: float | None = None) -> Integrand:
    if isinstance(f, Integrand):
        return f
    return Integrand(f, exponent)


@dataclass(frozen=True)
class IntegralResult:
    status: IntegralStatus
    value: float
    rel_error_estimate: float
    tail_exponent: float | None = None

    @property
    def is_finite(self) -> bool:
        return self.status.is_finite

    def as_record(self) -> dict:
        return {
            'status': self.status.label,
            'value': self.value,
            'rel_error_estimate': self.rel_error_estimate,
            'tail_exponent': self.tail_exponent,
        }


def integrate_interval(f, a: float, b: float, tol: float = Config.QUAD_TOL,
                       limit: int = Config.QUAD_LIMIT, points=None, weight: str | None = None,
                       wvar=None) -> tuple[float, float]:
    """scipy.integrate.quad on [a, b] with a relative tolerance.

    ``points`` outside (a, b) are dropped; ``weight`` and ``wvar`` pass through
    to quad, e.g. ``weight='alg', wvar=(beta, 0)`` for an s^beta endpoint
    singularity at a.

    :return: integral estimate and absolute error estimate
    :rtype: tuple[float, float]
    """
    if b <= a:
        return 0., 0.
    inner = sorted(p for p in points if a < p < b) if points is not None else []

    def scalar(t):
        return float(np.asarray(f(t), dtype=float))

    with np.errstate(over='ignore', invalid='ignore', under='ignore'):
        value, err, _, *message = quad(scalar, a, b, epsabs=0., epsrel=tol, limit=limit,
                                       points=inner or None, weight=weight, wvar=wvar, full_output=1)
    if message:
        logger.debug("quad on [%g, %g]: %s", a, b, message[0])
    return value, err


def _log_window(f, a: float, b: float, tol: float, breakpoints=()) -> tuple[float, float]:
    """int_a^b f(t) dt with t = e^u, split at breakpoints inside (a, b)"""
    def g(u):
        t = math.exp(u)
        return float(np.asarray(f(t), dtype=float)) * t

    points = [math.log(bp) for bp in breakpoints if a < bp < b]
    return integrate_interval(g, math.log(a), math.log(b), tol, points=points)


def integrate_span(f, a: float, b: float, tol: float = Config.QUAD_TOL) -> tuple[float, float]:
    """int_a^b over doubling windows in the log variable, 0 < a <= b < inf"""
    ig = as_integrand(f)
    value, err = 0., 0.
    lo = a
    while lo < b:
        hi = min(2 * lo, b)
        v, e = _log_window(ig, lo, hi, tol / 10, ig.breakpoints)
        value += v
        err += e
        lo = hi
    return value, err


def _finish(value: float, abs_err: float, tol: float, exponent) -> IntegralResult:
    rel = abs_err / abs(value) if value != 0 else 0.
    if rel <= tol:
        return IntegralResult(IntegralStatus.FINITE, value, rel, exponent)
    warn(f"quadrature error estimate {rel:.3g} exceeds tolerance {tol:.3g}; reporting finite-numeric")
    return IntegralResult(IntegralStatus.FINITE_NUMERIC, value, rel, exponent)


def fitted_decay(lows, increments) -> float | None:
    """p with window increments ~ lo^(p + 1), least squares on the last windows.

    None when fewer than three windows are available or the increments are not
    all positive.
    """
    lo = np.asarray(lows[-Config.TAIL_FIT_WINDOWS:], dtype=float)
    inc = np.asarray(increments[-Config.TAIL_FIT_WINDOWS:], dtype=float)
    if inc.size < 3 or np.any(~(inc > 0)):
        return None
    slope = np.polyfit(np.log(lo), np.log(inc), 1)[0]
    return float(slope) - 1


def _classify_by_decay(total: float, lows: list, increments: list) -> IntegralResult:
    p_fit = fitted_decay(lows, increments)
    if p_fit is None:
        # oscillating or vanishing increments: fall back to the last two
        if len(increments) >= 2 and abs(increments[-1]) < abs(increments[-2]):
            rel = abs(increments[-1]) / abs(total) if total else 0.
            return IntegralResult(IntegralStatus.FINITE_NUMERIC, total, rel, None)
        return IntegralResult(IntegralStatus.NUMERIC_DIVERGENT, math.inf, 0., None)
    if p_fit < -1:
        ratio = 2. ** (p_fit + 1)
        remainder = increments[-1] * ratio / (1 - ratio)
        value = total + remainder
        logger.debug("tail decided by fitted exponent %.6g, remainder %g", p_fit, remainder)
        return IntegralResult(IntegralStatus.FINITE_NUMERIC, value, abs(remainder) / abs(value), p_fit)
    logger.debug("tail decided by fitted exponent %.6g >= -1", p_fit)
    return IntegralResult(IntegralStatus.NUMERIC_DIVERGENT, math.inf, 0., p_fit)


def integrate_tail(f, rho: float, tol: float = Config.QUAD_TOL,
                   exponent: float | None = None) -> IntegralResult:
    """int_rho^inf f(t) dt with divergence classification.

    A declared exponent p >= -1 is divergent without any numeric work; p < -1
    gives a finite value within tol. Without a declared exponent the doubling
    windows run until the increments drop below tol (finite-numeric) or the
    partial sum passes the divergence threshold (numeric-divergent). Windows
    stop at the end of the float range; an undecided tail is then classified
    by the decay exponent fitted to the last window increments.
    """
    if not rho > 0 or not tol > 0:
        raise DomainError(f"integrate_tail needs rho > 0 and tol > 0, got rho={rho}, tol={tol}")
    ig = as_integrand(f, exponent)
    p = ig.exponent if exponent is None else exponent

    if p is not None and p >= -1:
        return IntegralResult(IntegralStatus.DIVERGENT_BY_EXPONENT, math.inf, 0., p)

    if p is not None and ig.power_from is not None:
        b = max(rho, ig.power_from)
        head, head_err = integrate_span(ig, rho, b, tol)
        tail = float(ig(b)) * b / (-p - 1)
        return _finish(head + tail, head_err, tol, p)

    total, total_err = 0., 0.
    lo = rho
    lows, increments = [], []
    for k in range(Config.MAX_WINDOWS):
        hi = 2 * lo
        if not math.isfinite(hi):
            logger.debug("doubling windows reached the end of the float range at t=%g", lo)
            break
        inc, err = _log_window(ig, lo, hi, tol / 10, ig.breakpoints)
        if not math.isfinite(inc):
            logger.debug("window [%g, %g] is not finite; stopping", lo, hi)
            break
        total += inc
        total_err += err
        lows.append(lo)
        increments.append(inc)
        if p is not None:
            remainder = float(ig(hi)) * hi / (-p - 1)
            if abs(remainder) <= 0.1 * tol * abs(total):
                logger.debug("tail closed after %d windows", k + 1)
                return _finish(total + remainder, total_err, tol, p)
        else:
            if total > Config.DIVERGENCE_THRESHOLD:
                logger.debug("partial sum passed divergence threshold after %d windows", k + 1)
                return IntegralResult(IntegralStatus.NUMERIC_DIVERGENT, math.inf, 0., None)
            if abs(inc) <= tol * abs(total):
                rel = (abs(inc) + total_err) / abs(total) if total else 0.
                return IntegralResult(IntegralStatus.FINITE_NUMERIC, total, rel, None)
        lo = hi
    else:
        warn(f"integrate_tail hit the window cap ({Config.MAX_WINDOWS}) from rho={rho}")

    if p is not None:
        remainder = float(ig(lo)) * lo / (-p - 1)
        if not math.isfinite(remainder):
            remainder = 0.
        value = total + remainder
        return IntegralResult(IntegralStatus.FINITE_NUMERIC, value,
                              abs(remainder) / abs(value) if value else 0., p)
    return _classify_by_decay(total, lows, increments)


def integrate_singular(f, T: float = math.inf, tol: float = Config.QUAD_TOL, beta: float | None = None,
                       tail_exponent: float | None = None) -> IntegralResult:
    """int_0^T f(s) ds for f(s) = s^beta g(s), beta > -1, g bounded near 0.

    Works in u = log s: windows of width log 2 march outwards from the peak of
    f(e^u) e^u. The piece below the last window goes to quad with the
    algebraic weight s^beta; for T = inf a declared tail exponent p < -1
    closes the top with the power remainder f(s) s / (-p - 1).
    """
    if beta is None or beta <= -1:
        raise NonIntegrableSingularityError(f"endpoint singularity s^{beta} is not integrable at 0")
    if not T > 0 or not tol > 0:
        raise DomainError(f"integrate_singular needs T > 0 and tol > 0, got T={T}, tol={tol}")
    if math.isinf(T) and tail_exponent is not None and tail_exponent >= -1:
        return IntegralResult(IntegralStatus.DIVERGENT_BY_EXPONENT, math.inf, 0., tail_exponent)

    def g(u):
        s = np.exp(u)
        return np.asarray(f(s), dtype=float) * s

    u_top = math.log(T) if math.isfinite(T) else None
    upper = u_top if u_top is not None else 80.
    coarse = np.arange(upper - 160., upper, 0.5)
    with np.errstate(all='ignore'):
        sampled = np.nan_to_num(g(coarse), nan=0., posinf=0., neginf=0.)
    if u_top is not None:
        sampled = np.append(sampled, np.nan_to_num(g(np.array([u_top])), nan=0., posinf=0.)[0])
        coarse = np.append(coarse, u_top)
    if not np.any(sampled != 0):
        return IntegralResult(IntegralStatus.FINITE, 0., 0., tail_exponent)
    u_peak = float(coarse[int(np.argmax(np.abs(sampled)))])

    total, total_err = 0., 0.
    # downward from the peak
    hi = u_peak
    for _ in range(Config.MAX_WINDOWS):
        lo = hi - _LN2
        v, e = integrate_interval(g, lo, hi, tol / 10)
        total += v
        total_err += e
        hi = lo
        if abs(v) <= 0.1 * tol * abs(total):
            break
    s_lo = math.exp(hi)
    # regular part g(s) = f(s) s^-beta, held at its value near s_floor below it
    s_floor = s_lo * 1e-12

    def regular(s):
        s = max(s, s_floor)
        with np.errstate(all='ignore'):
            return float(np.nan_to_num(np.asarray(f(s), dtype=float) * s ** -beta, nan=0., posinf=0.))

    v, e = integrate_interval(regular, 0., s_lo, tol, weight='alg', wvar=(beta, 0.))
    total += v
    total_err += e

    # upward from the peak
    lo = u_peak
    for _ in range(Config.MAX_WINDOWS):
        if u_top is not None and lo >= u_top:
            break
        up = lo + _LN2 if u_top is None else min(lo + _LN2, u_top)
        v, e = integrate_interval(g, lo, up, tol / 10)
        if not math.isfinite(v):
            logger.debug("upper windows left the float range at u=%g", up)
            return IntegralResult(IntegralStatus.NUMERIC_DIVERGENT, math.inf, 0., tail_exponent)
        total += v
        total_err += e
        lo = up
        if u_top is None and abs(v) <= 0.1 * tol * abs(total):
            if tail_exponent is not None:
                s_hi = math.exp(lo)
                total += float(f(np.array([s_hi]))[0]) * s_hi / (-tail_exponent - 1)
            break
    return _finish(total, total_err, tol, tail_exponent)


def composite_log_gauss(func, lo, hi, panels: int = Config.SWEEP_PANELS) -> np.ndarray:
    """Fixed composite Gauss-Legendre rule in the log variable, vectorized over many integrals.

    ``lo`` and ``hi`` are arrays of equal shape S; ``func`` receives an array of
    shape S + (panels, PANEL_NODES) and must broadcast its own per-integral
    parameters against it. Entries with hi <= lo integrate to zero.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    active = hi > lo
    u_lo = np.log(np.where(active, lo, 1.))
    u_hi = np.log(np.where(active, hi, 2.))
    width = (u_hi - u_lo) / panels
    half = (width / 2)[..., None, None]
    starts = u_lo[..., None] + width[..., None] * np.arange(panels)
    u = starts[..., None] + half + half * NODES
    s = np.exp(u)
    with np.errstate(invalid='ignore', over='ignore'):
        vals = np.asarray(func(s), dtype=float) * s
    panel_sums = (vals * WEIGHTS).sum(axis=-1) * half[..., 0]
    return np.where(active, panel_sums.sum(axis=-1), 0.)
