"""Iteration f_0 = K_nu 1, f_(k+1) = K_nu(f_k^q) and its lower bounds psi_k(f_0).

With psi(t) = (t / b)^q and psi_0(t) = t,

    psi_(k+1)(t) = int_0^t psi(psi_k(s)) ds = A_(k+1) t^(e_(k+1)),   e_k = 1 + q + ... + q^k,

so psi_k(f_0) <= f_k is the same statement as
f_0^(e_k) <= b^(e_k - 1) c(q, k) f_k with c(q, k) = prod_j (1 + ... + q^j)^(q^(k - j)).
Everything is carried in log space; f_k under- and overflows long before k = 8.
"""
from dataclasses import dataclass, field
import logging
import math
import numpy as np
from scipy.special import logsumexp
from ..config import Config
from ..discrete import DiscreteKernelSpace
from ..discrete.lp import wmp_constant
from ..errors import CostGuardError, DomainError
from ..quadrature import NODES, WEIGHTS

logger = logging.getLogger(__name__)


def _check_q(q: float):
    if not q > 1:
        raise DomainError(f"Invalid q '{q}'. q must be > 1")


def _check_depth(depth: int):
    if depth < 0:
        raise DomainError(f"Invalid depth '{depth}'. depth must be non-negative")
    if depth > Config.MAX_PSI_DEPTH:
        raise CostGuardError(f"iteration depth {depth} exceeds the limit {Config.MAX_PSI_DEPTH}")


def geometric_sum(q: float, k: int) -> float:
    """1 + q + ... + q^k"""
    return float(sum(q ** j for j in range(k + 1)))


def log_c_qk(q: float, k: int) -> float:
    return math.fsum(q ** (k - j) * math.log(geometric_sum(q, j)) for j in range(1, k + 1))


def c_qk(q: float, k: int) -> float:
    """c(q, k) = prod_(j=1..k) (1 + q + ... + q^j)^(q^(k - j)), inf once it leaves the float range"""
    _check_q(q)
    try:
        return math.exp(log_c_qk(q, k))
    except OverflowError:
        return math.inf


def c_qk_root(q: float, k: int) -> float:
    """c(q, k)^((q - 1) / (q^(k + 1) - 1))"""
    return math.exp(log_c_qk(q, k) * (q - 1) / (q ** (k + 1) - 1))


def c_qk_product_bound(q: float, terms: int = 200) -> float:
    """prod_(j >= 1) (1 + ... + q^j)^(q^-j), the k -> inf limit of c(q, k)^(q^-k)"""
    _check_q(q)
    # log(1 + ... + q^j) = log(q^(j+1) - 1) - log(q - 1) grows linearly in j
    logs = [(math.log(q ** (j + 1) - 1) if j < 600 else (j + 1) * math.log(q)) - math.log(q - 1)
            for j in range(1, terms + 1)]
    return math.exp(math.fsum(lg * q ** -j for j, lg in enumerate(logs, start=1)))


def c_qk_root_bound(q: float) -> float:
    """q^(q / (q - 1)^2) (q / (q - 1))^(1 / (q - 1)), an upper bound of every c_qk_root(q, k)"""
    _check_q(q)
    return q ** (q / (q - 1) ** 2) * (q / (q - 1)) ** (1 / (q - 1))


def psi_exponent(q: float, k: int) -> float:
    return geometric_sum(q, k)


def log_psi_coefficient(q: float, b: float, k: int) -> float:
    """log A_k with psi_k(t) = A_k t^(e_k)"""
    return -(psi_exponent(q, k) - 1) * math.log(b) - log_c_qk(q, k)


def log_psi_sequence(q: float, b: float, t_grid, depth: int,
                     points_per_decade: int = Config.PSI_POINTS_PER_DECADE) -> np.ndarray:
    """log psi_k(t) for k = 0..depth by recursive quadrature.

    Each level is tabulated on a log grid covering t_grid; the running integral
    int_0^t psi(psi_k(s)) ds is accumulated panel by panel with Gauss-Legendre in log s
    and closed below the grid with the local power remainder. Between table
    points psi_k is interpolated log-log linearly. Panels are split so that the
    integrand changes by at most e^2 across each one.
    """
    _check_q(q)
    _check_depth(depth)
    if not b > 0:
        raise DomainError(f"Invalid b '{b}'. b must be positive")
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(~(t > 0)):
        raise DomainError("psi tables need a non-empty positive t grid")
    lo, hi = math.log10(t.min()) - 1, math.log10(t.max()) + 1
    panels = int(math.ceil((hi - lo) * points_per_decade))
    table = np.linspace(lo, hi, panels + 1) * math.log(10)
    step = table[1] - table[0]

    log_b = math.log(b)
    out = np.empty((depth + 1, t.size))
    level = table.copy()
    out[0] = np.log(t)
    for k in range(1, depth + 1):
        slope = q * float(np.max(np.abs(np.diff(level)))) / step + 1
        split = max(1, int(math.ceil(slope * step / 2)))
        fine = np.linspace(table[0], table[-1], panels * split + 1)
        half = (fine[1] - fine[0]) / 2
        nodes = (fine[:-1, None] + fine[1:, None]) / 2 + half * NODES
        # log of psi(psi_(k-1)(s)) s at the panel nodes, then of the panel integrals
        log_g = q * (np.interp(nodes, table, level) - log_b) + nodes
        log_panels = logsumexp(log_g, axis=1, b=WEIGHTS[None, :]) + math.log(half)
        # below the table: psi(psi_(k-1)(s)) ~ s^p with p from the first panel
        head_power = q * (level[1] - level[0]) / step
        log_head = q * (level[0] - log_b) + table[0] - math.log(head_power + 1)
        running = np.logaddexp.accumulate(np.concatenate(([log_head], log_panels)))
        level = running[::split]
        out[k] = np.interp(np.log(t), table, level)
    return out


def psi_sequence(q: float, b: float, t_grid, depth: int) -> np.ndarray:
    """psi_k(t_grid) for k = 0..depth, row k holding psi_k"""
    return np.exp(log_psi_sequence(q, b, t_grid, depth))


@dataclass
class IterationTrace:
    q: float
    b: float
    f_seq: list = field(default_factory=list)
    psi_of_f0: list = field(default_factory=list)
    c_qk: list = field(default_factory=list)
    log_c_qk: list = field(default_factory=list)
    bound_checks: list = field(default_factory=list)
    corollary_checks: list = field(default_factory=list)
    truncated: bool = False

    @property
    def depth(self) -> int:
        return len(self.f_seq) - 1

    @property
    def all_hold(self) -> bool:
        return all(np.all(c) for c in self.bound_checks) and all(np.all(c) for c in self.corollary_checks)

    def as_records(self, labels=None) -> list[dict]:
        records = []
        for k, f in enumerate(self.f_seq):
            for i, value in enumerate(f):
                records.append({
                    'k': k,
                    'point': labels[i] if labels is not None else i,
                    'f_k': float(value),
                    'psi_k_f0': float(self.psi_of_f0[k][i]),
                    'c_qk': self.c_qk[k],
                    'log_c_qk': self.log_c_qk[k],
                    'est_it': bool(self.bound_checks[k][i]),
                    'corollary': bool(self.corollary_checks[k][i]),
                })
        return records


def _log_kernel(space: DiscreteKernelSpace) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide='ignore'):
        return np.log(space.kernel), np.log(space.weights)


def run_iteration(space: DiscreteKernelSpace, q: float, depth: int, b: float | None = None) -> IterationTrace:
    """f_k with est-it and c(q, k) checks at every point, carried in log space"""
    _check_q(q)
    _check_depth(depth)
    finite = space if np.all(np.isfinite(space.kernel)) else space.truncated()
    b = wmp_constant(finite).constant_b if b is None else b
    log_k, log_nu = _log_kernel(finite)
    log_w = log_k + log_nu[None, :]

    log_f = logsumexp(log_w, axis=1)
    if np.any(~np.isfinite(log_f)):
        raise DomainError("K_nu 1 must be finite and positive at every point")
    log_f0 = log_f.copy()
    log_psi = log_psi_sequence(q, b, np.exp(log_f0), depth)
    slack = math.log1p(Config.ITERATION_RTOL)

    trace = IterationTrace(q=q, b=b)
    overflow = math.log(Config.ITERATION_OVERFLOW)
    for k in range(depth + 1):
        if k > 0:
            log_f = logsumexp(log_w + q * log_f[None, :], axis=1)
        if np.any(log_f > overflow):
            logger.info("iteration left the float range at k=%d; trace truncated", k)
            trace.truncated = True
            break
        log_c = log_c_qk(q, k)
        if log_c > overflow:
            logger.info("c(q, k) left the float range at k=%d; trace truncated", k)
            trace.truncated = True
            break
        e_k = psi_exponent(q, k)
        trace.f_seq.append(np.exp(log_f))
        trace.psi_of_f0.append(np.exp(log_psi[k]))
        trace.log_c_qk.append(log_c)
        trace.c_qk.append(math.exp(log_c))
        trace.bound_checks.append(log_psi[k] <= log_f + slack)
        corollary_rhs = (e_k - 1) * math.log(b) + log_c + log_f
        trace.corollary_checks.append(e_k * log_f0 <= corollary_rhs + slack)
    return trace
