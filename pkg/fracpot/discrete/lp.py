"""Weak-maximum-principle constant of a finite kernel by linear programming.

For a subset A and a target x the LP is

    maximize  sum_j K(x, j) nu_j   subject to   sum_j K(i, j) nu_j <= 1 (i in A),  nu >= 0, supp nu in A

and b is the largest optimum over all (A, x), floored at 1. Small LPs are
solved by enumerating the vertices of the feasible polytope, with the best
vertex re-derived in exact rational arithmetic; larger ones go to HiGHS.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from warnings import warn
import logging
import numpy as np
from scipy.optimize import linprog
from . import DiscreteKernelSpace
from ..config import Config
from ..errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WmpWitness:
    subset: tuple
    target: int
    weights: tuple
    value: float


@dataclass(frozen=True)
class WmpReport:
    constant_b: float
    witness: WmpWitness | None
    lp_cells_solved: int
    exact: bool
    truncation_level: float

    def as_record(self) -> dict:
        return {
            'constant_b': self.constant_b,
            'lp_cells_solved': self.lp_cells_solved,
            'exact': self.exact,
            'truncation_level': self.truncation_level,
            'witness_subset': None if self.witness is None else ' '.join(map(str, self.witness.subset)),
            'witness_target': None if self.witness is None else self.witness.target,
            'witness_value': None if self.witness is None else self.witness.value,
        }


@dataclass(frozen=True)
class _Candidate:
    value: float
    order: tuple
    subset: tuple
    target: int
    weights: np.ndarray
    active: tuple | None


@lru_cache(maxsize=None)
def _active_sets(k: int) -> np.ndarray:
    """All k-element choices among the 2k constraints (rows of M, then nu_j >= 0)"""
    return np.array(list(combinations(range(2 * k), k)), dtype=int)


def _vertices(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feasible vertices of {nu >= 0, block @ nu <= 1} and their active sets"""
    k = block.shape[0]
    active = _active_sets(k)
    rows = np.vstack((block, np.eye(k)))
    rhs = np.concatenate((np.ones(k), np.zeros(k)))
    systems = rows[active]
    targets = rhs[active]
    det = np.linalg.det(systems)
    hadamard = np.prod(np.linalg.norm(systems, axis=2), axis=1)
    regular = np.abs(det) > 1e-12 * hadamard
    if not np.any(regular):
        return np.empty((0, k)), np.empty((0, k), dtype=int)
    nu = np.linalg.solve(systems[regular], targets[regular][..., None])[..., 0]
    tol = Config.LP_FEASIBILITY_TOL
    feasible = np.all(nu >= -tol, axis=1) & np.all(nu @ block.T <= 1 + tol, axis=1)
    return np.maximum(nu[feasible], 0.), active[regular][feasible]


def _exact_vertex(block: np.ndarray, active: tuple) -> list | None:
    """Solve the active system in rationals; None when singular or infeasible"""
    k = block.shape[0]
    matrix = []
    for c in active:
        if c < k:
            matrix.append([Fraction(float(v)) for v in block[c]] + [Fraction(1)])
        else:
            matrix.append([Fraction(int(j == c - k)) for j in range(k)] + [Fraction(0)])
    for col in range(k):
        pivot = next((r for r in range(col, k) if matrix[r][col] != 0), None)
        if pivot is None:
            return None
        matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
        for r in range(k):
            if r != col and matrix[r][col] != 0:
                factor = matrix[r][col] / matrix[col][col]
                matrix[r] = [a - factor * b for a, b in zip(matrix[r], matrix[col])]
    nu = [matrix[i][k] / matrix[i][i] for i in range(k)]
    if any(v < 0 for v in nu):
        return None
    exact_block = [[Fraction(float(v)) for v in row] for row in block]
    if any(sum(a * v for a, v in zip(row, nu)) > 1 for row in exact_block):
        return None
    return nu


def _subset_candidate(kernel: np.ndarray, subset: tuple, order: int) -> tuple[_Candidate | None, int]:
    """Best (target, nu) for one subset; returns the candidate and the LP cells solved"""
    idx = np.array(subset)
    outside = np.setdiff1d(np.arange(kernel.shape[0]), idx)
    if outside.size == 0:
        return None, 0
    block = kernel[np.ix_(idx, idx)]
    objective = kernel[np.ix_(outside, idx)]
    if len(subset) <= Config.EXACT_LP_VARIABLES:
        nu, active = _vertices(block)
        if nu.shape[0] == 0:
            return None, outside.size
        values = nu @ objective.T
        v, t = np.unravel_index(int(np.argmax(values)), values.shape)
        return _Candidate(float(values[v, t]), (order, int(outside[t])), subset, int(outside[t]),
                          nu[v], tuple(int(c) for c in active[v])), outside.size

    best = None
    for t, x in enumerate(outside):
        res = linprog(-objective[t], A_ub=block, b_ub=np.ones(len(subset)), bounds=(0, None), method='highs')
        if res.status != 0:
            warn(f"LP for subset {subset}, target {int(x)} ended with status {res.status}: {res.message}")
            continue
        value = -float(res.fun)
        if best is None or value > best.value:
            best = _Candidate(value, (order, int(x)), subset, int(x), np.maximum(res.x, 0.), None)
    return best, outside.size


def _subsets(size: int, samples: int, seed: int) -> list[tuple]:
    if size <= Config.EXACT_SUBSET_LIMIT:
        return [tuple(i for i in range(size) if mask >> i & 1) for mask in range(1, 2 ** size)]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        k = int(rng.integers(1, size + 1))
        out.append(tuple(int(i) for i in np.sort(rng.choice(size, size=k, replace=False))))
    return out


def _verify(kernel: np.ndarray, cand: _Candidate) -> float | None:
    if cand.active is None:
        idx = np.array(cand.subset)
        slack = kernel[np.ix_(idx, idx)] @ cand.weights - 1
        return cand.value if np.all(slack <= Config.LP_FEASIBILITY_TOL) else None
    block = kernel[np.ix_(np.array(cand.subset), np.array(cand.subset))]
    nu = _exact_vertex(block, cand.active)
    if nu is None:
        return None
    row = [Fraction(float(kernel[cand.target, j])) for j in cand.subset]
    return float(sum(a * v for a, v in zip(row, nu)))


def wmp_constant(space: DiscreteKernelSpace, level: float | None = None, seed: int = Config.SEED,
                 samples: int = Config.SAMPLED_SUBSETS, threads: int = 1) -> WmpReport:
    """b = max(1, max over (A, x) of the LP optimum) for the truncated kernel K_N"""
    if space.size == 0:
        raise DomainError("weak maximum principle needs a non-empty space")
    level = space.truncation_level() if level is None else level
    truncated = space.truncated(level)
    kernel = truncated.kernel
    subsets = _subsets(space.size, samples, seed)
    exact = space.size <= Config.EXACT_SUBSET_LIMIT

    def solve(item):
        order, subset = item
        return _subset_candidate(kernel, subset, order)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve, enumerate(subsets)))
    else:
        solved = [solve(item) for item in enumerate(subsets)]
    cells = sum(count for _, count in solved)
    candidates = sorted((c for c, _ in solved if c is not None), key=lambda c: (-c.value, c.order))

    for cand in candidates:
        value = _verify(kernel, cand)
        if value is None:
            warn(f"LP optimum for subset {cand.subset}, target {cand.target} failed verification; "
                 f"trying the next one")
            exact = False
            continue
        witness = WmpWitness(tuple(space.labels[i] for i in cand.subset), space.labels[cand.target],
                             tuple(float(w) for w in cand.weights), value)
        logger.debug("wmp constant %g from %d LP cells", max(1., value), cells)
        return WmpReport(max(1., value), witness, cells, exact and cand.active is not None, level)
    return WmpReport(1., None, cells, exact, level)
