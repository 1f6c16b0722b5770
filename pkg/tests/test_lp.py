import numpy as np
import pytest
from scipy.optimize import linprog
from fracpot.discrete import DiscreteKernelSpace
from fracpot.discrete.checks import ptolemy_check, quasi_metric_constant
from fracpot.discrete.factory import get_space_factory
from fracpot.discrete.lp import _subset_candidate, wmp_constant
from fracpot.errors import DomainError


def test_identity_kernel_has_b_one():
    report = wmp_constant(get_space_factory('identity')(points=5))
    assert report.constant_b == pytest.approx(1.)
    assert report.exact
    # every non-empty subset against every point outside it
    assert report.lp_cells_solved == 75


def test_three_point_b_within_kappa():
    report = wmp_constant(get_space_factory('three-point')())
    assert 1. <= report.constant_b <= 2.


def test_finite_two_point_kernel():
    # A = {0}: nu_0 <= 1 / K(0, 0) = 1, target 1 sees K(1, 0) nu_0 = 1
    space = DiscreteKernelSpace(np.array([[1., 1.], [1., 4.]]), np.ones(2))
    report = wmp_constant(space)
    assert report.constant_b == pytest.approx(1.)
    # K(0, 0) small makes the single-atom LP large
    space = DiscreteKernelSpace(np.array([[0.5, 1.], [1., 4.]]), np.ones(2))
    report = wmp_constant(space)
    assert report.constant_b == pytest.approx(2.)
    assert report.witness.subset == (0,)
    assert report.witness.target == 1
    assert report.witness.weights == pytest.approx((2.,))


def test_witness_is_feasible(riesz_space):
    space = riesz_space(11, points=7, diagonal=2.)
    report = wmp_constant(space)
    witness = report.witness
    idx = np.array(witness.subset)
    nu = np.array(witness.weights)
    kernel = space.truncated(report.truncation_level).kernel
    assert np.all(kernel[np.ix_(idx, idx)] @ nu <= 1 + 1e-9)
    assert kernel[witness.target, idx] @ nu == pytest.approx(witness.value, rel=1e-9)


@pytest.mark.parametrize('seed', range(5))
def test_vertex_enumeration_matches_highs(riesz_space, seed):
    space = riesz_space(seed, points=8, diagonal=2.)
    kernel = space.kernel
    subset = (0, 2, 3, 5, 6)
    cand, cells = _subset_candidate(kernel, subset, 0)
    assert cells == 3
    idx = np.array(subset)
    best = -np.inf
    for target in (1, 4, 7):
        res = linprog(-kernel[target, idx], A_ub=kernel[np.ix_(idx, idx)], b_ub=np.ones(len(subset)),
                      bounds=(0, None), method='highs')
        best = max(best, -res.fun)
    assert cand.value == pytest.approx(best, rel=1e-7)


def test_threads_give_the_same_report(riesz_space):
    space = riesz_space(4, points=8, diagonal=2.)
    assert wmp_constant(space, threads=4) == wmp_constant(space, threads=1)


def test_sampled_subsets_for_large_spaces(riesz_space):
    space = riesz_space(0, points=12, diagonal=2.)
    report = wmp_constant(space, samples=50)
    assert not report.exact
    assert report.constant_b >= 1.


def test_empty_space():
    with pytest.raises(DomainError):
        wmp_constant(DiscreteKernelSpace(np.zeros((0, 0)), np.zeros(0)))


def _quasi_metric_spaces(count):
    riesz, power = get_space_factory('riesz'), get_space_factory('power-distance')
    rng = np.random.default_rng(2024)
    spaces = []
    for seed in range(count):
        points = int(rng.integers(3, 9))
        if seed % 2:
            spaces.append(riesz(seed=seed, points=points, alpha=float(rng.choice([0.25, 0.5, 0.75]))))
        else:
            spaces.append(power(seed=seed, points=points, beta=float(rng.uniform(0.5, 3.))))
    return spaces


def _wmp_and_ptolemy_failures(spaces):
    failures = []
    for i, space in enumerate(spaces):
        kappa = quasi_metric_constant(space).kappa
        report = wmp_constant(space)
        if report.constant_b > kappa * (1 + 1e-9):
            failures.append(('wmp', i, report.constant_b, kappa))
        if not ptolemy_check(space, kappa).holds:
            failures.append(('ptolemy', i))
    return failures


def test_quasi_metric_bounds_wmp_sample():
    assert _wmp_and_ptolemy_failures(_quasi_metric_spaces(12)) == []


@pytest.mark.slow
def test_quasi_metric_bounds_wmp_full():
    assert _wmp_and_ptolemy_failures(_quasi_metric_spaces(200)) == []
