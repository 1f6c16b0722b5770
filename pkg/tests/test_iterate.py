import math
import numpy as np
import pytest
from fracpot.discrete import DiscreteKernelSpace
from fracpot.errors import CostGuardError, DomainError
from fracpot.iterate import (
    c_qk,
    c_qk_product_bound,
    c_qk_root,
    c_qk_root_bound,
    geometric_sum,
    log_c_qk,
    log_psi_coefficient,
    log_psi_sequence,
    psi_exponent,
    psi_sequence,
    run_iteration,
)


def test_c_qk_values():
    assert c_qk(2., 0) == 1.
    assert c_qk(2., 1) == pytest.approx(3.)
    assert c_qk(2., 2) == pytest.approx(63.)
    assert c_qk(3., 2) == pytest.approx(4 ** 3 * 13)
    assert geometric_sum(2., 3) == 15.


@pytest.mark.parametrize('q', [1.5, 2., 3.])
def test_c_qk_root_bounds(q):
    bound = c_qk_root_bound(q)
    product = c_qk_product_bound(q)
    for k in range(0, 7):
        root = c_qk_root(q, k)
        assert root <= bound * (1 + 1e-12)
        assert root <= product * (1 + 1e-12)
        # c(q, k)^(q^-k) increases to the product
        assert math.exp(log_c_qk(q, k) * q ** -k) <= product * (1 + 1e-12)


def test_c_qk_root_bound_closed_form():
    q = 2.
    assert c_qk_root_bound(q) == pytest.approx(q ** ((2 * q - 1) / (q - 1) ** 2) / (q - 1) ** (1 / (q - 1)))
    assert c_qk_root(2., 1) == pytest.approx(3 ** (1 / 3))
    assert c_qk_root(2., 1) > math.sqrt(2.)


def test_c_qk_past_the_float_range():
    assert log_c_qk(3., 6) > math.log(np.finfo(float).max)
    assert c_qk(3., 6) == math.inf
    assert c_qk_root(3., 6) <= c_qk_root_bound(3.)


def test_c_qk_rejects_q():
    with pytest.raises(DomainError):
        c_qk(1., 2)


def test_psi_values_at_one():
    psi = psi_sequence(2., 1., [1.], 2)
    np.testing.assert_allclose(psi[:, 0], [1., 1 / 3, 1 / 63], rtol=1e-9)
    assert psi_sequence(2., 2., [1.], 1)[1, 0] == pytest.approx(1 / 12, rel=1e-9)


@pytest.mark.parametrize('q', [1.5, 2., 3.])
@pytest.mark.parametrize('b', [1., 1.7])
def test_psi_matches_closed_form(q, b):
    t = np.logspace(-2, 1, 7)
    depth = 5
    psi = log_psi_sequence(q, b, t, depth)
    for k in range(depth + 1):
        expected = log_psi_coefficient(q, b, k) + psi_exponent(q, k) * np.log(t)
        np.testing.assert_allclose(psi[k], expected, rtol=1e-8, atol=1e-8)


def test_psi_first_level():
    q, b, t = 1.5, 1., np.array([0.5, 2.])
    psi = psi_sequence(q, b, t, 1)
    np.testing.assert_allclose(psi[1], t ** (q + 1) / ((q + 1) * b ** q), rtol=1e-9)


def test_psi_depth_guards():
    with pytest.raises(CostGuardError):
        psi_sequence(2., 1., [1.], 9)
    with pytest.raises(DomainError):
        psi_sequence(2., 1., [1.], -1)
    with pytest.raises(DomainError):
        psi_sequence(2., 0., [1.], 1)
    with pytest.raises(DomainError):
        psi_sequence(2., 1., [0.], 1)


@pytest.mark.parametrize('q', [1.5, 2., 3.])
def test_iteration_bounds_hold(riesz_space, q):
    for seed in range(5):
        trace = run_iteration(riesz_space(seed, points=6, weights='random', diagonal=2.), q, 5)
        assert not trace.truncated
        assert trace.depth == 5
        assert trace.all_hold, seed


@pytest.mark.slow
@pytest.mark.parametrize('q', [1.5, 2., 3.])
def test_iteration_bounds_hold_on_fifty_spaces(riesz_space, q):
    failures = [seed for seed in range(50)
                if not run_iteration(riesz_space(seed, points=6, weights='random', diagonal=2.), q, 5).all_hold]
    assert failures == []


def test_iteration_first_step(riesz_space):
    space = riesz_space(3, points=5, diagonal=2.)
    trace = run_iteration(space, 2., 1)
    f0 = space.potential()
    np.testing.assert_allclose(trace.f_seq[0], f0, rtol=1e-12)
    np.testing.assert_allclose(trace.f_seq[1], space.potential(f0 ** 2), rtol=1e-12)
    np.testing.assert_allclose(trace.psi_of_f0[0], f0, rtol=1e-9)


def test_iteration_infinite_diagonal_uses_truncation(riesz_space):
    trace = run_iteration(riesz_space(1, points=5), 2., 2)
    assert trace.depth == 2
    assert trace.b >= 1.


def test_iteration_truncates_on_overflow():
    kernel = np.full((5, 5), 1e3)
    np.fill_diagonal(kernel, np.inf)
    trace = run_iteration(DiscreteKernelSpace(kernel, np.ones(5)), 3., 5)
    assert trace.truncated
    assert trace.depth < 5
    assert trace.all_hold


def test_iteration_truncates_when_c_qk_overflows():
    kernel = np.full((4, 4), 0.1)
    np.fill_diagonal(kernel, 0.2)
    trace = run_iteration(DiscreteKernelSpace(kernel, np.ones(4)), 3., 6)
    assert trace.truncated
    assert trace.depth == 5
    assert trace.log_c_qk == pytest.approx([log_c_qk(3., k) for k in range(6)])
    assert all(math.isfinite(c) for c in trace.c_qk)
    assert trace.all_hold


def test_iteration_needs_positive_potential():
    space = DiscreteKernelSpace(np.full((3, 3), 1.), np.zeros(3))
    with pytest.raises(DomainError):
        run_iteration(space, 2., 2)


def test_iteration_records(riesz_space):
    space = riesz_space(0, points=4, diagonal=2.)
    trace = run_iteration(space, 2., 2)
    rows = trace.as_records(space.labels)
    assert len(rows) == 3 * 4
    assert rows[-1]['k'] == 2
    assert rows[-1]['c_qk'] == pytest.approx(63.)
    assert set(rows[0]) == {'k', 'point', 'f_k', 'psi_k_f0', 'c_qk', 'log_c_qk', 'est_it',
                            'corollary'}
