import math
import numpy as np
import pytest
from fracpot.errors import DomainError, RecurrenceError
from fracpot.green import (
    RieszGreen,
    TruncatedGreen,
    VolumeGreen,
    comparison_ratio,
    euclidean_heat_kernel,
    green_riesz,
    green_subordinated,
    green_volume_estimate,
    riesz_constant,
    tail_doubling_ratio,
    tail_quasi_metric_constant,
    truncated_m,
    volume_tail,
)
from fracpot.kinds import GreenRoute
from fracpot.profiles import PiecewisePowerVolume, PowerLawVolume, TableVolume, euclidean_volume


def test_riesz_constant_n3_half():
    assert riesz_constant(3, 0.5) == pytest.approx(0.05066059, rel=1e-7)
    value = green_riesz(3, 0.5, 1.)
    assert value.value == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-14)
    assert value.route is GreenRoute.RIESZ_EXACT


@pytest.mark.parametrize('n, alpha', [(3, 0.5), (3, 0.25), (2, 0.75), (4, 0.5)])
@pytest.mark.parametrize('r', [0.3, 1., 4.])
def test_subordination_matches_riesz(n, alpha, r):
    sub = green_subordinated(euclidean_heat_kernel(n), alpha, r)
    assert sub.route is GreenRoute.SUBORDINATION
    assert sub.value == pytest.approx(green_riesz(n, alpha, r).value, rel=1e-6)


def test_recurrent_dimension():
    with pytest.raises(RecurrenceError, match='not transient'):
        riesz_constant(1, 0.5)
    with pytest.raises(RecurrenceError):
        green_subordinated(euclidean_heat_kernel(1), 0.5, 1.)
    with pytest.raises(RecurrenceError):
        green_volume_estimate(PowerLawVolume(c=1., n=1.), 0.5, 1.)


def test_green_at_the_diagonal():
    assert math.isinf(green_riesz(3, 0.5, 0.).value)
    assert math.isinf(green_subordinated(euclidean_heat_kernel(3), 0.5, 0.).value)
    with pytest.raises(DomainError):
        green_riesz(3, 0.5, -1.)


def test_volume_estimate_power_law(unit_cube_volume):
    # R(d) = int_d^inf t^(-3) dt = d^-2 / 2
    for d in (0.1, 1., 10.):
        assert green_volume_estimate(unit_cube_volume, 0.5, d).value == pytest.approx(d ** -2 / 2, rel=1e-12)


def test_volume_tail_closed_form_matches_quadrature():
    vol = PiecewisePowerVolume(c0=1., breakpoints=(1., 10.), exponents=(2., 4., 3.))
    table = TableVolume(radii=tuple(np.logspace(-2, 2, 81)), values=tuple(vol(np.logspace(-2, 2, 81))),
                        declared_tail=3.)
    d = np.array([0.05, 0.7, 3., 20.])
    np.testing.assert_allclose(volume_tail(table, 0.5, d), volume_tail(vol, 0.5, d), rtol=1e-6)


def test_volume_tail_is_non_increasing():
    vol = PiecewisePowerVolume(c0=1., breakpoints=(1.,), exponents=(2.5, 3.5))
    values = volume_tail(vol, 0.5, np.logspace(-2, 2, 50))
    assert np.all(np.diff(values) <= 0)
    assert math.isinf(volume_tail(vol, 0.5, 0.))


def test_euclidean_comparison_is_constant():
    lo, hi = comparison_ratio(euclidean_volume(3), 3, 0.5, np.logspace(-2, 2, 17))
    assert hi / lo == pytest.approx(1., rel=1e-12)


def test_comparison_stays_bounded_off_power_law():
    vol = PiecewisePowerVolume(c0=1., breakpoints=(1.,), exponents=(3., 3.5))
    lo, hi = comparison_ratio(vol, 3, 0.5, np.logspace(-2, 2, 17))
    assert 0 < lo <= hi < math.inf


def test_tail_doubling_ratio(unit_cube_volume):
    assert tail_doubling_ratio(unit_cube_volume, 0.5, np.logspace(-1, 1, 5)) == pytest.approx(4.)


def test_tail_quasi_metric_constant(rng):
    kappa = tail_quasi_metric_constant(euclidean_volume(3), 0.5, rng.uniform(0, 1, (10, 3)))
    assert 1. <= kappa <= 4. + 1e-12


def test_kernel_objects():
    riesz = RieszGreen(3, 0.5)
    np.testing.assert_allclose(riesz(np.array([1., 2.])), riesz.constant * np.array([1., 0.25]))
    vg = VolumeGreen(PowerLawVolume(c=1., n=3.), 0.5)
    assert vg(2.) == pytest.approx(1 / 8)
    with pytest.raises(RecurrenceError):
        VolumeGreen(PowerLawVolume(c=1., n=1.), 0.5)
    with pytest.raises(RecurrenceError):
        RieszGreen(2, 1.)


def test_truncated_green():
    m = TruncatedGreen(RieszGreen(3, 0.5), a=2.)
    assert m.cap == 0.5
    assert m(1e-6) == 0.5
    assert m(10.) == pytest.approx(RieszGreen(3, 0.5)(10.))
    # C / d^2 = 1/a at d = sqrt(C a)
    assert m.level_radius() == pytest.approx(math.sqrt(riesz_constant(3, 0.5) * 2.), rel=1e-10)
    with pytest.raises(DomainError):
        TruncatedGreen(RieszGreen(3, 0.5), a=0.)


def test_truncated_m_caps_the_kernel():
    riesz = RieszGreen(3, 0.5)
    assert truncated_m(riesz, 1., 1e-3) == 1.
    assert truncated_m(riesz, 1., 2.) == pytest.approx(riesz(2.))
    np.testing.assert_allclose(truncated_m(riesz, 4., np.array([1e-3, 10.])), [0.25, riesz(10.)])
