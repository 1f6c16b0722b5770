import math
import numpy as np
import pytest
from fracpot import profiles
from fracpot.errors import DomainError, RecurrenceError, UnsupportedRangeError
from fracpot.kinds import MeasureKind, VolumeKind
from fracpot.profiles import (
    DiracMeasure,
    ModelParams,
    PiecewisePowerVolume,
    PowerDensityMeasure,
    PowerLawVolume,
    SameAsVolumeMeasure,
    TableMeasure,
    TableVolume,
    check_doubling,
    eval_volume,
    euclidean_volume,
    get_measure_factory,
    get_volume_factory,
    register_measure_factory,
    register_volume_factory,
    unit_ball_volume,
)
from fracpot.scenario import loads_scenario


def test_unit_ball_volume():
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-14)


def test_power_law_values():
    vol = PowerLawVolume(c=1., n=3.)
    assert vol(2.) == pytest.approx(8.)
    assert isinstance(vol(2.), float)
    np.testing.assert_allclose(vol(np.array([1., 2., 3.])), [1., 8., 27.])
    assert vol.doubling_constant == 8.
    assert vol.kind is VolumeKind.POWER_LAW


def test_power_law_rejects_bad_radius():
    with pytest.raises(DomainError):
        PowerLawVolume()(0.)
    with pytest.raises(DomainError):
        PowerLawVolume(c=-1.)


def test_piecewise_is_continuous_at_breakpoints():
    vol = PiecewisePowerVolume(c0=1., breakpoints=(1., 10.), exponents=(2., 4., 3.))
    for b in vol.breakpoints:
        assert vol(b * (1 - 1e-12)) == pytest.approx(vol(b * (1 + 1e-12)), rel=1e-9)
    assert vol.tail_exponent == 3.
    assert vol.power_from == 10.


def test_piecewise_doubling_matches_empirical():
    vol = PiecewisePowerVolume(c0=1., breakpoints=(1.,), exponents=(2., 4.))
    assert vol.doubling_constant == pytest.approx(16.)
    assert check_doubling(vol, np.logspace(-3, 3, 301)) == pytest.approx(16.)


def test_piecewise_needs_matching_exponents():
    with pytest.raises(DomainError):
        PiecewisePowerVolume(breakpoints=(1., 2.), exponents=(2., 3.))


def test_volume_profiles_are_monotone(rng):
    profiles = [
        euclidean_volume(3),
        PiecewisePowerVolume(c0=2., breakpoints=(0.5, 4.), exponents=(1., 5., 3.)),
        TableVolume(radii=(1., 2., 4.), values=(1., 6., 40.), bounds=(0.5, 100.), declared_tail=3.),
    ]
    radii = np.sort(rng.uniform(0.5, 50., 200))
    for vol in profiles:
        assert np.all(np.diff(vol(radii)) >= 0)


def test_table_interpolates_log_log():
    vol = TableVolume(radii=(1., 4.), values=(1., 64.))
    assert vol(2.) == pytest.approx(8.)


def test_table_range_errors():
    vol = TableVolume(radii=(1., 2., 4.), values=(1., 8., 64.))
    with pytest.raises(UnsupportedRangeError):
        vol(8.)
    with pytest.raises(UnsupportedRangeError):
        vol(0.5)
    tailed = TableVolume(radii=(1., 2., 4.), values=(1., 8., 64.), declared_tail=3.)
    assert tailed(8.) == pytest.approx(512.)
    assert tailed.power_from == 4.


def test_power_density_ball():
    meas = PowerDensityMeasure(gamma=1., n=3.)
    # 4 pi int_0^r s^(2 + gamma) ds
    assert meas.sigma_ball(2.) == pytest.approx(4 * math.pi * 2 ** 4 / 4)
    assert meas.tail_exponent == 4.
    assert meas.kind is MeasureKind.POWER_DENSITY
    with pytest.raises(DomainError):
        PowerDensityMeasure(gamma=-3., n=3.)


def test_dirac_and_same_as_volume():
    dirac = DiracMeasure()
    np.testing.assert_array_equal(dirac.sigma_ball(np.array([0., 1e-9, 5.])), [0., 1., 1.])
    assert dirac.density(1.) is None
    assert dirac.atom_mass == 1.

    vol = euclidean_volume(3)
    same = SameAsVolumeMeasure(vol)
    assert same.sigma_ball(2.) == pytest.approx(vol(2.))
    assert same.sigma_ball(0.) == 0.
    np.testing.assert_array_equal(same.ball_upper(2., np.array([0., 1.])), [0., vol(1.)])
    np.testing.assert_array_equal(same.ball_lower(0.5, np.array([0., 1.])), [0., vol(1.)])


def test_table_measure():
    meas = TableMeasure(radii=(1., 2.), values=(1., 4.), declared_tail=2.)
    assert meas.sigma_ball(4.) == pytest.approx(16.)
    assert meas.sigma_ball(0.) == 0.


@pytest.mark.parametrize('kwargs', [
    {'alpha': 0.}, {'alpha': 1.}, {'q': 1.}, {'n': 0.}, {'r0': 0.}, {'a': -1.},
])
def test_model_params_rejects(kwargs):
    with pytest.raises(DomainError):
        ModelParams(**kwargs)


def test_model_params_transience_and_gamma():
    ModelParams(n=3., alpha=0.5).require_transient()
    with pytest.raises(RecurrenceError, match='not transient'):
        ModelParams(n=1., alpha=0.5).require_transient()
    with pytest.raises(DomainError):
        ModelParams(alpha=0.5, gamma=-1.).require_gamma()


def test_registries():
    assert get_volume_factory('euclidean')(n=3) == euclidean_volume(3)
    assert get_measure_factory('dirac-at-origin') is DiracMeasure
    with pytest.raises(ValueError, match='not a registered volume'):
        get_volume_factory('hyperbolic')
    with pytest.raises(ValueError, match='not a registered measure'):
        get_measure_factory('lebesgue')


def test_register_factories(monkeypatch):
    monkeypatch.setattr(profiles, '_VOLUME_FACTORIES', dict(profiles._VOLUME_FACTORIES))
    monkeypatch.setattr(profiles, '_MEASURE_FACTORIES', dict(profiles._MEASURE_FACTORIES))

    def cube(scale=1.):
        return PowerLawVolume(c=scale, n=3.)

    register_volume_factory('cube', cube)
    register_measure_factory('point-mass', DiracMeasure)
    assert get_volume_factory('cube')(scale=2.) == PowerLawVolume(c=2., n=3.)
    assert get_measure_factory('point-mass') is DiracMeasure
    # a taken name keeps its first factory
    register_volume_factory('euclidean', cube)
    assert get_volume_factory('euclidean') is euclidean_volume
    config = loads_scenario('schema_version = 1\n[volume]\nkind = "cube"\nparams = { scale = 2.0 }\n'
                            '[measure]\nkind = "point-mass"\n')
    assert config.build_volume() == PowerLawVolume(c=2., n=3.)
    assert isinstance(config.build_measure(), DiracMeasure)


def test_eval_volume_vectorized():
    vol = PowerLawVolume(c=2., n=3.)
    assert eval_volume(vol, 2.) == pytest.approx(16.)
    np.testing.assert_allclose(eval_volume(vol, np.array([1., 2., 4.])), [2., 16., 128.])
