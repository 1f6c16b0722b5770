import math
import numpy as np
import pytest
from fracpot.config import Config
from fracpot.errors import ConfigError, CostGuardError, DomainError, RecurrenceError
from fracpot.green import riesz_constant
from fracpot.iterate.grid import (
    ForcingSpec,
    build_grid_problem,
    cell_diagonal,
    kernel_cache_name,
    load_kernel_cache,
    save_kernel_cache,
    stencil,
)
from fracpot.profiles import DiracMeasure, unit_ball_volume


@pytest.fixture(scope='module')
def small_problem():
    return build_grid_problem(3, 0.5, 2., radius=1., h=0.25)


def test_cell_diagonal_n3_half():
    h = 0.25
    r_h = h / unit_ball_volume(3) ** (1 / 3)
    assert cell_diagonal(3, 0.5, h) == pytest.approx(3 * riesz_constant(3, 0.5) / r_h ** 2, rel=1e-14)


def test_stencil_layout():
    values = stencil(3, 0.5, 0.5, 4)
    assert values.shape == (8, 8, 8)
    assert values[0, 0, 0] == cell_diagonal(3, 0.5, 0.5)
    assert values[1, 0, 0] == pytest.approx(riesz_constant(3, 0.5) / 0.25)
    # index 7 is offset -1
    assert values[7, 0, 0] == values[1, 0, 0]


def test_cell_count_follows_ball_volume():
    problem = build_grid_problem(3, 0.5, 2., radius=2., h=0.25)
    expected = unit_ball_volume(3) * (2. / 0.25) ** 3
    assert problem.cells == pytest.approx(expected, rel=0.1)
    assert np.all(problem.distances < 2.)


def test_cell_guard():
    with pytest.raises(CostGuardError, match='raise h or lower R_max'):
        build_grid_problem(3, 0.5, 2., radius=8., h=0.125)
    build_grid_problem(3, 0.5, 2., radius=2., h=0.25)


@pytest.mark.parametrize('kwargs, error', [
    ({'n': 1}, RecurrenceError),
    ({'n': 2.5}, DomainError),
    ({'q': 1.}, DomainError),
    ({'h': 2.}, DomainError),
    ({'eta_spec': ForcingSpec(1., 1.)}, DomainError),
])
def test_build_rejects(kwargs, error):
    args = {'n': 3, 'alpha': 0.5, 'q': 2., 'radius': 1., 'h': 0.25}
    args.update(kwargs)
    with pytest.raises(error):
        build_grid_problem(**args)


def test_forcing_spec():
    with pytest.raises(DomainError):
        ForcingSpec(-1., 0.25)
    with pytest.raises(DomainError):
        ForcingSpec(1., 0.)
    assert ForcingSpec(1., 0.25).scaled(0.5).amplitude == 0.5


def test_fft_matches_dense_kernel(small_problem, rng):
    f = rng.uniform(0., 1., small_problem.cells)
    cells, _ = small_problem.apply(f)
    dense = small_problem.kernel_matrix() @ (f * small_problem.theta * small_problem.cell_volume)
    np.testing.assert_allclose(cells, dense, rtol=1e-10)


def test_dense_kernel_is_symmetric(small_problem):
    matrix = small_problem.kernel_matrix()
    np.testing.assert_array_equal(matrix, matrix.T)
    assert np.all(matrix > 0)


def test_dense_kernel_guard():
    problem = build_grid_problem(3, 0.5, 2., radius=2., h=0.125)
    with pytest.raises(CostGuardError):
        problem.kernel_matrix()


def test_power_density_theta():
    problem = build_grid_problem(3, 0.5, 2., gamma=1., radius=1., h=0.25)
    np.testing.assert_allclose(problem.theta, problem.distances)


def test_far_field_is_a_monopole(small_problem):
    f = np.ones(small_problem.cells)
    mass = small_problem.cells * small_problem.cell_volume
    far = small_problem.potential_at([[50., 0., 0.]], f)
    assert far[0] == pytest.approx(small_problem.green(50.) * mass, rel=5e-3)


def test_dirac_atom():
    problem = build_grid_problem(3, 0.5, 2., radius=1., h=0.25, measure=DiracMeasure())
    assert problem.atom_mass == 1.
    assert not np.any(problem.theta)
    cells, origin = problem.apply(np.ones(problem.cells), 2.)
    np.testing.assert_allclose(cells, 2 * problem.origin_green)
    assert math.isinf(origin)
    cells, origin = problem.apply(np.ones(problem.cells), 0.)
    assert not np.any(cells) and origin == 0.


def test_truncated_green(small_problem):
    m = small_problem.truncated_green(1.)
    assert m.max() <= 1.
    np.testing.assert_array_equal(m, np.minimum(small_problem.origin_green, 1.))
    with pytest.raises(DomainError):
        small_problem.truncated_green(0.)


def test_companion(small_problem):
    half = small_problem.companion()
    assert half.radius == 0.5
    assert half.h == small_problem.h
    assert half.cells < small_problem.cells


def test_records(small_problem):
    rows = small_problem.as_records(v=np.zeros(small_problem.cells))
    assert len(rows) == small_problem.cells
    assert set(rows[0]) == {'x0', 'x1', 'x2', 'theta', 'eta', 'v'}


def test_kernel_cache_round_trip(tmp_path):
    first = build_grid_problem(3, 0.5, 2., radius=1., h=0.25, cache_dir=tmp_path)
    path = tmp_path / kernel_cache_name(3, 0.5, 0.25, first.box)
    assert path.exists()
    assert path.read_bytes()[:4] == Config.KERNEL_CACHE_MAGIC
    second = build_grid_problem(3, 0.5, 2., radius=1., h=0.25, cache_dir=tmp_path)
    np.testing.assert_array_equal(first.spectrum, second.spectrum)


def test_kernel_cache_rebuilds_when_corrupt(tmp_path):
    problem = build_grid_problem(3, 0.5, 2., radius=1., h=0.25, cache_dir=tmp_path)
    path = tmp_path / kernel_cache_name(3, 0.5, 0.25, problem.box)
    path.write_bytes(b'garbage bytes, not a kernel')
    with pytest.warns(UserWarning, match='rebuilding'):
        rebuilt = build_grid_problem(3, 0.5, 2., radius=1., h=0.25, cache_dir=tmp_path)
    np.testing.assert_allclose(rebuilt.spectrum, problem.spectrum)
    assert path.read_bytes()[:4] == Config.KERNEL_CACHE_MAGIC


def test_kernel_cache_shape_mismatch(tmp_path):
    path = tmp_path / 'k.fpk'
    save_kernel_cache(path, np.ones((4, 4)))
    assert load_kernel_cache(path, (4, 4)).shape == (4, 4)
    with pytest.raises(ConfigError):
        load_kernel_cache(path, (8, 8))
