from pathlib import Path
import json
import math
import numpy as np
import pandas as pd
import pytest
from fracpot.cli import main
from fracpot.green import comparison_ratio
from fracpot.profiles import euclidean_volume

SCENARIOS = Path(__file__).parent.parent / 'scenarios'


def _write(tmp_path, text, name='scenario.toml'):
    path = tmp_path / name
    path.write_text('schema_version = 1\n' + text)
    return path


def _run(tmp_path, command, config, *extra, name='out.csv'):
    out = tmp_path / name
    code = main([command, '--config', str(config), '--out', str(out), *extra])
    return code, out


def test_green_table(tmp_path):
    code, out = _run(tmp_path, 'green', SCENARIOS / 'green.toml')
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == '# schema_version=1'
    assert lines[1] == '# version=fracpot 0.1.0'
    assert lines[2].startswith('# config={')
    table = pd.read_csv(out, comment='#')
    assert list(table.columns) == ['d', 'g_riesz', 'g_subord', 'g_volest', 'ratio_lo', 'ratio_hi']
    at_one = table.loc[(table['d'] - 1.).abs() < 1e-12].iloc[0]
    assert at_one['g_riesz'] == pytest.approx(0.05066059, rel=1e-6)
    assert at_one['g_subord'] == pytest.approx(at_one['g_riesz'], rel=1e-6)
    # pure power law: R(d) / G(d) = 3 pi / 4 at every distance in R^3 with alpha = 1/2
    np.testing.assert_allclose(table['ratio_lo'], 3 * math.pi / 4, rtol=1e-5)
    np.testing.assert_allclose(table['ratio_hi'], 3 * math.pi / 4, rtol=1e-5)
    lo, hi = comparison_ratio(euclidean_volume(3), 3, 0.5, table['d'])
    assert table['ratio_lo'].min() <= lo * (1 + 1e-5)
    assert table['ratio_hi'].max() >= hi * (1 - 1e-5)


def test_criteria_henon(tmp_path):
    code, out = _run(tmp_path, 'criteria', SCENARIOS / 'henon.toml')
    assert code == 0
    row = pd.read_csv(out, comment='#').iloc[0]
    assert row['existence_verdict'] == 'exists'
    assert row['henon_threshold'] == pytest.approx(1.5)


def test_criteria_default_scenario(tmp_path):
    # sigma = mu on R^3 with q = 2 above the threshold 3/2
    code, out = _run(tmp_path, 'criteria', _write(tmp_path, ''))
    assert code == 0
    row = pd.read_csv(out, comment='#').iloc[0]
    assert row['existence_verdict'] == 'exists'
    assert row['cond_int1b_status'] == 'finite'
    assert row['gamma'] == 0.


def test_criteria_is_deterministic_across_threads(tmp_path):
    code_1, out_1 = _run(tmp_path, 'criteria', SCENARIOS / 'henon.toml', '--threads', '1', name='one.csv')
    code_8, out_8 = _run(tmp_path, 'criteria', SCENARIOS / 'henon.toml', '--threads', '8', name='eight.csv')
    assert code_1 == code_8 == 0
    assert out_1.read_bytes() == out_8.read_bytes()


def test_gamma_must_match_the_measure(tmp_path):
    config = _write(tmp_path, '[model]\ngamma = 1.0\n'
                              '[measure]\nkind = "power-density"\nparams = { gamma = 0.0, n = 3 }\n')
    code, out = _run(tmp_path, 'criteria', config)
    assert code == 2
    assert not out.exists()
    code, _ = _run(tmp_path, 'solve', _write(tmp_path, '[model]\ngamma = -1.5\n'))
    assert code == 2


def test_criteria_below_threshold(tmp_path):
    config = _write(tmp_path, '[model]\nn = 3\nalpha = 0.5\nq = 1.4\n'
                              '[measure]\nkind = "power-density"\nparams = { gamma = 0.0, n = 3 }\n')
    code, out = _run(tmp_path, 'criteria', config)
    assert code == 0
    assert pd.read_csv(out, comment='#').iloc[0]['existence_verdict'] == 'not-exists'


def test_criteria_dirac(tmp_path):
    code, out = _run(tmp_path, 'criteria', SCENARIOS / 'dirac.toml')
    assert code == 0
    row = pd.read_csv(out, comment='#').iloc[0]
    assert row['cond_int2_verdict'] == 'unbounded-trend'
    assert row['existence_verdict'] == 'not-exists'


def test_recurrent_green_exit_code(tmp_path):
    config = _write(tmp_path, '[model]\nn = 1\nalpha = 0.5\n[volume]\nkind = "euclidean"\nparams = { n = 1 }\n')
    code, out = _run(tmp_path, 'green', config)
    assert code == 3
    assert not out.exists()


def test_depth_guard_exit_code(tmp_path):
    config = _write(tmp_path, '[discrete]\ncount = 1\nparams = { points = 4, diagonal = 2.0 }\n[iterate]\ndepth = 9\n')
    code, _ = _run(tmp_path, 'iterate', config)
    assert code == 4


def test_config_error_exit_code(tmp_path):
    config = _write(tmp_path, '[picard]\nradius = 2.0\n')
    code, _ = _run(tmp_path, 'solve', config)
    assert code == 2
    code, _ = _run(tmp_path, 'solve', tmp_path / 'missing.toml')
    assert code == 2


def test_bad_threads(tmp_path):
    code, _ = _run(tmp_path, 'kernel-check', SCENARIOS / 'kernel.toml', '--threads', '0')
    assert code == 2


def test_kernel_check_is_deterministic_across_threads(tmp_path):
    config = _write(tmp_path, '[discrete]\ngenerator = "riesz"\nseed = 3\ncount = 3\nparams = { points = 6 }\n')
    code_1, out_1 = _run(tmp_path, 'kernel-check', config, '--threads', '1', name='one.csv')
    code_8, out_8 = _run(tmp_path, 'kernel-check', config, '--threads', '8', name='eight.csv')
    assert code_1 == code_8 == 0
    assert out_1.read_bytes() == out_8.read_bytes()
    table = pd.read_csv(out_1, comment='#')
    assert list(table['seed']) == [3, 4, 5]
    assert table['b_le_kappa'].all()
    assert table['ptolemy_holds'].all()


def test_kernel_check_json(tmp_path):
    code, out = _run(tmp_path, 'kernel-check', SCENARIOS / 'kernel.toml', '--seed', '5', name='out.json')
    assert code == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {'schema_version', 'config', 'version', 'records'}
    assert payload['config']['discrete']['seed'] == 5
    assert len(payload['records']) == 20
    assert payload['records'][0]['seed'] == 5


def test_iterate_rows(tmp_path):
    code, out = _run(tmp_path, 'iterate', SCENARIOS / 'iterate.toml')
    assert code == 0
    table = pd.read_csv(out, comment='#')
    assert len(table) == 5 * 6 * 6
    assert table.loc[table['k'] == 2, 'c_qk'].iloc[0] == pytest.approx(63.)
    assert table['est_it'].all()
    assert table['corollary'].all()


def test_solve_without_forcing(tmp_path):
    config = _write(tmp_path, '[model]\nq = 2.0\n[picard]\nradii = [1.0]\nh = 0.25\namplitude = 0.0\n')
    code, out = _run(tmp_path, 'solve', config)
    assert code == 0
    row = pd.read_csv(out, comment='#').iloc[0]
    assert row['converged']
    assert row['v_max'] == 0.


def test_solve_is_deterministic_across_threads(tmp_path):
    config = _write(tmp_path, '[model]\nq = 2.0\n[picard]\nradii = [1.0, 2.0]\nh = 0.25\nequivalence = false\n')
    code_1, out_1 = _run(tmp_path, 'solve', config, '--threads', '1', name='one.csv')
    code_8, out_8 = _run(tmp_path, 'solve', config, '--threads', '8', name='eight.csv')
    assert code_1 == code_8 == 0
    assert out_1.read_bytes() == out_8.read_bytes()


def test_solve_with_equivalence_check(tmp_path):
    config = _write(tmp_path, '[model]\nq = 2.0\n[picard]\nradii = [1.0, 2.0]\nh = 0.25\n')
    code, out = _run(tmp_path, 'solve', config, '--format', 'json', name='out.json')
    assert code == 0
    records = json.loads(out.read_text())['records']
    assert [r['radius'] for r in records] == [1., 2.]
    assert records[0]['trend_growth'] is None
    assert records[-1]['equiv_agree'] is True
