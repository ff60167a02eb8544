import json
import os

import numpy as np
import pandas as pd
import pytest

import cli
import config
import manifest

SMALL = ['--grid', '64', '--side', '0.16']


def _run(*argv):
    return cli.main(list(argv))


def _manifest(out):
    return pd.read_csv(out / manifest.MANIFEST_NAME)


# ========== render ==========

def test_render_writes_panels_manifest_and_config(tmp_path):
    code = _run('render', *SMALL, '--target', 'two-point', '--mode', 'conventional',
                '--mode', 'sql-incoherent:2', '--output-dir', str(tmp_path))
    assert code == 0
    assert (tmp_path / '01_conventional-coherent.pgm').exists()
    assert (tmp_path / '02_sql-incoherent_N2.pgm').exists()
    rows = _manifest(tmp_path)
    assert list(rows.columns) == manifest.REQUIRED_HEADERS
    assert list(rows['engine']) == ['conventional-coherent', 'sql-incoherent:2']
    assert list(rows['N']) == [1, 2]
    assert rows['runtime_s'].ge(0).all()
    payload = json.loads((tmp_path / manifest.RUN_CONFIG_NAME).read_text())
    assert payload['command'] == 'render'
    assert payload['config']['grid'] == 64
    assert payload['config']['modes'] == ['conventional', 'sql-incoherent:2']


def test_render_exact_adds_comparison_panel(tmp_path):
    code = _run('render', '--grid', '32', '--side', '0.08', '--target', 'point', '--mode', 'sql:2',
                '--exact', '--output-dir', str(tmp_path))
    assert code == 0
    rows = _manifest(tmp_path)
    assert list(rows['engine']) == ['sql-coherent:2', 'sql-coherent-exact:2']
    assert np.isnan(rows['rms_vs_approx'].iloc[0])
    assert rows['rms_vs_approx'].iloc[1] < config.EXACT_AGREEMENT_RMS


def test_render_exact_only_mode(tmp_path):
    code = _run('render', '--grid', '32', '--side', '0.08', '--target', 'point',
                '--mode', 'sql-coherent-exact:2', '--output-dir', str(tmp_path))
    assert code == 0
    rows = _manifest(tmp_path)
    assert list(rows['engine']) == ['sql-coherent-exact:2']
    assert rows['rms_vs_approx'].iloc[0] < config.EXACT_AGREEMENT_RMS


def test_repeated_render_replaces_manifest(tmp_path):
    for _ in range(2):
        assert _run('render', *SMALL, '--mode', 'conventional', '--output-dir', str(tmp_path)) == 0
    assert list(_manifest(tmp_path)['engine']) == ['conventional-coherent']


def test_two_bar_sharpness_grows_along_panel_order(tmp_path):
    code = _run('render', '--target', 'two-bar', '--mode', 'conventional', '--mode', 'sql:5',
                '--mode', 'sql:10', '--mode', 'heisenberg:5', '--output-dir', str(tmp_path))
    assert code == 0
    sharp = list(_manifest(tmp_path)['sharpness'])
    assert all(a < b for a, b in zip(sharp, sharp[1:]))


def test_render_from_input_pgm_with_scale_bar(tmp_path):
    obj = tmp_path / 'object.pgm'
    raster = np.zeros((64, 64), dtype=np.uint8)
    raster[30:34, 20:44] = 255
    obj.write_bytes(b"P5\n64 64\n255\n" + raster.tobytes())
    out = tmp_path / 'out'
    code = _run('render', *SMALL, '--input', str(obj), '--mode', 'conventional-incoherent',
                '--scale-bar', '--output-dir', str(out))
    assert code == 0
    assert (out / '01_conventional-incoherent.pgm').read_bytes().startswith(b"P5\n64 64\n65535\n")


def test_scale_bar_is_burned_into_a_copy():
    values = np.zeros((64, 64))
    values[32, 32] = 0.5
    barred = cli.with_scale_bar(values, 10.0)
    assert values.max() == 0.5
    assert barred[2, 52:62].tolist() == [0.5] * 10
    assert np.count_nonzero(barred) == 11


def test_figure_preset_renders_caption_panels(tmp_path):
    code = _run('figure', 'fig2', '--grid', '128', '--side', '0.4', '--output-dir', str(tmp_path))
    assert code == 0
    rows = _manifest(tmp_path)
    assert list(rows['engine']) == ['conventional-incoherent', 'coincidence-incoherent:5',
                                    'sql-incoherent:5', 'sql-incoherent:10']
    assert len(list(tmp_path.glob('*.pgm'))) == 4


# ========== psf / scaling / sweep ==========

def test_psf_profiles_and_summary(tmp_path):
    assert _run('psf', '--N', '4', '--output-dir', str(tmp_path)) == 0
    profile = pd.read_csv(tmp_path / 'psf_profile.csv')
    assert list(profile.columns) == ['r', 'somb', 'somb_2N', 'heisenberg_somb']
    assert profile['somb'].iloc[0] == pytest.approx(1.0)
    summary = pd.read_csv(tmp_path / 'psf_summary.csv')
    assert summary['N'].iloc[0] == 4
    assert summary['ratio'].iloc[0] == pytest.approx(0.34, abs=0.01)
    assert summary['heisenberg_first_zero'].iloc[0] == pytest.approx(summary['x_R'].iloc[0] / 4, rel=1e-3)


def test_scaling_table_and_fits(tmp_path):
    code = _run('scaling', '--samples', '5000', '--output-dir', str(tmp_path))
    table = pd.read_csv(tmp_path / 'scaling.csv')
    fits = pd.read_csv(tmp_path / 'scaling_fits.csv').set_index('quantity')
    assert set(config.SQL_NS) | set(config.MC_NS) <= set(table['N'])
    assert bool(fits.loc['sql_radius', 'within'])
    assert bool(fits.loc['heisenberg_zero', 'within'])
    assert code == (0 if fits['within'].all() else 3)


def test_scaling_computes_each_column_for_its_own_photon_numbers(tmp_path):
    code = _run('scaling', '--samples', '2000', '--sql-ns', '4,8,16', '--heisenberg-ns', '1,2,3',
                '--mc-ns', '4,16,64', '--output-dir', str(tmp_path))
    table = pd.read_csv(tmp_path / 'scaling.csv').set_index('N')
    assert list(table.index) == [1, 2, 3, 4, 8, 16, 64]
    assert table['mc_spread'].notna().sum() == 3
    assert np.isnan(table.loc[1, 'mc_spread']) and np.isnan(table.loc[8, 'mc_spread'])
    assert np.isnan(table.loc[64, 'x_R_N']) and np.isnan(table.loc[4, 'heisenberg_first_zero'])
    assert table.loc[2, 'heisenberg_first_zero'] == pytest.approx(table.loc[1, 'heisenberg_first_zero'] / 2)
    fits = pd.read_csv(tmp_path / 'scaling_fits.csv')
    assert len(fits) == 3
    assert code in (0, 3)


def test_scaling_rejects_bad_photon_lists(tmp_path):
    assert _run('scaling', '--mc-ns', '4,x', '--output-dir', str(tmp_path)) == 2
    assert _run('scaling', '--sql-ns', '0,4,8', '--output-dir', str(tmp_path)) == 3


def test_sweep_writes_dip_table(tmp_path):
    code = _run('sweep', '--grid', '128', '--side', '0.4', '--bandwidths', '300,600',
                '--output-dir', str(tmp_path))
    assert code == 0
    table = pd.read_csv(tmp_path / 'dip_sweep.csv')
    assert list(table['delta_k_t']) == [300.0, 600.0]


# ========== configuration ==========

def test_config_file_and_flag_precedence(tmp_path):
    settings = tmp_path / 'run.cfg'
    settings.write_text("# small run\ngrid = 64\nside = 0.16\ntarget = point\nmodes = conventional, sql:2\n")
    out = tmp_path / 'out'
    assert _run('render', '--config', str(settings), '--grid', '32', '--side', '0.08',
                '--output-dir', str(out)) == 0
    resolved = json.loads((out / manifest.RUN_CONFIG_NAME).read_text())['config']
    assert resolved['grid'] == 32
    assert resolved['target'] == 'point'
    assert resolved['modes'] == ['conventional', 'sql:2']


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(config.OUTPUT_DIR_ENV, str(tmp_path))
    assert _run('psf', '--N', '2') == 0
    assert (tmp_path / 'psf_summary.csv').exists()


def test_unknown_config_key_is_rejected(tmp_path):
    settings = tmp_path / 'bad.cfg'
    settings.write_text("colour = blue\n")
    assert _run('psf', '--config', str(settings), '--output-dir', str(tmp_path)) == 3


# ========== exit codes ==========

def test_usage_errors_exit_2():
    assert _run() == 2
    assert _run('render', '--mode') == 2
    assert _run('render', '--grid', 'many') == 2


def test_bad_mode_exits_3(tmp_path):
    assert _run('render', *SMALL, '--mode', 'sql', '--output-dir', str(tmp_path)) == 3


def test_regime_violation_exits_3(tmp_path):
    code = _run('render', *SMALL, '--D-o', '5', '--target', 'point', '--mode', 'sql:2',
                '--output-dir', str(tmp_path))
    assert code == 3


def test_coarse_grid_exits_3(tmp_path):
    assert _run('render', '--grid', '64', '--side', '0.8', '--mode', 'sql:2',
                '--output-dir', str(tmp_path)) == 3


def test_missing_input_exits_4(tmp_path):
    code = _run('render', *SMALL, '--input', str(tmp_path / 'absent.pgm'), '--output-dir', str(tmp_path))
    assert code == 4


def test_unwritable_output_exits_4(tmp_path):
    blocker = tmp_path / 'file'
    blocker.write_text('x')
    code = _run('psf', '--output-dir', os.path.join(str(blocker), 'sub'))
    assert code == 4


# ========== target script ==========

def test_make_targets_script_writes_pgms(tmp_path):
    from scripts import make_targets
    assert make_targets.main(str(tmp_path), 64, 0.8, names=['point', 'two-bar']) == 0
    assert (tmp_path / 'point.pgm').read_bytes().startswith(b"P5\n64 64\n65535\n")
    assert (tmp_path / 'two-bar.pgm').exists()
    assert make_targets.main(str(tmp_path), 8, 0.8, names=['point']) == 3
