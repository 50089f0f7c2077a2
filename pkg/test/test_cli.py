import os

import pytest

from main import main
from qftca.errors import ConfigError
from qftca.eventlog import parse_record
from scenario import kinematics_point, parse_scenario

HERE = os.path.dirname(os.path.abspath(__file__))
SCENARIOS = os.path.join(os.path.dirname(HERE), 'example', 'scenarios')
GOLDEN = os.path.join(HERE, 'golden')


def run_cli(tmp_path, *argv):
    out = tmp_path / 'out.txt'
    code = main(list(argv) + ['--out', str(out), '--log-dir', str(tmp_path / 'log'), '--quiet'])
    return code, out.read_text() if out.exists() else ''


def records(text, kind):
    return [f for f in map(parse_record, text.splitlines()) if f['kind'] == kind]


def test_enumerate_golden(tmp_path):
    code, text = run_cli(tmp_path, 'enumerate', '--in', 'e-', 'e+')
    assert code == 0
    with open(os.path.join(GOLDEN, 'enumerate_bhabha.txt')) as f:
        assert text == f.read()


def test_enumerate_records(tmp_path):
    code, text = run_cli(tmp_path, 'enumerate', '--in', 'e-', 'e-', '--format', 'records')
    assert code == 0
    assert [(c['label'], c['sign']) for c in records(text, 'channel')] == [('C3[e-,e-]', '1'), ('C5[e-,e-]', '-1')]
    assert len(records(text, 'shape')) == 5


def test_exit_codes(tmp_path):
    assert run_cli(tmp_path, 'enumerate', '--in', 'gamma', 'gamma')[0] == 3
    assert run_cli(tmp_path, 'enumerate', '--in', 'quark', 'e+')[0] == 2
    assert run_cli(tmp_path, 'enumerate')[0] == 2
    assert run_cli(tmp_path, 'scatter', '--scenario', str(tmp_path / 'missing.txt'))[0] == 2
    assert run_cli(tmp_path, 'amplitude', '--sqrt-s', '0.5')[0] == 3


def test_amplitude_oracle(tmp_path):
    code, text = run_cli(tmp_path, 'amplitude', '--massless', '--format', 'records')
    assert code == 0
    assert len(records(text, 'amplitude')) == 16
    (average,) = records(text, 'spin_average')
    assert abs(float(average['m2_over_e4']) - 9.0) < 1e-8
    assert float(average['delta']) < 1e-9


def test_scatter(tmp_path):
    code, text = run_cli(tmp_path, 'scatter', '--scenario', os.path.join(SCENARIOS, 'bhabha.txt'),
                         '--format', 'records')
    assert code == 0
    (interaction,) = records(text, 'interaction')
    assert interaction['out'] == 'e-,e+'
    assert interaction['pw1'] == '0:0'
    (audit,) = records(text, 'audit')
    assert (audit['passed'], audit['failed']) == ('1', '0')
    assert len(records(text, 'path')) == int(interaction['paths'])


def test_montecarlo_audits(tmp_path):
    code, text = run_cli(tmp_path, 'montecarlo', '--scenario', os.path.join(SCENARIOS, 'entangled.txt'),
                         '--trials', '60')
    assert code == 0
    assert 'audit conservation passed=60 failed=0' in text
    assert 'audit anticorrelation passed=60 failed=0' in text
    assert 'chisquare out ' in text


def test_evolve_save_and_resume(tmp_path):
    saved = str(tmp_path / 'state.pkl')
    code, text = run_cli(tmp_path, 'evolve', '--scenario', os.path.join(SCENARIOS, 'evolve.txt'),
                         '--max-steps', '3', '--save', saved, '--format', 'records')
    assert code == 0
    assert [s['step'] for s in records(text, 'step')] == ['1', '2', '3']
    code, text = run_cli(tmp_path, 'evolve', '--resume', saved, '--max-steps', '2', '--format', 'records')
    assert code == 0
    assert [s['step'] for s in records(text, 'step')] == ['4', '5']


def test_scenario_parsing():
    scenario = parse_scenario('[config]\ndims = 4 4 4\nseed = 3\n\n[object]\ntype = gamma\n'
                              'p = 1 0 0\nspin = -1\nposition = 1 1 1\n[run]\nmode = evolve\n')
    assert scenario.config.dims == (4, 4, 4)
    assert scenario.config.seed == 3
    assert scenario.mode == 'evolve'
    (q,) = scenario.build_objects()
    assert q.paths[0].elements[0].p.e == 1.0
    with pytest.raises(ConfigError):
        parse_scenario('[detector]\nx = 1\n')
    with pytest.raises(ConfigError):
        parse_scenario('[config]\ncolour = red\n')
    with pytest.raises(ConfigError):
        parse_scenario('[config]\ndims = 4 4 4\n[object]\ntype = e-\np = 0 0 1\nposition = 4 0 0\n').build_objects()
    sqrt_s, theta, _, massless = kinematics_point(None, theta=180.0)
    assert (sqrt_s, massless) == (10.0, False)
    assert abs(theta - 3.141592653589793) < 1e-15
