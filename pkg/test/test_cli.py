import json
import os
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from cli import ExperimentConfig, load_config, run, write_report
from sselab_utilities import ConfigError, ReportError

CLI = os.path.join(os.path.dirname(os.path.realpath(__file__)), '..', 'scripts', 'cli.py')

SMALL = {'domain': {'n': 16},
         'time': {'T': 1.0, 'steps': 32},
         'mc': {'paths': 4},
         'ensemble': {'members': 2, 'modes': 2}}


def write_config(directory, blocks, name = 'config.json'):
    path = str(directory/name)
    with open(path, 'w') as file:
        json.dump(blocks, file)
    return path


def small_config(tmp_path, out = 'out', changes = None):
    blocks = json.loads(json.dumps(SMALL))
    for (block, key), value in (changes or {}).items():
        blocks.setdefault(block, {})[key] = value
    blocks.setdefault('output', {})['directory'] = str(tmp_path/out)
    return load_config(write_config(tmp_path, blocks, out + '.json'))


def test_minimal_config_defaults(tmp_path):
    config = load_config(write_config(tmp_path, {'domain': {}, 'time': {}}))
    assert isinstance(config, ExperimentConfig)
    assert config.domain['n'] == 64
    assert config.mc['paths'] == 500
    assert config.carleman['tau'] == 'auto'
    assert config.coefficients['a3'] == 'zero'


def test_two_dimensional_defaults(tmp_path):
    config = load_config(write_config(tmp_path, {'domain': {'dim': 2, 'n': 8}, 'time': {}}))
    assert config.domain['lo'] == [0.0, 0.0]
    assert config.domain['x0'] == [-0.5, -0.5]


@pytest.mark.parametrize('blocks, field', [
    ({'domain': {'size': 3}, 'time': {}}, 'domain.size'),
    ({'domain': {}, 'time': {}, 'mc': {'paths': -4}}, 'mc.paths'),
    ({'domain': {}, 'time': {}, 'coefficients': {'a3': 'wave'}}, 'coefficients.a3'),
    ({'domain': {}, 'time': {}, 'carleman': {'s': []}}, 'carleman.s'),
    ({'domain': {}, 'time': {}, 'extra': {}}, 'extra'),
    ({'domain': {}}, 'time'),
])
def test_bad_fields_are_named(tmp_path, blocks, field):
    with pytest.raises(ConfigError, match = field):
        load_config(write_config(tmp_path, blocks))


def test_json_error_line(tmp_path):
    path = str(tmp_path/'broken.json')
    with open(path, 'w') as file:
        file.write('{\n  "domain": {,\n  "time": {}\n}\n')
    with pytest.raises(ConfigError, match = 'line 2'):
        load_config(path)


def test_weight_caps_rejected(tmp_path):
    blocks = {'domain': {}, 'time': {}, 'carleman': {'lambda': [60.0]}}
    with pytest.raises(ConfigError, match = 'carleman'):
        load_config(write_config(tmp_path, blocks))


def test_fingerprint_ignores_directory(tmp_path):
    a = small_config(tmp_path, out = 'a')
    b = small_config(tmp_path, out = 'b')
    c = small_config(tmp_path, out = 'c', changes = {('mc', 'base_seed'): 1})
    assert a.fingerprint == b.fingerprint != c.fingerprint
    assert len(a.fingerprint) == 16


def test_write_report(tmp_path):
    with pytest.raises(ReportError):
        write_report(pd.DataFrame({'x': [1.0, np.nan]}), str(tmp_path/'nan.csv'), 'f')

    empty = str(tmp_path/'empty.csv')
    write_report(pd.DataFrame(columns = ['a', 'b']), empty, 'f')
    with open(empty) as file:
        assert file.read().strip() == 'a,b,fingerprint,version'

    full = str(tmp_path/'full.csv')
    write_report(pd.DataFrame({'x': [0.1]}), full, 'abc')
    frame = pd.read_csv(full)
    assert frame.fingerprint[0] == 'abc'
    assert frame.x[0] == 0.1


def test_carleman_scan_reproducible(tmp_path):
    first = small_config(tmp_path, out = 'first')
    second = small_config(tmp_path, out = 'second')
    threaded = small_config(tmp_path, out = 'threaded')

    assert run('carleman-scan', first) == 0
    assert run('carleman-scan', second) == 0
    assert run('carleman-scan', threaded, threads = 2) == 0

    read = lambda name: open(str(tmp_path/name/'carleman-scan.csv'), 'rb').read()
    assert read('first') == read('second') == read('threaded')
    assert len(pd.read_csv(str(tmp_path/'first'/'carleman-scan.csv'))) == 6


def test_verify_identity(tmp_path):
    config = small_config(tmp_path)
    assert run('verify-identity', config) == 0
    frame = pd.read_csv(str(tmp_path/'out'/'verify-identity.csv'))
    assert set(frame.check) == {'multiplier', 'weighted_special', 'weighted_general'}
    assert not os.path.exists(str(tmp_path/'out'/'verify-identity.failures.csv'))


def test_weight_bounds_flags_small_tau(tmp_path):
    config = small_config(tmp_path, changes = {('carleman', 'tau'): 0.1})
    assert run('weight-bounds', config) == 2
    failures = pd.read_csv(str(tmp_path/'out'/'weight-bounds.failures.csv'))
    assert 'lt_bounded' in set(failures.check)


def test_simulate_free_flow(tmp_path):
    config = small_config(tmp_path, changes = {('output', 'emit_trajectories'): True})
    assert run('simulate', config) == 0
    frame = pd.read_csv(str(tmp_path/'out'/'simulate.csv'))
    assert np.allclose(frame.l2_mean, frame.l2_mean[0], rtol = 1e-10)
    assert os.path.exists(str(tmp_path/'out'/'simulate.trajectory.csv'))


def test_unknown_subcommand_exit_code(tmp_path):
    result = subprocess.run([sys.executable, CLI, 'not-a-command'], capture_output = True)
    assert result.returncode == 64
    assert b'unknown subcommand' in result.stderr


@pytest.mark.parametrize('subcommand, columns', [
    ('observability', ['label', 'numerator', 'denominator', 'quotient', 'se', 'status']),
    ('hidden-reg', ['label', 'numerator', 'denominator', 'quotient', 'se', 'status']),
    ('energy-check', ['K', 't', 's', 'sources']),
    ('ucp-scan', ['member', 'energy', 'se', 'energy_all_boundary']),
    ('stability-scan', ['pair', 'ratio', 'trace_energy']),
])
def test_estimate_subcommands(tmp_path, subcommand, columns):
    config = small_config(tmp_path)
    assert run(subcommand, config) == 0
    frame = pd.read_csv(str(tmp_path/'out'/(subcommand + '.csv')))
    assert list(frame.columns) == columns + ['fingerprint', 'version']
    assert len(frame) >= 1
    assert not os.path.exists(str(tmp_path/'out'/(subcommand + '.failures.csv')))


def reconstruct_config(tmp_path, alpha):
    return small_config(tmp_path, changes = {('domain', 'n'): 32,
                                             ('time', 'steps'): 128,
                                             ('inverse', 'alpha'): alpha,
                                             ('ensemble', 'members'): 1,
                                             ('ensemble', 'modes'): 3})


def test_reconstruct_within_tolerance(tmp_path):
    assert run('reconstruct', reconstruct_config(tmp_path, 1e-8)) == 0
    summary = pd.read_csv(str(tmp_path/'out'/'reconstruct.summary.csv'))
    assert summary.relative_error[0] <= 0.05
    assert len(pd.read_csv(str(tmp_path/'out'/'reconstruct.csv'))) >= 2


def test_reconstruct_flags_large_error(tmp_path):
    assert run('reconstruct', reconstruct_config(tmp_path, 100.0)) == 2
    summary = pd.read_csv(str(tmp_path/'out'/'reconstruct.summary.csv'))
    assert summary.relative_error[0] > 0.05
    failures = pd.read_csv(str(tmp_path/'out'/'reconstruct.failures.csv'))
    assert set(failures.check) == {'relative_error'}
