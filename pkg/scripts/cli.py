#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   cli.py: configuration-driven experiment runner.
#-------------------------------------------------------------------------------

#-------------------------------------------------------------------------------
#   This file is part of sselab.
#
#   sselab is free software: you can redistribute it and/or modify
#   it under the terms of the GNU General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#   (at your option) any later version.
#
#   sselab is distributed in the hope that it will be useful,
#   but WITHOUT ANY WARRANTY; without even the implied warranty of
#   MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#   GNU General Public License for more details.
#
#   You should have received a copy of the GNU General Public License
#   along with sselab.  If not, see <https://www.gnu.org/licenses/>.
#-------------------------------------------------------------------------------

import os
import sys
import copy
import json
import argparse
import logging as log

from argparse import RawTextHelpFormatter
from dataclasses import dataclass, asdict
from datetime import date
from textwrap import wrap

import numpy as np
import pandas as pd

from sselab_utilities import *
from geometry import Domain, build_mesh
from weights import carleman_params, check_weight_bounds, default_t_grid, eval_weights
from sde_sim import (brownian_path, build_coefficients, dirichlet_modes, dump_trajectory,
                     mc_expectation, mode_ensemble, norms, parse_profile, simulate_forward,
                     weak_form_residual)
from identities import (MultiplierField, general_inputs, identity_c_matrix,
                        manufactured_field, multiplier_identity_residual,
                        carleman_identity_residual, specialized_inputs)
from estimates import (QUOTIENT_COLUMNS, carleman_scan, carleman_table, energy_check,
                       hidden_regularity_quotient, observability_quotient, ucp_scan)
from inverse import (NonlinearityPair, TraceMap, adjoint_test, gradient_check,
                     linear_difference_energy, load_record, reconstruct,
                     record_observation, save_record, stability_scan)

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

#-------------------------------------------------------------------------------
#   Configuration
#-------------------------------------------------------------------------------

BLOCKS = ('domain', 'time', 'mc', 'carleman', 'coefficients', 'nonlinearity',
          'inverse', 'ensemble', 'output')

# identity checks run on a mild weight so that theta stays representable
IDENTITY_SCALES = {'s': 1e-3, 'lambda': 0.2, 'tau': 0.1, 'offset': 0.2}

@dataclass
class ExperimentConfig:
    domain: dict
    time: dict
    mc: dict
    carleman: dict
    coefficients: dict
    nonlinearity: dict
    inverse: dict
    ensemble: dict
    output: dict

    def as_dict(self):
        return asdict(self)

    @property
    def fingerprint(self):
        '''Hash of everything except the output directory.'''
        config = self.as_dict()
        config['output'] = {k: v for k, v in config['output'].items() if k != 'directory'}
        return fingerprint(config)

def _field_error(name, message):
    return ConfigError('[cli] Error: %s: %s' % (name, message))

def _lookup(config, name):
    block, key = name.split('.')
    return getattr(config, block)[key]

def _integer(config, name, low):
    value = _lookup(config, name)
    if isinstance(value, bool) or not isinstance(value, int) or value < low:
        raise _field_error(name, 'expected an integer >= %d, got %r' % (low, value))

def _is_positive(value):
    return not isinstance(value, bool) and isinstance(value, (int, float)) and value > 0

def _positive(config, name):
    value = _lookup(config, name)
    if not _is_positive(value):
        raise _field_error(name, 'expected a positive number, got %r' % (value,))

def _vector(config, name, dim):
    value = _lookup(config, name)
    if not isinstance(value, list) or len(value) != dim or \
       not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise _field_error(name, 'expected a list of %d numbers' % dim)

def validate(config, profiles):
    '''Checks every field; raises ConfigError naming the first bad one.'''
    dim = config.domain['dim']
    if dim not in (1, 2):
        raise _field_error('domain.dim', 'must be 1 or 2')
    for key in ('lo', 'hi', 'x0'):
        _vector(config, 'domain.' + key, dim)
    n = config.domain['n']
    if isinstance(n, list):
        if len(n) != dim or not all(isinstance(k, int) and not isinstance(k, bool)
                                    and k >= 4 for k in n):
            raise _field_error('domain.n', 'expected %d integers >= 4' % dim)
    else:
        _integer(config, 'domain.n', 4)

    _positive(config, 'time.T')
    _integer(config, 'time.steps', 1)
    _integer(config, 'mc.paths', 2)
    _integer(config, 'mc.base_seed', 0)

    for key in ('s', 'lambda'):
        values = config.carleman[key]
        if not isinstance(values, list) or not values or \
           not all(_is_positive(v) for v in values):
            raise _field_error('carleman.' + key, 'expected a non-empty list of '
                               'positive numbers')
    if config.carleman['tau'] != 'auto':
        _positive(config, 'carleman.tau')

    for block, keys in (('coefficients', ('b1', 'a2', 'a3', 'f', 'g')),
                        ('nonlinearity', ('F1', 'F2'))):
        for key in keys:
            text = getattr(config, block)[key]
            if not isinstance(text, str) or parse_profile(text)[0] not in profiles[key]:
                raise _field_error('%s.%s' % (block, key), 'unknown profile %r (known: %s)'
                                   % (text, ', '.join(profiles[key])))

    for name in ('coefficients.g_real', 'output.emit_trajectories'):
        if not isinstance(_lookup(config, name), bool):
            raise _field_error(name, 'expected true or false')

    _positive(config, 'inverse.alpha')
    _integer(config, 'inverse.max_iter', 1)
    _integer(config, 'ensemble.members', 1)
    _integer(config, 'ensemble.modes', 1)
    _integer(config, 'ensemble.seed', 0)

    if not isinstance(config.output['directory'], str):
        raise _field_error('output.directory', 'expected a path')

def load_config(path, overrides = None):
    '''Parses, defaults and validates an experiment config file.'''
    profiles, _, defaults = load_parameters()

    try:
        with open(path, 'r') as file:
            text = file.read()
    except OSError as err:
        raise ConfigError('[cli] Error: cannot read config %s: %s' % (path, err))

    try:
        given = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError('[cli] Error: %s line %d: %s' % (path, err.lineno, err.msg))

    if not isinstance(given, dict):
        raise ConfigError('[cli] Error: %s: top level must be an object of blocks' % path)
    for block in ('domain', 'time'):
        if block not in given:
            raise _field_error(block, 'required block is missing')

    merged = copy.deepcopy(defaults)
    for block, values in given.items():
        if block not in BLOCKS:
            raise _field_error(block, 'unknown block')
        if not isinstance(values, dict):
            raise _field_error(block, 'expected an object')
        for key, value in values.items():
            if key not in merged[block]:
                raise _field_error('%s.%s' % (block, key), 'unknown key')
            merged[block][key] = value

    # domain defaults follow the configured dimension
    dim = merged['domain']['dim']
    for key in ('lo', 'hi', 'x0'):
        if key not in given['domain'] and isinstance(merged['domain'][key], list):
            merged['domain'][key] = (merged['domain'][key]*dim)[:dim]

    for (block, key), value in (overrides or {}).items():
        merged[block][key] = value

    config = ExperimentConfig(**merged)
    validate(config, profiles)

    # geometry and weight caps, before any compute
    domain = Domain(config.domain['lo'], config.domain['hi'], config.domain['x0'])
    mesh = build_mesh(domain, config.domain['n'])
    for s in config.carleman['s']:
        for lam in config.carleman['lambda']:
            try:
                carleman_params(mesh, s, lam, config.time['T'], config.carleman['tau'])
            except WeightError as err:
                raise _field_error('carleman', str(err))

    return config

#-------------------------------------------------------------------------------
#   Reports
#-------------------------------------------------------------------------------

def write_report(results, destination, config_fingerprint):
    '''Writes a frame as CSV with fingerprint and version columns.'''
    frame = results.copy()
    numeric = frame.select_dtypes(include = [np.number])
    if numeric.isna().to_numpy().any():
        raise ReportError('[cli] Error: NaN in results for %s' % destination)

    frame['fingerprint'] = config_fingerprint
    frame['version'] = __version__
    try:
        frame.to_csv(destination, index = False, float_format = '%.17g')
    except OSError as err:
        raise ReportError('[cli] Error: cannot write %s: %s' % (destination, err))
    return destination

@dataclass
class Outcome:
    tables: dict
    failures: list

    def check(self, name, value, limit, passed):
        if not passed:
            self.failures.append({'check': name, 'value': float(value),
                                  'limit': float(limit)})
            log.info('[cli] Check failed: %s = %.6g (limit %.6g)', name, value, limit)

#-------------------------------------------------------------------------------
#   Subcommands
#-------------------------------------------------------------------------------

class Context:
    '''Mesh, coefficients and seeds built from a config.'''

    def __init__(self, config, threads = 1):
        self.config = config
        self.threads = threads
        d = config.domain
        self.domain = Domain(d['lo'], d['hi'], d['x0'])
        self.mesh = build_mesh(self.domain, d['n'])
        self.T = float(config.time['T'])
        self.steps = config.time['steps']
        self.M = config.mc['paths']
        self.seed = config.mc['base_seed']

        c = config.coefficients
        self.coeffs = build_coefficients(self.mesh, self.T, c['b1'], c['a2'], c['a3'],
                                         c['f'], c['g'], c['g_real'])
        self.nl = NonlinearityPair(config.nonlinearity['F1'], config.nonlinearity['F2'])

        e = config.ensemble
        self.ensemble = mode_ensemble(self.mesh, e['modes'], e['members'], e['seed'])
        self.mode = dirichlet_modes(self.mesh, 1)[0]

    def params(self, s = None, lam = None):
        c = self.config.carleman
        return carleman_params(self.mesh, c['s'][0] if s is None else s,
                               c['lambda'][0] if lam is None else lam, self.T, c['tau'])

def run_simulate(ctx):
    mesh, coeffs = ctx.mesh, ctx.coeffs
    dt = ctx.T/ctx.steps
    picks = np.unique(np.linspace(0, ctx.steps, 17).round().astype(int))

    def job(seed, k):
        trajectory = simulate_forward(mesh, coeffs, ctx.mode, brownian_path(seed, k, dt, ctx.steps))
        l2, h1 = norms(mesh, trajectory.states[picks])
        return np.concatenate([l2, h1])

    mean, se = mc_expectation(job, ctx.M, ctx.seed, ctx.threads)
    count = len(picks)
    table = pd.DataFrame({'t': dt*picks, 'l2_mean': mean[:count], 'l2_se': se[:count],
                          'h1_mean': mean[count:], 'h1_se': se[count:]})

    path = brownian_path(ctx.seed, 0, dt, ctx.steps)
    trajectory = simulate_forward(mesh, coeffs, ctx.mode, path)
    residual = weak_form_residual(mesh, coeffs, trajectory, path, ctx.mode)
    outcome = Outcome({'': table}, [])
    outcome.check('weak_form_residual', residual, 1e-9, residual <= 1e-9)

    if coeffs.is_free:
        drift = abs(mean[count - 1] - mean[0])/mean[0]
        outcome.check('l2_conservation', drift, 1e-10, drift <= 1e-10)

    if ctx.config.output['emit_trajectories']:
        dump_trajectory(mesh, trajectory,
                        ctx.config.output['directory'] + 'simulate.trajectory.csv')
    return outcome

def identity_params(ctx):
    '''Mild weight on the configured box with x0 just outside the lower corner.'''
    lo = np.array(ctx.domain.lo)
    x0 = tuple(lo - IDENTITY_SCALES['offset'])
    mesh = build_mesh(Domain(ctx.domain.lo, ctx.domain.hi, x0), 4)
    return carleman_params(mesh, IDENTITY_SCALES['s'], IDENTITY_SCALES['lambda'], ctx.T,
                           IDENTITY_SCALES['tau'])

def run_verify_identity(ctx, count = 128):
    dim, T = ctx.domain.dim, ctx.T
    lo, hi = ctx.domain.lo, ctx.domain.hi
    rng = np.random.default_rng(ctx.seed)
    t = rng.uniform(0.25*T, 0.75*T, count)
    x = rng.uniform(lo, hi, (count, dim))

    z = manufactured_field(dim)
    mu = MultiplierField(lo, hi)
    params = identity_params(ctx)
    frames, outcome = [], Outcome({}, [])

    def collect(name, result):
        frame = result.table()
        frame.insert(0, 'check', name)
        frames.append(frame)
        return result

    result = collect('multiplier', multiplier_identity_residual(mu, z, t, x))
    outcome.check('multiplier_relative', result.relative, 1e-9, result.relative <= 1e-9)

    # flux-differenced terms converge at second order
    coarse = multiplier_identity_residual(mu, z, t, x, mode = 'fd', h = 1e-2)
    fine = multiplier_identity_residual(mu, z, t, x, mode = 'fd', h = 5e-3)
    ratio = coarse.max_abs/fine.max_abs if fine.max_abs > 0 else 0.0
    outcome.check('multiplier_fd_ratio', ratio, 4.0, 3.2 <= ratio <= 4.8)

    special = specialized_inputs(params, lo, hi, z)
    result = collect('weighted_special', carleman_identity_residual(special, t, x))
    outcome.check('weighted_special_relative', result.relative, 1e-9, result.relative <= 1e-9)

    general = general_inputs(params, lo, hi, z)
    result = collect('weighted_general', carleman_identity_residual(general, t, x))
    outcome.check('weighted_general_relative', result.relative, 1e-9, result.relative <= 1e-9)

    c_identity = identity_c_matrix(special, t, x)
    c_weights = eval_weights(params, t, x).c
    mismatch = float(np.max(np.abs(c_identity - c_weights))/np.max(np.abs(c_weights)))
    outcome.check('c_matrix_agreement', mismatch, 1e-12, mismatch <= 1e-12)

    outcome.tables[''] = pd.concat(frames, ignore_index = True)
    return outcome

def run_weight_bounds(ctx):
    c = ctx.config.carleman
    report = check_weight_bounds(ctx.params(), ctx.mesh, default_t_grid(ctx.T, ctx.steps),
                                 c['s'], c['lambda'], seed = ctx.seed)
    summary = pd.DataFrame([{'lt_bounded': report.lt_bounded,
                             'lt_sup': report.lt_sup,
                             'ltj_sup': report.ltj_sup,
                             'd_threshold_s': report.d_threshold[0] if report.d_threshold else -1.0,
                             'd_threshold_lambda': report.d_threshold[1] if report.d_threshold else -1.0,
                             'coercivity_min': report.coercivity_min,
                             'flux_mismatches': report.flux_mismatches}])
    outcome = Outcome({'': report.table, 'summary': summary}, [])
    outcome.check('coercivity_min', report.coercivity_min, 32.0,
                  report.coercivity_min >= 32.0*(1 - 1e-9))
    outcome.check('flux_mismatches', report.flux_mismatches, 0, report.flux_mismatches == 0)
    outcome.check('lt_bounded', float(report.lt_bounded), 1.0, report.lt_bounded)
    return outcome

def run_carleman_scan(ctx):
    c = ctx.config.carleman
    sides = carleman_scan(ctx.mesh, ctx.coeffs, ctx.mode, ctx.params(), c['s'], c['lambda'],
                          ctx.M, ctx.seed, ctx.steps, ctx.threads)
    table = carleman_table(sides)
    outcome = Outcome({'': table}, [])
    sides_only = table.drop(columns = ['s', 'lambda', 'log_scale', 'ratio'])
    values = sides_only.to_numpy(dtype = float)
    outcome.check('sides_finite_nonnegative', float(np.min(values)), 0.0,
                  bool(np.all(np.isfinite(values)) and np.all(values >= 0)))
    return outcome

def _quotient_frame(reports):
    return pd.DataFrame([r.row() for r in reports], columns = QUOTIENT_COLUMNS)

def run_observability(ctx):
    reports = observability_quotient(ctx.mesh, ctx.coeffs, ctx.ensemble, ctx.M, ctx.seed,
                                     ctx.steps, ctx.threads)
    outcome = Outcome({'': _quotient_frame(reports)}, [])
    worst = max(r.quotient for r in reports)
    outcome.check('quotients_finite', worst, np.finfo(float).max, np.isfinite(worst))
    return outcome

def run_hidden_reg(ctx):
    report = hidden_regularity_quotient(ctx.mesh, ctx.coeffs, ctx.ensemble[0], ctx.M,
                                        ctx.seed, ctx.steps, ctx.threads)
    outcome = Outcome({'': _quotient_frame([report])}, [])
    outcome.check('quotient_finite', report.quotient, np.finfo(float).max,
                  np.isfinite(report.quotient))
    return outcome

def run_energy_check(ctx):
    report = energy_check(ctx.mesh, ctx.coeffs, ctx.ensemble[0], ctx.M, ctx.seed,
                          ctx.steps, ctx.threads)
    outcome = Outcome({'': pd.DataFrame([asdict(report)], columns = ['K', 't', 's', 'sources'])},
                      [])
    outcome.check('K_finite', report.K, np.finfo(float).max, np.isfinite(report.K))
    return outcome

def run_ucp_scan(ctx):
    observed = ucp_scan(ctx.mesh, ctx.coeffs, ctx.ensemble, ctx.M, ctx.seed, ctx.steps,
                        ctx.threads)
    enlarged = ucp_scan(ctx.mesh, ctx.coeffs, ctx.ensemble, ctx.M, ctx.seed, ctx.steps,
                        ctx.threads, nodes = 'all')
    table = pd.DataFrame({'member': np.arange(len(observed.energies)),
                          'energy': observed.energies, 'se': observed.ses,
                          'energy_all_boundary': enlarged.energies})
    outcome = Outcome({'': table}, [])
    outcome.check('minimum_positive', observed.minimum, 0.0, observed.minimum > 0)
    outcome.check('enlarged_not_smaller', enlarged.minimum, observed.minimum,
                  enlarged.minimum >= observed.minimum)
    return outcome

def run_stability_scan(ctx):
    members = ctx.ensemble
    pairs = [(members[i], members[(i + 1) % len(members)]) for i in range(len(members))]
    if len(members) == 1:
        pairs = [(members[0], members[0] + ctx.mode)]

    report = stability_scan(ctx.mesh, ctx.coeffs, ctx.nl, pairs, ctx.M, ctx.seed,
                            ctx.steps, ctx.threads)
    table = pd.DataFrame({'pair': np.arange(len(pairs)), 'ratio': report.ratios,
                          'trace_energy': report.trace_energies})
    summary = {'max_ratio': report.max_ratio, 'backward_ratio': report.backward_ratio}

    outcome = Outcome({'': table}, [])
    outcome.check('max_ratio_finite', report.max_ratio, np.finfo(float).max,
                  np.isfinite(report.max_ratio))
    if ctx.nl.is_zero:
        linear = linear_difference_energy(ctx.mesh, ctx.coeffs, *pairs[0], ctx.M, ctx.seed,
                                          ctx.steps, ctx.threads)
        reference = report.trace_energies[0]
        gap = abs(linear - reference)/max(abs(reference), np.finfo(float).tiny)
        summary['reduction_mismatch'] = gap
        outcome.check('linear_reduction', gap, 1e-10, gap <= 1e-10)
    outcome.tables['summary'] = pd.DataFrame([summary])
    return outcome

def run_reconstruct(ctx):
    if not ctx.nl.is_zero:
        raise ConfigError('[cli] Error: nonlinearity: reconstruction is linear only')
    out = ctx.config.output['directory']
    z_true = ctx.ensemble[0]

    record = record_observation(ctx.mesh, ctx.coeffs, z_true, ctx.seed, 0, ctx.steps,
                                fingerprint = ctx.config.fingerprint)
    save_record(record, out + 'reconstruct.record')
    record = load_record(ctx.mesh, out + 'reconstruct.record')

    result = reconstruct(ctx.mesh, ctx.coeffs, record, ctx.config.inverse['alpha'],
                         ctx.config.inverse['max_iter'])
    error = float(np.sqrt(norms(ctx.mesh, result.z0 - z_true)[0]/norms(ctx.mesh, z_true)[0]))

    trace_map = TraceMap(ctx.mesh, ctx.coeffs, record.path)
    adjoint = adjoint_test(trace_map, ctx.seed)
    gradient = gradient_check(trace_map, record.trace.values, ctx.config.inverse['alpha'],
                              seed = ctx.seed)

    summary = pd.DataFrame([{'mode': 'pathwise_inverse_crime',
                             'relative_error': error,
                             'converged': result.converged,
                             'iterations': len(result.iterations) - 1,
                             'adjoint_mismatch': adjoint,
                             'gradient_error': gradient}])
    outcome = Outcome({'': result.iterations, 'summary': summary}, [])
    outcome.check('adjoint_mismatch', adjoint, 1e-10, adjoint <= 1e-10)
    outcome.check('gradient_error', gradient, 1e-5, gradient <= 1e-5)
    outcome.check('relative_error', error, 0.05, error <= 0.05)
    log.info('[cli] Reconstruction relative L2 error: %.6g', error)
    return outcome

SUBCOMMANDS = {'simulate': run_simulate,
               'verify-identity': run_verify_identity,
               'weight-bounds': run_weight_bounds,
               'carleman-scan': run_carleman_scan,
               'observability': run_observability,
               'hidden-reg': run_hidden_reg,
               'energy-check': run_energy_check,
               'ucp-scan': run_ucp_scan,
               'stability-scan': run_stability_scan,
               'reconstruct': run_reconstruct}

def run(subcommand, config, threads = 1):
    '''Runs one subcommand and writes its artifacts; returns the exit status.'''
    if subcommand not in SUBCOMMANDS:
        raise ConfigError('[cli] Error: unknown subcommand "%s"' % subcommand)

    out = check_path(config.output['directory'])
    config.output['directory'] = out
    stamp = config.fingerprint

    hline()
    log.info('[cli] Running %s (fingerprint %s)', subcommand, stamp)
    outcome = SUBCOMMANDS[subcommand](Context(config, threads))

    for suffix, table in sorted(outcome.tables.items()):
        name = subcommand + ('.' + suffix if suffix else '') + '.csv'
        write_report(table, out + name, stamp)

    if outcome.failures:
        write_report(pd.DataFrame(outcome.failures, columns = ['check', 'value', 'limit']),
                     out + subcommand + '.failures.csv', stamp)
        return 2
    return 0

#-------------------------------------------------------------------------------
#   Argument checks
#-------------------------------------------------------------------------------

def arg_check_files(parser, arg):
    if not os.path.isfile(arg):
        parser.error('%s is not a file.' % arg)
    return arg

def arg_check_threads(parser, arg):
    try:
        value = int(arg)
    except ValueError:
        parser.error('The number of threads must be an integer.')
    if value < 1:
        parser.error('The number of threads must be at least 1.')
    return value

def arg_check_seed(parser, arg):
    try:
        value = int(arg)
    except ValueError:
        parser.error('The seed must be an integer.')
    if value < 0 or value >= 2**64:
        parser.error('The seed must be an unsigned 64-bit integer.')
    return value

if __name__ == '__main__':

    _, subcommands, _ = load_parameters()

    parser = argparse.ArgumentParser(prog = 'sselab',
                                     usage = '%(prog)s subcommand --config file [options]',
                                     add_help = False,
                                     formatter_class = RawTextHelpFormatter)

    parser.add_argument('subcommand',
                        help = '\n'.join(wrap('options: ' + ', '.join(subcommands), 60))
                               + '\n\n',
                        nargs = '?',
                        default = '')

    parser.add_argument('-h',
                        '--help',
                        action = 'help',
                        help = 'show this help message and exit\n\n',
                        default = argparse.SUPPRESS)

    parser.add_argument('-c',
                        '--config',
                        type = lambda x: arg_check_files(parser, x),
                        help = 'experiment config (JSON)\n\n',
                        metavar = '')

    parser.add_argument('-o',
                        '--out',
                        type = str,
                        help = 'out directory\n  default: output.directory\n\n',
                        default = None,
                        metavar = '')

    parser.add_argument('--seed',
                        type = lambda x: arg_check_seed(parser, x),
                        help = 'override mc.base_seed\n\n',
                        default = None,
                        metavar = '')

    parser.add_argument('-t',
                        '--threads',
                        type = lambda x: arg_check_threads(parser, x),
                        help = 'Monte Carlo worker threads\n  default: 1\n\n',
                        default = 1,
                        metavar = '')

    parser.add_argument('-v',
                        '--verbose',
                        action = 'count',
                        default = False)

    args = parser.parse_args()

    if args.subcommand not in subcommands:
        parser.print_usage(sys.stderr)
        sys.stderr.write('[cli] Error: unknown subcommand "%s"\n' % args.subcommand)
        sys.exit(64)

    if not args.config:
        sys.exit('[cli] Error: --config is required.')

    overrides = {}
    if args.out is not None:
        overrides[('output', 'directory')] = args.out
    if args.seed is not None:
        overrides[('mc', 'base_seed')] = args.seed

    try:
        config = load_config(args.config, overrides)
        outdir = check_path(config.output['directory'])
        setup_log(outdir + args.subcommand + '.log', args.verbose)

        log.info('')
        hline()
        log.info('[log] Date: %s', str(date.today()))
        log.info('[log] Config: %s', args.config)
        log.info('[log] Fingerprint: %s', config.fingerprint)
        log.info('[log] Threads: %d', args.threads)

        status = run(args.subcommand, config, args.threads)
    except SselabError as err:
        sys.exit(str(err))

    hline()
    log.info('')
    sys.exit(status)

#-------------------------------------------------------------------------------
