#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   inverse.py: semilinear forward solver, boundary observation map,
#   stability scan and pathwise Tikhonov reconstruction of initial data.
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

import json
import logging as log
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
import scipy.sparse as sparse

from sselab_utilities import BlowUpError, ConfigError, NumpyEncoder, SselabError, hline
from sde_sim import (BrownianPath, ObservationTrace, brownian_path, march, mc_expectation,
                     norms, normal_trace, parse_profile, simulate_forward, stepper,
                     trace_nodes, trapezoid_weights, without_sources)

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

#-------------------------------------------------------------------------------
#   Nonlinearities
#-------------------------------------------------------------------------------

NONLINEARITIES = ('zero', 'linear', 'sat')

def _profile(text):
    name, values = parse_profile(text)
    if name not in NONLINEARITIES:
        raise ConfigError('[inverse] Error: unknown nonlinearity "%s" (known: %s)'
                          % (text, ', '.join(NONLINEARITIES)))
    if name == 'zero':
        if values:
            raise ConfigError('[inverse] Error: "zero" takes no parameter')
        return name, 0.0
    if len(values) != 1:
        raise ConfigError('[inverse] Error: profile "%s" takes one value' % text)
    return name, values[0]

def _apply(name, c, r):
    if name == 'linear':
        return c*r
    if name == 'sat':
        return c*r/(1.0 + r)
    return np.zeros_like(r)

@dataclass(frozen = True)
class NonlinearityPair:
    '''F1 (drift, complex via 1+0i) and F2 (noise, real) acting on |z|.'''
    F1: str = 'zero'
    F2: str = 'zero'

    def __post_init__(self):
        _profile(self.F1)
        _profile(self.F2)

    @property
    def is_zero(self):
        return _profile(self.F1)[0] == 'zero' and _profile(self.F2)[0] == 'zero'

    @property
    def lipschitz(self):
        return max(abs(_profile(self.F1)[1]), abs(_profile(self.F2)[1]))

    def f1(self, r):
        name, c = _profile(self.F1)
        return _apply(name, c, np.asarray(r, dtype = float)).astype(complex)

    def f2(self, r):
        name, c = _profile(self.F2)
        return _apply(name, c, np.asarray(r, dtype = float))

    def spot_check(self, count = 1000, seed = 0):
        '''Largest |F(a) - F(b)| / (L |a - b|) over random pairs of moduli.'''
        rng = np.random.default_rng(seed)
        a, b = rng.exponential(2.0, (2, count))
        L = self.lipschitz
        if L == 0:
            return 0.0
        worst = max(np.max(np.abs(self.f1(a) - self.f1(b))/np.abs(a - b)),
                    np.max(np.abs(self.f2(a) - self.f2(b))/np.abs(a - b)))
        return float(worst/L)

#-------------------------------------------------------------------------------
#   Forward problem
#-------------------------------------------------------------------------------

def solve_semilinear(mesh, coeffs, nl, z0, path):
    '''Scheme with F1(|z|) added to the drift source and F2(|z|) to the noise.'''
    if nl.is_zero:
        return simulate_forward(mesh, coeffs, z0, path)

    def source(t, y):
        r = np.abs(y)
        return coeffs.f(t) + nl.f1(r), coeffs.g(t) + nl.f2(r)

    try:
        return march(mesh, coeffs, z0, path, source)
    except BlowUpError as err:
        log.error('[inverse] Semilinear solve blew up at step %s (L = %g)',
                  err.step, nl.lipschitz)
        raise

def observation_map(mesh, coeffs, nl, z0, path, nodes = 'gamma0'):
    '''Normal derivative of the semilinear solution on the observed boundary.'''
    return normal_trace(mesh, solve_semilinear(mesh, coeffs, nl, z0, path), nodes = nodes)

@dataclass
class StabilityReport:
    ratios: np.ndarray
    max_ratio: float
    backward_ratio: float
    trace_energies: np.ndarray

def stability_scan(mesh, coeffs, nl, pairs, M, base_seed, steps, threads = 1,
                   nodes = 'gamma0', grid = 17):
    '''|z0 - z0'|_{L2} over the mean-square trace difference, per pair.'''
    dt = coeffs.T/steps
    picks = np.unique(np.linspace(0, steps, grid).round().astype(int))

    ratios, energies, backward = [], [], 0.0
    for z0, z1 in pairs:
        def job(seed, k):
            path = brownian_path(seed, k, dt, steps)
            a = solve_semilinear(mesh, coeffs, nl, z0, path)
            b = solve_semilinear(mesh, coeffs, nl, z1, path)
            ta = normal_trace(mesh, a, nodes = nodes)
            tb = normal_trace(mesh, b, nodes = nodes)
            diff = ObservationTrace(ta.times, ta.nodes, ta.values - tb.values,
                                    ta.time_weights, ta.face_weights)
            return np.concatenate([[diff.energy()],
                                   norms(mesh, a.states[picks] - b.states[picks])[0]])

        mean, _ = mc_expectation(job, M, base_seed, threads)
        numerator = norms(mesh, np.asarray(z0) - np.asarray(z1))[0]
        energy = mean[0]
        if energy > 0:
            ratio = np.sqrt(numerator/energy)
        elif numerator == 0:
            ratio = 0.0
        else:
            ratio = np.inf
            log.warning('[inverse] Distinct initial data with identical observations')
        ratios.append(ratio)
        energies.append(energy)

        # E|y(t)|^2 / E|y(s)|^2 for t <= s
        l2 = mean[1:]
        for i in range(len(l2)):
            for j in range(i, len(l2)):
                if l2[j] > 0:
                    backward = max(backward, l2[i]/l2[j])

    report = StabilityReport(np.array(ratios), max(ratios, default = 0.0),
                             float(backward), np.array(energies))
    log.info('[inverse] Stability scan over %d pairs: max ratio %.6g, '
             'backward L2 ratio %.6g', len(pairs), report.max_ratio, report.backward_ratio)
    return report

def linear_difference_energy(mesh, coeffs, z0, z1, M, base_seed, steps, threads = 1,
                             nodes = 'gamma0'):
    '''Mean trace energy of the linear, source-free solution from z0 - z1.'''
    free = without_sources(coeffs)
    dt = coeffs.T/steps
    y0 = np.asarray(z0) - np.asarray(z1)

    def job(seed, k):
        trajectory = simulate_forward(mesh, free, y0, brownian_path(seed, k, dt, steps))
        return [normal_trace(mesh, trajectory, nodes = nodes).energy()]

    return float(mc_expectation(job, M, base_seed, threads)[0][0])

#-------------------------------------------------------------------------------
#   Observation records
#-------------------------------------------------------------------------------

@dataclass
class ObservationRecord:
    base_seed: int
    path_index: int
    trace: ObservationTrace
    path: Optional[BrownianPath] = None
    fingerprint: str = ''

def record_observation(mesh, coeffs, z0, base_seed, index, steps, nl = None,
                       fingerprint = ''):
    '''Observation of z0 along path `index`, with the path kept.'''
    nl = NonlinearityPair() if nl is None else nl
    path = brownian_path(base_seed, index, coeffs.T/steps, steps)
    return ObservationRecord(base_seed, index, observation_map(mesh, coeffs, nl, z0, path),
                             path, fingerprint)

def save_record(record, prefix):
    '''Writes <prefix>.csv (t, gamma0_node, re, im) and <prefix>.json.'''
    trace = record.trace
    times = np.repeat(trace.times, len(trace.nodes))
    nodes = np.tile(trace.nodes, len(trace.times))
    values = trace.values.ravel()
    pd.DataFrame({'t': times, 'gamma0_node': nodes, 're': values.real,
                  'im': values.imag}).to_csv(prefix + '.csv', index = False,
                                             float_format = '%.17g')

    manifest = {'base_seed': record.base_seed,
                'path_index': record.path_index,
                'dt': record.path.dt if record.path else float(np.diff(trace.times[:2])[0]),
                'steps': len(trace.times) - 1,
                'fingerprint': record.fingerprint,
                'version': __version__}
    with open(prefix + '.json', 'w') as file:
        json.dump(manifest, file, indent = 4, sort_keys = True, cls = NumpyEncoder)

def load_record(mesh, prefix):
    '''Reads a saved record; the path is regenerated from its seeds.'''
    with open(prefix + '.json', 'r') as file:
        manifest = json.load(file)

    frame = pd.read_csv(prefix + '.csv', float_precision = 'round_trip')
    nodes = pd.unique(frame['gamma0_node'])
    times = pd.unique(frame['t'])
    if len(frame) != len(nodes)*len(times):
        raise SselabError('[inverse] Error: %s.csv is not a full (t, node) table' % prefix)

    unknown = [n for n in nodes if n not in mesh.by_node]
    if unknown:
        raise SselabError('[inverse] Error: record nodes %s are not boundary nodes'
                          % ', '.join(map(str, unknown)))

    values = (frame['re'].to_numpy() + 1j*frame['im'].to_numpy()).reshape(len(times),
                                                                         len(nodes))
    trace = ObservationTrace(np.asarray(times, dtype = float), np.asarray(nodes, dtype = int),
                             values, trapezoid_weights(times),
                             np.array([mesh.by_node[n].weight for n in nodes]))
    path = brownian_path(manifest['base_seed'], manifest['path_index'],
                         manifest['dt'], manifest['steps'])
    return ObservationRecord(manifest['base_seed'], manifest['path_index'], trace, path,
                             manifest['fingerprint'])

#-------------------------------------------------------------------------------
#   Pathwise trace map and its adjoint
#-------------------------------------------------------------------------------

class TraceMap:
    '''Linear map from initial data to the boundary trace along one known path.

    The adjoint is taken between L2(G) on interior nodes and L2(Sigma0) with
    the trace quadrature, and runs the time steps backwards.
    '''
    def __init__(self, mesh, coeffs, path, nodes = 'gamma0'):
        self.mesh = mesh
        self.path = path
        self.step = stepper(mesh, coeffs, path.dt)

        chosen = trace_nodes(mesh, nodes)
        position = np.full(len(mesh.points), -1)
        position[mesh.interior] = np.arange(mesh.size)
        rows, cols, vals = [], [], []
        for i, b in enumerate(chosen):
            spacing = mesh.h[b.face // 2]
            for node, weight in ((b.inner1, -4.0), (b.inner2, 1.0)):
                if position[node] >= 0:
                    rows.append(i)
                    cols.append(position[node])
                    vals.append(weight/(2.0*spacing))
        self.R = sparse.csr_matrix((vals, (rows, cols)), shape = (len(chosen), mesh.size))
        self.RH = self.R.T.tocsr()

        self.times = path.dt*np.arange(path.steps + 1)
        self.nodes = np.array([b.node for b in chosen])
        self.time_weights = trapezoid_weights(self.times)
        self.face_weights = np.array([b.weight for b in chosen])
        self.W = self.time_weights[:, None]*self.face_weights[None, :]

    def forward(self, z0):
        '''Trace values, shape (steps + 1, nodes).'''
        y = np.asarray(z0, dtype = complex)
        out = np.empty((self.path.steps + 1, len(self.nodes)), dtype = complex)
        out[0] = self.R @ y
        for k, dB in enumerate(self.path.increments):
            y = self.step.step(y, 0.0, 0.0, dB)
            out[k + 1] = self.R @ y
        return out

    def adjoint_euclidean(self, values):
        '''Conjugate transpose of forward applied to values.'''
        lam = self.RH @ values[-1]
        for k in range(self.path.steps - 1, -1, -1):
            lam = self.step.adjoint_step(lam, self.path.increments[k]) + self.RH @ values[k]
        return lam

    def adjoint(self, values):
        '''L2 adjoint: (1/cellvol) A^H W values.'''
        return self.adjoint_euclidean(self.W*values)/self.mesh.cellvol

    def trace(self, values):
        return ObservationTrace(self.times, self.nodes, values, self.time_weights,
                                self.face_weights)

    def sigma_inner(self, a, b):
        return np.sum(self.W*a*np.conj(b))

    def l2_inner(self, a, b):
        return np.sum(a*np.conj(b))*self.mesh.cellvol

def _random_field(rng, size):
    return rng.standard_normal(size) + 1j*rng.standard_normal(size)

def adjoint_test(trace_map, seed = 0):
    '''Relative mismatch of <A u, w>_Sigma and <u, A* w>_L2 for random u, w.'''
    rng = np.random.default_rng(seed)
    u = _random_field(rng, trace_map.mesh.size)
    w = _random_field(rng, (len(trace_map.times), len(trace_map.nodes)))
    left = trace_map.sigma_inner(trace_map.forward(u), w)
    right = trace_map.l2_inner(u, trace_map.adjoint(w))
    mismatch = float(abs(left - right)/max(abs(left), np.finfo(float).tiny))
    log.info('[inverse] Adjoint test: relative mismatch %.3g', mismatch)
    return mismatch

def objective(trace_map, data, alpha, z, Az = None):
    '''J = misfit + penalty with misfit = 1/2 |Az - h|^2 and penalty = alpha/2 |z|^2.'''
    Az = trace_map.forward(z) if Az is None else Az
    misfit = 0.5*float(trace_map.sigma_inner(Az - data, Az - data).real)
    penalty = 0.5*alpha*float(trace_map.l2_inner(z, z).real)
    return misfit + penalty, misfit, penalty

def gradient(trace_map, data, alpha, z):
    '''Euclidean gradient A^H W (Az - h) + alpha cellvol z.'''
    residual = trace_map.forward(z) - data
    return (trace_map.adjoint_euclidean(trace_map.W*residual)
            + alpha*trace_map.mesh.cellvol*np.asarray(z))

def gradient_check(trace_map, data, alpha, z = None, directions = 5, seed = 0,
                   eps = 1e-3):
    '''Largest relative error of Re(d^H grad) against central differences of J.'''
    rng = np.random.default_rng(seed)
    z = _random_field(rng, trace_map.mesh.size) if z is None else np.asarray(z)
    g = gradient(trace_map, data, alpha, z)

    worst = 0.0
    for _ in range(directions):
        d = _random_field(rng, trace_map.mesh.size)
        d /= np.linalg.norm(d)
        plus = objective(trace_map, data, alpha, z + eps*d)[0]
        minus = objective(trace_map, data, alpha, z - eps*d)[0]
        numeric = (plus - minus)/(2*eps)
        exact = float(np.real(np.vdot(d, g)))
        worst = max(worst, abs(numeric - exact)/max(abs(exact), np.finfo(float).tiny))

    log.info('[inverse] Gradient check over %d directions: relative error %.3g',
             directions, worst)
    return worst

#-------------------------------------------------------------------------------
#   Reconstruction
#-------------------------------------------------------------------------------

@dataclass
class Reconstruction:
    z0: np.ndarray
    converged: bool
    iterations: pd.DataFrame
    objective: float
    misfit: float
    penalty: float

ITERATION_COLUMNS = ['iteration', 'J', 'misfit', 'penalty', 'gradient_norm']

def reconstruct(mesh, coeffs, record, alpha, max_iter = 500, tol = 1e-8,
                nodes = 'gamma0'):
    '''Tikhonov minimizer by conjugate gradients on the L2 normal equations.'''
    if alpha <= 0:
        raise SselabError('[inverse] Error: alpha must be positive, got %g' % alpha)
    if record.path is None:
        raise SselabError('[inverse] Error: reconstruction needs the record\'s path')

    path = record.path
    trace_map = TraceMap(mesh, coeffs, path, nodes)
    if record.trace.values.shape != (len(trace_map.times), len(trace_map.nodes)):
        raise SselabError('[inverse] Error: record does not match the observed nodes')

    # sources enter affinely; their trace is removed from the data
    offset = normal_trace(mesh, simulate_forward(mesh, coeffs, np.zeros(mesh.size), path),
                          nodes = nodes).values
    data = record.trace.values - offset

    z = np.zeros(mesh.size, dtype = complex)
    Az = np.zeros_like(data)
    r = trace_map.adjoint(data)
    p = r.copy()
    rr = trace_map.l2_inner(r, r).real
    b_norm = np.sqrt(rr)

    rows = []
    converged = b_norm == 0
    J, misfit, penalty = objective(trace_map, data, alpha, z, Az)
    rows.append([0, J, misfit, penalty, float(b_norm)])

    iteration = 0
    while not converged and iteration < max_iter:
        iteration += 1
        Ap = trace_map.forward(p)
        Hp = trace_map.adjoint(Ap) + alpha*p
        a = rr/trace_map.l2_inner(p, Hp).real

        z = z + a*p
        Az = Az + a*Ap
        r = r - a*Hp
        rr_new = trace_map.l2_inner(r, r).real

        J, misfit, penalty = objective(trace_map, data, alpha, z, Az)
        rows.append([iteration, J, misfit, penalty, float(np.sqrt(rr_new))])
        converged = np.sqrt(rr_new) < tol*b_norm

        p = r + (rr_new/rr)*p
        rr = rr_new

    iterations = pd.DataFrame(rows, columns = ITERATION_COLUMNS)
    if not converged:
        log.warning('[inverse] CG stopped after %d iterations at relative gradient %.3g',
                    iteration, np.sqrt(rr)/b_norm)

    hline()
    log.info('[inverse] {: <20} {: >14}'.format('iterations', iteration))
    log.info('[inverse] {: <20} {: >14.6g}'.format('objective', J))
    log.info('[inverse] {: <20} {: >14.6g}'.format('misfit', misfit))
    log.info('[inverse] {: <20} {: >14.6g}'.format('penalty', penalty))
    log.info('[inverse] {: <20} {: >14}'.format('converged', str(bool(converged))))

    return Reconstruction(z, bool(converged), iterations, J, misfit, penalty)

#-------------------------------------------------------------------------------
