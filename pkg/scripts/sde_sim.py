#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   sde_sim.py: seeded simulation of the forward stochastic Schrodinger
#   equation, boundary traces, discrete norms and Monte Carlo reductions.
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

import dataclasses
import functools
import itertools
import logging as log
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd
import scipy.sparse as sparse
from joblib import Parallel, delayed
from scipy.sparse.linalg import splu

from sselab_utilities import BlowUpError, ConfigError, SselabError

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

#-------------------------------------------------------------------------------
#   Coefficient profiles
#-------------------------------------------------------------------------------

PROFILES = {'b1': ('zero', 'bump'),
            'a2': ('zero', 'const'),
            'a3': ('zero', 'const', 'bump'),
            'f':  ('zero', 'mode'),
            'g':  ('zero', 'const', 'mode')}

def parse_profile(text):
    '''Splits "name:p1,p2" into a name and a list of floats.'''
    name, _, args = str(text).partition(':')
    name = name.strip()
    try:
        values = [float(v) for v in args.split(',')] if args.strip() else []
    except ValueError:
        raise ConfigError('[sde_sim] Error: bad profile parameters in "%s"' % text)
    return name, values

def _complex_arg(values, text):
    if len(values) == 1:
        return complex(values[0], 0.0)
    if len(values) == 2:
        return complex(values[0], values[1])
    raise ConfigError('[sde_sim] Error: profile "%s" takes re[,im]' % text)

def _real_arg(values, text):
    if len(values) != 1:
        raise ConfigError('[sde_sim] Error: profile "%s" takes one value' % text)
    return values[0]

def bubble(domain, points):
    '''Product of half sines; one at the centre and zero on the boundary.'''
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    return np.prod(np.sin(np.pi*(points - lo)/(hi - lo)), axis = -1)

@dataclass(frozen = True, eq = False)
class Coefficients:
    '''Coefficients sampled on the full grid; sources are functions of time.'''
    mesh: object
    T: float
    b1_full: np.ndarray
    a2_full: np.ndarray
    a3_full: np.ndarray
    f_full: Callable
    g_full: Callable
    g_real: bool
    profiles: dict = field(default_factory = dict)

    @property
    def b1(self):
        return self.b1_full[self.mesh.interior]

    @property
    def a2(self):
        return self.a2_full[self.mesh.interior]

    @property
    def a3(self):
        return self.a3_full[self.mesh.interior]

    def f(self, t):
        return self.f_full(t)[self.mesh.interior]

    def g(self, t):
        return self.g_full(t)[self.mesh.interior]

    @property
    def is_free(self):
        return all(self.profiles.get(k, 'zero') == 'zero' for k in PROFILES)

    @property
    def r1(self):
        '''Squared W^{1,oo} sizes of a1 = i b1, a2 and a3, plus one.'''
        mesh = self.mesh
        def sup_sq(values):
            values = np.asarray(values).reshape(mesh.shape + values.shape[1:])
            grads = np.gradient(values, *mesh.h, axis = tuple(range(mesh.dim)))
            grads = grads if isinstance(grads, list) else [grads]
            return (np.max(np.abs(values))**2
                    + max(np.max(np.abs(g)) for g in grads)**2)
        return (sup_sq(self.b1_full) + sup_sq(self.a2_full)
                + sup_sq(self.a3_full) + 1.0)

def build_coefficients(mesh, T, b1 = 'zero', a2 = 'zero', a3 = 'zero', f = 'zero',
                       g = 'zero', g_real = None):
    '''Samples named coefficient profiles on the mesh.'''
    points = mesh.points
    size = len(points)
    bump = bubble(mesh.domain, points)
    profiles = {'b1': b1, 'a2': a2, 'a3': a3, 'f': f, 'g': g}

    for key, text in profiles.items():
        name, _ = parse_profile(text)
        if name not in PROFILES[key]:
            raise ConfigError('[sde_sim] Error: unknown %s profile "%s" (known: %s)'
                              % (key, name, ', '.join(PROFILES[key])))

    name, values = parse_profile(b1)
    if name == 'bump':
        b1_full = _real_arg(values, b1)*np.repeat(bump[:, None], mesh.dim, axis = 1)
    else:
        b1_full = np.zeros((size, mesh.dim))

    name, values = parse_profile(a2)
    a2_full = np.full(size, _complex_arg(values, a2) if name == 'const' else 0j)

    name, values = parse_profile(a3)
    if name == 'const':
        a3_full = np.full(size, _real_arg(values, a3))
    elif name == 'bump':
        a3_full = _real_arg(values, a3)*bump
    else:
        a3_full = np.zeros(size)

    name, values = parse_profile(f)
    if name == 'mode':
        amplitude = _complex_arg(values, f)
        f_full = lambda t: amplitude*np.sin(np.pi*t/T)*bump
    else:
        f_full = lambda t: np.zeros(size, dtype = complex)

    name, values = parse_profile(g)
    amplitude = _complex_arg(values, g) if name != 'zero' else 0j
    if name == 'const':
        g_full = lambda t: np.full(size, amplitude)
    elif name == 'mode':
        g_full = lambda t: amplitude*np.sin(np.pi*t/T)*bump
    else:
        g_full = lambda t: np.zeros(size, dtype = complex)

    if g_real is None:
        g_real = amplitude.imag == 0
    elif g_real and amplitude.imag != 0:
        raise ConfigError('[sde_sim] Error: g_real is set but g has an '
                          'imaginary part')

    coeffs = Coefficients(mesh, float(T), b1_full, a2_full.astype(complex),
                          a3_full, f_full, g_full, bool(g_real), profiles)

    # drift and source must vanish on the boundary
    boundary = np.array([b.node for b in mesh.boundary])
    if np.max(np.abs(b1_full[boundary]), initial = 0) > 1e-12 or \
       np.max(np.abs(f_full(0.5*T)[boundary]), initial = 0) > 1e-12:
        raise ConfigError('[sde_sim] Error: b1 and f must vanish on the boundary')

    return coeffs

def without_sources(coeffs):
    '''Same coefficients with f = g = 0.'''
    size = len(coeffs.mesh.points)
    zero = lambda t: np.zeros(size, dtype = complex)
    profiles = dict(coeffs.profiles, f = 'zero', g = 'zero')
    return dataclasses.replace(coeffs, f_full = zero, g_full = zero, g_real = True,
                               profiles = profiles)

#-------------------------------------------------------------------------------
#   Grid fields and operators
#-------------------------------------------------------------------------------

def embed_many(mesh, values):
    '''Interior values (..., N) placed on full grids (..., *shape).'''
    values = np.asarray(values)
    lead = values.shape[:-1]
    full = np.zeros(lead + (len(mesh.points),), dtype = values.dtype)
    full[..., mesh.interior] = values
    return full.reshape(lead + mesh.shape)

@functools.lru_cache(maxsize = 16)
def operators(mesh):
    '''Dirichlet Laplacian and central gradients on interior nodes.'''
    ones = [np.ones(k - 1) for k in mesh.n]
    eyes = [sparse.identity(k - 1, format = 'csr') for k in mesh.n]

    lap_1d = [sparse.diags([o[:-1], -2*o, o[:-1]], [-1, 0, 1]) / h**2
              for o, h in zip(ones, mesh.h)]
    grad_1d = [sparse.diags([-o[:-1], o[:-1]], [-1, 1]) / (2*h)
               for o, h in zip(ones, mesh.h)]

    if mesh.dim == 1:
        return lap_1d[0].tocsr(), [grad_1d[0].tocsr()]

    lap = sparse.kron(lap_1d[0], eyes[1]) + sparse.kron(eyes[0], lap_1d[1])
    grads = [sparse.kron(grad_1d[0], eyes[1]), sparse.kron(eyes[0], grad_1d[1])]
    return lap.tocsr(), [g.tocsr() for g in grads]

def gradient(mesh, values):
    '''Central-difference gradient at interior nodes, shape (..., N, dim).'''
    _, grads = operators(mesh)
    values = np.asarray(values)
    flat = values.reshape(-1, values.shape[-1]).T
    parts = [(g @ flat).T.reshape(values.shape) for g in grads]
    return np.stack(parts, axis = -1)

def norms(mesh, values):
    '''Discrete L2 and H1_0 squared norms of interior fields (..., N).'''
    values = np.asarray(values)
    full = embed_many(mesh, values)
    lead = values.ndim - 1

    l2_sq = np.sum(np.abs(values)**2, axis = -1)*mesh.cellvol
    energy = 0.0
    for axis, h in enumerate(mesh.h):
        diff = np.diff(full, axis = lead + axis)
        energy = energy + np.sum(np.abs(diff.reshape(diff.shape[:lead] + (-1,)))**2,
                                 axis = -1)/h**2
    return l2_sq, l2_sq + energy*mesh.cellvol

def full_h1_norm(mesh, full):
    '''H1 squared norm of full-grid values with one-sided boundary gradients.'''
    full = np.asarray(full).reshape(mesh.shape)
    grads = np.gradient(full, *mesh.h, edge_order = 2)
    grads = grads if isinstance(grads, list) else [grads]

    weights = np.ones(mesh.shape)
    for axis in range(mesh.dim):
        edge = [slice(None)]*mesh.dim
        for end in (0, -1):
            edge[axis] = end
            weights[tuple(edge)] *= 0.5

    density = np.abs(full)**2 + sum(np.abs(g)**2 for g in grads)
    return float(np.sum(weights*density)*mesh.cellvol)

def dirichlet_modes(mesh, K):
    '''The K lowest grid sine modes, normalized in discrete L2.'''
    lengths = [b - a for a, b in zip(mesh.domain.lo, mesh.domain.hi)]
    waves = itertools.product(*(range(1, k) for k in mesh.n))
    waves = sorted(waves, key = lambda k: (sum((ki/L)**2 for ki, L in zip(k, lengths)), k))

    lo = np.array(mesh.domain.lo)
    points = mesh.interior_points
    modes = []
    for k in waves[:K]:
        mode = np.prod([np.sin(np.pi*ki*(points[:, a] - lo[a])/lengths[a])
                        for a, ki in enumerate(k)], axis = 0).astype(complex)
        modes.append(mode/np.sqrt(np.sum(np.abs(mode)**2)*mesh.cellvol))
    return modes

def mode_ensemble(mesh, K, members, seed):
    '''Seeded complex Gaussian combinations of the K lowest modes.'''
    modes = np.array(dirichlet_modes(mesh, K))
    rng = np.random.default_rng(seed)
    coefficients = (rng.standard_normal((members, K))
                    + 1j*rng.standard_normal((members, K)))/np.sqrt(2)
    return [c @ modes for c in coefficients]

#-------------------------------------------------------------------------------
#   Brownian paths
#-------------------------------------------------------------------------------

@dataclass(frozen = True, eq = False)
class BrownianPath:
    base_seed: int
    index: int
    dt: float
    increments: np.ndarray

    @property
    def steps(self):
        return len(self.increments)

    def coarsen(self, factor):
        '''Path on dt*factor whose increments sum consecutive fine ones.'''
        if self.steps % factor:
            raise SselabError('[sde_sim] Error: %d steps do not split by %d'
                              % (self.steps, factor))
        sums = self.increments.reshape(-1, factor).sum(axis = 1)
        return BrownianPath(self.base_seed, self.index, self.dt*factor, sums)

def brownian_path(base_seed, index, dt, steps):
    '''Increments of path `index`, reproducible from (base_seed, index).'''
    sequence = np.random.SeedSequence(int(base_seed), spawn_key = (int(index),))
    rng = np.random.Generator(np.random.Philox(sequence))
    return BrownianPath(int(base_seed), int(index), float(dt),
                        rng.normal(0.0, np.sqrt(dt), int(steps)))

#-------------------------------------------------------------------------------
#   Time stepping
#-------------------------------------------------------------------------------

@dataclass(frozen = True, eq = False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    @property
    def final(self):
        return self.states[-1]

class Stepper:
    '''Crank-Nicolson Laplacian with explicit drift and Ito noise.

    One step solves
        (I - i dt/2 L) y' = (I + i dt/2 L) y - i dt (D y + f) - i dB (a3 y + g)
    with D y = i b1.grad(y) + a2 y.
    '''
    def __init__(self, mesh, coeffs, dt):
        lap, grads = operators(mesh)
        eye = sparse.identity(mesh.size, format = 'csr', dtype = complex)
        drift = sparse.diags(coeffs.a2)
        for k, g in enumerate(grads):
            drift = drift + 1j*sparse.diags(coeffs.b1[:, k]) @ g

        self.dt = dt
        self.a3 = coeffs.a3
        self.lhs = (eye - 0.5j*dt*lap).tocsc()
        self.explicit = (eye + 0.5j*dt*lap - 1j*dt*drift).tocsr()
        self.explicit_h = self.explicit.conj().T.tocsr()
        self.lu = splu(self.lhs)

    def step(self, y, f, g, dB):
        rhs = self.explicit @ y - 1j*self.dt*f - 1j*dB*(self.a3*y + g)
        return self.lu.solve(rhs)

    def adjoint_step(self, lam, dB):
        '''Conjugate transpose of y -> step(y, 0, 0, dB).'''
        lam = self.lu.solve(lam, trans = 'H')
        return self.explicit_h @ lam + 1j*dB*self.a3*lam

@functools.lru_cache(maxsize = 16)
def stepper(mesh, coeffs, dt):
    return Stepper(mesh, coeffs, dt)

def march(mesh, coeffs, y0, path, source):
    '''Runs the scheme along a path; source(t, y) returns (f, g) at the old level.'''
    step = stepper(mesh, coeffs, path.dt)
    y = np.asarray(y0, dtype = complex).copy()
    if not np.all(np.isfinite(y)):
        raise BlowUpError('[sde_sim] Error: initial datum is not finite', 0)

    states = np.empty((path.steps + 1, mesh.size), dtype = complex)
    states[0] = y
    for k, dB in enumerate(path.increments):
        f, g = source(k*path.dt, y)
        y = step.step(y, f, g, dB)
        if not np.all(np.isfinite(y)):
            raise BlowUpError('[sde_sim] Error: non-finite state at step %d' % (k + 1),
                              k + 1)
        states[k + 1] = y

    return Trajectory(path.dt*np.arange(path.steps + 1), states)

def simulate_forward(mesh, coeffs, y0, path, steps = None):
    '''One trajectory of the forward equation driven by path.'''
    steps = path.steps if steps is None else steps
    if steps != path.steps or abs(path.dt*steps - coeffs.T) > 1e-9*coeffs.T:
        raise SselabError('[sde_sim] Error: path covers %d steps of %g, expected '
                          '%d steps over T=%g' % (path.steps, path.dt, steps, coeffs.T))
    return march(mesh, coeffs, y0, path, lambda t, y: (coeffs.f(t), coeffs.g(t)))

#-------------------------------------------------------------------------------
#   Traces
#-------------------------------------------------------------------------------

@dataclass(frozen = True, eq = False)
class ObservationTrace:
    times: np.ndarray
    nodes: np.ndarray
    values: np.ndarray
    time_weights: np.ndarray
    face_weights: np.ndarray

    def energy(self):
        '''Surface-time integral of |dy/dnu|^2.'''
        return float(np.sum(self.time_weights[:, None]*self.face_weights[None, :]
                            *np.abs(self.values)**2))

    def inner(self, other):
        '''Weighted inner product sum(w conj(other) self).'''
        return np.sum(self.time_weights[:, None]*self.face_weights[None, :]
                      *self.values*np.conj(other.values))

def trapezoid_weights(times):
    weights = np.zeros(len(times))
    if len(times) > 1:
        dt = np.diff(times)
        weights[:-1] += 0.5*dt
        weights[1:] += 0.5*dt
    return weights

def trace_nodes(mesh, nodes = 'gamma0'):
    if nodes == 'gamma0':
        return [b for b in mesh.boundary if b.in_gamma0]
    if nodes == 'all':
        return list(mesh.boundary)
    return list(nodes)

def normal_trace(mesh, series, nodes = 'gamma0', times = None):
    '''One-sided second-order normal derivative on boundary nodes.'''
    if any(k < 4 for k in mesh.n):
        raise SselabError('[sde_sim] Error: mesh too coarse for the trace stencil')

    if isinstance(series, Trajectory):
        times, states = series.times, series.states
    else:
        states = np.atleast_2d(series)
        times = np.zeros(1) if times is None else np.asarray(times)

    chosen = trace_nodes(mesh, nodes)
    full = np.zeros((len(states), len(mesh.points)), dtype = complex)
    full[:, mesh.interior] = states

    inner1 = np.array([b.inner1 for b in chosen], dtype = int)
    inner2 = np.array([b.inner2 for b in chosen], dtype = int)
    spacing = np.array([mesh.h[b.face // 2] for b in chosen])

    values = (-4.0*full[:, inner1] + full[:, inner2])/(2.0*spacing)
    return ObservationTrace(np.asarray(times), np.array([b.node for b in chosen]),
                            values, trapezoid_weights(times),
                            np.array([b.weight for b in chosen]))

#-------------------------------------------------------------------------------
#   Monte Carlo
#-------------------------------------------------------------------------------

def mc_expectation(job, M, base_seed, threads = 1):
    '''Mean and standard error of job(base_seed, k) over paths k < M.'''
    if M < 2:
        raise SselabError('[sde_sim] Error: need at least 2 paths, got %d' % M)

    run = lambda k: np.asarray(job(base_seed, k), dtype = float)
    if threads > 1:
        values = Parallel(n_jobs = threads, prefer = 'threads')(
                     delayed(run)(k) for k in range(M))
    else:
        values = [run(k) for k in range(M)]

    # reduction in path-index order
    values = np.stack(values)
    mean = np.sum(values, axis = 0)/M
    se = np.sqrt(np.sum((values - mean)**2, axis = 0)/(M - 1)/M)
    return mean, se

#-------------------------------------------------------------------------------
#   Scheme diagnostics
#-------------------------------------------------------------------------------

def weak_form_residual(mesh, coeffs, trajectory, path, eta):
    '''Relative defect of the discrete weak form tested against eta.'''
    states = trajectory.states
    dt = path.dt
    eta = np.asarray(eta, dtype = complex)
    pair = lambda a, b: np.sum(a*b, axis = -1)*mesh.cellvol

    def grad_pair(a, b):
        fa, fb = embed_many(mesh, a), mesh.embed(b)
        lead = a.ndim - 1
        total = 0.0
        for axis, h in enumerate(mesh.h):
            da = np.diff(fa, axis = lead + axis)
            db = np.diff(fb, axis = axis)
            total = total + np.sum((da*db).reshape(da.shape[:lead] + (-1,)), axis = -1)/h**2
        return total*mesh.cellvol

    lhs = 1j*pair(states[-1] - states[0], eta)

    mid = 0.5*(states[1:] + states[:-1])
    old = states[:-1]
    grads = gradient(mesh, old)
    drift = 1j*np.sum(coeffs.b1[None, :, :]*grads, axis = -1) + coeffs.a2*old
    sources = np.array([coeffs.f(t) for t in trajectory.times[:-1]])
    noise = coeffs.a3*old + np.array([coeffs.g(t) for t in trajectory.times[:-1]])

    terms = np.array([dt*np.sum(grad_pair(mid, eta)),
                      dt*np.sum(pair(drift + sources, eta)),
                      np.sum(path.increments*pair(noise, eta))])
    rhs = np.sum(terms)
    scale = max(abs(lhs), np.max(np.abs(terms)), np.finfo(float).tiny)
    return float(abs(lhs - rhs)/scale)

def self_convergence(mesh, coeffs, y0, base_seed, steps, levels = 3, index = 0):
    '''Strong L2 differences at T between successive halvings of dt.'''
    fine = brownian_path(base_seed, index, coeffs.T/(steps*2**(levels - 1)),
                         steps*2**(levels - 1))
    finals = []
    for level in range(levels):
        path = fine.coarsen(2**(levels - 1 - level))
        finals.append(simulate_forward(mesh, coeffs, y0, path).final)

    errors = [np.sqrt(norms(mesh, a - b)[0]) for a, b in zip(finals[:-1], finals[1:])]
    orders = [np.log2(e0/e1) if e1 > 0 else np.inf
              for e0, e1 in zip(errors[:-1], errors[1:])]
    log.info('[sde_sim] Self-convergence differences %s, orders %s',
             ', '.join('%.3g' % e for e in errors),
             ', '.join('%.3g' % o for o in orders))
    return errors, orders

def dump_trajectory(mesh, trajectory, file):
    '''Writes t, node_index, re, im rows for interior nodes.'''
    times = np.repeat(trajectory.times, mesh.size)
    nodes = np.tile(mesh.interior, len(trajectory.times))
    values = trajectory.states.ravel()
    frame = pd.DataFrame({'t': times, 'node_index': nodes,
                          're': values.real, 'im': values.imag})
    frame.to_csv(file, index = False, float_format = '%.17g')

#-------------------------------------------------------------------------------
