#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   identities.py: pointwise checks of the multiplier identity and the
#   weighted (Carleman) identity on manufactured fields, and integrated
#   bookkeeping checks on simulated paths.
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

import logging as log
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
import pandas as pd
import sympy as sp

from sselab_utilities import SselabError, WeightError
from sde_sim import brownian_path, gradient, mc_expectation, operators, simulate_forward
from weights import eval_weights, carleman_expressions

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

#-------------------------------------------------------------------------------
#   Symbolic helpers
#-------------------------------------------------------------------------------

def space_time_symbols(dim):
    t = sp.Symbol('t', real = True)
    xs = tuple(sp.Symbol('x%d' % (k + 1), real = True) for k in range(dim))
    return t, xs

def lambdify(t, xs, expr):
    '''Numpy callable of expr broadcast to the shape of its arguments.'''
    func = sp.lambdify((t,) + tuple(xs), expr, modules = 'numpy', cse = True)
    def evaluate(tt, xx):
        tt = np.asarray(tt, dtype = float)
        args = [xx[..., k] for k in range(len(xs))]
        shape = np.broadcast(tt, *args).shape
        return np.broadcast_to(np.asarray(func(tt, *args), dtype = complex), shape)
    return evaluate

@dataclass
class IdentityResult:
    max_abs: float
    scale: float
    where: Tuple[float, ...]
    terms: Dict[str, float] = field(default_factory = dict)
    field_nonzero: bool = False

    @property
    def relative(self):
        '''Residual over the largest term; infinite when a nonzero field left
        every term at zero (an underflowed weight certifies nothing).'''
        if self.scale > 0:
            return self.max_abs/self.scale
        return np.inf if self.field_nonzero else 0.0

    def table(self):
        '''Rows of term_name, max_abs; the residual row carries its location.'''
        rows = [{'term_name': name, 'max_abs': value} for name, value in self.terms.items()]
        rows.append({'term_name': 'residual', 'max_abs': self.max_abs})
        frame = pd.DataFrame(rows, columns = ['term_name', 'max_abs'])
        frame['t'] = self.where[0]
        for k, x in enumerate(self.where[1:]):
            frame['x%d' % (k + 1)] = x
        return frame

def _result(residual, terms, t, x, field_nonzero = False):
    residual = np.abs(residual)
    worst = int(np.argmax(residual)) if residual.size else 0
    magnitudes = {name: float(np.max(np.abs(value), initial = 0.0))
                  for name, value in terms.items()}
    tt = np.broadcast_to(t, residual.shape).ravel()
    xx = np.broadcast_to(x, residual.shape + (x.shape[-1],)).reshape(-1, x.shape[-1])
    where = (float(tt[worst]),) + tuple(float(v) for v in xx[worst])
    return IdentityResult(float(np.max(residual, initial = 0.0)),
                          max(magnitudes.values(), default = 0.0), where, magnitudes,
                          bool(field_nonzero))

#-------------------------------------------------------------------------------
#   Manufactured fields
#-------------------------------------------------------------------------------

class ManufacturedField:
    '''Complex field z = zr + i zi with closed-form space-time derivatives.'''

    def __init__(self, t, xs, zr, zi):
        self.t, self.xs = t, tuple(xs)
        self.zr, self.zi = zr, zi
        self.expr = zr + sp.I*zi
        self.conj = zr - sp.I*zi

        f = lambda e: lambdify(t, xs, e)
        z = self.expr
        self._z = f(z)
        self._zt = f(sp.diff(z, t))
        self._zx = [f(sp.diff(z, x)) for x in xs]
        self._zxt = [f(sp.diff(z, x, t)) for x in xs]
        self._zxx = [[f(sp.diff(z, x, y)) for y in xs] for x in xs]

    @property
    def dim(self):
        return len(self.xs)

    def __call__(self, t, x):
        return self._z(t, x)

    def jets(self, t, x):
        '''z, z_t, grad z, grad z_t and the Hessian of z.'''
        return {'z': self._z(t, x),
                'zt': self._zt(t, x),
                'zx': np.stack([g(t, x) for g in self._zx], axis = -1),
                'zxt': np.stack([g(t, x) for g in self._zxt], axis = -1),
                'zxx': np.stack([np.stack([g(t, x) for g in row], axis = -1)
                                 for row in self._zxx], axis = -2)}

def manufactured_field(dim, zero = False):
    '''Polynomial-in-time times trigonometric-in-space test field.'''
    t, xs = space_time_symbols(dim)
    if zero:
        return ManufacturedField(t, xs, sp.Integer(0), sp.Integer(0))
    if dim == 1:
        x, = xs
        return ManufacturedField(t, xs, sp.sin(sp.pi*x), t*sp.sin(sp.pi*x))
    x, y = xs
    space = sp.sin(sp.pi*x)*sp.cos(sp.pi*y/2)
    return ManufacturedField(t, xs, (1 + t)*space, (t**2/2 - x*y)*space)

#-------------------------------------------------------------------------------
#   Multiplier identity
#-------------------------------------------------------------------------------

@dataclass(frozen = True)
class MultiplierField:
    '''Componentwise affine field with mu.nu = 1 on the box boundary.'''
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    @property
    def dim(self):
        return len(self.lo)

    def __call__(self, x):
        lo, hi = np.array(self.lo), np.array(self.hi)
        return 2*(np.asarray(x) - lo)/(hi - lo) - 1

    def jacobian(self, x):
        '''Entry [k, j] is d mu^k / d x_j.'''
        scale = 2/(np.array(self.hi) - np.array(self.lo))
        return np.broadcast_to(np.diag(scale), np.shape(x)[:-1] + (self.dim, self.dim))

    def boundary_mismatch(self, mesh):
        '''Largest |mu.nu - 1| over boundary nodes.'''
        return max(abs(float(np.dot(self(b.position), b.normal)) - 1.0)
                   for b in mesh.boundary)

def _multiplier_fluxes(mu, z, t, x):
    '''Fluxes of the divergence terms and the time density, from first jets.'''
    jet = z.jets(t, x)
    zz, zt, zx = jet['z'], jet['zt'], jet['zx']
    czt, czx = np.conj(zt), np.conj(zx)
    m = np.broadcast_to(mu(x), zx.shape)
    a = np.sum(m*czx, axis = -1)
    b = np.sum(m*zx, axis = -1)

    fluxes = {'div[(mu.grad zbar)grad z + (mu.grad z)grad zbar]':
                  a[..., None]*zx + b[..., None]*czx,
              'div[-i z zbar_t mu]': -1j*(zz*czt)[..., None]*m,
              'div[-|grad z|^2 mu]': -np.sum(zx*czx, axis = -1)[..., None]*m}
    return fluxes, 1j*a*zz

def _differenced_terms(mu, z, t, x, h):
    # central differences of the fluxes; O(h^2) against the expanded terms
    e = np.eye(x.shape[-1])*h
    plus = [_multiplier_fluxes(mu, z, t, x + step)[0] for step in e]
    minus = [_multiplier_fluxes(mu, z, t, x - step)[0] for step in e]
    terms = {name: sum(p[name][..., k] - q[name][..., k]
                       for k, (p, q) in enumerate(zip(plus, minus)))/(2*h)
             for name in plus[0]}
    later = _multiplier_fluxes(mu, z, t + h, x)[1]
    earlier = _multiplier_fluxes(mu, z, t - h, x)[1]
    terms['d(i mu.grad(zbar) z)'] = (later - earlier)/(2*h)
    return terms

def multiplier_identity_residual(mu, z, t, x, mode = 'analytic', h = 1e-3):
    '''LHS minus RHS of the multiplier identity for a deterministic field.

    With mode 'fd' the divergence and time-derivative terms are central
    differences of their fluxes with step h, so the residual is O(h^2).
    '''
    if mode not in ('analytic', 'fd'):
        raise SselabError('[identities] Error: unknown mode "%s"' % mode)
    t = np.asarray(t, dtype = float)
    x = np.asarray(x, dtype = float)
    jet = z.jets(t, x)

    zz, zt, zx, zxt, zxx = jet['z'], jet['zt'], jet['zx'], jet['zxt'], jet['zxx']
    cz, czt, czx, czxt, czxx = (np.conj(v) for v in (zz, zt, zx, zxt, zxx))

    m = np.broadcast_to(mu(x), zx.shape)
    jac = np.broadcast_to(mu.jacobian(x), zxx.shape)
    div = np.trace(jac, axis1 = -2, axis2 = -1)

    dot = lambda a, b: np.sum(a*b, axis = -1)
    a = dot(m, czx)
    b = dot(m, zx)
    lap, clap = np.trace(zxx, axis1 = -2, axis2 = -1), np.trace(czxx, axis1 = -2, axis2 = -1)
    grad_sq = dot(zx, czx)

    # gradients of a, b and |grad z|^2
    a_k = np.einsum('...jk,...j->...k', jac, czx) + np.einsum('...j,...jk->...k', m, czxx)
    b_k = np.einsum('...jk,...j->...k', jac, zx) + np.einsum('...j,...jk->...k', m, zxx)
    g_k = np.einsum('...jk,...j->...k', zxx, czx) + np.einsum('...j,...jk->...k', zx, czxx)
    a_t = dot(m, czxt)

    terms = {'mu.grad(zbar)(i z_t + lap z)': a*(1j*zt + lap),
             'mu.grad(z)(-i zbar_t + lap zbar)': b*(-1j*czt + clap),
             'div[(mu.grad zbar)grad z + (mu.grad z)grad zbar]':
                 dot(a_k, zx) + a*lap + dot(b_k, czx) + b*clap,
             'div[-i z zbar_t mu]': -1j*(dot(zx, m)*czt + zz*dot(czxt, m) + zz*czt*div),
             'div[-|grad z|^2 mu]': -dot(g_k, m) - grad_sq*div,
             'd(i mu.grad(zbar) z)': 1j*(a_t*zz + a*zt),
             '-sum mu^k_j (z_j zbar_k + zbar_j z_k)':
                 -np.einsum('...kj,...j,...k->...', jac, zx, czx)
                 - np.einsum('...kj,...j,...k->...', jac, czx, zx),
             '(div mu)|grad z|^2': div*grad_sq,
             'i (div mu) z zbar_t': 1j*div*zz*czt}

    if mode == 'fd':
        terms.update(_differenced_terms(mu, z, t, x, h))

    names = list(terms)
    lhs = terms[names[0]] + terms[names[1]]
    rhs = sum(terms[name] for name in names[2:])
    return _result(lhs - rhs, terms, t, x, np.any(zz != 0))

#-------------------------------------------------------------------------------
#   Weighted identity with general coefficients
#-------------------------------------------------------------------------------

class GeneralIdentityInputs:
    '''beta, symmetric b, ell, Psi and z as symbolic fields of (t, x).'''

    def __init__(self, z, beta, b, ell, Psi, T, lo, hi, check_points = 3, seed = 0):
        self.z, self.t, self.xs = z, z.t, z.xs
        self.beta, self.ell, self.Psi = sp.sympify(beta), sp.sympify(ell), sp.sympify(Psi)
        self.b = [[sp.sympify(v) for v in row] for row in b]
        self.T, self.lo, self.hi = float(T), tuple(lo), tuple(hi)

        n = len(self.xs)
        if len(self.b) != n or any(len(row) != n for row in self.b):
            raise SselabError('[identities] Error: b must be %dx%d' % (n, n))
        for j in range(n):
            for k in range(j + 1, n):
                if sp.simplify(self.b[j][k] - self.b[k][j]) != 0:
                    raise SselabError('[identities] Error: b is not symmetric '
                                      'at (%d, %d)' % (j, k))

        self._cross_check(check_points, seed)
        self._terms = None

    def sample(self, count, seed = 0):
        '''Random (t, x) in [T/4, 3T/4] x box.'''
        rng = np.random.default_rng(seed)
        t = rng.uniform(0.25*self.T, 0.75*self.T, count)
        x = rng.uniform(self.lo, self.hi, (count, len(self.lo)))
        return t, x

    def _cross_check(self, count, seed, h = 1e-5, rtol = 1e-4):
        # derivative callbacks against central differences
        t, x = self.sample(count, seed + 1)
        for name, expr in (('beta', self.beta), ('ell', self.ell), ('Psi', self.Psi),
                           ('z', self.z.expr)):
            f = lambdify(self.t, self.xs, expr)
            df = lambdify(self.t, self.xs, sp.diff(expr, self.t))
            numeric = (f(t + h, x) - f(t - h, x))/(2*h)
            checks = [(numeric, df(t, x))]
            for k, xk in enumerate(self.xs):
                step = np.zeros(len(self.xs))
                step[k] = h
                df = lambdify(self.t, self.xs, sp.diff(expr, xk))
                checks.append(((f(t, x + step) - f(t, x - step))/(2*h), df(t, x)))
            for numeric, exact in checks:
                scale = np.max(np.abs(exact), initial = 0.0) + np.max(np.abs(f(t, x)))
                if np.max(np.abs(numeric - exact), initial = 0.0) > rtol*max(scale, 1e-300):
                    raise SselabError('[identities] Error: derivative of %s '
                                      'disagrees with finite differences' % name)

    def terms(self):
        '''Symbolic bundle of every term of the weighted identity, built once.'''
        if self._terms is None:
            self._terms = self._build_terms()
        return self._terms

    def _build_terms(self):
        t, xs, n = self.t, self.xs, len(self.xs)
        d = sp.diff
        beta, b, ell, Psi = self.beta, self.b, self.ell, self.Psi
        I = sp.I

        theta = sp.exp(ell)
        z, zb = self.z.expr, self.z.conj
        v, vb = theta*z, theta*zb
        ell_t = d(ell, t)
        ell_x = [d(ell, x) for x in xs]
        v_x = [d(v, x) for x in xs]
        vb_x = [d(vb, x) for x in xs]
        v_t, vb_t = d(v, t), d(vb, t)
        Psi_x = [d(Psi, x) for x in xs]
        R = range(n)

        Pz = I*beta*d(z, t) + sum(d(b[j][k]*d(z, xs[j]), xs[k]) for j in R for k in R)
        Pzb = -I*beta*d(zb, t) + sum(d(b[j][k]*d(zb, xs[j]), xs[k]) for j in R for k in R)

        I1 = (-I*beta*ell_t*v - 2*sum(b[j][k]*ell_x[j]*v_x[k] for j in R for k in R)
              + Psi*v)
        I1b = (I*beta*ell_t*vb - 2*sum(b[j][k]*ell_x[j]*vb_x[k] for j in R for k in R)
               + Psi*vb)

        A = (sum(b[j][k]*ell_x[j]*ell_x[k] for j in R for k in R)
             - sum(d(b[j][k]*ell_x[j], xs[k]) for j in R for k in R) - Psi)

        M = (beta**2*ell_t*v*vb
             + I*beta*sum(b[j][k]*ell_x[j]*(vb_x[k]*v - v_x[k]*vb) for j in R for k in R))

        V = []
        for k in R:
            Vk = -I*beta*sum(b[j][k]*ell_x[j]*(v*vb_t - vb*v_t)
                             + b[j][k]*ell_t*(v_x[j]*vb - vb_x[j]*v) for j in R)
            Vk += -Psi*sum(b[j][k]*(v_x[j]*vb + vb_x[j]*v) for j in R)
            Vk += sum(b[j][k]*(2*A*ell_x[j] + Psi_x[j]) for j in R)*v*vb
            Vk += sum((2*b[j][k2]*b[j2][k] - b[j][k]*b[j2][k2])*ell_x[j]
                      *(v_x[j2]*vb_x[k2] + vb_x[j2]*v_x[k2])
                      for j in R for j2 in R for k2 in R)
            V.append(Vk)

        c = [[sum(2*d(b[j2][k]*ell_x[j2], xs[k2])*b[j][k2]
                  - d(b[j][k]*b[j2][k2]*ell_x[j2], xs[k2]) for j2 in R for k2 in R)
              - b[j][k]*Psi for k in R] for j in R]

        D = (d(beta**2*ell_t, t)
             + sum(d(b[j][k]*Psi_x[k], xs[j]) for j in R for k in R)
             + 2*(sum(d(b[j][k]*ell_x[j]*A, xs[k]) for j in R for k in R) + A*Psi))

        psi_coefficient = beta*Psi + sum(d(beta*b[j][k]*ell_x[j], xs[k]) for j in R for k in R)

        return {'theta(Pz I1bar + Pzbar I1)': theta*(Pz*I1b + Pzb*I1),
                'dM': d(M, t),
                'div V': sum(d(V[k], xs[k]) for k in R),
                '2|I1|^2': 2*I1*I1b,
                'sum c^jk (v_k vbar_j + vbar_k v_j)':
                    sum(c[j][k]*(v_x[k]*vb_x[j] + vb_x[k]*v_x[j]) for j in R for k in R),
                'D|v|^2': D*v*vb,
                'i sum [(beta b ell_j)_t + b (beta ell_t)_j](vbar_k v - v_k vbar)':
                    I*sum((d(beta*b[j][k]*ell_x[j], t) + b[j][k]*d(beta*ell_t, xs[j]))
                          *(vb_x[k]*v - v_x[k]*vb) for j in R for k in R),
                'i [beta Psi + sum (beta b ell_j)_k](vbar v_t - v vbar_t)':
                    I*psi_coefficient*(vb*v_t - v*vb_t),
                '_c': c,
                '_psi_coefficient': psi_coefficient}

def carleman_identity_residual(inputs, t, x):
    '''LHS minus RHS of the weighted identity at sample points.'''
    bundle = inputs.terms()
    names = [k for k in bundle if not k.startswith('_')]
    values = {k: lambdify(inputs.t, inputs.xs, bundle[k])(t, x) for k in names}

    lhs = values[names[0]] + values[names[1]] + values[names[2]]
    rhs = sum(values[k] for k in names[3:])
    result = _result(lhs - rhs, values, np.asarray(t), np.asarray(x),
                     np.any(inputs.z(np.asarray(t), np.asarray(x)) != 0))
    if np.isinf(result.relative):
        log.warning('[identities] Every term vanished on a nonzero field; '
                    'the weight underflows at these scales')

    log.debug('[identities] Weighted identity residual %.3g (relative %.3g)',
              result.max_abs, result.relative)
    return result

def identity_c_matrix(inputs, t, x):
    '''c^jk from the general-coefficient formula, shape (..., n, n).'''
    c = inputs.terms()['_c']
    n = len(inputs.xs)
    return np.stack([np.stack([lambdify(inputs.t, inputs.xs, c[j][k])(t, x).real
                               for k in range(n)], axis = -1) for j in range(n)], axis = -2)

def specialized_inputs(params, lo, hi, z = None):
    '''beta = 1, b = identity, ell and Psi = -lap(ell) from the weights.'''
    dim = params.dim
    t, xs, ell, Psi = carleman_expressions(params, dim)
    z = manufactured_field(dim) if z is None else z
    ell = ell.subs(dict(zip((t,) + xs, (z.t,) + z.xs)))
    Psi = Psi.subs(dict(zip((t,) + xs, (z.t,) + z.xs)))
    b = [[sp.Integer(1 if j == k else 0) for k in range(dim)] for j in range(dim)]
    return GeneralIdentityInputs(z, sp.Integer(1), b, ell, Psi, params.T, lo, hi)

def general_inputs(params, lo, hi, z = None):
    '''A space-time beta, b = diag(1, 2, ...) and a free Psi.'''
    dim = params.dim
    t, xs, ell, _ = carleman_expressions(params, dim)
    z = manufactured_field(dim) if z is None else z
    ell = ell.subs(dict(zip((t,) + xs, (z.t,) + z.xs)))
    beta = 1 + z.t*z.xs[0]/10
    b = [[sp.Integer(k + 1) if j == k else sp.Integer(0) for k in range(dim)]
         for j in range(dim)]
    Psi = z.t + sp.Rational(3, 10)*sp.prod(z.xs)
    return GeneralIdentityInputs(z, beta, b, ell, Psi, params.T, lo, hi)

#-------------------------------------------------------------------------------
#   Integrated checks on simulated paths
#-------------------------------------------------------------------------------

def _path_weights(mesh, params, times):
    weights = eval_weights(params, times[:, None], mesh.interior_points[None, :, :])
    return weights, 2*weights.ell

def integrated_M_check(mesh, params, trajectories, margin = 1):
    '''Telescoped spatial integral of M between the end nodes, over the peak energy.'''
    if margin < 1:
        raise SselabError('[identities] Error: the margin must be at least one step')
    if not trajectories:
        return 0.0

    times = trajectories[0].times
    window = slice(margin, len(times) - margin)
    weights, two_ell = _path_weights(mesh, params, times[window])
    # relative weights; the global maximum of theta^2 is scaled to one
    omega = np.exp(two_ell - np.max(two_ell))
    if np.max(omega[0]) == 0 and np.max(omega[-1]) == 0:
        raise WeightError('[identities] Error: theta^2 underflows at both ends of the window, '
                          'the telescoped change of M is zero for every path')

    changes, peaks = [], []
    for trajectory in trajectories:
        y = trajectory.states[window]
        grad_y = gradient(mesh, y)
        density = (weights.ell_t*np.abs(y)**2
                   - 2*np.sum(weights.grad_ell*np.imag(np.conj(grad_y)*y[..., None]), axis = -1))
        energy = (np.abs(weights.ell_t)*np.abs(y)**2
                  + 2*np.linalg.norm(weights.grad_ell, axis = -1)*np.abs(y)
                  *np.linalg.norm(grad_y, axis = -1))
        M = np.sum(omega*density, axis = -1)*mesh.cellvol
        E = np.sum(omega*energy, axis = -1)*mesh.cellvol
        changes.append(abs(M[-1] - M[0]))
        peaks.append(np.max(E))

    peak = np.sum(peaks)
    value = float(np.sum(changes)/peak) if peak > 0 else 0.0
    log.info('[identities] Integrated M check (margin %d steps): %.3g', margin, value)
    return value

@dataclass
class EnergyBalance:
    residual: float
    residual_se: float
    residual_without_ito: float
    ito: float
    ito_se: float

def weighted_energy_balance(mesh, params, coeffs, y0, M, base_seed, steps, threads = 1):
    '''Ito product rule for theta^2 |y|^2 checked in expectation over paths.'''
    dt = coeffs.T/steps
    times = dt*np.arange(steps + 1)
    inner = times[1:-1]
    weights, two_ell = _path_weights(mesh, params, inner)
    omega = np.exp(two_ell - np.max(two_ell))
    lap, _ = operators(mesh)

    def job(seed, k):
        path = brownian_path(seed, k, dt, steps)
        trajectory = simulate_forward(mesh, coeffs, y0, path)
        y = trajectory.states[1:-1]
        dB = path.increments[1:-1]
        sq = np.abs(y)**2

        increment = np.sum(omega[-1]*sq[-1] - omega[0]*sq[0])
        weight_change = np.sum((omega[1:] - omega[:-1])*sq[1:])

        drift_y = (1j*(lap @ y.T).T
                   - 1j*(1j*np.sum(coeffs.b1[None]*gradient(mesh, y), axis = -1)
                         + coeffs.a2*y + np.array([coeffs.f(t) for t in inner])))
        noise = coeffs.a3*y + np.array([coeffs.g(t) for t in inner])

        old = slice(0, -1)
        drift = np.sum(omega[old]*2*np.real(np.conj(y[old])*drift_y[old]))*dt
        martingale = np.sum(omega[old]*2*np.real(np.conj(y[old])*(-1j)*noise[old])
                            *dB[:, None])
        ito = np.sum(omega[old]*np.abs(noise[old])**2)*dt

        scale = mesh.cellvol
        without = (increment - weight_change - drift - martingale)*scale
        return [without - ito*scale, without, ito*scale]

    mean, se = mc_expectation(job, M, base_seed, threads)
    balance = EnergyBalance(float(mean[0]), float(se[0]), float(mean[1]),
                            float(mean[2]), float(se[2]))
    log.info('[identities] Weighted energy balance: residual %.3g +/- %.3g, '
             'without Ito term %.3g, Ito term %.3g', balance.residual,
             balance.residual_se, balance.residual_without_ito, balance.ito)
    return balance

#-------------------------------------------------------------------------------
