#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   weights.py: Carleman weight functions, their closed-form derivatives and
#   numerical checks of the bounds they satisfy.
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
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import sympy as sp

from sselab_utilities import WeightError, hline

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

# floor for the automatic shift of psi
TAU_FLOOR       = 1e-6

# largest admissible 5*lambda*psi_max + log(s); keeps exp(5 lambda psi_max)/t^2(T-t)^2
# representable for time margins down to T/2048
EXPONENT_CAP    = 600.0

LOG_TINY        = float(np.log(np.finfo(float).tiny))

#-------------------------------------------------------------------------------
#   Parameters
#-------------------------------------------------------------------------------

@dataclass(frozen = True)
class CarlemanParams:
    s: float
    lam: float
    T: float
    tau: float
    x0: Tuple[float, ...]
    psi_min: float
    psi_max: float

    @property
    def dim(self):
        return len(self.x0)

    @property
    def tau_admissible(self):
        '''psi >= 5/6 max psi on the closed domain.'''
        return 6.0*self.psi_min >= 5.0*self.psi_max*(1.0 - 1e-12)

    def with_scales(self, s = None, lam = None):
        '''Same geometry and shift with other s or lambda.'''
        return CarlemanParams(self.s if s is None else float(s),
                              self.lam if lam is None else float(lam),
                              self.T, self.tau, self.x0,
                              self.psi_min, self.psi_max)

def select_tau(mesh):
    '''Smallest shift with tau + m >= 5/6 (tau + M) over the closed domain.'''
    m = mesh.domain.min_sq_distance()
    M = mesh.domain.max_sq_distance()
    return max(TAU_FLOOR, 5.0*M - 6.0*m)

def check_caps(params):
    '''Raises when exp(5 lambda psi_max) s leaves the representable range.'''
    exponent = 5.0*params.lam*params.psi_max + np.log(params.s)
    if exponent > EXPONENT_CAP:
        raise WeightError('[weights] Error: 5*lambda*psi_max + log(s) = %.1f '
                          'exceeds the cap %.0f (s=%g, lambda=%g)' %
                          (exponent, EXPONENT_CAP, params.s, params.lam))

def carleman_params(mesh, s, lam, T, tau = 'auto', enforce_caps = True):
    '''Resolves tau and the range of psi for a mesh.'''
    if s <= 0 or lam <= 0 or T <= 0:
        raise WeightError('[weights] Error: s, lambda and T must be positive')

    if tau == 'auto':
        tau = select_tau(mesh)
    tau = float(tau)
    if tau <= 0:
        raise WeightError('[weights] Error: tau must be positive')

    params = CarlemanParams(float(s), float(lam), float(T), tau,
                            mesh.domain.x0,
                            tau + mesh.domain.min_sq_distance(),
                            tau + mesh.domain.max_sq_distance())

    if enforce_caps:
        check_caps(params)
    if not params.tau_admissible:
        log.warning('[weights] tau=%g violates psi >= 5/6 max psi', tau)

    return params

#-------------------------------------------------------------------------------
#   Weights
#-------------------------------------------------------------------------------

@dataclass(frozen = True)
class CarlemanWeights:
    psi: np.ndarray
    grad_psi: np.ndarray
    hess_psi: np.ndarray
    log_phi: np.ndarray
    phi: np.ndarray
    ell: np.ndarray
    ell_t: np.ndarray
    ell_tt: np.ndarray
    grad_ell: np.ndarray
    grad_ell_t: np.ndarray
    hess_ell: np.ndarray
    lap_ell: np.ndarray
    Psi: np.ndarray
    A: np.ndarray
    grad_A: np.ndarray
    lap_Psi: np.ndarray
    D: np.ndarray
    c: np.ndarray

    @property
    def log_theta(self):
        return self.ell

def _time_factors(params, t):
    # u = t(T-t), w = u^-2; returns log w, w'/w, w''/w
    T = params.T
    u = t*(T - t)
    return u, -2.0*np.log(u), -2.0*(T - 2.0*t)/u, (20*t**2 - 20*t*T + 6*T**2)/u**2

def _check_times(params, t):
    if np.any(t <= 0) or np.any(t >= params.T):
        raise WeightError('[weights] Error: weights are singular at t=0 and '
                          't=T; query times must lie in (0, T)')

def eval_weights(params, t, x):
    '''Closed-form weight quantities at times t and points x (broadcast).'''
    t = np.asarray(t, dtype = float)
    _check_times(params, t)

    s, lam, n = params.s, params.lam, params.dim
    r = np.asarray(x, dtype = float) - np.array(params.x0)
    rho = np.sum(r**2, axis = -1)
    psi = rho + params.tau
    eye = np.eye(n)

    u, log_w, wt, wtt = _time_factors(params, t)

    with np.errstate(over = 'ignore', invalid = 'ignore'):
        log_phi = 4*lam*psi + log_w
        phi = np.exp(log_phi)
        ell = s*np.exp(log_w + 5*lam*params.psi_max)*np.expm1(4*lam*psi - 5*lam*params.psi_max)
        ell_t = ell*wt
        ell_tt = ell*wtt

        grad_psi = 2.0*r
        hess_psi = np.broadcast_to(2.0*eye, grad_psi.shape + (n,))
        sp_ = s*lam*phi
        grad_ell = 4*sp_[..., None]*grad_psi
        grad_ell_t = grad_ell*wt[..., None] if np.ndim(wt) else grad_ell*wt
        hess_ell = (16*lam*sp_[..., None, None]*grad_psi[..., :, None]*grad_psi[..., None, :]
                    + 4*sp_[..., None, None]*hess_psi)
        lap_ell = np.trace(hess_ell, axis1 = -2, axis2 = -1)
        Psi = -lap_ell

        A = np.sum(grad_ell**2, axis = -1) - lap_ell - Psi
        grad_A = 2.0*np.einsum('...jk,...k->...j', hess_ell, grad_ell)

        # bilaplacian of h(psi) = exp(4 lambda psi) via derivatives in rho = |x - x0|^2
        h2, h3, h4 = (4*lam)**2, (4*lam)**3, (4*lam)**4
        bilap = s*phi*(4*rho*(4*h4*rho + (8 + 2*n)*h3) + 2*n*(4*h3*rho + (4 + 2*n)*h2))
        lap_Psi = -bilap

        D = (ell_tt + lap_Psi
             + 2*(np.sum(grad_A*grad_ell, axis = -1) + A*lap_ell)
             + 2*A*Psi)

        c = 2*hess_ell - (lap_ell + Psi)[..., None, None]*eye

    return CarlemanWeights(psi, grad_psi, hess_psi, log_phi, phi, ell, ell_t,
                           ell_tt, grad_ell, grad_ell_t, hess_ell, lap_ell, Psi,
                           A, grad_A, lap_Psi, D, c)

def d_closed_form(params, t, x):
    '''D = ell_tt - bilaplacian(ell) + 2 grad(A).grad(ell), simplified.'''
    t = np.asarray(t, dtype = float)
    _check_times(params, t)

    s, lam, n = params.s, params.lam, params.dim
    r = np.asarray(x, dtype = float) - np.array(params.x0)
    rho = np.sum(r**2, axis = -1)
    psi = rho + params.tau
    u, log_w, wt, wtt = _time_factors(params, t)

    with np.errstate(over = 'ignore', invalid = 'ignore'):
        phi = np.exp(4*lam*psi + log_w)
        ell = s*np.exp(log_w + 5*lam*params.psi_max)*np.expm1(4*lam*psi - 5*lam*params.psi_max)
        bilap = s*phi*(4096*lam**4*rho**2 + (1024*n + 2048)*lam**3*rho
                       + (128*n + 64*n**2)*lam**2)
        return ell*wtt - bilap + 1024*s**3*lam**3*phi**3*(16*lam*rho + 2)*rho

def theta2_times(ell, log_x):
    '''exp(2 ell + log X), flushed to zero below the smallest normal float.'''
    exponent = 2.0*np.asarray(ell) + np.asarray(log_x)
    with np.errstate(under = 'ignore', over = 'ignore'):
        return np.where(exponent < LOG_TINY, 0.0, np.exp(exponent))

def carleman_expressions(params, dim = None):
    '''Symbolic ell and Psi = -lap(ell) in the variables (t, x_1..x_n).'''
    dim = params.dim if dim is None else dim
    t = sp.Symbol('t', real = True)
    xs = sp.symbols(' '.join('x%d' % (k + 1) for k in range(dim)), real = True)
    xs = xs if isinstance(xs, tuple) else (xs,)

    s, lam = sp.Float(params.s), sp.Float(params.lam)
    psi = sum((x - sp.Float(c))**2 for x, c in zip(xs, params.x0)) + sp.Float(params.tau)
    ell = s*(sp.exp(4*lam*psi) - sp.exp(5*lam*sp.Float(params.psi_max)))/(t**2*(sp.Float(params.T) - t)**2)
    Psi = -sum(sp.diff(ell, x, 2) for x in xs)
    return t, xs, ell, Psi

#-------------------------------------------------------------------------------
#   Bound checks
#-------------------------------------------------------------------------------

def bound_ratios(params, t, x):
    '''Scale-free ratios of the bounds, evaluated without forming phi.'''
    t = np.asarray(t, dtype = float)
    _check_times(params, t)

    s, lam, n, T = params.s, params.lam, params.dim, params.T
    r = np.asarray(x, dtype = float) - np.array(params.x0)
    rho = np.sum(r**2, axis = -1)
    psi = rho + params.tau
    u = t*(T - t)
    poly = 20*t**2 - 20*t*T + 6*T**2
    big = 5*lam*params.psi_max

    with np.errstate(over = 'ignore'):
        lt = 2*np.abs(2*t - T)*(np.exp(big - 6*lam*psi) - np.exp(-2*lam*psi))
        ltt = poly*(np.exp(big - 8*lam*psi) - np.exp(-4*lam*psi))
        ltj = 8*np.abs(2*t - T)*np.exp(-2*lam*psi)

        P2 = 16*rho**2
        term_tt = poly*u**2*(np.exp(-8*lam*psi) - np.exp(big - 12*lam*psi))/(s**2*lam**4*P2)
        bilap = (4096*lam**4*rho**2 + (1024*n + 2048)*lam**3*rho
                 + (128*n + 64*n**2)*lam**2)
        term_bi = bilap*u**4*np.exp(-8*lam*psi)/(s**2*lam**4*P2)
        term_A = 1024 + 128/(lam*rho)

    return {'lt': lt, 'ltt': ltt, 'ltj': ltj, 'd': term_tt - term_bi + term_A}

def coercivity(params, t, x, vectors):
    '''Minimal quotient of sum c_jk (v_j conj v_k + v_k conj v_j) against s lambda phi |v|^2.'''
    weights = eval_weights(params, t, x)
    c = weights.c.reshape(-1, params.dim, params.dim)
    scale = (params.s*params.lam*weights.phi).ravel()
    keep = np.isfinite(scale) & np.all(np.isfinite(c), axis = (1, 2))
    c, scale = c[keep], scale[keep]

    form = np.einsum('pjk,vj,vk->pv', c, vectors, vectors.conj())
    form = 2*form.real
    norms = np.sum(np.abs(vectors)**2, axis = 1)
    return float(np.min(form/(scale[:, None]*norms[None, :])))

@dataclass
class WeightBoundsReport:
    table: pd.DataFrame
    lt_bounded: bool
    lt_sup: float
    ltj_sup: float
    d_threshold: Optional[Tuple[float, float]]
    coercivity_min: float
    flux_mismatches: int

def default_t_grid(T, steps, count = 65):
    '''Times in [dt/2, T - dt/2].'''
    margin = 0.5*T/steps
    return np.linspace(margin, T - margin, count)

def check_weight_bounds(params, mesh, t_grid, s_values = None, lam_values = None,
                        n_vectors = 64, seed = 0):
    '''Sweeps (s, lambda) and measures the bound ratios over a (t, x) sample.'''
    s_values = sorted(s_values or [params.s])
    lam_values = sorted(lam_values or [params.lam])
    t_grid = np.asarray(t_grid, dtype = float)

    tt = t_grid[:, None]
    xx = mesh.points[None, :, :]

    rng = np.random.default_rng(seed)
    vectors = (rng.standard_normal((n_vectors, params.dim))
               + 1j*rng.standard_normal((n_vectors, params.dim)))

    rows = []
    for lam in lam_values:
        for s in s_values:
            cell = params.with_scales(s = s, lam = lam)
            ratios = bound_ratios(cell, tt, xx)
            rows.append({'s': s, 'lambda': lam,
                         'lt_ratio': float(np.max(ratios['lt'])),
                         'ltt_ratio': float(np.max(ratios['ltt'])),
                         'ltj_ratio': float(np.max(ratios['ltj'])),
                         'd_ratio_min': float(np.min(ratios['d'])),
                         'coercivity': coercivity(cell, tt, xx, vectors)})

    table = pd.DataFrame(rows, columns = ['s', 'lambda', 'lt_ratio', 'ltt_ratio',
                                          'ltj_ratio', 'd_ratio_min', 'coercivity'])
    table['d_holds'] = table['d_ratio_min'] >= 1.0

    # smallest (lambda, s) with D >= s^3 lambda^4 phi^3 |grad psi|^4 on every larger cell
    holds = {(row.s, row['lambda']): row.d_holds for _, row in table.iterrows()}
    d_threshold = None
    for i, lam in enumerate(lam_values):
        for j, s in enumerate(s_values):
            if all(holds[(s2, l2)] for l2 in lam_values[i:] for s2 in s_values[j:]):
                d_threshold = (s, lam)
                break
        if d_threshold:
            break

    mid = eval_weights(params, 0.5*params.T, np.array([b.position for b in mesh.boundary]))
    flux = np.sum(mid.grad_ell*np.array([b.normal for b in mesh.boundary]), axis = -1)
    flux_mismatches = int(sum((f > 0) != b.in_gamma0 for f, b in zip(flux, mesh.boundary)))

    report = WeightBoundsReport(table = table,
                                lt_bounded = params.tau_admissible,
                                lt_sup = float(table['lt_ratio'].max()),
                                ltj_sup = float(table['ltj_ratio'].max()),
                                d_threshold = d_threshold,
                                coercivity_min = float(table['coercivity'].min()),
                                flux_mismatches = flux_mismatches)

    hline()
    log.info('[weights] {: <10} {: >8} {: >14} {: >14} {: >14}'.format(
             's', 'lambda', 'lt ratio', 'D ratio min', 'coercivity'))
    for _, row in table.iterrows():
        log.info('[weights] {: <10g} {: >8g} {: >14.6g} {: >14.6g} {: >14.6g}'.format(
                 row.s, row['lambda'], row.lt_ratio, row.d_ratio_min, row.coercivity))
    if not report.lt_bounded:
        log.info('[weights] tau violates psi >= 5/6 max psi: lt ratio is '
                 'unbounded in lambda')
    log.info('[weights] D threshold (s, lambda): %s', str(d_threshold))
    log.info('[weights] coercivity constant measured %.6g (closed form gives 32)',
             report.coercivity_min)

    return report

#-------------------------------------------------------------------------------
