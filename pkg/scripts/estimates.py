#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   estimates.py: Monte Carlo evaluation of the weighted (Carleman) estimate,
#   the observability and hidden-regularity quotients, the energy estimate
#   and the unique-continuation scan.
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
from dataclasses import dataclass, asdict
import numpy as np
import pandas as pd

from sselab_utilities import SselabError, hline
from sde_sim import (brownian_path, full_h1_norm, gradient, mc_expectation, norms,
                     normal_trace, simulate_forward, trace_nodes, trapezoid_weights)
from weights import check_caps, eval_weights, theta2_times

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

#-------------------------------------------------------------------------------
#   Report types
#-------------------------------------------------------------------------------

@dataclass
class CarlemanSides:
    '''Both sides of the weighted estimate, scaled by exp(-log_scale).'''
    s: float
    lam: float
    log_scale: float
    lhs: float
    lhs_se: float
    lhs_y: float
    lhs_y_se: float
    lhs_grad: float
    lhs_grad_se: float
    rhs_f: float
    rhs_f_se: float
    rhs_g: float
    rhs_g_se: float
    rhs_g_full: float
    rhs_g_full_se: float
    rhs_bdy: float
    rhs_bdy_se: float

    @property
    def ratio(self):
        '''lhs / rhs_bdy; zero when both vanish.'''
        if self.rhs_bdy > 0:
            return self.lhs/self.rhs_bdy
        return 0.0 if self.lhs == 0 else np.inf

    def row(self):
        row = asdict(self)
        row['lambda'] = row.pop('lam')
        row['ratio'] = self.ratio
        return row

CARLEMAN_COLUMNS = ['s', 'lambda', 'log_scale', 'lhs', 'lhs_se', 'lhs_y', 'lhs_y_se',
                    'lhs_grad', 'lhs_grad_se', 'rhs_f', 'rhs_f_se', 'rhs_g', 'rhs_g_se',
                    'rhs_g_full', 'rhs_g_full_se', 'rhs_bdy', 'rhs_bdy_se', 'ratio']

@dataclass
class QuotientReport:
    label: str
    numerator: float
    denominator: float
    quotient: float
    se: float
    status: str
    fingerprint: str = ''

    def row(self):
        return asdict(self)

QUOTIENT_COLUMNS = ['label', 'numerator', 'denominator', 'quotient', 'se', 'status']

def make_quotient(label, numerator, denominator, denominator_se = 0.0):
    '''Quotient with a status: ok, trivial (0/0) or ucp_violation (x/0).'''
    if denominator > 0:
        quotient = numerator/denominator
        se = quotient*denominator_se/denominator
        status = 'ok'
    elif numerator == 0:
        quotient, se, status = 0.0, 0.0, 'trivial'
    else:
        quotient, se, status = np.inf, 0.0, 'ucp_violation'
        log.warning('[estimates] %s: zero observation with nonzero data', label)
    return QuotientReport(label, float(numerator), float(denominator),
                          float(quotient), float(se), status)

def ensemble_max(reports):
    return max((r.quotient for r in reports), default = 0.0)

@dataclass
class EnergyReport:
    K: float
    t: float
    s: float
    sources: float

@dataclass
class UcpReport:
    energies: np.ndarray
    ses: np.ndarray
    minimum: float

#-------------------------------------------------------------------------------
#   Deterministic source norms
#-------------------------------------------------------------------------------

def source_norms(mesh, coeffs, times):
    '''Squared L2(0,T;H1_0) norm of f and L2(0,T;H1) norm of g.'''
    weights = trapezoid_weights(times)
    f_sq = np.array([norms(mesh, coeffs.f(t))[1] for t in times])
    g_sq = np.array([full_h1_norm(mesh, coeffs.g_full(t)) for t in times])
    return float(np.sum(weights*f_sq)), float(np.sum(weights*g_sq))

def _grad_sq_full(mesh, full):
    # |grad g|^2 at interior nodes from one-sided edge gradients of full-grid values
    full = np.asarray(full).reshape(mesh.shape)
    grads = np.gradient(full, *mesh.h, edge_order = 2)
    grads = grads if isinstance(grads, list) else [grads]
    return mesh.restrict(sum(np.abs(g)**2 for g in grads))

def _time_grid(coeffs, steps):
    return coeffs.T/steps*np.arange(steps + 1)

#-------------------------------------------------------------------------------
#   Weighted estimate
#-------------------------------------------------------------------------------

class _CellWeights:
    '''Relative weight factors of one (s, lambda) cell on interior times.'''

    def __init__(self, mesh, params, times, bnodes):
        check_caps(params)
        inner = times[1:-1][:, None]
        w = eval_weights(params, inner, mesh.interior_points[None, :, :])
        wb = eval_weights(params, inner, np.array([b.position for b in bnodes])[None, :, :]) \
             if bnodes else None

        two_ell = 2*w.ell
        shift = np.max(two_ell)
        if wb is not None:
            shift = max(shift, np.max(2*wb.ell))

        s, lam = params.s, params.lam
        ell = w.ell - shift/2
        self.params = params
        self.shift = float(shift)
        self.y = theta2_times(ell, 3*np.log(s) + 4*np.log(lam) + 3*w.log_phi)
        self.grad = theta2_times(ell, np.log(s) + np.log(lam) + w.log_phi)
        self.plain = theta2_times(ell, 0.0)
        self.g = theta2_times(ell, 2*np.log(s) + 2*np.log(lam) + 2*w.log_phi)
        self.bdy = (theta2_times(wb.ell - shift/2, np.log(s) + np.log(lam) + wb.log_phi)
                    if wb is not None else np.zeros((len(inner), 0)))

def carleman_scan(mesh, coeffs, y0, params, s_values, lam_values, M, base_seed,
                  steps, threads = 1, nodes = 'gamma0'):
    '''Both sides of the weighted estimate for every (s, lambda) on one ensemble.'''
    times = _time_grid(coeffs, steps)
    dt = coeffs.T/steps
    tw = trapezoid_weights(times[1:-1])
    bnodes = trace_nodes(mesh, nodes)

    cells = [_CellWeights(mesh, params.with_scales(s = s, lam = lam), times, bnodes)
             for lam in lam_values for s in s_values]

    # deterministic source integrands on interior times
    inner = times[1:-1]
    f_sq = np.array([np.abs(coeffs.f(t))**2 for t in inner])
    g_sq = np.array([np.abs(coeffs.g(t))**2 for t in inner])
    dg_sq = np.array([_grad_sq_full(mesh, coeffs.g_full(t)) for t in inner])
    vol = mesh.cellvol
    integrate = lambda factor, density: float(np.sum(tw[:, None]*factor*density)*vol)

    def job(seed, k):
        path = brownian_path(seed, k, dt, steps)
        trajectory = simulate_forward(mesh, coeffs, y0, path)
        y = trajectory.states[1:-1]
        y_sq = np.abs(y)**2
        grad_sq = np.sum(np.abs(gradient(mesh, y))**2, axis = -1)
        trace = normal_trace(mesh, trajectory, nodes = bnodes)
        t_sq = np.abs(trace.values[1:-1])**2*trace.face_weights[None, :]

        values = []
        for cell in cells:
            lhs_y = integrate(cell.y, y_sq)
            lhs_grad = integrate(cell.grad, grad_sq)
            rhs_g = integrate(cell.g, g_sq)
            rhs_g_full = rhs_g + integrate(cell.plain, dg_sq)
            values += [lhs_y + lhs_grad, lhs_y, lhs_grad,
                       integrate(cell.plain, f_sq),
                       rhs_g if coeffs.g_real else rhs_g_full, rhs_g_full,
                       float(np.sum(tw[:, None]*cell.bdy*t_sq))]
        return values

    mean, se = mc_expectation(job, M, base_seed, threads)
    mean, se = mean.reshape(len(cells), 7), se.reshape(len(cells), 7)

    sides = []
    for cell, m, e in zip(cells, mean, se):
        sides.append(CarlemanSides(cell.params.s, cell.params.lam, cell.shift,
                                   m[0], e[0], m[1], e[1], m[2], e[2], m[3], e[3],
                                   m[4], e[4], m[5], e[5], m[6], e[6]))

    hline()
    log.info('[estimates] {: <10} {: >8} {: >14} {: >14} {: >14}'.format(
             's', 'lambda', 'lhs', 'rhs_bdy', 'ratio'))
    for side in sides:
        log.info('[estimates] {: <10g} {: >8g} {: >14.6g} {: >14.6g} {: >14.6g}'.format(
                 side.s, side.lam, side.lhs, side.rhs_bdy, side.ratio))
    return sides

def carleman_sides(mesh, coeffs, y0, params, M, base_seed, steps, threads = 1,
                   nodes = 'gamma0'):
    return carleman_scan(mesh, coeffs, y0, params, [params.s], [params.lam], M,
                         base_seed, steps, threads, nodes)[0]

def carleman_table(sides):
    return pd.DataFrame([side.row() for side in sides], columns = CARLEMAN_COLUMNS)

#-------------------------------------------------------------------------------
#   Quotients
#-------------------------------------------------------------------------------

def trace_energy(mesh, coeffs, y0, M, base_seed, steps, threads = 1, nodes = 'gamma0'):
    '''Mean and standard error of the boundary trace energy.'''
    dt = coeffs.T/steps

    def job(seed, k):
        trajectory = simulate_forward(mesh, coeffs, y0, brownian_path(seed, k, dt, steps))
        return [normal_trace(mesh, trajectory, nodes = nodes).energy()]

    mean, se = mc_expectation(job, M, base_seed, threads)
    return float(mean[0]), float(se[0])

def observability_quotient(mesh, coeffs, ensemble, M, base_seed, steps, threads = 1,
                           nodes = 'gamma0'):
    '''|y0|^2_{H1_0} over (trace + source norms)^2 for every ensemble member.'''
    f_sq, g_sq = source_norms(mesh, coeffs, _time_grid(coeffs, steps))
    reports = []
    for i, y0 in enumerate(ensemble):
        numerator = norms(mesh, y0)[1]
        energy, energy_se = trace_energy(mesh, coeffs, y0, M, base_seed, steps,
                                         threads, nodes)
        root = np.sqrt(energy) + np.sqrt(f_sq) + np.sqrt(g_sq)
        denominator = root**2
        # delta method through the square root
        se = root*energy_se/np.sqrt(energy) if energy > 0 else 0.0
        reports.append(make_quotient('member_%d' % i, numerator, denominator, se))

    hline()
    for report in reports:
        log.info('[estimates] {: <12} {: >14.6g} {: >14.6g} {: >14.6g} {}'.format(
                 report.label, report.numerator, report.denominator,
                 report.quotient, report.status))
    log.info('[estimates] Ensemble max observability quotient: %.6g',
             ensemble_max(reports))
    return reports

def hidden_regularity_quotient(mesh, coeffs, y0, M, base_seed, steps, threads = 1):
    '''Full-boundary trace energy over the initial and source energies.'''
    f_sq, g_sq = source_norms(mesh, coeffs, _time_grid(coeffs, steps))
    energy, energy_se = trace_energy(mesh, coeffs, y0, M, base_seed, steps,
                                     threads, nodes = 'all')
    denominator = norms(mesh, y0)[1] + f_sq + g_sq

    if denominator > 0:
        report = QuotientReport('hidden_regularity', energy, denominator,
                                energy/denominator, energy_se/denominator, 'ok')
    else:
        report = make_quotient('hidden_regularity', energy, 0.0)
    log.info('[estimates] Hidden regularity quotient: %.6g +/- %.3g',
             report.quotient, report.se)
    return report

def energy_check(mesh, coeffs, y0, M, base_seed, steps, threads = 1, grid = 17):
    '''Worst E|y(t)|^2 / (E|y(s)|^2 + sources) over ordered pairs of grid times.'''
    times = _time_grid(coeffs, steps)
    picks = np.unique(np.linspace(0, steps, grid).round().astype(int))
    dt = coeffs.T/steps

    def job(seed, k):
        trajectory = simulate_forward(mesh, coeffs, y0, brownian_path(seed, k, dt, steps))
        return norms(mesh, trajectory.states[picks])[1]

    mean, _ = mc_expectation(job, M, base_seed, threads)
    f_sq, g_sq = source_norms(mesh, coeffs, times)
    sources = f_sq + g_sq

    worst = EnergyReport(0.0, 0.0, 0.0, sources)
    for i, ti in enumerate(picks):
        for j, sj in enumerate(picks):
            if i == j:
                continue
            denominator = mean[j] + sources
            if denominator <= 0:
                continue
            ratio = mean[i]/denominator
            if ratio > worst.K:
                worst = EnergyReport(float(ratio), float(times[ti]), float(times[sj]),
                                     sources)

    log.info('[estimates] Energy estimate: worst K = %.6g at (t, s) = (%g, %g)',
             worst.K, worst.t, worst.s)
    return worst

def ucp_scan(mesh, coeffs, ensemble, M, base_seed, steps, threads = 1, nodes = 'gamma0'):
    '''Boundary trace energy of every H1_0-normalized ensemble member.'''
    if coeffs.profiles.get('f', 'zero') != 'zero' or coeffs.profiles.get('g', 'zero') != 'zero':
        raise SselabError('[estimates] Error: unique continuation scan needs f = g = 0')

    energies, ses = [], []
    for y0 in ensemble:
        size = norms(mesh, y0)[1]
        if size == 0:
            energies.append(0.0)
            ses.append(0.0)
            continue
        energy, se = trace_energy(mesh, coeffs, np.asarray(y0)/np.sqrt(size), M,
                                  base_seed, steps, threads, nodes)
        energies.append(energy)
        ses.append(se)

    report = UcpReport(np.array(energies), np.array(ses), min(energies, default = 0.0))
    log.info('[estimates] Unique continuation: minimum trace energy %.6g over %d members',
             report.minimum, len(energies))
    return report

#-------------------------------------------------------------------------------
