#!/usr/bin/env python
# -*- coding: utf-8 -*-

#-------------------------------------------------------------------------------
#   geometry.py: box domains, uniform meshes, outward normals and the
#   observed boundary part selected by the observer point.
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

import itertools
import logging as log
from dataclasses import dataclass, field
from typing import Tuple, List, Dict

import numpy as np

from sselab_utilities import GeometryError

#-------------------------------------------------------------------------------

__version__     = '0.1.0'
__date__        = '2026-10-18'

#-------------------------------------------------------------------------------
#   Domain
#-------------------------------------------------------------------------------

@dataclass(frozen = True)
class Domain:
    '''Interval or axis-aligned rectangle with an exterior observer point.'''
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    x0: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'lo', tuple(float(v) for v in self.lo))
        object.__setattr__(self, 'hi', tuple(float(v) for v in self.hi))
        object.__setattr__(self, 'x0', tuple(float(v) for v in self.x0))

        if self.dim not in (1, 2):
            raise GeometryError('[geometry] Error: only 1D intervals and 2D '
                                'rectangles are supported, got dim=%d' % self.dim)
        if len(self.hi) != self.dim or len(self.x0) != self.dim:
            raise GeometryError('[geometry] Error: lo, hi and x0 must share '
                                'one dimension')
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise GeometryError('[geometry] Error: lower corner must be below '
                                'upper corner on every axis')

        distance = self.distance_to_closure()
        if distance <= 0:
            raise GeometryError('[geometry] Error: observer point x0=%s lies in '
                                'the closed domain (distance %.3g)' %
                                (str(self.x0), distance))

    @property
    def dim(self):
        return len(self.lo)

    def distance_to_closure(self):
        '''Euclidean distance from x0 to the closed box.'''
        x0 = np.array(self.x0)
        gap = np.maximum(np.maximum(np.array(self.lo) - x0, 0.0),
                         x0 - np.array(self.hi))
        return float(np.linalg.norm(gap))

    def min_sq_distance(self):
        return self.distance_to_closure()**2

    def max_sq_distance(self):
        # farthest point of a box from any point is a corner
        x0 = np.array(self.x0)
        corners = np.array(list(itertools.product(*zip(self.lo, self.hi))))
        return float(np.max(np.sum((corners - x0)**2, axis = 1)))

    @property
    def centroid(self):
        return 0.5*(np.array(self.lo) + np.array(self.hi))

#-------------------------------------------------------------------------------
#   Mesh
#-------------------------------------------------------------------------------

@dataclass(frozen = True)
class BoundaryNode:
    node: int
    position: np.ndarray
    normal: np.ndarray
    face: int
    in_gamma0: bool
    inner1: int
    inner2: int
    weight: float

@dataclass(frozen = True, eq = False)
class Mesh:
    '''Uniform node grid on a box domain; fields live on interior nodes.'''
    domain: Domain
    n: Tuple[int, ...]
    h: Tuple[float, ...]
    points: np.ndarray
    interior: np.ndarray
    boundary: List[BoundaryNode]
    by_node: Dict[int, BoundaryNode] = field(repr = False)

    @property
    def dim(self):
        return self.domain.dim

    @property
    def shape(self):
        return tuple(k + 1 for k in self.n)

    @property
    def interior_shape(self):
        return tuple(k - 1 for k in self.n)

    @property
    def size(self):
        '''Number of interior nodes.'''
        return len(self.interior)

    @property
    def cellvol(self):
        return float(np.prod(self.h))

    @property
    def interior_points(self):
        return self.points[self.interior]

    def embed(self, values):
        '''Places interior values on the full grid with zeros on the boundary.'''
        values = np.asarray(values)
        full = np.zeros(self.shape, dtype = values.dtype)
        full[tuple(slice(1, -1) for _ in self.n)] = values.reshape(self.interior_shape)
        return full

    def restrict(self, full):
        '''Interior values of a full-grid array, flattened.'''
        full = np.asarray(full).reshape(self.shape)
        return full[tuple(slice(1, -1) for _ in self.n)].ravel()

    def sample(self, func, nodes = 'interior'):
        '''Evaluates func(points) on interior nodes or on the full grid.'''
        if nodes == 'interior':
            return np.asarray(func(self.interior_points))
        return np.asarray(func(self.points))

def _faces_of(index, n):
    # faces 2a (lower, normal -e_a) and 2a+1 (upper, normal +e_a)
    faces = []
    for axis, (i, k) in enumerate(zip(index, n)):
        if i == 0:
            faces.append(2*axis)
        elif i == k:
            faces.append(2*axis + 1)
    return faces

def build_mesh(domain, n):
    '''Uniform grid with boundary normals and observed-boundary flags.'''
    if np.isscalar(n):
        n = (int(n),)*domain.dim
    n = tuple(int(k) for k in n)

    if len(n) != domain.dim:
        raise GeometryError('[geometry] Error: need one node count per axis')
    if any(k < 4 for k in n):
        raise GeometryError('[geometry] Error: at least 4 cells per axis are '
                            'needed for the 3-point boundary stencil')

    h = tuple((b - a)/k for a, b, k in zip(domain.lo, domain.hi, n))
    axes = [a + hk*np.arange(k + 1) for a, hk, k in zip(domain.lo, h, n)]
    grid = np.meshgrid(*axes, indexing = 'ij')
    points = np.stack([g.ravel() for g in grid], axis = 1)

    shape = tuple(k + 1 for k in n)
    x0 = np.array(domain.x0)

    interior = []
    boundary = []
    for flat, index in enumerate(itertools.product(*(range(s) for s in shape))):
        faces = _faces_of(index, n)
        if not faces:
            interior.append(flat)
            continue

        face = min(faces)
        axis, upper = divmod(face, 2)
        normal = np.zeros(domain.dim)
        normal[axis] = 1.0 if upper else -1.0

        step = np.zeros(domain.dim, dtype = int)
        step[axis] = -1 if upper else 1
        inner1 = int(np.ravel_multi_index(tuple(np.array(index) + step), shape))
        inner2 = int(np.ravel_multi_index(tuple(np.array(index) + 2*step), shape))

        position = points[flat]
        in_gamma0 = bool(np.dot(position - x0, normal) > 0)
        weight = float(np.prod([hk for a, hk in enumerate(h) if a != axis]))

        boundary.append(BoundaryNode(flat, position, normal, face, in_gamma0,
                                     inner1, inner2, weight))

    mesh = Mesh(domain = domain, n = n, h = h, points = points,
                interior = np.array(interior, dtype = int),
                boundary = boundary,
                by_node = {b.node: b for b in boundary})

    log.debug('[geometry] Mesh %s with %d interior and %d boundary nodes '
              '(%d observed)', 'x'.join(map(str, n)), mesh.size,
              len(boundary), len(gamma0_nodes(mesh)))
    return mesh

def gamma0_nodes(mesh):
    '''Boundary nodes where (x - x0).nu > 0.'''
    return [b for b in mesh.boundary if b.in_gamma0]

def boundary_normal(mesh, node):
    '''Outward unit normal at a boundary node (full-grid id).'''
    if node not in mesh.by_node:
        raise GeometryError('[geometry] Error: node %d is not a boundary node'
                            % node)
    return mesh.by_node[node].normal

def face_flags(mesh):
    '''Observed flag per face.

    A box face has the axis-aligned normal ±e_a, so (x - x0).nu = ±(x_a - x0_a)
    is constant on it and no face splits. Faces with other normals could.
    '''
    flags = {}
    for b in mesh.boundary:
        flags.setdefault(b.face, b.in_gamma0)
    return flags

#-------------------------------------------------------------------------------
