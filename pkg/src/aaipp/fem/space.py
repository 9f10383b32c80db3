"""Continuous P2 vector Lagrange space on a :class:`~aaipp.mesh.TriMesh`.

Scalar nodes are the mesh vertices followed by the edge midpoints (edges in
lexicographic order of their sorted endpoint pair).  Vector degrees of freedom
are interleaved: scalar node ``i`` carries dofs ``2*i`` (x) and ``2*i + 1`` (y).

Local node order on a triangle ``(v0, v1, v2)`` is the three vertices, then the
midpoints of edges ``(v0, v1)``, ``(v1, v2)``, ``(v2, v0)``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from ..linalg import CsrPattern
from ..mesh import TriMesh
from .quadrature import DEGREE5

# barycentric index pairs of the edge nodes
_EDGE_PAIRS = ((0, 1), (1, 2), (2, 0))


def p2_basis(lam):
    """P2 shape functions at barycentric points ``lam`` (..., 3) -> (..., 6)."""
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack(
        [l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0],
        axis=-1,
    )


def p2_basis_dlambda(lam):
    """Derivatives of the shape functions w.r.t. each barycentric coordinate,
    shape (..., 6, 3)."""
    out = np.zeros(lam.shape[:-1] + (6, 3))
    for i in range(3):
        out[..., i, i] = 4 * lam[..., i] - 1
    for k, (i, j) in enumerate(_EDGE_PAIRS):
        out[..., 3 + k, i] = 4 * lam[..., j]
        out[..., 3 + k, j] = 4 * lam[..., i]
    return out


def barycentric_gradients(points, triangles):
    """Constant gradients of the barycentric coordinates, (F, 3, 2), and areas."""
    p = points[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    grads = np.stack([-g1 - g2, g1, g2], axis=1)
    return grads, 0.5 * det


@dataclass(frozen=True, eq=False)
class FeSpace:
    mesh: TriMesh
    nodes: np.ndarray
    cell_nodes: np.ndarray
    edges: np.ndarray
    degree: int = 2

    @property
    def n_scalar(self):
        return len(self.nodes)

    @property
    def n_vector(self):
        return 2 * self.n_scalar

    @property
    def n_vertices(self):
        return self.mesh.n_vertices

    @cached_property
    def cell_dofs(self):
        """Vector dofs per triangle, (F, 12), ordered node-major."""
        c = self.cell_nodes
        return np.stack([2 * c, 2 * c + 1], axis=-1).reshape(len(c), 12)

    @cached_property
    def geometry(self):
        return barycentric_gradients(self.mesh.points, self.mesh.triangles)

    @cached_property
    def tabulation(self):
        """Basis values (nq, 6), physical gradients (F, nq, 6, 2) and
        quadrature weights times area (F, nq) for the degree-5 rule."""
        return tabulate(self, DEGREE5)

    @cached_property
    def pattern(self):
        """Shared CSR pattern of all vector operators (full 12x12 element blocks)."""
        d = self.cell_dofs
        rows = np.repeat(d[:, :, None], 12, axis=2)
        cols = np.repeat(d[:, None, :], 12, axis=1)
        return CsrPattern(self.n_vector, self.n_vector, rows, cols)

    @cached_property
    def boundary_nodes(self):
        """Scalar nodes on boundary edges (vertices and midpoints), sorted."""
        be = np.sort(self.mesh.boundary_edges, axis=1)
        mids = self.n_vertices + _edge_index(self.edges, be)
        return np.unique(np.concatenate([be.ravel(), mids]))

    def boundary_node_tags(self):
        """Per boundary node, the largest tag among the boundary edges touching it."""
        be = np.sort(self.mesh.boundary_edges, axis=1)
        mids = self.n_vertices + _edge_index(self.edges, be)
        tags = np.zeros(self.n_scalar, dtype=np.int64)
        t = self.mesh.boundary_tags
        for col in (be[:, 0], be[:, 1], mids):
            np.maximum.at(tags, col, t)
        return tags

    def locate(self, xy, tol=1e-12):
        """Containing triangle and barycentric coordinates of each point."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        p = self.mesh.points
        t = self.mesh.triangles
        centers = p[t].mean(axis=1)
        tree = cKDTree(centers)
        k = min(16, len(t))
        _, cand = tree.query(xy, k=k)
        cand = np.atleast_2d(cand).reshape(len(xy), k)
        cell = np.full(len(xy), -1)
        lam_out = np.zeros((len(xy), 3))
        grads, _ = self.geometry
        for col in range(k):
            todo = np.flatnonzero(cell < 0)
            if todo.size == 0:
                break
            c = cand[todo, col]
            lam = _barycentric(xy[todo], p[t[c, 0]], grads[c])
            inside = np.all(lam >= -tol, axis=1)
            cell[todo[inside]] = c[inside]
            lam_out[todo[inside]] = lam[inside]
        for i in np.flatnonzero(cell < 0):
            # fall back to a full scan
            lam = _barycentric(np.repeat(xy[i:i + 1], len(t), 0), p[t[:, 0]], grads)
            best = np.argmax(lam.min(axis=1))
            if lam[best].min() < -1e-9:
                raise ValueError(f"point {xy[i]} lies outside the mesh")
            cell[i], lam_out[i] = best, lam[best]
        return cell, lam_out

    def evaluate(self, coef, xy):
        """Evaluate a vector field (interleaved coefficients) at points, (P, 2)."""
        cell, lam = self.locate(xy)
        phi = p2_basis(lam)
        u = coef.reshape(-1, 2)[self.cell_nodes[cell]]
        return np.einsum("pa,pac->pc", phi, u)


def _barycentric(xy, p0, grads):
    d = xy - p0
    l1 = np.einsum("pd,pd->p", d, grads[:, 1])
    l2 = np.einsum("pd,pd->p", d, grads[:, 2])
    return np.column_stack([1 - l1 - l2, l1, l2])


def _edge_index(edges, pairs):
    """Row index in the sorted ``edges`` array of each sorted vertex pair."""
    nv = int(edges.max()) + 1 if len(edges) else 1
    keys = edges[:, 0] * nv + edges[:, 1]
    q = pairs[..., 0] * nv + pairs[..., 1]
    idx = np.searchsorted(keys, q)
    if np.any(idx >= len(keys)) or np.any(keys[np.minimum(idx, len(keys) - 1)] != q):
        raise KeyError("edge not found in mesh")
    return idx


def build_space(mesh):
    """P2 vector Lagrange space on ``mesh``."""
    edges = mesh.edges()
    local = np.sort(mesh._local_edges(), axis=2)
    mid = mesh.n_vertices + _edge_index(edges, local)
    cell_nodes = np.column_stack([mesh.triangles, mid])
    nodes = np.vstack([mesh.points, mesh.points[edges].mean(axis=1)])
    return FeSpace(mesh, nodes, cell_nodes, edges)


def tabulate(space, rule):
    grads_lam, area = space.geometry
    phi = p2_basis(rule.points)
    dphi = p2_basis_dlambda(rule.points)  # (nq, 6, 3)
    grads = np.einsum("qak,fkd->fqad", dphi, grads_lam)
    wdet = area[:, None] * rule.weights[None, :]
    return phi, grads, wdet


def interpolate(space, func):
    """Nodal P2 interpolant of ``func(x, y) -> (ux, uy)``, interleaved."""
    x, y = space.nodes[:, 0], space.nodes[:, 1]
    ux, uy = func(x, y)
    out = np.empty(space.n_vector)
    out[0::2] = np.broadcast_to(ux, x.shape)
    out[1::2] = np.broadcast_to(uy, x.shape)
    return out


def interpolate_scalar_p1(space, func):
    x, y = space.mesh.points[:, 0], space.mesh.points[:, 1]
    return np.broadcast_to(np.asarray(func(x, y), dtype=float), x.shape).copy()
