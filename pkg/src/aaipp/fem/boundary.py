"""Dirichlet constraints on vector P2 dofs."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..mesh import BoundaryTag


@dataclass(frozen=True)
class DirichletData:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        if idx.shape != vals.shape:
            raise ValueError("indices and values must have the same shape")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("constrained indices must be unique")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    def lift(self, n):
        """Vector of length ``n`` holding the prescribed values, zero elsewhere."""
        g = np.zeros(n)
        g[self.indices] = self.values
        return g


def boundary_dirichlet(space, func):
    """Constrain every boundary node to ``func(x, y) -> (ux, uy)``."""
    nodes = space.boundary_nodes
    x, y = space.nodes[nodes, 0], space.nodes[nodes, 1]
    ux, uy = func(x, y)
    vals = np.column_stack(np.broadcast_arrays(ux, uy, x)[:2]).ravel()
    idx = np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()
    return DirichletData(idx, vals)


def cavity_dirichlet(space, lid_speed=1.0):
    """Leaky-cavity data: lid nodes (corners included) move at ``(lid_speed, 0)``,
    all other boundary nodes are at rest."""
    nodes = space.boundary_nodes
    tags = space.boundary_node_tags()[nodes]
    if np.any(tags == BoundaryTag.NONE):
        raise ValueError("mesh boundary is untagged; call tag_cavity_boundary first")
    ux = np.where(tags == BoundaryTag.LID, lid_speed, 0.0)
    idx = np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()
    vals = np.column_stack([ux, np.zeros_like(ux)]).ravel()
    return DirichletData(idx, vals)


def constrained_mask(A, bc):
    """Boolean mask over ``A.data`` of entries in a constrained row or column,
    plus the data positions of the constrained diagonal entries (-1 if absent)."""
    n = A.shape[0]
    con = np.zeros(n, dtype=bool)
    con[bc.indices] = True
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    mask = con[rows] | con[A.indices]
    diag = np.full(len(bc.indices), -1, dtype=np.int64)
    on_diag = np.flatnonzero((rows == A.indices) & con[rows])
    where = np.full(n, -1, dtype=np.int64)
    where[rows[on_diag]] = on_diag
    diag[:] = where[bc.indices]
    return mask, diag


def apply_dirichlet(A, b, bc, mask=None):
    """Symmetric elimination of Dirichlet dofs.

    Constrained rows and columns are zeroed with a unit diagonal and the right
    side is lifted, ``b <- b - A g`` on free dofs and ``b_i = g_i`` on
    constrained ones.  Returns new ``(A, b)``; the inputs are not modified.
    ``mask`` may carry a precomputed :func:`constrained_mask` for ``A``'s pattern.
    """
    A = sp.csr_matrix(A, copy=True)
    b = np.array(b, dtype=float)
    if len(bc.indices) == 0:
        return A, b
    A.sort_indices()
    g = bc.lift(A.shape[0])
    b -= A @ g
    b[bc.indices] = bc.values
    mask, diag = constrained_mask(A, bc) if mask is None else mask
    A.data[mask] = 0.0
    if np.all(diag >= 0):
        A.data[diag] = 1.0
    else:
        e = np.zeros(A.shape[0])
        e[bc.indices[diag < 0]] = 1.0
        A.data[diag[diag >= 0]] = 1.0
        A = (A + sp.diags(e)).tocsr()
    return A, b
