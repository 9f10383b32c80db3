"""Sparse and small dense linear algebra.

Sparse operators are plain :class:`scipy.sparse.csr_matrix` objects with
sorted, duplicate-free column indices.  :class:`CsrPattern` caches the
triplet-to-slot scatter so that operators sharing a sparsity structure can be
re-assembled with a single ``bincount``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(ArithmeticError):
    """Raised when a sparse factorization hits a zero pivot."""


class CsrPattern:
    """Compressed-row structure of a fixed set of (row, col) positions.

    Parameters
    ----------
    nrows, ncols : int
        Matrix shape.
    rows, cols : array_like of int
        Triplet positions, duplicates allowed.  Values later passed to
        :meth:`assemble` must come in the same order.
    """

    def __init__(self, nrows, ncols, rows, cols):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have the same length")
        if rows.size and (
            rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols
        ):
            raise IndexError(f"triplet index out of range for shape ({nrows}, {ncols})")
        self.shape = (int(nrows), int(ncols))
        keys = rows * ncols + cols
        unique, self.scatter = np.unique(keys, return_inverse=True)
        self.indices = (unique % ncols).astype(np.int32)
        counts = np.bincount(unique // ncols, minlength=nrows)
        self.indptr = np.zeros(nrows + 1, dtype=np.int32)
        np.cumsum(counts, out=self.indptr[1:])

    @property
    def nnz(self):
        return self.indices.size

    def sum_values(self, values):
        """Sum triplet values into the pattern's data array."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size != self.scatter.size:
            raise ValueError(f"expected {self.scatter.size} values, got {values.size}")
        return np.bincount(self.scatter, weights=values, minlength=self.nnz)

    def matrix(self, data):
        """Wrap a data array (length ``nnz``) as a CSR matrix sharing the structure."""
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    def assemble(self, values):
        return self.matrix(self.sum_values(values))

    def diagonal_positions(self):
        """Data-array position of each diagonal entry (-1 where absent)."""
        n = min(self.shape)
        pos = np.full(n, -1, dtype=np.int64)
        row_of = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        on_diag = np.flatnonzero(row_of == self.indices)
        pos[row_of[on_diag]] = on_diag
        return pos


def csr_from_triplets(nrows, ncols, entries):
    """Build a CSR matrix from ``(row, col, value)`` triplets, summing duplicates.

    >>> csr_from_triplets(1, 1, [(0, 0, 1.0), (0, 0, 2.0)]).toarray()
    array([[3.]])
    """
    entries = list(entries)
    if entries:
        rows, cols, vals = (np.asarray(c) for c in zip(*entries))
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    return CsrPattern(nrows, ncols, rows, cols).assemble(vals)


def spmv(A, x):
    """Sparse matrix-vector product with an explicit dimension check."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: matrix has {A.shape[1]} columns, vector {x.shape}")
    return A @ x


def nested_dissection(A):
    """Fill-reducing symmetric ordering of ``A`` from METIS on the pattern of ``A + A^T``."""
    import pymetis

    n = A.shape[0]
    G = sp.csr_matrix(abs(A) + abs(A).T)
    G.setdiag(0)
    G.eliminate_zeros()
    if n < 3 or G.nnz == 0:
        return np.arange(n)
    perm, _ = pymetis.nested_dissection(pymetis.CSRAdjacency(G.indptr, G.indices))
    return np.asarray(perm, dtype=np.int64)


@dataclass(frozen=True)
class SparseLu:
    """LU factors of a symmetrically pre-ordered matrix.

    With ``B = A[order][:, order]`` the SuperLU factors satisfy
    ``Pr B Pc = L U``.
    """

    order: np.ndarray
    perm_r: np.ndarray
    perm_c: np.ndarray
    L: sp.csc_matrix
    U: sp.csc_matrix
    n: int
    _factor: object

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has length {b.shape[0]}, expected {self.n}")
        x = np.empty_like(b)
        x[self.order] = self._factor.solve(b[self.order])
        return x

    def reconstruct(self):
        """Return the factored matrix rebuilt from ``L`` and ``U`` (small matrices only)."""
        n = self.n
        eye = np.arange(n)
        Pr = sp.csc_matrix((np.ones(n), (self.perm_r, eye)), shape=(n, n))
        Pc = sp.csc_matrix((np.ones(n), (eye, self.perm_c)), shape=(n, n))
        B = (Pr.T @ self.L @ self.U @ Pc.T).tocsr()
        inv = np.empty(n, dtype=np.int64)
        inv[self.order] = eye
        return B[inv][:, inv]


def sparse_lu_factor(A, order=None, pivot_threshold=0.1):
    """Factor a square sparse matrix with threshold partial pivoting (SuperLU).

    ``order`` is a symmetric fill-reducing permutation; by default a nested
    dissection of the matrix graph.  SuperLU keeps the diagonal pivot while it
    is at least ``pivot_threshold`` times the largest entry in its column.
    A structurally or numerically zero pivot raises :class:`SingularMatrixError`.
    """
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    A = sp.csr_matrix(A)
    n = A.shape[0]
    order = nested_dissection(A) if order is None else np.asarray(order, dtype=np.int64)
    B = sp.csc_matrix(A[order][:, order])
    try:
        lu = spla.splu(
            B,
            permc_spec="NATURAL",
            diag_pivot_thresh=pivot_threshold,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if np.any(lu.U.diagonal() == 0.0):
        raise SingularMatrixError("zero pivot in U")
    return SparseLu(order, lu.perm_r, lu.perm_c, lu.L, lu.U, n, lu)


def sparse_solve(A, b, order=None):
    return sparse_lu_factor(A, order).solve(b)


@dataclass(frozen=True)
class DenseLsProblem:
    """``min || rhs - sum_i gamma_i columns[i] ||_W`` with optional SPD weight ``W``."""

    columns: Sequence[np.ndarray]
    rhs: np.ndarray
    gram_weight: Optional[object] = None

    def __post_init__(self):
        n = np.shape(self.rhs)[0]
        for c in self.columns:
            if np.shape(c)[0] != n:
                raise ValueError("columns and rhs must share one length")

    def weighted(self, v):
        return v if self.gram_weight is None else self.gram_weight @ v


def dense_least_squares(problem, drop_tol=1e-8):
    """Safeguarded least squares by weighted modified Gram-Schmidt.

    Columns are orthogonalized in the given order (most recent first).  A
    column whose component orthogonal to the previously kept columns is
    smaller than ``drop_tol`` times its own norm is dropped.

    Returns
    -------
    coefficients : ndarray
        One entry per input column, zero for dropped columns.
    kept : list of int
        Indices of the columns that were used.
    residual_norm : float
        Weighted norm of ``rhs - F @ coefficients``.
    """
    if not 0.0 < drop_tol < 1.0:
        raise ValueError("drop_tol must lie in (0, 1)")
    ncol = len(problem.columns)
    if ncol == 0:
        raise ValueError("at least one column is required")
    rhs = np.asarray(problem.rhs, dtype=float)
    coef = np.zeros(ncol)
    rhs_w = problem.weighted(rhs)
    rhs_norm = np.sqrt(max(rhs @ rhs_w, 0.0))
    if rhs_norm == 0.0:
        return coef, [], 0.0

    Q, WQ, kept = [], [], []
    R = np.zeros((ncol, ncol))
    for i, col in enumerate(problem.columns):
        v = np.array(col, dtype=float)
        col_norm = np.sqrt(max(v @ problem.weighted(v), 0.0))
        if col_norm == 0.0:
            continue
        r = np.zeros(len(Q))
        # two MGS sweeps keep the basis orthogonal to working precision
        for _ in range(2):
            for j, wq in enumerate(WQ):
                h = wq @ v
                r[j] += h
                v -= h * Q[j]
        wv = problem.weighted(v)
        v_norm = np.sqrt(max(v @ wv, 0.0))
        if v_norm < drop_tol * col_norm:
            continue
        k = len(Q)
        R[:k, k] = r
        R[k, k] = v_norm
        Q.append(v / v_norm)
        WQ.append(wv / v_norm)
        kept.append(i)

    if kept:
        k = len(kept)
        qtb = np.array([wq @ rhs for wq in WQ])
        coef[kept] = _back_substitute(R[:k, :k], qtb)
    resid = rhs.copy()
    for i in kept:
        resid -= coef[i] * problem.columns[i]
    resid_norm = float(np.sqrt(max(resid @ problem.weighted(resid), 0.0)))
    return coef, kept, resid_norm


def _back_substitute(R, b):
    x = np.zeros_like(b)
    for i in range(len(b) - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x
