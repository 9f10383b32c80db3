"""Assembly of the discrete operators on a P2 vector space.

All vector operators live on ``space.pattern`` so their data arrays can be
added directly.  Trial functions index columns, test functions rows.
"""

import numpy as np

from ..linalg import CsrPattern, spmv
from .quadrature import DEGREE5

_I2 = np.eye(2)


def _cache(space, key, build):
    store = space.__dict__.setdefault("_operator_cache", {})
    if key not in store:
        store[key] = build()
    return store[key]


def _vector_block(S):
    """Scalar element matrices (F, 6, 6) -> componentwise vector blocks (F, 12, 12)."""
    F = len(S)
    return np.einsum("fab,cd->facbd", S, _I2).reshape(F, 12, 12)


def element_mass(space):
    phi, _, wdet = space.tabulation
    return np.einsum("fq,qa,qb->fab", wdet, phi, phi)


def element_stiffness(space):
    _, grads, wdet = space.tabulation
    return np.einsum("fq,fqad,fqbd->fab", wdet, grads, grads)


def element_graddiv(space):
    _, grads, wdet = space.tabulation
    F = len(wdet)
    return np.einsum("fq,fqac,fqbd->facbd", wdet, grads, grads).reshape(F, 12, 12)


def element_convection(space, w):
    """Skew-symmetrized convection ``1/2 (w.grad u, v) - 1/2 (w.grad v, u)``
    per element, scalar (F, 6, 6)."""
    phi, grads, wdet = space.tabulation
    wc = w.reshape(-1, 2)[space.cell_nodes]  # (F, 6, 2)
    wq = np.einsum("qa,fac->fqc", phi, wc)
    adv = np.einsum("fqc,fqbc->fqb", wq, grads)  # w . grad(phi_b)
    K = 0.5 * np.einsum("fq,qa,fqb->fab", wdet, phi, adv)
    return K - K.transpose(0, 2, 1)


def assemble_mass(space):
    return _cache(space, "mass", lambda: space.pattern.assemble(_vector_block(element_mass(space))))


def assemble_stiffness(space):
    return _cache(space, "stiffness", lambda: space.pattern.assemble(_vector_block(element_stiffness(space))))


def assemble_graddiv(space):
    return _cache(space, "graddiv", lambda: space.pattern.assemble(element_graddiv(space)))


def convection_data(space, w):
    """Data array of N(w) on ``space.pattern`` (used by the solvers' hot loop)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (space.n_vector,):
        raise ValueError(f"convecting field must have {space.n_vector} entries, got {w.shape}")
    return space.pattern.sum_values(_vector_block(element_convection(space, w)))


def assemble_convection(space, w):
    return space.pattern.matrix(convection_data(space, w))


def quadrature_points(space, rule=DEGREE5):
    p = space.mesh.points[space.mesh.triangles]  # (F, 3, 2)
    return np.einsum("qk,fkd->fqd", rule.points, p)


def assemble_load(space, f):
    """Load vector ``F_i = int f . phi_i`` for ``f(x, y) -> (fx, fy)``."""
    phi, _, wdet = space.tabulation
    xq = quadrature_points(space)
    fx, fy = f(xq[..., 0], xq[..., 1])
    fq = np.stack(np.broadcast_arrays(fx, fy, xq[..., 0])[:2], axis=-1)
    local = np.einsum("fq,qa,fqc->fac", wdet, phi, fq)
    return np.bincount(space.cell_dofs.ravel(), weights=local.ravel(), minlength=space.n_vector)


# --- continuous P1 pressure space on the mesh vertices ---------------------


def p1_pattern(space):
    def build():
        t = space.mesh.triangles
        rows = np.repeat(t[:, :, None], 3, axis=2)
        cols = np.repeat(t[:, None, :], 3, axis=1)
        return CsrPattern(space.n_vertices, space.n_vertices, rows, cols)

    return _cache(space, "p1_pattern", build)


def assemble_p1_mass(space):
    def build():
        _, area = space.geometry
        local = area[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
        return p1_pattern(space).assemble(local)

    return _cache(space, "p1_mass", build)


def assemble_p1_divergence(space):
    """``B[i, j] = int psi_i div(phi_j)``: P1 test functions against vector P2 trial."""

    def build():
        _, grads, wdet = space.tabulation
        lam = DEGREE5.points  # P1 basis = barycentric coordinates
        local = np.einsum("fq,qi,fqac->fiac", wdet, lam, grads).reshape(len(wdet), 3, 12)
        t = space.mesh.triangles
        rows = np.repeat(t[:, :, None], 12, axis=2)
        cols = np.repeat(space.cell_dofs[:, None, :], 3, axis=1)
        return CsrPattern(space.n_vertices, space.n_vector, rows, cols).assemble(local)

    return _cache(space, "p1_divergence", build)


# --- norms ------------------------------------------------------------------


def _quad_form(A, v):
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ spmv(A, v), 0.0)))


def l2_norm(space, v):
    return _quad_form(assemble_mass(space), v)


def h1_seminorm(space, v):
    return _quad_form(assemble_stiffness(space), v)


def divergence_l2(space, v):
    """``||div v||`` from quadrature-point values (no cancellation in ``v.Dv``)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (space.n_vector,):
        raise ValueError(f"expected {space.n_vector} coefficients, got {v.shape}")
    _, grads, wdet = space.tabulation
    vc = v.reshape(-1, 2)[space.cell_nodes]
    div = np.einsum("fqac,fac->fq", grads, vc)
    return float(np.sqrt(np.sum(wdet * div**2)))


def p1_l2_norm(space, q):
    return _quad_form(assemble_p1_mass(space), q)


def pressure_project(space, dual, scale=1.0):
    """Continuous P1 L2 projection: solve ``M_p q = scale * dual``, then remove the mean.

    ``dual`` holds integrals of the target against the P1 hat functions.
    """
    from ..linalg import sparse_solve

    Mp = assemble_p1_mass(space)
    dual = np.asarray(dual, dtype=float)
    if not np.any(dual):
        return np.zeros(space.n_vertices)
    q = sparse_solve(Mp, scale * dual)
    return remove_mean(space, q)


def remove_mean(space, q):
    w = assemble_p1_mass(space) @ np.ones(space.n_vertices)
    return q - (w @ q) / w.sum()


def p1_integral(space, q):
    return float((assemble_p1_mass(space) @ np.ones(space.n_vertices)) @ q)
