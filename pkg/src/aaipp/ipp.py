"""Iterated penalty Picard (IPP) iteration for the incompressible Navier-Stokes
equations in velocity-only form, plain and Anderson accelerated.

One application of the fixed-point map solves

    (nu A + eps^-1 D + N(u_k)) u_{k+1} = F - acc_k

with Dirichlet data eliminated, then updates the divergence history
``acc_{k+1} = acc_k + eps^-1 D u_{k+1}``.  ``acc`` is the velocity-test dual of
the penalty pressure ``p_k = -eps^-1 sum_j div u_j``; a second accumulator
against continuous P1 hat functions feeds the pressure recovery.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .anderson import AndersonConfig, aa_initialize, aa_step
from .fem import (
    DirichletData,
    apply_dirichlet,
    assemble_graddiv,
    assemble_load,
    assemble_mass,
    assemble_p1_divergence,
    assemble_stiffness,
    divergence_l2,
    pressure_project,
)
from .fem.assembly import convection_data
from .fem.boundary import constrained_mask
from .linalg import nested_dissection, sparse_lu_factor

logger = logging.getLogger(__name__)

RESIDUAL_MODES = ("absolute", "relative")
RESIDUAL_NORMS = ("L2", "H1")


@dataclass(frozen=True)
class ProblemConfig:
    nu: float
    bc: DirichletData
    eps: float = 1.0
    body_force: Optional[Callable] = None
    tol: float = 1e-8
    max_iters: int = 500
    residual_mode: str = "relative"
    residual_norm: str = "L2"

    def __post_init__(self):
        if self.nu <= 0 or self.eps <= 0 or self.tol <= 0:
            raise ValueError("nu, eps and tol must be positive")
        if self.residual_mode not in RESIDUAL_MODES:
            raise ValueError(f"residual_mode must be one of {RESIDUAL_MODES}")
        if self.residual_norm not in RESIDUAL_NORMS:
            raise ValueError(f"residual_norm must be one of {RESIDUAL_NORMS}")


class Operators:
    """Assembled, reusable operators of one space (immutable after construction)."""

    def __init__(self, space):
        self.space = space
        self.M = assemble_mass(space)
        self.A = assemble_stiffness(space)
        self.D = assemble_graddiv(space)
        self.Bp = assemble_p1_divergence(space)
        self.order = _node_ordering(space)
        self._masks = {}

    def mask(self, bc):
        key = bc.indices.tobytes()
        if key not in self._masks:
            self._masks[key] = constrained_mask(self.M, bc)
        return self._masks[key]

    def load(self, f):
        if f is None:
            return np.zeros(self.space.n_vector)
        return assemble_load(self.space, f)


def _node_ordering(space):
    """Nested dissection of the scalar node graph, expanded to interleaved dofs."""
    import scipy.sparse as sp

    c = space.cell_nodes
    rows = np.repeat(c, 6, axis=1).ravel()
    cols = np.tile(c, (1, 6)).ravel()
    G = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(space.n_scalar,) * 2)
    perm = nested_dissection(G)
    return np.column_stack([2 * perm, 2 * perm + 1]).ravel()


@dataclass
class IppState:
    u: np.ndarray
    acc: np.ndarray
    acc_p1: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, space, u0):
        return cls(np.array(u0, dtype=float), np.zeros(space.n_vector), np.zeros(space.n_vertices))

    def pack(self):
        return np.concatenate([self.u, self.acc, self.acc_p1])

    @classmethod
    def unpack(cls, x, n_vector, k=0):
        return cls(x[:n_vector].copy(), x[n_vector:2 * n_vector].copy(), x[2 * n_vector:].copy(), k)


@dataclass
class SolveReport:
    converged: bool = False
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    theta_history: list = field(default_factory=list)
    depth_history: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    final_divergence: float = float("nan")
    wall_time: float = 0.0


def residual_norm(cfg, ops, w):
    K = ops.M if cfg.residual_norm == "L2" else ops.A
    return float(np.sqrt(max(w @ (K @ w), 0.0)))


def boundary_lift(space, bc):
    return bc.lift(space.n_vector)


def apply_G(cfg, ops, st, *, convect=True, shift=0.0, extra_rhs=None, load=None, bc=None):
    """One IPP step: returns the new :class:`IppState`.

    ``shift`` adds ``shift * M`` to the system matrix and ``extra_rhs`` to the
    right side (time stepping).  ``load`` overrides the body-force vector and
    ``bc`` the Dirichlet data of ``cfg``.  With ``convect=False`` the
    convection term is dropped (Stokes limit).
    """
    bc = cfg.bc if bc is None else bc
    inv_eps = 1.0 / cfg.eps
    data = cfg.nu * ops.A.data + inv_eps * ops.D.data
    if shift:
        data = data + shift * ops.M.data
    if convect:
        data = data + convection_data(ops.space, st.u)
    K = ops.space.pattern.matrix(data)
    F = ops.load(cfg.body_force) if load is None else load
    rhs = F - st.acc
    if extra_rhs is not None:
        rhs = rhs + extra_rhs
    K, rhs = apply_dirichlet(K, rhs, bc, ops.mask(bc))
    u_new = sparse_lu_factor(K, ops.order).solve(rhs)
    return IppState(
        u_new,
        st.acc + inv_eps * (ops.D @ u_new),
        st.acc_p1 + inv_eps * (ops.Bp @ u_new),
        st.k + 1,
    )


class _Monitor:
    """Residual bookkeeping shared by the plain and accelerated drivers."""

    def __init__(self, cfg, ops, callback):
        self.cfg, self.ops, self.callback = cfg, ops, callback
        self.report = SolveReport()
        self.ref = None
        self.t0 = time.perf_counter()

    def record(self, w, theta=1.0, depth=0, alphas=None):
        r = residual_norm(self.cfg, self.ops, w)
        if self.cfg.residual_mode == "relative":
            if self.ref is None:
                self.ref = r if r > 0.0 else 1.0
            r = r / self.ref
        rep = self.report
        rep.iterations += 1
        rep.residual_history.append(r)
        rep.theta_history.append(theta)
        rep.depth_history.append(depth)
        rep.alpha_history.append(np.ones(1) if alphas is None else alphas)
        if self.callback is not None:
            self.callback(rep.iterations, r, theta, depth)
        logger.debug("iter %d residual %.3e theta %.3f depth %d", rep.iterations, r, theta, depth)
        return r < self.cfg.tol

    def finish(self, u, converged):
        rep = self.report
        rep.converged = converged
        rep.final_divergence = divergence_l2(self.ops.space, u)
        rep.wall_time = time.perf_counter() - self.t0
        return rep


def ipp_solve(cfg, ops, u0=None, callback=None, **g_kwargs):
    """Plain IPP: iterate ``x_{k+1} = G(x_k)`` until the velocity update is below tol."""
    space = ops.space
    u0 = boundary_lift(space, cfg.bc) if u0 is None else u0
    st = IppState.initial(space, u0)
    mon = _Monitor(cfg, ops, callback)
    converged = False
    for _ in range(cfg.max_iters):
        new = apply_G(cfg, ops, st, **g_kwargs)
        done = mon.record(new.u - st.u)
        st = new
        if done:
            converged = True
            break
    return st, mon.finish(st.u, converged)


def aaipp_solve(cfg, ops, u0=None, aa_cfg=None, callback=None, **g_kwargs):
    """Anderson accelerated IPP.

    The accelerated state is ``(u, acc, acc_p1)``; the optimization measures
    only the velocity block in the mass-matrix inner product, and the affine
    combination is applied to the whole state.
    """
    aa_cfg = AndersonConfig() if aa_cfg is None else aa_cfg
    space = ops.space
    n = space.n_vector
    u0 = boundary_lift(space, cfg.bc) if u0 is None else u0
    st = IppState.initial(space, u0)
    engine = aa_initialize(st.pack(), aa_cfg, weight=ops.M, block=slice(0, n))
    mon = _Monitor(cfg, ops, callback)
    converged = False
    for _ in range(cfg.max_iters):
        g_state = apply_G(cfg, ops, st, **g_kwargs)
        g_val = g_state.pack()
        w_u = g_val[:n] - engine.x[:n]
        x_next, rep = aa_step(engine, g_val)
        done = mon.record(w_u, rep.theta, rep.effective_depth, rep.alphas)
        st = IppState.unpack(x_next, n, st.k + 1)
        if done:
            converged = True
            break
    return st, mon.finish(st.u, converged)


def recover_pressure(st, space):
    """Zero-mean continuous P1 pressure ``-eps^-1 sum_j div u_j`` by L2 projection."""
    return pressure_project(space, st.acc_p1, scale=-1.0)


def solve(cfg, ops, aa_cfg=None, u0=None, callback=None, **g_kwargs):
    """Dispatch to :func:`ipp_solve` (no acceleration) or :func:`aaipp_solve`."""
    if aa_cfg is None:
        return ipp_solve(cfg, ops, u0, callback, **g_kwargs)
    return aaipp_solve(cfg, ops, u0, aa_cfg, callback, **g_kwargs)


class NonlinearSolveError(RuntimeError):
    def __init__(self, step, report):
        super().__init__(f"nonlinear iteration did not converge at time step {step}")
        self.step = step
        self.report = report


@dataclass
class TransientResult:
    times: np.ndarray
    u: np.ndarray
    iterations: list
    reports: list
    history: Optional[list] = None


def bdf2_transient_solve(
    cfg,
    ops,
    u_init,
    dt,
    T,
    aa_cfg=None,
    t0=0.0,
    force_at=None,
    bc_at=None,
    keep_history=False,
):
    """BDF2 time stepping with one IPP/AAIPP nonlinear solve per step.

    The first step is backward Euler.  Each nonlinear solve starts from the
    previous step's velocity with an empty divergence history and a fresh
    Anderson window.  ``force_at(t)`` and ``bc_at(t)`` supply time-dependent
    body force (a callable of ``x, y``) and Dirichlet data; they default to
    the steady data in ``cfg``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    nsteps = int(round((T - t0) / dt))
    M = ops.M
    u_prev, u_curr = None, np.array(u_init, dtype=float)
    times = [t0]
    history = [u_curr.copy()] if keep_history else None
    iters, reports = [], []
    for step in range(1, nsteps + 1):
        t = t0 + step * dt
        bc = cfg.bc if bc_at is None else bc_at(t)
        load = ops.load(cfg.body_force if force_at is None else force_at(t))
        if u_prev is None:
            shift, extra = 1.0 / dt, (M @ u_curr) / dt
        else:
            shift, extra = 1.5 / dt, (M @ (4.0 * u_curr - u_prev)) / (2.0 * dt)
        step_cfg = replace(cfg, bc=bc)
        guess = u_curr.copy()
        guess[bc.indices] = bc.values
        st, rep = solve(step_cfg, ops, aa_cfg, guess, shift=shift, extra_rhs=extra, load=load)
        if not rep.converged:
            raise NonlinearSolveError(step, rep)
        u_prev, u_curr = u_curr, st.u
        times.append(t)
        iters.append(rep.iterations)
        reports.append(rep)
        if keep_history:
            history.append(u_curr.copy())
    return TransientResult(np.array(times), u_curr, iters, reports, history)
