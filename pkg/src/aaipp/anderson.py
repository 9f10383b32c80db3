"""Windowed Anderson acceleration for fixed-point iterations ``x = g(x)``.

The engine is driven one step at a time: the caller evaluates ``g`` at the
current iterate and hands the value to :func:`aa_step`, which returns the next
iterate.  The least-squares problem is posed in difference form on the
residuals ``w_j = g(x_{j-1}) - x_{j-1}`` and converted to affine coefficients
``alpha`` (summing to one) for the update

    x_k = (1 - beta) * sum_j alpha_j x_j + beta * sum_j alpha_j g(x_j).

The residual norm can be restricted to a block of the state vector and
weighted by an SPD operator, so the optimization may measure only part of the
state while the combination is applied to all of it.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .linalg import DenseLsProblem, dense_least_squares

FULL = "full"


@dataclass(frozen=True)
class AndersonConfig:
    """Depth, damping schedule and safeguards.

    ``depth`` is a non-negative integer or ``"full"`` (use every stored
    residual).  ``damping`` is one value or a schedule indexed by step; the
    last entry is reused once the schedule runs out.
    """

    depth: Union[int, str] = 1
    damping: Union[float, Sequence[float]] = 1.0
    drop_tol: float = 1e-8
    alpha_zero_tol: float = 1e-12

    def __post_init__(self):
        if isinstance(self.depth, str):
            if self.depth.lower() != FULL:
                raise ValueError(f"depth must be an integer or 'full', got {self.depth!r}")
            object.__setattr__(self, "depth", FULL)
        elif int(self.depth) < 0:
            raise ValueError("depth must be non-negative")
        betas = np.atleast_1d(np.asarray(self.damping, dtype=float))
        if betas.size == 0 or np.any(betas <= 0.0) or np.any(betas > 1.0):
            raise ValueError("damping factors must lie in (0, 1]")
        if not 0.0 < self.drop_tol < 1.0:
            raise ValueError("drop_tol must lie in (0, 1)")

    @property
    def is_full(self):
        return self.depth == FULL

    def beta(self, k):
        """Damping factor of step ``k`` (1-based)."""
        betas = np.atleast_1d(np.asarray(self.damping, dtype=float))
        return float(betas[min(k - 1, betas.size - 1)])


@dataclass(frozen=True)
class StepReport:
    k: int
    theta: float
    alphas: np.ndarray
    effective_depth: int
    dropped_columns: int
    residual_norm: float
    beta: float


@dataclass
class AndersonState:
    x: np.ndarray
    config: AndersonConfig
    weight: Optional[object] = None
    block: Optional[slice] = None
    k: int = 0
    iterates: deque = field(default_factory=deque)
    images: deque = field(default_factory=deque)
    report: Optional[StepReport] = None

    def measured(self, v):
        return v if self.block is None else v[self.block]

    def norm(self, v):
        v = self.measured(v)
        wv = v if self.weight is None else self.weight @ v
        return float(np.sqrt(max(v @ wv, 0.0)))


def aa_initialize(x0, config, weight=None, block=None):
    """Fresh engine state at the initial iterate ``x0``.

    ``weight`` (SPD, optional) and ``block`` (slice, optional) define the
    norm used by the optimization: ``||v|| = sqrt(v[block] . W v[block])``.
    """
    depth = None if config.is_full else int(config.depth) + 1
    return AndersonState(
        x=np.array(x0, dtype=float),
        config=config,
        weight=weight,
        block=block,
        iterates=deque(maxlen=depth),
        images=deque(maxlen=depth),
    )


def _affine_coefficients(gamma):
    """Difference-form coefficients -> affine weights on (current, previous, ...)."""
    m = len(gamma)
    alpha = np.zeros(m + 1)
    alpha[1:m] = gamma[:-1] - gamma[1:]
    alpha[m] = gamma[-1]
    # telescoping gives 1 - gamma[0]; taking the exact complement keeps sum(alpha) == 1
    # to one rounding even when the coefficients are large
    alpha[0] = 1.0 - math.fsum(alpha[1:])
    return alpha


def aa_step(state, g_val):
    """Advance the engine with ``g_val = g(state.x)``; returns ``(x_next, report)``.

    The engine state is updated in place.
    """
    cfg = state.config
    g_val = np.asarray(g_val, dtype=float)
    x = state.x
    if g_val.shape != x.shape:
        raise ValueError(f"g value has shape {g_val.shape}, iterate {x.shape}")
    state.k += 1
    k = state.k
    beta = cfg.beta(k)
    w = g_val - x
    w_norm = state.norm(w)

    if w_norm == 0.0:
        state.report = StepReport(k, 0.0, np.ones(1), 0, 0, 0.0, beta)
        return x.copy(), state.report

    state.iterates.appendleft(x)
    state.images.appendleft(g_val)
    m_k = len(state.iterates) - 1

    if m_k == 0:
        alphas = np.ones(1)
        x_next = (1.0 - beta) * x + beta * g_val
        state.report = StepReport(k, 1.0, alphas, 0, 0, w_norm, beta)
        state.x = x_next
        return x_next, state.report

    residuals = [state.measured(gj - xj) for xj, gj in zip(state.iterates, state.images)]
    columns = [residuals[i] - residuals[i + 1] for i in range(m_k)]
    rhs = residuals[0]

    window = m_k
    while True:
        problem = DenseLsProblem(columns[:window], rhs, state.weight)
        gamma, kept, opt_norm = dense_least_squares(problem, cfg.drop_tol)
        if not kept or abs(gamma[kept[-1]]) >= cfg.alpha_zero_tol:
            break
        # oldest kept pair carries no weight: shrink the window and re-solve
        window = kept[-1]
        if window == 0:
            gamma, kept, opt_norm = np.zeros(0), [], w_norm
            break

    alphas = np.zeros(m_k + 1)
    if kept:
        alphas[: len(gamma) + 1] = _affine_coefficients(gamma)
    else:
        alphas[0] = 1.0
        opt_norm = w_norm

    x_comb = np.zeros_like(x)
    g_comb = np.zeros_like(x)
    for a, xj, gj in zip(alphas, state.iterates, state.images):
        if a != 0.0:
            x_comb += a * xj
            g_comb += a * gj
    x_next = (1.0 - beta) * x_comb + beta * g_comb

    theta = opt_norm / w_norm if kept else 1.0
    state.report = StepReport(k, theta, alphas, len(kept), m_k - len(kept), w_norm, beta)
    state.x = x_next
    return x_next, state.report


@dataclass(frozen=True)
class FixedPointResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residuals: list
    reports: list


def anderson_solve(g, x0, config, tol=1e-10, max_iters=100, weight=None, block=None):
    """Iterate ``x = g(x)`` with Anderson acceleration until ``||g(x) - x|| <= tol``."""
    state = aa_initialize(x0, config, weight, block)
    residuals, reports = [], []
    for it in range(max_iters + 1):
        g_val = g(state.x)
        r = state.norm(g_val - state.x)
        residuals.append(r)
        if r <= tol:
            return FixedPointResult(state.x, True, it, residuals, reports)
        if it == max_iters:
            break
        _, report = aa_step(state, g_val)
        reports.append(report)
    return FixedPointResult(state.x, False, max_iters, residuals, reports)
