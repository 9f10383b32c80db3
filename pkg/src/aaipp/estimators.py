"""scikit-learn style facade over the AAIPP solver.

``fit`` takes a :class:`~aaipp.problems.FlowProblem` in place of a design
matrix and solves it; ``predict`` evaluates the converged velocity at points.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .anderson import FULL, AndersonConfig
from .ipp import aaipp_solve, ipp_solve, recover_pressure
from .problems import FlowProblem


class IPPSolver(BaseEstimator):
    """Iterated penalty Picard solver, Anderson accelerated unless ``depth`` is None.

    Parameters
    ----------
    depth : int, "full" or None
        Anderson depth; None runs the plain iteration.
    beta : float
        Damping factor in (0, 1].
    eps : float
        Penalty parameter.
    tol, max_iters, residual_mode, residual_norm
        Stopping test on the velocity update.
    drop_tol, alpha_zero_tol : float
        Least-squares safeguards of the acceleration.

    Attributes
    ----------
    velocity_ : ndarray
        Converged (or last) velocity coefficients, interleaved P2.
    pressure_ : ndarray
        Recovered zero-mean P1 pressure at the mesh vertices.
    report_ : SolveReport
    """

    def __init__(
        self,
        depth=1,
        beta=1.0,
        eps=1.0,
        tol=1e-8,
        max_iters=500,
        residual_mode="relative",
        residual_norm="L2",
        drop_tol=1e-8,
        alpha_zero_tol=1e-12,
    ):
        self.depth = depth
        self.beta = beta
        self.eps = eps
        self.tol = tol
        self.max_iters = max_iters
        self.residual_mode = residual_mode
        self.residual_norm = residual_norm
        self.drop_tol = drop_tol
        self.alpha_zero_tol = alpha_zero_tol

    def _aa_config(self):
        if self.depth is None:
            return None
        depth = FULL if isinstance(self.depth, str) else int(self.depth)
        return AndersonConfig(depth, self.beta, self.drop_tol, self.alpha_zero_tol)

    def fit(self, problem, y=None, callback=None):
        if not isinstance(problem, FlowProblem):
            raise TypeError(f"fit expects a FlowProblem, got {type(problem).__name__}")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        cfg = problem.config(
            eps=self.eps,
            tol=self.tol,
            max_iters=int(self.max_iters),
            residual_mode=self.residual_mode,
            residual_norm=self.residual_norm,
        )
        aa_cfg = self._aa_config()
        if aa_cfg is None:
            state, report = ipp_solve(cfg, problem.ops, callback=callback)
        else:
            state, report = aaipp_solve(cfg, problem.ops, aa_cfg=aa_cfg, callback=callback)
        self.space_ = problem.space
        self.state_ = state
        self.report_ = report
        self.velocity_ = state.u
        self.pressure_ = recover_pressure(state, problem.space)
        self.converged_ = report.converged
        self.n_iter_ = report.iterations
        return self

    def predict(self, X):
        """Velocity at the points ``X`` (shape ``(P, 2)``) as a ``(P, 2)`` array."""
        check_is_fitted(self, "velocity_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError(f"expected points with 2 coordinates, got {X.shape[1]}")
        return self.space_.evaluate(self.velocity_, X)


__all__ = ["IPPSolver"]
