"""scikit-learn style wrapper: ``fit`` solves a problem, ``predict`` evaluates it."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import Problem
from .config import ProblemConfig
from .solver import SolveConfig, continue_in_degree

__all__ = ["SpectralGalerkinSolver"]


class SpectralGalerkinSolver(BaseEstimator):
    """Degree continuation for a boundary-value problem.

    Parameters mirror :class:`ballgalerkin.solver.SolveConfig`.
    ``initial_guess`` is ``"zeros"`` or a float used for every starting
    coefficient.

    Examples
    --------
    >>> from ballgalerkin import Problem, SpectralGalerkinSolver, identity_map
    >>> est = SpectralGalerkinSolver(n_end=6).fit(Problem(identity_map(2), f=1.0))
    >>> est.predict([[0.0, 0.0]]).round(4)
    array([0.25])
    """

    def __init__(
        self,
        n_start=1,
        n_end=10,
        newton_tol=1e-12,
        max_newton=50,
        initial_guess="zeros",
        quad_scale=1.0,
        quad_extra=0,
        coordinates="ball",
    ):
        self.n_start = n_start
        self.n_end = n_end
        self.newton_tol = newton_tol
        self.max_newton = max_newton
        self.initial_guess = initial_guess
        self.quad_scale = quad_scale
        self.quad_extra = quad_extra
        self.coordinates = coordinates

    def _solve_config(self):
        guess = self.initial_guess
        if not isinstance(guess, str):
            guess = ("constant", float(guess))
        return SolveConfig(
            n_start=self.n_start,
            n_end=self.n_end,
            newton_tol=self.newton_tol,
            max_newton=self.max_newton,
            initial_guess=guess,
            quad_scale=self.quad_scale,
            quad_extra=self.quad_extra,
        )

    def fit(self, problem, y=None):
        """Solve ``problem`` (a Problem or ProblemConfig) for n_start..n_end.

        ``y`` is ignored; the boundary-value problem carries its own data.
        """
        if self.coordinates not in ("ball", "physical"):
            raise ValueError(f"coordinates must be 'ball' or 'physical', got {self.coordinates!r}")
        if isinstance(problem, ProblemConfig):
            problem = problem.build_problem()
        if not isinstance(problem, Problem):
            raise TypeError(f"fit expects a Problem or ProblemConfig, got {type(problem).__name__}")
        self.path_ = continue_in_degree(problem, self._solve_config())
        self.solution_ = self.path_[-1]
        self.coef_ = self.solution_.alpha
        self.n_iter_ = np.array([s.iterations for s in self.path_])
        self.n_features_in_ = problem.d
        return self

    def predict(self, X):
        """Solution values at points ``X`` of shape (P, d)."""
        check_is_fitted(self, "solution_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        if self.coordinates == "physical":
            return self.solution_.evaluate_physical(X)
        return self.solution_.evaluate(X)
