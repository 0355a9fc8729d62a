"""Damped Newton solve of the Galerkin system and continuation in degree."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .assembly import GalerkinSystem, Offset, Problem, build_system
from .basis import BasisSet, basis_size
from .geometry import DomainMap

__all__ = [
    "SolveConfig",
    "SpectralSolution",
    "NonConvergence",
    "SingularNewtonMatrix",
    "newton_solve",
    "continue_in_degree",
    "initial_coefficients",
    "evaluation_grid",
    "reference_error",
]

logger = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    """Newton did not reach the tolerance; ``solution`` holds the best iterate."""

    def __init__(self, message, solution=None, degree=None):
        super().__init__(message)
        self.solution = solution
        self.degree = degree
        self.completed = []


class SingularNewtonMatrix(RuntimeError):
    """The Newton matrix is non-finite or has no usable eigenvalues.

    ``completed`` lists the solutions of lower degrees in a continuation.
    """

    completed: list = []


@dataclass(frozen=True)
class SolveConfig:
    """Newton and continuation settings.

    ``initial_guess`` is ``"zeros"``, ``("constant", c)`` or an array of
    coefficients for degree ``n_start``.  Newton stops once
    ``|r|_inf <= newton_tol * max(1, scale)`` where ``scale`` is the largest
    componentwise sum ``|M| |alpha| + |V|^T |w f|`` entering the residual,
    or once the full Newton correction is below ``step_tol * (1 + |alpha|_inf)``.

    The quadrature order at degree n is ``ceil(quad_scale * (n + 2)) +
    quad_extra``; raise ``quad_scale`` so a polynomial nonlinearity is
    integrated exactly.  Eigenvalues of the Newton matrix below
    ``eig_rtol`` times the largest are dropped from the solve.
    """

    n_start: int = 1
    n_end: int = 1
    newton_tol: float = 1e-12
    max_newton: int = 50
    damping: float = 0.5
    max_halvings: int = 20
    initial_guess: object = "zeros"
    quad_extra: int = 0
    quad_scale: float = 1.0
    step_tol: float = 1e-13
    eig_rtol: float = 1e-10

    def __post_init__(self):
        if self.n_start < 1 and not (self.n_start == 0 and self.n_end == 0):
            raise ValueError("n_start must be >= 1")
        if self.n_end < self.n_start:
            raise ValueError("n_end must be >= n_start")
        if self.newton_tol <= 0 or not 0 < self.damping < 1:
            raise ValueError("tolerances must be positive and damping in (0, 1)")
        if self.max_newton < 0 or self.max_halvings < 0:
            raise ValueError("iteration limits must be >= 0")
        if self.quad_scale < 1.0 or self.quad_extra < 0:
            raise ValueError("quad_scale must be >= 1 and quad_extra >= 0")
        if not 0.0 <= self.eig_rtol < 1.0:
            raise ValueError("eig_rtol must lie in [0, 1)")

    def quad_order(self, d: int, n: int) -> int:
        from .quadrature import default_order

        return math.ceil(self.quad_scale * default_order(d, n) - 1e-9) + self.quad_extra


@dataclass
class SpectralSolution:
    """u(x) = sum_l alpha_l psi_l(x) + offset(x) on the ball."""

    basis: BasisSet
    alpha: np.ndarray
    map: Optional[DomainMap] = None
    offset: Optional[Offset] = None
    iterations: int = 0
    residual: float = float("nan")
    trace: list = field(default_factory=list)
    # text description of the problem, kept with stored solutions
    descriptor: Optional[dict] = None

    @property
    def d(self):
        return self.basis.d

    @property
    def n(self):
        return self.basis.n

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Values at ball points ``x`` of shape (P, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = self.basis.values(x) @ self.alpha
        if self.offset is not None:
            out = out + self.offset.value(x)
        return out

    def evaluate_physical(self, s):
        """Values at physical points; needs a map with an inverse."""
        if self.map is None:
            raise ValueError("solution has no domain map")
        return self.evaluate(self.map.pull(s))

    def padded(self, n: int) -> np.ndarray:
        """Coefficients zero-padded to the basis of degree ``n``."""
        out = np.zeros(basis_size(self.d, n))
        out[: len(self.alpha)] = self.alpha
        return out


def _norm(r):
    return float(np.max(np.abs(r))) if len(r) else 0.0


def _scale(system, alpha):
    return max(1.0, system.residual_scale(alpha))


class _TruncatedSolver:
    """Solve with a symmetric matrix, dropping eigenvalues below ``rtol * max|lambda|``.

    Discrete problems invariant under rotations of the disk have Jacobians
    with exact or near null directions along the symmetry orbit; dropping
    them gives the minimum-norm correction instead of a blown-up one.
    """

    def __init__(self, matrix, rtol):
        if not np.all(np.isfinite(matrix)):
            raise SingularNewtonMatrix("Newton matrix has non-finite entries")
        lam, vecs = np.linalg.eigh(matrix)
        top = np.max(np.abs(lam)) if len(lam) else 0.0
        keep = np.abs(lam) > rtol * top
        if len(lam) and not np.any(keep):
            raise SingularNewtonMatrix("Newton matrix is zero")
        self.dropped = int(np.count_nonzero(~keep))
        self._lam = lam[keep]
        self._vecs = vecs[:, keep]

    def __call__(self, rhs):
        return self._vecs @ ((self._vecs.T @ rhs) / self._lam)


def _merit(stiffness):
    """Squared dual norm r^T M^{-1} r, or r^T r when M is not positive definite."""
    try:
        factor = scipy.linalg.cho_factor(stiffness)
    except (np.linalg.LinAlgError, ValueError):
        logger.debug("stiffness not positive definite, using the Euclidean merit")
        return lambda r: float(r @ r)
    return lambda r: float(r @ scipy.linalg.cho_solve(factor, r))


def newton_solve(system: GalerkinSystem, guess, config: SolveConfig = SolveConfig()):
    """Damped Newton on ``stiffness @ alpha - load(alpha) = 0``.

    Each step solves ``(stiffness - load_jacobian) delta = -residual`` and
    halves the step until the residual decreases in the norm dual to the
    stiffness, ``|r|_* = sqrt(r^T M^{-1} r)``.  That is the H^-1 size of the
    residual functional and does not grow with the degree the way the
    Euclidean norm of the coefficients does.
    """
    alpha = np.array(guess, dtype=float)
    if alpha.shape != (len(system),):
        raise ValueError(f"guess has shape {alpha.shape}, expected ({len(system)},)")
    problem = system.problem

    def solution(a, iters, res, trace):
        return SpectralSolution(system.basis, a.copy(), problem.map, problem.offset, iters, res, list(trace))

    merit = _merit(system.stiffness)
    r = system.residual(alpha)
    rnorm = _norm(r)
    trace = [rnorm]
    for it in range(config.max_newton + 1):
        if rnorm <= config.newton_tol * _scale(system, alpha):
            return solution(alpha, it, rnorm, trace)
        if it == config.max_newton:
            break
        solve = _TruncatedSolver(system.newton_matrix(alpha), config.eig_rtol)
        delta = solve(-r)
        if _norm(delta) <= config.step_tol * (1.0 + _norm(alpha)):
            # correction below the resolution of alpha: residual is at its rounding floor
            return solution(alpha, it, rnorm, trace)
        current = merit(r)
        step = 1.0
        for _ in range(config.max_halvings + 1):
            trial = alpha + step * delta
            try:
                trial_r = system.residual(trial)
            except ValueError:
                trial_r = None
            if trial_r is not None and merit(trial_r) < current:
                break
            step *= config.damping
        else:
            raise NonConvergence(
                f"line search failed at iteration {it + 1} (residual {rnorm:.3e})",
                solution(alpha, it, rnorm, trace),
            )
        alpha, r = trial, trial_r
        rnorm = _norm(r)
        trace.append(rnorm)
        logger.debug("newton it=%d step=%g residual=%.3e dropped=%d", it + 1, step, rnorm, solve.dropped)
    raise NonConvergence(
        f"no convergence in {config.max_newton} iterations (residual {rnorm:.3e})",
        solution(alpha, config.max_newton, rnorm, trace),
    )


def initial_coefficients(spec, size: int) -> np.ndarray:
    """Starting coefficients from a SolveConfig ``initial_guess`` entry."""
    if isinstance(spec, str):
        if spec != "zeros":
            raise ValueError(f"unknown initial guess {spec!r}")
        return np.zeros(size)
    if isinstance(spec, tuple) and len(spec) == 2 and spec[0] == "constant":
        return np.full(size, float(spec[1]))
    arr = np.asarray(spec, dtype=float)
    if arr.shape != (size,):
        raise ValueError(f"initial coefficients have shape {arr.shape}, expected ({size},)")
    return arr.copy()


def continue_in_degree(problem: Problem, config: SolveConfig, quad_order=None):
    """Solve for n = n_start..n_end, seeding each degree with the previous solution.

    ``quad_order`` maps a degree to a quadrature order; by default
    ``config.quad_order``.
    """
    if quad_order is None:
        quad_order = lambda n: config.quad_order(problem.d, n)  # noqa: E731
    solutions = []
    guess = None
    for n in range(config.n_start, config.n_end + 1):
        system = build_system(problem, n, quad_order(n))
        if guess is None:
            guess = initial_coefficients(config.initial_guess, len(system))
        try:
            sol = newton_solve(system, guess, config)
        except NonConvergence as exc:
            exc.degree = n
            exc.completed = solutions
            raise
        except SingularNewtonMatrix as exc:
            err = SingularNewtonMatrix(f"degree {n}: {exc}")
            err.completed = solutions
            raise err from exc
        solutions.append(sol)
        logger.info("degree %d: %d Newton iterations, residual %.3e", n, sol.iterations, sol.residual)
        guess = sol.padded(n + 1)
    return solutions


def evaluation_grid(d: int) -> np.ndarray:
    """Fixed polar (51 x 101) or spherical (21 x 41 x 21) grid on the closed ball."""
    if d == 2:
        r = np.linspace(0.0, 1.0, 51)
        theta = 2.0 * np.pi * np.arange(101) / 101
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        return np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    if d == 3:
        r = np.linspace(0.0, 1.0, 21)
        theta = 2.0 * np.pi * np.arange(41) / 41
        phi = np.linspace(0.0, np.pi, 21)
        rr, tt, pp = np.meshgrid(r, theta, phi, indexing="ij")
        return np.column_stack([
            (rr * np.sin(pp) * np.cos(tt)).ravel(),
            (rr * np.sin(pp) * np.sin(tt)).ravel(),
            (rr * np.cos(pp)).ravel(),
        ])
    raise ValueError(f"dimension must be 2 or 3, got {d}")


def reference_error(solutions, reference, grid=None) -> np.ndarray:
    """Max-norm differences on ``grid`` between each solution and ``reference``.

    ``reference`` is a SpectralSolution of higher degree or any callable on
    ball points (for an analytic truth).
    """
    if not solutions:
        return np.zeros(0)
    d = solutions[0].d
    if grid is None:
        grid = evaluation_grid(d)
    if isinstance(reference, SpectralSolution):
        if reference.d != d or reference.basis.kind != solutions[0].basis.kind:
            raise ValueError("reference solution belongs to a different problem")
        if reference.map is not None and solutions[0].map is not None:
            if (reference.map.name, reference.map.params) != (solutions[0].map.name, solutions[0].map.params):
                raise ValueError("reference solution uses a different domain map")
        if any(s is not reference and s.n >= reference.n for s in solutions):
            raise ValueError("reference degree must exceed every solution degree")
        ref = reference.evaluate(grid)
    else:
        ref = np.asarray(reference(grid), dtype=float)
    return np.array([np.max(np.abs(s.evaluate(grid) - ref)) for s in solutions])
