"""Galerkin system for -div(A grad u) + gamma u = f(s, u) pulled back to the ball.

Dirichlet problems use the bubble basis (1 - |x|^2) phi, Neumann problems
the plain basis.  Both assemble

    M[l, k] = Q[ det J (grad psi_l . A~ grad psi_k) + det J gamma(Phi) psi_k psi_l ]
    b[l]    = Q[ det J f(Phi, u_n) psi_l ]

with one quadrature rule per degree.  Nonhomogeneous boundary data are
handled by an additive offset ``u = w + o`` whose image under the
operator is moved to the right-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .basis import BasisSet
from .geometry import DomainMap, pull_back, surface_element
from .quadrature import QuadratureRule, ball_rule, default_order, disk_rule, gauss_legendre

__all__ = [
    "DirichletData",
    "NeumannData",
    "Offset",
    "Problem",
    "EvaluationError",
    "GalerkinSystem",
    "quadrature_for",
    "build_system",
    "assemble_linear",
    "assemble_load",
    "assemble_load_jacobian",
    "lift_dirichlet",
    "lift_neumann",
    "boundary_rule",
]


class EvaluationError(ValueError):
    """Problem data evaluated to a non-finite value."""


@dataclass(frozen=True)
class DirichletData:
    """u = g on the boundary, with an analytic extension G and its image LG.

    ``G`` and ``LG`` are callables ``(s, x) -> (P,)`` on the whole domain.
    """

    G: Callable
    LG: Optional[Callable] = None
    g: Optional[Callable] = None


@dataclass(frozen=True)
class NeumannData:
    """du/dn = g on the boundary; ``g`` is ``(s, x) -> (P,)``."""

    g: Callable


@dataclass(frozen=True)
class Offset:
    """Known part ``o`` of the solution, evaluated in ball coordinates.

    ``value(x)`` is o and ``l_value(x)`` is (L o) at Phi(x).  ``descriptor``
    is whatever the persistence layer needs to rebuild ``value``.
    """

    value: Callable
    l_value: Callable
    descriptor: tuple = ()


@dataclass(frozen=True)
class Problem:
    """-div(A grad u) + gamma u = f(s, u) on Phi(B^d) with a boundary condition.

    Field callables take physical points ``s`` (P, d) and the matching ball
    points ``x`` (P, d); ``f`` and ``dfdz`` also take the values ``z`` (P,).
    ``A=None`` means the identity matrix.
    """

    map: DomainMap
    f: object = 0.0
    dfdz: Optional[Callable] = None
    gamma: object = 0.0
    A: Optional[Callable] = None
    bc: str = "dirichlet"
    boundary: object = None
    offset: Optional[Offset] = None

    def __post_init__(self):
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError(f"bc must be 'dirichlet' or 'neumann', got {self.bc!r}")
        if self.boundary is not None:
            want = DirichletData if self.bc == "dirichlet" else NeumannData
            if not isinstance(self.boundary, want):
                raise TypeError(f"{self.bc} problem needs {want.__name__}")

    @property
    def d(self):
        return self.map.d

    @property
    def basis_kind(self):
        return "bubble" if self.bc == "dirichlet" else "plain"

    def _derivative(self):
        if self.dfdz is not None:
            return self.dfdz
        if not callable(self.f):
            return lambda s, x, z: np.zeros(len(s))
        f = self.f

        def central(s, x, z):
            h = 1e-6 * (1.0 + np.abs(z))
            return (f(s, x, z + h) - f(s, x, z - h)) / (2.0 * h)

        return central

    def coefficients(self, with_offset=True):
        """Pulled-back coefficients, with any offset folded into the right side."""
        f, dfdz = self.f, self._derivative()
        if not callable(f):
            fv = float(f)
            f = lambda s, x, z: np.full(len(s), fv)  # noqa: E731
        if with_offset and self.offset is not None:
            base_f, base_df, off = f, dfdz, self.offset

            def f(s, x, z):
                return base_f(s, x, z + off.value(x)) - off.l_value(x)

            def dfdz(s, x, z):
                return base_df(s, x, z + off.value(x))

        return pull_back(self.map, self.A, self.gamma, f, dfdz)


def quadrature_for(d: int, q: int) -> QuadratureRule:
    return disk_rule(q) if d == 2 else ball_rule(q)


def _check_finite(values, rule_nodes, phys, what):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = bad[0]
        raise EvaluationError(
            f"{what} is not finite at ball point {rule_nodes[i].tolist()} "
            f"(physical point {phys[i].tolist()})"
        )


def _gradient_form(grads, k):
    """sum_p grads[p, l] . k[p] grads[p, m] as an (N, N) matrix."""
    npts, nb, d = grads.shape
    kg = np.matmul(grads, np.swapaxes(k, 1, 2))
    return np.swapaxes(grads, 0, 1).reshape(nb, npts * d) @ np.swapaxes(kg, 0, 1).reshape(nb, npts * d).T


class GalerkinSystem:
    """Nonlinear algebraic system ``stiffness @ alpha = load(alpha)``.

    Basis values, geometry and the linear part are computed once at
    construction; ``load`` and ``load_jacobian`` reuse them.
    """

    def __init__(self, problem: Problem, basis, rule: QuadratureRule):
        self.problem = problem
        self.basis = basis
        self.rule = rule
        nodes = rule.nodes
        coeffs = problem.coefficients(with_offset=False)
        self._coeffs = coeffs
        self.values, self.gradients = basis.evaluate(nodes)
        self.points, jinv, self.det = coeffs.geometry(nodes)
        gamma = coeffs.gamma(self.points, nodes)
        _check_finite(gamma, nodes, self.points, "gamma")
        if problem.bc == "neumann" and np.min(gamma) <= 0.0:
            raise ValueError("Neumann problems need gamma > 0 on the domain")
        self.gamma_tilde = self.det * gamma
        a_tilde = coeffs.a_tilde(nodes)
        w = rule.weights
        k = (w * self.det)[:, None, None] * a_tilde
        stiff = _gradient_form(self.gradients, k)
        stiff += self.values.T @ ((w * self.gamma_tilde)[:, None] * self.values)
        self.stiffness = 0.5 * (stiff + stiff.T)
        self._wdet = w * self.det
        self._abs_values = np.abs(self.values)
        if problem.offset is None:
            self._shift = self._lshift = 0.0
        else:
            self._shift = problem.offset.value(nodes)
            self._lshift = problem.offset.l_value(nodes)
            _check_finite(self._lshift, nodes, self.points, "L applied to the offset")

    def __len__(self):
        return self.values.shape[1]

    def expansion(self, alpha):
        """Values of the basis expansion at the quadrature nodes."""
        return self.values @ np.asarray(alpha, dtype=float)

    def _rhs(self, alpha):
        z = self.expansion(alpha) + self._shift
        fz = self._coeffs.f(self.points, self.rule.nodes, z) - self._lshift
        _check_finite(fz, self.rule.nodes, self.points, "f")
        return self._wdet * fz

    def load(self, alpha):
        return self.values.T @ self._rhs(alpha)

    def residual_scale(self, alpha):
        """Componentwise magnitude of the terms summed in the residual.

        Rounding in ``residual`` is a small multiple of eps times this.
        """
        alpha = np.asarray(alpha, dtype=float)
        terms = np.abs(self.stiffness) @ np.abs(alpha) + self._abs_values.T @ np.abs(self._rhs(alpha))
        return float(np.max(terms)) if len(terms) else 0.0

    def load_jacobian(self, alpha):
        z = self.expansion(alpha) + self._shift
        dz = self._coeffs.dfdz(self.points, self.rule.nodes, z)
        _check_finite(dz, self.rule.nodes, self.points, "df/dz")
        jac = self.values.T @ ((self._wdet * dz)[:, None] * self.values)
        return 0.5 * (jac + jac.T)

    def residual(self, alpha):
        return self.stiffness @ alpha - self.load(alpha)

    def newton_matrix(self, alpha):
        return self.stiffness - self.load_jacobian(alpha)


def build_system(problem: Problem, n: int, q: Optional[int] = None) -> GalerkinSystem:
    """System for degree ``n`` with the default quadrature order unless ``q`` is given."""
    if q is None:
        q = default_order(problem.d, n)
    basis = BasisSet(problem.d, n, problem.basis_kind)
    return GalerkinSystem(problem, basis, quadrature_for(problem.d, q))


def assemble_linear(problem: Problem, basis, rule: QuadratureRule) -> np.ndarray:
    return GalerkinSystem(problem, basis, rule).stiffness


def assemble_load(problem: Problem, basis, rule: QuadratureRule, alpha) -> np.ndarray:
    return GalerkinSystem(problem, basis, rule).load(alpha)


def assemble_load_jacobian(problem: Problem, basis, rule: QuadratureRule, alpha) -> np.ndarray:
    return GalerkinSystem(problem, basis, rule).load_jacobian(alpha)


# -- boundary data ------------------------------------------------------

def lift_dirichlet(problem: Problem) -> Problem:
    """Homogenise u = g through the extension G: solve for v = u - G."""
    data = problem.boundary
    if problem.bc != "dirichlet" or not isinstance(data, DirichletData):
        raise ValueError("lift_dirichlet needs a Dirichlet problem with DirichletData")
    if data.LG is None:
        raise ValueError("the extension G needs L G (its derivatives) to be lifted")
    if problem.offset is not None:
        raise ValueError("problem already carries an offset")
    phi = problem.map.phi
    if data.g is not None:
        x = boundary_rule(problem.d, 8)[0]
        s = phi(x)
        gap = np.max(np.abs(data.G(s, x) - data.g(s, x)))
        if not gap <= 1e-8 * (1.0 + np.max(np.abs(data.g(s, x)))):
            raise ValueError(f"extension G does not match g on the boundary (gap {gap:.2e})")
    G, LG = data.G, data.LG
    offset = Offset(
        value=lambda x: G(phi(x), x),
        l_value=lambda x: LG(phi(x), x),
        descriptor=("callable",),
    )
    return replace(problem, boundary=None, offset=offset)


def boundary_rule(d: int, q: int):
    """Points and weights on the unit circle / sphere.

    Circle: trapezoid with 2q + 1 points.  Sphere: q Gauss-Legendre
    points in cos(phi) times 2q trapezoid points in the azimuth.
    """
    if d == 2:
        m = 2 * q + 1
        theta = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(theta), np.sin(theta)]), np.full(m, 2.0 * np.pi / m)
    xi, omega = gauss_legendre(q)
    theta = np.pi * np.arange(1, 2 * q + 1) / q
    th, c = np.meshgrid(theta, xi, indexing="ij")
    sn = np.sqrt(1.0 - c**2)
    pts = np.column_stack([(sn * np.cos(th)).ravel(), (sn * np.sin(th)).ravel(), c.ravel()])
    weights = np.broadcast_to((np.pi / q) * omega, th.shape).ravel().copy()
    return pts, weights


@dataclass(frozen=True)
class NeumannLift:
    """Solution v* of -Lap v = c0, dv/dn = g with zero mean, as a plain expansion."""

    c0: float
    basis: BasisSet
    coefficients: np.ndarray = field(repr=False)
    boundary_integral: float = 0.0
    volume: float = 0.0

    def __call__(self, x):
        return self.basis.values(np.atleast_2d(x)) @ self.coefficients


def lift_neumann(problem: Problem, degree: int, q: Optional[int] = None, tol: float = 1e-10):
    """Split off the nonzero Neumann data of ``problem``.

    Returns ``(lift, new_problem)`` where ``new_problem`` has zero Neumann
    data and solution ``w = u - v*``.  Only A = identity is supported.
    """
    data = problem.boundary
    if problem.bc != "neumann" or not isinstance(data, NeumannData):
        raise ValueError("lift_neumann needs a Neumann problem with NeumannData")
    if problem.A is not None:
        raise ValueError("nonzero Neumann data is only supported for A = identity")
    if problem.offset is not None:
        raise ValueError("problem already carries an offset")
    d = problem.d
    if q is None:
        q = default_order(d, degree)
    basis = BasisSet(d, degree, "plain")
    rule = quadrature_for(d, q)
    geom = pull_back(problem.map)
    _, jinv, det = geom.geometry(rule.nodes)
    vals, grads = basis.evaluate(rule.nodes)
    wdet = rule.weights * det
    volume = float(np.sum(wdet))

    bx, bw = boundary_rule(d, 2 * q + 2)
    bs, _, dS = surface_element(problem.map, bx)
    gvals = np.asarray(data.g(bs, bx), dtype=float)
    _check_finite(gvals, bx, bs, "Neumann data g")
    bnd = float(np.sum(bw * dS * gvals))
    c0 = -bnd / volume
    if not abs(c0 * volume + bnd) <= tol * max(1.0, abs(bnd)):
        raise ValueError("Neumann data fails the compatibility condition")

    stiff = _gradient_form(grads, wdet[:, None, None] * geom.a_tilde(rule.nodes))
    mean = vals.T @ wdet
    rhs = c0 * mean + basis.values(bx).T @ (bw * dS * gvals)
    n = len(basis)
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = 0.5 * (stiff + stiff.T)
    bordered[:n, n] = mean
    bordered[n, :n] = mean
    sol = np.linalg.solve(bordered, np.concatenate([rhs, [0.0]]))
    lift = NeumannLift(c0, basis, sol[:n], bnd, volume)

    phi = problem.map.phi
    gamma = problem.coefficients().gamma

    def l_value(x):
        return gamma(phi(x), x) * lift(x) + c0

    offset = Offset(
        value=lift,
        l_value=l_value,
        descriptor=("spectral", d, "plain", degree, lift.coefficients),
    )
    return lift, replace(problem, boundary=None, offset=offset)
