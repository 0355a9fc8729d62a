"""Gauss rules on intervals and product rules on the unit disk and ball."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "QuadratureRule",
    "golub_welsch",
    "jacobi_recurrence",
    "gauss_legendre",
    "gauss_weighted_1plus_t_sq",
    "disk_rule",
    "ball_rule",
    "default_order",
    "monomial_integral",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (P, d) and positive weights (P,) exact up to total degree ``exactness``."""

    d: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """Sum ``weights * values`` over the leading (node) axis."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def jacobi_recurrence(npts, alpha, beta):
    """Monic recurrence coefficients for the weight (1 - t)^alpha (1 + t)^beta.

    Returns the diagonal ``a`` (npts,), the off-diagonal squares
    ``b`` (npts - 1,), and the total mass ``mu0``.
    """
    k = np.arange(npts, dtype=float)
    ab = alpha + beta
    s = 2.0 * k + ab
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (beta**2 - alpha**2) / (s * (s + 2.0))
    a[0] = (beta - alpha) / (ab + 2.0)
    k = np.arange(1, npts, dtype=float)
    s = 2.0 * k + ab
    b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s**2 * (s + 1.0) * (s - 1.0))
    mu0 = 2.0 ** (ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0)
    return a, b, mu0


def golub_welsch(a, b, mu0):
    """Nodes and weights from the Jacobi matrix of a three-term recurrence."""
    if len(a) == 1:
        return np.array([a[0]]), np.array([mu0])
    nodes, vecs = eigh_tridiagonal(a, np.sqrt(b))
    weights = mu0 * vecs[0] ** 2
    return nodes, weights


@lru_cache(maxsize=None)
def _legendre(npts):
    return golub_welsch(*jacobi_recurrence(npts, 0.0, 0.0))


def gauss_legendre(npts: int, interval=(-1.0, 1.0)):
    """``npts``-point Gauss-Legendre rule on ``interval``, exact to degree 2 npts - 1."""
    if npts < 1:
        raise ValueError("need at least one node")
    lo, hi = interval
    t, w = _legendre(npts)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


@lru_cache(maxsize=None)
def gauss_weighted_1plus_t_sq(q: int):
    """Gauss rule for the weight (1 + t)^2 on [-1, 1] with ``q`` nodes.

    Exact for (1 + t)^2 p(t) with deg p <= 2 q - 1; weights sum to 8/3.
    """
    if q < 1:
        raise ValueError("need at least one node")
    return golub_welsch(*jacobi_recurrence(q, 0.0, 2.0))


@lru_cache(maxsize=None)
def disk_rule(q: int) -> QuadratureRule:
    """Product rule on B^2 exact for total degree <= 2q.

    (q+1)-point Gauss-Legendre in r on [0, 1] with the factor r folded
    into the weights, trapezoid with 2q+1 points in the angle from 0.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    r, w = gauss_legendre(q + 1, (0.0, 1.0))
    m = 2 * q + 1
    theta = 2.0 * np.pi * np.arange(m) / m
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    nodes = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    weights = np.repeat(w * r * (2.0 * np.pi / m), m)
    return QuadratureRule(2, nodes, weights, 2 * q)


@lru_cache(maxsize=None)
def ball_rule(q: int) -> QuadratureRule:
    """Spherical product rule on B^3 with 2q * q * q nodes, exact for degree <= 2q - 1.

    Azimuth: 2q trapezoid points theta_i = i pi / q, i = 1..2q.  Polar:
    Gauss-Legendre in cos(phi).  Radius: the (1 + t)^2 Gauss rule mapped
    to r = (t + 1) / 2 with weights divided by 8.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    theta = np.pi * np.arange(1, 2 * q + 1) / q
    xi, omega = gauss_legendre(q)
    zeta, nu_prime = gauss_weighted_1plus_t_sq(q)
    r = 0.5 * (zeta + 1.0)
    nu = nu_prime / 8.0
    th, cphi, rr = np.meshgrid(theta, xi, r, indexing="ij")
    sphi = np.sqrt(1.0 - cphi**2)
    nodes = np.column_stack([
        (rr * sphi * np.cos(th)).ravel(),
        (rr * sphi * np.sin(th)).ravel(),
        (rr * cphi).ravel(),
    ])
    weights = (np.pi / q) * np.einsum("j,k->jk", omega, nu)
    weights = np.broadcast_to(weights, (2 * q, q, q)).ravel().copy()
    return QuadratureRule(3, nodes, weights, 2 * q - 1)


def default_order(d: int, n: int) -> int:
    """Quadrature order paired with Galerkin degree ``n``."""
    return n + 2


def monomial_integral(exponents) -> float:
    """Exact integral of prod x_i^a_i over the unit ball of dimension len(exponents)."""
    a = [int(e) for e in exponents]
    if any(e % 2 for e in a):
        return 0.0
    d = len(a)
    num = 1.0
    for e in a:
        num *= gamma((e + 1) / 2.0)
    return num / gamma((sum(a) + d) / 2.0 + 1.0)
