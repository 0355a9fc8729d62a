"""Maps from the closed unit ball onto a physical domain, and coefficient pullback.

All callables here are vectorised over a leading point axis: ``phi`` maps
(P, d) to (P, d) and ``jacobian`` maps (P, d) to (P, d, d).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DomainMap",
    "SingularJacobianError",
    "PulledBackCoefficients",
    "identity_map",
    "map_quadratic_2d",
    "map_quadratic_3d",
    "map_ellipse",
    "pull_back",
    "surface_element",
]


class SingularJacobianError(ValueError):
    """det J is not positive at some evaluation point."""

    def __init__(self, point, det):
        self.point = np.asarray(point)
        self.det = det
        super().__init__(f"det J = {det:.3e} <= 0 at ball point {self.point.tolist()}")


@dataclass(frozen=True)
class DomainMap:
    d: int
    phi: Callable
    jacobian: Callable
    inverse: Optional[Callable] = None
    name: str = "custom"
    params: tuple = field(default=())

    def __call__(self, x):
        return self.phi(np.atleast_2d(np.asarray(x, dtype=float)))

    def det_jacobian(self, x):
        return np.linalg.det(self.jacobian(np.atleast_2d(np.asarray(x, dtype=float))))

    def checked_jacobian(self, x):
        """Jacobians and determinants, raising on the first point with det J <= 0."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        jac = self.jacobian(x)
        det = np.linalg.det(jac)
        bad = np.flatnonzero(~(det > 0.0))
        if bad.size:
            i = bad[0]
            raise SingularJacobianError(x[i], det[i])
        return jac, det

    def pull(self, s):
        """Inverse map; only available for maps constructed with one."""
        if self.inverse is None:
            raise ValueError(f"map {self.name!r} has no inverse")
        return self.inverse(np.atleast_2d(np.asarray(s, dtype=float)))


def identity_map(d: int) -> DomainMap:
    eye = np.eye(d)
    return DomainMap(
        d,
        phi=lambda x: np.array(x, dtype=float),
        jacobian=lambda x: np.broadcast_to(eye, x.shape[:1] + (d, d)).copy(),
        inverse=lambda s: np.array(s, dtype=float),
        name="identity",
    )


def _check_unit(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def map_quadratic_2d(a: float) -> DomainMap:
    """(s, t) = (x - y + a x^2, x + y) with its closed-form inverse."""
    _check_unit("a", a)

    def phi(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([x - y + a * x * x, x + y])

    def jacobian(p):
        x = p[:, 0]
        jac = np.empty((len(p), 2, 2))
        jac[:, 0, 0] = 1.0 + 2.0 * a * x
        jac[:, 0, 1] = -1.0
        jac[:, 1, 0] = 1.0
        jac[:, 1, 1] = 1.0
        return jac

    def inverse(q):
        s, t = q[:, 0], q[:, 1]
        root = np.sqrt(1.0 + a * (s + t))
        # -1 + sqrt(1 + w) written as w / (1 + sqrt(1 + w)) to avoid cancellation
        x = (s + t) / (1.0 + root)
        return np.column_stack([x, t - x])

    return DomainMap(2, phi, jacobian, inverse, "quadratic2d", (a,))


def map_quadratic_3d(a: float, b: float) -> DomainMap:
    """(s, t, v) = (x - y + a x^2, x + y, 2 z + b z^2)."""
    _check_unit("a", a)
    _check_unit("b", b)

    def phi(p):
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        return np.column_stack([x - y + a * x * x, x + y, 2.0 * z + b * z * z])

    def jacobian(p):
        x, z = p[:, 0], p[:, 2]
        jac = np.zeros((len(p), 3, 3))
        jac[:, 0, 0] = 1.0 + 2.0 * a * x
        jac[:, 0, 1] = -1.0
        jac[:, 1, 0] = 1.0
        jac[:, 1, 1] = 1.0
        jac[:, 2, 2] = 2.0 + 2.0 * b * z
        return jac

    def inverse(q):
        s, t, v = q[:, 0], q[:, 1], q[:, 2]
        x = (s + t) / (1.0 + np.sqrt(1.0 + a * (s + t)))
        z = v / (1.0 + np.sqrt(1.0 + b * v))
        return np.column_stack([x, t - x, z])

    return DomainMap(3, phi, jacobian, inverse, "quadratic3d", (a, b))


def map_ellipse(a: float, b: float) -> DomainMap:
    """(s, t) = (a x, b y)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"semi-axes must be positive, got {(a, b)}")
    scale = np.array([a, b], dtype=float)
    jac = np.diag(scale)
    return DomainMap(
        2,
        phi=lambda p: p * scale,
        jacobian=lambda p: np.broadcast_to(jac, (len(p), 2, 2)).copy(),
        inverse=lambda q: q / scale,
        name="ellipse",
        params=(a, b),
    )


def _field(value, default=None):
    """Accept a callable(s, x) or a constant."""
    if value is None:
        value = default
    if callable(value):
        return value
    const = float(value)
    return lambda s, x: np.full(len(s), const)


@dataclass(frozen=True)
class PulledBackCoefficients:
    """Coefficients of the transformed equation on the unit ball.

    ``a_tilde`` is J^{-1} A(Phi) J^{-T}; ``gamma_tilde`` and ``f_tilde``
    carry the factor det J.  Every method takes ball points ``x`` (P, d).
    """

    map: DomainMap
    A: Optional[Callable]
    gamma: Callable
    f: Callable
    dfdz: Optional[Callable] = None

    def geometry(self, x):
        """Physical points, J^{-1}, det J at ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        jac, det = self.map.checked_jacobian(x)
        return self.map.phi(x), np.linalg.inv(jac), det

    def det_j(self, x):
        return self.geometry(x)[2]

    def a_tilde(self, x):
        s, jinv, _ = self.geometry(x)
        if self.A is None:
            out = jinv @ np.swapaxes(jinv, 1, 2)
        else:
            out = jinv @ self.A(s, x) @ np.swapaxes(jinv, 1, 2)
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    def gamma_tilde(self, x):
        s, _, det = self.geometry(x)
        return det * self.gamma(s, np.atleast_2d(x))

    def f_tilde(self, x, z):
        s, _, det = self.geometry(x)
        return det * self.f(s, np.atleast_2d(x), z)

    def dfdz_tilde(self, x, z):
        if self.dfdz is None:
            raise ValueError("no derivative of f supplied")
        s, _, det = self.geometry(x)
        return det * self.dfdz(s, np.atleast_2d(x), z)


def pull_back(map: DomainMap, A=None, gamma=0.0, f=0.0, dfdz=None) -> PulledBackCoefficients:
    """Transform coefficients given on the physical domain to the unit ball.

    ``A`` is ``None`` for the identity or a callable ``(s, x) -> (P, d, d)``;
    ``gamma`` is a constant or ``(s, x) -> (P,)``; ``f`` and ``dfdz`` are
    constants or ``(s, x, z) -> (P,)``.  The extra ball-coordinate argument
    ``x`` lets data be written in either coordinate system.
    """
    if not callable(f):
        fv = float(f)
        f = lambda s, x, z: np.full(len(s), fv)  # noqa: E731
        dfdz = dfdz or (lambda s, x, z: np.zeros(len(s)))
    return PulledBackCoefficients(map, A, _field(gamma), f, dfdz)


def surface_element(map: DomainMap, x):
    """Boundary data at unit-sphere points ``x``.

    Returns the physical points, outward unit normals on the boundary of
    the domain, and the ratio dS_physical / dS_sphere = det J |J^{-T} n|.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    jac, det = map.checked_jacobian(x)
    normal = x / np.linalg.norm(x, axis=1, keepdims=True)
    cof = np.linalg.solve(np.swapaxes(jac, 1, 2), normal[:, :, None])[:, :, 0]
    length = np.linalg.norm(cof, axis=1)
    return map.phi(x), cof / length[:, None], det * length
