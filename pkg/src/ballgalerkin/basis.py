"""Orthonormal polynomial bases on the unit disk and the unit ball.

The disk basis uses ridge polynomials built from Chebyshev polynomials of
the second kind; the ball basis is the Dunkl-Xu product family of
Gegenbauer polynomials.  Both are ordered by degree block so the basis of
degree ``n - 1`` is a prefix of the basis of degree ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, cached_property

import numpy as np

__all__ = [
    "MultiIndexOrder",
    "BasisSet",
    "chebyshev_u",
    "gegenbauer",
    "ridge_basis_eval",
    "ball_basis_eval",
    "bubble_wrap",
    "basis_size",
]


def basis_size(d: int, n: int) -> int:
    """Dimension of the polynomials of total degree <= n in d variables."""
    if n < 0:
        return 0
    if d == 2:
        return (n + 1) * (n + 2) // 2
    if d == 3:
        return (n + 1) * (n + 2) * (n + 3) // 6
    raise ValueError(f"dimension must be 2 or 3, got {d}")


@dataclass(frozen=True)
class MultiIndexOrder:
    """Labels of the basis functions, block by block in increasing degree.

    ``(m, k)`` for the disk and ``(m, j, k)`` for the ball.
    """

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 0:
            raise ValueError(f"degree must be >= 0, got {self.n}")

    @cached_property
    def entries(self) -> tuple:
        out = []
        for m in range(self.n + 1):
            if self.d == 2:
                out.extend((m, k) for k in range(m + 1))
            else:
                out.extend((m, j, k) for j in range(m + 1) for k in range(m - j + 1))
        return tuple(out)

    def __len__(self):
        return basis_size(self.d, self.n)

    def block(self, m: int) -> slice:
        """Slice of the entries belonging to degree block ``m``."""
        return slice(basis_size(self.d, m - 1), basis_size(self.d, m))


# -- one-dimensional families -------------------------------------------

def _chebyshev_u_table(n, t):
    """U_0..U_n and their derivatives; arrays of shape (n + 1, *t.shape)."""
    t = np.asarray(t, dtype=float)
    u = np.empty((n + 1,) + t.shape)
    du = np.empty_like(u)
    u[0] = 1.0
    du[0] = 0.0
    if n >= 1:
        u[1] = 2.0 * t
        du[1] = 2.0
    for i in range(1, n):
        u[i + 1] = 2.0 * t * u[i] - u[i - 1]
        du[i + 1] = 2.0 * u[i] + 2.0 * t * du[i] - du[i - 1]
    return u, du


def chebyshev_u(n: int, t):
    """Value and derivative of the Chebyshev polynomial U_n at ``t``."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    u, du = _chebyshev_u_table(n, t)
    return u[n], du[n]


def _gegenbauer_table(n, lam, t):
    t = np.asarray(t, dtype=float)
    c = np.empty((n + 1,) + t.shape)
    c[0] = 1.0
    if n >= 1:
        c[1] = 2.0 * lam * t
    for i in range(2, n + 1):
        c[i] = (2.0 * (i + lam - 1.0) * t * c[i - 1] - (i + 2.0 * lam - 2.0) * c[i - 2]) / i
    return c


def gegenbauer(n: int, lam: float, t):
    """Value and derivative of the Gegenbauer polynomial C_n^lam at ``t``.

    Uses d/dt C_n^lam = 2 lam C_{n-1}^{lam+1}.
    """
    value = _gegenbauer_table(n, lam, t)[n]
    if n == 0:
        return value, np.zeros_like(value)
    return value, 2.0 * lam * _gegenbauer_table(n - 1, lam + 1.0, t)[n - 1]


def _scaled_gegenbauer_table(n, lam, t, w):
    """H_i(t, w) = w^(i/2) C_i^lam(t / sqrt(w)) with partials in t and w.

    The recurrence is written directly for H so it stays polynomial in
    (t, w) and is regular where w vanishes.
    """
    h = np.empty((n + 1,) + t.shape)
    ht = np.empty_like(h)
    hw = np.empty_like(h)
    h[0], ht[0], hw[0] = 1.0, 0.0, 0.0
    if n >= 1:
        h[1], ht[1], hw[1] = 2.0 * lam * t, 2.0 * lam, 0.0
    for i in range(2, n + 1):
        a = 2.0 * (i + lam - 1.0) / i
        b = (i + 2.0 * lam - 2.0) / i
        h[i] = a * t * h[i - 1] - b * w * h[i - 2]
        ht[i] = a * (h[i - 1] + t * ht[i - 1]) - b * w * ht[i - 2]
        hw[i] = a * t * hw[i - 1] - b * (h[i - 2] + w * hw[i - 2])
    return h, ht, hw


# -- disk ---------------------------------------------------------------

def _as_points(points, d):
    p = np.asarray(points, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[-1] != d:
        raise ValueError(f"expected points with {d} coordinates, got shape {p.shape}")
    return p, single


def ridge_basis_eval(order: MultiIndexOrder, points):
    """Ridge polynomials phi_{m,k} = U_m(x cos(k h) + y sin(k h)) / sqrt(pi).

    ``h = pi / (m + 1)`` inside degree block ``m``.  Returns ``values`` of
    shape (P, N) and ``gradients`` of shape (P, N, 2).
    """
    if order.d != 2:
        raise ValueError("ridge basis is two-dimensional")
    p, single = _as_points(points, 2)
    x, y = p[:, 0], p[:, 1]
    npts = len(p)
    values = np.empty((npts, len(order)))
    grads = np.empty((npts, len(order), 2))
    scale = 1.0 / np.sqrt(np.pi)
    for m in range(order.n + 1):
        angles = np.arange(m + 1) * (np.pi / (m + 1))
        c, s = np.cos(angles), np.sin(angles)
        t = np.outer(x, c) + np.outer(y, s)
        u, du = _chebyshev_u_table(m, t)
        blk = order.block(m)
        values[:, blk] = scale * u[m]
        grads[:, blk, 0] = scale * du[m] * c
        grads[:, blk, 1] = scale * du[m] * s
    if single:
        return values[0], grads[0]
    return values, grads


# -- ball ---------------------------------------------------------------

def _dunkl_xu_raw(n, points):
    """Unnormalised Dunkl-Xu products for degrees 0..n, values and gradients."""
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    w1 = 1.0 - x * x
    w2 = w1 - y * y
    zc, zc_t, zc_w = _scaled_gegenbauer_table(n, 0.5, z, w2)
    # radial-like factor in x, index s = j + k, lambda = s + 3/2
    xc = [_gegenbauer_table(n - s, s + 1.5, x) for s in range(n + 1)]
    yc = [_scaled_gegenbauer_table(n - k, k + 1.0, y, w1) for k in range(n + 1)]
    order = MultiIndexOrder(3, n)
    npts = len(points)
    values = np.empty((npts, len(order)))
    grads = np.empty((npts, len(order), 3))
    for col, (m, j, k) in enumerate(order.entries):
        s = j + k
        i = m - s
        a = xc[s][i]
        da = 2.0 * (s + 1.5) * xc[s + 1][i - 1] if i > 0 else np.zeros_like(x)
        b, b_t, b_w = yc[k][0][j], yc[k][1][j], yc[k][2][j]
        c, c_t, c_w = zc[k], zc_t[k], zc_w[k]
        bc = b * c
        values[:, col] = a * bc
        grads[:, col, 0] = da * bc - 2.0 * x * a * (b_w * c + b * c_w)
        grads[:, col, 1] = a * (b_t * c - 2.0 * y * b * c_w)
        grads[:, col, 2] = a * b * c_t
    return values, grads


@lru_cache(maxsize=None)
def _ball_block_norms(m: int) -> np.ndarray:
    """L2(B^3) norms of the unnormalised degree-m block.

    Computed once per block with the ball rule of order m + 1, whose
    exactness 2m + 1 covers the degree-2m integrands.
    """
    from .quadrature import ball_rule

    rule = ball_rule(m + 1)
    vals, _ = _dunkl_xu_raw(m, rule.nodes)
    blk = MultiIndexOrder(3, m).block(m)
    return np.sqrt(rule.weights @ vals[:, blk] ** 2)


def ball_basis_eval(order: MultiIndexOrder, points):
    """Orthonormal Dunkl-Xu basis on B^3; values (P, N), gradients (P, N, 3)."""
    if order.d != 3:
        raise ValueError("Dunkl-Xu basis is three-dimensional")
    p, single = _as_points(points, 3)
    values, grads = _dunkl_xu_raw(order.n, p)
    norms = np.concatenate([_ball_block_norms(m) for m in range(order.n + 1)])
    values /= norms
    grads /= norms[:, None]
    if single:
        return values[0], grads[0]
    return values, grads


# -- basis objects ------------------------------------------------------

_SPLIT = 134217729.0  # 2^27 + 1


def _one_minus_norm2(p):
    """1 - |p|^2 with error-free products (Dekker) and sums (Knuth).

    Near the sphere the plain formula loses everything to cancellation;
    this keeps the bubble factor accurate to a few units of 1e-17 there.
    """
    total = np.ones(len(p))
    comp = np.zeros(len(p))
    for i in range(p.shape[1]):
        a = p[:, i]
        c = _SPLIT * a
        hi = c - (c - a)
        lo = a - hi
        sq = a * a
        err = ((hi * hi - sq) + 2.0 * hi * lo) + lo * lo
        s = total - sq
        bb = s - total
        comp += (total - (s - bb)) + (-sq - bb) - err
        total = s
    return total + comp


@dataclass(frozen=True)
class BasisSet:
    """Orthonormal family on B^d, optionally multiplied by 1 - |x|^2."""

    d: int
    n: int
    kind: str = "plain"
    order: MultiIndexOrder = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("plain", "bubble"):
            raise ValueError(f"kind must be 'plain' or 'bubble', got {self.kind!r}")
        object.__setattr__(self, "order", MultiIndexOrder(self.d, self.n))

    def __len__(self):
        return len(self.order)

    def evaluate(self, points):
        """Values (P, N) and gradients (P, N, d) at ``points`` (P, d)."""
        p, single = _as_points(points, self.d)
        if self.d == 2:
            values, grads = ridge_basis_eval(self.order, p)
        else:
            values, grads = ball_basis_eval(self.order, p)
        if self.kind == "bubble":
            bubble = _one_minus_norm2(p)
            grads = bubble[:, None, None] * grads - 2.0 * values[:, :, None] * p[:, None, :]
            values = bubble[:, None] * values
        if single:
            return values[0], grads[0]
        return values, grads

    def values(self, points):
        return self.evaluate(points)[0]

    def with_degree(self, n: int) -> "BasisSet":
        return BasisSet(self.d, n, self.kind)


def bubble_wrap(plain: BasisSet) -> BasisSet:
    """The H^1_0 family (1 - |x|^2) phi built on ``plain``."""
    if plain.kind != "plain":
        raise ValueError("bubble_wrap expects a plain basis")
    return BasisSet(plain.d, plain.n, "bubble")
