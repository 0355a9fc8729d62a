"""Symbolic helpers linking the expression language to maps and operators.

Problem data may be written in physical variables (s, t, v), ball
variables (x, y, z), or both.  Substituting the map components for the
physical variables turns any such expression into a function on the
ball, where the operator can be applied by symbolic differentiation.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .expr import Const, Expr, add, differentiate, div, mul, neg, parse_expression, sub, substitute
from .geometry import DomainMap

__all__ = [
    "PHYSICAL",
    "BALL",
    "map_components",
    "expression_map",
    "to_ball",
    "apply_operator",
    "bind",
    "evaluate",
]

PHYSICAL = ("s", "t", "v")
BALL = ("x", "y", "z")

_BUILTIN_COMPONENTS = {
    "identity": lambda d: BALL[:d],
    "quadratic2d": lambda a: (f"x - y + {a!r}*x^2", "x + y"),
    "quadratic3d": lambda a, b: (f"x - y + {a!r}*x^2", "x + y", f"2*z + {b!r}*z^2"),
    "ellipse": lambda a, b: (f"{a!r}*x", f"{b!r}*y"),
}


def map_components(m: DomainMap) -> tuple:
    """Expressions for Phi in the ball variables."""
    if m.name == "expression":
        texts = m.params[: m.d]
    elif m.name == "identity":
        texts = BALL[: m.d]
    elif m.name in _BUILTIN_COMPONENTS:
        texts = _BUILTIN_COMPONENTS[m.name](*m.params)
    else:
        raise ValueError(f"map {m.name!r} has no symbolic form")
    return tuple(parse_expression(t, BALL[: m.d]) for t in texts)


def bind(d: int, s=None, x=None, u=None) -> dict:
    """Environment for evaluating an expression at points."""
    env = {}
    if s is not None:
        for i, name in enumerate(PHYSICAL[:d]):
            env[name] = s[:, i]
    if x is not None:
        for i, name in enumerate(BALL[:d]):
            env[name] = x[:, i]
    if u is not None:
        env["u"] = u
    return env


def evaluate(e: Expr, npts: int, env: dict) -> np.ndarray:
    """Evaluate ``e`` and broadcast constants to ``npts`` values."""
    out = np.asarray(e.evaluate(env), dtype=float)
    if out.shape != (npts,):
        out = np.broadcast_to(out, (npts,)).copy()
    return out


def _det_adj(jac):
    """Determinant and adjugate of a 2x2 or 3x3 matrix of expressions."""
    d = len(jac)
    if d == 2:
        (a, b), (c, e) = jac
        return sub(mul(a, e), mul(b, c)), [[e, neg(b)], [neg(c), a]]
    cof = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = sub(mul(jac[r[0]][c[0]], jac[r[1]][c[1]]), mul(jac[r[0]][c[1]], jac[r[1]][c[0]]))
            cof[i][j] = minor if (i + j) % 2 == 0 else neg(minor)
    det = add(add(mul(jac[0][0], cof[0][0]), mul(jac[0][1], cof[0][1])), mul(jac[0][2], cof[0][2]))
    adj = [[cof[j][i] for j in range(3)] for i in range(3)]
    return det, adj


def expression_map(components: Sequence[str], inverse: Optional[Sequence[str]] = None) -> DomainMap:
    """DomainMap from component expressions in x, y(, z), Jacobian by differentiation."""
    d = len(components)
    if d not in (2, 3):
        raise ValueError(f"a map needs 2 or 3 components, got {d}")
    phi = [parse_expression(c, BALL[:d]) for c in components]
    jac = [[differentiate(p, v) for v in BALL[:d]] for p in phi]
    inv = None
    if inverse is not None:
        if len(inverse) != d:
            raise ValueError("inverse needs one component per dimension")
        inv = [parse_expression(c, PHYSICAL[:d]) for c in inverse]

    def call(x):
        env = bind(d, x=x)
        return np.column_stack([evaluate(p, len(x), env) for p in phi])

    def jacobian(x):
        env = bind(d, x=x)
        out = np.empty((len(x), d, d))
        for i in range(d):
            for j in range(d):
                out[:, i, j] = evaluate(jac[i][j], len(x), env)
        return out

    def inverse_fn(s):
        env = bind(d, s=s)
        return np.column_stack([evaluate(p, len(s), env) for p in inv])

    params = tuple(str(c) for c in components) + tuple(str(c) for c in (inverse or ()))
    return DomainMap(d, call, jacobian, inverse_fn if inv is not None else None, "expression", params)


def to_ball(e: Expr, components) -> Expr:
    """Replace the physical variables by the map components."""
    return substitute(e, dict(zip(PHYSICAL, components)))


def apply_operator(u: Expr, components, A=None, gamma: Expr = Const(0.0)) -> Expr:
    """(L u)(Phi(x)) for L u = -div(A grad u) + gamma u, all in ball variables.

    ``u``, ``gamma`` and the entries of ``A`` must already be written in
    x, y(, z).  Uses det J (L u)(Phi) = -div_x(K grad_x u) + det J gamma u
    with K = adj(J) A adj(J)^T / det J.
    """
    d = len(components)
    names = BALL[:d]
    jac = [[differentiate(p, v) for v in names] for p in components]
    det, adj = _det_adj(jac)
    if A is None:
        A = [[Const(1.0 if i == j else 0.0) for j in range(d)] for i in range(d)]
    grad = [differentiate(u, v) for v in names]
    # w = adj^T grad u, then flux = adj A w / det
    w = [_dot([adj[k][i] for k in range(d)], grad) for i in range(d)]
    aw = [_dot(A[i], w) for i in range(d)]
    flux = [div(_dot(adj[i], aw), det) for i in range(d)]
    divergence = Const(0.0)
    for i, v in enumerate(names):
        divergence = add(divergence, differentiate(flux[i], v))
    return add(div(neg(divergence), det), mul(gamma, u))


def _dot(a, b):
    out = Const(0.0)
    for p, q in zip(a, b):
        out = add(out, mul(p, q))
    return out
