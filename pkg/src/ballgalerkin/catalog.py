"""Built-in problem configurations.

Each entry is configuration text in the format read by
:func:`ballgalerkin.config.parse_config`.  ``ballgalerkin catalog NAME``
prints one, which is a convenient starting point for a new problem.
"""
from __future__ import annotations

from .config import ProblemConfig, parse_config

__all__ = ["CATALOG", "LINEAR", "get_config", "names"]

CATALOG = {
    "paper-planar-cos": """\
# -lap u = cos(pi s t) / (1 + u^2) on the image of the disk under
# s = x - y + a x^2, t = x + y, zero Dirichlet data
[map]
name = quadratic2d
a = 0.95

[equation]
f = cos(pi*s*t)/(1 + u^2)

[study]
n_start = 5
n_end = 20
reference = 25
""",
    "paper-fisher-disk": """\
# stationary Fisher equation; the all-10 start avoids the trivial branch
# but reaches a sign-changing solution, see fisher-disk-radial
[map]
name = identity
dimension = 2

[equation]
f = 100*u*(1 - u)

[study]
n_start = 1
n_end = 20
reference = 25
initial_guess = constant 10
# integrate the cubic load exactly
quad_scale = 1.5
""",
    "fisher-disk-radial": """\
# Fisher equation from a rotation-invariant start: (1 - r^2) times a
# constant at n = 1 leads to the positive solution
[map]
name = identity
dimension = 2

[equation]
f = 100*u*(1 - u)

[study]
n_start = 1
n_end = 20
reference = 25
initial_guess = coefficients 10 0 0
quad_scale = 1.5
""",
    "paper-fisher-quadratic": """\
[map]
name = quadratic2d
a = 0.95

[equation]
f = 100*u*(1 - u)

[study]
n_start = 1
n_end = 20
reference = 25
initial_guess = constant 10
quad_scale = 1.5
""",
    "paper-3d": """\
# f is written in ball coordinates x, y, z
[map]
name = quadratic3d
a = 0.5
b = 0.5

[equation]
f = cos(6*x + y + z)/(1 + u^2)

[study]
n_start = 1
n_end = 8
reference = 10
quad_extra = 4
""",
    "paper-neumann-ellipse": """\
# -lap u + u = -exp(u) + f1 on the (2, 1) ellipse, du/dn = 0
[map]
name = ellipse
a = 2
b = 1

[equation]
gamma = 1
f = -exp(u)

[boundary]
type = neumann

[exact]
u = (1 - (s/2)^2 - t^2)^2*cos(2*s + t^2)
manufactured = yes

[study]
n_start = 1
n_end = 18
reference = exact
""",
    "manufactured-disk": """\
[map]
name = identity
dimension = 2

[equation]
f = 0

[exact]
u = (1 - x^2 - y^2)*cos(x + y)
manufactured = yes

[study]
n_start = 1
n_end = 15
reference = exact
""",
    "manufactured-quadratic": """\
# u is given in ball coordinates; 1/det J has a pole just outside the
# disk, so the quadrature is over-resolved
[map]
name = quadratic2d
a = 0.95

[equation]
f = 0

[exact]
u = (1 - x^2 - y^2)*exp(x)
manufactured = yes

[study]
n_start = 1
n_end = 12
reference = exact
quad_scale = 3
""",
    "manufactured-cubic": """\
[map]
name = identity
dimension = 2

[equation]
f = u^3

[exact]
u = (1 - x^2 - y^2)*sin(x + 2*y)
manufactured = yes

[study]
n_start = 1
n_end = 12
reference = exact
quad_scale = 2
""",
    "dirichlet-lift": """\
# u = 1 + s t on the boundary, lifted by G = 1 + s t
[map]
name = quadratic2d
a = 0.5

[equation]
gamma = 1
f = 0

[boundary]
type = dirichlet
G = 1 + s*t

[exact]
u = 1 + s*t + (1 - x^2 - y^2)*cos(x)
manufactured = yes

[study]
n_start = 1
n_end = 14
reference = exact
quad_scale = 2
""",
    "neumann-lift": """\
# du/dn = g on the unit circle, where the outward normal is (x, y)
[map]
name = identity
dimension = 2

[equation]
gamma = 1
f = -u^3

[boundary]
type = neumann
g = (x + y/2)*exp(x + y/2)

[exact]
u = exp(x + y/2)
manufactured = yes

[study]
n_start = 1
n_end = 14
reference = exact
quad_scale = 2
lift_degree = 20
""",
}

# entries whose equation is linear in u
LINEAR = ("manufactured-disk", "manufactured-quadratic", "dirichlet-lift")


def names():
    return sorted(CATALOG)


def get_config(name: str) -> ProblemConfig:
    try:
        text = CATALOG[name]
    except KeyError:
        raise KeyError(f"no built-in problem {name!r}; choose from {', '.join(names())}") from None
    return parse_config(text, name=name)
