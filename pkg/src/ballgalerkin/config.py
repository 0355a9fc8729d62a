"""Problem configuration files and convergence studies.

A configuration is an INI file.  Example::

    [map]
    name = quadratic2d
    a = 0.95

    [equation]
    gamma = 0
    f = cos(pi*s*t)/(1 + u^2)

    [boundary]
    type = dirichlet

    [study]
    n_start = 5
    n_end = 20
    reference = 25

    [output]
    csv = planar.csv

Sections and keys:

``[map]``
    ``name`` is ``identity`` (with ``dimension``), ``quadratic2d`` (``a``),
    ``quadratic3d`` (``a``, ``b``), ``ellipse`` (``a``, ``b``) or
    ``expression`` with components ``s``, ``t`` (, ``v``) written in
    x, y (, z) and an optional inverse ``x``, ``y`` (, ``z``) in s, t (, v).
``[equation]``
    ``f`` in s, t, v, x, y, z, u; optional ``dfdu`` (otherwise the symbolic
    derivative of ``f``); ``gamma``; ``A`` = ``identity`` or entries
    ``a11``, ``a12``, ``a22`` (, ``a13``, ``a23``, ``a33``) of a symmetric
    matrix.
``[boundary]``
    ``type`` is ``dirichlet`` or ``neumann``.  ``G`` is an extension of
    the Dirichlet data into the domain; ``g`` is the Neumann data.
``[exact]``
    ``u`` is the exact solution.  With ``manufactured = yes`` the right
    side gets ``L u - f(s, u)`` added so that ``u`` solves the problem.
``[study]``
    ``n_start``, ``n_end``, ``reference`` (a degree or ``exact``),
    ``initial_guess`` (``zeros``, ``constant c`` or ``coefficients c0 c1
    ...`` for degree ``n_start``), ``newton_tol``,
    ``max_newton``, ``quad_scale``, ``quad_extra``, ``lift_degree``.
``[output]``
    ``table``, ``csv``, ``data`` (n and log10 of the error) and
    ``solution`` (the finest reported solution).

Expressions may mix physical variables s, t, v and ball variables
x, y, z; ``u`` is only allowed in ``f`` and ``dfdu``.
"""
from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .assembly import DirichletData, NeumannData, Offset, Problem, lift_dirichlet, lift_neumann
from .basis import basis_size
from .expr import Expr, ExpressionError, differentiate, parse_expression
from .geometry import DomainMap, identity_map, map_ellipse, map_quadratic_2d, map_quadratic_3d
from .solver import (
    NonConvergence,
    SingularNewtonMatrix,
    SolveConfig,
    continue_in_degree,
    evaluation_grid,
    reference_error,
)
from .symbolic import BALL, PHYSICAL, apply_operator, bind, evaluate, expression_map, map_components, to_ball

__all__ = [
    "ConfigError",
    "ProblemConfig",
    "StudyRow",
    "StudyReport",
    "parse_config",
    "load_config",
    "build_map",
    "run_study",
]

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid configuration; the message names the section and key."""


_SECTIONS = {
    "map": None,  # keys depend on the map name
    "equation": {"f", "dfdu", "gamma", "A", "a11", "a12", "a13", "a22", "a23", "a33"},
    "boundary": {"type", "G", "g"},
    "exact": {"u", "manufactured"},
    "study": {
        "n_start", "n_end", "reference", "initial_guess", "newton_tol",
        "max_newton", "quad_scale", "quad_extra", "lift_degree",
    },
    "output": {"table", "csv", "data", "solution"},
}

_MAP_KEYS = {
    "identity": {"dimension"},
    "quadratic2d": {"a"},
    "quadratic3d": {"a", "b"},
    "ellipse": {"a", "b"},
}


@dataclass(frozen=True)
class ProblemConfig:
    """A parsed and type-checked configuration."""

    map: DomainMap
    f: Expr
    dfdu: Expr
    gamma: Expr
    A: Optional[tuple]
    bc: str
    G: Optional[Expr] = None
    g: Optional[Expr] = None
    exact: Optional[Expr] = None
    manufactured: bool = False
    solve: SolveConfig = SolveConfig()
    reference: object = None
    lift_degree: Optional[int] = None
    outputs: dict = field(default_factory=dict)
    name: str = "config"

    @property
    def d(self):
        return self.map.d

    def build_problem(self) -> Problem:
        """The Problem to solve, with any boundary lift applied."""
        d = self.d
        comps = map_components(self.map)
        gamma_b = to_ball(self.gamma, comps)
        A_b = None
        if self.A is not None:
            A_b = [[to_ball(e, comps) for e in row] for row in self.A]
        f_expr, df_expr = self.f, self.dfdu
        extra = None
        if self.manufactured:
            u_b = to_ball(self.exact, comps)
            extra = _Cached(apply_operator(u_b, comps, A_b, gamma_b), _ExprField(u_b, d), f_expr, d)

        f = _NonlinearField(f_expr, d, extra)
        dfdz = _NonlinearField(df_expr, d)
        gamma = _ExprField(self.gamma, d)
        A = None if self.A is None else _MatrixField(self.A, d)
        if self.bc == "dirichlet":
            boundary = None
            if self.G is not None:
                G_b = to_ball(self.G, comps)
                LG = apply_operator(G_b, comps, A_b, gamma_b)
                boundary = DirichletData(_ExprField(G_b, d), _ExprField(LG, d))
            problem = Problem(self.map, f, dfdz, gamma, A, "dirichlet", boundary)
            if boundary is not None:
                problem = lift_dirichlet(problem)
                off = problem.offset
                problem = _replace_offset(problem, Offset(off.value, off.l_value, ("expression", str(G_b))))
            return problem
        boundary = NeumannData(_ExprField(self.g, d)) if self.g is not None else None
        problem = Problem(self.map, f, dfdz, gamma, A, "neumann", boundary)
        if boundary is not None:
            degree = self.lift_degree or self.max_degree
            _, problem = lift_neumann(problem, degree)
        return problem

    def descriptor(self) -> dict:
        """Text description of the problem, stored alongside solutions."""
        out = {"name": self.name, "dimension": self.d, "map": self.map.name,
               "map_params": " ".join(repr(p) if isinstance(p, float) else str(p) for p in self.map.params),
               "bc": self.bc, "f": str(self.f), "gamma": str(self.gamma)}
        if self.A is not None:
            out["A"] = "; ".join(", ".join(str(e) for e in row) for row in self.A)
        for key, value in (("G", self.G), ("g", self.g), ("exact", self.exact)):
            if value is not None:
                out[key] = str(value)
        if self.manufactured:
            out["manufactured"] = "yes"
        return out

    @property
    def max_degree(self) -> int:
        ref = self.reference
        return ref if isinstance(ref, int) else self.solve.n_end

    def exact_field(self):
        """The exact solution as a function of ball points, or None."""
        if self.exact is None:
            return None
        comps = map_components(self.map)
        field_ = _ExprField(to_ball(self.exact, comps), self.d)
        return lambda x: field_(None, np.atleast_2d(x))


def _replace_offset(problem, offset):
    from dataclasses import replace

    return replace(problem, offset=offset)


class _ExprField:
    """Callable (s, x) -> values for an expression without u."""

    def __init__(self, expr: Expr, d: int):
        self.expr = expr
        self.d = d

    def __call__(self, s, x):
        n = len(x) if x is not None else len(s)
        return evaluate(self.expr, n, bind(self.d, s, x))


class _MatrixField:
    def __init__(self, entries, d):
        self.entries = entries
        self.d = d

    def __call__(self, s, x):
        env = bind(self.d, s, x)
        out = np.empty((len(s), self.d, self.d))
        for i in range(self.d):
            for j in range(self.d):
                out[:, i, j] = evaluate(self.entries[i][j], len(s), env)
        return out


class _Cached:
    """Manufactured correction L u* - f(s, u*) at ball points, remembered per node set."""

    def __init__(self, l_exact: Expr, exact: _ExprField, f: Expr, d: int):
        self.l_exact = l_exact
        self.exact = exact
        self.f = f
        self.d = d
        self._last = None

    def __call__(self, s, x):
        if self._last is not None and self._last[0] is x:
            return self._last[1]
        ue = self.exact(None, x)
        n = len(x)
        value = evaluate(self.l_exact, n, bind(self.d, x=x)) - evaluate(self.f, n, bind(self.d, s, x, ue))
        self._last = (x, value)
        return value


class _NonlinearField:
    """Callable (s, x, z) -> values, with z bound to u."""

    def __init__(self, expr: Expr, d: int, extra=None):
        self.expr = expr
        self.d = d
        self.extra = extra

    def __call__(self, s, x, z):
        out = evaluate(self.expr, len(z), bind(self.d, s, x, z))
        if self.extra is not None:
            out = out + self.extra(s, x)
        return out


# -- parsing --------------------------------------------------------------

def _expr(text, variables, where):
    try:
        return parse_expression(text, variables)
    except ExpressionError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _float(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"[{section.name}] {key} is required")
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"[{section.name}] {key}: expected a number, got {section[key]!r}") from None


def _int(section, key, default=None):
    value = _float(section, key, default)
    if value != int(value):
        raise ConfigError(f"[{section.name}] {key}: expected an integer, got {section[key]!r}")
    return int(value)


def build_map(section) -> DomainMap:
    """DomainMap from the ``[map]`` section (any mapping with ``name``)."""
    name = section.get("name", "identity").strip()
    where = "[map]"
    keys = set(section) - {"name"}
    if name == "expression":
        has_v = "v" in section
        d = 3 if has_v else 2
        allowed = set(PHYSICAL[:d]) | set(BALL[:d])
        unknown = keys - allowed
        if unknown:
            raise ConfigError(f"{where} unknown keys {sorted(unknown)}")
        missing = [k for k in PHYSICAL[:d] if k not in section]
        if missing:
            raise ConfigError(f"{where} missing components {missing}")
        comps = [section[k] for k in PHYSICAL[:d]]
        inv = [section[k] for k in BALL[:d]] if all(k in section for k in BALL[:d]) else None
        if any(k in section for k in BALL[:d]) and inv is None:
            raise ConfigError(f"{where} the inverse needs all of {list(BALL[:d])}")
        for c in comps:
            _expr(c, BALL[:d], f"{where} component {c!r}")
        for c in inv or ():
            _expr(c, PHYSICAL[:d], f"{where} inverse component {c!r}")
        return expression_map(comps, inv)
    if name not in _MAP_KEYS:
        raise ConfigError(f"{where} unknown map {name!r}")
    unknown = keys - _MAP_KEYS[name]
    if unknown:
        raise ConfigError(f"{where} unknown keys {sorted(unknown)} for map {name!r}")
    try:
        if name == "identity":
            d = _int(section, "dimension", 2)
            if d not in (2, 3):
                raise ConfigError(f"{where} dimension must be 2 or 3")
            return identity_map(d)
        if name == "quadratic2d":
            return map_quadratic_2d(_float(section, "a"))
        if name == "quadratic3d":
            return map_quadratic_3d(_float(section, "a"), _float(section, "b"))
        return map_ellipse(_float(section, "a"), _float(section, "b"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where} {exc}") from exc


class _Section(dict):
    """Plain mapping that knows its section name, for error messages."""

    def __init__(self, name, items):
        super().__init__(items)
        self.name = name


def parse_config(text: str, name: str = "config") -> ProblemConfig:
    """Parse and type-check configuration text; raises ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=name)
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    for sec in parser.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        allowed = _SECTIONS[sec]
        if allowed is not None:
            unknown = set(parser[sec]) - allowed
            if unknown:
                raise ConfigError(f"[{sec}] unknown keys {sorted(unknown)}")
    sections = {s: _Section(s, parser[s].items()) for s in parser.sections()}
    get = lambda s: sections.get(s, _Section(s, {}))  # noqa: E731

    dmap = build_map(get("map"))
    d = dmap.d
    space = PHYSICAL[:d] + BALL[:d]
    eq = get("equation")
    f = _expr(eq.get("f", "0"), space + ("u",), "[equation] f")
    dfdu = _expr(eq["dfdu"], space + ("u",), "[equation] dfdu") if "dfdu" in eq else differentiate(f, "u")
    gamma = _expr(eq.get("gamma", "0"), space, "[equation] gamma")
    A = _matrix(eq, d, space)

    bnd = get("boundary")
    bc = bnd.get("type", "dirichlet").strip().lower()
    if bc not in ("dirichlet", "neumann"):
        raise ConfigError(f"[boundary] type must be dirichlet or neumann, got {bc!r}")
    G = g = None
    if "G" in bnd:
        if bc != "dirichlet":
            raise ConfigError("[boundary] G is an extension of Dirichlet data")
        G = _expr(bnd["G"], space, "[boundary] G")
    if "g" in bnd:
        if bc != "neumann":
            raise ConfigError("[boundary] g is Neumann data; give the Dirichlet extension as G")
        g = _expr(bnd["g"], space, "[boundary] g")

    ex = get("exact")
    exact = _expr(ex["u"], space, "[exact] u") if "u" in ex else None
    manufactured = _bool(ex.get("manufactured", "no"), "[exact] manufactured")
    if manufactured and exact is None:
        raise ConfigError("[exact] manufactured = yes needs u")

    st = get("study")
    solve, reference, lift_degree = _study(st, exact)
    outputs = {k: v.strip() for k, v in get("output").items() if v.strip()}
    cfg = ProblemConfig(
        dmap, f, dfdu, gamma, A, bc, G, g, exact, manufactured, solve, reference, lift_degree, outputs, name
    )
    _check_exact_boundary(cfg)
    return cfg


def _bool(text, where):
    value = text.strip().lower()
    if value in ("yes", "true", "on", "1"):
        return True
    if value in ("no", "false", "off", "0"):
        return False
    raise ConfigError(f"{where}: expected yes or no, got {text!r}")


def _matrix(eq, d, space):
    text = eq.get("A", "identity").strip()
    keys = [f"a{i + 1}{j + 1}" for i in range(d) for j in range(i, d)]
    given = [k for k in keys if k in eq]
    extra = [k for k in eq if k.startswith("a") and len(k) == 3 and k not in keys]
    if extra:
        raise ConfigError(f"[equation] entries {extra} do not fit dimension {d}")
    if not given:
        if text != "identity":
            raise ConfigError("[equation] A must be 'identity' or given by entries a11, a12, ...")
        return None
    missing = [k for k in keys if k not in eq]
    if missing:
        raise ConfigError(f"[equation] A is missing entries {missing}")
    entries = {k: _expr(eq[k], space, f"[equation] {k}") for k in keys}
    return tuple(
        tuple(entries[f"a{min(i, j) + 1}{max(i, j) + 1}"] for j in range(d)) for i in range(d)
    )


def _study(st, exact):
    kw = {}
    kw["n_start"] = _int(st, "n_start", 1)
    kw["n_end"] = _int(st, "n_end", kw["n_start"])
    if "newton_tol" in st:
        kw["newton_tol"] = _float(st, "newton_tol")
    if "max_newton" in st:
        kw["max_newton"] = _int(st, "max_newton")
    if "quad_scale" in st:
        kw["quad_scale"] = _float(st, "quad_scale")
    if "quad_extra" in st:
        kw["quad_extra"] = _int(st, "quad_extra")
    guess = st.get("initial_guess", "zeros").split()
    if guess == ["zeros"]:
        kw["initial_guess"] = "zeros"
    elif len(guess) == 2 and guess[0] == "constant":
        try:
            kw["initial_guess"] = ("constant", float(guess[1]))
        except ValueError:
            raise ConfigError(f"[study] initial_guess: bad constant {guess[1]!r}") from None
    elif len(guess) >= 2 and guess[0] == "coefficients":
        try:
            kw["initial_guess"] = tuple(float(v) for v in guess[1:])
        except ValueError:
            raise ConfigError("[study] initial_guess: coefficients must be numbers") from None
    else:
        raise ConfigError("[study] initial_guess must be 'zeros', 'constant <c>' or 'coefficients <c0> <c1> ...'")
    try:
        solve = SolveConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"[study] {exc}") from exc

    reference = None
    ref = st.get("reference", "").strip()
    if ref == "exact":
        if exact is None:
            raise ConfigError("[study] reference = exact needs [exact] u")
        reference = "exact"
    elif ref:
        reference = _int(st, "reference")
        if reference <= solve.n_end:
            raise ConfigError("[study] reference degree must exceed n_end")
    lift_degree = _int(st, "lift_degree") if "lift_degree" in st else None
    return solve, reference, lift_degree


def _check_exact_boundary(cfg):
    """A manufactured Dirichlet solution must match the boundary data."""
    if not (cfg.manufactured and cfg.bc == "dirichlet"):
        return
    from .assembly import boundary_rule

    x = boundary_rule(cfg.d, 6)[0]
    s = cfg.map(x)
    env = bind(cfg.d, s, x)
    u = evaluate(cfg.exact, len(x), env)
    g = evaluate(cfg.G, len(x), env) if cfg.G is not None else np.zeros(len(x))
    gap = float(np.max(np.abs(u - g)))
    if not gap <= 1e-10 * (1.0 + float(np.max(np.abs(u)))):
        raise ConfigError(
            f"[exact] u differs from the Dirichlet data on the boundary by {gap:.2e}; give [boundary] G"
        )


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, name=path.stem)


# -- studies ---------------------------------------------------------------

@dataclass(frozen=True)
class StudyRow:
    n: int
    size: int
    newton_iters: int
    residual_inf: float
    max_error: float


@dataclass
class StudyReport:
    config: ProblemConfig
    rows: list
    solutions: list
    reference: object = None
    failure: Optional[str] = None

    @property
    def ok(self):
        return self.failure is None


def run_study(cfg: ProblemConfig) -> StudyReport:
    """Continuation over the configured degrees plus errors against the reference.

    With a reference degree the continuation runs on up to that degree;
    only degrees ``n_start..n_end`` are reported.  A solver failure stops
    the study and the rows computed so far are returned with the message.
    """
    problem = cfg.build_problem()
    solve = cfg.solve
    top = cfg.reference if isinstance(cfg.reference, int) else solve.n_end
    run = SolveConfig(**{**solve.__dict__, "n_end": top})
    failure = None
    try:
        sols = continue_in_degree(problem, run)
    except NonConvergence as exc:
        failure = f"degree {exc.degree}: {exc}"
        sols_all = list(exc.completed)
    except SingularNewtonMatrix as exc:
        failure = str(exc)
        sols_all = list(exc.completed)
    except ValueError as exc:
        # bad problem data met during assembly (non-finite f, det J <= 0)
        failure = str(exc)
        sols_all = []
    else:
        sols_all = sols
    reported = [s for s in sols_all if s.n <= solve.n_end]
    reference = None
    errors = [math.nan] * len(reported)
    if cfg.reference == "exact":
        reference = cfg.exact_field()
    elif isinstance(cfg.reference, int) and sols_all and sols_all[-1].n == cfg.reference:
        reference = sols_all[-1]
    if reference is not None and reported:
        errors = list(reference_error(reported, reference, evaluation_grid(cfg.d)))
    rows = [
        StudyRow(s.n, basis_size(cfg.d, s.n), s.iterations, float(s.residual), float(e))
        for s, e in zip(reported, errors)
    ]
    return StudyReport(cfg, rows, reported, reference, failure)

