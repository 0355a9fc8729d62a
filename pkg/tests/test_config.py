import numpy as np
import pytest

from ballgalerkin import catalog
from ballgalerkin.config import ConfigError, build_map, load_config, parse_config, run_study
from ballgalerkin.solver import evaluation_grid

BASE = """\
[map]
name = quadratic2d
a = 0.95

[equation]
f = cos(pi*s*t)/(1 + u^2)

[study]
n_start = 2
n_end = 6
reference = 8
"""


def test_parse_basic():
    cfg = parse_config(BASE, "demo")
    assert cfg.name == "demo" and cfg.d == 2 and cfg.bc == "dirichlet"
    assert cfg.map.name == "quadratic2d" and cfg.map.params == (0.95,)
    assert (cfg.solve.n_start, cfg.solve.n_end, cfg.reference) == (2, 6, 8)
    assert float(cfg.f.evaluate({"s": 0.0, "t": 0.0, "u": 0.0})) == 1.0
    # symbolic derivative when dfdu is absent
    assert float(cfg.dfdu.evaluate({"s": 0.0, "t": 0.0, "u": 1.0})) == pytest.approx(-0.5)


@pytest.mark.parametrize(
    "text, match",
    [
        ("[map\nname = identity\n", "syntax"),
        ("[map]\nname = identity\nname = identity\n", "syntax"),
        ("[mesh]\nh = 1\n", "unknown section"),
        ("[equation]\nfoo = 1\n", "unknown keys"),
        ("[map]\nname = torus\n", "unknown map"),
        ("[map]\nname = quadratic2d\na = 1.5\n", r"\(0, 1\)"),
        ("[map]\nname = quadratic2d\na = big\n", "expected a number"),
        ("[map]\nname = quadratic2d\nb = 0.5\na = 0.5\n", "unknown keys"),
        ("[map]\nname = identity\ndimension = 4\n", "dimension"),
        ("[equation]\nf = w + 1\n", "unknown identifier 'w'"),
        ("[equation]\ngamma = u\n", "unknown identifier 'u'"),
        ("[equation]\nf = cos(u, u)\n", "argument"),
        ("[equation]\nf = (u\n", "f"),
        ("[equation]\na11 = 1\n", "missing"),
        ("[equation]\na11 = 1\na12 = 0\na22 = 1\na33 = 1\n", "dimension"),
        ("[equation]\nA = diag\n", "identity"),
        ("[boundary]\ntype = robin\n", "type"),
        ("[boundary]\ng = 1\n", "Neumann"),
        ("[boundary]\ntype = neumann\nG = 1\n", "Dirichlet"),
        ("[exact]\nmanufactured = yes\n", "needs u"),
        ("[exact]\nu = 1\nmanufactured = maybe\n", "yes or no"),
        ("[exact]\nu = 1 + x\nmanufactured = yes\n", "boundary"),
        ("[study]\nn_start = 0\nn_end = 3\n", "n_start"),
        ("[study]\nn_start = 2.5\n", "integer"),
        ("[study]\nn_end = 5\nreference = 4\n", "exceed"),
        ("[study]\nreference = exact\n", "needs"),
        ("[study]\ninitial_guess = ones\n", "initial_guess"),
        ("[study]\ninitial_guess = constant ten\n", "constant"),
        ("[study]\ninitial_guess = coefficients 1 x\n", "numbers"),
        ("[study]\nquad_scale = 0.5\n", "quad_scale"),
        ("[map]\nname = expression\ns = x\n", "missing"),
        ("[map]\nname = expression\ns = x\nt = y\nx = s\n", "inverse"),
        ("[map]\nname = expression\ns = x + q\nt = y\n", "unknown identifier 'q'"),
        ("[map]\nname = expression\ns = x\nt = y\nw = 1\n", "unknown keys"),
    ],
)
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_keys_are_case_sensitive():
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config("[equation]\nF = 1\n")
    cfg = parse_config("[boundary]\nG = 1 + s\n[map]\nname = identity\ndimension = 2\n")
    assert cfg.G is not None


def test_inline_comments():
    cfg = parse_config("[study]\nn_end = 4  # four\n")
    assert cfg.solve.n_end == 4


def test_initial_guess_forms():
    assert parse_config("[study]\ninitial_guess = zeros\n").solve.initial_guess == "zeros"
    assert parse_config("[study]\ninitial_guess = constant 10\n").solve.initial_guess == ("constant", 10.0)
    assert parse_config("[study]\ninitial_guess = coefficients 1 0 2.5\n").solve.initial_guess == (1.0, 0.0, 2.5)


def test_variable_coefficient_matrix():
    text = "[equation]\na11 = 2 + s^2\na12 = 0.1\na22 = 1\nf = 1\n[study]\nn_end = 3\n"
    cfg = parse_config(text)
    prob = cfg.build_problem()
    s = np.array([[0.5, 0.0]])
    np.testing.assert_allclose(prob.A(s, s)[0], [[2.25, 0.1], [0.1, 1.0]])


def test_load_config(tmp_path):
    p = tmp_path / "planar.ini"
    p.write_text(BASE)
    assert load_config(p).name == "planar"
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")


def test_build_map_expression_3d():
    m = build_map({"name": "expression", "s": "x", "t": "y", "v": "2*z + 0.5*z^2"})
    assert m.d == 3
    assert m.det_jacobian([[0.0, 0.0, 1.0]])[0] == pytest.approx(3.0)


def test_expression_map_config_solves_manufactured_problem():
    text = """\
[map]
name = expression
s = x - y + 0.5*x^2
t = x + y
x = (s + t)/(1 + sqrt(1 + 0.5*(s + t)))
y = t - (s + t)/(1 + sqrt(1 + 0.5*(s + t)))

[equation]
f = u^3 - u
gamma = 1 + s^2
a11 = 1 + 0.1*t^2
a12 = 0.2
a22 = 1.5

[exact]
u = (1 - x^2 - y^2)*exp(x*y)
manufactured = yes

[study]
n_start = 1
n_end = 16
reference = exact
quad_scale = 2
"""
    rep = run_study(parse_config(text))
    assert rep.ok
    assert rep.rows[-1].max_error < 1e-11


@pytest.mark.parametrize("name", catalog.names())
def test_catalog_entries_parse(name):
    cfg = catalog.get_config(name)
    assert cfg.name == name
    cfg.build_problem()


def test_catalog_unknown():
    with pytest.raises(KeyError):
        catalog.get_config("nope")


def test_manufactured_disk_reaches_tolerance():
    rep = run_study(catalog.get_config("manufactured-disk"))
    assert rep.ok and [r.n for r in rep.rows] == list(range(1, 16))
    assert rep.rows[-1].max_error <= 1e-9


def test_planar_regression():
    # regression bound from the reproduction run (about 5e-6 at n = 20)
    rep = run_study(catalog.get_config("paper-planar-cos"))
    errs = [r.max_error for r in rep.rows]
    assert rep.ok and [r.n for r in rep.rows] == list(range(5, 21))
    assert errs[-1] <= 1e-4
    assert errs[-1] < errs[0]


def test_neumann_ellipse_regression():
    rep = run_study(catalog.get_config("paper-neumann-ellipse"))
    assert rep.ok
    assert rep.rows[-1].n == 18 and rep.rows[-1].max_error < 1e-4


def test_lift_entries_recover_exact_solution():
    for name in ("dirichlet-lift", "neumann-lift"):
        rep = run_study(catalog.get_config(name))
        assert rep.ok
        assert rep.rows[-1].max_error < 1e-9, name


def test_study_failure_keeps_partial_rows():
    text = BASE.replace("n_start = 2", "n_start = 1") + "max_newton = 3\ninitial_guess = constant 10\n"
    text = text.replace("f = cos(pi*s*t)/(1 + u^2)", "f = 100*u*(1 - u)")
    rep = run_study(parse_config(text))
    assert not rep.ok and "degree" in rep.failure
    assert all(r.n < 8 for r in rep.rows)


def test_study_reports_bad_data():
    rep = run_study(parse_config("[equation]\nf = log(u - 2)\n[study]\nn_end = 2\n"))
    assert not rep.ok and "not finite" in rep.failure
    assert rep.rows == []


def test_exact_field_matches_boundary_condition():
    cfg = catalog.get_config("dirichlet-lift")
    exact = cfg.exact_field()
    th = np.linspace(0, 2 * np.pi, 7)
    x = np.column_stack([np.cos(th), np.sin(th)])
    s = cfg.map(x)
    np.testing.assert_allclose(exact(x), 1 + s[:, 0] * s[:, 1], atol=1e-14)
    assert exact(evaluation_grid(2)).shape == (51 * 101,)


def test_descriptor():
    d = catalog.get_config("dirichlet-lift").descriptor()
    assert d["bc"] == "dirichlet" and d["map"] == "quadratic2d" and "G" in d
    assert d["manufactured"] == "yes"
