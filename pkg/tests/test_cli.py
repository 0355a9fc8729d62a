import subprocess
import sys

import numpy as np
import pytest

from ballgalerkin.cli import CSV_COLUMNS, main
from ballgalerkin.expr import parse_expression
from ballgalerkin.io import load_solution

CONFIG = """\
[map]
name = quadratic2d
a = 0.95

[equation]
f = cos(pi*s*t)/(1 + u^2)

[study]
n_start = 2
n_end = 6
reference = 8

[output]
table = out.txt
csv = out.csv
data = out.dat
solution = out.json
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_writes_all_outputs(workdir, capsys):
    (workdir / "planar.ini").write_text(CONFIG)
    code, out, err = run(capsys, "solve", "planar.ini")
    assert code == 0, err
    assert out == (workdir / "out.txt").read_text()
    assert "problem planar: d=2, map=quadratic2d, bc=dirichlet, reference=8" in out

    lines = (workdir / "out.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) == "n,N_n,newton_iters,residual_inf,max_error"
    rows = [line.split(",") for line in lines[1:]]
    assert [int(r[0]) for r in rows] == [2, 3, 4, 5, 6]
    assert [int(r[1]) for r in rows] == [6, 10, 15, 21, 28]
    errs = [float(r[4]) for r in rows]
    assert all(0 < e < 1 for e in errs)

    data = (workdir / "out.dat").read_text().splitlines()
    assert data[0].startswith("#")
    pairs = np.array([[float(v) for v in line.split()] for line in data[1:]])
    np.testing.assert_allclose(pairs[:, 1], np.log10(errs), rtol=1e-15)

    sol = load_solution(workdir / "out.json")
    assert sol.n == 6 and sol.descriptor["map"] == "quadratic2d"
    # the stored equation parses back to the same function
    f = parse_expression(sol.descriptor["f"], ("s", "t", "u"))
    env = {"s": np.array([0.3]), "t": np.array([-0.7]), "u": np.array([1.5])}
    assert f.evaluate(env)[0] == pytest.approx(np.cos(np.pi * 0.3 * -0.7) / (1 + 1.5**2), rel=1e-15)


def test_csv_is_deterministic(workdir, capsys):
    (workdir / "planar.ini").write_text(CONFIG)
    assert run(capsys, "solve", "planar.ini", "-q")[0] == 0
    first = (workdir / "out.csv").read_bytes()
    first_sol = (workdir / "out.json").read_bytes()
    assert run(capsys, "solve", "planar.ini", "-q", "--csv", "again.csv", "--solution", "again.json")[0] == 0
    assert (workdir / "again.csv").read_bytes() == first
    assert (workdir / "again.json").read_bytes() == first_sol


def test_syntax_error_writes_nothing(workdir, capsys):
    (workdir / "bad.ini").write_text(CONFIG.replace("[equation]", "[equation"))
    code, out, err = run(capsys, "solve", "bad.ini")
    assert code == 2 and out == ""
    assert "syntax" in err
    assert sorted(p.name for p in workdir.iterdir()) == ["bad.ini"]


def test_unknown_config(workdir, capsys):
    code, _, err = run(capsys, "solve", "no-such-problem")
    assert code == 2 and "no such file" in err


def test_quiet_and_flag_overrides(workdir, capsys):
    code, out, _ = run(capsys, "solve", "manufactured-disk", "-q", "--csv", "m.csv")
    assert code == 0 and out == ""
    rows = (workdir / "m.csv").read_text().splitlines()[1:]
    assert len(rows) == 15 and float(rows[-1].split(",")[4]) <= 1e-9


def test_solver_failure_keeps_partial_outputs(workdir, capsys):
    text = CONFIG.replace("f = cos(pi*s*t)/(1 + u^2)", "f = 100*u*(1 - u)")
    text = text.replace("n_start = 2", "n_start = 1\ninitial_guess = constant 10\nmax_newton = 3")
    (workdir / "fail.ini").write_text(text)
    code, out, err = run(capsys, "solve", "fail.ini")
    assert code == 1
    assert "FAILED" in out and "error:" in err
    assert (workdir / "out.csv").read_text().startswith("n,N_n")


def test_eval_ball_and_physical(workdir, capsys):
    (workdir / "planar.ini").write_text(CONFIG)
    run(capsys, "solve", "planar.ini", "-q")
    sol = load_solution(workdir / "out.json")
    x = np.array([[0.0, 0.0], [0.3, -0.4], [0.5, 0.5]])
    (workdir / "pts.txt").write_text("\n".join(f"{a} {b}" for a, b in x) + "\n")
    code, out, _ = run(capsys, "eval", "out.json", "pts.txt")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y,u"
    np.testing.assert_array_equal([float(line.split(",")[2]) for line in lines[1:]], sol.evaluate(x))

    s = sol.map(x)
    (workdir / "phys.txt").write_text("\n".join(f"{float(a)!r},{float(b)!r}" for a, b in s) + "\n")
    code, out, _ = run(capsys, "eval", "out.json", "phys.txt", "--physical")
    assert code == 0 and out.splitlines()[0] == "s,t,u"
    vals = [float(line.split(",")[2]) for line in out.splitlines()[1:]]
    np.testing.assert_allclose(vals, sol.evaluate(x), atol=1e-13)


def test_eval_errors(workdir, capsys):
    (workdir / "junk.json").write_text("{}")
    (workdir / "pts.txt").write_text("0 0\n")
    assert run(capsys, "eval", "junk.json", "pts.txt")[0] == 2
    assert run(capsys, "eval", "missing.json", "pts.txt")[0] == 2


@pytest.mark.parametrize("d, q", [(2, 5), (2, 12), (3, 4), (3, 10)])
def test_quadcheck_passes(capsys, d, q):
    code, out, _ = run(capsys, "quadcheck", str(d), str(q))
    assert code == 0 and out.rstrip().endswith("ok")
    assert f"exact to degree {2 * q if d == 2 else 2 * q - 1}" in out


def test_quadcheck_bad_arguments(capsys):
    assert run(capsys, "quadcheck", "4", "3")[0] == 2
    assert run(capsys, "quadcheck", "2", "0")[0] == 2


def test_catalog_command(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == 0 and "manufactured-disk" in out.split()
    code, out, _ = run(capsys, "catalog", "manufactured-disk")
    assert code == 0 and "[exact]" in out
    assert run(capsys, "catalog", "nope")[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ballgalerkin", "quadcheck", "2", "3"],
        capture_output=True,
        text=True,
        cwd=tmp_path,
    )
    assert proc.returncode == 0
    assert "d=2 q=3" in proc.stdout
