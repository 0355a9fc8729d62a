"""Solution files and point lists.

A solution file is a small JSON document::

    {"format": "ballgalerkin-solution", "version": 1,
     "basis": {"d": 2, "n": 12, "kind": "bubble"},
     "map": {"name": "quadratic2d", "params": [0.95]},
     "problem": {"name": "planar", "f": "cos(pi*s*t)/(1 + u^2)", ...},
     "offset": null,
     "coefficients": [...], "iterations": 1, "residual": 1e-16}

Floats are written with ``repr`` so every coefficient reads back to the
same double.  ``offset`` is ``null``, ``{"kind": "expression", "text": ...}``
for a Dirichlet extension written in ball variables, or
``{"kind": "spectral", "n": ..., "basis": ..., "coefficients": [...]}``
for a Neumann lift.  ``problem`` is informational text describing the
equation the coefficients solve; it is kept but never interpreted.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .assembly import Offset
from .basis import BasisSet
from .expr import parse_expression
from .geometry import DomainMap, identity_map, map_ellipse, map_quadratic_2d, map_quadratic_3d
from .solver import SpectralSolution
from .symbolic import BALL, bind, evaluate, expression_map

__all__ = [
    "FORMAT",
    "VERSION",
    "SolutionFileError",
    "solution_to_dict",
    "solution_from_dict",
    "save_solution",
    "load_solution",
    "map_from_descriptor",
    "read_points",
]

FORMAT = "ballgalerkin-solution"
VERSION = 1


class SolutionFileError(ValueError):
    pass


def map_from_descriptor(name: str, params, d: int) -> DomainMap:
    params = tuple(params)
    if name == "identity":
        return identity_map(d)
    if name == "quadratic2d":
        return map_quadratic_2d(*params)
    if name == "quadratic3d":
        return map_quadratic_3d(*params)
    if name == "ellipse":
        return map_ellipse(*params)
    if name == "expression":
        comps = list(params[:d])
        inverse = list(params[d:]) or None
        return expression_map(comps, inverse)
    raise SolutionFileError(f"unknown map {name!r}")


def _offset_to_dict(offset):
    if offset is None:
        return None
    desc = offset.descriptor
    if desc and desc[0] == "expression":
        return {"kind": "expression", "text": desc[1]}
    if desc and desc[0] == "spectral":
        _, d, kind, degree, coeffs = desc
        return {"kind": "spectral", "basis": kind, "n": int(degree), "coefficients": [float(c) for c in coeffs]}
    raise SolutionFileError("the solution's offset cannot be stored (it was built from Python callables)")


def _offset_from_dict(data, d):
    if data is None:
        return None
    kind = data.get("kind")
    if kind == "expression":
        e = parse_expression(data["text"], BALL[:d])

        def value(x):
            x = np.atleast_2d(x)
            return evaluate(e, len(x), bind(d, x=x))

        desc = ("expression", data["text"])
    elif kind == "spectral":
        basis = BasisSet(d, int(data["n"]), data["basis"])
        coeffs = np.array(data["coefficients"], dtype=float)
        if len(coeffs) != len(basis):
            raise SolutionFileError("offset coefficient count does not match its basis")

        def value(x):
            return basis.values(np.atleast_2d(x)) @ coeffs

        desc = ("spectral", d, data["basis"], int(data["n"]), coeffs)
    else:
        raise SolutionFileError(f"unknown offset kind {kind!r}")

    def no_image(x):
        raise SolutionFileError("a stored offset can be evaluated but not re-solved")

    return Offset(value, no_image, desc)


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def solution_to_dict(sol: SpectralSolution, problem=None) -> dict:
    m = sol.map
    if problem is None:
        problem = sol.descriptor
    return {
        "format": FORMAT,
        "version": VERSION,
        "basis": {"d": sol.d, "n": sol.n, "kind": sol.basis.kind},
        "map": None if m is None else {"name": m.name, "params": list(m.params)},
        "problem": None if problem is None else {str(k): str(v) for k, v in problem.items()},
        "offset": _offset_to_dict(sol.offset),
        "coefficients": [float(a) for a in sol.alpha],
        "iterations": int(sol.iterations),
        "residual": _finite_or_none(sol.residual),
    }


def solution_from_dict(data: dict) -> SpectralSolution:
    if data.get("format") != FORMAT:
        raise SolutionFileError("not a ballgalerkin solution file")
    if data.get("version") != VERSION:
        raise SolutionFileError(f"unsupported solution file version {data.get('version')!r}")
    try:
        b = data["basis"]
        basis = BasisSet(int(b["d"]), int(b["n"]), b["kind"])
        alpha = np.array(data["coefficients"], dtype=float)
        m = data.get("map")
        dmap = None if m is None else map_from_descriptor(m["name"], m["params"], basis.d)
        offset = _offset_from_dict(data.get("offset"), basis.d)
        problem = data.get("problem")
        if problem is not None and not isinstance(problem, dict):
            raise TypeError("problem must be an object")
    except (KeyError, TypeError) as exc:
        raise SolutionFileError(f"malformed solution file: {exc}") from exc
    if alpha.shape != (len(basis),):
        raise SolutionFileError(f"expected {len(basis)} coefficients, found {alpha.size}")
    residual = data.get("residual")
    return SpectralSolution(
        basis, alpha, dmap, offset,
        iterations=int(data.get("iterations", 0)),
        residual=float("nan") if residual is None else float(residual),
        descriptor=problem,
    )


def save_solution(sol: SpectralSolution, path, problem=None) -> None:
    """Write ``sol``; ``problem`` is an optional text descriptor of the equation."""
    text = json.dumps(solution_to_dict(sol, problem), indent=1)
    Path(path).write_text(text + "\n")


def load_solution(path) -> SpectralSolution:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SolutionFileError(f"{path}: {exc}") from exc
    return solution_from_dict(data)


def read_points(path, d: int) -> np.ndarray:
    """Points from a text file, one per line, separated by spaces or commas.

    Blank lines and lines starting with ``#`` are skipped.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != d:
            raise ValueError(f"{path}:{lineno}: expected {d} coordinates, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number in {line!r}") from None
    return np.array(rows, dtype=float).reshape(-1, d)
