"""JSON and CSV encodings of specs, maps and report tables.

Complex numbers are written as ``[re, im]`` pairs; plain reals are accepted
on input.  A component is a list of spanning column vectors.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .fock import HomogeneousPolynomial
from .variety import IdealSpec, SubspaceComponent, VarietySpec


def _complex(x, path: str) -> complex:
    if isinstance(x, bool):
        raise InvalidInputError(f"{path}: expected a number or [re, im]")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise InvalidInputError(f"{path}: expected a number or [re, im]")


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def complex_matrix(rows, path: str = "matrix") -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InvalidInputError(f"{path}: expected a nonempty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows) or width == 0:
        raise InvalidInputError(f"{path}: rows have unequal length")
    return np.array([[_complex(x, f"{path}[{a}][{b}]") for b, x in enumerate(r)] for a, r in enumerate(rows)])


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[_pair(z) for z in row] for row in m]


def component_from_json(cols, path: str = "component") -> SubspaceComponent:
    if not isinstance(cols, list) or not cols:
        raise InvalidInputError(f"{path}: expected a nonempty list of spanning vectors")
    vecs = complex_matrix(cols, path)
    return SubspaceComponent.from_span(vecs.T)


def component_to_json(c: SubspaceComponent) -> list:
    return [[_pair(z) for z in col] for col in c.basis.T]


def polynomial_from_json(terms, d: int, path: str = "generator") -> HomogeneousPolynomial:
    if not isinstance(terms, list) or not terms:
        raise InvalidInputError(f"{path}: expected a nonempty term list")
    coeffs = {}
    for k, t in enumerate(terms):
        exps = t.get("exponents")
        if not isinstance(exps, list) or len(exps) != d:
            raise InvalidInputError(f"{path}[{k}].exponents: expected {d} nonnegative integers")
        # a bare exponent list means coefficient 1
        re, im = (t.get("re", 0), t.get("im", 0)) if ("re" in t or "im" in t) else (1, 0)
        c = complex(re, im)
        # keep integer coefficients exact
        if im == 0 and float(re).is_integer():
            c = int(re)
        alpha = tuple(int(a) for a in exps)
        coeffs[alpha] = coeffs.get(alpha, 0) + c
    degrees = {sum(a) for a in coeffs}
    if len(degrees) != 1:
        raise InvalidInputError(f"{path}: generator is not homogeneous")
    p = HomogeneousPolynomial.from_dict(d, coeffs, degree=degrees.pop())
    if p.is_zero:
        raise InvalidInputError(f"{path}: generator is zero")
    return p


def polynomial_to_json(p: HomogeneousPolynomial) -> list:
    return [{"exponents": list(a), "re": float(complex(c).real), "im": float(complex(c).imag)}
            for a, c in p.terms]


def ideal_from_json(obj: dict, d: int, path: str = "ideal") -> IdealSpec:
    gens = tuple(polynomial_from_json(g, d, f"{path}.generators[{k}]") for k, g in enumerate(obj["generators"]))
    return IdealSpec(d, gens, bool(obj.get("radical", False)))


def ideal_to_json(ideal: IdealSpec) -> dict:
    return {"generators": [polynomial_to_json(g) for g in ideal.generators], "radical": ideal.radical}


def subject_from_json(obj: dict, d: int, path: str = "subject"):
    """An IdealSpec or a VarietySpec from ``{"ideal": ...}``, ``{"components": ...}`` or ``{"fullSpace": true}``."""
    if "ideal" in obj:
        ideal = ideal_from_json(obj["ideal"], d, f"{path}.ideal")
        return VarietySpec(ideal=ideal) if obj.get("asVariety") else ideal
    if "components" in obj:
        comps = [component_from_json(c, f"{path}.components[{k}]") for k, c in enumerate(obj["components"])]
        for k, c in enumerate(comps):
            if c.d != d:
                raise InvalidInputError(f"{path}.components[{k}]: vectors have length {c.d}, expected {d}")
        return VarietySpec(components=tuple(comps))
    if obj.get("fullSpace"):
        return VarietySpec.full_space(d)
    raise InvalidInputError(f"{path}: expected one of ideal, components, fullSpace")


def subject_to_json(spec) -> dict:
    if isinstance(spec, IdealSpec):
        return {"ideal": ideal_to_json(spec)}
    if spec.ideal is not None:
        return {"ideal": ideal_to_json(spec.ideal), "asVariety": True}
    return {"components": [component_to_json(c) for c in spec.components]}


def linear_map_to_json(spec) -> dict:
    return {
        "matrix": matrix_to_json(spec.matrix),
        "source": subject_to_json(spec.source),
        "target": subject_to_json(spec.target),
    }


def canonical_json(obj) -> str:
    """Sorted keys, no whitespace; floats in shortest round-trip form."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def csv_text(rows: Sequence[dict], columns: Iterable[str]) -> str:
    columns = list(columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path: Path, rows: Sequence[dict], columns: Iterable[str]):
    Path(path).write_text(csv_text(rows, columns), encoding="utf-8")
