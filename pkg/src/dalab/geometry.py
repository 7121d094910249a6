"""Friedrichs angles, tensor-power angle decay and closedness witnesses.

Functions accept :class:`GradedSubspace`, :class:`SubspaceComponent` or a raw
matrix with orthonormal columns wherever a subspace is expected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _linalg
from ._linalg import INTERSECTION_TOL, RANK_RTOL
from .errors import DecompositionNotUniqueError, InvalidInputError, PreconditionError
from .variety import GradedSubspace, SubspaceComponent, subspace_power


def _basis(x) -> np.ndarray:
    b = getattr(x, "basis", x)
    b = np.asarray(b, dtype=complex)
    if b.ndim == 1:
        b = b[:, None]
    return b


def _same_ambient(m: np.ndarray, n: np.ndarray):
    if m.shape[0] != n.shape[0]:
        raise InvalidInputError(f"subspaces live in different ambient spaces ({m.shape[0]} vs {n.shape[0]})")


def _degree(x):
    return getattr(x, "degree", 0)


def intersect(m, n, tol: float = INTERSECTION_TOL) -> GradedSubspace:
    """M cap N from principal vectors whose cosine is within ``tol`` of 1."""
    bm, bn = _basis(m), _basis(n)
    _same_ambient(bm, bn)
    return GradedSubspace(_degree(m), _linalg.intersect(bm, bn, tol))


def orth_complement_in(m, n, tol: float = INTERSECTION_TOL) -> GradedSubspace:
    """M minus (M cap N), i.e. the principal vectors of M outside the intersection."""
    bm, bn = _basis(m), _basis(n)
    _same_ambient(bm, bn)
    if bm.shape[1] == 0 or bn.shape[1] == 0:
        return GradedSubspace(_degree(m), bm)
    mu, _, s = _linalg.principal_decomposition(bm, bn)
    k = int(np.count_nonzero(s > 1.0 - tol))
    return GradedSubspace(_degree(m), mu[:, k:])


def friedrichs_cos(m, n, tol: float = INTERSECTION_TOL) -> float:
    """Cosine of the Friedrichs angle; 0 when either side is contained in the other."""
    bm, bn = _basis(m), _basis(n)
    _same_ambient(bm, bn)
    if bm.shape[1] == 0 or bn.shape[1] == 0:
        return 0.0
    mu, nv, s = _linalg.principal_decomposition(bm, bn)
    k = int(np.count_nonzero(s > 1.0 - tol))
    mp, np_ = mu[:, k:], nv[:, k:]
    if mp.shape[1] == 0 or np_.shape[1] == 0:
        return 0.0
    return float(min(1.0, np.linalg.norm(mp.conj().T @ np_, 2)))


def max_pairwise_cos(subspaces: Sequence, tol: float = INTERSECTION_TOL) -> float:
    if len(subspaces) < 2:
        raise InvalidInputError("need at least two subspaces")
    return max(friedrichs_cos(a, b, tol) for a, b in itertools.combinations(subspaces, 2))


def _require_disjoint_spans(components: Sequence, tol: float = INTERSECTION_TOL):
    for a, b in itertools.combinations(range(len(components)), 2):
        if intersect(components[a], components[b], tol).dim:
            raise PreconditionError(
                f"disjoint-spans precondition violated: components {a} and {b} intersect"
            )


@dataclass(frozen=True)
class AngleReport:
    """Friedrichs cosine of a pair of component spans and of their tensor powers."""

    pair: tuple
    cos: float
    intersection_dim: int
    per_degree: tuple = ()
    bound_ok: bool = True

    def rows(self):
        i, j = self.pair
        return [{"i": i, "j": j, "degree": k, "cos": c, "bound": self.cos ** k} for k, c in self.per_degree]


def pairwise_angles(components: Sequence, tol: float = INTERSECTION_TOL) -> list[AngleReport]:
    out = []
    for a, b in itertools.combinations(range(len(components)), 2):
        out.append(AngleReport((a, b), friedrichs_cos(components[a], components[b], tol),
                               intersect(components[a], components[b], tol).dim))
    return out


def tensor_angle_decay(components: Sequence[SubspaceComponent], k_max: int, atol: float = 1e-9,
                       tol: float = INTERSECTION_TOL) -> list[AngleReport]:
    """cos(V_i^k, V_j^k) for k = 1..k_max, checked against ``c_ij^k`` and ``c^k``."""
    components = [c if isinstance(c, SubspaceComponent) else SubspaceComponent(c) for c in components]
    _require_disjoint_spans(components, tol)
    c = max_pairwise_cos(components, tol)
    reports = []
    for a, b in itertools.combinations(range(len(components)), 2):
        cij = friedrichs_cos(components[a], components[b], tol)
        table = []
        ok = True
        for k in range(1, k_max + 1):
            ck = friedrichs_cos(subspace_power(components[a], k), subspace_power(components[b], k), tol)
            table.append((k, ck))
            ok = ok and ck <= c ** k + atol
        reports.append(AngleReport((a, b), cij, 0, tuple(table), ok))
    return reports


@dataclass(frozen=True)
class Decomposition:
    """Components ``v_i`` of ``v`` and both sides of the norm comparison."""

    parts: tuple
    norm_sq: float
    parts_norm_sq: float
    k: int
    c_n: float
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.parts_norm_sq <= self.upper


def component_decomposition(v, pieces: Sequence, c: float | None = None, n: int | None = None,
                            rtol: float = RANK_RTOL) -> Decomposition:
    """Write v = v_1 + ... + v_k with v_i in the i-th piece and compare norms.

    ``c_n`` is ``c ** n`` when both are given, otherwise the largest pairwise
    Friedrichs cosine of the pieces themselves.
    """
    v = np.asarray(v, dtype=complex).ravel()
    bases = [_basis(p) for p in pieces]
    cat = np.hstack(bases)
    s = np.linalg.svd(cat, compute_uv=False)
    if cat.shape[1] > cat.shape[0] or s[-1] <= rtol * max(s[0], 1.0):
        raise DecompositionNotUniqueError("component pieces are linearly dependent; decomposition not unique")
    x, *_ = np.linalg.lstsq(cat, v, rcond=None)
    parts, start = [], 0
    for b in bases:
        parts.append(b @ x[start:start + b.shape[1]])
        start += b.shape[1]
    k = len(bases)
    if c is not None and n is not None:
        c_n = c ** n
    else:
        c_n = max_pairwise_cos(pieces) if k > 1 else 0.0
    norm_sq = float(np.vdot(v, v).real)
    parts_sq = float(sum(np.vdot(p, p).real for p in parts))
    return Decomposition(tuple(parts), norm_sq, parts_sq, k, c_n, (1 - k * c_n) * norm_sq, (1 + k * c_n) * norm_sq)


@dataclass(frozen=True)
class ClosednessReport:
    degrees: tuple
    sigma_min: tuple
    bound: tuple
    passed: tuple
    c: float
    m: int

    def rows(self):
        return [
            {"degree": n, "sigma_min": s, "bound": b, "pass": p}
            for n, s, b, p in zip(self.degrees, self.sigma_min, self.bound, self.passed)
        ]

    def summary(self) -> dict:
        return {"c": self.c, "components": self.m, "all_pass": all(self.passed),
                "floor": min(self.sigma_min) if self.sigma_min else None}


def closedness_witness(components: Sequence[SubspaceComponent], n_max: int, atol: float = 1e-9,
                       tol: float = INTERSECTION_TOL) -> ClosednessReport:
    """sigma_min of the sum map V_1^k + ... + V_m^k -> H_k against sqrt(1 - c^k (m-1))."""
    components = [c if isinstance(c, SubspaceComponent) else SubspaceComponent(c) for c in components]
    _require_disjoint_spans(components, tol)
    m = len(components)
    c = max_pairwise_cos(components, tol) if m > 1 else 0.0
    degrees, smin, bound, passed = [], [], [], []
    for k in range(n_max + 1):
        t = np.hstack([subspace_power(comp, k).basis for comp in components])
        s = _linalg.sigma_min(t)
        rhs = 1.0 - c ** k * (m - 1)
        degrees.append(k)
        smin.append(s)
        bound.append(float(np.sqrt(max(0.0, rhs))))
        passed.append(bool(rhs <= 0 or s * s >= rhs - atol))
    return ClosednessReport(tuple(degrees), tuple(smin), tuple(bound), tuple(passed), c, m)


@dataclass(frozen=True)
class SumReport:
    degrees: tuple
    sigma_min: tuple
    sum_dim: tuple

    @property
    def floor(self) -> float:
        return min(self.sigma_min)

    def rows(self):
        return [{"degree": n, "sigma_min": s, "sum_dim": r}
                for n, s, r in zip(self.degrees, self.sigma_min, self.sum_dim)]


def subspace_sum_check(components: Sequence[SubspaceComponent], n_max: int,
                       rtol: float = RANK_RTOL) -> SumReport:
    """Smallest nonzero singular value of the degreewise sum map.

    This is the sum map restricted to the orthogonal complement of its
    kernel; a uniform positive floor is a numerical witness of a closed sum.
    """
    components = [c if isinstance(c, SubspaceComponent) else SubspaceComponent(c) for c in components]
    degrees, smin, dims = [], [], []
    for k in range(n_max + 1):
        t = np.hstack([subspace_power(comp, k).basis for comp in components])
        s = np.linalg.svd(t, compute_uv=False)
        nz = s[s > rtol * s[0]]
        degrees.append(k)
        smin.append(float(nz[-1]))
        dims.append(int(nz.size))
    return SumReport(tuple(degrees), tuple(smin), tuple(dims))
