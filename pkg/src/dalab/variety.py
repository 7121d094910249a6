"""Homogeneous ideals and varieties as graded subspaces of H_n.

An ideal enters through generators; a variety either as a union of linear
subspaces (each given by an isometric basis) or through a radical ideal.
Radicality is asserted by the caller and never computed here;
:func:`check_radical_consistency` is the falsifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from . import _linalg
from ._linalg import RANK_RTOL, readonly
from .errors import InsufficientDegreeRangeError, InvalidInputError
from .fock import HomogeneousPolynomial, dim_h, enumerate_degree, shift_matrix, symmetric_power


@dataclass(frozen=True, eq=False)
class GradedSubspace:
    """Orthonormal basis (columns, in the eps_alpha basis) of a subspace of H_n."""

    degree: int
    basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis", readonly(np.asarray(self.basis, dtype=complex)))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def orthonormality_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.linalg.norm(self.basis.conj().T @ self.basis - np.eye(self.dim), 2))


@dataclass(frozen=True, eq=False)
class SubspaceComponent:
    """A linear subspace L of C^d given by a d x m matrix with orthonormal columns."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        d, m = b.shape
        if not 1 <= m <= d:
            raise InvalidInputError(f"component basis must be d x m with 1 <= m <= d, got {b.shape}")
        if np.linalg.norm(b.conj().T @ b - np.eye(m), 2) > 1e-12:
            raise InvalidInputError("component basis columns are not orthonormal")
        object.__setattr__(self, "basis", readonly(b))

    @classmethod
    def from_span(cls, vectors) -> "SubspaceComponent":
        """Orthonormalize the columns of ``vectors`` (a single vector is one column)."""
        v = np.asarray(vectors, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        q = _linalg.orth(v)
        if q.shape[1] == 0:
            raise InvalidInputError("cannot span a component from zero vectors")
        return cls(q)

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def m(self) -> int:
        return self.basis.shape[1]

    def _key(self):
        return (self.basis.shape, self.basis.tobytes())

    def __eq__(self, other):
        return isinstance(other, SubspaceComponent) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


@dataclass(frozen=True)
class IdealSpec:
    """A homogeneous ideal by generators; ``radical`` is the caller's assertion."""

    d: int
    generators: tuple
    radical: bool = False

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise InvalidInputError("an ideal needs at least one generator")
        for g in gens:
            if not isinstance(g, HomogeneousPolynomial):
                raise InvalidInputError(f"generator {g!r} is not a HomogeneousPolynomial")
            if g.d != self.d:
                raise InvalidInputError(f"generator in {g.d} variables, ideal in {self.d}")
            if g.is_zero:
                raise InvalidInputError("generators must be nonzero")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def monomial(cls, exponents: Iterable[Sequence[int]], radical: bool = False) -> "IdealSpec":
        gens = tuple(HomogeneousPolynomial.monomial(a) for a in exponents)
        return cls(gens[0].d if gens else 0, gens, radical)

    @property
    def is_monomial(self) -> bool:
        return all(g.is_monomial for g in self.generators)


@dataclass(frozen=True)
class VarietySpec:
    """Either a union of linear subspaces or the zero set of a radical ideal."""

    components: tuple | None = None
    ideal: IdealSpec | None = None

    def __post_init__(self):
        if (self.components is None) == (self.ideal is None):
            raise InvalidInputError("give exactly one of components or ideal")
        if self.ideal is not None:
            if not self.ideal.radical:
                raise InvalidInputError("a variety given by an ideal requires radical=True")
            return
        comps = tuple(self.components)
        if not comps:
            raise InvalidInputError("component list must be nonempty")
        if len({c.d for c in comps}) != 1:
            raise InvalidInputError("components live in different ambient dimensions")
        for a, ca in enumerate(comps):
            for b, cb in enumerate(comps):
                if a != b and ca.m <= cb.m:
                    resid = ca.basis - cb.basis @ (cb.basis.conj().T @ ca.basis)
                    if np.linalg.norm(resid, 2) <= 1e-8:
                        raise InvalidInputError(f"component {a} is contained in component {b} (redundant)")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_components(cls, components: Iterable) -> "VarietySpec":
        comps = tuple(c if isinstance(c, SubspaceComponent) else SubspaceComponent.from_span(c) for c in components)
        return cls(components=comps)

    @classmethod
    def full_space(cls, d: int) -> "VarietySpec":
        return cls(components=(SubspaceComponent(np.eye(d)),))

    @property
    def d(self) -> int:
        return self.ideal.d if self.ideal is not None else self.components[0].d

    @property
    def is_full_space(self) -> bool:
        return self.components is not None and any(c.m == c.d for c in self.components)


Spec = Union[IdealSpec, VarietySpec]


# -- ideal pieces -----------------------------------------------------------

def _monomial_ideal_positions(ideal: IdealSpec, n: int) -> list[int]:
    gens = [g.terms[0][0] for g in ideal.generators]
    return [
        k
        for k, alpha in enumerate(enumerate_degree(ideal.d, n))
        if any(all(a >= b for a, b in zip(alpha, g)) for g in gens)
    ]


@lru_cache(maxsize=1024)
def _numeric_ideal_basis(ideal: IdealSpec, n: int, rtol: float) -> np.ndarray:
    d = ideal.d
    cols = [g.coords()[:, None] for g in ideal.generators if g.degree == n]
    if n > 0:
        prev = _numeric_ideal_basis(ideal, n - 1, rtol)
        if prev.shape[1]:
            cols.extend(shift_matrix(d, j, n - 1) @ prev for j in range(d))
    if not cols:
        return readonly(np.zeros((dim_h(d, n), 0), dtype=complex))
    return readonly(_linalg.orth(np.hstack(cols), rtol))


def ideal_piece(ideal: IdealSpec, n: int, rtol: float = RANK_RTOL, exact: bool = True) -> GradedSubspace:
    """I_n = span{z^beta g}, orthonormalized.

    Monomial ideals take an exact path (coordinate vectors) unless
    ``exact=False``; everything else goes through a rank-revealing SVD of
    ``S_j I_{n-1}`` together with the degree-n generators.
    """
    if n < 0:
        raise InvalidInputError("degree must be nonnegative")
    if exact and ideal.is_monomial:
        pos = _monomial_ideal_positions(ideal, n)
        basis = np.zeros((dim_h(ideal.d, n), len(pos)), dtype=complex)
        basis[pos, np.arange(len(pos))] = 1.0
        return GradedSubspace(n, basis)
    return GradedSubspace(n, _numeric_ideal_basis(ideal, n, rtol))


def quotient_piece(ideal: IdealSpec, n: int, rtol: float = RANK_RTOL, exact: bool = True) -> GradedSubspace:
    """F_n = H_n minus I_n (orthogonal complement)."""
    if exact and ideal.is_monomial:
        inside = set(_monomial_ideal_positions(ideal, n))
        pos = [k for k in range(dim_h(ideal.d, n)) if k not in inside]
        basis = np.zeros((dim_h(ideal.d, n), len(pos)), dtype=complex)
        basis[pos, np.arange(len(pos))] = 1.0
        return GradedSubspace(n, basis)
    return GradedSubspace(n, _linalg.complement(ideal_piece(ideal, n, rtol, exact=False).basis))


# -- variety pieces ---------------------------------------------------------

def subspace_power(component: SubspaceComponent, n: int) -> GradedSubspace:
    """Orthonormal basis of L^n: the image of H_n(m) under ``q -> q o B^H``."""
    if not isinstance(component, SubspaceComponent):
        component = SubspaceComponent(component)
    return GradedSubspace(n, symmetric_power(component.basis, n))


@lru_cache(maxsize=1024)
def _component_frame(components: tuple, n: int, rtol: float):
    pieces = np.hstack([symmetric_power(c.basis, n) for c in components])
    q, coef = _linalg.orth_with_coefficients(pieces, rtol)
    return readonly(pieces), readonly(q), readonly(coef)


def component_frame(components: Sequence[SubspaceComponent], n: int, rtol: float = RANK_RTOL):
    """``(pieces, q, coef)``: stacked component power bases, an orthonormal basis
    of their sum, and coefficients with ``q = pieces @ coef``."""
    return _component_frame(tuple(components), n, rtol)


def variety_piece(variety: VarietySpec, n: int, rtol: float = RANK_RTOL) -> GradedSubspace:
    """V^n = sum of the component powers V_i^n, or F_n for an ideal-defined variety."""
    if variety.ideal is not None:
        return quotient_piece(variety.ideal, n, rtol)
    if len(variety.components) == 1:
        return subspace_power(variety.components[0], n)
    return GradedSubspace(n, component_frame(variety.components, n, rtol)[1])


def graded_piece(spec: Spec, n: int, rtol: float = RANK_RTOL) -> GradedSubspace:
    """The degree-n piece of the quotient module F for an ideal or a variety."""
    if isinstance(spec, IdealSpec):
        return quotient_piece(spec, n, rtol)
    return variety_piece(spec, n, rtol)


@dataclass(frozen=True)
class RadicalConsistencyReport:
    degrees: tuple
    distances: tuple
    dims_quotient: tuple
    dims_variety: tuple

    def first_mismatch(self, tol: float = 1e-8):
        for n, dist in zip(self.degrees, self.distances):
            if dist > tol:
                return n
        return None


def check_radical_consistency(ideal: IdealSpec, variety: VarietySpec, n_max: int,
                              rtol: float = RANK_RTOL) -> RadicalConsistencyReport:
    """Per-degree distance ``||P_{F_n(I)} - P_{V^n}||`` for n = 0..n_max."""
    if not ideal.radical:
        raise InvalidInputError("radical consistency check requires radical=True on the ideal")
    degrees, dists, dq, dv = [], [], [], []
    for n in range(n_max + 1):
        f = quotient_piece(ideal, n, rtol)
        v = variety_piece(variety, n, rtol)
        degrees.append(n)
        dists.append(_linalg.subspace_distance(f.basis, v.basis))
        dq.append(f.dim)
        dv.append(v.dim)
    return RadicalConsistencyReport(tuple(degrees), tuple(dists), tuple(dq), tuple(dv))


# -- Hilbert data -----------------------------------------------------------

def hilbert_dimensions(spec: Spec, degrees: Iterable[int], rtol: float = RANK_RTOL) -> list[int]:
    degrees = list(degrees)
    if not degrees:
        raise InvalidInputError("degree range must be nonempty")
    return [graded_piece(spec, n, rtol).dim for n in degrees]


@dataclass(frozen=True)
class HilbertFit:
    """Hilbert polynomial (ascending exact coefficients) and the derived dimension."""

    coefficients: tuple
    dimension: int
    stabilization_degree: int

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1 if self.coefficients else -1

    def __call__(self, n) -> Fraction:
        return sum((c * Fraction(n) ** k for k, c in enumerate(self.coefficients)), Fraction(0))


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _binomial_poly(x0: int, t: int) -> list:
    # C(x - x0, t) in the power basis of x
    out = [Fraction(1)]
    for s in range(t):
        out = _poly_mul(out, [Fraction(-(x0 + s), s + 1), Fraction(1, s + 1)])
    return out


def hilbert_polynomial_fit(dims: Sequence[int], start: int = 0, window: int = 3) -> HilbertFit:
    """Fit the Hilbert polynomial to exact dimensions at degrees start, start+1, ...

    Uses integer finite differences: the first order r whose differences are
    constant over the last ``window`` (>= 3) entries fixes the degree, and the
    polynomial is rebuilt in the binomial basis from the stable tail.
    """
    dims = [int(x) for x in dims]
    if window < 3:
        raise InvalidInputError("stabilization window must cover at least 3 degrees")
    table = [dims]
    r = 0
    while True:
        cur = table[-1]
        if len(cur) < window:
            last = start + len(dims) - 1
            raise InsufficientDegreeRangeError(
                f"finite differences did not stabilize over degrees {start}..{last} "
                f"(tried orders 0..{r - 1} with a {window}-degree window); "
                f"extend the range to at least degree {last + 1}"
            )
        if len(set(cur[-window:])) == 1:
            break
        table.append([b - a for a, b in zip(cur, cur[1:])])
        r += 1
    cur = table[r]
    k0 = len(cur) - window
    while k0 > 0 and cur[k0 - 1] == cur[-1]:
        k0 -= 1
    x0 = start + k0
    coeffs = [Fraction(0)] * (r + 1)
    for t in range(r + 1):
        term = _binomial_poly(x0, t)
        for k, c in enumerate(term):
            coeffs[k] += table[t][k0] * c
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    fit = HilbertFit(tuple(coeffs), 0, start)
    stab = start + len(dims) - 1
    for n in range(start + len(dims) - 1, start - 1, -1):
        if fit(n) != dims[n - start]:
            break
        stab = n
    dimension = len(coeffs) if coeffs else 0
    return HilbertFit(tuple(coeffs), dimension, stab)


# -- sums and intersections of ideals ---------------------------------------

def _check_same_d(ideals: Sequence[IdealSpec]) -> int:
    if not ideals:
        raise InvalidInputError("need at least one ideal")
    ds = {i.d for i in ideals}
    if len(ds) != 1:
        raise InvalidInputError("ideals live in different ambient dimensions")
    return ds.pop()


def sum_ideal_graded(ideals: Sequence[IdealSpec], n: int, rtol: float = RANK_RTOL) -> GradedSubspace:
    """(I_1 + ... + I_k)_n as the orthonormalized span of the pieces."""
    _check_same_d(ideals)
    stacked = np.hstack([ideal_piece(i, n, rtol).basis for i in ideals])
    return GradedSubspace(n, _linalg.orth(stacked, rtol))


def intersect_ideal_graded(ideals: Sequence[IdealSpec], n: int, rtol: float = RANK_RTOL,
                           tol: float = _linalg.INTERSECTION_TOL) -> GradedSubspace:
    """(I_1 cap ... cap I_k)_n by successive numerical subspace intersection."""
    _check_same_d(ideals)
    acc = ideal_piece(ideals[0], n, rtol).basis
    for ideal in ideals[1:]:
        acc = _linalg.intersect(acc, ideal_piece(ideal, n, rtol).basis, tol)
    return GradedSubspace(n, acc)


def binomial_dims(d: int, degrees: Iterable[int]) -> list[int]:
    return [math.comb(n + d - 1, d - 1) for n in degrees]
