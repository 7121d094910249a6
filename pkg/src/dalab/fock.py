"""Weighted monomial model of the Drury-Arveson space H^2_d.

Monomials ``z^alpha`` are orthogonal with ``||z^alpha||^2 = alpha! / |alpha|!``.
All matrices produced here are expressed in the orthonormal basis
``eps_alpha = z^alpha / ||z^alpha||``, so adjoints are conjugate transposes.
Within a degree the basis is ordered graded-lexicographically: exponent tuples
in decreasing lexicographic order, e.g. ``(2,0), (1,1), (0,2)``.

Variable indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from ._linalg import readonly
from .errors import InvalidInputError

MultiIndex = Tuple[int, ...]


# -- index sets -------------------------------------------------------------

def dim_h(d: int, n: int) -> int:
    """Dimension of the degree-n homogeneous polynomials in d variables."""
    if n < 0:
        return 0
    return math.comb(n + d - 1, d - 1)


@lru_cache(maxsize=None)
def enumerate_degree(d: int, n: int) -> tuple[MultiIndex, ...]:
    """All exponent tuples of length d summing to n, in graded-lex order."""
    if d < 1 or n < 0:
        raise InvalidInputError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    if d == 1:
        return ((n,),)
    return tuple((a,) + rest for a in range(n, -1, -1) for rest in enumerate_degree(d - 1, n - a))


@lru_cache(maxsize=None)
def index_of(d: int, n: int) -> dict:
    return {alpha: k for k, alpha in enumerate(enumerate_degree(d, n))}


@lru_cache(maxsize=None)
def exponent_array(d: int, n: int) -> np.ndarray:
    return readonly(np.array(enumerate_degree(d, n), dtype=np.int64).reshape(-1, d))


def monomial_norm_squared(alpha: Sequence[int]) -> Fraction:
    """Exact ``alpha_1! ... alpha_d! / |alpha|!``."""
    num = 1
    for a in alpha:
        if a < 0:
            raise InvalidInputError(f"negative exponent in {tuple(alpha)}")
        num *= math.factorial(a)
    return Fraction(num, math.factorial(sum(alpha)))


@lru_cache(maxsize=None)
def _sqrt_multinomial(d: int, n: int) -> np.ndarray:
    # sqrt(n! / alpha!) for every alpha of degree n
    fn = math.factorial(n)
    vals = [math.sqrt(fn // math.prod(math.factorial(a) for a in alpha)) for alpha in enumerate_degree(d, n)]
    return readonly(np.array(vals, dtype=float))


# -- polynomials ------------------------------------------------------------

def _conj(x):
    return x.conjugate()


@dataclass(frozen=True)
class HomogeneousPolynomial:
    """A homogeneous polynomial with raw-monomial coefficients.

    ``terms`` is kept sorted in basis order with zero coefficients dropped, so
    equal polynomials compare and hash equal.  Coefficients may be ints,
    Fractions or complex numbers; exact inputs stay exact.
    """

    d: int
    degree: int
    terms: tuple = field(default=())

    def __post_init__(self):
        if self.d < 1 or self.degree < 0:
            raise InvalidInputError(f"need d >= 1 and degree >= 0, got d={self.d}, degree={self.degree}")
        for alpha, _ in self.terms:
            if len(alpha) != self.d or sum(alpha) != self.degree or min(alpha) < 0:
                raise InvalidInputError(f"monomial {alpha} is not of degree {self.degree} in {self.d} variables")

    @classmethod
    def from_dict(cls, d: int, coefficients: Mapping[Sequence[int], object], degree: int | None = None):
        items = {}
        for alpha, c in coefficients.items():
            alpha = tuple(int(a) for a in alpha)
            if c != 0:
                items[alpha] = items.get(alpha, 0) + c
        items = {a: c for a, c in items.items() if c != 0}
        if degree is None:
            if not items:
                raise InvalidInputError("degree must be given for the zero polynomial")
            degree = sum(next(iter(items)))
        if items:
            pos = index_of(d, degree) if all(len(a) == d and sum(a) == degree for a in items) else None
            keys = sorted(items, key=pos.__getitem__) if pos is not None else list(items)
        else:
            keys = []
        return cls(d, degree, tuple((a, items[a]) for a in keys))

    @classmethod
    def monomial(cls, alpha: Sequence[int], coefficient=1):
        alpha = tuple(alpha)
        return cls.from_dict(len(alpha), {alpha: coefficient}, degree=sum(alpha))

    @classmethod
    def linear_form(cls, coefficients: Sequence):
        d = len(coefficients)
        return cls.from_dict(d, {tuple(int(k == j) for k in range(d)): c for j, c in enumerate(coefficients)}, degree=1)

    @classmethod
    def from_coords(cls, d: int, n: int, coords: np.ndarray, atol: float = 0.0):
        """Build from a coordinate vector in the orthonormal basis."""
        coords = np.asarray(coords)
        if coords.shape != (dim_h(d, n),):
            raise InvalidInputError(f"expected {dim_h(d, n)} coordinates, got shape {coords.shape}")
        scale = _sqrt_multinomial(d, n)
        raw = coords * scale
        return cls.from_dict(
            d,
            {alpha: complex(c) for alpha, c in zip(enumerate_degree(d, n), raw) if abs(c) > atol},
            degree=n,
        )

    @property
    def coefficients(self) -> dict:
        return dict(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def coords(self) -> np.ndarray:
        """Coordinate vector in the orthonormal basis of H_n."""
        pos = index_of(self.d, self.degree)
        out = np.zeros(dim_h(self.d, self.degree), dtype=complex)
        scale = _sqrt_multinomial(self.d, self.degree)
        for alpha, c in self.terms:
            k = pos[alpha]
            out[k] = complex(c) / scale[k]
        return out

    def __add__(self, other):
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        if other.d != self.d:
            raise InvalidInputError("ambient dimensions differ")
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if other.degree != self.degree:
            raise InvalidInputError("sum of different degrees is not homogeneous")
        acc = dict(self.terms)
        for a, c in other.terms:
            acc[a] = acc.get(a, 0) + c
        return HomogeneousPolynomial.from_dict(self.d, acc, degree=self.degree)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return HomogeneousPolynomial.from_dict(self.d, {a: c * v for a, v in self.terms}, degree=self.degree)

    def __mul__(self, other):
        if not isinstance(other, HomogeneousPolynomial):
            return self.scale(other)
        if other.d != self.d:
            raise InvalidInputError("ambient dimensions differ")
        acc: dict = {}
        for a, ca in self.terms:
            for b, cb in other.terms:
                key = tuple(x + y for x, y in zip(a, b))
                acc[key] = acc.get(key, 0) + ca * cb
        return HomogeneousPolynomial.from_dict(self.d, acc, degree=self.degree + other.degree)

    __rmul__ = scale


def inner_product(p: HomogeneousPolynomial, q: HomogeneousPolynomial):
    """Drury-Arveson inner product, linear in ``p`` and conjugate-linear in ``q``."""
    if p.d != q.d:
        raise InvalidInputError(f"ambient dimensions differ: {p.d} != {q.d}")
    if p.degree != q.degree:
        return 0
    qc = dict(q.terms)
    total = 0
    for alpha, c in p.terms:
        if alpha in qc:
            total += c * _conj(qc[alpha]) * monomial_norm_squared(alpha)
    return total


def evaluate(p: HomogeneousPolynomial, z: Sequence):
    if len(z) != p.d:
        raise InvalidInputError(f"point has {len(z)} coordinates, polynomial has {p.d} variables")
    total = 0
    for alpha, c in p.terms:
        term = c
        for zi, a in zip(z, alpha):
            if a:
                term = term * zi**a
        total += term
    return total


def compose_linear(p: HomogeneousPolynomial, b) -> HomogeneousPolynomial:
    """The polynomial ``z -> p(B z)`` for a ``d' x d`` matrix ``B`` (p has d' variables)."""
    b = np.asarray(b)
    if b.ndim != 2 or b.shape[0] != p.d:
        raise InvalidInputError(f"matrix of shape {b.shape} cannot be composed with a polynomial in {p.d} variables")
    d = b.shape[1]
    rows = [
        HomogeneousPolynomial.linear_form([b[k, j].item() if hasattr(b[k, j], "item") else b[k, j] for j in range(d)])
        for k in range(p.d)
    ]
    one = HomogeneousPolynomial.from_dict(d, {(0,) * d: 1}, degree=0)
    powers = [[one] for _ in range(p.d)]
    result = HomogeneousPolynomial(d, p.degree)
    for alpha, c in p.terms:
        term = one
        for k, a in enumerate(alpha):
            while len(powers[k]) <= a:
                powers[k].append(powers[k][-1] * rows[k])
            term = term * powers[k][a]
        result = result + term.scale(c)
    return result


def kernel_polynomial(lam: Sequence, n: int) -> HomogeneousPolynomial:
    """Degree-n piece of ``k_lambda``, the polynomial ``<z, lambda>^n``."""
    lam = np.asarray(lam, dtype=complex)
    d = lam.size
    lc = lam.conj()
    fn = math.factorial(n)
    coeffs = {}
    for alpha in enumerate_degree(d, n):
        m = fn // math.prod(math.factorial(a) for a in alpha)
        coeffs[alpha] = m * complex(np.prod(lc ** np.array(alpha)))
    return HomogeneousPolynomial.from_dict(d, coeffs, degree=n)


def kernel_vector(lam: Sequence, n: int) -> np.ndarray:
    """Orthonormal coordinates of ``<z, lambda>^n``: ``sqrt(n!/alpha!) conj(lambda)^alpha``."""
    lam = np.asarray(lam, dtype=complex)
    d = lam.size
    ex = exponent_array(d, n)
    return _sqrt_multinomial(d, n) * np.prod(lam.conj()[None, :] ** ex, axis=1)


# -- operator blocks --------------------------------------------------------

@dataclass(frozen=True)
class OperatorBlock:
    """Matrix of a graded operator between two degree pieces.

    Columns index the source orthonormal basis, rows the target one.
    """

    matrix: np.ndarray
    source_degree: int
    target_degree: int

    @property
    def shape(self):
        return self.matrix.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def to_dict(self) -> dict:
        m = np.asarray(self.matrix, dtype=complex)
        return {
            "source_degree": self.source_degree,
            "target_degree": self.target_degree,
            "rows": m.shape[0],
            "cols": m.shape[1],
            "order": "row-major",
            "data": [[float(z.real), float(z.imag)] for z in m.ravel(order="C")],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "OperatorBlock":
        if payload.get("order", "row-major") != "row-major":
            raise InvalidInputError("only row-major matrix layout is supported")
        data = np.array([complex(re, im) for re, im in payload["data"]], dtype=complex)
        m = data.reshape(payload["rows"], payload["cols"])
        return cls(m, payload["source_degree"], payload["target_degree"])


@lru_cache(maxsize=512)
def shift_matrix(d: int, i: int, n: int) -> sp.csr_matrix:
    """Sparse block of ``S_i`` from H_n to H_{n+1}."""
    if not 0 <= i < d:
        raise InvalidInputError(f"variable index {i} out of range for d={d}")
    ex = exponent_array(d, n)
    tgt = index_of(d, n + 1)
    rows = np.empty(len(ex), dtype=np.int64)
    for c, alpha in enumerate(enumerate_degree(d, n)):
        beta = list(alpha)
        beta[i] += 1
        rows[c] = tgt[tuple(beta)]
    vals = np.sqrt((ex[:, i] + 1) / (n + 1)).astype(complex)
    m = sp.csr_matrix((vals, (rows, np.arange(len(ex)))), shape=(dim_h(d, n + 1), len(ex)))
    m.data.setflags(write=False)
    return m


def shift_block(d: int, i: int, n: int) -> OperatorBlock:
    return OperatorBlock(shift_matrix(d, i, n).toarray(), n, n + 1)


def linear_multiplier(coefficients: Sequence, n: int) -> sp.csr_matrix:
    """Sparse block of multiplication by ``sum_j c_j z_j`` from H_n to H_{n+1}."""
    d = len(coefficients)
    out = sp.csr_matrix((dim_h(d, n + 1), dim_h(d, n)), dtype=complex)
    for j, c in enumerate(coefficients):
        if c != 0:
            out = out + complex(c) * shift_matrix(d, j, n)
    return out


def full_commutator_matrix(d: int, i: int, j: int, n: int) -> sp.csr_matrix:
    """Sparse block of ``[S_i^*, S_j]`` on H_n."""
    si, sj = shift_matrix(d, i, n), shift_matrix(d, j, n)
    out = si.conj().T @ sj
    if n > 0:
        out = out - shift_matrix(d, j, n - 1) @ shift_matrix(d, i, n - 1).conj().T
    return sp.csr_matrix(out)


def full_commutator_block(d: int, i: int, j: int, n: int) -> OperatorBlock:
    return OperatorBlock(full_commutator_matrix(d, i, j, n).toarray(), n, n)


# -- symmetric powers -------------------------------------------------------

@lru_cache(maxsize=None)
def _first_nonzero_groups(m: int, n: int):
    prev = index_of(m, n - 1)
    groups = []
    for ell in range(m):
        cols, parents = [], []
        for c, alpha in enumerate(enumerate_degree(m, n)):
            nz = next(k for k, a in enumerate(alpha) if a)
            if nz == ell:
                cols.append(c)
                parent = list(alpha)
                parent[ell] -= 1
                parents.append(prev[tuple(parent)])
        groups.append((np.array(cols, dtype=np.int64), np.array(parents, dtype=np.int64)))
    return tuple(groups)


@lru_cache(maxsize=256)
def _raw_power(shape: tuple, data: bytes, n: int) -> np.ndarray:
    # columns: orthonormal coordinates of prod_l ell_l^{alpha_l}, ell_l = sum_j conj(B_jl) z_j
    d, m = shape
    if n == 0:
        return readonly(np.ones((1, 1), dtype=complex))
    b = np.frombuffer(data, dtype=complex).reshape(shape)
    prev = _raw_power(shape, data, n - 1)
    out = np.zeros((dim_h(d, n), dim_h(m, n)), dtype=complex)
    for ell, (cols, parents) in enumerate(_first_nonzero_groups(m, n)):
        if cols.size:
            mult = linear_multiplier(b[:, ell].conj(), n - 1)
            out[:, cols] = mult @ prev[:, parents]
    return readonly(out)


def symmetric_power(b, n: int) -> np.ndarray:
    """Matrix of ``f -> f o B^H`` from H_n(m) to H_n(d) for a ``d x m`` matrix ``B``.

    This is ``compose_linear`` with ``B^H`` written in orthonormal coordinates;
    it sends ``<w, mu>^n`` to ``<z, B mu>^n`` and is an isometry when ``B`` is.
    """
    b = np.ascontiguousarray(np.asarray(b, dtype=complex))
    if b.ndim != 2:
        raise InvalidInputError("expected a 2-D matrix")
    raw = _raw_power(b.shape, b.tobytes(), n)
    return raw * _sqrt_multinomial(b.shape[1], n)[None, :]
