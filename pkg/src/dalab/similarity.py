"""The graded similarity ``A~`` with ``A~ k_lambda = k_{A lambda}`` between unions of subspaces.

On polynomials ``A~ f = f o A^*``, so on each component power it is the
symmetric power of ``A B_i``.  Multiplication operators on F_V are the
compressions ``P_V S_g P_V``.

Two intertwining relations are exposed.  The adjoint one,
``A~^* M_h = M_{h o A} A~^*`` (h a linear function on the target side), holds
exactly for every admissible A.  The forward one, ``A~ M_g = M_{g o A^*} A~``,
is exact only when ``A^*`` maps the target variety into the source variety
(for instance A unitary); in general its residual does not vanish, and it is
reported as a measurement rather than asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from . import _linalg
from ._linalg import RANK_RTOL
from .errors import (
    AngleDegeneracyError,
    ImageEscapesTargetError,
    InvalidInputError,
    NotInvertibleError,
)
from .fock import (
    HomogeneousPolynomial,
    OperatorBlock,
    compose_linear,
    enumerate_degree,
    full_commutator_matrix,
    kernel_vector,
    linear_multiplier,
    symmetric_power,
)
from .geometry import _require_disjoint_spans, max_pairwise_cos
from .variety import SubspaceComponent, VarietySpec, component_frame

IMAGE_TOL = 1e-9
INVERTIBLE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class LinearMapSpec:
    """A linear map ``A: C^d -> C^d'`` with matched source/target components.

    ``A`` restricted to the span of every source component must be isometric
    and carry it onto the corresponding target component.
    """

    matrix: np.ndarray
    source: VarietySpec
    target: VarietySpec

    def __post_init__(self):
        a = _linalg.readonly(np.array(self.matrix, dtype=complex))
        object.__setattr__(self, "matrix", a)
        if self.source.components is None or self.target.components is None:
            raise InvalidInputError("similarity maps need component-list varieties on both sides")
        if len(self.source.components) != len(self.target.components):
            raise InvalidInputError("source and target must have the same number of components")
        if a.shape != (self.target.d, self.source.d):
            raise InvalidInputError(f"matrix shape {a.shape} does not map C^{self.source.d} to C^{self.target.d}")
        for k, (s, t) in enumerate(zip(self.source.components, self.target.components)):
            img = a @ s.basis
            if np.linalg.norm(img.conj().T @ img - np.eye(s.m), 2) > 1e-10:
                raise InvalidInputError(f"A is not isometric on the span of source component {k}")
            if _linalg.subspace_distance(img, t.basis) > 1e-8:
                raise InvalidInputError(f"A does not map source component {k} onto target component {k}")

    @classmethod
    def from_components(cls, matrix, source_components: Sequence) -> "LinearMapSpec":
        """Target components are the images ``A B_i`` of the source bases."""
        a = np.asarray(matrix, dtype=complex)
        src = VarietySpec.from_components(source_components)
        tgt = VarietySpec(components=tuple(SubspaceComponent.from_span(a @ c.basis) for c in src.components))
        return cls(a, src, tgt)

    @property
    def image_components(self) -> tuple:
        # A B_i, the target components in the parameterization the map induces
        return tuple(self.matrix @ c.basis for c in self.source.components)


def _frames(spec: LinearMapSpec, n: int, rtol: float):
    src = component_frame(spec.source.components, n, rtol)
    tgt = component_frame(spec.target.components, n, rtol)
    return src, tgt


def graded_similarity_block(spec: LinearMapSpec, n: int, rtol: float = RANK_RTOL,
                            tol: float = IMAGE_TOL) -> OperatorBlock:
    """Matrix of ``A~_n: V^n -> W^n`` in the orthonormal graded bases."""
    (_, qv, coef), (_, qw, _) = _frames(spec, n, rtol)
    images = np.hstack([symmetric_power(b, n) for b in spec.image_components])
    img = images @ coef
    block = qw.conj().T @ img
    resid = float(np.linalg.norm(img - qw @ block)) if img.size else 0.0
    if resid > tol:
        raise ImageEscapesTargetError(f"image escapes target graded piece at degree {n} (residual {resid:.3e})")
    return OperatorBlock(block, n, n)


def kernel_action_check(spec: LinearMapSpec, lam, n: int, rtol: float = RANK_RTOL) -> float:
    """``|| A~_n [lambda^n] - [(A lambda)^n] ||`` in graded coordinates."""
    lam = np.asarray(lam, dtype=complex)
    if lam.shape != (spec.source.d,):
        raise InvalidInputError("point has the wrong dimension")
    scale = max(float(np.linalg.norm(lam)), 1.0)
    on = [np.linalg.norm(lam - c.basis @ (c.basis.conj().T @ lam)) <= 1e-10 * scale for c in spec.source.components]
    if not any(on):
        raise InvalidInputError("point does not lie on any source component")
    (_, qv, _), (_, qw, _) = _frames(spec, n, rtol)
    block = graded_similarity_block(spec, n, rtol).matrix
    kv = kernel_vector(lam, n)
    kw = kernel_vector(spec.matrix @ lam, n)
    return float(np.linalg.norm(block @ (qv.conj().T @ kv) - qw.conj().T @ kw))


def _compressed_multiplier(components, coefficients, n: int, rtol: float) -> np.ndarray:
    q0 = component_frame(components, n, rtol)[1]
    q1 = component_frame(components, n + 1, rtol)[1]
    return q1.conj().T @ (linear_multiplier(coefficients, n) @ q0)


def _linear_coefficients(g, d: int) -> list:
    if isinstance(g, HomogeneousPolynomial):
        if g.degree != 1 or g.d != d:
            raise InvalidInputError(f"expected a linear polynomial in {d} variables")
        coeffs = g.coefficients
        return [complex(coeffs.get(tuple(int(k == j) for k in range(d)), 0)) for j in range(d)]
    g = list(g)
    if len(g) != d:
        raise InvalidInputError(f"expected {d} coefficients")
    return [complex(x) for x in g]


def pullback_linear(g, matrix) -> list:
    """Coefficients of ``g o matrix`` for a linear ``g`` (via :func:`compose_linear`)."""
    matrix = np.asarray(matrix, dtype=complex)
    poly = HomogeneousPolynomial.linear_form(_linear_coefficients(g, matrix.shape[0]))
    return _linear_coefficients(compose_linear(poly, matrix), matrix.shape[1])


def intertwiner_residual(spec: LinearMapSpec, g, n: int, rtol: float = RANK_RTOL) -> float:
    """``|| A~_{n+1} M_g - M_{g o A^*} A~_n ||`` with g linear on the source side."""
    gc = _linear_coefficients(g, spec.source.d)
    h = pullback_linear(gc, spec.matrix.conj().T)
    mg = _compressed_multiplier(spec.source.components, gc, n, rtol)
    mh = _compressed_multiplier(spec.target.components, h, n, rtol)
    a0 = graded_similarity_block(spec, n, rtol).matrix
    a1 = graded_similarity_block(spec, n + 1, rtol).matrix
    return float(np.linalg.norm(a1 @ mg - mh @ a0))


def adjoint_intertwiner_residual(spec: LinearMapSpec, h, n: int, rtol: float = RANK_RTOL) -> float:
    """``|| A~_{n+1}^* M_h - M_{h o A} A~_n^* ||`` with h linear on the target side."""
    hc = _linear_coefficients(h, spec.target.d)
    g = pullback_linear(hc, spec.matrix)
    mh = _compressed_multiplier(spec.target.components, hc, n, rtol)
    mg = _compressed_multiplier(spec.source.components, g, n, rtol)
    a0 = graded_similarity_block(spec, n, rtol).matrix
    a1 = graded_similarity_block(spec, n + 1, rtol).matrix
    return float(np.linalg.norm(a1.conj().T @ mh - mg @ a0.conj().T))


def _commutator(components, fc, gc, n: int, rtol: float) -> np.ndarray:
    # block of [M_f^*, M_g] on the degree-n piece
    mf, mg = _compressed_multiplier(components, fc, n, rtol), _compressed_multiplier(components, gc, n, rtol)
    out = mf.conj().T @ mg
    if n > 0:
        pf = _compressed_multiplier(components, fc, n - 1, rtol)
        pg = _compressed_multiplier(components, gc, n - 1, rtol)
        out = out - pg @ pf.conj().T
    return out


def conjugation_transport_check(spec: LinearMapSpec, f, g, n: int, rtol: float = RANK_RTOL,
                                floor: float = INVERTIBLE_FLOOR) -> float:
    """Residual of ``[M*_{f o A^*}, M_{g o A^*}] = A~ [M*_{f o A^* A}, M_g] A~^{-1}`` at degree n.

    f and g are linear on the source side.  Exact when ``A^*`` maps the target
    into the source variety; otherwise the residual measures the defect.
    """
    a = spec.matrix
    fc = _linear_coefficients(f, spec.source.d)
    gc = _linear_coefficients(g, spec.source.d)
    f_w = pullback_linear(fc, a.conj().T)
    g_w = pullback_linear(gc, a.conj().T)
    f_v = pullback_linear(f_w, a)
    block = graded_similarity_block(spec, n, rtol).matrix
    if block.shape[0] != block.shape[1] or _linalg.sigma_min(block) < floor:
        raise NotInvertibleError(f"A~ is not invertible at degree {n}")
    lhs = _commutator(spec.target.components, f_w, g_w, n, rtol)
    rhs = block @ _commutator(spec.source.components, f_v, gc, n, rtol) @ np.linalg.inv(block)
    return float(np.linalg.norm(lhs - rhs))


def polar_factors(block: np.ndarray):
    """``(U, |A|)`` with ``A = U |A|``; U a partial isometry."""
    u, s, vh = np.linalg.svd(block, full_matrices=False)
    return u @ vh, vh.conj().T @ np.diag(s) @ vh


def transport_residual(spec: LinearMapSpec, h, k, n: int, rtol: float = RANK_RTOL) -> float:
    """``|| [M_h^*, M_k]_W - U [M*_{h o A}, M_{k o A}]_V U^* ||`` at degree n.

    U is the unitary factor of ``A~_n``.  h and k are linear on the target
    side.  Vanishes for unitary A and decays with the degree otherwise.
    """
    hc = _linear_coefficients(h, spec.target.d)
    kc = _linear_coefficients(k, spec.target.d)
    u, _ = polar_factors(graded_similarity_block(spec, n, rtol).matrix)
    lhs = _commutator(spec.target.components, hc, kc, n, rtol)
    inner = _commutator(spec.source.components, pullback_linear(hc, spec.matrix),
                        pullback_linear(kc, spec.matrix), n, rtol)
    return float(np.linalg.norm(lhs - u @ inner @ u.conj().T, 2))


@dataclass(frozen=True)
class PolarReport:
    degrees: tuple
    singular_values: tuple
    deviations: tuple
    partial_sums: tuple
    c: float
    k: int
    d: int
    envelope_m: float
    tail_bound: float
    first_invertible_degree: int | None
    rank_deficient_degrees: tuple
    estimate_ok: tuple
    estimate_first_degree: int | None

    def rows(self):
        out = []
        for n, s, dev, ps, ok in zip(self.degrees, self.singular_values, self.deviations,
                                     self.partial_sums, self.estimate_ok):
            out.append({
                "degree": n,
                "dim": len(s),
                "sigma_min": float(min(s)) if len(s) else 0.0,
                "sigma_max": float(max(s)) if len(s) else 0.0,
                "deviation_sum": float(sum(dev)),
                "partial_sum": ps,
                "estimates_ok": "" if ok is None else ok,
            })
        return out

    def summary(self) -> dict:
        return {
            "c": self.c,
            "components": self.k,
            "envelope_M": self.envelope_m,
            "tail_bound": self.tail_bound,
            "first_invertible_degree": self.first_invertible_degree,
            "rank_deficient_degrees": list(self.rank_deficient_degrees),
            "estimates_first_degree": self.estimate_first_degree,
            "estimates_all_ok": all(ok for ok in self.estimate_ok if ok is not None),
            "trace_class_witness": self.partial_sums[-1] + self.tail_bound if self.degrees else 0.0,
        }


def _gram_ratio_range(pieces: np.ndarray, sizes: Sequence[int]):
    # extremes of sum ||v_i||^2 / ||v||^2 over v in the sum of the pieces
    g = pieces.conj().T @ pieces
    ev = np.linalg.eigvalsh(g)
    if ev[0] <= 0:
        return 0.0, math.inf
    return 1.0 / ev[-1], 1.0 / ev[0]


def polar_analysis(spec: LinearMapSpec, n_max: int, rtol: float = RANK_RTOL, zero_tol: float = 1e-12,
                   atol: float = 1e-9) -> PolarReport:
    """Singular values of every ``A~_n``, the envelope ``[1 - M c^n, 1 + M c^n]`` and a tail bound.

    ``c`` is the largest pairwise Friedrichs cosine over both the source and
    the target component systems.  ``M`` is the smallest constant covering all
    computed degrees.  The tail beyond ``n_max`` is ``M sum_{n > n_max} n^{d-1} c^n``,
    summed in closed form with the Lerch transcendent.
    """
    src, tgt = spec.source.components, spec.target.components
    _require_disjoint_spans(tgt)
    k = len(src)
    c = max(max_pairwise_cos(src), max_pairwise_cos(tgt)) if k > 1 else 0.0
    if c >= 1.0 - 1e-12:
        raise AngleDegeneracyError(f"maximal pairwise cosine {c} is not below 1")
    degrees, svals, devs, partial = [], [], [], []
    ok_list, deficient = [], []
    total = 0.0
    envelope = 0.0
    for n in range(n_max + 1):
        block = graded_similarity_block(spec, n, rtol).matrix
        s = np.linalg.svd(block, compute_uv=False) if block.size else np.zeros(0)
        dim_v = block.shape[1]
        s = np.concatenate([s, np.zeros(max(0, dim_v - s.size))])
        dev = np.abs(s - 1.0)
        dev[dev < zero_tol] = 0.0
        if (s < INVERTIBLE_FLOOR).any() or block.shape[0] != block.shape[1]:
            deficient.append(n)
        cn = c ** n
        if dev.size and dev.max() > 0:
            envelope = max(envelope, float(dev.max() / cn) if cn > 0 else math.inf)
        total += float(dev.sum())
        degrees.append(n)
        svals.append(tuple(s.tolist()))
        devs.append(tuple(dev.tolist()))
        partial.append(total)
        kc = k * cn
        if k > 1 and 1 - kc > 0:
            pv = component_frame(src, n, rtol)[0]
            pw = component_frame(tgt, n, rtol)[0]
            lo_v, hi_v = _gram_ratio_range(pv, None)
            lo_w, hi_w = _gram_ratio_range(pw, None)
            est_v = (1 - kc) - atol <= lo_v and hi_v <= (1 + kc) + atol
            est_w = (1 - kc) - atol <= lo_w and hi_w <= (1 + kc) + atol
            smax, smin = (float(s.max()), float(s.min())) if s.size else (0.0, 0.0)
            est2 = smax ** 2 <= (1 + kc) / (1 - kc) + atol
            est3 = smin ** 2 >= (1 - kc) / (1 + kc) - atol
            ok_list.append(bool(est_v and est_w and est2 and est3))
        elif k == 1:
            ok_list.append(True)
        else:
            ok_list.append(None)
    first_ok = None
    for n, ok in zip(degrees, ok_list):
        if ok is None or not ok:
            first_ok = None
        elif first_ok is None:
            first_ok = n
    if math.isinf(envelope):
        tail = math.inf
    elif c == 0.0 or envelope == 0.0:
        tail = 0.0
    else:
        d = spec.source.d
        tail = float(envelope * c ** (n_max + 1) * mpmath.lerchphi(c, 1 - d, n_max + 1))
    first_inv = next((n for n in degrees if n not in deficient and all(m not in deficient for m in degrees if m > n)), None)
    return PolarReport(tuple(degrees), tuple(svals), tuple(devs), tuple(partial), float(c), k,
                       spec.source.d, float(envelope), tail, first_inv, tuple(deficient),
                       tuple(ok_list), first_ok)


# -- orthogonal model -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrthogonalModel:
    """``C^D = K_1 + ... + K_k`` with ``A`` taking ``K_j`` isometrically onto ``L_j``."""

    D: int
    blocks: tuple
    matrix: np.ndarray
    spec: LinearMapSpec

    @property
    def pulled_back(self) -> VarietySpec:
        return self.spec.source


def orthogonal_model(components: Sequence[SubspaceComponent]) -> OrthogonalModel:
    comps = [c if isinstance(c, SubspaceComponent) else SubspaceComponent(c) for c in components]
    _require_disjoint_spans(comps)
    sizes = [c.m for c in comps]
    D = sum(sizes)
    a = np.hstack([c.basis for c in comps])
    blocks, start = [], 0
    src = []
    for m in sizes:
        blocks.append(tuple(range(start, start + m)))
        e = np.zeros((D, m), dtype=complex)
        e[start:start + m, :] = np.eye(m)
        src.append(SubspaceComponent(e))
        start += m
    spec = LinearMapSpec(a, VarietySpec(components=tuple(src)), VarietySpec(components=tuple(comps)))
    return OrthogonalModel(D, tuple(blocks), _linalg.readonly(a), spec)


def decoupled_commutator_block(model: OrthogonalModel, a: int, b: int, n: int,
                               rtol: float = RANK_RTOL) -> np.ndarray:
    """Direct sum over blocks of the full-space ``[S_a^*, S_b]`` of each K_j, in F_n(W) coordinates.

    Valid for n >= 2, where the pulled-back module splits as a direct sum.
    """
    D = model.D
    q = component_frame(model.pulled_back.components, n, rtol)[1]
    out = np.zeros((q.shape[1], q.shape[1]), dtype=complex)
    pos = {alpha: k for k, alpha in enumerate(enumerate_degree(D, n))}
    for block in model.blocks:
        if a not in block or b not in block:
            continue
        m = len(block)
        rows = []
        for beta in enumerate_degree(m, n):
            alpha = [0] * D
            for loc, glob in enumerate(block):
                alpha[glob] = beta[loc]
            rows.append(pos[tuple(alpha)])
        g = q[rows, :]
        local = full_commutator_matrix(m, block.index(a), block.index(b), n).toarray()
        out += g.conj().T @ local @ g
    return out


def pullback_commutator_block(model: OrthogonalModel, a: int, b: int, n: int,
                              rtol: float = RANK_RTOL) -> np.ndarray:
    """``[T_a^*, T_b]`` on F_n of the pulled-back variety, in the same coordinates."""
    comps = model.pulled_back.components
    e = np.zeros(model.D)
    e[a] = 1.0
    f = np.zeros(model.D)
    f[b] = 1.0
    return _commutator(comps, e, f, n, rtol)
