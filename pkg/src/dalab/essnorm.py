"""Compressed shifts on F_n, their commutators, and Schatten-class diagnostics.

The canonical block is that of ``[T_i^*, T_j]`` on F_n, where ``T_i`` is the
compression of ``S_i``.  The commutator ``[T_i, T_j^*]`` is the negative adjoint
of ``[T_j^*, T_i]``, so singular values, and every Schatten quantity below, do
not depend on which ordering convention is used.

Decay fits and critical-exponent estimates are heuristics over a finite
degree range and are labelled as such in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._linalg import RANK_RTOL, spectral_norm
from .errors import InvalidInputError, UndefinedFitError
from .fock import OperatorBlock, dim_h, full_commutator_matrix, shift_matrix
from .variety import Spec, VarietySpec, graded_piece

CONVERGENCE_INCREMENT = 1e-6
DIVERGENCE_MARGIN = 0.1


def _check_index(spec: Spec, i: int):
    if not 0 <= i < spec.d:
        raise InvalidInputError(f"variable index {i} out of range for d={spec.d}")


def compressed_shift_block(spec: Spec, i: int, n: int, rtol: float = RANK_RTOL) -> OperatorBlock:
    """Block of ``T_i = P S_i P`` from F_n to F_{n+1}."""
    _check_index(spec, i)
    if n < 0:
        raise InvalidInputError("degree out of range")
    f0 = graded_piece(spec, n, rtol).basis
    f1 = graded_piece(spec, n + 1, rtol).basis
    return OperatorBlock(f1.conj().T @ (shift_matrix(spec.d, i, n) @ f0), n, n + 1)


def commutator_block(spec: Spec, i: int, j: int, n: int, rtol: float = RANK_RTOL) -> OperatorBlock:
    """Block of ``[T_i^*, T_j]`` on F_n."""
    ti, tj = compressed_shift_block(spec, i, n, rtol).matrix, compressed_shift_block(spec, j, n, rtol).matrix
    c = ti.conj().T @ tj
    if n > 0:
        pi = compressed_shift_block(spec, i, n - 1, rtol).matrix
        pj = compressed_shift_block(spec, j, n - 1, rtol).matrix
        c = c - pj @ pi.conj().T
    return OperatorBlock(c, n, n)


def projection_commutator_block(spec: Spec, i: int, n: int, rtol: float = RANK_RTOL) -> OperatorBlock:
    """Block of ``[P, S_i]`` from H_n to H_{n+1} (dense, ambient coordinates)."""
    _check_index(spec, i)
    p0 = graded_piece(spec, n, rtol).projector()
    p1 = graded_piece(spec, n + 1, rtol).projector()
    s = shift_matrix(spec.d, i, n)
    return OperatorBlock(p1 @ s.toarray() - (s @ p0), n, n + 1)


def lemma_identity_residual(spec: Spec, i: int, j: int, n: int, rtol: float = RANK_RTOL) -> float:
    """Frobenius residual of ``[T_i^*,T_j] = P[S_i^*,S_j]P - [P,S_i]^*[P,S_j]`` on H_n."""
    f = graded_piece(spec, n, rtol).basis
    lhs = f @ commutator_block(spec, i, j, n, rtol).matrix @ f.conj().T
    p = f @ f.conj().T
    full = full_commutator_matrix(spec.d, i, j, n)
    ci = projection_commutator_block(spec, i, n, rtol).matrix
    cj = projection_commutator_block(spec, j, n, rtol).matrix
    rhs = p @ (full @ p) - ci.conj().T @ cj
    return float(np.linalg.norm(lhs - rhs))


@dataclass(frozen=True)
class CommutatorSeries:
    """Per-degree blocks of ``[T_i^*, T_j]`` for n = 0..n_max.

    Degrees ``n_max - 1`` and ``n_max`` are flagged boundary-affected: they
    are exact blocks but sit next to the truncation edge and are left out of
    decay fits.
    """

    i: int
    j: int
    d: int
    degrees: tuple
    blocks: tuple = field(repr=False)
    singular_values: tuple = field(repr=False)
    norms: tuple
    ranks: tuple
    threshold: float
    full_space: bool = False

    @property
    def boundary_degrees(self) -> tuple:
        return self.degrees[-2:]


def _block_and_svd(spec, i, j, n, rtol):
    c = commutator_block(spec, i, j, n, rtol).matrix
    return c, (np.linalg.svd(c, compute_uv=False) if c.size else np.zeros(0))


def commutator_series(spec: Spec, i: int, j: int, n_max: int, rtol: float = RANK_RTOL,
                      mapper=map) -> CommutatorSeries:
    """Blocks for n = 0..n_max; ``mapper`` (e.g. ``Executor.map``) must preserve order."""
    if n_max < 0:
        raise InvalidInputError("n_max must be nonnegative")
    _check_index(spec, i)
    _check_index(spec, j)
    done = list(mapper(lambda n: _block_and_svd(spec, i, j, n, rtol), range(n_max + 1)))
    blocks = [b for b, _ in done]
    svals = [s for _, s in done]
    scale = max((float(s[0]) for s in svals if s.size), default=0.0)
    threshold = rtol * scale
    norms = tuple(float(s[0]) if s.size else 0.0 for s in svals)
    ranks = tuple(int(np.count_nonzero(s > threshold)) for s in svals)
    full = isinstance(spec, VarietySpec) and spec.is_full_space
    return CommutatorSeries(i, j, spec.d, tuple(range(n_max + 1)), tuple(blocks), tuple(svals),
                            norms, ranks, threshold, full)


def full_space_majorant(d: int, p: float, n_max: int) -> np.ndarray:
    """Partial sums of ``sum_n 2^p dim H_n / (n+1)^p``."""
    terms = [2.0 ** p * dim_h(d, n) / (n + 1) ** p for n in range(n_max + 1)]
    return np.cumsum(terms)


def _loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass(frozen=True)
class DecayFit:
    """HEURISTIC: ``||C_n|| ~ n^-gamma``, ``rank C_n ~ rho n^delta``, ``p* = (1+delta)/gamma``."""

    gamma: float
    delta: float
    rho: float
    critical_p: float
    degrees_used: tuple
    heuristic: bool = True


def decay_fit(series: CommutatorSeries, min_degrees: int = 10) -> DecayFit:
    """Least-squares log-log fit over the top half of the nonzero, non-boundary degrees."""
    usable = [n for n, nm, r in zip(series.degrees, series.norms, series.ranks)
              if n >= 1 and r > 0 and n not in series.boundary_degrees]
    if len(usable) < min_degrees:
        raise UndefinedFitError(
            f"only {len(usable)} degrees with nonzero commutator norm; need {min_degrees} for a decay fit"
        )
    top = usable[len(usable) // 2:]
    norms = [series.norms[n] for n in top]
    ranks = [series.ranks[n] for n in top]
    gamma = -_loglog_slope(top, norms)
    lx = np.log(np.asarray(top, float))
    delta, log_rho = np.polyfit(lx, np.log(np.asarray(ranks, float)), 1)
    crit = (1.0 + delta) / gamma if gamma > 0 else math.inf
    return DecayFit(float(gamma), float(delta), float(math.exp(log_rho)), float(crit), tuple(top))


@dataclass(frozen=True)
class SchattenReport:
    p: float
    degrees: tuple
    contributions: tuple
    partial_sums: tuple
    decay_exponent: float
    convergence: str
    majorant: tuple
    majorant_dominated: bool | None
    decay: DecayFit | None = None
    heuristic: bool = True

    @property
    def critical_p(self) -> float | None:
        return self.decay.critical_p if self.decay is not None else None

    def rows(self):
        return [
            {"degree": n, "contribution": c, "partial_sum": s, "majorant": m}
            for n, c, s, m in zip(self.degrees, self.contributions, self.partial_sums, self.majorant)
        ]


def _classify(contribs: np.ndarray, degrees: Sequence[int], exponent: float) -> str:
    quarter = max(1, len(degrees) // 4)
    tail = contribs[-quarter:]
    if (tail < CONVERGENCE_INCREMENT).all() and exponent < -1:
        return "converging"
    if exponent > -1 + DIVERGENCE_MARGIN:
        return "diverging"
    return "inconclusive"


def schatten_partial_sum(series: CommutatorSeries, p: float, n_max: int | None = None) -> SchattenReport:
    """Partial sums of ``sum_n sum_k s_k(C_n)^p`` with convergence heuristics.

    Singular values at or below the series threshold count as zero.  The
    contribution exponent is a log-log slope over the upper half of degrees
    with nonzero contributions; if the contributions vanish there it is
    ``-inf``.  Classification: "converging" iff the last quarter of
    contributions are all below 1e-6 and the exponent is below -1,
    "diverging" iff the exponent exceeds -1 + 0.1, else "inconclusive".
    """
    if p < 1:
        raise InvalidInputError("Schatten exponent must be >= 1")
    if n_max is None:
        n_max = series.degrees[-1]
    if not 0 <= n_max <= series.degrees[-1]:
        raise InvalidInputError(f"truncation {n_max} outside computed range 0..{series.degrees[-1]}")
    degrees = series.degrees[: n_max + 1]
    contribs = np.array([
        float(np.sum(s[s > series.threshold] ** p)) for s in series.singular_values[: n_max + 1]
    ])
    partial = np.cumsum(contribs)
    half = [n for n in degrees[len(degrees) // 2:] if n >= 1 and contribs[n] > 0]
    exponent = _loglog_slope(half, contribs[half]) if len(half) >= 2 else -math.inf
    majorant = full_space_majorant(series.d, p, n_max)
    dominated = bool((partial <= majorant * (1 + 1e-12)).all()) if series.full_space else None
    try:
        fit = decay_fit(series)
    except UndefinedFitError:
        fit = None
    return SchattenReport(float(p), tuple(degrees), tuple(contribs.tolist()), tuple(partial.tolist()),
                          exponent, _classify(contribs, degrees, exponent), tuple(majorant.tolist()),
                          dominated, fit)


def commutator_norm_bound_ok(d: int, n_max: int, atol: float = 1e-10) -> bool:
    """Check ``||[S_i^*, S_j]|_{H_n}|| <= 2/(n+1)`` for all i, j and n <= n_max."""
    return all(
        spectral_norm(full_commutator_matrix(d, i, j, n)) <= 2.0 / (n + 1) + atol
        for n in range(n_max + 1) for i in range(d) for j in range(d)
    )
