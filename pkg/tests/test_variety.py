from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dalab.errors import InsufficientDegreeRangeError, InvalidInputError
from dalab.fock import HomogeneousPolynomial, dim_h, kernel_vector
from dalab.variety import (
    GradedSubspace,
    IdealSpec,
    SubspaceComponent,
    VarietySpec,
    check_radical_consistency,
    graded_piece,
    hilbert_dimensions,
    hilbert_polynomial_fit,
    ideal_piece,
    intersect_ideal_graded,
    quotient_piece,
    subspace_power,
    sum_ideal_graded,
)
from dalab._linalg import subspace_distance

from conftest import divides, line, monomials, random_complex, random_monomial_generators, two_lines


def oracle_ideal_dim(gens, d, n):
    return sum(1 for a in monomials(d, n) if any(divides(g, a) for g in gens))


class TestComponents:
    def test_requires_orthonormal(self):
        with pytest.raises(InvalidInputError):
            SubspaceComponent(np.array([[1.0], [1.0]]))

    def test_from_span(self):
        c = SubspaceComponent.from_span(np.array([[1.0, 1.0], [1.0, 2.0], [0.0, 0.0]]))
        assert c.m == 2 and c.d == 3

    def test_zero_span(self):
        with pytest.raises(InvalidInputError):
            SubspaceComponent.from_span(np.zeros(3))

    def test_redundant_component_rejected(self):
        plane = SubspaceComponent(np.eye(3)[:, :2])
        with pytest.raises(InvalidInputError):
            VarietySpec(components=(plane, line([1, 1, 0])))

    def test_exactly_one_description(self):
        with pytest.raises(InvalidInputError):
            VarietySpec()

    def test_ideal_variety_needs_radical_flag(self):
        with pytest.raises(InvalidInputError):
            VarietySpec(ideal=IdealSpec.monomial([(1, 1)]))

    def test_full_space(self):
        fs = VarietySpec.full_space(3)
        assert fs.is_full_space and fs.d == 3
        assert hilbert_dimensions(fs, range(5)) == [dim_h(3, n) for n in range(5)]


class TestIdeals:
    def test_empty_generators(self):
        with pytest.raises(InvalidInputError):
            IdealSpec(2, ())

    def test_zero_generator(self):
        with pytest.raises(InvalidInputError):
            IdealSpec(2, (HomogeneousPolynomial(2, 2),))

    def test_z1z2_pieces(self):
        ideal = IdealSpec.monomial([(1, 1)])
        assert hilbert_dimensions(ideal, range(6)) == [1, 2, 2, 2, 2, 2]
        f3 = quotient_piece(ideal, 3).basis
        # standard monomials z1^3 and z2^3 are first and last in graded-lex order
        assert f3[0, 0] == 1 and f3[3, 1] == 1

    def test_numeric_path_matches_monomial_path(self, rng):
        for _ in range(5):
            gens = random_monomial_generators(rng, 3)
            ideal = IdealSpec.monomial(gens)
            for n in range(7):
                a = ideal_piece(ideal, n).basis
                b = ideal_piece(ideal, n, exact=False).basis
                assert a.shape == b.shape
                if a.shape[1]:
                    assert subspace_distance(a, b) < 1e-10

    def test_principal_non_monomial(self):
        # (z1^2 - z2^2) has a one-dimensional quotient drop at every degree >= 2
        g = HomogeneousPolynomial.from_dict(2, {(2, 0): 1, (0, 2): -1})
        ideal = IdealSpec(2, (g,))
        assert hilbert_dimensions(ideal, range(7)) == [1, 2, 2, 2, 2, 2, 2]

    def test_quotient_is_orthogonal_to_ideal(self):
        g = HomogeneousPolynomial.from_dict(3, {(1, 1, 0): 1, (0, 0, 2): 2j})
        ideal = IdealSpec(3, (g,))
        for n in range(5):
            f, i = quotient_piece(ideal, n).basis, ideal_piece(ideal, n).basis
            assert np.abs(f.conj().T @ i).max(initial=0) < 1e-12
            assert f.shape[1] + i.shape[1] == dim_h(3, n)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monomial_dims_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        gens = random_monomial_generators(rng, d)
        ideal = IdealSpec.monomial(gens)
        for n in range(9):
            assert ideal_piece(ideal, n).dim == oracle_ideal_dim(gens, d, n)


class TestVarietyPieces:
    def test_two_lines_dims(self):
        spec = VarietySpec.from_components(two_lines())
        assert hilbert_dimensions(spec, range(8)) == [1] + [2] * 7

    def test_line_power_is_kernel_vector(self, rng):
        u = random_complex(rng, 3)
        u /= np.linalg.norm(u)
        for n in range(5):
            p = subspace_power(line(u), n)
            k = kernel_vector(u, n)
            assert subspace_distance(p.basis, (k / np.linalg.norm(k))[:, None]) < 1e-12

    def test_plane_power_dim(self, rng):
        plane = SubspaceComponent.from_span(random_complex(rng, 4, 2))
        for n in range(6):
            p = subspace_power(plane, n)
            assert p.dim == n + 1 and p.orthonormality_defect() < 1e-12

    def test_piece_annihilated_by_ideal_of_lines(self):
        # F_n of two coordinate axes equals the axes' powers
        axes = VarietySpec.from_components([line([1, 0]), line([0, 1])])
        ideal = IdealSpec.monomial([(1, 1)], radical=True)
        for n in range(6):
            assert subspace_distance(graded_piece(axes, n).basis, quotient_piece(ideal, n).basis) < 1e-12

    def test_graded_subspace_readonly(self):
        g = GradedSubspace(0, np.ones((1, 1)))
        with pytest.raises(ValueError):
            g.basis[0, 0] = 2


class TestRadicalConsistency:
    def test_axes(self):
        rep = check_radical_consistency(IdealSpec.monomial([(1, 1)], radical=True),
                                        VarietySpec.from_components([line([1, 0]), line([0, 1])]), 12)
        assert rep.first_mismatch() is None

    def test_non_radical_detected(self):
        rep = check_radical_consistency(IdealSpec.monomial([(2, 0)], radical=True),
                                        VarietySpec.from_components([line([0, 1])]), 4)
        assert rep.first_mismatch() == 1
        assert rep.dims_quotient[1] == 2 and rep.dims_variety[1] == 1

    def test_requires_flag(self):
        with pytest.raises(InvalidInputError):
            check_radical_consistency(IdealSpec.monomial([(1, 1)]), VarietySpec.full_space(2), 2)


class TestHilbertFit:
    def test_constant(self):
        fit = hilbert_polynomial_fit([1, 2, 2, 2, 2, 2])
        assert fit.coefficients == (Fraction(2),)
        assert fit.dimension == 1 and fit.stabilization_degree == 1

    def test_full_space_d3(self):
        dims = [dim_h(3, n) for n in range(8)]
        fit = hilbert_polynomial_fit(dims)
        assert fit.dimension == 3
        assert all(fit(n) == math.comb(n + 2, 2) for n in range(15))
        assert fit.coefficients[-1] == Fraction(1, 2)

    def test_plane_and_line(self):
        spec = VarietySpec.from_components([SubspaceComponent(np.eye(3)[:, :2]), line([1, 1, 1])])
        dims = hilbert_dimensions(spec, range(8))
        assert dims[2:] == [n + 2 for n in range(2, 8)]
        fit = hilbert_polynomial_fit(dims)
        assert fit.dimension == 2 and fit.coefficients == (Fraction(2), Fraction(1))

    def test_insufficient_range(self):
        with pytest.raises(InsufficientDegreeRangeError, match="0..3"):
            hilbert_polynomial_fit([1, 3, 6, 10])

    def test_window_too_small(self):
        with pytest.raises(InvalidInputError):
            hilbert_polynomial_fit([1, 1, 1], window=2)


class TestSumsAndIntersections:
    def test_against_monomial_oracle(self, rng):
        for _ in range(6):
            d = int(rng.integers(2, 4))
            g1, g2 = random_monomial_generators(rng, d), random_monomial_generators(rng, d)
            i1, i2 = IdealSpec.monomial(g1), IdealSpec.monomial(g2)
            for n in range(8):
                s = sum_ideal_graded([i1, i2], n).dim
                x = intersect_ideal_graded([i1, i2], n).dim
                assert s == oracle_ideal_dim(g1 + g2, d, n)
                assert x == sum(1 for a in monomials(d, n)
                                if any(divides(g, a) for g in g1) and any(divides(g, a) for g in g2))

    def test_mismatched_dimensions(self):
        with pytest.raises(InvalidInputError):
            sum_ideal_graded([IdealSpec.monomial([(1, 0)]), IdealSpec.monomial([(1, 0, 0)])], 2)
