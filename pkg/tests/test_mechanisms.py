"""Geometric mechanism construction and the two-point loss comparison.

The construction tests check every entry against an oracle that builds
the same table by summing the noise pmf and clamping, with tails summed
symbolically rather than by the closed form the library uses.
"""

from decimal import Decimal
from fractions import Fraction as F

import pytest

from privopt import (
    PrivacyLevel,
    StructuralError,
    check_differential_privacy,
    check_row_stochastic,
    truncated_geometric,
)
from privopt.mechanisms import (
    geometric_face_value_binary_loss,
    geometric_pmf,
    geometric_tail,
    geometric_two_point_loss,
    laplace_two_point_loss,
    two_point_loss_ratio,
)

from oracles import clamped_geometric_rows, sym_tail

LEVELS = [F(1, 10), F(1, 4), F(1, 2), F(3, 4), F(9, 10)]


class TestNoise:
    def test_pmf_at_zero(self):
        assert geometric_pmf(PrivacyLevel(F(1, 2)), 0) == F(1, 3)

    def test_pmf_symmetric(self):
        a = PrivacyLevel(F(1, 4))
        for z in range(1, 6):
            assert geometric_pmf(a, z) == geometric_pmf(a, -z)

    @pytest.mark.parametrize("alpha", LEVELS)
    def test_tail_matches_symbolic_sum(self, alpha):
        a = PrivacyLevel(alpha)
        for k in (1, 2, 5):
            assert geometric_tail(a, k) == sym_tail(alpha, k)

    def test_partial_sum_identity(self):
        # mass inside |z| <= K plus the two tails is exactly 1
        a = PrivacyLevel(F(2, 7))
        for K in range(4):
            inside = sum(geometric_pmf(a, z) for z in range(-K, K + 1))
            assert inside + 2 * geometric_tail(a, K + 1) == 1

    def test_tail_needs_positive_k(self):
        with pytest.raises(StructuralError):
            geometric_tail(PrivacyLevel(F(1, 2)), 0)


class TestTruncatedGeometric:
    @pytest.mark.parametrize("alpha", LEVELS)
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_matches_clamping_oracle(self, alpha, n):
        g = truncated_geometric(PrivacyLevel(alpha), n)
        assert g.rows == clamped_geometric_rows(alpha, n)

    @pytest.mark.parametrize("alpha", LEVELS)
    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_stochastic_and_private(self, alpha, n):
        a = PrivacyLevel(alpha)
        g = truncated_geometric(a, n)
        assert check_row_stochastic(g).ok
        assert check_differential_privacy(g, a).ok

    def test_privacy_is_tight_everywhere(self):
        # every adjacent pair in every column sits on the ratio boundary
        a = PrivacyLevel(F(1, 3))
        g = truncated_geometric(a, 4)
        for k in range(5):
            col = g.column(k)
            for i in range(4):
                assert col[i + 1] == a.alpha * col[i] or col[i] == a.alpha * col[i + 1]

    def test_n1_endpoints(self):
        g = truncated_geometric(PrivacyLevel(F(1, 2)), 1)
        assert g.rows == ((F(2, 3), F(1, 3)), (F(1, 3), F(2, 3)))

    def test_needs_positive_n(self):
        with pytest.raises(StructuralError):
            truncated_geometric(PrivacyLevel(F(1, 2)), 0)


class TestTwoPointLosses:
    def test_geometric_quarter(self):
        assert geometric_two_point_loss(PrivacyLevel(F(1, 4))) == F(1, 5)

    def test_geometric_equals_n1_mechanism_loss(self):
        # alpha/(1+alpha) is exactly the off-diagonal mass of the n=1 table
        for alpha in LEVELS:
            g = truncated_geometric(PrivacyLevel(alpha), 1)
            assert geometric_two_point_loss(PrivacyLevel(alpha)) == g.rows[0][1]

    def test_face_value_binary_loss(self):
        assert geometric_face_value_binary_loss(PrivacyLevel(F(1, 2))) == F(2, 3)

    def test_laplace_quarter(self):
        v = laplace_two_point_loss(PrivacyLevel(F(1, 4)))
        assert abs(v - Decimal("0.25")) <= Decimal("1e-60")

    def test_laplace_is_half_sqrt_alpha(self):
        from privopt.core import hp_context
        ctx = hp_context(64)
        for alpha in LEVELS:
            v = laplace_two_point_loss(PrivacyLevel(alpha))
            ref = ctx.divide(ctx.sqrt(ctx.divide(Decimal(alpha.numerator),
                                                 Decimal(alpha.denominator))),
                             Decimal(2))
            assert abs(v - ref) <= Decimal("1e-60")

    @pytest.mark.parametrize("alpha,floor", [(F(1, 100), 5), (F(1, 1000), 15)])
    def test_ratio_grows_as_privacy_relaxes(self, alpha, floor):
        assert two_point_loss_ratio(PrivacyLevel(alpha)) > floor

    def test_ratio_closed_form(self):
        # sqrt(alpha)(1+alpha)/(2 alpha), checked at 1e-12
        import math
        for alpha in LEVELS + [F(1, 100), F(1, 1000)]:
            got = float(two_point_loss_ratio(PrivacyLevel(alpha)))
            want = math.sqrt(alpha) * (1 + alpha) / (2 * alpha)
            assert abs(got - want) <= 1e-12
