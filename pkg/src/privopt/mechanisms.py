"""Constructions of concrete privacy mechanisms and their closed-form losses.

The two-sided geometric distribution with parameter alpha has
Pr[Z = z] = ((1-alpha)/(1+alpha)) * alpha^|z|. Adding such noise to a count
is alpha-differentially private; the infinite-range mechanism is never
materialized here, only its pmf and its truncation to 0..n.
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

from .core import (
    Mechanism,
    PrivacyLevel,
    StructuralError,
    hp_context,
    to_decimal,
)


def geometric_pmf(a: PrivacyLevel, z: int) -> Fraction:
    """Pr[Z = z] for two-sided geometric noise, exact."""
    alpha = a.alpha
    return (1 - alpha) / (1 + alpha) * alpha ** abs(z)


def geometric_tail(a: PrivacyLevel, k: int) -> Fraction:
    """Pr[Z >= k] for k >= 1, exact: alpha^k / (1 + alpha)."""
    if k < 1:
        raise StructuralError("tail is defined for k >= 1")
    alpha = a.alpha
    return alpha ** k / (1 + alpha)


def truncated_geometric(a: PrivacyLevel, n: int) -> Mechanism:
    """Geometric noise clamped to 0..n: responses below 0 fold into 0,
    responses above n fold into n.

    Interior column r gets the raw pmf at distance |i - r|; the edge
    columns absorb the matching tail, which collapses to alpha^i/(1+alpha)
    for column 0 (and symmetrically for column n).
    """
    if n < 1:
        raise StructuralError("need at least two results (n >= 1)")
    alpha = a.alpha
    one = 1 + alpha
    rows = []
    for i in range(n + 1):
        row = [Fraction(0)] * (n + 1)
        row[0] = alpha ** i / one
        row[n] = alpha ** (n - i) / one
        for r in range(1, n):
            row[r] = geometric_pmf(a, i - r)
        rows.append(tuple(row))
    return Mechanism(n=n, responses=tuple(range(n + 1)), rows=tuple(rows))


def geometric_two_point_loss(a: PrivacyLevel) -> Fraction:
    """Optimally post-processed loss of the geometric mechanism for the
    uniform two-point user (results {0, 1}, error-probability loss):
    alpha / (1 + alpha), exact."""
    alpha = a.alpha
    return alpha / (1 + alpha)


def geometric_face_value_binary_loss(a: PrivacyLevel) -> Fraction:
    """Error probability of the untruncated geometric mechanism taken at
    face value (any prior): 1 - Pr[Z = 0] = 2*alpha / (1 + alpha)."""
    alpha = a.alpha
    return 2 * alpha / (1 + alpha)


def laplace_two_point_loss(a: PrivacyLevel, digits: int | None = None) -> Decimal:
    """Loss of the Laplace mechanism for the same two-point user after its
    own optimal post-processing: sqrt(alpha) / 2.

    Irrational for most alpha, so returned as a Decimal at the requested
    precision.
    """
    ctx = hp_context(digits)
    return ctx.divide(ctx.sqrt(to_decimal(a.alpha, ctx)), Decimal(2))


def two_point_loss_ratio(a: PrivacyLevel, digits: int | None = None) -> Decimal:
    """laplace / geometric for the two-point user: sqrt(alpha)*(1+alpha)/(2*alpha).

    Grows without bound as alpha -> 0; the geometric side wins at every
    level.
    """
    ctx = hp_context(digits)
    return ctx.divide(laplace_two_point_loss(a, digits),
                      to_decimal(geometric_two_point_loss(a), ctx))
