"""Core types for oblivious count-query mechanisms.

A mechanism over results 0..n is a row-stochastic matrix: row i is the
response distribution published when the true count is i. Everything here
is exact rational arithmetic (fractions.Fraction); loss values that are
irrational (fractional-exponent power losses) are realized as Decimals at
a configurable precision instead.
"""

from __future__ import annotations

import decimal
import os
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Sequence, Union

Rational = Fraction
Number = Union[Fraction, Decimal]

DEFAULT_PRECISION = 64
PRECISION_ENV_VAR = "PRIVOPT_PRECISION"


class StructuralError(ValueError):
    """Shape or labeling of the inputs does not line up."""


class CapacityError(RuntimeError):
    """An exhaustive search was asked to enumerate too large a space."""


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV_VAR)
    if raw is None:
        return DEFAULT_PRECISION
    digits = int(raw)
    if digits < 1:
        raise ValueError(f"{PRECISION_ENV_VAR} must be a positive integer, got {raw!r}")
    return digits


def hp_context(digits: int | None = None) -> decimal.Context:
    """Decimal context used for all high-precision (non-rational) evaluation."""
    return decimal.Context(prec=digits if digits is not None else default_precision())


def to_decimal(q: Fraction, ctx: decimal.Context) -> Decimal:
    return ctx.divide(Decimal(q.numerator), Decimal(q.denominator))


def parse_rational(text: str) -> Fraction:
    """Parse 'p/q' or a plain integer/decimal string into an exact Fraction."""
    return Fraction(text.strip())


def format_rational(q: Fraction) -> str:
    """Lowest-terms 'p/q' string; plain 'p' when the denominator is 1."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return parse_rational(v)
    raise StructuralError(f"expected a rational value, got {type(v).__name__}")


@dataclass(frozen=True)
class PrivacyLevel:
    """Privacy parameter alpha, 0 < alpha < 1; larger alpha is more private.

    alpha = 0 (no privacy) and alpha = 1 (output independent of the data)
    are rejected: both collapse the optimization problems this package
    exists to solve.
    """

    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_fraction(self.alpha))
        if not (0 < self.alpha < 1):
            raise StructuralError(
                f"degenerate privacy level alpha={self.alpha}; need 0 < alpha < 1"
            )


@dataclass(frozen=True)
class Mechanism:
    """Row-stochastic response matrix over results 0..n.

    rows[i][k] is the probability of emitting responses[k] on true result i.
    The constructor only enforces shape; use check_row_stochastic for the
    probabilistic validity of untrusted data.
    """

    n: int
    responses: tuple[int, ...]
    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise StructuralError("n must be nonnegative")
        object.__setattr__(self, "responses", tuple(self.responses))
        rows = tuple(tuple(_as_fraction(v) for v in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        if len(rows) != self.n + 1:
            raise StructuralError(
                f"expected {self.n + 1} rows for n={self.n}, got {len(rows)}"
            )
        if len(set(self.responses)) != len(self.responses):
            raise StructuralError("duplicate response labels")
        for i, row in enumerate(rows):
            if len(row) != len(self.responses):
                raise StructuralError(
                    f"row {i} has {len(row)} entries for {len(self.responses)} responses"
                )

    def column(self, k: int) -> tuple[Fraction, ...]:
        return tuple(row[k] for row in self.rows)

    def response_index(self, r: int) -> int:
        try:
            return self.responses.index(r)
        except ValueError:
            raise StructuralError(f"no response labeled {r}") from None


@dataclass(frozen=True)
class Remap:
    """Row-stochastic post-processing map from source responses to targets.

    rows[j][k] is the probability that source response sources[j] is
    republished as targets[k]. deterministic is derived, not supplied.
    """

    sources: tuple[int, ...]
    targets: tuple[int, ...]
    rows: tuple[tuple[Fraction, ...], ...]
    deterministic: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "targets", tuple(self.targets))
        rows = tuple(tuple(_as_fraction(v) for v in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        if len(rows) != len(self.sources):
            raise StructuralError("one row per source response required")
        for j, row in enumerate(rows):
            if len(row) != len(self.targets):
                raise StructuralError(f"row {j} does not match the target set")
            if any(v < 0 for v in row):
                raise StructuralError("remap probabilities must be nonnegative")
            if sum(row) != 1:
                raise StructuralError(f"remap row {j} must sum to 1")
        det = all(sorted(row) == [Fraction(0)] * (len(self.targets) - 1) + [Fraction(1)]
                  for row in rows) if self.targets else False
        object.__setattr__(self, "deterministic", det)

    @staticmethod
    def from_map(mapping: Sequence[int], sources: Sequence[int],
                 targets: Sequence[int]) -> "Remap":
        """Deterministic remap sending sources[j] to mapping[j]."""
        targets = tuple(targets)
        rows = []
        for tgt in mapping:
            if tgt not in targets:
                raise StructuralError(f"target {tgt} outside the target set")
            rows.append(tuple(Fraction(1) if t == tgt else Fraction(0) for t in targets))
        return Remap(tuple(sources), targets, tuple(rows))

    def as_map(self) -> dict[int, int]:
        if not self.deterministic:
            raise StructuralError("remap is randomized; no single-valued map exists")
        out = {}
        for src, row in zip(self.sources, self.rows):
            out[src] = self.targets[row.index(Fraction(1))]
        return out


_LOSS_KINDS = ("absolute", "squared", "binary", "power", "tabulated")


@dataclass(frozen=True)
class LossFunction:
    """Loss l(i, r) >= 0, nondecreasing in |i - r| for each fixed i.

    Built-in kinds: absolute |i-r|, squared (i-r)^2, binary [i != r], and
    power |i-r|^p. Tabulated losses carry an explicit grid and are checked
    for monotonicity at construction. Power losses with a non-integer
    exponent are irrational; they evaluate through hp_value.
    """

    kind: str
    exponent: Fraction | None = None
    table: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in _LOSS_KINDS:
            raise StructuralError(f"unknown loss kind {self.kind!r}")
        if self.kind == "power":
            if self.exponent is None:
                raise StructuralError("power loss requires an exponent")
            object.__setattr__(self, "exponent", _as_fraction(self.exponent))
            if self.exponent <= 0:
                raise StructuralError("power loss exponent must be positive")
        elif self.kind == "tabulated":
            if self.table is None:
                raise StructuralError("tabulated loss requires a table")
            table = tuple(tuple(_as_fraction(v) for v in row) for row in self.table)
            object.__setattr__(self, "table", table)
            width = len(table[0]) if table else 0
            for i, row in enumerate(table):
                if len(row) != width:
                    raise StructuralError("loss table must be rectangular")
                by_dist: dict[int, Fraction] = {}
                for r, v in enumerate(row):
                    if v < 0:
                        raise StructuralError(f"loss table negative at ({i},{r})")
                    d = abs(i - r)
                    if d in by_dist and by_dist[d] != v:
                        raise StructuralError(
                            f"loss row {i} differs at equal distance {d}; "
                            "loss must be a function of |i-r|"
                        )
                    by_dist[d] = v
                dists = sorted(by_dist)
                for a, b in zip(dists, dists[1:]):
                    if by_dist[a] > by_dist[b]:
                        raise StructuralError(
                            f"loss row {i} decreases between distances {a} and {b}"
                        )
        elif self.exponent is not None or self.table is not None:
            raise StructuralError(f"{self.kind} loss takes no parameters")

    @staticmethod
    def absolute() -> "LossFunction":
        return LossFunction("absolute")

    @staticmethod
    def squared() -> "LossFunction":
        return LossFunction("squared")

    @staticmethod
    def binary() -> "LossFunction":
        return LossFunction("binary")

    @staticmethod
    def power(exponent) -> "LossFunction":
        return LossFunction("power", exponent=_as_fraction(exponent))

    @staticmethod
    def tabulated(table) -> "LossFunction":
        return LossFunction("tabulated", table=tuple(tuple(row) for row in table))

    @property
    def is_exact(self) -> bool:
        """True when every value l(i, r) is rational."""
        if self.kind == "power":
            return self.exponent.denominator == 1
        return True

    def exact_value(self, i: int, r: int) -> Fraction:
        if self.kind == "absolute":
            return Fraction(abs(i - r))
        if self.kind == "squared":
            return Fraction((i - r) ** 2)
        if self.kind == "binary":
            return Fraction(0 if i == r else 1)
        if self.kind == "tabulated":
            try:
                return self.table[i][r]
            except IndexError:
                raise StructuralError(f"loss table has no entry ({i},{r})") from None
        if self.kind == "power" and self.exponent.denominator == 1:
            return Fraction(abs(i - r) ** self.exponent.numerator)
        raise StructuralError(f"{self.kind} loss with exponent {self.exponent} "
                              "is irrational; use hp_value")

    def hp_value(self, i: int, r: int, ctx: decimal.Context) -> Decimal:
        """l(i, r) as a Decimal under ctx; exact kinds convert exactly."""
        if self.is_exact:
            return to_decimal(self.exact_value(i, r), ctx)
        base = abs(i - r)
        p = self.exponent
        if base == 0:
            return Decimal(0)
        if base == 1:
            return Decimal(1)
        powered = Decimal(base ** p.numerator)
        if p.denominator == 2:
            # square roots are correctly rounded, unlike general powers
            return ctx.sqrt(powered)
        return ctx.power(powered, ctx.divide(Decimal(1), Decimal(p.denominator)))

    def value(self, i: int, r: int, ctx: decimal.Context | None = None) -> Number:
        if self.is_exact:
            return self.exact_value(i, r)
        return self.hp_value(i, r, ctx if ctx is not None else hp_context())


@dataclass(frozen=True)
class UserModel:
    """A user: exact rational prior over results plus a loss function."""

    prior: tuple[Fraction, ...]
    loss: LossFunction

    def __post_init__(self):
        prior = tuple(_as_fraction(v) for v in self.prior)
        object.__setattr__(self, "prior", prior)
        if not prior:
            raise StructuralError("prior must cover at least result 0")
        if any(p < 0 for p in prior):
            raise StructuralError("prior entries must be nonnegative")
        if sum(prior) != 1:
            raise StructuralError(f"prior sums to {sum(prior)}, not 1")

    @property
    def n(self) -> int:
        return len(self.prior) - 1


@dataclass(frozen=True)
class StochasticityReport:
    ok: bool
    problems: tuple[str, ...] = ()


@dataclass(frozen=True)
class DPReport:
    ok: bool
    witness: tuple[int, int] | None = None  # (result i, response label)


def check_row_stochastic(m: Mechanism) -> StochasticityReport:
    """Exact check: entries in [0, 1] and every row sums to exactly 1."""
    problems = []
    for i, row in enumerate(m.rows):
        for k, v in enumerate(row):
            if v < 0 or v > 1:
                problems.append(f"entry ({i},{m.responses[k]}) = {format_rational(v)} "
                                "outside [0, 1]")
        total = sum(row)
        if total != 1:
            problems.append(f"row {i} sums to {format_rational(total)}")
    return StochasticityReport(ok=not problems, problems=tuple(problems))


def check_differential_privacy(m: Mechanism, a: PrivacyLevel) -> DPReport:
    """Adjacent-result ratio test, exact.

    For every response column and every i < n the pair (x[i], x[i+1]) must
    satisfy alpha*x[i+1] <= x[i] and alpha*x[i] <= x[i+1]; a shared zero
    passes (the 0/0 ratio counts as 1). Returns the first violating
    (i, response) pair scanned column by column.
    """
    alpha = a.alpha
    for k, r in enumerate(m.responses):
        col = m.column(k)
        for i in range(m.n):
            hi, lo = col[i], col[i + 1]
            if alpha * lo > hi or alpha * hi > lo:
                return DPReport(ok=False, witness=(i, r))
    return DPReport(ok=True)


def compose(y: Remap, x: Mechanism) -> Mechanism:
    """Post-process x by y: (y @ x)[i][t] = sum_r x[i][r] * y[r][t].

    y's source responses must be exactly x's responses, in order.
    """
    if y.sources != x.responses:
        raise StructuralError(
            f"remap sources {y.sources} do not match mechanism responses {x.responses}"
        )
    rows = tuple(
        tuple(sum((xrow[j] * yrow[k] for j, yrow in enumerate(y.rows)), Fraction(0))
              for k in range(len(y.targets)))
        for xrow in x.rows
    )
    return Mechanism(n=x.n, responses=y.targets, rows=rows)


def expected_loss(m: Mechanism, u: UserModel,
                  digits: int | None = None) -> Number:
    """Expected loss sum_i p_i sum_r x[i][r] l(i, r) against response labels.

    Exact Fraction whenever the loss is rational-valued; otherwise a
    Decimal at the requested precision (the prior/mechanism part of each
    term stays exact and is converted once).
    """
    if len(u.prior) != m.n + 1:
        raise StructuralError(
            f"prior covers {len(u.prior)} results, mechanism has {m.n + 1}"
        )
    if u.loss.is_exact:
        total = Fraction(0)
        for i, row in enumerate(m.rows):
            p = u.prior[i]
            if p == 0:
                continue
            for k, r in enumerate(m.responses):
                if row[k]:
                    total += p * row[k] * u.loss.exact_value(i, r)
        return total
    ctx = hp_context(digits)
    total = Decimal(0)
    for i, row in enumerate(m.rows):
        p = u.prior[i]
        if p == 0:
            continue
        for k, r in enumerate(m.responses):
            if row[k]:
                weight = p * row[k]
                total = ctx.add(total, ctx.multiply(to_decimal(weight, ctx),
                                                    u.loss.hp_value(i, r, ctx)))
    return total
