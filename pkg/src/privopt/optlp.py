"""The per-user optimal mechanism as an exact linear program.

Variables are the (n+1)^2 mechanism entries x[i][r]. Constraints: the
2n(n+1) two-sided privacy ratio inequalities between adjacent results,
n+1 unit row sums, and nonnegativity. The solver works in a reduced space
with response column n substituted away: there every right-hand side is
nonnegative, the all-mass-on-column-n mechanism is the slack-basis
vertex, and the simplex needs no feasibility phase.

Irrational objectives (fractional-exponent power losses) are rationalized
at high precision; the feasible region, and with it the vertex set, stays
exact. A post-pass then recomputes reduced costs against the true
objective and certifies the chosen vertex within a hard margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from .core import (
    Mechanism,
    Number,
    PrivacyLevel,
    StructuralError,
    UserModel,
    expected_loss,
    hp_context,
    to_decimal,
)
from .simplex import LE, Constraint, SimplexResult, solve_lp

POST_PASS_MARGIN = Decimal("1e-40")


@dataclass(frozen=True)
class UserLP:
    """min sum_i p_i sum_r x[i][r] l(i,r) over alpha-private row-stochastic
    x, as data. Objective coefficients are exact for rational losses and
    high-precision rationalizations otherwise."""

    user: UserModel
    level: PrivacyLevel
    n: int
    objective: tuple[tuple[Fraction, ...], ...]  # [i][r], rationalized
    objective_exact: bool
    digits: int

    @property
    def num_variables(self) -> int:
        return (self.n + 1) ** 2

    @property
    def num_privacy_constraints(self) -> int:
        return 2 * self.n * (self.n + 1)

    @property
    def num_mass_constraints(self) -> int:
        return self.n + 1


@dataclass(frozen=True)
class TightSet:
    """Constraints active at a mechanism, by kind. up holds pairs (i, r)
    with x[i][r] = alpha*x[i+1][r], down those with alpha*x[i][r] =
    x[i+1][r], zero the entries equal to 0; all n+1 row sums are always
    tight and are counted, not listed."""

    n: int
    up: tuple[tuple[int, int], ...]
    down: tuple[tuple[int, int], ...]
    zero: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.up) + len(self.down) + len(self.zero) + self.n + 1


@dataclass(frozen=True)
class VertexSolution:
    """An optimal vertex of a UserLP, with its certificate trail."""

    mechanism: Mechanism
    objective: Number          # true expected loss of the vertex
    lp_objective: Fraction     # value under the (possibly rationalized) LP
    tight: TightSet
    alternate_optima: int      # optimal-face directions leaving the vertex
    pivots: int
    certified: bool            # post-pass outcome (trivially True if exact)


def build_lp(u: UserModel, a: PrivacyLevel, n: int | None = None,
             digits: int | None = None) -> UserLP:
    """Assemble the user's LP; rationalizes irrational loss values at the
    requested precision."""
    if n is None:
        n = u.n
    elif n != u.n:
        raise StructuralError(f"prior covers results 0..{u.n}, asked for n={n}")
    if n < 1:
        raise StructuralError("need at least two results (n >= 1)")
    ctx = hp_context(digits)
    exact = u.loss.is_exact
    objective = []
    for i in range(n + 1):
        row = []
        for r in range(n + 1):
            if exact:
                row.append(u.prior[i] * u.loss.exact_value(i, r))
            else:
                row.append(u.prior[i] * Fraction(u.loss.hp_value(i, r, ctx)))
        objective.append(tuple(row))
    return UserLP(user=u, level=a, n=n, objective=tuple(objective),
                  objective_exact=exact, digits=ctx.prec)


def _reduced_constraints(n: int, alpha: Fraction):
    """Constraints over y[i][r] = x[i][r] for r < n, var index i*n + r.

    Substituting x[i][n] = 1 - sum_r y[i][r] turns every row into <= with
    nonnegative right-hand side, so y = 0 (all mass on response n) is a
    feasible slack basis.
    """
    nv = n * (n + 1)
    zero = Fraction(0)
    cons = []

    def idx(i, r):
        return i * n + r

    for r in range(n):
        for i in range(n):
            row = [zero] * nv
            row[idx(i, r)] = Fraction(-1)
            row[idx(i + 1, r)] = alpha
            cons.append(Constraint(tuple(row), LE, zero))
            row = [zero] * nv
            row[idx(i, r)] = alpha
            row[idx(i + 1, r)] = Fraction(-1)
            cons.append(Constraint(tuple(row), LE, zero))
    gap = 1 - alpha
    for i in range(n):
        row = [zero] * nv
        for r in range(n):
            row[idx(i, r)] = Fraction(1)
            row[idx(i + 1, r)] = -alpha
        cons.append(Constraint(tuple(row), LE, gap))
        row = [zero] * nv
        for r in range(n):
            row[idx(i, r)] = -alpha
            row[idx(i + 1, r)] = Fraction(1)
        cons.append(Constraint(tuple(row), LE, gap))
    for i in range(n + 1):
        row = [zero] * nv
        for r in range(n):
            row[idx(i, r)] = Fraction(1)
        cons.append(Constraint(tuple(row), LE, Fraction(1)))
    return nv, cons


def tight_set(m: Mechanism, a: PrivacyLevel) -> TightSet:
    """Active constraints of m, computed exactly from the matrix."""
    alpha = a.alpha
    up, down, zero = [], [], []
    for r in range(m.n + 1):
        col = m.column(r)
        for i in range(m.n + 1):
            if col[i] == 0:
                zero.append((i, r))
        for i in range(m.n):
            if col[i] == 0 and col[i + 1] == 0:
                continue
            if col[i] == alpha * col[i + 1]:
                up.append((i, r))
            if alpha * col[i] == col[i + 1]:
                down.append((i, r))
    return TightSet(n=m.n, up=tuple(up), down=tuple(down), zero=tuple(zero))


def tight_rank(ts: TightSet, a: PrivacyLevel) -> int:
    """Rank of the active constraint rows at a concrete privacy level."""
    n = ts.n
    alpha = a.alpha
    width = (n + 1) ** 2
    rows = []
    for i, r in ts.zero:
        v = [Fraction(0)] * width
        v[i * (n + 1) + r] = Fraction(1)
        rows.append(v)
    for i in range(n + 1):
        v = [Fraction(0)] * width
        for r in range(n + 1):
            v[i * (n + 1) + r] = Fraction(1)
        rows.append(v)
    for i, r in ts.up:
        v = [Fraction(0)] * width
        v[i * (n + 1) + r] = Fraction(1)
        v[(i + 1) * (n + 1) + r] = -alpha
        rows.append(v)
    for i, r in ts.down:
        v = [Fraction(0)] * width
        v[i * (n + 1) + r] = alpha
        v[(i + 1) * (n + 1) + r] = Fraction(-1)
        rows.append(v)
    return _rank(rows)


def _rank(rows) -> int:
    rows = [list(r) for r in rows]
    if not rows:
        return 0
    width = len(rows[0])
    rank = 0
    col = 0
    while col < width and rank < len(rows):
        pivot = None
        for i in range(rank, len(rows)):
            if rows[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        prow = rows[rank]
        inv = 1 / prow[col]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] * inv
                rows[i] = [a - f * b for a, b in zip(rows[i], prow)]
        rank += 1
        col += 1
    return rank


def solve_vertex(lp: UserLP) -> VertexSolution:
    """Solve the LP exactly; returns an optimal vertex.

    Ties between optimal vertices are broken lexicographically: among the
    vertices minimizing the user's loss, the solver returns one that also
    minimizes the loss of a uniform-prior absolute-loss user. Users with
    zero prior entries or non-strictly-monotone losses (binary loss, say)
    leave whole faces of the polytope optimal, and some vertices on those
    faces are structural dead ends: they cannot be written as a remap of
    the canonical geometric mechanism. The secondary objective has full
    support and strictly increasing per-row losses, so the vertex it picks
    is the limit of the optima of nearby non-degenerate users, and those
    are always remaps.

    For rationalized objectives the vertex is re-certified against the
    true objective: every nonbasic column's true reduced cost must clear
    -POST_PASS_MARGIN, so no adjacent vertex improves by more than the
    margin. Failure raises; it would mean the rationalization precision
    is too low for the instance.
    """
    n = lp.n
    alpha = lp.level.alpha
    nv, cons = _reduced_constraints(n, alpha)

    # objective over y picks up -c[i][n] from the substitution
    obj = [Fraction(0)] * nv
    for i in range(n + 1):
        for r in range(n):
            obj[i * n + r] = lp.objective[i][r] - lp.objective[i][n]
    # secondary objective: uniform-prior absolute loss, same substitution
    # (the 1/(n+1) prior factor and the constant sum_i |i-n| drop out)
    tb = [Fraction(0)] * nv
    for i in range(n + 1):
        for r in range(n):
            tb[i * n + r] = Fraction(abs(i - r) - abs(i - n))
    res = solve_lp(nv, cons, obj, tiebreak=tb)
    if res.status != "optimal":
        raise RuntimeError(f"user LP came back {res.status}; it is always "
                           "feasible and bounded, so this is a solver bug")

    rows = []
    for i in range(n + 1):
        row = list(res.x[i * n: (i + 1) * n])
        row.append(1 - sum(row))
        rows.append(tuple(row))
    mech = Mechanism(n=n, responses=tuple(range(n + 1)), rows=tuple(rows))

    constant = sum((lp.objective[i][n] for i in range(n + 1)), Fraction(0))
    lp_value = res.objective + constant

    certified = True
    alternates = len(res.alternate_optimum_columns())
    if not lp.objective_exact:
        certified, near = _certify_true_objective(lp, res)
        alternates = max(alternates, near)

    value = expected_loss(mech, lp.user, lp.digits)
    ts = tight_set(mech, lp.level)
    return VertexSolution(mechanism=mech, objective=value,
                          lp_objective=lp_value, tight=ts,
                          alternate_optima=alternates, pivots=res.pivots,
                          certified=certified)


def _certify_true_objective(lp: UserLP, res: SimplexResult) -> tuple[bool, int]:
    """Reduced costs of all nonbasic columns under the true (Decimal)
    objective. Slack columns carry zero cost; y columns carry
    p_i (l(i,r) - l(i,n)) evaluated freshly at high precision."""
    n = lp.n
    ctx = hp_context(lp.digits)
    u = lp.user

    def true_cost(j: int) -> Decimal:
        if j >= n * (n + 1):
            return Decimal(0)
        i, r = divmod(j, n)
        p = to_decimal(u.prior[i], ctx)
        li = u.loss.hp_value(i, r, ctx)
        ln = u.loss.hp_value(i, n, ctx)
        return ctx.multiply(p, ctx.subtract(li, ln))

    basis = res.basis
    basic = set(basis)
    basic_costs = [true_cost(b) for b in basis]
    near = 0
    ok = True
    for j in range(res.width):
        if j in basic:
            continue
        col = res.tableau_column(j)
        reduced = true_cost(j)
        for bc, t in zip(basic_costs, col):
            if t and bc:
                reduced = ctx.subtract(reduced,
                                       ctx.multiply(bc, to_decimal(t, ctx)))
        if reduced < -POST_PASS_MARGIN:
            ok = False
        elif abs(reduced) <= POST_PASS_MARGIN:
            near += 1
    if not ok:
        raise RuntimeError("vertex failed true-objective certification; "
                           "raise the working precision")
    return ok, near


def optimal_mechanism_for_user(u: UserModel, a: PrivacyLevel,
                               n: int | None = None,
                               digits: int | None = None) -> VertexSolution:
    """Convenience: build and solve the user's LP in one step."""
    return solve_vertex(build_lp(u, a, n, digits))
