"""Database-indexed mechanisms: class averaging, worst-case loss, and
the two-user feasibility instance."""

import random
import time
from fractions import Fraction as F

import pytest

from privopt import (
    LossFunction,
    PrivacyLevel,
    StructuralError,
    UserModel,
    check_differential_privacy,
    expected_loss,
    truncated_geometric,
)
from privopt.analysis import random_user
from privopt.nonoblivious import (
    COUNTEREXAMPLE_RESPONSES,
    DatabaseSpace,
    FullMechanism,
    binary_space,
    build_counterexample_lp,
    check_counterexample_infeasibility,
    check_full_differential_privacy,
    check_full_row_stochastic,
    lift,
    obliviate,
    random_dp_full_mechanism,
    worst_case_expected_loss,
)
from privopt.simplex import solve_lp

from goldens import ALPHA_HALF
from oracles import adversarial_worst_loss, agree

TOL = F(1, 10 ** 30)


class TestDatabaseSpace:
    def test_binary_space_size(self):
        sp = binary_space(3)
        assert len(sp.databases) == 8
        assert sp.n == 3

    def test_labels_are_one_sets(self):
        sp = binary_space(3)
        labels = {sp.label(j) for j in range(8)}
        assert "{}" in labels and "{1,3}" in labels and "{1,2,3}" in labels

    def test_classes_partition(self):
        sp = binary_space(3)
        classes = sp.classes()
        assert [len(c) for c in classes] == [1, 3, 3, 1]
        assert sorted(j for c in classes for j in c) == list(range(8))

    def test_neighbors_symmetric_counts(self):
        sp = binary_space(3)
        pairs = sp.neighbor_pairs()
        assert len(pairs) == 12  # 8 * 3 / 2 single-row flips
        assert all(j1 < j2 for j1, j2 in pairs)

    def test_trivial_predicate_rejected(self):
        with pytest.raises(StructuralError):
            DatabaseSpace(domain=(0, 1), rows=2, positive={0, 1})
        with pytest.raises(StructuralError):
            DatabaseSpace(domain=(0, 1), rows=2, positive=set())


class TestObliviate:
    def test_oblivious_input_round_trips(self):
        sp = binary_space(3)
        g = truncated_geometric(ALPHA_HALF, 3)
        assert obliviate(lift(g, sp)).rows == g.rows

    def test_idempotent(self):
        rng = random.Random(31)
        sp = binary_space(2)
        x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
        once = obliviate(x)
        again = obliviate(lift(once, sp))
        assert once.rows == again.rows

    def test_output_class_constant_and_stochastic(self):
        # the four pinned rows of the two-user instance, free rows filled
        # with something arbitrary but stochastic
        sp = binary_space(3)
        pinned = {
            (1, 0, 0): (F(7, 12), F(0), F(4, 12), F(1, 12)),
            (0, 1, 0): (F(7, 12), F(0), F(1, 12), F(4, 12)),
            (1, 0, 1): (F(1, 6), F(0), F(4, 6), F(1, 6)),
            (0, 1, 1): (F(1, 6), F(0), F(1, 6), F(4, 6)),
        }
        filler = (F(1, 4), F(1, 4), F(1, 4), F(1, 4))
        rows = tuple(pinned.get(d, filler) for d in sp.databases)
        x = FullMechanism(sp, COUNTEREXAMPLE_RESPONSES, rows)
        assert check_full_row_stochastic(x).ok
        m = obliviate(x)
        assert sum(m.rows[0]) == 1
        # class-constant by construction: one row per result
        assert m.n == 3

    def test_preserves_privacy_exactly(self):
        rng = random.Random(12)
        for n in (2, 3):
            sp = binary_space(n)
            for _ in range(25):
                x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
                assert check_full_differential_privacy(x, ALPHA_HALF).ok
                m = obliviate(x)
                assert check_differential_privacy(m, ALPHA_HALF).ok

    def test_never_increases_worst_case_loss(self):
        rng = random.Random(13)
        for n in (2, 3):
            sp = binary_space(n)
            for _ in range(15):
                x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
                u = random_user(rng, n)
                m = obliviate(x)
                averaged = worst_case_expected_loss(lift(m, sp), u)
                original = worst_case_expected_loss(x, u)
                assert averaged <= original or agree(averaged, original, TOL)

    def test_non_stochastic_rejected(self):
        sp = binary_space(2)
        rows = tuple((F(1, 2), F(1, 4)) for _ in sp.databases)
        x = FullMechanism(sp, (0, 1), rows)
        with pytest.raises(StructuralError):
            obliviate(x)


class TestWorstCaseLoss:
    def test_oblivious_equals_plain_loss(self):
        sp = binary_space(3)
        g = truncated_geometric(ALPHA_HALF, 3)
        u = UserModel(prior=(F(1, 8), F(3, 8), F(3, 8), F(1, 8)),
                      loss=LossFunction(kind="squared"))
        assert worst_case_expected_loss(lift(g, sp), u) == expected_loss(g, u)

    def test_matches_enumeration_oracle(self):
        rng = random.Random(29)
        for n in (2, 3):
            sp = binary_space(n)
            for _ in range(10):
                x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
                u = random_user(rng, n)
                got = worst_case_expected_loss(x, u)
                want = adversarial_worst_loss(x, u, sp)
                assert agree(got, want, TOL)

    def test_point_mass_prior_reads_one_class(self):
        sp = binary_space(2)
        rng = random.Random(2)
        x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
        u = UserModel(prior=(F(0), F(1), F(0)),
                      loss=LossFunction(kind="absolute"))
        got = worst_case_expected_loss(x, u)
        assert agree(got, adversarial_worst_loss(x, u, sp), TOL)


class TestTwoUserInstance:
    def test_infeasible_with_verified_witness(self):
        t0 = time.perf_counter()
        cert = check_counterexample_infeasibility()
        dt = time.perf_counter() - t0
        assert cert.infeasible
        assert cert.verified
        assert dt < 1.0
        assert cert.num_variables == 32
        assert len(cert.nonzero_multipliers()) > 0

    def test_multiplier_labels_name_constraints(self):
        cert = check_counterexample_infeasibility()
        labels = [lbl for lbl, _ in cert.nonzero_multipliers()]
        assert any(lbl.startswith("privacy") for lbl in labels)

    def test_feasible_without_privacy(self):
        cert = check_counterexample_infeasibility(include_privacy=False)
        assert not cert.infeasible

    def test_feasible_for_either_user_alone(self):
        only_first = check_counterexample_infeasibility(include_second=False)
        only_second = check_counterexample_infeasibility(include_first=False)
        assert not only_first.infeasible
        assert not only_second.infeasible

    def test_infeasible_even_without_noise_requirement(self):
        cert = check_counterexample_infeasibility(alpha=F(1))
        assert cert.infeasible
        assert cert.verified

    def test_feasible_point_actually_satisfies_remap_rows(self):
        # with one user dropped, the solver's feasible point must honor
        # the other user's pinned rows
        nv, cons, labels, _ = build_counterexample_lp(include_second=False)
        res = solve_lp(nv, cons, [F(0)] * nv)
        assert res.status == "optimal"
        for con, lbl in zip(cons, labels):
            lhs = sum((c * v for c, v in zip(con.coeffs, res.x)), F(0))
            if con.relation == "==":
                assert lhs == con.rhs, lbl
            elif con.relation == "<=":
                assert lhs <= con.rhs, lbl
            else:
                assert lhs >= con.rhs, lbl


class TestSampler:
    def test_emits_exactly_private_mechanisms(self):
        rng = random.Random(55)
        sp = binary_space(3)
        for _ in range(10):
            x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
            assert check_full_row_stochastic(x).ok
            assert check_full_differential_privacy(x, ALPHA_HALF).ok

    def test_sampler_varies_rows_across_a_class(self):
        # non-oblivious on purpose: some class has two differing rows
        rng = random.Random(56)
        sp = binary_space(3)
        saw_non_oblivious = False
        for _ in range(10):
            x = random_dp_full_mechanism(rng, sp, ALPHA_HALF)
            for cls in sp.classes():
                if len({x.rows[j] for j in cls}) > 1:
                    saw_non_oblivious = True
        assert saw_non_oblivious
