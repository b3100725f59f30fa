import math
import random
from fractions import Fraction as F

import pytest

from helpers import rand_concave_curve, rand_continuous_curve, rand_experiment, rand_nary, rand_tree, rand_usc_curve
from trialpersuasion import curve as cv
from trialpersuasion import dp
from trialpersuasion.model import Experiment, NaryExperiment, TrialTree

LEAF_CURVE = cv.leaf_curve()
SINGLE = cv.single_phase_curve()
FINE = [F(k, 240) for k in range(241)]


def two_point_grid_max(left, right, p, den):
    """Best y*left(u) + (1-y)*right(v) with u, v on the 1/den grid and p between them."""
    pts = [F(k, den) for k in range(den + 1)]
    lv = [left(x) for x in pts]
    rv = [right(x) for x in pts]
    best = max(left(p), right(p))
    for i, u in enumerate(pts):
        for j, v in enumerate(pts):
            if u == v or not (min(u, v) <= p <= max(u, v)):
                continue
            y = (v - p) / (v - u)
            best = max(best, y * lv[i] + (1 - y) * rv[j])
    return best


class TestValueCurve:
    def test_leaf_curve(self):
        assert LEAF_CURVE(0) == 0
        assert LEAF_CURVE(F(1, 2)) == 1
        assert LEAF_CURVE(F(3, 4)) == 1
        assert LEAF_CURVE(F(49, 100)) == 0

    def test_breakpoint_convention_detected(self):
        low = cv.ValueCurve.build([F(0), F(1, 2), F(1)], [(F(0), F(0)), (F(0), F(1))], [F(0), F(0), F(1)])
        assert not low.is_upper_semicontinuous()
        assert LEAF_CURVE.is_upper_semicontinuous()

    def test_malformed_breakpoints(self):
        with pytest.raises(ValueError):
            cv.ValueCurve((F(0), F(1, 2)), ((F(0), F(0)),), (F(0), F(0)))
        with pytest.raises(ValueError):
            cv.ValueCurve((F(0), F(1)), (), (F(0), F(0)))

    def test_canonical_merge(self):
        c = cv.ValueCurve.from_vertices([(F(0), F(0)), (F(1, 4), F(1, 4)), (F(1), F(1))])
        assert c.xs == (F(0), F(1))
        assert c == cv.ValueCurve.linear(1, 0)

    def test_eval_single_phase(self):
        assert SINGLE(F(1, 3)) == F(2, 3)
        assert SINGLE.within_sender_bound()

    def test_pointwise_max_idempotent(self):
        assert cv.pointwise_max(LEAF_CURVE, LEAF_CURVE) == LEAF_CURVE

    def test_envelope_of_leaf(self):
        assert cv.upper_concave_envelope(LEAF_CURVE) == SINGLE

    def test_sample_ratio(self):
        rows = cv.sample(SINGLE, 5)
        assert [r[0] for r in rows] == [F(0), F(1, 4), F(1, 2), F(3, 4), F(1)]
        assert rows[0][2] == 2  # right slope at 0
        assert rows[3] == (F(3, 4), F(1), F(4, 3))

    def test_pointwise_max_matches_samples(self):
        rng = random.Random(1)
        for _ in range(30):
            a, b = rand_usc_curve(rng), rand_usc_curve(rng)
            m = cv.pointwise_max(a, b)
            assert m.is_upper_semicontinuous()
            assert all(m(p) == max(a(p), b(p)) for p in FINE)


class TestDeterminedTransform:
    def test_trivial_experiment(self):
        c = cv.determined_transform(Experiment(F(1, 2), F(1, 2)), LEAF_CURVE, LEAF_CURVE)
        assert c == LEAF_CURVE

    def test_full_revelation(self):
        c = cv.determined_transform(Experiment(F(1), F(0)), LEAF_CURVE, LEAF_CURVE)
        assert c == cv.ValueCurve.linear(1, 0)

    def test_four_fifths_one_fifth(self):
        c = cv.determined_transform(Experiment(F(4, 5), F(1, 5)), LEAF_CURVE, LEAF_CURVE)
        assert c.xs == (F(0), F(1, 5), F(4, 5), F(1))
        assert c(F(1, 10)) == 0
        assert c(F(1, 5)) == F(8, 25)
        assert c(F(1, 2)) == F(1, 5) + F(3, 5) * F(1, 2)
        assert c(F(4, 5)) == 1

    def test_trivial_is_mixture(self):
        rng = random.Random(2)
        for _ in range(20):
            a, b = rand_usc_curve(rng), rand_usc_curve(rng)
            c = rng.randint(0, 10)
            e = Experiment(F(c, 10), F(c, 10))
            t = cv.determined_transform(e, a, b)
            assert all(t(p) == e.q1 * a(p) + (1 - e.q1) * b(p) for p in FINE)

    def test_matches_direct_formula(self):
        rng = random.Random(3)
        for _ in range(30):
            e = rand_experiment(rng)
            a, b = rand_usc_curve(rng), rand_usc_curve(rng)
            t = cv.determined_transform(e, a, b)
            for p in FINE[::4]:
                pp = p * e.q1 + (1 - p) * e.q2
                pf = 1 - pp
                want = (pp * a(p * e.q1 / pp) if pp else 0) + (pf * b(p * (1 - e.q1) / pf) if pf else 0)
                assert t(p) == want

    def test_nary_arity_two(self):
        rng = random.Random(4)
        for _ in range(10):
            e = rand_experiment(rng)
            a, b = rand_usc_curve(rng), rand_usc_curve(rng)
            ne = NaryExperiment((e.q1, 1 - e.q1), (e.q2, 1 - e.q2))
            assert cv.determined_transform_nary(ne, [a, b]) == cv.determined_transform(e, a, b)

    def test_nary_uniform_trivial(self):
        third = (F(1, 3),) * 3
        assert cv.determined_transform_nary(NaryExperiment(third, third), [LEAF_CURVE] * 3) == LEAF_CURVE

    def test_nary_three_outcomes(self):
        e = NaryExperiment((F(1, 2), F(1, 2), F(0)), (F(0), F(1, 2), F(1, 2)))
        c = cv.determined_transform_nary(e, [LEAF_CURVE] * 3)
        # outcome 1 is uninformative, outcome 2 only under state 2: posteriors cross 1/2 at 0 and 1/2
        for p in FINE:
            want = (p / 2 if p > 0 else 0) + (F(1, 2) if p >= F(1, 2) else 0)
            assert c(p) == want


class TestDesignedCombine:
    def test_two_leaves(self):
        g, ext = cv.designed_combine(LEAF_CURVE, LEAF_CURVE)
        assert g == SINGLE
        assert ext(F(1, 3)) == cv.SplitChoice(F(2, 3), F(1, 2), F(0))

    def test_identical_concave(self):
        rng = random.Random(5)
        for _ in range(20):
            c = rand_concave_curve(rng)
            assert cv.designed_combine(c, c)[0] == c

    def test_screening_example(self):
        left = cv.determined_transform(Experiment(F(4, 5), F(1, 5)), LEAF_CURVE, LEAF_CURVE)
        assert cv.designed_combine(left, LEAF_CURVE)[0] == SINGLE

    def test_sandwich_symmetry_and_extraction(self):
        rng = random.Random(6)
        for _ in range(40):
            a, b = rand_usc_curve(rng), rand_usc_curve(rng)
            g, ext = cv.designed_combine(a, b)
            g2, _ = cv.designed_combine(b, a)
            assert g == g2
            m = cv.pointwise_max(a, b)
            hull = cv.upper_concave_envelope(m)
            assert g.is_upper_semicontinuous()
            for p in FINE[::3]:
                assert m(p) <= g(p) <= hull(p)
                s = ext(p)
                assert s.y * s.u + (1 - s.y) * s.v == p
                assert s.y * a(s.u) + (1 - s.y) * b(s.v) == g(p)

    def test_concave_inputs_reach_the_envelope(self):
        rng = random.Random(7)
        for _ in range(30):
            a, b = rand_concave_curve(rng), rand_concave_curve(rng)
            g, _ = cv.designed_combine(a, b)
            assert g == cv.upper_concave_envelope(cv.pointwise_max(a, b))

    def test_exact_grid_agreement(self):
        # breakpoints on the 1/20 grid, so the 1/40 grid contains every optimal chord endpoint
        rng = random.Random(8)
        for _ in range(8):
            a, b = rand_usc_curve(rng), rand_usc_curve(rng)
            g, _ = cv.designed_combine(a, b)
            for k in rng.sample(range(41), 4):
                p = F(k, 40)
                assert g(p) == two_point_grid_max(a, b, p, 40)

    def test_lipschitz_grid_bound(self):
        rng = random.Random(9)
        den = 400
        h = 1 / den
        for _ in range(5):
            a, b = rand_continuous_curve(rng), rand_continuous_curve(rng)
            g, _ = cv.designed_combine(a, b)
            lip = float(max(abs(s) for s, _ in a.lines + b.lines))
            bound = math.sqrt(2 * lip * h) + lip * h
            grid = [k / den for k in range(den + 1)]
            av = [float(a(F(k, den))) for k in range(den + 1)]
            bv = [float(b(F(k, den))) for k in range(den + 1)]
            for k in (37, 200, 333):
                best = max(av[k], bv[k])
                for i in range(k + 1):
                    for j in range(k, den + 1):
                        if i == j:
                            continue
                        y = (grid[j] - grid[k]) / (grid[j] - grid[i])
                        best = max(best, y * av[i] + (1 - y) * bv[j], y * bv[i] + (1 - y) * av[j])
                value = float(g(F(k, den)))
                assert best <= value + 1e-9
                assert value - best <= bound

    def test_domains_restrict_beliefs(self):
        lo, hi = F(1, 4), F(3, 4)
        g, ext = cv.designed_combine(LEAF_CURVE, LEAF_CURVE, (lo, hi), None)
        for p in FINE[::5]:
            for s in ext.maximizers(p):
                if s.y > 0:
                    assert lo <= s.u <= hi

    def test_tie_break_is_deterministic(self):
        g, ext = cv.designed_combine(LEAF_CURVE, LEAF_CURVE)
        assert ext(F(1, 3)) == ext.maximizers(F(1, 3))[0]
        assert ext.maximizers(F(1, 3)) == sorted(ext.maximizers(F(1, 3)), reverse=True)


class TestNaryCombine:
    def test_two_children(self):
        rng = random.Random(10)
        a, b = rand_usc_curve(rng), rand_usc_curve(rng)
        assert cv.designed_combine_nary([a, b]) == cv.designed_combine(a, b)[0]

    def test_three_leaves(self):
        assert cv.designed_combine_nary([LEAF_CURVE] * 3) == SINGLE

    def test_leaf_and_zeros(self):
        assert cv.designed_combine_nary([LEAF_CURVE, cv.ZERO_CURVE, cv.ZERO_CURVE]) == SINGLE

    def test_pairwise_grid(self):
        # with posteriors fixed the weights solve a two-constraint LP, so some
        # optimum puts mass on at most two children
        rng = random.Random(11)
        for _ in range(3):
            cs = [rand_usc_curve(rng, den=10, nbreaks=2) for _ in range(3)]
            g = cv.designed_combine_nary(cs)
            p = F(rng.randint(0, 20), 20)
            best = max(
                two_point_grid_max(cs[i], cs[j], p, 20)
                for i in range(3)
                for j in range(3)
                if i != j
            )
            assert g(p) == best


class TestInvariants:
    def test_tree_curves_satisfy_invariants(self):
        rng = random.Random(12)
        for _ in range(150):
            tree = TrialTree(rand_tree(rng, depth=4, max_designed=3, nary=True))
            for c in dp.solve_curve(tree).values():
                assert c.within_sender_bound()
                assert c.is_upper_semicontinuous()
                assert c.is_nondecreasing()
                assert all(0 <= v <= 1 for v in c.values)

    def test_root_bound(self):
        rng = random.Random(13)
        for _ in range(100):
            root = dp.root_curve(TrialTree(rand_tree(rng, depth=4, max_designed=3)))
            assert root.within_sender_bound()

    def test_nary_transform_via_random_children(self):
        rng = random.Random(14)
        for _ in range(10):
            n = rng.randint(2, 5)
            e = rand_nary(rng, n)
            kids = [rand_usc_curve(rng) for _ in range(n)]
            t = cv.determined_transform_nary(e, kids)
            for p in FINE[::6]:
                want = F(0)
                for a, b, c in zip(e.q1, e.q2, kids):
                    pr = p * a + (1 - p) * b
                    if pr:
                        want += pr * c(p * a / pr)
                assert t(p) == want
