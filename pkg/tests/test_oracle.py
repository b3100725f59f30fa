import random
from fractions import Fraction as F

import pytest

from helpers import count_designed, rand_normalized_pair, rand_tree
from trialpersuasion import dp, oracle, twophase
from trialpersuasion.model import Experiment, TrialTree, designed, determined, two_phase_tree

SINGLE_TREE = TrialTree(designed())
FIG_A, FIG_B = Experiment(F(4, 5), F(1, 5)), Experiment(F(7, 10), F(3, 10))


def obedient_value(tree, params, prior):
    return dp.evaluate_strategy(tree, dp.Strategy(params, {}, prior), prior, respond="obedient").sender_utility


class TestGridSearch:
    def test_single_phase(self):
        res = oracle.grid_search(SINGLE_TREE, F(1, 3), 60, 3)
        assert F(2, 3) - res.error_bound <= res.best_value <= F(2, 3)
        assert res.grid_resolution == 480
        assert res.refinement_rounds == 3
        assert res.error_bound == F(4, 480)

    def test_no_designed_nodes(self):
        tree = TrialTree(determined(F(4, 5), F(1, 5)))
        res = oracle.grid_search(tree, F(1, 2), 10, 2)
        assert res.best_params == {}
        assert res.error_bound == 0
        assert res.best_value == dp.root_curve(tree)(F(1, 2))

    def test_prior_zero(self):
        assert oracle.grid_search(SINGLE_TREE, F(0), 10).best_value == 0

    def test_best_value_is_evaluated(self):
        rng = random.Random(41)
        for _ in range(10):
            tree = TrialTree(rand_tree(rng, depth=3, max_designed=2))
            p = F(rng.randint(0, 10), 10)
            res = oracle.grid_search(tree, p, 6, 1)
            assert res.best_value == obedient_value(tree, res.best_params, p)

    def test_budget(self):
        tree = TrialTree(designed(designed(), designed()))
        with pytest.raises(oracle.GridBudgetError, match="10000000"):
            oracle.grid_search(tree, F(1, 2), 20)

    def test_monotone_in_resolution(self):
        rng = random.Random(42)
        for _ in range(10):
            tree = TrialTree(rand_tree(rng, depth=3, max_designed=1))
            p = F(rng.randint(0, 12), 12)
            assert oracle.grid_search(tree, p, 12).best_value >= oracle.grid_search(tree, p, 6).best_value

    def test_dominance(self):
        rng = random.Random(43)
        for _ in range(10):
            tree = TrialTree(rand_tree(rng, depth=3, max_designed=2))
            if count_designed(tree.root) == 2:
                resolution = 6
            else:
                resolution = 30
            p = F(rng.randint(0, 20), 20)
            value = dp.root_curve(tree)(p)
            res = oracle.grid_search(tree, p, resolution, 2)
            assert res.best_value <= value <= res.best_value + res.error_bound

    def test_deterministic(self):
        tree = two_phase_tree(FIG_A, FIG_B)
        assert oracle.grid_search(tree, F(1, 2), 20, 2) == oracle.grid_search(tree, F(1, 2), 20, 2)


class TestEnumerate:
    def test_trivial_first(self):
        res = oracle.enumerate_two_phase(Experiment(F(4, 5), F(4, 5)), FIG_B, F(1, 4))
        assert res.best_value == F(1, 2)
        assert res.error_bound == 0 and res.grid_resolution is None

    def test_saturation(self):
        assert oracle.enumerate_two_phase(FIG_A, FIG_B, F(9, 10)).best_value == 1

    def test_trade_off(self):
        ea, eb = Experiment(F(4, 5), F(1, 2)), Experiment(F(3, 4), F(3, 20))
        res = oracle.enumerate_two_phase(ea, eb, F(2, 3))
        assert res.best_value == F(43, 46)
        assert obedient_value(two_phase_tree(ea, eb), res.best_params, F(2, 3)) == F(43, 46)

    def test_matches_envelope(self):
        rng = random.Random(44)
        for _ in range(50):
            ea, eb = rand_normalized_pair(rng)
            opt = twophase.optimal_two_phase(ea, eb)
            for _ in range(20):
                p = F(rng.randint(0, 60), 60)
                assert oracle.enumerate_two_phase(ea, eb, p).best_value == opt(p)


def test_split_params():
    assert oracle.split_params(F(2, 3), F(1, 2), F(1, 3)) == (F(1), F(1, 2))
    assert oracle.split_params(F(1, 4), F(0), F(0)) == (F(1, 4), F(1, 4))
