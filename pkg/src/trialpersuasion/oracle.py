"""Brute-force checks for the dynamic program.

``grid_search`` tries every designed-parameter vector on a rational grid and
then refines around the best points; ``enumerate_two_phase`` tries every
split of a two-phase trial between a short list of candidate interim beliefs.
Both report values computed exactly by :func:`dp.evaluate_strategy` with the
receiver best-responding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Sequence, Tuple

from .dp import Strategy, evaluate_strategy
from .model import (
    ONE,
    ZERO,
    Designed,
    Determined,
    DeterminedNary,
    Experiment,
    Leaf,
    NodePath,
    TrialTree,
    as_rational,
    iter_nodes,
    two_phase_tree,
)
from .twophase import thresholds

GRID_BUDGET = 10**7
INCUMBENTS = 4


class GridBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best_value: Fraction
    best_params: Dict[NodePath, Tuple[Fraction, Fraction]]
    grid_resolution: Optional[int]
    refinement_rounds: int
    error_bound: Fraction


def _obedient_value(tree: TrialTree, params, prior: Fraction) -> Fraction:
    strategy = Strategy(dict(params), {}, prior)
    return evaluate_strategy(tree, strategy, prior, respond="obedient").sender_utility


class _CompiledTree:
    """Sender utility on an integer parameter grid using only integer arithmetic.

    Each leaf's joint mass under each state is a fixed rational times a
    product of designed-edge factors ``k`` or ``N - k`` (parameter ``k/N``).
    Scaling every leaf to a common denominator lets candidates be compared
    as integers; the receiver's best response compares the two state masses.
    """

    def __init__(self, tree: TrialTree, prior: Fraction, designed: List[NodePath]):
        index = {path: i for i, path in enumerate(designed)}
        raw = []

        def walk(node, path, c1, c2, factors):
            if isinstance(node, Leaf):
                raw.append((c1, c2, tuple(factors)))
                return
            if isinstance(node, Designed):
                i = index[path]
                walk(node.left, path + (0,), c1, c2, factors + [(i, 0)])
                walk(node.right, path + (1,), c1, c2, factors + [(i, 1)])
                return
            if isinstance(node, Determined):
                e = node.experiment
                outs = [(e.q1, e.q2), (ONE - e.q1, ONE - e.q2)]
            else:
                outs = list(zip(node.experiment.q1, node.experiment.q2))
            for k, ((a, b), child) in enumerate(zip(outs, node.children)):
                if a or b:
                    walk(child, path + (k,), c1 * a, c2 * b, factors)

        walk(tree.root, (), prior, ONE - prior, [])
        den = lcm(*[c.denominator for c1, c2, _ in raw for c in (c1, c2)]) if raw else 1
        self.depth = max((len(f) for _, _, f in raw), default=0)
        self.leaves = [
            (int(c1 * den), int(c2 * den), f, self.depth - len(f)) for c1, c2, f in raw
        ]

    def score(self, ks: Sequence[int], n: int) -> int:
        """Sender utility scaled by ``den * n**depth``; ``ks`` alternates p1, p2 numerators."""
        total = 0
        for m1, m2, factors, pad in self.leaves:
            for i, side in factors:
                k1, k2 = ks[2 * i], ks[2 * i + 1]
                if side:
                    k1, k2 = n - k1, n - k2
                m1 *= k1
                m2 *= k2
                if not (m1 or m2):
                    break
            if m1 >= m2 and (m1 or m2):
                total += (m1 + m2) * n**pad
        return total


def _designed_order(tree: TrialTree) -> List[NodePath]:
    return [p for p, node in iter_nodes(tree.root) if isinstance(node, Designed)]


def _rank(entries):
    # highest score first, then lexicographically smallest parameter vector
    return sorted(entries, key=lambda e: (-e[0], e[1]))


def grid_search(tree: TrialTree, prior, resolution: int, refinement: int = 0) -> OracleResult:
    """Exhaustive grid over all designed parameters, then local refinement.

    Error bound: with the other parameters fixed, moving one designed
    parameter shifts at most the whole unit mass between leaves in each of
    the two states, so the sender utility varies by at most 2 per parameter.
    The bound reported is ``2 * (number of parameters) / final_resolution``.
    """
    prior = as_rational(prior)
    if resolution < 1 or refinement < 0:
        raise ValueError("resolution must be >= 1 and refinement >= 0")
    designed = _designed_order(tree)
    nparams = 2 * len(designed)
    if (resolution + 1) ** nparams > GRID_BUDGET:
        raise GridBudgetError(
            f"grid of {(resolution + 1) ** nparams} points exceeds the limit of {GRID_BUDGET} "
            f"(resolution {resolution}, {nparams} parameters)"
        )
    compiled = _CompiledTree(tree, prior, designed)
    n = resolution * 2**refinement
    scale = 2**refinement

    scored = []
    for ks in itertools.product(range(resolution + 1), repeat=nparams):
        ks = tuple(k * scale for k in ks)
        scored.append((compiled.score(ks, n), ks))
    incumbents = _rank(scored)[:INCUMBENTS]
    seen = {ks for _, ks in scored}

    step = scale
    for _ in range(refinement):
        step //= 2
        fresh = []
        for _, centre in incumbents:
            ranges = [sorted({max(0, k - step), k, min(n, k + step)}) for k in centre]
            for ks in itertools.product(*ranges):
                if ks not in seen:
                    seen.add(ks)
                    fresh.append((compiled.score(ks, n), ks))
        incumbents = _rank(incumbents + fresh)[:INCUMBENTS]

    best = incumbents[0][1]
    params = {
        path: (Fraction(best[2 * i], n), Fraction(best[2 * i + 1], n))
        for i, path in enumerate(designed)
    }
    return OracleResult(
        best_value=_obedient_value(tree, params, prior),
        best_params=params,
        grid_resolution=n,
        refinement_rounds=refinement,
        error_bound=Fraction(2 * nparams, n),
    )


def split_params(y: Fraction, u: Fraction, w: Fraction) -> Tuple[Fraction, Fraction]:
    """Per-state probabilities of the left signal for split ``(y, u)`` at belief ``w``."""
    if w == 0 or w == 1:
        return y, y
    return y * u / w, y * (ONE - u) / (ONE - w)


def interim_candidates(e: Experiment, prior: Fraction) -> List[Fraction]:
    return sorted({*thresholds(e), ZERO, ONE, prior})


def enumerate_two_phase(ea: Experiment, eb: Experiment, prior) -> OracleResult:
    """Exact maximum over splits whose interim beliefs come from the candidate lists."""
    prior = as_rational(prior)
    tree = two_phase_tree(ea, eb)
    splits = {(ONE, prior), (ZERO, prior)}
    for u in interim_candidates(ea, prior):
        for v in interim_candidates(eb, prior):
            if u != v and min(u, v) <= prior <= max(u, v):
                splits.add(((prior - v) / (u - v), u))
    best = None
    for y, u in splits:
        params = split_params(y, u, prior)
        value = _obedient_value(tree, {(): params}, prior)
        key = (-value, params)
        if best is None or key < best[0]:
            best = (key, value, params)
    return OracleResult(best[1], {(): best[2]}, None, 0, ZERO)
