"""Backward induction over value curves, strategy extraction and exact evaluation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import curve as cv
from .model import (
    HALF,
    ONE,
    ZERO,
    Designed,
    Determined,
    DeterminedNary,
    Leaf,
    Node,
    NodePath,
    TrialTree,
    as_rational,
    format_path,
    format_rational,
)


class Action(enum.Enum):
    PHI1 = "phi1"
    PHI2 = "phi2"

    def __str__(self):
        return self.value


def obedient_action(posterior: Optional[Fraction]) -> Action:
    """Receiver's best response; indifference goes to the recommended ``phi1``."""
    if posterior is not None and posterior >= HALF:
        return Action.PHI1
    return Action.PHI2


@dataclass
class Solution:
    """Value curve of every node and split extractors of the designed nodes."""

    curves: Dict[NodePath, cv.ValueCurve]
    extractors: Dict[NodePath, cv.SplitExtractor]

    @property
    def root(self) -> cv.ValueCurve:
        return self.curves[()]


def _outcomes(node: Node):
    """State-conditional probabilities of each outcome of a determined node."""
    if isinstance(node, Determined):
        e = node.experiment
        return [(e.q1, e.q2), (ONE - e.q1, ONE - e.q2)]
    e = node.experiment
    return list(zip(e.q1, e.q2))


def solve(tree: TrialTree) -> Solution:
    curves: Dict[NodePath, cv.ValueCurve] = {}
    extractors: Dict[NodePath, cv.SplitExtractor] = {}

    def visit(node: Node, path: NodePath) -> cv.ValueCurve:
        kids = [visit(c, path + (i,)) for i, c in enumerate(node.children)]
        if isinstance(node, Leaf):
            result = cv.leaf_curve()
        elif isinstance(node, Determined):
            result = cv.determined_transform(node.experiment, kids[0], kids[1])
        elif isinstance(node, DeterminedNary):
            result = cv.determined_transform_nary(node.experiment, kids)
        else:
            result, extractors[path] = cv.designed_combine(kids[0], kids[1])
        curves[path] = result
        return result

    visit(tree.root, ())
    return Solution(curves, extractors)


def solve_curve(tree: TrialTree) -> Dict[NodePath, cv.ValueCurve]:
    return solve(tree).curves


def root_curve(tree: TrialTree) -> cv.ValueCurve:
    return solve(tree).root


# ---------------------------------------------------------------------------
# strategies


@dataclass
class Strategy:
    designed_params: Dict[NodePath, Tuple[Fraction, Fraction]]
    leaf_actions: Dict[NodePath, Action]
    prior: Fraction
    splits: Dict[NodePath, cv.SplitChoice] = field(default_factory=dict)


def _posterior(m1: Fraction, m2: Fraction) -> Optional[Fraction]:
    total = m1 + m2
    return None if total == 0 else m1 / total


def _continuation_receiver(node: Node, w: Fraction, choose) -> Fraction:
    """Receiver utility from ``node`` on, given belief ``w`` and a split rule."""
    if isinstance(node, Leaf):
        return w if w >= HALF else ONE - w
    if isinstance(node, Designed):
        return choose(node, w)[1]
    total = ZERO
    for (a, b), child in zip(_outcomes(node), node.children):
        prob = w * a + (ONE - w) * b
        if prob:
            total += prob * _continuation_receiver(child, w * a / prob, choose)
    return total


class _PessimalChooser:
    """Among sender-optimal splits, pick the one worst for the receiver."""

    def __init__(self, solution: Solution, path_of: Dict[int, NodePath]):
        self._solution = solution
        self._path_of = path_of
        self._memo: Dict[Tuple[NodePath, Fraction], Tuple[cv.SplitChoice, Fraction]] = {}

    def __call__(self, node: Designed, w: Fraction):
        path = self._path_of[id(node)]
        key = (path, w)
        if key not in self._memo:
            best = None
            for choice in self._solution.extractors[path].maximizers(w):
                value = ZERO
                if choice.y:
                    value += choice.y * _continuation_receiver(node.left, choice.u, self)
                if choice.y != 1:
                    value += (ONE - choice.y) * _continuation_receiver(node.right, choice.v, self)
                if best is None or value < best[1]:
                    best = (choice, value)
            self._memo[key] = best
        return self._memo[key]


def extract_strategy(
    tree: TrialTree,
    prior,
    solution: Optional[Solution] = None,
    ties: str = "canonical",
) -> Strategy:
    """Forward pass turning the optimal splits into designed-node parameters.

    Nodes that are reached with probability zero still get parameters (the
    optimal split at the belief they would inherit), so the strategy stays
    complete if the tree is later perturbed. Their leaves recommend ``phi2``.
    """
    prior = as_rational(prior)
    if solution is None:
        solution = solve(tree)
    if ties not in ("canonical", "pessimal"):
        raise ValueError("ties must be 'canonical' or 'pessimal'")
    path_of = {id(n): p for p, n in _iter_with_ids(tree.root)}
    pessimal = _PessimalChooser(solution, path_of) if ties == "pessimal" else None

    params: Dict[NodePath, Tuple[Fraction, Fraction]] = {}
    actions: Dict[NodePath, Action] = {}
    splits: Dict[NodePath, cv.SplitChoice] = {}

    def walk(node: Node, path: NodePath, w: Fraction, reached: bool):
        if isinstance(node, Leaf):
            actions[path] = obedient_action(w) if reached else Action.PHI2
            return
        if isinstance(node, Designed):
            if pessimal is not None:
                choice = pessimal(node, w)[0]
            else:
                choice = solution.extractors[path](w)
            splits[path] = choice
            y, u, v = choice.y, choice.u, choice.v
            if w == 0 or w == 1:
                params[path] = (y, y)
            else:
                params[path] = (y * u / w, y * (ONE - u) / (ONE - w))
            walk(node.left, path + (0,), u, reached and y > 0)
            walk(node.right, path + (1,), v, reached and y < 1)
            return
        for i, ((a, b), child) in enumerate(zip(_outcomes(node), node.children)):
            prob = w * a + (ONE - w) * b
            belief = w * a / prob if prob else w
            walk(child, path + (i,), belief, reached and prob > 0)

    walk(tree.root, (), prior, True)
    return Strategy(params, actions, prior, splits)


def _iter_with_ids(root: Node, path: NodePath = ()):
    yield path, root
    for i, c in enumerate(root.children):
        yield from _iter_with_ids(c, path + (i,))


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class LeafOutcome:
    path: NodePath
    mass1: Fraction
    mass2: Fraction
    posterior: Optional[Fraction]
    action: Action
    recommended: Action


@dataclass(frozen=True)
class Evaluation:
    sender_utility: Fraction
    receiver_utility: Fraction
    leaf_table: Tuple[LeafOutcome, ...]
    ic_violations: Tuple[NodePath, ...]

    @property
    def obedient(self) -> bool:
        return not self.ic_violations


class MissingParameterError(ValueError):
    pass


def evaluate_strategy(
    tree: TrialTree,
    strategy: Strategy,
    prior=None,
    respond: str = "strategy",
) -> Evaluation:
    """Exact utilities of a committed strategy.

    ``respond="strategy"`` has the receiver follow the recommended actions;
    ``respond="obedient"`` has the receiver best-respond at every leaf
    regardless of the recommendation. Either way, leaves with positive mass
    whose recommendation is not a best response are listed as IC violations.
    """
    if respond not in ("strategy", "obedient"):
        raise ValueError("respond must be 'strategy' or 'obedient'")
    prior = strategy.prior if prior is None else as_rational(prior)
    leaves: List[LeafOutcome] = []

    def walk(node: Node, path: NodePath, m1: Fraction, m2: Fraction):
        if isinstance(node, Leaf):
            post = _posterior(m1, m2)
            best = obedient_action(post)
            recommended = strategy.leaf_actions.get(path, best)
            action = best if respond == "obedient" else recommended
            leaves.append(LeafOutcome(path, m1, m2, post, action, recommended))
            return
        if isinstance(node, Designed):
            if path in strategy.designed_params:
                p1, p2 = strategy.designed_params[path]
            elif m1 + m2 == 0:
                p1 = p2 = ZERO
            else:
                raise MissingParameterError(f"no parameters for designed node {format_path(path)}")
            walk(node.left, path + (0,), m1 * p1, m2 * p2)
            walk(node.right, path + (1,), m1 * (ONE - p1), m2 * (ONE - p2))
            return
        for i, ((a, b), child) in enumerate(zip(_outcomes(node), node.children)):
            walk(child, path + (i,), m1 * a, m2 * b)

    walk(tree.root, (), prior, ONE - prior)
    sender = sum((lf.mass1 + lf.mass2 for lf in leaves if lf.action is Action.PHI1), ZERO)
    receiver = sum(
        (lf.mass1 if lf.action is Action.PHI1 else lf.mass2 for lf in leaves), ZERO
    )
    violations = tuple(
        lf.path
        for lf in leaves
        if lf.mass1 + lf.mass2 > 0 and lf.recommended is not obedient_action(lf.posterior)
    )
    return Evaluation(sender, receiver, tuple(leaves), violations)


def receiver_value(tree: TrialTree, prior, solution: Optional[Solution] = None, ties: str = "canonical") -> Fraction:
    """Receiver utility when the sender plays the extracted optimal strategy."""
    strategy = extract_strategy(tree, prior, solution, ties)
    return evaluate_strategy(tree, strategy, prior).receiver_utility


def receiver_value_samples(tree: TrialTree, priors: Sequence, ties: str = "canonical") -> List[Fraction]:
    solution = solve(tree)
    return [receiver_value(tree, p, solution, ties) for p in priors]


def strategy_report(tree: TrialTree, strategy: Strategy, evaluation: Evaluation) -> dict:
    """JSON-ready summary keyed by path strings, rationals as ``a/b``."""
    return {
        "prior": format_rational(strategy.prior),
        "sender_utility": format_rational(evaluation.sender_utility),
        "receiver_utility": format_rational(evaluation.receiver_utility),
        "designed_params": {
            format_path(p): [format_rational(a), format_rational(b)]
            for p, (a, b) in sorted(strategy.designed_params.items())
        },
        "leaf_actions": {format_path(p): str(a) for p, a in sorted(strategy.leaf_actions.items())},
        "leaves": [
            {
                "path": format_path(lf.path),
                "mass_state1": format_rational(lf.mass1),
                "mass_state2": format_rational(lf.mass2),
                "posterior": None if lf.posterior is None else format_rational(lf.posterior),
                "action": str(lf.action),
            }
            for lf in evaluation.leaf_table
        ],
        "ic_violations": [format_path(p) for p in evaluation.ic_violations],
    }
