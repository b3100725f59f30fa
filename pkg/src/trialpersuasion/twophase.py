"""Closed-form machinery for two-phase trials.

A two-phase trial has a designed first phase sending the receiver to one of
two fixed experiments, A (left) or B (right). At each of them the sender's
recommendation can follow one of three patterns:

* ``ALPHA``: recommend ``phi1`` only after a pass,
* ``BETA``: recommend ``phi1`` after either outcome,
* ``GAMMA``: never recommend ``phi1``.

Everything here assumes normalized experiments (see
:func:`trialpersuasion.model.normalize_two_phase`).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

from . import curve as cv
from .dp import Action, Strategy
from .model import HALF, ONE, ZERO, Experiment, NodePath, SwapRecord, as_rational


class Pattern(enum.Enum):
    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"

    def __str__(self):
        return self.value


class Side(enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class InducedStrategy:
    kind: Pattern
    side: Side

    def __str__(self):
        return f"{self.kind}_{self.side.value}"


StrategyType = Tuple[Pattern, Pattern]
ALL_TYPES = tuple(itertools.product(Pattern, Pattern))
BBP_TYPES = (
    (Pattern.ALPHA, Pattern.GAMMA),
    (Pattern.BETA, Pattern.GAMMA),
    (Pattern.GAMMA, Pattern.ALPHA),
    (Pattern.GAMMA, Pattern.BETA),
)


def type_name(t: StrategyType) -> str:
    return f"{t[0]}_A/{t[1]}_B"


def _require_normalized(e: Experiment):
    if e.q1 < e.q2:
        raise ValueError(f"experiment {e} is not normalized (q1 < q2)")


@dataclass(frozen=True)
class PersuasionPotential:
    alpha_pot: Fraction
    beta_pot: Optional[Fraction]  # None when q2 = 1


def persuasion_potential(e: Experiment) -> PersuasionPotential:
    """Best value-to-belief ratios reachable through the alpha and beta patterns."""
    _require_normalized(e)
    beta = None if e.q2 == 1 else ONE + (ONE - e.q1) / (ONE - e.q2)
    return PersuasionPotential(2 * e.q1, beta)


def thresholds(e: Experiment) -> Tuple[Fraction, Fraction]:
    """Lowest interim beliefs at which a pass, resp. a fail, still leaves posterior 1/2.

    A 0/0 case (experiment (0,0) or (1,1)) is reported as 1/2.
    """
    _require_normalized(e)
    den_a = e.q1 + e.q2
    den_b = 2 - e.q1 - e.q2
    alpha_low = e.q2 / den_a if den_a else HALF
    beta_low = (ONE - e.q2) / den_b if den_b else HALF
    return alpha_low, beta_low


# ---------------------------------------------------------------------------
# incentive constraints


def _ic_coefficients(ind: InducedStrategy, ea: Experiment, eb: Experiment):
    """Outcome probabilities whose posterior the pattern needs on the right side of 1/2."""
    e = ea if ind.side is Side.A else eb
    if ind.kind is Pattern.BETA:
        return ONE - e.q1, ONE - e.q2
    return e.q1, e.q2


def ic_requirement(ind: InducedStrategy, ea: Experiment, eb: Experiment, p, p1, p2) -> bool:
    """Primary incentive constraint of an induced strategy, in cross-multiplied form.

    ``p1``/``p2`` are the probabilities of sending the receiver to A under
    each state. Alpha and beta need the pass (resp. fail) posterior at least
    1/2; gamma needs the pass posterior at most 1/2.
    """
    p, p1, p2 = as_rational(p), as_rational(p1), as_rational(p2)
    if p <= 0 or p >= 1:
        raise ValueError("incentive constraints are stated for priors strictly inside (0,1)")
    a, b = _ic_coefficients(ind, ea, eb)
    if ind.side is Side.B:
        p1, p2 = ONE - p1, ONE - p2
    lhs = p * a * p1
    rhs = (ONE - p) * b * p2
    if ind.kind is Pattern.GAMMA:
        return lhs <= rhs
    return lhs >= rhs


def tight_params(kind_a: Pattern, kind_b: Pattern, ea: Experiment, eb: Experiment, p) -> Optional[Tuple[Fraction, Fraction]]:
    """``(p1, p2)`` making both primary constraints hold with equality, or ``None`` if singular."""
    p = as_rational(p)
    a1, a2 = _ic_coefficients(InducedStrategy(kind_a, Side.A), ea, eb)
    b1, b2 = _ic_coefficients(InducedStrategy(kind_b, Side.B), ea, eb)
    # p*a1*x = (1-p)*a2*y  and  p*b1*(1-x) = (1-p)*b2*(1-y)
    m11, m12, r1 = p * a1, -(ONE - p) * a2, ZERO
    m21, m22, r2 = p * b1, -(ONE - p) * b2, p * b1 - (ONE - p) * b2
    det = m11 * m22 - m12 * m21
    if det == 0:
        return None
    x = (r1 * m22 - m12 * r2) / det
    y = (m11 * r2 - r1 * m21) / det
    return x, y


# ---------------------------------------------------------------------------
# value curves per strategy type


def one_sided(kind: Pattern, e: Experiment):
    """Continuation value of a pattern at ``e`` and the interim beliefs where it is incentive compatible."""
    alpha_low, beta_low = thresholds(e)
    if kind is Pattern.ALPHA:
        return cv.ValueCurve.linear(e.q1 - e.q2, e.q2), (alpha_low, beta_low)
    if kind is Pattern.BETA:
        return cv.ValueCurve.constant(ONE), (beta_low, ONE)
    return cv.ValueCurve.constant(ZERO), (ZERO, alpha_low)


def type_curve(t: StrategyType, ea: Experiment, eb: Experiment) -> cv.ValueCurve:
    """Best sender value using pattern ``t[0]`` at A and ``t[1]`` at B (0 where infeasible)."""
    _require_normalized(ea)
    _require_normalized(eb)
    left, left_dom = one_sided(t[0], ea)
    right, right_dom = one_sided(t[1], eb)
    curve, _ = cv.designed_combine(left, right, left_dom, right_dom)
    return curve


def type_curves(ea: Experiment, eb: Experiment) -> Dict[StrategyType, cv.ValueCurve]:
    return {t: type_curve(t, ea, eb) for t in ALL_TYPES}


def optimal_two_phase(ea: Experiment, eb: Experiment) -> cv.ValueCurve:
    """Upper envelope of the nine strategy-type curves."""
    return cv.pointwise_max_all(list(type_curves(ea, eb).values()))


def bbp_optimal(ea: Experiment, eb: Experiment) -> cv.ValueCurve:
    """Best value when one experiment is used and the other signal is left uninformative."""
    return cv.pointwise_max_all([type_curve(t, ea, eb) for t in BBP_TYPES])


# ---------------------------------------------------------------------------
# strategy inspection and relabelling


def induced_pattern(strategy: Strategy, side: int) -> Pattern:
    """Pattern used at child ``side`` (0 = A, 1 = B) of a two-phase strategy."""
    on_pass = strategy.leaf_actions[(side, 0)]
    on_fail = strategy.leaf_actions[(side, 1)]
    if on_pass is Action.PHI1 and on_fail is Action.PHI1:
        return Pattern.BETA
    if on_pass is Action.PHI1:
        return Pattern.ALPHA
    if on_fail is Action.PHI1:
        # the pass outcome is unreachable, so phi1 is recommended whenever reached
        return Pattern.BETA
    return Pattern.GAMMA


def denormalize_strategy(strategy: Strategy, record: SwapRecord) -> Strategy:
    """Map a strategy for the normalized pair back onto the caller's tree."""
    params: Dict[NodePath, Tuple[Fraction, Fraction]] = {}
    for path, (p1, p2) in strategy.designed_params.items():
        params[path] = (ONE - p1, ONE - p2) if (record.swapped and path == ()) else (p1, p2)
    actions = {}
    for (side, outcome), action in strategy.leaf_actions.items():
        original_side = 1 - side if record.swapped else side
        flipped = record.flip_first if original_side == 0 else record.flip_second
        actions[(original_side, 1 - outcome if flipped else outcome)] = action
    return Strategy(params, actions, strategy.prior)
