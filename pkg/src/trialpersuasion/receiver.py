"""Receiver-side choice of the second fixed experiment.

The receiver picks experiment B from a finite list, knowing only that the
prior lies in ``[a, b]``, and then the sender plays optimally. The receiver
wants the choice with the best worst-case chance of acting correctly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from . import dp
from .model import ONE, ZERO, Experiment, as_rational, two_phase_tree

REVEALING = Experiment(ONE, ZERO)


class InferiorityUndefined(ValueError):
    pass


class ConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class CandidateSet:
    fixed: Experiment
    candidates: Tuple[Experiment, ...]
    prior_range: Tuple[Fraction, Fraction]

    def __post_init__(self):
        cands = tuple(self.candidates)
        object.__setattr__(self, "candidates", cands)
        a, b = (as_rational(x) for x in self.prior_range)
        object.__setattr__(self, "prior_range", (a, b))
        if not cands:
            raise ValueError("candidate list is empty")
        if not ZERO <= a <= b <= ONE:
            raise ValueError("prior range must satisfy 0 <= a <= b <= 1")
        for e in cands:
            if e.q1 < e.q2:
                raise ValueError(f"candidate {e} passes less often under state 1 than state 2")


def full_control_optimum() -> Tuple[Experiment, Experiment]:
    """If the receiver could choose both fixed experiments: reveal the state on both."""
    return REVEALING, REVEALING


def _fail_ratio(e: Experiment) -> Fraction:
    if e.q2 == 1:
        raise InferiorityUndefined(f"inferiority test undefined for {e} (q2 = 1)")
    return (ONE - e.q1) / (ONE - e.q2)


def is_inferior(ex: Experiment, ey: Experiment) -> bool:
    """Whether ``ex`` is inferior to ``ey`` by the two sufficient conditions, applied as stated.

    Pairs passing the test reliably give the sender at least as much value
    with ``ey`` at every prior; the receiver's realized utility can still be
    lower with ``ey`` at some priors.
    """
    rx, ry = _fail_ratio(ex), _fail_ratio(ey)
    cutoff = (2 - ey.q2) / (3 - 2 * ey.q2)
    if ey.q1 <= cutoff:
        return max(2 * ex.q1 - 1, rx) < ry
    return ex.q1 < ey.q1 and rx < ry


def check_inferiority_consistency(ex: Experiment, ey: Experiment) -> None:
    if is_inferior(ex, ey) and is_inferior(ey, ex):
        raise ConsistencyError(f"{ex} and {ey} are each inferior to the other")


def pareto_filter(cset: CandidateSet) -> List[Experiment]:
    """Drop every candidate that is inferior to some other candidate of the set."""
    cands = cset.candidates
    return [
        x
        for i, x in enumerate(cands)
        if not any(j != i and is_inferior(x, y) for j, y in enumerate(cands))
    ]


@dataclass(frozen=True)
class CandidateReport:
    experiment: Experiment
    worst_case: Fraction
    worst_prior: Fraction
    evaluated: int


@dataclass(frozen=True)
class Selection:
    winner: Experiment
    worst_case_utility: Fraction
    table: Tuple[CandidateReport, ...]
    filtered_out: Tuple[Experiment, ...]


def evaluation_priors(curve, lo: Fraction, hi: Fraction, grid: int) -> List[Fraction]:
    pts = {lo, hi}
    pts.update(x for x in curve.xs if lo <= x <= hi)
    pts.update(lo + (hi - lo) * Fraction(k, grid - 1) for k in range(grid))
    return sorted(pts)


def worst_case_receiver(fixed: Experiment, candidate: Experiment, lo, hi, grid: int, ties="canonical"):
    tree = two_phase_tree(fixed, candidate)
    solution = dp.solve(tree)
    priors = evaluation_priors(solution.root, lo, hi, grid)
    values = [(dp.receiver_value(tree, p, solution, ties), p) for p in priors]
    worst, at = min(values)
    return worst, at, len(priors)


def maximin_select(cset: CandidateSet, grid: int, pessimal: bool = False) -> Selection:
    """Candidate maximizing the minimum receiver utility over the prior range.

    Inferior candidates are dropped first. The minimum is taken over the
    range endpoints, the breakpoints of the sender's value curve inside the
    range and ``grid`` evenly spaced priors. Ties go to the earlier candidate.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    effective = pareto_filter(cset)
    if not effective:
        raise ValueError("no candidate survives the inferiority filter")
    lo, hi = cset.prior_range
    ties = "pessimal" if pessimal else "canonical"
    table = []
    for e in effective:
        worst, at, count = worst_case_receiver(cset.fixed, e, lo, hi, grid, ties)
        table.append(CandidateReport(e, worst, at, count))
    best = table[0]
    for row in table[1:]:
        if row.worst_case > best.worst_case:
            best = row
    dropped = tuple(e for e in cset.candidates if e not in effective)
    return Selection(best.experiment, best.worst_case, tuple(table), dropped)
