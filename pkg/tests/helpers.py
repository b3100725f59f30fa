"""Random instance generators shared by the tests."""

from fractions import Fraction as F
import random

from trialpersuasion import curve as cv
from trialpersuasion.model import (
    LEAF,
    Designed,
    Determined,
    DeterminedNary,
    Experiment,
    NaryExperiment,
    iter_nodes,
)


def rand_prob(rng: random.Random, den: int = 20) -> F:
    return F(rng.randint(0, den), den)


def rand_experiment(rng, den=20, nontrivial=False) -> Experiment:
    while True:
        e = Experiment(rand_prob(rng, den), rand_prob(rng, den))
        if not nontrivial or not e.is_trivial():
            return e


def rand_normalized(rng, den=20, nontrivial=False) -> Experiment:
    e = rand_experiment(rng, den, nontrivial)
    return e if e.q1 >= e.q2 else e.flipped()


def rand_normalized_pair(rng, den=20):
    a, b = rand_normalized(rng, den), rand_normalized(rng, den)
    return (a, b) if a.q1 >= b.q1 else (b, a)


def rand_distribution(rng, n, den=12, zeros=True):
    weights = [rng.randint(0 if zeros else 1, den) for _ in range(n)]
    if sum(weights) == 0:
        weights[rng.randrange(n)] = 1
    total = sum(weights)
    return tuple(F(w, total) for w in weights)


def rand_nary(rng, n) -> NaryExperiment:
    return NaryExperiment(rand_distribution(rng, n), rand_distribution(rng, n))


def rand_tree(rng, depth=3, max_designed=2, nary=False):
    """Random tree with at most ``max_designed`` designed nodes and the given depth bound."""
    budget = [max_designed]

    def build(d):
        if d == 0 or rng.random() < 0.2:
            return LEAF
        r = rng.random()
        if r < 0.45 and budget[0] > 0:
            budget[0] -= 1
            return Designed(build(d - 1), build(d - 1))
        if nary and r > 0.85:
            n = rng.randint(3, 4)
            return DeterminedNary(rand_nary(rng, n), tuple(build(d - 1) for _ in range(n)))
        return Determined(rand_experiment(rng), build(d - 1), build(d - 1))

    return build(depth)


def count_designed(root) -> int:
    return sum(isinstance(n, Designed) for _, n in iter_nodes(root))


def rand_usc_curve(rng, den=20, nbreaks=4) -> cv.ValueCurve:
    """Random step-and-slope curve with breakpoints on the ``1/den`` grid.

    Values stay in [0, 1]; each breakpoint value is at least both one-sided
    limits, as for every curve the solver produces.
    """
    inner = sorted(rng.sample(range(1, den), nbreaks))
    xs = [F(0)] + [F(k, den) for k in inner] + [F(1)]
    lines = []
    for lo, hi in zip(xs, xs[1:]):
        a, b = rand_prob(rng, 10), rand_prob(rng, 10)
        slope = (b - a) / (hi - lo)
        lines.append((slope, a - slope * lo))
    values = []
    for i, x in enumerate(xs):
        lims = []
        if i > 0:
            lims.append(cv.line_at(lines[i - 1], x))
        if i < len(lines):
            lims.append(cv.line_at(lines[i], x))
        top = max(lims)
        values.append(top if rng.random() < 0.7 else top + (1 - top) * rand_prob(rng, 4))
    return cv.ValueCurve.build(xs, lines, values)


def rand_continuous_curve(rng, nbreaks=5, den=97) -> cv.ValueCurve:
    inner = sorted(rng.sample(range(1, den), nbreaks))
    xs = [F(0)] + [F(k, den) for k in inner] + [F(1)]
    return cv.ValueCurve.from_vertices([(x, rand_prob(rng, 50)) for x in xs])


def rand_concave_curve(rng, den=20) -> cv.ValueCurve:
    pts = [(F(k, den), rand_prob(rng, 10)) for k in range(den + 1) if k in (0, den) or rng.random() < 0.3]
    return cv.upper_concave_envelope(cv.ValueCurve.from_vertices(pts))
