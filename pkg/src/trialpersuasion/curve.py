"""Piecewise-linear sender value curves on the belief interval [0, 1].

A curve stores its breakpoints, one line per open interval between
consecutive breakpoints, and the value attained exactly at each breakpoint.
Jumps are allowed; the stored breakpoint value is the value the sender really
gets there (for curves built from leaves this is the larger one-sided limit).
Curves are kept in a canonical form, so two curves are equal as functions iff
they compare equal as objects.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .model import HALF, ONE, ZERO, Experiment, NaryExperiment, as_rational

Line = Tuple[Fraction, Fraction]  # (slope, intercept)
Vertex = Tuple[Fraction, Fraction]  # (x, value)


def line_at(line: Line, x: Fraction) -> Fraction:
    return line[0] * x + line[1]


@dataclass(frozen=True)
class ValueCurve:
    xs: Tuple[Fraction, ...]
    lines: Tuple[Line, ...]
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        xs, lines, values = tuple(self.xs), tuple(self.lines), tuple(self.values)
        if len(xs) < 2 or xs[0] != 0 or xs[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(lines) != len(xs) - 1 or len(values) != len(xs):
            raise ValueError("segment/value counts do not match breakpoints")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "lines", lines)
        object.__setattr__(self, "values", values)

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, xs: Sequence, lines: Sequence[Line], values: Sequence) -> "ValueCurve":
        """Construct and canonicalize (merge breakpoints that carry no information)."""
        xs = [as_rational(x) for x in xs]
        lines = [(as_rational(s), as_rational(c)) for s, c in lines]
        values = [as_rational(v) for v in values]
        keep_x, keep_l, keep_v = [xs[0]], [], [values[0]]
        current = lines[0]
        for i in range(1, len(xs) - 1):
            nxt = lines[i]
            if nxt == current and values[i] == line_at(current, xs[i]):
                continue
            keep_l.append(current)
            keep_x.append(xs[i])
            keep_v.append(values[i])
            current = nxt
        keep_l.append(current)
        keep_x.append(xs[-1])
        keep_v.append(values[-1])
        return cls(tuple(keep_x), tuple(keep_l), tuple(keep_v))

    @classmethod
    def constant(cls, c) -> "ValueCurve":
        c = as_rational(c)
        return cls((ZERO, ONE), ((ZERO, c),), (c, c))

    @classmethod
    def linear(cls, slope, intercept) -> "ValueCurve":
        line = (as_rational(slope), as_rational(intercept))
        return cls((ZERO, ONE), (line,), (line_at(line, ZERO), line_at(line, ONE)))

    @classmethod
    def from_vertices(cls, points: Sequence[Vertex]) -> "ValueCurve":
        """Continuous curve interpolating ``points`` (must cover 0 and 1)."""
        pts = [(as_rational(x), as_rational(y)) for x, y in points]
        lines = [_line_through(a, b) for a, b in zip(pts, pts[1:])]
        return cls.build([x for x, _ in pts], lines, [y for _, y in pts])

    # -- evaluation --------------------------------------------------------

    def segment_index(self, p: Fraction) -> int:
        """Index of the open interval containing ``p`` (``p`` not a breakpoint)."""
        return bisect_left(self.xs, p) - 1

    def eval(self, p) -> Fraction:
        p = as_rational(p)
        if not ZERO <= p <= ONE:
            raise ValueError(f"belief {p} outside [0,1]")
        i = bisect_left(self.xs, p)
        if self.xs[i] == p:
            return self.values[i]
        return line_at(self.lines[i - 1], p)

    __call__ = eval

    def left_limit(self, i: int) -> Fraction:
        return line_at(self.lines[i - 1], self.xs[i])

    def right_limit(self, i: int) -> Fraction:
        return line_at(self.lines[i], self.xs[i])

    def vertices(self) -> List[Vertex]:
        return list(zip(self.xs, self.values))

    @property
    def breakpoints(self) -> Tuple[Fraction, ...]:
        return self.xs

    def interior_breakpoints(self) -> Tuple[Fraction, ...]:
        return self.xs[1:-1]

    def _limit_points(self) -> List[Vertex]:
        pts = []
        for i, x in enumerate(self.xs):
            pts.append((x, self.values[i]))
            if i > 0:
                pts.append((x, self.left_limit(i)))
            if i < len(self.lines):
                pts.append((x, self.right_limit(i)))
        return pts

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "ValueCurve") -> "ValueCurve":
        xs = merge_breakpoints(self.xs, other.xs)

        def on(lo, hi):
            mid = (lo + hi) / 2
            a = self.lines[self.segment_index(mid)]
            b = other.lines[other.segment_index(mid)]
            return [(a[0] + b[0], a[1] + b[1])]

        return envelope_curve(xs, lambda x: self.eval(x) + other.eval(x), on)

    def scale(self, k) -> "ValueCurve":
        k = as_rational(k)
        return ValueCurve.build(
            self.xs, [(k * s, k * c) for s, c in self.lines], [k * v for v in self.values]
        )

    # -- checks --------------------------------------------------------------

    def is_nondecreasing(self) -> bool:
        if any(s < 0 for s, _ in self.lines):
            return False
        n = len(self.xs)
        for i in range(n):
            if i > 0 and self.left_limit(i) > self.values[i]:
                return False
            if i < n - 1 and self.values[i] > self.right_limit(i):
                return False
        return True

    def is_upper_semicontinuous(self) -> bool:
        n = len(self.xs)
        for i in range(n):
            if i > 0 and self.left_limit(i) > self.values[i]:
                return False
            if i < n - 1 and self.right_limit(i) > self.values[i]:
                return False
        return True

    def within_sender_bound(self) -> bool:
        """``0 <= V(p) <= min(1, 2p)`` everywhere.

        The bound is concave and each piece is linear, so checking the
        breakpoint values and one-sided limits is enough.
        """
        return all(ZERO <= y <= min(ONE, 2 * x) for x, y in self._limit_points())

    def __str__(self):
        parts = []
        for i, line in enumerate(self.lines):
            parts.append(
                f"[{self.xs[i]}]={self.values[i]}  ({self.xs[i]},{self.xs[i + 1]}): "
                f"{line[0]}*p + {line[1]}"
            )
        parts.append(f"[{self.xs[-1]}]={self.values[-1]}")
        return "\n".join(parts)


def _line_through(a: Vertex, b: Vertex) -> Line:
    slope = (b[1] - a[1]) / (b[0] - a[0])
    return slope, a[1] - slope * a[0]


def merge_breakpoints(*seqs: Iterable[Fraction]) -> List[Fraction]:
    return sorted(set().union(*[set(s) for s in seqs]))


ZERO_CURVE = ValueCurve.constant(ZERO)


# ---------------------------------------------------------------------------
# upper envelopes of lines


def upper_envelope(lines: Sequence[Line], lo: Fraction, hi: Fraction) -> List[Tuple[Fraction, Line]]:
    """Upper envelope of ``lines`` over ``[lo, hi]`` as ``(start_x, line)`` pieces."""
    lines = sorted(set(lines))
    x = lo
    # highest at lo; prefer the steeper line on ties since it wins just after lo
    current = max(lines, key=lambda ln: (line_at(ln, lo), ln[0]))
    pieces = [(lo, current)]
    while True:
        best_x, best = None, None
        for ln in lines:
            if ln[0] <= current[0]:
                continue
            cross = (current[1] - ln[1]) / (ln[0] - current[0])
            if cross < x:
                cross = x
            if best_x is None or cross < best_x or (cross == best_x and ln[0] > best[0]):
                best_x, best = cross, ln
        if best is None or best_x >= hi:
            return pieces
        if best_x == pieces[-1][0]:
            pieces[-1] = (best_x, best)
        else:
            pieces.append((best_x, best))
        x, current = best_x, best


def envelope_curve(
    events: Sequence[Fraction],
    point_value: Callable[[Fraction], Fraction],
    interval_lines: Callable[[Fraction, Fraction], List[Line]],
) -> ValueCurve:
    """Curve whose value at each event is ``point_value`` and which, between
    consecutive events, is the upper envelope of ``interval_lines(lo, hi)``."""
    xs, lines, values = [], [], []
    for lo, hi in zip(events, events[1:]):
        xs.append(lo)
        values.append(point_value(lo))
        pieces = upper_envelope(interval_lines(lo, hi), lo, hi)
        lines.append(pieces[0][1])
        for start, ln in pieces[1:]:
            xs.append(start)
            values.append(line_at(ln, start))
            lines.append(ln)
    xs.append(events[-1])
    values.append(point_value(events[-1]))
    return ValueCurve.build(xs, lines, values)


def pointwise_max(a: ValueCurve, b: ValueCurve) -> ValueCurve:
    xs = merge_breakpoints(a.xs, b.xs)

    def on(lo, hi):
        mid = (lo + hi) / 2
        return [a.lines[a.segment_index(mid)], b.lines[b.segment_index(mid)]]

    return envelope_curve(xs, lambda x: max(a.eval(x), b.eval(x)), on)


def pointwise_max_all(curves: Sequence[ValueCurve]) -> ValueCurve:
    result = curves[0]
    for c in curves[1:]:
        result = pointwise_max(result, c)
    return result


def upper_hull(points: Iterable[Vertex]) -> List[Vertex]:
    """Upper concave hull of a point set, left to right (monotone chain)."""
    best = {}
    for x, y in points:
        if x not in best or y > best[x]:
            best[x] = y
    hull: List[Vertex] = []
    for pt in sorted(best.items()):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly above the chord
            if (y2 - y1) * (pt[0] - x1) <= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def upper_concave_envelope(a: ValueCurve) -> ValueCurve:
    """Least concave majorant, from the hull of all breakpoint values and limits."""
    return ValueCurve.from_vertices(upper_hull(a._limit_points()))


# ---------------------------------------------------------------------------
# leaves and determined nodes


def leaf_curve() -> ValueCurve:
    """Receiver acts on posterior >= 1/2; the sender scores 1 when that action is taken."""
    return ValueCurve((ZERO, HALF, ONE), ((ZERO, ZERO), (ZERO, ONE)), (ZERO, ONE, ONE))


def outcome_term(a: Fraction, b: Fraction, child: ValueCurve) -> ValueCurve:
    """p -> P(outcome) * child(posterior after outcome).

    ``a`` and ``b`` are the outcome probabilities under the two states. The
    posterior is nondecreasing in ``p``; on each piece of ``child`` the term is
    linear because P(outcome) cancels the denominator of the posterior.
    """
    if a == 0 and b == 0:
        return ZERO_CURVE
    if b == 0:
        # posterior is 1 whenever the outcome is possible
        return ValueCurve.linear(a * child.values[-1], ZERO)
    if a == 0:
        return ValueCurve.linear(-b * child.values[0], b * child.values[0])

    def preimage(t: Fraction) -> Fraction:
        return t * b / (a * (ONE - t) + t * b)

    xs = [preimage(t) for t in child.xs]
    lines = [(s * a + c * (a - b), c * b) for s, c in child.lines]
    values = [(x * a + (ONE - x) * b) * v for x, v in zip(xs, child.values)]
    return ValueCurve.build(xs, lines, values)


def determined_transform(e: Experiment, v_pass: ValueCurve, v_fail: ValueCurve) -> ValueCurve:
    return outcome_term(e.q1, e.q2, v_pass) + outcome_term(ONE - e.q1, ONE - e.q2, v_fail)


def determined_transform_nary(e: NaryExperiment, children: Sequence[ValueCurve]) -> ValueCurve:
    if len(children) != e.arity:
        raise ValueError("number of child curves differs from experiment arity")
    total = ZERO_CURVE
    for a, b, child in zip(e.q1, e.q2, children):
        total = total + outcome_term(a, b, child)
    return total


# ---------------------------------------------------------------------------
# designed nodes


@dataclass(frozen=True, order=True)
class SplitChoice:
    """Send mass ``y`` left with interim belief ``u`` and ``1 - y`` right with belief ``v``."""

    y: Fraction
    u: Fraction
    v: Fraction


Domain = Optional[Tuple[Fraction, Fraction]]


class _Side:
    """One child of a designed node, optionally restricted to a belief interval."""

    def __init__(self, curve: ValueCurve, domain: Domain):
        self.curve = curve
        if domain is None:
            self.lo, self.hi = ZERO, ONE
        else:
            self.lo, self.hi = as_rational(domain[0]), as_rational(domain[1])
        self.vertices: List[Vertex] = []
        if self.lo <= self.hi:
            xs = {x for x in curve.xs if self.lo <= x <= self.hi} | {self.lo, self.hi}
            self.vertices = [(x, curve.eval(x)) for x in sorted(xs)]

    def allows(self, p: Fraction) -> bool:
        return self.lo <= p <= self.hi

    def events(self) -> List[Fraction]:
        return [x for x, _ in self.vertices]


def _bridge(left_pts: List[Vertex], right_pts: List[Vertex], lo: Fraction, hi: Fraction) -> Optional[Line]:
    """Best chord over (lo, hi) joining a point of ``left_pts`` (x <= lo) to one of ``right_pts`` (x >= hi).

    It is the edge of the upper hull of both sets that spans the gap.
    """
    if not left_pts or not right_pts:
        return None
    hull = upper_hull(left_pts + right_pts)
    for a, b in zip(hull, hull[1:]):
        if a[0] <= lo and b[0] >= hi:
            return _line_through(a, b)
    return None


class SplitExtractor:
    """Optimal splits for a designed node; see :func:`designed_combine`."""

    def __init__(self, left: _Side, right: _Side, floor: bool):
        self._left, self._right, self._floor = left, right, floor

    def candidates(self, p) -> List[Tuple[Fraction, SplitChoice]]:
        p = as_rational(p)
        left, right = self._left, self._right
        out = []
        if left.allows(p):
            out.append((left.curve.eval(p), SplitChoice(ONE, p, p)))
        if right.allows(p):
            out.append((right.curve.eval(p), SplitChoice(ZERO, p, p)))
        for a, va in left.vertices:
            for b, vb in right.vertices:
                if (a < p < b) or (b < p < a):
                    y = (p - b) / (a - b)
                    out.append((y * va + (ONE - y) * vb, SplitChoice(y, a, b)))
        return out

    def value(self, p) -> Fraction:
        vals = [v for v, _ in self.candidates(p)]
        if self._floor:
            vals.append(ZERO)
        if not vals:
            raise ValueError(f"no feasible split at belief {p}")
        return max(vals)

    def maximizers(self, p) -> List[SplitChoice]:
        """Every candidate split attaining the optimum, canonical choice first."""
        cands = self.candidates(p)
        if not cands:
            return []
        best = max(v for v, _ in cands)
        if self._floor and best < 0:
            return []
        return sorted({c for v, c in cands if v == best}, reverse=True)

    def __call__(self, p) -> Optional[SplitChoice]:
        found = self.maximizers(p)
        return found[0] if found else None


def designed_combine(
    v_left: ValueCurve,
    v_right: ValueCurve,
    left_domain: Domain = None,
    right_domain: Domain = None,
):
    """Best split of belief ``p`` into a left part and a right part.

    ``G(p) = max y*L(u) + (1-y)*R(v)`` over ``y*u + (1-y)*v = p``. Between
    consecutive breakpoints of either child, the objective for a fixed pair
    of chord endpoints is linear-fractional along each linear piece, so the
    optimum uses breakpoint vertices or a degenerate split (``u = v = p``).
    On each gap the best chord is therefore the hull edge bridging the
    vertices on one side of the gap with those of the other child on the
    other side, and ``G`` is the upper envelope of at most four lines there.

    With ``left_domain``/``right_domain`` the interim beliefs are confined to
    those intervals and the result is floored at 0 (an infeasible belief
    yields nothing).

    Returns ``(curve, extractor)``; ``extractor(p)`` gives the
    lexicographically largest optimal :class:`SplitChoice`, which keeps as
    much mass as possible on the left branch.
    """
    left, right = _Side(v_left, left_domain), _Side(v_right, right_domain)
    floor = left_domain is not None or right_domain is not None
    extractor = SplitExtractor(left, right, floor)
    events = merge_breakpoints(left.events(), right.events(), v_left.xs, v_right.xs)

    def on(lo, hi):
        mid = (lo + hi) / 2
        cands = []
        if floor:
            cands.append((ZERO, ZERO))
        if left.lo <= lo and hi <= left.hi:
            cands.append(v_left.lines[v_left.segment_index(mid)])
        if right.lo <= lo and hi <= right.hi:
            cands.append(v_right.lines[v_right.segment_index(mid)])
        for a_side, b_side in ((left, right), (right, left)):
            bridge = _bridge(
                [pt for pt in a_side.vertices if pt[0] <= lo],
                [pt for pt in b_side.vertices if pt[0] >= hi],
                lo,
                hi,
            )
            if bridge is not None:
                cands.append(bridge)
        if not cands:
            raise ValueError(f"no feasible split on ({lo}, {hi})")
        return cands

    return envelope_curve(events, extractor.value, on), extractor


def designed_combine_nary(children: Sequence[ValueCurve]) -> ValueCurve:
    """Split among several children by folding the two-way combine from the left."""
    if len(children) < 2:
        raise ValueError("designed combine needs at least two children")
    result = children[0]
    for c in children[1:]:
        result, _ = designed_combine(result, c)
    return result


# ---------------------------------------------------------------------------
# sampling


def ratio_at(curve: ValueCurve, p: Fraction) -> Optional[Fraction]:
    """``V(p)/p``; at 0 the right limit, or ``None`` when it diverges."""
    if p != 0:
        return curve.eval(p) / p
    slope, intercept = curve.lines[0]
    return slope if intercept == 0 else None


def sample(curve: ValueCurve, n: int) -> List[Tuple[Fraction, Fraction, Optional[Fraction]]]:
    """``n`` evenly spaced beliefs ``k/(n-1)`` with value and value-to-belief ratio."""
    if n < 2:
        raise ValueError("need at least two samples")
    out = []
    for k in range(n):
        p = Fraction(k, n - 1)
        out.append((p, curve.eval(p), ratio_at(curve, p)))
    return out


def single_phase_curve() -> ValueCurve:
    """``min(2p, 1)``."""
    return ValueCurve.build((ZERO, HALF, ONE), ((2, ZERO), (ZERO, ONE)), (ZERO, ONE, ONE))
