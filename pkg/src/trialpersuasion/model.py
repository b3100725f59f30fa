"""Trial trees, experiments, and the structural transforms applied to them.

All numbers are :class:`fractions.Fraction`. Trees are immutable; every
transform returns a new tree.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Tuple, Union

Rational = Fraction
NodePath = Tuple[int, ...]

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)

MAX_DECIMAL_DIGITS = 12

_RATIO_RE = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")
_DECIMAL_RE = re.compile(r"^\s*(\d*)(?:\.(\d*))?\s*$")


class TreeFormatError(ValueError):
    """Raised when a tree document or a tree edit is invalid."""

    def __init__(self, message: str, path: NodePath = ()):
        self.path = path
        super().__init__(f"{message} at path {format_path(path)}")


# ---------------------------------------------------------------------------
# rationals


def parse_rational(text: str) -> Fraction:
    """Parse ``"a/b"`` or a plain decimal literal exactly."""
    m = _RATIO_RE.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    m = _DECIMAL_RE.match(text)
    if m and (m.group(1) or m.group(2)):
        whole, frac = m.group(1) or "0", m.group(2) or ""
        if len(frac) > MAX_DECIMAL_DIGITS:
            raise ValueError(
                f"decimal {text!r} has more than {MAX_DECIMAL_DIGITS} fractional digits"
            )
        return Fraction(int(whole + frac), 10 ** len(frac))
    raise ValueError(f"not a rational literal: {text!r}")


def as_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, Decimal):
        return parse_rational(str(value))
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _check_unit(x: Fraction, path: NodePath) -> Fraction:
    if not ZERO <= x <= ONE:
        raise TreeFormatError("probability outside [0,1]", path)
    return x


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class Experiment:
    """Binary-outcome test: ``q1``/``q2`` are pass probabilities under each state."""

    q1: Fraction
    q2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "q1", as_rational(self.q1))
        object.__setattr__(self, "q2", as_rational(self.q2))
        if not (ZERO <= self.q1 <= ONE and ZERO <= self.q2 <= ONE):
            raise ValueError(f"experiment parameters outside [0,1]: {self}")

    def is_trivial(self) -> bool:
        return self.q1 == self.q2

    def flipped(self) -> "Experiment":
        """Same experiment with pass and fail relabelled."""
        return Experiment(ONE - self.q1, ONE - self.q2)

    def __str__(self):
        return f"({format_rational(self.q1)}, {format_rational(self.q2)})"


REVEALING = Experiment(ONE, ZERO)


@dataclass(frozen=True)
class NaryExperiment:
    q1: Tuple[Fraction, ...]
    q2: Tuple[Fraction, ...]

    def __post_init__(self):
        q1 = tuple(as_rational(x) for x in self.q1)
        q2 = tuple(as_rational(x) for x in self.q2)
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)
        if len(q1) != len(q2) or len(q1) < 2:
            raise ValueError("n-ary experiment needs two distributions of equal length >= 2")
        for x in q1 + q2:
            if not ZERO <= x <= ONE:
                raise ValueError("n-ary experiment entry outside [0,1]")
        if sum(q1) != ONE or sum(q2) != ONE:
            raise ValueError("n-ary outcome distribution does not sum to 1")

    @property
    def arity(self) -> int:
        return len(self.q1)

    def is_trivial(self) -> bool:
        return self.q1 == self.q2


def branch_probability(a: Fraction, b: Fraction, w: Fraction) -> Fraction:
    """Probability of an outcome with state-conditional probabilities ``a``, ``b`` at belief ``w``."""
    return w * a + (ONE - w) * b


def posterior(a: Fraction, b: Fraction, w: Fraction) -> Optional[Fraction]:
    """Belief in state 1 after the outcome; ``None`` when the outcome has zero probability."""
    total = branch_probability(a, b, w)
    if total == 0:
        return None
    return w * a / total


# ---------------------------------------------------------------------------
# tree nodes


@dataclass(frozen=True)
class Leaf:
    @property
    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Determined:
    experiment: Experiment
    on_pass: "Node"
    on_fail: "Node"

    @property
    def children(self) -> tuple:
        return (self.on_pass, self.on_fail)


@dataclass(frozen=True)
class DeterminedNary:
    experiment: NaryExperiment
    children: Tuple["Node", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.experiment.arity:
            raise ValueError("n-ary node: children count differs from experiment arity")


@dataclass(frozen=True)
class Designed:
    left: "Node"
    right: "Node"

    @property
    def children(self) -> tuple:
        return (self.left, self.right)


Node = Union[Leaf, Determined, DeterminedNary, Designed]
LEAF = Leaf()


@dataclass(frozen=True)
class TrialTree:
    root: Node
    prior: Optional[Fraction] = field(default=None)

    def __post_init__(self):
        if self.prior is not None:
            p = as_rational(self.prior)
            if not ZERO <= p <= ONE:
                raise ValueError("prior outside [0,1]")
            object.__setattr__(self, "prior", p)


def determined(q1, q2, on_pass: Node = LEAF, on_fail: Node = LEAF) -> Determined:
    return Determined(Experiment(q1, q2), on_pass, on_fail)


def designed(left: Node = LEAF, right: Node = LEAF) -> Designed:
    return Designed(left, right)


def two_phase_tree(ea: Experiment, eb: Experiment, prior=None) -> TrialTree:
    """Designed first phase feeding two determined second-phase experiments."""
    return TrialTree(Designed(Determined(ea, LEAF, LEAF), Determined(eb, LEAF, LEAF)), prior)


# ---------------------------------------------------------------------------
# paths


def format_path(path: Sequence[int]) -> str:
    return "root" if len(path) == 0 else ".".join(str(i) for i in path)


def parse_path(text: str) -> NodePath:
    text = text.strip()
    if text in ("", "root"):
        return ()
    try:
        return tuple(int(part) for part in text.split("."))
    except ValueError:
        raise ValueError(f"bad node path {text!r}") from None


def iter_nodes(root: Node, path: NodePath = ()) -> Iterator[Tuple[NodePath, Node]]:
    """Pre-order walk yielding ``(path, node)``."""
    yield path, root
    for i, child in enumerate(root.children):
        yield from iter_nodes(child, path + (i,))


def node_at(root: Node, path: Sequence[int]) -> Node:
    node = root
    for depth, i in enumerate(path):
        kids = node.children
        if not 0 <= i < len(kids):
            raise TreeFormatError("path does not resolve to a node", tuple(path[: depth + 1]))
        node = kids[i]
    return node


def _with_child(node: Node, i: int, child: Node) -> Node:
    if isinstance(node, Determined):
        return Determined(node.experiment, child, node.on_fail) if i == 0 else Determined(
            node.experiment, node.on_pass, child
        )
    if isinstance(node, Designed):
        return Designed(child, node.right) if i == 0 else Designed(node.left, child)
    kids = list(node.children)
    kids[i] = child
    return DeterminedNary(node.experiment, tuple(kids))


def replace_at(root: Node, path: Sequence[int], new: Node) -> Node:
    if not path:
        return new
    node_at(root, path)
    i = path[0]
    return _with_child(root, i, replace_at(root.children[i], path[1:], new))


def depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(depth(c) for c in node.children)


def designed_paths(root: Node) -> list:
    return [path for path, node in iter_nodes(root) if isinstance(node, Designed)]


def leaf_paths(root: Node) -> list:
    return [path for path, node in iter_nodes(root) if isinstance(node, Leaf)]


def is_binary(root: Node) -> bool:
    return not any(isinstance(n, DeterminedNary) for _, n in iter_nodes(root))


# ---------------------------------------------------------------------------
# parsing / serialization


def _parse_prob(value, path: NodePath) -> Fraction:
    try:
        x = as_rational(value)
    except (TypeError, ValueError) as exc:
        raise TreeFormatError(f"malformed rational ({exc})", path) from None
    return _check_unit(x, path)


def _parse_node(doc, path: NodePath) -> Node:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise TreeFormatError("node must be an object with a 'kind' field", path)
    kind = doc["kind"]

    def need(key):
        if key not in doc:
            raise TreeFormatError(f"{kind} node is missing '{key}'", path)
        return doc[key]

    if kind == "leaf":
        return LEAF
    if kind == "designed":
        return Designed(_parse_node(need("left"), path + (0,)), _parse_node(need("right"), path + (1,)))
    if kind == "determined":
        e = Experiment(_parse_prob(need("q1"), path), _parse_prob(need("q2"), path))
        return Determined(e, _parse_node(need("pass"), path + (0,)), _parse_node(need("fail"), path + (1,)))
    if kind == "determined_nary":
        q1, q2, kids = need("q1"), need("q2"), need("children")
        if not all(isinstance(x, list) for x in (q1, q2, kids)):
            raise TreeFormatError("determined_nary fields q1, q2, children must be lists", path)
        if not (len(q1) == len(q2) == len(kids)):
            raise TreeFormatError("arity mismatch between q1, q2 and children", path)
        if len(kids) < 2:
            raise TreeFormatError("determined_nary needs at least two outcomes", path)
        q1 = [_parse_prob(x, path) for x in q1]
        q2 = [_parse_prob(x, path) for x in q2]
        if sum(q1) != ONE or sum(q2) != ONE:
            raise TreeFormatError("n-ary distribution does not sum to 1", path)
        children = tuple(_parse_node(c, path + (i,)) for i, c in enumerate(kids))
        return DeterminedNary(NaryExperiment(tuple(q1), tuple(q2)), children)
    raise TreeFormatError(f"unknown node kind {kind!r}", path)


def parse_tree(document) -> TrialTree:
    """Build a validated tree from JSON text or an already-decoded object."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise TreeFormatError(f"malformed JSON ({exc.msg})") from None
    if not isinstance(document, dict) or "root" not in document:
        raise TreeFormatError("document must be an object with a 'root' field")
    prior = document.get("prior")
    if prior is not None:
        prior = _parse_prob(prior, ())
    return TrialTree(_parse_node(document["root"], ()), prior)


def load_tree(path) -> TrialTree:
    with open(path, encoding="utf-8") as fh:
        return parse_tree(fh.read())


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf"}
    if isinstance(node, Designed):
        return {"kind": "designed", "left": node_to_dict(node.left), "right": node_to_dict(node.right)}
    if isinstance(node, Determined):
        return {
            "kind": "determined",
            "q1": format_rational(node.experiment.q1),
            "q2": format_rational(node.experiment.q2),
            "pass": node_to_dict(node.on_pass),
            "fail": node_to_dict(node.on_fail),
        }
    return {
        "kind": "determined_nary",
        "q1": [format_rational(x) for x in node.experiment.q1],
        "q2": [format_rational(x) for x in node.experiment.q2],
        "children": [node_to_dict(c) for c in node.children],
    }


def tree_to_dict(tree: TrialTree) -> dict:
    doc = {}
    if tree.prior is not None:
        doc["prior"] = format_rational(tree.prior)
    doc["root"] = node_to_dict(tree.root)
    return doc


def serialize_tree(tree: TrialTree, indent: Optional[int] = 2) -> str:
    return json.dumps(tree_to_dict(tree), indent=indent)


# ---------------------------------------------------------------------------
# two-phase normalization


@dataclass(frozen=True)
class SwapRecord:
    """Relabelings applied by :func:`normalize_two_phase`.

    ``flip_first``/``flip_second`` refer to the caller's first and second
    experiment (pass/fail exchanged); ``swapped`` means the normalized first
    experiment is the caller's second one.
    """

    flip_first: bool = False
    flip_second: bool = False
    swapped: bool = False

    def is_identity(self) -> bool:
        return not (self.flip_first or self.flip_second or self.swapped)


def normalize_two_phase(ea: Experiment, eb: Experiment):
    """Relabel so that ``qA1 >= qA2``, ``qB1 >= qB2`` and ``qA1 >= qB1``."""
    flip_a, flip_b = ea.q1 < ea.q2, eb.q1 < eb.q2
    a = ea.flipped() if flip_a else ea
    b = eb.flipped() if flip_b else eb
    swapped = a.q1 < b.q1
    if swapped:
        a, b = b, a
    return a, b, SwapRecord(flip_a, flip_b, swapped)


# ---------------------------------------------------------------------------
# n-ary expansion


def _ratio(part: Fraction, whole: Fraction) -> Fraction:
    # unreachable group under this state; any value preserves behaviour
    return ZERO if whole == 0 else part / whole


def _split_outcomes(q1, q2, children) -> Node:
    n = len(children)
    if n == 1:
        return children[0]
    left = 1 << ((n - 1).bit_length() - 1)
    s1, s2 = sum(q1), sum(q2)
    e = Experiment(_ratio(sum(q1[:left]), s1), _ratio(sum(q2[:left]), s2))
    return Determined(
        e,
        _split_outcomes(q1[:left], q2[:left], children[:left]),
        _split_outcomes(q1[left:], q2[left:], children[left:]),
    )


def _expand(node: Node) -> Node:
    if isinstance(node, Leaf):
        return node
    if isinstance(node, DeterminedNary):
        kids = [_expand(c) for c in node.children]
        return _split_outcomes(list(node.experiment.q1), list(node.experiment.q2), kids)
    if isinstance(node, Determined):
        return Determined(node.experiment, _expand(node.on_pass), _expand(node.on_fail))
    return Designed(_expand(node.left), _expand(node.right))


def expand_nonbinary(tree: TrialTree) -> TrialTree:
    """Replace every n-outcome determined node by at most ceil(log2 n) binary levels.

    Outcomes are split into a leading block of size 2^(k-1) and the rest,
    recursively; each binary node carries the conditional probability of the
    leading block given its group, so every original outcome keeps its exact
    per-state reach probability.
    """
    return TrialTree(_expand(tree.root), tree.prior)


# ---------------------------------------------------------------------------
# pruning and single-phase equivalence


def _require_binary(root: Node):
    if not is_binary(root):
        raise ValueError("tree contains n-ary nodes; run expand_nonbinary first")


def _nontrivial_determined(node: Node) -> bool:
    return isinstance(node, Determined) and not node.experiment.is_trivial()


def _prune(node: Node) -> Node:
    if isinstance(node, Leaf):
        return node
    if isinstance(node, Designed):
        return Designed(_prune(node.left), _prune(node.right))
    kids = (_prune(node.on_pass), _prune(node.on_fail))
    if node.experiment.is_trivial() and any(_nontrivial_determined(k) for k in kids):
        return Determined(REVEALING, LEAF, LEAF)
    return Determined(node.experiment, *kids)


def prune(tree: TrialTree) -> TrialTree:
    """Bottom-up, collapse trivial determined nodes sitting on a non-trivial determined child.

    The collapsed subtree becomes a fully revealing experiment over two leaves.
    """
    _require_binary(tree.root)
    return TrialTree(_prune(tree.root), tree.prior)


@dataclass(frozen=True)
class EquivalenceReport:
    siblings_ok: bool
    paths_ok: bool
    sibling_violations: Tuple[NodePath, ...]
    path_violations: Tuple[NodePath, ...]
    pruned: TrialTree

    @property
    def equivalent(self) -> bool:
        return self.siblings_ok and self.paths_ok

    def summary(self) -> str:
        lines = [
            f"condition (a) sibling of every non-trivial determined node is trivial or designed: "
            f"{'yes' if self.siblings_ok else 'no'}",
            f"condition (b) every root-to-leaf path of the pruned tree has a designed node: "
            f"{'yes' if self.paths_ok else 'no'}",
        ]
        for p in self.sibling_violations:
            lines.append(f"  sibling violation at {format_path(p)}")
        for p in self.path_violations:
            lines.append(f"  undesigned path to leaf {format_path(p)}")
        if self.equivalent:
            lines.append("verdict: PASS, sender value = min(2p,1)")
        else:
            lines.append("verdict: FAIL, single-phase equivalence not established")
        return "\n".join(lines)


def _sibling_acceptable(node: Node) -> bool:
    # a leaf leaves the belief untouched, like a trivial experiment
    if isinstance(node, (Leaf, Designed)):
        return True
    return isinstance(node, Determined) and node.experiment.is_trivial()


def check_single_phase_equivalence(tree: TrialTree) -> EquivalenceReport:
    """Check the two sufficient conditions for value ``min(2p, 1)`` on the pruned tree.

    A non-trivial determined root has no sibling to route mass through, so it
    counts as a sibling violation.
    """
    pruned = prune(tree)
    sib_bad = []
    if _nontrivial_determined(pruned.root):
        sib_bad.append(())
    for path, node in iter_nodes(pruned.root):
        kids = node.children
        if len(kids) != 2:
            continue
        for i in (0, 1):
            if _nontrivial_determined(kids[i]) and not _sibling_acceptable(kids[1 - i]):
                sib_bad.append(path + (i,))

    path_bad = []

    def walk(node, path, seen_designed):
        seen_designed = seen_designed or isinstance(node, Designed)
        if isinstance(node, Leaf):
            if not seen_designed:
                path_bad.append(path)
            return
        for i, c in enumerate(node.children):
            walk(c, path + (i,), seen_designed)

    walk(pruned.root, (), False)
    return EquivalenceReport(not sib_bad, not path_bad, tuple(sib_bad), tuple(path_bad), pruned)


# ---------------------------------------------------------------------------
# perturbation


def perturb_param(tree: TrialTree, path: Sequence[int], which: str, value) -> TrialTree:
    path = tuple(path)
    node = node_at(tree.root, path)
    if not isinstance(node, Determined):
        raise TreeFormatError("not a determined node", path)
    if which not in ("q1", "q2"):
        raise ValueError("parameter must be 'q1' or 'q2'")
    value = _check_unit(as_rational(value), path)
    e = node.experiment
    e = Experiment(value, e.q2) if which == "q1" else Experiment(e.q1, value)
    return TrialTree(replace_at(tree.root, path, Determined(e, node.on_pass, node.on_fail)), tree.prior)
