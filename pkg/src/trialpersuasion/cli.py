"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 invalid input, 3 failed
consistency check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import Context, Decimal
from fractions import Fraction
from typing import List, Optional, Sequence

from . import curve as cv
from . import dp, fixtures, model, oracle, receiver, twophase

EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INCONSISTENT = 3

_DEC = Context(prec=17)


class UsageError(Exception):
    pass


class InconsistencyError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# formatting helpers


def fmt(x: Optional[Fraction]) -> str:
    return "" if x is None else model.format_rational(x)


def fmt_dec(x: Optional[Fraction]) -> str:
    if x is None:
        return ""
    return format(_DEC.divide(Decimal(x.numerator), Decimal(x.denominator)), "f")


def _write_csv(rows: List[List[str]], out: Optional[str]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    _emit(buf.getvalue(), out)


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rational(text: str) -> Fraction:
    try:
        return model.parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return tuple(_rational(p) for p in parts)


def _experiment(text: str) -> model.Experiment:
    q1, q2 = _pair(text)
    try:
        return model.Experiment(q1, q2)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _prior(args, tree: model.TrialTree) -> Fraction:
    p = args.prior if args.prior is not None else tree.prior
    if p is None:
        raise UsageError("a prior is required (--prior or a 'prior' field in the tree file)")
    if not 0 <= p <= 1:
        raise ValueError(f"prior {fmt(p)} outside [0,1]")
    return p


def _info(args, text: str):
    """Human-readable notes; kept off stdout when stdout carries the CSV."""
    print(text, file=sys.stdout if getattr(args, "out", None) else sys.stderr)


def _binary(tree: model.TrialTree) -> model.TrialTree:
    return tree if model.is_binary(tree.root) else model.expand_nonbinary(tree)


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args):
    tree = model.load_tree(args.tree)
    p = _prior(args, tree)
    solution = dp.solve(tree)
    ties = "pessimal" if args.pessimal_ties else "canonical"
    strategy = dp.extract_strategy(tree, p, solution, ties)
    ev = dp.evaluate_strategy(tree, strategy, p)
    if ev.sender_utility != solution.root(p) or ev.ic_violations:
        raise InconsistencyError("extracted strategy does not attain the value curve")
    report = dp.strategy_report(tree, strategy, ev)
    report["value_curve_at_prior"] = fmt(solution.root(p))
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    if args.out:
        print(f"sender utility {fmt(ev.sender_utility)}, receiver utility {fmt(ev.receiver_utility)}")


def curve_rows(c: cv.ValueCurve, samples: int, receiver_tree=None) -> List[List[str]]:
    points = {x: "breakpoint" for x in c.xs}
    for k in range(samples):
        points.setdefault(Fraction(k, samples - 1), "sample")
    header = ["p", "value", "ratio", "p_dec", "value_dec", "ratio_dec", "kind"]
    solution = None
    if receiver_tree is not None:
        header += ["receiver", "receiver_dec"]
        solution = dp.solve(receiver_tree)
    rows = [header]
    for p in sorted(points):
        v, r = c(p), cv.ratio_at(c, p)
        row = [fmt(p), fmt(v), fmt(r), fmt_dec(p), fmt_dec(v), fmt_dec(r), points[p]]
        if solution is not None:
            rv = dp.receiver_value(receiver_tree, p, solution)
            row += [fmt(rv), fmt_dec(rv)]
        rows.append(row)
    return rows


def check_curve(c: cv.ValueCurve, where: str):
    if not c.within_sender_bound():
        raise InconsistencyError(f"value curve at {where} leaves the range [0, min(1, 2p)]")
    if not c.is_nondecreasing():
        print(f"warning: value curve at {where} is not nondecreasing", file=sys.stderr)


def cmd_curve(args):
    tree = model.load_tree(args.tree)
    path = model.parse_path(args.node)
    node = model.node_at(tree.root, path)
    subtree = model.TrialTree(node)
    c = dp.solve(subtree).root
    check_curve(c, model.format_path(path))
    _write_csv(curve_rows(c, args.samples, subtree if args.receiver else None), args.out)


def cmd_two_phase(args):
    ea, eb, record = model.normalize_two_phase(args.qa, args.qb)
    if not record.is_identity():
        _info(
            args,
            f"normalized to A={ea}, B={eb} (flip first: {record.flip_first}, "
            f"flip second: {record.flip_second}, swapped: {record.swapped})"
        )
    for name, e in (("A", ea), ("B", eb)):
        pot = twophase.persuasion_potential(e)
        lo_a, lo_b = twophase.thresholds(e)
        _info(
            args,
            f"{name}={e}: potential ({fmt(pot.alpha_pot)}, {fmt(pot.beta_pot) or 'undefined'}), "
            f"thresholds alpha_low={fmt(lo_a)} beta_low={fmt(lo_b)}"
        )
    types = twophase.type_curves(ea, eb)
    optimal = cv.pointwise_max_all(list(types.values()))
    dp_curve = dp.root_curve(model.two_phase_tree(ea, eb))
    if optimal != dp_curve:
        raise InconsistencyError("type envelope differs from the dynamic program")
    columns = [(twophase.type_name(t), c) for t, c in types.items()] + [("optimal", optimal)]
    if args.bbp:
        columns += [("bbp", twophase.bbp_optimal(ea, eb)), ("single_phase", cv.single_phase_curve())]
    xs = set()
    for _, c in columns:
        xs.update(c.xs)
    xs.update(Fraction(k, args.samples - 1) for k in range(args.samples))
    rows = [["p", "p_dec"] + [name for name, _ in columns]]
    for p in sorted(xs):
        rows.append([fmt(p), fmt_dec(p)] + [fmt(c(p)) for _, c in columns])
    if args.prior is not None:
        best = optimal(args.prior)
        used = [twophase.type_name(t) for t, c in types.items() if c(args.prior) == best]
        _info(args, f"value at prior {fmt(args.prior)}: {fmt(best)} via {', '.join(used)}")
    _write_csv(rows, args.out)


def cmd_prune(args):
    tree = model.load_tree(args.tree)
    _emit(model.serialize_tree(model.prune(tree)) + "\n", args.out)


def cmd_expand(args):
    tree = model.load_tree(args.tree)
    _emit(model.serialize_tree(model.expand_nonbinary(tree)) + "\n", args.out)


def cmd_check_equivalence(args):
    tree = _binary(model.load_tree(args.tree))
    print(model.check_single_phase_equivalence(tree).summary())


def _two_phase_parts(tree: model.TrialTree):
    root = tree.root
    if (
        isinstance(root, model.Designed)
        and all(isinstance(c, model.Determined) for c in root.children)
        and all(isinstance(g, model.Leaf) for c in root.children for g in c.children)
    ):
        return root.left.experiment, root.right.experiment
    return None


def cmd_oracle(args):
    tree = model.load_tree(args.tree)
    p = _prior(args, tree)
    value = dp.solve(tree).root(p)
    grid = oracle.grid_search(tree, p, args.grid, args.refine)
    ok = grid.best_value <= value <= grid.best_value + grid.error_bound
    print(f"dynamic program value: {fmt(value)} ({fmt_dec(value)})")
    print(
        f"grid search: {fmt(grid.best_value)} ({fmt_dec(grid.best_value)}), resolution "
        f"{grid.grid_resolution}, error bound {fmt(grid.error_bound)}"
    )
    print(f"grid dominance: {'PASS' if ok else 'FAIL'}")
    parts = _two_phase_parts(tree)
    if parts is not None:
        ea, eb, record = model.normalize_two_phase(*parts)
        enum = oracle.enumerate_two_phase(ea, eb, p)
        same = enum.best_value == value
        print(f"candidate enumeration: {fmt(enum.best_value)}")
        print(f"enumeration agreement: {'PASS' if same else 'FAIL'}")
        ok = ok and same
    if not ok:
        raise InconsistencyError("oracle check failed")


def sweep_values(lo: Fraction, hi: Fraction, steps: int) -> List[Fraction]:
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * Fraction(k, steps - 1) for k in range(steps)]


def perturb_rows(tree: model.TrialTree, path, which: str, values, prior) -> List[List[Fraction]]:
    """Per value: the re-solved optimum and the value of the strategy that was optimal before.

    The earlier strategy keeps its designed-node parameters; the receiver
    still best-responds to whatever posteriors they now produce.
    """
    frozen = dp.extract_strategy(tree, prior)
    rows = []
    for value in values:
        perturbed = model.perturb_param(tree, path, which, value)
        resolved = dp.solve(perturbed).root(prior)
        kept = dp.evaluate_strategy(perturbed, frozen, prior, respond="obedient").sender_utility
        rows.append([value, resolved, kept])
    return rows


def cmd_perturb(args):
    tree = model.load_tree(args.tree)
    p = _prior(args, tree)
    path = model.parse_path(args.node)
    lo, hi, steps = args.range
    rows = perturb_rows(tree, path, args.param, sweep_values(lo, hi, steps), p)
    for value, resolved, kept in rows:
        if kept > resolved:
            raise InconsistencyError(f"frozen strategy beats the re-solved optimum at {fmt(value)}")
    out = [["value", "resolved", "frozen", "value_dec", "resolved_dec", "frozen_dec"]]
    out += [[fmt(a), fmt(b), fmt(c), fmt_dec(a), fmt_dec(b), fmt_dec(c)] for a, b, c in rows]
    _write_csv(out, args.out)


def _perturb_range(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected 'lo,hi,steps'")
    try:
        steps = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError("steps must be an integer") from None
    if steps < 1:
        raise argparse.ArgumentTypeError("steps must be at least 1")
    return _rational(parts[0]), _rational(parts[1]), steps


def read_candidates(path: str) -> List[model.Experiment]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(_experiment(line))
            except argparse.ArgumentTypeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def cmd_receiver_select(args):
    cset = receiver.CandidateSet(args.ea, tuple(read_candidates(args.candidates)), args.range)
    sel = receiver.maximin_select(cset, args.grid, pessimal=args.pessimal_ties)
    rows = [["q1", "q2", "worst_case", "worst_case_dec", "worst_prior", "priors_evaluated", "winner"]]
    for r in sel.table:
        rows.append([
            fmt(r.experiment.q1), fmt(r.experiment.q2), fmt(r.worst_case), fmt_dec(r.worst_case),
            fmt(r.worst_prior), str(r.evaluated), "yes" if r.experiment == sel.winner else "no",
        ])
    _write_csv(rows, args.out)
    for e in sel.filtered_out:
        print(f"dropped as inferior: {e}", file=sys.stderr)
    _info(args, f"winner: {sel.winner} worst-case receiver utility {fmt(sel.worst_case_utility)}")


def cmd_fixtures(args):
    checks = fixtures.run_fixtures()
    print(fixtures.format_report(checks))
    if any(c.status == "fail" for c in checks):
        raise InconsistencyError("fixture check failed")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trialpersuasion", description="Optimal signaling in multi-phase trials.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal strategy and utilities at a prior")
    p.add_argument("tree")
    p.add_argument("--prior", type=_rational)
    p.add_argument("--out")
    p.add_argument("--pessimal-ties", action="store_true", help="break sender ties against the receiver")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("curve", help="value curve as CSV")
    p.add_argument("tree")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--node", default="root")
    p.add_argument("--receiver", action="store_true", help="add receiver utility column")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("two-phase", help="closed-form two-phase analysis")
    p.add_argument("--qa", type=_experiment, required=True)
    p.add_argument("--qb", type=_experiment, required=True)
    p.add_argument("--prior", type=_rational)
    p.add_argument("--bbp", action="store_true")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out")
    p.set_defaults(func=cmd_two_phase)

    for name, func, text in (
        ("prune", cmd_prune, "replace trivial-rooted subtrees by a revealing test"),
        ("expand", cmd_expand, "binarize multi-outcome determined nodes"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("tree")
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("check-equivalence", help="test the single-phase equivalence conditions")
    p.add_argument("tree")
    p.set_defaults(func=cmd_check_equivalence)

    p = sub.add_parser("oracle", help="compare the dynamic program with brute force")
    p.add_argument("tree")
    p.add_argument("--prior", type=_rational)
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--refine", type=int, default=2)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("perturb", help="sweep one experiment parameter")
    p.add_argument("tree")
    p.add_argument("--node", required=True)
    p.add_argument("--param", choices=("q1", "q2"), required=True)
    p.add_argument("--range", type=_perturb_range, required=True)
    p.add_argument("--prior", type=_rational)
    p.add_argument("--out")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("receiver-select", help="maximin choice of the second experiment")
    p.add_argument("--ea", type=_experiment, required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--range", type=_pair, required=True)
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--pessimal-ties", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_receiver_select)

    p = sub.add_parser("fixtures", help="check the published worked examples")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag in ("samples", "grid"):
        if getattr(args, flag, 2) < 2:
            parser.error(f"--{flag} must be at least 2")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InconsistencyError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
