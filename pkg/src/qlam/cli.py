"""Command-line interface: check, run, confluence, and fmt subcommands.

Exit codes: 0 on success, 1 when checking or a confluence suite fails (or a
run hits its step budget), 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .confluence import GenConfig, run_suite
from .ensemble import (
    EnsembleCapError,
    StepLimitError,
    evaluate,
    sample,
)
from .parser import ParseError, Program, parse_program
from .reduction import ProbStep, stuck_sites
from .syntax import Term, pretty
from .wellformed import WfReport, check

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    """Settings for one `qlam run` invocation."""

    mode: str = "ensemble"  # ensemble | sample
    max_steps: int = 10_000
    seed: int | None = None
    strategy: str = "strategy"
    json_output: bool = False
    trace: bool = False
    strict_wf: bool = False

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.mode == "sample" and self.seed is None:
            raise ValueError("sample mode requires a seed")


def _run_config(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    if seed is None and os.environ.get("QLAM_SEED") is not None:
        seed = int(os.environ["QLAM_SEED"])
    return RunConfig(mode="sample" if args.sample else "ensemble",
                     max_steps=args.max_steps, seed=seed, strategy=args.strategy,
                     json_output=args.json, trace=args.trace, strict_wf=args.strict_wf)


def _format_path(pos: tuple[int, ...]) -> str:
    return ".".join(map(str, pos)) if pos else "root"


def _load_program(path: str) -> Program:
    with open(path, encoding="utf-8") as handle:
        return parse_program(handle.read())


def _checked_report(program: Program, strict: bool) -> tuple[WfReport, Term | None]:
    target = program.main
    if target is None:
        if not program.defs:
            report = WfReport(False, [((), "program", "no definitions in file")])
            return report, None
        # no main: check every definition body
        verdict = True
        violations = []
        for name, term in program.defs:
            rep = check(term)
            verdict &= rep.verdict
            violations.extend(((pos, rule, f"{name}: {msg}") for pos, rule, msg in rep.violations))
        report = WfReport(verdict, violations)
    else:
        report = check(target)
    if strict:
        for line, col, msg in program.strict_notes:
            report.violations.append(((), "strict-surface", f"{line}:{col}: {msg}"))
        report.verdict = not report.violations
    return report, target


def _report_json(report: WfReport) -> dict:
    return {
        "verdict": report.verdict,
        "violations": [
            {"position": _format_path(pos), "rule": rule, "message": msg}
            for pos, rule, msg in report.violations
        ],
    }


def _print_report(report: WfReport, as_json: bool) -> None:
    if as_json:
        print(json.dumps(_report_json(report), indent=2))
        return
    if report.verdict:
        print("well-formed")
        return
    print("not well-formed:")
    for pos, rule, msg in report.violations:
        print(f"  [{_format_path(pos)}] {rule}: {msg}")


def _cmd_check(args: argparse.Namespace) -> int:
    program = _load_program(args.file)
    report, _ = _checked_report(program, args.strict_wf)
    _print_report(report, args.json)
    return EXIT_OK if report.verdict else EXIT_FAIL


def _trace_printer(step: ProbStep) -> None:
    print(f"  {step.rule} @{_format_path(step.position)} p={step.probability:.12g} "
          f"-> {pretty(step.target)}", file=sys.stderr)


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _run_config(args)
    except ValueError as exc:
        print(f"error: {exc} (pass --seed or set QLAM_SEED)", file=sys.stderr)
        return EXIT_USAGE
    program = _load_program(args.file)
    report, target = _checked_report(program, config.strict_wf)
    if target is None:
        print("error: program has no main", file=sys.stderr)
        return EXIT_USAGE
    if not report.verdict:
        _print_report(report, config.json_output)
        return EXIT_FAIL

    trace = (lambda _i, _j, step: _trace_printer(step)) if config.trace else None

    if config.mode == "sample":
        try:
            result = sample(target, config.seed, max_steps=config.max_steps, trace=trace)
        except StepLimitError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        if config.json_output:
            print(json.dumps({"term": pretty(result), "seed": config.seed}, indent=2))
        else:
            print(pretty(result))
        return EXIT_OK

    from .ensemble import NAMED_CHOOSERS
    from .reduction import RULESET_ST

    chooser = NAMED_CHOOSERS[config.strategy](RULESET_ST)
    try:
        res = evaluate(target, max_steps=config.max_steps, chooser=chooser, trace=trace)
    except EnsembleCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if config.json_output:
        print(json.dumps(res.ensemble.to_json(res.status), indent=2))
    else:
        print(f"status: {res.status} ({res.steps} steps)")
        for term, p in res.ensemble.entries:
            print(f"  p={p:.12g}  {pretty(term)}")
        stuck = [site for term, _ in res.ensemble.entries for site in stuck_sites(term)]
        for pos, why in stuck:
            print(f"  note: stuck at {_format_path(pos)}: {why}")
    return EXIT_OK if res.status == "Converged" else EXIT_FAIL


def _cmd_confluence(args: argparse.Namespace) -> int:
    config = GenConfig(max_size=args.max_size, max_width=args.max_width,
                       seed=args.seed, count=args.count)
    if args.pairs:
        pairs = []
        for chunk in args.pairs.split(","):
            left, _, right = chunk.partition(":")
            if left not in ("S", "T") or right not in ("S", "T"):
                print(f"error: bad rule-set pair {chunk!r} (use S:T etc.)", file=sys.stderr)
                return EXIT_USAGE
            pairs.append((left, right))
        required = set(range(len(pairs)))
    else:
        pairs = [("T", "T"), ("S", "T"), ("S", "S")]
        # the S:S diamond is informational by default; it is not part of the
        # guarantees the T and commutation suites certify
        required = {0, 1}
    summary = run_suite(config, tuple(pairs))
    if args.json:
        print(json.dumps(summary.to_json(), indent=2))
    else:
        for r in summary.results:
            status = "ok" if r.ok else f"{len(r.failures)} FAILURES"
            print(f"{r.rules_a}:{r.rules_b}  terms={r.terms_checked} "
                  f"pairs={r.pairs_checked} skipped={r.skipped} "
                  f"[{status}] {r.elapsed:.2f}s")
            for index, text, left, right in r.failures[:10]:
                print(f"    term #{index}: {text}")
                print(f"      no join for {left} vs {right}")
    failed = any(not summary.results[i].ok for i in required if i < len(summary.results))
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_fmt(args: argparse.Namespace) -> int:
    program = _load_program(args.file)
    chunks = []
    for name, atom in program.gates.items():
        rows = ",\n             ".join(
            "[" + ", ".join(_fmt_entry(z) for z in row) + "]" for row in atom.matrix)
        chunks.append(f"gate {name} = [{rows}];")
    for name, term in program.defs:
        chunks.append(f"{name} = {pretty(term)};")
    print("\n\n".join(chunks))
    return EXIT_OK


def _fmt_entry(z: complex) -> str:
    def f(x: float) -> str:
        return "0" if x == 0 else f"{x:.12g}"

    return f"({f(z.real)},{f(z.imag)})"


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlam",
        description="Interpreter and confluence harness for a linear lambda "
                    "calculus with explicit qubits and projective measurement.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="well-formedness check a program file")
    p_check.add_argument("file")
    p_check.add_argument("--strict-wf", action="store_true",
                         help="also reject register constants not written in normal form")
    p_check.add_argument("--json", action="store_true")
    p_check.set_defaults(fn=_cmd_check)

    p_run = sub.add_parser("run", help="evaluate a program's main term")
    p_run.add_argument("file")
    mode = p_run.add_mutually_exclusive_group()
    mode.add_argument("--ensemble", action="store_true",
                      help="full distribution over normal forms (default)")
    mode.add_argument("--sample", action="store_true",
                      help="one seeded probabilistic run")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--max-steps", type=int, default=10_000)
    p_run.add_argument("--strategy", choices=("strategy", "leftmost", "rightmost"),
                       default="strategy",
                       help="redex chooser for ensemble evaluation")
    p_run.add_argument("--trace", action="store_true",
                       help="print each reduction step on stderr")
    p_run.add_argument("--json", action="store_true")
    p_run.add_argument("--strict-wf", action="store_true")
    p_run.set_defaults(fn=_cmd_run)

    p_conf = sub.add_parser("confluence", help="run the diamond/commutation suites")
    p_conf.add_argument("--count", type=int, default=1000)
    p_conf.add_argument("--max-size", type=int, default=12)
    p_conf.add_argument("--max-width", type=int, default=3)
    p_conf.add_argument("--seed", type=int, default=0)
    p_conf.add_argument("--pairs", type=str, default=None,
                        help="comma-separated rule-set pairs, e.g. T:T,S:T")
    p_conf.add_argument("--json", action="store_true")
    p_conf.set_defaults(fn=_cmd_confluence)

    p_fmt = sub.add_parser("fmt", help="reprint a program in canonical form")
    p_fmt.add_argument("file")
    p_fmt.set_defaults(fn=_cmd_fmt)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
