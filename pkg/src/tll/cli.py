"""The ``tll`` command line.

Exit codes: 0 success, 1 a check or property failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import TLLError
from .evaluation import ptrace
from .heap import run_heap
from .pretty import pretty
from .reduction import default_fuel, normalize
from .signature import load_file
from .syntax import DefRef

OK, FAILED, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"tll: error: {message}", file=sys.stderr)
        sys.exit(USAGE)


def _emit(args, record: dict, text: str) -> None:
    if args.json:
        print(json.dumps(record, ensure_ascii=False))
    else:
        print(text)


def _report(args, err: TLLError, file: str | None = None) -> int:
    d = err.to_diagnostic()
    if args.json:
        rec = d.to_json()
        if file is not None:
            rec["file"] = file
        print(json.dumps(rec, ensure_ascii=False))
    else:
        print(d.render(), file=sys.stderr)
    return FAILED


def _definition(sig, name: str):
    info = sig.defs.get(name)
    if info is None or info.body is None:
        raise TLLError("name-not-found", f"no definition named {name}")
    return info


# -- commands ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    status = OK
    for f in args.files:
        try:
            sig = load_file(f)
        except TLLError as e:
            status = _report(args, e, f)
            continue
        for w in sig.warnings:
            if args.json:
                print(json.dumps({"severity": "warning", "code": "all-instances-pruned", "message": w, "file": f}))
            else:
                print(f"{f}: warning: {w}", file=sys.stderr)
        n = len(sig.order) - len(_prelude_names())
        _emit(args, {"file": f, "status": "ok", "declarations": n}, f"{f}: ok ({n} declarations)")
    return status


def _prelude_names() -> list[str]:
    from .signature import prelude

    return prelude().order


def cmd_normalize(args) -> int:
    sig = load_file(args.file)
    info = _definition(sig, args.defn)
    nf = normalize(sig, info.body, args.fuel)
    _emit(args, {"def": args.defn, "normal_form": pretty(nf, sig=sig)}, pretty(nf, sig=sig))
    return OK


def cmd_erase(args) -> int:
    sig = load_file(args.file)
    info = _definition(sig, args.defn)
    if info.level != "program":
        raise TLLError("not-a-program", f"{args.defn} is a logical definition and has no erased form")
    text = pretty(info.erased, sig=sig)
    _emit(args, {"def": args.defn, "erased": text}, text)
    return OK


def cmd_run(args) -> int:
    sig = load_file(args.file)
    info = _definition(sig, args.defn)
    if info.level != "program":
        raise TLLError("not-a-program", f"{args.defn} is a logical definition and cannot run")
    main = DefRef(args.defn)
    if args.semantics == "program":
        trace = ptrace(main, sig, args.fuel, erased=True)
        value = pretty(trace.result, sig=sig)
        if args.trace and not args.json:
            for i, t in enumerate(trace.terms):
                rule = trace.rules[i - 1] if i else "start"
                print(f"{i}\t{rule}\t{pretty(t, sig=sig)}")
        _emit(
            args,
            {"semantics": "program", "value": value, "steps": trace.steps},
            value,
        )
        return OK
    run = run_heap(main, info.type, sig, fuel=args.fuel)
    if args.trace and not args.json:
        for row in run.trace:
            print(f"{row.index}\t{row.rule}\theap={row.heap_size}\tlive_L={row.live_linear}")
    value = pretty(run.value, sig=sig)
    record = {
        "semantics": "heap",
        "value": value,
        "location": run.result,
        "steps": run.steps,
        "allocations": run.allocations,
        "program_steps": run.program_steps,
        "result_sort": run.result_sort.value,
        "leaked": [c.loc for c in run.leaked],
        "live_linear": [c.loc for c in run.live],
        "violations": run.violations,
    }
    if args.leak_report:
        record["census"] = [
            {"loc": c.loc, "sort": c.sort.value, "head": c.head, "reachable": c.reachable} for c in run.census
        ]
    if args.json:
        print(json.dumps(record, ensure_ascii=False))
    else:
        print(value)
        print(
            f"-- *{run.result}: {run.steps} steps, {run.allocations} allocations, "
            f"{len(run.leaked)} leaked, {len(run.live)} live linear"
        )
        if args.leak_report:
            for c in run.census:
                print(f"   *{c.loc}\t{c.sort.value}\t{c.head}\t{'reachable' if c.reachable else 'unreachable'}")
        for v in run.violations:
            print(f"-- violation: {v}", file=sys.stderr)
    return OK if not run.violations and not run.leaked else FAILED


def cmd_meta(args) -> int:
    from .meta import PROPERTIES, run_property

    names = list(PROPERTIES) if args.property == "all" else [args.property]
    status = OK
    for name in names:
        res = run_property(name, args.seeds, args.depth, mutant=args.mutant)
        if args.json:
            cex = res.counterexample
            print(
                json.dumps(
                    {
                        "property": name,
                        "passed": res.passed,
                        "cases": res.cases,
                        "skipped": res.skipped,
                        "seconds": round(res.seconds, 3),
                        "counterexample": None if cex is None else cex.__dict__,
                    },
                    ensure_ascii=False,
                )
            )
        else:
            print(res.summary())
        if not res.passed:
            status = FAILED
    return status


def cmd_signature(args) -> int:
    sig = load_file(args.file)
    skip = set(_prelude_names()) if not args.all else set()
    for rec in sig.export():
        if rec["name"] not in skip:
            print(json.dumps(rec, ensure_ascii=False))
    return OK


# -- argument parsing ---------------------------------------------------------------------


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}")
    if n < 0:
        raise argparse.ArgumentTypeError(f"must not be negative: {text}")
    return n


def build_parser() -> argparse.ArgumentParser:
    from .meta import PROPERTIES

    p = _Parser(prog="tll", description="A two-level linear dependent type theory.")
    p.add_argument("--json", action="store_true", help="structured output")
    # --json is also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="check every declaration of the given files")
    c.add_argument("files", nargs="+")
    c.set_defaults(run=cmd_check)

    for name, fn, helptext in (
        ("normalize", cmd_normalize, "print the normal form of a definition"),
        ("erase", cmd_erase, "print the erased form of a program definition"),
    ):
        c = sub.add_parser(name, parents=[common], help=helptext)
        c.add_argument("file")
        c.add_argument("--def", dest="defn", required=True, metavar="NAME")
        c.add_argument("--fuel", type=_positive, default=None)
        c.set_defaults(run=fn)

    c = sub.add_parser("run", parents=[common], help="evaluate a program definition (main by default)")
    c.add_argument("file")
    c.add_argument("--def", dest="defn", default="main", metavar="NAME")
    c.add_argument("--semantics", choices=("program", "heap"), default="program")
    c.add_argument("--fuel", type=_positive, default=None)
    c.add_argument("--trace", action="store_true")
    c.add_argument("--leak-report", action="store_true")
    c.set_defaults(run=cmd_run)

    c = sub.add_parser("meta", parents=[common], help="run a metatheory property on generated programs")
    c.add_argument("--property", required=True, choices=(*PROPERTIES, "all"))
    c.add_argument("--seeds", type=_positive, default=1000)
    c.add_argument("--depth", type=_positive, default=6)
    c.add_argument("--mutant", action="store_true", help="use an evaluator whose β₁ ignores its value premise")
    c.set_defaults(run=cmd_meta)

    c = sub.add_parser("signature", parents=[common], help="export the declarations of a file")
    c.add_argument("file")
    c.add_argument("--all", action="store_true", help="include the prelude")
    c.set_defaults(run=cmd_signature)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "fuel") and args.fuel is None:
        args.fuel = default_fuel()
    try:
        return args.run(args)
    except TLLError as e:
        return _report(args, e, getattr(args, "file", None))


if __name__ == "__main__":
    sys.exit(main())
