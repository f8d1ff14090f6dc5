"""Command-line driver.

Exit status: 0 = all asserts proved; 1 = at least one alarm; 2 = usage or
parse error; 3 = internal invariant failure (including a soundness
disagreement with the oracle in --oracle mode).
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import analysis, oracle
from .feasibility import FeasibilityContext, MemoryModel
from .frontend import ParseError, lower, parse
from .relations import extract_all

_MODELS = {m.value: m for m in MemoryModel}


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="relax-check",
        description="Verify assertions in small concurrent programs under "
                    "SC/TSO/PSO/RMO memory models.")
    p.add_argument("input", help="input program (.lit file)")
    p.add_argument("--model", choices=sorted(_MODELS),
                   help="memory model (overrides the file's 'model' "
                        "directive; default sc)")
    p.add_argument("--max-combinations", type=int, default=analysis.DEFAULT_CAP,
                   help="interference-combination cap before the sound join "
                        "fallback kicks in (default %(default)s)")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check verdicts against exhaustive concrete "
                        "execution enumeration")
    p.add_argument("--oracle-max-events", type=int, default=12,
                   help="oracle per-execution memory-event budget "
                        "(default %(default)s)")
    p.add_argument("--oracle-max-loop-iters", type=int, default=3,
                   help="oracle loop unrolling bound (default %(default)s)")
    p.add_argument("--emit-relations", action="store_true",
                   help="dump the extracted relations and exit")
    p.add_argument("--format", choices=["text", "json"], default="text",
                   help="report format (default %(default)s)")
    return p


def run(argv: list[str]) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        with open(args.input, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        print(f"error: cannot read {args.input}: {e.strerror}",
              file=sys.stderr)
        return 2
    try:
        ast = parse(text)
        program = lower(ast)
    except ParseError as e:
        print(f"{args.input}:{e}", file=sys.stderr)
        return 2
    if args.max_combinations < 1:
        print("error: --max-combinations must be positive", file=sys.stderr)
        return 2

    model = _MODELS[args.model or ast.model or "sc"]

    if args.emit_relations:
        print(_relation_dump(program, model))
        return 0

    started = time.monotonic()
    try:
        env_map, verdicts, stats = analysis.analyze_all(
            program, model, cap=args.max_combinations)
    except analysis.AnalysisError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 3
    wall = time.monotonic() - started

    oracle_flags: dict[int, bool] | None = None
    oracle_error: str | None = None
    if args.oracle:
        try:
            oracle_flags = oracle.violates(
                program, model, max_events=args.oracle_max_events,
                max_loop_iters=args.oracle_max_loop_iters)
        except oracle.OracleLimitError as e:
            oracle_error = str(e)

    annotations: dict[int, str] = {}
    soundness_bug = False
    if oracle_flags is not None:
        for v in verdicts:
            violated = oracle_flags.get(v.node, False)
            if violated and v.status == "PROVED":
                annotations[v.node] = "SOUNDNESS BUG"
                soundness_bug = True
            elif not violated and v.status == "ALARM":
                annotations[v.node] = "analyzer imprecise"
            else:
                annotations[v.node] = "agree"

    if args.format == "json":
        print(json.dumps(_json_report(args.input, model, verdicts, stats,
                                      wall, annotations, oracle_error),
                         indent=2, sort_keys=True))
    else:
        _print_text(args.input, model, verdicts, stats, wall, annotations,
                    oracle_error)

    if soundness_bug:
        return 3
    return 1 if any(v.status == "ALARM" for v in verdicts) else 0


def _print_text(path, model, verdicts, stats, wall, annotations,
                oracle_error) -> None:
    for v in verdicts:
        line = v.location.split(":")[0] if v.location else "?"
        msg = f"{path}:{line}: {v.status} under {model}"
        if v.node in annotations:
            msg += f" (oracle: {annotations[v.node]})"
        print(msg)
    if oracle_error:
        print(f"oracle: skipped ({oracle_error})")
    total_enum = sum(t.combinations_enumerated
                     for t in stats.per_thread.values())
    total_pruned = sum(t.combinations_pruned
                       for t in stats.per_thread.values())
    print(f"stats: threads={stats.threads} nodes={stats.nodes} "
          f"combinations={total_enum} pruned={total_pruned} "
          f"rounds={stats.outer_rounds} wall_time_s={wall:.3f}")
    for name, t in stats.per_thread.items():
        extra = " overflowed" if t.overflowed else ""
        print(f"stats: thread {name}: "
              f"combinations={t.combinations_enumerated} "
              f"pruned={t.combinations_pruned}{extra}")


def _json_report(path, model, verdicts, stats, wall, annotations,
                 oracle_error) -> dict:
    return {
        "file": path,
        "model": model.value,
        "verdicts": [
            {
                "line": int(v.location.split(":")[0]) if v.location else None,
                "node": v.node,
                "status": v.status,
                **({"oracle": annotations[v.node]}
                   if v.node in annotations else {}),
            }
            for v in verdicts
        ],
        "stats": {
            "threads": stats.threads,
            "nodes": stats.nodes,
            "outer_rounds": stats.outer_rounds,
            "per_thread": {
                name: {
                    "combinations_enumerated": t.combinations_enumerated,
                    "combinations_pruned": t.combinations_pruned,
                    "overflowed": t.overflowed,
                }
                for name, t in stats.per_thread.items()
            },
            "wall_time_s": round(wall, 6),
        },
        **({"oracle_error": oracle_error} if oracle_error else {}),
    }


def _relation_dump(program, model: MemoryModel) -> str:
    store = extract_all(program)
    ctx = FeasibilityContext(program, model, store)
    lines = [store.dump()]
    for a, b in sorted(ctx.no_reorder):
        lines.append(f"NoReorder({a},{b})")
    for a, b in sorted(ctx.base_mhb):
        lines.append(f"MHB({a},{b})")
    return "\n".join(lines)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
