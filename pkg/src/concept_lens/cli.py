"""``concept-lens`` command line: one subcommand per pipeline stage.

Exit status is 0 on success, 1 on a usage error and 2 when an input file is
malformed.  Artifacts go to stdout or ``--out``; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .codemodel import CodeModel, load_code_model
from .core import RankingConfig, load_rank_csv, profiles_to_csv, rank
from .errors import InputFormatError, ParseError, UnknownIdError
from .evaluate import default_grid, evaluate, load_ground_truth, sweep, sweep_to_csv, type_groups
from .generator import ScenarioSpec, generate
from .grouping import GroupingResult, Mode, dump_groups, group_objects, load_groups
from .patterns import ALL_PATTERN_TYPES, MetaPattern, detect, dump_patterns, load_patterns
from .summarize import CLASS, INSTANCE, RENDERERS, DiagramOptions, object_types, summarize
from .trace import Trace, load_trace


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _progress(enabled: bool):
    if not enabled:
        return None

    def beat(n: int) -> None:
        print(f"read {n} events", file=sys.stderr, flush=True)

    return beat


# -- input helpers ------------------------------------------------------------


def _model(args) -> CodeModel:
    return load_code_model(args.model)


def _trace(args) -> Trace:
    return load_trace(args.trace, progress=_progress(args.progress))


def _patterns(args, model: CodeModel) -> list[MetaPattern]:
    if getattr(args, "patterns", None):
        return load_patterns(args.patterns, model)
    return detect(model)


def _groups(args, trace: Trace, model: CodeModel, patterns: list[MetaPattern]) -> GroupingResult:
    if getattr(args, "groups", None):
        return load_groups(args.groups, patterns)
    return group_objects(trace, model, patterns, Mode(args.mode))


def _ranking(args, trace: Trace):
    if getattr(args, "rank", None):
        return load_rank_csv(args.rank)[1]
    return rank(trace, _ranking_config(args))[1]


def _ranking_config(args) -> RankingConfig:
    return RankingConfig(L_t_long=args.l_long, L_t_short=args.l_short)


# -- subcommands ----------------------------------------------------------------


def cmd_detect(args) -> int:
    model = _model(args)
    _emit(dump_patterns(model, detect(model)), args.out)
    return 0


def cmd_group(args) -> int:
    model = _model(args)
    patterns = _patterns(args, model)
    trace = _trace(args)
    _emit(dump_groups(group_objects(trace, model, patterns, Mode(args.mode))), args.out)
    return 0


def cmd_rank(args) -> int:
    profiles, _ = rank(_trace(args), _ranking_config(args))
    _emit(profiles_to_csv(profiles), args.out)
    return 0


def cmd_summarize(args) -> int:
    model = _model(args)
    patterns = _patterns(args, model)
    trace = _trace(args)
    groups = _groups(args, trace, model, patterns)
    ranking = _ranking(args, trace)
    opts = DiagramOptions(level=args.level, include_external=args.include_external, returns=args.returns)
    diagram = summarize(trace, model, patterns, groups, ranking, args.it, opts)
    _emit(RENDERERS[args.format](diagram), args.out)
    return 0


def _diagram_type_sets(path: str) -> list[frozenset[str]]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return [frozenset(l["type_names"]) for l in doc["lifelines"]]
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"line {exc.lineno} column {exc.colno}", path=path) from None
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad diagram file: {exc}", path=path) from None


def cmd_evaluate(args) -> int:
    truth = load_ground_truth(args.truth)
    if args.diagram:
        TS = _diagram_type_sets(args.diagram)
    else:
        if not (args.model and args.trace):
            raise UsageError("evaluate: either --diagram or both --model and --trace are required")
        model = _model(args)
        patterns = _patterns(args, model)
        trace = _trace(args)
        groups = _groups(args, trace, model, patterns)
        TS = type_groups(_ranking(args, trace), args.it, groups, object_types(trace))
    _emit(json.dumps(evaluate(TS, truth).to_dict(), indent=1) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    truth = load_ground_truth(args.truth)
    model = _model(args)
    patterns = _patterns(args, model)
    trace = _trace(args)
    groups = _groups(args, trace, model, patterns)
    ranking = _ranking(args, trace)
    grid = default_grid(ranking) if args.grid is None else args.grid
    rows = sweep(ranking, list(groups), object_types(trace), truth, grid)
    _emit(sweep_to_csv(rows), args.out)
    return 0


def _range(text: str) -> tuple[int, int]:
    try:
        parts = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI integers, got {text!r}") from None
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return parts[0], parts[1]


def _mix(text: str) -> dict[str, int]:
    out = {}
    for item in filter(None, text.split(",")):
        name, _, count = item.partition("=")
        if name not in ALL_PATTERN_TYPES or not count.isdigit():
            raise argparse.ArgumentTypeError(
                f"bad mix entry {item!r}; expected TYPE=COUNT with TYPE in {', '.join(ALL_PATTERN_TYPES)}"
            )
        out[name] = int(count)
    return out


def _grid(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None


def cmd_generate(args) -> int:
    if args.spec:
        try:
            doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
            spec = ScenarioSpec.from_dict(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, location=f"line {exc.lineno} column {exc.colno}", path=args.spec) from None
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad scenario spec: {exc}", path=args.spec) from None
    else:
        try:
            spec = ScenarioSpec(
                pattern_mix=args.mix,
                depth=args.depth,
                fanout=args.fanout,
                delegate_prob=args.delegate_prob,
                threads=args.threads,
                temp_rate=args.temp_rate,
                seed=args.seed,
                activations=args.activations,
                self_call_prob=args.self_call_prob,
                target_events=args.target_events,
            )
        except ValueError as exc:
            raise UsageError(f"generate: {exc}") from None
    sc = generate(spec, args.out)
    print(f"wrote {sc.event_count} events to {args.out}", file=sys.stderr)
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="concept-lens", description="Summarized sequence diagrams from execution traces.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(sp, *, model=True, trace=True, model_required=True, trace_required=True):
        if model:
            sp.add_argument("--model", required=model_required, help="code model JSON")
        if trace:
            sp.add_argument("--trace", required=trace_required, help="trace file")
            sp.add_argument("--progress", action="store_true", help="print event-count heartbeats to stderr")
        sp.add_argument("--out", help="write the artifact here instead of stdout")

    def ranking_flags(sp):
        sp.add_argument("--l-long", type=float, default=0.5, help="lifetime factor for captured objects (default 0.5)")
        sp.add_argument("--l-short", type=float, default=0.1, help="lifetime factor for reference-escaped objects (default 0.1)")

    def pipeline_inputs(sp):
        sp.add_argument("--patterns", help="pattern report from `detect` (default: detect from --model)")
        sp.add_argument("--groups", help="group file from `group` (default: group now with --mode)")
        sp.add_argument("--rank", help="rank CSV from `rank` (default: rank now)")
        sp.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.MP.value, help="grouping mode (default mp)")
        ranking_flags(sp)

    sp = sub.add_parser("detect", help="list the meta patterns of a code model")
    common(sp, trace=False)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("group", help="group trace objects by meta pattern")
    common(sp)
    sp.add_argument("--patterns", help="pattern report from `detect` (default: detect from --model)")
    sp.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.MP.value, help="grouping mode (default mp)")
    sp.set_defaults(func=cmd_group)

    sp = sub.add_parser("rank", help="object profiles and importance as CSV")
    common(sp, model=False)
    ranking_flags(sp)
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("summarize", help="render the summarized sequence diagram")
    common(sp)
    pipeline_inputs(sp)
    sp.add_argument("--it", type=float, default=0.0, help="importance threshold; objects above it are shown (default 0)")
    sp.add_argument("--level", choices=[CLASS, INSTANCE], default=CLASS, help="lifeline level (default class)")
    sp.add_argument("--include-external", action="store_true", help="show messages from outside the shown groups")
    sp.add_argument("--returns", action="store_true", help="draw return messages")
    sp.add_argument("--format", choices=sorted(RENDERERS), default="plantuml", help="output format (default plantuml)")
    sp.set_defaults(func=cmd_summarize)

    sp = sub.add_parser("evaluate", help="F and Recall of a diagram against ground truth")
    common(sp, model_required=False, trace_required=False)
    sp.add_argument("--truth", required=True, help="ground-truth concepts JSON")
    sp.add_argument("--diagram", help="JSON diagram from `summarize --format json`")
    pipeline_inputs(sp)
    sp.add_argument("--it", type=float, default=0.0, help="importance threshold when computing groups (default 0)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("sweep", help="F, Recall and lifeline count over importance thresholds")
    common(sp)
    sp.add_argument("--truth", required=True, help="ground-truth concepts JSON")
    pipeline_inputs(sp)
    sp.add_argument("--grid", type=_grid, help="comma-separated thresholds (default: every distinct importance and 0)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("generate", help="write a synthetic model, trace, oracle and ground truth")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--spec", help="scenario spec JSON; overrides the inline flags")
    sp.add_argument("--mix", type=_mix, default={"1N-RCon": 1}, help="instances per pattern type, e.g. 1N-RCon=2,11-Con=1")
    sp.add_argument("--depth", type=_range, default=(1, 3), help="tree depth range LO,HI (default 1,3)")
    sp.add_argument("--fanout", type=_range, default=(1, 3), help="children/listeners range LO,HI (default 1,3)")
    sp.add_argument("--activations", type=_range, default=(1, 3), help="activations per instance LO,HI (default 1,3)")
    sp.add_argument("--delegate-prob", type=float, default=0.0, help="chance a leaf or listener delegates (default 0)")
    sp.add_argument("--self-call-prob", type=float, default=0.3, help="chance a template goes through a private helper (default 0.3)")
    sp.add_argument("--temp-rate", type=float, default=0.2, help="temporary objects per activation (default 0.2)")
    sp.add_argument("--threads", type=int, default=1, help="trace threads (default 1)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--target-events", type=int, help="keep activating until about this many events")
    sp.set_defaults(func=cmd_generate)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnknownIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
