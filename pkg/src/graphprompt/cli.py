"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad data, config or node), 2 system error
(I/O, credentials, backend outage).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from .attributes import AttributeBuildError
from .config import ConfigError, RunConfig, load_config
from .evaluation import EvalReport, ablation_sweep, make_backend, nshot_sweep, run_eval
from .gateway import LlmError
from .graph import GraphError, load_graph, load_split
from .mock import MockPolicyError
from .parsing import parse_answer
from .pipeline import Compiler
from .prompting import PromptError, format_transcript
from .relations import ConvergenceError, RelationError
from .session import InteractiveSession, SessionStateError
from .tree import STYLE_PRESETS, TreeError

EXIT_OK, EXIT_DOMAIN, EXIT_SYSTEM = 0, 1, 2
DOMAIN_ERRORS = (
    GraphError,
    ConfigError,
    PromptError,
    TreeError,
    RelationError,
    AttributeBuildError,
    MockPolicyError,
    SessionStateError,
)
SYSTEM_ERRORS = (OSError, LlmError, ConvergenceError)
DEFAULT_SHOTS = "1,3,5,10,15,20"

log = logging.getLogger("graphprompt")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(args) -> RunConfig:
    overrides = list(args.set or [])
    if getattr(args, "backend", None):
        backend = args.backend
        if backend.startswith("mock:script:"):
            # command-line paths are relative to the working directory, not the config
            backend = "mock:script:" + str(Path(backend.removeprefix("mock:script:")).resolve())
        overrides.append(f"backend={backend}")
    if getattr(args, "samples", None) is not None:
        overrides.append(f"samples={args.samples}")
    if getattr(args, "temperature", None) is not None:
        overrides.append(f"llm.temperature={args.temperature}")
    return load_config(args.config, overrides)


def _summary(rows: list[tuple[str, EvalReport]]) -> str:
    head = f"{'run':<16}{'n':>6}{'accuracy':>10}{'unparseable':>13}{'errors':>8}{'prompt_bytes':>14}"
    lines = [head, "-" * len(head)]
    for name, r in rows:
        acc = "n/a" if r.accuracy is None else f"{r.accuracy:.4f}"
        unp = "n/a" if r.unparseable_rate is None else f"{r.unparseable_rate:.4f}"
        lines.append(f"{name:<16}{r.n_evaluated:>6}{acc:>10}{unp:>13}{r.n_errors:>8}{r.prompt_bytes_total:>14}")
    return "\n".join(lines)


def _finish(rows: list[tuple[str, EvalReport]], out: Path, stems: list[str]) -> int:
    for (_, report), stem in zip(rows, stems):
        report.write(out, stem)
    print(_summary(rows))
    print(f"reports written to {out}")
    errors = sum(r.n_errors for _, r in rows)
    if errors:
        _err(f"{errors} request(s) failed; see per-node error records")
        return EXIT_SYSTEM
    return EXIT_OK


def cmd_validate(args) -> int:
    graph = load_graph(args.graph)
    info = f"{graph.node_count} nodes, {len(graph.edges)} edges, {graph.num_classes} classes"
    if graph.features is not None:
        info += f", {graph.features.shape[1]} features"
    if args.split:
        split = load_split(args.split, graph)
        info += f"; split {len(split.train)}/{len(split.val)}/{len(split.test)}"
    print(f"OK ({info})")
    return EXIT_OK


def cmd_prompt(args) -> int:
    config = _load(args)
    compiler = Compiler(config)
    compiler.check_node(args.node)
    text = format_transcript(compiler.messages(args.node, compiler.demonstrations(), args.style))
    sys.stdout.write(text)
    if args.dump_prompt:
        Path(args.dump_prompt).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_classify(args) -> int:
    config = _load(args)
    compiler = Compiler(config)
    compiler.check_node(args.node)
    backend = make_backend(config)
    messages = compiler.messages(args.node, compiler.demonstrations(), args.style)
    if args.dump_prompt:
        Path(args.dump_prompt).write_text(format_transcript(messages), encoding="utf-8")
    reply = backend.complete(messages)
    pred = parse_answer(reply, compiler.choices)
    print(reply)
    print(f"prediction: {pred.letter or '-'} ({pred.status})")
    return EXIT_OK


def _dump_prompts(compiler: Compiler, report: EvalReport, style: str, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for rec in report.records:
        msgs = compiler.messages(rec.node_id, report.demonstrations, style)
        (out / f"node_{rec.node_id}.txt").write_text(format_transcript(msgs), encoding="utf-8")


def cmd_eval(args) -> int:
    config = _load(args)
    compiler = Compiler(config)
    backend = make_backend(config)
    report = run_eval(config, backend, compiler)
    if args.dump_prompt:
        _dump_prompts(compiler, report, report.style, Path(args.dump_prompt))
    return _finish([(report.style, report)], Path(args.out), ["report"])


def cmd_sweep(args) -> int:
    config = _load(args)
    try:
        shots = [int(s) for s in args.shots.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--shots expects comma-separated integers, got {args.shots!r}") from None
    reports = nshot_sweep(config, shots)
    rows = [(f"{n}-shot", r) for n, r in zip(shots, reports)]
    return _finish(rows, Path(args.out), [f"sweep_{n}shot" for n in shots])


def cmd_ablate(args) -> int:
    config = _load(args)
    reports = ablation_sweep(config)
    rows = list(reports.items())
    return _finish(rows, Path(args.out), [f"ablate_{s}" for s in reports])


REPL_HELP = "Commands: /ask sends the query, any other line is feedback to the model, /quit exits."


def cmd_interact(args, stdin=None) -> int:
    stdin = stdin or sys.stdin
    config = _load(args)
    compiler = Compiler(config)
    compiler.check_node(args.node)
    backend = make_backend(config)
    messages = compiler.messages(args.node, compiler.demonstrations(), args.style)
    transcript = Path(args.transcript or Path(args.out) / f"transcript_node{args.node}.jsonl")
    transcript.parent.mkdir(parents=True, exist_ok=True)
    print(format_transcript(messages), end="")
    print(REPL_HELP)
    with open(transcript, "w", encoding="utf-8") as sink:
        session = InteractiveSession(messages, backend, compiler.choices, sink)
        for line in stdin:
            line = line.rstrip("\n")
            cmd = line.strip()
            if cmd == "/quit":
                break
            try:
                if cmd == "/ask":
                    turn = session.ask()
                elif not cmd:
                    print("(empty input ignored) " + REPL_HELP)
                    continue
                else:
                    turn = session.feedback(line)
            except SessionStateError as exc:
                _err(f"{exc}. {REPL_HELP}")
                continue
            if turn.error:
                _err(f"backend error: {turn.error}")
            else:
                print(f"[assistant]\n{turn.reply}")
                print(f"prediction: {turn.prediction.letter or '-'} ({turn.prediction.status})")
    print(f"transcript written to {transcript}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphprompt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log retries and progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a graph file (and optionally a split file)")
    p.add_argument("graph")
    p.add_argument("split", nargs="?")
    p.set_defaults(func=cmd_validate)

    def common(p, node=False, style=False, out=True, backend=True):
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (dotted keys)")
        if backend:
            p.add_argument("--backend", help="'http' or 'mock:<policy>' (first-ppr, majority-ppr, center, fixed:X, script:FILE)")
        if node:
            p.add_argument("--node", type=int, required=True)
        if style:
            p.add_argument("--style", choices=sorted(STYLE_PRESETS), help="tree style (default: from config)")
        if out:
            p.add_argument("-o", "--out", default="results", help="output directory")

    p = sub.add_parser("prompt", help="print the exact prompt for one node")
    common(p, node=True, style=True, out=False, backend=False)
    p.add_argument("--dump-prompt", metavar="PATH", help="also write the prompt text to PATH")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("classify", help="classify a single node")
    common(p, node=True, style=True, out=False)
    p.add_argument("--dump-prompt", metavar="PATH")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="evaluate the configured eval set")
    common(p)
    p.add_argument("--samples", type=int, help="queries per node (majority vote)")
    p.add_argument("--temperature", type=float)
    p.add_argument("--dump-prompt", metavar="DIR", help="write every prompt sent to DIR/node_<id>.txt")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="n-shot sweep")
    common(p)
    p.add_argument("--shots", default=DEFAULT_SHOTS, help=f"comma-separated shot counts (default {DEFAULT_SHOTS})")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="canonical tree vs. the four structural ablations")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("interact", help="interactive feedback session for one node")
    common(p, node=True, style=True)
    p.add_argument("--transcript", help="JSONL transcript path (default OUT/transcript_node<N>.jsonl)")
    p.set_defaults(func=cmd_interact)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        _err(f"error: file not found: {exc.filename}")
        return EXIT_SYSTEM
    except SYSTEM_ERRORS as exc:
        _err(f"error: {exc}")
        return EXIT_SYSTEM


if __name__ == "__main__":
    sys.exit(main())
