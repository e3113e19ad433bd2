"""End-to-end runs: compile -> query -> parse -> score, plus n-shot and ablation sweeps."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .config import ConfigError, RunConfig
from .gateway import Backend, CallResult, HttpBackend, complete_many
from .graph import class_letter
from .mock import MockBackend, MockPolicy
from .parsing import UNPARSEABLE, parse_answer
from .pipeline import Compiler
from .tree import ABLATION_STYLES

REPORT_SCHEMA = 1
CSV_COLUMNS = ("node_id", "gold", "letter", "status", "prompt_bytes", "latency_ms")
RE_ASK_MESSAGE = "Please answer with a single choice letter wrapped by <answer> </answer>."


@dataclass
class NodeRecord:
    node_id: int
    gold: str
    letter: str | None
    status: str
    raw: str | None
    prompt_bytes: int
    latency_ms: float
    sample_letters: list[str | None] = field(default_factory=list)
    error: str | None = None

    @property
    def correct(self) -> bool:
        return self.letter is not None and self.letter == self.gold


@dataclass
class EvalReport:
    records: list[NodeRecord]
    config: dict
    style: str
    n_shots: int
    demonstrations: list[int]
    backend: str
    prompt_sha256: str

    @property
    def n_evaluated(self) -> int:
        return len(self.records)

    @property
    def n_correct(self) -> int:
        return sum(r.correct for r in self.records)

    @property
    def accuracy(self) -> float | None:
        return self.n_correct / self.n_evaluated if self.records else None

    @property
    def unparseable_rate(self) -> float | None:
        if not self.records:
            return None
        return sum(r.status == UNPARSEABLE for r in self.records) / self.n_evaluated

    @property
    def n_errors(self) -> int:
        return sum(r.error is not None for r in self.records)

    @property
    def prompt_bytes_total(self) -> int:
        return sum(r.prompt_bytes for r in self.records)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "style": self.style,
            "n_shots": self.n_shots,
            "demonstrations": self.demonstrations,
            "backend": self.backend,
            "n_evaluated": self.n_evaluated,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "unparseable_rate": self.unparseable_rate,
            "n_errors": self.n_errors,
            "prompt_sha256": self.prompt_sha256,
            "timing": {
                "latency_ms_total": round(sum(r.latency_ms for r in self.records), 3),
                "prompt_bytes_total": self.prompt_bytes_total,
            },
            "config": self.config,
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow([r.node_id, r.gold, r.letter or "", r.status, r.prompt_bytes, r.latency_ms])
        return buf.getvalue()

    def write(self, out_dir: str | Path, stem: str = "report") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        json_path, csv_path = out / f"{stem}.json", out / f"{stem}.csv"
        json_path.write_text(self.to_json(), encoding="utf-8")
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        return json_path, csv_path


def make_backend(config: RunConfig) -> Backend:
    if config.backend == "http":
        backend = HttpBackend(config.llm)
        backend.check()
        return backend
    return MockBackend(MockPolicy.parse(config.backend))


def eval_nodes(compiler: Compiler) -> list[int]:
    config, split, graph = compiler.config, compiler.split, compiler.graph
    if isinstance(config.eval_set, str):
        nodes = sorted(getattr(split, config.eval_set))
    else:
        nodes = sorted(set(config.eval_set))
    for n in nodes:
        compiler.check_node(n)
        if n in split.train:
            raise ConfigError(f"eval node {n} is in the train split; its label would leak into the prompt")
        if n not in graph.labels:
            raise ConfigError(f"eval node {n} has no gold label")
    if config.limit is not None:
        nodes = nodes[: config.limit]
    return nodes


def _vote(letters: Sequence[str | None]) -> str | None:
    counts = Counter(letters)
    top = max(counts.values())
    return next(x for x in letters if counts[x] == top)


def _score_node(node, gold, prompt_bytes, calls: list[CallResult], choices) -> NodeRecord:
    latency = round(sum(c.latency_ms for c in calls), 3)
    ok = [c for c in calls if c.error is None]
    if not ok:
        return NodeRecord(node, gold, None, UNPARSEABLE, None, prompt_bytes, latency, error=calls[0].error)
    preds = [parse_answer(c.text, choices) for c in ok]
    letters = [p.letter for p in preds]
    winner = _vote(letters)
    chosen = next(p for p in preds if p.letter == winner)
    errors = [c.error for c in calls if c.error is not None]
    return NodeRecord(
        node,
        gold,
        chosen.letter,
        chosen.status,
        chosen.raw,
        prompt_bytes,
        latency,
        sample_letters=letters if len(calls) > 1 else [],
        error=errors[0] if errors else None,
    )


def run_eval(
    config: RunConfig,
    backend: Backend | None = None,
    compiler: Compiler | None = None,
    style: str | None = None,
    n_shots: int | None = None,
) -> EvalReport:
    """Evaluate every node of the eval set; records come back ordered by node id."""
    compiler = compiler or Compiler(config)
    backend = backend or make_backend(config)
    style = style or config.style
    nodes = eval_nodes(compiler)
    demos = compiler.demonstrations(n_shots)
    prompts = [compiler.messages(n, demos, style) for n in nodes]

    requests = [p for p in prompts for _ in range(config.samples)]
    parallelism = config.llm.parallelism if config.backend == "http" else 1
    results = complete_many(backend, requests, parallelism)
    if config.re_ask:
        results = _re_ask(backend, requests, results, compiler, parallelism)

    digest = hashlib.sha256()
    records = []
    for i, (node, msgs) in enumerate(zip(nodes, prompts)):
        text = "".join(m["content"] for m in msgs).encode("utf-8")
        digest.update(text)
        calls = results[i * config.samples:(i + 1) * config.samples]
        gold = class_letter(compiler.graph.labels[node])
        records.append(_score_node(node, gold, len(text), calls, compiler.choices))

    return EvalReport(
        records=records,
        config=config.model_dump(mode="json"),
        style=style,
        n_shots=len(demos),
        demonstrations=demos,
        backend=repr(backend),
        prompt_sha256=digest.hexdigest(),
    )


def _re_ask(backend, requests, results, compiler, parallelism) -> list[CallResult]:
    retry_idx = [
        i for i, r in enumerate(results)
        if r.error is None and parse_answer(r.text, compiler.choices).status == UNPARSEABLE
    ]
    follow_ups = [
        list(requests[i]) + [{"role": "assistant", "content": results[i].text}, {"role": "user", "content": RE_ASK_MESSAGE}]
        for i in retry_idx
    ]
    results = list(results)
    for i, res in zip(retry_idx, complete_many(backend, follow_ups, parallelism)):
        results[i] = CallResult(res.text, res.error, round(results[i].latency_ms + res.latency_ms, 3))
    return results


def nshot_sweep(config: RunConfig, shots: Sequence[int], backend: Backend | None = None) -> list[EvalReport]:
    """One report per shot count; the smaller demonstration sets are prefixes of the larger ones."""
    compiler = Compiler(config)
    if shots and max(shots) > len(compiler.observed & set(compiler.graph.labels)) and not config.per_class:
        raise ConfigError(f"{max(shots)} shots exceed the {len(compiler.observed)} training nodes")
    backend = backend or make_backend(config)
    return [run_eval(config, backend, compiler, n_shots=n) for n in shots]


def ablation_sweep(config: RunConfig, backend: Backend | None = None) -> dict[str, EvalReport]:
    """The canonical tree plus its four structural ablations, sharing demonstrations and eval nodes."""
    compiler = Compiler(config)
    backend = backend or make_backend(config)
    return {style: run_eval(config, backend, compiler, style=style) for style in ABLATION_STYLES}

