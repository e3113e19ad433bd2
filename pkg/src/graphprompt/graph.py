"""Graph data model, on-disk JSON format and validation.

A graph file is a single JSON document::

    {"nodes": 3,
     "classes": ["Agents", "AI"],
     "edges": [[0, 1], [1, 2]],
     "features": [[0.1, 0.2], ...] | null,
     "labels": {"0": 1, ...},
     "text_fields": {"title": ["...", ...]} | null}

A split file is ``{"train": [...], "val": [...], "test": [...]}``.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np


class GraphError(ValueError):
    """Raised when a graph or split document violates the data model."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


LETTERS = string.ascii_uppercase


def class_letter(index: int) -> str:
    if not 0 <= index < len(LETTERS):
        raise GraphError(f"class index {index} has no choice letter (max {len(LETTERS)} classes)")
    return LETTERS[index]


@dataclass(frozen=True)
class Graph:
    node_count: int
    edges: tuple[tuple[int, int], ...]
    class_names: tuple[str, ...]
    labels: Mapping[int, int] = field(default_factory=dict)
    features: np.ndarray | None = None
    text_fields: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "labels", MappingProxyType({int(k): int(v) for k, v in dict(self.labels).items()}))
        if self.features is not None:
            feats = np.array(self.features, dtype=np.float64)
            if feats.ndim != 2:
                raise GraphError("feature matrix must be two-dimensional", "features")
            feats.setflags(write=False)
            object.__setattr__(self, "features", feats)
        if self.text_fields is not None:
            object.__setattr__(
                self,
                "text_fields",
                MappingProxyType({k: tuple(v) for k, v in dict(self.text_fields).items()}),
            )
        self.validate()

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def validate(self) -> None:
        n = self.node_count
        if n < 0:
            raise GraphError("node count must be non-negative", "nodes")
        seen: set[tuple[int, int]] = set()
        for i, (u, v) in enumerate(self.edges):
            loc = f"edges[{i}]"
            for x in (u, v):
                if not 0 <= x < n:
                    raise GraphError(f"node id {x} out of range [0, {n})", loc)
            if u == v:
                raise GraphError(f"self-loop on node {u}", loc)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge {list(key)}", loc)
            seen.add(key)
        if self.labels and self.num_classes < 2:
            raise GraphError("labelled graphs need at least 2 classes", "classes")
        for node, cls in self.labels.items():
            if not 0 <= node < n:
                raise GraphError(f"node id {node} out of range [0, {n})", f"labels[{node}]")
            if not 0 <= cls < self.num_classes:
                raise GraphError(f"class index {cls} out of range [0, {self.num_classes})", f"labels[{node}]")
        if self.features is not None and self.features.shape[0] != n:
            raise GraphError(f"feature matrix has {self.features.shape[0]} rows, expected {n}", "features")
        for name, values in (self.text_fields or {}).items():
            if len(values) != n:
                raise GraphError(f"{len(values)} entries, expected {n}", f"text_fields.{name}")

    def neighbors(self) -> list[list[int]]:
        """Sorted adjacency lists."""
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for row in adj:
            row.sort()
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def choices(self) -> list[tuple[str, str]]:
        return [(class_letter(i), name) for i, name in enumerate(self.class_names)]


@dataclass(frozen=True)
class Split:
    train: frozenset[int]
    val: frozenset[int]
    test: frozenset[int]

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, frozenset(int(x) for x in getattr(self, name)))

    def validate(self, graph: Graph) -> None:
        parts = {"train": self.train, "val": self.val, "test": self.test}
        for name, ids in parts.items():
            for x in sorted(ids):
                if not 0 <= x < graph.node_count:
                    raise GraphError(f"unknown node id {x}", name)
        names = list(parts)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                overlap = parts[a] & parts[b]
                if overlap:
                    raise GraphError(f"{a} and {b} overlap on {sorted(overlap)[:10]}", "split")


def degree(graph: Graph, node: int) -> int:
    if not 0 <= node < graph.node_count:
        raise GraphError(f"node id {node} out of range [0, {graph.node_count})")
    return sum((u == node) + (v == node) for u, v in graph.edges)


def _read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"malformed JSON: {exc.msg}", f"line {exc.lineno} col {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise GraphError("top-level value must be an object")
    return doc


def _as_int(value, location: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise GraphError(f"expected integer, got {value!r}", location)
    return value


def graph_from_dict(doc: dict) -> Graph:
    for key in ("nodes", "classes", "edges"):
        if key not in doc:
            raise GraphError(f"missing required key '{key}'")
    n = _as_int(doc["nodes"], "nodes")
    classes = doc["classes"]
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise GraphError("expected a list of class names", "classes")
    if len(set(classes)) != len(classes):
        raise GraphError("duplicate class name", "classes")

    edges = []
    if not isinstance(doc["edges"], list):
        raise GraphError("expected a list of pairs", "edges")
    for i, e in enumerate(doc["edges"]):
        if not isinstance(e, list) or len(e) != 2:
            raise GraphError(f"expected [u, v], got {e!r}", f"edges[{i}]")
        edges.append((_as_int(e[0], f"edges[{i}][0]"), _as_int(e[1], f"edges[{i}][1]")))

    labels = {}
    raw_labels = doc.get("labels") or {}
    if not isinstance(raw_labels, dict):
        raise GraphError("expected an object mapping node id to class", "labels")
    for key, cls in raw_labels.items():
        loc = f"labels[{key}]"
        try:
            node = int(key)
        except ValueError:
            raise GraphError(f"node id {key!r} is not an integer", loc) from None
        if isinstance(cls, str):
            if cls not in classes:
                raise GraphError(f"unknown class name {cls!r}", loc)
            cls = classes.index(cls)
        labels[node] = _as_int(cls, loc)

    features = doc.get("features")
    if features is not None:
        if not isinstance(features, list):
            raise GraphError("expected a matrix or null", "features")
        widths = {len(r) if isinstance(r, list) else -1 for r in features}
        if -1 in widths or len(widths) > 1:
            raise GraphError("rows must be lists of equal length", "features")
        features = np.asarray(features, dtype=np.float64).reshape(len(features), widths.pop() if widths else 0)

    text_fields = doc.get("text_fields")
    if text_fields is not None:
        if not isinstance(text_fields, dict):
            raise GraphError("expected an object or null", "text_fields")
        for name, values in text_fields.items():
            if not isinstance(values, list) or not all(isinstance(s, str) for s in values):
                raise GraphError("expected a list of strings", f"text_fields.{name}")

    return Graph(
        node_count=n,
        edges=edges,
        class_names=classes,
        labels=labels,
        features=features,
        text_fields=text_fields,
    )


def graph_to_dict(graph: Graph) -> dict:
    return {
        "nodes": graph.node_count,
        "classes": list(graph.class_names),
        "edges": [[u, v] for u, v in graph.edges],
        "features": None if graph.features is None else graph.features.tolist(),
        "labels": {str(k): v for k, v in sorted(graph.labels.items())},
        "text_fields": None if graph.text_fields is None else {k: list(v) for k, v in graph.text_fields.items()},
    }


def load_graph(path: str | Path) -> Graph:
    return graph_from_dict(_read_json(path))


def save_graph(graph: Graph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh)


def load_split(path: str | Path, graph: Graph) -> Split:
    doc = _read_json(path)
    parts = {}
    for name in ("train", "val", "test"):
        ids = doc.get(name, [])
        if not isinstance(ids, list):
            raise GraphError("expected a list of node ids", name)
        parts[name] = [_as_int(x, f"{name}[{i}]") for i, x in enumerate(ids)]
        if len(set(parts[name])) != len(parts[name]):
            raise GraphError("duplicate node id", name)
    split = Split(**parts)
    split.validate(graph)
    return split


def save_split(split: Split, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: sorted(getattr(split, k)) for k in ("train", "val", "test")}, fh)
