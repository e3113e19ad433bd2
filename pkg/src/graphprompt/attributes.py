"""Text attributes: one token per node derived from labels, features or raw text.

Attributes are addressed by name: ``label``, ``feat``, ``feat:prop:<k>``,
``pseudo:<k>`` and ``text:<field>``. Missing data is always the literal ``NA``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graph import Graph, class_letter
from .kmeans import kmeans
from .relations import PropagationConfig, normalized_adjacency, propagate

NA = "NA"
ELLIPSIS = "…"
PROVENANCES = ("observed-label", "kmeans-feature", "propagated-label", "propagated-feature", "raw-text")

# relative slack when comparing propagated label mass, so float noise cannot break a true tie
_TIE_RTOL = 1e-12


class AttributeBuildError(ValueError):
    pass


@dataclass(frozen=True)
class TextAttribute:
    name: str
    tokens: tuple[str, ...]
    provenance: str

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.provenance not in PROVENANCES:
            raise AttributeBuildError(f"unknown provenance {self.provenance!r}")
        if any(not t for t in self.tokens):
            raise AttributeBuildError(f"attribute {self.name!r} has an empty token")

    def __len__(self) -> int:
        return len(self.tokens)


def _check_observed(graph: Graph, observed: Iterable[int]) -> list[int]:
    observed = sorted(set(observed))
    missing = [i for i in observed if i not in graph.labels]
    if missing:
        raise AttributeBuildError(f"observed nodes without a gold label: {missing[:10]}")
    return observed


def label_attribute(graph: Graph, observed: Iterable[int], name: str = "label") -> TextAttribute:
    observed = set(_check_observed(graph, observed))
    tokens = [class_letter(graph.labels[i]) if i in observed else NA for i in range(graph.node_count)]
    return TextAttribute(name, tokens, "observed-label")


def _require_features(graph: Graph) -> np.ndarray:
    if graph.features is None:
        raise AttributeBuildError("graph has no feature matrix")
    return graph.features


def kmeans_attribute(graph: Graph, k: int | None = None, seed: int = 0, name: str = "feature") -> TextAttribute:
    """Cluster index of each node's raw features; ``k`` defaults to the class count."""
    x = _require_features(graph)
    assign, _ = kmeans(x, k or graph.num_classes, seed=seed)
    return TextAttribute(name, [str(c) for c in assign], "kmeans-feature")


def observed_onehot(graph: Graph, observed: Iterable[int]) -> np.ndarray:
    y = np.zeros((graph.node_count, graph.num_classes))
    for i in _check_observed(graph, observed):
        y[i, graph.labels[i]] = 1.0
    return y


def propagated_label_attribute(
    graph: Graph,
    observed: Iterable[int],
    k: int,
    config: PropagationConfig = PropagationConfig(),
    name: str | None = None,
) -> TextAttribute:
    """Pseudo-label = argmax of observed one-hot labels propagated ``k`` hops.

    Rows with no propagated mass get ``NA``; ties go to the lowest class index.
    With ``config.self_loops`` a node's own observed label contributes to its mass.
    """
    y = observed_onehot(graph, observed)
    mass = propagate(normalized_adjacency(graph, config), y, k)
    top = mass.max(axis=1, keepdims=True) if mass.shape[1] else np.zeros((graph.node_count, 1))
    best = np.argmax(mass >= top * (1 - _TIE_RTOL), axis=1) if mass.shape[1] else np.zeros(graph.node_count, int)
    tokens = [class_letter(int(c)) if t > 0 else NA for c, t in zip(best, top[:, 0])]
    return TextAttribute(name or default_attribute_name(f"pseudo:{k}"), tokens, "propagated-label")


def propagated_feature_attribute(
    graph: Graph,
    k: int,
    n_clusters: int | None = None,
    seed: int = 0,
    config: PropagationConfig = PropagationConfig(),
    name: str | None = None,
) -> TextAttribute:
    x = propagate(normalized_adjacency(graph, config), _require_features(graph), k)
    assign, _ = kmeans(x, n_clusters or graph.num_classes, seed=seed)
    return TextAttribute(name or default_attribute_name(f"feat:prop:{k}"), [str(c) for c in assign], "propagated-feature")


def raw_text_attribute(graph: Graph, field: str, max_chars: int = 500, name: str | None = None) -> TextAttribute:
    """Per-node raw strings with whitespace collapsed, truncated to ``max_chars`` plus an ellipsis."""
    if max_chars < 1:
        raise AttributeBuildError("max_chars must be positive")
    if not graph.text_fields or field not in graph.text_fields:
        raise AttributeBuildError(f"unknown text field {field!r}")
    tokens = []
    for s in graph.text_fields[field]:
        s = re.sub(r"\s+", " ", s).strip()
        if not s:
            tokens.append(NA)
        elif len(s) > max_chars:
            tokens.append(s[:max_chars] + ELLIPSIS)
        else:
            tokens.append(s)
    return TextAttribute(name or field, tokens, "raw-text")


_ORDINAL_WORDS = ["zeroth", "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth"]


def _order_word(k: int) -> str:
    return _ORDINAL_WORDS[k] if k < len(_ORDINAL_WORDS) else f"{k}th"


def default_attribute_name(key: str) -> str:
    """Human-readable attribute name used for tree tags, e.g. ``pseudo:3`` -> ``third-order_pseudo_labels``."""
    parts = key.split(":")
    if key == "label":
        return "label"
    if key == "feat":
        return "feature"
    if parts[0] == "pseudo" and len(parts) == 2:
        return f"{_order_word(int(parts[1]))}-order_pseudo_labels"
    if parts[:2] == ["feat", "prop"] and len(parts) == 3:
        return f"{_order_word(int(parts[2]))}-order_propagated_feature"
    if parts[0] == "text" and len(parts) == 2:
        return parts[1]
    raise AttributeBuildError(f"unknown attribute {key!r}")
