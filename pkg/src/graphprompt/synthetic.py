"""Seeded planted-partition graphs for demos and tests."""

from __future__ import annotations

import numpy as np

from .graph import Graph, Split


def planted_partition(
    n: int = 100,
    n_classes: int = 4,
    p_in: float = 0.12,
    p_out: float = 0.02,
    dim: int = 8,
    noise: float = 1.0,
    seed: int = 0,
) -> Graph:
    """Nodes in ``n_classes`` equal blocks; edges appear with ``p_in`` inside a block and ``p_out`` across.

    Features are the block's random centre plus Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    same = labels[:, None] == labels[None, :]
    probs = np.where(same, p_in, p_out)
    draws = rng.random((n, n))
    iu, ju = np.triu_indices(n, k=1)
    keep = draws[iu, ju] < probs[iu, ju]
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    centres = rng.normal(0.0, 3.0, size=(n_classes, dim))
    features = centres[labels] + rng.normal(0.0, noise, size=(n, dim))
    names = [f"class_{c}" for c in range(n_classes)]
    titles = [f"node {i} of block {names[labels[i]]}" if i % 7 else "" for i in range(n)]
    return Graph(
        node_count=n,
        edges=edges,
        class_names=names,
        labels={i: int(c) for i, c in enumerate(labels)},
        features=np.round(features, 6),
        text_fields={"title": titles},
    )


def random_split(graph: Graph, train_per_class: int, n_val: int, seed: int = 0) -> Split:
    """``train_per_class`` labelled nodes per class for training, ``n_val`` for validation, the rest test."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(graph.node_count).tolist()
    train, taken = [], [0] * graph.num_classes
    rest = []
    for i in order:
        c = graph.labels.get(i)
        if c is not None and taken[c] < train_per_class:
            train.append(i)
            taken[c] += 1
        else:
            rest.append(i)
    val = [i for i in rest if i in graph.labels][:n_val]
    test = [i for i in rest if i in graph.labels and i not in set(val)]
    return Split(frozenset(train), frozenset(val), frozenset(test))


def random_graph(n: int, p: float, seed: int = 0, n_classes: int = 3, dim: int = 0) -> Graph:
    """Erdos-Renyi graph with random labels (and optional random features)."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    labels = rng.integers(0, n_classes, size=n)
    return Graph(
        node_count=n,
        edges=list(zip(iu[keep].tolist(), ju[keep].tolist())),
        class_names=[f"c{i}" for i in range(n_classes)],
        labels={i: int(c) for i, c in enumerate(labels)},
        features=rng.normal(size=(n, dim)) if dim else None,
    )
