"""Relation matrices: ranked per-node neighbour lists that select and order tree leaves.

Relations are addressed by name: ``adjacency``, ``spd:<k>``, ``ppr``,
``sim:feat`` and ``sim:prop:<k>``.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import Graph

log = logging.getLogger(__name__)

MAX_HOPS = 8
# scores are compared relative to the row maximum after rounding, so float noise
# never reorders true ties
_RANK_DECIMALS = 12


class RelationError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"PPR power iteration did not converge after {iterations} iterations (residual {residual:.3e})")


@dataclass(frozen=True)
class PropagationConfig:
    hops: int = 1
    normalization: str = "row"  # "row" (D^-1 (A+I)) or "symmetric" (D^-1/2 (A+I) D^-1/2)
    self_loops: bool = True

    def __post_init__(self):
        if self.normalization not in ("row", "symmetric"):
            raise RelationError(f"unknown normalization {self.normalization!r}")
        if not 0 <= self.hops <= MAX_HOPS:
            raise RelationError(f"hops must be in [0, {MAX_HOPS}], got {self.hops}")


@dataclass(frozen=True)
class RelationMatrix:
    name: str
    rows: tuple[tuple[tuple[int, float], ...], ...]

    def __len__(self) -> int:
        return len(self.rows)

    def neighbors(self, node: int, cap: int | None = None) -> list[int]:
        row = self.rows[node] if cap is None else self.rows[node][:cap]
        return [j for j, _ in row]


def rank_row(ids: Sequence[int], scores: Sequence[float], top_k: int | None = None) -> tuple[tuple[int, float], ...]:
    """Order candidates by descending score, ties by ascending id, keep the first ``top_k``."""
    ids = np.asarray(ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    scale = np.abs(scores).max() if len(scores) else 0.0
    key = np.round(scores / scale, _RANK_DECIMALS) if scale > 0 else scores
    order = np.lexsort((ids, -key))
    if top_k is not None:
        order = order[:top_k]
    return tuple((int(ids[o]), float(scores[o])) for o in order)


def adjacency_matrix(graph: Graph) -> sp.csr_matrix:
    n = graph.node_count
    if not graph.edges:
        return sp.csr_matrix((n, n), dtype=np.float64)
    e = np.asarray(graph.edges, dtype=np.int64)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def normalized_adjacency(graph: Graph, config: PropagationConfig = PropagationConfig()) -> sp.csr_matrix:
    n = graph.node_count
    a = adjacency_matrix(graph)
    if config.self_loops:
        a = a + sp.eye(n, format="csr")
    else:
        # isolated nodes keep a unit self-loop so no row is empty
        isolated = np.asarray(a.sum(axis=1)).ravel() == 0
        a = a + sp.diags(isolated.astype(np.float64), format="csr")
    deg = np.asarray(a.sum(axis=1)).ravel()
    if config.normalization == "row":
        out = sp.diags(1.0 / deg) @ a
    else:
        d = sp.diags(1.0 / np.sqrt(deg))
        out = d @ a @ d
    return sp.csr_matrix(out)


def propagate(matrix, values: np.ndarray, k: int) -> np.ndarray:
    """Apply ``matrix`` to ``values`` ``k`` times."""
    if not 0 <= k <= MAX_HOPS:
        raise RelationError(f"propagation hops must be in [0, {MAX_HOPS}], got {k}")
    out = np.asarray(values, dtype=np.float64)
    if matrix.shape[1] != out.shape[0]:
        raise RelationError(f"shape mismatch: matrix {matrix.shape} vs values {out.shape}")
    out = out.copy()
    for _ in range(k):
        out = np.asarray(matrix @ out)
    return out


def adjacency_relation(graph: Graph, name: str = "adjacency") -> RelationMatrix:
    """Direct neighbours, ordered by id. The self-loop is carried by ``spd:0``."""
    return RelationMatrix(name, tuple(tuple((j, 1.0) for j in nbrs) for nbrs in graph.neighbors()))


def bfs_levels(adj: list[list[int]], source: int, max_depth: int | None = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if max_depth is not None and dist[u] >= max_depth:
            continue
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def spd_relation(graph: Graph, k: int, name: str | None = None) -> RelationMatrix:
    """Nodes at shortest-path distance exactly ``k``, score 1, ascending id."""
    if k < 0:
        raise RelationError(f"distance must be non-negative, got {k}")
    adj = graph.neighbors()
    rows = []
    for i in range(graph.node_count):
        dist = bfs_levels(adj, i, max_depth=k)
        rows.append(tuple((j, 1.0) for j in sorted(j for j, d in dist.items() if d == k)))
    return RelationMatrix(name or f"spd:{k}", tuple(rows))


def ppr_matrix(
    graph: Graph,
    alpha: float = 0.25,
    config: PropagationConfig = PropagationConfig(),
    tol: float = 1e-9,
    max_iter: int = 1000,
    sources: Sequence[int] | None = None,
    batch: int = 512,
) -> np.ndarray:
    """Rows of ``alpha * inv(I - (1 - alpha) * A_hat)`` for ``sources`` by power iteration.

    Each column iterates ``x <- alpha * e_i + (1 - alpha) * A_hat.T @ x`` until the
    L1 change of every column drops below ``tol``.
    """
    if not 0 < alpha <= 1:
        raise RelationError(f"alpha must be in (0, 1], got {alpha}")
    n = graph.node_count
    sources = list(range(n)) if sources is None else list(sources)
    at = sp.csr_matrix(normalized_adjacency(graph, config).T)
    out = np.empty((len(sources), n))
    for start in range(0, len(sources), batch):
        chunk = sources[start:start + batch]
        restart = np.zeros((n, len(chunk)))
        restart[chunk, np.arange(len(chunk))] = alpha
        x = restart.copy()
        residual = np.inf
        for _ in range(max_iter):
            nxt = restart + (1 - alpha) * np.asarray(at @ x)
            residual = np.abs(nxt - x).sum(axis=0).max() if len(chunk) else 0.0
            x = nxt
            if residual < tol:
                break
        else:
            raise ConvergenceError(max_iter, float(residual))
        out[start:start + len(chunk)] = x.T
    return out


def ppr_relation(
    graph: Graph,
    alpha: float = 0.25,
    top_k: int = 4,
    config: PropagationConfig = PropagationConfig(),
    name: str = "ppr",
    tol: float = 1e-9,
    max_iter: int = 1000,
) -> RelationMatrix:
    """Top ``top_k`` nodes by personalized PageRank from each node, self and unreachable nodes excluded."""
    pi = ppr_matrix(graph, alpha, config, tol=tol, max_iter=max_iter)
    rows = []
    for i in range(graph.node_count):
        row = pi[i]
        ids = [j for j in np.flatnonzero(row > 0) if j != i]
        rows.append(rank_row(ids, row[ids], top_k))
    return RelationMatrix(name, tuple(rows))


def feature_similarity_relation(
    values: np.ndarray,
    top_k: int = 4,
    name: str = "sim:feat",
    kernel: str = "cosine",
) -> RelationMatrix:
    """Top ``top_k`` most similar rows to each row, self excluded.

    ``kernel="cosine"`` ranks by cosine similarity (zero-norm sources get an empty
    row); ``kernel="dot"`` ranks by the raw inner product.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if kernel == "cosine":
        norms = np.linalg.norm(x, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = x / safe[:, None]
        sims = unit @ unit.T
    elif kernel == "dot":
        norms = np.ones(n)
        sims = x @ x.T
    else:
        raise RelationError(f"unknown similarity kernel {kernel!r}")
    rows = []
    for i in range(n):
        if norms[i] == 0:
            rows.append(())
            continue
        ids = [j for j in range(n) if j != i]
        rows.append(rank_row(ids, sims[i, ids], top_k))
    return RelationMatrix(name, tuple(rows))
