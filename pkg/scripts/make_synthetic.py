"""Regenerate data/synthetic/{graph,split}.json."""

from pathlib import Path

from graphprompt.graph import save_graph, save_split
from graphprompt.synthetic import planted_partition, random_split

out = Path(__file__).resolve().parent.parent / "data" / "synthetic"
out.mkdir(parents=True, exist_ok=True)
graph = planted_partition(n=100, n_classes=4, seed=0)
save_graph(graph, out / "graph.json")
save_split(random_split(graph, train_per_class=10, n_val=20, seed=0), out / "split.json")
print(f"wrote {out}")
