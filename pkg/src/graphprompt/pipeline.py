"""Config-driven prompt compiler: graph -> attributes/relations -> tree -> chat messages."""

from __future__ import annotations

import re
from functools import cached_property

from .attributes import (
    TextAttribute,
    default_attribute_name,
    kmeans_attribute,
    label_attribute,
    propagated_feature_attribute,
    propagated_label_attribute,
    raw_text_attribute,
)
from .config import ConfigError, RunConfig
from .graph import Graph, GraphError, Split, class_letter, load_graph, load_split
from .prompting import ChoiceMap, PromptBundle, build_bundle, load_templates, select_demonstrations
from .relations import (
    PropagationConfig,
    RelationMatrix,
    adjacency_relation,
    feature_similarity_relation,
    normalized_adjacency,
    ppr_relation,
    propagate,
    spd_relation,
)
from .tree import TreeConfig, build_ego_subgraph, build_tree, render


def _ordinal(k: int) -> str:
    suffix = "th" if 10 <= k % 100 <= 20 else {1: "st", 2: "nd", 3: "rd"}.get(k % 10, "th")
    return f"{k}{suffix}"


def default_relation_name(key: str) -> str:
    """Display name of a relation, e.g. ``spd:0`` -> ``center-node``, ``sim:prop:1`` -> ``1st_feature_similarity_graph``."""
    if key in ("adjacency", "ppr"):
        return key
    if key == "sim:feat":
        return "feature_similarity_graph"
    if m := re.fullmatch(r"spd:(\d+)", key):
        k = int(m.group(1))
        return "center-node" if k == 0 else f"{_ordinal(k)}-hop"
    if m := re.fullmatch(r"sim:prop:(\d+)", key):
        return f"{_ordinal(int(m.group(1)))}_feature_similarity_graph"
    raise ConfigError(f"unknown relation {key!r}")


class Compiler:
    """Builds and caches attributes, relations and rendered blocks for one graph and split."""

    def __init__(self, config: RunConfig, graph: Graph | None = None, split: Split | None = None):
        self.config = config
        self.graph = graph if graph is not None else load_graph(config.graph)
        if split is None:
            split = load_split(config.split, self.graph)
        else:
            split.validate(self.graph)
        self.split = split
        self.choices = ChoiceMap.from_class_names(self.graph.class_names)
        self.templates = load_templates(config.templates_file)
        self._attrs: dict[str, TextAttribute] = {}
        self._rels: dict[str, RelationMatrix] = {}
        self._blocks: dict[tuple[int, str], str] = {}
        for key in config.attributes:
            default_attribute_name(key)
        for key in config.relations:
            default_relation_name(key)

    @property
    def observed(self) -> frozenset[int]:
        return self.split.train

    def _prop(self, hops: int = 1) -> PropagationConfig:
        p = self.config.propagation
        return PropagationConfig(hops=hops, normalization=p.normalization, self_loops=p.self_loops)

    @cached_property
    def _adj(self):
        return normalized_adjacency(self.graph, self._prop())

    def display_name(self, key: str, attribute: bool) -> str:
        if key in self.config.names:
            return self.config.names[key]
        return default_attribute_name(key) if attribute else default_relation_name(key)

    def attribute(self, key: str) -> TextAttribute:
        if key in self._attrs:
            return self._attrs[key]
        c, g = self.config, self.graph
        name = self.display_name(key, attribute=True)
        parts = key.split(":")
        if key == "label":
            attr = label_attribute(g, self.observed, name=name)
        elif key == "feat":
            attr = kmeans_attribute(g, c.kmeans_clusters, seed=c.seed, name=name)
        elif parts[0] == "pseudo":
            attr = propagated_label_attribute(g, self.observed, int(parts[1]), self._prop(), name=name)
        elif parts[:2] == ["feat", "prop"]:
            attr = propagated_feature_attribute(g, int(parts[2]), c.kmeans_clusters, c.seed, self._prop(), name=name)
        elif parts[0] == "text":
            attr = raw_text_attribute(g, parts[1], c.text_max_chars, name=name)
        else:
            raise ConfigError(f"unknown attribute {key!r}")
        self._attrs[key] = attr
        return attr

    def relation(self, key: str) -> RelationMatrix:
        if key in self._rels:
            return self._rels[key]
        c, g = self.config, self.graph
        name = self.display_name(key, attribute=False)
        if key == "adjacency":
            rel = adjacency_relation(g, name=name)
        elif key == "ppr":
            cfg = PropagationConfig(normalization=c.ppr_normalization, self_loops=True)
            rel = ppr_relation(g, c.ppr_alpha, c.ppr_top_k, cfg, name=name)
        elif key.startswith("spd:"):
            rel = spd_relation(g, int(key[4:]), name=name)
        elif key == "sim:feat" or key.startswith("sim:prop:"):
            if g.features is None:
                raise ConfigError(f"relation {key!r} needs a feature matrix")
            hops = 0 if key == "sim:feat" else int(key.split(":")[2])
            values = propagate(self._adj, g.features, hops)
            rel = feature_similarity_relation(values, c.sim_top_k, name=name, kernel=c.sim_kernel)
        else:
            raise ConfigError(f"unknown relation {key!r}")
        self._rels[key] = rel
        return rel

    def tree_config(self, style: str | None = None) -> TreeConfig:
        c = self.config
        attrs = [self.display_name(k, True) for k in c.attributes]
        rels = [self.display_name(k, False) for k in c.relations]
        caps = {self.display_name(k, False): v for k, v in c.caps.items()}
        aliases = {}
        for key, tag in c.tags.items():
            is_attr = key in c.attributes
            if not is_attr and key not in c.relations:
                raise ConfigError(f"tag alias for unused attribute/relation {key!r}")
            aliases[self.display_name(key, is_attr)] = tag
        return TreeConfig.preset(style or c.style, attrs, rels, caps=caps, aliases=aliases, skip_na=c.skip_na)

    def check_node(self, node: int) -> None:
        if not 0 <= node < self.graph.node_count:
            raise GraphError(f"node id {node} out of range [0, {self.graph.node_count})")

    def info_block(self, node: int, style: str | None = None) -> str:
        style = style or self.config.style
        key = (node, style)
        if key not in self._blocks:
            self.check_node(node)
            tc = self.tree_config(style)
            attrs = [self.attribute(k) for k in self.config.attributes]
            rels = [self.relation(k) for k in self.config.relations]
            ego = build_ego_subgraph(node, rels, tc.caps)
            self._blocks[key] = render(build_tree(node, attrs, ego, tc), tc.style)
        return self._blocks[key]

    def demonstrations(self, n_shots: int | None = None) -> list[int]:
        n = self.config.n_shots if n_shots is None else n_shots
        if n is None:
            n = self.graph.num_classes
        if n == 0:
            return []
        return select_demonstrations(self.graph, self.observed, n, per_class=self.config.per_class)

    def bundle(self, node: int, demos: list[int], style: str | None = None) -> PromptBundle:
        demo_parts = [(self.info_block(d, style), class_letter(self.graph.labels[d])) for d in demos]
        return build_bundle(demo_parts, self.info_block(node, style), self.choices, self.config.template, self.templates)

    def messages(self, node: int, demos: list[int], style: str | None = None) -> list[dict[str, str]]:
        return self.bundle(node, demos, style).messages()
