"""Graph-syntax trees: construction from attributes and relations, rendering and reading back.

A tree has an empty root, two levels of labelled internal nodes (attribute then
relation, or the reverse) and leaves holding the ranked neighbours' tokens::

    <information>
      <label>
        <center_node>['NA']</center_node>
        <1st_hop>['A', 'NA']</1st_hop>
      </label>
    </information>
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .attributes import NA, TextAttribute
from .relations import RelationMatrix

HIERARCHIES = ("attr_major", "rel_major")
STYLES = ("canonical_xml", "no_internal", "sequence", "set", "legacy_colon")

# CLI style name -> (hierarchy, render style)
STYLE_PRESETS = {
    "canonical": ("attr_major", "canonical_xml"),
    "rev-hierarchy": ("rel_major", "canonical_xml"),
    "no-internal": ("attr_major", "no_internal"),
    "sequence": ("attr_major", "sequence"),
    "set": ("attr_major", "set"),
    "legacy-colon": ("attr_major", "legacy_colon"),
}
ABLATION_STYLES = ("canonical", "rev-hierarchy", "no-internal", "sequence", "set")

INFO_OPEN = "<information>"
INFO_CLOSE = "</information>"
LEGACY_HEADER = "Graph information:"
INDENT = "  "


class TreeError(ValueError):
    pass


def sanitize_tag(name: str) -> str:
    """Lowercase and replace every non-alphanumeric character with ``_``."""
    tag = re.sub(r"[^0-9a-z]", "_", name.lower())
    if not tag:
        raise TreeError(f"name {name!r} yields an empty tag")
    return tag


@dataclass(frozen=True)
class TreeNode:
    """Internal node (``tag``/``title`` set) or leaf (``tokens`` set). The root has neither."""

    tag: str | None = None
    title: str | None = None
    children: tuple["TreeNode", ...] = ()
    tokens: tuple[str, ...] | None = None
    node_ids: tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.tokens is not None

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]


SyntaxTree = TreeNode


@dataclass(frozen=True)
class TreeConfig:
    attributes: tuple[str, ...]
    relations: tuple[str, ...]
    hierarchy: str = "attr_major"
    style: str = "canonical_xml"
    caps: Mapping[str, int] = field(default_factory=dict)
    aliases: Mapping[str, str] = field(default_factory=dict)
    skip_na: bool = False

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "caps", dict(self.caps))
        object.__setattr__(self, "aliases", dict(self.aliases))
        if not self.attributes or not self.relations:
            raise TreeError("a tree needs at least one attribute and one relation")
        if self.hierarchy not in HIERARCHIES:
            raise TreeError(f"unknown hierarchy {self.hierarchy!r}")
        if self.style not in STYLES:
            raise TreeError(f"unknown style {self.style!r}")
        for name, cap in self.caps.items():
            if cap < 1:
                raise TreeError(f"cap for {name!r} must be positive, got {cap}")
        for name, alias in self.aliases.items():
            if not alias or re.search(r"[\s<>/]", alias):
                raise TreeError(f"alias {alias!r} for {name!r} is not a usable tag")

    def tag(self, name: str) -> str:
        return self.aliases.get(name) or sanitize_tag(name)

    @classmethod
    def preset(cls, style: str, attributes, relations, **kw) -> "TreeConfig":
        hierarchy, render_style = STYLE_PRESETS[style]
        return cls(attributes, relations, hierarchy=hierarchy, style=render_style, **kw)


def build_ego_subgraph(
    center: int,
    relations: Sequence[RelationMatrix],
    caps: Mapping[str, int] | None = None,
) -> dict[str, list[int]]:
    """Per-relation ranked neighbour lists for ``center``, truncated to each relation's cap."""
    caps = caps or {}
    ego: dict[str, list[int]] = {}
    for rel in relations:
        if not 0 <= center < len(rel):
            raise TreeError(f"center {center} out of range for relation {rel.name!r}")
        ego[rel.name] = rel.neighbors(center, caps.get(rel.name))
    return ego


def build_tree(
    center: int,
    attrs: Sequence[TextAttribute],
    ego: Mapping[str, Sequence[int]],
    config: TreeConfig,
) -> TreeNode:
    """Assemble the two-level tree. ``ego`` keys are relation names, in relation order."""
    if not attrs:
        raise TreeError("no attributes given")
    rel_names = list(ego)

    def leaf(attr: TextAttribute, rel: str) -> TreeNode | None:
        ids = [j for j in ego[rel] if not (config.skip_na and attr.tokens[j] == NA)]
        if config.skip_na and not ids:
            return None
        return TreeNode(tokens=tuple(attr.tokens[j] for j in ids), node_ids=tuple(ids))

    def internal(name: str, children: list[TreeNode | None]) -> TreeNode | None:
        kept = tuple(c for c in children if c is not None)
        if config.skip_na and not kept:
            return None
        return TreeNode(tag=config.tag(name), title=name, children=kept)

    top: list[TreeNode | None] = []
    if config.hierarchy == "attr_major":
        for attr in attrs:
            rels = [internal(r, [leaf(attr, r)]) for r in rel_names]
            top.append(internal(attr.name, rels))
    else:
        for r in rel_names:
            per_attr = [internal(attr.name, [leaf(attr, r)]) for attr in attrs]
            top.append(internal(r, per_attr))
    return TreeNode(children=tuple(t for t in top if t is not None))


def format_tokens(tokens: Sequence[str]) -> str:
    """Bracketed, single-quoted token list: ``['A', 'B']``."""
    quoted = ("'" + t.replace("\\", "\\\\").replace("'", "\\'") + "'" for t in tokens)
    return "[" + ", ".join(quoted) + "]"


def _xml_lines(node: TreeNode, depth: int, out: list[str], tags: bool) -> None:
    pad = INDENT * depth
    if node.is_leaf:
        out.append(pad + format_tokens(node.tokens))
        return
    if len(node.children) == 1 and node.children[0].is_leaf:
        body = format_tokens(node.children[0].tokens)
        out.append(f"{pad}<{node.tag}>{body}</{node.tag}>" if tags else pad + body)
        return
    if tags:
        out.append(f"{pad}<{node.tag}>")
    for child in node.children:
        _xml_lines(child, depth + 1, out, tags)
    if tags:
        out.append(f"{pad}</{node.tag}>")


def _legacy_lines(node: TreeNode, out: list[str]) -> None:
    if len(node.children) == 1 and node.children[0].is_leaf:
        out.append(f"{node.title}:{format_tokens(node.children[0].tokens)}")
        return
    out.append(f"{node.title}:")
    for child in node.children:
        if child.is_leaf:
            out.append(format_tokens(child.tokens))
        else:
            _legacy_lines(child, out)


def render(tree: TreeNode, style: str = "canonical_xml") -> str:
    """Depth-first traversal of ``tree`` as the prompt's information block."""
    if style == "legacy_colon":
        out = [LEGACY_HEADER]
        for child in tree.children:
            _legacy_lines(child, out)
        return "\n".join(out)
    if style not in STYLES:
        raise TreeError(f"unknown style {style!r}")
    out = [INFO_OPEN]
    if style in ("canonical_xml", "no_internal"):
        for child in tree.children:
            _xml_lines(child, 1, out, tags=style == "canonical_xml")
    else:
        lines = [format_tokens(leaf.tokens) for leaf in tree.leaves()]
        out.extend(sorted(lines) if style == "set" else lines)
    out.append(INFO_CLOSE)
    return "\n".join(out)


_INLINE = re.compile(r"^\s*<([^<>/\s]+)>(\[.*\])</\1>$")
_OPEN = re.compile(r"^\s*<([^<>/\s]+)>$")
_CLOSE = re.compile(r"^\s*</([^<>/\s]+)>$")
_BARE = re.compile(r"^\s*(\[.*\])$")
_LEGACY_LEAF = re.compile(r"^([^\[\]:]+):(\[.*\])$")
_LEGACY_HEAD = re.compile(r"^([^\[\]:]+):$")


def _tokens(text: str) -> list[str]:
    value = ast.literal_eval(text)
    if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
        raise TreeError(f"not a token list: {text!r}")
    return value


def read_info_block(text: str) -> list[tuple[tuple[str, ...], list[str]]]:
    """Parse the last information block in ``text`` into ``(tag path, tokens)`` pairs.

    Understands every rendering style; untagged styles yield empty paths.
    """
    xml_at = text.rfind(INFO_OPEN)
    legacy_at = text.rfind(LEGACY_HEADER)
    if xml_at < 0 and legacy_at < 0:
        raise TreeError("no information block found")
    result: list[tuple[tuple[str, ...], list[str]]] = []
    if xml_at > legacy_at:
        end = text.find(INFO_CLOSE, xml_at)
        if end < 0:
            raise TreeError("unterminated information block")
        stack: list[str] = []
        for line in text[xml_at + len(INFO_OPEN):end].splitlines():
            if not line.strip():
                continue
            if m := _INLINE.match(line):
                result.append((tuple(stack) + (m.group(1),), _tokens(m.group(2))))
            elif m := _OPEN.match(line):
                stack.append(m.group(1))
            elif m := _CLOSE.match(line):
                if not stack or stack[-1] != m.group(1):
                    raise TreeError(f"mismatched closing tag {m.group(1)!r}")
                stack.pop()
            elif m := _BARE.match(line):
                result.append((tuple(stack), _tokens(m.group(1))))
            else:
                raise TreeError(f"unreadable line in information block: {line!r}")
        return result
    header: str | None = None
    for line in text[legacy_at + len(LEGACY_HEADER):].splitlines()[1:]:
        line = line.strip()
        if m := _LEGACY_LEAF.match(line):
            path = (header, m.group(1)) if header else (m.group(1),)
            result.append((path, _tokens(m.group(2))))
        elif m := _LEGACY_HEAD.match(line):
            header = m.group(1)
        elif m := _BARE.match(line):
            result.append(((header,) if header else (), _tokens(m.group(1))))
        else:
            break
    return result
