"""JSON run configuration with dotted-key overrides."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .gateway import LlmConfig
from .tree import STYLE_PRESETS


class ConfigError(ValueError):
    pass


class PropagationSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    normalization: Literal["row", "symmetric"] = "row"
    self_loops: bool = True


class RunConfig(BaseModel):
    """Everything needed to compile prompts and run an evaluation.

    ``attributes`` and ``relations`` use the name vocabulary of the attribute and
    relation builders (``pseudo:2``, ``spd:0``, ``ppr``, ``sim:prop:2``, ...).
    ``names`` overrides display names (legacy titles and sanitised tags);
    ``tags`` pins exact XML tags. Similarity relations keep ``sim_top_k`` neighbours.
    """

    model_config = ConfigDict(extra="forbid")

    graph: str
    split: str
    attributes: list[str] = Field(min_length=1)
    relations: list[str] = Field(min_length=1)
    caps: dict[str, int] = {}
    style: str = "canonical"
    names: dict[str, str] = {}
    tags: dict[str, str] = {}
    skip_na: bool = False

    n_shots: int | None = Field(None, ge=0)
    per_class: bool = False
    template: str = "generic"
    templates_file: str | None = None

    backend: str = "mock:majority-ppr"
    llm: LlmConfig = LlmConfig()
    eval_set: Union[Literal["val", "test"], list[int]] = "test"
    limit: int | None = Field(None, ge=0)
    samples: int = Field(1, ge=1)
    re_ask: bool = False
    seed: int = 0

    ppr_alpha: float = Field(0.25, gt=0, le=1)
    ppr_top_k: int = Field(4, ge=1)
    ppr_normalization: Literal["row", "symmetric"] = "row"
    sim_top_k: int = Field(4, ge=1)
    sim_kernel: Literal["cosine", "dot"] = "cosine"
    propagation: PropagationSettings = PropagationSettings()
    kmeans_clusters: int | None = Field(None, ge=1)
    text_max_chars: int = Field(500, ge=1)

    @field_validator("style")
    @classmethod
    def _known_style(cls, v: str) -> str:
        if v not in STYLE_PRESETS:
            raise ValueError(f"unknown style {v!r}; choose from {sorted(STYLE_PRESETS)}")
        return v

    @field_validator("relations", "attributes")
    @classmethod
    def _unique(cls, v: list[str]) -> list[str]:
        if len(set(v)) != len(v):
            raise ValueError(f"duplicate entries in {v}")
        return v

    @field_validator("backend")
    @classmethod
    def _known_backend(cls, v: str) -> str:
        if v != "http" and not v.startswith("mock:"):
            raise ValueError("backend must be 'http' or 'mock:<policy>'")
        return v


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``a.b=value`` overrides; values parse as JSON when possible, else as strings."""
    doc = json.loads(json.dumps(doc))
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        target = doc
        parts = key.split(".")
        for p in parts[:-1]:
            target = target.setdefault(p, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override {item!r}: {p!r} is not an object")
        target[parts[-1]] = _coerce(value)
    return doc


def config_from_dict(doc: dict, base_dir: str | Path | None = None) -> RunConfig:
    try:
        config = RunConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if base_dir is not None:
        base = Path(base_dir)
        updates = {}
        for key in ("graph", "split", "templates_file"):
            value = getattr(config, key)
            if value is not None and not Path(value).is_absolute():
                updates[key] = str(base / value)
        if config.backend.startswith("mock:script:"):
            path = config.backend.removeprefix("mock:script:")
            if not Path(path).is_absolute():
                updates["backend"] = "mock:script:" + str(base / path)
        config = config.model_copy(update=updates)
    return config


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    """Read a JSON config; relative paths inside it resolve against its directory."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    return config_from_dict(apply_overrides(doc, overrides or []), base_dir=path.parent)
