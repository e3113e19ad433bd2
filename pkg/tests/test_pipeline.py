import pytest

from conftest import FIXTURES, ROOT, golden
from graphprompt.config import ConfigError, load_config
from graphprompt.graph import GraphError
from graphprompt.pipeline import Compiler, default_relation_name


def cite24():
    return Compiler(load_config(FIXTURES / "cite24" / "config.json"))


def ego5(**over):
    return Compiler(load_config(FIXTURES / "ego5" / "config.json", [f"{k}={v}" for k, v in over.items()]))


def test_cite24_query_block_from_real_graph():
    assert cite24().info_block(0) == golden("cite24_query_legacy.txt")


@pytest.mark.parametrize("style", ["canonical", "rev-hierarchy", "no-internal", "sequence", "set"])
def test_ego5_blocks_from_real_graph(style):
    assert ego5().info_block(0, style) == golden(f"ego5_{style}.txt")


@pytest.mark.parametrize(
    "key, name",
    [
        ("spd:0", "center-node"),
        ("spd:1", "1st-hop"),
        ("spd:2", "2nd-hop"),
        ("spd:3", "3rd-hop"),
        ("spd:11", "11th-hop"),
        ("ppr", "ppr"),
        ("sim:feat", "feature_similarity_graph"),
        ("sim:prop:1", "1st_feature_similarity_graph"),
    ],
)
def test_relation_names(key, name):
    assert default_relation_name(key) == name


def test_unknown_keys_fail_early():
    with pytest.raises(ConfigError, match="relation"):
        ego5(relations='["spd:0","hop"]')
    with pytest.raises(Exception, match="attribute"):
        ego5(attributes='["colour"]')


def test_tags_must_name_used_entries():
    with pytest.raises(ConfigError, match="unused"):
        ego5(tags='{"ppr": "x"}').tree_config()


def test_tags_and_names():
    c = ego5(tags='{"label": "observed_label"}', names='{"spd:0": "self"}')
    block = c.info_block(0)
    assert "<observed_label>" in block and "<self>['NA']</self>" in block


def test_node_range_checked():
    with pytest.raises(GraphError, match="out of range"):
        ego5().info_block(7)


def test_similarity_needs_features():
    with pytest.raises(ConfigError, match="feature matrix"):
        cite24_sim = load_config(FIXTURES / "cite24" / "config.json", ['relations=["spd:0","sim:feat"]'])
        Compiler(cite24_sim).info_block(0)


def test_every_attribute_and_relation_kind_compiles():
    c = Compiler(load_config(
        ROOT / "configs" / "synthetic.json",
        [
            'attributes=["label","feat","feat:prop:1","pseudo:3","text:title"]',
            'relations=["spd:0","spd:1","adjacency","ppr","sim:feat","sim:prop:2"]',
            'caps={"adjacency": 2}',
        ],
    ))
    block = c.info_block(5)
    assert block.count("<center_node>") == 5
    assert "<title>" in block and "<feature_similarity_graph>" in block


def test_demonstrations_default_to_class_count():
    c = ego5(n_shots="null")
    assert len(c.demonstrations()) == 3
    assert c.demonstrations(0) == []
