import json

import pytest

from conftest import golden
from graphprompt.attributes import NA, TextAttribute
from graphprompt.graph import Graph
from graphprompt.prompting import (
    ANSWER_DIRECTIVE,
    ChoiceMap,
    PromptError,
    assemble_prompt,
    build_bundle,
    format_transcript,
    load_templates,
    select_demonstrations,
)
from graphprompt.relations import RelationMatrix
from graphprompt.tree import TreeConfig, build_ego_subgraph, build_tree, render

CITESEER = ["Agents", "Artificial Intelligence", "Database", "Information Retrieval", "Machine Learning", "Human Computer Interaction"]


def one_shot_fixture():
    """Two connected neighbourhoods: node 0 is the demonstration, node 1 the query."""
    tokens = ("A", NA, "A", "A", "A", "B", "C", "B")
    attr = TextAttribute("third-order_pseudo_labels", tokens, "propagated-label")
    n = len(tokens)
    center = RelationMatrix("center-node", tuple(((i, 1.0),) for i in range(n)))
    sim_rows = [()] * n
    sim_rows[0] = ((2, 0.9), (3, 0.8), (4, 0.7), (5, 0.1))
    sim_rows[1] = ((6, 0.9), (5, 0.8), (7, 0.7), (2, 0.1))
    ppr_rows = [()] * n
    ppr_rows[0] = ((2, 0.3), (5, 0.2), (3, 0.1))
    ppr_rows[1] = ((6, 0.4),)
    sim = RelationMatrix("1st_feature_similarity_graph", tuple(sim_rows))
    ppr = RelationMatrix("ppr", tuple(ppr_rows))
    return attr, [center, sim, ppr]


def one_shot_messages():
    attr, rels = one_shot_fixture()
    tc = TreeConfig(
        [attr.name],
        [r.name for r in rels],
        caps={"1st_feature_similarity_graph": 3, "ppr": 3},
        aliases={attr.name: "third-order_pseudo_labels"},
        skip_na=True,
    )

    def info(node):
        return render(build_tree(node, [attr], build_ego_subgraph(node, rels, tc.caps), tc))

    return assemble_prompt([(info(0), "A")], info(1), ChoiceMap.from_class_names(CITESEER), "citation")


def test_one_shot_transcript_is_byte_identical():
    assert format_transcript(one_shot_messages()) == golden("citeseer_one_shot.txt")


def test_one_shot_roles():
    msgs = one_shot_messages()
    assert [m["role"] for m in msgs] == ["system", "user"]
    assert msgs[1]["content"].endswith(ANSWER_DIRECTIVE)


def test_choice_map():
    cm = ChoiceMap.from_class_names(CITESEER[:3])
    assert cm.format() == "[A: Agents, B: Artificial Intelligence, C: Database]"
    assert cm.name("B") == "Artificial Intelligence" and "C" in cm and "D" not in cm
    with pytest.raises(PromptError):
        ChoiceMap((("B", "x"),))


def test_zero_shot_omits_demo_header():
    msgs = assemble_prompt([], "<information>\n</information>", ChoiceMap.from_class_names(["x", "y"]))
    assert "Here are a few examples" not in msgs[1]["content"]
    assert msgs[1]["content"].startswith("Now let's answer the question below:\n<information>")


def test_demo_letter_must_be_a_choice():
    with pytest.raises(PromptError):
        build_bundle([("<information>\n</information>", "Z")], "q", ChoiceMap.from_class_names(["x", "y"]))


def test_unknown_template():
    with pytest.raises(PromptError, match="unknown template"):
        assemble_prompt([], "q", ChoiceMap.from_class_names(["x", "y"]), "poetry")


def test_template_file_overrides(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"citation": {"role": "Classify."}, "mine": {"role": "r", "choice_intro": "c", "demo_question": "d", "query_question": "q"}}))
    t = load_templates(p)
    assert t["citation"]["role"] == "Classify." and "choice_intro" in t["citation"]
    assert t["mine"]["query_question"] == "q"
    p.write_text(json.dumps({"broken": {"role": "r"}}))
    with pytest.raises(PromptError, match="missing"):
        load_templates(p)


def star_graph():
    # hub 0 with degrees: 1 -> 3, 2 -> 2, others 1
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 6), (1, 7), (2, 8)]
    labels = {1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 2, 7: 1, 8: 0}
    return Graph(9, edges, ["x", "y", "z"], labels=labels)


def test_demonstrations_round_robin_by_degree():
    g = star_graph()
    train = [1, 2, 3, 4, 5, 6, 7, 8]
    assert select_demonstrations(g, train, 3) == [1, 3, 5]
    assert select_demonstrations(g, train, 5) == [1, 3, 5, 2, 4]
    assert select_demonstrations(g, train, 1, per_class=True) == [1, 3, 5]


def test_demonstrations_are_nested_prefixes():
    g = star_graph()
    train = list(range(1, 9))
    full = select_demonstrations(g, train, 8)
    for n in range(1, 9):
        assert select_demonstrations(g, train, n) == full[:n]


def test_demonstrations_need_enough_training_nodes():
    with pytest.raises(PromptError):
        select_demonstrations(star_graph(), [1, 2], 3)
    with pytest.raises(PromptError):
        select_demonstrations(star_graph(), [0], 1)
