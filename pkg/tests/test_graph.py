import pytest
from hypothesis import given, settings, strategies as st

from areamatch.bench import SceneParams, gen_scene
from areamatch.geometry import ImageDims, Rect, link_score
from areamatch.graph import (
    AreaNode,
    EdgeKind,
    GraphConfig,
    build_area_graph,
    build_initial_graph,
    check_invariants,
    complete_graph,
    predict_edge,
    preprocess,
)

CFG = GraphConfig()
IMG = ImageDims(640, 480)


def node(i, r, level=0):
    return AreaNode(i, Rect(*r), level)


def test_config_invariants():
    with pytest.raises(ValueError):
        GraphConfig(delta_l=0.9, delta_h=0.8)
    with pytest.raises(ValueError):
        GraphConfig(t_s=100)
    with pytest.raises(ValueError):
        GraphConfig(t_r=0.5)


def test_preprocess_single_area_unchanged():
    out = preprocess([Rect(10, 10, 110, 110)], CFG)
    assert len(out) == 1
    assert out[0].rect == Rect(10, 10, 110, 110) and out[0].level == 0


def test_preprocess_small_area_without_neighbour_dropped():
    assert preprocess([Rect(0, 0, 40, 40)], CFG) == []


def test_preprocess_small_area_fused_into_neighbour():
    # hand trace: 40x40 fails t_s, its only candidate is the 100x100 area,
    # fusion gives [0,0,150,150] which passes both filters on the next pass
    out = preprocess([Rect(0, 0, 40, 40), Rect(50, 50, 150, 150)], CFG)
    assert [n.rect for n in out] == [Rect(0, 0, 150, 150)]
    assert out[0].level == 1


def test_preprocess_elongated_area_filtered():
    out = preprocess([Rect(0, 0, 500, 100), Rect(300, 300, 400, 400)], CFG)
    assert len(out) == 1
    assert out[0].rect == Rect(0, 0, 500, 400)


def test_preprocess_cascade_reenters_filter():
    # the first fusion produces an elongated candidate, which is filtered and fused again
    areas = [Rect(0, 0, 30, 30), Rect(40, 0, 130, 90), Rect(500, 0, 600, 100)]
    out = preprocess(areas, GraphConfig(t_r=1.3))
    for n in out:
        assert n.rect.size() >= CFG.t_s and n.rect.aspect() <= 1.3


def test_preprocess_empty():
    assert preprocess([], CFG) == []


@pytest.mark.parametrize("b, kind", [
    ((0, 0, 50, 50), EdgeKind.INCLUSION),
    ((50, 50, 150, 150), EdgeKind.ADJACENCY),
    ((95, 95, 200, 200), EdgeKind.NONE),
])
def test_predict_edge_branches(b, kind):
    got, parent = predict_edge(node(0, (0, 0, 100, 100)), node(1, b), CFG)
    assert got is kind
    if kind is EdgeKind.INCLUSION:
        assert parent == 0


def test_predict_edge_boundaries_closed():
    a = node(0, (0, 0, 100, 100))
    # delta exactly 0.8 -> inclusion
    assert predict_edge(a, node(1, (20, 0, 120, 100)), CFG)[0] is EdgeKind.INCLUSION
    # delta exactly 0.1 -> none
    assert predict_edge(a, node(1, (90, 0, 190, 100)), CFG)[0] is EdgeKind.NONE


def test_predict_edge_equal_sizes_smaller_id_is_child():
    kind, parent = predict_edge(node(3, (0, 0, 100, 100)), node(7, (0, 0, 100, 100)), CFG)
    assert kind is EdgeKind.INCLUSION and parent == 7


def test_predict_edge_self_rejected():
    with pytest.raises(ValueError):
        predict_edge(node(0, (0, 0, 10, 10)), node(0, (0, 0, 10, 10)), CFG)


def test_initial_graph_examples():
    assert len(build_initial_graph([], CFG)) == 0
    g = build_initial_graph([node(0, (0, 0, 100, 100)), node(1, (300, 300, 400, 400))], CFG)
    assert len(g) == 2 and not g.inclusion_edges and not g.adjacency_edges
    g = build_initial_graph([node(0, (0, 0, 200, 200), 1), node(1, (10, 10, 100, 100))], CFG)
    assert g.inclusion_edges == {(0, 1)}


def test_complete_idempotent_on_complete_graph():
    g = build_area_graph([Rect(100, 100, 190, 190)], IMG)
    before = (set(g.nodes), set(g.inclusion_edges), set(g.adjacency_edges))
    complete_graph(g)
    assert (set(g.nodes), set(g.inclusion_edges), set(g.adjacency_edges)) == before


def test_complete_single_level0_node_gets_expanded_ancestors():
    g = build_area_graph([Rect(100, 100, 190, 190)], IMG)
    assert check_invariants(g) == []
    levels = sorted(n.level for n in g.nodes.values())
    assert levels == [0, 1, 2, 3]
    parents0 = g.parents(0)
    assert parents0
    lvl1 = [p for p in parents0 if g.nodes[p].level == 1]
    assert lvl1 and g.nodes[lvl1[0]].origin == "completion"
    assert g.nodes[lvl1[0]].rect.size() == pytest.approx(130**2)
    # expansion keeps the center when far from the border
    assert g.nodes[lvl1[0]].rect.center() == pytest.approx((145, 145))


def test_complete_two_near_orphans_fused_parent():
    g = build_area_graph([Rect(100, 100, 190, 190), Rect(200, 100, 290, 190)], IMG)
    assert check_invariants(g) == []
    common = g.parents(0) & g.parents(1)
    fused = [p for p in common if g.nodes[p].rect == Rect(100, 100, 290, 190)]
    assert fused
    f = g.nodes[fused[0]]
    assert f.level == 1 and f.origin == "completion"
    # brute-force containment check against both children
    for c in (0, 1):
        assert f.rect.contains(g.nodes[c].rect)
        assert link_score(f.rect, g.nodes[c].rect) == 1.0


def test_build_area_graph_empty():
    assert len(build_area_graph([], IMG)) == 0


def test_build_area_graph_dedups_exact_duplicates():
    r = Rect(100, 100, 250, 250)
    g1 = build_area_graph([r], IMG)
    g2 = build_area_graph([r, r], IMG, ids=["a", "b"])
    assert len(g1) == len(g2)
    assert g2.nodes[0].source_ids == ("a",)


def test_build_area_graph_rescales_from_native():
    g = build_area_graph([Rect(200, 200, 500, 500)], ImageDims(1280, 960))
    assert g.nodes[0].rect == Rect(100, 100, 250, 250)


def test_synthetic_scene_graph():
    scene = gen_scene(11, SceneParams())
    g = build_area_graph(scene.areas0, scene.dims0)
    assert len(g) >= 6
    assert check_invariants(g) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.8, 1.25), st.floats(0, 0.25))
def test_invariants_hold_on_generated_scenes(seed, s, tr):
    scene = gen_scene(seed, SceneParams(scale_range=(s, s), translation=tr, distractors=1))
    for rects, dims in ((scene.areas0, scene.dims0), (scene.areas1, scene.dims1)):
        g = build_area_graph(rects, dims)
        assert check_invariants(g) == []


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 600), st.floats(0, 440), st.floats(20, 300), st.floats(20, 300)),
                max_size=10))
def test_invariants_hold_on_random_areas(boxes):
    rects = [Rect(x, y, min(640, x + w), min(480, y + h)) for x, y, w, h in boxes]
    g = build_area_graph(rects, IMG)
    assert check_invariants(g) == []
    again = build_area_graph(rects, IMG)
    assert {i: n.rect for i, n in g.nodes.items()} == {i: n.rect for i, n in again.nodes.items()}
    assert g.inclusion_edges == again.inclusion_edges and g.adjacency_edges == again.adjacency_edges


def test_checker_detects_orphan_and_bad_edge():
    g = build_initial_graph([node(0, (100, 100, 190, 190)), node(1, (300, 300, 400, 400))], CFG)
    problems = check_invariants(g)
    assert any("orphan" in p for p in problems)
    g.add_edge(0, 1, EdgeKind.ADJACENCY)
    assert any("disagrees" in p for p in check_invariants(g))
