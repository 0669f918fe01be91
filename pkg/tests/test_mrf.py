import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from areamatch.geometry import Rect
from areamatch.graph import AreaNode, EdgeKind, GraphConfig, build_initial_graph
from areamatch.mrf import (
    MrfInstance,
    brute_force_min,
    build_instance,
    fuzz,
    graph_cut,
    load_instance,
    random_instance,
    save_instance,
    total_energy,
)

TWO = MrfInstance((0.9, 0.2), ((0, 1, 0.5),), 0.1)


def itertools_min_energy(inst: MrfInstance) -> float:
    """Pure-python enumeration, independent of the vectorized brute force."""
    best = np.inf
    for x in itertools.product((0, 1), repeat=len(inst.sims)):
        e = sum(abs(xi - s) for xi, s in zip(x, inst.sims))
        e += inst.lam * sum(w for i, j, w in inst.edges if x[i] != x[j])
        best = min(best, e)
    return best


@pytest.mark.parametrize("x, expected", [((1, 0), 0.35), ((0, 0), 1.1), ((1, 1), 0.9)])
def test_total_energy_examples(x, expected):
    assert total_energy(TWO, x) == pytest.approx(expected, abs=1e-12)


def test_two_node_solution():
    assert brute_force_min(TWO) == (1, 0)
    assert graph_cut(TWO) == (1, 0)
    assert total_energy(TWO, graph_cut(TWO)) == pytest.approx(0.35)


def test_single_node_tie_rule():
    assert brute_force_min(MrfInstance((0.6,))) == (1,)
    assert brute_force_min(MrfInstance((0.5,))) == (0,)
    assert graph_cut(MrfInstance((0.6,))) == (1,)
    assert graph_cut(MrfInstance((0.5,))) == (0,)


def test_empty_instance():
    inst = MrfInstance(())
    assert graph_cut(inst) == ()
    assert brute_force_min(inst) == ()
    assert total_energy(inst, ()) == 0


def test_all_zero_and_all_one_sims():
    edges = ((0, 1, 0.7), (1, 2, 0.3), (0, 2, 1.0))
    assert graph_cut(MrfInstance((0.0, 0.0, 0.0), edges, 1.0)) == (0, 0, 0)
    assert graph_cut(MrfInstance((1.0, 1.0, 1.0), edges, 1.0)) == (1, 1, 1)


def test_brute_force_refuses_large():
    with pytest.raises(ValueError):
        brute_force_min(MrfInstance(tuple([0.5] * 21)))
    with pytest.raises(ValueError):
        fuzz(1, 21)


def test_invalid_edges_rejected():
    with pytest.raises(ValueError):
        MrfInstance((0.1, 0.2), ((0, 0, 0.5),))
    with pytest.raises(ValueError):
        MrfInstance((0.1, 0.2), ((0, 1, -0.5),))
    with pytest.raises(ValueError):
        MrfInstance((0.1, 0.2), ((0, 1, 0.5), (1, 0, 0.2)))
    with pytest.raises(ValueError):
        total_energy(TWO, (1,))


def test_build_instance_examples():
    cfg = GraphConfig()
    assert len(build_instance(build_initial_graph([], cfg), 0, lambda a, b: 0.0)) == 0
    g = build_initial_graph([], cfg)
    g.add_node(AreaNode(0, Rect(0, 0, 100, 100), 0))
    g.add_node(AreaNode(1, Rect(0, 0, 100, 50), 0))
    g.add_edge(0, 1, EdgeKind.ADJACENCY)
    inst = build_instance(g, 5, lambda s, t: {0: 0.9, 1: 0.2}[t])
    assert inst.sims == (0.9, 0.2)
    assert inst.edges == ((0, 1, 0.5),)
    # inclusion edges count as undirected pairs
    g2 = build_initial_graph([AreaNode(0, Rect(0, 0, 200, 200), 1), AreaNode(1, Rect(0, 0, 100, 100), 0)], cfg)
    inst2 = build_instance(g2, 0, lambda s, t: 0.5)
    assert inst2.edges == ((0, 1, 0.25),)


def test_lambda_zero_is_thresholding():
    rng = np.random.default_rng(5)
    for _ in range(50):
        inst = random_instance(rng, 8, lam=0.0, edge_prob=0.6)
        expect = tuple(1 if s > 0.5 else 0 for s in inst.sims)
        assert graph_cut(inst) == expect
        assert brute_force_min(inst) == expect


def test_all_zero_labeling_energy_equals_sum_of_sims():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, 10)
    assert total_energy(inst, [0] * 10) == pytest.approx(sum(inst.sims))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_graph_cut_reaches_oracle_minimum(seed, n):
    inst = random_instance(np.random.default_rng(seed), n)
    e = total_energy(inst, graph_cut(inst))
    assert e == pytest.approx(itertools_min_energy(inst), abs=1e-9)
    assert e == pytest.approx(total_energy(inst, brute_force_min(inst)), abs=1e-9)
    assert e >= 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.randoms(use_true_random=False))
def test_energy_permutation_invariant(seed, n, r):
    inst = random_instance(np.random.default_rng(seed), n)
    perm = list(range(n))
    r.shuffle(perm)
    inv = {old: new for new, old in enumerate(perm)}
    permuted = MrfInstance(tuple(inst.sims[k] for k in perm),
                           tuple((inv[i], inv[j], w) for i, j, w in inst.edges), inst.lam)
    x = graph_cut(inst)
    xp = tuple(x[k] for k in perm)
    assert total_energy(permuted, xp) == pytest.approx(total_energy(inst, x), abs=1e-12)
    assert total_energy(permuted, graph_cut(permuted)) == pytest.approx(total_energy(inst, x), abs=1e-9)


def test_dump_load_round_trip(tmp_path):
    inst = random_instance(np.random.default_rng(9), 7)
    e = total_energy(inst, brute_force_min(inst))
    path = tmp_path / "inst.json"
    save_instance(inst, path, e)
    back, expected = load_instance(path)
    assert back == inst
    assert expected == e
    assert total_energy(back, graph_cut(back)) == pytest.approx(expected, abs=1e-9)


def test_fuzz_small_run_clean():
    assert fuzz(100, 10, seed=3) == []
    assert fuzz(0, 15) == []
