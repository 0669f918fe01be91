import itertools

import numpy as np
from hypothesis import given, settings, strategies as st

from areamatch.cluster import cluster_orphans, elbow_k, kmeans


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def exact_min_sse(points: np.ndarray) -> list[float]:
    """Optimal SSE for every k = 1..n by enumerating all set partitions."""
    n = len(points)
    best = [np.inf] * n
    for part in set_partitions(list(range(n))):
        sse = sum(((points[g] - points[g].mean(axis=0)) ** 2).sum() for g in part)
        best[len(part) - 1] = min(best[len(part) - 1], sse)
    return best


FOUR = np.array([[-1.0, 0.0], [1.0, 0.0], [499.0, 500.0], [501.0, 500.0]])


def test_single_point():
    assert cluster_orphans([(3.0, 4.0)]).tolist() == [0]


def test_identical_points_single_cluster():
    assert cluster_orphans([(5.0, 5.0), (5.0, 5.0)]).tolist() == [0, 0]


def test_two_far_pairs_exhaustive_oracle():
    oracle = exact_min_sse(FOUR)
    assert elbow_k(oracle) == 2
    labels = cluster_orphans(FOUR)
    assert labels[0] == labels[1] != labels[2] == labels[3]


def test_kmeans_reaches_oracle_sse_on_separated_pairs():
    oracle = exact_min_sse(FOUR)
    for k in range(1, 5):
        _, sse = kmeans(FOUR, k)
        assert sse == np.float64(sse)
        assert abs(sse - oracle[k - 1]) < 1e-9


def test_elbow_rule_details():
    assert elbow_k([10.0]) == 1
    assert elbow_k([10.0, 0.0]) == 1
    assert elbow_k([0.0, 0.0, 0.0]) == 1
    # largest second difference at k=3
    assert elbow_k([100.0, 90.0, 10.0, 9.0]) == 3


def test_three_clusters():
    pts = [(0, 0), (2, 0), (300, 0), (302, 0), (0, 300), (2, 300)]
    labels = cluster_orphans(pts)
    assert len(set(labels.tolist())) == 3
    assert labels[0] == labels[1] and labels[2] == labels[3] and labels[4] == labels[5]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 640), st.floats(0, 480)), min_size=1, max_size=8))
def test_labels_valid_and_deterministic(pts):
    a = cluster_orphans(pts, seed=3)
    b = cluster_orphans(pts, seed=3)
    assert a.tolist() == b.tolist()
    k = len(set(a.tolist()))
    assert sorted(set(a.tolist())) == list(range(k))


def test_partition_enumeration_counts():
    # Bell numbers
    assert [sum(1 for _ in set_partitions(list(range(n)))) for n in range(1, 6)] == [1, 2, 5, 15, 52]
    assert list(itertools.islice(set_partitions([0]), 2)) == [[[0]]]
