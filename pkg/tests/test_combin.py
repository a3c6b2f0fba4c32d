import itertools

import networkx as nx
import pytest

from cluster_forge import combin
from cluster_forge.errors import ArgumentError, CapacityError


def brute_force(n, keep):
    """Filter every edge subset with networkx as the connectivity oracle."""
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    count = 0
    for r in range(len(pairs) + 1):
        for edges in itertools.combinations(pairs, r):
            g = nx.Graph()
            g.add_nodes_from(range(1, n + 1))
            g.add_edges_from(edges)
            if keep(g):
                count += 1
    return count


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 1), (3, 4), (4, 38), (5, 728)])
def test_connected_counts(n, expected):
    got = list(combin.enumerate_connected(n))
    assert len(got) == expected
    assert expected == brute_force(n, nx.is_connected)
    assert len({g.edges for g in got}) == expected


@pytest.mark.parametrize("n", range(1, 7))
def test_tree_counts(n):
    trees = list(combin.enumerate_trees(n))
    assert len(trees) == (n ** (n - 2) if n >= 2 else 1)
    for t in trees:
        g = nx.Graph(list(t.edges))
        g.add_nodes_from(range(1, n + 1))
        assert len(t.edges) == n - 1 and nx.is_tree(g)


def test_trees_match_filtered_connected():
    for n in (4, 5):
        filt = {g.edges for g in combin.enumerate_connected(n) if len(g.edges) == n - 1}
        assert filt == {t.edges for t in combin.enumerate_trees(n)}


def test_streams_restartable_and_ordered():
    a = [g.edges for g in combin.enumerate_connected(4)]
    b = [g.edges for g in combin.enumerate_connected(4)]
    assert a == b


@pytest.mark.parametrize("I,J,expected", [((1,), (2, 3), 3), ((1, 2), (3,), 2), ((1, 2), (), 1)])
def test_forest_examples(I, J, expected):
    assert len(list(combin.enumerate_rooted_forests(I, J))) == expected


@pytest.mark.parametrize("k,m", [(1, 3), (2, 2), (2, 3), (3, 3), (1, 5), (4, 2)])
def test_forest_count_and_structure(k, m):
    roots = list(range(1, k + 1))
    others = list(range(k + 1, k + m + 1))
    forests = list(combin.enumerate_rooted_forests(roots, others))
    assert len(forests) == combin.forest_count(k, m) == k * (k + m) ** (m - 1)
    for f in forests:
        g = nx.Graph(list(f.edges))
        g.add_nodes_from(roots + others)
        assert nx.is_forest(g)
        comps = list(nx.connected_components(g))
        assert len(comps) == k
        assert all(len(c & set(roots)) == 1 for c in comps)


def test_single_root_forests_are_trees():
    for n in (3, 4, 5):
        f = {e.edges for e in combin.enumerate_rooted_forests([1], range(2, n + 1))}
        assert f == {t.edges for t in combin.enumerate_trees(n)}


def test_errors():
    with pytest.raises(CapacityError):
        list(combin.enumerate_connected(10))
    with pytest.raises(CapacityError):
        list(combin.enumerate_trees(11))
    with pytest.raises(ArgumentError):
        list(combin.enumerate_rooted_forests([1, 2], [2, 3]))
    with pytest.raises(ArgumentError):
        combin.EdgeSet(3, ((2, 2),))
    with pytest.raises(ArgumentError):
        combin.EdgeSet(3, ((1, 2), (1, 2)))
