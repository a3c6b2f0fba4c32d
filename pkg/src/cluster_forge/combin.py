"""Exhaustive enumeration of labeled graph classes.

Vertices are labeled ``1..n``.  Every stream below is a fresh generator on each
call, so enumerations are restartable and never materialized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ArgumentError, CapacityError

MAX_CONNECTED = 9
MAX_TREES = 10
MAX_FOREST = 10


@dataclass(frozen=True)
class EdgeSet:
    """A simple graph on vertices ``1..n`` given by its edge list."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ArgumentError(f"vertex count must be nonnegative, got {self.n}")
        seen = set()
        for i, j in self.edges:
            if not (1 <= i < j <= self.n):
                raise ArgumentError(f"bad edge {(i, j)} for n={self.n}")
            if (i, j) in seen:
                raise ArgumentError(f"duplicate edge {(i, j)}")
            seen.add((i, j))

    def __len__(self):
        return len(self.edges)

    def vertices(self) -> range:
        return range(1, self.n + 1)

    def weight(self, w) -> complex:
        """Product of ``w[i][j]`` over edges (1-based labels)."""
        out = 1
        for i, j in self.edges:
            out *= w[i - 1][j - 1]
        return out


def edge_list(n: int) -> list[tuple[int, int]]:
    """All pairs ``(i, j)``, ``1 <= i < j <= n``, in lexicographic order."""
    return list(itertools.combinations(range(1, n + 1), 2))


def _check_n(n: int, cap: int, what: str) -> None:
    if n < 1:
        raise ArgumentError(f"{what}: need n >= 1, got {n}")
    if n > cap:
        raise CapacityError(f"{what}: n={n} exceeds cap {cap}")


def _connected_bits(n: int, adj: list[int]) -> bool:
    # frontier closure over vertex bitmasks (0-based bits)
    full = (1 << n) - 1
    reach = 1
    frontier = 1
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= adj[low.bit_length() - 1]
            f ^= low
        nxt &= ~reach
        reach |= nxt
        frontier = nxt
    return reach == full


def enumerate_connected(n: int) -> Iterator[EdgeSet]:
    """Yield every connected graph on ``{1..n}`` exactly once.

    Order is lexicographic on the edge bitstring ``b_(1,2) b_(1,3) ... b_(n-1,n)``
    read as a binary word, with the empty bitstring first.
    """
    _check_n(n, MAX_CONNECTED, "enumerate_connected")
    pairs = edge_list(n)
    m = len(pairs)

    def gen():
        for word in range(1 << m):
            if word.bit_count() < n - 1:
                continue
            adj = [0] * n
            chosen = []
            for e, (i, j) in enumerate(pairs):
                if word >> (m - 1 - e) & 1:
                    adj[i - 1] |= 1 << (j - 1)
                    adj[j - 1] |= 1 << (i - 1)
                    chosen.append((i, j))
            if _connected_bits(n, adj):
                yield EdgeSet(n, tuple(chosen))

    return gen()


def _prufer_decode(seq: tuple[int, ...], n: int) -> tuple[tuple[int, int], ...]:
    degree = [1] * (n + 1)
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = next(u for u in range(1, n + 1) if degree[u] == 1)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = (x for x in range(1, n + 1) if degree[x] == 1)
    edges.append((u, w))
    return tuple(sorted(edges))


def enumerate_trees(n: int) -> Iterator[EdgeSet]:
    """Yield every labeled tree on ``{1..n}`` (Pruefer-sequence order)."""
    _check_n(n, MAX_TREES, "enumerate_trees")

    def gen():
        if n == 1:
            yield EdgeSet(1, ())
            return
        if n == 2:
            yield EdgeSet(2, ((1, 2),))
            return
        for seq in itertools.product(range(1, n + 1), repeat=n - 2):
            yield EdgeSet(n, _prufer_decode(seq, n))

    return gen()


def _forests(roots: tuple[int, ...], others: tuple[int, ...]) -> Iterator[list[tuple[int, int]]]:
    # Decompose on the smallest root r: K = neighbors of r among `others`,
    # the rest is a forest rooted in (roots - r) + K.
    if not others:
        yield []
        return
    if not roots:
        return
    r, rest = roots[0], roots[1:]
    for size in range(len(others) + 1):
        for K in itertools.combinations(others, size):
            remaining = tuple(x for x in others if x not in K)
            new_roots = tuple(sorted(rest + K))
            if not new_roots and remaining:
                continue
            for sub in _forests(new_roots, remaining):
                yield [(min(r, k), max(r, k)) for k in K] + sub


def enumerate_rooted_forests(roots: Iterable[int], others: Iterable[int]) -> Iterator[EdgeSet]:
    """Yield every forest on ``roots | others`` whose trees each hold exactly one root.

    The returned :class:`EdgeSet` lives on ``1..max(label)``; vertices outside
    ``roots | others`` are isolated and carry no edges.
    """
    I = tuple(sorted(set(roots)))
    J = tuple(sorted(set(others)))
    if set(I) & set(J):
        raise ArgumentError(f"roots and others overlap: {sorted(set(I) & set(J))}")
    if not I:
        raise ArgumentError("roots must be nonempty")
    if any(v < 1 for v in I + J):
        raise ArgumentError("vertex labels start at 1")
    if len(I) + len(J) > MAX_FOREST:
        raise CapacityError(f"|I|+|J|={len(I) + len(J)} exceeds cap {MAX_FOREST}")
    n = max(I + J)

    def gen():
        for edges in _forests(I, J):
            yield EdgeSet(n, tuple(sorted(edges)))

    return gen()


def forest_count(k: int, m: int) -> int:
    """Number of forests on ``k + m`` labeled vertices rooted in ``k`` given ones."""
    if m == 0:
        return 1
    return k * (k + m) ** (m - 1)
