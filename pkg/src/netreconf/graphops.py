"""Graph algorithms over the switch graph.

Every branch is a switch; a :class:`Topology` says which are closed.  Radial
topologies are spanning trees of the bus graph.
"""
from __future__ import annotations

import heapq
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass

from .netmodel import Network, NetworkError


@dataclass(frozen=True)
class Topology:
    closed: frozenset[int]
    open: frozenset[int]

    @classmethod
    def from_closed(cls, net: Network, closed: Iterable[int]) -> Topology:
        closed = frozenset(closed)
        every = frozenset(net.switch_ids)
        if not closed <= every:
            raise ValueError(f"unknown switch ids {sorted(closed - every)}")
        return cls(closed, every - closed)

    @classmethod
    def from_open(cls, net: Network, opened: Iterable[int]) -> Topology:
        return cls.from_closed(net, frozenset(net.switch_ids) - frozenset(opened))

    @property
    def key(self) -> tuple[int, ...]:
        """Canonical identity: ascending open switch ids."""
        return tuple(sorted(self.open))

    def with_swap(self, close: int, open_: int) -> Topology:
        """Close one switch and open another."""
        return Topology((self.closed | {close}) - {open_}, (self.open - {close}) | {open_})


@dataclass(frozen=True)
class SectorLoop:
    trigger: int
    loop_edges: tuple[int, ...]


class _DSU:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def is_connected(net: Network, closed: Iterable[int]) -> bool:
    """True when the closed branches reach every bus."""
    dsu = _DSU(net.n_bus)
    comps = net.n_bus
    for s in closed:
        if dsu.union(*net.endpoints(s)):
            comps -= 1
    return comps == 1


def is_radial(net: Network, topo: Topology) -> bool:
    return len(topo.closed) == net.n_bus - 1 and is_connected(net, topo.closed)


def prim_mst(net: Network, weights: Mapping[int, float]) -> Topology:
    """Minimum spanning tree grown from the slack bus.

    Equal-weight frontier edges are taken in ascending switch id, so the
    result is fully determined by ``weights``.
    """
    missing = set(net.switch_ids) - set(weights)
    if missing:
        raise ValueError(f"no weight for switches {sorted(missing)}")
    incident: list[list[int]] = [[] for _ in range(net.n_bus)]
    for s in net.switch_ids:
        a, b = net.endpoints(s)
        incident[a].append(s)
        incident[b].append(s)

    start = net.bus_index(net.slack.id)
    visited = [False] * net.n_bus
    frontier: list[tuple[float, int, int]] = []

    def visit(v: int) -> None:
        visited[v] = True
        for s in incident[v]:
            a, b = net.endpoints(s)
            other = b if a == v else a
            if not visited[other]:
                heapq.heappush(frontier, (weights[s], s, other))

    visit(start)
    closed = []
    while frontier and len(closed) < net.n_bus - 1:
        _, s, v = heapq.heappop(frontier)
        if visited[v]:
            continue
        closed.append(s)
        visit(v)
    if len(closed) != net.n_bus - 1:
        raise NetworkError("network graph is disconnected")
    return Topology.from_closed(net, closed)


def fundamental_cycle(net: Network, tree: Topology, trigger: int) -> SectorLoop:
    """The loop created by closing ``trigger`` on a radial ``tree``.

    ``loop_edges`` starts with the trigger, followed by the tree path from the
    trigger's to-bus back to its from-bus.
    """
    if trigger in tree.closed:
        raise ValueError(f"S{trigger} is already closed")
    if trigger not in tree.open:
        raise ValueError(f"S{trigger} is not a switch of this network")
    if not is_radial(net, tree):
        raise ValueError("topology is not radial")

    adj: list[list[tuple[int, int]]] = [[] for _ in range(net.n_bus)]
    for s in sorted(tree.closed):
        a, b = net.endpoints(s)
        adj[a].append((b, s))
        adj[b].append((a, s))

    src, dst = net.endpoints(trigger)
    # BFS from the trigger's to-bus; walk parents back from its from-bus
    via: dict[int, tuple[int, int] | None] = {dst: None}
    queue = [dst]
    for v in queue:
        for w, s in adj[v]:
            if w not in via:
                via[w] = (v, s)
                queue.append(w)
    path = []
    v = src
    while via[v] is not None:
        prev, s = via[v]
        path.append(s)
        v = prev
    path.reverse()
    return SectorLoop(trigger, (trigger, *path))


def laplacian(net: Network) -> list[list[int]]:
    """Integer Laplacian of the multigraph (parallel branches counted)."""
    n = net.n_bus
    L = [[0] * n for _ in range(n)]
    for s in net.switch_ids:
        a, b = net.endpoints(s)
        L[a][a] += 1
        L[b][b] += 1
        L[a][b] -= 1
        L[b][a] -= 1
    return L


def _bareiss_det(M: list[list[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    A = [row[:] for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def count_spanning_trees(net: Network) -> int:
    """Matrix-tree theorem: determinant of the Laplacian with one row/column removed."""
    L = laplacian(net)
    minor = [row[1:] for row in L[1:]]
    return _bareiss_det(minor)


def enumerate_spanning_trees(net: Network) -> Iterator[Topology]:
    """Yield every spanning tree exactly once.

    Include/exclude recursion over switches in id order.  An edge is included
    only if it joins two components; it is excluded only if the chosen edges
    plus the still-undecided ones keep the graph connected.
    """
    ids = net.switch_ids
    ends = [net.endpoints(s) for s in ids]
    n = net.n_bus
    m = len(ids)

    def spans(chosen: list[int], start: int) -> bool:
        dsu = _DSU(n)
        comps = n
        for k in chosen:
            if dsu.union(*ends[k]):
                comps -= 1
        for k in range(start, m):
            if dsu.union(*ends[k]):
                comps -= 1
        return comps == 1

    def acyclic_with(chosen: list[int], k: int) -> bool:
        dsu = _DSU(n)
        for c in chosen:
            dsu.union(*ends[c])
        return dsu.find(ends[k][0]) != dsu.find(ends[k][1])

    def rec(k: int, chosen: list[int]) -> Iterator[Topology]:
        if len(chosen) == n - 1:
            yield Topology.from_closed(net, (ids[c] for c in chosen))
            return
        if k == m or len(chosen) + (m - k) < n - 1:
            return
        if acyclic_with(chosen, k):
            chosen.append(k)
            yield from rec(k + 1, chosen)
            chosen.pop()
        if spans(chosen, k + 1):
            yield from rec(k + 1, chosen)

    if n == 1:
        yield Topology.from_closed(net, ())
        return
    if spans([], 0):
        yield from rec(0, [])
