"""Degree, clustering coefficient, shortest paths and Brandes betweenness."""

from __future__ import annotations

import heapq
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np
from numba import njit

from .errors import GraphError
from .geo_model import GeoGraph, NodeId

BLOCK = 256


@dataclass(frozen=True)
class MetricVector:
    name: str
    values: dict[NodeId, float]

    def __post_init__(self):
        for nid, v in self.values.items():
            if not math.isfinite(v):
                raise GraphError(f"metric {self.name}: non-finite value at node {nid!r}")

    def __getitem__(self, node_id: NodeId) -> float:
        return self.values[node_id]

    def ranking(self) -> list[NodeId]:
        """Node ids by descending value; equal values keep id order."""
        return sorted(self.values, key=lambda k: -self.values[k])


@dataclass(frozen=True)
class ShortestPaths:
    source: NodeId
    dist: dict[NodeId, float | None]
    counts: dict[NodeId, int]

    def reachable(self, node_id: NodeId) -> bool:
        return self.dist[node_id] is not None


def degree(g: GeoGraph) -> MetricVector:
    return MetricVector("degree", {v: len(g.neighbors(v)) for v in g.node_ids()})


def clustering_coefficient(g: GeoGraph) -> MetricVector:
    values = {}
    for v in g.node_ids():
        nbrs = g.neighbors(v)
        k = len(nbrs)
        if k < 2:
            values[v] = 0.0
            continue
        # each triangle through v is seen twice
        links = sum(len(nbrs & g.neighbors(u)) for u in nbrs)
        values[v] = links / (k * (k - 1))
    return MetricVector("clustering", values)


def _check_weights(g: GeoGraph) -> None:
    for e in g.edges():
        if not e.weight > 0:
            raise GraphError(
                f"edge ({e.u!r}, {e.v!r}) has nonpositive weight {e.weight}")


def shortest_paths(g: GeoGraph, source: NodeId, weighted: bool = False) -> ShortestPaths:
    """Single-source distances and shortest-path counts.

    Unreachable nodes get ``dist=None`` and count 0.
    """
    if source not in g.nodes:
        raise GraphError(f"unknown source node {source!r}")
    dist: dict[NodeId, float] = {source: 0.0 if weighted else 0}
    sigma: dict[NodeId, int] = {source: 1}
    if not weighted:
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in sorted(g.neighbors(v), key=_order(g)):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    sigma[w] = 0
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
    else:
        _check_weights(g)
        rank = _order(g)
        heap = [(0.0, rank(source), source)]
        done = set()
        while heap:
            d, _, v = heapq.heappop(heap)
            if v in done:
                continue
            done.add(v)
            for w in g.neighbors(v):
                nd = d + g.edge(v, w).weight
                if w not in dist or nd < dist[w]:
                    dist[w] = nd
                    sigma[w] = sigma[v]
                    heapq.heappush(heap, (nd, rank(w), w))
                elif nd == dist[w] and w not in done:
                    sigma[w] += sigma[v]
    return ShortestPaths(
        source,
        {v: dist.get(v) for v in g.node_ids()},
        {v: sigma.get(v, 0) for v in g.node_ids()},
    )


def _order(g: GeoGraph):
    pos = {v: k for k, v in enumerate(g.node_ids())}
    return pos.__getitem__


def to_csr(g: GeoGraph) -> tuple[list[NodeId], np.ndarray, np.ndarray, np.ndarray]:
    """Node ids (ascending) and CSR arrays with sorted neighbor lists."""
    ids = g.node_ids()
    pos = {v: k for k, v in enumerate(ids)}
    indptr = np.zeros(len(ids) + 1, dtype=np.int64)
    nbrs: list[list[tuple[int, float]]] = []
    for v in ids:
        row = sorted((pos[w], g.edge(v, w).weight) for w in g.neighbors(v))
        nbrs.append(row)
    for k, row in enumerate(nbrs):
        indptr[k + 1] = indptr[k] + len(row)
    indices = np.fromiter((j for row in nbrs for j, _ in row), dtype=np.int64,
                          count=int(indptr[-1]))
    weights = np.fromiter((w for row in nbrs for _, w in row), dtype=np.float64,
                          count=int(indptr[-1]))
    return ids, indptr, indices, weights


@njit(nogil=True, cache=True)
def _dependencies_bfs(indptr, indices, sources, out):
    n = indptr.shape[0] - 1
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    for k in range(sources.shape[0]):
        s = sources[k]
        delta = out[k]
        dist[:] = -1
        sigma[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head, tail = 0, 1
        while head < tail:
            v = order[head]
            head += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for q in range(tail - 1, 0, -1):
            w = order[q]
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] * coeff
        delta[s] = 0.0


@njit(nogil=True, cache=True)
def _dependencies_dijkstra(indptr, indices, weights, sources, out):
    n = indptr.shape[0] - 1
    m = indices.shape[0]
    dist = np.empty(n, dtype=np.float64)
    sigma = np.empty(n, dtype=np.float64)
    settled = np.empty(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    heap_d = np.empty(m + 1, dtype=np.float64)
    heap_v = np.empty(m + 1, dtype=np.int64)
    for k in range(sources.shape[0]):
        s = sources[k]
        delta = out[k]
        dist[:] = np.inf
        sigma[:] = 0.0
        settled[:] = False
        dist[s] = 0.0
        sigma[s] = 1.0
        heap_d[0] = 0.0
        heap_v[0] = s
        size = 1
        count = 0
        while size > 0:
            d = heap_d[0]
            v = heap_v[0]
            size -= 1
            # sift the last item down from the root
            ld, lv = heap_d[size], heap_v[size]
            i = 0
            while True:
                c = 2 * i + 1
                if c >= size:
                    break
                if c + 1 < size and (heap_d[c + 1] < heap_d[c] or
                                     (heap_d[c + 1] == heap_d[c] and heap_v[c + 1] < heap_v[c])):
                    c += 1
                if heap_d[c] < ld or (heap_d[c] == ld and heap_v[c] < lv):
                    heap_d[i], heap_v[i] = heap_d[c], heap_v[c]
                    i = c
                else:
                    break
            heap_d[i], heap_v[i] = ld, lv
            if settled[v] or d > dist[v]:
                continue
            settled[v] = True
            order[count] = v
            count += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if settled[w]:
                    continue
                nd = d + weights[p]
                if nd < dist[w]:
                    dist[w] = nd
                    sigma[w] = sigma[v]
                    # push and sift up
                    i = size
                    size += 1
                    while i > 0:
                        parent = (i - 1) // 2
                        if heap_d[parent] > nd or (heap_d[parent] == nd and heap_v[parent] > w):
                            heap_d[i], heap_v[i] = heap_d[parent], heap_v[parent]
                            i = parent
                        else:
                            break
                    heap_d[i], heap_v[i] = nd, w
                elif nd == dist[w]:
                    sigma[w] += sigma[v]
        for q in range(count - 1, 0, -1):
            w = order[q]
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if settled[v] and dist[v] + weights[p] == dist[w]:
                    delta[v] += sigma[v] * coeff
        delta[s] = 0.0


def default_workers() -> int:
    """Usable CPUs, capped by ``GEOGRAPH_THREADS`` when set."""
    cpus = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    cpus = max(1, cpus or 1)
    env = os.environ.get("GEOGRAPH_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise GraphError(f"GEOGRAPH_THREADS must be an integer, got {env!r}") from None
        return max(1, min(cpus, cap))
    return cpus


def _raw_betweenness(indptr, indices, weights, weighted: bool, workers: int) -> np.ndarray:
    n = indptr.shape[0] - 1
    total = np.zeros(n, dtype=np.float64)
    if n == 0:
        return total
    blocks = [np.arange(a, min(a + BLOCK, n), dtype=np.int64) for a in range(0, n, BLOCK)]

    def run(sources: np.ndarray) -> np.ndarray:
        out = np.zeros((sources.shape[0], n), dtype=np.float64)
        if weighted:
            _dependencies_dijkstra(indptr, indices, weights, sources, out)
        else:
            _dependencies_bfs(indptr, indices, sources, out)
        return out

    def reduce(out: np.ndarray) -> None:
        # fixed ascending-source order keeps the sum independent of workers
        for row in out:
            total[:] += row

    if workers <= 1:
        for sources in blocks:
            reduce(run(sources))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for out in pool.map(run, blocks):
                reduce(out)
    return total


def betweenness(g: GeoGraph, normalized: bool = False, weighted: bool = False,
                workers: int | None = None) -> MetricVector:
    """Brandes betweenness, each unordered pair counted once.

    ``normalized`` divides by (n-1)(n-2)/2 (all zeros when n < 3).
    """
    if weighted:
        _check_weights(g)
    ids, indptr, indices, weights = to_csr(g)
    if workers is None:
        workers = default_workers()
    raw = _raw_betweenness(indptr, indices, weights, weighted, workers) / 2.0
    n = len(ids)
    if normalized:
        if n < 3:
            raw[:] = 0.0
        else:
            raw /= (n - 1) * (n - 2) / 2.0
    return MetricVector("betweenness", {v: float(raw[k]) for k, v in enumerate(ids)})


def attach_metrics(g: GeoGraph, vectors: Iterable[MetricVector]) -> GeoGraph:
    """Copy of ``g`` with one real-valued node attribute per metric."""
    out = g.copy()
    for vec in vectors:
        if set(vec.values) != set(g.nodes):
            missing = set(g.nodes) - set(vec.values)
            extra = set(vec.values) - set(g.nodes)
            raise GraphError(
                f"metric {vec.name} does not cover the graph "
                f"(missing {sorted(map(str, missing))[:5]}, extra {sorted(map(str, extra))[:5]})")
        for nid, value in vec.values.items():
            out.nodes[nid].attributes[vec.name] = float(value)
    return out


def compute_metrics(g: GeoGraph, names: Iterable[str], normalized: bool = False,
                    weighted: bool = False, workers: int | None = None) -> list[MetricVector]:
    vectors = []
    for name in names:
        if name == "degree":
            vectors.append(degree(g))
        elif name == "clustering":
            vectors.append(clustering_coefficient(g))
        elif name == "betweenness":
            vectors.append(betweenness(g, normalized=normalized, weighted=weighted,
                                       workers=workers))
        else:
            raise GraphError(f"unknown metric {name!r}")
    return vectors


def metric_summary(vec: MetricVector, top: int = 5) -> list[tuple[Any, float]]:
    return [(k, vec.values[k]) for k in vec.ranking()[:top]]
