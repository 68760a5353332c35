"""Shared fixtures and independent reference implementations.

The brute-force routines here deliberately avoid the package's own code
paths (direct product weights instead of log-sum-exp, dict-based DFS
instead of union-find) so they can serve as oracles for it.
"""

import itertools

import numpy as np
import pytest

from rcquad.lattice import SQUARE, build_region, custom_graph


def brute_cluster_count(graph, blocks, open_edges):
    """Components after identifying each block, by plain DFS on dicts."""
    rep = {}
    for blk in blocks:
        lead = min(blk)
        for v in blk:
            rep[v] = lead
    adj = {}
    for e in open_edges:
        u, v = int(graph.edges[e, 0]), int(graph.edges[e, 1])
        u, v = rep.get(u, u), rep.get(v, v)
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    nodes = {rep.get(v, v) for v in range(graph.n_vertices)}
    seen = set()
    k = 0
    for start in sorted(nodes):
        if start in seen:
            continue
        k += 1
        stack = [start]
        seen.add(start)
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    return k


def brute_probs(graph, blocks, p, q):
    """Exact probabilities for every configuration, by direct products."""
    ne = graph.n_edges
    weights = []
    for cfg in range(1 << ne):
        open_edges = [e for e in range(ne) if (cfg >> e) & 1]
        k = brute_cluster_count(graph, blocks, open_edges)
        weights.append(p ** len(open_edges) * (1 - p) ** (ne - len(open_edges)) * q ** k)
    total = sum(weights)
    return [w / total for w in weights]


def brute_connected(graph, open_edges, sources, targets, allowed_edges=None):
    """BFS connectivity from any source to any target."""
    allowed = set(int(e) for e in (allowed_edges if allowed_edges is not None
                                   else range(graph.n_edges)))
    adj = {}
    for e in open_edges:
        if int(e) not in allowed:
            continue
        u, v = int(graph.edges[e, 0]), int(graph.edges[e, 1])
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    targets = set(int(t) for t in targets)
    seen = set(int(s) for s in sources)
    stack = list(seen)
    while stack:
        x = stack.pop()
        if x in targets:
            return True
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return bool(seen & targets)


@pytest.fixture(scope="session")
def single_edge():
    return custom_graph(SQUARE, [((0, 0), (1, 0))])


@pytest.fixture(scope="session")
def four_cycle():
    return custom_graph(SQUARE, [((0, 0), (1, 0)), ((1, 0), (1, 1)),
                                 ((0, 1), (1, 1)), ((0, 0), (0, 1))])


@pytest.fixture(scope="session")
def unit_region():
    return build_region(SQUARE, (0, 1, 0, 1))


@pytest.fixture(scope="session")
def star_region():
    return build_region(SQUARE, (0, 0, 0, 0))


def random_config(n_edges, rng, p=0.5):
    return rng.random(n_edges) < p
