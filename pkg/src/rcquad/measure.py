"""The random-cluster measure: parameters, boundary-condition partitions,
cluster counting, configuration log-weights, one-edge conditionals, induced
boundary conditions, domination, and planar-dual parameters.

A configuration is a numpy bool array indexed by edge id. The weight of a
configuration is (p/(1-p))^|w| * q^k where k counts connected components
after identifying the vertices inside each boundary-condition block.
"""

import math
from dataclasses import dataclass

import numpy as np

from .unionfind import UnionFind


@dataclass(frozen=True)
class ModelParams:
    """Edge weight p in [0,1] and cluster weight q > 0."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p={self.p} outside [0,1]")
        if not self.q > 0.0:
            raise ValueError(f"q={self.q} must be positive")


def dual_params(params):
    """Dual parameters: q* = q and p* solving p p*/((1-p)(1-p*)) = q.

    Closed form p* = q(1-p)/(p + q(1-p)); the formula also sends the
    degenerate points p=0,1 to their complements 1,0.
    """
    p, q = params.p, params.q
    return ModelParams(q * (1.0 - p) / (p + q * (1.0 - p)), q)


def self_dual_point(q):
    """p with p = p* on the square lattice: sqrt(q)/(1+sqrt(q))."""
    s = math.sqrt(q)
    return s / (1.0 + s)


class BoundaryCondition:
    """A partition of the boundary vertices of a graph, in canonical form
    (every block sorted, blocks ordered by minimal vertex id, singletons
    included). Vertices in one block are wired together for cluster counts.
    """

    def __init__(self, graph, blocks, name=None):
        boundary = [int(v) for v in graph.boundary_idx]
        bset = set(boundary)
        seen = set()
        canon = []
        for blk in blocks:
            blk = sorted(int(v) for v in blk)
            if not blk:
                continue
            for v in blk:
                if v not in bset:
                    raise ValueError(f"vertex {v} not on the boundary")
                if v in seen:
                    raise ValueError(f"vertex {v} in two blocks")
                seen.add(v)
            canon.append(tuple(blk))
        canon.extend((v,) for v in boundary if v not in seen)
        self.graph = graph
        self.blocks = tuple(sorted(canon, key=lambda b: b[0]))
        self.name = name

    # -- named constructors ------------------------------------------------
    @staticmethod
    def free(graph):
        return BoundaryCondition(graph, [], name="free")

    @staticmethod
    def wired(graph):
        return BoundaryCondition(graph, [list(graph.boundary_idx)], name="wired")

    @staticmethod
    def dobrushin(graph):
        """Bottom boundary one block (vertices below the rectangle), rest free."""
        bottom = graph.boundary_side("B")
        return BoundaryCondition(graph, [list(bottom)], name="dobrushin")

    @staticmethod
    def mix(graph, block_a, block_b):
        """Two wired arcs not wired to each other, singletons elsewhere."""
        return BoundaryCondition(graph, [list(block_a), list(block_b)], name="mix")

    @staticmethod
    def star_mix(graph, block_a, block_b):
        """The same two arcs wired together."""
        return BoundaryCondition(graph, [list(block_a) + list(block_b)], name="star-mix")

    @staticmethod
    def sides(graph, wired_sides):
        """One block wiring the boundary vertices beyond the named sides
        (e.g. {"L","T","R"} for the pushing lemma's 1/0 conditions)."""
        block = np.concatenate([graph.boundary_side(s) for s in wired_sides])
        name = "wired-" + "".join(sorted(wired_sides))
        return BoundaryCondition(graph, [list(np.unique(block))], name=name)

    # -- structure ----------------------------------------------------------
    def block_of(self):
        """Array mapping vertex id -> canonical block representative
        (min vertex of its block); non-boundary vertices map to themselves."""
        rep = np.arange(self.graph.n_vertices, dtype=np.int64)
        for blk in self.blocks:
            rep[list(blk)] = blk[0]
        return rep

    def nontrivial_blocks(self):
        return tuple(b for b in self.blocks if len(b) > 1)

    def __eq__(self, other):
        return isinstance(other, BoundaryCondition) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"BoundaryCondition({self.name or self.blocks})"

    def to_json(self):
        if self.name in ("free", "wired", "dobrushin"):
            return self.name
        return [list(b) for b in self.blocks]

    @staticmethod
    def from_json(graph, obj):
        if isinstance(obj, str):
            named = {
                "free": BoundaryCondition.free,
                "wired": BoundaryCondition.wired,
                "dobrushin": BoundaryCondition.dobrushin,
            }
            if obj not in named:
                raise ValueError(f"unknown boundary condition {obj!r}")
            return named[obj](graph)
        return BoundaryCondition(graph, obj)


def bc_dominates(xi, zeta):
    """True iff zeta dominates xi: every two vertices wired in xi are wired
    in zeta (xi refines zeta blockwise)."""
    if list(xi.graph.boundary_idx) != list(zeta.graph.boundary_idx):
        raise ValueError("boundary conditions on different boundary sets")
    owner = {}
    for j, blk in enumerate(zeta.blocks):
        for v in blk:
            owner[v] = j
    for blk in xi.blocks:
        if len({owner[v] for v in blk}) > 1:
            return False
    return True


# -- configurations ---------------------------------------------------------

def all_open(graph):
    return np.ones(graph.n_edges, dtype=np.bool_)

def all_closed(graph):
    return np.zeros(graph.n_edges, dtype=np.bool_)

def check_config(graph, config):
    if len(config) != graph.n_edges:
        raise ValueError("configuration length does not match edge count")


class ClusterStructure:
    """Union-find over the graph's vertices with bc blocks pre-merged.
    Owned by a single chain; rebuild() refreshes it from a configuration."""

    def __init__(self, graph, bc):
        self.graph = graph
        self.bc_rep = bc.block_of()
        self.n_blocks_merged = sum(len(b) - 1 for b in bc.blocks)
        self.uf = None
        self.k = None

    def rebuild(self, config):
        uf = UnionFind(self.graph.n_vertices)
        rep = self.bc_rep
        for v in range(self.graph.n_vertices):
            r = rep[v]
            if r != v:
                uf.union(r, v)
        eu, ev = self.graph.edges[:, 0], self.graph.edges[:, 1]
        for e in np.nonzero(config)[0]:
            uf.union(int(eu[e]), int(ev[e]))
        self.uf = uf
        self.k = uf.n_components
        return self.k

    def root(self, v):
        return self.uf.find(int(v))

    def connected(self, u, v):
        return self.uf.connected(int(u), int(v))


def cluster_count(graph, bc, config):
    """k_bc(config): components after identifying wired vertices."""
    check_config(graph, config)
    cs = ClusterStructure(graph, bc)
    return cs.rebuild(config)


def cluster_count_dfs(graph, bc, config):
    """Independent recount by depth-first search (test oracle)."""
    check_config(graph, config)
    rep = bc.block_of()
    members = {}
    for v in range(graph.n_vertices):
        members.setdefault(int(rep[v]), []).append(v)
    indptr, adj_v, adj_e = graph.adjacency()
    seen = np.zeros(graph.n_vertices, dtype=bool)
    k = 0
    for start in range(graph.n_vertices):
        if seen[start]:
            continue
        k += 1
        stack = [start]
        seen[start] = True
        while stack:
            v = stack.pop()
            for w in members[int(rep[v])]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
            for i in range(indptr[v], indptr[v + 1]):
                if config[adj_e[i]] and not seen[adj_v[i]]:
                    seen[adj_v[i]] = True
                    stack.append(int(adj_v[i]))
    return k


def log_weight(params, graph, bc, config):
    """Unnormalized log-weight |w| log(p/(1-p)) + k log q (Eq. of the measure).

    p in {0,1} is a degenerate edge weight with no log-scale representation;
    callers handle those as deterministic limits.
    """
    p, q = params.p, params.q
    if p <= 0.0 or p >= 1.0:
        raise ValueError("degenerate edge weight p in {0,1}; handle as a limit")
    n_open = int(np.count_nonzero(config))
    k = cluster_count(graph, bc, config)
    return n_open * math.log(p / (1.0 - p)) + k * math.log(q)


def heat_bath_prob(params, graph, bc, config, edge):
    """Exact conditional probability that `edge` is open given the rest.

    Equals p when the endpoints are connected in (config minus the edge)
    with bc wirings, else p/(p + q(1-p)).
    """
    check_config(graph, config)
    p, q = params.p, params.q
    saved = config[edge]
    config[edge] = False
    try:
        cs = ClusterStructure(graph, bc)
        cs.rebuild(config)
        u, v = graph.edges[edge]
        conn = cs.connected(u, v)
    finally:
        config[edge] = saved
    return p if conn else p / (p + q * (1.0 - p))


def induced_bc(graph, subgraph, outer_config, outer_bc):
    """Boundary conditions induced on a subregion by the configuration
    outside it plus the host's boundary conditions (spatial Markov).

    Two boundary vertices of the subregion share a block iff they are
    connected through open outer edges and outer-bc identifications;
    untouched vertices stay singletons.
    """
    check_config(graph, outer_config)
    sub_ids = subgraph_edge_map(graph, subgraph)
    outer_mask = np.ones(graph.n_edges, dtype=bool)
    outer_mask[sub_ids] = False

    uf = UnionFind(graph.n_vertices)
    rep = outer_bc.block_of()
    for v in range(graph.n_vertices):
        if rep[v] != v:
            uf.union(int(rep[v]), v)
    eu, ev = graph.edges[:, 0], graph.edges[:, 1]
    for e in np.nonzero(outer_config & outer_mask)[0]:
        uf.union(int(eu[e]), int(ev[e]))

    host_of = {}
    for i, (x, y) in enumerate(subgraph.coords):
        host_of[i] = graph.vertex_index[(int(x), int(y))]
    groups = {}
    for v in subgraph.boundary_idx:
        r = uf.find(host_of[int(v)])
        groups.setdefault(r, []).append(int(v))
    return BoundaryCondition(subgraph, [g for g in groups.values() if len(g) > 1])


def subgraph_edge_map(graph, subgraph):
    """Edge ids of `graph` corresponding to `subgraph`'s edges, aligned with
    subgraph edge ids. Raises if the subgraph is not contained in graph."""
    lookup = graph.edge_lookup()
    out = np.empty(subgraph.n_edges, dtype=np.int64)
    for e in range(subgraph.n_edges):
        p = tuple(int(t) for t in subgraph.coords[subgraph.edges[e, 0]])
        q = tuple(int(t) for t in subgraph.coords[subgraph.edges[e, 1]])
        key = (min(p, q), max(p, q))
        if key not in lookup:
            raise ValueError("subregion edge not present in the host region")
        out[e] = lookup[key]
    return out


def dual_config(dualmap, config):
    """Dual configuration: e* open iff e closed, transported through the
    edge bijection (identity on ids), so |w| + |w*| = |E|."""
    check_config(dualmap.primal, config)
    return ~config[dualmap.edge_bijection]
