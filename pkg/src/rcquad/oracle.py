"""Brute-force enumeration of the measure on small graphs and exact
verification of the model identities (FKG, CBC, SMP, FI, duality).

This module arbitrates the correctness of every other module: samplers are
tested against its probabilities and the verifiers run over a corpus of
small rectangle regions. Weights are kept in log scale and normalized by
log-sum-exp; configurations are indexed by edge bitmask.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .events import INCREASING, BoundEvent
from .lattice import build_region
from .measure import (BoundaryCondition, ModelParams, bc_dominates, dual_params,
                      induced_bc, subgraph_edge_map)

MAX_ENUM_EDGES = 24
TOL_EXACT = 1e-10
TOL_DUAL = 1e-8


@dataclass
class ExactDistribution:
    graph: object
    bc: object
    params: object
    log_weights: np.ndarray
    log_z: float
    cluster_counts: np.ndarray
    open_counts: np.ndarray
    _probs: np.ndarray = None

    @property
    def probs(self):
        if self._probs is None:
            self._probs = np.exp(self.log_weights - self.log_z)
        return self._probs

    @property
    def n_edges(self):
        return self.graph.n_edges


def _logsumexp(x):
    m = np.max(x)
    if not np.isfinite(m):
        return m
    return m + np.log(np.sum(np.exp(x - m)))


def _counts_for(graph, bc):
    """Cluster/open counts for all configurations, cached per (graph, bc)."""
    cache = getattr(graph, "_counts_cache", None)
    if cache is None:
        cache = {}
        graph._counts_cache = cache
    key = bc.blocks
    if key not in cache:
        cache[key] = kernels.enumerate_counts(
            graph.n_edges, graph.edges[:, 0].astype(np.int32),
            graph.edges[:, 1].astype(np.int32),
            graph.n_vertices, bc.block_of().astype(np.int32))
    return cache[key]


def enumerate_measure(graph, bc, params):
    """Exact distribution over all 2^|E| configurations."""
    ne = graph.n_edges
    if ne > MAX_ENUM_EDGES:
        raise ValueError(f"{ne} edges exceed the enumeration cap {MAX_ENUM_EDGES}")
    ks, opens = _counts_for(graph, bc)
    ks = ks.astype(np.float64)
    opens = opens.astype(np.float64)
    p, q = params.p, params.q
    if p <= 0.0:
        logw = np.full(1 << ne, -np.inf)
        logw[0] = 0.0
    elif p >= 1.0:
        logw = np.full(1 << ne, -np.inf)
        logw[-1] = 0.0
    else:
        logw = opens * np.log(p / (1.0 - p)) + ks * np.log(q)
    log_z = _logsumexp(logw)
    dist = ExactDistribution(graph, bc, params, logw, log_z,
                             ks.astype(np.int16), opens.astype(np.int16))
    total = float(np.sum(dist.probs))
    if abs(total - 1.0) > 1e-10:
        raise AssertionError(f"probabilities sum to {total}, not 1")
    return dist


def config_from_index(graph, idx):
    ne = graph.n_edges
    return ((idx >> np.arange(ne)) & 1).astype(np.bool_)


def index_from_config(config):
    return int(np.sum((1 << np.arange(len(config), dtype=np.int64))[config]))


def event_mask(graph, ev):
    """Boolean mask over all 2^|E| configurations for a bound event, or for
    an arbitrary python predicate (slow path)."""
    cache = getattr(graph, "_mask_cache", None)
    if cache is None:
        cache = {}
        graph._mask_cache = cache
    if isinstance(ev, BoundEvent):
        key = ev.name + ":" + ev.op
        if key not in cache:
            eu = graph.edges[:, 0].astype(np.int32)
            ev_ = graph.edges[:, 1].astype(np.int32)
            masks = [
                kernels.enumerate_connectivity(
                    graph.n_edges, eu, ev_, graph.n_vertices,
                    atom.edge_ids.astype(np.int64),
                    atom.sources.astype(np.int64), atom.targets.astype(np.int64))
                for atom in ev.atoms
            ]
            cache[key] = np.asarray(ev.combine(masks), dtype=bool)
        return cache[key]
    # opaque predicate on configurations
    n = 1 << graph.n_edges
    out = np.empty(n, dtype=bool)
    for i in range(n):
        out[i] = bool(ev(config_from_index(graph, i)))
    return out


def exact_prob(dist, ev):
    """Exact probability of an event under an enumerated distribution."""
    return float(np.sum(dist.probs[event_mask(dist.graph, ev)]))


@dataclass
class CheckResult:
    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    detail: str = ""

    def as_json(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "passed": bool(self.passed),
                "detail": self.detail}


def _require_increasing(ev):
    mono = getattr(ev, "monotone", None)
    if mono != INCREASING:
        raise ValueError(f"event must be flagged increasing, got {mono}")


def verify_fkg(dist, ev_a, ev_b):
    """P[A and B] >= P[A] P[B] for increasing A, B."""
    _require_increasing(ev_a)
    _require_increasing(ev_b)
    ma = event_mask(dist.graph, ev_a)
    mb = event_mask(dist.graph, ev_b)
    lhs = float(np.sum(dist.probs[ma & mb]))
    rhs = float(np.sum(dist.probs[ma])) * float(np.sum(dist.probs[mb]))
    return CheckResult("FKG", lhs, rhs, lhs - rhs, lhs >= rhs - TOL_EXACT)


def verify_cbc(graph, params, bc_xi, bc_zeta, ev):
    """phi^xi[A] <= phi^zeta[A] when zeta dominates xi and A is increasing."""
    _require_increasing(ev)
    if not bc_dominates(bc_xi, bc_zeta):
        raise ValueError("zeta does not dominate xi")
    lhs = exact_prob(enumerate_measure(graph, bc_xi, params), ev)
    rhs = exact_prob(enumerate_measure(graph, bc_zeta, params), ev)
    return CheckResult("CBC", lhs, rhs, rhs - lhs, lhs <= rhs + TOL_EXACT)


def verify_smp(graph, subgraph, bc, params, outer_config):
    """Conditioning on the outer configuration equals the subregion measure
    with induced boundary conditions (total-variation distance)."""
    if graph.n_edges > 20:
        raise ValueError("SMP verification capped at 20 edges")
    sub_ids = subgraph_edge_map(graph, subgraph)
    dist = enumerate_measure(graph, bc, params)
    nf = subgraph.n_edges
    outer = np.ones(graph.n_edges, dtype=bool)
    outer[sub_ids] = False
    base = int(np.sum((1 << np.arange(graph.n_edges, dtype=np.int64))[outer & outer_config]))
    idx = np.full(1 << nf, base, dtype=np.int64)
    sub_cfg = np.arange(1 << nf, dtype=np.int64)
    for j in range(nf):
        idx += ((sub_cfg >> j) & 1) << int(sub_ids[j])
    cond = dist.probs[idx]
    z = cond.sum()
    if z <= 0:
        raise ValueError("conditioning event has probability zero")
    cond = cond / z
    ind_bc = induced_bc(graph, subgraph, outer_config, bc)
    sub_dist = enumerate_measure(subgraph, ind_bc, params)
    tv = 0.5 * float(np.sum(np.abs(cond - sub_dist.probs)))
    return CheckResult("SMP", tv, TOL_EXACT, TOL_EXACT - tv, tv < TOL_EXACT,
                       detail=f"induced bc {ind_bc.blocks}")


def verify_duality(graph, dualmap, params, ev=None):
    """The complement pushforward of the wired measure at (p,q) equals the
    free measure on the dual graph at (p*,q)."""
    if graph.n_edges > 20:
        raise ValueError("duality verification capped at 20 edges")
    dist_p = enumerate_measure(graph, BoundaryCondition.wired(graph), params)
    dual = dualmap.graph()
    dist_d = enumerate_measure(dual, BoundaryCondition.free(dual), dual_params(params))
    n = 1 << graph.n_edges
    idx = (~np.arange(n, dtype=np.int64)) & (n - 1)
    push = np.zeros(n)
    push[idx] = dist_p.probs
    tv = 0.5 * float(np.sum(np.abs(push - dist_d.probs)))
    detail = ""
    if ev is not None:
        m = event_mask(dual, ev)
        lhs = float(np.sum(push[m]))
        rhs = float(np.sum(dist_d.probs[m]))
        detail = f"event pushforward {lhs:.12f} vs dual {rhs:.12f}"
    return CheckResult("duality", tv, TOL_DUAL, TOL_DUAL - tv, tv < TOL_DUAL, detail)


def verify_fi(graph, params, block_a, block_b, ev):
    """Mix vs star-mix probabilities differ by at most a factor q, both ways."""
    mix = enumerate_measure(graph, BoundaryCondition.mix(graph, block_a, block_b), params)
    star = enumerate_measure(graph, BoundaryCondition.star_mix(graph, block_a, block_b), params)
    p_mix = exact_prob(mix, ev)
    p_star = exact_prob(star, ev)
    if p_mix <= 0.0 or p_star <= 0.0:
        raise ValueError("zero-probability event in FI check")
    ratio = max(p_star / p_mix, p_mix / p_star)
    return CheckResult("FI", ratio, params.q, params.q - ratio,
                       ratio <= params.q + TOL_EXACT)


# -- the small-graph corpus ---------------------------------------------------

def corpus_rects(max_edges=16):
    """All rectangle shapes (w, h) whose region has at most max_edges edges,
    anchored at the origin, plus two translated representatives."""
    rects = []
    for w in range(0, 8):
        for h in range(0, 8):
            ne = (w + 2) * (h + 1) + (w + 1) * (h + 2)
            if ne <= max_edges:
                rects.append((0, w, 0, h))
    if max_edges >= 12:
        rects.append((-1, 0, -1, 0))
        rects.append((2, 3, -1, 0))
    return rects


def corpus_regions(lattice, max_edges=16):
    return [build_region(lattice, r) for r in corpus_rects(max_edges)]


def corpus_bcs(region):
    """The bc family exercised by the identity suite."""
    left = region.boundary_side("L")
    right = region.boundary_side("R")
    return {
        "free": BoundaryCondition.free(region),
        "wired": BoundaryCondition.wired(region),
        "dobrushin": BoundaryCondition.dobrushin(region),
        "mix": BoundaryCondition.mix(region, left, right),
        "star-mix": BoundaryCondition.star_mix(region, left, right),
    }
