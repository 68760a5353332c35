"""The exact-identity suite: FKG, CBC, SMP, FI and duality verified by
enumeration over the small-graph corpus (all rectangle regions up to an
edge cap) across the boundary-condition family and a (p, q) grid."""

import numpy as np

from .events import BoundEvent, ConnAtom, crossing
from .lattice import SQUARE, dual_of
from .measure import BoundaryCondition, ModelParams
from .oracle import (corpus_regions, corpus_bcs, enumerate_measure, exact_prob,
                     verify_cbc, verify_duality, verify_fi, verify_fkg,
                     verify_smp)

P_GRID = (0.2, 0.5, 0.8)
Q_GRID = (1.0, 1.5, 2.0, 4.0, 10.0)


def _edge_open_event(region, e):
    u, v = int(region.edges[e, 0]), int(region.edges[e, 1])
    atom = ConnAtom(np.array([e], dtype=np.int64),
                    np.array([u], dtype=np.int64), np.array([v], dtype=np.int64))
    return BoundEvent(f"edge{e}-open", "increasing", region, (atom,), "id")


def _events_for(region):
    h = crossing("H", region.rect).bind(region)
    first = _edge_open_event(region, 0)
    last = _edge_open_event(region, region.n_edges - 1)
    return h, first, last


def _subregion_for(region):
    a, b, c, d = region.rect
    if b > a:
        from .lattice import build_region
        return build_region(region.lattice, (a + 1, b, c, d))
    if d > c:
        from .lattice import build_region
        return build_region(region.lattice, (a, b, c + 1, d))
    return region


def _outer_configs(region, sub_edges):
    outer = np.ones(region.n_edges, dtype=bool)
    outer[sub_edges] = False
    closed = np.zeros(region.n_edges, dtype=bool)
    opened = outer.copy()
    mixed = np.zeros(region.n_edges, dtype=bool)
    idx = np.nonzero(outer)[0]
    mixed[idx[::2]] = True
    return [closed, opened, mixed]


def run_identity_suite(max_edges=16, p_grid=P_GRID, q_grid=Q_GRID,
                       inject_fault=None, progress=None):
    """Run every identity over the corpus. Returns (results, ok). The
    inject_fault hook flips one comparison (test harness for exit codes)."""
    from .measure import subgraph_edge_map

    results = []
    regions = corpus_regions(SQUARE, max_edges)
    for region in regions:
        bcs = corpus_bcs(region)
        ev_h, ev_e0, ev_e1 = _events_for(region)
        dualmap = dual_of(region)
        sub = _subregion_for(region)
        sub_edges = subgraph_edge_map(region, sub)
        outers = _outer_configs(region, sub_edges)
        label = f"rect{region.rect}"
        for q in q_grid:
            for p in p_grid:
                params = ModelParams(p, q)
                tag = f"{label} p={p} q={q}"
                for bc_name, bc in bcs.items():
                    dist = enumerate_measure(region, bc, params)
                    for (ea, eb) in ((ev_h, ev_e0), (ev_e0, ev_e1), (ev_h, ev_h)):
                        r = verify_fkg(dist, ea, eb)
                        if inject_fault == "fkg-sign":
                            r.passed = r.lhs <= r.rhs - 1e-3
                        r.detail = f"{tag} bc={bc_name} {ea.name}&{eb.name}"
                        results.append(r)
                for (lo, hi) in (("free", "wired"), ("free", "dobrushin"),
                                 ("dobrushin", "wired"), ("mix", "star-mix")):
                    for ev in (ev_h, ev_e0):
                        r = verify_cbc(region, params, bcs[lo], bcs[hi], ev)
                        r.detail = f"{tag} {lo}<={hi} {ev.name}"
                        results.append(r)
                for bc_name in ("free", "wired", "dobrushin"):
                    for oc in outers:
                        r = verify_smp(region, sub, bcs[bc_name], params, oc)
                        r.detail = f"{tag} bc={bc_name} sub={sub.rect}"
                        results.append(r)
                r = verify_duality(region, dualmap, params)
                r.detail = tag
                results.append(r)
                left = region.boundary_side("L")
                right = region.boundary_side("R")
                r = verify_fi(region, params, left, right, ev_h)
                r.detail = f"{tag} blocks=L|R"
                results.append(r)
            if progress:
                progress(f"{label} q={q} done")
    ok = all(r.passed for r in results)
    return results, ok


def summarize(results):
    by_name = {}
    for r in results:
        ent = by_name.setdefault(r.name, {"n": 0, "fail": 0, "worst_margin": np.inf})
        ent["n"] += 1
        ent["fail"] += 0 if r.passed else 1
        ent["worst_margin"] = min(ent["worst_margin"], r.margin)
    return by_name
