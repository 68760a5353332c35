"""Numba kernels: exhaustive enumeration, event connectivity, and the two
Monte Carlo dynamics (heat-bath Glauber, Chayes-Machta cluster steps).

Connectivity conventions used throughout:
  * cluster counts merge boundary-condition blocks (parent initialized to
    the block representative);
  * event connectivity is raw (no bc wiring) and restricted to the event's
    own edge list;
  * the Glauber conditional needs connectivity of an edge's endpoints in
    (config minus that edge) WITH bc wirings; a union-find snapshot gives a
    fast path and a bidirectional BFS (teleporting through bc blocks) is
    the exact fallback.
"""

import numba
import numpy as np
from numba import njit

from .rng import TAG_CM_BOND, TAG_CM_COLOR, TAG_GLAUBER, TAG_INIT, key_u01, stream_key

SWEEP_INIT = np.uint64(0xFFFFFFFFFFFF)


@njit(inline="always")
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


# ---------------------------------------------------------------------------
# exhaustive enumeration (exact oracle)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def enumerate_counts(n_edges, eu, ev, n_vertices, bc_rep):
    """Cluster count k and open-edge count for every configuration bitmask
    in [0, 2^n_edges)."""
    n_configs = np.int64(1) << n_edges
    ks = np.empty(n_configs, dtype=np.int16)
    opens = np.empty(n_configs, dtype=np.int8)
    parent = np.empty(n_vertices, dtype=np.int32)
    for cfg in range(n_configs):
        for v in range(n_vertices):
            parent[v] = bc_rep[v]
        nopen = 0
        for e in range(n_edges):
            if (cfg >> e) & 1:
                nopen += 1
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
        k = 0
        for v in range(n_vertices):
            if _find(parent, v) == v:
                k += 1
        ks[cfg] = k
        opens[cfg] = nopen
    return ks, opens


@njit(cache=True, nogil=True)
def enumerate_connectivity(n_edges, eu, ev, n_vertices, atom_edges, src, dst):
    """For every configuration bitmask: is some src vertex joined to some
    dst vertex by open edges among atom_edges (no bc wiring)."""
    n_configs = np.int64(1) << n_edges
    out = np.zeros(n_configs, dtype=np.bool_)
    parent = np.empty(n_vertices, dtype=np.int32)
    mark = np.full(n_vertices, -1, dtype=np.int64)
    for cfg in range(n_configs):
        for v in range(n_vertices):
            parent[v] = v
        for i in range(len(atom_edges)):
            e = atom_edges[i]
            if (cfg >> e) & 1:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
        for i in range(len(src)):
            mark[_find(parent, src[i])] = cfg
        hit = False
        for i in range(len(dst)):
            if mark[_find(parent, dst[i])] == cfg:
                hit = True
                break
        out[cfg] = hit
    return out


# ---------------------------------------------------------------------------
# packed event atoms (shared by all sampling kernels)
# ---------------------------------------------------------------------------
# Atoms are connectivity queries (edge list, source list, target list) packed
# into flat arrays: a_e/a_eptr edges, a_s/a_sptr sources, a_d/a_dptr targets,
# a_v/a_vptr the vertices touched (for O(touched) union-find resets).

@njit(inline="never")
def _eval_atoms(config, eu, ev, parent, mark,
                a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                out_row):
    n_atoms = len(a_eptr) - 1
    for a in range(n_atoms):
        for i in range(a_vptr[a], a_vptr[a + 1]):
            v = a_v[i]
            parent[v] = v
            mark[v] = -1
        for i in range(a_eptr[a], a_eptr[a + 1]):
            e = a_e[i]
            if config[e]:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
        for i in range(a_sptr[a], a_sptr[a + 1]):
            mark[_find(parent, a_s[i])] = 1
        hit = np.uint8(0)
        for i in range(a_dptr[a], a_dptr[a + 1]):
            if mark[_find(parent, a_d[i])] == 1:
                hit = np.uint8(1)
                break
        out_row[a] = hit


# ---------------------------------------------------------------------------
# initial configurations
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def init_bernoulli(n_edges, p, seed, chain):
    key = stream_key(seed, chain, SWEEP_INIT, np.uint64(TAG_INIT))
    out = np.empty(n_edges, dtype=np.bool_)
    for e in range(n_edges):
        out[e] = key_u01(key, np.uint64(e)) < p
    return out


# ---------------------------------------------------------------------------
# Chayes-Machta dynamics (real q >= 1, single active color)
# ---------------------------------------------------------------------------
# One step: find clusters with bc blocks contracted; each cluster is active
# with probability 1/q (decided by hashing its union-find root); every edge
# whose two endpoint clusters are both active is resampled Bernoulli(p),
# all other edges keep their state. For q = 1 every cluster is active and
# the step is a full Bernoulli(p) resample.

@njit(cache=True, nogil=True)
def run_chayes_machta(config, eu, ev, n_vertices, bc_rep, p, q,
                      seed, chain, sweep0, n_burn, n_meas, thin,
                      a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                      out_series):
    n_edges = len(config)
    parent = np.empty(n_vertices, dtype=np.int32)
    active = np.empty(n_vertices, dtype=np.bool_)
    eparent = np.empty(n_vertices, dtype=np.int32)
    emark = np.full(n_vertices, -1, dtype=np.int64)
    inv_q = 1.0 / q
    total = n_burn + n_meas * thin
    row = 0
    for s in range(total):
        bkey = stream_key(seed, chain, sweep0 + np.uint64(s), np.uint64(TAG_CM_BOND))
        if q == 1.0:
            # every cluster active: a full Bernoulli resample
            for e in range(n_edges):
                config[e] = key_u01(bkey, np.uint64(e)) < p
        else:
            for v in range(n_vertices):
                parent[v] = bc_rep[v]
            for e in range(n_edges):
                if config[e]:
                    ru = _find(parent, eu[e])
                    rv = _find(parent, ev[e])
                    if ru != rv:
                        parent[ru] = rv
            ckey = stream_key(seed, chain, sweep0 + np.uint64(s), np.uint64(TAG_CM_COLOR))
            for v in range(n_vertices):
                active[v] = key_u01(ckey, np.uint64(_find(parent, v))) < inv_q
            for e in range(n_edges):
                if active[eu[e]] and active[ev[e]]:
                    config[e] = key_u01(bkey, np.uint64(e)) < p
        if s >= n_burn and (s - n_burn + 1) % thin == 0:
            _eval_atoms(config, eu, ev, eparent, emark,
                        a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                        out_series[row])
            row += 1
    return row


# ---------------------------------------------------------------------------
# heat-bath Glauber dynamics (any q > 0)
# ---------------------------------------------------------------------------

@njit(inline="never")
def _bfs_connected(u, v, skip_edge, config, indptr, adj_v, adj_e,
                   mate_ptr, mates, visit, qa, qb, query):
    """Bidirectional BFS: u <-> v in (open config minus skip_edge), with
    teleports through bc-block mates. visit stamps: 2*query side A,
    2*query+1 side B."""
    sa = 2 * query
    sb = sa + 1
    if u == v:
        return True
    na = 0
    nb = 0
    qa[na] = u
    na += 1
    visit[u] = sa
    for i in range(mate_ptr[u], mate_ptr[u + 1]):
        m = mates[i]
        if visit[m] != sa:
            if visit[m] == sb:
                return True
            visit[m] = sa
            qa[na] = m
            na += 1
    qb[nb] = v
    nb += 1
    if visit[v] == sa:
        return True
    visit[v] = sb
    for i in range(mate_ptr[v], mate_ptr[v + 1]):
        m = mates[i]
        if visit[m] != sb:
            if visit[m] == sa:
                return True
            visit[m] = sb
            qb[nb] = m
            nb += 1
    ha = 0
    hb = 0
    while ha < na and hb < nb:
        # expand the smaller frontier
        if na - ha <= nb - hb:
            x = qa[ha]
            ha += 1
            own, other = sa, sb
            for i in range(indptr[x], indptr[x + 1]):
                e = adj_e[i]
                if e == skip_edge or not config[e]:
                    continue
                w = adj_v[i]
                if visit[w] == own:
                    continue
                if visit[w] == other:
                    return True
                visit[w] = own
                qa[na] = w
                na += 1
                for j in range(mate_ptr[w], mate_ptr[w + 1]):
                    m = mates[j]
                    if visit[m] != own:
                        if visit[m] == other:
                            return True
                        visit[m] = own
                        qa[na] = m
                        na += 1
        else:
            x = qb[hb]
            hb += 1
            own, other = sb, sa
            for i in range(indptr[x], indptr[x + 1]):
                e = adj_e[i]
                if e == skip_edge or not config[e]:
                    continue
                w = adj_v[i]
                if visit[w] == own:
                    continue
                if visit[w] == other:
                    return True
                visit[w] = own
                qb[nb] = w
                nb += 1
                for j in range(mate_ptr[w], mate_ptr[w + 1]):
                    m = mates[j]
                    if visit[m] != own:
                        if visit[m] == other:
                            return True
                        visit[m] = own
                        qb[nb] = m
                        nb += 1
    return False


@njit(inline="never")
def _glauber_sweep_inplace(config, eu, ev, n_vertices, bc_rep,
                           indptr, adj_v, adj_e, mate_ptr, mates,
                           p, q, ukey, parent, visit, qa, qb, qstate):
    """One sweep: every edge updated once in increasing id order. qstate
    holds the running BFS query counter (kept across sweeps)."""
    n_edges = len(config)
    for v in range(n_vertices):
        parent[v] = bc_rep[v]
    for e in range(n_edges):
        if config[e]:
            ru = _find(parent, eu[e])
            rv = _find(parent, ev[e])
            if ru != rv:
                parent[ru] = rv
    closures = 0
    p_split = p / (p + q * (1.0 - p))
    for e in range(n_edges):
        u = eu[e]
        v = ev[e]
        if config[e]:
            qstate[0] += 1
            conn = _bfs_connected(u, v, e, config, indptr, adj_v, adj_e,
                                  mate_ptr, mates, visit, qa, qb, qstate[0])
        else:
            ru = _find(parent, u)
            rv = _find(parent, v)
            if ru != rv:
                conn = False
            elif closures == 0:
                conn = True
            else:
                qstate[0] += 1
                conn = _bfs_connected(u, v, e, config, indptr, adj_v, adj_e,
                                      mate_ptr, mates, visit, qa, qb, qstate[0])
        pr = p if conn else p_split
        new = key_u01(ukey, np.uint64(e)) < pr
        if new != config[e]:
            if new:
                ru = _find(parent, u)
                rv = _find(parent, v)
                if ru != rv:
                    parent[ru] = rv
            else:
                closures += 1
            config[e] = new


@njit(cache=True, nogil=True)
def run_glauber(config, eu, ev, n_vertices, bc_rep,
                indptr, adj_v, adj_e, mate_ptr, mates,
                p, q, seed, chain, sweep0, n_burn, n_meas, thin,
                a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                out_series):
    parent = np.empty(n_vertices, dtype=np.int32)
    eparent = np.empty(n_vertices, dtype=np.int32)
    emark = np.full(n_vertices, -1, dtype=np.int64)
    visit = np.full(n_vertices, -1, dtype=np.int64)
    qa = np.empty(n_vertices, dtype=np.int32)
    qb = np.empty(n_vertices, dtype=np.int32)
    qstate = np.zeros(1, dtype=np.int64)
    total = n_burn + n_meas * thin
    row = 0
    for s in range(total):
        ukey = stream_key(seed, chain, sweep0 + np.uint64(s), np.uint64(TAG_GLAUBER))
        _glauber_sweep_inplace(config, eu, ev, n_vertices, bc_rep,
                               indptr, adj_v, adj_e, mate_ptr, mates,
                               p, q, ukey, parent, visit, qa, qb, qstate)
        if s >= n_burn and (s - n_burn + 1) % thin == 0:
            _eval_atoms(config, eu, ev, eparent, emark,
                        a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                        out_series[row])
            row += 1
    return row


@njit(cache=True, nogil=True)
def run_glauber_coupled(configs, eu, ev, n_vertices, bc_reps,
                        indptr, adj_v, adj_e, mate_ptrs, mates_list,
                        order_lo, order_hi,
                        p, q, seed, sweep0, n_burn, n_meas, thin,
                        a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                        out_series):
    """K Glauber chains driven by the SAME per-(sweep, edge) uniforms.
    bc_reps/mate_* are per-chain (chains may have different boundary
    conditions). order_lo/order_hi list chain index pairs that must satisfy
    configs[lo] <= configs[hi] pointwise after every sweep; the first
    violation aborts with its sweep index (return >= 0 means violated).
    """
    n_chains = configs.shape[0]
    n_edges = configs.shape[1]
    parent = np.empty(n_vertices, dtype=np.int32)
    eparent = np.empty(n_vertices, dtype=np.int32)
    emark = np.full(n_vertices, -1, dtype=np.int64)
    visit = np.full(n_vertices, -1, dtype=np.int64)
    qa = np.empty(n_vertices, dtype=np.int32)
    qb = np.empty(n_vertices, dtype=np.int32)
    qstate = np.zeros(1, dtype=np.int64)
    total = n_burn + n_meas * thin
    row = 0
    for s in range(total):
        ukey = stream_key(seed, np.uint64(0), sweep0 + np.uint64(s), np.uint64(TAG_GLAUBER))
        for k in range(n_chains):
            _glauber_sweep_inplace(configs[k], eu, ev, n_vertices, bc_reps[k],
                                   indptr, adj_v, adj_e,
                                   mate_ptrs[k], mates_list[k],
                                   p, q, ukey, parent, visit, qa, qb, qstate)
        for t in range(len(order_lo)):
            lo = order_lo[t]
            hi = order_hi[t]
            for e in range(n_edges):
                if configs[lo, e] and not configs[hi, e]:
                    return s
        if s >= n_burn and (s - n_burn + 1) % thin == 0:
            for k in range(n_chains):
                _eval_atoms(configs[k], eu, ev, eparent, emark,
                            a_e, a_eptr, a_s, a_sptr, a_d, a_dptr, a_v, a_vptr,
                            out_series[k, row])
            row += 1
    return -1
