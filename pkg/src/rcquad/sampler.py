"""Monte Carlo sampling of the measure beyond enumeration scale: heat-bath
Glauber dynamics (any q > 0), Chayes-Machta cluster dynamics (q >= 1),
monotone coupled chains for bracketing, and statistically honest estimates
(batch-means standard errors inflated by the integrated autocorrelation
time, inverse-variance merging across independent chains).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .events import INCREASING, BoundEvent, CrossingEvent
from .measure import BoundaryCondition, all_closed, all_open

BURN_CAP = 100_000
PILOT_SWEEPS = 512
PILOT_CHAIN_OFFSET = 1 << 32

_THREADS = 1


def set_threads(n):
    """Worker-pool width for independent chains (kernels release the GIL).
    Results are merged in chain order, so estimates do not depend on it."""
    global _THREADS
    _THREADS = max(1, int(n))


def _pmap(fn, items):
    if _THREADS == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=_THREADS) as ex:
        return list(ex.map(fn, items))


@dataclass
class Schedule:
    """burn_in=None requests an adaptive burn-in (64 tau_int estimated from
    a pilot run, capped). sweeps counts measurement sweeps; one sample is
    recorded every `thin` sweeps."""

    burn_in: int = None
    sweeps: int = 2000
    thin: int = 1
    chains: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.sweeps <= 0 or self.thin <= 0:
            raise ValueError("sweeps and thin must be positive")
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if self.sweeps < self.thin:
            raise ValueError("sweeps smaller than thinning interval")

    @property
    def n_meas(self):
        return self.sweeps // self.thin


@dataclass
class Estimate:
    mean: float
    stderr: float
    tau_int: float
    n_samples: int
    per_chain_means: list = field(default_factory=list)
    reliable: bool = True
    note: str = ""

    def __str__(self):
        flag = "" if self.reliable else " [unreliable]"
        return f"{self.mean:.6f} +- {self.stderr:.6f} (tau={self.tau_int:.1f}, n={self.n_samples}){flag}"


# -- series statistics --------------------------------------------------------

def integrated_autocorr_time(x):
    """Initial-positive-sequence estimator of tau_int = 1/2 + sum rho(t)."""
    n = len(x)
    mean = x.mean()
    var = x.var()
    if var == 0 or n < 4:
        return 0.5
    centered = x - mean
    tau = 0.5
    for t in range(1, n // 2):
        c = np.dot(centered[: n - t], centered[t:]) / ((n - t) * var)
        if c <= 0:
            break
        tau += c
    return max(tau, 0.5)


def batch_means_stderr(x, tau):
    """Standard error of the mean by non-overlapping batch means with batch
    length at least 4 tau, floored by the naive error inflated sqrt(2 tau)."""
    n = len(x)
    var = x.var(ddof=0)
    if var == 0:
        return 0.0
    naive = math.sqrt(var / n) * math.sqrt(2.0 * tau)
    b = max(int(math.ceil(math.sqrt(n))), int(math.ceil(4.0 * tau)))
    nb = n // b
    if nb >= 2:
        batches = x[: nb * b].reshape(nb, b).mean(axis=1)
        se_b = batches.std(ddof=1) / math.sqrt(nb)
    else:
        se_b = 0.0
    return max(se_b, naive)


def _chain_stats(x, sweeps_per_sample):
    tau_samples = integrated_autocorr_time(x)
    se = batch_means_stderr(x, tau_samples)
    tau_sweeps = tau_samples * sweeps_per_sample
    return float(x.mean()), se, tau_sweeps


def merge_chain_series(series_list, thin, window_sweeps):
    """Inverse-variance merge of per-chain event series into one Estimate."""
    stats = [_chain_stats(x, thin) for x in series_list]
    means = [m for m, _, _ in stats]
    n_total = int(sum(len(x) for x in series_list))
    tau = float(max(t for _, _, t in stats))
    ses = np.array([s for _, s, _ in stats])
    if np.all(ses == 0):
        mean = float(np.mean(means))
        stderr = 0.0
    else:
        floor = ses[ses > 0].min()
        w = 1.0 / np.maximum(ses, floor) ** 2
        mean = float(np.dot(w, means) / w.sum())
        stderr = float(math.sqrt(1.0 / w.sum()))
    reliable = tau <= window_sweeps / 10.0
    note = "" if reliable else f"tau_int {tau:.0f} exceeds a tenth of the window"
    if len(means) >= 2:
        spread = max(means) - min(means)
        if spread > max(10.0 * stderr, 1e-9):
            # frozen or metastable chains report tiny in-chain errors while
            # sitting at different values; that is not a converged estimate
            reliable = False
            note = (note + "; " if note else "") + \
                f"chains disagree: spread {spread:.3g} vs stderr {stderr:.3g}"
    return Estimate(mean, stderr, tau, n_total, [float(m) for m in means],
                    reliable, note)


# -- event atom packing -------------------------------------------------------

class AtomPack:
    """Flattens the connectivity atoms of several bound events into the
    arrays the kernels consume, and recombines measured atom indicator
    series into per-event series."""

    def __init__(self, region, events):
        self.events = list(events)
        atoms = []
        self.slices = []
        for ev in self.events:
            self.slices.append((len(atoms), len(atoms) + len(ev.atoms), ev.op))
            atoms.extend(ev.atoms)
        e_parts, s_parts, d_parts, v_parts = [], [], [], []
        eptr, sptr, dptr, vptr = [0], [0], [0], [0]
        for atom in atoms:
            touched = atom.touched_vertices(region)
            e_parts.append(atom.edge_ids)
            s_parts.append(atom.sources)
            d_parts.append(atom.targets)
            v_parts.append(touched)
            eptr.append(eptr[-1] + len(atom.edge_ids))
            sptr.append(sptr[-1] + len(atom.sources))
            dptr.append(dptr[-1] + len(atom.targets))
            vptr.append(vptr[-1] + len(touched))

        def cat(parts):
            if not parts:
                return np.zeros(0, dtype=np.int64)
            return np.concatenate(parts).astype(np.int64)

        self.n_atoms = len(atoms)
        self.a_e = cat(e_parts)
        self.a_s = cat(s_parts)
        self.a_d = cat(d_parts)
        self.a_v = cat(v_parts)
        self.a_eptr = np.array(eptr, dtype=np.int64)
        self.a_sptr = np.array(sptr, dtype=np.int64)
        self.a_dptr = np.array(dptr, dtype=np.int64)
        self.a_vptr = np.array(vptr, dtype=np.int64)

    def kernel_args(self):
        return (self.a_e, self.a_eptr, self.a_s, self.a_sptr,
                self.a_d, self.a_dptr, self.a_v, self.a_vptr)

    def event_series(self, atom_series):
        """atom_series (n_meas, n_atoms) uint8 -> list of float series."""
        out = []
        for (i0, i1, op), ev in zip(self.slices, self.events):
            cols = [atom_series[:, j].astype(bool) for j in range(i0, i1)]
            out.append(np.asarray(ev.combine(cols), dtype=np.float64))
        return out


def _graph_arrays(region):
    eu = region.edges[:, 0].astype(np.int32)
    ev = region.edges[:, 1].astype(np.int32)
    return eu, ev


def _bc_mates(region, bc):
    """CSR of blockmates per vertex (teleports for the Glauber BFS)."""
    nv = region.n_vertices
    lists = [()] * nv
    for blk in bc.nontrivial_blocks():
        for v in blk:
            lists[v] = tuple(w for w in blk if w != v)
    ptr = np.zeros(nv + 1, dtype=np.int64)
    for v in range(nv):
        ptr[v + 1] = ptr[v] + len(lists[v])
    mates = np.zeros(max(int(ptr[-1]), 1), dtype=np.int32)
    for v in range(nv):
        if lists[v]:
            mates[ptr[v]: ptr[v + 1]] = lists[v]
    return ptr, mates


def _bind(region, ev):
    if isinstance(ev, CrossingEvent):
        return ev.bind(region)
    if isinstance(ev, BoundEvent):
        return ev
    raise TypeError(f"cannot bind event {ev!r}")


def _init_config(region, params, init, seed, chain):
    if params.p >= 1.0:
        return all_open(region)
    if params.p <= 0.0:
        return all_closed(region)
    if init == "open":
        return all_open(region)
    if init == "closed":
        return all_closed(region)
    if init == "bernoulli":
        return kernels.init_bernoulli(region.n_edges, params.p,
                                      np.uint64(seed), np.uint64(chain))
    raise ValueError(f"unknown init {init!r}")


class ChainState:
    """One chain: configuration, rng stream identity, sweep counter.
    Deterministic: the state after n sweeps is a pure function of
    (region, bc, params, seed, chain, init, n)."""

    def __init__(self, region, bc, params, seed=0, chain=0, init="bernoulli"):
        self.region = region
        self.bc = bc
        self.params = params
        self.seed = int(seed)
        self.chain = int(chain)
        self.sweep = 0
        self.config = _init_config(region, params, init, seed, chain)
        self._empty = AtomPack(region, [])
        self._mates = None

    def _advance(self, dynamics, n_sweeps):
        region, params = self.region, self.params
        if params.p >= 1.0 or params.p <= 0.0:
            # degenerate edge weights short-circuit to the absorbed state
            self.config[:] = params.p >= 1.0
            self.sweep += n_sweeps
            return self
        eu, ev = _graph_arrays(region)
        bc_rep = self.bc.block_of().astype(np.int32)
        out = np.zeros((0, 0), dtype=np.uint8)
        if dynamics == "cm":
            if params.q < 1.0:
                raise ValueError("Chayes-Machta dynamics requires q >= 1")
            kernels.run_chayes_machta(
                self.config, eu, ev, region.n_vertices, bc_rep,
                params.p, params.q, np.uint64(self.seed), np.uint64(self.chain),
                np.uint64(self.sweep), n_sweeps, 0, 1,
                *self._empty.kernel_args(), out)
        elif dynamics == "glauber":
            indptr, adj_v, adj_e = region.adjacency()
            if self._mates is None:
                self._mates = _bc_mates(region, self.bc)
            mate_ptr, mates = self._mates
            kernels.run_glauber(
                self.config, eu, ev, region.n_vertices, bc_rep,
                indptr, adj_v, adj_e, mate_ptr, mates,
                params.p, params.q, np.uint64(self.seed), np.uint64(self.chain),
                np.uint64(self.sweep), n_sweeps, 0, 1,
                *self._empty.kernel_args(), out)
        else:
            raise ValueError(f"unknown dynamics {dynamics!r}")
        self.sweep += n_sweeps
        return self


def glauber_sweep(state, n_sweeps=1):
    """Advance heat-bath Glauber dynamics: every edge resampled once per
    sweep, in edge-id order, from its exact one-edge conditional."""
    return state._advance("glauber", n_sweeps)


def chayes_machta_step(state, n_steps=1):
    """Advance Chayes-Machta cluster dynamics (q >= 1): clusters (with bc
    blocks contracted) are activated with probability 1/q, and every edge
    between two active clusters is resampled Bernoulli(p)."""
    return state._advance("cm", n_steps)


def _run_one_chain(region, bc, params, pack, schedule, chain, dynamics, init,
                   burn, sweep0=0):
    eu, ev = _graph_arrays(region)
    bc_rep = bc.block_of().astype(np.int32)
    config = _init_config(region, params, init, schedule.seed, chain)
    n_meas = schedule.n_meas
    out = np.zeros((n_meas, pack.n_atoms), dtype=np.uint8)
    if params.p >= 1.0 or params.p <= 0.0:
        row = np.zeros(pack.n_atoms, dtype=np.uint8)
        kernels._eval_atoms(config, eu, ev,
                            np.arange(region.n_vertices, dtype=np.int32),
                            np.full(region.n_vertices, -1, dtype=np.int64),
                            *pack.kernel_args(), row)
        out[:] = row
        return out
    if dynamics == "cm":
        kernels.run_chayes_machta(
            config, eu, ev, region.n_vertices, bc_rep, params.p, params.q,
            np.uint64(schedule.seed), np.uint64(chain), np.uint64(sweep0),
            burn, n_meas, schedule.thin, *pack.kernel_args(), out)
    else:
        indptr, adj_v, adj_e = region.adjacency()
        mate_ptr, mates = _bc_mates(region, bc)
        kernels.run_glauber(
            config, eu, ev, region.n_vertices, bc_rep,
            indptr, adj_v, adj_e, mate_ptr, mates, params.p, params.q,
            np.uint64(schedule.seed), np.uint64(chain), np.uint64(sweep0),
            burn, n_meas, schedule.thin, *pack.kernel_args(), out)
    return out


def _resolve_burn(region, bc, params, pack, schedule, dynamics, init):
    if schedule.burn_in is not None:
        return schedule.burn_in
    pilot = Schedule(burn_in=0, sweeps=PILOT_SWEEPS, thin=1, chains=1,
                     seed=schedule.seed)
    out = _run_one_chain(region, bc, params, pack, pilot,
                         PILOT_CHAIN_OFFSET, dynamics, init, 0)
    taus = [integrated_autocorr_time(out[:, a].astype(np.float64))
            for a in range(max(pack.n_atoms, 1))] or [0.5]
    burn = int(min(math.ceil(64 * max(taus)), BURN_CAP))
    return max(burn, 64)


def estimate_event(region, bc, params, ev, schedule, dynamics="cm",
                   init="bernoulli"):
    """Monte Carlo estimate of the probability of an event. Deterministic
    for a fixed Schedule.seed and chain count."""
    bound = _bind(region, ev)
    pack = AtomPack(region, [bound])
    burn = _resolve_burn(region, bc, params, pack, schedule, dynamics, init)
    outs = _pmap(lambda c: _run_one_chain(region, bc, params, pack, schedule,
                                          c, dynamics, init, burn),
                 list(range(schedule.chains)))
    series = [pack.event_series(out)[0] for out in outs]
    return merge_chain_series(series, schedule.thin, schedule.sweeps)


def estimate_events(region, bc, params, events, schedule, dynamics="cm",
                    init="bernoulli"):
    """Estimates for several events measured on the same chains (one
    Estimate per event, in order)."""
    bounds = [_bind(region, e) for e in events]
    pack = AtomPack(region, bounds)
    burn = _resolve_burn(region, bc, params, pack, schedule, dynamics, init)
    outs = _pmap(lambda c: _run_one_chain(region, bc, params, pack, schedule,
                                          c, dynamics, init, burn),
                 list(range(schedule.chains)))
    per_event = [[] for _ in bounds]
    for out in outs:
        for i, s in enumerate(pack.event_series(out)):
            per_event[i].append(s)
    return [merge_chain_series(s, schedule.thin, schedule.sweeps)
            for s in per_event]


class CouplingViolation(RuntimeError):
    pass


def coupled_chain_run(region, params, specs, order_pairs, ev, schedule):
    """Glauber chains driven by the same per-(sweep, edge) uniforms.

    specs: list of (BoundaryCondition, init) pairs, one chain each;
    order_pairs: (lo, hi) chain index pairs whose configs must stay
    pointwise ordered every sweep (violation raises CouplingViolation).
    Returns one Estimate per chain.
    """
    if params.q < 1.0:
        raise ValueError("monotone coupling requires q >= 1")
    bound = _bind(region, ev)
    if bound.monotone != INCREASING:
        raise ValueError("coupled bracketing requires an increasing event")
    pack = AtomPack(region, [bound])
    eu, evv = _graph_arrays(region)
    nv = region.n_vertices
    k = len(specs)
    configs = np.zeros((k, region.n_edges), dtype=np.bool_)
    bc_reps = np.zeros((k, nv), dtype=np.int32)
    ptrs, mates_ = [], []
    for i, (bc, init) in enumerate(specs):
        configs[i] = _init_config(region, params, init, schedule.seed, i)
        bc_reps[i] = bc.block_of().astype(np.int32)
        mp, mm = _bc_mates(region, bc)
        ptrs.append(mp)
        mates_.append(mm)
    mate_ptrs = np.stack(ptrs)
    width = max(len(m) for m in mates_)
    mates_arr = np.zeros((k, width), dtype=np.int32)
    for i, m in enumerate(mates_):
        mates_arr[i, : len(m)] = m
    order_lo = np.array([t[0] for t in order_pairs], dtype=np.int64)
    order_hi = np.array([t[1] for t in order_pairs], dtype=np.int64)
    burn = schedule.burn_in if schedule.burn_in is not None else min(
        64 * 8, BURN_CAP)
    n_meas = schedule.n_meas
    out = np.zeros((k, n_meas, pack.n_atoms), dtype=np.uint8)
    if params.p >= 1.0 or params.p <= 0.0:
        configs[:] = params.p >= 1.0
        row = np.zeros(pack.n_atoms, dtype=np.uint8)
        kernels._eval_atoms(configs[0], eu, evv,
                            np.arange(nv, dtype=np.int32),
                            np.full(nv, -1, dtype=np.int64),
                            *pack.kernel_args(), row)
        out[:, :] = row
    else:
        bad = kernels.run_glauber_coupled(
            configs, eu, evv, nv, bc_reps,
            *region.adjacency(), mate_ptrs, mates_arr,
            order_lo, order_hi, params.p, params.q,
            np.uint64(schedule.seed), np.uint64(0), burn, n_meas, schedule.thin,
            *pack.kernel_args(), out)
        if bad >= 0:
            raise CouplingViolation(f"monotone order violated at sweep {bad}")
    ests = []
    for i in range(k):
        s = pack.event_series(out[i])[0]
        ests.append(merge_chain_series([s], schedule.thin, schedule.sweeps))
    return ests


def monotone_pair_run(region, params, schedule, ev):
    """Sandwich run: a free/all-closed chain below and a wired/all-open
    chain above, same randomness, pointwise ordered every sweep. The two
    estimates bracket the stationary values of the two extreme boundary
    conditions for an increasing event."""
    specs = [(BoundaryCondition.free(region), "closed"),
             (BoundaryCondition.wired(region), "open")]
    low, high = coupled_chain_run(region, params, specs, [(0, 1)], ev, schedule)
    return low, high


def bracket_run(region, params, schedule, ev):
    """Four coupled chains giving two-sided brackets for both extreme bcs:
    free/closed <= free/open and wired/closed <= wired/open, with the free
    chains below the wired ones. Returns a dict of Estimates."""
    free = BoundaryCondition.free(region)
    wired = BoundaryCondition.wired(region)
    specs = [(free, "closed"), (free, "open"), (wired, "closed"), (wired, "open")]
    pairs = [(0, 1), (2, 3), (0, 2), (1, 3)]
    ests = coupled_chain_run(region, params, specs, pairs, ev, schedule)
    return {"free_low": ests[0], "free_high": ests[1],
            "wired_low": ests[2], "wired_high": ests[3]}
