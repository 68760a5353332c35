import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_cluster_count
from rcquad.lattice import SQUARE, build_region, dual_of
from rcquad.measure import (BoundaryCondition as BC, ModelParams, all_closed,
                            all_open, bc_dominates, cluster_count,
                            cluster_count_dfs, dual_config, dual_params,
                            heat_bath_prob, induced_bc, log_weight,
                            self_dual_point)
from rcquad.oracle import enumerate_measure


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(-0.1, 1.0)
    with pytest.raises(ValueError):
        ModelParams(0.5, 0.0)
    ModelParams(0.0, 0.5)  # q<1 allowed for the measure itself


def test_cluster_count_single_edge(single_edge):
    closed = all_closed(single_edge)
    assert cluster_count(single_edge, BC.free(single_edge), closed) == 2
    assert cluster_count(single_edge, BC.wired(single_edge), closed) == 1


def test_cluster_count_connected_region(unit_region):
    assert cluster_count(unit_region, BC.free(unit_region), all_open(unit_region)) == 1


@pytest.mark.parametrize("rect", [(0, 1, 0, 1), (0, 2, 0, 0)])
@pytest.mark.parametrize("bc_name", ["free", "wired", "dobrushin"])
def test_cluster_count_matches_dfs_and_brute(rect, bc_name):
    region = build_region(SQUARE, rect)
    bc = getattr(BC, bc_name)(region)
    rng = np.random.default_rng(5)
    for _ in range(25):
        cfg = rng.random(region.n_edges) < rng.random()
        k1 = cluster_count(region, bc, cfg)
        k2 = cluster_count_dfs(region, bc, cfg)
        k3 = brute_cluster_count(region, [list(b) for b in bc.blocks],
                                 list(np.nonzero(cfg)[0]))
        assert k1 == k2 == k3


def test_cluster_count_bc_sandwich(unit_region):
    rng = np.random.default_rng(0)
    free, wired = BC.free(unit_region), BC.wired(unit_region)
    dob = BC.dobrushin(unit_region)
    for _ in range(20):
        cfg = rng.random(unit_region.n_edges) < 0.5
        kf = cluster_count(unit_region, free, cfg)
        kd = cluster_count(unit_region, dob, cfg)
        kw = cluster_count(unit_region, wired, cfg)
        assert kf >= kd >= kw


def test_delta_k_on_single_edge_flip(unit_region):
    rng = np.random.default_rng(1)
    for bc in (BC.free(unit_region), BC.wired(unit_region)):
        for _ in range(30):
            cfg = rng.random(unit_region.n_edges) < 0.4
            e = rng.integers(unit_region.n_edges)
            cfg[e] = False
            k0 = cluster_count(unit_region, bc, cfg)
            cfg[e] = True
            k1 = cluster_count(unit_region, bc, cfg)
            assert k1 - k0 in (-1, 0)


def test_log_weight_values(single_edge):
    params = ModelParams(0.5, 1.0)
    cfg = all_open(single_edge)
    assert log_weight(params, single_edge, BC.free(single_edge), cfg) == 0.0
    params2 = ModelParams(0.3, 2.0)
    cfg2 = all_closed(single_edge)
    expect = 2 * math.log(2.0)
    assert abs(log_weight(params2, single_edge, BC.free(single_edge), cfg2) - expect) < 1e-12


def test_log_weight_degenerate_p(single_edge):
    with pytest.raises(ValueError):
        log_weight(ModelParams(0.0, 2.0), single_edge, BC.free(single_edge),
                   all_open(single_edge))


def test_heat_bath_prob_cases(unit_region):
    params = ModelParams(0.5, 2.0)
    bc = BC.free(unit_region)
    cfg = all_open(unit_region)
    inner = unit_region.edges_in_rect((0, 1, 0, 1), mode="both")
    e = int(inner[0])
    # endpoints of an inner edge stay connected around the square
    assert heat_bath_prob(params, unit_region, bc, cfg, e) == 0.5
    cfg2 = all_closed(unit_region)
    assert abs(heat_bath_prob(params, unit_region, bc, cfg2, e) - 1/3) < 1e-15
    # q=1 is Bernoulli regardless of connectivity
    p1 = ModelParams(0.42, 1.0)
    assert heat_bath_prob(p1, unit_region, bc, cfg, e) == 0.42
    assert heat_bath_prob(p1, unit_region, bc, cfg2, e) == 0.42


def test_heat_bath_matches_enumerated_conditional():
    region = build_region(SQUARE, (0, 1, 0, 0))  # 7 edges
    params = ModelParams(0.37, 3.0)
    rng = np.random.default_rng(3)
    for bc in (BC.free(region), BC.wired(region), BC.dobrushin(region)):
        dist = enumerate_measure(region, bc, params)
        for _ in range(12):
            cfg = rng.random(region.n_edges) < 0.5
            e = int(rng.integers(region.n_edges))
            # conditional from the exact distribution
            idx_open = idx_closed = 0
            for j in range(region.n_edges):
                if j == e:
                    continue
                if cfg[j]:
                    idx_open += 1 << j
                    idx_closed += 1 << j
            idx_open += 1 << e
            w_open = dist.probs[idx_open]
            w_closed = dist.probs[idx_closed]
            exact = w_open / (w_open + w_closed)
            hb = heat_bath_prob(params, region, bc, cfg, e)
            assert abs(hb - exact) < 1e-12


def test_bc_canonical_form(unit_region):
    b = list(unit_region.boundary_idx)
    bc1 = BC(unit_region, [[b[2], b[0]], [b[1]]])
    bc2 = BC(unit_region, [[b[0], b[2]]])
    assert bc1 == bc2
    assert hash(bc1) == hash(bc2)


def test_bc_rejects_bad_blocks(unit_region):
    interior = [v for v in range(unit_region.n_vertices)
                if v not in set(map(int, unit_region.boundary_idx))]
    with pytest.raises(ValueError):
        BC(unit_region, [[interior[0]]])
    b = list(map(int, unit_region.boundary_idx))
    with pytest.raises(ValueError):
        BC(unit_region, [[b[0], b[1]], [b[1], b[2]]])


def test_bc_dominates_basics(unit_region):
    free, wired = BC.free(unit_region), BC.wired(unit_region)
    dob = BC.dobrushin(unit_region)
    left = unit_region.boundary_side("L")
    right = unit_region.boundary_side("R")
    mix = BC.mix(unit_region, left, right)
    star = BC.star_mix(unit_region, left, right)
    for bc in (free, wired, dob, mix, star):
        assert bc_dominates(free, bc)
        assert bc_dominates(bc, wired)
        assert bc_dominates(bc, bc)
    assert bc_dominates(mix, star)
    assert not bc_dominates(star, mix)
    assert not bc_dominates(wired, free)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_bc_dominates_partial_order(data):
    region = build_region(SQUARE, (0, 1, 0, 1))
    nb = len(region.boundary_idx)
    bvs = list(map(int, region.boundary_idx))

    def draw_bc():
        labels = data.draw(st.lists(st.integers(0, 3), min_size=nb, max_size=nb))
        blocks = {}
        for v, lab in zip(bvs, labels):
            blocks.setdefault(lab, []).append(v)
        return BC(region, list(blocks.values()))

    a, b, c = draw_bc(), draw_bc(), draw_bc()
    assert bc_dominates(a, a)
    if bc_dominates(a, b) and bc_dominates(b, a):
        assert a == b  # antisymmetry on canonical forms
    if bc_dominates(a, b) and bc_dominates(b, c):
        assert bc_dominates(a, c)


def test_induced_bc_all_closed_is_free(unit_region):
    sub = build_region(SQUARE, (1, 1, 0, 1))
    out = induced_bc(unit_region, sub, all_closed(unit_region), BC.free(unit_region))
    assert out == BC.free(sub)


def test_induced_bc_all_open_is_wired(unit_region):
    sub = build_region(SQUARE, (1, 1, 0, 1))
    out = induced_bc(unit_region, sub, all_open(unit_region), BC.wired(unit_region))
    assert out == BC.wired(sub)
    # under free outer bc only the sub-boundary vertices touched by open
    # outer edges merge; pendants shared with the host exterior stay
    # singletons (the singleton convention)
    out2 = induced_bc(unit_region, sub, all_open(unit_region), BC.free(unit_region))
    touched = sorted(int(v) for v in sub.boundary_idx
                     if tuple(sub.coords[v]) in ((0, 0), (0, 1)))
    got = [list(b) for b in out2.blocks if len(b) > 1]
    assert got == [touched]


def test_induced_bc_interior_subregion_all_open():
    host = build_region(SQUARE, (0, 2, 0, 2))   # 24 edges
    sub = build_region(SQUARE, (1, 1, 1, 1))    # star strictly inside
    out = induced_bc(host, sub, all_open(host), BC.free(host))
    assert out == BC.wired(sub)


def test_induced_bc_through_wiring_only(unit_region):
    sub = build_region(SQUARE, (1, 1, 0, 1))
    out = induced_bc(unit_region, sub, all_closed(unit_region), BC.wired(unit_region))
    # exactly the sub-boundary vertices that lie on the host boundary merge
    host_bnd = {tuple(unit_region.coords[v]) for v in unit_region.boundary_idx}
    expect_block = sorted(int(v) for v in sub.boundary_idx
                          if tuple(sub.coords[v]) in host_bnd)
    got = [list(b) for b in out.blocks if len(b) > 1]
    assert got == [expect_block]


def test_dual_params_examples():
    assert abs(dual_params(ModelParams(2/3, 2.0)).p - 0.5) < 1e-15
    assert abs(dual_params(ModelParams(0.3, 1.0)).p - 0.7) < 1e-15
    assert dual_params(ModelParams(0.0, 3.0)).p == 1.0
    assert dual_params(ModelParams(1.0, 3.0)).p == 0.0
    sd = self_dual_point(2.0)
    assert abs(sd - 0.5857864376269049) < 1e-12
    assert abs(dual_params(ModelParams(sd, 2.0)).p - sd) < 1e-12
    assert abs(self_dual_point(4.0) - 2/3) < 1e-15


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5857864376269049, 0.9])
@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 25.0])
def test_dual_params_involution(p, q):
    params = ModelParams(p, q)
    back = dual_params(dual_params(params))
    assert abs(back.p - p) < 1e-12
    assert back.q == q


def test_dual_config_complement(unit_region):
    dm = dual_of(unit_region)
    rng = np.random.default_rng(9)
    cfg = rng.random(unit_region.n_edges) < 0.5
    dcfg = dual_config(dm, cfg)
    assert int(cfg.sum() + dcfg.sum()) == unit_region.n_edges
    assert np.array_equal(dual_config(dm, dcfg), cfg)
    assert not dual_config(dm, all_open(unit_region)).any()
