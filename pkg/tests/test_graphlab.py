import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from totalpower import codes, de_engine as de, graphlab as gl
from totalpower.checks import _graph


def girth_by_cycle_search(graph):
    """Brute-force oracle: shortest cycle via repeated edge removal + BFS."""
    nv = graph.n_vars
    adj = {}
    for j, row in enumerate(graph.checks):
        for v in row:
            adj.setdefault(v, set()).add(nv + j)
            adj.setdefault(nv + j, set()).add(v)
    best = math.inf
    for a in list(adj):
        for b in adj[a]:
            if a > b:
                continue
            # shortest a-b path avoiding the edge (a, b), plus the edge itself
            dist = {a: 0}
            frontier = [a]
            while frontier and b not in dist:
                nxt = []
                for u in frontier:
                    for w in adj[u]:
                        if (u, w) in ((a, b), (b, a)) or w in dist:
                            continue
                        dist[w] = dist[u] + 1
                        nxt.append(w)
                frontier = nxt
            if b in dist:
                best = min(best, dist[b] + 1)
    return best


def ring(n):
    return gl.TannerGraph(n, tuple((j, (j + 1) % n) for j in range(n)), 2, 2)


# --- graphs and girth ---------------------------------------------------


def test_girth_complete_bipartite():
    k33 = gl.TannerGraph(3, ((0, 1, 2),) * 3, 3, 3)
    assert gl.girth(k33) == 4


def test_girth_hamming():
    assert gl.girth(gl.hamming74()) == 4


@pytest.mark.parametrize("n", [3, 5, 8])
def test_girth_ring(n):
    assert gl.girth(ring(n)) == 2 * n


def test_girth_forest():
    tree = gl.TannerGraph(4, ((0, 1), (1, 2), (2, 3)))
    assert gl.girth(tree) == gl.INFINITE_GIRTH


def test_graph_validation():
    with pytest.raises(ValueError):
        gl.TannerGraph(3, ((0, 0, 1),))
    with pytest.raises(ValueError):
        gl.TannerGraph(3, ((0, 5),))
    with pytest.raises(ValueError):
        gl.TannerGraph(4, ((0, 1), (2, 3)), d_v=2)


@pytest.mark.parametrize("name", ["peg_3_6_g6.txt", "peg_3_4_g8.txt", "peg_4_6_g6.txt"])
def test_girth_matches_brute_force(name):
    graph = _graph(name)
    assert gl.girth(graph) == girth_by_cycle_search(graph)


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_girth_matches_brute_force_random(seed):
    res = gl.build_regular_tanner(2, 4, 20, 4, seed=seed, attempts=1)
    assert gl.girth(res.graph) == girth_by_cycle_search(res.graph)


# --- construction -------------------------------------------------------


def test_build_reaches_girth():
    res = gl.build_regular_tanner(3, 6, 40, 6, seed=7, attempts=6)
    assert not res.best_effort
    assert gl.girth(res.graph) >= 6
    g = res.graph
    assert g.n_checks == 20 and g.d_v == 3 and g.d_c == 6


def test_build_impossible_target_is_best_effort():
    # 6 checks of degree 6 need 90 distinct variable pairs; only 66 exist
    res = gl.build_regular_tanner(3, 6, 12, 6, seed=1)
    assert res.best_effort
    assert res.girth == gl.girth(res.graph) == 4


def test_build_rejects_below_bound():
    with pytest.raises(ValueError, match="bound"):
        gl.build_regular_tanner(3, 6, 8, 8)


def test_build_rejects_divisibility():
    with pytest.raises(ValueError):
        gl.build_regular_tanner(3, 6, 41, 6)


def test_build_is_deterministic():
    a = gl.build_regular_tanner(3, 6, 100, 6, seed=3).graph
    b = gl.build_regular_tanner(3, 6, 100, 6, seed=3).graph
    assert a.edges() == b.edges()


@given(st.sampled_from([(2, 4), (3, 6), (4, 8), (3, 4)]), st.integers(0, 50))
@settings(max_examples=20, deadline=None)
def test_built_graphs_are_regular_and_bounded(deg, seed):
    dv, dc = deg
    n = 4 * dc
    res = gl.build_regular_tanner(dv, dc, n, 4, seed=seed, attempts=1)
    g = res.graph
    assert all(len(r) == dc for r in g.checks)
    assert all(len(x) == dv for x in g.var_neighbors())
    measured = gl.girth(g)
    if measured != gl.INFINITE_GIRTH:
        assert n >= codes.blocklength_bounds_from_girth(dv, dc, int(measured))[0]


def test_graph_file_roundtrip(tmp_path):
    g = _graph("peg_3_6_g8.txt")
    path = tmp_path / "g.txt"
    gl.write_graph(g, path)
    assert gl.read_graph(path) == g
    bad = tmp_path / "bad.txt"
    bad.write_text("12 3 6\n0 1 2 3 4 5\n")
    with pytest.raises(ValueError):
        gl.read_graph(bad)


# --- layout -------------------------------------------------------------


def test_hamming_layout_structure():
    lay = gl.collinear_layout(gl.hamming74())
    assert len(lay.node_x) == 10
    assert lay.n_tracks == 12
    assert lay.height_units == 2 * 12 + 1


def layout_oracle(graph):
    """Wire length recomputed from port positions, independently of segments."""
    ports = []
    for v, nb in enumerate(graph.var_neighbors()):
        ports += [("v", v, j) for j in sorted(nb)]
    for j, row in enumerate(graph.checks):
        ports += [("c", j, v) for v in sorted(row)]
    x = {p: 2 * k + 1 for k, p in enumerate(ports)}
    total = 0.0
    for t, (v, j) in enumerate(graph.edges()):
        y = 2 * (t + 1)
        total += 2 * y + abs(x[("c", j, v)] - x[("v", v, j)])
    return total


@pytest.mark.parametrize("name", ["peg_3_6_g6.txt", "peg_4_8_g6.txt", "peg_3_6_g8.txt"])
def test_layout_wire_area(name):
    g = _graph(name)
    lay = gl.collinear_layout(g, lam=1.0)
    assert lay.wire_length_units == pytest.approx(layout_oracle(g))
    assert lay.wire_area >= g.d_v * g.n_vars
    assert lay.bounding_area <= lay.area_bound


def test_layout_scaling():
    g = _graph("peg_3_6_g6.txt")
    a, b = gl.collinear_layout(g, 1.0), gl.collinear_layout(g, 2.0)
    assert b.wire_area == pytest.approx(4 * a.wire_area)
    assert b.bounding_area == pytest.approx(4 * a.bounding_area)


def test_layout_export(tmp_path):
    lay = gl.collinear_layout(gl.hamming74())
    out = tmp_path / "seg.csv"
    lay.export_segments(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,y1,x2,y2"
    assert len(lines) == 1 + 3 * 12


def test_layout_rejects_lambda():
    with pytest.raises(ValueError):
        gl.collinear_layout(gl.hamming74(), 0.0)


# --- wiring bounds ------------------------------------------------------


def test_bounds_from_n():
    assert gl.wiring_area_lower_bounds(3, 6, 100, 1.0, "FromN").trivial == 300


def test_dense_branch():
    rep = gl.wiring_area_lower_bounds(5, 20, 3, 1.0, "FromIters")
    assert rep.dense_applicable
    assert rep.dense_exponent == pytest.approx(math.log(32))
    rep = gl.wiring_area_lower_bounds(3, 6, 3, 1.0, "FromIters")
    assert not rep.dense_applicable and rep.dense_exponent is None


def test_iters_report():
    rep = gl.wiring_area_lower_bounds(3, 6, 4, 2.0, "FromIters")
    lo, hi = rep.gamma_interval
    assert lo == pytest.approx(math.log(10))
    assert hi == pytest.approx(3 * math.log(37))
    assert rep.exp_lower[0] == pytest.approx(4 * math.exp(4 * lo))
    assert rep.ell == 7
    assert rep.k_ell == pytest.approx(1 / (49 * 2**17))
    assert rep.k_ell_label == gl.ORDER_LEVEL


def test_bounds_validation():
    with pytest.raises(ValueError):
        gl.wiring_area_lower_bounds(3, 6, 0, 1.0, "FromIters")
    with pytest.raises(ValueError):
        gl.wiring_area_lower_bounds(3, 6, 10, 1.0, "Other")


# --- Monte-Carlo decoder ------------------------------------------------


def test_mc_clean_channel():
    g = _graph("peg_3_6_g6.txt")
    mean, half = gl.mc_decode_bsc(g, de.DecoderRule.gallager_a(), 0.0, 1, 500)
    assert mean == 0.0 and half == 0.0


def test_mc_zero_iterations():
    g = _graph("peg_3_6_g6.txt")
    mean, half = gl.mc_decode_bsc(g, de.DecoderRule.gallager_a(), 0.07, 0, 4000, seed=2)
    assert abs(mean - 0.07) <= half


def test_mc_matches_de_girth8():
    g = _graph("peg_3_6_g8.txt")
    rule = de.DecoderRule.gallager_a()
    want = math.exp(de.log_error_after(rule, 0.05, 3, 6, 1)[0])
    mean, half = gl.mc_decode_bsc(g, rule, 0.05, codes.max_indep_iters(8), 20_000, seed=11)
    assert abs(mean - want) <= 3 * half


def test_mc_deterministic():
    g = _graph("peg_3_6_g6.txt")
    rule = de.DecoderRule.from_label("T")
    a = gl.mc_decode_bsc(g, rule, 0.05, 1, 3000, seed=4)
    b = gl.mc_decode_bsc(g, rule, 0.05, 1, 3000, seed=4)
    assert a == b


def test_mc_blocks_are_schedule_free():
    # a run is the concatenation of its fixed blocks, so a longer run
    # reuses the shorter run's blocks unchanged
    g = _graph("peg_3_6_g6.txt")
    rule = de.DecoderRule.gallager_a()
    short, _ = gl.mc_decode_bsc(g, rule, 0.05, 1, gl.MC_BLOCK, seed=9)
    long, _ = gl.mc_decode_bsc(g, rule, 0.05, 1, 2 * gl.MC_BLOCK, seed=9)
    second, _ = _second_block(g, rule)
    assert long == pytest.approx((short + second) / 2, rel=1e-12)


def _second_block(g, rule):
    wiring = gl._Wiring(g)
    tables = [gl._Tables(rule.message_rule(3), 3)]
    rng = np.random.default_rng(np.random.SeedSequence([9, 1]))
    frac = gl._simulate_block(wiring, tables, 0.05, 1, gl.MC_BLOCK, rng)
    return frac.mean(), None


def test_mc_validation():
    g = _graph("peg_3_6_g6.txt")
    with pytest.raises(ValueError):
        gl.mc_decode_bsc(g, de.DecoderRule.gallager_a(), 0.7, 1, 10)
    with pytest.raises(ValueError):
        gl.mc_decode_bsc(g, de.DecoderRule.gallager_a(), 0.1, -1, 10)
