"""Tanner graphs: construction, girth, collinear layout, wiring bounds, and
a Monte-Carlo message-passing decoder on the BSC."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import codes
from .de_engine import Algorithm, DecoderRule, MessageRule, adaptive_b_schedule

INFINITE_GIRTH = math.inf


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite graph given by the variable lists of each check.

    ``d_v``/``d_c`` are the declared degrees; leave them as None for an
    irregular graph.
    """

    n_vars: int
    checks: tuple[tuple[int, ...], ...]
    d_v: int | None = None
    d_c: int | None = None

    def __post_init__(self):
        checks = tuple(tuple(int(v) for v in row) for row in self.checks)
        object.__setattr__(self, "checks", checks)
        deg = np.zeros(self.n_vars, dtype=int)
        for j, row in enumerate(checks):
            if len(set(row)) != len(row):
                raise ValueError(f"check {j} has parallel edges")
            for v in row:
                if not 0 <= v < self.n_vars:
                    raise ValueError(f"check {j} references variable {v} out of range")
                deg[v] += 1
        if self.d_v is not None and np.any(deg != self.d_v):
            raise ValueError(f"not every variable has degree {self.d_v}")
        if self.d_c is not None and any(len(row) != self.d_c for row in checks):
            raise ValueError(f"not every check has degree {self.d_c}")

    @property
    def n_checks(self) -> int:
        return len(self.checks)

    @property
    def n_edges(self) -> int:
        return sum(len(row) for row in self.checks)

    @property
    def is_regular(self) -> bool:
        return self.d_v is not None and self.d_c is not None

    def var_neighbors(self) -> list[list[int]]:
        out = [[] for _ in range(self.n_vars)]
        for j, row in enumerate(self.checks):
            for v in row:
                out[v].append(j)
        return out

    def edges(self) -> list[tuple[int, int]]:
        """(variable, check) pairs, variable-major then check index."""
        return sorted((v, j) for j, row in enumerate(self.checks) for v in row)

    @classmethod
    def from_parity_check(cls, h, d_v=None, d_c=None) -> TannerGraph:
        h = np.asarray(h)
        rows = [tuple(np.flatnonzero(r)) for r in h]
        return cls(h.shape[1], tuple(rows), d_v, d_c)


def hamming74() -> TannerGraph:
    """Tanner graph of the (7,4) Hamming code."""
    h = [
        [1, 1, 1, 0, 1, 0, 0],
        [1, 1, 0, 1, 0, 1, 0],
        [1, 0, 1, 1, 0, 0, 1],
    ]
    return TannerGraph.from_parity_check(h)


def write_graph(graph: TannerGraph, path) -> None:
    if not graph.is_regular:
        raise ValueError("graph files hold regular graphs only")
    lines = [f"{graph.n_vars} {graph.d_v} {graph.d_c}"]
    lines += [" ".join(str(v) for v in row) for row in graph.checks]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> TannerGraph:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    n, d_v, d_c = (int(x) for x in lines[0].split())
    checks = tuple(tuple(int(x) for x in ln.split()) for ln in lines[1:])
    if len(checks) * d_c != n * d_v:
        raise ValueError(f"{path}: expected {n * d_v // d_c} checks, found {len(checks)}")
    return TannerGraph(n, checks, d_v, d_c)


# --------------------------------------------------------------------------
# girth


def girth(graph: TannerGraph) -> float:
    """Exact shortest-cycle length, or INFINITE_GIRTH for a forest."""
    vnbrs = graph.var_neighbors()
    cnbrs = graph.checks
    nv = graph.n_vars
    best = INFINITE_GIRTH
    # nodes: variables 0..nv-1, checks nv..nv+m-1
    for root in range(nv):
        dist = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            du = dist[u]
            if 2 * du + 1 >= best:
                break
            nbrs = [nv + j for j in vnbrs[u]] if u < nv else list(cnbrs[u - nv])
            for w in nbrs:
                if w == parent[u]:
                    continue
                if w in dist:
                    best = min(best, du + dist[w] + 1)
                else:
                    dist[w] = du + 1
                    parent[w] = u
                    queue.append(w)
    return best


# --------------------------------------------------------------------------
# construction


@dataclass(frozen=True)
class BuildResult:
    graph: TannerGraph
    girth: float
    target_girth: int
    seed: int

    @property
    def best_effort(self) -> bool:
        """True when the target girth was not reached."""
        return self.girth < self.target_girth


def _peg_once(d_v, d_c, n, target_girth, rng) -> TannerGraph | None:
    m = n * d_v // d_c
    check_vars = [[] for _ in range(m)]
    var_checks = [[] for _ in range(n)]
    cdeg = np.zeros(m, dtype=int)
    horizon = target_girth - 3  # checks this close would close a short cycle
    for v in range(n):
        for _ in range(d_v):
            open_checks = cdeg < d_c
            blocked = np.zeros(m, dtype=bool)
            if var_checks[v]:
                # breadth-first over the partial graph, checks at odd depth
                frontier = list(var_checks[v])
                blocked[frontier] = True
                seen_vars = {v}
                depth = 1
                while frontier and depth < horizon:
                    nxt_vars = []
                    for c in frontier:
                        for u in check_vars[c]:
                            if u not in seen_vars:
                                seen_vars.add(u)
                                nxt_vars.append(u)
                    nxt = []
                    for u in nxt_vars:
                        for c in var_checks[u]:
                            if not blocked[c]:
                                blocked[c] = True
                                nxt.append(c)
                    frontier = nxt
                    depth += 2
            cand = np.flatnonzero(open_checks & ~blocked)
            if cand.size == 0:
                # settle for any open check not already attached to v
                cand = np.flatnonzero(open_checks)
                cand = cand[~np.isin(cand, var_checks[v])]
                if cand.size == 0:
                    return None
            low = cand[cdeg[cand] == cdeg[cand].min()]
            c = int(low[rng.integers(low.size)])
            check_vars[c].append(v)
            var_checks[v].append(c)
            cdeg[c] += 1
    return TannerGraph(n, tuple(tuple(sorted(row)) for row in check_vars), d_v, d_c)


def build_regular_tanner(
    d_v: int, d_c: int, n: int, target_girth: int, seed: int = 0, attempts: int = 8
) -> BuildResult:
    """Progressive edge growth for a (d_v, d_c)-regular graph.

    Edges are placed variable by variable on the least-loaded check that
    does not close a cycle shorter than ``target_girth``; ties are broken
    by a generator seeded from ``seed``.  Up to ``attempts`` derived seeds
    are tried and the graph with the largest girth is kept.
    """
    if d_v < 2 or d_c <= d_v:
        raise ValueError(f"need d_c > d_v >= 2, got d_v={d_v}, d_c={d_c}")
    if target_girth < 4 or target_girth % 2:
        raise ValueError("target girth must be an even integer >= 4")
    if (n * d_v) % d_c:
        raise ValueError(f"n * d_v = {n * d_v} is not divisible by d_c = {d_c}")
    lower, _ = codes.blocklength_bounds_from_girth(d_v, d_c, target_girth)
    if n < lower:
        raise ValueError(f"n={n} is below the blocklength bound {lower} for girth {target_girth}")
    best = None
    for k in range(attempts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        graph = _peg_once(d_v, d_c, n, target_girth, rng)
        if graph is None:
            continue
        g = girth(graph)
        if best is None or g > best.girth:
            best = BuildResult(graph, g, target_girth, seed)
        if g >= target_girth:
            break
    if best is None:
        raise RuntimeError(f"could not complete a ({d_v},{d_c}) graph with n={n}")
    return best


# --------------------------------------------------------------------------
# collinear layout


@dataclass(frozen=True)
class CollinearLayout:
    """Nodes on one row, one horizontal track per edge.

    Coordinates are in units of ``lam``.  Every node port is a column of
    width 2 (wire plus spacing); edge t runs along track y = 2(t+1).
    """

    lam: float
    node_x: np.ndarray  # left edge of each node (variables then checks)
    segments: np.ndarray  # (n_edges, 3, 4): vertical, horizontal, vertical
    width_units: float
    height_units: float
    construction_constant: float
    n_vars: int

    @property
    def n_tracks(self) -> int:
        return self.segments.shape[0]

    @property
    def bounding_area(self) -> float:
        return self.width_units * self.height_units * self.lam**2

    @property
    def wire_length_units(self) -> float:
        s = self.segments
        return float(np.abs(s[..., 2] - s[..., 0]).sum() + np.abs(s[..., 3] - s[..., 1]).sum())

    @property
    def wire_area(self) -> float:
        # wires are one unit wide
        return self.wire_length_units * self.lam**2

    @property
    def area_bound(self) -> float:
        return self.construction_constant * self.n_vars**2 * self.lam**2

    def export_segments(self, path) -> None:
        rows = self.segments.reshape(-1, 4)
        lines = ["x1,y1,x2,y2"] + [",".join(f"{x:g}" for x in r) for r in rows]
        Path(path).write_text("\n".join(lines) + "\n")


def collinear_layout(graph: TannerGraph, lam: float = 1.0) -> CollinearLayout:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    edges = graph.edges()
    vnbrs = graph.var_neighbors()
    # port slots: variables (index order) then checks, ports in edge order
    port_x = {}
    node_x = []
    slot = 0
    for v in range(graph.n_vars):
        node_x.append(2 * slot)
        for j in sorted(vnbrs[v]):
            port_x[("v", v, j)] = 2 * slot + 1
            slot += 1
    for j, row in enumerate(graph.checks):
        node_x.append(2 * slot)
        for v in sorted(row):
            port_x[("c", j, v)] = 2 * slot + 1
            slot += 1
    segs = np.zeros((len(edges), 3, 4))
    for t, (v, j) in enumerate(edges):
        xa, xb, y = port_x[("v", v, j)], port_x[("c", j, v)], 2 * (t + 1)
        segs[t, 0] = (xa, 0, xa, y)
        segs[t, 1] = (xa, y, xb, y)
        segs[t, 2] = (xb, y, xb, 0)
    n_edges = len(edges)
    max_dv = max((len(x) for x in vnbrs), default=0)
    return CollinearLayout(
        lam=lam,
        node_x=np.array(node_x, dtype=float),
        segments=segs,
        width_units=2.0 * 2 * n_edges,
        height_units=2.0 * n_edges + 1,
        construction_constant=4.0 * max_dv * (2 * max_dv + 1),
        n_vars=graph.n_vars,
    )


# --------------------------------------------------------------------------
# wiring-area bounds


ORDER_LEVEL = "order-level estimate"


@dataclass(frozen=True)
class WiringBoundReport:
    mode: str
    trivial: float | None = None
    n_iters: int | None = None
    gamma_interval: tuple[float, float] | None = None
    exp_lower: tuple[float, float] | None = None  # lambda^2 e^{gamma N} at both ends
    dense_applicable: bool = False
    dense_exponent: float | None = None
    dense_value: float | None = None
    ell: int | None = None
    k_ell: float | None = None
    k_ell_label: str = ORDER_LEVEL


def gamma_interval(d_v: int, d_c: int) -> tuple[float, float]:
    return math.log((d_v - 1) * (d_c - 1)), 3.0 * math.log(2 * d_v * d_c + 1)


def dense_branch(d_v: int, d_c: int) -> tuple[bool, float]:
    applicable = d_v * d_c >= 4 * (d_v + d_c)
    return applicable, math.log(2.0 * d_v**2 * d_c**2 / (d_v + d_c) ** 2)


def k_ell(ell: int) -> float:
    return 1.0 / (ell**2 * 2.0 ** (2 * ell + 3))


def wiring_area_lower_bounds(d_v: int, d_c: int, value: float, lam: float, mode: str) -> WiringBoundReport:
    """``mode="FromN"``: ``value`` is n.  ``mode="FromIters"``: ``value`` is N_iter."""
    if d_v < 2 or d_c <= d_v:
        raise ValueError(f"need d_c > d_v >= 2, got d_v={d_v}, d_c={d_c}")
    if mode == "FromN":
        return WiringBoundReport(mode=mode, trivial=lam**2 * d_v * value)
    if mode != "FromIters":
        raise ValueError("mode must be FromN or FromIters")
    n_iters = int(value)
    if n_iters < 1:
        raise ValueError("FromIters needs at least one iteration")
    lo, hi = gamma_interval(d_v, d_c)
    ok, dexp = dense_branch(d_v, d_c)
    ell = 2 * n_iters - 1
    return WiringBoundReport(
        mode=mode,
        n_iters=n_iters,
        gamma_interval=(lo, hi),
        exp_lower=(lam**2 * math.exp(lo * n_iters), lam**2 * math.exp(hi * n_iters)),
        dense_applicable=ok,
        dense_exponent=dexp if ok else None,
        dense_value=lam**2 * math.exp(dexp * n_iters) if ok else None,
        ell=ell,
        k_ell=k_ell(ell),
    )


# --------------------------------------------------------------------------
# Monte-Carlo decoding


MC_BLOCK = 1024


class _Wiring:
    def __init__(self, graph: TannerGraph):
        if not graph.is_regular:
            raise ValueError("Monte-Carlo decoding needs a regular graph")
        edges = graph.edges()  # variable-major, so edge e belongs to var e // d_v
        self.n_vars = graph.n_vars
        self.d_v = graph.d_v
        self.n_edges = len(edges)
        self.edge_var = np.array([v for v, _ in edges])
        index = {e: k for k, e in enumerate(edges)}
        self.check_edges = np.array(
            [[index[(v, j)] for v in row] for j, row in enumerate(graph.checks)]
        )
        # position of each edge in the check-major ordering
        self.from_check_order = np.argsort(self.check_edges.ravel())


class _Tables:
    def __init__(self, rule: MessageRule, d_v: int):
        alph = np.array(rule.alphabet)
        idx = {a: k for k, a in enumerate(rule.alphabet)}
        size = len(alph)
        if size * size > 256:
            raise ValueError("alphabet too large for byte-indexed tables")
        self.size = size
        self.values = alph.astype(np.int8)
        op = np.empty((size, size), dtype=np.uint8)
        for a in rule.alphabet:
            for b in rule.alphabet:
                op[idx[a], idx[b]] = idx[rule.cn_op[(a, b)]]
        self.op_flat = op.ravel()
        span = abs(rule.channel_weight) + d_v * rule.max_abs
        self.span = span
        # row 0: received -1, row 1: received +1; column: clipped sum + span
        self.vn_flat = np.array(
            [[idx[rule.vn(y, i)] for i in range(-span, span + 1)] for y in (-1, 1)], dtype=np.uint8
        ).ravel()
        self.init = {y: idx[rule.init[y]] for y in (1, -1)}
        self.weight = rule.channel_weight
        self.neg = alph < 0


# message arrays are edge-major, shape (E, B), so graph gathers move whole rows


def _check_update(v2c, wiring, tab):
    m, d_c = wiring.check_edges.shape
    msgs = v2c.take(wiring.check_edges.ravel(), axis=0).reshape(m, d_c, -1)
    op, size = tab.op_flat, np.uint8(tab.size)

    def fold(a, b):
        return op.take(a * size + b)

    prefix = [msgs[:, 0]]
    for k in range(1, d_c - 1):
        prefix.append(fold(prefix[-1], msgs[:, k]))
    suffix = [msgs[:, d_c - 1]]
    for k in range(d_c - 2, 0, -1):
        suffix.append(fold(suffix[-1], msgs[:, k]))
    suffix = suffix[::-1]  # suffix[k - 1] folds positions k..d_c-1
    out = np.empty_like(msgs)
    out[:, 0] = suffix[0]
    for k in range(1, d_c - 1):
        out[:, k] = fold(prefix[k - 1], suffix[k])
    out[:, d_c - 1] = prefix[d_c - 2]
    return out.reshape(m * d_c, -1).take(wiring.from_check_order, axis=0)


def _variable_update(c2v, pos_edge, wiring, tab):
    vals = tab.values.take(c2v).astype(np.int16)  # (E, B)
    d_v = wiring.d_v
    per_var = vals.reshape(wiring.n_vars, d_v, -1).sum(axis=1, dtype=np.int16)
    channel = np.where(pos_edge, tab.weight + tab.span, tab.span - tab.weight).astype(np.int16)
    total = np.repeat(per_var, d_v, axis=0) - vals + channel
    np.clip(total, 0, 2 * tab.span, out=total)
    # vn_flat holds the received -1 row first, then the +1 row
    total += pos_edge * np.int16(2 * tab.span + 1)
    return tab.vn_flat.take(total)


def _simulate_block(wiring, tables_per_iter, p0, iters, size, rng):
    flips = rng.random((size, wiring.n_vars)) < p0
    pos_edge = np.repeat(~flips.T, wiring.d_v, axis=0)  # (E, B), bit arrived intact
    tab0 = tables_per_iter[0]
    v2c = np.where(pos_edge, tab0.init[1], tab0.init[-1]).astype(np.uint8)
    for t in range(iters):
        tab = tables_per_iter[t]
        c2v = _check_update(v2c, wiring, tab)
        v2c = _variable_update(c2v, pos_edge, wiring, tab)
    # per-trial fraction of wrong variable-to-check messages
    return tables_per_iter[-1].neg.take(v2c).mean(axis=0)


def mc_decode_bsc(
    graph: TannerGraph,
    rule: DecoderRule,
    p0: float,
    iters: int,
    trials: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo message error rate after ``iters`` flooding iterations.

    The all-zero codeword goes through a BSC(p0); the estimate is the mean,
    over trials, of the fraction of wrong variable-to-check messages (the
    quantity density evolution tracks).  Returns (estimate, 95% half-width).
    Trials are simulated in fixed blocks whose generators are derived from
    (seed, block index), so the result does not depend on scheduling.
    """
    if iters < 0 or trials < 1:
        raise ValueError("need iters >= 0 and trials >= 1")
    if not 0 <= p0 <= 0.5:
        raise ValueError("p0 must lie in [0, 0.5]")
    d_v = graph.d_v
    wiring = _Wiring(graph)
    if rule.algorithm is Algorithm.GALLAGER_B and rule.b_threshold is None:
        schedule = adaptive_b_schedule(p0, d_v, graph.d_c, iters) or [d_v - 1]
        tables = [_Tables(MessageRule.gallager(d_v, b), d_v) for b in schedule]
    else:
        tables = [_Tables(rule.message_rule(d_v), d_v)] * max(iters, 1)
    sums = 0.0
    sq = 0.0
    for block, start in enumerate(range(0, trials, MC_BLOCK)):
        size = min(MC_BLOCK, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
        frac = _simulate_block(wiring, tables, p0, iters, size, rng)
        sums += frac.sum()
        sq += (frac**2).sum()
    mean = sums / trials
    var = max(sq / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return float(mean), float(1.96 * math.sqrt(var / trials))
