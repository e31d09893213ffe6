"""Named verification suites shared by the command line and the test-suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import channel as ch
from . import de_engine as de
from . import graphlab as gl
from . import optimizer as op

# probe settings (normalized units); see the README for the rationale
ITER_A_P0 = 0.02
ITER_B_P0 = 0.01
LADDER_A = (1e-6, 1e-8, 1e-10, 1e-12)
LADDER_B = (1e-8, 1e-16, 1e-32, 1e-64)
NODE_XI = 1.0
WIRE_SCALE = 1e-3  # xi_wire * lambda^2
ETA = 1.0
FIXED_P_T = 5.0


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def qbounds() -> list[Check]:
    xs = np.linspace(0.05, 12.0, 200)
    ok = True
    worst = 0.0
    for x in xs:
        lo, hi = ch.q_sandwich(float(x))
        q = ch.q_function(float(x))
        ok &= lo <= q <= hi
        worst = max(worst, (hi - lo) / q)
    q2 = ch.q_function(2.0)
    return [
        Check("q-sandwich-grid", bool(ok), f"200 points in [0.05, 12], widest gap {worst:.3g} of Q"),
        Check("q-at-2", abs(q2 - 0.0227501) <= 1e-6, f"Q(2) = {q2:.7f}"),
    ]


def lambert() -> list[Check]:
    xs = np.geomspace(1e-6, 1e6, 100)
    rel = max(abs(w * math.exp(w) - x) / x for x in xs for w in [op.lambert_w0(float(x))])
    sandwich = all(
        lo <= op.lambert_w0(float(x)) <= hi for x in xs if x >= math.e for lo, hi in [op.lambert_sandwich(float(x))]
    )
    out = [
        Check("lambert-roundtrip", rel <= 1e-12, f"max relative error {rel:.2e}"),
        Check("lambert-sandwich", sandwich, "ln x - ln ln x <= W0(x) <= ln x - ln ln x / 2 for grid x >= e"),
    ]
    gamma, eta = math.log(10), 1.0
    worst = 0.0
    for pe in (1e-6, 1e-12, 1e-30):
        closed = op.asymptotic_pt_star_gallager_a(gamma, eta, pe)
        grid = np.linspace(0.2 * closed, 5 * closed, 200_001)
        best = grid[np.argmin(op.lambert_objective(grid, gamma, eta, pe))]
        worst = max(worst, abs(best - closed) / closed)
    out.append(Check("lambert-closed-form", worst <= 1e-3, f"grid minimizer within {worst:.2e} relative"))
    return out


def _graph(name):
    ref = resources.files("totalpower") / "data" / "graphs" / name
    with resources.as_file(ref) as path:
        return gl.read_graph(path)


DE_MC_CASES = (
    ("peg_3_6_g6.txt", "A", 0.03, 1),
    ("peg_3_6_g8.txt", "A", 0.05, 1),
    ("peg_3_6_g8.txt", "B", 0.02, 1),
    ("peg_4_8_g6.txt", "B", 0.04, 1),
    ("peg_4_8_g6.txt", "A", 0.06, 1),
    ("peg_3_6_g8.txt", "T", 0.04, 1),
    ("peg_3_6_g10.txt", "A", 0.03, 2),
    ("peg_3_6_g10.txt", "T", 0.05, 2),
)


def de_mc(trials: int = 20_000, seed: int = 0, cases=DE_MC_CASES) -> list[Check]:
    out = []
    for k, (fname, alg, p0, iters) in enumerate(cases):
        graph = _graph(fname)
        rule = de.DecoderRule.from_label(alg)
        predicted = float(np.exp(de.log_error_after(rule, p0, graph.d_v, graph.d_c, iters)[0]))
        # distinct streams per case, so channel draws are not shared
        mean, half = gl.mc_decode_bsc(graph, rule, p0, iters, trials, seed * 1000 + k)
        sigma = half / 1.96
        z = abs(mean - predicted) / sigma if sigma > 0 else math.inf
        out.append(
            Check(
                f"de-mc {fname} {alg} p0={p0} t={iters}",
                z <= 3.0,
                f"DE {predicted:.6f}  MC {mean:.6f} +- {sigma:.2e}  |z| = {z:.2f}",
            )
        )
    return out


def iteration_ratios_a(p0=ITER_A_P0, ladder=LADDER_A):
    rule = de.DecoderRule.gallager_a()
    iters = [de.min_iterations(rule, p0, pe, 3, 6) for pe in ladder]
    return [n / math.log(1 / pe) for n, pe in zip(iters, ladder)], iters


def iteration_ratios_b(p0=ITER_B_P0, ladder=LADDER_B):
    rule = de.DecoderRule.gallager_b()
    iters = [de.min_iterations(rule, p0, pe, 4, 8) for pe in ladder]
    return [n / math.log(math.log(1 / pe)) for n, pe in zip(iters, ladder)], iters


def node_probes(xi=NODE_XI, eta=ETA):
    a = op.scaling_probe(
        lambda pe: op.node_model_total("A", xi, eta, pe, d_v=3, d_c=6).p_total,
        LADDER_A,
        lambda pe: math.sqrt(math.log(1 / pe)),
    )
    b = op.scaling_probe(
        lambda pe: op.node_model_total("B", xi, eta, pe, d_v=4, d_c=8).p_total,
        LADDER_B,
        lambda pe: math.log(math.log(1 / pe)),
    )
    return a, b


def scaling_node() -> list[Check]:
    r2, n2 = iteration_ratios_a()
    r3, n3 = iteration_ratios_b()
    a, b = node_probes()
    s2, s3 = op.ratio_spread(r2), op.ratio_spread(r3)
    return [
        Check("iterations-A fixed p0", s2 < 0.10, f"N = {n2}, ratio spread {s2:.3f} (< 0.10)"),
        Check("iterations-B (4,8) fixed p0", s3 < 0.25, f"N = {n3}, ratio spread {s3:.3f} (< 0.25)"),
        Check("node total A vs sqrt ln", a.spread < 0.15, f"spread {a.spread:.3f} (< 0.15)"),
        Check("node total B vs ln ln", b.spread < 0.25, f"spread {b.spread:.3f} (< 0.25)"),
    ]


def wire_probe_a(scale=WIRE_SCALE, eta=ETA, d_v=3, d_c=6, ladder=LADDER_A):
    return op.scaling_probe(
        lambda pe: op.wire_model_total("A", d_v, d_c, scale, 1.0, eta, pe).lower.p_total,
        ladder,
        lambda pe: math.log(1 / pe) / math.log(math.log(1 / pe)),
    )


def fixed_pt_wire_slope(p_t=FIXED_P_T, scale=WIRE_SCALE, eta=ETA, ladder=LADDER_A):
    totals = [op.wire_model_total("A", 3, 6, scale, 1.0, eta, pe, p_t=p_t).lower.p_total for pe in ladder]
    return op.log_slope(np.log(1 / np.array(ladder)), np.log(totals)), totals


def tree_exponent(d_v, d_c):
    return 1.0 / (1.0 + 2.0 / (1.0 + math.log(d_c - 1) / math.log(d_v - 1)))


def scaling_wire() -> list[Check]:
    a = wire_probe_a()
    slope, totals = fixed_pt_wire_slope()
    out = [
        Check("wire total A x lnln/ln", a.spread < 0.25, f"spread {a.spread:.3f} (< 0.25)"),
        Check("wire total A fixed P_T", slope > 0, f"log-log slope in 1/pe {slope:.3f} (> 0)"),
    ]
    for d_v, d_c in ((3, 6), (5, 10)):
        rep = op.scaling_probe(
            lambda pe: op.wire_model_total("A", d_v, d_c, WIRE_SCALE, 1.0, ETA, pe).lower.p_total,
            LADDER_A,
            lambda pe: math.log(1 / pe),
        )
        floor = tree_exponent(d_v, d_c) - 0.02
        out.append(
            Check(f"wire exponent ({d_v},{d_c})", rep.exponent >= floor, f"{rep.exponent:.3f} >= {floor:.3f}")
        )
    return out


SUITES = {
    "qbounds": qbounds,
    "de-mc": de_mc,
    "scaling-node": scaling_node,
    "scaling-wire": scaling_wire,
    "lambert": lambert,
}
