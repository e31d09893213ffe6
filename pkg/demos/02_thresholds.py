"""Density evolution: thresholds, iteration counts and a Monte-Carlo cross-check.

Run:  python demos/02_thresholds.py
"""
import math

import numpy as np

from totalpower import de_engine as de
from totalpower import graphlab as gl
from totalpower.checks import _graph

RULES = {"A": de.DecoderRule.gallager_a(), "B": de.DecoderRule.gallager_b(), "T": de.DecoderRule.from_label("T")}


def main():
    print("BSC thresholds")
    for d_v, d_c in [(3, 6), (4, 8), (5, 10)]:
        row = "  ".join(f"{k} {de.threshold(r, d_v, d_c):.4f}" for k, r in RULES.items())
        print(f"  ({d_v},{d_c})  {row}")

    print("\niterations to reach pe from p0 = 0.02 on (3,6) Gallager A")
    for pe in (1e-6, 1e-9, 1e-12, 1e-24):
        n = de.min_iterations(RULES["A"], 0.02, pe, 3, 6)
        print(f"  pe {pe:.0e}: {n:3d} iterations  (N / ln(1/pe) = {n / math.log(1 / pe):.3f})")

    print("\nGallager B on (4,8), p0 = 0.01: doubly exponential decay")
    for pe in (1e-8, 1e-16, 1e-32, 1e-64, 1e-128):
        n = de.min_iterations(RULES["B"], 0.01, pe, 4, 8)
        print(f"  pe {pe:.0e}: {n} iterations")

    graph = _graph("peg_3_6_g10.txt")
    print(f"\nMonte-Carlo on a girth-10 graph (n = {graph.n_vars}), two iterations")
    for alg, p0 in (("A", 0.03), ("T", 0.05)):
        pred = float(np.exp(de.log_error_after(RULES[alg], p0, 3, 6, 2)[0]))
        mean, half = gl.mc_decode_bsc(graph, RULES[alg], p0, 2, 20_000, seed=1)
        print(f"  {alg} p0={p0}: DE {pred:.5f}   MC {mean:.5f} +- {half:.5f}")


if __name__ == "__main__":
    main()
