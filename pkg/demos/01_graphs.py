"""Build Tanner graphs, measure their girth and lay them out on a line.

Run:  python demos/01_graphs.py
"""
from totalpower import codes
from totalpower import graphlab as gl


def main():
    print("PEG construction, growing n from the girth bound until the target girth is reached")
    for d_v, d_c, girth in [(3, 6, 6), (3, 6, 8), (4, 8, 6)]:
        lower, _ = codes.blocklength_bounds_from_girth(d_v, d_c, girth)
        n = lower
        # grow n until a multiple of d_c works and PEG reaches the girth
        while True:
            n += (-n) % d_c
            res = gl.build_regular_tanner(d_v, d_c, n, girth, seed=7, attempts=3)
            if not res.best_effort:
                break
            n += d_c
        lay = gl.collinear_layout(res.graph, 1.0)
        print(
            f"  ({d_v},{d_c}) girth {girth}: bound n >= {lower}, built n = {n}, "
            f"measured girth {res.girth}, tracks {lay.n_tracks}, "
            f"wire area {lay.wire_area:.0f} (>= {d_v * n}), bounding area {lay.bounding_area:.0f}"
        )

    print("\nthe hard-coded Hamming(7,4) graph has girth", gl.girth(gl.hamming74()))
    lo, hi = gl.gamma_interval(3, 6)
    print(f"(3,6) growth exponent interval: [{lo:.3f}, {hi:.3f}]")


if __name__ == "__main__":
    main()
