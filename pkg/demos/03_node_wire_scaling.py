"""How total power scales with the target error probability.

Compares uncoded transmission, the node-count decoding model and the
wiring-area model in normalized units (eta = 1).

Run:  python demos/03_node_wire_scaling.py
"""
import math

from totalpower import channel as ch
from totalpower import optimizer as op


def main():
    chan = ch.ChannelSpec.abstract(1.0)
    print(f"{'pe':>8} {'uncoded':>9} {'node A':>9} {'node B':>9} {'wire A':>9} {'wire A N':>9}")
    for k in (6, 9, 12, 18, 24):
        pe = 10.0 ** -k
        unc = op.uncoded_power(op.OperatingPoint(1.0, pe, chan, 1e9)).p_total
        node_a = op.node_model_total("A", 1.0, 1.0, pe)
        node_b = op.node_model_total("B", 1.0, 1.0, pe, d_v=4, d_c=8)
        wire = op.wire_model_total("A", 3, 6, 1e-3, 1.0, 1.0, pe).lower
        print(
            f"{pe:8.0e} {unc:9.3f} {node_a.p_total:9.3f} {node_b.p_total:9.3f} "
            f"{wire.p_total:9.3f} {wire.n_iter:9d}"
        )

    print("\nclosed-form transmit power for the exponential-area wire model")
    for k in (6, 12, 30, 60):
        pe = 10.0 ** -k
        p = op.asymptotic_pt_star_gallager_a(math.log(10), 1.0, pe)
        print(f"  pe 1e-{k}: P_T* = {p:.3f}")


if __name__ == "__main__":
    main()
