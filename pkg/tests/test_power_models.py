import csv
import math
from importlib import resources

import pytest
from hypothesis import given
from hypothesis import strategies as st

from totalpower import graphlab as gl
from totalpower import power_models as pm
from totalpower.checks import _graph

PROC = pm.ProcessParams()


def raw_sample_rows():
    """The shipped sample table read as plain dictionaries (the oracle's view)."""
    ref = resources.files("totalpower") / "data" / "node_characterization_sample.csv"
    with resources.as_file(ref) as path, open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = {}
    for row in csv.DictReader(lines):
        out[(row["algorithm"], row["node_kind"], int(row["degree"]))] = {
            k: float(row[k]) for k in ("delay_s", "power_w", "area_m2")
        }
    return out


RAW = raw_sample_rows()


def spreadsheet(a, g, dv, dc, n, mode="best", bits=None):
    """Recompose area, clock, power and throughput step by step from raw numbers."""
    vn, cn = RAW[(a, "vn", dv)], RAW[(a, "cn", dc)]
    area = n * vn["area_m2"] + n * dv / dc * cn["area_m2"]
    length = area**0.25 if mode == "best" else math.sqrt(area) / 3
    wire_delay = 0.1 * 2e-10 * length**2 / (2 * 1e-7)
    t_clk = vn["delay_s"] + 2 * wire_delay + cn["delay_s"]
    p_wire = 0.5 * 2e-10 * length * 0.78**2 / t_clk
    bits = bits or {"A": 1, "B": 1, "T": 2}[a]
    power = n * (
        vn["power_w"] * vn["delay_s"] / t_clk
        + dv * cn["power_w"] * cn["delay_s"] / t_clk / dc
        + 2 * dv * bits * p_wire
    )
    thr = n * (1 - dv / dc) / (((g - 2) // 4) * t_clk)
    return area, t_clk, power, thr


# --- abstract models ----------------------------------------------------


def test_node_model():
    p = pm.NodeModelParams(e_node=2e-12, r_data=1e9, d_v=3, d_c=6)
    assert p.xi_node == pytest.approx(3 * 2e-12 * 1e9)
    assert pm.node_model_power(p, 0) == 0
    assert pm.node_model_power(p, 10) == pytest.approx(2 * pm.node_model_power(p, 5))
    with pytest.raises(ValueError):
        pm.node_model_power(p, -1)
    with pytest.raises(ValueError):
        pm.NodeModelParams(e_node=0, r_data=1e9, d_v=3, d_c=6)


@given(st.floats(1e-15, 1e-9), st.floats(1e6, 1e11), st.integers(2, 6), st.integers(1, 7))
def test_node_model_xi_recomputes(e, r, dv, extra):
    p = pm.NodeModelParams(e, r, dv, dv + extra)
    assert p.xi_node == e * (dv + dv + extra) / extra * r
    assert p.xi_node > 0


def test_wire_model():
    p = pm.WireModelParams(1e-4, 0.8, 1e9)
    assert p.xi_wire == pytest.approx(1e-4 * 0.64 * 1e9)
    assert pm.wire_model_power(p, 0) == 0
    q = pm.WireModelParams(1e-4, 1.6, 1e9)
    assert pm.wire_model_power(q, 1e-6) == pytest.approx(4 * pm.wire_model_power(p, 1e-6))


def test_wire_model_over_layout_bound():
    g = _graph("peg_3_6_g6.txt")
    lam = 1e-7
    lay = gl.collinear_layout(g, lam)
    p = pm.WireModelParams(1e-4, 0.8, 1e9)
    assert pm.wire_model_power(p, lay.wire_area) >= p.xi_wire * lam**2 * g.d_v * g.n_vars


# --- wire length and delay ----------------------------------------------


def test_wire_length_examples():
    assert pm.wire_length_estimate(1.0, "best") == 1.0
    assert pm.wire_length_estimate(1.0, "worst") == pytest.approx(1 / 3)
    assert pm.wire_length_estimate(1e-6, "bestcase") == pytest.approx(0.0316, rel=1e-3)
    assert pm.wire_length_estimate(1e-6, pm.WireMode.WORST) == pytest.approx(3.33e-4, abs=1e-6)
    a = 3e-7
    assert pm.wire_length_estimate(16 * a, "worst") == pytest.approx(4 * pm.wire_length_estimate(a, "worst"))
    assert pm.wire_length_estimate(16 * a, "best") == pytest.approx(2 * pm.wire_length_estimate(a, "best"))


def test_elmore_examples():
    assert pm.elmore_delay(0.0, PROC) == 0.0
    assert pm.elmore_delay(2e-4, PROC) == pytest.approx(4 * pm.elmore_delay(1e-4, PROC))
    # r_sq * c_unit * l^2 / (2 w) with (0.1, 2e-10, 1e-4, 1e-7)
    assert pm.elmore_delay(1e-4, PROC) == pytest.approx(1e-12, rel=1e-12)


def test_process_defaults():
    assert PROC.v_supply == 0.78 and PROC.activity_factor == 0.5
    with pytest.raises(ValueError):
        pm.ProcessParams(r_sq=-1)


# --- characterization tables --------------------------------------------


def test_sample_tables_cover_design_space():
    tab = pm.sample_characterization()
    assert tab.provenance == "sample"
    assert tab.missing() == []
    assert set(tab.algorithms) == {"A", "B", "T"}


def test_missing_entry_is_lookup_error():
    tab = pm.sample_characterization()
    with pytest.raises(pm.MissingEntryError):
        tab.t_vn("A", 9)


def write_char(tmp_path, rows):
    path = tmp_path / "c.csv"
    path.write_text("\n".join([",".join(pm.CHARACTERIZATION_COLUMNS), *rows]) + "\n")
    return path


def test_loader_rejections(tmp_path):
    with pytest.raises(pm.CharacterizationError, match="mixed"):
        pm.load_characterization(
            write_char(tmp_path, ["A,vn,3,1e-10,1e-5,1e-10,sample", "A,cn,6,1e-10,1e-5,1e-10,measured"]),
            require_full=False,
        )
    with pytest.raises(pm.CharacterizationError, match="row"):
        pm.load_characterization(write_char(tmp_path, ["A,vn,3,-1e-10,1e-5,1e-10,sample"]), require_full=False)
    with pytest.raises(pm.CharacterizationError, match="missing"):
        pm.load_characterization(write_char(tmp_path, ["A,vn,3,1e-10,1e-5,1e-10,sample"]))
    partial = pm.load_characterization(
        write_char(tmp_path, ["A,vn,3,1e-10,1e-5,1e-10,measured"]), require_full=False
    )
    assert partial.provenance == "measured"


# --- physical composition -----------------------------------------------


def test_area_recomposition():
    tab = pm.sample_characterization()
    got = pm.decoder_area_estimate(100, 3, 6, tab)
    assert got == pytest.approx(spreadsheet("A", 8, 3, 6, 100)[0], rel=1e-15)
    assert pm.decoder_area_estimate(200, 3, 6, tab) == pytest.approx(2 * got)


def test_area_zero_nodes():
    tab = pm.NodeCharacterization({("A", "vn", 3): pm.NodeEntry(1, 1, 0.0), ("A", "cn", 6): pm.NodeEntry(1, 1, 0.0)})
    assert pm.decoder_area_estimate(100, 3, 6, tab) == 0.0


def test_clock_zero_wire():
    tab = pm.sample_characterization()
    assert pm.clock_period("A", 8, 3, 6, tab, PROC, 0.0) == tab.t_vn("A", 3) + tab.t_cn("A", 6)


@pytest.mark.parametrize("mode", ["best", "worst"])
@pytest.mark.parametrize("a,g,dv,dc,n", [("A", 8, 3, 6, 268), ("B", 6, 4, 8, 112), ("T", 10, 3, 6, 2130)])
def test_physical_recomposition(mode, a, g, dv, dc, n):
    tab = pm.sample_characterization()
    area, t_clk, power, thr = spreadsheet(a, g, dv, dc, n, mode)
    model = pm.PhysicalModel(tab, PROC, pm.WireMode.parse(mode))
    est = model.evaluate(a, g, dv, dc, n, 7e9)
    assert est.area == pytest.approx(area, rel=1e-15)
    assert est.t_clk == pytest.approx(t_clk, rel=1e-15)
    assert est.p_dec == pytest.approx(power, rel=1e-12)
    assert est.r_dec == pytest.approx(thr, rel=1e-12)


def test_clock_increases_with_area():
    tab = pm.sample_characterization()
    periods = [pm.clock_period("A", 8, 3, 6, tab, PROC, a) for a in (1e-9, 1e-7, 1e-5, 1e-3)]
    assert all(x < y for x, y in zip(periods, periods[1:]))


def test_clock_crossover_at_81():
    tab = pm.sample_characterization()

    def period(area, mode):
        return pm.clock_period("A", 8, 3, 6, tab, PROC, area, mode)

    assert period(81.0, "best") == pytest.approx(period(81.0, "worst"), rel=1e-12)
    assert period(200.0, "best") <= period(200.0, "worst")
    assert period(10.0, "best") > period(10.0, "worst")


def test_two_bit_doubles_wire_term():
    tab = pm.sample_characterization()
    area = pm.decoder_area_estimate(268, 3, 6, tab, "A")
    one = pm.decoder_power("A", 8, 3, 6, 268, tab, PROC, area)
    _, t_clk, _, _ = spreadsheet("A", 8, 3, 6, 268)
    length = area**0.25
    wire_term = 268 * 2 * 3 * pm.wire_power(length, PROC, t_clk)
    node_term = one - wire_term
    # same geometry and node tables, two-bit messages
    two = node_term + 2 * wire_term
    assert spreadsheet("A", 8, 3, 6, 268, bits=2)[2] == pytest.approx(two, rel=1e-12)


def test_decoder_power_linear_in_n_at_fixed_area():
    tab = pm.sample_characterization()
    a = pm.decoder_power("A", 8, 3, 6, 268, tab, PROC, 1e-6)
    b = pm.decoder_power("A", 8, 3, 6, 536, tab, PROC, 1e-6)
    assert b == pytest.approx(2 * a)


@given(st.integers(50, 5000), st.floats(0.5, 1.2))
def test_decoder_power_monotone(n, v):
    tab = pm.sample_characterization()
    base = pm.decoder_power("A", 8, 3, 6, n, tab, pm.ProcessParams(v_supply=v), 1e-6)
    assert pm.decoder_power("A", 8, 3, 6, n + 2, tab, pm.ProcessParams(v_supply=v), 1e-6) > base
    assert pm.decoder_power("A", 8, 3, 6, n, tab, pm.ProcessParams(v_supply=v * 1.1), 1e-6) > base


def test_throughput():
    assert pm.decoder_throughput("A", 8, 3, 6, 100, 1e-9) == pytest.approx(100 * 0.5 / 1e-9)
    assert pm.decoder_throughput("A", 8, 3, 6, 100, 5e-10) == pytest.approx(2 * pm.decoder_throughput("A", 8, 3, 6, 100, 1e-9))
    assert pm.decoder_throughput("A", 10, 3, 6, 100, 1e-9) == pytest.approx(100 * 0.5 / 2e-9)
    with pytest.raises(ValueError):
        pm.decoder_throughput("A", 4, 3, 6, 100, 1e-9)


def test_parallel_examples():
    b = pm.parallel_power(1.0, 7e9, 7e9)
    assert b.q == 1 and b.p_parallel == 1.0
    b = pm.parallel_power(1.0, 1e9, 2e9)
    assert b.q == 2 and b.p_parallel == 2.0
    b = pm.parallel_power(1.0, 2e9, 3e9)
    assert b.q == 2 and b.p_parallel == pytest.approx(1.5)


@given(st.floats(1e-6, 10), st.floats(1e6, 1e12), st.floats(1e6, 1e12), st.floats(1e-12, 1e-6))
def test_parallel_never_undershoots(p, r_dec, r_data, t_clk):
    b = pm.parallel_power(p, r_dec, r_data, t_clk)
    assert b.q * r_dec >= r_data * (1 - 1e-9)
    assert b.p_parallel / p == pytest.approx(r_data / r_dec, rel=1e-12)
    # underclocked bank delivers exactly r_data
    assert b.q * r_dec * t_clk / b.t_u == pytest.approx(r_data, rel=1e-9)
