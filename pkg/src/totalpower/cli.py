"""Command-line interface.

Exit codes: 0 success, 1 infeasible or failed check, 2 usage error,
3 input/output error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import channel as ch
from . import checks
from . import codes
from . import de_engine as de
from . import graphlab as gl
from . import optimizer as op
from . import power_models as pm

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    channel: ch.ChannelSpec
    r_data: float
    code_table: codes.CodeTable
    characterization: pm.NodeCharacterization
    rules: dict
    distances: list = field(default_factory=list)
    pes: list = field(default_factory=list)
    qam_normalization: str = "verbatim"
    wire_mode: pm.WireMode = pm.WireMode.BEST
    include_uncoded: bool = False
    seed: int = 0
    source: Path | None = None

    def strategies(self) -> list[op.Strategy]:
        return [
            op.Strategy(row.params, rule) for row in self.code_table for rule in self.rules.values()
        ]

    def model(self) -> pm.PhysicalModel:
        return pm.PhysicalModel(self.characterization, pm.ProcessParams(), self.wire_mode)


def _data_path(name: str) -> Path:
    return Path(str(resources.files("totalpower") / "data" / name))


def sample_config_path() -> Path:
    return _data_path("sweep_sample.ini")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace("\n", ",").split(",") if x.strip()]


def _resolve(base: Path, value: str) -> Path:
    if value.startswith("sample:"):
        return _data_path(value.split(":", 1)[1])
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_config(path) -> RunConfig:
    """Parse an INI run configuration; every referenced file is read here."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    base = path.parent
    try:
        chan = parser["channel"]
        mode = chan.get("mode", "physical").strip().lower()
        if mode == "abstract":
            channel = ch.ChannelSpec.abstract(chan.getfloat("eta"))
        else:
            channel = ch.ChannelSpec.physical(
                chan.getfloat("f_c_hz"),
                chan.getfloat("bandwidth_hz"),
                chan.getfloat("temperature_k"),
                chan.getfloat("alpha"),
                chan.getfloat("distance_m", 1.0),
            )
        r_data = parser["system"].getfloat("r_data_bps")
        data = parser["data"]
        table_path = _resolve(base, data.get("code_table", "sample:code_table_sample.csv"))
        char_path = _resolve(base, data.get("characterization", "sample:node_characterization_sample.csv"))
        algs = [a.strip().upper() for a in data.get("algorithms", "A, B, T").split(",") if a.strip()]
        rule_file = data.get("two_bit_rule")
        grid = parser["grid"] if parser.has_section("grid") else {}
        distances = _floats(grid.get("distances_m", "")) if grid else []
        pes = _floats(grid.get("pe", "")) if grid else []
        opts = parser["options"] if parser.has_section("options") else None
        normalization = opts.get("qam_normalization", "verbatim") if opts else "verbatim"
        wire_mode = pm.WireMode.parse(opts.get("wire_mode", "best")) if opts else pm.WireMode.BEST
        include_uncoded = opts.getboolean("include_uncoded", False) if opts else False
        seed = opts.getint("seed", 0) if opts else 0
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: bad configuration: {exc}") from None
    if normalization not in ch.QAM_NORMALIZATIONS:
        raise InputError(f"{path}: qam_normalization must be one of {ch.QAM_NORMALIZATIONS}")
    for p in (table_path, char_path):
        if not p.is_file():
            raise InputError(f"{path}: referenced file not found: {p}")
    try:
        table = codes.load_code_table(table_path)
        chars = pm.load_characterization(char_path)
        rules = {}
        for a in algs:
            if a == "T" and rule_file:
                rules[a] = de.DecoderRule.tabular(de.load_message_rule(_resolve(base, rule_file)))
            else:
                rules[a] = de.DecoderRule.from_label(a)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    return RunConfig(
        channel, r_data, table, chars, rules, distances, pes, normalization, wire_mode,
        include_uncoded, seed, path,
    )


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "qam_normalization", None):
        cfg.qam_normalization = args.qam_normalization
    if getattr(args, "wire_mode", None):
        cfg.wire_mode = pm.WireMode.parse(args.wire_mode)
    if getattr(args, "include_uncoded", False):
        cfg.include_uncoded = True
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _write_once(path: Path, text: str, force: bool):
    if path.exists() and not force:
        raise InputError(f"refusing to overwrite {path} (use --force)")
    try:
        path.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None


# --------------------------------------------------------------------------
# commands


def cmd_threshold(args) -> int:
    rule = de.DecoderRule.from_label(args.alg)
    print(f"{de.threshold(rule, args.dv, args.dc):.6f}")
    return EXIT_OK


def cmd_iters(args) -> int:
    rule = de.DecoderRule.from_label(args.alg)
    n = de.min_iterations(rule, args.p0, args.pe, args.dv, args.dc, cap=args.cap)
    if isinstance(n, de.Infeasible):
        print(f"infeasible: {n.reason}")
        return EXIT_INFEASIBLE
    print(n)
    return EXIT_OK


def cmd_bounds(args) -> int:
    dv, dc = args.dv, args.dc
    if args.girth is not None:
        lower, upper = codes.blocklength_bounds_from_girth(dv, dc, args.girth)
        iters = codes.max_indep_iters(args.girth)
        print(f"girth {args.girth}: independent iterations {iters}")
        print(f"blocklength lower bound: {lower}")
        print(f"blocklength upper bound: {upper}")
        print(f"trivial wiring area at n={lower}: {gl.wiring_area_lower_bounds(dv, dc, lower, args.lam, 'FromN').trivial:.6g} m^2")
        lo, hi = gl.gamma_interval(dv, dc)
        print(f"gamma interval: [{lo:.6g}, {hi:.6g}]")
        ok, dexp = gl.dense_branch(dv, dc)
        if ok:
            print(f"dense crossing branch: applicable, exponent {dexp:.6g}")
        else:
            print("dense crossing branch: not applicable (d_v d_c < 4 (d_v + d_c))")
        if iters >= 1:
            rep = gl.wiring_area_lower_bounds(dv, dc, iters, args.lam, "FromIters")
            print(f"wiring area from iterations: [{rep.exp_lower[0]:.6g}, {rep.exp_lower[1]:.6g}] m^2")
            print(f"crossing constant k_{rep.ell}: {rep.k_ell:.6g} ({rep.k_ell_label})")
    else:
        n = codes.blocklength_lower_bound_pe(dv, dc, args.pe, args.pt, args.eta)
        print(f"blocklength lower bound (order level): {n:.6g}")
        if dv >= 3 and n >= 1:
            print(f"pseudoweight upper bound at that n: {codes.pseudoweight_upper_bound(dv, dc, n):.6g}")
    return EXIT_OK


def _graph_from_args(args) -> gl.TannerGraph:
    if args.graph:
        try:
            return gl.read_graph(args.graph)
        except OSError as exc:
            raise InputError(str(exc)) from None
    if None in (args.dv, args.dc, args.n, args.girth):
        raise UsageError("give --graph or all of --dv --dc --n --girth")
    res = gl.build_regular_tanner(args.dv, args.dc, args.n, args.girth, seed=args.seed or 0)
    if res.best_effort:
        print(f"warning: target girth {args.girth} not reached (got {res.girth})", file=sys.stderr)
    return res.graph


def cmd_layout(args) -> int:
    graph = _graph_from_args(args)
    lay = gl.collinear_layout(graph, args.lam)
    g = gl.girth(graph)
    print(f"n {graph.n_vars}  checks {graph.n_checks}  edges {graph.n_edges}  girth {g}")
    print(f"tracks: {lay.n_tracks}")
    print(f"wire area: {lay.wire_area:.6g} m^2")
    print(f"trivial lower bound: {args.lam ** 2 * graph.n_edges:.6g} m^2")
    print(f"bounding area: {lay.bounding_area:.6g} m^2")
    print(f"construction bound C n^2 lambda^2 (C={lay.construction_constant:g}): {lay.area_bound:.6g} m^2")
    if args.segments:
        out = Path(args.segments)
        if out.exists() and not args.force:
            raise InputError(f"refusing to overwrite {out} (use --force)")
        lay.export_segments(out)
    return EXIT_OK


def cmd_power(args) -> int:
    chars = pm.load_characterization(args.characterization) if args.characterization else pm.sample_characterization()
    model = pm.PhysicalModel(chars, pm.ProcessParams(), pm.WireMode.parse(args.wire_mode or "best"))
    est = model.evaluate(args.alg, args.girth, args.dv, args.dc, args.n, args.r_data)
    print(f"decoder area: {est.area:.6g} m^2")
    print(f"clock period: {est.t_clk:.6g} s")
    print(f"decoder power: {est.p_dec:.6g} W")
    print(f"decoder throughput: {est.r_dec:.6g} bit/s")
    print(f"parallel decoders: {est.bank.q}  (kappa {est.bank.kappa:.6g})")
    print(f"power at R_data: {est.bank.p_parallel:.6g} W ({ch.to_dbm(est.bank.p_parallel):.3f} dBm)")
    return EXIT_OK


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config or sample_config_path())
    return _apply_overrides(cfg, args)


def cmd_optimize(args) -> int:
    cfg = _load_cfg(args)
    point = op.OperatingPoint(args.distance, args.pe, cfg.channel, cfg.r_data)
    res = op.optimize_point(point, cfg.strategies(), cfg.model(), cfg.include_uncoded, cfg.qam_normalization)
    if not res:
        print(f"infeasible: {res.reason}")
        return EXIT_INFEASIBLE
    print(f"strategy: {res.strategy.label}  M={res.modulation.M}")
    print(f"transmit power: {res.p_t_star:.6g} W ({ch.to_dbm(res.p_t_star):.3f} dBm)")
    print(f"decoding power: {res.p_dec:.6g} W")
    print(f"total power: {res.p_total:.6g} W ({ch.to_dbm(res.p_total):.3f} dBm)")
    return EXIT_OK


def sweep_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(op.SWEEP_COLUMNS)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    if args.distance:
        cfg.distances = args.distance
    if args.pe:
        cfg.pes = args.pe
    if not cfg.distances or not cfg.pes:
        raise UsageError("the sweep grid needs distances and pe values")
    out = Path(args.out)
    meta_path = out.with_suffix(out.suffix + ".json")
    for p in (out, meta_path):
        if p.exists() and not args.force:
            raise InputError(f"refusing to overwrite {p} (use --force)")
    records = op.contour_sweep(
        cfg.distances, cfg.pes, cfg.strategies(), cfg.model(), cfg.channel, cfg.r_data,
        cfg.include_uncoded, cfg.qam_normalization,
    )
    meta = {
        "tool_version": __version__,
        "seed": cfg.seed,
        "config": str(cfg.source),
        "code_table_provenance": cfg.code_table.provenance,
        "characterization_provenance": cfg.characterization.provenance,
        "tie_break": op.TIE_BREAK_RULE,
        "qam_normalization": cfg.qam_normalization,
        "wire_mode": cfg.wire_mode.value,
        "include_uncoded": cfg.include_uncoded,
        "rules": {k: v.label for k, v in cfg.rules.items()},
        "rows": len(records),
    }
    _write_once(out, sweep_csv(records), True)
    _write_once(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n", True)
    n_bad = sum(not r.feasible for r in records)
    print(f"wrote {len(records)} rows to {out} ({n_bad} infeasible)")
    return EXIT_OK


def cmd_mc_validate(args) -> int:
    graph = _graph_from_args(args)
    if not graph.is_regular:
        raise UsageError("Monte-Carlo validation needs a regular graph")
    g = gl.girth(graph)
    limit = (int(g) - 2) // 4 if math.isfinite(g) else args.iters
    if args.iters > limit:
        print(f"warning: {args.iters} iterations exceed the {limit} independent ones of girth {g}", file=sys.stderr)
    rule = de.DecoderRule.from_label(args.alg)
    pred = float(np.exp(de.log_error_after(rule, args.p0, graph.d_v, graph.d_c, args.iters)[0]))
    mean, half = gl.mc_decode_bsc(graph, rule, args.p0, args.iters, args.trials, args.seed or 0)
    sigma = half / 1.96
    z = abs(mean - pred) / sigma if sigma > 0 else (0.0 if mean == pred else math.inf)
    print(f"density evolution: {pred:.6g}")
    print(f"monte carlo: {mean:.6g} +- {half:.3g} (95%)")
    print(f"|z| = {z:.3f}")
    return EXIT_OK if z <= 3.0 else EXIT_INFEASIBLE


def _run_suites(names, args) -> int:
    failed = 0
    for name in names:
        fn = checks.SUITES[name]
        results = fn(trials=args.trials, seed=args.seed or 0) if name == "de-mc" else fn()
        for c in results:
            print(f"[{name}] {c.line()}")
            failed += not c.passed
    print(f"{failed} check(s) failed" if failed else "all checks passed")
    return EXIT_INFEASIBLE if failed else EXIT_OK


def cmd_verify(args) -> int:
    return _run_suites([args.suite], args)


def cmd_verify_scaling(args) -> int:
    names = {"node": ["scaling-node"], "wire": ["scaling-wire"]}.get(args.model, ["scaling-node", "scaling-wire"])
    return _run_suites(names, args)


# --------------------------------------------------------------------------
# parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _even_girth(text):
    v = int(text)
    if v < 4 or v % 2:
        raise argparse.ArgumentTypeError("girth must be an even integer >= 4")
    return v


def _prob(text):
    v = float(text)
    if not 0 < v < 0.5:
        raise argparse.ArgumentTypeError("must lie in (0, 0.5)")
    return v


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--qam-normalization", choices=ch.QAM_NORMALIZATIONS, default=None)
    common.add_argument("--wire-mode", choices=["best", "worst"], default=None)
    common.add_argument("--include-uncoded", action="store_true")

    parser = argparse.ArgumentParser(prog="totalpower", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=fn)
        return p

    def degrees(p, required=True):
        p.add_argument("--dv", type=int, required=required)
        p.add_argument("--dc", type=int, required=required)

    p = add("threshold", cmd_threshold, "density-evolution threshold on the BSC")
    p.add_argument("--alg", choices=["A", "B", "T"], required=True)
    degrees(p)

    p = add("iters", cmd_iters, "iterations to reach a target error probability")
    p.add_argument("--alg", choices=["A", "B", "T"], required=True)
    degrees(p)
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--pe", type=_prob, required=True)
    p.add_argument("--cap", type=_positive_int, default=10_000)

    p = add("bounds", cmd_bounds, "blocklength and wiring bounds")
    degrees(p)
    p.add_argument("--girth", type=_even_girth)
    p.add_argument("--pe", type=_prob)
    p.add_argument("--pt", type=_positive)
    p.add_argument("--eta", type=_positive)
    p.add_argument("--lam", type=_positive, default=1.0, help="wire pitch (m)")

    p = add("layout", cmd_layout, "collinear layout of a Tanner graph")
    p.add_argument("--graph")
    degrees(p, required=False)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--girth", type=_even_girth)
    p.add_argument("--lam", type=_positive, default=1.0)
    p.add_argument("--segments", help="write wire segments as CSV")
    p.add_argument("--force", action="store_true")

    p = add("power", cmd_power, "physical decoder power model")
    p.add_argument("--alg", choices=["A", "B", "T"], required=True)
    degrees(p)
    p.add_argument("--girth", type=_even_girth, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r-data", type=_positive, default=7e9)
    p.add_argument("--characterization")

    p = add("optimize", cmd_optimize, "minimize total power at one operating point")
    p.add_argument("--config")
    p.add_argument("--distance", type=_positive, required=True)
    p.add_argument("--pe", type=_prob, required=True)

    p = add("sweep", cmd_sweep, "contour sweep over distance and pe, written as CSV")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--distance", type=_positive, action="append")
    p.add_argument("--pe", type=_prob, action="append")
    p.add_argument("--force", action="store_true")

    p = add("mc-validate", cmd_mc_validate, "compare density evolution with Monte-Carlo decoding")
    p.add_argument("--graph")
    degrees(p, required=False)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--girth", type=_even_girth)
    p.add_argument("--alg", choices=["A", "B", "T"], default="A")
    p.add_argument("--p0", type=_prob, required=True)
    p.add_argument("--iters", type=int, default=1)
    p.add_argument("--trials", type=_positive_int, default=20_000)

    p = add("verify", cmd_verify, "run a named verification suite")
    p.add_argument("suite", choices=sorted(checks.SUITES))
    p.add_argument("--trials", type=_positive_int, default=20_000)

    p = add("verify-scaling", cmd_verify_scaling, "run the scaling probes")
    p.add_argument("--model", choices=["node", "wire", "both"], default="both")
    p.add_argument("--trials", type=_positive_int, default=20_000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bounds":
        groups = (args.girth is not None, any(v is not None for v in (args.pe, args.pt, args.eta)))
        if all(groups) or not any(groups):
            parser.error("bounds takes either --girth or --pe/--pt/--eta")
        if groups[1] and None in (args.pe, args.pt, args.eta):
            parser.error("--pe, --pt and --eta go together")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (codes.CodeTableError, pm.CharacterizationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, pm.MissingEntryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
