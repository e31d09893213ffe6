"""Total-power minimization: transmit power plus decoding power.

Closed forms for the Lambert-W optimum, numeric minimization under the
node and wire models, per-point search over coding strategies with the
physical decoder model, contour sweeps, and a small helper that checks
how a quantity scales as the target error probability shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from . import channel as ch
from . import de_engine as de
from .codes import CodeParams, CodeTable
from .power_models import PhysicalModel

P_T_CEILING = 10.0  # W
P_T_FLOOR = 1e-12  # W
BISECTION_DB = 0.01
SCAN_DB = 1.0
TIE_BREAK_RULE = "lowest total power, then fewer message bits, then smaller n, then (d_v, d_c, g), then rule label"


# --------------------------------------------------------------------------
# Lambert W


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function for real x >= -1/e."""
    if not math.isfinite(x):
        raise ValueError("argument must be finite")
    if x <= -1.0 / math.e + 1e-15:
        # the double nearest -1/e already sits past scipy's branch point
        if x < -1.0 / math.e - 1e-15:
            raise ValueError(f"W0 is undefined below -1/e (got {x})")
        return -1.0
    return float(special.lambertw(x, 0).real)


def lambert_sandwich(x: float) -> tuple[float, float]:
    """(ln x - ln ln x, ln x - ln ln x / 2), bracketing W0(x) for x >= e."""
    if x < math.e:
        raise ValueError("the bracket holds for x >= e")
    lx = math.log(x)
    llx = math.log(lx)
    return lx - llx, lx - 0.5 * llx


def _log_inv(pe: float) -> float:
    if not 0 < pe < 1:
        raise ValueError("error probability must lie in (0, 1)")
    return -math.log(pe)


def lambert_objective(p_t, gamma: float, eta: float, pe: float, factor: float = 1.0):
    """P_T + (1/pe)^(factor * gamma / (eta * P_T)), evaluated in the log domain."""
    p_t = np.asarray(p_t, dtype=float)
    with np.errstate(over="ignore"):
        out = p_t + np.exp(factor * gamma * _log_inv(pe) / (eta * p_t))
    return float(out) if out.ndim == 0 else out


def asymptotic_pt_star_gallager_a(gamma: float, eta: float, pe: float) -> float:
    """Stationary point of P_T + (1/pe)^(gamma/(eta P_T))."""
    if gamma <= 0 or eta <= 0:
        raise ValueError("gamma and eta must be positive")
    if not 0 < pe < math.exp(-math.e):
        raise ValueError("pe must lie in (0, e^-e)")
    s2 = gamma * _log_inv(pe) / eta
    return s2 / (2.0 * lambert_w0(0.5 * math.sqrt(s2)))


# --------------------------------------------------------------------------
# node and wire models


class ModelOptimum(NamedTuple):
    p_t_star: float
    p_total: float
    n_iter: int


class WireBracket(NamedTuple):
    lower: ModelOptimum
    upper: ModelOptimum


def _rule_for(kind) -> de.DecoderRule:
    if isinstance(kind, de.DecoderRule):
        return kind
    label = str(getattr(kind, "value", kind)).upper()
    if label not in ("A", "B"):
        raise ValueError("model totals are defined for Gallager A and B")
    return de.DecoderRule.from_label(label)


def _pt_for_p0(p0, eta):
    """Transmit power with BPSK flip probability p0 on an abstract channel."""
    return ch.q_inverse(p0) ** 2 / (2.0 * eta)


def _iters_at(rule, p_t, eta, pe, d_v, d_c, cap):
    p0 = np.minimum(ch.flip_prob_bpsk(eta * np.asarray(p_t, dtype=float)), 0.5)
    return de.min_iterations_batch(rule, p0, math.log(pe), d_v, d_c, cap)


def _reaches(rule, p_t, eta, pe, d_v, d_c, n_iter) -> bool:
    p0 = min(ch.flip_prob_bpsk(eta * p_t), 0.5)
    if n_iter == 0:
        return p0 <= pe
    return float(de.log_error_after(rule, p0, d_v, d_c, n_iter)[0]) <= math.log(pe)


def _min_pt_for_iters(rule, eta, pe, d_v, d_c, n_iter, lo, hi):
    """Smallest P_T in (lo, hi] reaching pe within n_iter iterations (log bisection)."""
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(60):
        mid = 0.5 * (llo + lhi)
        if _reaches(rule, math.exp(mid), eta, pe, d_v, d_c, n_iter):
            lhi = mid
        else:
            llo = mid
        if lhi - llo < 1e-13:
            break
    return math.exp(lhi)


def _no_decoder_if_idle(cost):
    # zero iterations means the raw channel already meets pe: no decoder at all
    return lambda n: 0.0 if n == 0 else cost(n)


def _minimize_total(rule, d_v, d_c, eta, pe, cost, cap=10_000, grid=400) -> ModelOptimum | de.Infeasible:
    """Minimize P_T + cost(N_iter(P_T)) over P_T on an abstract BPSK channel.

    N_iter is a nonincreasing step function of P_T, so the optimum sits at
    the smallest P_T of some iteration count.  A log grid locates the steps;
    every count that could still win is then pinned down by bisection.
    """
    cost = _no_decoder_if_idle(cost)
    if not 0 < pe < 0.5:
        raise ValueError("pe must lie in (0, 0.5)")
    if eta <= 0:
        raise ValueError("eta must be positive")
    thr = de.threshold(rule, d_v, d_c)
    lo = _pt_for_p0(min(thr, 0.4999), eta)
    hi = _pt_for_p0(pe, eta) * (1 + 1e-9)  # decoding no longer needed past here
    if hi <= lo:
        lo = hi / 10
    p_grid = np.geomspace(lo, hi, grid)
    iters = _iters_at(rule, p_grid, eta, pe, d_v, d_c, cap)
    ok = iters >= 0
    if not ok.any():
        return de.Infeasible(f"no transmit power up to {hi:g} W reaches pe={pe:g}")
    best = None
    for idx in np.flatnonzero(ok):
        tot = p_grid[idx] + cost(int(iters[idx]))
        if best is None or tot < best[0]:
            best = (tot, p_grid[idx], int(iters[idx]))
    first = int(np.flatnonzero(ok)[0])
    n_values = range(int(iters[ok].min()), int(iters[first]) + 1)
    for n in n_values:
        c = cost(n)
        # the step for n lies after the last grid point needing more than n
        above = np.flatnonzero(~ok | (iters > n))
        k = int(above[-1]) if above.size else -1
        left = p_grid[k] if k >= 0 else lo / 2
        if left + c >= best[0]:
            continue
        right = p_grid[k + 1]
        p = _min_pt_for_iters(rule, eta, pe, d_v, d_c, n, left, right)
        if p + c < best[0]:
            best = (p + c, p, n)
    return ModelOptimum(best[1], best[0], best[2])


def _evaluate_fixed(rule, d_v, d_c, eta, pe, cost, p_t, cap=10_000):
    if p_t <= 0:
        raise ValueError("p_t must be positive")
    cost = _no_decoder_if_idle(cost)
    n = int(_iters_at(rule, p_t, eta, pe, d_v, d_c, cap)[0])
    if n < 0:
        return de.Infeasible(f"P_T={p_t:g} W does not reach pe={pe:g} within {cap} iterations")
    return ModelOptimum(float(p_t), float(p_t + cost(n)), n)


def node_model_total(
    kind, xi_node: float, eta: float, pe: float, p_t: float | None = None, *, d_v: int = 3, d_c: int = 6
):
    """Total power P_T + xi_node * N_iter under the node model.

    Minimized over P_T unless ``p_t`` is given.  Returns a ModelOptimum or
    an Infeasible marker.
    """
    rule = _rule_for(kind)
    de.check_degrees(d_v, d_c)
    if xi_node <= 0:
        raise ValueError("xi_node must be positive")

    def cost(n):
        return xi_node * n

    if p_t is not None:
        return _evaluate_fixed(rule, d_v, d_c, eta, pe, cost, p_t)
    return _minimize_total(rule, d_v, d_c, eta, pe, cost)


def default_gamma(d_v: int, d_c: int) -> float:
    """Lower end of the wiring-growth constant interval."""
    return math.log((d_v - 1) * (d_c - 1))


def wire_model_total(
    kind,
    d_v: int,
    d_c: int,
    xi_wire: float,
    lam: float,
    eta: float,
    pe: float,
    gamma: float | None = None,
    p_t: float | None = None,
) -> WireBracket | de.Infeasible:
    """Total power with wire area between lam^2 e^(gamma N) and lam^2 e^(2 gamma N)."""
    rule = _rule_for(kind)
    de.check_degrees(d_v, d_c)
    if xi_wire <= 0 or lam <= 0:
        raise ValueError("xi_wire and lambda must be positive")
    gamma = default_gamma(d_v, d_c) if gamma is None else gamma
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    scale = xi_wire * lam**2

    out = []
    for factor in (1.0, 2.0):
        def cost(n, factor=factor):
            with np.errstate(over="ignore"):
                return float(scale * np.exp(factor * gamma * n))

        if p_t is not None:
            res = _evaluate_fixed(rule, d_v, d_c, eta, pe, cost, p_t)
        else:
            res = _minimize_total(rule, d_v, d_c, eta, pe, cost)
        if not res:
            return res
        out.append(res)
    return WireBracket(*out)


# --------------------------------------------------------------------------
# strategies and operating points


@dataclass(frozen=True)
class Strategy:
    """A code with a decoding rule, or the uncoded baseline (code is None)."""

    code: CodeParams | None = None
    rule: de.DecoderRule | None = None
    modulation: ch.ModulationSpec | None = None

    def __post_init__(self):
        if (self.code is None) != (self.rule is None):
            raise ValueError("a coded strategy needs both a code and a rule")
        if self.code is not None and self.code.n is None:
            raise ValueError("strategy codes need a blocklength")

    @classmethod
    def uncoded(cls, modulation: ch.ModulationSpec | None = None) -> Strategy:
        return cls(None, None, modulation)

    @property
    def is_uncoded(self) -> bool:
        return self.code is None

    @property
    def rate(self) -> float:
        return 1.0 if self.is_uncoded else self.code.rate

    @property
    def message_bits(self) -> int:
        return 0 if self.is_uncoded else self.rule.alphabet_size.bit_length() - 1

    @property
    def label(self) -> str:
        if self.is_uncoded:
            return "uncoded"
        c = self.code
        return f"({c.n},{c.girth},{c.d_v},{c.d_c},{self.rule.label})"

    def tie_key(self) -> tuple:
        if self.is_uncoded:
            return (0, 0, 0, 0, 0, "")
        c = self.code
        return (self.message_bits, c.n, c.d_v, c.d_c, c.girth, self.rule.label)


def strategies_from_table(table: CodeTable, algorithms: Sequence[str] = ("A", "B", "T")) -> list[Strategy]:
    out = []
    for row in table:
        for a in algorithms:
            out.append(Strategy(row.params, de.DecoderRule.from_label(a)))
    return out


@dataclass(frozen=True)
class OperatingPoint:
    distance_r: float
    target_pe: float
    channel: ch.ChannelSpec
    r_data: float

    def __post_init__(self):
        if not 0 < self.target_pe <= 0.5:
            raise ValueError("target_pe must lie in (0, 0.5]")
        if self.r_data <= 0 or self.distance_r <= 0:
            raise ValueError("r_data and distance must be positive")

    @property
    def link(self) -> ch.ChannelSpec:
        """Channel at this point's distance."""
        if self.channel.mode is ch.ChannelMode.PHYSICAL and self.channel.distance_r != self.distance_r:
            return self.channel.with_distance(self.distance_r)
        return self.channel


@dataclass(frozen=True)
class Optimum:
    strategy: Strategy
    p_t_star: float
    p_dec: float
    p_total: float
    feasible: bool = True
    modulation: ch.ModulationSpec | None = None
    n_iter: int = 0

    def __post_init__(self):
        if self.feasible and not math.isclose(self.p_total, self.p_t_star + self.p_dec, rel_tol=1e-12):
            raise ValueError("p_total must equal p_t_star + p_dec")


def _modulation_for(strategy: Strategy, point: OperatingPoint) -> ch.ModulationSpec:
    link = point.link
    if link.mode is ch.ChannelMode.ABSTRACT:
        want = ch.ModulationSpec(2)
    else:
        want = ch.min_constellation(point.r_data, link.bandwidth, strategy.rate)
    if strategy.modulation is not None and strategy.modulation != want:
        raise ValueError(
            f"{strategy.label}: modulation M={strategy.modulation.M} does not match the "
            f"required M={want.M}"
        )
    return want


def _flip_at(p_t: float, link: ch.ChannelSpec, m: ch.ModulationSpec, normalization: str) -> float:
    if link.mode is ch.ChannelMode.ABSTRACT:
        return float(ch.flip_prob_bpsk(link.eta * p_t))
    return float(ch.flip_prob(m, ch.ebn0_from_system(p_t, link, m), normalization))


def _bracket(link: ch.ChannelSpec, r_data: float) -> tuple[float, float]:
    lo = ch.shannon_limit(link, r_data) if link.mode is ch.ChannelMode.PHYSICAL else P_T_FLOOR
    return lo, P_T_CEILING


def _db(p):
    return 10.0 * math.log10(p)


def _from_db(x):
    return 10.0 ** (x / 10.0)


def _smallest_feasible(feasible: Callable[[float], bool], lo: float, hi: float) -> float | None:
    """Smallest P_T (0.01 dB resolution) with feasible(P_T), by bisection in dB.

    A coarse scan below the bisection result checks the monotonicity the
    bisection relies on; if it finds an earlier feasible point the search
    falls back to a fine scan.
    """
    if hi <= lo or not feasible(hi):
        return None
    if feasible(lo):
        return lo
    a, b = _db(lo), _db(hi)
    while b - a > BISECTION_DB:
        mid = 0.5 * (a + b)
        if feasible(_from_db(mid)):
            b = mid
        else:
            a = mid
    result = b
    x = _db(lo) + SCAN_DB
    while x < result - BISECTION_DB:
        if feasible(_from_db(x)):
            return _fine_scan(feasible, _db(lo), result)
        x += SCAN_DB
    return _from_db(result)


def _fine_scan(feasible, a_db, b_db):
    steps = int(math.ceil((b_db - a_db) / BISECTION_DB))
    for k in range(1, steps + 1):
        x = min(a_db + k * BISECTION_DB, b_db)
        if feasible(_from_db(x)):
            return _from_db(x)
    return _from_db(b_db)


def uncoded_power(point: OperatingPoint, normalization: str = "verbatim", strategy: Strategy | None = None) -> Optimum:
    """Smallest P_T at which the raw modulation bit error is at most target_pe."""
    strategy = strategy or Strategy.uncoded()
    link = point.link
    m = _modulation_for(strategy, point)
    lo, hi = _bracket(link, point.r_data)

    def feasible(p):
        return _flip_at(p, link, m, normalization) <= point.target_pe

    # never give up: the raw error vanishes as P_T grows
    while not feasible(hi):
        hi *= 10.0
    p = _smallest_feasible(feasible, lo, hi)
    return Optimum(strategy, p, 0.0, p, True, m, 0)


def coded_power(
    point: OperatingPoint, strategy: Strategy, model: PhysicalModel, normalization: str = "verbatim"
) -> Optimum | de.Infeasible:
    """Best total power of one coded strategy at ``point``."""
    link = point.link
    code, rule = strategy.code, strategy.rule
    m = _modulation_for(strategy, point)
    iters = code.iterations
    if iters < 1:
        return de.Infeasible(f"{strategy.label}: girth allows no independent iteration")
    log_pe = math.log(point.target_pe)

    def feasible(p):
        p0 = min(_flip_at(p, link, m, normalization), 0.5)
        return float(de.log_error_after(rule, p0, code.d_v, code.d_c, iters)[0]) <= log_pe

    lo, hi = _bracket(link, point.r_data)
    p_t = _smallest_feasible(feasible, lo, hi)
    if p_t is None:
        return de.Infeasible(f"{strategy.label}: target not reached for P_T in [{lo:.3g}, {hi:.3g}] W")
    est = model.evaluate(rule.label, code.girth, code.d_v, code.d_c, code.n, point.r_data)
    p_dec = est.bank.p_parallel
    return Optimum(strategy, p_t, p_dec, p_t + p_dec, True, m, iters)


def select_best(candidates: Sequence[Optimum]) -> Optimum:
    """Deterministic argmin: see TIE_BREAK_RULE."""
    return min(candidates, key=lambda o: (o.p_total,) + o.strategy.tie_key())


def optimize_point(
    point: OperatingPoint,
    strategies: Sequence[Strategy],
    models: PhysicalModel,
    include_uncoded: bool = False,
    normalization: str = "verbatim",
) -> Optimum | de.Infeasible:
    if not strategies and not include_uncoded:
        raise ValueError("no strategies to compare")
    results, reasons = [], []
    for s in strategies:
        res = uncoded_power(point, normalization, s) if s.is_uncoded else coded_power(point, s, models, normalization)
        if res:
            results.append(res)
        else:
            reasons.append(res.reason)
    if include_uncoded and not any(s.is_uncoded for s in strategies):
        results.append(uncoded_power(point, normalization))
    if not results:
        return de.Infeasible("; ".join(reasons))
    return select_best(results)


# --------------------------------------------------------------------------
# sweeps


SWEEP_COLUMNS = [
    "r_m", "pe", "strategy_label", "n", "g", "d_v", "d_c", "alg", "M",
    "p_t_dbm", "p_dec_dbm", "p_total_dbm", "feasible",
]


@dataclass(frozen=True)
class SweepRecord:
    r_m: float
    pe: float
    strategy_label: str
    n: int | None
    g: int | None
    d_v: int | None
    d_c: int | None
    alg: str
    M: int | None
    p_t_dbm: float
    p_dec_dbm: float
    p_total_dbm: float
    feasible: bool
    p_t_w: float = math.nan
    p_total_w: float = math.nan

    def row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "1" if v else "0"
            if isinstance(v, float):
                return f"{v:.10g}" if math.isfinite(v) else str(v)
            return str(v)

        return [fmt(getattr(self, c)) for c in SWEEP_COLUMNS]


def _record(r, pe, res) -> SweepRecord:
    if not res:
        nan = math.nan
        return SweepRecord(r, pe, "infeasible", None, None, None, None, "", None, nan, nan, nan, False)
    s = res.strategy
    c = s.code
    return SweepRecord(
        r_m=r,
        pe=pe,
        strategy_label=s.label,
        n=c.n if c else None,
        g=c.girth if c else None,
        d_v=c.d_v if c else None,
        d_c=c.d_c if c else None,
        alg=s.rule.label if s.rule else "none",
        M=res.modulation.M if res.modulation else None,
        p_t_dbm=float(ch.to_dbm(res.p_t_star)),
        p_dec_dbm=float(ch.to_dbm(res.p_dec)),
        p_total_dbm=float(ch.to_dbm(res.p_total)),
        feasible=True,
        p_t_w=res.p_t_star,
        p_total_w=res.p_total,
    )


def contour_sweep(
    distances: Sequence[float],
    pes: Sequence[float],
    strategies: Sequence[Strategy],
    models: PhysicalModel,
    channel: ch.ChannelSpec,
    r_data: float,
    include_uncoded: bool = False,
    normalization: str = "verbatim",
) -> list[SweepRecord]:
    """One record per (distance, pe), distance-major, in grid order."""
    if not len(distances) or not len(pes):
        raise ValueError("sweep grid is empty")
    out = []
    for r in distances:
        for pe in pes:
            point = OperatingPoint(float(r), float(pe), channel, r_data)
            res = optimize_point(point, strategies, models, include_uncoded, normalization)
            out.append(_record(float(r), float(pe), res))
    return out


# --------------------------------------------------------------------------
# scaling probes


@dataclass(frozen=True)
class ProbeReport:
    pes: np.ndarray
    values: np.ndarray
    ratios: np.ndarray
    spread: float  # max/min - 1 over finite rungs
    exponent: float  # slope of log value against log model
    residual: float  # rms residual of that fit
    nonfinite: tuple[int, ...] = ()


def ratio_spread(ratios) -> float:
    r = np.asarray(ratios, dtype=float)
    r = r[np.isfinite(r)]
    return float(r.max() / r.min() - 1.0)


def scaling_probe(
    quantity: Callable[[float], float], pe_ladder: Sequence[float], model_fn: Callable[[float], float]
) -> ProbeReport:
    """Compare quantity(pe) with model_fn(pe) along a ladder of error probabilities.

    The ladder needs at least three rungs and must span at least three
    decades of pe.
    """
    pes = np.asarray(pe_ladder, dtype=float)
    if pes.size < 3:
        raise ValueError("ladder needs at least three rungs")
    if np.any((pes <= 0) | (pes >= 1)):
        raise ValueError("ladder entries must lie in (0, 1)")
    if math.log10(pes.max() / pes.min()) < 3 - 1e-9:
        raise ValueError("ladder must span at least three decades of pe")
    values = np.array([float(quantity(p)) for p in pes])
    models = np.array([float(model_fn(p)) for p in pes])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = values / models
    good = np.isfinite(values) & np.isfinite(models) & (values > 0) & (models > 0)
    bad = tuple(int(i) for i in np.flatnonzero(~good))
    if good.sum() >= 2:
        spread = ratio_spread(ratios[good])
        x, y = np.log(models[good]), np.log(values[good])
        if np.ptp(x) > 0:
            slope, icpt = np.polyfit(x, y, 1)
            resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
        else:
            slope, resid = math.nan, math.nan
    else:
        spread, slope, resid = math.nan, math.nan, math.nan
    return ProbeReport(pes, values, ratios, spread, float(slope), resid, bad)


def log_slope(xs, ys) -> float:
    """Least-squares slope of ys against xs."""
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])
