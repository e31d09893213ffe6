"""Decoding-power models.

Two abstract models charge power per node-iteration or per unit wire
area.  The physical model composes characterized node delays and powers
with a Rent's-rule wire length and an Elmore wire delay to get a clock
period, a decoder power and a throughput, and then scales a bank of
parallel decoders to the system data rate.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

ACTIVITY_FACTOR = 0.5
MESSAGE_BITS = {"A": 1, "B": 1, "T": 2}
DV_RANGE = range(2, 7)
DC_RANGE = range(3, 14)


def _positive(**kwargs):
    for name, val in kwargs.items():
        if not (val > 0 and math.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")


def _alg_label(a) -> str:
    label = getattr(a, "value", getattr(a, "label", a))
    label = str(label).upper()
    if label not in MESSAGE_BITS:
        raise ValueError(f"unknown decoding algorithm {a!r}")
    return label


def message_bits(a) -> int:
    return MESSAGE_BITS[_alg_label(a)]


# --------------------------------------------------------------------------
# abstract models


@dataclass(frozen=True)
class NodeModelParams:
    """Constant energy per node per iteration."""

    e_node: float
    r_data: float
    d_v: int
    d_c: int
    xi_node: float = field(init=False)

    def __post_init__(self):
        _positive(e_node=self.e_node, r_data=self.r_data)
        if not (self.d_v >= 2 and self.d_c > self.d_v):
            raise ValueError(f"need d_c > d_v >= 2, got d_v={self.d_v}, d_c={self.d_c}")
        # nodes per information bit times energy times bit rate
        xi = self.e_node * (self.d_v + self.d_c) / (self.d_c - self.d_v) * self.r_data
        object.__setattr__(self, "xi_node", xi)


@dataclass(frozen=True)
class WireModelParams:
    """Dynamic power proportional to total wire area."""

    c_unit_area: float
    v_supply: float
    f_clock: float

    def __post_init__(self):
        _positive(c_unit_area=self.c_unit_area, v_supply=self.v_supply, f_clock=self.f_clock)

    @property
    def xi_wire(self) -> float:
        return self.c_unit_area * self.v_supply**2 * self.f_clock


def node_model_power(params: NodeModelParams, tau_iter: float) -> float:
    if tau_iter < 0:
        raise ValueError("iteration count must be non-negative")
    return params.xi_node * tau_iter


def wire_model_power(params: WireModelParams, a_wires: float) -> float:
    if a_wires < 0:
        raise ValueError("wire area must be non-negative")
    return params.xi_wire * a_wires


# --------------------------------------------------------------------------
# physical model


class WireMode(enum.Enum):
    BEST = "best"  # highly parallel logic
    WORST = "worst"  # random placement on a square

    @classmethod
    def parse(cls, value) -> WireMode:
        if isinstance(value, cls):
            return value
        text = str(value).lower().replace("case", "")
        return cls(text)


def wire_length_estimate(a_decoder: float, mode=WireMode.BEST) -> float:
    """Average interconnect length (m) for a decoder of area ``a_decoder`` (m^2)."""
    _positive(a_decoder=a_decoder)
    if WireMode.parse(mode) is WireMode.BEST:
        return a_decoder**0.25
    return math.sqrt(a_decoder) / 3.0


@dataclass(frozen=True)
class ProcessParams:
    r_sq: float = 0.1  # ohm per square
    c_unit: float = 2e-10  # F/m
    w_avg: float = 1e-7  # m
    v_supply: float = 0.78  # V

    def __post_init__(self):
        _positive(r_sq=self.r_sq, c_unit=self.c_unit, w_avg=self.w_avg, v_supply=self.v_supply)

    @property
    def activity_factor(self) -> float:
        return ACTIVITY_FACTOR


def elmore_delay(length: float, proc: ProcessParams) -> float:
    """Distributed-RC delay of a minimum-width wire."""
    if length < 0:
        raise ValueError("wire length must be non-negative")
    return proc.r_sq * proc.c_unit * length**2 / (2.0 * proc.w_avg)


class CharacterizationError(ValueError):
    pass


class MissingEntryError(LookupError):
    pass


@dataclass(frozen=True)
class NodeEntry:
    delay_s: float
    power_w: float
    area_m2: float


@dataclass(frozen=True)
class NodeCharacterization:
    """Per-algorithm, per-degree node delay, power and area.

    ``entries`` maps (algorithm, "vn" | "cn", degree) to a NodeEntry.
    """

    entries: dict
    provenance: str = "sample"
    source: Path | None = None

    def _get(self, a, kind, degree) -> NodeEntry:
        key = (_alg_label(a), kind, int(degree))
        try:
            return self.entries[key]
        except KeyError:
            raise MissingEntryError(
                f"no {kind.upper()} entry for algorithm {key[0]} at degree {degree}"
            ) from None

    def t_vn(self, a, d_v):
        return self._get(a, "vn", d_v).delay_s

    def t_cn(self, a, d_c):
        return self._get(a, "cn", d_c).delay_s

    def p_vn(self, a, d_v):
        return self._get(a, "vn", d_v).power_w

    def p_cn(self, a, d_c):
        return self._get(a, "cn", d_c).power_w

    def area_vn(self, a, d_v):
        return self._get(a, "vn", d_v).area_m2

    def area_cn(self, a, d_c):
        return self._get(a, "cn", d_c).area_m2

    @property
    def algorithms(self) -> list[str]:
        return sorted({k[0] for k in self.entries})

    def missing(self) -> list[tuple[str, str, int]]:
        """Entries absent from the design space, for every listed algorithm."""
        out = []
        for a in self.algorithms:
            out += [(a, "vn", d) for d in DV_RANGE if (a, "vn", d) not in self.entries]
            out += [(a, "cn", d) for d in DC_RANGE if (a, "cn", d) not in self.entries]
        return out


CHARACTERIZATION_COLUMNS = ["algorithm", "node_kind", "degree", "delay_s", "power_w", "area_m2", "provenance"]


def load_characterization(path, require_full: bool = True) -> NodeCharacterization:
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != CHARACTERIZATION_COLUMNS:
        raise CharacterizationError(f"{path}: columns must be {','.join(CHARACTERIZATION_COLUMNS)}")
    entries = {}
    provenances = set()
    problems = []
    for lineno, row in enumerate(reader, 2):
        try:
            a = _alg_label(row["algorithm"].strip())
            kind = row["node_kind"].strip().lower()
            if kind not in ("vn", "cn"):
                raise ValueError(f"node_kind must be vn or cn, got {kind!r}")
            degree = int(row["degree"])
            entry = NodeEntry(float(row["delay_s"]), float(row["power_w"]), float(row["area_m2"]))
            _positive(delay_s=entry.delay_s, power_w=entry.power_w, area_m2=entry.area_m2)
            if (a, kind, degree) in entries:
                raise ValueError("duplicate entry")
            entries[(a, kind, degree)] = entry
            provenances.add(row["provenance"].strip())
        except (ValueError, TypeError, AttributeError) as exc:
            problems.append(f"row {lineno}: {exc}")
    if problems:
        raise CharacterizationError(f"{path}: rejected rows\n  " + "\n  ".join(problems))
    if len(provenances) > 1:
        raise CharacterizationError(f"{path}: mixed provenance {sorted(provenances)}")
    table = NodeCharacterization(entries, provenances.pop() if provenances else "", path)
    if require_full and table.missing():
        raise CharacterizationError(
            f"{path}: missing entries for the design space, e.g. {table.missing()[:3]}"
        )
    return table


def sample_characterization() -> NodeCharacterization:
    ref = resources.files("totalpower") / "data" / "node_characterization_sample.csv"
    with resources.as_file(ref) as path:
        return load_characterization(path)


def decoder_area_estimate(n_min, d_v, d_c, tables: NodeCharacterization, a="A") -> float:
    """Node area of a fully parallel decoder (m^2)."""
    return n_min * tables.area_vn(a, d_v) + n_min * (d_v / d_c) * tables.area_cn(a, d_c)


def _iterations(g) -> int:
    iters = (g - 2) // 4
    if iters < 1:
        raise ValueError(f"girth {g} allows no independent iteration")
    return iters


def clock_period(
    a, g, d_v, d_c, tables: NodeCharacterization, proc: ProcessParams, decoder_area: float,
    mode=WireMode.BEST,
) -> float:
    """Critical path of one iteration: VN, wire, CN, wire."""
    length = wire_length_estimate(decoder_area, mode) if decoder_area > 0 else 0.0
    return tables.t_vn(a, d_v) + 2.0 * elmore_delay(length, proc) + tables.t_cn(a, d_c)


def wire_power(length: float, proc: ProcessParams, t_clk: float) -> float:
    """Dynamic power of one single-bit interconnect."""
    return proc.activity_factor * proc.c_unit * length * proc.v_supply**2 / t_clk


def decoder_power(
    a, g, d_v, d_c, n_min, tables: NodeCharacterization, proc: ProcessParams,
    decoder_area: float | None = None, mode=WireMode.BEST,
) -> float:
    """Power of one fully parallel decoder running at its minimum clock period.

    Node powers were characterized with a clock equal to the node's own
    delay, so each is scaled by (node delay / decoder clock).
    """
    if decoder_area is None:
        decoder_area = decoder_area_estimate(n_min, d_v, d_c, tables, a)
    t_clk = clock_period(a, g, d_v, d_c, tables, proc, decoder_area, mode)
    length = wire_length_estimate(decoder_area, mode) if decoder_area > 0 else 0.0
    p_vn = tables.p_vn(a, d_v) * tables.t_vn(a, d_v) / t_clk
    p_cn = tables.p_cn(a, d_c) * tables.t_cn(a, d_c) / t_clk
    p_wire = wire_power(length, proc, t_clk)
    return n_min * (p_vn + d_v * p_cn / d_c + 2 * d_v * message_bits(a) * p_wire)


def decoder_throughput(a, g, d_v, d_c, n_min, clock_period: float) -> float:
    _alg_label(a)
    _positive(clock_period=clock_period)
    if d_c <= d_v:
        raise ValueError("rate must be positive (d_c > d_v)")
    return n_min * (1.0 - d_v / d_c) / (_iterations(g) * clock_period)


@dataclass(frozen=True)
class ParallelBank:
    q: int
    t_u: float  # underclocked period, in seconds if a clock was given, else in units of it
    kappa: float
    p_parallel: float


def parallel_power(p_dec: float, r_dec: float, r_data: float, clock_period: float = 1.0) -> ParallelBank:
    """Bank of ``q`` decoders, underclocked so the combined rate is exactly ``r_data``."""
    _positive(p_dec=p_dec, r_dec=r_dec, r_data=r_data)
    ratio = r_data / r_dec
    q = math.ceil(ratio * (1 - 1e-12))
    t_u = q * clock_period / ratio
    kappa = clock_period / t_u
    return ParallelBank(q=q, t_u=t_u, kappa=kappa, p_parallel=p_dec * ratio)


@dataclass(frozen=True)
class DecoderEstimate:
    area: float
    t_clk: float
    p_dec: float
    r_dec: float
    bank: ParallelBank


@dataclass(frozen=True)
class PhysicalModel:
    """Bundle of characterization tables, process constants and wire mode."""

    tables: NodeCharacterization
    proc: ProcessParams = ProcessParams()
    wire_mode: WireMode = WireMode.BEST

    def evaluate(self, a, g, d_v, d_c, n_min, r_data) -> DecoderEstimate:
        area = decoder_area_estimate(n_min, d_v, d_c, self.tables, a)
        t_clk = clock_period(a, g, d_v, d_c, self.tables, self.proc, area, self.wire_mode)
        p_dec = decoder_power(a, g, d_v, d_c, n_min, self.tables, self.proc, area, self.wire_mode)
        r_dec = decoder_throughput(a, g, d_v, d_c, n_min, t_clk)
        bank = parallel_power(p_dec, r_dec, r_data, t_clk)
        return DecoderEstimate(area, t_clk, p_dec, r_dec, bank)
