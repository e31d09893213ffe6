"""Regular-LDPC code parameters, blocklength bounds and code tables."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


def _check_degrees(d_v, d_c):
    if int(d_v) != d_v or int(d_c) != d_c:
        raise ValueError("degrees must be integers")
    if not (d_v >= 2 and d_c > d_v):
        raise ValueError(f"need d_c > d_v >= 2, got d_v={d_v}, d_c={d_c}")


def _check_girth(girth):
    if int(girth) != girth or girth < 4 or girth % 2:
        raise ValueError(f"girth must be an even integer >= 4, got {girth}")


@dataclass(frozen=True)
class CodeParams:
    d_v: int
    d_c: int
    girth: int
    n: int | None = None

    def __post_init__(self):
        _check_degrees(self.d_v, self.d_c)
        _check_girth(self.girth)
        if self.n is not None:
            if self.n < 1 or (self.n * self.d_v) % self.d_c:
                raise ValueError(f"n={self.n} is not compatible with ({self.d_v},{self.d_c})")

    @property
    def rate(self) -> float:
        return design_rate(self.d_v, self.d_c)

    @property
    def k(self) -> float | None:
        return None if self.n is None else self.n * self.rate

    @property
    def iterations(self) -> int:
        return max_indep_iters(self.girth)


def design_rate(d_v: int, d_c: int) -> float:
    _check_degrees(d_v, d_c)
    return 1.0 - d_v / d_c


def max_indep_iters(girth: int) -> int:
    """Number of iterations with independent incoming messages."""
    _check_girth(girth)
    return (girth - 2) // 4


def blocklength_bounds_from_girth(d_v: int, d_c: int, girth: int) -> tuple[int, int]:
    """(lower, upper) blocklength for a (d_v, d_c)-regular code of this girth."""
    _check_degrees(d_v, d_c)
    _check_girth(girth)
    lower = ((d_v - 1) * (d_c - 1)) ** max_indep_iters(girth)
    upper = math.ceil(2 * (d_v + d_c) * d_v * d_c * (2 * d_v * d_c + 1) ** (0.75 * girth))
    return lower, upper


def blocklength_lower_bound_pe(d_v: int, d_c: int, pe: float, p_t: float, eta: float) -> float:
    """Order-level lower bound on n needed for bit-error probability ``pe``.

    Valid in the regime eta * p_t >= 1.
    """
    _check_degrees(d_v, d_c)
    if not 0 < pe < 0.5:
        raise ValueError("pe must lie in (0, 0.5)")
    if eta <= 0 or p_t <= 0:
        raise ValueError("eta and p_t must be positive")
    snr = eta * p_t
    if snr < 1.0:
        raise ValueError(f"bound only established for eta * p_t >= 1 (got {snr:g})")
    log_inv_pe = -math.log(pe)
    slack = 1.0 + 9.0 * math.pi
    if d_v == 2:
        exponent = 1.0 / (snr * slack * (2.0 + 2.0 / math.log(d_c - 1)))
        return math.exp(exponent * log_inv_pe - 1.0)
    base = ((d_v - 2) / (d_v * (d_v - 1))) ** 2 * log_inv_pe / (slack * snr)
    power = (1.0 + math.log(d_c - 1) / math.log(d_v - 1)) / 2.0
    return base**power


def pseudoweight_upper_bound(d_v: int, d_c: int, n: float) -> float:
    """Upper bound on the minimum AWGN pseudoweight of a (d_v, d_c) code."""
    _check_degrees(d_v, d_c)
    if d_v < 3:
        raise ValueError("pseudoweight bound needs d_v >= 3")
    if n < 1:
        raise ValueError("n must be >= 1")
    lead = (d_v * (d_v - 1) / (d_v - 2)) ** 2
    return lead * n ** (2 * math.log(d_v - 1) / math.log((d_v - 1) * (d_c - 1)))


# --------------------------------------------------------------------------
# code tables


class CodeTableError(ValueError):
    pass


@dataclass(frozen=True)
class CodeTableRow:
    girth: int
    d_v: int
    d_c: int
    n_min: int
    graph_file: Path | None = None

    @property
    def params(self) -> CodeParams:
        return CodeParams(self.d_v, self.d_c, self.girth, self.n_min)


@dataclass(frozen=True)
class CodeTable:
    rows: tuple[CodeTableRow, ...]
    provenance: str = ""
    source: Path | None = None

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def lookup(self, girth: int, d_v: int, d_c: int) -> CodeTableRow:
        for row in self.rows:
            if (row.girth, row.d_v, row.d_c) == (girth, d_v, d_c):
                return row
        raise KeyError(f"no code with g={girth}, d_v={d_v}, d_c={d_c}")


def load_code_table(path) -> CodeTable:
    """Read ``girth,d_v,d_c,n_min[,graph_file]`` rows.

    Lines starting with ``#`` are comments; a ``# provenance: X`` comment
    sets the table provenance.  Graph paths are resolved relative to the
    table file.
    """
    path = Path(path)
    text = path.read_text()
    provenance = ""
    body = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("#"):
            tag = stripped.lstrip("#").strip()
            if tag.lower().startswith("provenance:"):
                provenance = tag.split(":", 1)[1].strip()
            continue
        if stripped:
            body.append((lineno, line))
    if not body:
        warnings.warn(f"code table {path} is empty", stacklevel=2)
        return CodeTable((), provenance, path)
    reader = csv.reader([line for _, line in body])
    header = [h.strip() for h in next(reader)]
    required = ["girth", "d_v", "d_c", "n_min"]
    if header[:4] != required or len(header) > 5 or (len(header) == 5 and header[4] != "graph_file"):
        raise CodeTableError(f"{path}: header must be girth,d_v,d_c,n_min[,graph_file]")
    rows, problems = [], []
    for (lineno, _), fields in zip(body[1:], reader):
        try:
            if len(fields) not in (4, 5):
                raise ValueError("wrong number of fields")
            g, dv, dc, n = (int(f) for f in fields[:4])
            graph = fields[4].strip() if len(fields) == 5 else ""
            CodeParams(dv, dc, g, n)  # validates degrees, girth, divisibility
            lower, _ = blocklength_bounds_from_girth(dv, dc, g)
            if n < lower:
                raise ValueError(f"n_min={n} is below the girth bound {lower}")
            rows.append(
                CodeTableRow(g, dv, dc, n, (path.parent / graph) if graph else None)
            )
        except ValueError as exc:
            problems.append(f"line {lineno}: {exc}")
    if problems:
        raise CodeTableError(f"{path}: rejected rows\n  " + "\n  ".join(problems))
    return CodeTable(tuple(rows), provenance, path)


def sample_code_table() -> CodeTable:
    ref = resources.files("totalpower") / "data" / "code_table_sample.csv"
    with resources.as_file(ref) as path:
        return load_code_table(path)
