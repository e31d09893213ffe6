"""Density evolution for hard-decision message passing on the BSC.

Gallager-A/B iterates are carried as natural logs so that the doubly
exponential decay of Gallager-B stays representable far below 1e-300.
Finite-alphabet (tabular) decoders evolve the full message distribution.

All evolution routines are vectorized over a leading "lane" axis so a
batch of channel flip probabilities can be pushed through together.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np

LOG_HALF = math.log(0.5)
UNDERFLOW_FLOOR = 1e-300
LOG_UNDERFLOW_FLOOR = math.log(UNDERFLOW_FLOOR)


class Algorithm(enum.Enum):
    GALLAGER_A = "A"
    GALLAGER_B = "B"
    TABULAR = "T"


@dataclass(frozen=True)
class Infeasible:
    """Marker returned when a target cannot be met."""

    reason: str = ""

    def __bool__(self):
        return False


def check_degrees(d_v: int, d_c: int):
    if int(d_v) != d_v or int(d_c) != d_c:
        raise ValueError("degrees must be integers")
    if not (d_v >= 2 and d_c > d_v):
        raise ValueError(f"need d_c > d_v >= 2, got d_v={d_v}, d_c={d_c}")


# --------------------------------------------------------------------------
# finite-alphabet message rules


@dataclass(frozen=True)
class MessageRule:
    """Symmetric finite-alphabet update rule.

    Messages are nonzero integers, positive meaning "bit is 0" under the
    all-zero codeword.  The check update folds ``cn_op`` over the incoming
    messages.  The variable update looks at ``I = channel_weight * y + sum``
    of incoming messages and maps ``(y, I)`` through ``vn_out``; ``I``
    outside the tabulated range saturates to the nearest tabulated entry.
    """

    alphabet: tuple[int, ...]
    channel_weight: int
    cn_op: dict
    vn_out: dict
    init: dict
    bits: int
    name: str = "tabular"
    provenance: str = ""

    def __post_init__(self):
        alph = tuple(sorted(self.alphabet))
        object.__setattr__(self, "alphabet", alph)
        if 0 in alph or set(alph) != {-a for a in alph}:
            raise ValueError("alphabet must be a sign-symmetric set of nonzero integers")
        for a, b in product(alph, repeat=2):
            if (a, b) not in self.cn_op:
                raise ValueError(f"check table is missing entry ({a}, {b})")
            out = self.cn_op[(a, b)]
            if out not in alph:
                raise ValueError(f"check output {out} is outside the alphabet")
            if self.cn_op[(b, a)] != out:
                raise ValueError("check table must be commutative")
            if self.cn_op[(-a, b)] != -out:
                raise ValueError(f"check table is not symmetric at ({a}, {b})")
        for a, b, c in product(alph, repeat=3):
            op = self.cn_op
            if op[(op[(a, b)], c)] != op[(a, op[(b, c)])]:
                raise ValueError("check table must be associative")
        for y in (1, -1):
            if y not in self.init or self.init[y] not in alph:
                raise ValueError("initial message map must cover y = +1 and y = -1")
        if self.init[-1] != -self.init[1]:
            raise ValueError("initial message map is not symmetric")
        ys = {y for y, _ in self.vn_out}
        if ys != {1, -1}:
            raise ValueError("variable table must have rows for y = +1 and y = -1")
        for (y, i), out in self.vn_out.items():
            if out not in alph:
                raise ValueError(f"variable output {out} is outside the alphabet")
            mirror = self.vn_out.get((-y, -i))
            if mirror is None or mirror != -out:
                raise ValueError(f"variable table is not symmetric at y={y}, I={i}")

    def key(self) -> tuple:
        return (
            self.alphabet,
            self.channel_weight,
            tuple(sorted(self.cn_op.items())),
            tuple(sorted(self.vn_out.items())),
            self.init[1],
        )

    def vn(self, y: int, i: int) -> int:
        keys = [k for (yy, k) in self.vn_out if yy == y]
        i = min(max(i, min(keys)), max(keys))
        return self.vn_out[(y, i)]

    @property
    def max_abs(self) -> int:
        return max(self.alphabet)

    @classmethod
    def gallager(cls, d_v: int, b: int) -> MessageRule:
        """Two-valued encoding of Gallager-B with flip threshold ``b``.

        ``b = d_v - 1`` gives Gallager-A.  The channel weight 2b - d_v makes
        ``I`` negative exactly when at least ``b`` of the ``d_v - 1``
        incoming messages disagree with ``y``.
        """
        weight = 2 * b - d_v
        span = abs(weight) + d_v
        cn = {(a, c): a * c for a, c in product((-1, 1), repeat=2)}
        vn = {}
        for y in (1, -1):
            for i in range(-span, span + 1):
                vn[(y, i)] = 1 if i > 0 else (-1 if i < 0 else y)
        return cls(
            alphabet=(-1, 1),
            channel_weight=weight,
            cn_op=cn,
            vn_out=vn,
            init={1: 1, -1: -1},
            bits=1,
            name="A" if b == d_v - 1 else f"B(b={b})",
            provenance="derived",
        )


def load_message_rule(path) -> MessageRule:
    """Parse a rule file.

    Format (``#`` starts a comment)::

        name two-bit
        provenance external
        bits 2
        alphabet -2 -1 1 2
        channel_weight 2
        init 1             # message sent for y=+1 before any check input
        cn a b out         # one row per ordered pair
        vn y I out         # rows for both signs of y
    """
    meta, cn, vn = {}, {}, {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        try:
            if key == "cn":
                a, b, out = map(int, vals)
                cn[(a, b)] = out
            elif key == "vn":
                y, i, out = map(int, vals)
                vn[(y, i)] = out
            elif key in ("alphabet",):
                meta[key] = tuple(int(v) for v in vals)
            elif key in ("channel_weight", "bits", "init"):
                (meta[key],) = (int(v) for v in vals)
            elif key in ("name", "provenance"):
                meta[key] = " ".join(vals)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    for required in ("alphabet", "channel_weight", "bits", "init"):
        if required not in meta:
            raise ValueError(f"{path}: missing {required!r}")
    return MessageRule(
        alphabet=meta["alphabet"],
        channel_weight=meta["channel_weight"],
        cn_op=cn,
        vn_out=vn,
        init={1: meta["init"], -1: -meta["init"]},
        bits=meta["bits"],
        name=meta.get("name", "tabular"),
        provenance=meta.get("provenance", ""),
    )


def two_bit_rule() -> MessageRule:
    """The packaged two-bit rule (C=2, S=2, W=1)."""
    ref = resources.files("totalpower") / "data" / "two_bit_rule.txt"
    with resources.as_file(ref) as path:
        return load_message_rule(path)


# --------------------------------------------------------------------------
# decoder rule


@dataclass(frozen=True)
class DecoderRule:
    algorithm: Algorithm
    b_threshold: int | None = None
    table: MessageRule | None = None
    message_bits: int = 1

    def __post_init__(self):
        if self.algorithm is Algorithm.TABULAR:
            if self.table is None:
                raise ValueError("tabular decoder needs a message rule")
            object.__setattr__(self, "message_bits", self.table.bits)
        elif self.table is not None:
            raise ValueError("only tabular decoders carry a message table")

    @classmethod
    def gallager_a(cls) -> DecoderRule:
        return cls(Algorithm.GALLAGER_A)

    @classmethod
    def gallager_b(cls, b: int | None = None) -> DecoderRule:
        return cls(Algorithm.GALLAGER_B, b_threshold=b)

    @classmethod
    def tabular(cls, table: MessageRule) -> DecoderRule:
        return cls(Algorithm.TABULAR, table=table)

    @classmethod
    def from_label(cls, label: str) -> DecoderRule:
        label = label.strip().upper()
        if label == "A":
            return cls.gallager_a()
        if label == "B":
            return cls.gallager_b()
        if label == "T":
            return cls.tabular(two_bit_rule())
        raise ValueError(f"unknown decoder label {label!r}")

    @property
    def label(self) -> str:
        return self.algorithm.value

    @property
    def alphabet_size(self) -> int:
        return 2 if self.table is None else len(self.table.alphabet)

    def flip_threshold(self, d_v: int) -> int | None:
        """Disagreeing checks needed to flip (A/B only); None means adaptive."""
        n = d_v - 1
        if self.algorithm is Algorithm.GALLAGER_A:
            return n
        if self.algorithm is not Algorithm.GALLAGER_B:
            raise ValueError("flip threshold is only defined for Gallager A/B")
        if self.b_threshold is not None:
            b = self.b_threshold
            if not (math.ceil(n / 2) <= b <= n):
                raise ValueError(f"b={b} outside [{math.ceil(n / 2)}, {n}] for d_v={d_v}")
            return b
        return None

    def message_rule(self, d_v: int) -> MessageRule:
        if self.table is not None:
            return self.table
        b = self.flip_threshold(d_v)
        if b is None:
            raise ValueError("adaptive Gallager-B has no fixed message table")
        return MessageRule.gallager(d_v, b)


# --------------------------------------------------------------------------
# Gallager A/B in the log domain


@lru_cache(maxsize=None)
def _log_comb(n: int, m: int) -> float:
    return math.log(math.comb(n, m))


def _scaled(k, logx):
    # k * log x with the convention 0 * log 0 = 0
    with np.errstate(invalid="ignore"):
        return np.where(k == 0, 0.0, k * logx)


def _log_check_error(logp, d_c: int):
    """log of (1 - (1 - 2p)^(d_c-1)) / 2, the check-message error probability."""
    k = d_c - 1
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        p = np.exp(logp)
        big = np.log(-np.expm1(k * np.log1p(-2.0 * p)) / 2.0)
        small = math.log(k) + logp
    return np.where(logp < -600.0, small, big)


def _adaptive_b(le, lc, logp0, log1mp0, d_v):
    n = d_v - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.ceil(((log1mp0 - logp0) / (lc - le) + n) / 2.0)
    b = np.where(np.isfinite(b) & (lc > le), b, n)
    return np.clip(b, math.ceil(d_v / 2), n)


def log_ab_step(logp, logp0, d_v: int, d_c: int, b):
    """One Gallager-B iteration in the log domain.

    A message flips the channel value when at least ``b`` of the d_v-1
    incoming check messages disagree with it.  ``b=None`` picks, per lane
    and per iteration, the smallest b for which flipping is the more likely
    correct decision (Gallager's adaptive choice); with d_v = 3 this is
    always b = 2, i.e. Gallager-A.  Returns log p_i, unclamped.
    """
    n = d_v - 1
    logp, logp0 = np.broadcast_arrays(
        np.asarray(logp, dtype=float), np.asarray(logp0, dtype=float)
    )
    m = np.arange(n + 1).reshape((-1,) + (1,) * logp.ndim)
    logc_nm = np.array([_log_comb(n, k) for k in range(n + 1)]).reshape(m.shape)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        le = _log_check_error(logp, d_c)
        lc = np.log1p(-np.exp(le))
        log1mp0 = np.log1p(-np.exp(logp0))
        if b is None:
            b = _adaptive_b(le, lc, logp0, log1mp0, d_v)
        b = np.asarray(b)
        # m = number of disagreeing checks
        wrong = logc_nm + _scaled(m, lc) + _scaled(n - m, le)  # channel bit wrong
        right = logc_nm + _scaled(m, le) + _scaled(n - m, lc)  # channel bit right
        log_stay = np.logaddexp.reduce(np.where(m < b, wrong, -np.inf), axis=0)
        log_flip = np.logaddexp.reduce(np.where(m >= b, right, -np.inf), axis=0)
        out = np.logaddexp(logp0 + log_stay, log1mp0 + log_flip)
    return out


def _lse(values) -> float:
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(sum(math.exp(v - top) for v in values))


def _log_ab_step_scalar(logp: float, logp0: float, d_v: int, d_c: int, b) -> float:
    """Pure-math twin of log_ab_step for single lanes (much lower overhead)."""
    n, k = d_v - 1, d_c - 1
    if logp < -600.0:
        le = math.log(k) + logp
    elif logp >= LOG_HALF:
        le = LOG_HALF
    else:
        le = math.log(-math.expm1(k * math.log1p(-2.0 * math.exp(logp))) / 2.0)
    lc = math.log1p(-math.exp(le))
    log1mp0 = math.log1p(-math.exp(logp0))
    if b is None:
        if lc > le and logp0 > -math.inf:
            b = math.ceil(((log1mp0 - logp0) / (lc - le) + n) / 2.0)
            b = min(max(b, math.ceil(d_v / 2)), n)
        else:
            b = n

    def term(m, l_dis, l_agr):
        out = _log_comb(n, m)
        if m:
            out += m * l_dis
        if n - m:
            out += (n - m) * l_agr
        return out

    stay = _lse([term(m, lc, le) for m in range(b)])
    flip = _lse([term(m, le, lc) for m in range(b, n + 1)])
    return _lse([logp0 + stay, log1mp0 + flip])


def adaptive_b_schedule(p0: float, d_v: int, d_c: int, iters: int) -> list[int]:
    """Flip thresholds the adaptive Gallager-B rule uses in iterations 1..iters."""
    check_degrees(d_v, d_c)
    _check_prob(p0, "p0")
    n = d_v - 1
    logp0 = float(_safe_log(p0))
    cur, out = logp0, []
    for _ in range(iters):
        le = float(_log_check_error(np.float64(cur), d_c))
        lc = math.log1p(-math.exp(le))
        if lc > le and logp0 > -math.inf:
            b = math.ceil(((math.log1p(-p0) - logp0) / (lc - le) + n) / 2.0)
            b = min(max(b, math.ceil(d_v / 2)), n)
        else:
            b = n
        out.append(b)
        cur = min(_log_ab_step_scalar(cur, logp0, d_v, d_c, b), LOG_HALF)
    return out


def _check_prob(p, name="probability"):
    if not (0.0 <= p <= 0.5):
        raise ValueError(f"{name} must lie in [0, 0.5], got {p}")


def _safe_log(p):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(p, dtype=float))


def gallager_a_step(p_prev: float, p0: float, d_v: int, d_c: int) -> float:
    """Gallager-A message error probability after one more iteration."""
    check_degrees(d_v, d_c)
    _check_prob(p_prev, "p_prev")
    _check_prob(p0, "p0")
    out = log_ab_step(_safe_log(p_prev), _safe_log(p0), d_v, d_c, d_v - 1)
    return float(min(max(np.exp(out), 0.0), 0.5))


def gallager_b_step(p_prev: float, p0: float, d_v: int, d_c: int, b: int | None = None) -> float:
    """Gallager-B update; flips when at least ``b`` of the d_v-1 checks disagree.

    Not clamped: for small ``b`` the value can exceed 1/2.
    """
    check_degrees(d_v, d_c)
    _check_prob(p_prev, "p_prev")
    _check_prob(p0, "p0")
    b = DecoderRule.gallager_b(b).flip_threshold(d_v)
    if b is None:
        lp = np.float64(_safe_log(p_prev))
        le = _log_check_error(lp, d_c)
        with np.errstate(divide="ignore"):
            b = int(_adaptive_b(le, np.log1p(-np.exp(le)), _safe_log(p0), np.log1p(-p0), d_v))
    if b == d_v - 1:
        # unanimous flipping is Gallager A; share its rounding and clamp
        return gallager_a_step(p_prev, p0, d_v, d_c)
    return float(np.exp(log_ab_step(_safe_log(p_prev), _safe_log(p0), d_v, d_c, b)))


# --------------------------------------------------------------------------
# tabular evolution


class _TabularKernel:
    """Precomputed linear maps for one (rule, d_v, d_c)."""

    def __init__(self, rule: MessageRule, d_v: int, d_c: int):
        self.rule = rule
        self.d_v, self.d_c = d_v, d_c
        alph = rule.alphabet
        self.size = len(alph)
        index = {a: j for j, a in enumerate(alph)}
        self.neg = np.array([a < 0 for a in alph])
        # check pairwise combination as a (A*A, A) 0/1 matrix
        cmat = np.zeros((self.size * self.size, self.size))
        for (ia, a), (ib, b) in product(enumerate(alph), repeat=2):
            cmat[ia * self.size + ib, index[rule.cn_op[(a, b)]]] = 1.0
        self.cmat = cmat
        # integer grid for message sums
        self.amax = rule.max_abs
        self.sum_span = (d_v - 1) * self.amax
        grid = np.arange(-self.sum_span, self.sum_span + 1)
        self.vmat = {}
        for y in (1, -1):
            vm = np.zeros((grid.size, self.size))
            for g, s in enumerate(grid):
                vm[g, index[rule.vn(y, rule.channel_weight * y + int(s))]] = 1.0
            self.vmat[y] = vm
        self.pos_of = np.array([a + self.amax for a in alph])
        self.init_plus = index[rule.init[1]]
        self.init_minus = index[rule.init[-1]]

    def initial(self, p0):
        p0 = np.atleast_1d(np.asarray(p0, dtype=float))
        dist = np.zeros((p0.size, self.size))
        dist[:, self.init_plus] += 1.0 - p0
        dist[:, self.init_minus] += p0
        return dist

    def check(self, dist):
        lanes = dist.shape[0]
        out = dist
        for _ in range(self.d_c - 2):
            outer = out[:, :, None] * dist[:, None, :]
            out = outer.reshape(lanes, -1) @ self.cmat
        return out

    def variable(self, cdist, p0):
        lanes = cdist.shape[0]
        width = 2 * self.amax + 1
        single = np.zeros((lanes, width))
        single[:, self.pos_of] = cdist
        total = np.zeros((lanes, 1))
        total[:, 0] = 1.0
        for _ in range(self.d_v - 1):
            nxt = np.zeros((lanes, total.shape[1] + width - 1))
            for j in self.pos_of:
                nxt[:, j : j + total.shape[1]] += total * single[:, j : j + 1]
            total = nxt
        p0 = np.asarray(p0, dtype=float).reshape(-1, 1)
        return (1.0 - p0) * (total @ self.vmat[1]) + p0 * (total @ self.vmat[-1])

    def step(self, dist, p0):
        out = self.variable(self.check(dist), p0)
        # total mass is raised to the ((d_c-1)(d_v-1))th power each step, so
        # rounding drift in the sum would grow geometrically without this
        return out / out.sum(axis=1, keepdims=True)

    def error(self, dist):
        return dist[:, self.neg].sum(axis=1)


def tabular_de_step(dist, p0: float, rule: DecoderRule | MessageRule, d_v: int, d_c: int):
    """Exact one-iteration evolution of a message distribution.

    ``dist`` is ordered like ``rule.alphabet`` (ascending).
    """
    check_degrees(d_v, d_c)
    _check_prob(p0, "p0")
    table = rule if isinstance(rule, MessageRule) else rule.message_rule(d_v)
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (len(table.alphabet),) or abs(dist.sum() - 1.0) > 1e-9 or np.any(dist < 0):
        raise ValueError("dist must be a probability vector over the alphabet")
    kern = _TabularKernel(table, d_v, d_c)
    return kern.step(dist[None, :], p0)[0]


# --------------------------------------------------------------------------
# batch evolution shared by run / threshold / min_iterations


@dataclass
class _BatchResult:
    log_err: np.ndarray  # final (or first-hit) log error per lane
    hit: np.ndarray  # bool, reached target
    iters: np.ndarray  # iteration index at which target was hit (-1 if never)


def evolve_batch(
    rule: DecoderRule,
    p0,
    d_v: int,
    d_c: int,
    max_iters: int,
    log_target: float = -np.inf,
    history: bool = False,
):
    """Evolve many p0 lanes together.

    Each lane stops once its log error is <= ``log_target``, once it sinks
    under the 1e-300 floor, or once it provably cannot improve further.
    Returns a _BatchResult and, if ``history`` is set, the per-lane list of
    log errors.
    """
    check_degrees(d_v, d_c)
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    if np.any((p0 < 0) | (p0 > 0.5)):
        raise ValueError("p0 must lie in [0, 0.5]")
    lanes = p0.size
    logp0 = _safe_log(p0)
    if lanes == 1 and not history and rule.algorithm is not Algorithm.TABULAR:
        return _evolve_single(rule, float(logp0[0]), d_v, d_c, max_iters, log_target)
    hit_iter = np.full(lanes, -1)
    hist = [[float(v)] for v in logp0] if history else None
    tabular = rule.algorithm is Algorithm.TABULAR
    if tabular:
        kern = _TabularKernel(rule.message_rule(d_v), d_v, d_c)
        state = kern.initial(p0)
        with np.errstate(divide="ignore"):
            cur = np.log(kern.error(state))
    else:
        b = rule.flip_threshold(d_v)
        cur = logp0.copy()
    done = cur <= log_target
    hit_iter[done] = 0
    done |= cur < LOG_UNDERFLOW_FLOOR
    active = np.flatnonzero(~done)
    for t in range(1, max_iters + 1):
        if active.size == 0:
            break
        if tabular:
            new_state = kern.step(state[active], p0[active])
            with np.errstate(divide="ignore"):
                new = np.log(kern.error(new_state))
            stuck = np.max(np.abs(new_state - state[active]), axis=1) == 0.0
            state[active] = new_state
        else:
            new = np.minimum(log_ab_step(cur[active], logp0[active], d_v, d_c, b), LOG_HALF)
            # monotone map: once a lane stops decreasing it never will
            stuck = new >= cur[active]
        cur[active] = new
        if history:
            for lane, v in zip(active, new):
                hist[lane].append(float(v))
        reached = new <= log_target
        hit_iter[active[reached]] = t
        finished = reached | stuck | (new < LOG_UNDERFLOW_FLOOR)
        active = active[~finished]
    result = _BatchResult(log_err=cur, hit=hit_iter >= 0, iters=hit_iter)
    return (result, hist) if history else result


def _evolve_single(rule, logp0, d_v, d_c, max_iters, log_target):
    b = rule.flip_threshold(d_v)
    cur, hit = logp0, -1
    if cur <= log_target:
        hit = 0
    else:
        for t in range(1, max_iters + 1):
            if cur < LOG_UNDERFLOW_FLOOR:
                break
            new = min(_log_ab_step_scalar(cur, logp0, d_v, d_c, b), LOG_HALF)
            stuck = new >= cur
            cur = new
            if cur <= log_target:
                hit = t
                break
            if stuck:
                break
    return _BatchResult(
        log_err=np.array([cur]), hit=np.array([hit >= 0]), iters=np.array([hit])
    )


@dataclass
class DETrajectory:
    p0: float
    log_iterates: np.ndarray
    converged: bool
    dists: list = field(default_factory=list)

    @property
    def iterates(self) -> np.ndarray:
        """Error probabilities p_0, p_1, ... (underflows to 0 below ~1e-308)."""
        return np.exp(self.log_iterates)

    @property
    def final(self) -> float:
        return float(np.exp(self.log_iterates[-1]))


def de_run(rule: DecoderRule, p0: float, d_v: int, d_c: int, max_iters: int) -> DETrajectory:
    """Apply ``max_iters`` iterations (fewer if the iterate drops under 1e-300)."""
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")
    check_degrees(d_v, d_c)
    _check_prob(p0, "p0")
    logs = [float(_safe_log(p0))]
    dists = []
    if rule.algorithm is Algorithm.TABULAR:
        kern = _TabularKernel(rule.message_rule(d_v), d_v, d_c)
        state = kern.initial(p0)
        dists.append(state[0].copy())
        for _ in range(max_iters):
            if logs[-1] < LOG_UNDERFLOW_FLOOR:
                break
            state = kern.step(state, p0)
            dists.append(state[0].copy())
            with np.errstate(divide="ignore"):
                logs.append(float(np.log(kern.error(state)[0])))
    else:
        b = rule.flip_threshold(d_v)
        logp0 = logs[0]
        for _ in range(max_iters):
            if logs[-1] < LOG_UNDERFLOW_FLOOR:
                break
            nxt = _log_ab_step_scalar(logs[-1], logp0, d_v, d_c, b)
            logs.append(min(nxt, LOG_HALF))
    converged = logs[-1] < LOG_UNDERFLOW_FLOOR
    return DETrajectory(p0=p0, log_iterates=np.array(logs), converged=converged, dists=dists)


def min_iterations(
    rule: DecoderRule,
    p0: float,
    target_pe: float,
    d_v: int,
    d_c: int,
    cap: int = 10_000,
) -> int | Infeasible:
    """Smallest t with p_t <= target_pe, or Infeasible within ``cap``."""
    if not 0 < target_pe < 0.5:
        raise ValueError("target_pe must lie in (0, 0.5)")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    _check_prob(p0, "p0")
    res = min_iterations_batch(rule, p0, math.log(target_pe), d_v, d_c, cap)
    t = int(res[0])
    return t if t >= 0 else Infeasible(f"p_t stays above {target_pe:g} for {cap} iterations")


def min_iterations_batch(rule, p0, log_target: float, d_v, d_c, cap: int) -> np.ndarray:
    """Vectorized min_iterations on a log target; -1 marks infeasible lanes."""
    return evolve_batch(rule, p0, d_v, d_c, cap, log_target=log_target).iters


def log_error_after(rule, p0, d_v, d_c, iters: int) -> np.ndarray:
    """log p_iters for each lane (lanes under the 1e-300 floor stop early)."""
    return evolve_batch(rule, p0, d_v, d_c, iters).log_err


# --------------------------------------------------------------------------
# threshold


THRESHOLD_LO = 1e-6
THRESHOLD_HI = 0.5
THRESHOLD_CAP = 10_000
THRESHOLD_TOL = 1e-9
THRESHOLD_SUCCESS = 1e-12


class NoThresholdError(RuntimeError):
    pass


def _converges(rule, p0s, d_v, d_c):
    res = evolve_batch(
        rule, p0s, d_v, d_c, THRESHOLD_CAP, log_target=math.log(THRESHOLD_SUCCESS)
    )
    return res.hit


_THRESHOLD_CACHE: dict = {}


def threshold(rule: DecoderRule, d_v: int, d_c: int, tol: float = THRESHOLD_TOL) -> float:
    """Cached wrapper around :func:`threshold_search`."""
    table_key = rule.table.key() if rule.table is not None else None
    key = (rule.algorithm, rule.b_threshold, table_key, d_v, d_c, tol)
    if key not in _THRESHOLD_CACHE:
        _THRESHOLD_CACHE[key] = threshold_search(rule, d_v, d_c, tol)
    return _THRESHOLD_CACHE[key]


def threshold_search(rule: DecoderRule, d_v: int, d_c: int, tol: float = THRESHOLD_TOL) -> float:
    """Largest p0 in [1e-6, 0.5] whose iterates fall below 1e-12 within 1e4 iterations.

    A 64-point scan first checks that success is monotone in p0; when it
    is not, the largest succeeding scan point is refined by an exhaustive
    scan of its neighbourhood instead of plain bisection.
    """
    check_degrees(d_v, d_c)
    lo, hi = THRESHOLD_LO, THRESHOLD_HI
    scan = np.linspace(lo, hi, 64)
    ok = _converges(rule, scan, d_v, d_c)
    if not ok[0]:
        raise NoThresholdError(f"no convergence even at p0={lo:g}")
    if ok[-1]:
        return hi
    monotone = not np.any(ok[1:] & ~ok[:-1])
    last = int(np.flatnonzero(ok)[-1])
    lo, hi = scan[last], scan[last + 1]
    if monotone:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _converges(rule, [mid], d_v, d_c)[0]:
                lo = mid
            else:
                hi = mid
        return float(lo)
    # non-monotone: refine by repeated dense scans of the last bracket
    while hi - lo > tol:
        grid = np.linspace(lo, hi, 65)
        good = _converges(rule, grid, d_v, d_c)
        j = int(np.flatnonzero(good)[-1]) if good.any() else 0
        lo, hi = grid[j], grid[min(j + 1, 64)]
    return float(lo)
