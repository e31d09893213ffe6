"""AWGN channel, modulation and noise math.

Maps transmit power to the hard-decision flip probability seen by the
decoder (and back), and gives the Shannon limit for the physical link.
Everything here is pure and stateless.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

BOLTZMANN = 1.380649e-23  # J/K
SPEED_OF_LIGHT = 3e8  # m/s, as used for the carrier wavelength


class ChannelMode(enum.Enum):
    ABSTRACT = "abstract"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class ChannelSpec:
    """AWGN channel with fixed attenuation.

    In abstract mode only ``eta`` is meaningful (Es/N0 = eta * P_T, BPSK).
    In physical mode the link is described by carrier frequency, bandwidth,
    temperature, path-loss exponent and distance.
    """

    mode: ChannelMode
    eta: float | None = None
    f_c: float | None = None
    bandwidth: float | None = None
    temperature: float | None = None
    alpha: float | None = None
    distance_r: float | None = None
    boltzmann: float = BOLTZMANN

    def __post_init__(self):
        if self.mode is ChannelMode.ABSTRACT:
            if self.eta is None or not self.eta > 0:
                raise ValueError("abstract channel needs eta > 0")
            return
        for name in ("f_c", "bandwidth", "temperature", "distance_r"):
            val = getattr(self, name)
            if val is None or not val > 0:
                raise ValueError(f"physical channel needs {name} > 0")
        if self.alpha is None or self.alpha < 0:
            raise ValueError("physical channel needs alpha >= 0")
        if self.distance_r < 10 * self.wavelength:
            warnings.warn(
                f"distance {self.distance_r} m is within 10 wavelengths; "
                "far-field path loss is not accurate here",
                stacklevel=3,
            )

    @classmethod
    def abstract(cls, eta: float) -> ChannelSpec:
        return cls(ChannelMode.ABSTRACT, eta=eta)

    @classmethod
    def physical(
        cls,
        f_c: float,
        bandwidth: float,
        temperature: float,
        alpha: float,
        distance_r: float,
    ) -> ChannelSpec:
        return cls(
            ChannelMode.PHYSICAL,
            f_c=f_c,
            bandwidth=bandwidth,
            temperature=temperature,
            alpha=alpha,
            distance_r=distance_r,
        )

    @property
    def wavelength(self) -> float:
        if self.f_c is None:
            raise ValueError("wavelength is undefined for an abstract channel")
        return SPEED_OF_LIGHT / self.f_c

    def with_distance(self, distance_r: float) -> ChannelSpec:
        self._require_physical()
        return ChannelSpec.physical(
            self.f_c, self.bandwidth, self.temperature, self.alpha, distance_r
        )

    def noise_and_loss(self) -> float:
        """Received-noise power referred to the transmitter, k*T*W*(r/wavelength)^alpha."""
        self._require_physical()
        return (
            self.boltzmann
            * self.temperature
            * self.bandwidth
            * (self.distance_r / self.wavelength) ** self.alpha
        )

    def _require_physical(self):
        if self.mode is not ChannelMode.PHYSICAL:
            raise ValueError("operation needs a physical-mode channel")


@dataclass(frozen=True)
class ModulationSpec:
    """BPSK (M=2) or square QAM whose side is an even integer."""

    M: int

    def __post_init__(self):
        if self.M == 2:
            return
        side = math.isqrt(self.M)
        if self.M < 4 or side * side != self.M or side % 2:
            raise ValueError(f"M={self.M} is neither 2 nor a square of an even integer")

    @property
    def bits_per_symbol(self) -> float:
        return math.log2(self.M)

    @property
    def is_bpsk(self) -> bool:
        return self.M == 2


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("argument must be finite")
    return arr


def _scalar_or_array(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x)."""
    arr = _check_finite(x)
    return _scalar_or_array(0.5 * special.erfc(arr / math.sqrt(2.0)))


def log_q_function(x):
    """Natural log of Q(x), accurate far into the tail."""
    arr = _check_finite(x)
    return _scalar_or_array(special.log_ndtr(-arr))


def q_inverse(p):
    """Inverse of Q on (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0) | (arr >= 1)):
        raise ValueError("Q inverse needs 0 < p < 1")
    return _scalar_or_array(-special.ndtri(arr))


def q_sandwich(x: float) -> tuple[float, float]:
    """Mills-ratio bounds (lower, upper) with lower <= Q(x) <= upper, for x > 0."""
    x = float(_check_finite(x))
    if x <= 0:
        raise ValueError("Mills-ratio bounds need x > 0")
    core = math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    return core / (x + 1 / x), core / x


def flip_prob_bpsk(es_n0):
    """Hard-decision BPSK flip probability Q(sqrt(2 Es/N0))."""
    arr = _check_finite(es_n0)
    if np.any(arr < 0):
        raise ValueError("Es/N0 must be non-negative")
    return q_function(np.sqrt(2.0 * arr))


def log_flip_prob_bpsk(es_n0):
    arr = _check_finite(es_n0)
    if np.any(arr < 0):
        raise ValueError("Es/N0 must be non-negative")
    return log_q_function(np.sqrt(2.0 * arr))


QAM_NORMALIZATIONS = ("verbatim", "corrected")


def flip_prob_qam(m: ModulationSpec, eb_n0, normalization: str = "verbatim"):
    """Gray-mapped square-QAM bit flip probability.

    ``normalization="verbatim"`` evaluates the double sum without a
    1/sqrt(M) prefactor (giving 2*Q(sqrt(2 Eb/N0)) at M=4).
    ``"corrected"`` applies the 1/sqrt(M) prefactor of the Cho-Yoon
    expression, which matches a Monte-Carlo Gray-mapped simulation.
    """
    if m.M == 2:
        raise ValueError("use flip_prob_bpsk for M=2")
    if normalization not in QAM_NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {QAM_NORMALIZATIONS}")
    arr = _check_finite(eb_n0)
    if np.any(arr < 0):
        raise ValueError("Eb/N0 must be non-negative")
    side = math.isqrt(m.M)
    bits_per_dim = math.log2(side)
    scale = np.sqrt(3.0 * arr * math.log2(m.M) / (m.M - 1))
    total = np.zeros_like(scale)
    # non-power-of-4 M: sum over the whole bit positions only
    for k in range(1, int(math.floor(bits_per_dim + 1e-12)) + 1):
        half = 2 ** (k - 1)
        j_max = int(math.floor((1 - 2.0**-k) * side - 1 + 1e-12))
        for j in range(j_max + 1):
            sign = -1.0 if (j * half // side) % 2 else 1.0
            weight = half - math.floor(j * half / side + 0.5)
            total = total + sign * weight * special.erfc(
                (2 * j + 1) * scale / math.sqrt(2.0)
            )  # 2 Q(z) = erfc(z / sqrt 2)
    p = total / bits_per_dim
    if normalization == "corrected":
        p = p / side
    return _scalar_or_array(np.clip(p, 0.0, 1.0))


def flip_prob(m: ModulationSpec, eb_n0, normalization: str = "verbatim"):
    """Dispatch to BPSK or QAM; for BPSK Eb/N0 equals Es/N0."""
    if m.is_bpsk:
        return flip_prob_bpsk(eb_n0)
    return flip_prob_qam(m, eb_n0, normalization)


def ebn0_from_system(p_t, spec: ChannelSpec, m: ModulationSpec):
    """Received Eb/N0 = P_T / (k T W (r/wavelength)^alpha log2 M)."""
    if spec.mode is not ChannelMode.PHYSICAL:
        raise ValueError("Eb/N0 from system parameters needs a physical-mode channel")
    arr = np.asarray(p_t, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("transmit power must be positive")
    return _scalar_or_array(arr / (spec.noise_and_loss() * m.bits_per_symbol))


def p_t_from_ebn0(eb_n0: float, spec: ChannelSpec, m: ModulationSpec) -> float:
    return eb_n0 * spec.noise_and_loss() * m.bits_per_symbol


def min_constellation(r_data: float, w: float, rate: float) -> ModulationSpec:
    """Smallest admissible constellation with M >= 2^(r_data / (w * rate))."""
    if r_data <= 0 or w <= 0:
        raise ValueError("data rate and bandwidth must be positive")
    if not 0 < rate <= 1:
        raise ValueError("code rate must lie in (0, 1]")
    need_bits = r_data / (w * rate)
    if need_bits <= 1 + 1e-12:
        return ModulationSpec(2)
    # M = side^2 >= 2^need_bits, side even
    side = math.ceil(2.0 ** (need_bits / 2) * (1 - 1e-12))
    side += side % 2
    return ModulationSpec(max(side, 2) ** 2)


def shannon_limit(spec: ChannelSpec, r_data: float) -> float:
    """Minimum P_T with W log2(1 + P_T / (k T W (r/wavelength)^alpha)) >= r_data."""
    if r_data <= 0:
        raise ValueError("data rate must be positive")
    if spec.mode is not ChannelMode.PHYSICAL:
        raise ValueError("Shannon limit needs a physical-mode channel")
    return spec.noise_and_loss() * math.expm1(r_data / spec.bandwidth * math.log(2))


def to_dbm(p_watts):
    arr = np.asarray(p_watts, dtype=float)
    with np.errstate(divide="ignore"):
        return _scalar_or_array(10.0 * np.log10(arr / 1e-3))


def from_dbm(dbm):
    return _scalar_or_array(1e-3 * 10.0 ** (np.asarray(dbm, dtype=float) / 10.0))
