"""Closed-form error bounds, baseline modulations, and spectral measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import signal as sps
from scipy.special import erfc

from .envelope import ComplexEnvelope
from .errors import InvalidInputError


class QVariant(str, Enum):
    EXACT = "exact"
    EXP_BOUND = "exp_bound"


def q_exact(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt 2) / 2``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(x) == 0 else out


def q_exp_bound(x):
    """Chernoff-style upper bound ``exp(-x^2/2) / 2`` for x >= 0."""
    v = np.asarray(x, dtype=float)
    if np.any(v < 0):
        raise InvalidInputError("q_exp_bound is only an upper bound for x >= 0")
    out = 0.5 * np.exp(-0.5 * v * v)
    return float(out) if np.ndim(x) == 0 else out


_Q = {QVariant.EXACT: q_exact, QVariant.EXP_BOUND: q_exp_bound}


@dataclass(frozen=True)
class BerBoundParams:
    """MF-MSK bound parameters; ``M = 4N``."""

    N: int = 4
    d_min_sq: float = 2.0
    ebno_db: tuple[float, ...] = field(default_factory=lambda: tuple(float(v) for v in range(15)))
    q: QVariant = QVariant.EXACT

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1 or (int(self.N) & (int(self.N) - 1)):
            raise InvalidInputError(f"N must be a power of two >= 1, got {self.N}")
        if not self.d_min_sq > 0:
            raise InvalidInputError("d_min_sq must be positive")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "q", QVariant(self.q))
        object.__setattr__(self, "ebno_db", tuple(float(v) for v in self.ebno_db))

    @property
    def M(self) -> int:
        return 4 * self.N

    @property
    def es_over_eb(self) -> float:
        return 2.0 + math.log2(self.N)


def _db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def ser_q_argument(p: BerBoundParams, ebno_db):
    """``sqrt(d^2 Es/N0)`` with ``Es = Eb (2 + log2 N)``."""
    esno = _db(ebno_db) * p.es_over_eb
    return np.sqrt(p.d_min_sq * esno)


def ber_q_argument(p: BerBoundParams, ebno_db):
    return np.sqrt(p.d_min_sq * _db(ebno_db) * (2.0 + math.log2(p.N)))


def ser_bound(p: BerBoundParams, ebno_db):
    """Union bound ``(M-2) Q(sqrt(d^2 Es/N0))`` on symbol error, clipped to 1."""
    out = np.minimum((p.M - 2) * _Q[p.q](ser_q_argument(p, ebno_db)), 1.0)
    return float(out) if np.ndim(ebno_db) == 0 else out


def ber_bound(p: BerBoundParams, ebno_db):
    """Bit error bound ``(2N-1) Q(sqrt(d^2 (Eb/N0)(2 + log2 N)))``, clipped to 0.5."""
    out = np.minimum((2 * p.N - 1) * _Q[p.q](ber_q_argument(p, ebno_db)), 0.5)
    return float(out) if np.ndim(ebno_db) == 0 else out


def baseline_ber(scheme: str, M: int, ebno_db):
    """Gray-coded high-SNR approximations for MPSK and square MQAM."""
    if int(M) != M or M < 4 or (M & (M - 1)):
        raise InvalidInputError(f"M must be a power of two >= 4, got {M}")
    k = math.log2(M)
    g = _db(ebno_db)
    if scheme == "mpsk":
        out = (2.0 / k) * q_exact(np.sqrt(2.0 * k * g) * math.sin(math.pi / M))
    elif scheme == "mqam":
        if int(k) % 2:
            raise InvalidInputError(f"square QAM needs an even number of bits, got M={M}")
        out = (4.0 / k) * (1.0 - 1.0 / math.sqrt(M)) * q_exact(np.sqrt(3.0 * k * g / (M - 1)))
    else:
        raise InvalidInputError(f"unknown scheme {scheme!r}")
    return float(out) if np.ndim(ebno_db) == 0 else out


@dataclass(frozen=True)
class PsdEstimate:
    """Two-sided PSD; frequencies in cycles per symbol, ascending."""

    frequencies: np.ndarray
    density: np.ndarray
    resolution: float

    @property
    def total_power(self) -> float:
        return float(np.sum(self.density) * self.resolution)

    def density_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.density)


def psd_welch(env: ComplexEnvelope, segment: int = 1024, overlap: float = 0.5) -> PsdEstimate:
    """Hann-windowed Welch estimate normalized so ``sum(density) * df`` is the mean power."""
    n = len(env)
    if segment < 2 or segment > n:
        raise InvalidInputError(f"segment length {segment} must lie in [2, {n}]")
    if not 0 <= overlap < 1:
        raise InvalidInputError(f"overlap must lie in [0, 1), got {overlap}")
    fs = float(env.samples_per_symbol)  # frequencies in cycles per symbol
    f, pxx = sps.welch(
        env.samples,
        fs=fs,
        window="hann",
        nperseg=segment,
        noverlap=int(round(overlap * segment)),
        return_onesided=False,
        detrend=False,
        scaling="density",
    )
    f = np.fft.fftshift(f)
    pxx = np.fft.fftshift(pxx)
    return PsdEstimate(f, np.maximum(pxx, 0.0), fs / segment)


def oob_power_ratio(psd: PsdEstimate, band_edge: float) -> float:
    """Out-of-band share in dB; bins with ``|f| >= band_edge`` count as out of band."""
    fmax = float(np.max(np.abs(psd.frequencies)))
    if not 0 <= band_edge <= fmax:
        raise InvalidInputError(f"band edge {band_edge} outside [0, {fmax}]")
    total = float(np.sum(psd.density))
    if total <= 0:
        raise InvalidInputError("PSD carries no power")
    out = float(np.sum(psd.density[np.abs(psd.frequencies) >= band_edge]))
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(out / total))
