"""Complex baseband envelopes and power metrics.

All amplitudes are dimensionless and time is normalized to the symbol
period, so ``samples_per_symbol`` is also the sample rate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class ComplexEnvelope:
    """Immutable discrete complex envelope.

    Attributes:
        samples: complex128 samples, read-only.
        samples_per_symbol: samples per symbol interval, at least 2.
        symbol_period: informational; all math uses T = 1.
    """

    samples: np.ndarray
    samples_per_symbol: int
    symbol_period: float = 1.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128).ravel()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if int(self.samples_per_symbol) != self.samples_per_symbol or self.samples_per_symbol < 2:
            raise InvalidInputError(f"samples_per_symbol must be an integer >= 2, got {self.samples_per_symbol}")
        object.__setattr__(self, "samples_per_symbol", int(self.samples_per_symbol))
        if s.size % self.samples_per_symbol:
            raise InvalidInputError(
                f"{s.size} samples is not a multiple of samples_per_symbol={self.samples_per_symbol}"
            )

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n_symbols(self) -> int:
        return self.samples.size // self.samples_per_symbol

    def with_samples(self, samples: np.ndarray) -> "ComplexEnvelope":
        return ComplexEnvelope(samples, self.samples_per_symbol, self.symbol_period)

    def to_csv(self) -> str:
        """Debug dump with columns ``index,re,im``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, z in enumerate(self.samples):
            w.writerow([i, repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, samples_per_symbol: int) -> "ComplexEnvelope":
        rows = list(csv.DictReader(io.StringIO(text)))
        rows.sort(key=lambda r: int(r["index"]))
        samples = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        return cls(samples, samples_per_symbol)


@dataclass(frozen=True)
class PowerReport:
    average_power: float
    peak_power: float
    papr_db: float = field(init=False)

    def __post_init__(self):
        if self.average_power > 0:
            papr = 10.0 * np.log10(self.peak_power / self.average_power)
        else:
            papr = float("nan")
        object.__setattr__(self, "papr_db", float(papr))


def measure_power(env: ComplexEnvelope) -> PowerReport:
    if len(env) == 0:
        raise InvalidInputError("cannot measure the power of an empty envelope")
    p = env.samples.real**2 + env.samples.imag**2
    return PowerReport(float(np.mean(p)), float(np.max(p)))


def scale_to_power(env: ComplexEnvelope, target: float) -> ComplexEnvelope:
    """Scale ``env`` by a real gain so its average power equals ``target``."""
    if target < 0:
        raise InvalidInputError(f"target power must be >= 0, got {target}")
    current = measure_power(env).average_power
    if current == 0:
        if target > 0:
            raise InvalidInputError("cannot scale a zero-power envelope to a positive power")
        return env
    if target == current:
        return env
    return env.with_samples(env.samples * np.sqrt(target / current))


def scale_to_peak(env: ComplexEnvelope, peak_modulus: float) -> ComplexEnvelope:
    """Scale ``env`` so its largest modulus equals ``peak_modulus``."""
    peak = np.sqrt(measure_power(env).peak_power)
    if peak == 0:
        raise InvalidInputError("cannot scale a zero envelope to a positive peak")
    return env.with_samples(env.samples * (peak_modulus / peak))


def band_limit(env: ComplexEnvelope, cutoff: float, numtaps: int | None = None) -> ComplexEnvelope:
    """Low-pass filter ``env`` to ``|f| <= cutoff`` (cycles per symbol).

    Uses a linear-phase Kaiser FIR aligned so the output has the same length
    as the input (group delay removed).
    """
    from scipy.signal import firwin

    fs = env.samples_per_symbol
    if not 0 < cutoff < fs / 2:
        raise InvalidInputError(f"cutoff {cutoff} outside (0, {fs / 2})")
    if numtaps is None:
        numtaps = 16 * fs + 1
    taps = firwin(numtaps, cutoff, window=("kaiser", 8.6), fs=fs)
    return env.with_samples(np.convolve(env.samples, taps, mode="same"))
