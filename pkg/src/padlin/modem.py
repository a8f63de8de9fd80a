"""MF-MSK modem: M-ary full-response CPFSK with modulation index 1/2.

Each symbol interval carries a linear phase ramp (1REC frequency pulse), so
every interval is an MSK tone at one of the frequencies ``alpha / (4T)``.
With h = 1/2 the phase at symbol boundaries lives on the four points
``{0, pi/2, pi, 3pi/2}``, which is the trellis searched by ``demodulate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envelope import ComplexEnvelope
from .errors import InvalidInputError

MODULATION_INDEX = 0.5
N_PHASE_STATES = 4


def default_samples_per_symbol(M: int) -> int:
    if M <= 16:
        return 8
    # smallest power of two covering the widest tone, never below 16
    need = math.ceil((M - 1) * MODULATION_INDEX)
    return max(16, 1 << (need - 1).bit_length())


@dataclass(frozen=True)
class ModemConfig:
    """Alphabet and sampling of the MF-MSK signal.

    ``samples_per_symbol`` defaults to 8 for M <= 16 and 16 (or the Nyquist
    minimum, if larger) above that.
    """

    M: int = 16
    samples_per_symbol: int | None = None
    energy_per_symbol: float = 1.0
    h: float = MODULATION_INDEX

    def __post_init__(self):
        M = self.M
        if int(M) != M or M < 2 or (M & (M - 1)):
            raise InvalidInputError(f"M must be a power of two >= 2, got {M}")
        if self.h != MODULATION_INDEX:
            raise InvalidInputError(f"modulation index is fixed at 0.5, got {self.h}")
        if self.samples_per_symbol is None:
            object.__setattr__(self, "samples_per_symbol", default_samples_per_symbol(M))
        S = self.samples_per_symbol
        # widest tone is h(M-1)/(2T); sampling at S/T must exceed twice that
        if int(S) != S or S < max(2, math.ceil((M - 1) * self.h)):
            raise InvalidInputError(
                f"samples_per_symbol={S} too small for M={M} (need >= {max(2, math.ceil((M - 1) * self.h))})"
            )
        if not self.energy_per_symbol > 0:
            raise InvalidInputError("energy_per_symbol must be positive")

    @property
    def bits_per_symbol(self) -> int:
        return self.M.bit_length() - 1

    @property
    def N(self) -> float:
        """Number of frequencies, M = 4N."""
        return self.M / 4

    @property
    def amplitude(self) -> float:
        return math.sqrt(2.0 * self.energy_per_symbol)

    @property
    def levels(self) -> np.ndarray:
        return 2 * np.arange(self.M) - (self.M - 1)


@dataclass(frozen=True)
class PhaseState:
    """Accumulated phase at a symbol boundary, a multiple of pi/2."""

    theta: float = 0.0

    def __post_init__(self):
        q = self.theta / (math.pi / 2)
        if abs(q - round(q)) > 1e-9:
            raise InvalidInputError(f"theta={self.theta} is not a multiple of pi/2")
        object.__setattr__(self, "theta", (round(q) % 4) * math.pi / 2)

    @property
    def quarter(self) -> int:
        return round(self.theta / (math.pi / 2)) % 4

    @classmethod
    def from_quarter(cls, k: int) -> "PhaseState":
        return cls((k % 4) * math.pi / 2)


def _check_symbols(symbols, cfg: ModemConfig) -> np.ndarray:
    a = np.asarray(symbols)
    if a.ndim != 1:
        raise InvalidInputError("symbols must be one-dimensional")
    a = a.astype(np.int64)
    if np.any(a % 2 == 0) or np.any(np.abs(a) > cfg.M - 1):
        raise InvalidInputError(f"symbols must be odd integers with |a| <= {cfg.M - 1}")
    return a


def _gray(g: np.ndarray) -> np.ndarray:
    return g ^ (g >> 1)


def _inverse_gray(c: np.ndarray) -> np.ndarray:
    g = c.copy()
    shift = c >> 1
    while np.any(shift):
        g ^= shift
        shift >>= 1
    return g


def map_bits(bits, cfg: ModemConfig) -> np.ndarray:
    """Map bit groups (MSB first) to levels ``2g - (M-1)`` via Gray index ``g``."""
    b = np.asarray(bits, dtype=np.int64).ravel()
    k = cfg.bits_per_symbol
    if b.size % k:
        raise InvalidInputError(f"{b.size} bits is not a multiple of log2(M)={k}")
    if np.any((b != 0) & (b != 1)):
        raise InvalidInputError("bits must be 0 or 1")
    words = b.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    g = _inverse_gray(words)
    return 2 * g - (cfg.M - 1)


def unmap_bits(symbols, cfg: ModemConfig) -> np.ndarray:
    a = _check_symbols(symbols, cfg)
    k = cfg.bits_per_symbol
    words = _gray((a + cfg.M - 1) // 2)
    return ((words[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8).ravel()


def final_phase(symbols, cfg: ModemConfig, initial: PhaseState = PhaseState()) -> PhaseState:
    a = _check_symbols(symbols, cfg)
    return PhaseState.from_quarter(initial.quarter + int(np.sum(a % 4)))


def modulate(symbols, cfg: ModemConfig, initial: PhaseState = PhaseState()) -> ComplexEnvelope:
    """Generate the constant-envelope CPM waveform.

    Sample k of interval i sits at t = iT + (k+1)T/S, so the last sample of
    each interval lands exactly on the next boundary phase.
    """
    a = _check_symbols(symbols, cfg)
    S = cfg.samples_per_symbol
    # boundary phases in quarter turns, exact integers
    quarters = initial.quarter + np.concatenate(([0], np.cumsum(a % 4)[:-1])) if a.size else np.zeros(0)
    ramp = (np.arange(1, S + 1) / S) * (np.pi * cfg.h)
    phase = (np.asarray(quarters) % 4)[:, None] * (np.pi / 2) + a[:, None] * ramp[None, :]
    return ComplexEnvelope(cfg.amplitude * np.exp(1j * phase.ravel()), S)


def _branch_waveforms(cfg: ModemConfig) -> np.ndarray:
    S = cfg.samples_per_symbol
    ramp = (np.arange(1, S + 1) / S) * (np.pi * cfg.h)
    return np.exp(1j * cfg.levels[:, None] * ramp[None, :])


def demodulate(env: ComplexEnvelope, cfg: ModemConfig, initial: PhaseState = PhaseState()) -> np.ndarray:
    """Maximum-likelihood sequence detection over the 4-state phase trellis.

    Branch metric is ``Re<r_i, s(theta, a)>``; all branches have equal energy,
    so maximizing the summed correlation is ML in white Gaussian noise.
    The starting state is known; the final state is left free.
    """
    S = cfg.samples_per_symbol
    if env.samples_per_symbol != S or len(env) % S:
        raise InvalidInputError(
            f"envelope sampling ({env.samples_per_symbol}/symbol, {len(env)} samples) does not match modem S={S}"
        )
    n = len(env) // S
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    M = cfg.M
    r = env.samples.reshape(n, S)
    corr = r @ _branch_waveforms(cfg).conj().T  # (n, M)
    rot = np.exp(-1j * (np.pi / 2) * np.arange(N_PHASE_STATES))
    level_q = cfg.levels % 4
    # pred[s_next, a] = state that reaches s_next on level a
    pred = (np.arange(N_PHASE_STATES)[:, None] - level_q[None, :]) % 4
    flat_pred = pred * M + np.arange(M)[None, :]

    # branch[i, s, a] = Re(corr[i, a] * e^{-j s pi/2})
    branch = (corr[:, None, :] * rot[None, :, None]).real
    metric = np.full(N_PHASE_STATES, -np.inf)
    metric[initial.quarter] = 0.0
    back = np.empty((n, N_PHASE_STATES), dtype=np.int64)
    rows = np.arange(N_PHASE_STATES)
    for i in range(n):
        total = (metric[:, None] + branch[i]).ravel()
        cand = total[flat_pred]
        best = cand.argmax(axis=1)
        back[i] = flat_pred[rows, best]
        metric = cand[rows, best]

    decided = np.empty(n, dtype=np.int64)
    state = int(metric.argmax())
    for i in range(n - 1, -1, -1):
        prev, level = divmod(int(back[i, state]), M)
        decided[i] = level
        state = prev
    return cfg.levels[decided]
