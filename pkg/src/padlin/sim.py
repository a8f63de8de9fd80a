"""Seeded Monte Carlo link simulation and sweeps.

Every symbol block draws bits and noise from its own Philox stream keyed on
``(seed, point_index, block_index)``, so counts do not depend on execution
order or on how many worker processes run the sweep.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from .analysis import BerBoundParams, PsdEstimate, ber_bound
from .envelope import ComplexEnvelope, measure_power
from .errors import InvalidInputError
from .modem import ModemConfig, PhaseState, demodulate, map_bits, modulate, unmap_bits
from .predistort import PredistorterSpec, cascade_pd_hpa
from .saleh import OperatingPoint, apply_hpa


def block_rng(seed: int, point_index: int, block_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, point_index, block_index])))


def add_awgn(env: ComplexEnvelope, esno_db: float, rng: np.random.Generator) -> ComplexEnvelope:
    """Add circular Gaussian noise at the given Es/N0.

    Per-sample variance is ``P_avg * S / (Es/N0)``, ``P_avg`` measured on
    ``env``. ``esno_db = inf`` returns ``env`` unchanged (and draws nothing).
    """
    p_avg = measure_power(env).average_power
    if math.isinf(esno_db) and esno_db > 0:
        return env
    var = p_avg * env.samples_per_symbol / 10.0 ** (esno_db / 10.0)
    n = len(env)
    noise = rng.standard_normal((2, n))
    return env.with_samples(env.samples + math.sqrt(var / 2.0) * (noise[0] + 1j * noise[1]))


def _jsonable(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@dataclass(frozen=True)
class LinkConfig:
    """One simulated link: modem -> [predistorter] -> [amplifier] -> AWGN.

    ``hpa.ibo_db`` is applied relative to the measured power of the
    drive-scaled signal; its ``input_gain`` is recomputed per run.
    """

    modem: ModemConfig = field(default_factory=ModemConfig)
    hpa: OperatingPoint | None = None
    pd: PredistorterSpec | None = None
    ebno_db_grid: tuple[float, ...] = (10.0,)
    symbols_per_point: int = 100_000
    seed: int = 1
    drive_level: float = 0.9
    block_symbols: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "ebno_db_grid", tuple(float(v) for v in self.ebno_db_grid))
        if self.symbols_per_point < 1 or self.block_symbols < 1:
            raise InvalidInputError("symbols_per_point and block_symbols must be >= 1")
        if self.pd is not None and self.hpa is None:
            raise InvalidInputError("a predistorter requires an amplifier")
        if not 0 < self.drive_level <= 1:
            raise InvalidInputError(f"drive_level must lie in (0, 1], got {self.drive_level}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = _jsonable(asdict(self))
        if self.pd is not None and self.pd.lut is not None:
            d["pd"]["lut"] = {"size": self.pd.lut.size, "u_max": self.pd.lut.u_max}
        return d

    def fingerprint(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_ibo(self, ibo_db: float) -> "LinkConfig":
        if self.hpa is None:
            raise InvalidInputError("no amplifier to set the back-off of")
        return replace(self, hpa=OperatingPoint.from_ibo(self.hpa.params, ibo_db))


@dataclass(frozen=True)
class PointCounts:
    ebno_db: float
    bit_errors: int
    bits_sent: int
    symbol_errors: int
    symbols_sent: int

    def __add__(self, other: "PointCounts") -> "PointCounts":
        if other.ebno_db != self.ebno_db:
            raise InvalidInputError("cannot merge counts from different Eb/N0 points")
        return PointCounts(
            self.ebno_db,
            self.bit_errors + other.bit_errors,
            self.bits_sent + other.bits_sent,
            self.symbol_errors + other.symbol_errors,
            self.symbols_sent + other.symbols_sent,
        )

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.symbols_sent


def channel_input(symbols, cfg: LinkConfig) -> ComplexEnvelope:
    """Modulated, drive-scaled, optionally predistorted and amplified signal."""
    env = modulate(symbols, cfg.modem)
    if cfg.hpa is None:
        peak = cfg.drive_level
    else:
        peak = cfg.drive_level * cfg.hpa.params.output_max
    env = env.with_samples(env.samples * (peak / cfg.modem.amplitude))
    if cfg.hpa is None:
        return env
    op = OperatingPoint.from_ibo(cfg.hpa.params, cfg.hpa.ibo_db, measure_power(env).average_power)
    if cfg.pd is None:
        return apply_hpa(env, op)
    return cascade_pd_hpa(env, cfg.pd, op)


def run_block(cfg: LinkConfig, ebno_db: float, point_index: int, block_index: int, n_symbols: int) -> PointCounts:
    rng = block_rng(cfg.seed, point_index, block_index)
    k = cfg.modem.bits_per_symbol
    bits = rng.integers(0, 2, size=n_symbols * k, dtype=np.uint8)
    symbols = map_bits(bits, cfg.modem)
    tx = channel_input(symbols, cfg)
    rx = add_awgn(tx, ebno_db + 10.0 * math.log10(k), rng)
    decided = demodulate(rx, cfg.modem, PhaseState())
    bit_errors = int(np.count_nonzero(unmap_bits(decided, cfg.modem) != bits))
    return PointCounts(ebno_db, bit_errors, bits.size, int(np.count_nonzero(decided != symbols)), n_symbols)


def run_point(cfg: LinkConfig, ebno_db: float, point_index: int = 0) -> PointCounts:
    """Simulate ``cfg.symbols_per_point`` symbols at one Eb/N0.

    Eb/N0 is referenced to the signal entering the noise channel.
    """
    total = PointCounts(float(ebno_db), 0, 0, 0, 0)
    n = cfg.symbols_per_point
    for b, start in enumerate(range(0, n, cfg.block_symbols)):
        total = total + run_block(cfg, float(ebno_db), point_index, b, min(cfg.block_symbols, n - start))
    return total


@dataclass(frozen=True)
class BerCurve:
    points: tuple[PointCounts, ...]
    config: LinkConfig
    label: str = ""
    complete: bool = True

    @property
    def metadata(self) -> dict:
        return {"label": self.label, "fingerprint": self.config.fingerprint(), "seed": self.config.seed}

    def bounds(self) -> list[float | None]:
        M = self.config.modem.M
        if M < 4:
            return [None] * len(self.points)
        p = BerBoundParams(N=M // 4)
        return [ber_bound(p, pt.ebno_db) for pt in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ebno_db", "bits", "bit_errors", "ber", "symbols", "symbol_errors", "ser", "bound"])
        for pt, bound in zip(self.points, self.bounds()):
            w.writerow(
                [
                    repr(pt.ebno_db),
                    pt.bits_sent,
                    pt.bit_errors,
                    repr(pt.ber),
                    pt.symbols_sent,
                    pt.symbol_errors,
                    repr(pt.ser),
                    "" if bound is None else repr(bound),
                ]
            )
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            **self.metadata,
            "complete": self.complete,
            "config": self.config.to_dict(),
            "points": [asdict(p) for p in self.points],
        }


class SweepError(RuntimeError):
    """A sweep point failed; ``partial`` holds curves with the finished points."""

    def __init__(self, message: str, partial: list[BerCurve]):
        super().__init__(message)
        self.partial = partial


def _task(args):
    cfg, ebno, idx = args
    return run_point(cfg, ebno, idx)


def sweep(cfg: LinkConfig, variable: str, values, workers: int = 1) -> list[BerCurve]:
    """Run an Eb/N0 sweep (one curve) or an IBO sweep (one curve per IBO).

    Streams are keyed on the Eb/N0 grid index, so curves for different IBO
    values see identical bits and noise.
    """
    values = [float(v) for v in values]
    if not values:
        raise InvalidInputError("sweep needs at least one value")
    if variable == "ebno":
        configs = [(replace(cfg, ebno_db_grid=tuple(values)), "")]
    elif variable == "ibo":
        configs = [(cfg.with_ibo(v), f"ibo={v:g}") for v in values]
    else:
        raise InvalidInputError(f"unknown sweep variable {variable!r}")

    tasks = [(c, e, i) for c, _ in configs for i, e in enumerate(c.ebno_db_grid)]
    results: list[PointCounts | None] = [None] * len(tasks)
    error = None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_task, t) for t in tasks]
            for j, fut in enumerate(futures):
                try:
                    results[j] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported with partial results
                    error = error or exc
    else:
        for j, t in enumerate(tasks):
            try:
                results[j] = _task(t)
            except Exception as exc:  # noqa: BLE001
                error = exc
                break

    curves = []
    j = 0
    for c, label in configs:
        pts = results[j : j + len(c.ebno_db_grid)]
        j += len(c.ebno_db_grid)
        done = tuple(p for p in pts if p is not None)
        curves.append(BerCurve(done, c, label, complete=len(done) == len(pts)))
    if error is not None:
        raise SweepError(f"sweep aborted: {error}", curves) from error
    return curves


@dataclass(frozen=True)
class RegrowthResult:
    linear: PsdEstimate
    hpa: PsdEstimate
    pd: PsdEstimate
    band_edge: float
    oob_linear_db: float
    oob_hpa_db: float
    oob_pd_db: float


def regrowth_signal(modem: ModemConfig, n_symbols: int, seed: int) -> ComplexEnvelope:
    """MF-MSK band-limited to ``|f| <= M/4`` per symbol rate, so its envelope fluctuates.

    Constant-envelope MF-MSK passes a memoryless amplifier with no spectral
    regrowth at all, hence the filtering.
    """
    from .envelope import band_limit

    rng = block_rng(seed, 0, 0)
    symbols = modem.levels[rng.integers(0, modem.M, n_symbols)]
    return band_limit(modulate(symbols, modem), modem.M / 4)


def spectral_regrowth(
    modem: ModemConfig,
    pd: PredistorterSpec,
    n_symbols: int = 2048,
    seed: int = 1,
    drive: float = 1.2,
    segment: int = 4096,
    overlap: float = 0.5,
    band_edge: float | None = None,
) -> RegrowthResult:
    """Compare spectra of a linear, an amplified, and a predistorted+amplified signal.

    The test signal's peak is set to ``drive * U_out_max`` and enters the
    chain with unity amplifier input gain.
    """
    from .analysis import oob_power_ratio, psd_welch
    from .envelope import scale_to_peak

    p = pd.params
    x = scale_to_peak(regrowth_signal(modem, n_symbols, seed), drive * p.output_max)
    op = OperatingPoint.from_gain(p, 1.0, measure_power(x).average_power)
    y_hpa = apply_hpa(x, op)
    y_pd = cascade_pd_hpa(x, pd, op)
    edge = modem.M / 2 if band_edge is None else band_edge
    psds = [psd_welch(e, segment, overlap) for e in (x, y_hpa, y_pd)]
    return RegrowthResult(*psds, edge, *(oob_power_ratio(s, edge) for s in psds))
