"""Inverse-Saleh linearization: analytic inverse, LUT realization, adaptation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .envelope import ComplexEnvelope
from .errors import AdaptationError, InvalidInputError, OutOfRangeError
from .saleh import OperatingPoint, SalehParams, am_pm, apply_hpa


class Mode(str, Enum):
    ANALYTIC = "analytic"
    LUT = "lut"


class ClampPolicy(str, Enum):
    CLAMP_TO_SATURATION = "clamp_to_saturation"
    REJECT = "reject"


@dataclass(frozen=True)
class LutTable:
    """Complex correction gains on a uniform modulus grid."""

    grid: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        gains = np.array(self.gains, dtype=np.complex128)
        if grid.ndim != 1 or grid.size < 2 or grid.shape != gains.shape:
            raise InvalidInputError("LUT needs >= 2 grid points and one gain per point")
        if np.any(np.diff(grid) <= 0):
            raise InvalidInputError("LUT grid must be strictly increasing")
        if not np.all(np.isfinite(gains)):
            raise InvalidInputError("LUT gains must be finite")
        grid.setflags(write=False)
        gains.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "gains", gains)

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def u_max(self) -> float:
        return float(self.grid[-1])

    def gain(self, u) -> np.ndarray:
        """Piecewise-linear interpolation of the complex gain at modulus ``u``."""
        u = np.asarray(u, dtype=float)
        return np.interp(u, self.grid, self.gains.real) + 1j * np.interp(u, self.grid, self.gains.imag)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "re_gain", "im_gain"])
        for u, g in zip(self.grid, self.gains):
            w.writerow([repr(float(u)), repr(float(g.real)), repr(float(g.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LutTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        grid = [float(r["u"]) for r in rows]
        gains = [complex(float(r["re_gain"]), float(r["im_gain"])) for r in rows]
        return cls(np.array(grid), np.array(gains))


@dataclass(frozen=True)
class PredistorterSpec:
    params: SalehParams = field(default_factory=SalehParams)
    mode: Mode = Mode.ANALYTIC
    clamp_policy: ClampPolicy = ClampPolicy.CLAMP_TO_SATURATION
    lut: LutTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "clamp_policy", ClampPolicy(self.clamp_policy))
        if (self.lut is not None) != (self.mode is Mode.LUT):
            raise InvalidInputError("a LUT must be given exactly when mode is 'lut'")


def _check_range(u: np.ndarray, p: SalehParams, clamp: ClampPolicy) -> np.ndarray:
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise InvalidInputError("modulus must be nonnegative")
    over = u > p.output_max
    if np.any(over) and ClampPolicy(clamp) is ClampPolicy.REJECT:
        raise OutOfRangeError(
            f"modulus {float(u[over].max()):.6g} exceeds the maximum amplifier output {p.output_max:.6g}"
        )
    return over


def am_am_inverse(u, p: SalehParams = SalehParams(), clamp: ClampPolicy = ClampPolicy.CLAMP_TO_SATURATION):
    """Smaller root of ``A(x) = u``.

    Evaluated as ``(2u/alpha_a) / (1 + sqrt(1 - z^2))`` with
    ``z = 2u/(A_s alpha_a)``, which equals
    ``(A_s^2 alpha_a / 2u) (1 - sqrt(1 - z^2))`` without the cancellation
    near u = 0 and has the limit 0 there. Moduli above the peak output map
    to A_s (clamp) or raise :class:`OutOfRangeError` (reject).
    """
    x = np.asarray(u, dtype=float)
    over = _check_range(x, p, clamp)
    z = np.minimum(x / p.output_max, 1.0)
    out = (2.0 * x / p.alpha_a) / (1.0 + np.sqrt(1.0 - z * z))
    out = np.where(over, p.input_sat, out)
    return float(out) if np.ndim(u) == 0 else out


def inverse_gain(u, p: SalehParams = SalehParams(), clamp: ClampPolicy = ClampPolicy.CLAMP_TO_SATURATION):
    """``am_am_inverse(u) / u`` with its u -> 0 limit ``1/alpha_a``."""
    x = np.asarray(u, dtype=float)
    over = _check_range(x, p, clamp)
    z = np.minimum(x / p.output_max, 1.0)
    g = (2.0 / p.alpha_a) / (1.0 + np.sqrt(1.0 - z * z))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = np.where(over, p.input_sat / x, g)
    return float(g) if np.ndim(u) == 0 else g


def pm_correction(u, p: SalehParams = SalehParams(), clamp: ClampPolicy = ClampPolicy.CLAMP_TO_SATURATION):
    """Phase pre-rotation cancelling the amplifier's AM/PM at the inverted drive."""
    psi = -np.asarray(am_pm(am_am_inverse(u, p, clamp), p))
    return float(psi) if np.ndim(u) == 0 else psi


def _pd_gain(u: np.ndarray, spec: PredistorterSpec) -> np.ndarray:
    p = spec.params
    if spec.mode is Mode.ANALYTIC:
        g = inverse_gain(u, p, spec.clamp_policy)
        return g * np.exp(1j * pm_correction(u, p, spec.clamp_policy))
    lut = spec.lut
    over = u > lut.u_max
    if np.any(over) and spec.clamp_policy is ClampPolicy.REJECT:
        raise OutOfRangeError(f"modulus {float(u[over].max()):.6g} exceeds the LUT range {lut.u_max:.6g}")
    g = lut.gain(u)
    if np.any(over):
        # hold the top entry's drive level and phase
        top = lut.gains[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(over, (abs(top) * lut.u_max / u) * np.exp(1j * np.angle(top)), g)
    return g


def apply_predistorter(env: ComplexEnvelope, spec: PredistorterSpec) -> ComplexEnvelope:
    x = env.samples
    return env.with_samples(x * _pd_gain(np.abs(x), spec))


def cascade_pd_hpa(env: ComplexEnvelope, spec: PredistorterSpec, op: OperatingPoint) -> ComplexEnvelope:
    """Predistorter followed by the amplifier at ``op``.

    The predistorter output is divided by the amplifier's input gain so the
    back-off gain and the nonlinearity are inverted together; below
    saturation the cascade is the identity.
    """
    pre = apply_predistorter(env, spec)
    return apply_hpa(pre.with_samples(pre.samples / op.input_gain), op)


def apply_postdistorter(
    env: ComplexEnvelope, spec: PredistorterSpec, op: OperatingPoint | None = None
) -> ComplexEnvelope:
    """Invert the amplifier after the fact.

    With ``op`` given, the amplifier's input gain is also removed so that
    ``apply_postdistorter(apply_hpa(e, op), spec, op) == e``.
    """
    out = apply_predistorter(env, spec)
    if op is None:
        return out
    return out.with_samples(out.samples / op.input_gain)


def build_lut(p: SalehParams = SalehParams(), size: int = 1024, u_max: float | None = None) -> LutTable:
    """Tabulate the analytic predistorter gain on ``size`` points over ``[0, u_max]``."""
    if size < 2:
        raise InvalidInputError(f"LUT size must be >= 2, got {size}")
    u_max = p.output_max if u_max is None else u_max
    if not 0 < u_max <= p.output_max:
        raise InvalidInputError(f"u_max must lie in (0, {p.output_max}]")
    grid = np.linspace(0.0, u_max, size)
    gains = inverse_gain(grid, p) * np.exp(1j * pm_correction(grid, p))
    return LutTable(grid, gains)


@dataclass(frozen=True)
class Adaptation:
    table: LutTable
    residual: float
    iterations: int
    history: tuple[float, ...]


def adapt_lut(
    lut: LutTable,
    hpa: Callable[[np.ndarray], np.ndarray],
    iterations: int,
    step: float,
    tol: float = 1e-13,
) -> Adaptation:
    """Refine LUT gains by feeding back the cascade's complex error.

    Each grid point u_k is probed through ``gain -> hpa``; the entry is
    updated as ``g += step * (u_k - y_k) / u_k``. The u = 0 entry is probed
    at a tiny modulus instead, since its cascade output is identically zero.
    Iteration stops early once the residual falls to ``tol``.
    """
    if not 0 < step <= 1:
        raise InvalidInputError(f"step must lie in (0, 1], got {step}")
    if iterations < 0:
        raise InvalidInputError("iterations must be >= 0")
    u = lut.grid
    probe = u.copy()
    tiny = 1e-9 * lut.u_max
    probe[probe < tiny] = tiny
    g = lut.gains.copy()

    def cascade(gains):
        return np.asarray(hpa(np.abs(gains) * probe)) * np.exp(1j * np.angle(gains))

    def residual(y):
        # u = 0 maps to 0 through any gain
        err = np.abs(y - probe)
        return float(np.max(np.where(u < tiny, 0.0, err)))

    y = cascade(g)
    res = residual(y)
    history = [res]
    grew = 0
    done = 0
    while done < iterations and res > tol:
        g = g + step * (probe - y) / probe
        y = cascade(g)
        new = residual(y)
        done += 1
        grew = grew + 1 if new > res else 0
        res = new
        history.append(res)
        if grew >= 3:
            raise AdaptationError(f"LUT adaptation diverged at iteration {done} (residual {res:.3g})")
    return Adaptation(LutTable(u, g), res, done, tuple(history))
