"""Memoryless Saleh TWTA model with input back-off control."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .envelope import ComplexEnvelope
from .errors import InvalidInputError


class PmForm(str, Enum):
    # alpha_phi*u^2/(1+beta_phi*u^2), the usual Saleh fit
    CANONICAL_QUADRATIC = "canonical_quadratic"
    # alpha_phi*u/(1+beta_phi*u^2), linear numerator
    LINEAR_NUMERATOR = "linear_numerator"


@dataclass(frozen=True)
class SalehParams:
    alpha_a: float = 2.1587
    beta_a: float = 1.1517
    alpha_phi: float = 4.0033
    beta_phi: float = 9.1040
    pm_form: PmForm = PmForm.CANONICAL_QUADRATIC

    def __post_init__(self):
        object.__setattr__(self, "pm_form", PmForm(self.pm_form))
        for name in ("alpha_a", "beta_a", "beta_phi"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def input_sat(self) -> float:
        return 1.0 / math.sqrt(self.beta_a)

    @property
    def output_max(self) -> float:
        return self.alpha_a / (2.0 * math.sqrt(self.beta_a))


@dataclass(frozen=True)
class SaturationPoint:
    input_sat: float
    output_max: float


def _modulus(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise InvalidInputError("modulus must be nonnegative")
    return u


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def am_am(u, p: SalehParams = SalehParams()):
    """Output modulus ``alpha_a*u / (1 + beta_a*u^2)``."""
    x = _modulus(u)
    return _out(p.alpha_a * x / (1.0 + p.beta_a * x * x), u)


def am_am_saturation_form(u, p: SalehParams = SalehParams()):
    """Same curve written with the saturation amplitude A_s = 1/sqrt(beta_a)."""
    x = _modulus(u)
    As2 = 1.0 / p.beta_a
    return _out(As2 * p.alpha_a * x / (As2 + x * x), u)


def am_pm(u, p: SalehParams = SalehParams()):
    """Phase shift in radians added by the amplifier at input modulus ``u``."""
    x = _modulus(u)
    num = x * x if p.pm_form is PmForm.CANONICAL_QUADRATIC else x
    return _out(p.alpha_phi * num / (1.0 + p.beta_phi * x * x), u)


def saturation(p: SalehParams = SalehParams()) -> SaturationPoint:
    return SaturationPoint(p.input_sat, p.output_max)


def input_gain_for_ibo(ibo_db: float, p: SalehParams = SalehParams(), source_power: float = 1.0) -> float:
    """Linear gain placing a source of ``source_power`` at the requested back-off.

    IBO = 10 log10(P_sat / P_in) with P_sat = A_s^2.
    """
    if not source_power > 0:
        raise InvalidInputError(f"source power must be positive, got {source_power}")
    p_in = p.input_sat**2 / 10.0 ** (ibo_db / 10.0)
    return math.sqrt(p_in / source_power)


@dataclass(frozen=True)
class OperatingPoint:
    """Amplifier plus the input gain realizing its back-off.

    Build with :meth:`from_ibo`; ``ibo_db`` is then exact for an input of
    ``source_power``. A negative ``ibo_db`` (average drive above saturation)
    is only reachable through :meth:`from_gain`.
    """

    params: SalehParams
    ibo_db: float
    input_gain: float

    def __post_init__(self):
        if not self.input_gain > 0:
            raise InvalidInputError(f"input_gain must be positive, got {self.input_gain}")
        if not math.isfinite(self.ibo_db):
            raise InvalidInputError(f"ibo_db must be finite, got {self.ibo_db}")

    @classmethod
    def from_ibo(cls, params: SalehParams, ibo_db: float, source_power: float = 1.0) -> "OperatingPoint":
        if ibo_db < 0:
            raise InvalidInputError(f"ibo_db must be >= 0, got {ibo_db}")
        return cls(params, ibo_db, input_gain_for_ibo(ibo_db, params, source_power))

    @classmethod
    def from_gain(cls, params: SalehParams, input_gain: float, source_power: float) -> "OperatingPoint":
        ibo = 10.0 * math.log10(params.input_sat**2 / (input_gain**2 * source_power))
        return cls(params, ibo, input_gain)


def hpa_response(p: SalehParams = SalehParams()):
    """Complex response ``A(r) e^{j Phi(r)}`` to a real input modulus ``r``."""

    def response(r):
        return am_am(r, p) * np.exp(1j * np.asarray(am_pm(r, p)))

    return response


def apply_hpa(env: ComplexEnvelope, op: OperatingPoint) -> ComplexEnvelope:
    x = env.samples
    u = op.input_gain * np.abs(x)
    a = am_am(u, op.params)
    phi = am_pm(u, op.params)
    return env.with_samples(a * np.exp(1j * (np.angle(x) + phi)))
