"""Experiment configuration documents (JSON) for the command-line runner."""

from __future__ import annotations

import hashlib
import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import InvalidInputError
from .modem import ModemConfig
from .predistort import ClampPolicy, Mode, PredistorterSpec, build_lut
from .saleh import OperatingPoint, PmForm, SalehParams
from .sim import LinkConfig


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SalehSection(_Section):
    alpha_a: float = Field(2.1587, gt=0)
    beta_a: float = Field(1.1517, gt=0)
    alpha_phi: float = 4.0033
    beta_phi: float = Field(9.1040, gt=0)
    pm_form: PmForm = PmForm.CANONICAL_QUADRATIC

    def build(self) -> SalehParams:
        return SalehParams(**self.model_dump())


class ModemSection(_Section):
    M: int = 16
    samples_per_symbol: int | None = None
    energy_per_symbol: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _valid(self):
        try:
            self.build()
        except InvalidInputError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self) -> ModemConfig:
        return ModemConfig(self.M, self.samples_per_symbol, self.energy_per_symbol)


class PredistorterSection(_Section):
    mode: Mode = Mode.ANALYTIC
    clamp_policy: ClampPolicy = ClampPolicy.CLAMP_TO_SATURATION
    lut_size: int = Field(1024, ge=2)


class LinkSection(_Section):
    ebno_db: list[float] = Field(default_factory=lambda: [float(v) for v in range(0, 15, 2)], min_length=1)
    symbols_per_point: int = Field(100_000, ge=1)
    block_symbols: int = Field(10_000, ge=1)
    seed: int = Field(1, ge=0, lt=2**64)
    drive_level: float = Field(0.9, gt=0, le=1)
    ibo_db: float = Field(5.0, ge=0)
    workers: int = Field(1, ge=1)


class SimulateSection(_Section):
    ibo_values: list[float] = Field(default_factory=lambda: [5.0, 7.0, 9.0])
    linear: bool = True
    predistorted: bool = True

    @field_validator("ibo_values")
    @classmethod
    def _nonneg(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("IBO values must be >= 0")
        return v


class BoundsSection(_Section):
    n_values: list[int] = Field(default_factory=lambda: [1, 4, 16], min_length=1)
    ebno_start: float = 0.0
    ebno_stop: float = 14.0
    ebno_step: float = Field(1.0, gt=0)
    d_min_sq: float = Field(2.0, gt=0)
    q: Literal["exact", "exp_bound"] = "exact"
    compare_m: int = 16

    @field_validator("n_values")
    @classmethod
    def _pow2(cls, v):
        for n in v:
            if n < 1 or n & (n - 1):
                raise ValueError(f"N must be a power of two >= 1, got {n}")
        return v

    def grid(self) -> list[float]:
        n = int(round((self.ebno_stop - self.ebno_start) / self.ebno_step))
        return [round(self.ebno_start + i * self.ebno_step, 12) for i in range(n + 1)]


class TraceSection(_Section):
    u_max: float = Field(2.0, gt=0)
    points: int = Field(1001, ge=2)


class PsdSection(_Section):
    n_symbols: int = Field(2048, ge=1)
    samples_per_symbol: int | None = None
    segment: int = Field(4096, ge=2)
    overlap: float = Field(0.5, ge=0, lt=1)
    drive: float = Field(1.2, gt=0)
    band_edge: float | None = None
    seed: int = Field(1, ge=0, lt=2**64)


class ExperimentConfig(_Section):
    saleh: SalehSection = Field(default_factory=SalehSection)
    modem: ModemSection = Field(default_factory=ModemSection)
    predistorter: PredistorterSection = Field(default_factory=PredistorterSection)
    link: LinkSection = Field(default_factory=LinkSection)
    simulate: SimulateSection = Field(default_factory=SimulateSection)
    bounds: BoundsSection = Field(default_factory=BoundsSection)
    trace: TraceSection = Field(default_factory=TraceSection)
    psd: PsdSection = Field(default_factory=PsdSection)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    def fingerprint(self) -> str:
        """SHA-256 of the canonical document; worker count is excluded since it cannot change results."""
        doc = self.model_dump(mode="json")
        del doc["link"]["workers"]
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def saleh_params(self) -> SalehParams:
        return self.saleh.build()

    def predistorter_spec(self) -> PredistorterSpec:
        p = self.saleh_params()
        pd = self.predistorter
        lut = build_lut(p, pd.lut_size) if pd.mode is Mode.LUT else None
        return PredistorterSpec(p, pd.mode, pd.clamp_policy, lut)

    def link_config(self) -> LinkConfig:
        lk = self.link
        return LinkConfig(
            modem=self.modem.build(),
            hpa=OperatingPoint.from_ibo(self.saleh_params(), lk.ibo_db),
            ebno_db_grid=tuple(lk.ebno_db),
            symbols_per_point=lk.symbols_per_point,
            seed=lk.seed,
            drive_level=lk.drive_level,
            block_symbols=lk.block_symbols,
        )


class ConfigError(InvalidInputError):
    """Configuration document could not be parsed or validated."""


def _describe(exc: ValidationError) -> str:
    err = exc.errors()[0]
    path = ".".join(str(p) for p in err["loc"]) or "<root>"
    return f"{path}: {err['msg']}"


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{dotted}: '{k}' is not a section")
        node = nxt
    node[keys[-1]] = value


def parse_override(item: str) -> tuple[str, object]:
    """Split ``key=value``; the value is read as JSON, falling back to a string."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def parse_config(text: str = "", overrides: list[str] | None = None) -> ExperimentConfig:
    """Validate a JSON document, filling defaults; ``overrides`` win over the file."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<document>: invalid JSON ({exc.msg} at line {exc.lineno} column {exc.colno})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>: top level must be an object")
    for item in overrides or []:
        _set_path(doc, *parse_override(item))
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None
