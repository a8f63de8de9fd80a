"""MF-MSK transmission through a Saleh amplifier, with predistortion."""

__version__ = "0.1.0"

from .analysis import (
    BerBoundParams,
    PsdEstimate,
    baseline_ber,
    ber_bound,
    oob_power_ratio,
    psd_welch,
    q_exact,
    q_exp_bound,
    ser_bound,
)
from .envelope import ComplexEnvelope, PowerReport, measure_power, scale_to_peak, scale_to_power
from .errors import AdaptationError, InvalidInputError, OutOfRangeError
from .modem import ModemConfig, PhaseState, demodulate, map_bits, modulate, unmap_bits
from .predistort import (
    ClampPolicy,
    LutTable,
    Mode,
    PredistorterSpec,
    adapt_lut,
    am_am_inverse,
    apply_postdistorter,
    apply_predistorter,
    build_lut,
    cascade_pd_hpa,
    pm_correction,
)
from .saleh import (
    OperatingPoint,
    PmForm,
    SalehParams,
    SaturationPoint,
    am_am,
    am_pm,
    apply_hpa,
    input_gain_for_ibo,
    saturation,
)
from .sim import BerCurve, LinkConfig, PointCounts, add_awgn, run_point, sweep
