import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from padlin.envelope import ComplexEnvelope, measure_power
from padlin.errors import InvalidInputError
from padlin.saleh import (
    OperatingPoint,
    PmForm,
    SalehParams,
    am_am,
    am_am_saturation_form,
    am_pm,
    apply_hpa,
    input_gain_for_ibo,
    saturation,
)

P = SalehParams()
LINEAR = SalehParams(pm_form=PmForm.LINEAR_NUMERATOR)


def _mp_am_am(u):
    mp.dps = 40
    u = mpf(u)
    return float(mpf("2.1587") * u / (1 + mpf("1.1517") * u**2))


def test_defaults():
    assert (P.alpha_a, P.beta_a, P.alpha_phi, P.beta_phi) == (2.1587, 1.1517, 4.0033, 9.1040)
    assert P.pm_form is PmForm.CANONICAL_QUADRATIC


@pytest.mark.parametrize("u", [0.0, 0.1, 0.5, 1.0, 3.0])
def test_am_am_against_extended_precision(u):
    assert am_am(u) == pytest.approx(_mp_am_am(u), rel=1e-15)


def test_am_am_reference_points():
    assert am_am(0.0) == 0.0
    assert am_am(1.0) == pytest.approx(1.003254, abs=1e-6)
    s = saturation()
    assert s.input_sat == pytest.approx(0.93182, abs=1e-5)
    assert s.output_max == pytest.approx(1.00575, abs=1e-5)
    assert am_am(s.input_sat) == pytest.approx(s.output_max, rel=1e-15)


def test_am_pm_reference_points():
    assert am_pm(0.0) == 0.0 and am_pm(0.0, LINEAR) == 0.0
    assert am_pm(1.0) == pytest.approx(0.39621, abs=1e-5)
    assert am_pm(1e6) == pytest.approx(0.43973, abs=1e-5)
    assert am_pm(1.0, LINEAR) == pytest.approx(4.0033 / 10.104, rel=1e-14)
    assert am_pm(2.0, LINEAR) == pytest.approx(4.0033 * 2 / (1 + 9.104 * 4), rel=1e-14)


def test_negative_modulus_rejected():
    with pytest.raises(InvalidInputError):
        am_am(-0.1)
    with pytest.raises(InvalidInputError):
        am_pm(np.array([0.2, -1.0]))


@pytest.mark.parametrize("field", ["alpha_a", "beta_a", "beta_phi"])
def test_param_invariants(field):
    with pytest.raises(InvalidInputError):
        SalehParams(**{field: -1.0})


def test_unit_saturation():
    assert saturation(SalehParams(beta_a=1.0)).input_sat == 1.0


def test_saturation_is_maximum():
    s = saturation()
    for eps in (1e-3, -1e-3):
        assert am_am(s.input_sat * (1 + eps)) < s.output_max


def test_two_forms_agree():
    u = np.linspace(0, 4 * P.input_sat, 10_000)
    a, b = am_am(u), am_am_saturation_form(u)
    np.testing.assert_allclose(a[1:], b[1:], rtol=1e-14)
    assert a[0] == b[0] == 0.0


def test_monotone_pieces():
    As = P.input_sat
    rising = np.diff(am_am(np.linspace(0, As, 20_001)))
    falling = np.diff(am_am(np.linspace(As, 6 * As, 20_001)))
    assert np.all(rising > 0)
    assert np.all(falling < 0)


@pytest.mark.parametrize(
    "ibo, expected", [(0.0, 0.93182), (5.0, 0.52400)]
)
def test_gain_for_ibo(ibo, expected):
    assert input_gain_for_ibo(ibo, P, 1.0) == pytest.approx(expected, abs=1e-5)


def test_gain_for_ibo_decreases():
    g = [input_gain_for_ibo(i, P) for i in np.linspace(0, 60, 61)]
    assert np.all(np.diff(g) < 0) and g[-1] < 1e-3


def test_gain_for_ibo_realizes_backoff():
    env = ComplexEnvelope(np.random.default_rng(0).standard_normal(64) * 3, 4)
    p_src = measure_power(env).average_power
    op = OperatingPoint.from_ibo(P, 7.0, p_src)
    p_in = measure_power(env.with_samples(env.samples * op.input_gain)).average_power
    assert 10 * np.log10(P.input_sat**2 / p_in) == pytest.approx(7.0, abs=1e-12)


def test_gain_for_ibo_bad_power():
    with pytest.raises(InvalidInputError):
        input_gain_for_ibo(3.0, P, 0.0)


def test_operating_point_invariants():
    with pytest.raises(InvalidInputError):
        OperatingPoint.from_ibo(P, -1.0)
    with pytest.raises(InvalidInputError):
        OperatingPoint(P, 1.0, 0.0)
    overdriven = OperatingPoint.from_gain(P, 1.0, 2.0)
    assert overdriven.ibo_db == pytest.approx(10 * np.log10(P.input_sat**2 / 2.0))
    assert overdriven.ibo_db < 0


def _unity(params=P):
    return OperatingPoint.from_gain(params, 1.0, 0.5)


def test_zero_envelope():
    out = apply_hpa(ComplexEnvelope(np.zeros(8), 4), _unity())
    np.testing.assert_array_equal(out.samples, 0)


def test_constant_modulus_at_half():
    x = 0.5 * np.exp(1j * np.linspace(0, 6, 32))
    out = apply_hpa(ComplexEnvelope(x, 4), _unity())
    np.testing.assert_allclose(np.abs(out.samples), 0.838053458081798, rtol=1e-14)
    np.testing.assert_allclose(np.angle(out.samples / x), 0.30550213675213675, rtol=1e-13)


def test_hpa_complex_response():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    op = OperatingPoint.from_ibo(P, 3.0, 2.0)
    u = op.input_gain * np.abs(x)
    expected = am_am(u) * np.exp(1j * (np.angle(x) + am_pm(u)))
    np.testing.assert_allclose(apply_hpa(ComplexEnvelope(x, 4), op).samples, expected, rtol=1e-14)


@given(st.floats(-np.pi, np.pi), st.integers(0, 2**31))
def test_phase_covariance(phi, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    op = _unity()
    a = apply_hpa(ComplexEnvelope(x, 4), op).samples
    b = apply_hpa(ComplexEnvelope(x * np.exp(1j * phi), 4), op).samples
    np.testing.assert_allclose(b, a * np.exp(1j * phi), atol=1e-12)


@given(st.floats(0, 20), st.sampled_from(list(PmForm)))
def test_constant_modulus_preserved(r, form):
    x = r * np.exp(1j * np.linspace(0, 9, 64))
    out = np.abs(apply_hpa(ComplexEnvelope(x, 4), _unity(SalehParams(pm_form=form))).samples)
    assert np.ptp(out) <= 1e-12 * max(1.0, out.max())


def test_output_never_exceeds_peak():
    u = np.concatenate((np.linspace(0, 50, 100_001), [1e3, 1e6]))
    assert np.max(am_am(u)) <= P.output_max
