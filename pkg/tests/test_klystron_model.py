import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qklyst import klystron_model as km
from qklyst.constants import ELECTRON_MASS, ELEMENTARY_CHARGE, EPSILON_0, HBAR, SPEED_OF_LIGHT
from qklyst.errors import PhysicalValidityError
from qklyst.oracle import random_params

DESIGN_GAMMA = 4.0934720057236635
OMEGA_1GHZ = 2 * math.pi * 1e9


@pytest.fixture
def reference():
    """1 GHz, 1 mm gap at the gain peak, A = 1 cm^2, N = 1e6, V = 1 cm^3, n = 1000."""
    v = OMEGA_1GHZ * 1e-3 / (2 * DESIGN_GAMMA)
    return km.KlystronParams(
        omega=OMEGA_1GHZ, d=1e-3, v=v, quant_volume=1e-6, effective_area=1e-4,
        N=1e6, n=1000, box_length=1.0,
    )


# values evaluated at 40 digits with mpmath from the closed forms
REF_STIMULATED = 3.252601731124299114e92
REF_SPONTANEOUS = 7.809411942677732989e91
REF_TOTAL = 4.033542925392072413e92


def test_transit_angle():
    assert km.transit_angle(2, 1, 1) == 1
    assert km.transit_angle(2, 1, 0.5) == 2
    with pytest.raises(ValueError):
        km.transit_angle(-1, 1, 1)


def test_transit_angle_design_velocity():
    v = OMEGA_1GHZ * 1e-3 / (2 * 4.09)
    assert v == pytest.approx(7.68e5, rel=1e-3)
    assert km.transit_angle(OMEGA_1GHZ, 1e-3, v) == pytest.approx(4.09, rel=1e-14)


def test_gain_factor_first_lobe_peak():
    assert km.gain_factor(4.09) == pytest.approx(0.843, abs=0.002)


def test_gain_factor_zeros():
    assert km.gain_factor(math.pi) == 0.0
    assert km.gain_factor(0.0) == 0.0
    for k in range(1, 8):
        assert km.gain_factor(k * math.pi) == 0.0


def test_gain_factor_at_one():
    with mpmath.workdps(40):
        ref = float((1 / mpmath.tan(1) - 1) * mpmath.sin(1) ** 4)
    assert ref == pytest.approx(-0.17945, abs=1e-4)
    assert km.gain_factor(1.0) == pytest.approx(ref, rel=1e-14)


def test_gain_factor_rejects_nonfinite():
    with pytest.raises(ValueError):
        km.gain_factor(math.inf)


def test_gain_factor_series_branch_matches_closed_form():
    for x in (1e-3, -1e-3, 0.999999e-3):
        a = km._gain_series(x)
        b = km._gain_closed(x)
        assert abs(a - b) <= 1e-10 * abs(b)


@given(st.floats(1e-6, 3.0))
def test_gain_factor_matches_extended_precision(x):
    with mpmath.workdps(50):
        ref = (x * mpmath.cot(x) - 1) * mpmath.sin(x) ** 4
    assert km.gain_factor(x) == pytest.approx(float(ref), rel=1e-12)


def test_gain_factor_negative_below_pi():
    xs = np.linspace(1e-4, math.pi - 1e-4, 20001)
    assert np.all(km.gain_factor(xs) < 0)


def test_gain_factor_array_shape():
    out = km.gain_factor(np.array([[1.0, 2.0], [4.09, math.pi]]))
    assert out.shape == (2, 2)
    assert out[1, 1] == 0.0


# --- parameters


def test_params_capacitance_from_area():
    p = km.KlystronParams(omega=1e9, d=1e-3, v=1e6, quant_volume=1e-6, effective_area=1e-4)
    assert p.C == pytest.approx(EPSILON_0 * 1e-4 / 1e-3, rel=1e-15)


def test_params_validation():
    with pytest.raises(ValueError):
        km.KlystronParams(omega=1e9, d=1e-3, v=1e6, quant_volume=1e-6)
    with pytest.raises(ValueError):
        km.KlystronParams(omega=1e9, d=0, v=1e6, quant_volume=1e-6, capacitance=1e-12)
    with pytest.raises(PhysicalValidityError):
        km.KlystronParams(omega=1e9, d=1e-3, v=0.2 * SPEED_OF_LIGHT, quant_volume=1e-6, capacitance=1e-12)
    with pytest.raises(PhysicalValidityError):
        km.KlystronParams(omega=1e15, d=1e-3, v=1e4, quant_volume=1e-6, capacitance=1e-12)


def test_params_warnings():
    with pytest.warns(km.ModelValidityWarning, match="v/c"):
        km.KlystronParams(omega=1e9, d=1e-3, v=0.05 * SPEED_OF_LIGHT, quant_volume=1e-6, capacitance=1e-12)
    v = math.sqrt(HBAR * 1e13 / (ELECTRON_MASS * 0.2))
    with pytest.warns(km.ModelValidityWarning, match="alpha"):
        km.KlystronParams(omega=1e13, d=1e-3, v=v, quant_volume=1e-6, capacitance=1e-12)


def test_derived_members(reference):
    p = reference
    assert p.J0 == pytest.approx(ELEMENTARY_CHARGE * p.v * 1e6 / 1e-6, rel=1e-15)
    assert p.E_p == pytest.approx(1000 * HBAR * OMEGA_1GHZ, rel=1e-15)
    assert p.gamma == pytest.approx(DESIGN_GAMMA, rel=1e-14)
    assert p.k == pytest.approx(ELECTRON_MASS * p.v / HBAR, rel=1e-15)
    assert p.alpha == pytest.approx(HBAR * p.omega / (ELECTRON_MASS * p.v**2), rel=1e-15)


# --- flux and rates


def test_electron_flux():
    p = km.KlystronParams(omega=1e9, d=1e-3, v=1e6, quant_volume=1e-6, capacitance=1e-12, N=1e6)
    assert km.electron_flux(p) == pytest.approx(ELEMENTARY_CHARGE * 1e18, rel=1e-15)
    assert km.electron_flux(p.replace(N=0.0)) == 0.0


def test_rates_scale_with_electron_count(reference):
    r1 = km.rate_total(reference)
    r2 = km.rate_total(reference.replace(N=2e6))
    assert km.electron_flux(reference.replace(N=2e6)) == pytest.approx(2 * reference.J0, rel=1e-15)
    for a, b in zip(r1.as_dict().values(), r2.as_dict().values()):
        assert b == pytest.approx(4 * a, rel=1e-13)


def test_stimulated_rate_scaling(reference):
    assert km.rate_stimulated(reference.replace(n=0.0)) == 0.0
    r1 = km.rate_stimulated(reference)
    assert km.rate_stimulated(reference.replace(n=2000.0)) == pytest.approx(4 * r1, rel=1e-13)


def test_rates_at_gamma_pi(reference):
    v = reference.omega * reference.d / (2 * math.pi)
    p = reference.replace(v=v)
    assert abs(km.rate_stimulated(p)) <= 1e-12 * km.velocity_term(p)
    assert km.rate_spontaneous(p) == pytest.approx(km.velocity_term(p), rel=1e-12)


def test_rates_no_beam(reference):
    p = reference.replace(N=0.0)
    assert km.rate_spontaneous(p) == 0.0
    assert km.rate_total(p).total == 0.0


def test_reference_golden_values(reference):
    r = km.rate_total(reference)
    assert r.stimulated == pytest.approx(REF_STIMULATED, rel=1e-12)
    assert r.spontaneous == pytest.approx(REF_SPONTANEOUS, rel=1e-12)
    assert r.total == pytest.approx(REF_TOTAL, rel=1e-12)


def test_spontaneous_equals_total_without_field(reference):
    p = reference.replace(n=0.0)
    spont = km.rate_spontaneous(p)
    assert km.rate_total(p).total == pytest.approx(spont, rel=1e-12)
    assert spont == pytest.approx(REF_SPONTANEOUS, rel=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_rate_identity_randomized(seed):
    p = random_params(np.random.default_rng(seed))
    r = km.rate_total(p)
    scale = abs(r.stimulated) + abs(r.spontaneous)
    assert abs(r.total - (r.stimulated + r.spontaneous)) <= 1e-12 * scale
    assert km.velocity_term(p) >= 0
    if km.gain_factor(p.gamma) >= 0:
        assert r.spontaneous >= 0


def test_stimulated_power_law_at_fixed_gamma(reference):
    # omega -> s omega with v -> s v keeps gamma; J0 ~ v so J0^2 ~ s^2, E_p^2 ~ s^2, omega^-7:
    # stimulated rate ~ s^(2 + 2 - 7) = s^-3
    s = 3.0
    p2 = reference.replace(omega=s * reference.omega, v=s * reference.v)
    assert p2.gamma == pytest.approx(reference.gamma, rel=1e-14)
    ratio = km.rate_stimulated(p2) / km.rate_stimulated(reference)
    assert ratio == pytest.approx(s**-3, rel=1e-12)
    # velocity term ~ J0^2 v^2 omega^-6 ~ s^(2 + 2 - 6)
    assert km.velocity_term(p2) / km.velocity_term(reference) == pytest.approx(s**-2, rel=1e-12)


def test_gap_and_capacitance_power_law(reference):
    c = reference.C
    p = reference.replace(capacitance=2 * c)
    assert km.rate_stimulated(p) / km.rate_stimulated(reference) == pytest.approx(0.25, rel=1e-12)
    # d -> 2d with v -> 2v keeps gamma; stimulated ~ J0^2 d^-4 ~ 4 / 16
    p = reference.replace(capacitance=c, d=2 * reference.d, v=2 * reference.v)
    assert km.rate_stimulated(p) / km.rate_stimulated(reference) == pytest.approx(0.25, rel=1e-12)


# --- per-electron emission/absorption coefficients


def test_emission_absorption_ratio(reference):
    p = reference
    asym = 1 - p.gamma / math.tan(p.gamma)
    for n in (1, 5, 100):
        ratio = km.reduced_emission_rate(n, p) / km.reduced_absorption_rate(n, p)
        expected = ((n + 1) ** 2 / n**2) * (1 - 2 * p.alpha * asym) / (1 + 2 * p.alpha * asym)
        assert ratio == pytest.approx(expected, rel=1e-12)


def test_emission_absorption_small_alpha_limit(reference):
    assert reference.alpha < 1e-5
    n = 3
    ratio = km.reduced_emission_rate(n, reference) / km.reduced_absorption_rate(n, reference)
    assert ratio == pytest.approx((4 / 3) ** 2, rel=1e-4)


def test_absorption_structure(reference):
    p = reference
    assert km.reduced_absorption_rate(0, p) == 0.0
    # absorption(n) equals emission with (n+1)^2 -> n^2 and alpha -> -alpha
    n = 7
    asym = 1 - p.gamma / math.tan(p.gamma)
    em_bracket = 1 - 2 * p.alpha * asym
    ab_bracket = 1 + 2 * p.alpha * asym
    em = km.reduced_emission_rate(n - 1, p)  # carries n^2
    assert km.reduced_absorption_rate(n, p) == pytest.approx(em * ab_bracket / em_bracket, rel=1e-12)


def test_emission_coefficient_golden(reference):
    p = reference
    with mpmath.workdps(40):
        k = mpmath.mpf(ELECTRON_MASS) * mpmath.mpf(p.v) / mpmath.mpf(HBAR)
        g = mpmath.mpf(p.gamma)
        alpha = mpmath.mpf(p.alpha)
        pref = (
            16 * mpmath.pi**3 * mpmath.mpf(ELEMENTARY_CHARGE) ** 2 * mpmath.mpf(HBAR) ** 5 * k**6
            / (mpmath.mpf(p.box_length) ** 6 * mpmath.mpf(p.C) ** 2 * mpmath.mpf(p.d) ** 4
               * mpmath.mpf(ELECTRON_MASS) ** 6 * mpmath.mpf(p.omega) ** 6)
        )
        em = pref * 1001**2 * (1 - 2 * alpha * (1 - g * mpmath.cot(g))) * mpmath.sin(g) ** 4
        ab = pref * 1000**2 * (1 + 2 * alpha * (1 - g * mpmath.cot(g))) * mpmath.sin(g) ** 4
    assert km.reduced_emission_rate(1000, p) == pytest.approx(float(em), rel=1e-12)
    assert km.reduced_absorption_rate(1000, p) == pytest.approx(float(ab), rel=1e-12)


def test_reduced_rates_need_box_length(reference):
    with pytest.raises(ValueError, match="box_length"):
        km.reduced_emission_rate(1, reference.replace(box_length=None))


# --- wavenumber kinematics


def test_wavenumber_exact_limits():
    k = 1e9
    assert km.wavenumber_after_emission_exact(k, 0.0) == k
    omega_half = 0.5 * HBAR * k * k / ELECTRON_MASS
    assert km.wavenumber_after_emission_exact(k, omega_half) == pytest.approx(0.0, abs=1e-3)
    omega = 1e-3 * HBAR * k * k / ELECTRON_MASS
    assert km.wavenumber_after_emission_exact(k, omega) / k == pytest.approx(math.sqrt(0.998), rel=1e-14)
    with pytest.raises(ValueError, match="cannot emit"):
        km.wavenumber_after_emission_exact(k, 1.01 * omega_half)


def test_wavenumber_approx():
    k = 1e9
    assert km.wavenumber_after_emission_approx(k, 0.0) == k
    omega = 1e-2 * HBAR * k * k / ELECTRON_MASS
    exact = km.wavenumber_after_emission_exact(k, omega)
    approx = km.wavenumber_after_emission_approx(k, omega)
    assert abs(approx - exact) / k < 1e-6
    with pytest.raises(ValueError):
        km.wavenumber_after_emission_approx(k, HBAR * k * k / ELECTRON_MASS)


def test_wavenumber_error_ratio_near_eight():
    k = 1.0
    errs = []
    for a in (2e-3, 1e-3):
        omega = a * HBAR * k * k / ELECTRON_MASS
        errs.append(abs(km.wavenumber_after_emission_approx(k, omega) - km.wavenumber_after_emission_exact(k, omega)))
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.01)


@given(st.floats(1e3, 1e12), st.floats(1e-8, 0.2))
def test_wavenumber_emission_absorption_round_trip(k, alpha):
    omega = alpha * HBAR * k * k / ELECTRON_MASS
    k1 = km.wavenumber_after_emission_exact(k, omega)
    # absorbing the same quantum from k1: sqrt(1 + 2 alpha') with alpha' relative to k1
    back = km.wavenumber_after_emission_exact(k1, -omega)
    assert back == pytest.approx(k, rel=1e-12)


def test_allowed_wavenumbers():
    np.testing.assert_allclose(km.allowed_wavenumbers(math.pi / 2, 3), [1, 2, 3], rtol=1e-15)
    ks = km.allowed_wavenumbers(1e-3, 10)
    np.testing.assert_allclose(np.diff(ks), math.pi / 2e-3, rtol=1e-12)
    assert ks[0] == pytest.approx(1570.8, abs=0.05)
    with pytest.raises(ValueError):
        km.allowed_wavenumbers(1.0, 0)


def test_no_warnings_on_reference(reference):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        km.rate_total(reference)
