import math

import numpy as np
import pytest

from qklyst import klystron_model as km
from qklyst.constants import ELECTRON_MASS, ELEMENTARY_CHARGE, SPEED_OF_LIGHT
from qklyst.design_solver import (
    DEFAULT_GAMMA_MAX,
    design_for,
    peak_gain,
    sweep_gain,
    sweep_rates,
)
from qklyst.errors import PhysicalValidityError


@pytest.fixture
def base():
    return km.KlystronParams(
        omega=2 * math.pi * 1e9, d=1e-3, v=7.6746e5, quant_volume=1e-6, effective_area=1e-4, N=1e6, n=10,
    )


def test_peak_gain_default_first_lobe():
    gamma, g = peak_gain()
    assert 4.08 <= gamma <= 4.10
    assert 0.841 <= g <= 0.845
    assert DEFAULT_GAMMA_MAX == pytest.approx(2 * math.pi)


def test_peak_gain_is_stationary():
    peak = peak_gain()
    h = 1e-5
    assert km.gain_factor(peak.gamma) >= km.gain_factor(peak.gamma + h)
    assert km.gain_factor(peak.gamma) >= km.gain_factor(peak.gamma - h)
    # stationarity of g: derivative by central difference ~ 0
    deriv = (km.gain_factor(peak.gamma + h) - km.gain_factor(peak.gamma - h)) / (2 * h)
    assert abs(deriv) < 1e-6


def test_peak_gain_wider_window_finds_later_lobe():
    # later lobes peak higher; the global maximum over (0, 4pi] is the third lobe
    peak = peak_gain(4 * math.pi)
    assert 10.43 < peak.gamma < 10.44
    assert peak.g > 2.8
    assert not peak.on_boundary


def test_peak_gain_below_pi_is_boundary():
    peak = peak_gain(math.pi + 1e-9)
    assert peak.on_boundary
    assert peak.g <= 1e-20


def test_peak_gain_scan_step_independent():
    a = peak_gain(scan_step=1e-3)
    b = peak_gain(scan_step=5e-4)
    assert abs(a.gamma - b.gamma) < 1e-6


def test_peak_gain_deterministic():
    assert peak_gain() == peak_gain()


def test_peak_gain_validation():
    with pytest.raises(ValueError):
        peak_gain(3.0)


def test_design_reference_example():
    r = design_for(1e9, 1e-3)
    assert r.U0 == pytest.approx(1.72, rel=0.03)
    assert r.v_over_c == pytest.approx(2.56e-3, rel=0.01)
    assert r.g_star == km.gain_factor(r.gamma_star)
    assert r.U0 == pytest.approx(ELECTRON_MASS * r.v**2 / (2 * ELEMENTARY_CHARGE), rel=1e-12)
    assert r.warnings == []
    assert r.transit_angle_full == pytest.approx(2 * r.gamma_star)


def test_design_round_trip():
    for gamma in (1.0, 4.09, 7.3):
        r = design_for(3e9, 2e-3, gamma)
        assert km.transit_angle(2 * math.pi * 3e9, 2e-3, r.v) == pytest.approx(gamma, rel=1e-12)


def test_design_scaling_in_gap():
    a = design_for(1e9, 1e-3)
    b = design_for(1e9, 2e-3)
    assert b.v == pytest.approx(2 * a.v, rel=1e-14)
    assert b.U0 == pytest.approx(4 * a.U0, rel=1e-14)


def test_design_relativity():
    with pytest.raises(PhysicalValidityError):
        design_for(1e12, 10.0)
    r = design_for(1e12, 1e-5, 4.09)  # v ~ 0.026 c
    assert 0.01 < r.v_over_c < 0.1
    assert any("relativity" in w for w in r.warnings)


def test_design_warns_on_no_gain():
    r = design_for(1e9, 1e-3, 2.0)
    assert any("no net" in w for w in r.warnings)


def test_sweep_gain_zeros_and_sign():
    curve = sweep_gain(0.0, 4 * math.pi, 2000)
    assert curve.shape == (2000, 2)
    gammas, g = curve[:, 0], curve[:, 1]
    for k in (1, 2, 3, 4):
        i = int(np.argmin(np.abs(gammas - k * math.pi)))
        assert abs(gammas[i] - k * math.pi) < 1e-12
        assert g[i] == 0.0
    assert np.all(g[gammas < math.pi - 1e-9] < 0)


def test_sweep_gain_max_matches_peak():
    curve = sweep_gain(0.0, 4 * math.pi, 2000)
    h = 4 * math.pi / 2000
    i = int(np.argmax(curve[:, 1]))
    peak = peak_gain(4 * math.pi)
    assert abs(curve[i, 0] - peak.gamma) <= h
    # first positive lobe within grid resolution of the default peak
    lobe = (curve[:, 0] > math.pi) & (curve[:, 0] < 2 * math.pi)
    j = np.flatnonzero(lobe)[np.argmax(curve[lobe, 1])]
    assert abs(curve[j, 0] - peak_gain().gamma) <= h


def test_sweep_gain_validation():
    with pytest.raises(ValueError):
        sweep_gain(0, 1, 1)
    with pytest.raises(ValueError):
        sweep_gain(2, 1, 10)
    with pytest.raises(ValueError):
        sweep_gain(-1, 1, 10)


def test_sweep_rates_quadratic_in_n(base):
    rows = sweep_rates(base, "n", (0, 10), 11)
    assert len(rows) == 11
    stim = np.array([r.rates.stimulated for r in rows])
    n = np.array([r.value for r in rows])
    np.testing.assert_allclose(stim, stim[1] * n**2, rtol=1e-12)


def test_sweep_rates_quadratic_in_N(base):
    rows = sweep_rates(base, "N", (1e6, 4e6), 4)
    ref = rows[0].rates
    for r in rows:
        s = (r.value / 1e6) ** 2
        assert r.rates.stimulated == pytest.approx(s * ref.stimulated, rel=1e-12)
        assert r.rates.spontaneous == pytest.approx(s * ref.spontaneous, rel=1e-12)
        assert r.rates.total == pytest.approx(s * ref.total, rel=1e-12)


def test_sweep_rates_single_point(base):
    rows = sweep_rates(base, "v", (base.v, base.v), 1)
    assert rows[0].rates == km.rate_total(base)


def test_sweep_rates_row_errors_continue(base):
    rows = sweep_rates(base, "v", (1e6, 0.5 * SPEED_OF_LIGHT), 3)
    assert rows[0].rates is not None
    assert rows[-1].rates is None and "v/c" in rows[-1].error
    rows = sweep_rates(base, "d", (-1e-3, 1e-3), 3)
    assert rows[0].error is not None and rows[-1].error is None


def test_sweep_rates_pure(base):
    a = sweep_rates(base, "omega", (1e9, 2e10), 5)
    b = sweep_rates(base, "omega", (1e9, 2e10), 5)
    assert a == b


def test_sweep_rates_bad_axis(base):
    with pytest.raises(ValueError):
        sweep_rates(base, "C", (1, 2), 2)
