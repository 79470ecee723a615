"""Gain-peak search, the transit-angle design chain, and parameter sweeps."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from qklyst.constants import ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR, SPEED_OF_LIGHT
from qklyst.errors import PhysicalValidityError
from qklyst.klystron_model import (
    ALPHA_WARN,
    NONREL_ERROR,
    NONREL_WARN,
    KlystronParams,
    RateBreakdown,
    gain_factor,
    rate_total,
)

# Window (0, 2pi] holds the first positive gain lobe only; beyond 2pi every
# later lobe peaks higher (g ~ gamma for large gamma).
DEFAULT_GAMMA_MAX = 2.0 * math.pi
SCAN_STEP = 1e-3
GOLDEN_TOL = 1e-10
SWEEP_AXES = ("omega", "d", "v", "n", "N")


@dataclass(frozen=True)
class GainPeak:
    """Maximizer of the gain factor; unpacks as ``gamma, g = peak``."""

    gamma: float
    g: float
    on_boundary: bool = False

    def __iter__(self):
        return iter((self.gamma, self.g))


def peak_gain(gamma_max: float = DEFAULT_GAMMA_MAX, scan_step: float = SCAN_STEP) -> GainPeak:
    """Global maximum of ``gain_factor`` on ``(0, gamma_max]``.

    A uniform scan (step at most ``scan_step``) picks the best grid point, then
    golden-section search refines it to a bracket narrower than ~1e-9. If the
    best point is the right end of the window the maximum is not interior; it
    is returned unrefined with ``on_boundary=True``.
    """
    if not (math.isfinite(gamma_max) and gamma_max > math.pi):
        raise ValueError(f"gamma_max must exceed pi, got {gamma_max!r}")
    if not 0 < scan_step <= SCAN_STEP:
        raise ValueError(f"scan_step must lie in (0, {SCAN_STEP}]")
    return _peak_on(gamma_max, scan_step)


def _peak_on(gamma_max: float, scan_step: float) -> GainPeak:
    count = int(math.ceil(gamma_max / scan_step))
    grid = gamma_max * np.arange(1, count + 1) / count
    values = gain_factor(grid)
    i = int(np.argmax(values))
    if i == count - 1:
        return GainPeak(float(grid[i]), float(values[i]), on_boundary=True)
    if i == 0:
        # g -> 0- as gamma -> 0+, so a maximum at the first node is a boundary sup
        return GainPeak(float(grid[0]), float(values[0]), on_boundary=True)

    def neg(x):
        return -gain_factor(x)

    gamma = optimize.golden(neg, brack=(grid[i - 1], grid[i], grid[i + 1]), tol=GOLDEN_TOL)
    return GainPeak(float(gamma), float(gain_factor(gamma)))


@dataclass(frozen=True)
class DesignReport:
    gamma_star: float
    g_star: float
    v: float
    v_over_c: float
    U0: float
    alpha: float
    frequency_hz: float
    d: float
    warnings: list[str] = field(default_factory=list)

    @property
    def transit_angle_full(self) -> float:
        """Full gap transit angle theta_g = 2 gamma."""
        return 2.0 * self.gamma_star

    def as_json(self) -> dict:
        return {
            "frequency_hz": self.frequency_hz,
            "gap_width_m": self.d,
            "gamma_star": self.gamma_star,
            "g_star": self.g_star,
            "v_m_per_s": self.v,
            "v_over_c": self.v_over_c,
            "U0_volts": self.U0,
            "alpha": self.alpha,
            "warnings": list(self.warnings),
        }


def design_for(frequency_hz: float, d: float, gamma_target: float | None = None) -> DesignReport:
    """Beam speed and acceleration voltage that put the gap at ``gamma_target``.

    ``omega = 2 pi f``, ``v = omega d / (2 gamma)``, ``U0 = m v^2 / (2 e)`` and
    ``alpha = hbar omega / (m v^2)``. ``gamma_target`` defaults to the gain peak.
    Raises :class:`PhysicalValidityError` when ``v >= 0.1 c``.
    """
    for name, value in (("frequency_hz", frequency_hz), ("d", d)):
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive, got {value!r}")
    if gamma_target is None:
        gamma_target = peak_gain().gamma
    elif not (math.isfinite(gamma_target) and gamma_target > 0):
        raise ValueError(f"gamma_target must be positive, got {gamma_target!r}")

    omega = 2.0 * math.pi * frequency_hz
    v = omega * d / (2.0 * gamma_target)
    beta = v / SPEED_OF_LIGHT
    if beta >= NONREL_ERROR:
        raise PhysicalValidityError(
            f"required beam speed v = {v:.4g} m/s is {beta:.3g} c (limit {NONREL_ERROR} c)"
        )
    alpha = HBAR * omega / (ELECTRON_MASS * v * v)
    g_star = gain_factor(gamma_target)

    notes = []
    if beta >= NONREL_WARN:
        notes.append(f"relativity: v/c = {beta:.3g} is not << 1, nonrelativistic U0 is approximate")
    if alpha > ALPHA_WARN:
        notes.append(f"alpha = {alpha:.3g} is not << 1, small-alpha rate expansion is unreliable")
    if g_star <= 0:
        notes.append(f"gain factor g({gamma_target:.6g}) = {g_star:.4g} gives no net stimulated gain")

    return DesignReport(
        gamma_star=float(gamma_target),
        g_star=float(g_star),
        v=v,
        v_over_c=beta,
        U0=ELECTRON_MASS * v * v / (2.0 * ELEMENTARY_CHARGE),
        alpha=alpha,
        frequency_hz=float(frequency_hz),
        d=float(d),
        warnings=notes,
    )


def sweep_gain(gamma_min: float, gamma_max: float, steps: int) -> np.ndarray:
    """Sample ``g`` on ``gamma_min + i h``, ``i = 1..steps``, ``h = (gamma_max - gamma_min)/steps``.

    The left end is excluded, so ``(0, 4pi]`` with a step count divisible by 4
    lands on every multiple of pi; those nodes carry an exact 0. Returns an
    array of shape ``(steps, 2)`` with columns ``gamma, g``.
    """
    if int(steps) != steps or steps < 2:
        raise ValueError(f"steps must be an integer >= 2, got {steps!r}")
    if not (math.isfinite(gamma_min) and math.isfinite(gamma_max) and 0 <= gamma_min < gamma_max):
        raise ValueError(f"need 0 <= gamma_min < gamma_max, got ({gamma_min!r}, {gamma_max!r})")
    steps = int(steps)
    h = (gamma_max - gamma_min) / steps
    gammas = gamma_min + h * np.arange(1, steps + 1)
    g = gain_factor(gammas)
    multiple = np.rint(gammas / math.pi)
    g[(multiple >= 1) & (np.abs(gammas - multiple * math.pi) <= 1e-6 * h)] = 0.0
    return np.column_stack([gammas, g])


@dataclass(frozen=True)
class SweepRow:
    value: float
    rates: RateBreakdown | None
    error: str | None = None


def sweep_rates(
    base: KlystronParams,
    axis: str,
    value_range: tuple[float, float],
    steps: int,
) -> list[SweepRow]:
    """Evaluate :func:`rate_total` along one parameter axis.

    Rows are independent; a row whose parameters are invalid carries the error
    text instead of rates and the sweep carries on.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    start, stop = value_range
    values = np.linspace(start, stop, int(steps)) if steps > 1 else np.array([float(start)])

    rows = []
    for value in values:
        value = float(value)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                params = base.replace(**{axis: value})
            rows.append(SweepRow(value, rate_total(params)))
        except ValueError as exc:
            rows.append(SweepRow(value, None, str(exc)))
    return rows
