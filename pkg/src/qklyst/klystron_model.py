"""
Closed-form device physics of the double-gap reflex klystron.

Both electron beams are taken identical (same count N, speed v, wavenumber k),
frequencies are angular (rad/s) unless a name says ``_hz``, and all quantities
are SI. Delta functions of the golden-rule rates are never evaluated: the
emission and absorption functions return their on-shell coefficients, and the
pair-output rates are the already k-summed closed forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from qklyst.constants import ELECTRON_MASS, ELEMENTARY_CHARGE, EPSILON_0, HBAR, SPEED_OF_LIGHT
from qklyst.errors import PhysicalValidityError

NONREL_WARN = 0.01
NONREL_ERROR = 0.1
ALPHA_WARN = 0.1
GAIN_SERIES_CUTOFF = 1e-3


class ModelValidityWarning(UserWarning):
    pass


def _require_positive(**values):
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


def transit_angle(omega: float, d: float, v: float) -> float:
    """Gap transit angle ``omega d / (2 v)`` (half the gap phase)."""
    _require_positive(omega=omega, d=d, v=v)
    return omega * d / (2.0 * v)


def _gamma_cos_minus_sin(x):
    # x cos x - sin x = sum_{j>=1} (-1)^j 2j x^(2j+1) / (2j+1)!, cancellation-free for small x
    x = np.atleast_1d(np.asarray(x, dtype=float))
    small = np.abs(x) < 0.5
    out = x * np.cos(x) - np.sin(x)
    if np.any(small):
        xs = x[small]
        acc = np.zeros_like(xs)
        x2 = xs * xs
        # term_j = (-1)^j x^(2j+1) / (2j+1)!
        term = xs.copy()
        for j in range(1, 12):
            term = -term * x2 / ((2 * j) * (2 * j + 1))
            acc += 2 * j * term
        out[small] = acc
    return out


def _gain_closed(gamma):
    # (g cot g - 1) sin^4 g rewritten pole-free as sin^3 g (g cos g - sin g)
    gamma = np.asarray(gamma, dtype=float)
    return (np.sin(gamma) ** 3 * _gamma_cos_minus_sin(gamma)).reshape(gamma.shape)


def _gain_series(gamma):
    g2 = np.asarray(gamma, dtype=float) ** 2
    return g2**3 * (-1.0 / 3.0 + g2 * (1.0 / 5.0 - g2 * 17.0 / 315.0))


def gain_factor(gamma):
    """Gain factor ``g(gamma) = (gamma cot gamma - 1) sin^4 gamma``.

    Accepts scalars or arrays. Exact multiples of pi (including 0) map to 0,
    and ``|gamma| < 1e-3`` uses the Taylor series ``-gamma^6/3 + gamma^8/5 - ...``.
    """
    arr = np.asarray(gamma, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("gain_factor requires finite gamma")
    out = np.where(np.abs(arr) < GAIN_SERIES_CUTOFF, _gain_series(arr), _gain_closed(arr))
    k = np.rint(arr / np.pi)
    out = np.where(arr == k * np.pi, 0.0, out)
    if np.ndim(gamma) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class KlystronParams:
    """Device and beam parameters (SI).

    Give either ``capacitance`` (F) or ``effective_area`` (m^2, then
    ``C = eps0 A / d``). ``box_length`` is the electron quantization length
    used only by the per-electron emission/absorption coefficients.
    """

    omega: float
    d: float
    v: float
    quant_volume: float
    capacitance: float | None = None
    effective_area: float | None = None
    drift_length: float | None = None
    box_length: float | None = None
    N: float = 1.0
    n: float = 0.0

    def __post_init__(self):
        _require_positive(omega=self.omega, d=self.d, v=self.v, quant_volume=self.quant_volume)
        if (self.capacitance is None) == (self.effective_area is None):
            raise ValueError("give exactly one of capacitance or effective_area")
        if self.capacitance is not None:
            _require_positive(capacitance=self.capacitance)
        else:
            _require_positive(effective_area=self.effective_area)
        for name in ("drift_length", "box_length"):
            value = getattr(self, name)
            if value is not None:
                _require_positive(**{name: value})
        if not (math.isfinite(self.N) and self.N >= 0):
            raise ValueError(f"N must be >= 0, got {self.N!r}")
        if not (math.isfinite(self.n) and self.n >= 0):
            raise ValueError(f"n must be >= 0, got {self.n!r}")

        beta = self.v / SPEED_OF_LIGHT
        if beta >= NONREL_ERROR:
            raise PhysicalValidityError(
                f"v/c = {beta:.4g} exceeds {NONREL_ERROR}; the nonrelativistic model does not apply"
            )
        if beta >= NONREL_WARN:
            warnings.warn(f"v/c = {beta:.4g} is not << 1", ModelValidityWarning, stacklevel=2)
        a = self.alpha
        if a >= 1.0:
            raise PhysicalValidityError(f"alpha = hbar omega / (m v^2) = {a:.4g} must be < 1")
        if a > ALPHA_WARN:
            warnings.warn(f"alpha = {a:.4g} is not << 1", ModelValidityWarning, stacklevel=2)

    @classmethod
    def from_frequency(cls, frequency_hz: float, **kwargs) -> KlystronParams:
        return cls(omega=2.0 * math.pi * frequency_hz, **kwargs)

    @property
    def C(self) -> float:
        if self.capacitance is not None:
            return self.capacitance
        return EPSILON_0 * self.effective_area / self.d

    @property
    def J0(self) -> float:
        return electron_flux(self)

    @property
    def E_p(self) -> float:
        """Stored photon energy n hbar omega."""
        return self.n * HBAR * self.omega

    @property
    def gamma(self) -> float:
        return transit_angle(self.omega, self.d, self.v)

    @property
    def k(self) -> float:
        """Electron wavenumber m v / hbar."""
        return ELECTRON_MASS * self.v / HBAR

    @property
    def alpha(self) -> float:
        return HBAR * self.omega / (ELECTRON_MASS * self.v**2)

    def replace(self, **changes) -> KlystronParams:
        from dataclasses import replace

        if "capacitance" in changes and changes["capacitance"] is not None:
            changes.setdefault("effective_area", None)
        if "effective_area" in changes and changes["effective_area"] is not None:
            changes.setdefault("capacitance", None)
        return replace(self, **changes)


@dataclass(frozen=True)
class RateBreakdown:
    """Photon-pair output rates in pairs per second."""

    stimulated: float
    spontaneous: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {"stimulated": self.stimulated, "spontaneous": self.spontaneous, "total": self.total}


def electron_flux(params: KlystronParams) -> float:
    """J0 = e v N / V."""
    return ELEMENTARY_CHARGE * params.v * params.N / params.quant_volume


def _common_prefactor(p: KlystronParams) -> float:
    # 32 pi^3 J0^2 / (m hbar^4 C^2 d^4 omega^7), grouped to stay inside double range
    j = p.J0
    return (
        32.0 * math.pi**3
        * (j / (p.C * p.d**2)) ** 2
        / (ELECTRON_MASS * HBAR**4 * p.omega**7)
    )


def velocity_term(params: KlystronParams) -> float:
    """Gain-independent spontaneous term 16 pi^3 J0^2 v^2 / (hbar^3 C^2 d^4 omega^6); always >= 0."""
    p = params
    return (
        16.0 * math.pi**3
        * (p.J0 * p.v / (p.C * p.d**2)) ** 2
        / (HBAR**3 * p.omega**6)
    )


def rate_stimulated(params: KlystronParams) -> float:
    """Stimulated pair output 64 pi^3 J0^2 E_p^2 / (m hbar^4 C^2 d^4 omega^7) g(gamma)."""
    return 2.0 * _common_prefactor(params) * params.E_p**2 * gain_factor(params.gamma)


def rate_spontaneous(params: KlystronParams) -> float:
    """Pair output without a stored field: the (hbar omega)^2 gain term plus the velocity term."""
    photon = HBAR * params.omega
    return _common_prefactor(params) * photon**2 * gain_factor(params.gamma) + velocity_term(params)


def rate_total(params: KlystronParams) -> RateBreakdown:
    """Net pair output rate with its stimulated/spontaneous split.

    ``total`` is computed in the combined bracket form
    ``prefactor * [2 E_p^2 + (hbar omega)^2] g(gamma) + velocity term``,
    independently of the two components.
    """
    g = gain_factor(params.gamma)
    photon = HBAR * params.omega
    total = _common_prefactor(params) * (2.0 * params.E_p**2 + photon**2) * g + velocity_term(params)
    return RateBreakdown(
        stimulated=rate_stimulated(params),
        spontaneous=rate_spontaneous(params),
        total=total,
    )


def _reduced_rate_prefactor(p: KlystronParams) -> float:
    if p.box_length is None:
        raise ValueError("box_length is required for the per-electron emission/absorption coefficients")
    # 16 pi^3 e^2 hbar^5 k^6 / (L^6 C^2 d^4 m^6 omega^6) with hbar k / m = v
    return (
        16.0 * math.pi**3
        * ELEMENTARY_CHARGE**2
        * (p.v / (p.box_length * p.omega)) ** 6
        / (HBAR * (p.C * p.d**2) ** 2)
    )


def _asymmetry(p: KlystronParams) -> float:
    # 1 - gamma cot gamma, written through sin to stay finite at multiples of pi
    gamma = p.gamma
    s = math.sin(gamma)
    if s == 0.0:
        return math.inf
    return 1.0 - gamma * math.cos(gamma) / s


def _reduced_rate(n_factor: float, sign: float, p: KlystronParams) -> float:
    s4 = math.sin(p.gamma) ** 4
    if s4 == 0.0:
        return 0.0
    bracket = 1.0 + sign * 2.0 * p.alpha * _asymmetry(p)
    return _reduced_rate_prefactor(p) * n_factor * bracket * s4


def reduced_emission_rate(n: float, params: KlystronParams) -> float:
    """On-shell coefficient of the single-electron emission rate.

    ``16 pi^3 e^2 hbar^5 k^6 / (L^6 C^2 d^4 m^6 omega^6) (n+1)^2 [1 - 2 alpha (1 - gamma cot gamma)] sin^4 gamma``,
    i.e. the factor in front of delta(E_I - E_F - 2 hbar omega).
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n!r}")
    return _reduced_rate((n + 1) ** 2, -1.0, params)


def reduced_absorption_rate(n: float, params: KlystronParams) -> float:
    """Absorption counterpart of :func:`reduced_emission_rate`: ``n^2`` and the opposite alpha sign."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n!r}")
    return _reduced_rate(n**2, +1.0, params)


def wavenumber_after_emission_exact(k: float, omega: float) -> float:
    """Electron wavenumber after emitting hbar omega: ``k sqrt(1 - 2 alpha)``, alpha = m omega / (hbar k^2).

    A negative ``omega`` describes absorption.
    """
    if not (math.isfinite(k) and k > 0):
        raise ValueError(f"k must be positive, got {k!r}")
    alpha = ELECTRON_MASS * omega / (HBAR * k * k)
    if 1.0 - 2.0 * alpha < 0.0:
        raise ValueError(
            f"electron kinetic energy is below hbar omega (alpha = {alpha:.4g} > 1/2); it cannot emit"
        )
    return k * math.sqrt(1.0 - 2.0 * alpha)


def wavenumber_after_emission_approx(k: float, omega: float) -> float:
    """Second-order small-alpha form ``k [1 - alpha (1 + alpha/2)]``."""
    if not (math.isfinite(k) and k > 0):
        raise ValueError(f"k must be positive, got {k!r}")
    alpha = ELECTRON_MASS * omega / (HBAR * k * k)
    if alpha >= 1.0:
        raise ValueError(f"alpha = {alpha:.4g} must be < 1 for the expansion")
    return k * (1.0 - alpha * (1.0 + 0.5 * alpha))


def allowed_wavenumbers(l: float, count: int) -> np.ndarray:
    """Wavenumbers nu pi / (2 l), nu = 1..count, allowed by a hard repeller wall at distance l."""
    _require_positive(l=l)
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    return np.arange(1, int(count) + 1) * math.pi / (2.0 * l)
