"""
Brute-force cross-checks of the closed forms.

Nothing in here reuses the formula internals of :mod:`qklyst.klystron_model`;
the checks rebuild each quantity from the physical constants and compare
against the public functions (or against the quoted analytic forms) only at
the end. Every check returns a :class:`VerificationReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate

from qklyst import klystron_model as km
from qklyst.constants import ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR
from qklyst.quantum_state import DensityMatrix4

PPT_TOL = 1e-10
QUADRATURE_TOL = 1e-8
GOLDEN_RULE_TOL = 0.05
EXPANSION_ORDER_TOL = 0.05
EXPANSION_CONSTANT_TOL = 0.02
IDENTITY_TOL = 1e-12
MIN_RELATIVE_SEPARATION = 1e-6


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one oracle check.

    ``passed`` is derived: the relative error must be within tolerance and the
    convergence trace (control parameter, error) must not increase after its
    first entry.
    """

    name: str
    analytic_value: float
    oracle_value: float
    relative_error: float
    tolerance: float
    trace: list[tuple[float, float]] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        errs = [e for _, e in self.trace]
        return all(b <= a for a, b in zip(errs[1:], errs[2:])) and all(map(math.isfinite, errs))

    @property
    def passed(self) -> bool:
        return bool(self.relative_error <= self.tolerance and self.converged)

    def as_json(self) -> dict:
        return {
            "check": self.name,
            "analytic_value": self.analytic_value,
            "oracle_value": self.oracle_value,
            "relative_error": self.relative_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "converged": self.converged,
            "convergence_trace": [[c, e] for c, e in self.trace],
            "details": self.details,
        }


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


# --------------------------------------------------------------------------
# Gap matrix element


def matrix_element_closed_form(k: float, k_prime: float, d: float, L: float) -> float:
    """(2/L^2) sin^2[(k - k') d/2] / (k - k')^4."""
    q = k - k_prime
    return 2.0 / L**2 * math.sin(q * d / 2.0) ** 2 / q**4


def _check_separation(k, k_prime):
    if abs(k - k_prime) < MIN_RELATIVE_SEPARATION * max(abs(k), abs(k_prime)):
        raise ValueError("matrix element is singular at k = k'; need |k - k'| >= 1e-6 k")


def matrix_element_squared_quadrature(k: float, k_prime: float, d: float, L: float) -> float:
    """|<psi'|x|psi>|^2 over the gap by adaptive quadrature, in the rotating-wave approximation.

    With standing waves (e^{ikx} + e^{-ikx})/sqrt(2L) only the slow cross terms
    e^{+iqx} and e^{-iqx} (q = k - k') are kept. For each, the x-weighted
    integral over [0, d] is split by parts into the edge term
    d e^{iqd}/(iq) and the resonant remainder of modulus |e^{iqd} - 1|/q^2;
    the remainder is what survives, and the two partners add incoherently.
    """
    _check_separation(k, k_prime)
    if not 0 < d < L:
        raise ValueError("need 0 < d < L")
    q = k - k_prime
    theta = q * d
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=400)
    # u in [0, 1], x = u d
    re, _ = integrate.quad(lambda u: u, 0.0, 1.0, weight="cos", wvar=theta, **opts)
    im, _ = integrate.quad(lambda u: u, 0.0, 1.0, weight="sin", wvar=theta, **opts)
    total = 0.0
    for sign in (1.0, -1.0):
        full = complex(re, sign * im)
        edge = np.exp(1j * sign * theta) / (1j * sign * theta)
        resonant = d * d * (full - edge)
        total += abs(resonant) ** 2
    return total / (4.0 * L * L)


def matrix_element_quadrature(k: float, k_prime: float, d: float, L: float) -> float:
    """Relative error of the closed-form gap matrix element against quadrature.

    Where the closed form vanishes ((k - k') d a multiple of 2 pi) the error is
    measured against the envelope 2/(L^2 (k - k')^4) instead.
    """
    _check_separation(k, k_prime)
    quad = matrix_element_squared_quadrature(k, k_prime, d, L)
    closed = matrix_element_closed_form(k, k_prime, d, L)
    envelope = 2.0 / L**2 / (k - k_prime) ** 4
    if closed <= 1e-20 * envelope:
        return abs(quad - closed) / envelope
    return abs(quad - closed) / closed


def random_matrix_element_tuples(count: int, seed: int = 0) -> list[tuple[float, float, float, float]]:
    """(k, k', d, L) with k' on the emission shell, (k - k')d in [0.05, 30] and away from 2 pi m."""
    rng = np.random.default_rng(seed)
    tuples = []
    while len(tuples) < count:
        k = 10 ** rng.uniform(3, 6)
        alpha = 10 ** rng.uniform(-4, -2)
        k_prime = k * math.sqrt(1 - 2 * alpha)
        theta = 10 ** rng.uniform(math.log10(0.05), math.log10(30))
        if abs(math.sin(theta / 2)) < 1e-2:
            continue
        d = theta / (k - k_prime)
        L = d * 10 ** rng.uniform(1, 4)
        tuples.append((k, k_prime, d, L))
    return tuples


def verify_quadrature(count: int = 20, seed: int = 0, tolerance: float = QUADRATURE_TOL) -> VerificationReport:
    worst = 0.0
    trace = []
    for k, kp, d, L in random_matrix_element_tuples(count, seed):
        worst = max(worst, matrix_element_quadrature(k, kp, d, L))
    return VerificationReport(
        name="quadrature",
        analytic_value=0.0,
        oracle_value=worst,
        relative_error=worst,
        tolerance=tolerance,
        trace=trace,
        details={"samples": count, "seed": seed},
    )


# --------------------------------------------------------------------------
# Second-order golden-rule sum


def on_shell_coefficient(k: float, omega: float, d: float, capacitance: float, n: int) -> float:
    """Analytic on-shell emission coefficient times L^6.

    16 pi^3 m^2 e^4 omega^2 (n+1)^2 / (hbar^3 C^2 d^4) sin^4[(k-k')d/2] / (k'^2 (k-k')^8),
    with k' = k sqrt(1 - 2 alpha) the energy-conserving final wavenumber.
    """
    alpha = ELECTRON_MASS * omega / (HBAR * k * k)
    kp = k * math.sqrt(1.0 - 2.0 * alpha)
    q = k - kp
    pref = (
        16.0 * math.pi**3
        * ELECTRON_MASS**2
        * ELEMENTARY_CHARGE**4
        * omega**2
        * (n + 1) ** 2
        / (HBAR**3 * capacitance**2 * d**4)
    )
    return pref * math.sin(q * d / 2.0) ** 4 / (kp**2 * q**8)


def _discrete_coefficient(k, omega, d, capacitance, n, epsilon, L, half_window):
    """Golden-rule coefficient (times L^6) from the regulated sum over intermediate k'.

    The sum runs over kappa = 2 pi j / L within ``half_window`` of the pole.
    Its absorptive part -Im sum f/(Delta + i eps) tends to pi (L/2pi) f/|Delta'|,
    half the full contour residue, hence the factor 2 on the amplitude.
    """
    alpha = ELECTRON_MASS * omega / (HBAR * k * k)
    kp = k * math.sqrt(1.0 - 2.0 * alpha)
    h = 2.0 * math.pi / L
    j0 = round(kp / h)
    offset = j0 * h - kp
    m = math.ceil(half_window / h) + 1
    delta = np.arange(-m, m + 1) * h + offset  # kappa - k'
    delta = delta[np.abs(delta) <= half_window]
    kappa = kp + delta
    q = k - kappa

    # matrix element |<kappa|x|k>|^2 (2/L^2) sin^2(q d/2)/q^4, both legs
    me2 = 2.0 / L**2 * np.sin(q * d / 2.0) ** 2 / q**4
    f = (ELEMENTARY_CHARGE / (L * d)) ** 2 * (math.pi * HBAR * omega / capacitance) * me2
    # E(k) - E(kappa) - hbar omega = hbar^2 (k'^2 - kappa^2) / 2m
    denom = -(HBAR**2 / (2.0 * ELECTRON_MASS)) * delta * (2.0 * kp + delta)
    absorptive = float(np.sum(f * epsilon / (denom**2 + epsilon**2)))
    amplitude = 2.0 * absorptive
    rate = 2.0 * (2.0 * math.pi / HBAR) * (n + 1) ** 2 * amplitude**2
    return rate * L**6, delta.size


def _richardson(values: list[float]) -> float:
    # values at eps, eps/2, eps/4, ...; removes the O(eps) and O(eps^2) terms
    table = list(values)
    for order in (1, 2):
        factor = 2.0**order
        table = [(factor * b - a) / (factor - 1.0) for a, b in zip(table, table[1:])]
    return table[-1]


def golden_rule_sum(
    k: float,
    omega: float,
    params: km.KlystronParams,
    epsilon: float | None = None,
    L: float | None = None,
    n: int | None = None,
    levels: int = 5,
    modes_per_width: int = 1000,
    window_fraction: float = 0.05,
    tolerance: float = GOLDEN_RULE_TOL,
) -> VerificationReport:
    """Discrete second-order sum vs the analytic on-shell coefficient.

    ``epsilon`` (J) starts a halving schedule of ``levels`` values; the box
    length ``L`` doubles alongside so every resonance width holds
    ``modes_per_width`` intermediate modes. The window spans
    ``window_fraction * (k - k')`` on each side of the pole. The finite-eps
    values are Richardson-extrapolated to eps -> 0. Only ``d``, the
    capacitance and (by default) ``n`` are taken from ``params``.
    """
    n = int(params.n if n is None else n)
    d, cap = params.d, params.C
    try:
        alpha = ELECTRON_MASS * omega / (HBAR * k * k)
        kp = k * math.sqrt(1.0 - 2.0 * alpha)
        slope = HBAR**2 * kp / ELECTRON_MASS  # |dDelta/dkappa| at the pole
        half_window = window_fraction * (k - kp)
        if epsilon is None:
            epsilon = slope * half_window / 25.0
        width = epsilon / slope
        L_min = 2.0 * math.pi * modes_per_width / width
        L = L_min if L is None else max(L, L_min)

        analytic = on_shell_coefficient(k, omega, d, cap, n)
        values, trace, sizes = [], [], []
        eps, box = epsilon, L
        for _ in range(levels):
            value, size = _discrete_coefficient(k, omega, d, cap, n, eps, box, half_window)
            values.append(value)
            sizes.append(size)
            trace.append((eps, _rel(value, analytic)))
            eps, box = eps / 2.0, box * 2.0
        extrapolated = _richardson(values) if levels >= 3 else values[-1]
        err = _rel(extrapolated, analytic)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        return VerificationReport(
            name="golden-rule", analytic_value=math.nan, oracle_value=math.nan,
            relative_error=math.inf, tolerance=tolerance, details={"error": str(exc)},
        )
    return VerificationReport(
        name="golden-rule",
        analytic_value=analytic,
        oracle_value=extrapolated,
        relative_error=err,
        tolerance=tolerance,
        trace=trace,
        details={
            "n": n,
            "initial_epsilon_J": epsilon,
            "initial_box_length_m": L,
            "modes_per_width": modes_per_width,
            "mode_counts": sizes,
            "raw_values": values,
        },
    )


def fit_photon_exponent(k: float, omega: float, params: km.KlystronParams, photon_numbers=(0, 1, 2, 3), **kwargs):
    """Log-log slope of the extrapolated coefficient against (n + 1)."""
    values = [golden_rule_sum(k, omega, params, n=n, **kwargs).oracle_value for n in photon_numbers]
    x = np.log(np.asarray(photon_numbers, dtype=float) + 1.0)
    slope, _ = np.polyfit(x, np.log(values), 1)
    return float(slope), values


def default_golden_rule_setup() -> tuple[float, float, km.KlystronParams]:
    """Design point of the 1 GHz / 1 mm example: (k, omega, params)."""
    omega = 2.0 * math.pi * 1e9
    d = 1e-3
    gamma = 4.0934720057
    v = omega * d / (2.0 * gamma)
    params = km.KlystronParams(omega=omega, d=d, v=v, quant_volume=1e-6, effective_area=1e-4, N=1e6)
    return ELECTRON_MASS * v / HBAR, omega, params


# --------------------------------------------------------------------------
# Small-alpha expansion of the final wavenumber


def expansion_remainder(alpha) -> mpmath.mpf:
    """|[1 - alpha(1 + alpha/2)] - sqrt(1 - 2 alpha)| at 50 significant digits."""
    with mpmath.workdps(50):
        a = mpmath.mpf(alpha)
        return abs((1 - a * (1 + a / 2)) - mpmath.sqrt(1 - 2 * a))


def verify_expansion(
    alpha_schedule=(1e-2, 1e-3, 1e-4, 1e-5),
    k: float = 1e4,
    order_tolerance: float = EXPANSION_ORDER_TOL,
    constant_tolerance: float = EXPANSION_CONSTANT_TOL,
) -> list[VerificationReport]:
    """Fit the order and constant of the approximate-vs-exact wavenumber remainder.

    Returns two reports: the log-log slope (expected 3) and err/alpha^3 at the
    smallest alpha (expected 1/2). The remainders are computed in extended
    precision; the float library functions are only checked for agreement with
    the same extended-precision values.
    """
    alphas = sorted((float(a) for a in alpha_schedule), reverse=True)
    if len(alphas) < 3:
        raise ValueError("alpha schedule needs at least 3 points")
    if not all(0 < a < 0.1 for a in alphas):
        raise ValueError("every alpha in the schedule must lie in (0, 0.1)")

    errors = [float(expansion_remainder(a)) for a in alphas]
    slope, _ = np.polyfit(np.log(alphas), np.log(errors), 1)
    constant = errors[-1] / alphas[-1] ** 3

    worst_float = 0.0
    for a in alphas:
        omega = a * HBAR * k * k / ELECTRON_MASS
        with mpmath.workdps(50):
            exact = float(k * mpmath.sqrt(1 - 2 * mpmath.mpf(a)))
            approx = float(k * (1 - mpmath.mpf(a) * (1 + mpmath.mpf(a) / 2)))
        worst_float = max(
            worst_float,
            _rel(km.wavenumber_after_emission_exact(k, omega), exact),
            _rel(km.wavenumber_after_emission_approx(k, omega), approx),
        )

    order_err = abs(slope - 3.0) / 3.0
    const_err = abs(constant - 0.5) / 0.5
    trace = list(zip(alphas, errors))
    details = {"alphas": alphas, "remainders": errors, "float_library_max_rel_dev": worst_float}
    return [
        VerificationReport(
            name="expansion-order", analytic_value=3.0, oracle_value=float(slope),
            relative_error=order_err, tolerance=order_tolerance / 3.0, trace=trace, details=details,
        ),
        VerificationReport(
            name="expansion-constant", analytic_value=0.5, oracle_value=float(constant),
            relative_error=const_err, tolerance=constant_tolerance / 0.5, trace=trace, details=details,
        ),
    ]


# --------------------------------------------------------------------------
# Rate identity


def _independent_rates(p: km.KlystronParams) -> tuple[float, float, float]:
    # (stimulated, spontaneous, total) rebuilt term by term
    e, m, hb = ELEMENTARY_CHARGE, ELECTRON_MASS, HBAR
    J0 = e * p.v * p.N / p.quant_volume
    Ep = p.n * hb * p.omega
    gamma = p.omega * p.d / (2.0 * p.v)
    g = (gamma / math.tan(gamma) - 1.0) * math.sin(gamma) ** 4
    scale = (J0 / (p.C * p.d * p.d)) ** 2
    base = math.pi**3 * scale / (m * hb**4 * p.omega**7)
    vel = 16.0 * math.pi**3 * scale * p.v**2 / (hb**3 * p.omega**6)
    stim = 64.0 * base * Ep**2 * g
    spont = 32.0 * base * (hb * p.omega) ** 2 * g + vel
    total = 32.0 * base * (2.0 * Ep**2 + (hb * p.omega) ** 2) * g + vel
    return stim, spont, total


def random_params(rng: np.random.Generator, omega_scale: float = 1.0) -> km.KlystronParams:
    """Random valid parameter set: GHz-range field, sub-mm to cm gaps, v/c < 1e-2, alpha < 0.1."""
    while True:
        omega = 2.0 * math.pi * 10 ** rng.uniform(8, 11) * omega_scale
        d = 10 ** rng.uniform(-4, -2)
        v = 10 ** rng.uniform(5, math.log10(2.9e6))
        if HBAR * omega / (ELECTRON_MASS * v * v) >= 0.1:
            continue
        return km.KlystronParams(
            omega=omega,
            d=d,
            v=v,
            quant_volume=10 ** rng.uniform(-8, -4),
            effective_area=10 ** rng.uniform(-6, -3),
            N=float(round(10 ** rng.uniform(0, 8))),
            n=float(rng.integers(0, 10**6)),
        )


def verify_rate_identity(params, tolerance: float = IDENTITY_TOL) -> VerificationReport:
    """Check total = stimulated + spontaneous and both components against a term-by-term rebuild.

    ``params`` may be a single parameter set or a sequence of them; the worst
    relative deviation is reported.
    """
    if isinstance(params, km.KlystronParams):
        params = [params]
    worst = 0.0
    worst_stim_at_n0 = 0.0
    for p in params:
        rates = km.rate_total(p)
        scale = abs(rates.stimulated) + abs(rates.spontaneous)
        ident = abs(rates.total - (rates.stimulated + rates.spontaneous)) / scale if scale else 0.0
        stim, spont, total = _independent_rates(p)
        worst = max(
            worst,
            ident,
            abs(rates.stimulated - stim) / scale if scale else 0.0,
            abs(rates.spontaneous - spont) / scale if scale else 0.0,
            abs(rates.total - total) / scale if scale else 0.0,
            # bracket form vs split form of the stimulated coefficient
            abs(total - (stim + spont)) / scale if scale else 0.0,
        )
        if p.n == 0:
            worst_stim_at_n0 = max(worst_stim_at_n0, abs(rates.stimulated))
    if worst_stim_at_n0 != 0.0:
        worst = math.inf
    return VerificationReport(
        name="identity", analytic_value=0.0, oracle_value=worst, relative_error=worst,
        tolerance=tolerance, details={"parameter_sets": len(params)},
    )


# --------------------------------------------------------------------------
# PPT / negativity


def partial_transpose(rho) -> np.ndarray:
    """Transpose of the second qubit of a 4x4 two-qubit matrix."""
    m = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return m.transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_negativity(rho) -> tuple[bool, float]:
    """``(is_entangled, negativity)`` from the partial-transpose spectrum.

    Negativity is the sum of |negative eigenvalues|; for two qubits a state is
    entangled exactly when it exceeds the 1e-10 noise floor.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix4) else DensityMatrix4(rho).matrix
    ev = np.linalg.eigvalsh(partial_transpose(m))
    neg = max(0.0, float(-ev[ev < 0].sum()))
    return neg > PPT_TOL, neg


def verify_ppt(samples: int = 200, seed: int = 0, tolerance: float = 0.0) -> VerificationReport:
    """Fraction of random two-qubit states where concurrence and PPT disagree on entanglement."""
    from qklyst.quantum_state import concurrence, werner_state

    rng = np.random.default_rng(seed)
    states = [random_density_matrix(rng) for _ in range(samples)]
    states += [werner_state(p).matrix for p in np.linspace(0, 1, 31)]
    mismatches = 0
    for m in states:
        c = concurrence(m)
        ent, _ = ppt_negativity(m)
        if (c > PPT_TOL) != ent:
            mismatches += 1
    frac = mismatches / len(states)
    return VerificationReport(
        name="ppt", analytic_value=0.0, oracle_value=frac, relative_error=frac,
        tolerance=tolerance, details={"states": len(states), "mismatches": mismatches},
    )


def random_density_matrix(rng: np.random.Generator, max_rank: int = 4) -> np.ndarray:
    """Mixture of 1..max_rank Haar-ish random pure states with random weights."""
    rank = int(rng.integers(1, max_rank + 1))
    psi = rng.normal(size=(rank, 4)) + 1j * rng.normal(size=(rank, 4))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    w = rng.dirichlet(np.ones(rank))
    rho = np.einsum("r,ri,rj->ij", w, psi, psi.conj())
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


# --------------------------------------------------------------------------


SUITES = ("quadrature", "golden-rule", "expansion", "identity", "ppt")


def run_suite(name: str = "all", tolerance: float | None = None) -> list[VerificationReport]:
    """Run one oracle suite (or all). ``tolerance`` overrides every check's tolerance."""
    names = SUITES if name == "all" else (name,)
    if any(s not in SUITES for s in names):
        raise ValueError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    tol = {} if tolerance is None else {"tolerance": tolerance}
    reports: list[VerificationReport] = []
    for s in names:
        if s == "quadrature":
            reports.append(verify_quadrature(**tol))
        elif s == "golden-rule":
            k, omega, params = default_golden_rule_setup()
            reports.append(golden_rule_sum(k, omega, params, **tol))
        elif s == "expansion":
            extra = {} if tolerance is None else {"order_tolerance": tolerance, "constant_tolerance": tolerance}
            reports.extend(verify_expansion(**extra))
        elif s == "identity":
            rng = np.random.default_rng(0)
            reports.append(verify_rate_identity([random_params(rng) for _ in range(100)], **tol))
        elif s == "ppt":
            reports.append(verify_ppt(**tol))
    return reports
