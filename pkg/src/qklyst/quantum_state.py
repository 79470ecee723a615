"""
Two-photon polarization algebra for the klystron amplifier.

Every two-photon object lives in the four-dimensional basis

    index 0: XX    index 1: XY    index 2: YX    index 3: YY

where the first letter is photon 1 and the second is photon 2. The
polarization labels are realized on Fock rails of the two output modes,

    |X>  ==  |n+1, 0>      |Y>  ==  |0, n+1>

(``|n, 0>`` / ``|0, n>`` before amplification). Only the rail label matters for
any quantity computed here, so the photon number ``n`` is carried as metadata
and never expanded into a Fock-space array.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from qklyst.errors import ModelRangeError

BASIS: tuple[str, ...] = ("XX", "XY", "YX", "YY")
BASIS_INDEX = {label: i for i, label in enumerate(BASIS)}

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
EIG_CLAMP = 1e-10

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


class Bell(str, enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"


class WernerConvention(str, enum.Enum):
    """Sign of the intermediate-spin term in the Werner entanglement parameter.

    ``AS_PRINTED`` uses ``3/4 - S_M(S_M+1) - S_I(S_I+1)``; ``EXAMPLE_CONSISTENT``
    uses ``3/4 + S_M(S_M+1) - S_I(S_I+1)``, which is the variant that gives
    ``p = 1`` for the singlet-to-singlet Auger process.
    """

    AS_PRINTED = "as-printed"
    EXAMPLE_CONSISTENT = "example-consistent"


def fock_label(label: str, n: int) -> str:
    """Fock-rail ket for a basis label, e.g. ``fock_label("XY", 2) == "|2,0>_1 |0,2>_2"``."""
    rails = {"X": f"|{n},0>", "Y": f"|0,{n}>"}
    return " ".join(f"{rails[pol]}_{i + 1}" for i, pol in enumerate(label))


@dataclass(frozen=True)
class TwoPhotonState:
    """Normalized pure polarization state of a photon pair.

    ``photon_number`` is the rail occupation ``n`` the labels refer to; it is
    informational only.
    """

    amplitudes: np.ndarray
    photon_number: int | None = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes (XX, XY, YX, YY), got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: sum |a|^2 = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def product(cls, pol1: str, pol2: str) -> TwoPhotonState:
        amps = np.zeros(4, dtype=complex)
        amps[BASIS_INDEX[pol1 + pol2]] = 1.0
        return cls(amps)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[BASIS_INDEX[label]])

    def fock_terms(self, n: int | None = None) -> list[tuple[str, complex]]:
        """Non-zero branches as ``(fock ket, amplitude)`` pairs."""
        n = self.photon_number if n is None else n
        if n is None:
            raise ValueError("photon number unknown; pass n explicitly")
        return [
            (fock_label(label, n), complex(a))
            for label, a in zip(BASIS, self.amplitudes)
            if a != 0
        ]


class DensityMatrix4:
    """Validated 4x4 two-qubit density matrix in the (XX, XY, YX, YY) basis.

    Construction checks Hermiticity (max elementwise deviation 1e-12), unit
    trace (1e-12) and positivity (smallest eigenvalue >= -1e-10).
    """

    __slots__ = ("_m",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (deviation {herm_dev:.3e})")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(m).min())
        if lam_min < -PSD_TOL:
            raise ValueError(f"density matrix is not positive semidefinite (eigenvalue {lam_min:.3e})")
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def __array__(self, dtype=None, copy=None):
        return np.array(self._m, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix4({np.array2string(self._m, precision=4)})"

    def element(self, row: str, col: str) -> complex:
        return complex(self._m[BASIS_INDEX[row], BASIS_INDEX[col]])

    def purity(self) -> float:
        return float(np.trace(self._m @ self._m).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._m)


def _as_density(rho) -> DensityMatrix4:
    return rho if isinstance(rho, DensityMatrix4) else DensityMatrix4(rho)


def bell_state(kind: Bell | str) -> TwoPhotonState:
    """Return one of the four Bell states.

    Phi(+/-) = (XY +/- YX)/sqrt2 and Psi(+/-) = (XX +/- YY)/sqrt2.
    """
    kind = Bell(kind)
    s = 1 / np.sqrt(2)
    amps = {
        Bell.PHI_PLUS: (0, s, s, 0),
        Bell.PHI_MINUS: (0, s, -s, 0),
        Bell.PSI_PLUS: (s, 0, 0, s),
        Bell.PSI_MINUS: (s, 0, 0, -s),
    }[kind]
    return TwoPhotonState(np.array(amps, dtype=complex))


def density_matrix(state: TwoPhotonState | Sequence[complex]) -> DensityMatrix4:
    """Projector |psi><psi| of a normalized pure state."""
    if not isinstance(state, TwoPhotonState):
        state = TwoPhotonState(np.asarray(state, dtype=complex))
    psi = state.amplitudes
    return DensityMatrix4(np.outer(psi, psi.conj()))


def partial_trace_environment(
    branch_amplitudes: Iterable[tuple[str, complex, Hashable]],
    overlap: Callable[[Hashable, Hashable], complex],
) -> DensityMatrix4:
    """Photon density matrix after tracing out an environment register.

    Each branch is ``(basis label, amplitude, environment label)``; the joint
    state is ``sum_a amp_a |label_a>|env_a>``. ``overlap(e1, e2)`` must return
    the inner product ``<e2|e1>`` of the environment states, so that

        rho[i, j] = amp_i * conj(amp_j) * overlap(env_i, env_j).
    """
    branches = [(label, complex(amp), env) for label, amp, env in branch_amplitudes]
    for label, _, _ in branches:
        if label not in BASIS_INDEX:
            raise ValueError(f"unknown basis label {label!r}; expected one of {BASIS}")

    envs = list(dict.fromkeys(env for _, _, env in branches))
    table = {}
    for a, b in itertools.product(envs, repeat=2):
        table[a, b] = complex(overlap(a, b))
    for a in envs:
        if abs(table[a, a] - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"overlap({a!r}, {a!r}) = {table[a, a]!r}, expected 1")
    for a, b in itertools.combinations(envs, 2):
        if abs(table[a, b] - table[b, a].conjugate()) > HERMITIAN_TOL:
            raise ValueError(f"overlap table is not Hermitian for ({a!r}, {b!r})")
        if abs(table[a, b]) > 1.0 + HERMITIAN_TOL:
            raise ValueError(f"|overlap({a!r}, {b!r})| exceeds 1")

    rho = np.zeros((4, 4), dtype=complex)
    for (li, ai, ei), (lj, aj, ej) in itertools.product(branches, repeat=2):
        rho[BASIS_INDEX[li], BASIS_INDEX[lj]] += ai * aj.conjugate() * table[ei, ej]
    return DensityMatrix4(rho)


def gap_signature(label: str, n: int) -> tuple[int, int]:
    """Photons left on the (X rail, Y rail) by a branch after one-pair amplification.

    Each photon of the pair ends on its rail with ``n + 1`` quanta, so XY and YX
    share the signature ``(n+1, n+1)`` while XX and YY give ``(2n+2, 0)`` and
    ``(0, 2n+2)``.
    """
    return (label.count("X") * (n + 1), label.count("Y") * (n + 1))


def amplify_channel(state: TwoPhotonState, n: int, eta: float) -> DensityMatrix4:
    """Reduced photon state after the klystron adds one photon to each beam.

    Branches whose gap-excitation signatures agree leave the electrons in the
    same final state and stay coherent. Branches with different signatures keep
    a fraction ``eta`` of their coherence, the overlap of the two electron final
    states (``eta = 0``: fully distinguishable electrons).
    """
    if int(n) != n or n < 1:
        raise ValueError(f"photon number n must be an integer >= 1, got {n!r}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    if not isinstance(state, TwoPhotonState):
        state = TwoPhotonState(state)
    n = int(n)

    branches = [
        (label, a, gap_signature(label, n))
        for label, a in zip(BASIS, state.amplitudes)
        if a != 0
    ]

    def overlap(s1, s2):
        return 1.0 if s1 == s2 else eta

    return partial_trace_environment(branches, overlap)


def concurrence(rho: DensityMatrix4 | np.ndarray) -> float:
    """Concurrence of a two-qubit state.

    Uses the spin-flipped product ``R = rho (Y x Y) rho* (Y x Y)``; the square
    roots of its eigenvalues, sorted decreasingly, give
    ``C = max(0, l1 - l2 - l3 - l4)``.
    """
    m = _as_density(rho).matrix
    r = m @ _YY @ m.conj() @ _YY
    ev = np.linalg.eigvals(r).real
    ev[np.abs(ev) < EIG_CLAMP] = 0.0
    lam = np.sort(np.sqrt(np.clip(ev, 0.0, None)))[::-1]
    c = lam[0] - lam[1] - lam[2] - lam[3]
    return float(min(1.0, max(0.0, c)))


def werner_state(p: float, bell: Bell | str = Bell.PHI_MINUS) -> DensityMatrix4:
    """``p |Bell><Bell| + (1 - p) I/4``; the default Bell state is the singlet (XY - YX)/sqrt2."""
    if not 0.0 <= p <= 1.0:
        raise ModelRangeError(f"Werner parameter p = {p!r} is outside [0, 1]", p)
    psi = bell_state(bell).amplitudes
    return DensityMatrix4(p * np.outer(psi, psi.conj()) + (1.0 - p) * np.eye(4) / 4)


def _half_integer(value, name: str) -> Fraction:
    frac = Fraction(value).limit_denominator(1000)
    if abs(float(frac) - float(value)) > 1e-12 or frac < 0 or (2 * frac).denominator != 1:
        raise ValueError(f"{name} must be a non-negative half-integer, got {value!r}")
    return frac


@dataclass(frozen=True)
class WernerSpec:
    """Spins of the photoionization-Auger cascade A(S_I) -> A+(S_M) -> A2+(S_F)."""

    s_i: float
    s_m: float
    s_f: float
    convention: WernerConvention = field(default=WernerConvention.EXAMPLE_CONSISTENT)

    def __post_init__(self):
        for name in ("s_i", "s_m", "s_f"):
            _half_integer(getattr(self, name), name)
        object.__setattr__(self, "convention", WernerConvention(self.convention))

    @property
    def p(self) -> float:
        return werner_p(self)


def werner_p_formula(s_i: float, s_m: float, convention=WernerConvention.EXAMPLE_CONSISTENT) -> float:
    """Unchecked float evaluation of the Werner parameter for S_I = S_F (any real spins)."""
    sign = 1.0 if WernerConvention(convention) is WernerConvention.EXAMPLE_CONSISTENT else -1.0
    mid = s_m * (s_m + 1.0)
    return (0.75 + sign * mid - s_i * (s_i + 1.0)) ** 2 / (3.0 * mid)


def werner_p(spec: WernerSpec) -> float:
    """Entanglement parameter of the photoelectron-Auger-electron Werner state.

    Defined for ``S_I == S_F`` and ``S_M > 0``. A value outside [0, 1] raises
    :class:`ModelRangeError` carrying the raw number; it is never clamped.
    """
    s_i = _half_integer(spec.s_i, "s_i")
    s_m = _half_integer(spec.s_m, "s_m")
    s_f = _half_integer(spec.s_f, "s_f")
    if s_i != s_f:
        raise ValueError(f"p is only defined for S_I == S_F (got S_I={spec.s_i}, S_F={spec.s_f})")
    if s_m == 0:
        raise ValueError("p is only defined for S_M > 0")

    sign = 1 if WernerConvention(spec.convention) is WernerConvention.EXAMPLE_CONSISTENT else -1
    mid = s_m * (s_m + 1)
    num = (Fraction(3, 4) + sign * mid - s_i * (s_i + 1)) ** 2
    p = float(num / (3 * mid))
    if not 0.0 <= p <= 1.0:
        raise ModelRangeError(
            f"p(S_I={spec.s_i}, S_M={spec.s_m}, S_F={spec.s_f}) = {p!r} lies outside [0, 1]", p
        )
    return p
