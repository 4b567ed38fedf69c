"""Resonant-pulse SU(2) algebra for single atoms and superatoms.

All matrices are 2x2 complex arrays in the ordered basis ``(g, r)``.  A pulse
of single-atom area ``theta`` and phase ``phi`` rotates a single atom by
``theta`` about the equatorial axis ``(cos phi, sin phi, 0)``; the same pulse
rotates a superatom of ``M`` atoms by ``sqrt(M) * theta``.  Composite
sequences are written left to right as operators, so the *rightmost* pulse is
applied first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

SINGLE = "single"
SUPERATOM = "superatom"
KINDS = (SINGLE, SUPERATOM)

#: Superatom size for which the published composite sequences are defined.
DEFAULT_M = 4

UNITARITY_TOL = 1e-12
IDENTITY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class PulseSpec:
    """One global resonant pulse addressed to a species.

    ``area_theta`` is the single-atom pulse area (Omega * tau); ``phase_phi``
    is stored in ``[0, 2*pi)``.  ``inverse`` marks the Hermitian conjugate.
    """

    species: str
    area_theta: float
    phase_phi: float = 0.0
    inverse: bool = False

    def __post_init__(self):
        if self.species not in ("A", "B"):
            raise ValueError(f"unknown species {self.species!r}")
        if self.area_theta < 0:
            raise ValueError("pulse area must be non-negative")
        phi = math.fmod(float(self.phase_phi), TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:  # fmod of values just below 2*pi after the shift
            phi = 0.0
        object.__setattr__(self, "phase_phi", phi)
        object.__setattr__(self, "area_theta", float(self.area_theta))

    def effective_phase(self) -> float:
        """Phase of the equivalent forward pulse (U^dagger(theta, phi) = U(theta, phi + pi))."""
        return self.phase_phi + math.pi if self.inverse else self.phase_phi


@dataclass(frozen=True)
class CompositeSequence:
    """Ordered pulses (rightmost applied first) plus per-kind phase corrections.

    ``corrective`` maps a kind to ``(prefactor, angle)``; the corrected
    operator is ``prefactor * phase_gate(angle) @ raw``.
    """

    name: str
    pulses: tuple[PulseSpec, ...]
    corrective: Mapping[str, tuple[complex, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.pulses:
            raise ValueError("composite sequence must contain at least one pulse")
        object.__setattr__(self, "pulses", tuple(self.pulses))

    def applied_order(self) -> tuple[PulseSpec, ...]:
        """Pulses in the order they hit the atoms (reverse of operator order)."""
        return tuple(reversed(self.pulses))


def _check_kind(kind: str, m: int) -> None:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind == SUPERATOM and m < 2:
        raise ValueError("a superatom needs M >= 2")


def rotation_angle_unitary(theta: float, phi: float) -> np.ndarray:
    """``cos(theta/2) I - i sin(theta/2) (cos(phi) X + sin(phi) Y)``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * s * complex(math.cos(phi), -math.sin(phi))],
         [-1j * s * complex(math.cos(phi), math.sin(phi)), c]],
        dtype=complex,
    )


def effective_area(spec: PulseSpec, kind: str = SINGLE, m: int = DEFAULT_M) -> float:
    """Rotation angle actually experienced by a qubit of ``kind``."""
    _check_kind(kind, m)
    return spec.area_theta * (math.sqrt(m) if kind == SUPERATOM else 1.0)


def rotation(spec: PulseSpec, kind: str = SINGLE, m: int = DEFAULT_M) -> np.ndarray:
    """Unitary of a single resonant pulse on a single atom or an M-atom superatom.

    For the default ``M = 4`` the superatom sees twice the single-atom area.
    """
    u = rotation_angle_unitary(effective_area(spec, kind, m), spec.phase_phi)
    return u.conj().T if spec.inverse else u


def phase_gate(phi: float) -> np.ndarray:
    """diag(1, e^{i phi})."""
    return np.diag([1.0, np.exp(1j * phi)]).astype(complex)


def raw_product(seq: CompositeSequence, kind: str = SINGLE, m: int = DEFAULT_M) -> np.ndarray:
    out = I2.copy()
    for spec in seq.pulses:
        out = out @ rotation(spec, kind, m)
    return out


def compose(seq: CompositeSequence, kind: str = SINGLE, m: int = DEFAULT_M,
            corrected: bool = True) -> np.ndarray:
    """Matrix product of the sequence, with the kind's corrective phase applied last."""
    u = raw_product(seq, kind, m)
    if corrected and kind in seq.corrective:
        prefactor, angle = seq.corrective[kind]
        u = prefactor * phase_gate(angle) @ u
    return u


def is_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    u = np.asarray(u)
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u.conj().T @ u - eye)) <= tol
                and abs(abs(np.linalg.det(u)) - 1) <= tol)


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """max_ij |u - lam v| with the unit phase lam taken from tr(v^dagger u)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.vdot(v, u)
    lam = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.max(np.abs(u - lam * v)))


def equal_up_to_global_phase(u: np.ndarray, v: np.ndarray, tol: float = IDENTITY_TOL) -> bool:
    return global_phase_distance(u, v) <= tol


def diagonal_correction(raw: np.ndarray) -> tuple[complex, float]:
    """(prefactor, angle) turning a diagonal unitary into exactly the identity."""
    if abs(raw[0, 1]) > IDENTITY_TOL or abs(raw[1, 0]) > IDENTITY_TOL:
        raise ValueError("correction only defined for diagonal unitaries")
    angle = float(np.angle(raw[0, 0]) - np.angle(raw[1, 1]))
    return complex(np.exp(-1j * np.angle(raw[0, 0]))), angle


def _seq(name: str, species: str, pulses: Sequence[tuple[float, float, bool]],
         corrective: Mapping[str, tuple[complex, float]] | None = None) -> CompositeSequence:
    specs = tuple(PulseSpec(species, theta, phi, inv) for theta, phi, inv in pulses)
    return CompositeSequence(name, specs, dict(corrective or {}))


_PI = math.pi

# Operator order, rightmost first; areas are single-atom areas.
_BITFLIP_PULSES = [(_PI / 4, 0.0, False), (_PI, _PI / 2, False), (_PI / 4, 0.0, False)]
_SUPER_BITFLIP_PULSES = [(_PI / 2, 0.0, True), (_PI / 2, _PI / 2, False), (_PI / 2, 0.0, False)]
_SUPER_HADAMARD_PULSES = [(_PI / 2, 0.0, True), (_PI / 4, _PI / 2, False), (_PI / 2, 0.0, False)]
_MEDIATOR_PULSES = [(_PI / 4, _PI / 2, False), (_PI, 0.0, False), (_PI / 2, _PI / 2, False),
                    (_PI, 0.0, False), (_PI / 4, _PI / 2, False)]


def _with_single_identity(name: str, pulses, super_fix: tuple[complex, float],
                          species: str = "A") -> CompositeSequence:
    bare = _seq(name, species, pulses)
    fix_single = diagonal_correction(raw_product(bare, SINGLE))
    return _seq(name, species, pulses, {SINGLE: fix_single, SUPERATOM: super_fix})


def bitflip_sequence(species: str = "A") -> CompositeSequence:
    """Three-pulse global bit flip: X on single atoms, X-bar on superatoms."""
    return _seq("global_bitflip", species, _BITFLIP_PULSES,
                {SINGLE: (-1.0 + 0j, _PI), SUPERATOM: (-1j, 0.0)})


def superatom_bitflip_sequence(species: str = "A") -> CompositeSequence:
    """Flips superatoms, leaves single atoms alone (up to a diagonal phase)."""
    return _with_single_identity("superatom_only_bitflip", _SUPER_BITFLIP_PULSES,
                                 (1.0 + 0j, -_PI), species)


def superatom_hadamard_sequence(species: str = "A") -> CompositeSequence:
    """Hadamard on superatoms, diagonal phase on single atoms."""
    return _with_single_identity("superatom_only_hadamard", _SUPER_HADAMARD_PULSES,
                                 (1.0 + 0j, _PI), species)


def mediator_sequence(species: str = "B") -> CompositeSequence:
    """Five-pulse sequence equal to -I on both single atoms and superatoms."""
    return _seq("cz_mediator", species, _MEDIATOR_PULSES)


def _require_m4(kind: str, m: int) -> None:
    _check_kind(kind, m)
    if kind == SUPERATOM and m != DEFAULT_M:
        raise ValueError("composite sequences are defined for superatoms of size M = 4 only")


def global_bitflip(kind: str = SINGLE, m: int = DEFAULT_M, corrected: bool = True) -> np.ndarray:
    _require_m4(kind, m)
    return compose(bitflip_sequence(), kind, m, corrected)


def superatom_only_bitflip(kind: str = SINGLE, m: int = DEFAULT_M,
                           corrected: bool = True) -> np.ndarray:
    _require_m4(kind, m)
    return compose(superatom_bitflip_sequence(), kind, m, corrected)


def superatom_only_hadamard(kind: str = SINGLE, m: int = DEFAULT_M,
                            corrected: bool = True) -> np.ndarray:
    _require_m4(kind, m)
    return compose(superatom_hadamard_sequence(), kind, m, corrected)


def cz_mediator_sequence(kind: str = SINGLE, m: int = DEFAULT_M) -> np.ndarray:
    _require_m4(kind, m)
    return compose(mediator_sequence(), kind, m)
