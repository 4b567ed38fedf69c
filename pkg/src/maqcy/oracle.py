"""Dense gate-level reference simulator (no pulses, no blockade).

Qubit ordering is little-endian: qubit 0 is the least significant bit of the
basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pulses import HADAMARD, PAULI_X, phase_gate

NORM_TOL = 1e-12


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """Logical gate. ``param`` is an angle in radians (P and CP only)."""

    name: str
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = GATE_ARITY.get(self.name)
        if arity is None:
            raise OracleError(f"unknown gate {self.name!r}")
        if len(self.qubits) != arity:
            raise OracleError(f"{self.name} takes {arity} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise OracleError(f"{self.name} repeats a qubit")
        if self.name in ("P", "CP") and self.param is None:
            raise OracleError(f"{self.name} needs an angle")


GATE_ARITY = {"H": 1, "X": 1, "P": 1, "CZ": 2, "CX": 2, "CP": 2, "SWAP": 2}


def qft_angle(q: int) -> float:
    """Discrete controlled-phase angle 2*pi / 2^q."""
    return 2 * math.pi / 2 ** q


def gate_matrix(gate: Gate) -> np.ndarray:
    """Matrix on the gate's own qubits, little-endian in ``gate.qubits`` order."""
    name = gate.name
    if name == "H":
        return HADAMARD.copy()
    if name == "X":
        return PAULI_X.copy()
    if name == "P":
        return phase_gate(gate.param)
    if name == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if name == "CP":
        return np.diag([1, 1, 1, np.exp(1j * gate.param)]).astype(complex)
    if name == "SWAP":
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    if name == "CX":
        # qubits = (control, target); control is bit 0 of the local index
        m = np.zeros((4, 4), dtype=complex)
        for i in range(4):
            c, t = i & 1, (i >> 1) & 1
            m[c | ((t ^ c) << 1), i] = 1
        return m
    raise OracleError(f"unknown gate {name!r}")


def apply_gate(state: np.ndarray, gate: Gate, n: int | None = None) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if n is None:
        n = int(round(math.log2(state.size)))
    if state.shape != (2 ** n,):
        raise OracleError("state size is not a power of two")
    if any(q < 0 or q >= n for q in gate.qubits):
        raise OracleError(f"qubit index out of range for {n} qubits")
    k = len(gate.qubits)
    # tensor axis a <-> qubit n-1-a; local gate index bit j <-> gate.qubits[j]
    t = state.reshape((2,) * n)
    axes = [n - 1 - q for q in reversed(gate.qubits)]
    t = np.moveaxis(t, axes, list(range(k)))
    shape = t.shape
    t = gate_matrix(gate) @ t.reshape(2 ** k, -1)
    t = np.moveaxis(t.reshape(shape), list(range(k)), axes)
    return t.reshape(-1)


def circuit_unitary(gates, n: int) -> np.ndarray:
    u = np.eye(2 ** n, dtype=complex)
    for gate in gates:
        u = np.stack([apply_gate(u[:, j], gate, n) for j in range(2 ** n)], axis=1)
    return u


def embed(gate: Gate, n: int) -> np.ndarray:
    """Full 2^n matrix of one gate, built by explicit index arithmetic."""
    local = gate_matrix(gate)
    dim = 2 ** n
    full = np.zeros((dim, dim), dtype=complex)
    qs = gate.qubits
    for col in range(dim):
        lin = sum(((col >> q) & 1) << j for j, q in enumerate(qs))
        base = col
        for q in qs:
            base &= ~(1 << q)
        for lout in range(2 ** len(qs)):
            row = base
            for j, q in enumerate(qs):
                row |= ((lout >> j) & 1) << q
            full[row, col] += local[lout, lin]
    return full


def qft_matrix(n: int) -> np.ndarray:
    if not 1 <= n <= 10:
        raise OracleError("qft_matrix supports 1 <= n <= 10")
    dim = 2 ** n
    j = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(j, j) / dim) / math.sqrt(dim)


def basis_state(index: int, n: int) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    v[index] = 1
    return v


def fidelity_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise OracleError("dimension mismatch")
    return float(abs(np.vdot(a, b)) ** 2)
