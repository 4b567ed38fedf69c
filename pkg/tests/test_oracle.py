import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maqcy.compiler import QFT3_CIRCUIT
from maqcy.oracle import (GATE_ARITY, Gate, OracleError, apply_gate, basis_state, circuit_unitary,
                          embed, fidelity_up_to_phase, gate_matrix, qft_angle, qft_matrix)

S2 = 1 / math.sqrt(2)


@st.composite
def gates(draw, n):
    name = draw(st.sampled_from(sorted(GATE_ARITY)))
    k = GATE_ARITY[name]
    if k > n:
        name, k = "H", 1
    qubits = tuple(draw(st.permutations(range(n)))[:k])
    param = draw(st.floats(-7, 7, allow_nan=False)) if name in ("P", "CP") else None
    return Gate(name, qubits, param)


def bit_reversal(n):
    dim = 2 ** n
    p = np.zeros((dim, dim))
    for i in range(dim):
        p[int(format(i, f"0{n}b")[::-1], 2), i] = 1
    return p


class TestGate:
    def test_validation(self):
        with pytest.raises(OracleError):
            Gate("T", (0,))
        with pytest.raises(OracleError):
            Gate("CZ", (0,))
        with pytest.raises(OracleError):
            Gate("CZ", (1, 1))
        with pytest.raises(OracleError):
            Gate("P", (0,))

    def test_qft_angle(self):
        assert qft_angle(1) == pytest.approx(math.pi)
        assert qft_angle(3) == pytest.approx(math.pi / 4)


class TestFrozenValues:
    # hand-computed little-endian amplitudes
    def test_h_on_qubit0(self):
        out = apply_gate(basis_state(0, 2), Gate("H", (0,)))
        assert np.allclose(out, [S2, S2, 0, 0])

    def test_h_on_qubit1(self):
        out = apply_gate(basis_state(0, 2), Gate("H", (1,)))
        assert np.allclose(out, [S2, 0, S2, 0])

    def test_cx_control_is_first(self):
        assert np.allclose(apply_gate(basis_state(1, 2), Gate("CX", (0, 1))), basis_state(3, 2))
        assert np.allclose(apply_gate(basis_state(2, 2), Gate("CX", (0, 1))), basis_state(2, 2))
        assert np.allclose(apply_gate(basis_state(2, 2), Gate("CX", (1, 0))), basis_state(3, 2))

    def test_swap(self):
        assert np.allclose(apply_gate(basis_state(1, 3), Gate("SWAP", (0, 2))), basis_state(4, 3))

    def test_cp(self):
        out = apply_gate(basis_state(5, 3), Gate("CP", (0, 2), 0.3))
        assert out[5] == pytest.approx(np.exp(0.3j))

    def test_qft_matrix_entries(self):
        f = qft_matrix(2)
        assert f[1, 1] == pytest.approx(0.5j)
        assert f[3, 2] == pytest.approx(-0.5)


class TestQFT:
    def test_qft3_circuit_is_dft_up_to_bit_reversal(self):
        u = circuit_unitary(QFT3_CIRCUIT.gates, 3)
        assert np.allclose(bit_reversal(3) @ u, qft_matrix(3), atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_textbook_qft(self, n):
        gs = []
        for j in reversed(range(n)):
            gs.append(Gate("H", (j,)))
            for k in reversed(range(j)):
                gs.append(Gate("CP", (k, j), qft_angle(j - k + 1)))
        u = circuit_unitary(gs, n)
        assert np.allclose(bit_reversal(n) @ u, qft_matrix(n), atol=1e-12)

    def test_qft_unitary(self):
        f = qft_matrix(4)
        assert np.allclose(f.conj().T @ f, np.eye(16))

    def test_bounds(self):
        with pytest.raises(OracleError):
            qft_matrix(11)


class TestProperties:
    @settings(max_examples=60)
    @given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), gates(n))))
    def test_apply_matches_embed(self, case):
        n, gate = case
        u = circuit_unitary([gate], n)
        assert np.allclose(u, embed(gate, n), atol=1e-12)

    @settings(max_examples=30)
    @given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), st.lists(gates(n), max_size=6))))
    def test_circuit_unitary_is_unitary(self, case):
        n, gs = case
        u = circuit_unitary(gs, n)
        assert np.allclose(u.conj().T @ u, np.eye(2 ** n), atol=1e-10)

    @given(st.sampled_from(sorted(GATE_ARITY)))
    def test_gate_matrices_unitary(self, name):
        g = Gate(name, tuple(range(GATE_ARITY[name])), 0.4 if name in ("P", "CP") else None)
        m = gate_matrix(g)
        assert np.allclose(m.conj().T @ m, np.eye(len(m)))


def test_apply_errors():
    with pytest.raises(OracleError):
        apply_gate(np.ones(3), Gate("H", (0,)))
    with pytest.raises(OracleError):
        apply_gate(basis_state(0, 1), Gate("H", (3,)))


def test_fidelity_up_to_phase():
    v = basis_state(2, 2)
    assert fidelity_up_to_phase(v, 1j * v) == pytest.approx(1.0)
    with pytest.raises(OracleError):
        fidelity_up_to_phase(v, basis_state(0, 1))
