import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maqcy import blockade as bl
from maqcy.blockade import (DENSITY, DERIVED, EXACT, AtomRegistry, AtomSpec, BlockadeError,
                            GlobalPulseEvent, PhaseEvent, ProtocolViolation, QuantumState)
from maqcy.pulses import SINGLE, SUPERATOM, PulseSpec, rotation

PI = math.pi
areas = st.floats(0, 2 * PI, allow_nan=False)
phases = st.floats(0, 2 * PI, allow_nan=False)


def pair_registry(distance=3.0, kinds=(SINGLE, SINGLE), species=("A", "B")):
    a = AtomSpec("a", species[0], kinds[0], 4, (0.0, 0.0))
    b = AtomSpec("b", species[1], kinds[1], 4, (distance, 0.0))
    return AtomRegistry((a, b), 5.0)


def random_vector(rng, n):
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return v / np.linalg.norm(v)


class TestAtomSpec:
    def test_superatom_requires_m(self):
        with pytest.raises(BlockadeError):
            AtomSpec("x", "A", SUPERATOM, 1)
        assert AtomSpec("x", "A", SUPERATOM, 4).rabi_scale == 2.0

    def test_single_forces_m_one(self):
        assert AtomSpec("x", "A", SINGLE, 7).m == 1

    def test_bad_species_and_kind(self):
        with pytest.raises(BlockadeError):
            AtomSpec("x", "C")
        with pytest.raises(BlockadeError):
            AtomSpec("x", "A", "cluster")


class TestGraph:
    def test_edges_inside_radius(self):
        assert pair_registry(3.0).graph.adjacent("a", "b")
        assert not pair_registry(6.0).graph.adjacent("a", "b")

    def test_species_radii(self):
        atoms = pair_registry(4.0).atoms
        reg = AtomRegistry(atoms, {"AB": 3.0, "AA": 5.0, "BB": 5.0})
        assert len(reg.graph) == 0
        with pytest.raises(BlockadeError):
            AtomRegistry(atoms, {"AA": 5.0})

    def test_coincident_atoms_rejected(self):
        with pytest.raises(BlockadeError):
            pair_registry(0.0)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(BlockadeError):
            AtomRegistry((AtomSpec("a", "A"), AtomSpec("a", "B", position=(9, 0))))

    def test_parked_neighbours_excluded(self):
        reg = pair_registry().update("b", parked=True)
        assert reg.active_neighbors("a") == set()
        assert reg.graph.neighbors("a") == {"b"}

    def test_total_atoms(self):
        assert pair_registry(kinds=(SUPERATOM, SINGLE)).total_atoms() == 5


class TestRegistryText:
    def test_roundtrip(self):
        reg = pair_registry(kinds=(SUPERATOM, SINGLE))
        again = bl.parse_registry(bl.format_registry(reg))
        assert again.atoms == reg.atoms

    def test_comments_and_commas(self):
        reg = bl.parse_registry("# header\na, A, single, 1, 0, 0  # trailing\n\nb B superatom 4 9 0\n")
        assert reg.ids == ("a", "b") and reg["b"].m == 4

    def test_bad_line(self):
        with pytest.raises(BlockadeError, match="line 1"):
            bl.parse_registry("a A single 1 0\n")
        with pytest.raises(BlockadeError, match="line 2"):
            bl.parse_registry("a A single 1 0 0\nb A single x 0 9\n")


class TestQuantumState:
    def test_shape_checks(self):
        with pytest.raises(BlockadeError):
            QuantumState(("a",), np.zeros(4))
        with pytest.raises(BlockadeError):
            QuantumState(("a", "a"), np.zeros(4))

    def test_bit_order_first_atom_msb(self):
        s = QuantumState.product({"a": [0, 1], "b": [1, 0]})
        assert s.data[2] == 1
        assert s.rydberg_population("a") == 1.0 and s.rydberg_population("b") == 0.0

    def test_density_roundtrip(self):
        s = QuantumState.product({"a": [0.6, 0.8j]}, DENSITY)
        assert s.norm() == pytest.approx(1.0)
        assert np.allclose(s.probabilities(), [0.36, 0.64])


class TestPulses:
    def test_isolated_atoms_match_rotation(self):
        reg = pair_registry(10.0, species=("A", "A"))
        pulse = PulseSpec("A", 0.9, 0.4)
        rng = np.random.default_rng(1)
        v = random_vector(rng, 2)
        out = bl.apply_global_pulse(QuantumState(reg.ids, v), pulse, reg)
        u = rotation(pulse)
        assert np.allclose(out.data, np.kron(u, u) @ v, atol=1e-12)

    def test_species_selective(self):
        reg = pair_registry(10.0)
        s = QuantumState.ground(reg.ids)
        out = bl.apply_global_pulse(s, GlobalPulseEvent(PulseSpec("B", PI)), reg)
        assert out.rydberg_population("b") == pytest.approx(1.0)
        assert out.rydberg_population("a") == pytest.approx(0.0)

    def test_blockade_freezes_target(self):
        reg = pair_registry(3.0)
        s = QuantumState.product({"a": [0, 1], "b": [1, 0]})
        out = bl.apply_global_pulse(s, PulseSpec("B", PI), reg)
        assert np.allclose(out.data, s.data)

    def test_parked_atom_not_driven_not_blocking(self):
        reg = pair_registry(3.0).update("a", parked=True)
        s = QuantumState.product({"a": [0, 1], "b": [1, 0]})
        out = bl.apply_global_pulse(s, PulseSpec("B", PI), reg)
        assert out.rydberg_population("b") == pytest.approx(1.0)
        out = bl.apply_global_pulse(s, PulseSpec("A", PI), reg)
        assert np.allclose(out.data, s.data)

    def test_superatom_enhancement(self):
        reg = AtomRegistry((bl.superatom("s", "A"),))
        out = bl.apply_global_pulse(QuantumState.ground(reg.ids), PulseSpec("A", PI / 2), reg)
        assert out.rydberg_population("s") == pytest.approx(1.0)

    @settings(max_examples=40, deadline=None)
    @given(areas, phases, st.booleans(), st.integers(0, 2 ** 32 - 1))
    def test_derived_equals_exact(self, theta, phi, inverse, seed):
        # chain B - A - B - A with alternating species: no same-species edges
        atoms = tuple(AtomSpec(f"q{i}", "AB"[i % 2], (SINGLE, SUPERATOM)[i // 2 % 2], 4,
                               (3.0 * i, 0.0)) for i in range(4))
        reg = AtomRegistry(atoms, 5.0)
        s = QuantumState(reg.ids, random_vector(np.random.default_rng(seed), 4))
        pulse = PulseSpec("A", theta, phi, inverse)
        d = bl.apply_global_pulse(s, pulse, reg, DERIVED)
        e = bl.apply_global_pulse(s, pulse, reg, EXACT)
        assert np.allclose(d.data, e.data, atol=1e-10)

    def test_adjacent_targets_fall_back_to_exact(self):
        reg = pair_registry(3.0, species=("A", "A"))
        s = QuantumState.ground(reg.ids)
        out = bl.apply_global_pulse(s, PulseSpec("A", PI / math.sqrt(2)), reg, DERIVED)
        # blockaded pair: collective sqrt(2) enhancement to the W state
        assert out.probabilities()[0] == pytest.approx(0.0, abs=1e-12)
        assert out.probabilities()[3] == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(areas, phases, st.integers(0, 2 ** 32 - 1))
    def test_density_matches_statevector(self, theta, phi, seed):
        reg = pair_registry(3.0)
        v = random_vector(np.random.default_rng(seed), 2)
        s = QuantumState(reg.ids, v)
        pulse = PulseSpec("B", theta, phi)
        out_v = bl.apply_global_pulse(s, pulse, reg)
        out_r = bl.apply_global_pulse(s.to_density(), pulse, reg)
        assert np.allclose(out_r.data, np.outer(out_v.data, out_v.data.conj()), atol=1e-12)

    def test_norm_preserved(self):
        reg = pair_registry(3.0, kinds=(SUPERATOM, SINGLE), species=("A", "A"))
        s = QuantumState(reg.ids, random_vector(np.random.default_rng(3), 2))
        for pulse in (PulseSpec("A", 1.3, 0.2), PulseSpec("B", 0.4)):
            s = bl.apply_global_pulse(s, pulse, reg)
        assert s.norm() == pytest.approx(1.0, abs=1e-12)

    def test_exact_size_limit(self):
        atoms = tuple(AtomSpec(f"q{i}", "A", position=(10.0 * i, 0)) for i in range(11))
        reg = AtomRegistry(atoms)
        with pytest.raises(BlockadeError):
            bl.apply_global_pulse(QuantumState.ground(reg.ids), PulseSpec("A", 1.0), reg, EXACT)

    def test_registry_mismatch(self):
        reg = pair_registry()
        with pytest.raises(BlockadeError):
            bl.apply_global_pulse(QuantumState.ground(("a",)), PulseSpec("A", 1.0), reg)

    def test_unknown_method(self):
        reg = pair_registry(10.0)
        with pytest.raises(ValueError):
            bl.apply_global_pulse(QuantumState.ground(reg.ids), PulseSpec("A", 1.0), reg, "magic")


class TestPhaseAndRegisterOps:
    def test_kind_selective_phase(self):
        reg = pair_registry(10.0, kinds=(SINGLE, SUPERATOM), species=("A", "A"))
        s = QuantumState.product({"a": [0, 1], "b": [0, 1]})
        out = bl.apply_phase(s, PhaseEvent("A", {SUPERATOM: 0.5}), reg)
        assert out.data[3] == pytest.approx(np.exp(0.5j))

    def test_insert_remove_roundtrip(self):
        s = QuantumState.product({"a": [0.6, 0.8]})
        t = bl.insert_atom(s, "n")
        assert t.atoms == ("a", "n")
        assert np.allclose(bl.remove_atom(t, "n").data, s.data)
        with pytest.raises(BlockadeError):
            bl.insert_atom(t, "n")

    def test_remove_excited_is_violation(self):
        s = QuantumState.product({"a": [0.6, 0.8], "b": [1, 0]})
        with pytest.raises(ProtocolViolation):
            bl.remove_atom(s, "a")

    def test_remove_density(self):
        s = QuantumState.product({"a": [0.6, 0.8], "b": [1, 0]}, DENSITY)
        out = bl.remove_atom(s, "b")
        assert np.allclose(out.data, np.outer([0.6, 0.8], [0.6, 0.8]))

    def test_measure_order(self):
        s = QuantumState.product({"a": [0, 1], "b": [1, 0]})
        assert bl.measure(s, ["b", "a"])["gr"] == pytest.approx(1.0)
        assert bl.measure(s, ["a"])["r"] == pytest.approx(1.0)

    def test_sample_seeded(self):
        s = QuantumState.product({"a": [math.sqrt(0.5), math.sqrt(0.5)]})
        c1 = bl.sample(s, ["a"], 1000, seed=5)
        assert c1 == bl.sample(s, ["a"], 1000, seed=5)
        assert sum(c1.values()) == 1000


class TestCollectiveRabi:
    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
    def test_sqrt_m_scaling(self, m):
        times = np.linspace(0, 4 * PI, 81)
        w = bl.collective_rabi_frequency(m, 1.0, times)
        assert w == pytest.approx(math.sqrt(m), rel=1e-6)

    def test_bounds(self):
        with pytest.raises(ValueError):
            bl.collective_rabi_frequency(7, 1.0, np.linspace(0, 1, 10))
        with pytest.raises(ValueError):
            bl.collective_rabi_frequency(2, 1.0, [0, 1])

    def test_ensemble_fully_blockaded(self):
        reg = bl.blockaded_ensemble(5)
        assert len(reg.graph) == 10
