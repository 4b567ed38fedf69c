"""Protocol operators: displacement, temporal translation and wire-gates.

A :class:`Processor` owns one simulation context.  Every protocol step is
emitted as a schedule event and, unless ``simulate=False``, immediately
replayed on a :class:`Machine`, so the recorded trace and the simulated state
can never drift apart.

Layout: slot ``l`` (1-based) holds its data atom at ``(pitch*(l-1), 0)`` and
its auxiliary atom ``gap`` micrometres below.  A CZ mediator superatom sits
between two neighbouring data atoms, shifted away from the auxiliaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .blockade import (DENSITY, DERIVED, STATEVECTOR, AtomRegistry, AtomSpec,
                       ProtocolViolation, QuantumState, apply_global_pulse, apply_phase,
                       insert_atom, remove_atom)
from .pulses import (DEFAULT_M, SINGLE, SUPERATOM, PulseSpec, bitflip_sequence,
                     mediator_sequence, raw_product, rotation, superatom_bitflip_sequence,
                     superatom_hadamard_sequence)
from .schedule import (CZEvent, LayerEvent, MeasureEvent, MoveEvent, ParkEvent, PhaseTraceEvent,
                       PlanEvent, PrepareEvent, PulseEvent, RelabelEvent, Schedule, SelectEvent,
                       ShiftEvent, UnparkEvent)

#: Temporal translation variants: nu -> (source kind, target kind).
TRANSLATIONS = {
    1: (SINGLE, SINGLE),
    2: (SINGLE, SUPERATOM),
    3: (SUPERATOM, SINGLE),
    4: (SUPERATOM, SUPERATOM),
}

SELECTIVE_GATES = ("identity", "bitflip", "hadamard", "phase")

GROUND_TOL = 1e-10


class WiregateError(ValueError):
    """Invalid wire-gate request (kind mismatch, bad slots, bad geometry)."""


def nu_for(source: str, target: str) -> int:
    for nu, pair in TRANSLATIONS.items():
        if pair == (source, target):
            return nu
    raise WiregateError(f"no translation from {source} to {target}")


@dataclass(frozen=True)
class Geometry:
    pitch: float = 8.0
    gap: float = 3.0
    mediator_lift: float = 1.5
    blockade_radius: float = 5.0

    def data_position(self, slot: int) -> tuple[float, float]:
        return (self.pitch * (slot - 1), 0.0)

    def aux_position(self, slot: int) -> tuple[float, float]:
        return (self.pitch * (slot - 1), -self.gap)

    def mediator_position(self, slot_a: int, slot_b: int) -> tuple[float, float]:
        return (self.pitch * ((slot_a + slot_b) / 2 - 1), self.mediator_lift)


@dataclass(frozen=True)
class HybridMode:
    t: int
    s: int

    def __post_init__(self):
        if self.t < 0 or self.s < 1:
            raise WiregateError("temporal index must be >= 0 and spatial index >= 1")


@dataclass(frozen=True)
class QPair:
    mode: HybridMode
    data: str
    aux: str


# ---------------------------------------------------------------- replay engine


def _bits_of(index: int, n: int) -> list[int]:
    return [(index >> j) & 1 for j in range(n)]


class Machine:
    """Replays schedule events on an atom registry and (optionally) a quantum state."""

    def __init__(self, geometry: Geometry | None = None, simulate: bool = True,
                 method: str = DERIVED, representation: str = STATEVECTOR):
        self.geometry = geometry or Geometry()
        self.registry = AtomRegistry((), self.geometry.blockade_radius)
        self.simulate = simulate
        self.method = method
        self.representation = representation
        self.state = QuantumState.ground((), representation) if simulate else None
        self.roles: dict[str, tuple[str, int]] = {}
        self.output = None

    # -- helpers
    def atoms_at(self, role: str) -> dict[int, str]:
        return {slot: a for a, (r, slot) in self.roles.items() if r == role}

    def physical_atoms(self) -> int:
        return self.registry.total_atoms()

    def prepare(self, atoms: Sequence[str], vector: np.ndarray) -> None:
        """Load a little-endian logical vector onto ``atoms`` (qubit j -> atoms[j])."""
        vec = np.asarray(vector, dtype=complex)
        if vec.shape != (2 ** len(atoms),):
            raise WiregateError("input vector does not match prepared atom count")
        if not self.simulate:
            return
        probs = self.state.probabilities()
        if abs(probs[0] - 1) > GROUND_TOL:
            raise ProtocolViolation("prepare requires every atom in its ground state")
        n = self.state.n
        pos = [self.state.index(a) for a in atoms]
        data = np.zeros(2 ** n, dtype=complex)
        for index, amp in enumerate(vec):
            full = 0
            for j, bit in enumerate(_bits_of(index, len(atoms))):
                if bit:
                    full |= 1 << (n - 1 - pos[j])
            data[full] = amp
        data /= np.linalg.norm(data)
        state = QuantumState(self.state.atoms, data)
        self.state = state.to_density() if self.representation == DENSITY else state

    def read_out(self, atoms: Sequence[str]) -> np.ndarray:
        """Little-endian amplitude vector of ``atoms``; every other atom must be in g."""
        state = self.state
        n = state.n
        pos = [state.index(a) for a in atoms]
        others_mask = 0
        for i in range(n):
            if i not in pos:
                others_mask |= 1 << (n - 1 - i)
        idx = np.arange(2 ** n)
        if state.is_density:
            raise WiregateError("read_out needs a state vector")
        stray = float(np.sum(np.abs(state.data[(idx & others_mask) != 0]) ** 2))
        if stray > GROUND_TOL:
            raise ProtocolViolation(f"non-output atoms carry excitation {stray:.3g}")
        out = np.zeros(2 ** len(atoms), dtype=complex)
        for index in range(out.size):
            full = 0
            for j, bit in enumerate(_bits_of(index, len(atoms))):
                if bit:
                    full |= 1 << (n - 1 - pos[j])
            out[index] = state.data[full]
        return out

    def apply(self, mode: int, event, inputs: np.ndarray | None = None) -> None:
        kind = type(event)
        if kind is MoveEvent:
            self._move(event)
        elif kind is PulseEvent:
            if self.simulate:
                self.state = apply_global_pulse(self.state, event.pulse, self.registry,
                                                self.method)
        elif kind is PhaseTraceEvent:
            if self.simulate:
                self.state = apply_phase(self.state, event.engine_event(), self.registry)
        elif kind is ParkEvent:
            self.registry = self.registry.update(event.atom, parked=True)
        elif kind is UnparkEvent:
            self.registry = self.registry.update(event.atom, parked=False)
        elif kind is ShiftEvent:
            atoms = list(self.registry.atoms)
            moves = {a: (x, y) for a, x, y in zip(event.atoms, event.xs, event.ys)}
            for i, a in enumerate(atoms):
                if a.id in moves:
                    atoms[i] = replace(a, position=moves[a.id])
            self.registry = AtomRegistry(tuple(atoms), self.registry.radii)
        elif kind is PrepareEvent:
            if inputs is not None:
                self.prepare(event.atoms, inputs)
        elif kind is MeasureEvent:
            if self.simulate:
                self.output = self.read_out(event.atoms)
        # markers carry no dynamics

    def _move(self, ev: MoveEvent) -> None:
        if ev.direction == "in":
            spec = AtomSpec(ev.atom, ev.species, ev.kind, ev.m, (ev.x, ev.y))
            self.registry = self.registry.add(spec)
            self.roles[ev.atom] = (ev.role, ev.slot)
            if self.simulate:
                self.state = insert_atom(self.state, ev.atom)
        else:
            if self.simulate:
                self.state = remove_atom(self.state, ev.atom)
            self.registry = self.registry.remove(ev.atom)
            self.roles.pop(ev.atom, None)


# ---------------------------------------------------------------- corrective angles


def _bitflip_raw(kind: str, m: int = DEFAULT_M) -> np.ndarray:
    return raw_product(bitflip_sequence("A"), kind, m)


def translation_phases(m: int = DEFAULT_M) -> tuple[dict[str, float], dict[str, float]]:
    """Pre-phase (by source kind) and post-phase (by target kind) angles of a translation.

    Without them the transferred amplitude picks up the relative factor
    ``a_s[0,1] a_t[1,0] / (u[1,0] u[0,1])`` where ``a`` is the raw bit-flip
    composite of each kind and ``u`` the auxiliary pi pulse.
    """
    u = rotation(PulseSpec("B", math.pi, 0.0))
    pre, post = {}, {}
    for kind in (SINGLE, SUPERATOM):
        a = _bitflip_raw(kind, m)
        pre[kind] = _snap(-np.angle(a[0, 1] / (u[1, 0] * u[0, 1])))
        post[kind] = _snap(-np.angle(a[1, 0]))
    return pre, post


def _snap(angle: float, tol: float = 1e-12) -> float:
    """Round numerically-zero angles to exactly 0 so traces stay readable."""
    return 0.0 if abs(angle) < tol else float(angle)


def selective_phases(gate: str) -> dict[str, float]:
    seq = {"bitflip": superatom_bitflip_sequence, "hadamard": superatom_hadamard_sequence}[gate]()
    return {kind: _snap(angle) for kind, (_, angle) in seq.corrective.items()}


# ---------------------------------------------------------------- processor


@dataclass
class _Pair:
    data: str
    aux: str
    kind: str


class Processor:
    """Line of Q-Pairs driven by global pulses and atom moves.

    Parameters
    ----------
    kinds
        Initial data-qubit kind of each slot, slot 1 first.
    simulate
        When false only the schedule is recorded (no quantum state).
    replace_aux
        Swap in a fresh auxiliary atom at the end of every translation.
    """

    def __init__(self, kinds: Sequence[str], simulate: bool = True, method: str = DERIVED,
                 m: int = DEFAULT_M, replace_aux: bool = True, geometry: Geometry | None = None,
                 representation: str = STATEVECTOR, park_spectators: bool = True):
        self.m = m
        self.replace_aux = replace_aux
        self.park_spectators = park_spectators
        self.machine = Machine(geometry, simulate, method, representation)
        self.geometry = self.machine.geometry
        self.mode = 0
        self.events: list[tuple[int, object]] = []
        self._counter = {"d": 0, "x": 0, "m": 0}
        self.pairs: dict[int, _Pair] = {}
        self._pulse_cache: dict = {}
        self._pre, self._post = translation_phases(m)
        for slot, kind in enumerate(kinds, 1):
            data = self._load("d", "data", slot, "A", kind)
            aux = self._load("x", "aux", slot, "B", SINGLE)
            self.pairs[slot] = _Pair(data, aux, kind)
        self._plan()

    # -- plumbing
    @property
    def slots(self) -> list[int]:
        return sorted(self.pairs)

    @property
    def state(self) -> QuantumState:
        return self.machine.state

    @property
    def registry(self) -> AtomRegistry:
        return self.machine.registry

    def handle(self, slot: int) -> QPair:
        p = self.pairs[slot]
        return QPair(HybridMode(self.mode, slot), p.data, p.aux)

    def kinds(self) -> dict[int, str]:
        return {s: p.kind for s, p in self.pairs.items()}

    def emit(self, event, inputs=None) -> None:
        self.events.append((self.mode, event))
        self.machine.apply(self.mode, event, inputs)

    def schedule(self, qubit_count: int | None = None, meta=None) -> Schedule:
        n = len(self.pairs) if qubit_count is None else qubit_count
        return Schedule(n, len(self.pairs), tuple(self.events), dict(meta or {}))

    def _new_id(self, prefix: str) -> str:
        ident = f"{prefix}{self._counter[prefix]}"
        self._counter[prefix] += 1
        return ident

    def _load(self, prefix, role, slot, species, kind, position=None) -> str:
        atom = self._new_id(prefix)
        m = self.m if kind == SUPERATOM else 1
        if position is None:
            position = (self.geometry.data_position(slot) if role == "data"
                        else self.geometry.aux_position(slot))
        self.emit(MoveEvent("in", atom, role, slot, species, kind, m, *position))
        return atom

    def _unload(self, atom: str, role: str, slot: int) -> None:
        self.emit(MoveEvent("out", atom, role, slot))

    def _plan(self) -> None:
        slots = self.slots
        self.emit(PlanEvent(tuple(slots), tuple(self.pairs[s].kind for s in slots)))

    def _pulses(self, seq) -> None:
        for spec in seq.applied_order():
            self.emit(PulseEvent(spec))

    def _phase(self, species: str, angles: Mapping[str, float]) -> None:
        single = angles.get(SINGLE, 0.0)
        sup = angles.get(SUPERATOM, 0.0)
        if abs(single) > 0 or abs(sup) > 0:
            self.emit(PhaseTraceEvent(species, float(single), float(sup)))

    # -- state access
    def prepare(self, vector, slots: Sequence[int] | None = None) -> None:
        """Load a logical state (little-endian over ``slots``, default all slots)."""
        slots = list(self.slots if slots is None else slots)
        atoms = tuple(self.pairs[s].data for s in slots)
        self.emit(PrepareEvent(atoms), np.asarray(vector, dtype=complex))

    def data_vector(self, slots: Sequence[int] | None = None) -> np.ndarray:
        slots = list(self.slots if slots is None else slots)
        return self.machine.read_out([self.pairs[s].data for s in slots])

    def measure(self, slots: Sequence[int] | None = None) -> np.ndarray | None:
        slots = list(self.slots if slots is None else slots)
        self.emit(MeasureEvent(tuple(self.pairs[s].data for s in slots)))
        return self.machine.output

    def layer(self, label: str, gate: str, slots: Sequence[int] = ()) -> None:
        self.emit(LayerEvent(label, gate, tuple(slots)))

    # -- protocol primitives
    def displace(self, slot: int, new_kind: str) -> str:
        """Out-displace the data atom of ``slot`` (must be in g) and load a fresh one."""
        pair = self.pairs[slot]
        self._unload(pair.data, "data", slot)
        pair.data = self._load("d", "data", slot, "A", new_kind)
        pair.kind = new_kind
        return pair.data

    def replace_auxiliary(self, slot: int) -> str:
        pair = self.pairs[slot]
        self._unload(pair.aux, "aux", slot)
        pair.aux = self._load("x", "aux", slot, "B", SINGLE)
        return pair.aux

    def translate(self, targets: Mapping[int, str] | None = None) -> None:
        """Concurrent temporal translation of every Q-Pair to the next mode.

        ``targets`` maps slot -> data kind at the next mode (default: keep).
        """
        targets = dict(targets or {})
        new_kinds = {s: targets.get(s, p.kind) for s, p in self.pairs.items()}
        x_b = PulseSpec("B", math.pi, 0.0)
        flip = bitflip_sequence("A")
        self._phase("A", self._pre)
        self.emit(PulseEvent(x_b))
        self._pulses(flip)
        for slot in self.slots:
            self.displace(slot, new_kinds[slot])
        self._pulses(flip)
        self.emit(PulseEvent(x_b))
        self._phase("A", self._post)
        if self.replace_aux:
            for slot in self.slots:
                self.replace_auxiliary(slot)
        self.mode += 1
        self._plan()

    def selective(self, gate: str, phi: float = 0.0) -> None:
        """Superatom-selective single-qubit gate on every superatom data qubit.

        Single-atom data qubits only receive a diagonal phase, which the
        kind-selective correction removes.
        """
        if gate not in SELECTIVE_GATES:
            raise WiregateError(f"unknown selective gate {gate!r}")
        targets = tuple(s for s in self.slots if self.pairs[s].kind == SUPERATOM)
        self.emit(SelectEvent(gate, targets, float(phi)))
        if gate == "identity":
            return
        if gate == "phase":
            self._phase("A", {SUPERATOM: float(phi)})
            return
        seq = (superatom_bitflip_sequence if gate == "bitflip" else superatom_hadamard_sequence)()
        self._pulses(seq)
        self._phase("A", selective_phases(gate))

    def cz(self, slot_a: int, slot_b: int) -> None:
        """Mediated CZ between the data qubits of two neighbouring slots."""
        if slot_a == slot_b or abs(slot_a - slot_b) != 1:
            raise WiregateError(f"CZ needs adjacent slots, got {slot_a} and {slot_b}")
        if slot_a not in self.pairs or slot_b not in self.pairs:
            raise WiregateError("CZ on an unknown slot")
        lo, hi = sorted((slot_a, slot_b))
        self.emit(CZEvent((lo, hi)))
        spectators = [self.pairs[s].aux for s in self.slots if s not in (lo, hi)]
        if self.park_spectators:
            for a in spectators:
                self.emit(ParkEvent(a))
        pos = self.geometry.mediator_position(lo, hi)
        mediator = self._load("m", "mediator", lo, "B", SUPERATOM, pos)
        self._check_mediator(mediator, lo, hi)
        self._pulses(mediator_sequence("B"))
        self._unload(mediator, "mediator", lo)
        if self.park_spectators:
            for a in spectators:
                self.emit(UnparkEvent(a))

    def _check_mediator(self, mediator: str, lo: int, hi: int) -> None:
        reg = self.registry
        expected = {self.pairs[lo].data, self.pairs[hi].data}
        got = reg.active_neighbors(mediator)
        if got != expected:
            raise WiregateError(f"mediator blockades {sorted(got)}, expected {sorted(expected)}")

    def swap(self, slot_a: int, slot_b: int) -> None:
        """Exchange two Q-Pairs' spatial slots by moving their atoms (no pulses)."""
        if slot_a == slot_b:
            raise WiregateError("cannot swap a slot with itself")
        if slot_a not in self.pairs or slot_b not in self.pairs:
            raise WiregateError("swap on an unknown slot")
        pa, pb = self.pairs[slot_a], self.pairs[slot_b]
        self.emit(RelabelEvent(tuple(sorted((slot_a, slot_b)))))
        moving = [pa.data, pa.aux, pb.data, pb.aux]
        for a in moving:
            self.emit(ParkEvent(a))
        g = self.geometry
        xs, ys = [], []
        for slot in (slot_b, slot_a):
            for pos in (g.data_position(slot), g.aux_position(slot)):
                xs.append(pos[0])
                ys.append(pos[1])
        self.emit(ShiftEvent(tuple(moving), tuple(xs), tuple(ys)))
        for a in moving:
            self.emit(UnparkEvent(a))
        self.pairs[slot_a], self.pairs[slot_b] = pb, pa
        for slot in (slot_a, slot_b):
            self.machine.roles[self.pairs[slot].data] = ("data", slot)
            self.machine.roles[self.pairs[slot].aux] = ("aux", slot)


# ---------------------------------------------------------------- wire-gate API


def _require_kind(proc: Processor, slot: int, kind: str) -> None:
    if proc.pairs[slot].kind != kind:
        raise WiregateError(f"slot {slot} holds a {proc.pairs[slot].kind} data qubit, "
                            f"expected {kind}")


def _require_aux_ground(proc: Processor, slot: int) -> None:
    if proc.machine.simulate:
        pop = proc.state.rydberg_population(proc.pairs[slot].aux)
        if pop > GROUND_TOL:
            raise WiregateError(f"auxiliary of slot {slot} is excited ({pop:.3g})")


def displacement(proc: Processor, slot: int, new_kind: str) -> QPair:
    proc.displace(slot, new_kind)
    return proc.handle(slot)


def temporal_translation(proc: Processor, nu: int, slot: int = 1) -> QPair:
    """Translate the Q-Pair at ``slot`` with variant ``nu`` (others keep their kind)."""
    if nu not in TRANSLATIONS:
        raise WiregateError(f"translation index must be 1..4, got {nu}")
    source, target = TRANSLATIONS[nu]
    _require_kind(proc, slot, source)
    _require_aux_ground(proc, slot)
    proc.translate({slot: target})
    return proc.handle(slot)


def single_qubit_wiregate(proc: Processor, nu: int, gate: str, slot: int = 1,
                          phi: float = 0.0) -> QPair:
    """Selective gate followed by translation ``nu``; acts only if the source is a superatom."""
    if nu not in TRANSLATIONS:
        raise WiregateError(f"translation index must be 1..4, got {nu}")
    _require_kind(proc, slot, TRANSLATIONS[nu][0])
    _require_aux_ground(proc, slot)
    proc.selective(gate, phi)
    return temporal_translation(proc, nu, slot)


def cz_interaction(proc: Processor, slot_a: int, slot_b: int) -> None:
    proc.cz(slot_a, slot_b)


def cz_wiregate(proc: Processor, slot_a: int, slot_b: int, mu: int = 1,
                nu: int = 1) -> tuple[QPair, QPair]:
    for slot, index in ((slot_a, mu), (slot_b, nu)):
        if index not in TRANSLATIONS:
            raise WiregateError(f"translation index must be 1..4, got {index}")
        _require_kind(proc, slot, TRANSLATIONS[index][0])
    proc.cz(slot_a, slot_b)
    proc.translate({slot_a: TRANSLATIONS[mu][1], slot_b: TRANSLATIONS[nu][1]})
    return proc.handle(slot_a), proc.handle(slot_b)


def swap_wiregate(proc: Processor, slot_a: int, slot_b: int, mu: int = 1,
                  nu: int = 1) -> tuple[QPair, QPair]:
    if slot_a == slot_b:
        raise WiregateError("cannot swap a slot with itself")
    _require_kind(proc, slot_a, TRANSLATIONS[mu][0])
    _require_kind(proc, slot_b, TRANSLATIONS[nu][0])
    proc.swap(slot_a, slot_b)
    # the pair now at slot_b came from slot_a and keeps its own translation index
    proc.translate({slot_b: TRANSLATIONS[mu][1], slot_a: TRANSLATIONS[nu][1]})
    return proc.handle(slot_a), proc.handle(slot_b)


def _to_kind(proc: Processor, slot: int, kind: str) -> None:
    proc.translate({slot: kind})


def cnot_wiregate(proc: Processor, control: int, target: int,
                  final_kinds: tuple[str, str] = (SINGLE, SINGLE)) -> tuple[QPair, QPair]:
    """CNOT over three modes: [H_t][CZ][H_t].

    Entry kinds: control single, target superatom.  The target is demoted for
    the CZ mode and promoted again for the second Hadamard.
    """
    _require_kind(proc, control, SINGLE)
    _require_kind(proc, target, SUPERATOM)
    proc.selective("hadamard")
    proc.translate({control: SINGLE, target: SINGLE})
    proc.cz(control, target)
    proc.translate({control: SINGLE, target: SUPERATOM})
    proc.selective("hadamard")
    proc.translate({control: final_kinds[0], target: final_kinds[1]})
    return proc.handle(control), proc.handle(target)


def cphase_wiregate(proc: Processor, control: int, target: int, phi: float,
                    final_kinds: tuple[str, str] = (SINGLE, SINGLE)) -> tuple[QPair, QPair]:
    """Controlled phase diag(1, 1, 1, e^{i phi}) over four modes.

    Uses CP(phi) = P_c(phi/2) P_t(phi/2) CX P_t(-phi/2) CX with CX = H_t CZ H_t,
    fusing each CZ into the mode of the preceding target Hadamard.  Entry kinds:
    control superatom (it takes its phase first), target single.
    """
    _require_kind(proc, control, SUPERATOM)
    _require_kind(proc, target, SINGLE)
    proc.selective("phase", phi / 2)
    proc.translate({control: SINGLE, target: SUPERATOM})
    proc.selective("hadamard")
    proc.cz(control, target)
    proc.translate({control: SINGLE, target: SUPERATOM})
    proc.selective("hadamard")
    proc.selective("phase", -phi / 2)
    proc.selective("hadamard")
    proc.cz(control, target)
    proc.translate({control: SINGLE, target: SUPERATOM})
    proc.selective("hadamard")
    proc.selective("phase", phi / 2)
    proc.translate({control: final_kinds[0], target: final_kinds[1]})
    return proc.handle(control), proc.handle(target)
