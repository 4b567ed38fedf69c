"""Compile logical circuits into global-pulse + atom-move schedules.

Logical qubits live on a line of spatial slots (qubit ``q`` starts in slot
``q + 1``).  Each logical gate becomes one *layer* of one or more physical
temporal modes.  Within a mode the order is: superatom-selective gates, the
mediated CZ, the SWAP relabel, then the concurrent temporal translation of
every Q-Pair.  A data qubit is a superatom at mode ``k`` exactly when it is
the target of a selective gate at mode ``k``; everything is single-atom at the
measurement mode.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blockade import DERIVED, BlockadeError, ProtocolViolation
from .noise import NoiseParams
from .oracle import GATE_ARITY, Gate, qft_angle
from .pulses import SINGLE, SUPERATOM
from .schedule import (CZEvent, MeasureEvent, MoveEvent, PhaseTraceEvent, PlanEvent,
                       PrepareEvent, PulseEvent, RelabelEvent, Schedule, SelectEvent,
                       ShiftEvent)
from .wiregates import Geometry, Machine, Processor

#: Registers up to this many logical qubits are replayed during validation.
DYNAMIC_CHECK_QUBITS = 6


class CircuitParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"parse error: line {line}: {message}")
        self.line = line


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class LogicalCircuit:
    qubit_count: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.qubit_count < 0:
            raise CompileError("qubit count must be non-negative")
        for g in self.gates:
            if any(q >= self.qubit_count for q in g.qubits):
                raise CompileError(f"{g.name} on qubit outside 0..{self.qubit_count - 1}")


_ANGLE = re.compile(r"^([+-]?)((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?(\*?pi)?(?:/(\d+(?:\.\d*)?))?$")


def parse_angle(token: str) -> float:
    """Angle literal: float, ``pi``, ``-pi/4``, ``3*pi/8``, or ``q=<k>`` for 2*pi/2^k."""
    if token.startswith("q="):
        return qft_angle(int(token[2:]))
    match = _ANGLE.match(token)
    if not match or not any(match.groups()[1:3]) or (match[3] == "*pi" and not match[2]):
        raise ValueError(f"bad angle {token!r}")
    sign, coeff, pi, denom = match.groups()
    value = float(coeff) if coeff else 1.0
    if sign == "-":
        value = -value
    if pi:
        value *= math.pi
    if denom:
        value /= float(denom)
    return value


def parse_circuit(text: str) -> LogicalCircuit:
    """Parse one gate per line (``H 0``, ``CP 1 2 q=2``, ``SWAP 0 1``); ``#`` comments.

    An optional ``QUBITS n`` line fixes the register size; otherwise it is the
    largest index plus one.
    """
    gates = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        name = tok[0].upper()
        try:
            if name == "QUBITS":
                if len(tok) != 2 or int(tok[1]) < 0:
                    raise ValueError("QUBITS takes one non-negative integer")
                declared = int(tok[1])
                continue
            if name not in GATE_ARITY:
                raise ValueError(f"unknown gate {tok[0]!r}")
            arity = GATE_ARITY[name]
            needs_angle = name in ("P", "CP")
            if len(tok) != 1 + arity + needs_angle:
                raise ValueError(f"{name} expects {arity} qubit(s)"
                                 + (" and an angle" if needs_angle else ""))
            qubits = tuple(int(t) for t in tok[1:1 + arity])
            if any(q < 0 for q in qubits):
                raise ValueError("negative qubit index")
            param = parse_angle(tok[-1]) if needs_angle else None
            gates.append(Gate(name, qubits, param))
        except ValueError as exc:
            raise CircuitParseError(lineno, str(exc)) from None
    used = max((q for g in gates for q in g.qubits), default=-1) + 1
    if declared is not None and declared < used:
        raise CircuitParseError(0, f"QUBITS {declared} smaller than highest index")
    return LogicalCircuit(declared if declared is not None else used, tuple(gates))


def format_circuit(circuit: LogicalCircuit) -> str:
    lines = [f"QUBITS {circuit.qubit_count}"]
    for g in circuit.gates:
        args = " ".join(map(str, g.qubits))
        if g.param is not None:
            args += f" {g.param!r}"
        lines.append(f"{g.name} {args}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- layer model


@dataclass(frozen=True)
class ModeOp:
    """Work done in one temporal mode before the translation."""

    superatoms: frozenset = frozenset()
    selective: tuple = ()  # (gate, phi) applied to every superatom, in order
    cz: tuple | None = None
    swap: tuple | None = None


@dataclass(frozen=True)
class Layer:
    gate: str
    slots: tuple[int, ...]
    modes: tuple[ModeOp, ...]


_SELECTIVE = {"H": "hadamard", "X": "bitflip", "P": "phase"}


def single_qubit_layer(name: str, slot: int, phi: float | None = None) -> Layer:
    op = ModeOp(frozenset({slot}), ((_SELECTIVE[name], phi or 0.0),))
    return Layer(name, (slot,), (op,))


def cz_layer(a: int, b: int) -> Layer:
    return Layer("CZ", (a, b), (ModeOp(cz=(a, b)),))


def swap_layer(a: int, b: int) -> Layer:
    return Layer("SWAP", (a, b), (ModeOp(swap=(a, b)),))


def cx_layer(control: int, target: int) -> Layer:
    t = frozenset({target})
    h = (("hadamard", 0.0),)
    return Layer("CX", (control, target),
                 (ModeOp(t, h), ModeOp(cz=(control, target)), ModeOp(t, h)))


def cp_layer(control: int, target: int, phi: float) -> Layer:
    """Four modes: [P_c(phi/2)] [H_t; CZ] [H_t P_t(-phi/2) H_t; CZ] [H_t P_t(phi/2)]."""
    t = frozenset({target})
    h = ("hadamard", 0.0)
    return Layer("CP", (control, target), (
        ModeOp(frozenset({control}), (("phase", phi / 2),)),
        ModeOp(t, (h,), cz=(control, target)),
        ModeOp(t, (h, ("phase", -phi / 2), h), cz=(control, target)),
        ModeOp(t, (h, ("phase", phi / 2))),
    ))


def gate_layer(gate: Gate, slot_of: Sequence[int]) -> Layer:
    s = [slot_of[q] for q in gate.qubits]
    if gate.name in _SELECTIVE:
        return single_qubit_layer(gate.name, s[0], gate.param)
    if gate.name == "CZ":
        return cz_layer(*s)
    if gate.name == "CX":
        return cx_layer(*s)
    if gate.name == "CP":
        return cp_layer(s[0], s[1], gate.param)
    if gate.name == "SWAP":
        return swap_layer(*s)
    raise CompileError(f"unsupported gate {gate.name}")


@dataclass(frozen=True)
class LayoutPolicy:
    geometry: Geometry = field(default_factory=Geometry)
    replace_aux: bool = True
    m: int = 4


def route(circuit: LogicalCircuit) -> tuple[list[Layer], list[int]]:
    """Bubble-route two-qubit gates onto neighbouring slots; returns layers and final slot map."""
    slot_of = [q + 1 for q in range(circuit.qubit_count)]
    layers: list[Layer] = []

    def exchange(a: int, b: int) -> None:
        qa, qb = slot_of.index(a), slot_of.index(b)
        slot_of[qa], slot_of[qb] = b, a

    for gate in circuit.gates:
        if len(gate.qubits) == 2:
            q0, q1 = gate.qubits
            while abs(slot_of[q0] - slot_of[q1]) > 1:
                step = 1 if slot_of[q1] > slot_of[q0] else -1
                a, b = slot_of[q0], slot_of[q0] + step
                layers.append(swap_layer(a, b))
                exchange(a, b)
        # a logical SWAP physically exchanges the pairs, so the qubit map stays put
        layers.append(gate_layer(gate, slot_of))
    return layers, slot_of


def _mode_kinds(op: ModeOp | None, slots: Sequence[int]) -> dict[int, str]:
    sup = op.superatoms if op is not None else frozenset()
    return {s: SUPERATOM if s in sup else SINGLE for s in slots}


def emit_schedule(layers: Sequence[Layer], qubit_count: int, input_slots: Sequence[int],
                  output_slots: Sequence[int], policy: LayoutPolicy | None = None,
                  labels: Sequence[str] | None = None, meta=None) -> Schedule:
    """Drive a recording-only processor through the layers and return its schedule."""
    policy = policy or LayoutPolicy()
    slots = list(range(1, qubit_count + 1))
    ops = [op for layer in layers for op in layer.modes]
    if qubit_count == 0:
        return Schedule(0, 0, (), dict(meta or {}))
    proc = Processor([_mode_kinds(ops[0] if ops else None, slots)[s] for s in slots],
                     simulate=False, m=policy.m, replace_aux=policy.replace_aux,
                     geometry=policy.geometry)
    proc.emit(PrepareEvent(tuple(proc.pairs[s].data for s in input_slots)))
    k = 0
    for i, layer in enumerate(layers):
        proc.layer(labels[i] if labels else f"t{i}", layer.gate, layer.slots)
        for op in layer.modes:
            for gate, phi in op.selective:
                proc.selective(gate, phi)
            if op.cz is not None:
                proc.cz(*op.cz)
            if op.swap is not None:
                proc.swap(*op.swap)
            k += 1
            proc.translate(_mode_kinds(ops[k] if k < len(ops) else None, slots))
    proc.layer(labels[len(layers)] if labels else f"t{len(layers)}", "measure")
    proc.emit(MeasureEvent(tuple(proc.pairs[s].data for s in output_slots)))
    sched = proc.schedule(qubit_count, meta)
    return sched


def compile_circuit(circuit: LogicalCircuit, policy: LayoutPolicy | None = None) -> Schedule:
    """Compile ``circuit``; output qubit ``j`` of the schedule is logical qubit ``j``."""
    layers, slot_of = route(circuit)
    n = circuit.qubit_count
    return emit_schedule(layers, n, [q + 1 for q in range(n)], slot_of, policy)


compile = compile_circuit  # noqa: A001  (public name used by the CLI and docs)


QFT3_CIRCUIT = LogicalCircuit(3, (
    Gate("H", (2,)),
    Gate("CP", (1, 2), qft_angle(2)),
    Gate("CP", (0, 2), qft_angle(3)),
    Gate("H", (1,)),
    Gate("CP", (0, 1), qft_angle(2)),
    Gate("H", (0,)),
))

#: Hand-placed QFT-3 layers: (label, gate, slots, angle).
QFT3_LAYOUT = (
    ("t0", "H", (3,), None),
    ("t1", "CP", (2, 3), qft_angle(2)),
    ("t2", "SWAP", (1, 2), None),
    ("t3", "CP", (2, 3), qft_angle(3)),
    ("t4", "H", (1,), None),
    ("t5", "CP", (2, 1), qft_angle(2)),
    ("t6", "H", (2,), None),
)


def qft3_reference_schedule(policy: LayoutPolicy | None = None) -> Schedule:
    """Three-qubit QFT on three slots, eight layers t0..t7 (t7 = measurement).

    The circuit leaves the Fourier amplitudes bit-reversed; the measurement
    event reads output qubit ``j`` from logical qubit ``2 - j`` so the schedule
    output equals the DFT of its input.
    """
    layers = []
    for _, gate, slots, phi in QFT3_LAYOUT:
        if gate == "H":
            layers.append(single_qubit_layer("H", slots[0]))
        elif gate == "CP":
            layers.append(cp_layer(slots[0], slots[1], phi))
        else:
            layers.append(swap_layer(*slots))
    # logical qubit -> slot after the single SWAP of t2
    final = {0: 2, 1: 1, 2: 3}
    outputs = [final[2 - j] for j in range(3)]
    labels = [row[0] for row in QFT3_LAYOUT] + ["t7"]
    return emit_schedule(layers, 3, [1, 2, 3], outputs, policy, labels,
                         meta={"name": "qft3"})


# ---------------------------------------------------------------- replay


def run_schedule(schedule: Schedule, vector, method: str = DERIVED,
                 geometry: Geometry | None = None) -> np.ndarray:
    """Replay ``schedule`` on a little-endian logical input; return the output vector."""
    machine = Machine(geometry, simulate=True, method=method)
    vec = np.asarray(vector, dtype=complex)
    if vec.shape != (2 ** schedule.qubit_count,):
        raise CompileError("input vector does not match the schedule's qubit count")
    if schedule.qubit_count == 0:
        return vec
    for mode, ev in schedule.events:
        machine.apply(mode, ev, vec)
    if machine.output is None:
        raise CompileError("schedule has no measure event")
    return machine.output


def schedule_unitary(schedule: Schedule, method: str = DERIVED) -> np.ndarray:
    dim = 2 ** schedule.qubit_count
    cols = []
    for j in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[j] = 1
        cols.append(run_schedule(schedule, e, method))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------- validation


def validate_schedule(schedule: Schedule, dynamic: bool | None = None, seed: int = 0) -> list[str]:
    """Return a list of human-readable violations (empty means valid)."""
    issues: list[str] = []
    last = -1
    for mode, _ in schedule.events:
        if mode < last:
            issues.append(f"mode {mode} follows mode {last}: modes must not decrease")
            break
        last = mode

    plan: dict[tuple[int, int], str] = {}
    machine = Machine(simulate=False)
    measured = False
    for i, (mode, ev) in enumerate(schedule.events):
        kind = type(ev)
        if measured and kind not in (PlanEvent,):
            issues.append(f"mode {mode}: event after measurement")
            break
        try:
            machine.apply(mode, ev)
        except (BlockadeError, KeyError) as exc:
            issues.append(f"mode {mode}: invalid {ev.tag}: {exc}")
            continue
        if kind is PlanEvent:
            if len(set(ev.slots)) != len(ev.slots):
                issues.append(f"mode {mode}: slot listed twice in plan")
            data = machine.atoms_at("data")
            for slot, k in zip(ev.slots, ev.kinds):
                if plan.setdefault((mode, slot), k) != k:
                    issues.append(f"mode {mode}: conflicting kinds for slot {slot}")
                atom = data.get(slot)
                if atom is None:
                    issues.append(f"mode {mode}: slot {slot} has no data atom")
                elif machine.registry[atom].kind != k:
                    issues.append(f"mode {mode}: slot {slot} holds {machine.registry[atom].kind}"
                                  f" but plan says {k}")
        elif kind is SelectEvent:
            planned = {s for (m, s), k in plan.items() if m == mode and k == SUPERATOM}
            if set(ev.slots) != planned:
                issues.append(f"mode {mode}: {ev.gate} targets slots {sorted(ev.slots)} but "
                              f"superatoms are {sorted(planned)}")
        elif kind is CZEvent:
            a, b = ev.slots
            if abs(a - b) != 1:
                issues.append(f"mode {mode}: CZ between non-adjacent slots {a} and {b}")
        elif kind is RelabelEvent:
            a, b = ev.slots
            if a == b:
                issues.append(f"mode {mode}: relabel of slot {a} with itself")
        elif kind is MoveEvent and ev.direction == "in" and ev.role == "mediator":
            reg = machine.registry
            nbrs = reg.active_neighbors(ev.atom)
            roles = [machine.roles.get(n, ("?", 0)) for n in nbrs]
            data_slots = sorted(s for r, s in roles if r == "data")
            if any(r != "data" for r, _ in roles) or len(data_slots) != 2 \
                    or data_slots[1] - data_slots[0] != 1:
                issues.append(f"mode {mode}: mediator {ev.atom} blockades "
                              f"{sorted(nbrs)}; needs exactly two neighbouring data atoms")
        elif kind is MeasureEvent:
            measured = True
            if mode != schedule.temporal_modes - 1:
                issues.append(f"mode {mode}: measurement is not at the final mode")
    if schedule.qubit_count and not measured:
        issues.append("schedule has no measurement")

    if dynamic is None:
        dynamic = 0 < schedule.qubit_count <= DYNAMIC_CHECK_QUBITS
    if dynamic and not issues:
        issues += _dynamic_check(schedule, seed)
    return issues


def _dynamic_check(schedule: Schedule, seed: int) -> list[str]:
    """Replay on a random product input; every out-displaced atom must be in g."""
    rng = np.random.default_rng(seed)
    vec = np.ones(1, dtype=complex)
    for _ in range(schedule.qubit_count):
        amp = rng.normal(size=2) + 1j * rng.normal(size=2)
        vec = np.kron(amp / np.linalg.norm(amp), vec)
    machine = Machine(simulate=True)
    for mode, ev in schedule.events:
        try:
            machine.apply(mode, ev, vec)
        except ProtocolViolation as exc:
            return [f"mode {mode}: disentanglement violation: {exc}"]
        except BlockadeError as exc:
            return [f"mode {mode}: {exc}"]
    return []


# ---------------------------------------------------------------- resources


@dataclass(frozen=True)
class ResourceReport:
    atom_count: int
    temporal_depth: int
    layers: int
    pulses: int
    move_batches: int
    total_time: float
    bitflip_probability: float
    translation_fidelity: float
    translations: int
    fidelity_estimate: float

    def rows(self) -> list[tuple[str, str]]:
        return [("atom_count", str(self.atom_count)),
                ("temporal_depth", str(self.temporal_depth)),
                ("layers", str(self.layers)),
                ("pulses", str(self.pulses)),
                ("move_batches", str(self.move_batches)),
                ("total_time_s", f"{self.total_time:.6e}"),
                ("P_d", f"{self.bitflip_probability:.6e}"),
                ("F_T", f"{self.translation_fidelity:.6f}"),
                ("translations", str(self.translations)),
                ("fidelity_estimate", f"{self.fidelity_estimate:.6f}")]


def max_concurrent_atoms(schedule: Schedule) -> int:
    machine = Machine(simulate=False)
    peak = 0
    for mode, ev in schedule.events:
        machine.apply(mode, ev)
        peak = max(peak, machine.physical_atoms())
    return peak


def estimate_resources(schedule: Schedule, params: NoiseParams | None = None) -> ResourceReport:
    """Atom budget, duration and fidelity proxies of a schedule.

    Every pulse takes ``t_g``; a run of consecutive moves not interrupted by a
    pulse or phase is one parallel move batch taking ``move_time``.  A
    superatom counts as its M atoms.
    """
    params = params or NoiseParams()
    pulses = batches = translations = 0
    in_batch = False
    for _, ev in schedule.events:
        if isinstance(ev, (PulseEvent, PhaseTraceEvent)):
            pulses += isinstance(ev, PulseEvent)
            in_batch = False
        elif isinstance(ev, (MoveEvent, ShiftEvent)):
            if not in_batch:
                batches += 1
                in_batch = True
            if isinstance(ev, MoveEvent) and ev.direction == "out" and ev.role == "data":
                translations += 1
    atoms = max_concurrent_atoms(schedule)
    tau = pulses * params.t_g + batches * params.move_time
    f_t = params.translation_fidelity()
    return ResourceReport(
        atom_count=atoms,
        temporal_depth=schedule.temporal_modes,
        layers=len(schedule.layers),
        pulses=pulses,
        move_batches=batches,
        total_time=tau,
        bitflip_probability=atoms * params.gamma * tau,
        translation_fidelity=f_t,
        translations=translations,
        fidelity_estimate=f_t ** translations,
    )


def random_circuit(n: int, gate_count: int, seed=None) -> LogicalCircuit:
    """Random circuit over the full gate set (angles from the QFT ladder)."""
    rng = np.random.default_rng(seed)
    names = ["H", "X", "P"] + (["CZ", "CX", "CP", "SWAP"] if n >= 2 else [])
    gates = []
    for _ in range(gate_count):
        name = names[rng.integers(len(names))]
        if GATE_ARITY[name] == 1:
            qubits = (int(rng.integers(n)),)
        else:
            qubits = tuple(int(q) for q in rng.choice(n, size=2, replace=False))
        param = qft_angle(int(rng.integers(1, 4))) if name in ("P", "CP") else None
        gates.append(Gate(name, qubits, param))
    return LogicalCircuit(n, tuple(gates))
