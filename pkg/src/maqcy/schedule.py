"""Schedule events and the line-oriented trace format.

Every event line reads ``mode=<k> <tag> key=value ...``.  Floats are written
with ``repr`` so a trace round-trips bit for bit.  Lines starting with ``#``
are comments except the header ``# maqcy-schedule qubits=<n> slots=<n>``.

Event tags
----------
``move``     atom enters (``dir=in``) or leaves (``dir=out``) the interaction zone
``pulse``    global resonant pulse on one species
``phase``    kind-selective diagonal phase on one species
``park``     atom shelved to the metastable level (not driven, not blockading)
``unpark``   atom returned from the metastable level
``shift``    simultaneous in-zone moves of several atoms
``plan``     data-qubit kind per slot at this mode
``layer``    start of a wire-gate layer (bookkeeping)
``select``   start of a superatom-selective gate (bookkeeping)
``cz``       start of a mediated CZ interaction (bookkeeping)
``relabel``  two slots exchange their Q-Pairs (bookkeeping)
``prepare``  logical input is loaded onto the listed data atoms (qubit j -> atom j)
``measure``  output qubit j is read from the listed atom j
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Iterable, Mapping

from .blockade import PhaseEvent
from .pulses import SINGLE, SUPERATOM, PulseSpec

HEADER = "# maqcy-schedule"


class TraceError(ValueError):
    """Malformed trace text."""


def fmt_float(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def _strs(text: str) -> tuple[str, ...]:
    return tuple(t for t in text.split(",") if t)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


def _join(values: Iterable) -> str:
    return ",".join(fmt_float(v) if isinstance(v, float) else str(v) for v in values)


@dataclass(frozen=True)
class MoveEvent:
    tag: ClassVar[str] = "move"
    direction: str
    atom: str
    role: str = "data"
    slot: int = 0
    species: str = "A"
    kind: str = SINGLE
    m: int = 1
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        if self.direction not in ("in", "out"):
            raise TraceError(f"bad move direction {self.direction!r}")

    def fields(self):
        out = [("dir", self.direction), ("atom", self.atom), ("role", self.role),
               ("slot", str(self.slot))]
        if self.direction == "in":
            out += [("species", self.species), ("kind", self.kind), ("M", str(self.m)),
                    ("x", fmt_float(self.x)), ("y", fmt_float(self.y))]
        return out

    @classmethod
    def from_fields(cls, f):
        if f["dir"] == "out":
            return cls("out", f["atom"], f.get("role", "data"), int(f.get("slot", 0)))
        return cls("in", f["atom"], f["role"], int(f["slot"]), f["species"], f["kind"],
                   int(f["M"]), float(f["x"]), float(f["y"]))


@dataclass(frozen=True)
class PulseEvent:
    tag: ClassVar[str] = "pulse"
    pulse: PulseSpec

    def fields(self):
        p = self.pulse
        return [("species", p.species), ("theta", fmt_float(p.area_theta)),
                ("phi", fmt_float(p.phase_phi)), ("inverse", str(int(p.inverse)))]

    @classmethod
    def from_fields(cls, f):
        return cls(PulseSpec(f["species"], float(f["theta"]), float(f["phi"]),
                             bool(int(f["inverse"]))))


@dataclass(frozen=True)
class PhaseTraceEvent:
    """Trace wrapper around :class:`maqcy.blockade.PhaseEvent`."""

    tag: ClassVar[str] = "phase"
    species: str
    single: float = 0.0
    superatom: float = 0.0

    def engine_event(self) -> PhaseEvent:
        return PhaseEvent(self.species, {SINGLE: self.single, SUPERATOM: self.superatom})

    def fields(self):
        return [("species", self.species), ("single", fmt_float(self.single)),
                ("superatom", fmt_float(self.superatom))]

    @classmethod
    def from_fields(cls, f):
        return cls(f["species"], float(f["single"]), float(f["superatom"]))


@dataclass(frozen=True)
class ParkEvent:
    tag: ClassVar[str] = "park"
    atom: str

    def fields(self):
        return [("atom", self.atom)]

    @classmethod
    def from_fields(cls, f):
        return cls(f["atom"])


@dataclass(frozen=True)
class UnparkEvent(ParkEvent):
    tag: ClassVar[str] = "unpark"


@dataclass(frozen=True)
class ShiftEvent:
    tag: ClassVar[str] = "shift"
    atoms: tuple[str, ...]
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def fields(self):
        return [("atoms", _join(self.atoms)), ("x", ",".join(map(fmt_float, self.xs))),
                ("y", ",".join(map(fmt_float, self.ys)))]

    @classmethod
    def from_fields(cls, f):
        return cls(_strs(f["atoms"]), _floats(f["x"]), _floats(f["y"]))


@dataclass(frozen=True)
class PlanEvent:
    tag: ClassVar[str] = "plan"
    slots: tuple[int, ...]
    kinds: tuple[str, ...]

    def fields(self):
        return [("slots", _join(self.slots)), ("kinds", _join(self.kinds))]

    @classmethod
    def from_fields(cls, f):
        return cls(_ints(f["slots"]), _strs(f["kinds"]))


@dataclass(frozen=True)
class LayerEvent:
    tag: ClassVar[str] = "layer"
    label: str
    gate: str
    slots: tuple[int, ...] = ()

    def fields(self):
        return [("label", self.label), ("gate", self.gate), ("slots", _join(self.slots))]

    @classmethod
    def from_fields(cls, f):
        return cls(f["label"], f["gate"], _ints(f.get("slots", "")))


@dataclass(frozen=True)
class SelectEvent:
    tag: ClassVar[str] = "select"
    gate: str
    slots: tuple[int, ...]
    phi: float = 0.0

    def fields(self):
        return [("gate", self.gate), ("slots", _join(self.slots)), ("phi", fmt_float(self.phi))]

    @classmethod
    def from_fields(cls, f):
        return cls(f["gate"], _ints(f["slots"]), float(f.get("phi", 0)))


@dataclass(frozen=True)
class CZEvent:
    tag: ClassVar[str] = "cz"
    slots: tuple[int, int]

    def fields(self):
        return [("slots", _join(self.slots))]

    @classmethod
    def from_fields(cls, f):
        return cls(_ints(f["slots"]))


@dataclass(frozen=True)
class RelabelEvent(CZEvent):
    tag: ClassVar[str] = "relabel"


@dataclass(frozen=True)
class PrepareEvent:
    tag: ClassVar[str] = "prepare"
    atoms: tuple[str, ...]

    def fields(self):
        return [("atoms", _join(self.atoms))]

    @classmethod
    def from_fields(cls, f):
        return cls(_strs(f["atoms"]))


@dataclass(frozen=True)
class MeasureEvent(PrepareEvent):
    tag: ClassVar[str] = "measure"


EVENT_TYPES = {cls.tag: cls for cls in (
    MoveEvent, PulseEvent, PhaseTraceEvent, ParkEvent, UnparkEvent, ShiftEvent, PlanEvent,
    LayerEvent, SelectEvent, CZEvent, RelabelEvent, PrepareEvent, MeasureEvent)}

#: Events that change no quantum state and take no time.
MARKERS = (PlanEvent, LayerEvent, SelectEvent, CZEvent, RelabelEvent)


def format_event(mode: int, event) -> str:
    parts = [f"mode={mode}", event.tag]
    parts += [f"{k}={v}" for k, v in event.fields()]
    return " ".join(parts)


def parse_event(line: str):
    tokens = line.split()
    if len(tokens) < 2 or not tokens[0].startswith("mode="):
        raise TraceError(f"not an event line: {line!r}")
    mode = int(tokens[0][5:])
    tag = tokens[1]
    if tag not in EVENT_TYPES:
        raise TraceError(f"unknown event {tag!r}")
    fields = {}
    for tok in tokens[2:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise TraceError(f"bad field {tok!r}")
        fields[key] = value
    try:
        return mode, EVENT_TYPES[tag].from_fields(fields)
    except KeyError as exc:
        raise TraceError(f"{tag}: missing field {exc}") from None


@dataclass(frozen=True)
class Schedule:
    """Ordered, mode-stamped event list plus register dimensions.

    ``temporal_modes`` counts physical modes including the measurement mode;
    ``layers`` lists the wire-gate layers (the coarse-grained modes of a
    space-time diagram).
    """

    qubit_count: int
    slot_count: int
    events: tuple = ()
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def temporal_modes(self) -> int:
        return max((m for m, _ in self.events), default=-1) + 1

    @property
    def superatom_plan(self) -> dict[tuple[int, int], str]:
        plan = {}
        for mode, ev in self.events:
            if isinstance(ev, PlanEvent):
                for slot, kind in zip(ev.slots, ev.kinds):
                    plan[(mode, slot)] = kind
        return plan

    @property
    def layers(self) -> list[tuple[int, LayerEvent]]:
        return [(m, e) for m, e in self.events if isinstance(e, LayerEvent)]

    def of_type(self, cls) -> list[tuple[int, object]]:
        return [(m, e) for m, e in self.events if type(e) is cls]

    def pulse_count(self) -> int:
        return sum(1 for _, e in self.events if isinstance(e, PulseEvent))

    def to_trace(self) -> str:
        head = f"{HEADER} qubits={self.qubit_count} slots={self.slot_count}"
        for k in sorted(self.meta):
            head += f" {k}={self.meta[k]}"
        lines = [head] + [format_event(m, e) for m, e in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_trace(cls, text: str) -> "Schedule":
        qubits = slots = None
        meta = {}
        events = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(HEADER):
                for tok in line[len(HEADER):].split():
                    key, _, value = tok.partition("=")
                    if key == "qubits":
                        qubits = int(value)
                    elif key == "slots":
                        slots = int(value)
                    else:
                        meta[key] = value
                continue
            if line.startswith("#"):
                continue
            try:
                events.append(parse_event(line))
            except (TraceError, ValueError) as exc:
                raise TraceError(f"trace line {lineno}: {exc}") from None
        if qubits is None or slots is None:
            raise TraceError("missing schedule header")
        return cls(qubits, slots, tuple(events), meta)


def angle_close(a: float, b: float, tol: float = 1e-12) -> bool:
    d = math.remainder(a - b, 2 * math.pi)
    return abs(d) <= tol
