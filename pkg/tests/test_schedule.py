import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from maqcy import schedule as sch
from maqcy.pulses import SINGLE, SUPERATOM, PulseSpec
from maqcy.schedule import (CZEvent, LayerEvent, MeasureEvent, MoveEvent, PlanEvent,
                            PrepareEvent, PulseEvent, Schedule, TraceError)

finite = st.floats(-1e6, 1e6, allow_nan=False)
ident = st.text("abcdefgh0123456789_", min_size=1, max_size=6)

events = st.one_of(
    st.builds(MoveEvent, st.just("in"), ident, st.sampled_from(["data", "aux", "mediator"]),
              st.integers(0, 9), st.sampled_from("AB"), st.sampled_from([SINGLE, SUPERATOM]),
              st.integers(2, 6), finite, finite),
    st.builds(MoveEvent, st.just("out"), ident, st.sampled_from(["data", "aux"]),
              st.integers(0, 9)),
    st.builds(PulseEvent, st.builds(PulseSpec, st.sampled_from("AB"),
                                    st.floats(0, 10, allow_nan=False),
                                    st.floats(0, 6.28, allow_nan=False), st.booleans())),
    st.builds(sch.PhaseTraceEvent, st.sampled_from("AB"), finite, finite),
    st.builds(sch.ParkEvent, ident),
    st.builds(sch.UnparkEvent, ident),
    st.integers(1, 4).flatmap(lambda n: st.builds(
        sch.ShiftEvent, st.tuples(*[ident] * n), st.tuples(*[finite] * n),
        st.tuples(*[finite] * n))),
    st.builds(PlanEvent, st.tuples(st.integers(0, 5), st.integers(0, 5)),
              st.tuples(*[st.sampled_from([SINGLE, SUPERATOM])] * 2)),
    st.builds(LayerEvent, ident, st.sampled_from(["H", "CZ", "translate"]),
              st.tuples(st.integers(0, 5))),
    st.builds(sch.SelectEvent, st.sampled_from(["hadamard", "phase"]),
              st.tuples(st.integers(0, 5)), finite),
    st.builds(CZEvent, st.tuples(st.integers(0, 5), st.integers(0, 5))),
    st.builds(sch.RelabelEvent, st.tuples(st.integers(0, 5), st.integers(0, 5))),
    st.builds(PrepareEvent, st.tuples(ident, ident)),
    st.builds(MeasureEvent, st.tuples(ident)),
)


@given(st.integers(0, 50), events)
def test_event_line_roundtrip(mode, event):
    line = sch.format_event(mode, event)
    assert sch.parse_event(line) == (mode, event)


@given(st.lists(st.tuples(st.integers(0, 20), events), max_size=12))
def test_schedule_trace_roundtrip(evs):
    s = Schedule(3, 4, tuple(evs), {"name": "x"})
    again = Schedule.from_trace(s.to_trace())
    assert again == s
    assert again.to_trace() == s.to_trace()


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_exact(x):
    assert float(sch.fmt_float(x)) == x


def test_parse_errors():
    with pytest.raises(TraceError):
        sch.parse_event("pulse species=A")
    with pytest.raises(TraceError):
        sch.parse_event("mode=0 warp speed=9")
    with pytest.raises(TraceError):
        sch.parse_event("mode=0 pulse species")
    with pytest.raises(TraceError, match="missing field"):
        sch.parse_event("mode=0 pulse species=A")
    with pytest.raises(TraceError):
        MoveEvent("sideways", "a")


def test_from_trace_errors():
    with pytest.raises(TraceError, match="header"):
        Schedule.from_trace("mode=0 park atom=a\n")
    with pytest.raises(TraceError, match="line 2"):
        Schedule.from_trace("# maqcy-schedule qubits=1 slots=1\nmode=x park atom=a\n")


def test_derived_properties():
    evs = ((0, PlanEvent((0, 1), (SINGLE, SUPERATOM))), (0, LayerEvent("t0", "H", (0,))),
           (0, PulseEvent(PulseSpec("A", math.pi))), (1, PlanEvent((0, 1), (SUPERATOM, SINGLE))),
           (1, CZEvent((0, 1))), (1, sch.RelabelEvent((0, 1))), (2, MeasureEvent(("a",))))
    s = Schedule(2, 2, evs)
    assert s.temporal_modes == 3
    assert s.superatom_plan[(1, 0)] == SUPERATOM
    assert len(s.layers) == 1
    assert len(s.of_type(CZEvent)) == 1  # exact type, relabel excluded
    assert s.pulse_count() == 1
    assert Schedule(1, 1).temporal_modes == 0


def test_angle_close():
    assert sch.angle_close(0.0, 2 * math.pi)
    assert not sch.angle_close(0.0, 1e-6)
