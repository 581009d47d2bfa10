"""Operation durations and circuit time scheduling.

The scheduler is as-soon-as-possible over per-qubit cursors, with one extra
rule: a conditional block may not begin before (end of the latest
measurement writing any bit it reads) + the classical feedback latency.
The resulting per-qubit timelines are contiguous from 0 to a common end
time, with gaps labeled idle (or feedback-wait when caused by the latency
rule).  Noise decoration turns those gaps into decoherence channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuits import (
    Barrier,
    ChannelOp,
    Circuit,
    CircuitError,
    Conditional,
    Delay,
    GateOp,
    Measure,
    lower,
)


class SchedulingError(ValueError):
    pass


@dataclass(frozen=True)
class Durations:
    """Wall-clock durations in nanoseconds for each instruction kind.

    ``reset_ns`` is retained for configuration round-trips; the scheduler
    derives actual reset timing from its lowering (measure + feedback + X).
    """

    single_qubit_gate_ns: float = 30.0
    two_qubit_gate_ns: float = 200.0
    measurement_ns: float = 700.0
    reset_ns: float = 850.0
    feedback_latency_ns: float = 150.0

    def gate_ns(self, num_qubits: int) -> float:
        d = self.single_qubit_gate_ns if num_qubits == 1 else self.two_qubit_gate_ns
        if d is None:
            raise SchedulingError(f"missing duration for {num_qubits}-qubit gates")
        return float(d)

    def require(self, name: str) -> float:
        v = getattr(self, name)
        if v is None:
            raise SchedulingError(f"missing duration entry {name}")
        return float(v)


@dataclass(frozen=True)
class Interval:
    start_ns: float
    end_ns: float
    activity: str  # gate | measure | idle | feedback-wait


@dataclass
class Schedule:
    """Scheduling result over the lowered circuit."""

    lowered: Circuit
    windows: list[dict[int, Interval]]  # per instruction: qubit -> busy window
    timeline: dict[int, list[Interval]] = field(default_factory=dict)
    end_ns: float = 0.0


def schedule(circuit: Circuit, durations: Durations) -> Schedule:
    """Assign start/end times to every instruction of the lowered circuit."""
    low = lower(circuit)
    nq = low.num_qubits
    ready = [0.0] * nq
    cbit_ready: dict[int, float] = {}
    latency = durations.require("feedback_latency_ns")
    busy: dict[int, list[Interval]] = {q: [] for q in range(nq)}
    waits: dict[int, list[Interval]] = {q: [] for q in range(nq)}
    windows: list[dict[int, Interval]] = []

    for instr in low.instructions:
        win: dict[int, Interval] = {}
        if isinstance(instr, GateOp):
            start = max((ready[q] for q in instr.qubits), default=0.0)
            end = start + durations.gate_ns(len(instr.qubits))
            for q in instr.qubits:
                win[q] = Interval(start, end, "gate")
                busy[q].append(win[q])
                ready[q] = end
        elif isinstance(instr, Measure):
            start = ready[instr.qubit]
            end = start + durations.require("measurement_ns")
            win[instr.qubit] = Interval(start, end, "measure")
            busy[instr.qubit].append(win[instr.qubit])
            ready[instr.qubit] = end
            cbit_ready[instr.cbit] = end
        elif isinstance(instr, Conditional):
            qs = list(dict.fromkeys(q for g in instr.gates for q in g.qubits))
            sources = [cbit_ready.get(b) for b in instr.cond.bits()]
            if any(s is None for s in sources):
                raise SchedulingError("conditional reads a bit no measurement has written")
            block_start = max(
                max((ready[q] for q in qs), default=0.0),
                max((s + latency for s in sources), default=0.0),
            )
            for q in qs:
                if block_start > ready[q]:
                    waits[q].append(Interval(ready[q], block_start, "feedback-wait"))
            cursor = {q: block_start for q in qs}
            first_start = {q: block_start for q in qs}
            for g in instr.gates:
                g_start = max(cursor[q] for q in g.qubits)
                g_end = g_start + durations.gate_ns(len(g.qubits))
                for q in g.qubits:
                    busy[q].append(Interval(g_start, g_end, "gate"))
                    cursor[q] = g_end
            for q in qs:
                win[q] = Interval(first_start[q], cursor[q], "gate")
                ready[q] = cursor[q]
        elif isinstance(instr, Delay):
            start = ready[instr.qubit]
            end = start + instr.duration_ns
            win[instr.qubit] = Interval(start, end, "idle")
            ready[instr.qubit] = end
        elif isinstance(instr, Barrier):
            t = max((ready[q] for q in instr.qubits), default=0.0)
            for q in instr.qubits:
                ready[q] = t
        elif isinstance(instr, ChannelOp):
            pass  # zero duration
        else:
            raise SchedulingError(f"cannot schedule {instr!r}")
        windows.append(win)

    end_ns = max(ready, default=0.0)
    timeline = _fill_timeline(nq, busy, waits, windows, end_ns)
    return Schedule(lowered=low, windows=windows, timeline=timeline, end_ns=end_ns)


def _fill_timeline(nq, busy, waits, windows, end_ns):
    """Merge busy/wait/delay intervals and fill holes with idle."""
    timeline: dict[int, list[Interval]] = {}
    for q in range(nq):
        marked = list(busy[q]) + list(waits[q])
        for win in windows:
            iv = win.get(q)
            if iv is not None and iv.activity == "idle":
                marked.append(iv)
        marked.sort(key=lambda iv: (iv.start_ns, iv.end_ns))
        out: list[Interval] = []
        cursor = 0.0
        for iv in marked:
            if iv.end_ns <= iv.start_ns:
                continue
            if iv.start_ns > cursor:
                out.append(Interval(cursor, iv.start_ns, "idle"))
            out.append(iv)
            cursor = iv.end_ns
        if cursor < end_ns:
            out.append(Interval(cursor, end_ns, "idle"))
        timeline[q] = out
    return timeline
