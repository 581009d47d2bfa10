"""Intermediate representation for adaptive quantum circuits.

A circuit is an ordered list of instructions over ``num_qubits`` qubits and
``num_cbits`` classical bits.  Besides plain gates it supports mid-circuit
measurements that write classical bits, conditional gate blocks gated on a
boolean expression over previously written bits, per-qubit delays, barriers,
and (after noise decoration) Kraus-channel instructions.

Circuits are treated as immutable once built: the fluent builder methods
(``c.h(0)``, ``c.cnot(0, 1)``, ...) are meant for construction only, and
engines never mutate a circuit they execute.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence, Union

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .channels import KrausChannel

SINGLE_QUBIT_GATES = frozenset({"I", "X", "Y", "Z", "H", "S", "SDG", "RX", "RY", "RZ"})
TWO_QUBIT_GATES = frozenset({"CNOT", "CZ"})
ROTATION_GATES = frozenset({"RX", "RY", "RZ"})
GATE_KINDS = SINGLE_QUBIT_GATES | TWO_QUBIT_GATES


class CircuitError(ValueError):
    """Raised for malformed circuits, expressions, or instruction arguments."""


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """A named unitary; rotation kinds (RX/RY/RZ) carry an angle in radians."""

    kind: str
    theta: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if kind in ROTATION_GATES:
            if self.theta is None:
                raise CircuitError(f"{kind} requires an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise CircuitError(f"{kind} takes no angle")

    @property
    def num_qubits(self) -> int:
        return 2 if self.kind in TWO_QUBIT_GATES else 1


# ---------------------------------------------------------------------------
# Conditional expressions
# ---------------------------------------------------------------------------

_PRECEDENCE = {"or": 1, "xor": 2, "and": 3, "not": 4, "bit": 5, "const": 5}


@dataclass(frozen=True)
class CondExpr:
    """Boolean expression tree over classical bits.

    Nodes are one of ``bit(i)``, ``const(v)``, ``~e``, ``e & f``, ``e | f``,
    ``e ^ f``.  Evaluation is total once every referenced bit has been
    written; evaluating against an unwritten bit raises ``CircuitError``.
    """

    op: str
    args: tuple = ()

    def __xor__(self, other: "CondExpr") -> "CondExpr":
        return CondExpr("xor", (self, other))

    def __and__(self, other: "CondExpr") -> "CondExpr":
        return CondExpr("and", (self, other))

    def __or__(self, other: "CondExpr") -> "CondExpr":
        return CondExpr("or", (self, other))

    def __invert__(self) -> "CondExpr":
        return CondExpr("not", (self,))

    def bits(self) -> frozenset[int]:
        """Classical bit indices referenced by this expression."""
        if self.op == "bit":
            return frozenset({self.args[0]})
        if self.op == "const":
            return frozenset()
        out: frozenset[int] = frozenset()
        for a in self.args:
            out |= a.bits()
        return out

    def evaluate(self, register: Sequence[int | None]) -> bool:
        if self.op == "bit":
            i = self.args[0]
            if i >= len(register) or register[i] is None:
                raise CircuitError(f"conditional reads unwritten classical bit c{i}")
            return bool(register[i])
        if self.op == "const":
            return bool(self.args[0])
        if self.op == "not":
            return not self.args[0].evaluate(register)
        vals = [a.evaluate(register) for a in self.args]
        if self.op == "and":
            return vals[0] and vals[1]
        if self.op == "or":
            return vals[0] or vals[1]
        if self.op == "xor":
            return vals[0] != vals[1]
        raise CircuitError(f"bad expression op {self.op!r}")

    def evaluate_batch(self, register: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over a (rows, num_cbits) 0/1 array."""
        if self.op == "bit":
            return register[:, self.args[0]].astype(bool)
        if self.op == "const":
            return np.full(register.shape[0], bool(self.args[0]))
        if self.op == "not":
            return ~self.args[0].evaluate_batch(register)
        a = self.args[0].evaluate_batch(register)
        b = self.args[1].evaluate_batch(register)
        if self.op == "and":
            return a & b
        if self.op == "or":
            return a | b
        if self.op == "xor":
            return a ^ b
        raise CircuitError(f"bad expression op {self.op!r}")

    def to_text(self) -> str:
        return _expr_text(self, 0)


def _expr_text(e: CondExpr, parent_prec: int) -> str:
    prec = _PRECEDENCE[e.op]
    if e.op == "bit":
        s = f"c{e.args[0]}"
    elif e.op == "const":
        s = "1" if e.args[0] else "0"
    elif e.op == "not":
        s = "!" + _expr_text(e.args[0], prec)
    else:
        sym = {"xor": "^", "and": "&", "or": "|"}[e.op]
        s = _expr_text(e.args[0], prec) + sym + _expr_text(e.args[1], prec)
    if prec < parent_prec:
        return "(" + s + ")"
    return s


def bit(i: int) -> CondExpr:
    return CondExpr("bit", (int(i),))


def const(v: bool) -> CondExpr:
    return CondExpr("const", (bool(v),))


_TOKEN_RE = re.compile(r"\s*(c\d+|[01()!^&|])")


def parse_cond(text: str) -> CondExpr:
    """Parse the textual expression syntax, e.g. ``"c0^c1"`` or ``"!(c0&c2)|1"``."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise CircuitError(f"bad conditional expression {text!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    parser = _CondParser(tokens, text)
    expr = parser.parse_or()
    if parser.peek() is not None:
        raise CircuitError(f"trailing tokens in conditional expression {text!r}")
    return expr


class _CondParser:
    """Recursive descent with precedence OR < XOR < AND < NOT."""

    def __init__(self, tokens, text):
        self.tokens = tokens
        self.i = 0
        self.text = text

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse_or(self):
        e = self.parse_xor()
        while self.peek() == "|":
            self.take()
            e = e | self.parse_xor()
        return e

    def parse_xor(self):
        e = self.parse_and()
        while self.peek() == "^":
            self.take()
            e = e ^ self.parse_and()
        return e

    def parse_and(self):
        e = self.parse_unary()
        while self.peek() == "&":
            self.take()
            e = e & self.parse_unary()
        return e

    def parse_unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return ~self.parse_unary()
        return self.parse_atom()

    def parse_atom(self):
        tok = self.take()
        if tok is None:
            raise CircuitError(f"truncated conditional expression {self.text!r}")
        if tok == "(":
            e = self.parse_or()
            if self.take() != ")":
                raise CircuitError(f"unbalanced parens in {self.text!r}")
            return e
        if tok == "0":
            return const(False)
        if tok == "1":
            return const(True)
        if tok.startswith("c"):
            return bit(int(tok[1:]))
        raise CircuitError(f"unexpected token {tok!r} in {self.text!r}")


def eval_cond(expr: CondExpr, register: Sequence[int | None]) -> bool:
    """Evaluate a conditional expression against a classical register."""
    return expr.evaluate(register)


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateOp:
    gate: Gate
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.gate.num_qubits:
            raise CircuitError(
                f"{self.gate.kind} expects {self.gate.num_qubits} qubits, got {self.qubits}"
            )


@dataclass(frozen=True)
class Measure:
    """Projective measurement writing one classical bit.

    ``basis`` is ``"Z"`` or ``"X"``; X-basis measurement is desugared to H
    followed by a Z-basis measurement when the circuit is lowered.
    ``flip_probs`` = (P(read 1 | true 0), P(read 0 | true 1)) models readout
    confusion on the recorded bit and is attached by noise decoration.
    """

    qubit: int
    cbit: int
    basis: str = "Z"
    flip_probs: tuple[float, float] | None = None

    def __post_init__(self):
        basis = self.basis.upper()
        if basis not in ("Z", "X"):
            raise CircuitError(f"measurement basis must be Z or X, got {self.basis!r}")
        object.__setattr__(self, "basis", basis)


@dataclass(frozen=True)
class Reset:
    """Active reset: desugared to a scratch measurement plus conditional X."""

    qubit: int


@dataclass(frozen=True)
class Delay:
    qubit: int
    duration_ns: float


@dataclass(frozen=True)
class Barrier:
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Conditional:
    """A block of gates applied when ``cond`` evaluates true.

    Conditional blocks contain only gates (no nested measurements).
    """

    cond: CondExpr
    gates: tuple[GateOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if not isinstance(g, GateOp):
                raise CircuitError("conditional blocks may contain only gates")


@dataclass(frozen=True)
class ChannelOp:
    """A single-qubit Kraus channel inserted by noise decoration."""

    qubit: int
    channel: "KrausChannel"


Instruction = Union[GateOp, Measure, Reset, Delay, Barrier, Conditional, ChannelOp]


def instruction_qubits(instr: Instruction) -> tuple[int, ...]:
    """Qubits an instruction acts on (union over a conditional's gates)."""
    if isinstance(instr, GateOp):
        return instr.qubits
    if isinstance(instr, Measure):
        return (instr.qubit,)
    if isinstance(instr, (Reset, Delay)):
        return (instr.qubit,)
    if isinstance(instr, ChannelOp):
        return (instr.qubit,)
    if isinstance(instr, Barrier):
        return instr.qubits
    if isinstance(instr, Conditional):
        out: list[int] = []
        for g in instr.gates:
            for q in g.qubits:
                if q not in out:
                    out.append(q)
        return tuple(out)
    raise CircuitError(f"unknown instruction {instr!r}")


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Topology:
    """Undirected adjacency over qubits."""

    num_qubits: int
    edges: frozenset[tuple[int, int]]

    @staticmethod
    def from_edges(num_qubits: int, edges: Iterable[tuple[int, int]]) -> "Topology":
        norm = frozenset((min(a, b), max(a, b)) for a, b in edges)
        for a, b in norm:
            if not (0 <= a < num_qubits and 0 <= b < num_qubits) or a == b:
                raise CircuitError(f"bad edge ({a}, {b}) for {num_qubits} qubits")
        return Topology(num_qubits, norm)

    @staticmethod
    def ring(num_qubits: int) -> "Topology":
        return Topology.from_edges(
            num_qubits, [(i, (i + 1) % num_qubits) for i in range(num_qubits)]
        )

    def are_adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


# ---------------------------------------------------------------------------
# Circuit
# ---------------------------------------------------------------------------


@dataclass
class Circuit:
    num_qubits: int
    num_cbits: int = 0
    instructions: list[Instruction] = field(default_factory=list)
    topology: Topology | None = None

    # -- fluent construction helpers ------------------------------------

    def append(self, instr: Instruction) -> "Circuit":
        self.instructions.append(instr)
        return self

    def gate(self, kind: str, *qubits: int, theta: float | None = None) -> "Circuit":
        return self.append(GateOp(Gate(kind, theta), tuple(qubits)))

    def i(self, q: int) -> "Circuit":
        return self.gate("I", q)

    def x(self, q: int) -> "Circuit":
        return self.gate("X", q)

    def y(self, q: int) -> "Circuit":
        return self.gate("Y", q)

    def z(self, q: int) -> "Circuit":
        return self.gate("Z", q)

    def h(self, q: int) -> "Circuit":
        return self.gate("H", q)

    def s(self, q: int) -> "Circuit":
        return self.gate("S", q)

    def sdg(self, q: int) -> "Circuit":
        return self.gate("SDG", q)

    def rx(self, theta: float, q: int) -> "Circuit":
        return self.gate("RX", q, theta=theta)

    def ry(self, theta: float, q: int) -> "Circuit":
        return self.gate("RY", q, theta=theta)

    def rz(self, theta: float, q: int) -> "Circuit":
        return self.gate("RZ", q, theta=theta)

    def cnot(self, control: int, target: int) -> "Circuit":
        return self.gate("CNOT", control, target)

    def cz(self, a: int, b: int) -> "Circuit":
        return self.gate("CZ", a, b)

    def measure(self, qubit: int, cbit: int, basis: str = "Z") -> "Circuit":
        return self.append(Measure(qubit, cbit, basis))

    def reset(self, qubit: int) -> "Circuit":
        return self.append(Reset(qubit))

    def delay(self, qubit: int, duration_ns: float) -> "Circuit":
        return self.append(Delay(qubit, float(duration_ns)))

    def barrier(self, *qubits: int) -> "Circuit":
        return self.append(Barrier(tuple(qubits)))

    def cond(self, expr: CondExpr, gates: Iterable[GateOp | tuple]) -> "Circuit":
        ops = []
        for g in gates:
            if isinstance(g, GateOp):
                ops.append(g)
            else:
                kind, *qubits = g
                ops.append(GateOp(Gate(kind), tuple(qubits)))
        return self.append(Conditional(expr, tuple(ops)))

    def channel(self, qubit: int, channel: "KrausChannel") -> "Circuit":
        return self.append(ChannelOp(qubit, channel))

    # -- misc -------------------------------------------------------------

    def copy(self) -> "Circuit":
        return Circuit(self.num_qubits, self.num_cbits, list(self.instructions), self.topology)

    def extend(self, other: "Circuit") -> "Circuit":
        """Append another circuit's instructions (qubit/cbit spaces must match)."""
        if other.num_qubits > self.num_qubits or other.num_cbits > self.num_cbits:
            raise CircuitError("extend target is smaller than the appended circuit")
        self.instructions.extend(other.instructions)
        return self

    def count_measurements(self) -> int:
        n = 0
        for instr in self.instructions:
            if isinstance(instr, (Measure, Reset)):
                n += 1
        return n


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):  # pragma: no cover - cosmetic
        return f"{self.code}: {self.message}"


def validate(circuit: Circuit, topology: Topology | None = None) -> list[Violation]:
    """Check qubit/cbit ranges, conditional bit liveness, and adjacency.

    Violations are returned as data; an empty list means the circuit is
    well-formed (and, when a topology is given, hardware-mappable without
    routing).
    """
    errs: list[Violation] = []
    topo = topology if topology is not None else circuit.topology
    written: set[int] = set()

    def check_qubit(q, what):
        if not (0 <= q < circuit.num_qubits):
            errs.append(Violation("qubit-range", f"{what} references qubit {q} outside [0, {circuit.num_qubits})"))
            return False
        return True

    def check_cbit(c, what):
        if not (0 <= c < circuit.num_cbits):
            errs.append(Violation("cbit-range", f"{what} references classical bit {c} outside [0, {circuit.num_cbits})"))
            return False
        return True

    def check_gate(op: GateOp):
        ok = all(check_qubit(q, op.gate.kind) for q in op.qubits)
        if len(op.qubits) == 2:
            if op.qubits[0] == op.qubits[1]:
                errs.append(Violation("duplicate-qubits", f"{op.gate.kind} acts twice on qubit {op.qubits[0]}"))
            elif ok and topo is not None and not topo.are_adjacent(*op.qubits):
                errs.append(Violation(
                    "non-adjacent-pair",
                    f"{op.gate.kind} on {op.qubits} is not an edge of the topology",
                ))

    for instr in circuit.instructions:
        if isinstance(instr, GateOp):
            check_gate(instr)
        elif isinstance(instr, Measure):
            check_qubit(instr.qubit, "measure")
            if check_cbit(instr.cbit, "measure"):
                written.add(instr.cbit)
        elif isinstance(instr, Reset):
            check_qubit(instr.qubit, "reset")
        elif isinstance(instr, Delay):
            check_qubit(instr.qubit, "delay")
            if instr.duration_ns < 0:
                errs.append(Violation("negative-delay", f"delay of {instr.duration_ns} ns on qubit {instr.qubit}"))
        elif isinstance(instr, Barrier):
            for q in instr.qubits:
                check_qubit(q, "barrier")
        elif isinstance(instr, ChannelOp):
            check_qubit(instr.qubit, "channel")
        elif isinstance(instr, Conditional):
            for b in sorted(instr.cond.bits()):
                if not (0 <= b < circuit.num_cbits):
                    errs.append(Violation("cbit-range", f"conditional references classical bit {b} outside [0, {circuit.num_cbits})"))
                elif b not in written:
                    errs.append(Violation("unwritten-bit", f"conditional reads classical bit c{b} before any measurement writes it"))
            for g in instr.gates:
                check_gate(g)
        else:
            errs.append(Violation("unknown-instruction", repr(instr)))
    return errs


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------


def lower(circuit: Circuit) -> Circuit:
    """Desugar X-basis measurements and resets.

    X-basis measurement becomes H followed by a Z-basis measurement.  Reset
    becomes a Z measurement into a fresh scratch bit followed by a
    conditional X.  Scratch bits are appended after the user-visible
    register, so ``circuit.num_cbits`` of the *original* circuit is the
    visible-bit count for any engine output.
    """
    out = Circuit(circuit.num_qubits, circuit.num_cbits, [], circuit.topology)
    scratch = circuit.num_cbits
    for instr in circuit.instructions:
        if isinstance(instr, Measure) and instr.basis == "X":
            out.h(instr.qubit)
            out.append(Measure(instr.qubit, instr.cbit, "Z", instr.flip_probs))
        elif isinstance(instr, Reset):
            out.append(Measure(instr.qubit, scratch, "Z"))
            out.cond(bit(scratch), [("X", instr.qubit)])
            scratch += 1
        else:
            out.append(instr)
    out.num_cbits = scratch
    return out


# ---------------------------------------------------------------------------
# Depth
# ---------------------------------------------------------------------------


def depth(circuit: Circuit) -> int:
    """Greedy as-soon-as-possible layer count.

    A layer holds operations on disjoint qubits.  A conditional depends on
    the latest measurement writing any bit it reads, so a measurement and a
    consuming conditional always land in distinct layers.  Delays, barriers,
    and channel instructions occupy no layer.  The circuit is lowered first,
    so X-basis measurements and resets cost their desugared layers.
    """
    low = lower(circuit)
    qubit_level = [0] * low.num_qubits
    cbit_level: dict[int, int] = {}
    top = 0
    for instr in low.instructions:
        if isinstance(instr, (Delay, Barrier, ChannelOp)):
            continue
        if isinstance(instr, GateOp):
            lvl = 1 + max((qubit_level[q] for q in instr.qubits), default=0)
            for q in instr.qubits:
                qubit_level[q] = lvl
        elif isinstance(instr, Measure):
            lvl = 1 + qubit_level[instr.qubit]
            qubit_level[instr.qubit] = lvl
            cbit_level[instr.cbit] = lvl
        elif isinstance(instr, Conditional):
            qs = instruction_qubits(instr)
            lvl = 1 + max(
                max((qubit_level[q] for q in qs), default=0),
                max((cbit_level.get(b, 0) for b in instr.cond.bits()), default=0),
            )
            for q in qs:
                qubit_level[q] = lvl
        else:
            raise CircuitError(f"cannot compute depth of {instr!r}")
        top = max(top, lvl)
    return top
