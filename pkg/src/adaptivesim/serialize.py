"""Circuit serialization: line-oriented text and a JSON-equivalent form.

Both formats round-trip losslessly for the user-level instruction set
(gates, measurements, resets, delays, barriers, conditionals).  Channel
instructions inserted by noise decoration are an engine-internal extension
and are representable in JSON only.
"""

from __future__ import annotations

import json
import re

import numpy as np

from .channels import KrausChannel
from .circuits import (
    Barrier,
    ChannelOp,
    Circuit,
    CircuitError,
    Conditional,
    Delay,
    Gate,
    GateOp,
    Measure,
    Reset,
    ROTATION_GATES,
    Topology,
    parse_cond,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def _gate_text(op: GateOp) -> str:
    g = op.gate
    head = g.kind if g.theta is None else f"{g.kind}({g.theta!r})"
    return head + " " + " ".join(str(q) for q in op.qubits)


def circuit_to_text(circuit: Circuit) -> str:
    lines = [f"QUBITS {circuit.num_qubits}", f"CBITS {circuit.num_cbits}"]
    if circuit.topology is not None:
        edges = " ".join(f"{a}-{b}" for a, b in circuit.topology.sorted_edges())
        lines.append(f"TOPOLOGY {edges}")
    for instr in circuit.instructions:
        if isinstance(instr, GateOp):
            lines.append(_gate_text(instr))
        elif isinstance(instr, Measure):
            if instr.flip_probs is not None:
                raise CircuitError("decorated measurements have no text form; use JSON")
            lines.append(f"MEASURE {instr.qubit} -> c{instr.cbit} {instr.basis}")
        elif isinstance(instr, Reset):
            lines.append(f"RESET {instr.qubit}")
        elif isinstance(instr, Delay):
            lines.append(f"DELAY {instr.qubit} {instr.duration_ns!r}ns")
        elif isinstance(instr, Barrier):
            lines.append("BARRIER " + " ".join(str(q) for q in instr.qubits))
        elif isinstance(instr, Conditional):
            gates = ", ".join(_gate_text(g) for g in instr.gates)
            lines.append(f"COND {instr.cond.to_text()} : {gates}")
        elif isinstance(instr, ChannelOp):
            raise CircuitError("channel instructions have no text form; use JSON")
        else:
            raise CircuitError(f"cannot serialize {instr!r}")
    return "\n".join(lines) + "\n"


_GATE_RE = re.compile(r"^([A-Za-z]+)(?:\(([^)]+)\))?((?:\s+\d+)+)$")
_MEASURE_RE = re.compile(r"^MEASURE\s+(\d+)\s*->\s*c(\d+)(?:\s+([XZ]))?$", re.IGNORECASE)
_DELAY_RE = re.compile(r"^DELAY\s+(\d+)\s+([-+0-9.eE]+)\s*ns$", re.IGNORECASE)


def _parse_gate(text: str) -> GateOp:
    m = _GATE_RE.match(text.strip())
    if m is None:
        raise CircuitError(f"bad gate line {text!r}")
    kind, theta, qubits = m.groups()
    gate = Gate(kind, float(theta) if theta is not None else None)
    return GateOp(gate, tuple(int(q) for q in qubits.split()))


def circuit_from_text(text: str) -> Circuit:
    circuit = Circuit(0, 0)
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("QUBITS "):
            circuit.num_qubits = int(line.split()[1])
        elif upper.startswith("CBITS "):
            circuit.num_cbits = int(line.split()[1])
        elif upper.startswith("TOPOLOGY"):
            pairs = [tuple(int(x) for x in tok.split("-")) for tok in line.split()[1:]]
            circuit.topology = Topology.from_edges(circuit.num_qubits, pairs)
        elif upper.startswith("MEASURE"):
            m = _MEASURE_RE.match(line)
            if m is None:
                raise CircuitError(f"bad measure line {line!r}")
            q, c, basis = m.groups()
            circuit.measure(int(q), int(c), basis or "Z")
        elif upper.startswith("RESET"):
            circuit.reset(int(line.split()[1]))
        elif upper.startswith("DELAY"):
            m = _DELAY_RE.match(line)
            if m is None:
                raise CircuitError(f"bad delay line {line!r}")
            circuit.delay(int(m.group(1)), float(m.group(2)))
        elif upper.startswith("BARRIER"):
            circuit.barrier(*(int(q) for q in line.split()[1:]))
        elif upper.startswith("COND"):
            body = line[4:]
            if ":" not in body:
                raise CircuitError(f"bad conditional line {line!r}")
            expr_text, gates_text = body.split(":", 1)
            gates = tuple(_parse_gate(part) for part in gates_text.split(",") if part.strip())
            circuit.append(Conditional(parse_cond(expr_text.strip()), gates))
        else:
            circuit.append(_parse_gate(line))
    return circuit


# ---------------------------------------------------------------------------
# JSON format
# ---------------------------------------------------------------------------


def _complex_matrix_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def _complex_matrix_from_json(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _gate_json(op: GateOp) -> dict:
    d = {"kind": op.gate.kind, "qubits": list(op.qubits)}
    if op.gate.theta is not None:
        d["theta"] = op.gate.theta
    return d


def _gate_from_json(d: dict) -> GateOp:
    return GateOp(Gate(d["kind"], d.get("theta")), tuple(d["qubits"]))


def circuit_to_json_dict(circuit: Circuit) -> dict:
    instrs = []
    for instr in circuit.instructions:
        if isinstance(instr, GateOp):
            instrs.append({"type": "gate", **_gate_json(instr)})
        elif isinstance(instr, Measure):
            d = {
                "type": "measure",
                "qubit": instr.qubit,
                "cbit": instr.cbit,
                "basis": instr.basis,
            }
            if instr.flip_probs is not None:
                d["flip_probs"] = list(instr.flip_probs)
            instrs.append(d)
        elif isinstance(instr, Reset):
            instrs.append({"type": "reset", "qubit": instr.qubit})
        elif isinstance(instr, Delay):
            instrs.append({"type": "delay", "qubit": instr.qubit, "duration_ns": instr.duration_ns})
        elif isinstance(instr, Barrier):
            instrs.append({"type": "barrier", "qubits": list(instr.qubits)})
        elif isinstance(instr, Conditional):
            instrs.append({
                "type": "cond",
                "expr": instr.cond.to_text(),
                "gates": [_gate_json(g) for g in instr.gates],
            })
        elif isinstance(instr, ChannelOp):
            ch = instr.channel
            instrs.append({
                "type": "channel",
                "qubit": instr.qubit,
                "name": ch.name,
                "kraus": [_complex_matrix_to_json(k) for k in ch.ops],
                "pauli_probs": [[p, s] for p, s in ch.pauli_probs] if ch.pauli_probs else None,
            })
        else:
            raise CircuitError(f"cannot serialize {instr!r}")
    return {
        "schema_version": SCHEMA_VERSION,
        "num_qubits": circuit.num_qubits,
        "num_cbits": circuit.num_cbits,
        "topology": (
            {"num_qubits": circuit.topology.num_qubits,
             "edges": [list(e) for e in circuit.topology.sorted_edges()]}
            if circuit.topology is not None else None
        ),
        "instructions": instrs,
    }


def circuit_from_json_dict(data: dict) -> Circuit:
    topo = None
    if data.get("topology"):
        topo = Topology.from_edges(
            data["topology"]["num_qubits"],
            [tuple(e) for e in data["topology"]["edges"]],
        )
    circuit = Circuit(data["num_qubits"], data["num_cbits"], [], topo)
    for d in data["instructions"]:
        t = d["type"]
        if t == "gate":
            circuit.append(_gate_from_json(d))
        elif t == "measure":
            fp = d.get("flip_probs")
            circuit.append(Measure(d["qubit"], d["cbit"], d["basis"], tuple(fp) if fp else None))
        elif t == "reset":
            circuit.reset(d["qubit"])
        elif t == "delay":
            circuit.delay(d["qubit"], d["duration_ns"])
        elif t == "barrier":
            circuit.barrier(*d["qubits"])
        elif t == "cond":
            circuit.append(Conditional(
                parse_cond(d["expr"]),
                tuple(_gate_from_json(g) for g in d["gates"]),
            ))
        elif t == "channel":
            ch = KrausChannel(
                d["name"],
                tuple(_complex_matrix_from_json(k) for k in d["kraus"]),
                tuple((p, s) for p, s in d["pauli_probs"]) if d.get("pauli_probs") else None,
            )
            circuit.channel(d["qubit"], ch)
        else:
            raise CircuitError(f"unknown instruction type {t!r}")
    return circuit


def circuit_to_json(circuit: Circuit, indent: int | None = 2) -> str:
    return json.dumps(circuit_to_json_dict(circuit), indent=indent, sort_keys=True)


def circuit_from_json(text: str) -> Circuit:
    return circuit_from_json_dict(json.loads(text))
