"""Circuit execution: trajectory sampling, branch enumeration, density run.

Three interchangeable executions of the same lowered instruction stream:

* ``run_trajectories`` - vectorized Monte-Carlo over shots (noise channels
  sampled per shot);
* ``enumerate_branches`` - exact depth-first expansion of every measurement
  (and Kraus) outcome, the ground-truth oracle for noiseless circuits;
* ``run_density`` - exact classical/quantum ensemble of density matrices,
  the tomography-grade oracle for noisy circuits;
* ``stabilizer_run`` / ``sample_stabilizer`` - tableau execution for
  Clifford circuits.

Classical registers start unwritten; distribution keys render unwritten
bits as 0.  Keys are bitstrings with classical bit 0 leftmost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..circuits import (
    Barrier,
    ChannelOp,
    Circuit,
    Conditional,
    Delay,
    Gate,
    GateOp,
    Measure,
    lower,
    validate,
)
from . import gates as glib
from .stabilizer import StabilizerTableau
from .states import (
    DensityMatrix,
    EngineError,
    PureState,
    _pair_indices,
    _quad_indices,
)

PRUNE_THRESHOLD = 1e-12
MAX_ENUM_MEASUREMENTS = 20
_BLOCK_AMPS = 1 << 22  # max amplitudes held at once by the trajectory engine


class BranchLimitError(EngineError):
    pass


# ---------------------------------------------------------------------------
# Distribution
# ---------------------------------------------------------------------------


@dataclass
class Distribution:
    """Map from classical bitstring to probability, optionally with counts."""

    probs: dict[str, float]
    counts: dict[str, int] | None = None
    shots: int | None = None

    @staticmethod
    def from_counts(counts: dict[str, int]) -> "Distribution":
        shots = sum(counts.values())
        probs = {k: v / shots for k, v in counts.items()}
        return Distribution(probs, dict(counts), shots)

    @staticmethod
    def from_probs(probs: dict[str, float], atol: float = 1e-9) -> "Distribution":
        total = sum(probs.values())
        if abs(total - 1.0) > atol:
            raise EngineError(f"probabilities sum to {total}, not 1")
        return Distribution(dict(probs))

    def probability(self, key: str) -> float:
        return self.probs.get(key, 0.0)

    def sorted_items(self) -> list[tuple[str, float]]:
        return sorted(self.probs.items())

    def marginalize(self, positions) -> "Distribution":
        """Marginal distribution over the listed bit positions, in order."""
        out: dict[str, float] = {}
        for key, p in self.probs.items():
            sub = "".join(key[i] for i in positions)
            out[sub] = out.get(sub, 0.0) + p
        counts = None
        if self.counts is not None:
            counts = {}
            for key, c in self.counts.items():
                sub = "".join(key[i] for i in positions)
                counts[sub] = counts.get(sub, 0) + c
        return Distribution(out, counts, self.shots)

    def postselect(self, position: int, value: int) -> "Distribution":
        """Condition on one bit and renormalize."""
        want = str(value)
        kept = {k: p for k, p in self.probs.items() if k[position] == want}
        total = sum(kept.values())
        if total <= 0.0:
            raise EngineError("post-selection removed all outcomes")
        probs = {k: p / total for k, p in kept.items()}
        counts = None
        if self.counts is not None:
            counts = {k: c for k, c in self.counts.items() if k[position] == want}
        return Distribution(probs, counts, self.shots)

    def to_csv(self) -> str:
        lines = ["bitstring,count,probability"]
        for key, p in self.sorted_items():
            count = self.counts.get(key, 0) if self.counts is not None else ""
            lines.append(f"{key},{count},{p!r}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        d = {"probabilities": dict(self.sorted_items())}
        if self.counts is not None:
            d["counts"] = {k: self.counts[k] for k, _ in sorted(self.counts.items())}
            d["shots"] = self.shots
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _register_key(register, visible: int) -> str:
    return "".join("0" if register[i] in (None, 0) else "1" for i in range(visible))


# ---------------------------------------------------------------------------
# Vectorized trajectory engine
# ---------------------------------------------------------------------------


def _batch_1q(amps, u, n, q, rows=None):
    i0, i1 = _pair_indices(n, q)
    if rows is None:
        a0, a1 = amps[:, i0], amps[:, i1]
        amps[:, i0] = u[0, 0] * a0 + u[0, 1] * a1
        amps[:, i1] = u[1, 0] * a0 + u[1, 1] * a1
    else:
        s0, s1 = np.ix_(rows, i0), np.ix_(rows, i1)
        a0, a1 = amps[s0], amps[s1]
        amps[s0] = u[0, 0] * a0 + u[0, 1] * a1
        amps[s1] = u[1, 0] * a0 + u[1, 1] * a1


def _batch_2q(amps, u, n, a, b, rows=None):
    groups = _quad_indices(n, a, b)
    if rows is None:
        vals = [amps[:, g] for g in groups]
        for r, g in enumerate(groups):
            amps[:, g] = sum(u[r, c] * vals[c] for c in range(4))
    else:
        sels = [np.ix_(rows, g) for g in groups]
        vals = [amps[s] for s in sels]
        for r, s in enumerate(sels):
            amps[s] = sum(u[r, c] * vals[c] for c in range(4))


def _batch_gate(amps, gate, qubits, n, rows=None):
    u = glib.unitary(gate)
    if len(qubits) == 1:
        _batch_1q(amps, u, n, qubits[0], rows)
    else:
        _batch_2q(amps, u, n, qubits[0], qubits[1], rows)


def _batch_measure(amps, register, instr: Measure, n, rng):
    i0, i1 = _pair_indices(n, instr.qubit)
    a1 = amps[:, i1]
    p1 = np.sum(a1.real ** 2 + a1.imag ** 2, axis=1)
    outcome = rng.random(p1.shape[0]) < p1
    rows1 = np.nonzero(outcome)[0]
    rows0 = np.nonzero(~outcome)[0]
    if rows1.size:
        amps[np.ix_(rows1, i0)] = 0.0
    if rows0.size:
        amps[np.ix_(rows0, i1)] = 0.0
    norms = np.sqrt(np.sum(amps.real ** 2 + amps.imag ** 2, axis=1))
    amps /= norms[:, None]
    recorded = outcome.astype(np.uint8)
    if instr.flip_probs is not None:
        p10, p01 = instr.flip_probs
        perr = np.where(outcome, p01, p10)
        flips = rng.random(p1.shape[0]) < perr
        recorded ^= flips.astype(np.uint8)
    register[:, instr.cbit] = recorded


def _batch_channel(amps, instr: ChannelOp, n, rng):
    ops = instr.channel.ops
    i0, i1 = _pair_indices(n, instr.qubit)
    a0, a1 = amps[:, i0], amps[:, i1]
    shots = amps.shape[0]
    weights = np.empty((len(ops), shots))
    for j, k in enumerate(ops):
        b0 = k[0, 0] * a0 + k[0, 1] * a1
        b1 = k[1, 0] * a0 + k[1, 1] * a1
        weights[j] = (
            np.sum(b0.real ** 2 + b0.imag ** 2, axis=1)
            + np.sum(b1.real ** 2 + b1.imag ** 2, axis=1)
        )
    cum = np.cumsum(weights, axis=0)
    r = rng.random(shots) * cum[-1]
    choice = np.sum(r[None, :] >= cum, axis=0)
    for j, k in enumerate(ops):
        rows = np.nonzero(choice == j)[0]
        if not rows.size:
            continue
        s0, s1 = np.ix_(rows, i0), np.ix_(rows, i1)
        c0, c1 = amps[s0], amps[s1]
        scale = np.sqrt(weights[j, rows])[:, None]
        amps[s0] = (k[0, 0] * c0 + k[0, 1] * c1) / scale
        amps[s1] = (k[1, 0] * c0 + k[1, 1] * c1) / scale


def run_trajectories(
    circuit: Circuit,
    noise=None,
    shots: int = 1024,
    seed: int | None = None,
) -> Distribution:
    """Sample the circuit shot-by-shot; identical seed gives identical output.

    With a noise model the circuit is decorated first and channels are
    applied by Kraus-operator sampling.  Shots are executed as one
    vectorized ensemble (in fixed-size blocks, so results do not depend on
    available memory).
    """
    if shots < 1:
        raise EngineError("shots must be >= 1")
    _check_valid(circuit)
    visible = circuit.num_cbits
    if noise is not None:
        from ..noise import decorate

        circ = decorate(circuit, noise)
    else:
        circ = lower(circuit)
    n = circ.num_qubits
    dim = 1 << n
    rng = np.random.default_rng(seed)
    block = max(1, _BLOCK_AMPS // dim)
    counts: dict[str, int] = {}
    remaining = shots
    while remaining > 0:
        size = min(block, remaining)
        remaining -= size
        amps = np.zeros((size, dim), dtype=complex)
        amps[:, 0] = 1.0
        register = np.zeros((size, max(circ.num_cbits, 1)), dtype=np.uint8)
        for instr in circ.instructions:
            if isinstance(instr, GateOp):
                _batch_gate(amps, instr.gate, instr.qubits, n)
            elif isinstance(instr, Conditional):
                mask = instr.cond.evaluate_batch(register)
                rows = np.nonzero(mask)[0]
                if rows.size:
                    for g in instr.gates:
                        _batch_gate(amps, g.gate, g.qubits, n, rows)
            elif isinstance(instr, Measure):
                _batch_measure(amps, register, instr, n, rng)
            elif isinstance(instr, ChannelOp):
                _batch_channel(amps, instr, n, rng)
            elif isinstance(instr, (Delay, Barrier)):
                continue
            else:
                raise EngineError(f"trajectory engine cannot execute {instr!r}")
        keys = register[:, :visible]
        if visible == 0:
            counts[""] = counts.get("", 0) + size
        else:
            uniq, cnt = np.unique(keys, axis=0, return_counts=True)
            for row, c in zip(uniq, cnt):
                key = "".join(str(int(b)) for b in row)
                counts[key] = counts.get(key, 0) + int(c)
    return Distribution.from_counts(counts)


# ---------------------------------------------------------------------------
# Exact branch enumeration
# ---------------------------------------------------------------------------


@dataclass
class OutcomeBranch:
    """One classical outcome path: visible register, probability, final state."""

    cbits: str
    probability: float
    state: PureState
    full_register: tuple = field(default=(), repr=False)


def enumerate_branches(
    circuit: Circuit,
    max_branches: int = 1 << 20,
    prune: float = PRUNE_THRESHOLD,
) -> list[OutcomeBranch]:
    """Depth-first expansion of every measurement (and Kraus) outcome.

    Branch probabilities are exact; branches whose conditional probability
    falls below ``prune`` are dropped.  Intended for noiseless circuits
    (decorated circuits with non-trivial channels branch on every Kraus
    operator and explode quickly).
    """
    _check_valid(circuit)
    visible = circuit.num_cbits
    circ = lower(circuit)
    if circ.count_measurements() > MAX_ENUM_MEASUREMENTS:
        raise BranchLimitError(
            f"circuit has more than {MAX_ENUM_MEASUREMENTS} measurements")
    instrs = circ.instructions
    n = circ.num_qubits
    branches: list[OutcomeBranch] = []

    def emit(state, register, prob):
        if len(branches) >= max_branches:
            raise BranchLimitError(f"branch bound {max_branches} exceeded")
        branches.append(OutcomeBranch(
            _register_key(register, visible), prob, state, tuple(register)))

    def walk(i, state, register, prob):
        while i < len(instrs):
            instr = instrs[i]
            i += 1
            if isinstance(instr, GateOp):
                state.apply_gate(instr.gate, instr.qubits)
            elif isinstance(instr, Conditional):
                if instr.cond.evaluate(register):
                    for g in instr.gates:
                        state.apply_gate(g.gate, g.qubits)
            elif isinstance(instr, (Delay, Barrier)):
                continue
            elif isinstance(instr, Measure):
                p1 = state.prob_one(instr.qubit)
                for outcome, p_out in ((0, 1.0 - p1), (1, p1)):
                    if p_out < prune:
                        continue
                    sub = state.copy()
                    sub.collapse(instr.qubit, outcome)
                    if instr.flip_probs is not None:
                        perr = instr.flip_probs[1] if outcome else instr.flip_probs[0]
                        records = ((outcome, 1.0 - perr), (1 - outcome, perr))
                    else:
                        records = ((outcome, 1.0),)
                    for recorded, p_rec in records:
                        if p_rec < prune:
                            continue
                        reg = list(register)
                        reg[instr.cbit] = recorded
                        walk(i, sub.copy(), reg, prob * p_out * p_rec)
                return
            elif isinstance(instr, ChannelOp):
                i0, i1 = _pair_indices(n, instr.qubit)
                for k in instr.channel.ops:
                    sub = state.copy()
                    a0, a1 = sub.amps[i0], sub.amps[i1]
                    sub.amps[i0] = k[0, 0] * a0 + k[0, 1] * a1
                    sub.amps[i1] = k[1, 0] * a0 + k[1, 1] * a1
                    w = float(np.sum(np.abs(sub.amps) ** 2))
                    if w < prune:
                        continue
                    sub.amps /= np.sqrt(w)
                    walk(i, sub, list(register), prob * w)
                return
            else:
                raise EngineError(f"branch enumerator cannot execute {instr!r}")
        emit(state, register, prob)

    walk(0, PureState(n), [None] * circ.num_cbits, 1.0)
    return branches


def branch_distribution(branches: list[OutcomeBranch]) -> Distribution:
    probs: dict[str, float] = {}
    for b in branches:
        probs[b.cbits] = probs.get(b.cbits, 0.0) + b.probability
    return Distribution.from_probs(probs)


# ---------------------------------------------------------------------------
# Exact density-matrix run
# ---------------------------------------------------------------------------


@dataclass
class DensityRun:
    """Classical/quantum ensemble after exact density-matrix execution.

    ``entries`` maps each realized classical register to its probability
    and the conditional density matrix.
    """

    num_qubits: int
    visible_cbits: int
    entries: list[tuple[tuple, float, DensityMatrix]]

    def distribution(self) -> Distribution:
        probs: dict[str, float] = {}
        for reg, w, _ in self.entries:
            key = _register_key(reg, self.visible_cbits)
            probs[key] = probs.get(key, 0.0) + w
        return Distribution.from_probs(probs)

    def state(self) -> DensityMatrix:
        """Unconditional output state (probability-weighted mixture)."""
        out = np.zeros((1 << self.num_qubits,) * 2, dtype=complex)
        for _, w, rho in self.entries:
            out += w * rho.rho
        return DensityMatrix(self.num_qubits, out)

    def expectation(self, pauli: str) -> float:
        return sum(w * rho.expectation(pauli) for _, w, rho in self.entries)


def run_density(circuit: Circuit, noise=None, prune: float = PRUNE_THRESHOLD) -> DensityRun:
    """Exact execution over density matrices, branching per classical record.

    Entries with identical classical registers are merged (mixed), so the
    ensemble size is bounded by the number of distinct register values,
    not by 2^measurements.
    """
    _check_valid(circuit)
    visible = circuit.num_cbits
    if noise is not None:
        from ..noise import decorate

        circ = decorate(circuit, noise)
    else:
        circ = lower(circuit)
    n = circ.num_qubits
    entries: list[list] = [[(None,) * circ.num_cbits, 1.0, DensityMatrix(n)]]

    for instr in circ.instructions:
        if isinstance(instr, GateOp):
            for e in entries:
                e[2].apply_gate(instr.gate, instr.qubits)
        elif isinstance(instr, Conditional):
            for e in entries:
                if instr.cond.evaluate(e[0]):
                    for g in instr.gates:
                        e[2].apply_gate(g.gate, g.qubits)
        elif isinstance(instr, ChannelOp):
            for e in entries:
                e[2].apply_kraus(instr.channel, instr.qubit)
        elif isinstance(instr, (Delay, Barrier)):
            continue
        elif isinstance(instr, Measure):
            merged: dict[tuple, list] = {}
            for reg, w, rho in entries:
                p1 = rho.prob_one(instr.qubit)
                for outcome, p_out in ((0, 1.0 - p1), (1, p1)):
                    if p_out < prune:
                        continue
                    sub = rho.copy()
                    sub.collapse(instr.qubit, outcome)
                    if instr.flip_probs is not None:
                        perr = instr.flip_probs[1] if outcome else instr.flip_probs[0]
                        records = ((outcome, 1.0 - perr), (1 - outcome, perr))
                    else:
                        records = ((outcome, 1.0),)
                    for recorded, p_rec in records:
                        if p_rec < prune:
                            continue
                        reg2 = list(reg)
                        reg2[instr.cbit] = recorded
                        key = tuple(reg2)
                        w2 = w * p_out * p_rec
                        slot = merged.get(key)
                        if slot is None:
                            merged[key] = [key, w2, DensityMatrix(n, sub.rho * w2)]
                        else:
                            slot[1] += w2
                            slot[2].rho += sub.rho * w2
                    del sub
            entries = []
            for key, w2, rho_acc in merged.values():
                rho_acc.rho /= w2
                entries.append([key, w2, rho_acc])
        else:
            raise EngineError(f"density engine cannot execute {instr!r}")

    return DensityRun(n, visible, [(tuple(r), w, rho) for r, w, rho in entries])


# ---------------------------------------------------------------------------
# Stabilizer execution
# ---------------------------------------------------------------------------


def stabilizer_run(circuit: Circuit, rng=None, seed: int | None = None):
    """Single-shot tableau execution; returns (visible cbit string, tableau)."""
    _check_valid(circuit)
    if rng is None:
        rng = np.random.default_rng(seed)
    visible = circuit.num_cbits
    circ = lower(circuit)
    tab = StabilizerTableau(circ.num_qubits)
    register: list = [None] * circ.num_cbits
    for instr in circ.instructions:
        if isinstance(instr, GateOp):
            tab.apply_gate(instr.gate, instr.qubits)
        elif isinstance(instr, Conditional):
            if instr.cond.evaluate(register):
                for g in instr.gates:
                    tab.apply_gate(g.gate, g.qubits)
        elif isinstance(instr, Measure):
            outcome = tab.measure(instr.qubit, rng)
            recorded = outcome
            if instr.flip_probs is not None:
                perr = instr.flip_probs[1] if outcome else instr.flip_probs[0]
                if perr > 0 and rng.random() < perr:
                    recorded = 1 - outcome
            register[instr.cbit] = recorded
        elif isinstance(instr, ChannelOp):
            probs = instr.channel.pauli_probs
            if probs is None:
                raise EngineError(
                    f"channel {instr.channel.name} is not a Pauli channel; "
                    "the stabilizer engine cannot sample it")
            r = rng.random()
            acc = 0.0
            for p, pauli in probs:
                acc += p
                if r < acc:
                    if pauli != "I":
                        tab.apply_gate(Gate(pauli), (instr.qubit,))
                    break
        elif isinstance(instr, (Delay, Barrier)):
            continue
        else:
            raise EngineError(f"stabilizer engine cannot execute {instr!r}")
    return _register_key(register, visible), tab


def sample_stabilizer(circuit: Circuit, shots: int, seed: int | None = None) -> Distribution:
    """Empirical distribution from repeated tableau runs."""
    rng = np.random.default_rng(seed)
    counts: dict[str, int] = {}
    for _ in range(shots):
        key, _ = stabilizer_run(circuit, rng=rng)
        counts[key] = counts.get(key, 0) + 1
    return Distribution.from_counts(counts)


# ---------------------------------------------------------------------------


def _check_valid(circuit: Circuit):
    errs = validate(circuit)
    if errs:
        raise EngineError("invalid circuit: " + "; ".join(str(e) for e in errs[:3]))
