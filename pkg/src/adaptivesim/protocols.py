"""Builders for constant-depth entanglement protocols.

Every builder returns a plain :class:`~adaptivesim.circuits.Circuit` whose
feed-forward corrections are ordinary conditional instructions, so any
engine can execute it.  Layout dataclasses carry the qubit/cbit
assignments; the packaged defaults fit the bundled 8-qubit ring device.

All builders accept ``corrections=False`` (and there is
:func:`disable_corrections`) to support negative-control tests: with
corrections off, at least one measurement branch must fail its ideal
output.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .circuits import (
    Circuit,
    CircuitError,
    CondExpr,
    Conditional,
    Gate,
    GateOp,
    bit,
)
from .engines import PureState, enumerate_branches, partial_trace, state_fidelity


def xor_bits(indices) -> CondExpr:
    indices = list(indices)
    if not indices:
        raise CircuitError("empty XOR clause")
    expr = bit(indices[0])
    for i in indices[1:]:
        expr = expr ^ bit(i)
    return expr


# ---------------------------------------------------------------------------
# Pauli frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliFrame:
    """Accumulated X/Z correction masks over a qubit register."""

    x_mask: tuple[int, ...]
    z_mask: tuple[int, ...]

    @staticmethod
    def identity(num_qubits: int) -> "PauliFrame":
        return PauliFrame((0,) * num_qubits, (0,) * num_qubits)

    def compose(self, other: "PauliFrame") -> "PauliFrame":
        if len(self.x_mask) != len(other.x_mask):
            raise CircuitError("Pauli frame size mismatch")
        return PauliFrame(
            tuple(a ^ b for a, b in zip(self.x_mask, other.x_mask)),
            tuple(a ^ b for a, b in zip(self.z_mask, other.z_mask)),
        )


def compose_frames(frames) -> PauliFrame:
    frames = list(frames)
    if not frames:
        raise CircuitError("no frames to compose")
    out = PauliFrame.identity(len(frames[0].x_mask))
    for f in frames:
        out = out.compose(f)
    return out


# ---------------------------------------------------------------------------
# GHZ preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GHZPlan:
    """Qubit/cbit assignment for pairwise-stabilizer GHZ preparation.

    ``ancillas[k]`` sits between ``data[k]`` and ``data[k+1]`` and its
    measurement outcome is written to ``cbits[k]``.
    """

    data: tuple[int, ...]
    ancillas: tuple[int, ...]
    cbits: tuple[int, ...]

    def __post_init__(self):
        n = len(self.data)
        if n < 2:
            raise CircuitError("GHZ needs at least two data qubits")
        if len(self.ancillas) != n - 1 or len(self.cbits) != n - 1:
            raise CircuitError("GHZ plan needs n-1 ancillas and n-1 classical bits")
        qs = self.data + self.ancillas
        if len(set(qs)) != len(qs):
            raise CircuitError("GHZ plan reuses a qubit")


def interleaved_ghz_plan(n: int, start: int = 0) -> GHZPlan:
    """Data on even offsets, ancillas interleaved on odd offsets."""
    data = tuple(start + 2 * k for k in range(n))
    anc = tuple(start + 2 * k + 1 for k in range(n - 1))
    return GHZPlan(data, anc, tuple(range(n - 1)))


def decode_ghz(outcomes) -> list[int]:
    """Domain-wall decoder: prefix-XOR of the pairwise parity outcomes.

    ``mask[k]`` = 1 flips data qubit k; a data qubit is flipped after an
    odd number of -1 parity outcomes to its left.
    """
    mask = [0]
    for o in outcomes:
        mask.append(mask[-1] ^ int(o))
    return mask


def build_ghz_adaptive(n: int | None = None, plan: GHZPlan | None = None,
                       corrections: bool = True) -> Circuit:
    """Constant-depth GHZ preparation via ancilla parity measurements.

    Data qubits start in |+>, each ancilla measures the ZZ parity of its
    two neighbors, and a conditional X layer (prefix-XOR of the outcomes)
    recovers the standard GHZ state on every branch.
    """
    if plan is None:
        if n is None:
            raise CircuitError("need n or an explicit plan")
        plan = interleaved_ghz_plan(n)
    n = len(plan.data)
    nq = max(plan.data + plan.ancillas) + 1
    c = Circuit(nq, max(plan.cbits) + 1)
    for d in plan.data:
        c.h(d)
    for k, a in enumerate(plan.ancillas):
        c.cnot(plan.data[k], a)
    for k, a in enumerate(plan.ancillas):
        c.cnot(plan.data[k + 1], a)
    for k, a in enumerate(plan.ancillas):
        c.measure(a, plan.cbits[k], "Z")
    if corrections:
        for j in range(1, n):
            c.cond(xor_bits(plan.cbits[:j]), [("X", plan.data[j])])
    return c


def build_ghz_unitary(n: int | None = None, plan: GHZPlan | None = None) -> Circuit:
    """Unitary GHZ ladder over the same interleaved layout.

    Entanglement walks down the chain through each ancilla (two CNOTs per
    segment) and the ancillas are uncomputed at the end, so the data
    qubits end in GHZ_n and the ancillas in |0>.  Depth grows linearly
    with n; this is the baseline the constant-depth builder is compared
    against.
    """
    if plan is None:
        if n is None:
            raise CircuitError("need n or an explicit plan")
        plan = interleaved_ghz_plan(n)
    n = len(plan.data)
    nq = max(plan.data + plan.ancillas) + 1
    c = Circuit(nq, 0)
    c.h(plan.data[0])
    for k in range(n - 1):
        c.cnot(plan.data[k], plan.ancillas[k])
        c.cnot(plan.ancillas[k], plan.data[k + 1])
    for k in range(n - 1):
        c.cnot(plan.data[k + 1], plan.ancillas[k])
    return c


# ---------------------------------------------------------------------------
# Teleported CNOT
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TeleCnotLayout:
    """Qubit assignment for the gate-teleported CNOT.

    The Bell pair lives on (anc_control, anc_target).  In adaptive Bell
    mode the pair is prepared in constant depth through ``inner`` (exactly
    one middle ancilla); in unitary mode it is prepared by H + CNOT and
    ``inner`` stays empty.
    """

    control: int
    anc_control: int
    anc_target: int
    target: int
    inner: tuple[int, ...] = ()

    @property
    def bell_cbits(self) -> tuple[int, ...]:
        return tuple(range(len(self.inner)))

    @property
    def z_cbit(self) -> int:
        return len(self.inner)

    @property
    def x_cbit(self) -> int:
        return len(self.inner) + 1

    @property
    def num_cbits(self) -> int:
        return len(self.inner) + 2


def tele_cnot_layout_unitary() -> TeleCnotLayout:
    """Control and target separated by the two Bell ancillas."""
    return TeleCnotLayout(control=1, anc_control=2, anc_target=3, target=4)


def tele_cnot_layout_adaptive() -> TeleCnotLayout:
    """Control and target separated by three ancillas; the Bell pair is
    itself prepared adaptively through the middle one."""
    return TeleCnotLayout(control=0, anc_control=1, anc_target=3, target=4, inner=(2,))


def build_tele_cnot(layout: TeleCnotLayout | None = None,
                    bell_mode: str = "unitary",
                    corrections: bool = True) -> Circuit:
    """CNOT between non-adjacent qubits via a shared Bell pair.

    After entangling control and target with the pair, the control-side
    ancilla is measured in Z (sourcing a conditional X on the target) and
    the target-side ancilla in X (sourcing a conditional Z on the
    control).  Noiselessly the composite equals CNOT exactly on every
    measurement branch.
    """
    if bell_mode not in ("unitary", "adaptive"):
        raise CircuitError(f"bell_mode must be unitary or adaptive, got {bell_mode!r}")
    if layout is None:
        layout = tele_cnot_layout_unitary() if bell_mode == "unitary" else tele_cnot_layout_adaptive()
    nq = max((layout.control, layout.anc_control, layout.anc_target, layout.target)
             + layout.inner) + 1
    c = Circuit(nq, layout.num_cbits)
    a, b = layout.anc_control, layout.anc_target
    if bell_mode == "unitary":
        c.h(a)
        c.cnot(a, b)
    else:
        if len(layout.inner) != 1:
            raise CircuitError("adaptive Bell preparation needs exactly one inner ancilla")
        mid = layout.inner[0]
        cb = layout.bell_cbits[0]
        c.h(a)
        c.h(b)
        c.cnot(a, mid)
        c.cnot(b, mid)
        c.measure(mid, cb, "Z")
        if corrections:
            c.cond(bit(cb), [("X", b)])
    c.cnot(layout.control, a)
    c.cnot(b, layout.target)
    c.measure(a, layout.z_cbit, "Z")
    c.measure(b, layout.x_cbit, "X")
    if corrections:
        c.cond(bit(layout.z_cbit), [("X", layout.target)])
        c.cond(bit(layout.x_cbit), [("Z", layout.control)])
    return c


# ---------------------------------------------------------------------------
# Unbounded fan-out
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrectionRule:
    """Feed-forward rule for the fan-out builder.

    ``x_from_z[k]``: apply X to target k when the Z-measured resource
    qubit reads 1.  ``z_from_x[j]``: include the j-th X-measured resource
    outcome in the parity that gates Z on the control.
    """

    x_from_z: tuple[bool, ...]
    z_from_x: tuple[bool, ...]

    def to_json_dict(self) -> dict:
        return {"x_from_z": list(self.x_from_z), "z_from_x": list(self.z_from_x)}

    @staticmethod
    def from_json_dict(d: dict) -> "CorrectionRule":
        return CorrectionRule(tuple(bool(v) for v in d["x_from_z"]),
                              tuple(bool(v) for v in d["z_from_x"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def golden_fanout_rule(n_targets: int) -> CorrectionRule:
    """The machine-derived rule: X every target on the Z outcome, Z the
    control on the parity of all X outcomes.  ``derive_fanout_rule``
    regenerates and uniqueness-checks it."""
    return CorrectionRule((True,) * n_targets, (True,) * n_targets)


@dataclass(frozen=True)
class FanoutLayout:
    """Qubit assignment for the constant-depth fan-out (controlled-X^N).

    ``resource`` holds the N+1 entanglement-resource qubits: resource[0]
    pairs with the control, resource[k+1] with targets[k].  In adaptive
    resource mode the resource GHZ state is prepared in constant depth
    through ``prep_ancillas``; with ``reuse_reset`` those ancillas are
    actively reset and reused as data qubits (they must then appear among
    control/targets).
    """

    control: int
    targets: tuple[int, ...]
    resource: tuple[int, ...]
    prep_ancillas: tuple[int, ...] = ()
    resource_mode: str = "adaptive"
    reuse_reset: bool = False

    def __post_init__(self):
        n = len(self.targets)
        if n < 1:
            raise CircuitError("fan-out needs at least one target")
        if len(self.resource) != n + 1:
            raise CircuitError("fan-out needs len(targets)+1 resource qubits")
        if self.resource_mode not in ("adaptive", "unitary"):
            raise CircuitError(f"bad resource_mode {self.resource_mode!r}")
        if self.resource_mode == "adaptive" and len(self.prep_ancillas) != n:
            raise CircuitError("adaptive resource prep needs len(targets) ancillas")
        data = (self.control,) + self.targets
        if len(set(data)) != len(data):
            raise CircuitError("fan-out data qubits overlap")
        if set(self.resource) & set(data):
            raise CircuitError("resource qubits overlap data qubits")
        overlap = set(self.prep_ancillas) & set(data)
        if self.reuse_reset and not overlap:
            raise CircuitError("reuse_reset set but no prep ancilla is reused")
        if not self.reuse_reset and overlap:
            raise CircuitError("prep ancillas overlap data qubits; set reuse_reset")

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def prep_cbits(self) -> tuple[int, ...]:
        return tuple(range(len(self.prep_ancillas)))

    @property
    def z_cbit(self) -> int:
        return len(self.prep_ancillas)

    @property
    def x_cbits(self) -> tuple[int, ...]:
        base = len(self.prep_ancillas) + 1
        return tuple(range(base, base + self.n_targets))

    @property
    def num_cbits(self) -> int:
        return len(self.prep_ancillas) + 1 + self.n_targets

    def all_qubits(self) -> tuple[int, ...]:
        return (self.control,) + self.targets + self.resource + self.prep_ancillas


def fanout_layout_cxx() -> FanoutLayout:
    """Packaged-ring controlled-X-X: three non-adjacent data qubits, the
    GHZ resource prepared through two ancillas that are actively reset and
    reused as targets."""
    return FanoutLayout(
        control=0, targets=(2, 4), resource=(1, 3, 5),
        prep_ancillas=(2, 4), resource_mode="adaptive", reuse_reset=True)


def fanout_layout_line(n_targets: int, resource_mode: str = "adaptive") -> FanoutLayout:
    """Topology-free layout with fresh ancillas for every role."""
    control = 0
    targets = tuple(range(1, n_targets + 1))
    resource = tuple(range(n_targets + 1, 2 * n_targets + 2))
    prep = tuple(range(2 * n_targets + 2, 3 * n_targets + 2)) if resource_mode == "adaptive" else ()
    return FanoutLayout(control, targets, resource, prep, resource_mode, reuse_reset=False)


def build_fanout(layout: FanoutLayout,
                 corrections: bool = True,
                 rule: CorrectionRule | None = None,
                 input_prep=()) -> Circuit:
    """Controlled-X^N through a GHZ resource, in constant depth.

    The resource GHZ is prepared (adaptively or unitarily), prep ancillas
    are actively reset when reused, ``input_prep`` gates run on the data
    qubits, then a single CNOT layer entangles data with the resource.
    resource[0] is measured in Z and the rest in X; corrections follow
    ``rule`` (default: the stored machine-derived rule).
    """
    n = layout.n_targets
    rule = rule or golden_fanout_rule(n)
    if len(rule.x_from_z) != n or len(rule.z_from_x) != n:
        raise CircuitError("correction rule size does not match target count")
    nq = max(layout.all_qubits()) + 1
    c = Circuit(nq, layout.num_cbits)
    if layout.resource_mode == "adaptive":
        ghz = build_ghz_adaptive(plan=GHZPlan(
            layout.resource, layout.prep_ancillas, layout.prep_cbits),
            corrections=corrections)
        c.extend(ghz)
    else:
        c.h(layout.resource[0])
        for k in range(n):
            c.cnot(layout.resource[k], layout.resource[k + 1])
    if layout.reuse_reset:
        for a in layout.prep_ancillas:
            c.reset(a)
    for op in input_prep:
        c.append(op)
    c.cnot(layout.control, layout.resource[0])
    for k in range(n):
        c.cnot(layout.resource[k + 1], layout.targets[k])
    c.measure(layout.resource[0], layout.z_cbit, "Z")
    for k in range(n):
        c.measure(layout.resource[k + 1], layout.x_cbits[k], "X")
    if corrections:
        for k in range(n):
            if rule.x_from_z[k]:
                c.cond(bit(layout.z_cbit), [("X", layout.targets[k])])
        parity = [layout.x_cbits[j] for j in range(n) if rule.z_from_x[j]]
        if parity:
            c.cond(xor_bits(parity), [("Z", layout.control)])
    return c


def ideal_fanout_state(n_targets: int, prep_kinds) -> PureState:
    """Reference output of controlled-X^N on (control, targets...) after
    applying ``prep_kinds`` (gate kinds indexed by role) to |0...0>."""
    state = PureState(n_targets + 1)
    for role, kind in enumerate(prep_kinds):
        if kind != "I":
            state.apply_gate(Gate(kind), (role,))
    for k in range(n_targets):
        state.apply_gate(Gate("CNOT"), (0, k + 1))
    return state


def derive_fanout_rule(n_targets: int, tol: float = 1e-9) -> CorrectionRule:
    """Brute-force the unique correction rule that fixes every branch.

    Candidates draw target X-corrections from the Z outcome and the
    control Z-correction from a parity of X outcomes; each candidate is
    validated branch-by-branch on a spanning input set against the ideal
    fan-out action.  Raises if no candidate (builder bug) or more than one
    survives.
    """
    if n_targets < 1:
        raise CircuitError("fan-out needs at least one target")
    layout = fanout_layout_line(n_targets, resource_mode="unitary")
    data_roles = (layout.control,) + layout.targets
    prep_sets = [
        ("I",) * (n_targets + 1),
        ("X",) + ("I",) * n_targets,
        ("H",) + ("I",) * n_targets,
        ("H",) * (n_targets + 1),
    ]
    survivors = []
    for xz in itertools.product((False, True), repeat=n_targets):
        for zx in itertools.product((False, True), repeat=n_targets):
            rule = CorrectionRule(xz, zx)
            if _fanout_rule_valid(layout, rule, data_roles, prep_sets, tol):
                survivors.append(rule)
    if not survivors:
        raise CircuitError("no fan-out correction rule validates; builder bug")
    if len(survivors) > 1:
        raise CircuitError(f"{len(survivors)} fan-out rules validate; inputs not spanning")
    return survivors[0]


def _fanout_rule_valid(layout, rule, data_roles, prep_sets, tol) -> bool:
    for kinds in prep_sets:
        prep = [GateOp(Gate(k), (q,)) for k, q in zip(kinds, data_roles) if k != "I"]
        circuit = build_fanout(layout, corrections=True, rule=rule, input_prep=prep)
        ideal = ideal_fanout_state(layout.n_targets, kinds)
        for branch in enumerate_branches(circuit):
            rho = partial_trace(branch.state, data_roles)
            if state_fidelity(rho, ideal) < 1.0 - tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Repeater teleportation and entanglement swapping
# ---------------------------------------------------------------------------


def _bell_measurement(c: Circuit, u: int, v: int, phase_cbit: int, bit_cbit: int):
    """CNOT(u->v), H(u), then Z measurements of both qubits."""
    c.cnot(u, v)
    c.h(u)
    c.measure(u, phase_cbit, "Z")
    c.measure(v, bit_cbit, "Z")


def build_teleport(input_qubit: int, chain, output_qubit: int | None = None,
                   corrections: bool = True, input_prep=()) -> Circuit:
    """Repeater-style state teleportation with simultaneous swapping.

    ``chain`` is the even-length list of Bell-pair members; pairs are
    (chain[0], chain[1]), (chain[2], chain[3]), ... and the state lands on
    chain[-1] (which ``output_qubit``, if given, must name).  All Bell
    measurements commute, so every pair is measured in the same layer and
    the composed Pauli frame is applied to the output: X on the parity of
    the bit-type outcomes, Z on the parity of the phase-type outcomes.
    Noiselessly this is an exact identity map from input to output.
    """
    chain = tuple(chain)
    if len(chain) < 2 or len(chain) % 2 != 0:
        raise CircuitError("teleport chain must have even length >= 2")
    if output_qubit is not None and output_qubit != chain[-1]:
        raise CircuitError("output qubit must be the last chain member")
    qubits = (input_qubit,) + chain
    if len(set(qubits)) != len(qubits):
        raise CircuitError("teleport qubits overlap")
    n_pairs = len(chain) // 2
    c = Circuit(max(qubits) + 1, 2 * n_pairs)
    for op in input_prep:
        c.append(op)
    for p in range(n_pairs):
        c.h(chain[2 * p])
        c.cnot(chain[2 * p], chain[2 * p + 1])
    measured = (input_qubit,) + chain[:-1]
    phase_cbits, bit_cbits = [], []
    for m in range(n_pairs):
        u, v = measured[2 * m], measured[2 * m + 1]
        _bell_measurement(c, u, v, 2 * m, 2 * m + 1)
        phase_cbits.append(2 * m)
        bit_cbits.append(2 * m + 1)
    if corrections:
        out = chain[-1]
        c.cond(xor_bits(bit_cbits), [("X", out)])
        c.cond(xor_bits(phase_cbits), [("Z", out)])
    return c


BELL_LABELS = {(0, 0): "phi+", (1, 0): "phi-", (0, 1): "psi+", (1, 1): "psi-"}


def bell_state(label: str) -> PureState:
    """Two-qubit Bell state; qubit 0 is the left/first member."""
    amps = np.zeros(4, dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    if label == "phi+":
        amps[0b00], amps[0b11] = s, s
    elif label == "phi-":
        amps[0b00], amps[0b11] = s, -s
    elif label == "psi+":
        amps[0b01], amps[0b10] = s, s
    elif label == "psi-":
        # sign convention fixed up to the (unobservable) global phase
        amps[0b01], amps[0b10] = s, -s
    else:
        raise CircuitError(f"unknown Bell label {label!r}")
    return PureState(2, amps)


def build_entanglement_swap(chain, input_bits=(0, 0), corrections: bool = True) -> Circuit:
    """Deterministic Bell-pair distribution between the chain's end qubits.

    ``chain`` (even length >= 4) is tiled with Bell pairs; Bell
    measurements on the inner overlapping pairs leave the two ends
    entangled after the feed-forward corrections.  ``input_bits`` apply X
    preparations to the first pair before it is entangled, selecting which
    Bell state appears on the ends: (0,0) phi+, (1,0) phi-, (0,1) psi+,
    (1,1) psi-.
    """
    chain = tuple(chain)
    if len(chain) < 4 or len(chain) % 2 != 0:
        raise CircuitError("swap chain must have even length >= 4")
    if len(set(chain)) != len(chain):
        raise CircuitError("swap chain reuses a qubit")
    b1, b2 = input_bits
    n_pairs = len(chain) // 2
    n_bms = n_pairs - 1
    c = Circuit(max(chain) + 1, 2 * n_bms)
    if b1:
        c.x(chain[0])
    if b2:
        c.x(chain[1])
    for p in range(n_pairs):
        c.h(chain[2 * p])
        c.cnot(chain[2 * p], chain[2 * p + 1])
    phase_cbits, bit_cbits = [], []
    for m in range(n_bms):
        u, v = chain[2 * m + 1], chain[2 * m + 2]
        _bell_measurement(c, u, v, 2 * m, 2 * m + 1)
        phase_cbits.append(2 * m)
        bit_cbits.append(2 * m + 1)
    if corrections:
        out = chain[-1]
        c.cond(xor_bits(bit_cbits), [("X", out)])
        c.cond(xor_bits(phase_cbits), [("Z", out)])
    return c


def swap_target_label(input_bits) -> str:
    return BELL_LABELS[(int(input_bits[0]), int(input_bits[1]))]


# ---------------------------------------------------------------------------
# Default ring placements and experiment circuits
# ---------------------------------------------------------------------------


def ring_ghz_plan(n: int) -> GHZPlan:
    """GHZ placement on the packaged 8-ring (n <= 4): data on even qubits."""
    if n > 4:
        raise CircuitError("the 8-qubit ring fits interleaved GHZ only up to n=4")
    return interleaved_ghz_plan(n)


def ring_teleport_chain() -> tuple[int, tuple[int, ...]]:
    """Teleport from qubit 0 to the opposite side of the ring."""
    return 0, (1, 2, 3, 4)


def ring_swap_chain() -> tuple[int, ...]:
    """Entanglement swapping between ring qubits 0 and 5."""
    return (0, 1, 2, 3, 4, 5)


def disable_corrections(circuit: Circuit, indices=None) -> Circuit:
    """Strip conditional blocks (all, or the ordinals in ``indices``).

    Negative-control helper: removing any single feed-forward correction
    must break at least one measurement branch of a protocol circuit.
    """
    out = Circuit(circuit.num_qubits, circuit.num_cbits, [], circuit.topology)
    seen = 0
    for instr in circuit.instructions:
        if isinstance(instr, Conditional):
            drop = indices is None or seen in indices
            seen += 1
            if drop:
                continue
        out.append(instr)
    return out


def count_conditionals(circuit: Circuit) -> int:
    return sum(1 for i in circuit.instructions if isinstance(i, Conditional))


# -- truth-table and process-tomography adapters ----------------------------


def prep_ops_for_bits(bits, qubits) -> list[GateOp]:
    return [GateOp(Gate("X"), (q,)) for b, q in zip(bits, qubits) if int(b)]


def tele_cnot_truth_builder(layout: TeleCnotLayout | None = None,
                            bell_mode: str = "unitary"):
    """Builder for truth-table tomography of the teleported CNOT.

    Returns ``build(bits) -> (circuit, output_cbits)`` with bits/output
    ordered (control, target).
    """
    if layout is None:
        layout = tele_cnot_layout_unitary() if bell_mode == "unitary" else tele_cnot_layout_adaptive()

    def build(bits):
        base = build_tele_cnot(layout, bell_mode)
        c = Circuit(base.num_qubits, base.num_cbits + 2)
        for op in prep_ops_for_bits(bits, (layout.control, layout.target)):
            c.append(op)
        c.extend(base)
        out0, out1 = base.num_cbits, base.num_cbits + 1
        c.measure(layout.control, out0, "Z")
        c.measure(layout.target, out1, "Z")
        return c, (out0, out1)

    return build


def fanout_truth_builder(layout: FanoutLayout | None = None):
    """Builder for truth-table tomography of the fan-out gate.

    Input preparation happens after any ancilla resets, so reuse layouts
    stay valid.  Bits/output are ordered (control, targets...).
    """
    layout = layout or fanout_layout_cxx()
    data = (layout.control,) + layout.targets

    def build(bits):
        prep = prep_ops_for_bits(bits, data)
        base = build_fanout(layout, input_prep=prep)
        c = Circuit(base.num_qubits, base.num_cbits + len(data))
        c.extend(base)
        outs = tuple(range(base.num_cbits, base.num_cbits + len(data)))
        for q, cb in zip(data, outs):
            c.measure(q, cb, "Z")
        return c, outs

    return build


_STATE_PREPS = {
    "zero": (),
    "one": ("X",),
    "plus": ("H",),
    "minus": ("X", "H"),
    "plusi": ("H", "S"),
    "minusi": ("H", "SDG"),
}


def state_prep_ops(label: str, qubit: int) -> list[GateOp]:
    """Gate list preparing a named single-qubit state from |0>."""
    try:
        kinds = _STATE_PREPS[label]
    except KeyError:
        raise CircuitError(f"unknown state label {label!r}") from None
    return [GateOp(Gate(k), (qubit,)) for k in kinds]


_BASIS_ROTATIONS = {"Z": (), "X": ("H",), "Y": ("SDG", "H")}


def teleport_measurement_circuit(input_label: str, meas_basis: str = "Z",
                                 input_qubit: int | None = None,
                                 chain=None) -> tuple[Circuit, int]:
    """Teleport a named state and measure the output in a Pauli basis.

    Returns (circuit, output cbit).  The default placement teleports
    across the packaged ring.
    """
    if input_qubit is None or chain is None:
        input_qubit, chain = ring_teleport_chain()
    prep = state_prep_ops(input_label, input_qubit)
    base = build_teleport(input_qubit, chain, input_prep=prep)
    c = Circuit(base.num_qubits, base.num_cbits + 1)
    c.extend(base)
    out = chain[-1]
    for kind in _BASIS_ROTATIONS[meas_basis.upper()]:
        c.gate(kind, out)
    out_cbit = base.num_cbits
    c.measure(out, out_cbit, "Z")
    return c, out_cbit
