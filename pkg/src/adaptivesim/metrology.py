"""Estimators for benchmarking adaptive-circuit protocols.

Covers GHZ fidelity from parity oscillations, truth-table tomography and
its fidelity, total variational distance, single-qubit process tomography
assembled into a Pauli transfer matrix, exponential (cycle-benchmarking)
decay fits with an interleaved-measurement experiment, and the
process/average infidelity conversion.

Experiments accept either sampled execution (``shots`` + ``seed``) or
``exact=True``, which evaluates probabilities and expectations on the
density-matrix engine (the infinite-shot limit; deterministic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .circuits import Circuit, CircuitError, Gate
from .engines import Distribution, run_density, run_trajectories
from .protocols import teleport_measurement_circuit

DEFAULT_SHOTS = 4096
FIT_RELIABILITY_THRESHOLD = 0.1


class MetrologyError(ValueError):
    pass


def _distribution(circuit, shots, noise, seed, exact) -> Distribution:
    if exact:
        return run_density(circuit, noise=noise).distribution()
    return run_trajectories(circuit, noise=noise, shots=shots, seed=seed)


# ---------------------------------------------------------------------------
# Parity oscillations and GHZ fidelity
# ---------------------------------------------------------------------------


@dataclass
class ParityCurve:
    phases: np.ndarray
    estimates: np.ndarray
    shots_per_point: int | None  # None for exact evaluation

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        self.estimates = np.asarray(self.estimates, dtype=float)
        if self.phases.shape != self.estimates.shape:
            raise MetrologyError("phase and estimate arrays differ in length")
        if np.any(np.abs(self.estimates) > 1.0 + 1e-9):
            raise MetrologyError("parity estimates must lie in [-1, 1]")

    def to_csv(self) -> str:
        lines = ["phase_rad,parity"]
        for phi, y in zip(self.phases, self.estimates):
            lines.append(f"{phi!r},{y!r}")
        return "\n".join(lines) + "\n"


@dataclass
class ParityFit:
    """Least-squares fit of parity estimates to C*cos(n*phi + phase)."""

    amplitude: float
    phase: float
    frequency: int
    residual: float

    def signed_coherence(self) -> float:
        """Coherence signed relative to the +GHZ reference phase.

        With the analysis rotation used here an ideal GHZ_n with positive
        coherence oscillates as cos(n*phi + n*pi/2), so the fitted phase
        is compared against n*pi/2.
        """
        return self.amplitude * math.cos(self.phase - self.frequency * math.pi / 2.0)


@dataclass
class GhzFidelityResult:
    fidelity: float
    genuine_entanglement: bool
    p_all_zeros: float
    p_all_ones: float
    coherence: float


def ghz_fidelity(p_all0: float, p_all1: float, coherence: float) -> GhzFidelityResult:
    """Fidelity estimate (populations + coherence) / 2.

    The genuine-entanglement flag is set when the estimate exceeds 1/2.
    """
    for name, v in (("p_all0", p_all0), ("p_all1", p_all1)):
        if not (0.0 <= v <= 1.0):
            raise MetrologyError(f"{name}={v} outside [0, 1]")
    if p_all0 + p_all1 > 1.0 + 1e-9:
        raise MetrologyError("populations sum above 1")
    if abs(coherence) > 1.0 + 1e-9:
        raise MetrologyError(f"coherence {coherence} outside [-1, 1]")
    f = (p_all0 + p_all1 + coherence) / 2
    return GhzFidelityResult(f, f > 0.5, p_all0, p_all1, coherence)


def parity_phases(n: int, points: int | None = None) -> np.ndarray:
    """Default analysis-phase grid: evenly spaced on [0, 2pi)."""
    if points is None:
        points = max(16, 4 * n)
    if points < 8:
        raise MetrologyError("need at least 8 phase points over [0, 2pi)")
    return np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)


def _append_parity_analysis(prep: Circuit, data_qubits, phi: float) -> tuple[Circuit, tuple[int, ...]]:
    """Equatorial pi/2 analysis rotation exp(-i(pi/4)(cos phi X + sin phi Y))
    on each data qubit, then Z measurement."""
    c = Circuit(prep.num_qubits, prep.num_cbits + len(data_qubits), topology=prep.topology)
    c.extend(prep)
    for q in data_qubits:
        c.rz(-phi, q)
        c.rx(np.pi / 2.0, q)
        c.rz(phi, q)
    out = tuple(range(prep.num_cbits, prep.num_cbits + len(data_qubits)))
    for q, cb in zip(data_qubits, out):
        c.measure(q, cb, "Z")
    return c, out


def _parity_of(dist: Distribution, positions) -> float:
    total = 0.0
    for key, p in dist.probs.items():
        ones = sum(int(key[i]) for i in positions)
        total += p * (-1) ** ones
    return total


def parity_oscillation(prep: Circuit, data_qubits, phases=None,
                       shots: int = DEFAULT_SHOTS, noise=None,
                       seed: int | None = None, exact: bool = False,
                       ) -> tuple[ParityCurve, ParityFit]:
    """Measure parity vs analysis phase and fit the oscillation amplitude.

    Returns the raw curve and the fit of C*cos(n*phi + phi0); |C| is the
    GHZ coherence entering the fidelity estimate.
    """
    data_qubits = tuple(data_qubits)
    n = len(data_qubits)
    if phases is None:
        phases = parity_phases(n)
    phases = np.asarray(phases, dtype=float)
    if phases.size < 8:
        raise MetrologyError("need at least 8 phase points over [0, 2pi)")
    ys = []
    for i, phi in enumerate(phases):
        circuit, out = _append_parity_analysis(prep, data_qubits, float(phi))
        dist = _distribution(circuit, shots, noise,
                             None if seed is None else seed + i, exact)
        ys.append(_parity_of(dist, out))
    curve = ParityCurve(phases, np.array(ys), None if exact else shots)
    fit = fit_parity_curve(curve, n)
    return curve, fit


def fit_parity_curve(curve: ParityCurve, frequency: int) -> ParityFit:
    """Linear least squares in the cos/sin quadratures at the known frequency."""
    design = np.column_stack([
        np.cos(frequency * curve.phases),
        np.sin(frequency * curve.phases),
    ])
    coef, *_ = np.linalg.lstsq(design, curve.estimates, rcond=None)
    a, b = coef
    amplitude = float(np.hypot(a, b))
    phase = float(np.arctan2(-b, a))
    residual = float(np.sqrt(np.mean((design @ coef - curve.estimates) ** 2)))
    return ParityFit(amplitude, phase, frequency, residual)


def ghz_populations(prep: Circuit, data_qubits, shots: int = DEFAULT_SHOTS,
                    noise=None, seed: int | None = None, exact: bool = False,
                    ) -> tuple[float, float]:
    """Computational-basis populations of all-zeros and all-ones."""
    data_qubits = tuple(data_qubits)
    c = Circuit(prep.num_qubits, prep.num_cbits + len(data_qubits), topology=prep.topology)
    c.extend(prep)
    out = tuple(range(prep.num_cbits, prep.num_cbits + len(data_qubits)))
    for q, cb in zip(data_qubits, out):
        c.measure(q, cb, "Z")
    dist = _distribution(c, shots, noise, seed, exact).marginalize(out)
    n = len(data_qubits)
    return dist.probability("0" * n), dist.probability("1" * n)


def ghz_fidelity_experiment(prep: Circuit, data_qubits, phases=None,
                            shots: int = DEFAULT_SHOTS, noise=None,
                            seed: int | None = None, exact: bool = False):
    """Full pipeline: populations + parity oscillation -> fidelity estimate.

    Returns (GhzFidelityResult, ParityCurve, ParityFit).
    """
    p0, p1 = ghz_populations(prep, data_qubits, shots, noise, seed, exact)
    curve, fit = parity_oscillation(prep, data_qubits, phases, shots, noise,
                                    None if seed is None else seed + 1, exact)
    return ghz_fidelity(p0, p1, fit.amplitude), curve, fit


def bell_fidelity_from_parity(p_00: float, p_11: float, signed_coherence: float,
                              sign: int = +1) -> float:
    """Bell-state fidelity with the coherence signed by the fitted phase.

    ``sign`` is +1 for the phi+ target and -1 for phi-; by symmetry a
    coherence fitted with a pi phase offset scores the same against the
    opposite-sign target.
    """
    return ghz_fidelity(p_00, p_11, sign * signed_coherence).fidelity


# ---------------------------------------------------------------------------
# Truth tables
# ---------------------------------------------------------------------------


@dataclass
class TruthTable:
    """Column j = output distribution for computational basis input j.

    Index bit k corresponds to data role k (the builder's bit order).
    """

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        d = self.matrix.shape[0]
        if self.matrix.shape != (d, d):
            raise MetrologyError("truth table must be square")
        sums = self.matrix.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise MetrologyError("truth-table columns must each sum to 1")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_json_dict(self) -> dict:
        return {"dim": self.dim, "columns_are_inputs": True,
                "matrix": [[float(v) for v in row] for row in self.matrix]}


def truth_table(gate_circuit_builder, n: int, shots: int = DEFAULT_SHOTS,
                noise=None, seed: int | None = None, exact: bool = False) -> TruthTable:
    """Estimate the stochastic input->output matrix of an n-qubit gate.

    ``gate_circuit_builder(bits)`` must return (circuit, output_cbits)
    with the basis preparation for ``bits`` already placed wherever the
    protocol requires it.
    """
    d = 1 << n
    s = np.zeros((d, d))
    for j in range(d):
        bits = tuple((j >> k) & 1 for k in range(n))
        circuit, out_cbits = gate_circuit_builder(bits)
        dist = _distribution(circuit, shots, noise,
                             None if seed is None else seed + j, exact)
        marg = dist.marginalize(out_cbits)
        for key, p in marg.probs.items():
            i = sum(int(key[k]) << k for k in range(n))
            s[i, j] += p
    return TruthTable(s)


def truth_table_fidelity(s_exp, s_ideal) -> float:
    """(1/d) Tr(S_exp^T S_ideal)."""
    a = s_exp.matrix if isinstance(s_exp, TruthTable) else np.asarray(s_exp, dtype=float)
    b = s_ideal.matrix if isinstance(s_ideal, TruthTable) else np.asarray(s_ideal, dtype=float)
    if a.shape != b.shape:
        raise MetrologyError(f"truth-table shapes differ: {a.shape} vs {b.shape}")
    d = a.shape[0]
    return float(np.trace(a.T @ b)) / d


def identity_truth_table(n: int) -> TruthTable:
    return TruthTable(np.eye(1 << n))


def fanout_ideal_truth_table(n_targets: int) -> TruthTable:
    """Permutation of controlled-X^N over (control, targets...) bit order."""
    n = n_targets + 1
    d = 1 << n
    s = np.zeros((d, d))
    for j in range(d):
        if j & 1:
            out = j ^ (d - 2)  # flip every target bit
        else:
            out = j
        s[out, j] = 1.0
    return TruthTable(s)


def cnot_ideal_truth_table() -> TruthTable:
    return fanout_ideal_truth_table(1)


# ---------------------------------------------------------------------------
# Distribution distance
# ---------------------------------------------------------------------------


def tvd(p, q, atol: float = 1e-6) -> float:
    """Total variational distance between two normalized distributions."""
    pd = p.probs if isinstance(p, Distribution) else dict(p)
    qd = q.probs if isinstance(q, Distribution) else dict(q)
    for name, d in (("p", pd), ("q", qd)):
        total = sum(d.values())
        if abs(total - 1.0) > atol:
            raise MetrologyError(f"distribution {name} sums to {total}, not 1")
    keys = set(pd) | set(qd)
    return 0.5 * sum(abs(pd.get(k, 0.0) - qd.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Single-qubit process tomography -> PTM
# ---------------------------------------------------------------------------


@dataclass
class PTM:
    """4x4 Pauli transfer matrix in basis order (I, X, Y, Z)."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (4, 4):
            raise MetrologyError("PTM must be 4x4")

    def to_json_dict(self) -> dict:
        return {"basis": ["I", "X", "Y", "Z"],
                "matrix": [[float(v) for v in row] for row in self.matrix]}


QPT_PREPS = ("zero", "one", "plus", "plusi")


def qpt_single_qubit(process_runner, shots: int = DEFAULT_SHOTS) -> PTM:
    """Linear-inversion process tomography from four input states.

    ``process_runner(prep_label, pauli)`` must return the output
    expectation of ``pauli`` in {"X","Y","Z"} after sending the named
    input state ("zero", "one", "plus", "plusi") through the process.
    The first PTM row is forced to (1, 0, 0, 0).
    """
    bloch = {}
    for prep in QPT_PREPS:
        bloch[prep] = np.array([process_runner(prep, p) for p in ("X", "Y", "Z")])
    t = (bloch["zero"] + bloch["one"]) / 2.0
    col_z = (bloch["zero"] - bloch["one"]) / 2.0
    col_x = bloch["plus"] - t
    col_y = bloch["plusi"] - t
    r = np.zeros((4, 4))
    r[0, 0] = 1.0
    r[1:, 0] = t
    r[1:, 1] = col_x
    r[1:, 2] = col_y
    r[1:, 3] = col_z
    return PTM(r)


def process_fidelity_from_ptm(r_exp, r_ideal) -> float:
    """Tr(R_ideal^T R_exp) / 4; 1 for a perfect match, 1/2 for a fully
    dephasing channel against the identity."""
    a = r_exp.matrix if isinstance(r_exp, PTM) else np.asarray(r_exp, dtype=float)
    b = r_ideal.matrix if isinstance(r_ideal, PTM) else np.asarray(r_ideal, dtype=float)
    if a.shape != (4, 4) or b.shape != (4, 4):
        raise MetrologyError("PTMs must be 4x4")
    return float(np.trace(b.T @ a)) / 4.0


def teleport_process_runner(noise=None, shots: int = DEFAULT_SHOTS,
                            seed: int | None = None, exact: bool = False,
                            input_qubit: int | None = None, chain=None):
    """Process runner for QPT of the repeater teleportation channel."""
    counter = {"i": 0}

    def run(prep_label: str, pauli: str) -> float:
        circuit, out_cbit = teleport_measurement_circuit(
            prep_label, pauli, input_qubit=input_qubit, chain=chain)
        counter["i"] += 1
        dist = _distribution(circuit, shots, noise,
                             None if seed is None else seed + counter["i"], exact)
        marg = dist.marginalize((out_cbit,))
        return marg.probability("0") - marg.probability("1")

    return run


# ---------------------------------------------------------------------------
# Exponential decays and cycle benchmarking with interleaved measurement
# ---------------------------------------------------------------------------


@dataclass
class DecayFit:
    """Fit of y = A * p^m; flagged unreliable when |A| is too small for
    the decay rate to mean anything."""

    amplitude: float
    rate: float
    residual: float
    reliable: bool


def fit_exponential_decay(lengths, ys,
                          reliability_threshold: float = FIT_RELIABILITY_THRESHOLD,
                          ) -> DecayFit:
    """Nonlinear least squares for y = A * p^m, initialized log-linearly."""
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(set(m.tolist())) < 3:
        raise MetrologyError("need at least 3 distinct sequence lengths")
    if np.any(np.abs(y) > 1.0 + 1e-9):
        raise MetrologyError("decay points must lie in [-1, 1]")
    pos = y > 0
    if not np.any(pos):
        return DecayFit(0.0, 0.0, float(np.sqrt(np.mean(y ** 2))), False)
    if pos.sum() >= 2:
        slope, intercept = np.polyfit(m[pos], np.log(y[pos]), 1)
        p0 = float(np.clip(np.exp(slope), 1e-6, 1.0))
        a0 = float(np.clip(np.exp(intercept), -1.5, 1.5))
    else:
        p0, a0 = 0.9, float(y[pos][0])

    def model(mm, a, p):
        return a * np.power(p, mm)

    try:
        params, _ = curve_fit(model, m, y, p0=[a0, p0],
                              bounds=([-1.5, 0.0], [1.5, 1.0]), maxfev=10000)
        a_fit, p_fit = float(params[0]), float(params[1])
    except RuntimeError:
        a_fit, p_fit = a0, p0
    p_fit = float(np.clip(p_fit, 0.0, 1.0))
    residual = float(np.sqrt(np.mean((model(m, a_fit, p_fit) - y) ** 2)))
    return DecayFit(a_fit, p_fit, residual, abs(a_fit) >= reliability_threshold)


@dataclass
class CBResult:
    lengths: tuple[int, ...]
    curves: dict[str, np.ndarray]  # mean decay value per length, per Pauli
    fits: dict[str, DecayFit]

    def to_json_dict(self) -> dict:
        return {
            "lengths": list(self.lengths),
            "curves": {p: [float(v) for v in ys] for p, ys in sorted(self.curves.items())},
            "fits": {
                p: {"amplitude": f.amplitude, "rate": f.rate,
                    "residual": f.residual, "reliable": f.reliable}
                for p, f in sorted(self.fits.items())
            },
        }


_CB_PREP = {"X": ("H",), "Y": ("H", "S"), "Z": ()}
_CB_UNPREP = {"X": ("H",), "Y": ("SDG", "H"), "Z": ()}
_TWIRL_GATES = ("I", "X", "Y", "Z")


def cb_mcm_experiment(spectators, measured_qubit: int, lengths=(4, 16, 64),
                      randomizations: int = 20, shots: int | None = None,
                      noise=None, dd_active: bool | None = None,
                      seed: int | None = None, paulis=("X", "Y", "Z"),
                      reliability_threshold: float = FIT_RELIABILITY_THRESHOLD,
                      ) -> CBResult:
    """Cycle benchmarking of spectator qubits against interleaved MCMs.

    Each cycle is a random Pauli twirl on the spectators followed by a
    measurement of ``measured_qubit``; only the spectators are twirled.
    After m cycles the net twirl frame is undone, the initial basis
    rotation inverted, and the spectator Pauli expectation estimated
    (exactly on the density engine when ``shots`` is None).  Per-Pauli
    decays are fitted to A * p^m.
    """
    spectators = tuple(spectators)
    lengths = tuple(int(m) for m in lengths)
    if len(set(lengths)) < 3:
        raise MetrologyError("need at least 3 distinct sequence lengths")
    if randomizations < 10:
        raise MetrologyError("need at least 10 randomizations per length")
    if measured_qubit in spectators:
        raise MetrologyError("the measured qubit cannot be its own spectator")
    if noise is not None and dd_active is not None:
        noise = noise.with_dd(dd_active)
    nq = max(spectators + (measured_qubit,)) + 1
    rng = np.random.default_rng(seed)
    curves: dict[str, np.ndarray] = {}
    fits: dict[str, DecayFit] = {}
    for pauli in paulis:
        chars = pauli.upper()
        if len(chars) == 1:
            chars = chars * len(spectators)
        if len(chars) != len(spectators):
            raise MetrologyError(f"Pauli {pauli!r} does not match the spectator count")
        means = []
        for m in lengths:
            vals = []
            for _ in range(randomizations):
                circuit = _cb_circuit(spectators, measured_qubit, nq, chars, m, rng)
                if shots is None:
                    run = run_density(circuit, noise=noise)
                    obs = "".join(
                        "Z" if q in spectators else "I" for q in range(nq))
                    vals.append(run.expectation(obs))
                else:
                    out = tuple(range(1, 1 + len(spectators)))
                    dist = run_trajectories(
                        circuit, noise=noise, shots=shots,
                        seed=int(rng.integers(0, 2 ** 63 - 1)))
                    vals.append(_parity_of(dist.marginalize(out), range(len(out))))
            means.append(float(np.mean(vals)))
        curves[pauli] = np.array(means)
        fits[pauli] = fit_exponential_decay(lengths, means, reliability_threshold)
    return CBResult(lengths, curves, fits)


def _cb_circuit(spectators, measured_qubit, nq, chars, m, rng) -> Circuit:
    """One randomized CB sequence; cbit 0 absorbs the interleaved MCM
    outcomes, cbits 1.. hold the final spectator readout."""
    c = Circuit(nq, 1 + len(spectators))
    for q, ch in zip(spectators, chars):
        for kind in _CB_PREP[ch]:
            c.gate(kind, q)
    net_x = {q: 0 for q in spectators}
    net_z = {q: 0 for q in spectators}
    for _ in range(m):
        for q in spectators:
            t = _TWIRL_GATES[int(rng.integers(0, 4))]
            if t != "I":
                c.gate(t, q)
            if t in ("X", "Y"):
                net_x[q] ^= 1
            if t in ("Z", "Y"):
                net_z[q] ^= 1
        c.measure(measured_qubit, 0, "Z")
    for q in spectators:
        undo = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}[(net_x[q], net_z[q])]
        if undo != "I":
            c.gate(undo, q)
    for q, ch in zip(spectators, chars):
        for kind in _CB_UNPREP[ch]:
            c.gate(kind, q)
    for i, q in enumerate(spectators):
        c.measure(q, 1 + i, "Z")
    return c


# ---------------------------------------------------------------------------
# Infidelity conversions
# ---------------------------------------------------------------------------


def ef_from_r(r: float, n: int) -> float:
    """Process infidelity from average gate infidelity: e_F = r (d+1)/d."""
    if not (0.0 <= r <= 1.0):
        raise MetrologyError(f"infidelity {r} outside [0, 1]")
    d = 1 << n
    return ((d + 1) * r) / d


def r_from_ef(e_f: float, n: int) -> float:
    """Average gate infidelity from process infidelity: r = e_F d/(d+1)."""
    if not (0.0 <= e_f <= 1.0):
        raise MetrologyError(f"infidelity {e_f} outside [0, 1]")
    d = 1 << n
    return (e_f * d) / (d + 1)
