"""Device calibration data and its conversion into quantum channels.

The model has four ingredients:
  * per-qubit coherence times turned into idle decoherence channels
    (amplitude damping composed with pure dephasing) on every idle or
    feedback-wait interval of the schedule;
  * per-qubit readout confusion attached to every measurement;
  * per-(measured, spectator) mid-circuit-measurement dephasing, a
    phase-flip of strength lambda applied to the spectator at each MCM;
  * instruction durations, including the classical feedback latency that
    delays every conditional block.

Dynamical decoupling is modeled as a multiplier on lambda plus the use of
echo (rather than Ramsey) T2 for idle channels; no pulse sequences are
inserted.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .channels import KrausChannel, amplitude_damping_ops, phase_flip_channel
from .circuits import Circuit, Measure, Delay, Topology
from .timing import Durations, schedule

STRONG_REGIME_THRESHOLD = 0.25
_IDLE_SKIP = 1e-15


class DeviceError(ValueError):
    pass


class CalibrationWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Model types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoherenceParams:
    """T1 and T2 times for one qubit, in microseconds."""

    t1_us: float
    t2_star_us: float
    t2_echo_us: float

    def __post_init__(self):
        for name in ("t1_us", "t2_star_us", "t2_echo_us"):
            v = getattr(self, name)
            if not (v > 0):
                raise DeviceError(f"{name} must be positive, got {v}")
        if self.t2_star_us > 2 * self.t1_us or self.t2_echo_us > 2 * self.t1_us:
            warnings.warn(
                f"T2 exceeds 2*T1 ({self})", CalibrationWarning, stacklevel=2)
        if self.t2_star_us > self.t2_echo_us:
            warnings.warn(
                f"T2* exceeds T2-echo ({self}); ingesting verbatim",
                CalibrationWarning, stacklevel=2)


@dataclass(frozen=True)
class QubitReadout:
    p00: float  # P(read 0 | state 0)
    p11: float  # P(read 1 | state 1)

    def __post_init__(self):
        for name in ("p00", "p11"):
            v = getattr(self, name)
            if not (0.5 <= v <= 1.0):
                raise DeviceError(f"readout {name}={v} outside [0.5, 1]")


@dataclass(frozen=True)
class ReadoutModel:
    per_qubit: dict[int, QubitReadout]
    esp_enabled: bool = True


@dataclass(frozen=True)
class CrosstalkEntry:
    lam: float            # spectator phase-flip probability per MCM
    dd_suppression: float  # multiplier on lam while DD is active
    regime: str           # "weak" or "strong"

    def __post_init__(self):
        if not (0.0 <= self.lam <= 0.5):
            raise DeviceError(f"lambda={self.lam} outside [0, 0.5]")
        if not (0.0 <= self.dd_suppression <= 1.0):
            raise DeviceError(f"dd_suppression={self.dd_suppression} outside [0, 1]")
        if self.regime not in ("weak", "strong"):
            raise DeviceError(f"regime must be weak or strong, got {self.regime!r}")


@dataclass(frozen=True)
class MCMCrosstalkModel:
    """Per ordered (measured, spectator) pair dephasing strengths."""

    entries: dict[tuple[int, int], CrosstalkEntry] = field(default_factory=dict)
    strong_threshold: float = STRONG_REGIME_THRESHOLD

    def spectators_of(self, measured: int) -> list[tuple[int, CrosstalkEntry]]:
        out = [(s, e) for (m, s), e in self.entries.items() if m == measured]
        out.sort(key=lambda item: item[0])
        return out


@dataclass(frozen=True)
class NoiseModel:
    coherence: dict[int, CoherenceParams]
    readout: ReadoutModel
    crosstalk: MCMCrosstalkModel
    durations: Durations
    dd_active: bool = False

    def tphi_us(self, qubit: int) -> float:
        """Pure-dephasing time derived from T1 and the active T2 choice."""
        c = self.coherence[qubit]
        t2 = c.t2_echo_us if self.dd_active else c.t2_star_us
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CalibrationWarning)
            return tphi_from(c.t1_us, t2)

    # -- convenience copies (models are immutable) -----------------------

    def with_dd(self, dd_active: bool) -> "NoiseModel":
        return replace(self, dd_active=dd_active)

    def without_crosstalk(self) -> "NoiseModel":
        return replace(self, crosstalk=MCMCrosstalkModel({}))

    def with_crosstalk(self, measured: int, spectator: int, lam: float,
                       dd_suppression: float = 1.0) -> "NoiseModel":
        regime = "strong" if lam > self.crosstalk.strong_threshold else "weak"
        entries = dict(self.crosstalk.entries)
        entries[(measured, spectator)] = CrosstalkEntry(lam, dd_suppression, regime)
        return replace(self, crosstalk=MCMCrosstalkModel(entries, self.crosstalk.strong_threshold))

    @staticmethod
    def ideal(num_qubits: int, durations: Durations | None = None) -> "NoiseModel":
        """Infinite coherences, perfect readout, no crosstalk."""
        big = 1e18
        return NoiseModel(
            coherence={q: CoherenceParams(big, big, big) for q in range(num_qubits)},
            readout=ReadoutModel({q: QubitReadout(1.0, 1.0) for q in range(num_qubits)}),
            crosstalk=MCMCrosstalkModel({}),
            durations=durations or Durations(),
        )


# ---------------------------------------------------------------------------
# Channel constructors
# ---------------------------------------------------------------------------


def tphi_from(t1_us: float, t2_us: float) -> float:
    """Pure-dephasing time: 1/Tphi = 1/T2 - 1/(2 T1).

    Returns infinity (with a calibration warning) when the right-hand side
    is non-positive, i.e. when T2 >= 2 T1.
    """
    if t1_us <= 0 or t2_us <= 0:
        raise DeviceError("T1 and T2 must be positive")
    rate = 1.0 / t2_us - 1.0 / (2.0 * t1_us)
    if rate <= 0.0:
        if rate < 0.0:
            warnings.warn(
                f"T2={t2_us}us exceeds 2*T1={2 * t1_us}us; clamping Tphi to infinity",
                CalibrationWarning, stacklevel=2)
        return math.inf
    return 1.0 / rate


def idle_channel(t1_us: float, tphi_us: float, t_ns: float) -> KrausChannel:
    """Amplitude damping composed with pure dephasing for an idle window.

    p_amp = 1 - exp(-t/T1); the dephasing phase-flip probability is
    (1 - exp(-t/Tphi)) / 2, so Tphi = inf gives pure amplitude damping.
    """
    if not (t1_us > 0):
        raise DeviceError(f"T1 must be positive, got {t1_us}")
    if t_ns < 0:
        raise DeviceError(f"negative idle duration {t_ns}")
    t_us = t_ns / 1000.0
    p_amp = 1.0 - math.exp(-t_us / t1_us)
    p_phi = 0.0 if math.isinf(tphi_us) else (1.0 - math.exp(-t_us / tphi_us)) / 2.0
    a0, a1 = amplitude_damping_ops(p_amp)
    z = np.diag([1.0, -1.0]).astype(complex)
    ops = [np.sqrt(1.0 - p_phi) * a0, np.sqrt(1.0 - p_phi) * a1]
    if p_phi > 0.0:
        ops += [np.sqrt(p_phi) * (z @ a0), np.sqrt(p_phi) * (z @ a1)]
    return KrausChannel(f"idle({t_ns:g}ns)", tuple(ops))


def mcm_spectator_channel(lam: float, dd_active: bool = False,
                          dd_suppression: float = 1.0) -> KrausChannel:
    """Spectator dephasing during a neighbor's measurement: Z flip with
    probability lambda (suppressed by the DD factor when DD is active)."""
    lam_eff = lam * dd_suppression if dd_active else lam
    return phase_flip_channel(lam_eff, name=f"mcm-dephase({lam_eff:g})")


def _idle_is_trivial(t1_us: float, tphi_us: float, t_ns: float) -> bool:
    t_us = t_ns / 1000.0
    p_amp = 1.0 - math.exp(-t_us / t1_us)
    p_phi = 0.0 if math.isinf(tphi_us) else (1.0 - math.exp(-t_us / tphi_us)) / 2.0
    return p_amp < _IDLE_SKIP and p_phi < _IDLE_SKIP


# ---------------------------------------------------------------------------
# Readout confusion
# ---------------------------------------------------------------------------


def apply_readout_confusion(dist, model: ReadoutModel, qubit_for_bit, rng=None):
    """Push a distribution (or a single bit) through readout confusion.

    For a distribution, ``qubit_for_bit[i]`` names the qubit whose
    confusion applies to key position i and the result is the exact
    stochastic-matrix product.  For a single int bit, ``qubit_for_bit`` is
    the qubit and ``rng`` is used to sample the flip.
    """
    from .engines.executor import Distribution

    if isinstance(dist, (int, np.integer)):
        ro = model.per_qubit[int(qubit_for_bit)]
        perr = 1.0 - ro.p11 if dist else 1.0 - ro.p00
        if rng is None:
            raise DeviceError("bit-level confusion sampling needs an rng")
        return int(dist) ^ int(rng.random() < perr)

    out: dict[str, float] = {}
    for key, p in dist.probs.items():
        expanded = [(key, p)]
        for i, q in enumerate(qubit_for_bit):
            ro = model.per_qubit[q]
            nxt = []
            for k, w in expanded:
                true_bit = int(k[i])
                perr = 1.0 - ro.p11 if true_bit else 1.0 - ro.p00
                if perr > 0.0:
                    flipped = k[:i] + str(1 - true_bit) + k[i + 1:]
                    nxt.append((flipped, w * perr))
                nxt.append((k, w * (1.0 - perr)))
            expanded = nxt
        for k, w in expanded:
            out[k] = out.get(k, 0.0) + w
    return Distribution.from_probs(out)


# ---------------------------------------------------------------------------
# Circuit decoration
# ---------------------------------------------------------------------------


def decorate(circuit: Circuit, noise: NoiseModel) -> Circuit:
    """Rewrite a circuit with noise channels inserted per its schedule.

    Inserts idle-decoherence channels on every idle or feedback-wait gap
    (including spectators idling through a neighbor's measurement),
    spectator dephasing after each MCM, and readout confusion on each
    measurement.  Deterministic given (circuit, noise).
    """
    sched = schedule(circuit, noise.durations)
    low = sched.lowered
    out = Circuit(low.num_qubits, low.num_cbits, [], low.topology)
    last_end = [0.0] * low.num_qubits

    def emit_idle(q: int, t_ns: float):
        c = noise.coherence.get(q)
        if c is None:
            raise DeviceError(f"noise model does not cover qubit {q}")
        tphi = noise.tphi_us(q)
        if not _idle_is_trivial(c.t1_us, tphi, t_ns):
            out.channel(q, idle_channel(c.t1_us, tphi, t_ns))

    for instr, win in zip(low.instructions, sched.windows):
        for q in sorted(win):
            iv = win[q]
            gap = iv.start_ns - last_end[q]
            if isinstance(instr, Delay):
                gap += iv.end_ns - iv.start_ns
            if gap > 1e-9:
                emit_idle(q, gap)
            last_end[q] = iv.end_ns
        if isinstance(instr, Measure):
            ro = noise.readout.per_qubit.get(instr.qubit)
            if ro is None:
                raise DeviceError(f"readout model does not cover qubit {instr.qubit}")
            flips = (1.0 - ro.p00, 1.0 - ro.p11)
            out.append(Measure(
                instr.qubit, instr.cbit, instr.basis,
                flips if max(flips) > 0.0 else None))
            for spectator, entry in noise.crosstalk.spectators_of(instr.qubit):
                if spectator >= low.num_qubits:
                    continue  # device qubit not used by this circuit
                ch = mcm_spectator_channel(entry.lam, noise.dd_active, entry.dd_suppression)
                if ch.pauli_probs[1][0] > 0.0:
                    out.channel(spectator, ch)
        else:
            out.append(instr)

    for q in range(low.num_qubits):
        gap = sched.end_ns - last_end[q]
        if gap > 1e-9:
            emit_idle(q, gap)
    return out


# ---------------------------------------------------------------------------
# Calibration files
# ---------------------------------------------------------------------------

PACKAGED_DEVICE = "device_8ring.json"


def load_device(path_or_dict) -> tuple[Topology, NoiseModel]:
    """Load a calibration file; see data/device_8ring.json for the schema.

    Every qubit of the topology must appear in the coherence and readout
    sections; crosstalk lambdas apply only to explicitly listed pairs.
    """
    if isinstance(path_or_dict, dict):
        data = path_or_dict
    else:
        with open(path_or_dict, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    try:
        topo_spec = data["topology"]
        topology = Topology.from_edges(
            topo_spec["num_qubits"], [tuple(e) for e in topo_spec["edges"]])
        nq = topology.num_qubits

        coherence = {}
        for q in range(nq):
            row = data["coherence"].get(str(q))
            if row is None:
                raise DeviceError(f"coherence table is missing qubit {q}")
            coherence[q] = CoherenceParams(row["t1_us"], row["t2_star_us"], row["t2_echo_us"])

        readout_rows = {}
        for q in range(nq):
            row = data["readout"].get(str(q))
            if row is None:
                raise DeviceError(f"readout table is missing qubit {q}")
            readout_rows[q] = QubitReadout(row["p00"], row["p11"])
        readout = ReadoutModel(readout_rows, bool(data["readout"].get("esp_enabled", True)))

        entries = {}
        for row in data.get("mcm_crosstalk", []):
            m, s = int(row["measured"]), int(row["spectator"])
            if not (0 <= m < nq and 0 <= s < nq) or m == s:
                raise DeviceError(f"bad crosstalk pair ({m}, {s})")
            entry = CrosstalkEntry(row["lambda"], row["dd_suppression"], row["regime"])
            expected = "strong" if entry.lam > STRONG_REGIME_THRESHOLD else "weak"
            if expected != entry.regime:
                warnings.warn(
                    f"crosstalk pair ({m},{s}) labeled {entry.regime} but lambda="
                    f"{entry.lam} implies {expected}", CalibrationWarning, stacklevel=2)
            entries[(m, s)] = entry

        durations = Durations(**data.get("durations", {}))
    except KeyError as exc:
        raise DeviceError(f"calibration file is missing field {exc}") from exc

    model = NoiseModel(
        coherence=coherence,
        readout=readout,
        crosstalk=MCMCrosstalkModel(entries),
        durations=durations,
    )
    return topology, model


def packaged_device_dict() -> dict:
    text = (resources.files("adaptivesim") / "data" / PACKAGED_DEVICE).read_text()
    return json.loads(text)


def load_packaged_device() -> tuple[Topology, NoiseModel]:
    """The bundled 8-qubit ring device calibration."""
    return load_device(packaged_device_dict())
