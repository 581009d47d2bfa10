"""Pure-state and density-matrix representations.

Conventions used everywhere in this package:
  * qubit 0 is the least-significant bit of a basis-state index;
  * bitstrings print qubit 0 leftmost (so basis index 1 of a 2-qubit
    register prints as "10");
  * Pauli-string character k acts on qubit k.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..channels import KrausChannel
from ..circuits import Gate
from . import gates as glib

PURE_STATE_MAX_QUBITS = 12
DENSITY_MAX_QUBITS = 8
NORM_ATOL = 1e-10


class EngineError(ValueError):
    pass


class UnsupportedGateError(EngineError):
    pass


def bitstring_of_index(index: int, n: int) -> str:
    return "".join(str((index >> k) & 1) for k in range(n))


def index_of_bits(bits) -> int:
    out = 0
    for k, b in enumerate(bits):
        out |= (int(b) & 1) << k
    return out


@lru_cache(maxsize=None)
def _pair_indices(n: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Basis indices with bit q clear, and the matching bit-set indices."""
    idx = np.arange(1 << n)
    idx0 = idx[(idx >> q) & 1 == 0]
    return idx0, idx0 | (1 << q)


@lru_cache(maxsize=None)
def _quad_indices(n: int, a: int, b: int):
    """Index groups (bit_a, bit_b) = 00, 01, 10, 11 with a the 4x4 MSB."""
    idx = np.arange(1 << n)
    base = idx[((idx >> a) & 1 == 0) & ((idx >> b) & 1 == 0)]
    return base, base | (1 << b), base | (1 << a), base | (1 << a) | (1 << b)


def _apply_1q(amps: np.ndarray, u: np.ndarray, n: int, q: int, axis_rows: bool = True):
    """In-place single-qubit unitary on a state vector or matrix rows/cols."""
    i0, i1 = _pair_indices(n, q)
    if amps.ndim == 1:
        a0, a1 = amps[i0], amps[i1]
        amps[i0] = u[0, 0] * a0 + u[0, 1] * a1
        amps[i1] = u[1, 0] * a0 + u[1, 1] * a1
    elif axis_rows:
        a0, a1 = amps[i0, :], amps[i1, :]
        amps[i0, :] = u[0, 0] * a0 + u[0, 1] * a1
        amps[i1, :] = u[1, 0] * a0 + u[1, 1] * a1
    else:
        a0, a1 = amps[:, i0], amps[:, i1]
        amps[:, i0] = u[0, 0] * a0 + u[0, 1] * a1
        amps[:, i1] = u[1, 0] * a0 + u[1, 1] * a1


def _apply_2q(amps: np.ndarray, u: np.ndarray, n: int, a: int, b: int, axis_rows: bool = True):
    groups = _quad_indices(n, a, b)
    if amps.ndim == 1:
        vals = [amps[g] for g in groups]
        for r, g in enumerate(groups):
            amps[g] = sum(u[r, c] * vals[c] for c in range(4))
    elif axis_rows:
        vals = [amps[g, :] for g in groups]
        for r, g in enumerate(groups):
            amps[g, :] = sum(u[r, c] * vals[c] for c in range(4))
    else:
        vals = [amps[:, g] for g in groups]
        for r, g in enumerate(groups):
            amps[:, g] = sum(u[r, c] * vals[c] for c in range(4))


class PureState:
    """Complex amplitude vector over 2^n basis states (L2 norm 1)."""

    def __init__(self, num_qubits: int, amplitudes: np.ndarray | None = None):
        if num_qubits > PURE_STATE_MAX_QUBITS:
            raise EngineError(
                f"pure-state engine is capped at {PURE_STATE_MAX_QUBITS} qubits, got {num_qubits}")
        self.num_qubits = num_qubits
        if amplitudes is None:
            self.amps = np.zeros(1 << num_qubits, dtype=complex)
            self.amps[0] = 1.0
        else:
            self.amps = np.asarray(amplitudes, dtype=complex).copy()
            if self.amps.shape != (1 << num_qubits,):
                raise EngineError("amplitude vector has the wrong length")
            norm = np.linalg.norm(self.amps)
            if abs(norm - 1.0) > 1e-6:
                raise EngineError(f"amplitude vector is not normalized (norm {norm})")
            self.amps /= norm

    def copy(self) -> "PureState":
        out = PureState.__new__(PureState)
        out.num_qubits = self.num_qubits
        out.amps = self.amps.copy()
        return out

    def apply_gate(self, gate: Gate, qubits) -> "PureState":
        u = glib.unitary(gate)
        if len(qubits) == 1:
            _apply_1q(self.amps, u, self.num_qubits, qubits[0])
        else:
            _apply_2q(self.amps, u, self.num_qubits, qubits[0], qubits[1])
        return self

    def apply_unitary(self, u: np.ndarray, qubits) -> "PureState":
        if len(qubits) == 1:
            _apply_1q(self.amps, u, self.num_qubits, qubits[0])
        else:
            _apply_2q(self.amps, u, self.num_qubits, qubits[0], qubits[1])
        return self

    def prob_one(self, qubit: int) -> float:
        _, i1 = _pair_indices(self.num_qubits, qubit)
        return float(np.sum(np.abs(self.amps[i1]) ** 2))

    def collapse(self, qubit: int, outcome: int) -> float:
        """Project onto the outcome and renormalize; returns the branch probability."""
        i0, i1 = _pair_indices(self.num_qubits, qubit)
        p1 = self.prob_one(qubit)
        p = p1 if outcome else 1.0 - p1
        if p <= 0.0:
            raise EngineError("collapse onto a zero-probability outcome")
        self.amps[i0 if outcome else i1] = 0.0
        self.amps /= np.sqrt(p)
        return p

    def measure(self, qubit: int, rng: np.random.Generator) -> int:
        outcome = int(rng.random() < self.prob_one(qubit))
        self.collapse(qubit, outcome)
        return outcome

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def expectation(self, pauli: str) -> float:
        if len(pauli) != self.num_qubits:
            raise EngineError("Pauli string length must equal the qubit count")
        phi = self.copy()
        for q, ch in enumerate(pauli.upper()):
            if ch != "I":
                _apply_1q(phi.amps, glib.PAULI[ch], self.num_qubits, q)
        return float(np.real(np.vdot(self.amps, phi.amps)))

    def norm_error(self) -> float:
        return abs(float(np.linalg.norm(self.amps)) - 1.0)


class DensityMatrix:
    """2^n x 2^n density operator (Hermitian, unit trace, PSD)."""

    def __init__(self, num_qubits: int, matrix: np.ndarray | None = None):
        if num_qubits > DENSITY_MAX_QUBITS:
            raise EngineError(
                f"density-matrix engine is capped at {DENSITY_MAX_QUBITS} qubits, got {num_qubits}")
        self.num_qubits = num_qubits
        dim = 1 << num_qubits
        if matrix is None:
            self.rho = np.zeros((dim, dim), dtype=complex)
            self.rho[0, 0] = 1.0
        else:
            self.rho = np.asarray(matrix, dtype=complex).copy()
            if self.rho.shape != (dim, dim):
                raise EngineError("density matrix has the wrong shape")

    @staticmethod
    def from_pure(state: PureState) -> "DensityMatrix":
        rho = np.outer(state.amps, state.amps.conj())
        return DensityMatrix(state.num_qubits, rho)

    def copy(self) -> "DensityMatrix":
        out = DensityMatrix.__new__(DensityMatrix)
        out.num_qubits = self.num_qubits
        out.rho = self.rho.copy()
        return out

    def _conjugate_1q(self, u: np.ndarray, q: int):
        _apply_1q(self.rho, u, self.num_qubits, q, axis_rows=True)
        _apply_1q(self.rho, u.conj(), self.num_qubits, q, axis_rows=False)

    def apply_gate(self, gate: Gate, qubits) -> "DensityMatrix":
        u = glib.unitary(gate)
        if len(qubits) == 1:
            self._conjugate_1q(u, qubits[0])
        else:
            _apply_2q(self.rho, u, self.num_qubits, qubits[0], qubits[1], axis_rows=True)
            _apply_2q(self.rho, u.conj(), self.num_qubits, qubits[0], qubits[1], axis_rows=False)
        return self

    def apply_kraus(self, channel: KrausChannel, qubit: int) -> "DensityMatrix":
        acc = np.zeros_like(self.rho)
        for k in channel.ops:
            tmp = self.rho.copy()
            _apply_1q(tmp, k, self.num_qubits, qubit, axis_rows=True)
            _apply_1q(tmp, k.conj(), self.num_qubits, qubit, axis_rows=False)
            acc += tmp
        self.rho = acc
        return self

    def prob_one(self, qubit: int) -> float:
        _, i1 = _pair_indices(self.num_qubits, qubit)
        return float(np.real(np.sum(self.rho[i1, i1])))

    def collapse(self, qubit: int, outcome: int) -> float:
        i0, i1 = _pair_indices(self.num_qubits, qubit)
        p1 = self.prob_one(qubit)
        p = p1 if outcome else 1.0 - p1
        if p <= 0.0:
            raise EngineError("collapse onto a zero-probability outcome")
        kill = i0 if outcome else i1
        self.rho[kill, :] = 0.0
        self.rho[:, kill] = 0.0
        self.rho /= p
        return p

    def measure(self, qubit: int, rng: np.random.Generator) -> int:
        outcome = int(rng.random() < self.prob_one(qubit))
        self.collapse(qubit, outcome)
        return outcome

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    def expectation(self, pauli: str) -> float:
        if len(pauli) != self.num_qubits:
            raise EngineError("Pauli string length must equal the qubit count")
        tmp = self.rho.copy()
        for q, ch in enumerate(pauli.upper()):
            if ch != "I":
                _apply_1q(tmp, glib.PAULI[ch], self.num_qubits, q, axis_rows=True)
        return float(np.real(np.trace(tmp)))

    def validate(self, atol: float = NORM_ATOL) -> None:
        """Raise unless Hermitian within atol, unit trace, eigenvalues >= -1e-8."""
        if not np.allclose(self.rho, self.rho.conj().T, atol=atol):
            raise EngineError("density matrix is not Hermitian")
        tr = float(np.real(np.trace(self.rho)))
        if abs(tr - 1.0) > atol:
            raise EngineError(f"density matrix trace {tr} != 1")
        evals = np.linalg.eigvalsh(self.rho)
        if evals.min() < -1e-8:
            raise EngineError(f"density matrix has negative eigenvalue {evals.min()}")


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def apply_gate(state, gate: Gate, qubits):
    """Apply a gate to any engine state (in place); returns the state."""
    return state.apply_gate(gate, qubits)


def measure(state, qubit: int, rng: np.random.Generator):
    """Sample a Z-basis measurement; returns (outcome, state)."""
    return state.measure(qubit, rng), state


def expectation(state, pauli: str) -> float:
    return state.expectation(pauli)


def partial_trace(state, keep) -> DensityMatrix:
    """Reduced density matrix on ``keep``; result qubit j is keep[j]."""
    keep = list(keep)
    if isinstance(state, PureState):
        n = state.num_qubits
        tensor = state.amps.reshape([2] * n)
        # numpy axis j corresponds to qubit n-1-j; result wants keep[-1] slowest
        axes = [n - 1 - q for q in reversed(keep)]
        rest = [ax for ax in range(n) if ax not in axes]
        m = np.transpose(tensor, axes + rest).reshape(1 << len(keep), -1)
        return DensityMatrix(len(keep), m @ m.conj().T)
    if isinstance(state, DensityMatrix):
        n = state.num_qubits
        tensor = state.rho.reshape([2] * (2 * n))
        axes = [n - 1 - q for q in reversed(keep)]
        rest = [ax for ax in range(n) if ax not in axes]
        perm = axes + rest + [n + ax for ax in axes] + [n + ax for ax in rest]
        k, r = len(keep), n - len(keep)
        t = np.transpose(tensor, perm).reshape(1 << k, 1 << r, 1 << k, 1 << r)
        return DensityMatrix(k, np.einsum("arbr->ab", t))
    raise EngineError(f"cannot partial-trace {type(state).__name__}")


def state_fidelity(a, b) -> float:
    """Fidelity between two states, at least one of which is pure.

    |<b|a>|^2 for two pure states, <b|rho_a|b> when one side is a density
    matrix.
    """
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        raise EngineError("fidelity between two mixed states is not supported")
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.num_qubits != b.num_qubits:
            raise EngineError("state dimension mismatch")
        return float(np.abs(np.vdot(b.amps, a.amps)) ** 2)
    rho, psi = (a, b) if isinstance(a, DensityMatrix) else (b, a)
    if rho.num_qubits != psi.num_qubits:
        raise EngineError("state dimension mismatch")
    return float(np.real(np.vdot(psi.amps, rho.rho @ psi.amps)))
