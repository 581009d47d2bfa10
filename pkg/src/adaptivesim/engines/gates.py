"""Gate unitaries and Pauli matrices.

Two-qubit matrices are written in the basis |q_first q_second> where the
first listed qubit is the most significant bit of the 4x4 index, matching
the textbook CNOT matrix for qubits (control, target).
"""

from __future__ import annotations

import numpy as np

from ..circuits import Gate

_SQ2 = 1.0 / np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = _SQ2 * np.array([[1, 1], [1, -1]], dtype=complex)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = np.array([[1, 0], [0, -1j]], dtype=complex)

CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

_FIXED = {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "S": S, "SDG": SDG,
          "CNOT": CNOT, "CZ": CZ}

CLIFFORD_KINDS = frozenset(_FIXED)


def unitary(gate: Gate) -> np.ndarray:
    """The gate's unitary matrix (2x2 or 4x4)."""
    if gate.kind in _FIXED:
        return _FIXED[gate.kind]
    half = gate.theta / 2.0
    c, s = np.cos(half), np.sin(half)
    if gate.kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if gate.kind == "RY":
        return np.array([[c, -s], [s, c]])
    if gate.kind == "RZ":
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]])
    raise ValueError(f"no unitary for gate {gate.kind}")


def pauli_string_matrix(pauli: str) -> np.ndarray:
    """Dense matrix of a Pauli string; character k acts on qubit k.

    Index bit k of the matrix corresponds to qubit k (little-endian), so
    the Kronecker product runs from the last character down to the first.
    """
    m = np.array([[1.0 + 0j]])
    for ch in reversed(pauli.upper()):
        m = np.kron(m, PAULI[ch])
    return m
