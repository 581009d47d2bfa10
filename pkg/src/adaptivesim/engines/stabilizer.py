"""Binary symplectic tableau simulator for Clifford circuits.

Tracks n stabilizer and n destabilizer generators with sign bits; gates
update the tableau in O(n) and measurements in O(n^2).  Only the discrete
Clifford gates (I, X, Y, Z, H, S, SDG, CNOT, CZ) are supported; rotation
gates raise ``UnsupportedGateError`` regardless of angle.
"""

from __future__ import annotations

import numpy as np

from ..circuits import Gate
from .gates import CLIFFORD_KINDS
from .states import UnsupportedGateError


class StabilizerTableau:
    """Aaronson-Gottesman tableau over n qubits, initialized to |0...0>.

    Row i < n holds destabilizer i; row n+i holds stabilizer i.  ``x[i, j]``
    and ``z[i, j]`` are the X/Z bits of generator i on qubit j; ``r[i]`` is
    the sign bit (0 for +, 1 for -).  Row 2n is scratch space for the
    deterministic-measurement row sums.
    """

    def __init__(self, num_qubits: int):
        n = num_qubits
        self.num_qubits = n
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros(2 * n + 1, dtype=np.uint8)
        for i in range(n):
            self.x[i, i] = 1          # destabilizer i = X_i
            self.z[n + i, i] = 1      # stabilizer i = Z_i

    def copy(self) -> "StabilizerTableau":
        out = StabilizerTableau.__new__(StabilizerTableau)
        out.num_qubits = self.num_qubits
        out.x = self.x.copy()
        out.z = self.z.copy()
        out.r = self.r.copy()
        return out

    # -- gates ----------------------------------------------------------

    def apply_gate(self, gate: Gate, qubits) -> "StabilizerTableau":
        kind = gate.kind
        if kind not in CLIFFORD_KINDS:
            raise UnsupportedGateError(
                f"{kind} is not in the discrete Clifford set supported by the tableau engine")
        if kind == "I":
            pass
        elif kind == "X":
            self.r ^= self.z[:, qubits[0]]
        elif kind == "Z":
            self.r ^= self.x[:, qubits[0]]
        elif kind == "Y":
            self.r ^= self.x[:, qubits[0]] ^ self.z[:, qubits[0]]
        elif kind == "H":
            q = qubits[0]
            self.r ^= self.x[:, q] & self.z[:, q]
            self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()
        elif kind == "S":
            q = qubits[0]
            self.r ^= self.x[:, q] & self.z[:, q]
            self.z[:, q] ^= self.x[:, q]
        elif kind == "SDG":
            for _ in range(3):
                self.apply_gate(Gate("S"), qubits)
        elif kind == "CNOT":
            a, b = qubits
            self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
            self.x[:, b] ^= self.x[:, a]
            self.z[:, a] ^= self.z[:, b]
        elif kind == "CZ":
            a, b = qubits
            self.apply_gate(Gate("H"), (b,))
            self.apply_gate(Gate("CNOT"), (a, b))
            self.apply_gate(Gate("H"), (b,))
        return self

    # -- row algebra ------------------------------------------------------

    def _rowsum(self, h: int, i: int):
        """Generator h <- generator h * generator i with sign tracking."""
        x1, z1 = self.x[i].astype(np.int64), self.z[i].astype(np.int64)
        x2, z2 = self.x[h].astype(np.int64), self.z[h].astype(np.int64)
        g = np.where(
            (x1 == 0) & (z1 == 0), 0,
            np.where(
                (x1 == 1) & (z1 == 1), z2 - x2,
                np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
            ),
        )
        total = (2 * int(self.r[h]) + 2 * int(self.r[i]) + int(g.sum())) % 4
        self.r[h] = np.uint8(total // 2)
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    # -- measurement ------------------------------------------------------

    def is_deterministic(self, qubit: int) -> bool:
        n = self.num_qubits
        return not self.x[n:2 * n, qubit].any()

    def measure(self, qubit: int, rng: np.random.Generator) -> int:
        """Z-basis measurement; deterministic outcomes consume no randomness."""
        n = self.num_qubits
        stab_rows = np.nonzero(self.x[n:2 * n, qubit])[0]
        if stab_rows.size:
            p = int(stab_rows[0]) + n
            for i in range(2 * n):
                if i != p and self.x[i, qubit]:
                    self._rowsum(i, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, qubit] = 1
            outcome = int(rng.integers(0, 2))
            self.r[p] = np.uint8(outcome)
            return outcome
        # deterministic: accumulate stabilizer rows flagged by destabilizers
        scratch = 2 * n
        self.x[scratch] = 0
        self.z[scratch] = 0
        self.r[scratch] = 0
        for i in range(n):
            if self.x[i, qubit]:
                self._rowsum(scratch, i + n)
        return int(self.r[scratch])

    # -- inspection -------------------------------------------------------

    def stabilizer_strings(self) -> list[str]:
        return [self._row_string(self.num_qubits + i) for i in range(self.num_qubits)]

    def destabilizer_strings(self) -> list[str]:
        return [self._row_string(i) for i in range(self.num_qubits)]

    def _row_string(self, i: int) -> str:
        chars = [
            "IXZY"[self.x[i, j] + 2 * self.z[i, j]] for j in range(self.num_qubits)
        ]
        return ("-" if self.r[i] else "+") + "".join(chars)

    def stabilizes(self, pauli: str, sign: int = +1) -> bool:
        """Group-membership test for a signed Pauli string.

        Expands the candidate over the stabilizer generators using the
        destabilizer anticommutation pattern, then compares the product
        (including sign) to the candidate.
        """
        n = self.num_qubits
        if len(pauli) != n:
            raise ValueError("Pauli string length must equal the qubit count")
        px = np.zeros(n, dtype=np.uint8)
        pz = np.zeros(n, dtype=np.uint8)
        for j, ch in enumerate(pauli.upper()):
            if ch == "X":
                px[j] = 1
            elif ch == "Z":
                pz[j] = 1
            elif ch == "Y":
                px[j] = pz[j] = 1
            elif ch != "I":
                raise ValueError(f"bad Pauli character {ch!r}")
        # must commute with every stabilizer
        for i in range(n, 2 * n):
            if int((px & self.z[i]).sum() + (pz & self.x[i]).sum()) % 2:
                return False
        scratch = 2 * n
        self.x[scratch] = 0
        self.z[scratch] = 0
        self.r[scratch] = 0
        for i in range(n):
            anti = int((px & self.z[i]).sum() + (pz & self.x[i]).sum()) % 2
            if anti:
                self._rowsum(scratch, i + n)
        want_r = 0 if sign > 0 else 1
        return (
            bool((self.x[scratch] == px).all())
            and bool((self.z[scratch] == pz).all())
            and int(self.r[scratch]) == want_r
        )
