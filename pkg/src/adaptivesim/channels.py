"""Kraus-operator representation of single-qubit noise channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COMPLETENESS_ATOL = 1e-10


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A CPTP map given by Kraus operators {K_i} with sum K_i^dag K_i = I.

    ``pauli_probs`` is an optional equivalent representation as a
    probabilistic Pauli channel [(prob, "I"|"X"|"Y"|"Z"), ...]; engines that
    only track stabilizers can sample it directly.
    """

    name: str
    ops: tuple[np.ndarray, ...]
    pauli_probs: tuple[tuple[float, str], ...] | None = None

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.ops)
        object.__setattr__(self, "ops", ops)
        dim = ops[0].shape[0]
        acc = np.zeros((dim, dim), dtype=complex)
        for k in ops:
            if k.shape != (dim, dim):
                raise ChannelError(f"inconsistent Kraus shapes in channel {self.name}")
            acc += k.conj().T @ k
        if not np.allclose(acc, np.eye(dim), atol=COMPLETENESS_ATOL):
            raise ChannelError(f"channel {self.name} violates completeness")

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def is_identity(self, atol: float = 1e-15) -> bool:
        """True when the channel acts as the identity map."""
        for k in self.ops:
            scaled = k / k[0, 0] if abs(k[0, 0]) > atol else None
            if scaled is None or not np.allclose(scaled, np.eye(self.dim), atol=atol):
                # a Kraus op that is not proportional to I: only identity if
                # its weight is negligible
                if np.linalg.norm(k) > atol:
                    return False
        return True


def identity_channel() -> KrausChannel:
    return KrausChannel("identity", (np.eye(2),), pauli_probs=((1.0, "I"),))


def phase_flip_channel(p: float, name: str = "phase-flip") -> KrausChannel:
    """Apply Z with probability p: {sqrt(1-p) I, sqrt(p) Z}."""
    if not (0.0 <= p <= 1.0):
        raise ChannelError(f"phase-flip probability {p} outside [0, 1]")
    i2 = np.eye(2)
    z = np.diag([1.0, -1.0])
    return KrausChannel(
        name,
        (np.sqrt(1.0 - p) * i2, np.sqrt(p) * z),
        pauli_probs=((1.0 - p, "I"), (p, "Z")),
    )


def amplitude_damping_ops(p_amp: float) -> tuple[np.ndarray, np.ndarray]:
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - p_amp)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(p_amp)], [0.0, 0.0]], dtype=complex)
    return k0, k1
