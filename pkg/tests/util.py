"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
from scipy.stats import chi2

from adaptivesim.circuits import Circuit, bit

CLIFFORD_1Q = ("I", "X", "Y", "Z", "H", "S", "SDG")


def random_adaptive_clifford(rng: np.random.Generator, max_qubits: int = 5,
                             max_mcms: int = 4, n_layers: int = 8) -> Circuit:
    """Random Clifford circuit with mid-circuit measurements and
    conditionals reading previously written bits."""
    n = int(rng.integers(2, max_qubits + 1))
    n_mcm = int(rng.integers(1, max_mcms + 1))
    c = Circuit(n, n_mcm)
    written: list[int] = []
    mcm_budget = n_mcm
    for _ in range(n_layers):
        kind = rng.random()
        if kind < 0.45:
            q = int(rng.integers(n))
            c.gate(str(rng.choice(CLIFFORD_1Q)), q)
        elif kind < 0.7 and n >= 2:
            a, b = rng.choice(n, size=2, replace=False)
            c.gate("CNOT" if rng.random() < 0.5 else "CZ", int(a), int(b))
        elif kind < 0.85 and mcm_budget > 0:
            q = int(rng.integers(n))
            cbit = n_mcm - mcm_budget
            basis = "X" if rng.random() < 0.3 else "Z"
            c.measure(q, cbit, basis)
            written.append(cbit)
            mcm_budget -= 1
        elif written:
            expr = bit(int(rng.choice(written)))
            if len(written) >= 2 and rng.random() < 0.5:
                expr = expr ^ bit(int(rng.choice(written)))
            if rng.random() < 0.2:
                expr = ~expr
            q = int(rng.integers(n))
            c.cond(expr, [(str(rng.choice(("X", "Z", "H"))), q)])
    # make sure every declared bit is written so distributions are comparable
    while mcm_budget > 0:
        q = int(rng.integers(n))
        c.measure(q, n_mcm - mcm_budget, "Z")
        mcm_budget -= 1
    return c


def chi_square_pvalue(counts: dict[str, int], expected_probs: dict[str, float],
                      shots: int, min_expected: float = 5.0) -> float:
    """Goodness-of-fit p-value with pooling of low-expectation cells."""
    keys = sorted(set(counts) | set(expected_probs))
    obs, exp = [], []
    pool_obs = 0.0
    pool_exp = 0.0
    for k in keys:
        e = expected_probs.get(k, 0.0) * shots
        o = counts.get(k, 0)
        if e < min_expected:
            pool_obs += o
            pool_exp += e
        else:
            obs.append(o)
            exp.append(e)
    if pool_exp > 0 or pool_obs > 0:
        obs.append(pool_obs)
        exp.append(max(pool_exp, 1e-12))
    obs = np.asarray(obs, dtype=float)
    exp = np.asarray(exp, dtype=float)
    # rescale to the observed total so pooling round-off cannot skew the test
    exp *= obs.sum() / exp.sum()
    if len(obs) < 2:
        return 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return float(chi2.sf(stat, df=len(obs) - 1))
