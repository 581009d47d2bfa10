"""State representations and execution engines."""

from .executor import (
    BranchLimitError,
    DensityRun,
    Distribution,
    OutcomeBranch,
    branch_distribution,
    enumerate_branches,
    run_density,
    run_trajectories,
    sample_stabilizer,
    stabilizer_run,
)
from .stabilizer import StabilizerTableau
from .states import (
    DensityMatrix,
    EngineError,
    PureState,
    UnsupportedGateError,
    apply_gate,
    expectation,
    measure,
    partial_trace,
    state_fidelity,
)

__all__ = [
    "BranchLimitError",
    "DensityMatrix",
    "DensityRun",
    "Distribution",
    "EngineError",
    "OutcomeBranch",
    "PureState",
    "StabilizerTableau",
    "UnsupportedGateError",
    "apply_gate",
    "branch_distribution",
    "enumerate_branches",
    "expectation",
    "measure",
    "partial_trace",
    "run_density",
    "run_trajectories",
    "sample_stabilizer",
    "stabilizer_run",
    "state_fidelity",
]
