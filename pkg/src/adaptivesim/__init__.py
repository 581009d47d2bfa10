"""adaptivesim: simulation and benchmarking of adaptive quantum circuits.

Adaptive circuits mix unitary gates with mid-circuit measurements and
classically conditioned feed-forward gates.  This package provides the
circuit IR, three interchangeable execution engines (trajectory sampling,
exact branch enumeration, density matrices) plus a stabilizer tableau
engine, a calibrated device-noise model, constant-depth entanglement
protocol builders, and the estimators used to benchmark them.
"""

__version__ = "0.1.0"

from . import channels, circuits, engines, metrology, noise, protocols, serialize, timing  # noqa: F401
from .circuits import Circuit, CondExpr, Gate, Topology, bit, const, depth, eval_cond, lower, validate  # noqa: F401
from .timing import Durations, schedule  # noqa: F401
