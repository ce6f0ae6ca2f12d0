"""Performance analysis of overloaded many-server queues with abandonment.

The package combines closed-form Gaussian performance formulas, an exact
truncated-CTMC solver, a discrete-event simulator with virtual-wait
probing, an exact one-dimensional diffusion engine, and a Monte-Carlo
laboratory for superposed stationary renewal processes.  The ``abandonq``
command line ties the pieces together and reproduces the shipped
reference experiments.
"""

from .ctmc import stationary_distribution
from .des import QueueModel, SimConfig, simulate
from .diffusion import GaussianApprox, approximate
from .distributions import (
    Deterministic,
    Dist,
    Erlang2,
    Exponential,
    Hyperexp2,
    Lognormal,
    make_dist,
)
from .experiments import ExperimentPlan, run_plan
from .ou import OUParams, simulate_ou, ys_law
from .streams import substream

__all__ = [
    "Deterministic",
    "Dist",
    "Erlang2",
    "ExperimentPlan",
    "Exponential",
    "GaussianApprox",
    "Hyperexp2",
    "Lognormal",
    "OUParams",
    "QueueModel",
    "SimConfig",
    "approximate",
    "make_dist",
    "run_plan",
    "simulate",
    "simulate_ou",
    "stationary_distribution",
    "substream",
    "ys_law",
]

__version__ = "0.1.0"
