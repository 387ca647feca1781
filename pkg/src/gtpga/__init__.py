"""Decentralized gradient tracking with periodic global averaging.

Simulator for gossip-based stochastic optimization over a synchronous round
model: topology and mixing-matrix construction, a heterogeneous nonconvex
least-squares benchmark, the tracked recursion with periodic exact averaging
(plus a plain decentralized gradient descent baseline), convergence
diagnostics, theoretical stepsize/rate evaluators, and a CLI harness for
deterministic experiment sweeps.
"""

from .engine import (
    ALGORITHMS,
    DivergenceError,
    GradientStreams,
    NetworkState,
    RunConfig,
    Trajectory,
    dgd_step,
    gradient_stream,
    gt_pga_step,
    init_state,
    load_checkpoint,
    resolve_alpha,
    run,
    save_checkpoint,
)
from .metrics import (
    MetricRecord,
    consensus_error,
    record,
    stationarity_metric,
    tracking_residual,
)
from .problem import (
    Dataset,
    NoiseModel,
    generate_dataset,
    load_dataset,
    local_gradient,
    local_value,
    mean_gradient,
    objective_value,
    save_dataset,
    smoothness_constant,
    stacked_gradients,
    stochastic_gradient,
)
from .theory import (
    BoundParams,
    RateBound,
    ScaleAssumptionWarning,
    TheoremScopeError,
    corollary_stepsize,
    rate_bound_theorem,
    stepsize_bound,
    tau_tradeoff_table,
)
from .topology import (
    TOPOLOGIES,
    ConnectivityWarning,
    Graph,
    MixingMatrix,
    averaging_matrix,
    build_topology,
    effective_mixing,
    is_pga_step,
    metropolis_weights,
    normalize_tau,
    spectral_gap,
)

__version__ = "0.1.0"
