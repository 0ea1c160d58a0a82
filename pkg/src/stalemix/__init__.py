"""Simulator and verification harness for a semi-asynchronous distributed
perceptron whose server enforces a staleness profile over update ages."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .aggregator import (
    ServerState,
    StalenessProfile,
    WeightAssignment,
    assign_weights,
    bucketize,
    check_mixing_identity,
    design_profile,
    server_step,
)
from .channel import NoiseModel, noise_energy, perturb
from .dataset import (
    Dataset,
    Example,
    certify,
    generate_dataset,
    is_globally_correct,
    load_dataset,
    save_dataset,
)
from .engine import (
    DataSpec,
    MonteCarloSummary,
    RoundRecord,
    RunConfig,
    RunTrace,
    Simulation,
    StopTimes,
    check_noiseless_budget,
    check_potential_steps,
    check_window_permanence,
    compute_potentials,
    extract_stop_times,
    mixing_residuals,
    monte_carlo,
    resolve_checkpoints,
    run,
    stabilization_bounds,
    verify_trace,
    weighted_mistake_bound,
    write_summary_csv,
    write_trace_csv,
)
from .errors import (
    CertificationError,
    ConfigError,
    GenerationBudgetError,
    InvariantViolation,
    ScheduleError,
    StalemixError,
)
from .perceptron import LocalResult, check_local_progress, local_train, shard_order
from .scheduler import (
    ArrivalEvent,
    ArrivalProcess,
    SchedulePolicy,
    load_script,
    lower_bound_fresh_prob,
)
