"""Exact simulation of multi-copy quantum state preparation with oracle-query accounting."""

from .amplify import Schedule
from .baseline import BaselineResult, build_U_state, naive_k_copies, prepare_single_baseline
from .bench import ExperimentConfig, RunRecord, fit_exponent, run_experiment
from .classical import AliasTable, alias_build, alias_sample, empirical_tv
from .core import (
    QuantumState,
    QueryCounter,
    Register,
    WeightVector,
    fidelity,
    indicator,
    make_rng,
    measure,
    oracle_query,
    read_weights,
    rot_coeffs,
    state_from_weights,
    tv_distance,
)
from .integral import AngleTree, apply_angle_tree, build_D, prefix_mass
from .pipeline import (
    PipelineStats,
    PreparedCircuitC,
    amplify_to_w,
    apply_C,
    circuit_from_top_k,
    importance_sample,
    ksearch_reduction_demo,
    prepare_k_copies,
    preprocess,
    reference_full_C,
)
from .topk import TopKResult, grover_search_above, is_valid_top_k, top_k_positions

__version__ = "0.1.0"
