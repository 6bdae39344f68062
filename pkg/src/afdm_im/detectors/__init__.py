from .common import DetectionResult, format_diagnostics
from .flops import flop_estimate
from .linear import ml_detect, ml_indices_batch, mmse_decide_batch, mmse_detect, mmse_estimate
from .message_passing import (
    FactorGraph,
    MessageState,
    constraint_update,
    count_distribution,
    dlmp_detect,
    indicator_update,
    mp_detect,
    observation_update,
    run_dlmp,
    run_mp,
    variable_update,
)

__all__ = [
    "DetectionResult",
    "FactorGraph",
    "MessageState",
    "constraint_update",
    "count_distribution",
    "dlmp_detect",
    "flop_estimate",
    "format_diagnostics",
    "indicator_update",
    "ml_detect",
    "ml_indices_batch",
    "mmse_decide_batch",
    "mmse_detect",
    "mmse_estimate",
    "mp_detect",
    "observation_update",
    "run_dlmp",
    "run_mp",
    "variable_update",
]
