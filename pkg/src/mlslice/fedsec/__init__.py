"""Federated training of the ML-Agents and the detection-to-supervisor path."""
from .federation import (
    DEFAULT_MODEL,
    Action,
    FederationResult,
    PooledScaler,
    agent_seed,
    detect_and_act,
    evaluate_params,
    holdout_split,
    local_train,
    moments,
    predict_params,
    run_federation,
    train_centralized,
)
from .params import (
    AgentReport,
    EmptyReportSet,
    LayoutMismatch,
    ModelParams,
    RoundLog,
    fedavg,
    load_into,
    params_of,
    softmax_layout,
)

__all__ = [
    "Action",
    "AgentReport",
    "DEFAULT_MODEL",
    "EmptyReportSet",
    "FederationResult",
    "LayoutMismatch",
    "ModelParams",
    "PooledScaler",
    "RoundLog",
    "agent_seed",
    "detect_and_act",
    "evaluate_params",
    "fedavg",
    "holdout_split",
    "load_into",
    "local_train",
    "moments",
    "params_of",
    "predict_params",
    "run_federation",
    "softmax_layout",
    "train_centralized",
]
