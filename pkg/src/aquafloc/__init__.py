"""Desk-scale aquaculture water-quality platform.

Telemetry ingestion, tree-based condition classification, rule-driven
actuator control, a closed-loop tank simulator, and an HTTP/SSE gateway
tying them together.
"""

from .model import (
    ActuatorId,
    ActuatorMode,
    ActuatorState,
    AppConfig,
    Condition,
    CONTROL_DEFAULTS,
    LABELING_DEFAULTS,
    Thresholds,
    ValidationError,
    WaterSample,
    initial_actuator_states,
    load_config,
    validate_sample,
)
from .labeling import (
    Dataset,
    LabeledSample,
    generate_dataset,
    label_sample,
    load_dataset,
    save_dataset,
    table1_dataset,
)
from .dtree import (
    DecisionTree,
    EvalReport,
    TreeHyperparams,
    evaluate,
    export_classifier,
    fit,
    load_tree,
    predict,
    reference_tree,
    save_tree,
)
from .control import ControlDecision, TickReport, arbitrate, control_tick, decide
from .plantsim import (
    Scenario,
    SimParams,
    SimState,
    Trace,
    load_scenario,
    replay_table2,
    run_closed_loop,
    run_scenario,
    step,
)
from .store import StoredRecord, TelemetryStore
from .gateway import GatewayServer

__version__ = "0.1.0"

__all__ = [
    "ActuatorId",
    "ActuatorMode",
    "ActuatorState",
    "AppConfig",
    "Condition",
    "CONTROL_DEFAULTS",
    "ControlDecision",
    "Dataset",
    "DecisionTree",
    "EvalReport",
    "GatewayServer",
    "LABELING_DEFAULTS",
    "LabeledSample",
    "Scenario",
    "SimParams",
    "SimState",
    "StoredRecord",
    "TelemetryStore",
    "Thresholds",
    "TickReport",
    "Trace",
    "TreeHyperparams",
    "ValidationError",
    "WaterSample",
    "arbitrate",
    "control_tick",
    "decide",
    "evaluate",
    "export_classifier",
    "fit",
    "generate_dataset",
    "initial_actuator_states",
    "label_sample",
    "load_config",
    "load_dataset",
    "load_scenario",
    "load_tree",
    "predict",
    "reference_tree",
    "replay_table2",
    "run_closed_loop",
    "run_scenario",
    "save_dataset",
    "save_tree",
    "step",
    "table1_dataset",
    "validate_sample",
    "__version__",
]
