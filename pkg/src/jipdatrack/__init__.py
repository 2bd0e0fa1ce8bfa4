"""Multi-target tracking with exact JIPDA and appearance-based GNN association."""

from .appearance import (
    GnnParams,
    GnnTracker,
    angular_margin_loss,
    angular_margin_loss_grad,
    gnn_step,
    similarity,
    solve_assignment,
)
from .association import build_validation_context, gate_threshold_from_pg, gated_likelihood
from .config import RunConfig, load_config
from .jipda import (
    AssociationPosterior,
    JipdaParams,
    JipdaTracker,
    JointEvent,
    Track,
    TrackStatus,
    compute_posterior,
    enumerate_joint_events,
    event_probability,
    jipda_step,
    lifecycle_update,
    predict_existence,
)
from .kinematics import (
    GaussianState,
    MeasurementPrediction,
    MotionParams,
    jipda_update,
    predict_measurement,
    predict_state,
)
from .metrics import FrameAnnotations, MotScore, evaluate
from .sim import ScenarioSpec, benchmark_spec, generate

__version__ = "0.1.0"

__all__ = [
    "AssociationPosterior", "FrameAnnotations", "GaussianState", "GnnParams", "GnnTracker", "JipdaParams",
    "JipdaTracker", "JointEvent", "MeasurementPrediction", "MotScore", "MotionParams", "RunConfig",
    "ScenarioSpec", "Track", "TrackStatus", "angular_margin_loss", "angular_margin_loss_grad",
    "benchmark_spec", "build_validation_context", "compute_posterior", "enumerate_joint_events", "evaluate",
    "event_probability", "gate_threshold_from_pg", "gated_likelihood", "generate", "gnn_step", "jipda_step",
    "jipda_update", "lifecycle_update", "load_config", "predict_existence", "predict_measurement",
    "predict_state", "similarity", "solve_assignment",
]
