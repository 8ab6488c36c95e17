"""Open-set rejection classifier with source-free open-partial adaptation."""

from onering.autodiff import SGD, Tensor, backward
from onering.model import (
    OneRingModel,
    forward,
    init_model,
    load_checkpoint,
    predict,
    runner_up,
    save_checkpoint,
)
from onering.objectives import (
    AadConfig,
    RatioEstimate,
    aad_loss,
    estimate_ratio,
    masked_logits,
    source_loss,
    weighted_entropy_loss,
)
from onering.scenario import (
    Dataset,
    DomainShiftSpec,
    LabelSpaceSplit,
    batches,
    collapse_to_unknown,
    generate_blobs,
    load_feature_csv,
    split_label_space,
)
from onering.trainer import (
    MemoryBank,
    TrainConfig,
    adapt_target,
    knn,
    train_source,
    update_bank,
)
from onering.evaluation import (
    MetricsReport,
    SweepResult,
    compute_metrics,
    decision_region_svg,
    entropy_baseline,
    sweep_unknown,
)
from onering.config import ConfigError, RunConfig, ScenarioConfig, parse_config

__all__ = [
    "SGD",
    "Tensor",
    "backward",
    "OneRingModel",
    "forward",
    "init_model",
    "load_checkpoint",
    "predict",
    "runner_up",
    "save_checkpoint",
    "AadConfig",
    "RatioEstimate",
    "aad_loss",
    "estimate_ratio",
    "masked_logits",
    "source_loss",
    "weighted_entropy_loss",
    "Dataset",
    "DomainShiftSpec",
    "LabelSpaceSplit",
    "batches",
    "collapse_to_unknown",
    "generate_blobs",
    "load_feature_csv",
    "split_label_space",
    "MemoryBank",
    "TrainConfig",
    "adapt_target",
    "knn",
    "train_source",
    "update_bank",
    "MetricsReport",
    "SweepResult",
    "compute_metrics",
    "decision_region_svg",
    "entropy_baseline",
    "sweep_unknown",
    "ConfigError",
    "RunConfig",
    "ScenarioConfig",
    "parse_config",
]

__version__ = "0.1.0"
