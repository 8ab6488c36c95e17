"""Strict JSON run configuration: unknown keys are errors, every problem is
reported at once, defaults match the README table."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from onering.objectives import AadConfig
from onering.scenario import ScenarioConfig
from onering.trainer import TrainConfig

MODES = ("toy-demo", "train-source", "adapt", "evaluate", "sweep", "baseline")


class ConfigError(Exception):
    """One or more configuration problems; str() lists all of them."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass
class EvalConfig:
    threshold_grid: list[float] = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 10)])
    sweep_counts: list[int] = field(default_factory=lambda: [2, 4, 8])
    out_dir: str = "runs"
    checkpoint: str | None = None


@dataclass
class RunConfig:
    mode: str | None = None
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


_SCENARIO_KEYS = {f.name for f in fields(ScenarioConfig)}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_EVAL_KEYS = {f.name for f in fields(EvalConfig)}
_AAD_KEYS = {f.name for f in fields(AadConfig)}
_TOP_KEYS = {"mode", "scenario", "train", "eval"}


def _check_keys(block: dict, allowed: set[str], where: str, problems: list[str]) -> dict:
    if not isinstance(block, dict):
        problems.append(f"{where}: expected an object, got {type(block).__name__}")
        return {}
    for key in block:
        if key not in allowed:
            problems.append(f"{where}: unknown key {key!r} (allowed: {', '.join(sorted(allowed))})")
    return {k: v for k, v in block.items() if k in allowed}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run config; raises ConfigError listing every
    problem found."""
    problems: list[str] = []
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError([f"invalid JSON: {err}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])

    top = _check_keys(raw, _TOP_KEYS, "config", problems)
    mode = top.get("mode")
    if mode is not None and mode not in MODES:
        problems.append(f"mode: unknown mode {mode!r} (valid modes: {', '.join(MODES)})")

    scenario_kwargs = _check_keys(top.get("scenario", {}), _SCENARIO_KEYS, "scenario", problems)
    train_kwargs = _check_keys(top.get("train", {}), _TRAIN_KEYS, "train", problems)
    eval_kwargs = _check_keys(top.get("eval", {}), _EVAL_KEYS, "eval", problems)
    if "aad" in train_kwargs:
        aad_kwargs = _check_keys(train_kwargs.pop("aad"), _AAD_KEYS, "train.aad", problems)
        try:
            train_kwargs["aad"] = AadConfig(**aad_kwargs)
        except (TypeError, ValueError) as err:
            problems.append(f"train.aad: {err}")

    scenario = train = None
    try:
        scenario = ScenarioConfig(**scenario_kwargs)
        _validate_scenario(scenario, problems)
    except (TypeError, ValueError) as err:
        problems.append(f"scenario: {err}")
    try:
        train = TrainConfig(**train_kwargs)
    except (TypeError, ValueError) as err:
        problems.append(f"train: {err}")
    try:
        eval_cfg = EvalConfig(**eval_kwargs)
        _validate_eval(eval_cfg, problems)
    except (TypeError, ValueError) as err:
        problems.append(f"eval: {err}")
        eval_cfg = EvalConfig()

    if problems:
        raise ConfigError(problems)
    return RunConfig(mode=mode, scenario=scenario, train=train, eval=eval_cfg)


def _validate_scenario(s: ScenarioConfig, problems: list[str]) -> None:
    if s.n_shared < 1:
        problems.append(f"scenario: n_shared must be >= 1, got {s.n_shared}")
    if s.n_source_private < 0:
        problems.append(f"scenario: n_source_private must be >= 0, got {s.n_source_private}")
    if s.total_classes <= s.n_shared + s.n_source_private:
        problems.append(
            "scenario: total_classes must exceed n_shared + n_source_private "
            f"({s.total_classes} <= {s.n_shared} + {s.n_source_private})"
        )
    if s.per_class < 1:
        problems.append(f"scenario: per_class must be >= 1, got {s.per_class}")
    if s.dim < 2:
        problems.append(f"scenario: dim must be >= 2, got {s.dim}")
    if s.cluster_std <= 0:
        problems.append(f"scenario: cluster_std must be positive, got {s.cluster_std}")
    if s.noise_scale <= 0:
        problems.append(f"scenario: noise_scale must be positive, got {s.noise_scale}")
    if s.translation is not None and len(s.translation) != s.dim:
        problems.append(
            f"scenario: translation has {len(s.translation)} entries, expected dim={s.dim}"
        )
    if bool(s.source_csv) != bool(s.target_csv):
        problems.append("scenario: source_csv and target_csv must be given together")


def _validate_eval(e: EvalConfig, problems: list[str]) -> None:
    if not e.threshold_grid:
        problems.append("eval: threshold_grid must not be empty")
    elif any(not 0.0 <= float(t) <= 1.0 for t in e.threshold_grid):
        problems.append("eval: thresholds must lie in [0, 1]")
    if not e.sweep_counts:
        problems.append("eval: sweep_counts must not be empty")
    elif any(int(c) < 1 for c in e.sweep_counts):
        problems.append("eval: sweep_counts must be positive")
