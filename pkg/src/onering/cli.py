"""Command line entry point: config-driven pipelines with reproducible outputs."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path


from onering.config import ConfigError, RunConfig, parse_config
from onering.evaluation import (
    decision_region_svg,
    entropy_baseline,
    evaluate_model,
    sweep_unknown,
)
from onering.model import init_model, load_checkpoint, save_checkpoint
from onering.plots import save_adaptation_figure, save_baseline_figure, save_sweep_figure
from onering.scenario import DomainShiftSpec, LabelSpaceSplit, generate_blobs
from onering.trainer import adapt_target, train_source

log = logging.getLogger("onering")

_PIPELINE_MODES = ("train-source", "adapt", "evaluate", "sweep", "baseline")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onering",
        description="Open-set rejection training and source-free open-partial adaptation",
    )
    sub = parser.add_subparsers(dest="mode", required=True, metavar="mode")
    for mode in ("toy-demo", *_PIPELINE_MODES):
        p = sub.add_parser(mode, help=f"run the {mode} pipeline")
        p.add_argument("--config", required=mode != "toy-demo", help="JSON run config path")
        p.add_argument("--seed", type=int, help="override scenario and training seeds")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--variant", choices=("onering", "onering_plus"))
        p.add_argument("--ratio-mode", choices=("batch", "dataset"), dest="ratio_mode")
    return parser


def _load_config(args) -> RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError([f"config file not found: {path}"])
        cfg = parse_config(path.read_text())
    else:
        cfg = RunConfig()
    # flags > file > defaults; replace() re-runs dataclass validation
    train_overrides = {}
    if args.seed is not None:
        cfg.scenario = replace(cfg.scenario, seed=args.seed)
        train_overrides["seed"] = args.seed
    if args.variant:
        train_overrides["variant"] = args.variant
    if args.ratio_mode:
        train_overrides["ratio_mode"] = args.ratio_mode
    if train_overrides:
        cfg.train = replace(cfg.train, **train_overrides)
    if args.out:
        cfg.eval = replace(cfg.eval, out_dir=args.out)
    cfg.mode = args.mode
    if args.mode in _PIPELINE_MODES and cfg.scenario.n_source_private < 1:
        raise ConfigError(
            [f"scenario: mode {args.mode} needs n_source_private >= 1 (open-partial split)"]
        )
    return cfg


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_jsonl(path: Path, records) -> None:
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))


def _resolve_checkpoint(cfg: RunConfig, out: Path, candidates) -> Path:
    if cfg.eval.checkpoint:
        path = Path(cfg.eval.checkpoint)
        if not path.is_file():
            raise ConfigError([f"eval.checkpoint not found: {path}"])
        return path
    for name in candidates:
        path = out / name
        if path.is_file():
            return path
    raise ConfigError(
        [f"no checkpoint found under {out} (looked for {', '.join(candidates)}); "
         "set eval.checkpoint or run train-source first"]
    )


def cmd_train_source(cfg: RunConfig, out: Path) -> int:
    split, source, target = cfg.scenario.build()
    model = cfg.train.build_model(source.dim, split.n_known)
    records = train_source(model, source, cfg.train)
    report = evaluate_model(model, target, known_classes=split.shared)
    save_checkpoint(model, out / "model_source.ckpt")
    _write_jsonl(out / "source_log.jsonl", records)
    _write_json(out / "metrics.json", report.to_json_dict())
    print(f"H={report.h:.4f}")
    return 0


def cmd_adapt(cfg: RunConfig, out: Path) -> int:
    ckpt = _resolve_checkpoint(cfg, out, ("model_source.ckpt",))
    model = load_checkpoint(ckpt)
    split, _, target = cfg.scenario.build()
    records = adapt_target(model, target, cfg.train)
    report = evaluate_model(model, target, known_classes=split.shared)
    save_checkpoint(model, out / "model_adapted.ckpt")
    _write_jsonl(out / "adapt_log.jsonl", records)
    _write_json(out / "metrics.json", report.to_json_dict())
    save_adaptation_figure(records, out / "adapt_history.png")
    print(f"H={report.h:.4f}")
    return 0


def cmd_evaluate(cfg: RunConfig, out: Path) -> int:
    ckpt = _resolve_checkpoint(cfg, out, ("model_adapted.ckpt", "model_source.ckpt"))
    model = load_checkpoint(ckpt)
    split, _, target = cfg.scenario.build()
    report = evaluate_model(model, target, known_classes=split.shared)
    _write_json(out / "metrics.json", report.to_json_dict())
    print(f"H={report.h:.4f}")
    return 0


def cmd_toy_demo(cfg: RunConfig, out: Path) -> int:
    split = LabelSpaceSplit(shared=(0, 1, 2), source_private=(), target_private=(3,))
    source, target = generate_blobs(
        split,
        per_class=cfg.scenario.per_class,
        dim=2,
        cluster_std=cfg.scenario.cluster_std,
        shift=DomainShiftSpec(),
        seed=cfg.scenario.seed,
    )
    plain_cfg = replace(cfg.train, lambda_second_ce=0.0, two_phase=False)
    plain = init_model(2, split.n_known, seed=cfg.train.seed, include_unknown=False)
    train_source(plain, source, plain_cfg)
    ring = init_model(2, split.n_known, seed=cfg.train.seed)
    train_source(ring, source, cfg.train)

    margin = 3.0 * cfg.scenario.cluster_std
    lo = target.samples.min(axis=0) - margin
    hi = target.samples.max(axis=0) + margin
    bounds = (lo[0], lo[1], hi[0], hi[1])
    for model, name in ((plain, "toy_regions_plain.svg"), (ring, "toy_regions_onering.svg")):
        svg = decision_region_svg(model, bounds, resolution=80, overlay=target,
                                  seed=cfg.scenario.seed)
        (out / name).write_text(svg)

    plain_report = evaluate_model(plain, target, known_classes=split.shared)
    ring_report = evaluate_model(ring, target, known_classes=split.shared)
    _write_json(
        out / "toy_metrics.json",
        {"plain": plain_report.to_json_dict(), "onering": ring_report.to_json_dict()},
    )
    print(f"H={ring_report.h:.4f}")
    return 0


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    result = sweep_unknown(cfg.scenario, cfg.eval.sweep_counts, cfg.train)
    (out / "sweep.csv").write_text(result.to_csv_text())
    save_sweep_figure(result, out / "sweep.png")
    for count, h, _, _ in result.rows:
        print(f"n_unknown={count} H={h:.4f}")
    return 0


def cmd_baseline(cfg: RunConfig, out: Path) -> int:
    split, source, target = cfg.scenario.build()
    plain = init_model(source.dim, split.n_known, seed=cfg.train.seed, include_unknown=False)
    train_source(plain, source, replace(cfg.train, lambda_second_ce=0.0, two_phase=False))
    ring = init_model(source.dim, split.n_known, seed=cfg.train.seed)
    train_source(ring, source, cfg.train)

    results = entropy_baseline(plain, target, cfg.eval.threshold_grid, known_classes=split.shared)
    ring_report = evaluate_model(ring, target, known_classes=split.shared)
    best_t, best_report = max(results, key=lambda tr: tr[1].h)

    lines = ["threshold,os_star,unk,h"]
    lines += [f"{t:.6f},{r.os_star:.6f},{r.unk:.6f},{r.h:.6f}" for t, r in results]
    (out / "baseline.csv").write_text("\n".join(lines) + "\n")
    _write_json(
        out / "baseline.json",
        {
            "best_threshold": best_t,
            "best_h": best_report.h,
            "onering_s_h": ring_report.h,
        },
    )
    save_baseline_figure(results, ring_report.h, out / "baseline.png")
    print(f"best_baseline_H={best_report.h:.4f} onering_s_H={ring_report.h:.4f}")
    return 0


_COMMANDS = {
    "toy-demo": cmd_toy_demo,
    "train-source": cmd_train_source,
    "adapt": cmd_adapt,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    level = logging.DEBUG if os.environ.get("ONERING_LOG") == "debug" else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        out = Path(cfg.eval.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.mode](cfg, out)
    except ConfigError as err:
        for line in err.problems:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure, distinct from usage errors
        log.error("%s", err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
