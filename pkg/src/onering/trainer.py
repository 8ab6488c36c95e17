"""Source training (optionally two-phase) and source-free target adaptation.

adapt_target sees target data only; the classification head is frozen there
and only extractor parameters step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from onering.autodiff import SGD, backward, entropy
from onering.bank import MemoryBank, knn, knn_batch, update_bank  # noqa: F401 (re-export)
from onering.metrics import compute_metrics
from onering.model import OneRingModel, forward, predict, softmax_probs
from onering.objectives import (
    MODE_BATCH,
    MODE_DATASET,
    AadConfig,
    aad_loss,
    estimate_ratio,
    source_loss,
    weighted_entropy_loss,
)
from onering.scenario import Dataset, batches, collapse_to_unknown

log = logging.getLogger("onering")

VARIANT_ONERING = "onering"
VARIANT_ONERING_PLUS = "onering_plus"


@dataclass
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    epochs_source: int = 100
    epochs_adapt: int = 60
    bs: int = 64
    lambda_second_ce: float = 1.0
    two_phase: bool = False
    phase1_epochs: int = 0
    ratio_mode: str = MODE_BATCH
    variant: str = VARIANT_ONERING
    entropy_weighting: bool = True  # off reproduces the unweighted ablation
    adapt_lr: float | None = 0.0003  # None -> 0.1 * lr
    hidden: tuple[int, ...] = (64, 64)
    feature_dim: int = 32
    seed: int = 7
    aad: AadConfig = field(default_factory=AadConfig)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        problems = []
        if self.lr <= 0:
            problems.append(f"lr must be positive, got {self.lr}")
        if self.momentum < 0:
            problems.append(f"momentum must be nonnegative, got {self.momentum}")
        if self.bs < 1:
            problems.append(f"bs must be >= 1, got {self.bs}")
        if self.epochs_source < 0 or self.epochs_adapt < 0 or self.phase1_epochs < 0:
            problems.append("epoch counts must be nonnegative")
        if self.lambda_second_ce < 0:
            problems.append(f"lambda_second_ce must be >= 0, got {self.lambda_second_ce}")
        if self.ratio_mode not in (MODE_BATCH, MODE_DATASET):
            problems.append(f"ratio_mode must be one of batch|dataset, got {self.ratio_mode!r}")
        if self.variant not in (VARIANT_ONERING, VARIANT_ONERING_PLUS):
            problems.append(f"variant must be onering|onering_plus, got {self.variant!r}")
        if self.adapt_lr is not None and self.adapt_lr <= 0:
            problems.append(f"adapt_lr must be positive, got {self.adapt_lr}")
        if not self.hidden or any(h < 1 for h in self.hidden):
            problems.append(f"hidden widths must be positive, got {self.hidden}")
        if self.feature_dim < 1:
            problems.append(f"feature_dim must be >= 1, got {self.feature_dim}")
        if not self.entropy_weighting and self.variant == VARIANT_ONERING_PLUS:
            problems.append("entropy_weighting=False is defined for the onering variant only")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def effective_adapt_lr(self) -> float:
        return self.adapt_lr if self.adapt_lr is not None else 0.1 * self.lr

    def build_model(self, input_dim: int, n_known: int, include_unknown: bool = True):
        from onering.model import init_model

        return init_model(
            input_dim,
            n_known,
            hidden=self.hidden,
            feature_dim=self.feature_dim,
            seed=self.seed,
            include_unknown=include_unknown,
        )


def train_source(model: OneRingModel, source: Dataset, cfg: TrainConfig) -> list[dict]:
    """Optimize the dual-CE objective on labeled source data, in place.

    With two_phase, the first phase1_epochs use plain CE (lambda 0) and the
    rest add the second CE term. Returns one log record per epoch.
    """
    y_all = source.labels
    if y_all.size == 0:
        raise ValueError("empty source set")
    if y_all.min() < 0 or y_all.max() >= model.n_known:
        raise ValueError(f"source labels must lie in [0, {model.n_known})")
    opt = SGD(model.parameters, cfg.lr, cfg.momentum)
    records = []
    for epoch in range(cfg.epochs_source):
        lam = cfg.lambda_second_ce
        if cfg.two_phase and epoch < cfg.phase1_epochs:
            lam = 0.0
        loss_sum = 0.0
        for idx in batches(source, cfg.bs, cfg.seed, epoch):
            _, logits = forward(model, source.samples[idx])
            loss = source_loss(logits, y_all[idx], lam)
            backward(loss)
            opt.step()
            loss_sum += loss.item() * idx.size
        _, logits = forward(model, source.samples)
        acc = float((predict(logits) == y_all).mean())
        records.append(
            {"epoch": epoch, "loss": loss_sum / source.n, "lambda": lam, "accuracy": acc}
        )
        log.debug("source epoch %d loss %.4f acc %.4f", epoch, records[-1]["loss"], acc)
    return records


def _full_pass(model: OneRingModel, data: Dataset):
    feats, logits = forward(model, data.samples)
    return feats.data, logits.data


def adapt_target(model: OneRingModel, target: Dataset, cfg: TrainConfig) -> list[dict]:
    """Adapt the extractor to unlabeled target data, head frozen, in place.

    Target labels are read only to score the per-epoch log records; records
    carry None scores when the dataset is unlabeled (-1 labels).
    """
    if target.n == 0:
        raise ValueError("empty target set")
    if not model.include_unknown:
        raise ValueError("adaptation needs the unknown head dimension")
    unknown_index = model.unknown_index
    opt = SGD(model.extractor_params, cfg.effective_adapt_lr, cfg.momentum)

    bank = None
    if cfg.variant == VARIANT_ONERING_PLUS:
        if target.n < cfg.aad.k + 1:
            raise ValueError(f"target set of {target.n} cannot serve k={cfg.aad.k} neighbors")
        bank = MemoryBank(target.n, model.feature_dim, model.n_outputs)
        feats, logits = _full_pass(model, target)
        update_bank(bank, np.arange(target.n), feats, softmax_probs(logits))

    labeled = target.n > 0 and target.labels.min() >= 0
    truth = collapse_to_unknown(target.labels, model.n_known) if labeled else None
    _, logits_all = _full_pass(model, target)
    preds_all = predict(logits_all)

    records = []
    for epoch in range(cfg.epochs_adapt):
        epoch_ratio = None
        if cfg.ratio_mode == MODE_DATASET:
            epoch_ratio = estimate_ratio(
                None, unknown_index, MODE_DATASET, dataset_predictions=preds_all
            )
        loss_sum = 0.0
        for idx in batches(target, cfg.bs, cfg.seed, epoch):
            feats, logits = forward(model, target.samples[idx])
            if epoch_ratio is not None:
                ratio = epoch_ratio
            else:
                ratio = estimate_ratio(predict(logits.data), unknown_index)
            if not cfg.entropy_weighting:
                loss = entropy(logits)
            elif cfg.variant == VARIANT_ONERING_PLUS:
                bank.age()
                loss = aad_loss(feats, logits, bank, cfg.aad, ratio, indices=idx)
            else:
                loss = weighted_entropy_loss(logits, ratio)
            backward(loss)
            opt.step()
            model.head_w.grad = None
            model.head_b.grad = None
            if bank is not None:
                update_bank(bank, idx, feats.data, softmax_probs(logits.data))
            loss_sum += loss.item() * idx.size

        # one dataset-wide refresh per epoch: feeds the log and, in dataset
        # ratio mode, the next epoch's weights
        _, logits_all = _full_pass(model, target)
        preds_all = predict(logits_all)
        n_unknown = int((preds_all == unknown_index).sum())
        record = {
            "epoch": epoch,
            "loss": loss_sum / target.n,
            "n_known_hat": target.n - n_unknown,
            "n_unknown_hat": n_unknown,
            "os_star": None,
            "unk": None,
            "h": None,
        }
        if labeled:
            report = compute_metrics(preds_all, truth, model.n_known)
            record.update(os_star=report.os_star, unk=report.unk, h=report.h)
        records.append(record)
        log.debug(
            "adapt epoch %d loss %.4f n_unk %d h %s", epoch, record["loss"], n_unknown, record["h"]
        )
    return records
