"""Epoch loop: on-the-fly augmentation, featurization, Adam or Adam+GAM steps."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..augment import AugmentContext, AugmentPolicy, PRESETS, RirBank, apply_policy, mixup, utterance_rng
from ..diffnet import MLP, Batch, ModelSpec, NumericError, featurize, one_hot
from ..scoring import ScoreSet, eer
from ..waveio import DatasetManifest, Waveform, fit_length, read_wav
from .core import (ETA_0, ETA_MIN, AdamState, GamConfig, adam_step, cosine_lr, early_stop,
                   estimate_flatness, gam_step)

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "train_loss", "dev_loss", "dev_eer", "lr")


class TrainingError(RuntimeError):
    pass


@dataclass
class Dataset:
    trial_ids: list[str]
    waves: list[Waveform]
    bonafide: np.ndarray
    speakers: list[str]

    def __len__(self) -> int:
        return len(self.trial_ids)

    @classmethod
    def load(cls, manifest: DatasetManifest, n: int) -> "Dataset":
        waves = [fit_length(read_wav(manifest.resolve(e)), n) for e in manifest]
        return cls([e.trial_id for e in manifest], waves,
                   np.array([e.is_bonafide for e in manifest], dtype=bool),
                   [e.speaker_id for e in manifest])


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    n_bins: int = 64
    model: ModelSpec = ModelSpec()
    policy: AugmentPolicy = PRESETS["none"]
    mixup: bool = False
    mixup_sigma: float = 1.0
    optimizer: str = "adam"  # "adam" | "adam+gam"
    gam_rho: float | None = None  # None -> 0.05 * (1 + ||theta_0||)
    gam_alpha: float = 0.3
    gam_xi: float = 1e-12
    gam_rho_decay: bool = False
    batch_size: int = 32
    eta0: float = ETA_0
    eta_min: float = ETA_MIN
    max_epochs: int = 100
    patience: int = 10
    flatness_probes: int = 0
    flatness_rho: float = 0.05

    def __post_init__(self):
        if self.optimizer not in ("adam", "adam+gam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.batch_size < 1 or self.max_epochs < 0 or self.patience < 1:
            raise ValueError("batch_size >= 1, max_epochs >= 0, patience >= 1 required")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_loss: float
    dev_eer: float
    lr: float
    flatness: float | None = None

    def tsv(self) -> str:
        cols = [str(self.epoch), repr(self.train_loss), repr(self.dev_loss),
                repr(self.dev_eer), repr(self.lr)]
        if self.flatness is not None:
            cols.append(repr(self.flatness))
        return "\t".join(cols)


@dataclass
class TrainResult:
    theta: np.ndarray
    spec: ModelSpec
    records: list[EpochRecord] = field(default_factory=list)
    header: dict = field(default_factory=dict)
    best_epoch: int | None = None

    def log_text(self) -> str:
        lines = ["# gamspoof training log"]
        lines += [f"# {k}={v}" for k, v in self.header.items()]
        cols = list(LOG_COLUMNS) + (["flatness"] if any(r.flatness is not None for r in self.records) else [])
        lines.append("\t".join(cols))
        lines += [r.tsv() for r in self.records]
        return "\n".join(lines) + "\n"


def featurize_all(waves: Sequence[Waveform], n_bins: int) -> np.ndarray:
    return np.stack([featurize(w, n_bins) for w in waves])


def _partner_sampler(data: Dataset):
    groups: dict[tuple, list[int]] = {}
    for i, (spk, b) in enumerate(zip(data.speakers, data.bonafide)):
        groups.setdefault((spk, bool(b)), []).append(i)

    def for_index(i: int):
        pool = [j for j in groups[(data.speakers[i], bool(data.bonafide[i]))] if j != i]
        if not pool:
            return None
        return lambda rng: data.waves[pool[int(rng.integers(len(pool)))]]
    return for_index


def train(cfg: TrainConfig, train_set: Dataset, dev_set: Dataset,
          rir_bank: RirBank | None = None, theta0: np.ndarray | None = None) -> TrainResult:
    if len(train_set) == 0 or len(dev_set) == 0:
        raise TrainingError("train and dev sets must be non-empty")
    spec = cfg.model
    if spec.widths[0] != cfg.n_bins:
        spec = ModelSpec((cfg.n_bins, *spec.widths[1:]), spec.leaky_slope)
    model = MLP(spec)
    theta = model.init(utterance_rng(cfg.seed, 0x1A17)) if theta0 is None else np.array(theta0, dtype=np.float64)

    header = {"seed": cfg.seed, "optimizer": cfg.optimizer, "model": "-".join(map(str, spec.widths)),
              "policy": _describe_policy(cfg.policy), "mixup": cfg.mixup,
              "batch_size": cfg.batch_size, "eta0": repr(cfg.eta0), "eta_min": repr(cfg.eta_min),
              "max_epochs": cfg.max_epochs, "patience": cfg.patience}
    gam = None
    if cfg.optimizer == "adam+gam":
        rho = cfg.gam_rho if cfg.gam_rho is not None else 0.05 * (1.0 + float(np.linalg.norm(theta)))
        gam = GamConfig(rho=rho, alpha=cfg.gam_alpha, xi=cfg.gam_xi, batch_size=cfg.batch_size,
                        rho_decay=cfg.gam_rho_decay)
        header.update(gam_rho=repr(gam.rho), gam_alpha=repr(gam.alpha), gam_xi=repr(gam.xi),
                      gam_rho_decay=gam.rho_decay,
                      gam_path="combined direction fed through Adam moments")
    if cfg.flatness_probes:
        header.update(flatness_rho=repr(cfg.flatness_rho), flatness_probes=cfg.flatness_probes)

    result = TrainResult(theta.copy(), spec, [], header)
    if cfg.max_epochs == 0:
        return result

    dev_x = featurize_all(dev_set.waves, cfg.n_bins)
    dev_batch = Batch(dev_x, one_hot(dev_set.bonafide))
    partners = _partner_sampler(train_set) if "amplitude" in cfg.policy.kinds else None

    n = len(train_set)
    steps_per_epoch = -(-n // cfg.batch_size)
    total = cfg.max_epochs * steps_per_epoch
    adam = AdamState.zeros(model.n_params)
    step = 0
    dev_hist: list[float] = []
    best = (np.inf, theta.copy(), None)
    lr = cfg.eta0

    for epoch in range(1, cfg.max_epochs + 1):
        order = utterance_rng(cfg.seed, epoch, 0x0DE5).permutation(n)
        losses = []
        for b_idx, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            waves, labels = [], []
            for i in idx:
                ctx = AugmentContext(rir_bank, partners(i) if partners else None)
                waves.append(apply_policy(cfg.policy, train_set.waves[i],
                                          utterance_rng(cfg.seed, epoch, int(i)), ctx))
                labels.append(one_hot([train_set.bonafide[i]])[0])
            if cfg.mixup and len(idx) > 1:
                mrng = utterance_rng(cfg.seed, epoch, n + b_idx)
                perm = mrng.permutation(len(idx))
                mixed = [mixup(waves[j], labels[j], waves[perm[j]], labels[perm[j]], mrng,
                               sigma=cfg.mixup_sigma) for j in range(len(idx))]
                waves, labels = [m[0] for m in mixed], [m[1] for m in mixed]
            batch = Batch(featurize_all(waves, cfg.n_bins), np.stack(labels))
            lr = cosine_lr(step, total, cfg.eta0, cfg.eta_min)
            try:
                if gam is None:
                    loss, g = model.loss_and_grad(theta, batch)
                    theta, adam = adam_step(adam, theta, g, lr)
                else:
                    loss = model.loss(theta, batch)
                    rho_t = gam.rho * (1.0 - step / total) if gam.rho_decay else gam.rho
                    theta, adam, _ = gam_step(model, theta, batch, gam, lr, adam, rho=rho_t)
            except NumericError as exc:
                raise TrainingError(f"epoch {epoch} step {b_idx}: {exc}") from exc
            losses.append(loss)
            step += 1

        dev_loss = model.loss(theta, dev_batch)
        scores = model.scores(theta, dev_x)
        dev_eer = eer(ScoreSet.from_arrays(scores[dev_set.bonafide], scores[~dev_set.bonafide]))[0]
        flat = None
        if cfg.flatness_probes:
            flat = estimate_flatness(model, theta, dev_batch, cfg.flatness_rho, cfg.flatness_probes,
                                     utterance_rng(cfg.seed, epoch, 0xF1A7)).value
        rec = EpochRecord(epoch, float(np.mean(losses)), dev_loss, dev_eer, lr, flat)
        result.records.append(rec)
        log.info("epoch %d train %.4f dev %.4f eer %.4f", epoch, rec.train_loss, dev_loss, dev_eer)
        dev_hist.append(dev_loss)
        if dev_loss < best[0]:
            best = (dev_loss, theta.copy(), epoch)
        if early_stop(dev_hist, cfg.patience):
            break

    result.theta, result.best_epoch = best[1], best[2]
    result.header["best_epoch"] = best[2]
    return result


def _describe_policy(p: AugmentPolicy) -> str:
    if p.policy == "none":
        return "none"
    if p.policy == "cascade":
        return "cascade(" + ",".join(_describe_policy(s) for s in p.stages) + ")"
    if p.policy == "single":
        return p.stages[0].kind
    return "random{" + ",".join(s.kind for s in p.stages) + "}"


def write_log(result: TrainResult, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(result.log_text(), encoding="utf-8")
