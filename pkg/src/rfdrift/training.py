"""Training loops for the disentangling model and the plain CNN baseline."""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import TrainingDivergedError, ValidationError
from .framing import FrameDataset
from .net import (
    AdlIdModel,
    LatentBatch,
    lambda_schedule,
    loss_class,
    loss_difference_total,
    loss_domain,
    loss_reconstruct_simse,
    total_loss,
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    warmup_steps: int | None = None
    warmup_fraction: float = 0.10
    learning_rate: float = 1e-3
    seed: int = 0
    deterministic: bool = True
    constant_lambda: float | None = None
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs", "epochs and batch_size must be >= 1")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValidationError("warmup_fraction", "must be in [0, 1)")


@dataclass
class TrainHistory:
    steps: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_val_accuracy: float = 0.0
    warmup_steps: int = 0
    total_steps: int = 0


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    per_device_accuracy: np.ndarray
    confusion: np.ndarray


def _setup_torch(cfg: TrainConfig) -> torch.device:
    torch.manual_seed(cfg.seed)
    if cfg.deterministic:
        torch.use_deterministic_algorithms(True)
    return torch.device(cfg.device)


def _tensors(ds: FrameDataset, split: str, device: torch.device):
    frames, labels = ds.subset(split)
    if frames.shape[0] == 0:
        raise ValidationError("dataset", f"no frames in the {split} split")
    x = torch.from_numpy(np.ascontiguousarray(frames)).to(device)
    y = torch.from_numpy(np.ascontiguousarray(labels)).to(device)
    return x, y


def _resolve_warmup(cfg: TrainConfig, total_steps: int) -> int:
    warmup = (
        cfg.warmup_steps
        if cfg.warmup_steps is not None
        else round(cfg.warmup_fraction * total_steps)
    )
    if warmup >= total_steps:
        raise ValidationError(
            "warmup_steps", f"{warmup} must be < total steps {total_steps}"
        )
    return warmup


def _grad_norm(scalar: torch.Tensor, wrt: list) -> float:
    grads = torch.autograd.grad(scalar, wrt, retain_graph=True, allow_unused=True)
    total = 0.0
    for g in grads:
        if g is not None:
            total += float(g.pow(2).sum())
    return math.sqrt(total)


def _unit_rows(h: torch.Tensor) -> torch.Tensor:
    return h / (h.norm(dim=1, keepdim=True) + 1e-12)


def _normalized_difference(latents: LatentBatch, detach: bool) -> torch.Tensor:
    """Difference loss over unit-norm latent rows.

    The raw cross-product grows as the fourth power of the latent norm, so
    the optimizer could satisfy it by shrinking every representation; on
    unit rows the term is scale-invariant and bounded by the batch size,
    which keeps it commensurate with the other loss terms.
    """
    rows = [latents.h_f_src, latents.h_f_tgt, latents.h_s, latents.h_t]
    if detach:
        rows = [r.detach() for r in rows]
    return loss_difference_total(LatentBatch(*[_unit_rows(r) for r in rows]))


def train_adlid(
    source: FrameDataset, target: FrameDataset, model: AdlIdModel, cfg: TrainConfig
) -> tuple[AdlIdModel, TrainHistory]:
    """Adversarial training with a warm-up phase.

    Before the warm-up boundary only the classification and reconstruction
    terms are optimized; the difference and domain terms are not in the
    graph, so their recorded gradient norms are exactly zero. Afterwards the
    full weighted sum is optimized with the reversal strength ramped over
    the remaining steps. The returned model carries the weights of the best
    source-validation epoch among epochs that include adversarial updates:
    a warm-up snapshot has seen no domain alignment, so restoring one would
    hand back an unadapted model.
    """
    device = _setup_torch(cfg)
    model = model.to(device)
    x_src, y_src = _tensors(source, "train", device)
    x_tgt, _ = _tensors(target, "train", device)
    x_val, y_val = _tensors(source, "val", device)

    steps_per_epoch = x_src.shape[0] // cfg.batch_size
    if steps_per_epoch == 0:
        raise ValidationError(
            "batch_size", f"larger than the {x_src.shape[0]}-frame train split"
        )
    total_steps = cfg.epochs * steps_per_epoch
    warmup = _resolve_warmup(cfg, total_steps)
    history = TrainHistory(warmup_steps=warmup, total_steps=total_steps)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    best_state = copy.deepcopy(model.state_dict())
    step = 0

    for epoch in range(cfg.epochs):
        model.train()
        src_order = rng.permutation(x_src.shape[0])
        tgt_order = rng.permutation(x_tgt.shape[0])
        for b in range(steps_per_epoch):
            src_idx = src_order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            tgt_idx = (
                tgt_order[(b * cfg.batch_size + np.arange(cfg.batch_size)) % x_tgt.shape[0]]
            )
            xb_s, yb_s = x_src[src_idx], y_src[src_idx]
            xb_t = x_tgt[tgt_idx]

            in_warmup = step < warmup
            if in_warmup:
                lam = 0.0
            elif cfg.constant_lambda is not None:
                lam = cfg.constant_lambda
            else:
                lam = lambda_schedule((step - warmup) / max(1, total_steps - warmup))

            out = model(xb_s, xb_t, grl_lambda=lam)
            l_class = loss_class(out.class_logits, yb_s)
            l_rec = loss_reconstruct_simse(xb_s, out.recon_src) + loss_reconstruct_simse(
                xb_t, out.recon_tgt
            )
            latents = out.latents
            if in_warmup:
                loss = l_class + model.alpha * l_rec
                # Gated terms are outside the graph: their contribution is zero.
                l_diff = _normalized_difference(latents, detach=True)
                l_dom = loss_domain(out.domain_logits.detach(), out.domain_labels)
                beta_norm = 0.0
                gamma_norm = 0.0
            else:
                l_diff = _normalized_difference(latents, detach=False)
                l_dom = loss_domain(out.domain_logits, out.domain_labels)
                loss = total_loss(
                    (l_class, l_rec, l_diff, l_dom),
                    model.alpha,
                    model.beta,
                    model.gamma,
                )
                beta_norm = _grad_norm(
                    model.beta * l_diff,
                    [latents.h_f_src, latents.h_f_tgt, latents.h_s, latents.h_t],
                )
                gamma_norm = _grad_norm(
                    model.gamma * l_dom, [latents.h_f_src, latents.h_f_tgt]
                )

            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {float(loss.detach())} at step {step}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            history.steps.append(
                {
                    "step": step,
                    "L_Class": float(l_class.detach()),
                    "L_Rec": float(l_rec.detach()),
                    "L_Diff": float(l_diff.detach()),
                    "L_Dom": float(l_dom.detach()),
                    "L_total": float(loss.detach()),
                    "lambda": lam,
                    "beta_grad_norm": beta_norm,
                    "gamma_grad_norm": gamma_norm,
                }
            )
            step += 1

        val_acc = _split_accuracy(model, x_val, y_val)
        history.val_accuracy.append((epoch, val_acc))
        adapted = (epoch + 1) * steps_per_epoch > warmup
        if adapted and val_acc > history.best_val_accuracy:
            history.best_val_accuracy = val_acc
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.eval()
    return model, history


def train_baseline(
    source: FrameDataset, model, cfg: TrainConfig
) -> tuple[torch.nn.Module, TrainHistory]:
    """Cross-entropy-only training of the baseline classifier."""
    device = _setup_torch(cfg)
    model = model.to(device)
    x_src, y_src = _tensors(source, "train", device)
    x_val, y_val = _tensors(source, "val", device)

    steps_per_epoch = x_src.shape[0] // cfg.batch_size
    if steps_per_epoch == 0:
        raise ValidationError(
            "batch_size", f"larger than the {x_src.shape[0]}-frame train split"
        )
    history = TrainHistory(total_steps=cfg.epochs * steps_per_epoch)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    best_state = copy.deepcopy(model.state_dict())
    step = 0

    for epoch in range(cfg.epochs):
        model.train()
        order = rng.permutation(x_src.shape[0])
        for b in range(steps_per_epoch):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            logits = model(x_src[idx])
            loss = loss_class(logits, y_src[idx])
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {float(loss.detach())} at step {step}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            loss_val = float(loss.detach())
            history.steps.append(
                {
                    "step": step,
                    "L_Class": loss_val,
                    "L_Rec": 0.0,
                    "L_Diff": 0.0,
                    "L_Dom": 0.0,
                    "L_total": loss_val,
                    "lambda": 0.0,
                    "beta_grad_norm": 0.0,
                    "gamma_grad_norm": 0.0,
                }
            )
            step += 1

        val_acc = _split_accuracy(model, x_val, y_val)
        history.val_accuracy.append((epoch, val_acc))
        if val_acc > history.best_val_accuracy:
            history.best_val_accuracy = val_acc
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.eval()
    return model, history


def _split_accuracy(model, x: torch.Tensor, y: torch.Tensor) -> float:
    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, x.shape[0], 256):
            logits = model.classify(x[start : start + 256])
            correct += int((logits.argmax(dim=1) == y[start : start + 256]).sum())
    model.train()
    return correct / x.shape[0]


def evaluate(model, dataset: FrameDataset, split: str = "test") -> EvalResult:
    """Top-1 accuracy, per-device accuracy, and a confusion matrix."""
    if getattr(model, "representation", None) != dataset.representation:
        raise ValidationError(
            "representation",
            f"model expects {getattr(model, 'representation', None)!r} frames, "
            f"dataset holds {dataset.representation!r}",
        )
    frames, labels = dataset.subset(split)
    if frames.shape[0] == 0:
        raise ValidationError("split", f"no frames in split {split!r}")
    k = dataset.n_devices
    confusion = np.zeros((k, k), dtype=np.int64)
    model.eval()
    x = torch.from_numpy(np.ascontiguousarray(frames))
    with torch.no_grad():
        for start in range(0, x.shape[0], 256):
            logits = model.classify(x[start : start + 256])
            pred = logits.argmax(dim=1).numpy()
            for t, p in zip(labels[start : start + 256], pred):
                confusion[t, p] += 1
    per_device = np.zeros(k)
    row_sums = confusion.sum(axis=1)
    nonzero = row_sums > 0
    per_device[nonzero] = np.diag(confusion)[nonzero] / row_sums[nonzero]
    accuracy = float(np.trace(confusion)) / frames.shape[0]
    return EvalResult(
        accuracy=accuracy, per_device_accuracy=per_device, confusion=confusion
    )


def save_history_csv(history: TrainHistory, path) -> str:
    columns = [
        "step",
        "L_Class",
        "L_Rec",
        "L_Diff",
        "L_Dom",
        "L_total",
        "lambda",
        "beta_grad_norm",
        "gamma_grad_norm",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(history.steps)
    return str(path)
