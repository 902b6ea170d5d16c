"""Disentangling fingerprint network: encoders, decoder, heads, losses.

Three siblings of one convolutional encoder split a frame into a
device-fingerprint representation and a domain-specific one; a classifier
reads devices from the fingerprint half, a discriminator behind a gradient
reversal layer pushes domain information out of it, and a decoder
reconstructs the frame from the combination of both halves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ValidationError

FRAME_SHAPE = (2, 1024)


@dataclass(frozen=True)
class EncoderSpec:
    latent_dim: int = 256
    widths: tuple = (32, 32, 64, 64, 128, 128)
    kernel: tuple = (1, 7)
    negative_slope: float = 0.2
    input_len: int = 1024

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ValidationError("latent_dim", "must be >= 1")
        if not self.widths:
            raise ValidationError("widths", "need at least one block")
        if self.input_len % (1 << len(self.widths)) != 0:
            raise ValidationError(
                "widths",
                f"input_len {self.input_len} must be divisible by "
                f"2**{len(self.widths)} (one halving per block)",
            )

    @property
    def reduced_len(self) -> int:
        return self.input_len >> len(self.widths)

    @property
    def flat_dim(self) -> int:
        return self.widths[-1] * 2 * self.reduced_len


class _GradientReversal(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, lam):
        ctx.lam = lam
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output):
        return -ctx.lam * grad_output, None


def grl(x: torch.Tensor, lam: float) -> torch.Tensor:
    """Identity forward; multiplies the upstream gradient by -lam backward."""
    if lam < 0:
        raise ValidationError("lam", "must be >= 0")
    return _GradientReversal.apply(x, lam)


def lambda_schedule(progress: float) -> float:
    """Adversarial weight ramp 2/(1+exp(-10 p)) - 1 over progress p in [0,1]."""
    p = min(max(progress, 0.0), 1.0)
    return 2.0 / (1.0 + torch.exp(torch.tensor(-10.0 * p)).item()) - 1.0


def _conv_block(c_in: int, c_out: int, spec: EncoderSpec) -> list[nn.Module]:
    pad = (spec.kernel[0] // 2, spec.kernel[1] // 2)
    return [
        nn.Conv2d(c_in, c_out, spec.kernel, padding=pad),
        nn.BatchNorm2d(c_out),
        nn.LeakyReLU(spec.negative_slope),
    ]


class Encoder(nn.Module):
    """Conv blocks (conv, batchnorm, leaky ReLU, max pool) then one FC."""

    def __init__(self, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        layers: list[nn.Module] = []
        c_in = 1
        for c_out in spec.widths:
            layers += _conv_block(c_in, c_out, spec)
            layers.append(nn.MaxPool2d((1, 2)))
            c_in = c_out
        self.blocks = nn.Sequential(*layers)
        self.fc = nn.Linear(spec.flat_dim, spec.latent_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x.unsqueeze(1)
        return self.fc(self.blocks(x).flatten(1))


class Decoder(nn.Module):
    """Mirror of the encoder: FC, then upsample+conv blocks, linear conv out."""

    def __init__(self, spec: EncoderSpec, in_dim: int):
        super().__init__()
        self.spec = spec
        self.fc = nn.Linear(in_dim, spec.flat_dim)
        widths = tuple(reversed(spec.widths))
        layers: list[nn.Module] = []
        c_in = widths[0]
        for c_out in widths:
            layers.append(nn.Upsample(scale_factor=(1, 2), mode="nearest"))
            layers += _conv_block(c_in, c_out, spec)
            c_in = c_out
        pad = (spec.kernel[0] // 2, spec.kernel[1] // 2)
        layers.append(nn.Conv2d(c_in, 1, spec.kernel, padding=pad))
        self.blocks = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        x = self.fc(z).view(-1, self.spec.widths[-1], 2, self.spec.reduced_len)
        return self.blocks(x).squeeze(1)


class Classifier(nn.Module):
    """Three fully-connected layers; emits device logits."""

    def __init__(self, latent_dim: int, n_devices: int, negative_slope: float = 0.2):
        super().__init__()
        h1, h2 = max(latent_dim // 2, n_devices), max(latent_dim // 4, n_devices)
        self.net = nn.Sequential(
            nn.Linear(latent_dim, h1),
            nn.LeakyReLU(negative_slope),
            nn.Linear(h1, h2),
            nn.LeakyReLU(negative_slope),
            nn.Linear(h2, n_devices),
        )

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return self.net(h)


class Discriminator(nn.Module):
    """Two fully-connected layers; emits source/target logits.

    The hidden layer is wide (2x the latent size): the reversed gradient it
    sends back is the only force aligning the two domains, and a narrow head
    produces pressure too weak to move the encoder.
    """

    def __init__(self, latent_dim: int, negative_slope: float = 0.2):
        super().__init__()
        hidden = max(2 * latent_dim, 16)
        self.net = nn.Sequential(
            nn.Linear(latent_dim, hidden),
            nn.LeakyReLU(negative_slope),
            nn.Linear(hidden, 2),
        )

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return self.net(h)


@dataclass
class LatentBatch:
    """Row-stacked per-frame representations for the difference loss."""

    h_f_src: torch.Tensor
    h_f_tgt: torch.Tensor
    h_s: torch.Tensor
    h_t: torch.Tensor


@dataclass
class AdlIdOutput:
    class_logits: torch.Tensor
    domain_logits: torch.Tensor
    domain_labels: torch.Tensor
    recon_src: torch.Tensor
    recon_tgt: torch.Tensor
    latents: LatentBatch


class AdlIdModel(nn.Module):
    def __init__(
        self,
        n_devices: int,
        encoder: EncoderSpec | None = None,
        combine: str = "concat",
        representation: str = "iq",
        alpha: float = 0.1,
        beta: float = 0.075,
        gamma: float = 0.25,
    ):
        super().__init__()
        if combine not in ("concat", "sum"):
            raise ValidationError("combine", "must be 'concat' or 'sum'")
        spec = encoder or EncoderSpec()
        self.spec = spec
        self.n_devices = n_devices
        self.combine = combine
        self.representation = representation
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.fingerprint_encoder = Encoder(spec)
        self.source_encoder = Encoder(spec)
        self.target_encoder = Encoder(spec)
        decoder_in = 2 * spec.latent_dim if combine == "concat" else spec.latent_dim
        self.decoder = Decoder(spec, decoder_in)
        self.classifier = Classifier(spec.latent_dim, n_devices, spec.negative_slope)
        self.discriminator = Discriminator(spec.latent_dim, spec.negative_slope)

    def _combine(self, h_f: torch.Tensor, h_d: torch.Tensor) -> torch.Tensor:
        if self.combine == "concat":
            return torch.cat([h_f, h_d], dim=1)
        return h_f + h_d

    def forward(
        self, x_src: torch.Tensor, x_tgt: torch.Tensor, grl_lambda: float = 0.0
    ) -> AdlIdOutput:
        """Source and target halves must be the same size.

        The classifier sees only the source fingerprint representation; the
        discriminator sees both fingerprint representations through the
        reversal layer with labels 0 (source) then 1 (target).
        """
        if x_src.shape[0] != x_tgt.shape[0]:
            raise ValidationError(
                "x_tgt", "source and target batches must be the same size"
            )
        # One union batch through the fingerprint encoder: its normalization
        # statistics must be shared across domains, otherwise train-time
        # batch norm whitens each domain separately and hides the very shift
        # the discriminator is there to detect.
        h_f = self.fingerprint_encoder(torch.cat([x_src, x_tgt], dim=0))
        h_f_src, h_f_tgt = h_f[: x_src.shape[0]], h_f[x_src.shape[0] :]
        h_s = self.source_encoder(x_src)
        h_t = self.target_encoder(x_tgt)

        class_logits = self.classifier(h_f_src)
        domain_logits = self.discriminator(
            grl(torch.cat([h_f_src, h_f_tgt], dim=0), grl_lambda)
        )
        domain_labels = torch.cat(
            [
                torch.zeros(x_src.shape[0], dtype=torch.long, device=x_src.device),
                torch.ones(x_tgt.shape[0], dtype=torch.long, device=x_tgt.device),
            ]
        )
        recon_src = self.decoder(self._combine(h_f_src, h_s))
        recon_tgt = self.decoder(self._combine(h_f_tgt, h_t))
        return AdlIdOutput(
            class_logits=class_logits,
            domain_logits=domain_logits,
            domain_labels=domain_labels,
            recon_src=recon_src,
            recon_tgt=recon_tgt,
            latents=LatentBatch(h_f_src, h_f_tgt, h_s, h_t),
        )

    def classify(self, x: torch.Tensor) -> torch.Tensor:
        """Device logits from the fingerprint path alone (inference)."""
        return self.classifier(self.fingerprint_encoder(x))


class BaselineCnn(nn.Module):
    """Same encoder topology with the 3-FC classifier head, nothing else."""

    def __init__(
        self,
        n_devices: int,
        encoder: EncoderSpec | None = None,
        representation: str = "iq",
    ):
        super().__init__()
        spec = encoder or EncoderSpec()
        self.spec = spec
        self.n_devices = n_devices
        self.representation = representation
        self.encoder = Encoder(spec)
        self.classifier = Classifier(spec.latent_dim, n_devices, spec.negative_slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.encoder(x))

    def classify(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward(x)


def loss_class(logits: torch.Tensor, device_labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(logits, device_labels)


def loss_domain(domain_logits: torch.Tensor, domain_labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(domain_logits, domain_labels)


def loss_difference(
    h_f: torch.Tensor, h_d: torch.Tensor, center: bool = False
) -> torch.Tensor:
    """Squared Frobenius norm of H_f^T H_d; zero when the subspaces are orthogonal.

    center=True removes each latent coordinate's batch mean first, which
    turns the product into a cross-covariance; the default keeps the raw
    matrices.
    """
    if h_f.shape != h_d.shape or h_f.dim() != 2:
        raise ValidationError("h_d", "expected two equal batch x latent matrices")
    if center:
        h_f = h_f - h_f.mean(dim=0, keepdim=True)
        h_d = h_d - h_d.mean(dim=0, keepdim=True)
    product = h_f.transpose(0, 1) @ h_d
    return torch.sum(product * product)


def loss_difference_total(latents: LatentBatch) -> torch.Tensor:
    return loss_difference(latents.h_f_src, latents.h_s) + loss_difference(
        latents.h_f_tgt, latents.h_t
    )


def loss_reconstruct_simse(x: torch.Tensor, x_hat: torch.Tensor) -> torch.Tensor:
    """Scale-invariant MSE: variance of the residual, so a uniform offset is free.

    Accumulated in float64 regardless of input dtype; in float32 the two
    nearly-cancelling terms keep a ~1e-6 floor that would mask the
    offset-invariance identity.
    """
    if x.shape != x_hat.shape:
        raise ValidationError("x_hat", "shape mismatch with x")
    d = (x - x_hat).reshape(-1).double()
    return d.pow(2).mean() - d.mean().pow(2)


def total_loss(components, alpha: float, beta: float, gamma: float) -> torch.Tensor:
    """components = (class, reconstruction, difference, domain)."""
    l_class, l_rec, l_diff, l_dom = components
    return l_class + alpha * l_rec + beta * l_diff + gamma * l_dom


def save_checkpoint(model: nn.Module, path, extra: dict | None = None) -> tuple[str, str]:
    """state_dict + JSON manifest describing how to rebuild the model."""
    manifest = {
        "kind": "adlid" if isinstance(model, AdlIdModel) else "baseline",
        "n_devices": model.n_devices,
        "latent_dim": model.spec.latent_dim,
        "widths": list(model.spec.widths),
        "kernel": list(model.spec.kernel),
        "negative_slope": model.spec.negative_slope,
        "input_len": model.spec.input_len,
        "representation": model.representation,
    }
    if isinstance(model, AdlIdModel):
        manifest["combine"] = model.combine
        manifest["alpha"] = model.alpha
        manifest["beta"] = model.beta
        manifest["gamma"] = model.gamma
    manifest.update(extra or {})
    path = str(path)
    torch.save(model.state_dict(), path)
    with open(path + ".json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path, path + ".json"


def load_checkpoint(path) -> tuple[nn.Module, dict]:
    path = str(path)
    with open(path + ".json") as fh:
        manifest = json.load(fh)
    spec = EncoderSpec(
        latent_dim=manifest["latent_dim"],
        widths=tuple(manifest["widths"]),
        kernel=tuple(manifest["kernel"]),
        negative_slope=manifest["negative_slope"],
        input_len=manifest["input_len"],
    )
    if manifest["kind"] == "adlid":
        model: nn.Module = AdlIdModel(
            manifest["n_devices"],
            encoder=spec,
            combine=manifest.get("combine", "concat"),
            representation=manifest["representation"],
            alpha=manifest.get("alpha", 0.1),
            beta=manifest.get("beta", 0.075),
            gamma=manifest.get("gamma", 0.25),
        )
    else:
        model = BaselineCnn(
            manifest["n_devices"], encoder=spec, representation=manifest["representation"]
        )
    model.load_state_dict(torch.load(path, weights_only=True))
    model.eval()
    return model, manifest
