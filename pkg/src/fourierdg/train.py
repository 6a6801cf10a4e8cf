"""Mini-batch adversarial training loop and checkpoint-based scoring.

One Adam optimizer updates every parameter; the min-max between encoder
and domain discriminator is carried entirely by the gradient reversal
record on the discriminator tape.  All randomness (init, shuffling,
dropout) flows from the seed through a counter-based RngState, so a fixed
seed reproduces checkpoints and logs byte for byte.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import fourier
from .data import GeneMatrix, SampleMeta, align_genes, zscore_fit_apply
from .errors import ConfigurationError, ParameterError
from .losses import (
    LossBreakdown,
    asymmetric_loss,
    classification_loss,
    domain_adversarial_loss,
    total_loss,
)
from .model import (
    Checkpoint,
    ForwardTapes,
    GrlConfig,
    ModelParams,
    encode,
    forward_full,
    init_params,
)
from .tensor_core import Param, RngState, affine, sigmoid

SCORE_EPS = 1e-12


@dataclass
class TrainConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    lr: float = 8e-5
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    faac_enabled: bool = True
    grl_coefficient: float = 1.0
    dropout_p: float = 0.1
    enc_hidden: int = 1024
    enc_out: int = 740
    disc_hidden: int = 256

    def validate(self):
        if not np.isfinite(self.lr) or self.lr <= 0:
            raise ParameterError(f"lr must be > 0, got {self.lr}")
        if self.batch_size < 2:
            raise ParameterError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ParameterError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        for name in ("lambda1", "lambda2", "grl_coefficient"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {v}")
        if self.enc_out % 2 != 0 or self.enc_out < 2:
            raise ParameterError(f"enc_out must be even and >= 2, got {self.enc_out}")
        if self.enc_hidden < 1 or self.disc_hidden < 1:
            raise ParameterError("hidden widths must be >= 1")


@dataclass
class EpochLog:
    epoch: int
    losses: LossBreakdown
    train_auc: float
    val_auc: Optional[float] = None


class Adam:
    """Standard Adam (b1=0.9, b2=0.999, eps=1e-8); one step per batch."""

    def __init__(self, params: Sequence[Param], lr: float,
                 b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2, self.eps = b1, b2, eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g
            m_hat = self.m[i] / (1.0 - self.b1 ** self.t)
            v_hat = self.v[i] / (1.0 - self.b2 ** self.t)
            p.value = p.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_batches(n: int, batch_size: int, rng: RngState) -> list[np.ndarray]:
    """Seeded permutation chunked into batches; a trailing chunk smaller
    than 2 is merged into the previous batch."""
    if n < 1:
        raise ParameterError("need at least one sample")
    perm = rng.permutation(n)
    batches = [perm[i: i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and batches[-1].size < 2:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def _score(values: np.ndarray, params: ModelParams) -> np.ndarray:
    """Eval-mode sensitivity probabilities, clamped to the open interval."""
    h = encode(values, params, "eval")
    z = fourier.project(h, params.basis)
    p = sigmoid(affine(z, params.clf_w, params.clf_b)).ravel()
    return np.clip(p, SCORE_EPS, 1.0 - SCORE_EPS)


def fit(
    gm: GeneMatrix,
    metas: Sequence[SampleMeta],
    cfg: TrainConfig,
    validation: Optional[tuple[GeneMatrix, Sequence[int]]] = None,
) -> tuple[ModelParams, list[EpochLog]]:
    """Train on a standardized matrix; metas must be row-aligned with gm.

    Returns the trained parameters and one EpochLog per epoch (loss means
    over batches plus train AUROC, and validation AUROC when a
    (matrix, labels) pair is supplied).
    """
    from .evaluate import auroc  # local import; evaluate builds on fit

    cfg.validate()
    n = len(gm.sample_ids)
    if len(metas) != n or any(
        m.sample_id != sid for m, sid in zip(metas, gm.sample_ids)
    ):
        raise ConfigurationError("metas must be aligned with gm.sample_ids")
    if any(m.response is None for m in metas):
        raise ConfigurationError("every training sample needs a response label")
    responses = np.array([m.response for m in metas], dtype=np.int64)
    if len(set(responses.tolist())) < 2:
        raise ConfigurationError("training data must contain both response classes")
    domain_names = sorted({m.domain for m in metas})
    if len(domain_names) < 2:
        raise ConfigurationError(
            "training data must span at least 2 domains (adversary undefined)"
        )
    dom_index = {d: i for i, d in enumerate(domain_names)}
    domains = np.array([dom_index[m.domain] for m in metas], dtype=np.int64)

    rng = RngState(cfg.seed)
    params = init_params(
        gm.gene_names, len(domain_names), rng,
        hidden=cfg.enc_hidden, d=cfg.enc_out, disc_hidden=cfg.disc_hidden,
    )
    trainables = params.trainables()
    optim = Adam(trainables, cfg.lr)
    grl = GrlConfig(cfg.grl_coefficient)
    use_faac = cfg.faac_enabled and cfg.lambda1 != 0.0
    x_all = gm.values

    logs: list[EpochLog] = []
    for epoch in range(1, cfg.epochs + 1):
        batches = make_batches(n, cfg.batch_size, rng)
        sums = np.zeros(3)
        for idx in batches:
            xb = x_all[idx]
            yb = responses[idx]
            db = domains[idx]
            tapes = ForwardTapes()
            z, p, logits = forward_full(
                xb, params, grl, "train", rng, cfg.dropout_p, tapes
            )
            l_cls, dp = classification_loss(p, yb)
            l_adv, dlogits = domain_adversarial_loss(logits, db)
            if use_faac:
                l_asy, dz_asy, _ = asymmetric_loss(z, yb)
            else:
                l_asy, dz_asy = 0.0, None
            for t in trainables:
                t.zero_grad()
            dz = tapes.classifier.backward(cfg.lambda2 * dp[:, None])
            dz = dz + tapes.discriminator.backward(dlogits)
            if use_faac:
                dz = dz + cfg.lambda1 * dz_asy
            tapes.encoder.backward(dz)
            optim.step()
            sums += (l_asy, l_adv, l_cls)
        means = sums / len(batches)
        breakdown = total_loss(means[0], means[1], means[2], cfg.lambda1, cfg.lambda2)
        train_auc = auroc(_score(x_all, params), responses)
        val_auc = None
        if validation is not None:
            val_gm, val_labels = validation
            val_auc = auroc(_score(val_gm.values, params), np.asarray(val_labels))
        logs.append(EpochLog(epoch, breakdown, train_auc, val_auc))
    return params, logs


def predict(gm: GeneMatrix, ckpt: Checkpoint) -> np.ndarray:
    """Score new samples: align genes, apply stored standardization, run
    the eval-mode forward pass, return P(sensitive) per sample."""
    aligned = align_genes(gm, ckpt.params.gene_list)
    standardized, _ = zscore_fit_apply(aligned, ckpt.stats)
    return _score(standardized.values, ckpt.params)


def write_log_csv(path, logs: Sequence[EpochLog]):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,l_asy,l_adv,l_cls,total,train_auc,val_auc\n")
        for log in logs:
            val = "" if log.val_auc is None else repr(float(log.val_auc))
            fh.write(
                ",".join(
                    [
                        str(log.epoch),
                        repr(float(log.losses.l_asy)),
                        repr(float(log.losses.l_adv)),
                        repr(float(log.losses.l_cls)),
                        repr(float(log.losses.total)),
                        repr(float(log.train_auc)),
                        val,
                    ]
                )
                + "\n"
            )


def config_echo(cfg: TrainConfig) -> dict:
    return asdict(cfg)
