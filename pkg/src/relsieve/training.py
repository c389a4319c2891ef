"""Contrastive training of the dual encoder.

Each batch embeds B (rule, sentence) pairs on their own sides, scales the
B×B cosine matrix by a learnable temperature, and applies the symmetric
cross-entropy: every row should pick its own column and every column its
own row, so the other B−1 entries act as in-batch negatives.

Gradients are analytic (plain SGD keeps them exactly checkable against
finite differences) and flow through the L2 normalization, the projections
and the mean-pooled hash tables.  Table updates touch only the rows used by
the batch; weight decay is applied lazily to those same rows, which for SGD
is the only place a dense decay would differ from zero anyway.  One fixed
accumulation order, one seeded RNG stream: same seed, same final weights,
bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoder import HashedEncoder
from .pipeline import TrainingPair

log = logging.getLogger(__name__)


@dataclass
class TrainingConfig:
    batch_size: int = 512
    lr_rule_encoder: float = 3e-5
    lr_sentence_encoder: float = 1e-5
    lr_projections: float = 1e-4
    lr_logit_scale: float = 3e-4
    weight_decay: float = 1e-3
    grad_clip: float = 5.0
    dropout: float = 0.1
    epochs: int = 1
    seed: int = 0
    hash_dim: int = 2**18
    feature_dim: int = 256

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @classmethod
    def desk(cls, seed: int = 0, epochs: int = 28) -> "TrainingConfig":
        """Laptop-scale profile: smaller tables and batches, faster rates."""
        return cls(
            batch_size=64,
            lr_rule_encoder=0.5,
            lr_sentence_encoder=0.5,
            lr_projections=0.05,
            lr_logit_scale=1e-3,
            epochs=epochs,
            seed=seed,
            hash_dim=2**16,
            feature_dim=128,
        )


@dataclass(frozen=True)
class StepLog:
    step: int
    loss: float
    grad_norm: float


def _check_batch(U: np.ndarray, V: np.ndarray) -> int:
    if U.ndim != 2 or V.ndim != 2 or U.shape != V.shape:
        raise ValueError(f"U and V must both be (B, d); got {U.shape} and {V.shape}")
    return U.shape[0]


def _softmax(M: np.ndarray, axis: int) -> np.ndarray:
    shifted = M - M.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _loss_and_coupling(U: np.ndarray, V: np.ndarray, log_scale: float):
    """Loss plus dL/d(logits) and the raw similarity matrix."""
    B = _check_batch(U, V)
    S = U @ V.T
    M = np.exp(log_scale) * S
    diag = np.diag(M)
    lse_rows = np.log(np.exp(M - M.max(axis=1, keepdims=True)).sum(axis=1)) + M.max(axis=1)
    lse_cols = np.log(np.exp(M - M.max(axis=0, keepdims=True)).sum(axis=0)) + M.max(axis=0)
    loss = 0.5 * ((lse_rows - diag).mean() + (lse_cols - diag).mean())
    G = (_softmax(M, axis=1) + _softmax(M, axis=0) - 2.0 * np.eye(B)) / (2.0 * B)
    return float(loss), G, S


def contrastive_loss(U: np.ndarray, V: np.ndarray, log_scale: float) -> float:
    """Symmetric cross-entropy over the scaled similarity matrix.

    U holds B rule embeddings, V the matching B sentence embeddings (row i
    of each is a positive pair).  B=1 gives 0 — there is nothing to
    contrast against.
    """
    loss, _, _ = _loss_and_coupling(U, V, log_scale)
    return loss


def loss_gradients(U: np.ndarray, V: np.ndarray, log_scale: float):
    """Analytic (dU, dV, d log_scale) of contrastive_loss."""
    _, G, S = _loss_and_coupling(U, V, log_scale)
    sigma = float(np.exp(log_scale))
    dU = sigma * (G @ V)
    dV = sigma * (G.T @ U)
    ds = sigma * float((G * S).sum())
    return dU, dV, ds


def _texts(pair) -> tuple[str, str]:
    if isinstance(pair, TrainingPair):
        return pair.rule_text, pair.sentence_text
    rule, sentence = pair
    return rule, sentence


def _pool_batch(enc: HashedEncoder, side: str, texts: Sequence[str]):
    """Mean-pooled features, plus bucket ids and counts for the backward pass."""
    buckets = [enc.buckets(t) for t in texts]
    X = np.stack([enc.pooled(side, t) for t in texts])
    return X, buckets, np.array([len(b) for b in buckets], dtype=np.float64)


def _scatter_grads(buckets: list[np.ndarray], lens: np.ndarray, dX: np.ndarray):
    """Per-bucket gradient rows for a batch of mean-pools."""
    all_idx = np.concatenate(buckets)
    contrib = np.repeat(dX / lens[:, None], lens.astype(np.int64), axis=0)
    uniq, inv = np.unique(all_idx, return_inverse=True)
    out = np.zeros((len(uniq), dX.shape[1]))
    np.add.at(out, inv, contrib)
    return uniq, out


def train(
    dataset: Sequence,
    cfg: TrainingConfig,
    encoder: HashedEncoder | None = None,
) -> tuple[HashedEncoder, list[StepLog]]:
    """SGD over the dataset; returns the trained encoder and per-step log.

    The dataset is TrainingPairs or plain (rule_text, sentence_text) tuples.
    Batches are drawn without replacement per epoch; a trailing partial
    batch is dropped so every step sees exactly B negatives.
    """
    pairs = [_texts(p) for p in dataset]
    B = cfg.batch_size
    if len(pairs) < B:
        raise ValueError(
            f"dataset has {len(pairs)} pairs but batch_size is {B}; lower batch_size"
        )
    enc = encoder or HashedEncoder(cfg.hash_dim, cfg.feature_dim, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    keep = 1.0 - cfg.dropout
    logs: list[StepLog] = []
    step = 0

    for _epoch in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for lo in range(0, len(order) - B + 1, B):
            batch = [pairs[i] for i in order[lo : lo + B]]
            rule_texts = [r for r, _ in batch]
            sent_texts = [s for _, s in batch]

            Xr, rb, rlens = _pool_batch(enc, "rule", rule_texts)
            Xs, sb, slens = _pool_batch(enc, "sent", sent_texts)
            if cfg.dropout > 0.0:
                # inverted dropout on pooled features, train-time only
                Xr = Xr * (rng.random(Xr.shape) < keep) / keep
                Xs = Xs * (rng.random(Xs.shape) < keep) / keep

            Pr = enc.rule_proj.astype(np.float64)
            Ps = enc.sent_proj.astype(np.float64)
            Zr, Zs = Xr @ Pr, Xs @ Ps
            nr = np.linalg.norm(Zr, axis=1, keepdims=True)
            ns = np.linalg.norm(Zs, axis=1, keepdims=True)
            U, V = Zr / nr, Zs / ns

            loss, G, S = _loss_and_coupling(U, V, enc.log_scale)
            sigma = float(np.exp(enc.log_scale))
            dU = sigma * (G @ V)
            dV = sigma * (G.T @ U)
            ds = sigma * float((G * S).sum())

            # back through normalization and projection
            dZr = (dU - U * (dU * U).sum(axis=1, keepdims=True)) / nr
            dZs = (dV - V * (dV * V).sum(axis=1, keepdims=True)) / ns
            dPr, dPs = Xr.T @ dZr, Xs.T @ dZs
            dXr, dXs = dZr @ Pr.T, dZs @ Ps.T
            ur, gr = _scatter_grads(rb, rlens, dXr)
            us, gs = _scatter_grads(sb, slens, dXs)

            sq = (gr**2).sum() + (gs**2).sum() + (dPr**2).sum() + (dPs**2).sum() + ds**2
            gnorm = float(np.sqrt(sq))
            factor = cfg.grad_clip / gnorm if gnorm > cfg.grad_clip else 1.0

            wd = cfg.weight_decay
            enc.rule_table[ur] -= (
                cfg.lr_rule_encoder * (factor * gr + wd * enc.rule_table[ur])
            ).astype(np.float32)
            enc.sent_table[us] -= (
                cfg.lr_sentence_encoder * (factor * gs + wd * enc.sent_table[us])
            ).astype(np.float32)
            enc.rule_proj -= (cfg.lr_projections * (factor * dPr + wd * Pr)).astype(np.float32)
            enc.sent_proj -= (cfg.lr_projections * (factor * dPs + wd * Ps)).astype(np.float32)
            enc.log_scale -= cfg.lr_logit_scale * factor * ds

            logs.append(StepLog(step=step, loss=loss, grad_norm=gnorm))
            if step % 50 == 0:
                log.debug("step %d loss %.4f grad %.3f", step, loss, gnorm)
            step += 1
    return enc, logs


def retrieval_accuracy(
    embedder, pairs: Sequence, batch_size: int = 64, seed: int = 0
) -> float:
    """Fraction of rules whose own sentence wins argmax within a B-batch.

    Chance level is 1/B for an uninformative encoder; only full batches are
    scored so every rule faces the same number of candidates.
    """
    texts = [_texts(p) for p in pairs]
    if len(texts) < batch_size:
        raise ValueError(f"need at least {batch_size} pairs, got {len(texts)}")
    order = np.random.default_rng(seed).permutation(len(texts))
    correct = total = 0
    for lo in range(0, len(order) - batch_size + 1, batch_size):
        chunk = [texts[i] for i in order[lo : lo + batch_size]]
        U = np.stack([embedder.embed_rule(r) for r, _ in chunk])
        V = np.stack([embedder.embed_sentence(s) for _, s in chunk])
        hits = (U @ V.T).argmax(axis=1) == np.arange(batch_size)
        correct += int(hits.sum())
        total += batch_size
    return correct / total
