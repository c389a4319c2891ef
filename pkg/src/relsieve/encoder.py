"""Dual text encoders for rules and marked sentences.

Both sides use the same cheap architecture: whitespace tokens expand to
unigram+bigram features, each feature hashes into one of H buckets, the
bucket embeddings (H × d_in) are mean-pooled and sent through a linear
projection to the shared 384-dimensional space, then L2-normalized.  Rule
and sentence sides have separate tables and projections; nothing is shared.

Parameters are stored float32 to keep the tables small; the forward pass
runs in float64 so similarities and training gradients stay numerically
honest.  Marker characters in sentences are ordinary tokens on purpose —
the encoder is supposed to see where the entities sit.
"""

from __future__ import annotations

import json
import zlib
from typing import Iterable, Protocol

import numpy as np

PROJECTION_DIM = 384
FORMAT_VERSION = 1


class Embedder(Protocol):
    dim: int

    def embed_rule(self, text: str) -> np.ndarray:
        ...

    def embed_sentence(self, text: str) -> np.ndarray:
        ...


def hash_features(text: str, buckets: int) -> np.ndarray:
    """Unigram+bigram feature bucket ids for whitespace-tokenized text."""
    toks = text.split()
    if not toks:
        raise ValueError("cannot embed empty text")
    feats = list(toks)
    feats.extend(f"{a} {b}" for a, b in zip(toks, toks[1:]))
    return np.array(
        [zlib.crc32(f.encode("utf-8")) % buckets for f in feats], dtype=np.int64
    )


class HashedEncoder:
    """Feature-hashed dual encoder; see module docstring for the layout."""

    def __init__(
        self,
        hash_dim: int = 2**18,
        feature_dim: int = 256,
        dim: int = PROJECTION_DIM,
        seed: int = 0,
    ):
        self.hash_dim = hash_dim
        self.feature_dim = feature_dim
        self.dim = dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(feature_dim)
        self.rule_table = rng.normal(0.0, 0.1, (hash_dim, feature_dim)).astype(np.float32)
        self.sent_table = rng.normal(0.0, 0.1, (hash_dim, feature_dim)).astype(np.float32)
        self.rule_proj = rng.normal(0.0, scale, (feature_dim, dim)).astype(np.float32)
        self.sent_proj = rng.normal(0.0, scale, (feature_dim, dim)).astype(np.float32)
        # learnable temperature, stored as a log so it stays positive
        self.log_scale = float(np.log(1.0 / 0.07))
        self._bucket_cache: dict[str, np.ndarray] = {}

    # -- forward ----------------------------------------------------------

    def buckets(self, text: str) -> np.ndarray:
        got = self._bucket_cache.get(text)
        if got is None:
            got = hash_features(text, self.hash_dim)
            self._bucket_cache[text] = got
        return got

    def pooled(self, side: str, text: str) -> np.ndarray:
        table = self.rule_table if side == "rule" else self.sent_table
        return table[self.buckets(text)].astype(np.float64).mean(axis=0)

    def _embed(self, side: str, text: str) -> np.ndarray:
        proj = self.rule_proj if side == "rule" else self.sent_proj
        z = self.pooled(side, text) @ proj.astype(np.float64)
        return z / np.linalg.norm(z)

    def embed_rule(self, text: str) -> np.ndarray:
        return self._embed("rule", text)

    def embed_sentence(self, text: str) -> np.ndarray:
        return self._embed("sent", text)

    def embed_rules(self, texts: Iterable[str]) -> np.ndarray:
        return np.stack([self.embed_rule(t) for t in texts])

    def embed_sentences(self, texts: Iterable[str]) -> np.ndarray:
        return np.stack([self.embed_sentence(t) for t in texts])

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        meta = {
            "format_version": FORMAT_VERSION,
            "hash_dim": self.hash_dim,
            "feature_dim": self.feature_dim,
            "dim": self.dim,
            "seed": self.seed,
            "log_scale": self.log_scale,
        }
        np.savez(
            path,
            rule_table=self.rule_table,
            sent_table=self.sent_table,
            rule_proj=self.rule_proj,
            sent_proj=self.sent_proj,
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        )

    @classmethod
    def load(cls, path) -> "HashedEncoder":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            if meta.get("format_version") != FORMAT_VERSION:
                raise ValueError(f"unsupported model format: {meta.get('format_version')}")
            enc = cls.__new__(cls)
            enc.hash_dim = int(meta["hash_dim"])
            enc.feature_dim = int(meta["feature_dim"])
            enc.dim = int(meta["dim"])
            enc.seed = int(meta["seed"])
            enc.log_scale = float(meta["log_scale"])
            enc.rule_table = data["rule_table"]
            enc.sent_table = data["sent_table"]
            enc.rule_proj = data["rule_proj"]
            enc.sent_proj = data["sent_proj"]
            enc._bucket_cache = {}
        return enc


def similarity(enc: Embedder, rule_text: str, sentence_text: str) -> float:
    """Cosine similarity between a rule and a marked sentence."""
    return float(enc.embed_rule(rule_text) @ enc.embed_sentence(sentence_text))


class CachedEmbedder:
    """Read-only memo over an Embedder for evaluation workloads.

    Only safe while the wrapped encoder's parameters stay frozen; training
    must use the raw encoder.
    """

    def __init__(self, inner: Embedder):
        self.inner = inner
        self.dim = inner.dim
        self._rules: dict[str, np.ndarray] = {}
        self._sents: dict[str, np.ndarray] = {}

    def embed_rule(self, text: str) -> np.ndarray:
        got = self._rules.get(text)
        if got is None:
            got = self.inner.embed_rule(text)
            self._rules[text] = got
        return got

    def embed_sentence(self, text: str) -> np.ndarray:
        got = self._sents.get(text)
        if got is None:
            got = self.inner.embed_sentence(text)
            self._sents[text] = got
        return got
