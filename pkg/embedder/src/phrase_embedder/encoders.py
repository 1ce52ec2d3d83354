"""Encoder backends.

Model identifiers:
  hash:<dim>   deterministic fake encoder; the vector for a phrase is a
               unit gaussian seeded from the SHA-256 of the phrase, so
               output is stable across runs and machines and no model
               download is ever needed. Intended for tests.
  <other>      treated as a sentence-transformers model name and loaded
               lazily (requires the 'sbert' extra).
"""

from __future__ import annotations

import hashlib
import logging

import numpy as np

log = logging.getLogger(__name__)


class HashEncoder:
    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.dim = dim

    def encode(self, phrases: list[str], batch_size: int = 32) -> np.ndarray:
        out = np.empty((len(phrases), self.dim), dtype=np.float64)
        for i, phrase in enumerate(phrases):
            digest = hashlib.sha256(phrase.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big")
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dim)
            out[i] = vec / np.linalg.norm(vec)
        return out


class SentenceTransformerEncoder:
    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:  # pragma: no cover - optional backend
            raise RuntimeError(
                "sentence-transformers is not installed; "
                "install the 'sbert' extra or use a hash:<dim> model"
            ) from exc
        log.info("loading sentence-transformers model %s", model_id)
        self.model = SentenceTransformer(model_id)
        self.dim = int(self.model.get_sentence_embedding_dimension())

    def encode(self, phrases: list[str], batch_size: int = 32) -> np.ndarray:
        return np.asarray(
            self.model.encode(
                phrases, batch_size=batch_size, show_progress_bar=False
            ),
            dtype=np.float64,
        )


def make_encoder(model_id: str):
    if model_id.startswith("hash:"):
        return HashEncoder(dim=int(model_id.split(":", 1)[1]))
    return SentenceTransformerEncoder(model_id)
