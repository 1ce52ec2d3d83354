"""Phrase embedding table and its on-disk format.

Format: first line is the dimension d; each following line is
``phrase<TAB>v1 v2 ... vd`` with space-separated float components.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, phrase: str) -> bool:
        return phrase in self.vectors

    def get(self, phrase: str) -> np.ndarray | None:
        return self.vectors.get(phrase)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def save_embeddings(path: Path, table: EmbeddingTable) -> None:
    with Path(path).open("w", encoding="utf-8") as out:
        out.write(f"{table.dim}\n")
        for phrase in sorted(table.vectors):
            vec = table.vectors[phrase]
            out.write(phrase + "\t" + " ".join(repr(float(x)) for x in vec) + "\n")


def load_embeddings(path: Path) -> EmbeddingTable:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read embeddings file {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty embeddings file")
    try:
        dim = int(lines[0].strip())
    except ValueError as exc:
        raise DataError(f"{path}: first line must be the dimension") from exc
    if dim < 1:
        raise DataError(f"{path}: dimension must be >= 1, got {dim}")
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        if "\t" not in line:
            raise DataError(f"{path}:{lineno}: expected phrase<TAB>components")
        phrase, blob = line.split("\t", 1)
        try:
            vec = np.array([float(x) for x in blob.split()], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad vector component") from exc
        if vec.shape != (dim,):
            raise DataError(
                f"{path}:{lineno}: expected {dim} components, got {vec.shape[0]}"
            )
        if not np.isfinite(vec).all():
            raise DataError(f"{path}:{lineno}: non-finite vector component")
        vectors[phrase] = vec
    return EmbeddingTable(dim=dim, vectors=vectors)
