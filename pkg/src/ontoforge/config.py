"""Pipeline configuration: file paths, parameters, seeds.

Config files are plain ``key = value`` lines ('#' comments allowed);
command-line flags override file values. All randomness flows from the
single seed through named per-stage sub-seeds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import DataError


@dataclass
class PipelineConfig:
    chains: Optional[Path] = None
    embeddings: Optional[Path] = None
    stoplists: Optional[Path] = None
    reference_hierarchy: Optional[Path] = None
    reference_aliases: Optional[Path] = None
    outdir: Path = Path("out")
    pivots: int = 500
    exact: bool = False
    knn: int = 5
    knn_weighted: bool = False
    name_threshold: float = 0.9
    pmi_threshold: float = 0.0
    seed: int = 0
    workers: int = 1
    reduce: bool = False
    figures: bool = True
    senses_enabled: bool = True
    noise_enabled: bool = True

    _PATH_KEYS = {
        "chains",
        "embeddings",
        "stoplists",
        "reference_hierarchy",
        "reference_aliases",
        "outdir",
    }
    _BOOL_KEYS = {
        "exact",
        "knn_weighted",
        "reduce",
        "figures",
        "senses_enabled",
        "noise_enabled",
    }
    _INT_KEYS = {"pivots", "knn", "seed", "workers"}
    _FLOAT_KEYS = {"name_threshold", "pmi_threshold"}

    def validate(self) -> None:
        if self.pivots < 1:
            raise DataError(f"pivots must be >= 1, got {self.pivots}")
        if self.knn < 1:
            raise DataError(f"knn must be >= 1, got {self.knn}")
        if not 0.0 < self.name_threshold <= 1.0:
            raise DataError("name_threshold must be in (0, 1]")
        if self.workers < 1:
            raise DataError(f"workers must be >= 1, got {self.workers}")

    def sub_seed(self, stage: str) -> int:
        digest = hashlib.sha256(f"{self.seed}:{stage}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % (2**32)

    def to_dict(self) -> dict:
        out = {}
        for field in fields(self):
            if field.name.startswith("_"):
                continue
            value = getattr(self, field.name)
            out[field.name] = str(value) if isinstance(value, Path) else value
        return out

    def set_option(self, key: str, value: str) -> None:
        if key in self._PATH_KEYS:
            setattr(self, key, Path(value))
        elif key in self._BOOL_KEYS:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise DataError(f"config key {key}: expected a boolean, got {value!r}")
            setattr(self, key, value.lower() in ("true", "1", "yes"))
        elif key in self._INT_KEYS:
            try:
                setattr(self, key, int(value))
            except ValueError as exc:
                raise DataError(f"config key {key}: expected an integer") from exc
        elif key in self._FLOAT_KEYS:
            try:
                setattr(self, key, float(value))
            except ValueError as exc:
                raise DataError(f"config key {key}: expected a number") from exc
        else:
            raise DataError(f"unknown config key: {key}")

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        cfg = cls()
        cfg.update_from_file(path)
        return cfg

    def update_from_file(self, path: Path) -> None:
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise DataError(f"cannot read config file {path}: {exc}") from exc
        for lineno, line in enumerate(lines, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise DataError(f"{path}:{lineno}: expected key = value")
            key, _, value = text.partition("=")
            self.set_option(key.strip(), value.strip())
