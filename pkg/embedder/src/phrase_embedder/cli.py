"""phrase-embedder CLI.

    phrase-embedder embed --phrases FILE --model ID --out FILE [--batch N]

The phrases file holds one unique phrase per line. Output is written
atomically (temp file + rename) in the pipeline's embeddings format.
Exit codes: 0 success, 1 usage, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .encoders import make_encoder

log = logging.getLogger("phrase_embedder")


class UsageError(Exception):
    pass


class PhraseFileError(Exception):
    pass


def read_phrases(path: Path) -> list[str]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise PhraseFileError(f"cannot read phrases file {path}: {exc}") from exc
    phrases = [line.strip() for line in lines if line.strip()]
    if not phrases:
        raise PhraseFileError(f"{path}: no phrases")
    seen = set()
    for phrase in phrases:
        if phrase in seen:
            raise PhraseFileError(f"{path}: duplicate phrase {phrase!r}")
        seen.add(phrase)
    return phrases


def write_embeddings(path: Path, phrases: list[str], matrix: np.ndarray) -> None:
    """Atomic write of the embeddings file: header d, then sorted rows."""
    path = Path(path)
    rows = sorted(zip(phrases, matrix), key=lambda item: item[0])
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as out:
            out.write(f"{matrix.shape[1]}\n")
            for phrase, vector in rows:
                out.write(
                    phrase + "\t" + " ".join(repr(float(x)) for x in vector) + "\n"
                )
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def embed_phrases(
    phrases_path: Path, model_id: str, out_path: Path, batch_size: int = 32
) -> dict:
    phrases = read_phrases(phrases_path)
    encoder = make_encoder(model_id)
    vectors = []
    kept = []
    skipped = 0
    for start in range(0, len(phrases), batch_size):
        batch = phrases[start : start + batch_size]
        try:
            encoded = encoder.encode(batch, batch_size=batch_size)
            vectors.append(encoded)
            kept.extend(batch)
        except Exception:
            # fall back to per-phrase encoding so one bad phrase cannot
            # take down the whole batch
            for phrase in batch:
                try:
                    vectors.append(encoder.encode([phrase]))
                    kept.extend([phrase])
                except Exception as exc:
                    log.warning("skipping phrase %r: %s", phrase, exc)
                    skipped += 1
    if not kept:
        raise PhraseFileError("no phrase could be encoded")
    matrix = np.vstack(vectors)
    write_embeddings(out_path, kept, matrix)
    return {
        "phrases": len(phrases),
        "encoded": len(kept),
        "skipped": skipped,
        "dim": int(matrix.shape[1]),
        "out": str(out_path),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phrase-embedder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    embed = sub.add_parser("embed", help="embed a phrase list")
    embed.add_argument("--phrases", type=Path, required=True)
    embed.add_argument("--model", required=True, help="hash:<dim> or a model name")
    embed.add_argument("--out", type=Path, required=True)
    embed.add_argument("--batch", type=int, default=32)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    if args.batch < 1:
        log.error("batch size must be >= 1")
        return 1
    try:
        summary = embed_phrases(args.phrases, args.model, args.out, args.batch)
    except PhraseFileError as exc:
        log.error("%s", exc)
        return 2
    except RuntimeError as exc:
        log.error("%s", exc)
        return 2
    print(
        f"encoded {summary['encoded']}/{summary['phrases']} phrases "
        f"(dim {summary['dim']}) -> {summary['out']}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
