"""Parse coreference-chain files and normalize mention phrases.

Reads:
  - chains file, one JSON object per line:
      {"doc_id": str, "chains": [[str, ...], ...]}
  - stop-list files: one term per line, UTF-8, '#' starts a comment.

Produces canonical node strings (lowercased, leading stop words /
determiners / quantifiers stripped, plural unified to singular) plus a
phrase table tracking corpus casing statistics, which later decides
whether a phrase is a "name" (consistently capitalized) or a noun.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

from .errors import DataError

log = logging.getLogger(__name__)

# Plural unification is rule-based on the last token. Words ending in
# these suffixes, or listed as protected, are left untouched.
_KEEP_SUFFIXES = ("ss", "us", "is")
_PROTECTED_PLURALS = frozenset(
    {
        "aids",
        "always",
        "caries",
        "diabetes",
        "herpes",
        "lens",
        "measles",
        "mumps",
        "news",
        "rabies",
        "series",
        "species",
    }
)

_MAX_NORMALIZE_PASSES = 8


@dataclass
class ChainRecord:
    """One document's coreference chains, each a list of raw mentions."""

    doc_id: str
    chains: list[list[str]]


@dataclass
class Phrase:
    """A canonical phrase with corpus casing statistics."""

    text: str
    raw_occurrences: int = 0
    capitalized_occurrences: int = 0

    @property
    def capitalized_ratio(self) -> float:
        if self.raw_occurrences == 0:
            return 0.0
        return self.capitalized_occurrences / self.raw_occurrences


@dataclass
class StopLists:
    """Filter lists applied during normalization.

    All sets hold lowercase terms. ``verb_only_detector`` may be replaced
    to plug in a different verb heuristic; the default combines the
    ``verbs`` word list with inflection suffix matching against it.
    """

    stopwords: frozenset[str]
    pronouns: frozenset[str]
    determiners_quantifiers: frozenset[str]
    verbs: frozenset[str] = frozenset()
    verb_only_detector: Optional[Callable[[str], bool]] = None

    def __post_init__(self) -> None:
        if not self.stopwords or not self.pronouns or not self.determiners_quantifiers:
            raise DataError("stop lists must be non-empty")

    def is_verb_token(self, token: str) -> bool:
        if token in self.verbs:
            return True
        # Recognize inflections of listed stems: occurs, occurring, occurred.
        for suffix in ("ing", "ed", "es", "s"):
            if token.endswith(suffix) and len(token) > len(suffix) + 1:
                stem = token[: -len(suffix)]
                if stem in self.verbs or stem + "e" in self.verbs:
                    return True
        return False

    def verb_only(self, phrase: str) -> bool:
        if self.verb_only_detector is not None:
            return self.verb_only_detector(phrase)
        tokens = phrase.split()
        return bool(tokens) and all(self.is_verb_token(t.lower()) for t in tokens)


def _read_term_file(path: Path) -> frozenset[str]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read stop-list file {path}: {exc}") from exc
    terms = set()
    for line in lines:
        term = line.strip()
        if term and not term.startswith("#"):
            terms.add(term.lower())
    return frozenset(terms)


def load_stoplists(directory: Optional[Path] = None) -> StopLists:
    """Load stop lists from a directory, or the packaged defaults.

    Expects stopwords.txt, pronouns.txt, determiners.txt and verbs.txt.
    """
    if directory is None:
        base = resources.files("ontoforge").joinpath("data")
        read = lambda name: frozenset(
            t.strip().lower()
            for t in base.joinpath(name).read_text(encoding="utf-8").splitlines()
            if t.strip() and not t.strip().startswith("#")
        )
        return StopLists(
            stopwords=read("stopwords.txt"),
            pronouns=read("pronouns.txt"),
            determiners_quantifiers=read("determiners.txt"),
            verbs=read("verbs.txt"),
        )
    directory = Path(directory)
    return StopLists(
        stopwords=_read_term_file(directory / "stopwords.txt"),
        pronouns=_read_term_file(directory / "pronouns.txt"),
        determiners_quantifiers=_read_term_file(directory / "determiners.txt"),
        verbs=_read_term_file(directory / "verbs.txt"),
    )


@dataclass
class ParseSummary:
    """Counts reported by parse_chain_file."""

    records_read: int = 0
    lines_skipped: int = 0
    short_chains_dropped: int = 0


def parse_chain_file(
    path: Path,
    format: str = "jsonl",
    summary: Optional[ParseSummary] = None,
) -> Iterator[ChainRecord]:
    """Yield ChainRecords from a JSONL chains file, in file order.

    Malformed lines are logged with their line number and skipped;
    chains with fewer than two mentions carry no pair evidence and are
    dropped. Counts accumulate into ``summary`` if given.
    """
    if format != "jsonl":
        raise DataError(f"unsupported chains format: {format!r}")
    path = Path(path)
    if summary is None:
        summary = ParseSummary()
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read chains file {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            record = _parse_line(line, lineno, summary)
            if record is not None:
                summary.records_read += 1
                yield record


def _parse_line(line: str, lineno: int, summary: ParseSummary) -> Optional[ChainRecord]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        log.warning("line %d: invalid JSON (%s); skipped", lineno, exc.msg)
        summary.lines_skipped += 1
        return None
    doc_id = obj.get("doc_id") if isinstance(obj, dict) else None
    chains = obj.get("chains") if isinstance(obj, dict) else None
    if not isinstance(doc_id, str) or not doc_id or not isinstance(chains, list):
        log.warning("line %d: missing doc_id or chains; skipped", lineno)
        summary.lines_skipped += 1
        return None
    kept: list[list[str]] = []
    for chain in chains:
        if not isinstance(chain, list) or not all(isinstance(m, str) for m in chain):
            log.warning("line %d: malformed chain in %s; skipped", lineno, doc_id)
            summary.lines_skipped += 1
            return None
        if len(chain) < 2:
            summary.short_chains_dropped += 1
            continue
        kept.append(chain)
    return ChainRecord(doc_id=doc_id, chains=kept)


def _singularize(token: str) -> str:
    if token in _PROTECTED_PLURALS:
        return token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith(("sses", "xes", "ches", "shes", "zes")):
        return token[:-2]
    if token.endswith(_KEEP_SUFFIXES):
        return token
    if token.endswith("s") and len(token) > 3:
        return token[:-1]
    return token


def _normalize_once(tokens: list[str], lists: StopLists) -> Optional[list[str]]:
    if not tokens:
        return None
    whole = " ".join(tokens)
    if whole in lists.pronouns or whole in lists.stopwords:
        return None
    strippable = lists.stopwords | lists.pronouns | lists.determiners_quantifiers
    i = 0
    while i < len(tokens) and tokens[i] in strippable:
        i += 1
    tokens = tokens[i:]
    if not tokens:
        return None
    if lists.verb_only(" ".join(tokens)):
        return None
    tokens = tokens[:-1] + [_singularize(tokens[-1])]
    return tokens


def normalize_phrase(raw: str, lists: StopLists) -> Optional[str]:
    """Return the canonical form of a mention, or None if filtered out.

    Applies the rules to a fixed point so the result is idempotent:
    normalize(normalize(x)) == normalize(x).
    """
    canon, _ = normalize_phrase_cased(raw, lists)
    return canon


def normalize_phrase_cased(raw: str, lists: StopLists) -> tuple[Optional[str], bool]:
    """Like normalize_phrase, also reporting whether the surviving part
    of the raw mention started with an uppercase character."""
    raw_tokens = raw.split()
    lowered = [t.lower() for t in raw_tokens]
    tokens = _normalize_once(lowered, lists)
    if tokens is None:
        return None, False
    # Casing is judged on the first raw token that survived the initial
    # leading-strip, before lowercasing.
    strippable = lists.stopwords | lists.pronouns | lists.determiners_quantifiers
    offset = 0
    while offset < len(lowered) and lowered[offset] in strippable:
        offset += 1
    offset = min(offset, len(raw_tokens) - 1)
    capitalized = bool(raw_tokens) and raw_tokens[offset][:1].isupper()
    for _ in range(_MAX_NORMALIZE_PASSES):
        again = _normalize_once(tokens, lists)
        if again is None:
            return None, False
        if again == tokens:
            return " ".join(tokens), capitalized
        tokens = again
    # The rules only shrink tokens, so this cannot loop forever.
    return " ".join(tokens), capitalized


@dataclass
class IngestSummary:
    parse: ParseSummary = field(default_factory=ParseSummary)
    chains_seen: int = 0
    chains_kept: int = 0
    chains_dropped: int = 0
    mentions_kept: int = 0

    def to_dict(self) -> dict:
        return {
            "records_read": self.parse.records_read,
            "lines_skipped": self.parse.lines_skipped,
            "short_chains_dropped": self.parse.short_chains_dropped,
            "chains_seen": self.chains_seen,
            "chains_kept": self.chains_kept,
            "chains_dropped": self.chains_dropped,
            "mentions_kept": self.mentions_kept,
        }


@dataclass
class IngestResult:
    phrases: dict[str, Phrase]
    chains: list[list[str]]
    summary: IngestSummary


def ingest(records: Iterable[ChainRecord], lists: StopLists) -> IngestResult:
    """Normalize chains and build the phrase table.

    Mentions of the same canonical phrase within one chain are collapsed
    to a single membership before any counting, so every emitted chain
    is a list of >= 2 distinct canonical phrases and the phrase counts
    match the emitted chains exactly.
    """
    table: dict[str, Phrase] = {}
    emitted: list[list[str]] = []
    summary = IngestSummary()
    for record in records:
        for chain in record.chains:
            summary.chains_seen += 1
            survivors: dict[str, bool] = {}
            for mention in chain:
                canon, capitalized = normalize_phrase_cased(mention, lists)
                if canon is None:
                    continue
                if canon not in survivors:
                    survivors[canon] = capitalized
            if len(survivors) < 2:
                summary.chains_dropped += 1
                continue
            emitted.append(list(survivors))
            summary.chains_kept += 1
            summary.mentions_kept += len(survivors)
            for canon, capitalized in survivors.items():
                phrase = table.get(canon)
                if phrase is None:
                    phrase = table[canon] = Phrase(text=canon)
                phrase.raw_occurrences += 1
                if capitalized:
                    phrase.capitalized_occurrences += 1
    return IngestResult(phrases=table, chains=emitted, summary=summary)


def ingest_file(path: Path, lists: StopLists) -> IngestResult:
    """Parse and ingest a chains file in one step."""
    summary = ParseSummary()
    result = ingest(parse_chain_file(path, summary=summary), lists)
    result.summary.parse = summary
    return result


# ---------------------------------------------------------------------------
# Phrase-table persistence (canonical <TAB> raw <TAB> capitalized)
# ---------------------------------------------------------------------------

def save_phrase_table(path: Path, table: dict[str, Phrase]) -> None:
    with Path(path).open("w", encoding="utf-8") as out:
        for text in sorted(table):
            p = table[text]
            out.write(f"{p.text}\t{p.raw_occurrences}\t{p.capitalized_occurrences}\n")


def load_phrase_table(path: Path) -> dict[str, Phrase]:
    table: dict[str, Phrase] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read phrase table {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields")
        table[parts[0]] = Phrase(
            text=parts[0],
            raw_occurrences=int(parts[1]),
            capitalized_occurrences=int(parts[2]),
        )
    return table


def save_chains(path: Path, chains: list[list[str]]) -> None:
    with Path(path).open("w", encoding="utf-8") as out:
        for chain in chains:
            out.write("\t".join(chain) + "\n")


def load_chains(path: Path) -> list[list[str]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read chains file {path}: {exc}") from exc
    return [line.split("\t") for line in lines if line.strip()]
