"""Load, validate, and serialize evaluation corpora stored as JSONL.

One record per line: {"id", "domain", "title"?, "text", "variant"?}.
Unknown fields are preserved so files survive schema evolution; text is
stored byte-for-byte as found so character-level metrics see the source
exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .segmentation import DEFAULT_TRADITIONAL_THRESHOLD, detect_traditional

SIMPLIFIED = "simplified"
TRADITIONAL = "traditional"
UNKNOWN = "unknown"

_VARIANTS = (SIMPLIFIED, TRADITIONAL, UNKNOWN)
_KNOWN_FIELDS = ("id", "domain", "title", "text", "variant")


class CorpusError(ValueError):
    """Malformed corpus file or record."""


@dataclass
class TextSample:
    id: str
    domain: str
    text: str
    title: str | None = None
    variant: str = UNKNOWN
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("sample id must be non-empty")
        if not self.text.strip():
            raise CorpusError(f"sample {self.id}: text is empty")
        if self.variant not in _VARIANTS:
            raise CorpusError(f"sample {self.id}: unknown variant {self.variant!r}")


@dataclass
class Corpus:
    name: str
    samples: list[TextSample]
    source_path: Path | None = field(default=None, compare=False)
    sha256: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.samples:
            raise CorpusError("empty corpus")
        seen = set()
        for sample in self.samples:
            if sample.id in seen:
                raise CorpusError(f"duplicate id {sample.id!r}")
            seen.add(sample.id)

    def __iter__(self) -> Iterator[TextSample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i: int) -> TextSample:
        return self.samples[i]


def _parse_record(data: dict, lineno: int) -> TextSample:
    for key in ("id", "domain", "text"):
        if key not in data:
            raise CorpusError(f"line {lineno}: missing field {key!r}")
    extra = {k: v for k, v in data.items() if k not in _KNOWN_FIELDS}
    try:
        return TextSample(
            id=str(data["id"]),
            domain=str(data["domain"]),
            text=str(data["text"]),
            title=data.get("title"),
            variant=data.get("variant", UNKNOWN),
            extra=extra,
        )
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from exc


def parse_corpus(path: str | Path) -> Corpus:
    """Parse a JSONL corpus, preserving line order; errors carry 1-based line numbers."""
    path = Path(path)
    raw = path.read_bytes()
    samples: list[TextSample] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(raw.decode("utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(data, dict):
            raise CorpusError(f"{path}: line {lineno}: record must be a JSON object")
        sample = _parse_record(data, lineno)
        if sample.id in seen:
            raise CorpusError(
                f"{path}: line {lineno}: duplicate id {sample.id!r} "
                f"(first seen on line {seen[sample.id]})"
            )
        seen[sample.id] = lineno
        samples.append(sample)
    if not samples:
        raise CorpusError(f"{path}: empty corpus")
    return Corpus(
        name=path.stem,
        samples=samples,
        source_path=path,
        sha256=hashlib.sha256(raw).hexdigest(),
    )


def serialize_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write JSONL that parse_corpus round-trips field-by-field."""
    lines = []
    for sample in corpus.samples:
        record: dict = {"id": sample.id, "domain": sample.domain}
        if sample.title is not None:
            record["title"] = sample.title
        record["text"] = sample.text
        record["variant"] = sample.variant
        record.update(sample.extra)
        lines.append(json.dumps(record, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ValidationPolicy:
    traditional_threshold: float = DEFAULT_TRADITIONAL_THRESHOLD
    min_chars: int = 2  # below this, 2-gram precision is empty and BLEU collapses
    check_variant: bool = True
    check_length: bool = True


def validate_corpus(
    corpus: Corpus,
    policy: ValidationPolicy = ValidationPolicy(),
    variant_table: dict[str, str] | None = None,
) -> list[str]:
    """Non-mutating checks; returns human-readable warnings."""
    warnings: list[str] = []
    for sample in corpus:
        stripped = "".join(sample.text.split())
        if policy.check_length and len(stripped) < policy.min_chars:
            warnings.append(f"{sample.id}: sample too short for 2-gram BLEU")
        if policy.check_variant and sample.variant == SIMPLIFIED:
            ratio, flagged = detect_traditional(
                sample.text, variant_table, policy.traditional_threshold
            )
            if flagged:
                warnings.append(
                    f"{sample.id}: traditional characters detected "
                    f"(ratio {ratio:.3f} exceeds {policy.traditional_threshold})"
                )
    return warnings
