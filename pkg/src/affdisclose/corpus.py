"""Content items, corpus files, sampling identifiers and description text helpers."""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

PLATFORMS = ("youtube", "pinterest")

REQUIRED_KEYS = ("id", "platform", "description", "category", "creator_id")
COUNTER_KEYS = (
    "view_count",
    "like_count",
    "dislike_count",
    "comment_count",
    "repin_count",
    "duration_seconds",
)
_YOUTUBE_ONLY = ("dislike_count", "duration_seconds")
_PINTEREST_ONLY = ("repin_count",)

# 64-symbol web-safe alphabet used by video identifiers
ID_ALPHABET = string.ascii_uppercase + string.ascii_lowercase + string.digits + "-_"

# Seeded draws use random.Random (Mersenne Twister MT19937); keep it pinned so
# prefix lists are reproducible across builds.
RNG_ALGORITHM = "MT19937"

ENGLISH_THRESHOLD = 0.2


class CorpusError(ValueError):
    """Raised for malformed corpus records."""


@dataclass(frozen=True)
class ContentItem:
    id: str
    platform: str
    description: str
    category: str
    creator_id: str
    view_count: int | None = None
    like_count: int | None = None
    dislike_count: int | None = None
    comment_count: int | None = None
    repin_count: int | None = None
    duration_seconds: int | None = None
    extra: Mapping[str, object] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise CorpusError("id must be a non-empty string")
        if self.platform not in PLATFORMS:
            raise CorpusError(f"unknown platform {self.platform!r}")
        for key in COUNTER_KEYS:
            value = getattr(self, key)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise CorpusError(f"{key} must be a non-negative integer, got {value!r}")
        banned = _PINTEREST_ONLY if self.platform == "youtube" else _YOUTUBE_ONLY
        for key in banned:
            if getattr(self, key) is not None:
                raise CorpusError(f"{key} is not allowed for platform {self.platform}")

    def to_record(self) -> dict:
        record = dict(self.extra)
        for key in REQUIRED_KEYS:
            record[key] = getattr(self, key)
        for key in COUNTER_KEYS:
            value = getattr(self, key)
            if value is not None:
                record[key] = value
        return record

    @classmethod
    def from_record(cls, record: Mapping) -> "ContentItem":
        for key in REQUIRED_KEYS:
            if key not in record:
                raise CorpusError(f"missing field {key!r}")
            if not isinstance(record[key], str):
                raise CorpusError(f"field {key!r} must be a string")
        known = set(REQUIRED_KEYS) | set(COUNTER_KEYS)
        kwargs = {k: record[k] for k in REQUIRED_KEYS}
        for key in COUNTER_KEYS:
            if record.get(key) is not None:
                kwargs[key] = record[key]
        extra = {k: v for k, v in record.items() if k not in known}
        return cls(**kwargs, extra=extra)


def iter_corpus(path: str | Path) -> Iterator[ContentItem]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise CorpusError(f"line {lineno}: record must be an object")
            try:
                yield ContentItem.from_record(record)
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from None


def load_corpus(path: str | Path) -> list[ContentItem]:
    """Read a JSON-lines corpus file, preserving item order.

    Errors carry the offending line number and field name.
    """
    return list(iter_corpus(path))


def write_corpus(items: Iterable[ContentItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


@dataclass(frozen=True)
class SamplePrefix:
    platform: str
    value: str


def gen_youtube_prefixes(count: int, seed: int) -> list[SamplePrefix]:
    """Draw ``count`` random five-character identifier prefixes.

    Characters are drawn one at a time, uniformly from :data:`ID_ALPHABET`, so
    the first ``k`` prefixes for a seed do not depend on ``count``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    return [
        SamplePrefix("youtube", "".join(rng.choice(ID_ALPHABET) for _ in range(5)))
        for _ in range(count)
    ]


def gen_pinterest_ids(seed_id: str, lo: int = 0, hi: int = 1500) -> list[str]:
    """Replace the trailing five digits of a seed pin id with ``lo..hi``."""
    if not seed_id.isdigit() or len(seed_id) < 6:
        raise ValueError(f"seed_id must be a digit string of length >= 6, got {seed_id!r}")
    if not 0 <= lo <= hi <= 99999:
        raise ValueError(f"need 0 <= lo <= hi <= 99999, got lo={lo} hi={hi}")
    head = seed_id[:-5]
    return [f"{head}{n:05d}" for n in range(lo, hi + 1)]


_URL_RE = re.compile(r"https?://\S+", re.IGNORECASE)
_TRAIL = "().,!;\"'"
_PAIRS = {")": "("}


def _strip_trailing(url: str) -> str:
    while url and url[-1] in _TRAIL:
        ch = url[-1]
        # keep a closing paren that balances one inside the URL
        if ch in _PAIRS and url.count(_PAIRS[ch]) >= url.count(ch):
            break
        url = url[:-1]
    return url


def url_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of URLs in ``text`` after trailing punctuation is dropped."""
    spans = []
    for m in _URL_RE.finditer(text):
        url = _strip_trailing(m.group(0))
        if len(url) > url.index("//") + 2:
            spans.append((m.start(), m.start() + len(url)))
    return spans


def extract_urls(text: str) -> list[str]:
    return [text[a:b] for a, b in url_spans(text)]


@lru_cache(maxsize=1)
def english_words() -> frozenset[str]:
    data = resources.files("affdisclose").joinpath("data/english_common.txt").read_text("utf-8")
    return frozenset(w.strip() for w in data.split() if w.strip())


def is_english(text: str, threshold: float = ENGLISH_THRESHOLD) -> bool:
    tokens = [t.strip(string.punctuation + "“”‘’«»¡¿").lower() for t in text.split()]
    tokens = [t for t in tokens if t.isalpha()]
    if not tokens:
        return False
    words = english_words()
    hits = sum(t in words for t in tokens)
    return hits / len(tokens) >= threshold


def descriptions_urls(items: Sequence[ContentItem]) -> list[str]:
    """Distinct URLs across all descriptions, in first-appearance order."""
    return list(dict.fromkeys(u for item in items for u in extract_urls(item.description)))
