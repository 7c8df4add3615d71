"""Disclosure extraction: sentence segmentation, bag-of-words vectors,
clustering digests and the rule cascade that types each disclosure."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cluster import ClusterTree, hcluster, medoid
from .corpus import ContentItem, is_english, url_spans

AFFILIATE_LINK = "AffiliateLink"
EXPLANATION = "Explanation"
CHANNEL_SUPPORT = "ChannelSupport"
DTYPES = (AFFILIATE_LINK, EXPLANATION, CHANNEL_SUPPORT)

DEFAULT_THRESHOLD = 1.5

_TOKEN_RE = re.compile(r"[^\W_]+")
_TERMINATORS = ".!?"


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


@dataclass(frozen=True)
class Sentence:
    content_id: str
    line_index: int
    sentence_index: int
    text: str
    tokens: Counter = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("sentence text must be non-empty")
        if self.tokens is None:
            object.__setattr__(self, "tokens", Counter(tokenize(self.text)))


def _split_line(line: str) -> list[str]:
    masked = set()
    for a, b in url_spans(line):
        masked.update(range(a, b))
    pieces, start = [], 0
    for i, ch in enumerate(line):
        if ch in _TERMINATORS and i not in masked:
            nxt = i + 1
            if nxt == len(line) or line[nxt].isspace():
                pieces.append(line[start:nxt])
                start = nxt
    pieces.append(line[start:])
    return [p.strip() for p in pieces if p.strip()]


def segment(description: str, content_id: str = "") -> list[Sentence]:
    """Split on newlines, then at ``.``/``!``/``?`` followed by whitespace or line end.

    Terminators inside URLs never split.
    """
    out = []
    for li, line in enumerate(description.splitlines()):
        for si, text in enumerate(_split_line(line)):
            out.append(Sentence(content_id, li, si, text))
    return out


@dataclass(frozen=True)
class SentenceVector:
    sentence: Sentence
    counts: Mapping[str, int]


def vectorize(sentences: Sequence[Sentence]) -> list[SentenceVector]:
    return [SentenceVector(s, dict(s.tokens)) for s in sentences]


def to_matrix(vectors: Sequence[SentenceVector]) -> tuple[np.ndarray, list[str]]:
    vocab = sorted({t for v in vectors for t in v.counts})
    index = {t: j for j, t in enumerate(vocab)}
    X = np.zeros((len(vectors), len(vocab)))
    for i, v in enumerate(vectors):
        for t, c in v.counts.items():
            X[i, index[t]] = c
    return X, vocab


def cluster_sentences(vectors: Sequence[SentenceVector], linkage: str = "average") -> ClusterTree:
    if not vectors:
        raise ValueError("need at least one sentence")
    X, _ = to_matrix(vectors)
    return hcluster(X, linkage=linkage)


def cluster_digest(
    vectors: Sequence[SentenceVector],
    threshold: float = DEFAULT_THRESHOLD,
    linkage: str = "average",
    samples: int = 5,
) -> list[dict]:
    """Summaries of the clusters at ``threshold``, largest first."""
    if not vectors:
        return []
    X, _ = to_matrix(vectors)
    tree = hcluster(X, linkage=linkage)
    digest = []
    for members in tree.cut(threshold):
        digest.append({
            "size": len(members),
            "medoid": vectors[medoid(X, members)].sentence.text,
            "samples": [vectors[i].sentence.text for i in members[:samples]],
        })
    digest.sort(key=lambda d: (-d["size"], d["medoid"]))
    return digest


# -- rule cascade -----------------------------------------------------------

AFFILIATE_TERMS = frozenset({
    "affiliate", "affiliates", "affiliated", "aff", "affiliatelink", "affiliatelinks",
})
LINK_TERMS = frozenset({"link", "links", "url", "urls"})
COMPENSATION_TERMS = frozenset({
    "commission", "commissions", "earn", "earns", "earned", "earning", "receive", "receives",
    "received", "paid", "sale", "sales",
})
SUPPORT_TERMS = frozenset({"support", "supports", "supporting"})
SUPPORT_TARGETS = LINK_TERMS | frozenset({"shop", "shops", "shopping", "channel", "channels"})


@dataclass(frozen=True)
class DisclosureRecord:
    content_id: str
    sentence: Sentence
    dtype: str
    rule_id: str

    def to_record(self) -> dict:
        return {
            "content_id": self.content_id,
            "line_index": self.sentence.line_index,
            "sentence_index": self.sentence.sentence_index,
            "text": self.sentence.text,
            "dtype": self.dtype,
            "rule_id": self.rule_id,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "DisclosureRecord":
        s = Sentence(record["content_id"], record["line_index"], record["sentence_index"], record["text"])
        if record["dtype"] not in DTYPES:
            raise ValueError(f"unknown dtype {record['dtype']!r}")
        return cls(record["content_id"], s, record["dtype"], record["rule_id"])


def classify_rule(text: str, platform: str | None = None) -> tuple[str, str] | None:
    """Return ``(dtype, rule_id)`` for the first rule that fires, else None.

    Precedence: explanation, channel support, bare affiliate mention. Channel
    support is skipped for Pinterest items. URLs are ignored, so query
    names such as ``aff_id`` never read as disclosure words.
    """
    for a, b in reversed(url_spans(text)):
        text = text[:a] + " " + text[b:]
    tokens = set(tokenize(text))
    affiliate = tokens & AFFILIATE_TERMS
    compensation = bool(tokens & COMPENSATION_TERMS) or "%" in text
    if (affiliate or tokens & LINK_TERMS) and compensation:
        return EXPLANATION, "explanation:affiliate+compensation"
    if platform != "pinterest" and tokens & SUPPORT_TERMS and tokens & SUPPORT_TARGETS:
        return CHANNEL_SUPPORT, "channel_support:support+target"
    if affiliate:
        return AFFILIATE_LINK, "affiliate_link:mention"
    return None


def classify_disclosure(sentence: Sentence | str, platform: str | None = None) -> str | None:
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    hit = classify_rule(text, platform)
    return hit[0] if hit else None


def extract_disclosures(items: Iterable[ContentItem], english_only: bool = True) -> list[DisclosureRecord]:
    out = []
    for item in items:
        if english_only and not is_english(item.description):
            continue
        for s in segment(item.description, item.id):
            hit = classify_rule(s.text, item.platform)
            if hit:
                out.append(DisclosureRecord(item.id, s, *hit))
    return out


def write_disclosures(records: Iterable[DisclosureRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


def read_disclosures(path: str | Path) -> list[DisclosureRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(DisclosureRecord.from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"disclosure line {lineno}: {exc}") from None
    return out
