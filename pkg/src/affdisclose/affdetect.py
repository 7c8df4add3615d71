"""Affiliate URL pattern database and matching over URLs and redirect chains."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence
from urllib.parse import parse_qsl, urlsplit

from .corpus import ContentItem, extract_urls
from .urlresolve import RedirectChain

log = logging.getLogger(__name__)

SHIPPED_PATTERN_COUNT = 57
SHIPPED_COMPANY_COUNT = 33

HOST_KINDS = ("exact", "suffix", "regex")
PATH_KINDS = ("any", "prefix", "regex")


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class AffiliatePattern:
    pattern_id: str
    company: str
    host_kind: str
    host_value: str
    path_kind: str = "any"
    path_value: str | None = None
    required_params: frozenset[str] = frozenset()
    source_note: str = ""
    _host_re: re.Pattern | None = field(default=None, init=False, repr=False, compare=False)
    _path_re: re.Pattern | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        pid = self.pattern_id
        if not pid:
            raise PatternError("pattern_id must be non-empty")
        if self.host_kind not in HOST_KINDS:
            raise PatternError(f"{pid}: unknown host rule kind {self.host_kind!r}")
        if self.path_kind not in PATH_KINDS:
            raise PatternError(f"{pid}: unknown path rule kind {self.path_kind!r}")
        if not self.host_value:
            raise PatternError(f"{pid}: empty host rule")
        if self.path_kind != "any" and not self.path_value:
            raise PatternError(f"{pid}: path rule {self.path_kind} needs a value")
        object.__setattr__(self, "required_params", frozenset(self.required_params))
        try:
            if self.host_kind == "regex":
                object.__setattr__(self, "_host_re", re.compile(self.host_value, re.IGNORECASE))
            if self.path_kind == "regex":
                object.__setattr__(self, "_path_re", re.compile(self.path_value))
        except re.error as exc:
            raise PatternError(f"{pid}: regex does not compile ({exc})") from None
        if self.path_kind == "any" and not self.required_params and self.host_kind == "suffix":
            raise PatternError(f"{pid}: a bare suffix host rule is too permissive")

    def host_matches(self, host: str) -> bool:
        value = self.host_value.lower()
        if self.host_kind == "exact":
            return host == value
        if self.host_kind == "suffix":
            return host == value or host.endswith("." + value)
        return self._host_re.search(host) is not None

    def path_matches(self, path: str) -> bool:
        if self.path_kind == "any":
            return True
        if self.path_kind == "prefix":
            return path.startswith(self.path_value)
        return self._path_re.search(path) is not None

    def matches(self, host: str, path: str, params: set[str]) -> bool:
        return self.host_matches(host) and self.path_matches(path) and self.required_params <= params

    def to_record(self) -> dict:
        path_rule = {"kind": self.path_kind}
        if self.path_value is not None:
            path_rule["value"] = self.path_value
        return {
            "pattern_id": self.pattern_id,
            "company": self.company,
            "host_rule": {"kind": self.host_kind, "value": self.host_value},
            "path_rule": path_rule,
            "required_params": sorted(self.required_params),
            "source_note": self.source_note,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "AffiliatePattern":
        path_rule = record.get("path_rule") or {"kind": "any"}
        return cls(
            pattern_id=record["pattern_id"],
            company=record["company"],
            host_kind=record["host_rule"]["kind"],
            host_value=record["host_rule"]["value"],
            path_kind=path_rule["kind"],
            path_value=path_rule.get("value"),
            required_params=frozenset(record.get("required_params", ())),
            source_note=record.get("source_note", ""),
        )


@dataclass(frozen=True)
class PatternDb:
    patterns: tuple[AffiliatePattern, ...]
    version: str = "table3-v1"

    def __post_init__(self):
        ordered = tuple(sorted(self.patterns, key=lambda p: p.pattern_id))
        seen = set()
        for p in ordered:
            if p.pattern_id in seen:
                raise PatternError(f"duplicate pattern_id {p.pattern_id!r}")
            seen.add(p.pattern_id)
        object.__setattr__(self, "patterns", ordered)

    @property
    def companies(self) -> set[str]:
        return {p.company for p in self.patterns}

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def get(self, pattern_id: str) -> AffiliatePattern:
        for p in self.patterns:
            if p.pattern_id == pattern_id:
                return p
        raise KeyError(pattern_id)


def shipped_patterns_path() -> Path:
    return Path(str(resources.files("affdisclose").joinpath("data/patterns.jsonl")))


def load_pattern_db(path: str | Path | None = None, *, strict: bool = True) -> PatternDb:
    """Load a pattern file; ``path=None`` loads the shipped database.

    With ``strict`` the 57-pattern / 33-company shape of the shipped table is
    enforced as well.
    """
    path = shipped_patterns_path() if path is None else Path(path)
    patterns = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                patterns.append(AffiliatePattern.from_record(record))
            except PatternError:
                raise
            except (ValueError, KeyError, TypeError) as exc:
                raise PatternError(f"pattern line {lineno}: {exc!r}") from None
    db = PatternDb(tuple(patterns))
    if strict:
        if len(db) != SHIPPED_PATTERN_COUNT or len(db.companies) != SHIPPED_COMPANY_COUNT:
            raise PatternError(
                f"expected {SHIPPED_PATTERN_COUNT} patterns from {SHIPPED_COMPANY_COUNT} companies, "
                f"found {len(db)} from {len(db.companies)}"
            )
    return db


def write_pattern_db(db: PatternDb, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in db:
            fh.write(json.dumps(p.to_record()) + "\n")


class Match(NamedTuple):
    pattern_id: str
    company: str


class UrlMatch(NamedTuple):
    url: str
    pattern_id: str
    company: str


def _url_parts(url: str):
    parts = urlsplit(url.strip())
    host = (parts.hostname or "").rstrip(".")
    if not host:
        raise ValueError("no host")
    params = {name for name, _ in parse_qsl(parts.query, keep_blank_values=True)}
    return host, parts.path or "/", params


def match_url(url: str, db: PatternDb) -> list[Match]:
    try:
        host, path, params = _url_parts(url)
    except ValueError:
        log.info("unparseable URL skipped: %r", url)
        return []
    return [Match(p.pattern_id, p.company) for p in db if p.matches(host, path, params)]


def match_chain(chain: RedirectChain, db: PatternDb) -> list[UrlMatch]:
    found = {}
    for url in chain.urls:
        for m in match_url(url, db):
            found.setdefault((m.pattern_id, url), UrlMatch(url, m.pattern_id, m.company))
    return list(found.values())


@dataclass(frozen=True)
class AffiliateVerdict:
    content_id: str
    matches: tuple[UrlMatch, ...] = ()

    @property
    def is_affiliate(self) -> bool:
        return bool(self.matches)

    @property
    def companies(self) -> set[str]:
        return {m.company for m in self.matches}

    def to_record(self) -> dict:
        return {
            "content_id": self.content_id,
            "is_affiliate": self.is_affiliate,
            "matches": [m._asdict() for m in self.matches],
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "AffiliateVerdict":
        matches = tuple(UrlMatch(m["url"], m["pattern_id"], m["company"]) for m in record["matches"])
        verdict = cls(record["content_id"], matches)
        if verdict.is_affiliate != bool(record.get("is_affiliate", verdict.is_affiliate)):
            raise ValueError(f"inconsistent verdict for {verdict.content_id}")
        return verdict


def detect_affiliate(item: ContentItem, chains: Mapping[str, RedirectChain], db: PatternDb) -> AffiliateVerdict:
    """Match every URL in the item description, through its redirect chain.

    Failed chains (timeout, HTTP error, fetch failure) are matched on their
    original URL only.
    """
    found = {}
    for url in extract_urls(item.description):
        try:
            chain = chains[url]
        except KeyError:
            raise KeyError(f"no redirect chain for URL {url!r}") from None
        if chain.failed:
            hits = [UrlMatch(url, m.pattern_id, m.company) for m in match_url(url, db)]
        else:
            hits = match_chain(chain, db)
        for h in hits:
            found.setdefault((h.pattern_id, h.url), h)
    return AffiliateVerdict(item.id, tuple(found.values()))


# -- synthetic URL suite ----------------------------------------------------

_PARAM_RE = re.compile(r"&(\w+)=\.\.\.")


def synthesize_urls(pattern: AffiliatePattern) -> tuple[str, str]:
    """Build a (positive, negative) URL pair from a pattern's table notation.

    The positive fills every ``...`` gap, digit class and TLD alternation of
    ``source_note``. The negative applies one edit: drop a required parameter,
    else break the path rule, else alter the host.
    """
    note = pattern.source_note
    params = _PARAM_RE.findall(note)
    base = note.split("&", 1)[0]
    base = re.sub(r"\(([^),]*),[^)]*\)", r"\1", base)
    base = base.replace("[0-9]+", "123").replace("[0-9]", "1")
    scheme, _, rest = base.partition("://")
    if rest.startswith("..."):
        rest = "sub" + rest[3:]
    while "..." in rest:
        i = rest.index("...")
        before = rest[i - 1]
        if "/" not in rest[:i]:
            fill = "/item"
        elif before == "/":
            fill = "item"
        elif before == "?":
            fill = "x=1"
        else:
            fill = "?x=1"
        rest = rest[:i] + fill + rest[i + 3:]
    if "/" not in rest:
        rest += "/"
    positive = f"{scheme}://{rest}"

    def with_params(url: str, names: Sequence[str]) -> str:
        if not names:
            return url
        sep = "&" if "?" in url else "?"
        return url + sep + "&".join(f"{n}=v{k}" for k, n in enumerate(names))

    if params:
        return with_params(positive, params), with_params(positive, params[:-1])
    host, _, path = rest.partition("/")
    if pattern.path_kind == "regex":
        broken = re.sub(r"[0-9]+", "x", path, count=1)
        return positive, f"{scheme}://{host}/{broken}"
    if pattern.path_kind == "prefix":
        return positive, f"{scheme}://{host}/other/item"
    labels = host.split(".")
    labels[-1] = "invalid"
    return positive, f"{scheme}://{'.'.join(labels)}/{path}"


def validate_synthetic(db: PatternDb) -> list[str]:
    """Run the positive/negative suite; returns one message per failure."""
    failures = []
    for p in db:
        pos, neg = synthesize_urls(p)
        pos_hits = match_url(pos, db)
        if p.pattern_id not in {m.pattern_id for m in pos_hits}:
            failures.append(f"{p.pattern_id}: positive {pos} does not match")
        elif {m.company for m in pos_hits} != {p.company}:
            failures.append(f"{p.pattern_id}: positive {pos} also matches {sorted({m.company for m in pos_hits})}")
        neg_hits = match_url(neg, db)
        if neg_hits:
            failures.append(f"{p.pattern_id}: negative {neg} matches {[m.pattern_id for m in neg_hits]}")
    return failures


def write_verdicts(verdicts: Iterable[AffiliateVerdict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(v.to_record(), sort_keys=True) + "\n")


def read_verdicts(path: str | Path) -> dict[str, AffiliateVerdict]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                v = AffiliateVerdict.from_record(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"verdict line {lineno}: {exc}") from None
            out[v.content_id] = v
    return out
