"""Frequency analysis of resolved URLs to surface candidate affiliate patterns."""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, NamedTuple
from urllib.parse import parse_qsl, urlsplit

import tldextract

from .urlresolve import RedirectChain

SHEET_HEADER = ("kind", "domain", "detail", "count", "disposition")
KINDS = ("subdomain_fanout", "path_fanout", "param_cooccurrence")


@lru_cache(maxsize=1)
def _extractor() -> tldextract.TLDExtract:
    # bundled suffix snapshot only; never fetch the live list
    return tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None)


def split_host(host: str) -> tuple[str, str]:
    """Split a host into (registrable domain, subdomain labels).

    Hosts without a public suffix (IPs, ``localhost``) are their own domain.
    """
    host = host.lower().rstrip(".")
    ext = _extractor()(host)
    if not ext.suffix or not ext.domain:
        return host, ""
    return f"{ext.domain}.{ext.suffix}", ext.subdomain


class UrlFeatures(NamedTuple):
    domain: str
    subdomain: str
    path_segment: str
    params: frozenset[str]


def url_features(url: str) -> UrlFeatures:
    parts = urlsplit(url)
    host = parts.hostname
    if not host:
        raise ValueError(f"no host in {url!r}")
    domain, sub = split_host(host)
    segment = parts.path.lstrip("/").split("/", 1)[0]
    params = frozenset(k for k, _ in parse_qsl(parts.query, keep_blank_values=True))
    return UrlFeatures(domain, sub, segment, params)


@dataclass
class CooccurrenceTable:
    domain_subdomain: dict[str, Counter] = field(default_factory=lambda: defaultdict(Counter))
    domain_path: dict[str, Counter] = field(default_factory=lambda: defaultdict(Counter))
    domain_param: Counter = field(default_factory=Counter)
    skipped: int = 0

    def add_url(self, url: str) -> None:
        try:
            f = url_features(url)
        except ValueError:
            self.skipped += 1
            return
        if f.subdomain:
            self.domain_subdomain[f.domain][f.subdomain] += 1
        if f.path_segment:
            self.domain_path[f.domain][f.path_segment] += 1
        for name in f.params:
            self.domain_param[(f.domain, name)] += 1

    def merge(self, other: "CooccurrenceTable") -> "CooccurrenceTable":
        out = CooccurrenceTable()
        for src in (self, other):
            for d, c in src.domain_subdomain.items():
                out.domain_subdomain[d].update(c)
            for d, c in src.domain_path.items():
                out.domain_path[d].update(c)
            out.domain_param.update(src.domain_param)
            out.skipped += src.skipped
        return out


def build_tables(chains: Iterable[RedirectChain], include_failed: bool = False) -> CooccurrenceTable:
    """Tally every hop URL of every chain.

    Chains that timed out, errored or failed to fetch are left out unless
    ``include_failed`` is set.
    """
    table = CooccurrenceTable()
    for chain in chains:
        if chain.failed and not include_failed:
            continue
        for url in chain.urls:
            table.add_url(url)
    return table


@dataclass(frozen=True)
class PatternCandidate:
    kind: str
    domain: str
    detail: str
    count: int


def candidates(table: CooccurrenceTable, min_count: int = 15) -> list[PatternCandidate]:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    out = []
    for (domain, name), n in table.domain_param.items():
        if n >= min_count:
            out.append(PatternCandidate("param_cooccurrence", domain, name, n))
    for kind, tally, noun in (
        ("subdomain_fanout", table.domain_subdomain, "subdomains"),
        ("path_fanout", table.domain_path, "paths"),
    ):
        for domain, counter in tally.items():
            distinct = len(counter)
            if distinct >= min_count:
                top = ",".join(k for k, _ in sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))[:3])
                out.append(PatternCandidate(kind, domain, f"{distinct} {noun}; top: {top}", distinct))
    out.sort(key=lambda c: (-c.count, c.domain, c.detail))
    return out


def export_review_sheet(cands: Iterable[PatternCandidate], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(SHEET_HEADER)
        for c in cands:
            writer.writerow((c.kind, c.domain, c.detail, c.count, ""))
