"""Prevalence tables and Mann-Whitney U comparisons with Bonferroni correction."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .affdetect import AffiliateVerdict
from .corpus import ContentItem
from .disclose import DTYPES, DisclosureRecord

EXACT_MAX_N = 8

PLATFORM_METRICS = {
    "youtube": ("duration_seconds", "view_count", "like_count", "dislike_count", "comment_count"),
    "pinterest": ("repin_count",),
}


@dataclass(frozen=True)
class CategoryStats:
    category: str
    n_items: int
    n_affiliate: int
    n_disclosed: int
    unique_disclosing_creators: int
    affiliate_pct: float
    disclosed_raw_pct: float
    disclosed_scaled_pct: float
    platform: str = ""
    included: bool = True

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RankTestResult:
    metric: str
    u_statistic: float
    p_value: float
    n1: int
    n2: int
    method: str
    significant: bool = False
    alpha: float | None = None

    def to_record(self) -> dict:
        return asdict(self)


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


def _rates(items: Sequence[ContentItem], verdicts: Mapping[str, AffiliateVerdict], disclosed_ids: set[str]):
    n_aff = n_disc = 0
    creators = set()
    for item in items:
        try:
            verdict = verdicts[item.id]
        except KeyError:
            raise KeyError(f"no affiliate verdict for item {item.id!r}") from None
        if verdict.is_affiliate:
            n_aff += 1
            if item.id in disclosed_ids:
                n_disc += 1
                creators.add(item.creator_id)
    raw = _pct(n_disc, n_aff)
    scaled = raw * len(creators) / n_disc if n_disc else 0.0
    return n_aff, n_disc, len(creators), raw, scaled


def _group(items: Iterable[ContentItem], key) -> dict[str, list[ContentItem]]:
    groups: dict[str, list[ContentItem]] = defaultdict(list)
    for item in items:
        groups[key(item)].append(item)
    return dict(sorted(groups.items()))


def prevalence_by_category(
    items: Sequence[ContentItem],
    verdicts: Mapping[str, AffiliateVerdict],
    disclosures: Iterable[DisclosureRecord],
    min_affiliate: int = 100,
) -> list[CategoryStats]:
    """One row per (platform, category).

    Disclosure rates are over affiliate items; the scaled rate multiplies the
    raw rate by unique disclosing creators over disclosed items. Rows with
    fewer than ``min_affiliate`` affiliate items carry ``included=False``.
    """
    disclosed_ids = {d.content_id for d in disclosures}
    rows = []
    for (platform, category), group in _group(items, lambda i: (i.platform, i.category)).items():
        n_aff, n_disc, creators, raw, scaled = _rates(group, verdicts, disclosed_ids)
        rows.append(CategoryStats(
            category, len(group), n_aff, n_disc, creators,
            _pct(n_aff, len(group)), raw, scaled, platform, n_aff >= min_affiliate,
        ))
    return rows


def platform_summary(
    items: Sequence[ContentItem],
    verdicts: Mapping[str, AffiliateVerdict],
    disclosures: Iterable[DisclosureRecord],
) -> list[dict]:
    """Overall rates per platform plus per-type disclosure prevalence.

    Type prevalence is the share of affiliate items carrying at least one
    disclosure of that type.
    """
    disclosures = list(disclosures)
    disclosed_ids = {d.content_id for d in disclosures}
    by_type: dict[str, set[str]] = defaultdict(set)
    for d in disclosures:
        by_type[d.dtype].add(d.content_id)
    out = []
    for platform, group in _group(items, lambda i: i.platform).items():
        n_aff, n_disc, creators, raw, scaled = _rates(group, verdicts, disclosed_ids)
        aff_ids = {i.id for i in group if verdicts[i.id].is_affiliate}
        out.append({
            "platform": platform,
            "n_items": len(group),
            "n_affiliate": n_aff,
            "affiliate_pct": _pct(n_aff, len(group)),
            "n_disclosed": n_disc,
            "unique_disclosing_creators": creators,
            "disclosed_raw_pct": raw,
            "disclosed_scaled_pct": scaled,
            "type_pct": {t: _pct(len(by_type[t] & aff_ids), n_aff) for t in DTYPES},
        })
    return out


# -- Mann-Whitney U ---------------------------------------------------------

def midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """U for group ``a``: pairs with a > b, ties counting one half."""
    ranks = midranks(list(a) + list(b))
    n1 = len(a)
    return sum(ranks[:n1]) - n1 * (n1 + 1) / 2


@lru_cache(maxsize=None)
def _u_counts(n1: int, n2: int) -> tuple[int, ...]:
    # counts[u] = number of rank assignments of size n1 among n1+n2 giving U = u
    if n1 == 0 or n2 == 0:
        return (1,)
    with_top = _u_counts(n1 - 1, n2)  # largest value belongs to a: adds n2 to U
    without = _u_counts(n1, n2 - 1)
    counts = [0] * (n1 * n2 + 1)
    for u, c in enumerate(with_top):
        counts[u + n2] += c
    for u, c in enumerate(without):
        counts[u] += c
    return tuple(counts)


def exact_p(u: float, n1: int, n2: int) -> float:
    """Two-sided exact p for a tie-free U: twice the smaller tail, capped at 1."""
    counts = _u_counts(n1, n2)
    total = sum(counts)
    k = int(round(u))
    lower = sum(counts[: k + 1])
    upper = sum(counts[k:])
    return float(min(Fraction(1), Fraction(2 * min(lower, upper), total)))


def normal_p(a: Sequence[float], b: Sequence[float], u: float) -> float:
    n1, n2 = len(a), len(b)
    n = n1 + n2
    counts: dict[float, int] = defaultdict(int)
    for v in list(a) + list(b):
        counts[v] += 1
    tie_term = sum(t ** 3 - t for t in counts.values())
    var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = max(0.0, abs(u - n1 * n2 / 2) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2)))


def mann_whitney_u(a: Sequence[float], b: Sequence[float], metric: str = "") -> RankTestResult:
    """Two-sided Mann-Whitney U test of ``a`` against ``b``.

    Exact enumeration is used when both groups have at most 8 values and
    there are no ties; otherwise the tie-corrected normal approximation with
    continuity correction.
    """
    a, b = list(a), list(b)
    if not a or not b:
        raise ValueError("both groups must be non-empty")
    u = u_statistic(a, b)
    n1, n2 = len(a), len(b)
    if n1 <= EXACT_MAX_N and n2 <= EXACT_MAX_N and len(set(a + b)) == n1 + n2:
        return RankTestResult(metric, u, exact_p(u, n1, n2), n1, n2, "exact")
    return RankTestResult(metric, u, normal_p(a, b, u), n1, n2, "normal_approx")


def bonferroni(p_values: Sequence[float], alpha: float = 0.01, m: int | None = None) -> list[bool]:
    p_values = list(p_values)
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of range: {p}")
    if not p_values:
        return []
    m = len(p_values) if m is None else m
    return [p < alpha / m for p in p_values]


def engagement_comparison(
    items: Sequence[ContentItem],
    verdicts: Mapping[str, AffiliateVerdict],
    alpha: float = 0.01,
) -> list[RankTestResult]:
    """Affiliate vs non-affiliate tests for every metric present in both groups."""
    results = []
    for platform, group in _group(items, lambda i: i.platform).items():
        for metric in PLATFORM_METRICS.get(platform, ()):
            aff, non = [], []
            for item in group:
                value = getattr(item, metric)
                if value is None:
                    continue
                (aff if verdicts[item.id].is_affiliate else non).append(value)
            if aff and non:
                results.append(mann_whitney_u(aff, non, metric=f"{platform}:{metric}"))
    flags = bonferroni([r.p_value for r in results], alpha)
    m = len(results)
    return [
        RankTestResult(r.metric, r.u_statistic, r.p_value, r.n1, r.n2, r.method, flag, alpha / m)
        for r, flag in zip(results, flags)
    ]
