"""Synthetic corpora with planted affiliate and disclosure rates.

Every URL in a generated corpus has a fixture route, so the whole pipeline
can run against :class:`~affdisclose.fixtures.FixtureServer`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import fixtures
from .affdetect import PatternDb, load_pattern_db, synthesize_urls
from .corpus import ContentItem, gen_youtube_prefixes
from .disclose import AFFILIATE_LINK, CHANNEL_SUPPORT, DTYPES, EXPLANATION

# YouTube per-type prevalence among affiliate videos (percent)
YOUTUBE_TYPE_SHARES = {AFFILIATE_LINK: 7.02, EXPLANATION: 1.82, CHANNEL_SUPPORT: 2.44}

YOUTUBE_CATEGORIES = ("Howto & Style", "Science & Technology", "Gaming", "People & Blogs", "Music")
PINTEREST_CATEGORIES = ("Women's Fashion", "Hair & Beauty", "Outdoors", "Home Decor", "DIY & Crafts")

DISCLOSURE_SENTENCES = {
    AFFILIATE_LINK: (
        "Affiliate links may be present above.",
        "Some of the links may be affiliate links.",
        "(Disclosure: These are affiliate links)",
        "*Amazon link(s) are affiliate links",
    ),
    EXPLANATION: (
        "This video contains affiliate links, which means that if you click on one of the links, "
        "I'll receive a small commission.",
        "I am an affiliate with eBay, Amazon, B&H and Adorama, which means I get a small commission "
        "when you buy through my links.",
    ),
    CHANNEL_SUPPORT: (
        "Shop using these links to support the channel.",
        "Purchase RP here and help support this channel via the amazon affiliate program.",
    ),
}

FILLER_LINES = (
    "Thanks for watching and see you in the next one!",
    "Don't forget to like and subscribe for more.",
    "Let me know what you think in the comments below.",
    "I hope this helps you with your own project.",
)


@dataclass
class PlantedCorpus:
    items: list[ContentItem]
    routes: dict[str, fixtures.Route]
    affiliate_ids: set[str] = field(default_factory=set)
    disclosed: dict[str, str] = field(default_factory=dict)
    planted_patterns: dict[str, str] = field(default_factory=dict)

    @property
    def n_affiliate(self) -> int:
        return len(self.affiliate_ids)


def apportion(total: int, shares: dict[str, float]) -> dict[str, int]:
    """Largest-remainder split of ``total`` in proportion to ``shares``."""
    weight = sum(shares.values())
    raw = {k: total * v / weight for k, v in shares.items()}
    out = {k: int(v) for k, v in raw.items()}
    rest = total - sum(out.values())
    for k in sorted(raw, key=lambda k: (-(raw[k] - out[k]), k))[:rest]:
        out[k] += 1
    return out


def _with_param(url: str, name: str, value: str) -> str:
    return f"{url}{'&' if '?' in url else '?'}{name}={value}"


def generate_planted_corpus(
    n_items: int = 10_000,
    affiliate_rate: float = 0.0067,
    disclosure_rate: float = 0.1049,
    type_shares: dict[str, float] | None = None,
    non_affiliate_url_rate: float = 0.3,
    seed: int = 0,
    db: PatternDb | None = None,
) -> PlantedCorpus:
    """Build a YouTube-like corpus with exactly planted counts.

    Affiliate items number ``round(n_items * affiliate_rate)``; of these
    ``round(n_affiliate * disclosure_rate)`` carry one disclosure, split across
    types by largest remainder over ``type_shares``. Affiliate URLs cycle
    through every pattern in ``db`` and reach it directly, via an HTTP
    redirect, or via a meta refresh, always followed by a merchant page.
    """
    db = db or load_pattern_db()
    type_shares = type_shares or YOUTUBE_TYPE_SHARES
    rng = random.Random(seed)
    n_aff = round(n_items * affiliate_rate)
    n_disc = round(n_aff * disclosure_rate)
    per_type = apportion(n_disc, type_shares)

    stems = gen_youtube_prefixes(n_items, seed)
    ids = [f"{p.value}{i:06d}" for i, p in enumerate(stems)]
    aff_positions = set(rng.sample(range(n_items), n_aff))
    aff_order = sorted(aff_positions)
    dtypes = [t for t in DTYPES for _ in range(per_type.get(t, 0))]
    disclosed_at = dict(zip(rng.sample(aff_order, n_disc), dtypes))

    patterns = list(db)
    negatives = [synthesize_urls(p)[1] for p in patterns]
    out = PlantedCorpus([], {})
    creators = [f"UC{k:05d}" for k in range(max(1, n_items // 5))]

    for i, item_id in enumerate(ids):
        lines = []
        if i in aff_positions:
            k = aff_order.index(i)
            pattern = patterns[k % len(patterns)]
            aff_url = _with_param(synthesize_urls(pattern)[0], "u", item_id)
            merchant = f"https://shop{k % 7}.example.com/p/{item_id}"
            route_kind = k % 3
            if route_kind == 0:
                url = aff_url
                out.routes[aff_url] = fixtures.redirect(merchant, 302)
            else:
                url = f"http://bit.ly/{item_id}"
                out.routes[url] = fixtures.redirect(aff_url) if route_kind == 1 else fixtures.meta_refresh(aff_url)
                out.routes[aff_url] = fixtures.redirect(merchant, 302)
            out.routes[merchant] = fixtures.page("product")
            out.affiliate_ids.add(item_id)
            out.planted_patterns[item_id] = pattern.pattern_id
            lines.append(f"Get the gear I used in this video here: {url}")
            if i in disclosed_at:
                dtype = disclosed_at[i]
                lines.append(rng.choice(DISCLOSURE_SENTENCES[dtype]))
                out.disclosed[item_id] = dtype
        elif rng.random() < non_affiliate_url_rate:
            if rng.random() < 0.2:
                url = _with_param(negatives[i % len(negatives)], "u", item_id)
                out.routes[url] = fixtures.page("product")
            else:
                url = f"https://blog{i % 11}.example.org/post/{item_id}"
                out.routes[url] = fixtures.page("post")
            lines.append(f"Read more about this on my blog at {url}")
        lines.append(rng.choice(FILLER_LINES))
        is_aff = item_id in out.affiliate_ids
        views = int(rng.lognormvariate(10.0 if is_aff else 8.0, 1.0))
        out.items.append(ContentItem(
            id=item_id,
            platform="youtube",
            description="\n".join(lines),
            category=rng.choice(YOUTUBE_CATEGORIES),
            creator_id=rng.choice(creators),
            view_count=views,
            like_count=int(views * rng.uniform(0.01, 0.05)),
            dislike_count=int(views * rng.uniform(0.0, 0.005)),
            comment_count=int(views * rng.uniform(0.0, 0.01)),
            duration_seconds=int(rng.uniform(60, 1800 if is_aff else 900)),
        ))
    return out
