"""Affiliate-marketing link detection and disclosure measurement for social-media corpora."""

from .affdetect import AffiliatePattern, AffiliateVerdict, PatternDb, detect_affiliate, load_pattern_db, match_chain, match_url
from .corpus import ContentItem, extract_urls, gen_pinterest_ids, gen_youtube_prefixes, is_english, load_corpus, write_corpus
from .disclose import classify_disclosure, extract_disclosures, segment, vectorize
from .cluster import ClusterTree, hcluster
from .pattmine import build_tables, candidates
from .stats import bonferroni, engagement_comparison, mann_whitney_u, prevalence_by_category
from .urlresolve import HttpFetcher, RedirectChain, RedirectHop, ResolvePolicy, resolve, resolve_corpus

__version__ = "0.1.0"
