"""Command-line pipeline: resolve -> detect -> mine / disclose -> report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import affdetect, corpus, disclose, pattmine, stats, urlresolve
from .cluster import LINKAGES

log = logging.getLogger("affdisclose")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NETWORK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    input_path: Path | None = None
    patterns_path: Path | None = None
    cache_path: Path | None = None
    output_path: Path | None = None
    verdicts_path: Path | None = None
    disclosures_path: Path | None = None
    min_count: int = 15
    cluster_threshold: float = disclose.DEFAULT_THRESHOLD
    linkage: str = "average"
    max_depth: int = 10
    timeout_seconds: float = 30.0
    max_parallel: int = 16
    alpha: float = 0.01
    seed: int = 0
    affiliate_only: bool = False
    min_affiliate: int = 100
    max_failure_rate: float = 0.10
    proxy: tuple[str, int] | None = None

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                flag = "--" + name.replace("_path", "").replace("_", "-")
                raise UsageError(f"missing required option {flag}")

    def policy(self) -> urlresolve.ResolvePolicy:
        try:
            return urlresolve.ResolvePolicy(self.max_depth, self.timeout_seconds, self.max_parallel)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def _load_items(cfg: RunConfig) -> list[corpus.ContentItem]:
    try:
        return corpus.load_corpus(cfg.input_path)
    except OSError as exc:
        raise DataError(f"cannot read corpus: {exc}") from None
    except corpus.CorpusError as exc:
        raise DataError(f"{cfg.input_path}: {exc}") from None


def _load_cache(path: Path, missing_ok: bool = False) -> dict[str, urlresolve.RedirectChain]:
    if missing_ok and not path.exists():
        return {}
    try:
        return urlresolve.read_cache(path)
    except OSError as exc:
        raise DataError(f"cannot read cache: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _load_db(cfg: RunConfig) -> affdetect.PatternDb:
    try:
        return affdetect.load_pattern_db(cfg.patterns_path, strict=cfg.patterns_path is None)
    except (OSError, affdetect.PatternError) as exc:
        raise DataError(f"pattern db: {exc}") from None


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def cmd_resolve(cfg: RunConfig, fetcher: urlresolve.Fetcher | None = None) -> int:
    cfg.require("input_path", "cache_path")
    items = _load_items(cfg)
    urls = corpus.descriptions_urls(items)
    cached = _load_cache(cfg.cache_path, missing_ok=True)
    todo = [u for u in urls if u not in cached]
    fetcher = fetcher or urlresolve.HttpFetcher(proxy=cfg.proxy)
    fresh = urlresolve.resolve_corpus(todo, cfg.policy(), fetcher)
    merged = {u: fresh.get(u) or cached[u] for u in urls}
    for u, chain in cached.items():
        merged.setdefault(u, chain)
    urlresolve.write_cache(merged.values(), cfg.cache_path)
    failed = sum(merged[u].failed for u in urls)
    log.info("resolved %d URLs (%d new, %d failed)", len(urls), len(todo), failed)
    if urls and failed / len(urls) > cfg.max_failure_rate:
        print(f"{failed}/{len(urls)} URLs failed to resolve", file=sys.stderr)
        return EXIT_NETWORK
    return EXIT_OK


def cmd_detect(cfg: RunConfig) -> int:
    cfg.require("input_path", "cache_path", "output_path")
    items = _load_items(cfg)
    chains = _load_cache(cfg.cache_path)
    db = _load_db(cfg)
    try:
        verdicts = [affdetect.detect_affiliate(item, chains, db) for item in items]
    except KeyError as exc:
        raise DataError(f"{exc.args[0]} (run resolve first)") from None
    affdetect.write_verdicts(verdicts, cfg.output_path)
    log.info("%d of %d items carry affiliate URLs", sum(v.is_affiliate for v in verdicts), len(verdicts))
    return EXIT_OK


def cmd_mine(cfg: RunConfig) -> int:
    cfg.require("cache_path", "output_path")
    chains = _load_cache(cfg.cache_path)
    table = pattmine.build_tables(chains.values())
    cands = pattmine.candidates(table, cfg.min_count)
    pattmine.export_review_sheet(cands, cfg.output_path)
    log.info("%d candidates at min_count=%d (%d URLs skipped)", len(cands), cfg.min_count, table.skipped)
    return EXIT_OK


def _read_verdicts(cfg: RunConfig) -> dict[str, affdetect.AffiliateVerdict]:
    try:
        return affdetect.read_verdicts(cfg.verdicts_path)
    except OSError as exc:
        raise DataError(f"cannot read verdicts: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{cfg.verdicts_path}: {exc}") from None


def cmd_disclose(cfg: RunConfig) -> int:
    cfg.require("input_path", "output_path")
    items = _load_items(cfg)
    if cfg.affiliate_only:
        cfg.require("verdicts_path")
        verdicts = _read_verdicts(cfg)
        items = [i for i in items if i.id in verdicts and verdicts[i.id].is_affiliate]
    records = disclose.extract_disclosures(items)
    disclose.write_disclosures(records, cfg.output_path)

    sentences = [s for i in items if corpus.is_english(i.description) for s in disclose.segment(i.description, i.id)]
    digest = disclose.cluster_digest(disclose.vectorize(sentences), cfg.cluster_threshold, cfg.linkage)
    digest_path = cfg.output_path.with_name(cfg.output_path.name + ".digest.jsonl")
    _write_jsonl(digest_path, digest)
    log.info("%d disclosure sentences; %d clusters in digest", len(records), len(digest))
    return EXIT_OK


def render_report(summary, rows, tests) -> str:
    lines = ["Platform summary", ""]
    lines.append(f"{'platform':<10} {'items':>7} {'affil.':>7} {'affil.%':>8} {'discl.%':>8} {'scaled%':>8}"
                 f" {'AffLink%':>9} {'Explan.%':>9} {'Support%':>9}")
    for s in summary:
        t = s["type_pct"]
        lines.append(
            f"{s['platform']:<10} {s['n_items']:>7} {s['n_affiliate']:>7} {s['affiliate_pct']:>8.2f}"
            f" {s['disclosed_raw_pct']:>8.2f} {s['disclosed_scaled_pct']:>8.2f}"
            f" {t[disclose.AFFILIATE_LINK]:>9.2f} {t[disclose.EXPLANATION]:>9.2f} {t[disclose.CHANNEL_SUPPORT]:>9.2f}"
        )
    lines += ["", "Categories (* = fewer affiliate items than the ranking minimum)", ""]
    lines.append(f"{'platform':<10} {'category':<24} {'items':>7} {'affil.':>7} {'affil.%':>8} {'discl.%':>8} {'scaled%':>8}")
    for r in rows:
        mark = "" if r.included else " *"
        lines.append(
            f"{r.platform:<10} {r.category[:24]:<24} {r.n_items:>7} {r.n_affiliate:>7} {r.affiliate_pct:>8.2f}"
            f" {r.disclosed_raw_pct:>8.2f} {r.disclosed_scaled_pct:>8.2f}{mark}"
        )
    lines += ["", "Engagement (affiliate vs other, Mann-Whitney U, Bonferroni)", ""]
    for t in tests:
        lines.append(
            f"{t.metric:<28} U={t.u_statistic:.4g} p={t.p_value:.3g} n1={t.n1} n2={t.n2}"
            f" {t.method} {'significant' if t.significant else 'n.s.'}"
        )
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig) -> int:
    cfg.require("input_path", "verdicts_path", "disclosures_path", "output_path")
    items = _load_items(cfg)
    verdicts = _read_verdicts(cfg)
    try:
        records = disclose.read_disclosures(cfg.disclosures_path)
    except OSError as exc:
        raise DataError(f"cannot read disclosures: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{cfg.disclosures_path}: {exc}") from None
    try:
        summary = stats.platform_summary(items, verdicts, records)
        rows = stats.prevalence_by_category(items, verdicts, records, cfg.min_affiliate)
        tests = stats.engagement_comparison(items, verdicts, cfg.alpha)
    except KeyError as exc:
        raise DataError(str(exc.args[0])) from None
    out = [{"record": "platform", **s} for s in summary]
    out += [{"record": "category", **r.to_record()} for r in rows]
    out += [{"record": "test", **t.to_record()} for t in tests]
    _write_jsonl(cfg.output_path, out)
    text = render_report(summary, rows, tests)
    cfg.output_path.with_suffix(".txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_patterns_validate(cfg: RunConfig) -> int:
    try:
        db = affdetect.load_pattern_db(cfg.patterns_path, strict=True)
    except (OSError, affdetect.PatternError) as exc:
        print(f"invalid pattern db: {exc}", file=sys.stderr)
        return EXIT_DATA
    failures = affdetect.validate_synthetic(db)
    for f in failures:
        print(f, file=sys.stderr)
    if failures:
        return EXIT_DATA
    print(f"ok: {len(db)} patterns from {len(db.companies)} companies; synthetic suite passed")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _proxy(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError("expected HOST:PORT")
    return host, int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affdisclose", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def paths(p, *names):
        for name in names:
            p.add_argument(f"--{name}", type=Path, dest=f"{name}_path")

    p = sub.add_parser("resolve", help="resolve description URLs into a redirect-chain cache")
    paths(p, "input", "cache")
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--timeout", type=float, default=30.0, dest="timeout_seconds")
    p.add_argument("--max-parallel", type=int, default=16)
    p.add_argument("--max-failure-rate", type=float, default=0.10)
    p.add_argument("--proxy", type=_proxy, help="send every request to HOST:PORT (fixture replay)")

    p = sub.add_parser("detect", help="flag items carrying affiliate URLs")
    paths(p, "input", "cache", "patterns", "output")

    p = sub.add_parser("mine", help="frequency-mine candidate patterns into a review sheet")
    paths(p, "cache", "output")
    p.add_argument("--min-count", type=int, default=15)

    p = sub.add_parser("disclose", help="extract and type disclosure sentences")
    paths(p, "input", "output", "verdicts")
    p.add_argument("--cluster-threshold", type=float, default=disclose.DEFAULT_THRESHOLD)
    p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--affiliate-only", action="store_true")

    p = sub.add_parser("report", help="prevalence tables and engagement tests")
    paths(p, "input", "verdicts", "disclosures", "output")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--min-affiliate", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("patterns", help="pattern database tools")
    psub = p.add_subparsers(dest="patterns_command", required=True, parser_class=_Parser)
    v = psub.add_parser("validate", help="check the 57/33 shape and the synthetic URL suite")
    paths(v, "patterns")
    return parser


COMMANDS = {
    "resolve": cmd_resolve,
    "detect": cmd_detect,
    "mine": cmd_mine,
    "disclose": cmd_disclose,
    "report": cmd_report,
    "patterns": cmd_patterns_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    fields = RunConfig.__dataclass_fields__
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in fields})
    if cfg.min_count < 1:
        print("--min-count must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
