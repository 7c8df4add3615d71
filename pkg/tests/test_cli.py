import json

import pytest

from affdisclose import fixtures
from affdisclose.affdetect import load_pattern_db, read_verdicts, shipped_patterns_path
from affdisclose.cli import main
from affdisclose.corpus import ContentItem, write_corpus
from affdisclose.fixtures import FixtureServer


def proxy_arg(srv):
    host, port = srv.address
    return f"{host}:{port}"


@pytest.fixture
def small_corpus(tmp_path):
    items = [
        ContentItem("a", "youtube", "Gear: http://bit.ly/x1 and http://blog.example.org/p", "Gaming", "c1"),
        ContentItem("b", "youtube", "Affiliate links may be present above.\nGet it http://shopstyle.it/l/abc", "Gaming", "c2"),
        ContentItem("c", "pinterest", "Pin http://rstyle.me/n/abc", "Outdoors", "c3", repin_count=4),
        ContentItem("d", "youtube", "No links here, thanks for watching.", "Music", "c4"),
    ]
    routes = {
        "http://bit.ly/x1": fixtures.redirect("http://www.amazon.com/dp/1?tag=me-20"),
        "http://www.amazon.com/dp/1?tag=me-20": fixtures.page(),
        "http://blog.example.org/p": fixtures.page(),
        "http://shopstyle.it/l/abc": fixtures.page(),
        "http://rstyle.me/n/abc": fixtures.meta_refresh("http://shop.example.com/item"),
        "http://shop.example.com/item": fixtures.page(),
    }
    path = tmp_path / "corpus.jsonl"
    write_corpus(items, path)
    return path, routes


def test_pipeline_and_idempotence(tmp_path, small_corpus, capsys):
    corpus_path, routes = small_corpus
    cache = tmp_path / "cache.jsonl"
    with FixtureServer(routes) as srv:
        args = ["resolve", "--input", str(corpus_path), "--cache", str(cache), "--proxy", proxy_arg(srv)]
        assert main(args) == 0
        first = cache.read_bytes()
        assert len(first.splitlines()) == 4
        hits = dict(srv.hits)
        assert main(args) == 0
        assert cache.read_bytes() == first
        assert srv.hits == hits  # cached entries are not refetched

    verdicts = tmp_path / "verdicts.jsonl"
    assert main(["detect", "--input", str(corpus_path), "--cache", str(cache), "--output", str(verdicts)]) == 0
    v = read_verdicts(verdicts)
    assert {k: x.is_affiliate for k, x in v.items()} == {"a": True, "b": True, "c": True, "d": False}
    assert v["a"].companies == {"Amazon"}

    disc = tmp_path / "disc.jsonl"
    assert main(["disclose", "--input", str(corpus_path), "--output", str(disc)]) == 0
    recs = [json.loads(l) for l in disc.read_text().splitlines()]
    assert [(r["content_id"], r["dtype"]) for r in recs] == [("b", "AffiliateLink")]
    digest = [json.loads(l) for l in (tmp_path / "disc.jsonl.digest.jsonl").read_text().splitlines()]
    sizes = [d["size"] for d in digest]
    assert sizes == sorted(sizes, reverse=True)

    report = tmp_path / "report.jsonl"
    capsys.readouterr()
    assert main(["report", "--input", str(corpus_path), "--verdicts", str(verdicts),
                 "--disclosures", str(disc), "--output", str(report)]) == 0
    assert "Platform summary" in capsys.readouterr().out
    rows = [json.loads(l) for l in report.read_text().splitlines()]
    cats = {(r["platform"], r["category"]) for r in rows if r["record"] == "category"}
    assert cats == {("youtube", "Gaming"), ("youtube", "Music"), ("pinterest", "Outdoors")}
    yt = next(r for r in rows if r["record"] == "platform" and r["platform"] == "youtube")
    assert yt["n_affiliate"] == 2 and yt["disclosed_raw_pct"] == 50.0
    for r in rows:
        if r["record"] == "category":
            assert r["disclosed_raw_pct"] * r["n_affiliate"] == pytest.approx(100 * r["n_disclosed"])
    assert report.with_suffix(".txt").exists()
    first_report = report.read_bytes()
    main(["report", "--input", str(corpus_path), "--verdicts", str(verdicts),
          "--disclosures", str(disc), "--output", str(report)])
    assert report.read_bytes() == first_report


def test_corrupt_cache_line(tmp_path, small_corpus, capsys):
    corpus_path, _ = small_corpus
    cache = tmp_path / "cache.jsonl"
    cache.write_text('{"original_url": "http://x.test/"\n')
    assert main(["detect", "--input", str(corpus_path), "--cache", str(cache), "--output", str(tmp_path / "v")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_missing_cache_entry(tmp_path, small_corpus, capsys):
    corpus_path, _ = small_corpus
    cache = tmp_path / "cache.jsonl"
    cache.write_text("")
    assert main(["detect", "--input", str(corpus_path), "--cache", str(cache), "--output", str(tmp_path / "v")]) == 2
    assert "resolve" in capsys.readouterr().err


def test_unreadable_input(tmp_path, capsys):
    assert main(["resolve", "--input", str(tmp_path / "nope.jsonl"), "--cache", str(tmp_path / "c")]) == 2
    assert "cannot read corpus" in capsys.readouterr().err


def test_failure_rate_exit(tmp_path, small_corpus):
    corpus_path, routes = small_corpus
    with FixtureServer({}) as srv:
        args = ["resolve", "--input", str(corpus_path), "--cache", str(tmp_path / "c.jsonl"), "--proxy", proxy_arg(srv)]
        assert main(args) == 3
        assert main(args + ["--max-failure-rate", "1.0"]) == 0


def test_mine(tmp_path, small_corpus):
    corpus_path, routes = small_corpus
    cache = tmp_path / "cache.jsonl"
    with FixtureServer(routes) as srv:
        main(["resolve", "--input", str(corpus_path), "--cache", str(cache), "--proxy", proxy_arg(srv)])
    sheet = tmp_path / "sheet.tsv"
    assert main(["mine", "--cache", str(cache), "--output", str(sheet), "--min-count", "1"]) == 0
    lines = sheet.read_text().splitlines()
    assert lines[0].split("\t") == ["kind", "domain", "detail", "count", "disposition"]
    assert any("amazon.com" in l and "tag" in l for l in lines[1:])

    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["mine", "--cache", str(empty), "--output", str(sheet)]) == 0
    assert sheet.read_text().splitlines() == [lines[0]]
    assert main(["mine", "--cache", str(empty), "--output", str(sheet), "--min-count", "0"]) == 1


def test_affiliate_only_with_no_affiliates(tmp_path, small_corpus):
    corpus_path, _ = small_corpus
    verdicts = tmp_path / "v.jsonl"
    verdicts.write_text("".join(json.dumps({"content_id": c, "matches": []}) + "\n" for c in "abcd"))
    out = tmp_path / "d.jsonl"
    assert main(["disclose", "--input", str(corpus_path), "--output", str(out),
                 "--affiliate-only", "--verdicts", str(verdicts)]) == 0
    assert out.read_text() == ""


def test_patterns_validate(tmp_path, capsys):
    assert main(["patterns", "validate"]) == 0
    lines = shipped_patterns_path().read_text().splitlines()
    short = tmp_path / "p56.jsonl"
    short.write_text("\n".join(lines[:-1]) + "\n")
    assert main(["patterns", "validate", "--patterns", str(short)]) != 0

    broken = tmp_path / "broken.jsonl"
    rec = json.loads(lines[0])
    rec["host_rule"] = {"kind": "regex", "value": "(unclosed"}
    broken.write_text("\n".join([json.dumps(rec)] + lines[1:]) + "\n")
    capsys.readouterr()
    assert main(["patterns", "validate", "--patterns", str(broken)]) != 0
    assert rec["pattern_id"] in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["resolve", "--proxy", "nocolon"])
    assert exc.value.code == 1
    assert main(["detect"]) == 1
