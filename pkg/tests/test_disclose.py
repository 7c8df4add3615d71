import pytest
from hypothesis import given, strategies as st

from affdisclose.corpus import ContentItem
from affdisclose.disclose import (
    AFFILIATE_LINK,
    CHANNEL_SUPPORT,
    COMPENSATION_TERMS,
    EXPLANATION,
    DisclosureRecord,
    Sentence,
    classify_disclosure,
    classify_rule,
    cluster_digest,
    cluster_sentences,
    extract_disclosures,
    read_disclosures,
    segment,
    tokenize,
    vectorize,
    write_disclosures,
)

CANONICAL = [
    ("Affiliate links may be present above", AFFILIATE_LINK),
    ("Some of the links may be affiliate links", AFFILIATE_LINK),
    ("(Disclosure: These are affiliate links)", AFFILIATE_LINK),
    ("*Amazon link(s) are affiliate links", AFFILIATE_LINK),
    ("(aff link)", AFFILIATE_LINK),
    ("(affiliate)", AFFILIATE_LINK),
    ("#affiliatelink", AFFILIATE_LINK),
    ("This is an Amazon Affiliate link", AFFILIATE_LINK),
    ("This video contains affiliate links, which means that if you click on one of the links, "
     "I'll receive a small commission", EXPLANATION),
    ("I am an affiliate with eBay, Amazon, B&H and Adorama, which means I get a small commission "
     "when you buy through my links", EXPLANATION),
    ("**Links that start with http://rstyle, Beautylish & MUG links are affiliate links, I do earn a small "
     "commission when you purchase through them, which helps me purchase products for review & improve my channel",
     EXPLANATION),
    ("(This is an affiliate link and I receive a commission for the sales)", EXPLANATION),
    ("AMAZON LINK: (Bookmark this link to support the show for free!!!)", CHANNEL_SUPPORT),
    ("Support HWC while shopping at NCIX and Amazon", CHANNEL_SUPPORT),
    ("Purchase RP here and help support this channel via the amazon affiliate program", CHANNEL_SUPPORT),
    ("Shop using these links to support the channel", CHANNEL_SUPPORT),
]
NEUTRAL = [
    "Thanks for watching",
    "Don't forget to subscribe for more videos",
    "Follow me on Instagram and Twitter",
    "Check out my other channel for vlogs",
    "Music by Kevin MacLeod, licensed under Creative Commons",
]


@pytest.mark.parametrize("text,dtype", CANONICAL)
def test_canonical_statements(text, dtype):
    assert classify_disclosure(text) == dtype


@pytest.mark.parametrize("text", NEUTRAL)
def test_neutral_sentences(text):
    assert classify_disclosure(text) is None


def test_channel_support_skipped_on_pinterest():
    assert classify_disclosure("Shop using these links to support the channel", "pinterest") is None
    assert classify_disclosure(
        "Purchase RP here and help support this channel via the amazon affiliate program", "pinterest"
    ) == AFFILIATE_LINK


def test_url_text_is_not_a_disclosure():
    assert classify_disclosure("Get it here: http://performance.affiliaxe.com/x?aff_id=1") is None
    assert classify_disclosure("20% off today") is None
    assert classify_disclosure("Links earn me 5%") == EXPLANATION


@pytest.mark.parametrize("text,dtype", CANONICAL)
def test_rule_triggers_present(text, dtype):
    _, rule_id = classify_rule(text)
    tokens = set(tokenize(text))
    if dtype == EXPLANATION:
        assert tokens & COMPENSATION_TERMS or "%" in text
    assert rule_id.startswith({AFFILIATE_LINK: "affiliate_link", EXPLANATION: "explanation",
                               CHANNEL_SUPPORT: "channel_support"}[dtype])


def test_segment_example():
    got = segment("Buy here!\nAffiliate links may be present. Thanks for watching.")
    assert [(s.line_index, s.sentence_index, s.text) for s in got] == [
        (0, 0, "Buy here!"),
        (1, 0, "Affiliate links may be present."),
        (1, 1, "Thanks for watching."),
    ]


def test_segment_masks_urls():
    assert [s.text for s in segment("Get it: http://rstyle.me/n.abc today.")] == ["Get it: http://rstyle.me/n.abc today."]
    assert [s.text for s in segment("Go to http://a.com/x. Then buy!")] == ["Go to http://a.com/x.", "Then buy!"]


def test_segment_edge_cases():
    assert segment("") == []
    assert segment("\n\n  \n") == []
    assert [s.text for s in segment("Wait... what?! 3.5 stars")] == ["Wait...", "what?!", "3.5 stars"]
    assert [s.line_index for s in segment("a\n\nb")] == [0, 2]


@given(st.text())
def test_segment_properties(text):
    sents = segment(text, "cid")
    assert all(s.text.strip() and s.content_id == "cid" for s in sents)
    assert segment(text, "cid") == sents
    assert sum(s.tokens.total() for s in sents) == len(tokenize(text.replace("\n", " ")))


def test_vectorize():
    vs = vectorize([Sentence("c", 0, 0, "aff link"), Sentence("c", 0, 1, "aff links")])
    assert [v.counts for v in vs] == [{"aff": 1, "link": 1}, {"aff": 1, "links": 1}]
    assert vectorize([Sentence("c", 0, 0, "Link link")])[0].counts == {"link": 2}
    a, b = vectorize([Sentence("c", 0, 0, "red fox"), Sentence("c", 0, 1, "blue whale")])
    assert not set(a.counts) & set(b.counts)


def test_cluster_sentences_example():
    vs = vectorize([Sentence("c", 0, i, t) for i, t in enumerate(["affiliate link", "affiliate links", "great video"])])
    tree = cluster_sentences(vs)
    assert tree.merges[0][:2] == (0, 1)
    assert tree.cut(1.5) == [[0, 1], [2]]
    with pytest.raises(ValueError):
        cluster_sentences([])


def test_cluster_digest():
    texts = ["affiliate link"] * 3 + ["great video", "great videos"] + ["subscribe now"]
    vs = vectorize([Sentence("c", 0, i, t) for i, t in enumerate(texts)])
    digest = cluster_digest(vs, threshold=1.5)
    assert [d["size"] for d in digest] == [3, 2, 1]
    assert digest[0]["medoid"] == "affiliate link"
    assert len(digest[0]["samples"]) == 3
    assert cluster_digest([]) == []


def item(i, desc, platform="youtube"):
    return ContentItem(f"id{i}", platform, desc, "cat", "cr")


def test_extract_disclosures():
    expl = CANONICAL[8][0]
    recs = extract_disclosures([item(1, f"New video today!\n{expl}.")])
    assert [(r.content_id, r.dtype, r.sentence.line_index) for r in recs] == [("id1", EXPLANATION, 1)]

    spanish = "Este video contiene enlaces de affiliate y me pagan una comisión por cada compra realizada"
    assert extract_disclosures([item(2, spanish)]) == []

    two = "Affiliate links may be present above.\nShop using these links to support the channel."
    assert [r.dtype for r in extract_disclosures([item(3, two)])] == [AFFILIATE_LINK, CHANNEL_SUPPORT]


def test_disclosure_io(tmp_path):
    recs = extract_disclosures([item(1, "Affiliate links may be present above.\n(aff link)")])
    p = tmp_path / "d.jsonl"
    write_disclosures(recs, p)
    back = read_disclosures(p)
    assert [r.to_record() for r in back] == [r.to_record() for r in recs]
    assert set(recs[0].to_record()) == {"content_id", "line_index", "sentence_index", "text", "dtype", "rule_id"}
