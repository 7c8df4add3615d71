"""Redirect-chain resolution following HTTP 3XX and meta-refresh redirects."""

from __future__ import annotations

import http.client
import json
import logging
import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Mapping, Protocol
from urllib.parse import urljoin, urlsplit

log = logging.getLogger(__name__)

HTTP_REDIRECT = "http_redirect"
META_REFRESH = "meta_refresh"
TERMINAL = "terminal"
MECHANISMS = (HTTP_REDIRECT, META_REFRESH, TERMINAL)

OUTCOMES = ("resolved", "timeout", "http_error", "loop_detected", "depth_exceeded", "fetch_failed")
FAILED_OUTCOMES = frozenset({"timeout", "http_error", "fetch_failed"})

MAX_BODY_BYTES = 512 * 1024
USER_AGENT = "Mozilla/5.0 (compatible; affdisclose/0.1)"


class FetchError(Exception):
    pass


class FetchTimeout(FetchError):
    pass


@dataclass(frozen=True)
class FetchResponse:
    status: int
    headers: Mapping[str, str] = field(default_factory=dict)
    body: str = ""

    def header(self, name: str) -> str | None:
        name = name.lower()
        for k, v in self.headers.items():
            if k.lower() == name:
                return v
        return None


class Fetcher(Protocol):
    def fetch(self, url: str, timeout: float) -> FetchResponse:
        """Fetch ``url`` without following redirects.

        Raises FetchTimeout on timeout and FetchError on any other transport failure.
        """


@dataclass(frozen=True)
class RedirectHop:
    url: str
    status: int
    mechanism: str

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.mechanism == HTTP_REDIRECT and not 300 <= self.status <= 399:
            raise ValueError("http_redirect hop needs a 3XX status")


@dataclass(frozen=True)
class RedirectChain:
    original_url: str
    hops: tuple[RedirectHop, ...]
    outcome: str
    final_url: str | None = None

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if not self.hops or self.hops[0].url != self.original_url:
            raise ValueError("first hop must be the original URL")
        if (self.outcome == "resolved") != (self.final_url is not None):
            raise ValueError("final_url is set exactly when the chain resolved")
        if self.final_url is not None and self.final_url != self.hops[-1].url:
            raise ValueError("final_url must equal the last hop")

    @property
    def failed(self) -> bool:
        return self.outcome in FAILED_OUTCOMES

    @property
    def urls(self) -> list[str]:
        return [h.url for h in self.hops]

    def to_record(self) -> dict:
        return {
            "original_url": self.original_url,
            "outcome": self.outcome,
            "final_url": self.final_url,
            "hops": [{"url": h.url, "status": h.status, "mechanism": h.mechanism} for h in self.hops],
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "RedirectChain":
        hops = tuple(RedirectHop(h["url"], int(h["status"]), h["mechanism"]) for h in record["hops"])
        return cls(record["original_url"], hops, record["outcome"], record.get("final_url"))


@dataclass(frozen=True)
class ResolvePolicy:
    max_depth: int = 10
    timeout_seconds: float = 30.0
    max_parallel: int = 16

    def __post_init__(self):
        if self.max_depth < 1 or self.max_parallel < 1:
            raise ValueError("max_depth and max_parallel must be >= 1")
        if self.timeout_seconds < 1:
            raise ValueError("timeout_seconds must be >= 1")


class _MetaRefreshParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.content: str | None = None

    def handle_starttag(self, tag, attrs):
        if self.content is not None or tag != "meta":
            return
        attrs = {k.lower(): (v or "") for k, v in attrs}
        if attrs.get("http-equiv", "").strip().lower() != "refresh":
            return
        content = attrs.get("content", "")
        if _refresh_target(content) is not None:
            self.content = content

    handle_startendtag = handle_starttag


def _refresh_target(content: str) -> str | None:
    # content="5; url=/next" or content="0;URL='http://x'"
    for part in content.split(";"):
        key, sep, value = part.strip().partition("=")
        if sep and key.strip().lower() == "url":
            value = value.strip().strip("'\"").strip()
            return value or None
    return None


def parse_meta_refresh(html: str, base_url: str) -> str | None:
    """Return the absolute target of the first meta refresh carrying a url clause."""
    parser = _MetaRefreshParser()
    try:
        parser.feed(html)
        parser.close()
    except Exception:  # html.parser is lenient, but never let markup abort a crawl
        log.debug("unparseable html at %s", base_url)
    if parser.content is None:
        return None
    return urljoin(base_url, _refresh_target(parser.content))


def _is_http(url: str) -> bool:
    return urlsplit(url).scheme.lower() in ("http", "https")


def resolve(url: str, policy: ResolvePolicy, fetcher: Fetcher) -> RedirectChain:
    if not _is_http(url):
        raise ValueError(f"not an http(s) URL: {url!r}")
    hops: list[RedirectHop] = []
    seen = set()
    current = url
    while True:
        seen.add(current)
        try:
            resp = fetcher.fetch(current, policy.timeout_seconds)
        except FetchTimeout:
            hops.append(RedirectHop(current, 0, TERMINAL))
            return RedirectChain(url, tuple(hops), "timeout")
        except FetchError as exc:
            log.debug("fetch failed for %s: %s", current, exc)
            hops.append(RedirectHop(current, 0, TERMINAL))
            return RedirectChain(url, tuple(hops), "fetch_failed")

        target = None
        mechanism = TERMINAL
        if 300 <= resp.status <= 399:
            location = resp.header("location")
            if location:
                target, mechanism = urljoin(current, location.strip()), HTTP_REDIRECT
        elif 200 <= resp.status <= 299 and "html" in (resp.header("content-type") or "").lower():
            target = parse_meta_refresh(resp.body, current)
            if target is not None:
                mechanism = META_REFRESH

        hops.append(RedirectHop(current, resp.status, mechanism))
        if target is None:
            if 200 <= resp.status <= 299:
                return RedirectChain(url, tuple(hops), "resolved", current)
            return RedirectChain(url, tuple(hops), "http_error")
        if len(hops) >= policy.max_depth + 1:
            return RedirectChain(url, tuple(hops), "depth_exceeded")
        if target in seen:
            hops.append(RedirectHop(target, 0, TERMINAL))
            return RedirectChain(url, tuple(hops), "loop_detected")
        if not _is_http(target):
            hops.append(RedirectHop(target, 0, TERMINAL))
            return RedirectChain(url, tuple(hops), "fetch_failed")
        current = target


def resolve_corpus(urls: Iterable[str], policy: ResolvePolicy, fetcher: Fetcher) -> dict[str, RedirectChain]:
    """Resolve every distinct URL, at most ``policy.max_parallel`` at a time.

    Failures stay in the result with their outcome; non-http(s) inputs are
    recorded as ``fetch_failed`` single-hop chains.
    """
    distinct = list(dict.fromkeys(urls))

    def work(u: str) -> RedirectChain:
        if not _is_http(u):
            return RedirectChain(u, (RedirectHop(u, 0, TERMINAL),), "fetch_failed")
        return resolve(u, policy, fetcher)

    with ThreadPoolExecutor(max_workers=policy.max_parallel) as pool:
        chains = list(pool.map(work, distinct))
    return dict(zip(distinct, chains))


class HttpFetcher:
    """Single-request fetcher over :mod:`http.client`.

    With ``proxy=(host, port)`` every request, whatever its scheme, is sent in
    absolute form over plain HTTP to that address. The bundled fixture server
    answers such requests, which lets tests replay chains through real sockets
    without touching the network.
    """

    def __init__(self, proxy: tuple[str, int] | None = None, user_agent: str = USER_AGENT):
        self.proxy = proxy
        self.user_agent = user_agent

    def fetch(self, url: str, timeout: float) -> FetchResponse:
        parts = urlsplit(url)
        host = parts.hostname or ""
        target = parts.path or "/"
        if parts.query:
            target += "?" + parts.query
        if self.proxy is not None:
            conn = http.client.HTTPConnection(*self.proxy, timeout=timeout)
            target = url
        elif parts.scheme.lower() == "https":
            conn = http.client.HTTPSConnection(host, parts.port, timeout=timeout)
        else:
            conn = http.client.HTTPConnection(host, parts.port, timeout=timeout)
        headers = {"Host": parts.netloc, "User-Agent": self.user_agent, "Accept": "text/html,*/*"}
        try:
            conn.request("GET", target, headers=headers)
            resp = conn.getresponse()
            resp_headers = {k.lower(): v for k, v in resp.getheaders()}
            body = ""
            if "html" in resp_headers.get("content-type", "").lower():
                raw = resp.read(MAX_BODY_BYTES)
                body = raw.decode(resp.headers.get_content_charset() or "utf-8", errors="replace")
            return FetchResponse(resp.status, resp_headers, body)
        except (socket.timeout, TimeoutError) as exc:
            raise FetchTimeout(str(exc)) from exc
        except (OSError, http.client.HTTPException, LookupError) as exc:
            raise FetchError(str(exc)) from exc
        finally:
            conn.close()


def write_cache(chains: Iterable[RedirectChain], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for chain in chains:
            fh.write(json.dumps(chain.to_record(), sort_keys=True) + "\n")


def read_cache(path: str | Path) -> dict[str, RedirectChain]:
    chains = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                chain = RedirectChain.from_record(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"cache line {lineno}: {exc}") from None
            chains[chain.original_url] = chain
    return chains
