"""Local HTTP fixture server for replaying redirect chains without network access.

Routes are keyed by absolute URL. Requests arrive either in absolute form
(``GET http://rstyle.me/n/abc HTTP/1.1``, as sent by
``HttpFetcher(proxy=...)``) or in origin form, in which case the URL is
rebuilt from the Host header.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping


@dataclass(frozen=True)
class Route:
    status: int = 200
    headers: Mapping[str, str] = field(default_factory=dict)
    body: str = ""
    delay: float = 0.0


def redirect(to: str, status: int = 301) -> Route:
    return Route(status, {"Location": to})


def meta_refresh(to: str, delay: int = 0) -> Route:
    body = f'<html><head><meta http-equiv="refresh" content="{delay};url={to}"></head><body></body></html>'
    return Route(200, {"Content-Type": "text/html; charset=utf-8"}, body)


def page(text: str = "ok") -> Route:
    return Route(200, {"Content-Type": "text/html; charset=utf-8"}, f"<html><body>{text}</body></html>")


def error(status: int = 404) -> Route:
    return Route(status, {"Content-Type": "text/plain"}, "error")


def stall(seconds: float) -> Route:
    return Route(200, {"Content-Type": "text/html"}, "<html></html>", delay=seconds)


class FixtureServer:
    """Threaded fixture server; use as a context manager.

    >>> with FixtureServer({"http://a.test/": page()}) as srv:   # doctest: +SKIP
    ...     HttpFetcher(proxy=srv.address).fetch("http://a.test/", 5).status
    200
    """

    def __init__(self, routes: Mapping[str, Route] | None = None, host: str = "127.0.0.1", port: int = 0):
        self.routes: dict[str, Route] = dict(routes or {})
        self.hits: dict[str, int] = {}
        self._lock = threading.Lock()
        self._host, self._port = host, port
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        assert self._httpd is not None, "server not started"
        return self._httpd.server_address[:2]

    def _record(self, url: str) -> Route | None:
        with self._lock:
            self.hits[url] = self.hits.get(url, 0) + 1
        return self.routes.get(url)

    def start(self) -> "FixtureServer":
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.0"

            def log_message(self, *args):
                pass

            def do_GET(self):
                if "://" in self.path:
                    url = self.path
                else:
                    url = f"http://{self.headers.get('Host', '')}{self.path}"
                route = server._record(url)
                if route is None:
                    route = error(404)
                if route.delay:
                    time.sleep(route.delay)
                payload = route.body.encode("utf-8")
                try:
                    self.send_response(route.status)
                    for k, v in route.headers.items():
                        self.send_header(k, v)
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                except (BrokenPipeError, ConnectionResetError):
                    pass

        class Server(ThreadingHTTPServer):
            request_queue_size = 256
            daemon_threads = True

        self._httpd = Server((self._host, self._port), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def __enter__(self) -> "FixtureServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
