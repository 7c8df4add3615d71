import pytest

from affdisclose import fixtures
from affdisclose.urlresolve import HttpFetcher


@pytest.fixture
def serve():
    """Start a fixture server for a route map; returns a fetcher bound to it."""
    servers = []

    def start(routes):
        srv = fixtures.FixtureServer(routes).start()
        servers.append(srv)
        return HttpFetcher(proxy=srv.address), srv

    yield start
    for srv in servers:
        srv.stop()


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record a one-line PASS/FAIL verdict for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
