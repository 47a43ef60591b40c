"""Range client behaviour against a scripted local HTTP server."""

import hashlib
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from ccseg.errors import UsageError
from ccseg.fetch import (ArchiveLocator, ChecksumMismatch, HttpShardAccess,
                         HttpStatus, RangeClient, RetryPolicy, TooManyRetries,
                         clear_cache)
from ccseg.zipnum import RangeUnavailable

ARCHIVE_ID = "CC-MAIN-2021-25"
OBJECT = b"0123456789abcdefghijklmnopqrstuvwxyz" * 64


class ScriptedHandler(BaseHTTPRequestHandler):
    """Serves OBJECT under the index layout; per-path failure scripts."""

    server_version = "scripted/0"

    def log_message(self, *args):
        pass

    def do_GET(self):
        script = self.server.scripts.get(self.path)
        if script:
            code = script.pop(0)
            if code == "drop":
                self.close_connection = True
                self.connection.close()
                return
            if code != 200:
                self.send_response(code)
                self.end_headers()
                return
        with self.server.lock:
            self.server.in_flight += 1
            self.server.max_in_flight = max(self.server.max_in_flight,
                                            self.server.in_flight)
        try:
            if self.server.barrier is not None:
                try:
                    self.server.barrier.wait(timeout=5)
                except threading.BrokenBarrierError:
                    pass
            self._serve()
        finally:
            with self.server.lock:
                self.server.in_flight -= 1

    def _serve(self):
        body = OBJECT
        range_header = self.headers.get("Range")
        if range_header:
            spec = range_header.split("=", 1)[1]
            lo_text, hi_text = spec.split("-", 1)
            lo, hi = int(lo_text), int(hi_text)
            if lo >= len(body):
                self.send_response(416)
                self.end_headers()
                return
            chunk = body[lo:hi + 1]
            self.send_response(206)
            self.send_header("Content-Range",
                             f"bytes {lo}-{lo + len(chunk) - 1}/{len(body)}")
            self.send_header("Content-Length", str(len(chunk)))
            self.end_headers()
            self.wfile.write(chunk)
            return
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.server.truncate_next_full:
            self.server.truncate_next_full = False
            self.wfile.write(body[: len(body) // 2])
            self.connection.close()
            return
        self.wfile.write(body)


@pytest.fixture()
def server():
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), ScriptedHandler)
    httpd.scripts = {}
    httpd.lock = threading.Lock()
    httpd.in_flight = 0
    httpd.max_in_flight = 0
    httpd.barrier = None
    httpd.truncate_next_full = False
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield httpd
    httpd.shutdown()
    thread.join(timeout=5)


def _client(**kw):
    kw.setdefault("sleep", lambda s: None)
    kw.setdefault("rng", random.Random(0))
    return RangeClient(**kw)


def _locator(server):
    return ArchiveLocator(f"http://127.0.0.1:{server.server_address[1]}",
                          ARCHIVE_ID)


def _object_path(name):
    return f"/cc-index/collections/{ARCHIVE_ID}/indexes/{name}"


def test_locator_validation():
    ArchiveLocator("http://x", "CC-MAIN-2019-35")
    for bad in ("CC-MAIN-2019-54", "CC-MAIN-2019-00", "CC-2019-35", "junk"):
        with pytest.raises(UsageError):
            ArchiveLocator("http://x", bad)


def test_fetch_range_first_bytes(server):
    got = _client().fetch_range(_locator(server), "cdx-00000.gz", 0, 10)
    assert got == OBJECT[:10]


def test_fetch_range_mid_range(server):
    got = _client().fetch_range(_locator(server), "cdx-00000.gz", 100, 37)
    assert got == OBJECT[100:137]


def test_fetch_range_rejects_non_positive_length(server):
    with pytest.raises(UsageError):
        _client().fetch_range(_locator(server), "cdx-00000.gz", 0, 0)


def test_retry_after_503s(server):
    server.scripts[_object_path("cdx-00000.gz")] = [503, 503]
    delays = []
    client = _client(sleep=delays.append)
    got = client.fetch_range(_locator(server), "cdx-00000.gz", 0, 5)
    assert got == OBJECT[:5]
    assert len(delays) == 2
    assert 0.8 <= delays[0] <= 1.2          # 1s +- 20% jitter
    assert 1.6 <= delays[1] <= 2.4          # doubled


def test_retry_budget_exhausted(server):
    server.scripts[_object_path("cdx-00000.gz")] = [503] * 10
    client = _client(policy=RetryPolicy(max_retries=3))
    with pytest.raises(TooManyRetries):
        client.fetch_range(_locator(server), "cdx-00000.gz", 0, 5)
    # exactly max_retries attempts were consumed
    assert server.scripts[_object_path("cdx-00000.gz")] == [503] * 7


def test_range_beyond_end_is_416(server):
    with pytest.raises(HttpStatus) as err:
        _client().fetch_range(_locator(server), "cdx-00000.gz", 10**6, 10)
    assert err.value.code == 416


def test_404_not_retried(server):
    server.scripts[_object_path("cdx-00000.gz")] = [404, 200]
    with pytest.raises(HttpStatus) as err:
        _client().fetch_range(_locator(server), "cdx-00000.gz", 0, 5)
    assert err.value.code == 404
    assert server.scripts[_object_path("cdx-00000.gz")] == [200]


def test_backoff_delay_caps_at_60():
    policy = RetryPolicy()
    rng = random.Random(1)
    assert all(policy.delay(attempt, rng) <= 60 * 1.2 for attempt in range(12))


def test_fetch_master_cold_then_warm(server, tmp_path):
    client = _client()
    locator = _locator(server)
    path = client.fetch_master(locator, tmp_path)
    assert path.read_bytes() == OBJECT
    server.scripts[_object_path("cluster.idx")] = [500] * 10  # would fail
    again = client.fetch_master(locator, tmp_path)             # cache hit
    assert again == path


def test_fetch_master_interrupted_download_retried(server, tmp_path):
    server.truncate_next_full = True
    client = _client()
    path = client.fetch_master(_locator(server), tmp_path)
    assert path.read_bytes() == OBJECT
    assert not list(tmp_path.rglob("*.part"))


def test_fetch_master_checksum(server, tmp_path):
    client = _client()
    good = hashlib.sha256(OBJECT).hexdigest()
    path = client.fetch_master(_locator(server), tmp_path / "ok", digest=good)
    assert path.exists()
    with pytest.raises(ChecksumMismatch):
        client.fetch_master(_locator(server), tmp_path / "bad", digest="0" * 64)
    assert not (tmp_path / "bad" / ARCHIVE_ID / "cluster.idx").exists()


def test_connection_cap_respected(server):
    server.barrier = threading.Barrier(2)  # rendezvous pairs of requests
    client = _client(connection_cap=2)
    locator = _locator(server)
    threads = [threading.Thread(
        target=lambda: client.fetch_range(locator, "cdx-00000.gz", 0, 4))
        for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=30)
    assert server.max_in_flight <= 2


def test_shard_access_maps_416(server):
    access = HttpShardAccess(_client(), _locator(server))
    assert access.read_range("cdx-00000.gz", 0, 4) == OBJECT[:4]
    with pytest.raises(RangeUnavailable):
        access.read_range("cdx-00000.gz", 10**7, 4)


def test_clear_cache(tmp_path):
    (tmp_path / "a" / "b").mkdir(parents=True)
    (tmp_path / "a" / "b" / "f1").write_text("x")
    (tmp_path / "a" / "f2").write_text("y")
    assert clear_cache(tmp_path) == 2
    assert not list(tmp_path.rglob("*"))
    assert clear_cache(tmp_path / "missing") == 0
