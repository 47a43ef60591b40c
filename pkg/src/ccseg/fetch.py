"""Remote retrieval of master and shard bytes over HTTP range requests.

A RangeClient shares one connection pool behind a semaphore so that
concurrent callers never exceed the configured connection cap; index
hosts are shared infrastructure and deserve politeness.  Retries use
exponential backoff doubling from one second, capped at sixty, with
+-20% jitter.  Cache writes are atomic rename-into-place and eviction
is manual (indexes are immutable per release).
"""

import hashlib
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import NetworkError, UsageError
from .zipnum import RangeUnavailable

DEFAULT_BASE_URL = "https://data.commoncrawl.org"
PATH_TEMPLATE = "cc-index/collections/{archive_id}/indexes/{name}"

_ARCHIVE_ID = re.compile(r"^CC-MAIN-(\d{4})-(\d{2})$")


class HttpStatus(NetworkError):
    """Terminal HTTP status for a request."""

    def __init__(self, code, url):
        super().__init__(f"HTTP {code} for {url}")
        self.code = code
        self.url = url


class Timeout(NetworkError):
    """Every attempt timed out."""


class TooManyRetries(NetworkError):
    """Retry budget exhausted."""


class ChecksumMismatch(NetworkError):
    """Downloaded object does not match the configured digest."""


@dataclass(frozen=True)
class ArchiveLocator:
    """Addressing of one archive's index objects under a base URL."""

    base_url: str
    archive_id: str
    path_template: str = PATH_TEMPLATE

    def __post_init__(self):
        m = _ARCHIVE_ID.match(self.archive_id)
        if not m or not 1 <= int(m.group(2)) <= 53:
            raise UsageError(f"bad archive id: {self.archive_id!r}")

    def url_for(self, name):
        path = self.path_template.format(archive_id=self.archive_id, name=name)
        return f"{self.base_url.rstrip('/')}/{path}"


@dataclass
class RetryPolicy:
    max_retries: int = 5
    base_delay: float = 1.0
    max_delay: float = 60.0
    jitter: float = 0.2

    def delay(self, attempt, rng):
        d = min(self.max_delay, self.base_delay * (2 ** attempt))
        return d * (1 - self.jitter + 2 * self.jitter * rng.random())


@dataclass
class RangeClient:
    """HTTP/1.1 range-request client with retry, backoff and politeness."""

    session: requests.Session = field(default_factory=requests.Session)
    policy: RetryPolicy = field(default_factory=RetryPolicy)
    connection_cap: int = 4
    timeout: float = 30.0
    sleep: object = time.sleep  # injectable for tests
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self):
        self._gate = threading.BoundedSemaphore(self.connection_cap)

    def fetch_range(self, locator, shard_name, offset, length):
        """Exactly `length` bytes at `offset` of the named shard object."""
        if length <= 0:
            raise UsageError(f"non-positive range length: {length}")
        url = locator.url_for(shard_name)
        headers = {"Range": f"bytes={offset}-{offset + length - 1}"}

        def attempt():
            with self._gate:
                resp = self.session.get(url, headers=headers, timeout=self.timeout)
            if resp.status_code != 206:
                raise HttpStatus(resp.status_code, url)
            body = resp.content
            if len(body) != length:
                raise NetworkError(
                    f"short range body from {url}: {len(body)} != {length}")
            return body

        return self._with_retries(attempt)

    def fetch_master(self, locator, cache_dir, digest=None):
        """Local path of cluster.idx, downloading on a cache miss."""
        return self.fetch_object(
            locator, "cluster.idx", Path(cache_dir) / locator.archive_id, digest)

    def fetch_object(self, locator, name, directory, digest=None):
        """Download one whole index object into directory, atomically."""
        target = Path(directory) / name
        if target.exists():
            return target
        target.parent.mkdir(parents=True, exist_ok=True)
        url = locator.url_for(name)
        part = target.with_name(target.name + ".part")

        def attempt():
            hasher = hashlib.sha256()
            try:
                with self._gate:
                    with self.session.get(url, stream=True, timeout=self.timeout) as resp:
                        if resp.status_code != 200:
                            raise HttpStatus(resp.status_code, url)
                        expected = resp.headers.get("Content-Length")
                        with open(part, "wb") as f:
                            for chunk in resp.iter_content(1 << 16):
                                f.write(chunk)
                                hasher.update(chunk)
                if expected is not None and part.stat().st_size != int(expected):
                    raise NetworkError(f"truncated download of {url}")
            except BaseException:
                part.unlink(missing_ok=True)
                raise
            if digest is not None and hasher.hexdigest() != digest:
                part.unlink(missing_ok=True)
                raise ChecksumMismatch(f"{url}: sha256 {hasher.hexdigest()} != {digest}")
            os.replace(part, target)
            return target

        return self._with_retries(attempt)

    def _with_retries(self, attempt):
        last = None
        all_timeouts = True
        for i in range(self.policy.max_retries):
            if i:
                self.sleep(self.policy.delay(i - 1, self.rng))
            try:
                return attempt()
            except requests.Timeout as exc:
                last = exc
            except HttpStatus as exc:
                if exc.code in (429,) or 500 <= exc.code <= 599:
                    last = exc
                    all_timeouts = False
                else:
                    raise
            except ChecksumMismatch:
                raise
            except (requests.RequestException, NetworkError) as exc:
                last = exc
                all_timeouts = False
        if all_timeouts:
            raise Timeout(f"no attempt finished within {self.timeout}s") from last
        raise TooManyRetries(
            f"gave up after {self.policy.max_retries} attempts: {last}") from last


class HttpShardAccess:
    """zipnum shard access backed by remote range requests."""

    def __init__(self, client, locator):
        self.client = client
        self.locator = locator

    def read_range(self, shard_name, offset, length):
        try:
            return self.client.fetch_range(self.locator, shard_name, offset, length)
        except HttpStatus as exc:
            if exc.code == 416:
                raise RangeUnavailable(str(exc)) from None
            raise


def clear_cache(cache_dir):
    """Remove cached index objects; returns the number of files removed."""
    root = Path(cache_dir)
    if not root.exists():
        return 0
    removed = 0
    for path in sorted(root.rglob("*"), reverse=True):
        if path.is_file():
            path.unlink()
            removed += 1
        elif path.is_dir():
            path.rmdir()
    return removed
