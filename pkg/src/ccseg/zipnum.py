"""Two-level lookup over a ZipNum index.

A lookup binary-searches the in-memory master index for the block that
can contain the key, fetches that block's byte range (one independently
gzipped member), inflates it, and binary-searches the decompressed lines.
Exactly one block is read unless the master index itself proves that a
run of equal keys continues into following blocks (their first key equals
the probe), in which case those blocks are read too.

Known limit: a run of duplicate keys that *begins* in the tail of one
block and continues into the next is returned from the first
block-aligned key onward; recovering the tail portion would cost an
extra block read on every lookup whose key happens to open a block.
"""

import zlib
from dataclasses import dataclass, field

from .cdx import MasterIndexLine, parse_index_line, parse_master_line
from .errors import DataError, NotFoundError


class EmptyMaster(DataError):
    """Master index has no lines."""


class NotBefore(NotFoundError):
    """Probe key sorts before the first master-index line."""


class BadGzipMember(DataError):
    """Byte range is not one complete gzip member."""


class RangeUnavailable(DataError):
    """Shard bytes could not be provided for the requested range."""


@dataclass(frozen=True)
class BlockHandle:
    """Location of one compressed block inside a shard."""

    shard_name: str
    offset: int
    length: int

    def __post_init__(self):
        if self.length <= 0:
            raise DataError(f"non-positive block length: {self.length}")


@dataclass
class LookupStats:
    """Instrumentation counters for the lookup path.

    comparisons counts master-index binary-search probes (including the
    final equality probe); continuation_checks counts the master peeks
    that decide whether a key run spans additional blocks.
    """

    comparisons: int = 0
    blocks_read: int = 0
    continuation_checks: int = 0


class LocalShardAccess:
    """Range reader over shard files in a local directory."""

    def __init__(self, directory):
        self.directory = directory

    def read_range(self, shard_name, offset, length):
        path = f"{self.directory}/{shard_name}"
        try:
            with open(path, "rb") as f:
                f.seek(offset)
                data = f.read(length)
        except OSError as exc:
            raise RangeUnavailable(f"cannot read {path}: {exc}") from None
        if len(data) != length:
            raise RangeUnavailable(
                f"{path}: wanted {length} bytes at {offset}, got {len(data)}")
        return data


def load_master(path, validate_order=True):
    """Load cluster.idx into memory as a list of MasterIndexLine."""
    master = []
    prev_key = None
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.rstrip("\n")
            if not line:
                continue
            parsed = parse_master_line(line)
            if validate_order and prev_key is not None and parsed.first_urlkey < prev_key:
                raise DataError(f"master index out of order at {parsed.first_urlkey!r}")
            prev_key = parsed.first_urlkey
            master.append(parsed)
    return master


def _handle(master_line: MasterIndexLine) -> BlockHandle:
    return BlockHandle(master_line.shard_name, master_line.block_offset,
                       master_line.block_length)


def _bisect_left(master, key, stats=None):
    lo, hi = 0, len(master)
    while lo < hi:
        mid = (lo + hi) // 2
        if stats is not None:
            stats.comparisons += 1
        if master[mid].first_urlkey < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _bisect_right(master, key, stats=None):
    lo, hi = 0, len(master)
    while lo < hi:
        mid = (lo + hi) // 2
        if stats is not None:
            stats.comparisons += 1
        if master[mid].first_urlkey <= key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def locate_block(master, key, stats=None):
    """Handle of the last block whose first key is <= key."""
    if not master:
        raise EmptyMaster("no master-index lines")
    idx = _bisect_right(master, key, stats) - 1
    if idx < 0:
        raise NotBefore(f"{key!r} precedes the first indexed key")
    return _handle(master[idx])


def read_block(handle, shard_access, stats=None):
    """Decompress one block and split it into index lines."""
    data = shard_access.read_range(handle.shard_name, handle.offset, handle.length)
    d = zlib.decompressobj(16 + zlib.MAX_WBITS)
    try:
        raw = d.decompress(data)
    except zlib.error as exc:
        raise BadGzipMember(f"{handle.shard_name}@{handle.offset}: {exc}") from None
    if not d.eof:
        raise BadGzipMember(f"{handle.shard_name}@{handle.offset}: truncated member")
    if d.unused_data:
        raise BadGzipMember(
            f"{handle.shard_name}@{handle.offset}: range spans more than one member")
    if stats is not None:
        stats.blocks_read += 1
    lines = raw.decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _line_key(line):
    space = line.find(" ")
    return line if space == -1 else line[:space]


def _collect_matches(lines, key, out):
    """Append parsed entries for the in-block run equal to key."""
    lo, hi = 0, len(lines)
    while lo < hi:
        mid = (lo + hi) // 2
        if _line_key(lines[mid]) < key:
            lo = mid + 1
        else:
            hi = mid
    i = lo
    n = len(lines)
    while i < n and _line_key(lines[i]) == key:
        out.append(parse_index_line(lines[i]))
        i += 1


def lookup(key, master, shard_access, stats=None, thorough=False):
    """All index entries whose urlkey equals key, in file order.

    With thorough=True, a key that opens a block also triggers a read of
    the preceding block, recovering duplicate runs that begin in its
    tail; this trades the one-block-per-lookup guarantee for exactness.
    """
    if not master:
        raise EmptyMaster("no master-index lines")
    lo = _bisect_left(master, key, stats)
    block_starts_with_key = False
    if lo < len(master):
        if stats is not None:
            stats.comparisons += 1
        block_starts_with_key = master[lo].first_urlkey == key
    start = lo if block_starts_with_key else lo - 1
    if thorough and block_starts_with_key and lo > 0:
        start = lo - 1
    if start < 0:
        return []

    results = []
    b = start
    while True:
        lines = read_block(_handle(master[b]), shard_access, stats)
        _collect_matches(lines, key, results)
        if b + 1 < len(master):
            if stats is not None:
                stats.continuation_checks += 1
            if master[b + 1].first_urlkey == key:
                b += 1
                continue
        break
    return results
