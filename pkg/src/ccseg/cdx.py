"""Parsers for the ZipNum index text formats.

Primary-index lines look like

    urlkey<space>timestamp<space>{"url": ..., "status": ..., ...}

and master-index (cluster.idx) lines are five whitespace-separated
fields: first urlkey, timestamp, shard name, block offset, block length.

Parsed entries keep the original metadata key/value strings so that
serialize(parse(line)) == line for conventionally formatted lines,
including unknown keys, which ride along untouched.
"""

import json
import re
from dataclasses import dataclass, field

from . import _kernels
from .errors import DataError

# Guard against corrupt (e.g. mis-decompressed) input.
MAX_LINE_BYTES = 1 << 20

SUBSETS = ("warc", "crawldiagnostics", "robotstxt")

_SHARD_NAME = re.compile(r"^cdx-(\d{5})\.gz$")
_DIGEST32 = re.compile(r"^[A-Z2-7]{32}$")

_MANDATORY = ("url", "status", "digest", "length", "offset", "filename")


class MalformedLine(DataError):
    """Line does not parse as its index format."""


class BadTimestamp(DataError):
    """14-digit timestamp is not a valid UTC instant."""


class NoSegmentPath(DataError):
    """Record filename carries no segments/<id>.<nn>/<subset>/ component."""


@dataclass(frozen=True)
class SegmentRef:
    """Identity of the archive subset a record file belongs to."""

    segment_id: int
    subset: str

    def __post_init__(self):
        if not 0 <= self.segment_id <= 99:
            raise MalformedLine(f"segment id out of range: {self.segment_id}")
        if self.subset not in SUBSETS:
            raise MalformedLine(f"unknown subset: {self.subset!r}")


@dataclass(frozen=True)
class IndexEntry:
    """One primary-index line.

    raw_fields preserves the metadata record's original key order and
    string values; the typed attributes are parsed views of it.
    """

    urlkey: str
    timestamp14: str
    url: str
    status: int
    digest: str
    length: int
    offset: int
    filename: str
    mime: str = "unk"
    mime_detected: str | None = None
    charset: str | None = None
    languages: tuple[str, ...] | None = None
    redirect: str | None = None
    raw_fields: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def extras(self):
        """Metadata keys beyond the documented set, preserved verbatim."""
        known = {"url", "mime", "mime-detected", "status", "digest", "length",
                 "offset", "filename", "charset", "languages", "redirect"}
        return {k: v for k, v in self.raw_fields.items() if k not in known}

    def segment(self):
        return segment_of(self.filename)


@dataclass(frozen=True)
class MasterIndexLine:
    """One cluster.idx line addressing a compressed block."""

    first_urlkey: str
    timestamp14: str
    shard_name: str
    block_offset: int
    block_length: int


def _check_line_size(line):
    if len(line) > MAX_LINE_BYTES:
        raise MalformedLine(f"line exceeds {MAX_LINE_BYTES} bytes")
    if not line.isascii() and len(line.encode("utf-8")) > MAX_LINE_BYTES:
        raise MalformedLine(f"line exceeds {MAX_LINE_BYTES} bytes")


def _check_timestamp(ts):
    if _kernels.timestamp14_to_posix(ts) == _kernels.UNUSABLE:
        raise BadTimestamp(f"bad 14-digit timestamp: {ts!r}")


def parse_index_line(line):
    """Parse one primary-index line into an IndexEntry."""
    _check_line_size(line)
    parts = line.split(" ", 2)
    if len(parts) != 3:
        raise MalformedLine(f"expected urlkey/timestamp/record: {line[:80]!r}")
    urlkey, ts, blob = parts
    if not urlkey:
        raise MalformedLine("empty urlkey")
    _check_timestamp(ts)
    try:
        fields = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"unparseable metadata record: {exc}") from None
    if not isinstance(fields, dict):
        raise MalformedLine("metadata record is not an object")

    for key in _MANDATORY:
        if key not in fields:
            raise MalformedLine(f"metadata record missing {key!r}")

    status_text = str(fields["status"])
    if not (len(status_text) == 3 and status_text.isdigit()):
        raise MalformedLine(f"bad status: {status_text!r}")
    try:
        length = int(fields["length"])
        offset = int(fields["offset"])
    except (TypeError, ValueError):
        raise MalformedLine("length/offset not integral") from None
    if length <= 0:
        raise MalformedLine(f"non-positive length: {length}")
    if offset < 0:
        raise MalformedLine(f"negative offset: {offset}")
    digest = str(fields["digest"])
    if not _DIGEST32.match(digest):
        raise MalformedLine(f"digest is not 32-character Base32: {digest!r}")

    languages = None
    if "languages" in fields:
        languages = tuple(str(fields["languages"]).split(","))
        if not 1 <= len(languages) <= 3:
            raise MalformedLine(f"languages out of range: {languages!r}")

    return IndexEntry(
        urlkey=urlkey,
        timestamp14=ts,
        url=str(fields["url"]),
        status=int(status_text),
        digest=digest,
        length=length,
        offset=offset,
        filename=str(fields["filename"]),
        mime=str(fields.get("mime", "unk")),
        mime_detected=_opt(fields, "mime-detected"),
        charset=_opt(fields, "charset"),
        languages=languages,
        raw_fields=fields,
        redirect=_opt(fields, "redirect"),
    )


def _opt(fields, key):
    return str(fields[key]) if key in fields else None


def serialize_index_line(entry):
    """Inverse of parse_index_line for conventionally formatted lines."""
    blob = json.dumps(entry.raw_fields, separators=(", ", ": "), ensure_ascii=False)
    return f"{entry.urlkey} {entry.timestamp14} {blob}"


def parse_master_line(line):
    """Parse one cluster.idx line into a MasterIndexLine."""
    _check_line_size(line)
    parts = line.split()
    if len(parts) != 5:
        raise MalformedLine(f"expected 5 master-index fields: {line[:80]!r}")
    urlkey, ts, shard, offset_text, length_text = parts
    _check_timestamp(ts)
    m = _SHARD_NAME.match(shard)
    if not m or not 0 <= int(m.group(1)) <= 299:
        raise MalformedLine(f"bad shard name: {shard!r}")
    try:
        offset = int(offset_text)
        length = int(length_text)
    except ValueError:
        raise MalformedLine(f"bad block offset/length: {line[:80]!r}") from None
    if offset < 0:
        raise MalformedLine(f"negative block offset: {offset}")
    if length <= 0:
        raise MalformedLine(f"non-positive block length: {length}")
    return MasterIndexLine(urlkey, ts, shard, offset, length)


def serialize_master_line(master):
    return (f"{master.first_urlkey} {master.timestamp14} {master.shard_name} "
            f"{master.block_offset} {master.block_length}")


def segment_of(filename):
    """SegmentRef derived from a record filename's segments/ component."""
    parts = filename.split("/")
    for i in range(len(parts) - 2):
        if parts[i] != "segments":
            continue
        seg_dir = parts[i + 1]
        dot = seg_dir.rfind(".")
        if dot == -1:
            continue
        suffix = seg_dir[dot + 1:]
        if not (1 <= len(suffix) <= 2 and suffix.isdigit()):
            continue
        subset = parts[i + 2]
        if subset not in SUBSETS:
            continue
        return SegmentRef(int(suffix), subset)
    raise NoSegmentPath(f"no segments/<id>.<nn>/<subset>/ in {filename!r}")
