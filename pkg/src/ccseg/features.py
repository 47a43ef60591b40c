"""Per-segment feature tabulation and the merged top-K table.

The studied properties are media-type pairs (declared + detected, with
the detected value folded to "ditto" when it repeats the declared one),
first language, response-length percentiles, and Last-Modified years.
Counts are tabulated per segment and merged: the whole-archive column is
the sum over segments, rows are the top-K labels by whole-archive count,
and a label that never occurs in some segment is recorded as a missing
cell (serialized "nan"), not as zero.
"""

import math
from collections import Counter
from dataclasses import dataclass

from ._kernels import civil_from_days
from .errors import DataError, UsageError

N_SEGMENTS = 100

MIME_PAIR = "mime_pair"
LANGUAGE_FIRST = "language_first"
LENGTH_PERCENTILE = "length_percentile"
LMH_YEAR = "lmh_year"
KINDS = (MIME_PAIR, LANGUAGE_FIRST, LENGTH_PERCENTILE, LMH_YEAR)

# Reserved detected-mime label; cannot collide with real media types,
# which contain a slash (or are the literal "unk").
DITTO = "ditto"

# In-memory marker for a drop-out cell; serialized as "nan".
MISSING = None


class WrongSubset(UsageError):
    """Tabulation stream contained a non-warc record."""


class EmptyInput(UsageError):
    """Percentiles of an empty multiset are undefined."""


@dataclass(frozen=True)
class FeatureSpec:
    kind: str
    top_k: int = 100

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown feature kind: {self.kind!r}")
        if self.top_k < 1:
            raise UsageError(f"top_k must be >= 1, got {self.top_k}")


@dataclass(frozen=True)
class MergedFeatureTable:
    """Top-K labels x (whole + 100 segments).

    For count kinds, cell values are occurrence counts and the whole
    column is the segment sum.  For the length kind, rows are the
    percentiles p001..p100 and cells hold percentile *values*; the whole
    column is computed over the union multiset, so the count-table sum
    identity intentionally does not apply.
    """

    kind: str
    labels: tuple
    whole: tuple
    segments: tuple  # one row of N_SEGMENTS cells per label; None = missing

    def column(self, j):
        """Column values: j=0 is the whole archive, j=1..100 segments 0..99."""
        if j == 0:
            return list(self.whole)
        return [row[j - 1] for row in self.segments]

    @property
    def n_labels(self):
        return len(self.labels)


def mime_pair_label(mime, mime_detected):
    """Fold the detected mime into the pair label, dittoing repeats."""
    detected = mime_detected if mime_detected is not None else "unk"
    if detected == mime:
        detected = DITTO
    return f"{mime} {detected}"


def tabulate(entries, spec):
    """Per-segment raw tabulation of one feature.

    For count kinds the input is an iterable of (IndexEntry, SegmentRef)
    pairs restricted to the successful-retrieval subset and the result
    maps segment id -> Counter of labels.  For LENGTH_PERCENTILE the
    result maps segment id -> list of response lengths (see
    percentile_vector).  For LMH_YEAR the input is an iterable of
    accepted Last-Modified records carrying their segment.
    """
    if spec.kind == LMH_YEAR:
        return _tabulate_lm_years(entries)
    if spec.kind == LENGTH_PERCENTILE:
        lengths = {}
        for entry, seg in entries:
            _require_warc(seg)
            lengths.setdefault(seg.segment_id, []).append(entry.length)
        return lengths

    counts = {}
    for entry, seg in entries:
        _require_warc(seg)
        if spec.kind == MIME_PAIR:
            label = mime_pair_label(entry.mime, entry.mime_detected)
        else:  # LANGUAGE_FIRST
            if not entry.languages:
                continue
            label = entry.languages[0]
        bucket = counts.get(seg.segment_id)
        if bucket is None:
            bucket = counts[seg.segment_id] = Counter()
        bucket[label] += 1
    return counts


def _tabulate_lm_years(records):
    counts = {}
    for rec in records:
        if rec.segment is None:
            continue  # unattributable to a segment
        _require_warc(rec.segment)
        year = civil_from_days(rec.lm_posix // 86400)[0]
        bucket = counts.get(rec.segment.segment_id)
        if bucket is None:
            bucket = counts[rec.segment.segment_id] = Counter()
        bucket[str(year)] += 1
    return counts


def _require_warc(seg):
    if seg.subset != "warc":
        raise WrongSubset(f"expected warc records, got {seg.subset!r}")


def percentile_vector(lengths):
    """Nearest-rank percentiles 1..100 of a non-empty multiset."""
    if not lengths:
        raise EmptyInput("no lengths to rank")
    ordered = sorted(lengths)
    n = len(ordered)
    return [ordered[(p * n + 99) // 100 - 1] for p in range(1, 101)]


def merge_top_k(segment_counts, top_k, kind=MIME_PAIR):
    """MergedFeatureTable of the top_k labels by whole-archive count.

    The whole column is the sum over segments; rows are ordered by that
    count descending with lexicographic tie-breaks; a label absent from
    a segment is a missing cell.
    """
    if top_k < 1:
        raise UsageError(f"top_k must be >= 1, got {top_k}")
    whole = Counter()
    for counter in segment_counts.values():
        whole.update(counter)
    labels = sorted(whole, key=lambda label: (-whole[label], label))[:top_k]
    rows = []
    for label in labels:
        rows.append(tuple(
            segment_counts[s][label] if s in segment_counts and label in segment_counts[s]
            else MISSING
            for s in range(N_SEGMENTS)
        ))
    return MergedFeatureTable(
        kind=kind,
        labels=tuple(labels),
        whole=tuple(whole[label] for label in labels),
        segments=tuple(rows),
    )


def merge_percentiles(segment_lengths):
    """Percentile-value table: rows p001..p100, whole over the union."""
    union = []
    for lengths in segment_lengths.values():
        union.extend(lengths)
    whole_vec = percentile_vector(union)
    seg_vecs = {s: percentile_vector(v) for s, v in segment_lengths.items() if v}
    labels = [f"p{p:03d}" for p in range(1, 101)]
    rows = []
    for i in range(100):
        rows.append(tuple(
            seg_vecs[s][i] if s in seg_vecs else MISSING
            for s in range(N_SEGMENTS)
        ))
    return MergedFeatureTable(
        kind=LENGTH_PERCENTILE,
        labels=tuple(labels),
        whole=tuple(whole_vec),
        segments=tuple(rows),
    )


def build_table(entries, spec):
    """Tabulate + merge in one step."""
    raw = tabulate(entries, spec)
    if spec.kind == LENGTH_PERCENTILE:
        return merge_percentiles(raw)
    return merge_top_k(raw, spec.top_k, kind=spec.kind)


def merge_tabulations(parts):
    """Associative, commutative fold of per-shard tabulate() results."""
    merged = {}
    for part in parts:
        for seg, data in part.items():
            if seg not in merged:
                merged[seg] = Counter() if isinstance(data, Counter) else []
            if isinstance(data, Counter):
                merged[seg].update(data)
            else:
                merged[seg].extend(data)
    return merged


def serialize_table(table):
    """Tab-separated text form; missing cells spell "nan"."""
    out = [f"# kind={table.kind}"]
    header = ["label", "whole"] + [f"seg{s:02d}" for s in range(N_SEGMENTS)]
    out.append("\t".join(header))
    for i, label in enumerate(table.labels):
        cells = [label, str(table.whole[i])]
        cells.extend("nan" if v is MISSING else str(v) for v in table.segments[i])
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


def parse_table(text):
    """Inverse of serialize_table; tolerates a leading provenance header."""
    lines = [ln for ln in text.split("\n") if ln]
    if lines and lines[0].startswith("# archive="):
        lines = lines[1:]
    if not lines or not lines[0].startswith("# kind="):
        raise DataError("feature table must start with a # kind= line")
    kind = lines[0][len("# kind="):]
    if kind not in KINDS:
        raise DataError(f"unknown feature kind: {kind!r}")
    expected_cols = 2 + N_SEGMENTS
    header = lines[1].split("\t")
    if len(header) != expected_cols or header[0] != "label" or header[1] != "whole":
        raise DataError("bad feature table header")
    labels = []
    whole = []
    rows = []
    for line in lines[2:]:
        cells = line.split("\t")
        if len(cells) != expected_cols:
            raise DataError(f"bad feature table row: {line[:60]!r}")
        labels.append(cells[0])
        whole.append(_cell(cells[1]))
        rows.append(tuple(MISSING if c == "nan" else _cell(c) for c in cells[2:]))
    return MergedFeatureTable(kind, tuple(labels), tuple(whole), tuple(rows))


def _cell(text):
    try:
        return int(text)
    except ValueError:
        raise DataError(f"bad table cell: {text!r}") from None
