"""Last-Modified header analysis: lenient parsing, credibility filtering,
period tabulation, crawl-offset histograms, and single-value anomaly
detection over 10000-second buckets.

The credibility window is [1990-01-01T00:00:00Z, crawl time + 25h]: the
floor keeps late-20th-century values while excluding epoch garbage, and
the 25-hour ceiling tolerates local times misreported as UTC from any
real timezone while rejecting far-future junk.
"""

from collections import Counter
from dataclasses import dataclass

from . import _kernels
from .cdx import BadTimestamp, MalformedLine, SegmentRef
from .errors import DataError, UsageError

# 1990-01-01T00:00:00Z; values before this are not credible.
CREDIBILITY_FLOOR = 631152000
# 25 hours past the crawl instant; tolerates unconverted local times
# up to UTC+14 plus clock skew.
CREDIBILITY_SLACK = 90000

YEAR = "year"
MONTH = "month"
DAY = "day"
GRANULARITIES = (YEAR, MONTH, DAY)


class UnusableDate(DataError):
    """Header value cannot be parsed as written."""


@dataclass(frozen=True)
class LastModRecord:
    """An accepted Last-Modified value joined with its crawl context."""

    lm_posix: int
    crawl_posix: int
    segment: SegmentRef | None
    url_ref: str
    raw_header: str


@dataclass
class ParseStats:
    """Bookkeeping for one extraction pass."""

    total: int = 0
    accepted: int = 0
    rejected_unusable: int = 0
    rejected_incredible: int = 0
    absent: int = 0

    def to_dict(self):
        return {
            "total": self.total,
            "accepted": self.accepted,
            "rejected_unusable": self.rejected_unusable,
            "rejected_incredible": self.rejected_incredible,
            "absent": self.absent,
        }


def parse_http_date(value):
    """POSIX seconds (UTC) for a Last-Modified value; UnusableDate if not."""
    posix = _kernels.http_date_to_posix(value)
    if posix == _kernels.UNUSABLE:
        raise UnusableDate(f"cannot parse {value!r}")
    return posix


_WEEKDAYS_OUT = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
_MONTHS_OUT = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
               "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


def format_http_date(posix):
    """IMF-fixdate text for a POSIX instant; inverse of parse_http_date."""
    days, secs = divmod(posix, 86400)
    y, m, d = _kernels.civil_from_days(days)
    weekday = (days + 3) % 7  # 1970-01-01 was a Thursday
    return (f"{_WEEKDAYS_OUT[weekday]}, {d:02d} {_MONTHS_OUT[m - 1]} {y:04d} "
            f"{secs // 3600:02d}:{secs // 60 % 60:02d}:{secs % 60:02d} GMT")


def format_timestamp14(posix):
    """14-digit crawl-timestamp text; inverse of crawl_posix_of."""
    days, secs = divmod(posix, 86400)
    y, m, d = _kernels.civil_from_days(days)
    return (f"{y:04d}{m:02d}{d:02d}"
            f"{secs // 3600:02d}{secs // 60 % 60:02d}{secs % 60:02d}")


def try_parse_http_date(value):
    """Like parse_http_date but None instead of raising (hot loops)."""
    posix = _kernels.http_date_to_posix(value)
    return None if posix == _kernels.UNUSABLE else posix


def credibility_filter(lm_posix, crawl_posix):
    """True iff the value lies inside the closed credibility window."""
    return CREDIBILITY_FLOOR <= lm_posix <= crawl_posix + CREDIBILITY_SLACK


def crawl_posix_of(timestamp14):
    """POSIX seconds for a 14-digit crawl timestamp."""
    posix = _kernels.timestamp14_to_posix(timestamp14)
    if posix == _kernels.UNUSABLE:
        raise BadTimestamp(f"bad 14-digit timestamp: {timestamp14!r}")
    return posix


def extract_records(rows, stats=None, segment_resolver=None):
    """Yield accepted LastModRecords from (urlkey, ts14, header, url) rows.

    Rows with an empty header count as absent; unusable and incredible
    values are rejected and tallied.  segment_resolver, when given, maps
    (urlkey, timestamp14) to a SegmentRef or None.
    """
    if stats is None:
        stats = ParseStats()
    for urlkey, ts14, raw, url in rows:
        stats.total += 1
        if not raw:
            stats.absent += 1
            continue
        lm = _kernels.http_date_to_posix(raw)
        if lm == _kernels.UNUSABLE:
            stats.rejected_unusable += 1
            continue
        crawl = crawl_posix_of(ts14)
        if not credibility_filter(lm, crawl):
            stats.rejected_incredible += 1
            continue
        stats.accepted += 1
        segment = segment_resolver(urlkey, ts14) if segment_resolver else None
        yield LastModRecord(lm, crawl, segment, url, raw)


def parse_extraction_line(line):
    """(urlkey, timestamp14, raw_header, url) from one extraction row.

    Header values must be tab-free; producers sanitize tabs to spaces.
    """
    parts = line.split("\t")
    if len(parts) != 4:
        raise MalformedLine(f"expected 4 extraction fields: {line[:80]!r}")
    return tuple(parts)


def serialize_extraction_line(urlkey, timestamp14, raw_header, url):
    raw_header = raw_header.replace("\t", " ")
    return f"{urlkey}\t{timestamp14}\t{raw_header}\t{url}"


def read_extraction_file(path):
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.rstrip("\n")
            if line and not line.startswith("#"):
                yield parse_extraction_line(line)


def _ymd(lm_posix):
    return _kernels.civil_from_days(lm_posix // 86400)


def period_key(lm_posix, granularity):
    y, m, d = _ymd(lm_posix)
    if granularity == YEAR:
        return f"{y:04d}"
    if granularity == MONTH:
        return f"{y:04d}-{m:02d}"
    if granularity == DAY:
        return f"{y:04d}-{m:02d}-{d:02d}"
    raise UsageError(f"unknown granularity: {granularity!r}")


def tabulate_period(records, granularity):
    """Ordered (period, count) pairs; empty periods are omitted."""
    counts = Counter(period_key(r.lm_posix, granularity) for r in records)
    return sorted(counts.items())


@dataclass(frozen=True)
class OffsetHistogram:
    """Distribution of Last-Modified minus crawl time, in seconds."""

    total: int
    top: tuple          # (offset, count), top-20 by count, ties by offset
    top_share: float    # fraction of records covered by the top entries
    counts: dict        # full histogram


def offsets(records, top_n=20):
    counts = Counter(r.lm_posix - r.crawl_posix for r in records)
    total = sum(counts.values())
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    covered = sum(c for _, c in top)
    share = covered / total if total else 0.0
    return OffsetHistogram(total=total, top=tuple(top), top_share=share,
                           counts=dict(counts))


@dataclass(frozen=True)
class AnomalyReport:
    """A 10000-second bucket dominated by one exact timestamp value."""

    bucket_id: int
    bucket_count: int
    dominant_value: int
    dominant_share: float
    comparison_ratios: dict  # same_year_runner_up / prev_year / next_year


def detect_anomalies(records, ratio_threshold=10, share_threshold=0.9):
    """Buckets whose count dwarfs the same-ranked bucket of each adjacent
    year and whose count is dominated by a single exact value.

    With fewer than three calendar years of data the adjacent-year
    comparison degrades to the within-year runner-up.  When an adjacent
    year has fewer ranked buckets than needed, its smallest bucket is
    used for the comparison.
    """
    bucket_counts = Counter()
    value_counts = {}
    for r in records:
        b = r.lm_posix // 10000
        bucket_counts[b] += 1
        vc = value_counts.get(b)
        if vc is None:
            vc = value_counts[b] = Counter()
        vc[r.lm_posix] += 1
    if not bucket_counts:
        return []

    def bucket_year(b):
        return _kernels.civil_from_days(b * 10000 // 86400)[0]

    by_year = {}
    for b, c in bucket_counts.items():
        by_year.setdefault(bucket_year(b), []).append((b, c))
    for year in by_year:
        by_year[year].sort(key=lambda bc: (-bc[1], bc[0]))

    years = sorted(by_year)
    adjacent_mode = len(years) >= 3

    reports = []
    for year in years:
        ranked = by_year[year]
        for rank0, (bucket, count) in enumerate(ranked):
            dominant_value, dominant_count = value_counts[bucket].most_common(1)[0]
            share = dominant_count / count
            ratios = {"same_year_runner_up": None, "prev_year": None,
                      "next_year": None}
            if rank0 + 1 < len(ranked):
                ratios["same_year_runner_up"] = count / ranked[rank0 + 1][1]

            comparisons = []
            if adjacent_mode:
                for key, adj in (("prev_year", year - 1), ("next_year", year + 1)):
                    if adj in by_year:
                        adj_ranked = by_year[adj]
                        adj_count = adj_ranked[min(rank0, len(adj_ranked) - 1)][1]
                        ratios[key] = count / adj_count
                        comparisons.append(ratios[key])
            if not comparisons:
                if ratios["same_year_runner_up"] is None:
                    continue  # nothing to compare against
                comparisons = [ratios["same_year_runner_up"]]

            if share >= share_threshold and all(c > ratio_threshold for c in comparisons):
                reports.append(AnomalyReport(
                    bucket_id=bucket,
                    bucket_count=count,
                    dominant_value=dominant_value,
                    dominant_share=share,
                    comparison_ratios=ratios,
                ))
    reports.sort(key=lambda rep: rep.bucket_id)
    return reports


def remove_value(records, lm_posix):
    """(surviving records, removed count) after dropping one exact value."""
    kept = [r for r in records if r.lm_posix != lm_posix]
    return kept, len(records) - len(kept)


# ---------------------------------------------------------------------------
# record-file round trip and tab-separated emission

def serialize_record(rec):
    if rec.segment is None:
        seg, subset = "-", "-"
    else:
        seg, subset = str(rec.segment.segment_id), rec.segment.subset
    raw = rec.raw_header.replace("\t", " ")
    return f"{rec.lm_posix}\t{rec.crawl_posix}\t{seg}\t{subset}\t{rec.url_ref}\t{raw}"


def parse_record_line(line):
    parts = line.split("\t")
    if len(parts) != 6:
        raise MalformedLine(f"expected 6 record fields: {line[:80]!r}")
    lm, crawl, seg, subset, url, raw = parts
    segment = None if seg == "-" else SegmentRef(int(seg), subset)
    return LastModRecord(int(lm), int(crawl), segment, url, raw)


def read_record_file(path):
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.rstrip("\n")
            if line and not line.startswith("#"):
                yield parse_record_line(line)


def serialize_periods(pairs):
    out = ["period\tcount"]
    out.extend(f"{period}\t{count}" for period, count in pairs)
    return "\n".join(out) + "\n"


def serialize_offsets(hist):
    out = [f"# total={hist.total}",
           f"# top_share={hist.top_share:.4f}",
           "offset\tcount"]
    out.extend(f"{offset}\t{count}" for offset, count in hist.top)
    return "\n".join(out) + "\n"


def serialize_anomalies(reports):
    out = ["bucket_id\tbucket_count\tdominant_value\tdominant_share"
           "\tsame_year_runner_up\tprev_year\tnext_year"]
    for rep in reports:
        ratios = rep.comparison_ratios

        def fmt(key):
            v = ratios.get(key)
            return "-" if v is None else f"{v:.2f}"

        out.append(f"{rep.bucket_id}\t{rep.bucket_count}\t{rep.dominant_value}"
                   f"\t{rep.dominant_share:.4f}\t{fmt('same_year_runner_up')}"
                   f"\t{fmt('prev_year')}\t{fmt('next_year')}")
    return "\n".join(out) + "\n"
