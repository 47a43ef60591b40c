"""URI component lengths and encoding measures.

Components follow generic URI syntax and exclude their delimiters (the
scheme excludes "://", the query excludes "?"), while the total is the
full string length, so the delimiters live in the gap between the two.
Fragments are stripped before measurement; crawler-side URIs carry none.
"""

from dataclasses import dataclass
from urllib.parse import urldefrag, urlsplit

from ._kernels import count_pct_encoded
from .errors import UsageError


class NotAbsolute(UsageError):
    """URI lacks a scheme or authority."""


@dataclass(frozen=True)
class UriMetrics:
    """Length and encoding measures for one absolute URI.

    path_pct / query_pct count valid %HH triplets and are absent (None)
    when the component is empty; stray '%' bytes are ignored for those
    metrics but tallied in stray_pct as a data-quality counter.
    """

    total_len: int
    scheme_len: int
    netloc_len: int
    path_len: int
    query_len: int
    idna: bool
    path_pct: int | None
    query_pct: int | None
    stray_pct: int = 0


def measure(uri):
    """UriMetrics for an absolute URI."""
    defragged, _ = urldefrag(uri)
    parts = urlsplit(defragged)
    if not parts.scheme or not parts.netloc:
        raise NotAbsolute(f"not an absolute URI: {uri!r}")

    stray = 0
    if parts.path:
        path_pct, s = count_pct_encoded(parts.path)
        stray += s
    else:
        path_pct = None
    if parts.query:
        query_pct, s = count_pct_encoded(parts.query)
        stray += s
    else:
        query_pct = None

    return UriMetrics(
        total_len=len(defragged),
        scheme_len=len(parts.scheme),
        netloc_len=len(parts.netloc),
        path_len=len(parts.path),
        query_len=len(parts.query),
        idna=_has_idna_label(parts.netloc),
        path_pct=path_pct,
        query_pct=query_pct,
        stray_pct=stray,
    )


def host_of(uri):
    """Lowercased host (no userinfo, no port) for domain grouping."""
    netloc = urlsplit(urldefrag(uri)[0]).netloc
    return _strip_port(netloc.rsplit("@", 1)[-1]).lower()


def _strip_port(host):
    if host.startswith("["):
        close = host.find("]")
        if close != -1:
            return host[: close + 1]
    colon = host.rfind(":")
    if colon != -1 and host[colon + 1:].isdigit():
        return host[:colon]
    return host


def _has_idna_label(netloc):
    host = _strip_port(netloc.rsplit("@", 1)[-1])
    return any(label.lower().startswith("xn--") for label in host.split("."))


@dataclass(frozen=True)
class YearAggregate:
    """Per-year component means over the measured URIs."""

    year: int
    n: int
    mean_total: float
    mean_scheme: float
    mean_netloc: float
    mean_path: float
    mean_query: float
    idna_share: float
    mean_path_pct: float | None
    mean_query_pct: float | None


def outlier_domains(rows, min_samples=100, query_len_threshold=100):
    """Hosts sampled more than min_samples times whose mean query length
    exceeds query_len_threshold; the noisy-domain filter."""
    totals = {}
    for _, host, metrics in rows:
        n, q = totals.get(host, (0, 0))
        totals[host] = (n + 1, q + metrics.query_len)
    return {
        host for host, (n, q) in totals.items()
        if n > min_samples and q / n > query_len_threshold
    }


def aggregate_by_year(rows, drop_outliers=False, min_samples=100,
                      query_len_threshold=100):
    """Per-year means of the component lengths and encoding measures.

    rows is an iterable of (year, host, UriMetrics); years before 2000
    are too thinly represented to mean anything and are excluded.  With
    drop_outliers, rows from outlier_domains() hosts are removed first.
    """
    rows = list(rows)
    excluded = set()
    if drop_outliers:
        excluded = outlier_domains(rows, min_samples, query_len_threshold)

    sums = {}
    for year, host, m in rows:
        if year < 2000 or host in excluded:
            continue
        acc = sums.setdefault(year, {
            "n": 0, "total": 0, "scheme": 0, "netloc": 0, "path": 0,
            "query": 0, "idna": 0, "path_pct": 0, "path_pct_n": 0,
            "query_pct": 0, "query_pct_n": 0,
        })
        acc["n"] += 1
        acc["total"] += m.total_len
        acc["scheme"] += m.scheme_len
        acc["netloc"] += m.netloc_len
        acc["path"] += m.path_len
        acc["query"] += m.query_len
        acc["idna"] += 1 if m.idna else 0
        if m.path_pct is not None:
            acc["path_pct"] += m.path_pct
            acc["path_pct_n"] += 1
        if m.query_pct is not None:
            acc["query_pct"] += m.query_pct
            acc["query_pct_n"] += 1

    out = []
    for year in sorted(sums):
        acc = sums[year]
        n = acc["n"]
        out.append(YearAggregate(
            year=year,
            n=n,
            mean_total=acc["total"] / n,
            mean_scheme=acc["scheme"] / n,
            mean_netloc=acc["netloc"] / n,
            mean_path=acc["path"] / n,
            mean_query=acc["query"] / n,
            idna_share=acc["idna"] / n,
            mean_path_pct=acc["path_pct"] / acc["path_pct_n"] if acc["path_pct_n"] else None,
            mean_query_pct=acc["query_pct"] / acc["query_pct_n"] if acc["query_pct_n"] else None,
        ))
    return out


def serialize_year_table(aggregates):
    out = ["year\tn\ttotal\tscheme\tnetloc\tpath\tquery"
           "\tidna_share\tpath_pct\tquery_pct"]
    for a in aggregates:
        path_pct = "-" if a.mean_path_pct is None else f"{a.mean_path_pct:.3f}"
        query_pct = "-" if a.mean_query_pct is None else f"{a.mean_query_pct:.3f}"
        out.append(f"{a.year}\t{a.n}\t{a.mean_total:.3f}\t{a.mean_scheme:.3f}"
                   f"\t{a.mean_netloc:.3f}\t{a.mean_path:.3f}\t{a.mean_query:.3f}"
                   f"\t{a.idna_share:.4f}\t{path_pct}\t{query_pct}")
    return "\n".join(out) + "\n"
