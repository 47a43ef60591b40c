"""URI component measurement and per-year aggregation."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccseg.urimetrics import (NotAbsolute, aggregate_by_year, host_of,
                              measure, outlier_domains, serialize_year_table)


def test_measure_reference_uri():
    m = measure("https://www.w3.org/TR/xml/")
    assert m.total_len == 26
    assert m.scheme_len == 5
    assert m.netloc_len == 10
    assert m.path_len == 8
    assert m.query_len == 0
    assert not m.idna
    assert m.query_pct is None


def test_measure_punycode_host():
    assert measure("http://xn--e1afmkfd.xn--p1ai/").idna
    assert measure("http://XN--E1AFMKFD.example/").idna
    assert not measure("http://example.com/xn--path/").idna


def test_measure_pct_counts_valid_triplets_only():
    m = measure("https://h/p?a=%2Fx%ZZ")
    assert m.query_pct == 1
    assert m.stray_pct == 1


def test_measure_component_exclusivity():
    m = measure("https://h/p?q=1")
    assert m.total_len == 15
    assert m.scheme_len == 5   # no ://
    assert m.netloc_len == 1
    assert m.path_len == 2
    assert m.query_len == 3    # no ?
    assert m.total_len >= m.scheme_len + m.netloc_len + m.path_len + m.query_len


def test_measure_empty_path_pct_absent():
    m = measure("https://h?q=%41")
    assert m.path_pct is None
    assert m.query_pct == 1


def test_fragment_stripped_before_measurement():
    assert measure("https://h/p#frag").total_len == measure("https://h/p").total_len


@pytest.mark.parametrize("uri", ["/relative/path", "no-scheme", "mailto:x@y",
                                 "http://"])
def test_not_absolute(uri):
    with pytest.raises(NotAbsolute):
        measure(uri)


def test_host_of():
    assert host_of("https://User@WWW.Example.COM:8443/p") == "www.example.com"
    assert host_of("http://h/p") == "h"


_simple_uri = st.builds(
    lambda host, path, query: f"https://{host}/{path}" + (f"?{query}" if query else ""),
    st.text(alphabet="abcdefgh.", min_size=1, max_size=10).filter(
        lambda h: not h.startswith(".") and ".." not in h),
    st.text(alphabet="abcdefgh%2F/", max_size=12),
    st.text(alphabet="abcdefgh%2F=&", max_size=12),
)


@given(_simple_uri)
def test_measure_total_and_determinism(uri):
    a = measure(uri)
    b = measure(uri)
    assert a == b
    assert a.total_len == len(uri)
    assert a.total_len >= a.scheme_len + a.netloc_len + a.path_len + a.query_len


@given(_simple_uri)
def test_removing_query_shrinks_total_by_query_plus_one(uri):
    m = measure(uri)
    if m.query_len == 0:
        return
    stripped = measure(uri.split("?", 1)[0])
    assert stripped.total_len == m.total_len - m.query_len - 1


# --- aggregation

def _metrics(query_len=0, total=20):
    from ccseg.urimetrics import UriMetrics
    return UriMetrics(total_len=total, scheme_len=5, netloc_len=5,
                      path_len=total - 11 - query_len, query_len=query_len,
                      idna=False, path_pct=0,
                      query_pct=query_len or None, stray_pct=0)


def test_single_record_year_mean_is_that_record():
    rows = [(2019, "a.example", _metrics(total=33))]
    aggs = aggregate_by_year(rows)
    assert len(aggs) == 1
    assert aggs[0].year == 2019
    assert aggs[0].mean_total == 33


def test_years_before_2000_excluded():
    rows = [(1997, "a.example", _metrics()), (2003, "a.example", _metrics())]
    assert [a.year for a in aggregate_by_year(rows)] == [2003]


def test_linear_growth_recovered():
    rows = []
    for year in range(2005, 2015):
        for _ in range(50):
            rows.append((year, "h.example", _metrics(total=year - 1985)))
    aggs = aggregate_by_year(rows)
    means = [a.mean_path for a in aggs]
    diffs = [b - a for a, b in zip(means, means[1:])]
    assert all(d == pytest.approx(1.0) for d in diffs)


def test_outlier_domain_filter_lowers_year_mean():
    """Two heavily-sampled long-query domains drag the mean up; dropping
    groups with >100 samples and mean query length >100 restores it."""
    rows = []
    for _ in range(300):
        rows.append((2006, "normal.example", _metrics(query_len=10)))
    for host in ("spam-a.example", "spam-b.example"):
        for _ in range(150):
            rows.append((2006, host, _metrics(query_len=400, total=500)))

    assert outlier_domains(rows) == {"spam-a.example", "spam-b.example"}
    raw = aggregate_by_year(rows)[0]
    filtered = aggregate_by_year(rows, drop_outliers=True)[0]
    assert filtered.mean_query < raw.mean_query
    assert filtered.mean_query == pytest.approx(10.0)
    assert filtered.n == 300


def test_outlier_filter_requires_both_conditions():
    rows = [(2006, "few.example", _metrics(query_len=500, total=600))] * 50
    rows += [(2006, "short.example", _metrics(query_len=5))] * 500
    assert outlier_domains(rows) == set()


def test_year_table_serialization():
    rows = [(2019, "a.example", _metrics(total=33, query_len=4))]
    text = serialize_year_table(aggregate_by_year(rows))
    lines = text.splitlines()
    assert lines[0].startswith("year\tn\ttotal")
    assert lines[1].startswith("2019\t1\t33.000")
