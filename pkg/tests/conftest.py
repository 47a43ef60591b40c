"""Shared fixtures: canonical index lines, synthetic archives, and the
acceptance-summary reporting hook (one PASS/FAIL line per criterion)."""

import re

import pytest

from ccseg.synth import SynthSpec, write_archive

# The two index entries for org,w3)/tr/xml as they appear in the index,
# used for parse/serialize and lookup fixtures throughout the suite.
LINE_301 = (
    'org,w3)/tr/xml 20210613173657 {"url": "https://www.w3.org/TR/XML/", '
    '"mime": "text/html", "mime-detected": "text/html", "status": "301", '
    '"digest": "LQRWZ7SMYYGCL55UJSVAS3BY64YNZ4DQ", "length": "743", '
    '"offset": "27241472", "filename": "crawl-data/CC-MAIN-2021-25/segments/'
    '1623487610196.46/crawldiagnostics/CC-MAIN-20210613161945-20210613191945'
    '-00275.warc.gz", "redirect": "https://www.w3.org/TR/xml/"}'
)
LINE_200 = (
    'org,w3)/tr/xml 20210613173657 {"url": "https://www.w3.org/TR/xml/", '
    '"mime": "text/html", "mime-detected": "application/xhtml+xml", '
    '"status": "200", "digest": "AOMNGHUQLUKLHHWBNUL7MOVXKIUX522W", '
    '"length": "55091", "offset": "968583998", "filename": "crawl-data/'
    'CC-MAIN-2021-25/segments/1623487610196.46/warc/CC-MAIN-20210613161945'
    '-20210613191945-00371.warc.gz", "charset": "UTF-8", "languages": "eng"}'
)

MASTER_LINE = "org,w3)/tr/tr.xml 20210613173657 cdx-00253.gz 557238519 185309"


@pytest.fixture(scope="session")
def paper_lines():
    return LINE_301, LINE_200


@pytest.fixture(scope="session")
def master_line():
    return MASTER_LINE


@pytest.fixture(scope="session")
def small_archive(tmp_path_factory):
    """A 10-segment archive with duplicates and diagnostics records."""
    spec = SynthSpec(seed=11, n_segments=10, entries_per_segment=60,
                     block_size=8, n_shards=3, duplicate_share=0.05,
                     diagnostics_share=0.05)
    return write_archive(spec, tmp_path_factory.mktemp("small_archive"))


@pytest.fixture(scope="session")
def pipeline_archive(tmp_path_factory):
    """A fuller archive for pipeline-level tests: 100 segments, planted
    perturbations, an injected anomaly."""
    spec = SynthSpec(
        seed=23, n_segments=100, entries_per_segment=40, block_size=30,
        n_shards=3, lm_present_share=0.5,
        perturbed_segments=((7, 0.9), (41, 0.8), (88, 0.95)),
        anomalies=((1114316977, 600),),
    )
    return write_archive(spec, tmp_path_factory.mktemp("pipeline_archive"))


_CRITERION_PATTERN = re.compile(r"test_acceptance\.py::test_c(\d{2})_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, ()):
            m = _CRITERION_PATTERN.search(getattr(rep, "nodeid", ""))
            if not m:
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            number, name = int(m.group(1)), m.group(2)
            verdict = "PASS" if outcome == "passed" else "FAIL"
            # a failure in any phase trumps an earlier pass record
            if results.get((number, name)) != "FAIL":
                results[(number, name)] = verdict
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for (number, name) in sorted(results):
        verdict = results[(number, name)]
        terminalreporter.write_line(
            f"criterion {number:2d} [{name}]: {verdict}")
