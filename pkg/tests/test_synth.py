"""Synthetic-archive generation: determinism, ground truth, consistency."""

import filecmp
import math
from collections import Counter

import pytest

from ccseg.features import FeatureSpec, MIME_PAIR, mime_pair_label, tabulate
from ccseg.surt import canonicalize
from ccseg.synth import (DEFAULT_MIME_PAIRS, InvalidSpec, SynthSpec,
                         _zipf_weights, generate_entries, write_archive)


def _spec(**kw):
    base = dict(seed=1, n_segments=4, entries_per_segment=50, block_size=10,
                n_shards=2)
    base.update(kw)
    return SynthSpec(**base)


def test_fixed_seed_byte_identical(tmp_path):
    a = write_archive(_spec(), tmp_path / "a")
    b = write_archive(_spec(), tmp_path / "b")
    for name in ("cluster.idx", "cdx-00000.gz", "cdx-00001.gz",
                 "extraction.tsv", "manifest.json"):
        assert filecmp.cmp(a.directory / name, b.directory / name, shallow=False)


def test_distinct_seeds_differ(tmp_path):
    a = write_archive(_spec(seed=1), tmp_path / "a")
    b = write_archive(_spec(seed=2), tmp_path / "b")
    assert not filecmp.cmp(a.directory / "cdx-00000.gz",
                           b.directory / "cdx-00000.gz", shallow=False)


def test_manifest_lists_planted_truths(tmp_path):
    spec = _spec(n_segments=10,
                 perturbed_segments=((2, 0.9), (5, 0.7), (7, 0.5), (8, 0.9), (9, 1.0)),
                 anomalies=((1114316977, 40),))
    archive = write_archive(spec, tmp_path / "a")
    m = archive.manifest
    assert set(m["perturbed_segments"]) == {"2", "5", "7", "8", "9"}
    assert m["clean_segments"] == [0, 1, 3, 4, 6]
    assert m["anomalies"] == [[1114316977, 40]]
    assert m["n_index_lines"] > 0


def test_urlkeys_match_canonicalized_urls():
    for i, (entry, _, _) in enumerate(generate_entries(_spec())):
        assert entry.urlkey == canonicalize(entry.url)
        if i > 200:
            break


def test_entry_segments_consistent_with_filenames():
    for entry, seg, _ in generate_entries(_spec(diagnostics_share=0.1)):
        assert entry.segment() == seg


def test_label_frequencies_converge_within_3_sigma():
    n = 10**5
    spec = SynthSpec(seed=5, n_segments=1, entries_per_segment=n)
    counts = Counter()
    for entry, seg, _ in generate_entries(spec):
        counts[mime_pair_label(entry.mime, entry.mime_detected)] += 1
    weights = _zipf_weights(len(DEFAULT_MIME_PAIRS))
    total_w = sum(weights)
    for (mime, detected), w in zip(DEFAULT_MIME_PAIRS, weights):
        label = mime_pair_label(mime if mime is not None else "unk", detected)
        p = w / total_w
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts[label] - n * p) <= 3 * sigma, label


def test_perturbed_segment_scrambles_ranks():
    spec = SynthSpec(seed=6, n_segments=2, entries_per_segment=20000,
                     perturbed_segments=((1, 1.0),))
    tab = tabulate(((e, s) for e, s, _ in generate_entries(spec)),
                   FeatureSpec(MIME_PAIR))
    clean_top = tab[0].most_common(1)[0][0]
    perturbed_top = tab[1].most_common(1)[0][0]
    assert clean_top != perturbed_top


def test_lm_headers_roughly_match_presence_share():
    spec = SynthSpec(seed=7, n_segments=2, entries_per_segment=20000,
                     lm_present_share=0.17)
    total = with_header = 0
    for _, _, header in generate_entries(spec):
        total += 1
        with_header += header is not None
    assert abs(with_header / total - 0.17) < 0.01


def test_anomaly_injection_present_in_extraction(tmp_path):
    spec = _spec(anomalies=((1114316977, 25),), lm_present_share=0.0)
    archive = write_archive(spec, tmp_path / "a")
    text = archive.extraction_path.read_text()
    assert text.count("Sun, 24 Apr 2005 04:29:37 GMT") == 25


@pytest.mark.parametrize("kw", [
    {"n_segments": 0},
    {"n_segments": 101},
    {"entries_per_segment": 0},
    {"block_size": 0},
    {"n_shards": 0},
    {"n_shards": 301},
    {"perturbed_segments": ((4, 0.5),), "n_segments": 4},
    {"perturbed_segments": ((0, 1.5),)},
    {"duplicate_share": -0.1},
    {"anomalies": ((1114316977, 0),)},
])
def test_invalid_specs_rejected(kw):
    with pytest.raises(InvalidSpec):
        _spec(**kw)
