"""Deterministic synthetic archives with ground truth.

Generated archives use the same file formats the parsers consume (sorted
ZipNum shards of concatenated gzip members, a cluster.idx master, and a
Last-Modified extraction file) plus a manifest recording what was
planted: per-segment divergence strengths, injected anomalies, and which
segments are clean.  Blocks default to 30 lines rather than production's
3000 so fixtures stay small while exercising identical code paths.

Segment divergence mixes each base weight vector with its own reversal:
strength 0 reproduces the archive-wide distribution, strength 1 inverts
the label ranks outright.  The same knob skews response lengths and the
historical Last-Modified mix so that every studied property degrades
together on perturbed segments.
"""

import base64
import gzip
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import cdx, lastmod
from ._kernels import days_from_civil
from .cdx import IndexEntry, SegmentRef
from .errors import UsageError
from .lastmod import LastModRecord, format_http_date, format_timestamp14

DEFAULT_MIME_PAIRS = (
    ("text/html", "text/html"),
    ("text/html", "application/xhtml+xml"),
    (None, "text/html"),
    ("application/atom+xml", "application/atom+xml"),
    ("application/pdf", "application/pdf"),
    ("image/jpeg", "image/jpeg"),
    (None, "application/xhtml+xml"),
    ("application/rss+xml", "application/rss+xml"),
    ("text/xml", "application/rss+xml"),
    ("text/plain", "text/plain"),
    ("application/json", "application/json"),
    ("text/html", "text/plain"),
    ("application/octet-stream", "application/x-tika-msoffice"),
    ("application/octet-stream", "text/x-log"),
    ("text/plain", "application/mbox"),
    ("image/png", "image/png"),
    ("application/xml", "text/xml"),
    ("text/css", "text/css"),
    ("application/javascript", "text/javascript"),
    ("text/calendar", "text/calendar"),
    ("application/zip", "application/zip"),
    ("audio/mpeg", "audio/mpeg"),
    ("video/mp4", "video/mp4"),
    ("image/gif", "image/gif"),
    ("application/msword", "application/msword"),
    ("text/vtt", "text/vtt"),
    ("application/xhtml+xml", "application/xhtml+xml"),
    ("text/html", "text/xml"),
    ("image/svg+xml", "image/svg+xml"),
    ("application/gzip", "application/gzip"),
)

DEFAULT_LANGUAGES = (
    "eng", "rus", "deu", "spa", "fra", "jpn", "zho", "ita", "nld", "pol",
    "por", "tur", "ces", "kor", "ara", "swe", "vie", "ron", "ell", "hun",
    "dan", "fin", "nor", "ukr", "tha",
)


class InvalidSpec(UsageError):
    """Synthetic-archive specification is internally inconsistent."""


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_segments: int = 100
    entries_per_segment: int = 100
    mime_pairs: tuple = DEFAULT_MIME_PAIRS
    languages: tuple = DEFAULT_LANGUAGES
    perturbed_segments: tuple = ()      # (segment_id, strength 0..1) pairs
    duplicate_share: float = 0.0        # chance an entry repeats the previous urlkey
    diagnostics_share: float = 0.0      # chance of an extra non-200 sibling record
    lm_present_share: float = 0.17
    lm_zero_offset_share: float = 0.5
    lm_history_start_year: int = 2000
    anomalies: tuple = ()               # (lm_posix, count) injections
    block_size: int = 30
    n_shards: int = 3
    archive_id: str = "CC-MAIN-2019-35"

    def __post_init__(self):
        if not 1 <= self.n_segments <= 100:
            raise InvalidSpec(f"n_segments out of range: {self.n_segments}")
        if self.entries_per_segment < 1:
            raise InvalidSpec("entries_per_segment must be >= 1")
        if self.block_size < 1:
            raise InvalidSpec("block_size must be >= 1")
        if not 1 <= self.n_shards <= 300:
            raise InvalidSpec(f"n_shards out of range: {self.n_shards}")
        for seg, strength in self.perturbed_segments:
            if not 0 <= seg < self.n_segments:
                raise InvalidSpec(f"perturbed segment out of range: {seg}")
            if not 0.0 <= strength <= 1.0:
                raise InvalidSpec(f"perturbation strength out of range: {strength}")
        for share in (self.duplicate_share, self.diagnostics_share,
                      self.lm_present_share, self.lm_zero_offset_share):
            if not 0.0 <= share <= 1.0:
                raise InvalidSpec(f"share out of range: {share}")
        for value, count in self.anomalies:
            if count < 1:
                raise InvalidSpec(f"anomaly count must be >= 1: {count}")

    def strength_of(self, segment_id):
        for seg, strength in self.perturbed_segments:
            if seg == segment_id:
                return strength
        return 0.0


def _zipf_weights(n):
    return [1.0 / k for k in range(1, n + 1)]


def _mixed_weights(weights, strength):
    if strength == 0.0:
        return list(weights)
    flipped = weights[::-1]
    return [(1 - strength) * w + strength * f for w, f in zip(weights, flipped)]


def _crawl_base_posix(archive_id):
    year = int(archive_id[8:12])
    week = int(archive_id[13:15])
    return (days_from_civil(year, 1, 1) + (week - 1) * 7) * 86400


_SEGREFS = {}


def _segref(segment_id, subset):
    key = (segment_id, subset)
    ref = _SEGREFS.get(key)
    if ref is None:
        ref = _SEGREFS[key] = SegmentRef(segment_id, subset)
    return ref


def generate_entries(spec):
    """Yield (IndexEntry, SegmentRef, lm_header_or_None) deterministically.

    Entries come out segment by segment in generation order, not key
    order; write_archive() sorts when building shards.
    """
    mime_weights = _zipf_weights(len(spec.mime_pairs))
    lang_weights = _zipf_weights(len(spec.languages))
    crawl_base = _crawl_base_posix(spec.archive_id)
    hist_lo_base = _posix_of_year(spec.lm_history_start_year)

    for seg_id in range(spec.n_segments):
        rng = random.Random(spec.seed * 1000003 + seg_id)
        strength = spec.strength_of(seg_id)
        seg_mimes = rng.choices(
            range(len(spec.mime_pairs)),
            weights=_mixed_weights(mime_weights, strength),
            k=spec.entries_per_segment)
        seg_langs = rng.choices(
            range(len(spec.languages)),
            weights=_mixed_weights(lang_weights, strength),
            k=spec.entries_per_segment)
        warc_ref = _segref(seg_id, "warc")
        diag_ref = _segref(seg_id, "crawldiagnostics")
        hist_lo = hist_lo_base + int(strength * 10) * 31556952  # skew years

        prev = None
        for j in range(spec.entries_per_segment):
            uid = seg_id * spec.entries_per_segment + j
            if prev is not None and rng.random() < spec.duplicate_share:
                url, urlkey = prev
            else:
                url = f"https://s{uid:08d}.example/p/{j % 7}"
                urlkey = f"example,s{uid:08d})/p/{j % 7}"
                prev = (url, urlkey)
            crawl = crawl_base + rng.randrange(0, 14 * 86400)
            ts14 = format_timestamp14(crawl)
            length = max(1, int(rng.lognormvariate(9.0 + strength, 1.2)))
            mime, detected = spec.mime_pairs[seg_mimes[j]]
            lang = spec.languages[seg_langs[j]]

            lm_header = None
            if rng.random() < spec.lm_present_share:
                if rng.random() < spec.lm_zero_offset_share:
                    lm = crawl
                else:
                    lm = rng.randrange(hist_lo, crawl)
                lm_header = format_http_date(lm)

            entry = _make_entry(rng, urlkey, ts14, url, 200, mime, detected,
                                lang, length, spec.archive_id, seg_id, "warc")
            yield entry, warc_ref, lm_header

            if rng.random() < spec.diagnostics_share:
                diag = _make_entry(rng, urlkey, ts14, url, 301, "text/html",
                                   "text/html", None, 612, spec.archive_id,
                                   seg_id, "crawldiagnostics", redirect=url)
                yield diag, diag_ref, None

    for k, (value, count) in enumerate(spec.anomalies):
        rng = random.Random(spec.seed * 7000003 + k)
        header = format_http_date(value)
        for i in range(count):
            seg_id = rng.randrange(spec.n_segments)
            uid = spec.n_segments * spec.entries_per_segment + k * 10**7 + i
            url = f"https://anom{uid:09d}.example/"
            urlkey = f"example,anom{uid:09d})"
            crawl = crawl_base + rng.randrange(0, 14 * 86400)
            entry = _make_entry(rng, urlkey, format_timestamp14(crawl), url,
                                200, "text/html", "text/html", "rus", 4096,
                                spec.archive_id, seg_id, "warc")
            yield entry, _segref(seg_id, "warc"), header


def _posix_of_year(year):
    return days_from_civil(year, 1, 1) * 86400


def _make_entry(rng, urlkey, ts14, url, status, mime, detected, lang, length,
                archive_id, seg_id, subset, redirect=None):
    digest = base64.b32encode(rng.getrandbits(160).to_bytes(20, "big")).decode()
    filename = (f"crawl-data/{archive_id}/segments/1623487610196.{seg_id:02d}/"
                f"{subset}/CC-MAIN-{ts14}-{seg_id:05d}.warc.gz")
    fields = {"url": url}
    if mime is not None:
        fields["mime"] = mime
    fields["mime-detected"] = detected
    fields["status"] = str(status)
    fields["digest"] = digest
    fields["length"] = str(length)
    fields["offset"] = str(rng.randrange(0, 1 << 30))
    fields["filename"] = filename
    if lang is not None and detected in ("text/html", "application/xhtml+xml"):
        fields["charset"] = "UTF-8"
        fields["languages"] = lang
    if redirect is not None:
        fields["redirect"] = redirect
    return IndexEntry(
        urlkey=urlkey,
        timestamp14=ts14,
        url=url,
        status=status,
        digest=digest,
        length=length,
        offset=int(fields["offset"]),
        filename=filename,
        mime=mime if mime is not None else "unk",
        mime_detected=detected,
        charset=fields.get("charset"),
        languages=(lang,) if "languages" in fields else None,
        redirect=redirect,
        raw_fields=fields,
    )


@dataclass(frozen=True)
class SynthArchive:
    """Paths and ground truth of one generated archive."""

    directory: Path
    master_path: Path
    extraction_path: Path
    manifest_path: Path
    manifest: dict = field(compare=False)


def write_archive(spec, directory):
    """Materialize shards, master index, extraction file and manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    triples = list(generate_entries(spec))
    triples.sort(key=lambda t: (t[0].urlkey, t[0].timestamp14, t[0].status))
    lines = [cdx.serialize_index_line(entry) for entry, _, _ in triples]

    per_shard = -(-len(lines) // spec.n_shards)  # ceil
    master_lines = []
    for shard_no in range(spec.n_shards):
        shard_name = f"cdx-{shard_no:05d}.gz"
        chunk = lines[shard_no * per_shard:(shard_no + 1) * per_shard]
        offset = 0
        blob = bytearray()
        for i in range(0, len(chunk), spec.block_size):
            block = "\n".join(chunk[i:i + spec.block_size]) + "\n"
            member = gzip.compress(block.encode("utf-8"), mtime=0)
            first = chunk[i].split(" ", 2)
            master_lines.append(
                f"{first[0]} {first[1]} {shard_name} {offset} {len(member)}")
            blob.extend(member)
            offset += len(member)
        (directory / shard_name).write_bytes(bytes(blob))

    master_path = directory / "cluster.idx"
    master_path.write_text("\n".join(master_lines) + "\n", encoding="utf-8")

    extraction_path = directory / "extraction.tsv"
    with open(extraction_path, "w", encoding="utf-8") as f:
        for entry, _, header in triples:
            if header is not None:
                f.write(lastmod.serialize_extraction_line(
                    entry.urlkey, entry.timestamp14, header, entry.url) + "\n")

    perturbed = {str(seg): strength for seg, strength in spec.perturbed_segments}
    manifest = {
        "archive_id": spec.archive_id,
        "seed": spec.seed,
        "n_segments": spec.n_segments,
        "entries_per_segment": spec.entries_per_segment,
        "n_shards": spec.n_shards,
        "block_size": spec.block_size,
        "n_index_lines": len(lines),
        "mime_pair_weights": [
            [mime if mime is not None else "unk", detected, w]
            for (mime, detected), w in zip(spec.mime_pairs,
                                           _zipf_weights(len(spec.mime_pairs)))
        ],
        "language_weights": [
            [lang, w] for lang, w in zip(spec.languages,
                                         _zipf_weights(len(spec.languages)))
        ],
        "perturbed_segments": perturbed,
        "clean_segments": [s for s in range(spec.n_segments)
                           if str(s) not in perturbed],
        "anomalies": [[value, count] for value, count in spec.anomalies],
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    return SynthArchive(
        directory=directory,
        master_path=master_path,
        extraction_path=extraction_path,
        manifest_path=manifest_path,
        manifest=manifest,
    )


def generate_lm_records(seed, years=(2003, 2008), per_year=2000,
                        injected_value=None, injected_count=0):
    """Smooth multi-year Last-Modified records plus an optional injected
    single-value spike; the anomaly-detection oracle workload."""
    rng = random.Random(seed)
    lo_year, hi_year = years
    crawl = _posix_of_year(hi_year + 1)
    records = []
    for year in range(lo_year, hi_year + 1):
        start = _posix_of_year(year)
        end = _posix_of_year(year + 1)
        for _ in range(per_year):
            lm = rng.randrange(start, end)
            records.append(LastModRecord(lm, crawl, None, "https://x.example/", ""))
    if injected_value is not None:
        for _ in range(injected_count):
            records.append(LastModRecord(
                injected_value, crawl, None, "https://x.example/", ""))
    return records
