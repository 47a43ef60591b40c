"""End-to-end pipeline: index -> tables -> correlations -> rankings ->
proxy heatmaps -> Last-Modified and URI-length artifacts.

Work is scheduled per shard; each shard is parsed once and tabulated for
every requested feature.  Merges are associative and commutative and all
merged collections are canonically re-sorted before any floating-point
aggregation, so artifacts are byte-identical across runs and across
parallelism degrees.  Every artifact starts with a comment header naming
the archive, the command, and the configuration digest.
"""

import gzip
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import features, lastmod, stats, urimetrics
from ._kernels import civil_from_days, days_from_civil
from .cdx import NoSegmentPath, parse_index_line, segment_of
from .errors import UsageError

TABULATED_KINDS = (features.MIME_PAIR, features.LANGUAGE_FIRST,
                   features.LENGTH_PERCENTILE)


@dataclass(frozen=True)
class RunConfig:
    """One pipeline run; exactly one of index_dir / base_url is set."""

    archive_id: str
    output_dir: str
    index_dir: str | None = None
    base_url: str | None = None
    cache_dir: str | None = None
    extraction_file: str | None = None
    feature_kinds: tuple = TABULATED_KINDS
    top_k: int = 100
    max_n: int = 10
    proxy_feature: str = features.LANGUAGE_FIRST
    proxy_n: int = 2
    anomaly_ratio: float = 10.0
    anomaly_share: float = 0.9
    parallelism: int = 0  # 0 = processor count

    def __post_init__(self):
        if (self.index_dir is None) == (self.base_url is None):
            raise UsageError("exactly one of index_dir / base_url must be set")
        for kind in self.feature_kinds:
            if kind not in features.KINDS:
                raise UsageError(f"unknown feature kind: {kind!r}")

    def digest(self):
        """Digest of the analytical parameters only.

        Paths, cache location and parallelism degree are execution
        details: they must not change what is computed, so they stay out
        of the digest and artifacts remain byte-identical across runs,
        machines, and worker counts.
        """
        analytical = {
            "archive_id": self.archive_id,
            "feature_kinds": list(self.feature_kinds),
            "top_k": self.top_k,
            "max_n": self.max_n,
            "proxy_feature": self.proxy_feature,
            "proxy_n": self.proxy_n,
            "anomaly_ratio": self.anomaly_ratio,
            "anomaly_share": self.anomaly_share,
        }
        blob = json.dumps(analytical, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def effective_parallelism(self):
        return self.parallelism if self.parallelism > 0 else (os.cpu_count() or 1)


def artifact_header(archive_id, command, config_digest):
    return f"# archive={archive_id} command={command} config={config_digest}\n"


@dataclass
class StageStatus:
    statuses: dict = field(default_factory=dict)

    def ok(self, stage):
        self.statuses[stage] = "ok"

    def fail(self, stage, exc):
        self.statuses[stage] = f"failed: {type(exc).__name__}: {exc}"

    def skip(self, stage, reason):
        self.statuses[stage] = f"skipped: {reason}"

    @property
    def all_ok(self):
        return all(v == "ok" for v in self.statuses.values())


# ---------------------------------------------------------------------------
# per-shard work

_WORKER_EXTRACTION = {}


def _init_worker(extraction_path):
    _WORKER_EXTRACTION["map"] = _load_extraction_map(extraction_path)


def _load_extraction_map(path):
    if path is None:
        return {}
    ext = {}
    for urlkey, ts14, header, url in lastmod.read_extraction_file(path):
        ext[(urlkey, ts14)] = header
    return ext


def iter_shard_lines(path):
    """All index lines of a multi-member gzip shard, in file order."""
    with gzip.open(path, "rt", encoding="utf-8") as f:
        for raw in f:
            line = raw.rstrip("\n")
            if line:
                yield line


def _shard_task(shard_path):
    ext = _WORKER_EXTRACTION.get("map", {})
    warc_pairs = []
    segmap = {}
    lm_rows = []
    skipped = {"non_warc": 0, "no_segment": 0}
    for line in iter_shard_lines(shard_path):
        entry = parse_index_line(line)
        try:
            seg = segment_of(entry.filename)
        except NoSegmentPath:
            skipped["no_segment"] += 1
            continue
        if seg.subset != "warc":
            skipped["non_warc"] += 1
            continue
        warc_pairs.append((entry, seg))
        if ext:
            header = ext.get((entry.urlkey, entry.timestamp14))
            if header is not None:
                segmap[(entry.urlkey, entry.timestamp14)] = seg
                lm_rows.append((entry.urlkey, entry.timestamp14, header, entry.url))

    tabs = {
        kind: features.tabulate(warc_pairs, features.FeatureSpec(kind))
        for kind in TABULATED_KINDS
    }
    lm_stats = lastmod.ParseStats()
    records = list(lastmod.extract_records(
        lm_rows, stats=lm_stats, segment_resolver=lambda k, t: segmap.get((k, t))))
    return shard_path, tabs, records, lm_stats, skipped


# ---------------------------------------------------------------------------
# the run

def run_pipeline(config):
    """Execute every stage; returns (StageStatus, manifest dict)."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.digest()
    status = StageStatus()
    manifest = {
        "archive_id": config.archive_id,
        "config": asdict(config),
        "config_digest": digest,
        "version": _package_version(),
        "inputs": {},
        "artifacts": [],
        "stages": {},
    }

    summary = []

    def write(name, command, text, **meta):
        path = out / name
        path.write_text(
            artifact_header(config.archive_id, command, digest) + text,
            encoding="utf-8")
        manifest["artifacts"].append(name)
        entry = {"file": name, "archive_id": config.archive_id,
                 "command": command, "config_digest": digest}
        entry.update(meta)
        summary.append(entry)

    # --- load_index
    try:
        index_dir, master_path = _resolve_index(config)
        shard_paths = _shard_paths(master_path, index_dir)
        extraction_path = _resolve_extraction(config, index_dir)
        manifest["inputs"] = _input_digests(master_path, shard_paths, extraction_path)
        status.ok("load_index")
    except Exception as exc:  # noqa: BLE001 - reported per stage
        status.fail("load_index", exc)
        _finish(out, manifest, status)
        return status, manifest

    # --- tabulate
    try:
        merged, records, lm_stats, skipped = _tabulate_all(
            config, shard_paths, extraction_path)
        tables = {}
        for kind in config.feature_kinds:
            if kind == features.LENGTH_PERCENTILE:
                tables[kind] = features.merge_percentiles(merged[kind])
            elif kind == features.LMH_YEAR:
                continue  # built from records below
            else:
                tables[kind] = features.merge_top_k(merged[kind], config.top_k,
                                                    kind=kind)
        if features.LMH_YEAR in config.feature_kinds and records:
            lmh_raw = features.tabulate(records, features.FeatureSpec(features.LMH_YEAR))
            tables[features.LMH_YEAR] = features.merge_top_k(
                lmh_raw, config.top_k, kind=features.LMH_YEAR)
        for kind, table in sorted(tables.items()):
            missing = sum(1 for row in table.segments for v in row if v is None)
            write(f"features_{kind}.tsv", "tabulate",
                  features.serialize_table(table), kind=kind,
                  top_k=config.top_k, labels=table.n_labels,
                  missing_cells=missing)
        status.ok("tabulate")
    except Exception as exc:  # noqa: BLE001
        status.fail("tabulate", exc)
        tables = {}
        records = []
        lm_stats = lastmod.ParseStats()
        skipped = {}

    # --- correlate + rank + describe
    matrices = {}
    if tables:
        try:
            for kind, table in sorted(tables.items()):
                matrix = stats.correlation_matrix(table)
                matrices[kind] = matrix
                write(f"correlation_{kind}.tsv", "correlate",
                      stats.serialize_matrix(matrix), kind=kind,
                      top_k=config.top_k)
                write(f"n_used_{kind}.tsv", "correlate",
                      stats.serialize_n_used(matrix), kind=kind,
                      top_k=config.top_k)
                ranking = stats.rank_segments(matrix)
                write(f"ranking_{kind}.tsv", "rank",
                      stats.serialize_ranking(ranking), kind=kind,
                      top_k=config.top_k)
                seg_rhos = [matrix.seg_vs_whole(s)
                            for s in range(features.N_SEGMENTS)]
                usable = [r for r in seg_rhos if not _isnan(r)]
                write(f"describe_{kind}.tsv", "rank",
                      stats.serialize_describe(config.archive_id,
                                               stats.describe(usable)),
                      kind=kind)
            status.ok("correlate")
        except Exception as exc:  # noqa: BLE001
            status.fail("correlate", exc)
    else:
        status.skip("correlate", "tabulate failed")

    # --- proxy heatmaps + proxy choice
    if matrices:
        try:
            maps = []
            for basis_kind in sorted(matrices):
                for target_kind in sorted(matrices):
                    if basis_kind != target_kind:
                        maps.append(stats.proxy_eval(matrices[basis_kind],
                                                     matrices[target_kind],
                                                     config.max_n))
            if maps:
                write("heatmaps.tsv", "proxy-eval",
                      stats.serialize_heatmaps(maps, config.max_n),
                      max_n=config.max_n)
            if config.proxy_feature in matrices:
                ranking = stats.rank_segments(matrices[config.proxy_feature])
                manifest["proxy"] = {
                    "feature": config.proxy_feature,
                    "n": config.proxy_n,
                    "segments": ranking.order()[:config.proxy_n],
                }
            status.ok("proxy")
        except Exception as exc:  # noqa: BLE001
            status.fail("proxy", exc)
    else:
        status.skip("proxy", "no correlation matrices")

    # --- lastmod artifacts
    try:
        _lastmod_stage(config, records, lm_stats, skipped, write)
        status.ok("lastmod")
    except Exception as exc:  # noqa: BLE001
        status.fail("lastmod", exc)

    # --- urimetrics
    try:
        rows = []
        for rec in records:
            year = civil_from_days(rec.lm_posix // 86400)[0]
            rows.append((year, urimetrics.host_of(rec.url_ref),
                         urimetrics.measure(rec.url_ref)))
        write("uri_years.tsv", "urimetrics",
              urimetrics.serialize_year_table(urimetrics.aggregate_by_year(rows)))
        write("uri_years_filtered.tsv", "urimetrics",
              urimetrics.serialize_year_table(
                  urimetrics.aggregate_by_year(rows, drop_outliers=True)))
        status.ok("urimetrics")
    except Exception as exc:  # noqa: BLE001
        status.fail("urimetrics", exc)

    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest["artifacts"].append("summary.json")
    _finish(out, manifest, status)
    return status, manifest


def _isnan(v):
    return isinstance(v, float) and v != v


def _lastmod_stage(config, records, lm_stats, skipped, write):
    crawl_year, crawl_month = _crawl_year_month(config.archive_id)
    write("lm_years.tsv", "lastmod-tabulate",
          lastmod.serialize_periods(lastmod.tabulate_period(records, lastmod.YEAR)))
    months = [(p, c) for p, c in lastmod.tabulate_period(records, lastmod.MONTH)
              if p.startswith(f"{crawl_year:04d}-")]
    write("lm_months.tsv", "lastmod-tabulate", lastmod.serialize_periods(months))
    days = [(p, c) for p, c in lastmod.tabulate_period(records, lastmod.DAY)
            if p.startswith(f"{crawl_year:04d}-{crawl_month:02d}-")]
    write("lm_days.tsv", "lastmod-tabulate", lastmod.serialize_periods(days))
    write("lm_offsets.tsv", "lastmod-offsets",
          lastmod.serialize_offsets(lastmod.offsets(records)))

    reports = lastmod.detect_anomalies(records, config.anomaly_ratio,
                                       config.anomaly_share)
    write("lm_anomalies.tsv", "lastmod-anomaly",
          lastmod.serialize_anomalies(reports))
    removed_total = 0
    if reports:
        corrected = records
        for rep in reports:
            corrected, n = lastmod.remove_value(corrected, rep.dominant_value)
            removed_total += n
        write("lm_years_corrected.tsv", "lastmod-tabulate",
              lastmod.serialize_periods(
                  lastmod.tabulate_period(corrected, lastmod.YEAR)))

    payload = dict(lm_stats.to_dict())
    payload["skipped"] = skipped
    payload["anomalies_detected"] = len(reports)
    payload["anomalous_records_removed"] = removed_total
    write("lm_stats.json", "lastmod-extract",
          json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _tabulate_all(config, shard_paths, extraction_path):
    degree = min(config.effective_parallelism(), len(shard_paths)) or 1
    if degree == 1:
        _init_worker(extraction_path)
        results = [_shard_task(p) for p in shard_paths]
        _WORKER_EXTRACTION.clear()
    else:
        with ProcessPoolExecutor(max_workers=degree, initializer=_init_worker,
                                 initargs=(extraction_path,)) as pool:
            results = list(pool.map(_shard_task, shard_paths))

    results.sort(key=lambda r: r[0])  # shard order, not completion order
    merged = {kind: features.merge_tabulations([r[1][kind] for r in results])
              for kind in TABULATED_KINDS}
    records = [rec for r in results for rec in r[2]]
    # canonical order independent of scheduling, so float folds downstream
    # see one fixed sequence
    records.sort(key=lambda rec: (rec.lm_posix, rec.crawl_posix, rec.url_ref))
    lm_stats = lastmod.ParseStats()
    skipped = {"non_warc": 0, "no_segment": 0}
    for _, _, _, part_stats, part_skipped in results:
        for key, value in part_stats.to_dict().items():
            setattr(lm_stats, key, getattr(lm_stats, key) + value)
        for key in skipped:
            skipped[key] += part_skipped[key]
    return merged, records, lm_stats, skipped


def _resolve_index(config):
    if config.index_dir is not None:
        index_dir = Path(config.index_dir)
        master_path = index_dir / "cluster.idx"
        if not master_path.exists():
            raise UsageError(f"no cluster.idx under {index_dir}")
        return index_dir, master_path
    from .fetch import ArchiveLocator, RangeClient
    if config.cache_dir is None:
        raise UsageError("remote mode needs a cache_dir")
    locator = ArchiveLocator(config.base_url, config.archive_id)
    client = RangeClient()
    master_path = client.fetch_master(locator, config.cache_dir)
    index_dir = master_path.parent
    for shard_name in _shard_names(master_path):
        client.fetch_object(locator, shard_name, index_dir)
    return index_dir, master_path


def _shard_names(master_path):
    names = []
    seen = set()
    with open(master_path, encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if len(parts) == 5 and parts[2] not in seen:
                seen.add(parts[2])
                names.append(parts[2])
    return names


def _shard_paths(master_path, index_dir):
    paths = [str(Path(index_dir) / name) for name in _shard_names(master_path)]
    if not paths:
        raise UsageError(f"master index {master_path} lists no shards")
    missing = [p for p in paths if not Path(p).exists()]
    if missing:
        raise UsageError(f"missing shard files: {missing}")
    return paths


def _resolve_extraction(config, index_dir):
    if config.extraction_file is not None:
        return config.extraction_file
    default = Path(index_dir) / "extraction.tsv"
    return str(default) if default.exists() else None


def _input_digests(master_path, shard_paths, extraction_path):
    digests = {}
    paths = [str(master_path)] + list(shard_paths)
    if extraction_path:
        paths.append(str(extraction_path))
    for p in paths:
        h = hashlib.sha256()
        with open(p, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                h.update(chunk)
        digests[Path(p).name] = h.hexdigest()
    return digests


def _crawl_year_month(archive_id):
    year = int(archive_id[8:12])
    week = int(archive_id[13:15])
    y, m, _ = civil_from_days(days_from_civil(year, 1, 1) + (week - 1) * 7)
    return y, m


def _package_version():
    from . import __version__
    return __version__


def _finish(out, manifest, status):
    manifest["stages"] = dict(status.statuses)
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
