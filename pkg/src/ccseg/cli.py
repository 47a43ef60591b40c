"""Command-line surface.

Exit codes: 0 ok, 1 not-found, 2 usage/parse error, 3 network failure,
4 data-integrity failure.  CCSEG_BASE_URL and CCSEG_CACHE_DIR provide
defaults for the remote-index options; a JSON config file (--config) may
set base_url and cache_dir with lower precedence than flags.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__, features, lastmod, pipeline, stats, surt, synth
from . import urimetrics as urimetrics_mod
from .errors import (CCSegError, DataError, NetworkError, NotFoundError,
                     UsageError)
from .fetch import DEFAULT_BASE_URL, ArchiveLocator, HttpShardAccess, RangeClient, clear_cache
from .pipeline import artifact_header
from .zipnum import LocalShardAccess, LookupStats, load_master, lookup

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_USAGE = 2
EXIT_NETWORK = 3
EXIT_DATA = 4


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (DataError, CCSegError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ccseg",
        description="Index-only analytics for web-archive ZipNum indexes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("surt", help="canonicalize URIs into urlkeys")
    p.add_argument("uris", nargs="*", help="URIs; stdin batch when omitted")
    p.set_defaults(func=cmd_surt)

    p = sub.add_parser("lookup", help="look up a URI in a ZipNum index")
    p.add_argument("uri")
    _index_source_args(p)
    p.add_argument("--count-ops", action="store_true",
                   help="print search/decompression counters")
    p.add_argument("--thorough", action="store_true",
                   help="recover duplicate runs straddling block boundaries "
                        "(may read an extra block)")
    p.set_defaults(func=cmd_lookup)

    p = sub.add_parser("tabulate", help="build a merged feature table")
    p.add_argument("--index-dir", required=True)
    p.add_argument("--feature", required=True, choices=features.KINDS)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--extraction", help="Last-Modified extraction file (lmh_year)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_tabulate)

    p = sub.add_parser("correlate", help="correlation matrix from a table")
    p.add_argument("--table", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n-used-out", help="companion per-cell sample sizes")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("rank", help="segment ranking from a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--n-used", help="companion sample-size table")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("proxy-eval", help="basis->target proxy percentiles")
    p.add_argument("--basis", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--max-n", type=int, default=10)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_proxy_eval)

    lm = sub.add_parser("lastmod", help="Last-Modified analyses")
    lmsub = lm.add_subparsers(dest="lastmod_command", required=True)

    p = lmsub.add_parser("extract", help="parse + filter an extraction file")
    p.add_argument("--extraction", required=True)
    p.add_argument("--index-dir", help="resolve segments via index lookups")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stats-out", help="write acceptance/rejection stats JSON")
    p.set_defaults(func=cmd_lastmod_extract)

    p = lmsub.add_parser("tabulate", help="period tabulation of records")
    p.add_argument("--records", required=True)
    p.add_argument("--granularity", choices=lastmod.GRANULARITIES,
                   default=lastmod.YEAR)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lastmod_tabulate)

    p = lmsub.add_parser("offsets", help="crawl-offset histogram")
    p.add_argument("--records", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lastmod_offsets)

    p = lmsub.add_parser("anomaly", help="single-value bucket anomalies")
    p.add_argument("--records", required=True)
    p.add_argument("--ratio", type=float, default=10.0)
    p.add_argument("--share", type=float, default=0.9)
    p.add_argument("-o", "--output")
    p.add_argument("--remove-out",
                   help="write records with anomalous values removed")
    p.set_defaults(func=cmd_lastmod_anomaly)

    p = sub.add_parser("urimetrics", help="per-year URI component lengths")
    p.add_argument("--records", required=True)
    p.add_argument("--drop-outliers", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_urimetrics)

    p = sub.add_parser("synth", help="generate a synthetic archive")
    p.add_argument("--spec", help="JSON spec file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--segments", type=int, default=100)
    p.add_argument("--entries-per-segment", type=int, default=100)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cache", help="manage the download cache")
    cache_sub = p.add_subparsers(dest="cache_command", required=True)
    pc = cache_sub.add_parser("clear")
    pc.add_argument("--cache-dir")
    pc.add_argument("--config")
    pc.set_defaults(func=cmd_cache_clear)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    _index_source_args(p)
    p.add_argument("-o", "--output-dir", required=True)
    p.add_argument("--features", default=",".join(pipeline.TABULATED_KINDS),
                   help="comma-separated feature kinds")
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--max-n", type=int, default=10)
    p.add_argument("--proxy-feature", default=features.LANGUAGE_FIRST,
                   choices=features.KINDS)
    p.add_argument("--proxy-n", type=int, default=2)
    p.add_argument("--extraction")
    p.add_argument("--anomaly-ratio", type=float, default=10.0)
    p.add_argument("--anomaly-share", type=float, default=0.9)
    p.add_argument("--parallelism", type=int, default=0,
                   help="shard-level workers; 0 = processor count")
    p.set_defaults(func=cmd_pipeline)

    return parser


def _index_source_args(p):
    p.add_argument("--index-dir", help="local directory with cluster.idx + shards")
    p.add_argument("--archive-id", help="remote archive id (CC-MAIN-YYYY-WW)")
    p.add_argument("--base-url")
    p.add_argument("--cache-dir")
    p.add_argument("--config", help="JSON config file (base_url, cache_dir)")


def _load_config_file(path):
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None


def _resolve_remote_options(args):
    cfg = _load_config_file(getattr(args, "config", None))
    base_url = (getattr(args, "base_url", None)
                or os.environ.get("CCSEG_BASE_URL")
                or cfg.get("base_url")
                or DEFAULT_BASE_URL)
    cache_dir = (getattr(args, "cache_dir", None)
                 or os.environ.get("CCSEG_CACHE_DIR")
                 or cfg.get("cache_dir")
                 or str(Path.home() / ".cache" / "ccseg"))
    return base_url, cache_dir


def cmd_surt(args):
    if args.uris:
        for uri in args.uris:
            print(surt.canonicalize(uri))
        return EXIT_OK
    for line in sys.stdin:
        uri = line.strip()
        if uri:
            print(surt.canonicalize(uri))
    return EXIT_OK


def _open_index(args):
    if args.index_dir:
        master = load_master(Path(args.index_dir) / "cluster.idx")
        return master, LocalShardAccess(args.index_dir)
    if not args.archive_id:
        raise UsageError("need --index-dir or --archive-id")
    base_url, cache_dir = _resolve_remote_options(args)
    locator = ArchiveLocator(base_url, args.archive_id)
    client = RangeClient()
    master = load_master(client.fetch_master(locator, cache_dir))
    return master, HttpShardAccess(client, locator)


def cmd_lookup(args):
    key = surt.canonicalize(args.uri)
    master, access = _open_index(args)
    ops = LookupStats()
    entries = lookup(key, master, access, stats=ops, thorough=args.thorough)
    for entry in entries:
        from .cdx import serialize_index_line
        print(serialize_index_line(entry))
    if args.count_ops:
        print(f"# comparisons={ops.comparisons} blocks_read={ops.blocks_read} "
              f"continuation_checks={ops.continuation_checks}")
    if not entries:
        print(f"error: no entries for {key!r}", file=sys.stderr)
        return EXIT_NOT_FOUND
    return EXIT_OK


def _iter_index_pairs(index_dir):
    from .cdx import NoSegmentPath, parse_index_line, segment_of
    for shard in sorted(Path(index_dir).glob("cdx-*.gz")):
        for line in pipeline.iter_shard_lines(str(shard)):
            entry = parse_index_line(line)
            try:
                seg = entry.segment()
            except NoSegmentPath:
                continue
            yield entry, seg


def _args_digest(**kw):
    blob = json.dumps(kw, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _artifact_archive_id(path):
    """Archive id recorded in an artifact's provenance header, or '-'."""
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if first.startswith("# archive="):
        return first.split()[1].split("=", 1)[1]
    return "-"


def _write_artifact(path, archive_id, command, digest, text):
    Path(path).write_text(
        artifact_header(archive_id, command, digest) + text, encoding="utf-8")


def cmd_tabulate(args):
    spec = features.FeatureSpec(args.feature, args.top_k)
    if args.feature == features.LMH_YEAR:
        extraction = args.extraction or str(Path(args.index_dir) / "extraction.tsv")
        records = _records_from_index(args.index_dir, extraction)
        table = features.merge_top_k(
            features.tabulate(records, spec), args.top_k, kind=args.feature)
    else:
        pairs = ((e, s) for e, s in _iter_index_pairs(args.index_dir)
                 if s.subset == "warc")
        table = features.build_table(pairs, spec)
    _write_artifact(args.output, _archive_id_from_dir(args.index_dir),
                    "tabulate", _args_digest(feature=args.feature, top_k=args.top_k),
                    features.serialize_table(table))
    return EXIT_OK


def _records_from_index(index_dir, extraction_path):
    ext = pipeline._load_extraction_map(extraction_path)
    rows = []
    segmap = {}
    for entry, seg in _iter_index_pairs(index_dir):
        if seg.subset != "warc":
            continue
        header = ext.get((entry.urlkey, entry.timestamp14))
        if header is not None:
            segmap[(entry.urlkey, entry.timestamp14)] = seg
            rows.append((entry.urlkey, entry.timestamp14, header, entry.url))
    return list(lastmod.extract_records(
        rows, segment_resolver=lambda k, t: segmap.get((k, t))))


def cmd_correlate(args):
    table = features.parse_table(Path(args.table).read_text(encoding="utf-8"))
    matrix = stats.correlation_matrix(table)
    archive_id = _artifact_archive_id(args.table)
    digest = _args_digest(kind=table.kind)
    _write_artifact(args.output, archive_id, "correlate", digest,
                    stats.serialize_matrix(matrix))
    if args.n_used_out:
        _write_artifact(args.n_used_out, archive_id, "correlate", digest,
                        stats.serialize_n_used(matrix))
    return EXIT_OK


def _read_matrix(path, n_used_path=None):
    rho_text = Path(path).read_text(encoding="utf-8")
    n_text = Path(n_used_path).read_text(encoding="utf-8") if n_used_path else None
    return stats.parse_matrix(_strip_artifact_header(rho_text),
                              _strip_artifact_header(n_text) if n_text else None)


def _strip_artifact_header(text):
    if text.startswith("# archive="):
        return text.split("\n", 1)[1]
    return text


def cmd_rank(args):
    matrix = _read_matrix(args.matrix, args.n_used)
    ranking = stats.rank_segments(matrix)
    _write_artifact(args.output, _artifact_archive_id(args.matrix), "rank",
                    _args_digest(kind=matrix.kind),
                    stats.serialize_ranking(ranking))
    return EXIT_OK


def cmd_proxy_eval(args):
    basis = _read_matrix(args.basis)
    target = _read_matrix(args.target)
    heatmap = stats.proxy_eval(basis, target, args.max_n)
    _write_artifact(args.output, _artifact_archive_id(args.basis), "proxy-eval",
                    _args_digest(basis=basis.kind, target=target.kind,
                                 max_n=args.max_n),
                    stats.serialize_heatmaps([heatmap], args.max_n))
    return EXIT_OK


def cmd_lastmod_extract(args):
    stats_acc = lastmod.ParseStats()
    resolver = None
    if args.index_dir:
        master = load_master(Path(args.index_dir) / "cluster.idx")
        access = LocalShardAccess(args.index_dir)

        def resolver(urlkey, ts14):
            for entry in lookup(urlkey, master, access):
                if entry.timestamp14 == ts14:
                    try:
                        return entry.segment()
                    except CCSegError:
                        return None
            return None

    rows = lastmod.read_extraction_file(args.extraction)
    with open(args.output, "w", encoding="utf-8") as f:
        for rec in lastmod.extract_records(rows, stats=stats_acc,
                                           segment_resolver=resolver):
            f.write(lastmod.serialize_record(rec) + "\n")
    if args.stats_out:
        Path(args.stats_out).write_text(
            json.dumps(stats_acc.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    return EXIT_OK


def _emit(text, output, command, digest):
    """Artifact files carry a provenance header; stdout stays plain."""
    if output:
        _write_artifact(output, "-", command, digest, text)
    else:
        sys.stdout.write(text)


def cmd_lastmod_tabulate(args):
    records = list(lastmod.read_record_file(args.records))
    pairs = lastmod.tabulate_period(records, args.granularity)
    _emit(lastmod.serialize_periods(pairs), args.output, "lastmod-tabulate",
          _args_digest(granularity=args.granularity))
    return EXIT_OK


def cmd_lastmod_offsets(args):
    records = list(lastmod.read_record_file(args.records))
    _emit(lastmod.serialize_offsets(lastmod.offsets(records)), args.output,
          "lastmod-offsets", _args_digest())
    return EXIT_OK


def cmd_lastmod_anomaly(args):
    records = list(lastmod.read_record_file(args.records))
    reports = lastmod.detect_anomalies(records, args.ratio, args.share)
    _emit(lastmod.serialize_anomalies(reports), args.output, "lastmod-anomaly",
          _args_digest(ratio=args.ratio, share=args.share))
    if args.remove_out:
        kept = records
        for rep in reports:
            kept, _ = lastmod.remove_value(kept, rep.dominant_value)
        with open(args.remove_out, "w", encoding="utf-8") as f:
            for rec in kept:
                f.write(lastmod.serialize_record(rec) + "\n")
    return EXIT_OK


def cmd_urimetrics(args):
    from ._kernels import civil_from_days
    rows = []
    for rec in lastmod.read_record_file(args.records):
        year = civil_from_days(rec.lm_posix // 86400)[0]
        rows.append((year, urimetrics_mod.host_of(rec.url_ref),
                     urimetrics_mod.measure(rec.url_ref)))
    aggs = urimetrics_mod.aggregate_by_year(rows, drop_outliers=args.drop_outliers)
    _emit(urimetrics_mod.serialize_year_table(aggs), args.output, "urimetrics",
          _args_digest(drop_outliers=args.drop_outliers))
    return EXIT_OK


def cmd_synth(args):
    if args.spec:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        raw = _synth_spec_from_json(raw)
        spec = synth.SynthSpec(**raw)
    else:
        spec = synth.SynthSpec(seed=args.seed, n_segments=args.segments,
                               entries_per_segment=args.entries_per_segment)
    archive = synth.write_archive(spec, args.output)
    print(archive.manifest_path)
    return EXIT_OK


def _synth_spec_from_json(raw):
    out = dict(raw)
    if "mime_pairs" in out:
        out["mime_pairs"] = tuple(
            (m if m != "unk" else None, d) for m, d in out["mime_pairs"])
    if "languages" in out:
        out["languages"] = tuple(out["languages"])
    if "perturbed_segments" in out:
        out["perturbed_segments"] = tuple(
            (int(s), float(v)) for s, v in out["perturbed_segments"])
    if "anomalies" in out:
        out["anomalies"] = tuple((int(v), int(c)) for v, c in out["anomalies"])
    return out


def cmd_cache_clear(args):
    _, cache_dir = _resolve_remote_options(args)
    removed = clear_cache(cache_dir)
    print(f"removed {removed} cached files from {cache_dir}")
    return EXIT_OK


def cmd_pipeline(args):
    if bool(args.index_dir) == bool(args.archive_id):
        raise UsageError("need exactly one of --index-dir / --archive-id")
    base_url = cache_dir = None
    archive_id = args.archive_id
    if args.index_dir:
        archive_id = archive_id or _archive_id_from_dir(args.index_dir)
    else:
        base_url, cache_dir = _resolve_remote_options(args)
    config = pipeline.RunConfig(
        archive_id=archive_id,
        output_dir=args.output_dir,
        index_dir=args.index_dir,
        base_url=base_url,
        cache_dir=cache_dir,
        extraction_file=args.extraction,
        feature_kinds=tuple(k for k in args.features.split(",") if k),
        top_k=args.top_k,
        max_n=args.max_n,
        proxy_feature=args.proxy_feature,
        proxy_n=args.proxy_n,
        anomaly_ratio=args.anomaly_ratio,
        anomaly_share=args.anomaly_share,
        parallelism=args.parallelism,
    )
    status, _ = pipeline.run_pipeline(config)
    for stage, result in status.statuses.items():
        print(f"{stage}: {result}")
    return EXIT_OK if status.all_ok else EXIT_DATA


def _archive_id_from_dir(index_dir):
    manifest = Path(index_dir) / "manifest.json"
    if manifest.exists():
        try:
            return json.loads(manifest.read_text(encoding="utf-8"))["archive_id"]
        except (json.JSONDecodeError, KeyError):
            pass
    return "CC-MAIN-0000-01"


if __name__ == "__main__":
    sys.exit(main())
