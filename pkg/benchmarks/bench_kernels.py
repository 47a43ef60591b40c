#!/usr/bin/env python3
"""Benchmark the compiled parsing kernels against the pure-Python fallback.

The workloads mirror what dominates a full index pass: Last-Modified
header parsing, 14-digit crawl-timestamp conversion, and percent-encoding
scans.  Usage:

    python benchmarks/bench_kernels.py [--n 200000]
"""

import argparse
import random
import time

from ccseg._kernels import pure
from ccseg.lastmod import format_http_date, format_timestamp14

try:
    from ccseg._kernels import _native as native
except ImportError:
    native = None


def _date_corpus(rng, n):
    corpus = []
    for _ in range(n):
        posix = rng.randrange(631152000, 1800000000)
        r = rng.random()
        if r < 0.70:
            corpus.append(format_http_date(posix))
        elif r < 0.80:
            corpus.append(format_http_date(posix).replace(" GMT", ""))
        elif r < 0.88:
            text = format_http_date(posix)
            corpus.append(text.replace(" GMT", "") + " +0200")
        elif r < 0.94:
            # RFC-850 style
            imf = format_http_date(posix).split()
            corpus.append(f"{imf[0]} {imf[1]}-{imf[2]}-{imf[3][2:]} {imf[4]} GMT")
        else:
            corpus.append("junk value " + str(rng.randrange(10**6)))
    return corpus


def _ts_corpus(rng, n):
    return [format_timestamp14(rng.randrange(1200000000, 1800000000))
            for _ in range(n)]


def _pct_corpus(rng, n):
    alphabet = "abcdefgh%2F4=&/"
    return ["".join(rng.choice(alphabet) for _ in range(rng.randrange(5, 60)))
            for _ in range(n)]


def _time(fn, corpus, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for item in corpus:
            fn(item)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200000,
                        help="corpus size per workload")
    args = parser.parse_args()

    rng = random.Random(0)
    workloads = [
        ("http_date_to_posix", _date_corpus(rng, args.n)),
        ("timestamp14_to_posix", _ts_corpus(rng, args.n)),
        ("count_pct_encoded", _pct_corpus(rng, args.n)),
    ]

    print(f"{'kernel':<22}{'pure Mops/s':>14}{'native Mops/s':>16}{'speedup':>10}")
    for name, corpus in workloads:
        pure_fn = getattr(pure, name)
        t_pure = _time(pure_fn, corpus)
        rate_pure = len(corpus) / t_pure / 1e6
        if native is None:
            print(f"{name:<22}{rate_pure:>14.3f}{'unavailable':>16}{'-':>10}")
            continue
        native_fn = getattr(native, name)
        # sanity: both backends agree on the whole corpus
        for item in corpus:
            assert native_fn(item) == pure_fn(item), item
        t_native = _time(native_fn, corpus)
        rate_native = len(corpus) / t_native / 1e6
        print(f"{name:<22}{rate_pure:>14.3f}{rate_native:>16.3f}"
              f"{t_pure / t_native:>9.1f}x")


if __name__ == "__main__":
    main()
