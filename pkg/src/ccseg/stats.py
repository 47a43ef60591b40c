"""Rank-correlation statistics over merged feature tables.

Spearman correlations use average ranks for ties and pairwise omission
of missing cells; confidence intervals use the atanh (Fisher) transform
with the normal quantile computed by a rational approximation refined to
machine precision, so no statistics dependency is needed.  n_used is
tracked per matrix cell because omission is pairwise, not listwise.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .features import N_SEGMENTS

MATRIX_LABELS = ("whole",) + tuple(f"seg{s:02d}" for s in range(N_SEGMENTS))


class TooFewPairs(UsageError):
    """Fewer retained pairs than the statistic permits."""


class TooFew(UsageError):
    """Fewer values than the statistic permits."""


def _missing(v):
    return v is None or (isinstance(v, float) and math.isnan(v))


def _average_ranks(values):
    """1-based ranks with ties averaged (midranks)."""
    order = np.argsort(values, kind="stable")
    ranked = values[order]
    boundaries = np.empty(len(values), dtype=bool)
    boundaries[0] = True
    boundaries[1:] = ranked[1:] != ranked[:-1]
    starts = np.flatnonzero(boundaries)
    ends = np.append(starts[1:], len(values))
    group_rank = (starts + ends + 1) / 2.0
    dense = np.cumsum(boundaries) - 1
    ranks = np.empty(len(values))
    ranks[order] = group_rank[dense]
    return ranks


def _pearson(x, y):
    cx = x - x.mean()
    cy = y - y.mean()
    denom = math.sqrt(float(np.dot(cx, cx)) * float(np.dot(cy, cy)))
    if denom == 0.0:
        return math.nan  # a constant vector has no defined correlation
    rho = float(np.dot(cx, cy)) / denom
    return min(1.0, max(-1.0, rho))


def spearman_omit(x, y):
    """(rho, n_used) over the positions where both values are present."""
    if len(x) != len(y):
        raise UsageError(f"length mismatch: {len(x)} != {len(y)}")
    xs = []
    ys = []
    for a, b in zip(x, y):
        if _missing(a) or _missing(b):
            continue
        xs.append(float(a))
        ys.append(float(b))
    n = len(xs)
    if n < 3:
        raise TooFewPairs(f"only {n} retained pairs")
    rho = _pearson(_average_ranks(np.asarray(xs)), _average_ranks(np.asarray(ys)))
    return rho, n


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric Spearman matrix over whole + seg00..seg99 columns."""

    labels: tuple
    rho: tuple       # 101 x 101 floats
    n_used: tuple    # 101 x 101 ints
    kind: str = ""   # feature kind metadata, carried through artifacts

    @property
    def dims(self):
        return len(self.labels)

    def seg_vs_whole(self, segment_id):
        return self.rho[0][1 + segment_id]

    def seg_vs_whole_n(self, segment_id):
        return self.n_used[0][1 + segment_id]


def correlation_matrix(table):
    """All-pairs Spearman over a table's whole + segment columns.

    Complete columns are ranked once and correlated pairwise from the
    shared ranks; any pair touching a missing cell is re-ranked over its
    retained positions, which is what pairwise omission means.
    """
    if table.n_labels < 3:
        raise TooFewPairs(f"need >= 3 labels, got {table.n_labels}")
    ncols = 1 + N_SEGMENTS
    nrows = table.n_labels
    cols = []
    for j in range(ncols):
        col = np.array([math.nan if _missing(v) else float(v)
                        for v in table.column(j)])
        cols.append(col)

    complete = [not np.isnan(c).any() for c in cols]
    centered = [None] * ncols
    sq_norms = [0.0] * ncols
    for j in range(ncols):
        if complete[j]:
            r = _average_ranks(cols[j])
            c = r - r.mean()
            centered[j] = c
            sq_norms[j] = float(np.dot(c, c))

    rho = [[1.0] * ncols for _ in range(ncols)]
    n_used = [[nrows] * ncols for _ in range(ncols)]
    for i in range(ncols):
        if not complete[i]:
            n_used[i][i] = int(np.count_nonzero(~np.isnan(cols[i])))
        for j in range(i + 1, ncols):
            if complete[i] and complete[j]:
                denom = math.sqrt(sq_norms[i] * sq_norms[j])
                if denom == 0.0:
                    r = math.nan
                else:
                    r = float(np.dot(centered[i], centered[j])) / denom
                    r = min(1.0, max(-1.0, r))
                n = nrows
            else:
                try:
                    r, n = spearman_omit(cols[i].tolist(), cols[j].tolist())
                except TooFewPairs:
                    # a sparsely-populated segment column (e.g. a partial
                    # archive) correlates with nothing; record the gap
                    both = ~(np.isnan(cols[i]) | np.isnan(cols[j]))
                    r, n = math.nan, int(np.count_nonzero(both))
            rho[i][j] = rho[j][i] = r
            n_used[i][j] = n_used[j][i] = n

    return CorrelationMatrix(
        labels=MATRIX_LABELS,
        rho=tuple(tuple(row) for row in rho),
        n_used=tuple(tuple(row) for row in n_used),
        kind=table.kind,
    )


@dataclass(frozen=True)
class Descriptive:
    n: int
    min: float
    max: float
    mean: float
    variance: float


def describe(values):
    """n/min/max/mean and unbiased sample variance."""
    vals = [float(v) for v in values]
    n = len(vals)
    if n < 2:
        raise TooFew(f"need >= 2 values, got {n}")
    mean = math.fsum(vals) / n
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return Descriptive(n, min(vals), max(vals), mean, var)


# Rational approximation of the standard normal quantile (relative error
# < 1.15e-9 everywhere), then one Halley step against erfc brings it to
# machine precision.
_NQ_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_NQ_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
_NQ_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_NQ_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)


def normal_quantile(p):
    """Inverse standard normal CDF for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise UsageError(f"quantile probability out of range: {p}")
    a, b, c, d = _NQ_A, _NQ_B, _NQ_C, _NQ_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2 * math.log(p))
        x = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
             / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1))
    elif p <= 1 - p_low:
        q = p - 0.5
        r = q * q
        x = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
             / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1))
    else:
        q = math.sqrt(-2 * math.log(1 - p))
        x = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
              / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1))
    # Halley refinement
    e = 0.5 * math.erfc(-x / math.sqrt(2)) - p
    u = e * math.sqrt(2 * math.pi) * math.exp(x * x / 2)
    return x - u / (1 + x * u / 2)


@dataclass(frozen=True)
class FisherCI:
    lo: float
    hi: float
    degenerate: bool = False


def fisher_ci(rho, n_used, alpha=0.05):
    """Confidence interval for a correlation via the atanh transform.

    |rho| = 1 has no finite transform; the interval collapses to the
    point and is flagged degenerate rather than raising.
    """
    if n_used < 4:
        raise TooFewPairs(f"need n_used >= 4, got {n_used}")
    if not -1.0 <= rho <= 1.0:
        raise UsageError(f"correlation out of range: {rho}")
    if rho == 1.0 or rho == -1.0:
        return FisherCI(rho, rho, degenerate=True)
    z = normal_quantile(1 - alpha / 2)
    s = 1 / math.sqrt(n_used - 3)
    center = math.atanh(rho)
    return FisherCI(math.tanh(center - z * s), math.tanh(center + z * s))


@dataclass(frozen=True)
class RankedSegment:
    rank: int
    segment_id: int
    rho: float
    ci: FisherCI


@dataclass(frozen=True)
class SegmentRanking:
    """Segments ordered best-to-worst by correlation with the whole."""

    rows: tuple
    kind: str = ""

    def order(self):
        return [row.segment_id for row in self.rows]


def rank_segments(matrix, alpha=0.05):
    """Descending segment-vs-whole ranking with CIs; ties by segment id.

    Segments with no usable correlation (nan, from partial archives) rank
    after every real value.
    """
    def sort_key(s):
        rho = matrix.seg_vs_whole(s)
        if math.isnan(rho):
            return (1, 0.0, s)
        return (0, -rho, s)

    scored = sorted(range(N_SEGMENTS), key=sort_key)
    rows = []
    for rank, seg in enumerate(scored, start=1):
        rho = matrix.seg_vs_whole(seg)
        n = matrix.seg_vs_whole_n(seg)
        if n >= 4 and -1.0 <= rho <= 1.0:
            ci = fisher_ci(rho, n, alpha)
        else:
            ci = FisherCI(rho, rho, degenerate=True)
        rows.append(RankedSegment(rank, seg, rho, ci))
    return SegmentRanking(rows=tuple(rows), kind=matrix.kind)


def percentile_score(x, population):
    """Midrank percentile of x within exactly 100 population values."""
    if len(population) != 100:
        raise UsageError(f"population must have 100 values, got {len(population)}")
    below = sum(1 for v in population if v < x)
    equal = sum(1 for v in population if v == x)
    return below + 0.5 * equal


@dataclass(frozen=True)
class ProxyHeatmap:
    """Percentile scores for predicting a target property from a basis."""

    basis: str
    target: str
    scores: tuple  # index k holds the score for N = k+1
    mean: float
    std: float


def proxy_eval(basis, target, max_n=10):
    """Score top-N basis segments against the target, N = 1..max_n.

    For each N the top-N basis segments (by correlation with the whole)
    have their *target* correlations-with-the-whole averaged, and that
    average is placed as a midrank percentile within the target's 100
    per-segment values.
    """
    if basis.labels != target.labels:
        raise UsageError("basis and target matrices use different labelings")
    basis_order = sorted(range(N_SEGMENTS),
                         key=lambda s: (-basis.seg_vs_whole(s), s))
    target_values = [target.seg_vs_whole(s) for s in range(N_SEGMENTS)]
    scores = []
    for n in range(1, max_n + 1):
        chosen = basis_order[:n]
        avg = math.fsum(target.seg_vs_whole(s) for s in chosen) / n
        scores.append(percentile_score(avg, target_values))
    mean = math.fsum(scores) / len(scores)
    if len(scores) >= 2:
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in scores) / (len(scores) - 1))
    else:
        std = 0.0
    return ProxyHeatmap(
        basis=basis.kind,
        target=target.kind,
        scores=tuple(scores),
        mean=mean,
        std=std,
    )


# ---------------------------------------------------------------------------
# tab-separated emission / parsing

def serialize_matrix(matrix):
    out = [f"# kind={matrix.kind}"]
    out.append("\t".join(("",) + matrix.labels))
    for i, label in enumerate(matrix.labels):
        out.append("\t".join([label] + [f"{v:.6f}" for v in matrix.rho[i]]))
    return "\n".join(out) + "\n"


def serialize_n_used(matrix):
    out = [f"# kind={matrix.kind}"]
    out.append("\t".join(("",) + matrix.labels))
    for i, label in enumerate(matrix.labels):
        out.append("\t".join([label] + [str(v) for v in matrix.n_used[i]]))
    return "\n".join(out) + "\n"


def parse_matrix(rho_text, n_used_text=None):
    """Rebuild a CorrelationMatrix from serialize_matrix output.

    Without the companion n_used table, cell sample sizes are unknown
    and default to 0 (rank/proxy evaluation does not need them).
    """
    kind, rows = _parse_grid(rho_text, float)
    dims = len(rows)
    if n_used_text is not None:
        _, n_rows = _parse_grid(n_used_text, int)
    else:
        n_rows = [[0] * dims for _ in range(dims)]
    return CorrelationMatrix(
        labels=MATRIX_LABELS,
        rho=tuple(tuple(r) for r in rows),
        n_used=tuple(tuple(r) for r in n_rows),
        kind=kind,
    )


def _parse_grid(text, convert):
    lines = [ln for ln in text.split("\n") if ln]
    if lines and lines[0].startswith("# archive="):
        lines = lines[1:]
    if not lines or not lines[0].startswith("# kind="):
        raise DataError("matrix must start with a # kind= line")
    kind = lines[0][len("# kind="):]
    labels = lines[1].split("\t")[1:]
    if tuple(labels) != MATRIX_LABELS:
        raise DataError("unexpected matrix labels")
    rows = []
    for line in lines[2:]:
        cells = line.split("\t")
        if len(cells) != 1 + len(MATRIX_LABELS):
            raise DataError(f"bad matrix row: {line[:60]!r}")
        rows.append([convert(c) for c in cells[1:]])
    if len(rows) != len(MATRIX_LABELS):
        raise DataError(f"expected {len(MATRIX_LABELS)} matrix rows, got {len(rows)}")
    return kind, rows


def serialize_ranking(ranking):
    out = [f"# kind={ranking.kind}"]
    out.append("rank\tsegment\trho\tci_lo\tci_hi")
    for row in ranking.rows:
        out.append(f"{row.rank}\t{row.segment_id}\t{row.rho:.6f}"
                   f"\t{row.ci.lo:.6f}\t{row.ci.hi:.6f}")
    return "\n".join(out) + "\n"


def serialize_describe(name, desc):
    header = "archive\tn\tmin\tmax\tmean\tvariance"
    row = (f"{name}\t{desc.n}\t{desc.min:.3f}\t{desc.max:.3f}"
           f"\t{desc.mean:.3f}\t{desc.variance:.4f}")
    return f"{header}\n{row}\n"


def serialize_heatmaps(heatmaps, max_n=10):
    cols = "\t".join(str(n) for n in range(1, max_n + 1))
    out = [f"pair\t{cols}\tmean\tstd"]
    for h in heatmaps:
        cells = "\t".join(f"{v:.1f}" for v in h.scores)
        out.append(f"{h.target} by {h.basis}\t{cells}\t{h.mean:.1f}\t{h.std:.1f}")
    return "\n".join(out) + "\n"
