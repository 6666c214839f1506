"""Kruskal-Wallis rank test and the chi-square tail it is referred to."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .features import FEATURES, GESTURES, column

log = logging.getLogger(__name__)

SIGNIFICANCE = 1e-3

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


# --- regularized incomplete gamma ----------------------------------------------

def _log_prefactor(s, x):
    return -x + s * math.log(x) - math.lgamma(s)


def _lower_series(s, x):
    # P(s, x) = x^s e^-x / Gamma(s+1) * sum_k x^k / ((s+1)...(s+k))
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(_log_prefactor(s, x))


def _upper_cf(s, x):
    # modified Lentz evaluation of the continued fraction for Q(s, x)
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(_log_prefactor(s, x)) * h


def gamma_q(s, x):
    """Regularized upper incomplete gamma function Q(s, x)."""
    if s <= 0:
        raise ValueError("shape must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return max(0.0, 1.0 - _lower_series(s, x))
    return _upper_cf(s, x)


def chisq_survival(x, df):
    """Upper tail probability of the chi-square distribution."""
    if not x >= 0:
        raise ValueError(f"chi-square statistic must be nonnegative, got {x}")
    if int(df) != df or df < 1:
        raise ValueError("df must be a positive integer")
    return gamma_q(0.5 * df, 0.5 * x)


def chisq_isf(p, df, lo=0.0, hi=None, iters=200):
    """Statistic whose tail probability is ``p``, by bisection on log Q."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if hi is None:
        hi = max(1.0, float(df))
        while chisq_survival(hi, df) > p:
            hi *= 2.0
    target = math.log(p)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        q = chisq_survival(mid, df)
        if q > 0 and math.log(q) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# --- ranks ---------------------------------------------------------------------

@dataclass(frozen=True)
class RankTable:
    values: np.ndarray
    group_ids: np.ndarray
    ranks: np.ndarray
    tie_groups: list


def rank_with_ties(values):
    """Ascending mid-ranks, 1-based."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no values to rank")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot rank non-finite values")
    order = np.argsort(v, kind="mergesort")
    return kernels.midranks(np.ascontiguousarray(v[order]), order)


def tie_groups(values):
    uniq, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    return [(float(u), int(c)) for u, c in zip(uniq, counts) if c > 1]


def rank_table(values, group_ids):
    v = np.asarray(values, dtype=float)
    return RankTable(v, np.asarray(group_ids), rank_with_ties(v), tie_groups(v))


# --- Kruskal-Wallis --------------------------------------------------------------

@dataclass(frozen=True)
class KwResult:
    H: float
    df: int
    p_value: float
    tie_correction: float
    groups: tuple
    group_rank_sums: tuple
    group_sizes: tuple

    def significant(self, alpha=SIGNIFICANCE):
        return self.p_value < alpha


def _ordered_groups(group_ids):
    present = list(dict.fromkeys(group_ids))
    return sorted(present, key=lambda g: (GESTURES.index(g) if g in GESTURES else len(GESTURES),
                                          str(g)))


def kruskal_wallis(values, group_ids):
    """Tie-corrected Kruskal-Wallis H test with a chi-square p-value."""
    values = np.asarray(values, dtype=float).ravel()
    group_ids = list(group_ids)
    if len(group_ids) != values.size:
        raise ValueError("values and group_ids differ in length")
    groups = _ordered_groups(group_ids)
    if len(groups) < 2:
        raise ValueError("Kruskal-Wallis needs at least two groups")
    ranks = rank_with_ties(values)
    labels = np.array([groups.index(g) for g in group_ids])
    sizes = np.bincount(labels, minlength=len(groups))
    if np.any(sizes == 0):
        raise ValueError("a group has no observations")
    rank_sums = np.bincount(labels, weights=ranks, minlength=len(groups))
    N = values.size
    df = len(groups) - 1
    counts = np.unique(values, return_counts=True)[1].astype(float)
    ties = float(np.sum(counts ** 3 - counts))
    C = 1.0 - ties / (float(N) ** 3 - N)
    if C <= 0.0:
        # every observation tied: no evidence against equal medians
        H, p, C = 0.0, 1.0, 0.0
    else:
        # sorted terms keep the sum independent of group labelling
        S = math.fsum(sorted(rank_sums ** 2 / sizes))
        H = (12.0 * S - 3.0 * N * (N + 1.0) ** 2) / (N * (N + 1.0)) / C
        H = max(H, 0.0)
        p = chisq_survival(H, df)
    return KwResult(float(H), df, float(min(max(p, 0.0), 1.0)), float(C), tuple(groups),
                    tuple(float(r) for r in rank_sums), tuple(int(n) for n in sizes))


def pairwise_kw(table, feature):
    """Gesture-by-gesture matrix of two-group Kruskal-Wallis p-values.

    Returns ``(gestures, pvalues, results)``; ``results`` maps ``(a, b)`` with
    ``a`` before ``b`` in the gesture order to the test result.
    """
    x = column(table, feature)
    labels = np.array([r.gesture for r in table])
    present = set(labels.tolist())
    gestures = [g for g in GESTURES if g in present]
    extra = sorted(present - set(GESTURES))
    gestures += extra
    missing = [g for g in GESTURES if g not in present]
    if missing:
        log.warning("gestures without rows excluded from pairwise tests: %s", ",".join(missing))
    if len(gestures) < 2:
        raise ValueError("pairwise tests need at least two gestures")
    g = len(gestures)
    P = np.ones((g, g))
    results = {}
    for i in range(g):
        for j in range(i + 1, g):
            sel = (labels == gestures[i]) | (labels == gestures[j])
            r = kruskal_wallis(x[sel], labels[sel])
            results[(gestures[i], gestures[j])] = r
            P[i, j] = P[j, i] = r.p_value
    return gestures, P, results


def write_pvalue_csv(path, gestures, P):
    with open(path, "w", newline="") as fh:
        fh.write("gesture," + ",".join(gestures) + "\n")
        for g, row in zip(gestures, P):
            fh.write(g + "," + ",".join(format(float(v), ".17g") for v in row) + "\n")


def read_pvalue_csv(path):
    with open(path) as fh:
        gestures = fh.readline().strip().split(",")[1:]
        rows = [[float(v) for v in line.strip().split(",")[1:]] for line in fh if line.strip()]
    return gestures, np.array(rows)


# --- scenarios -------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    kind: str = "inter"
    subjects_per_block: int = 0

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text in ("inter", "inter_subject"):
            return cls("inter")
        if text.startswith("intra"):
            _, _, k = text.partition(":")
            try:
                k = int(k)
            except ValueError:
                raise ValueError(f"bad scenario {text!r}; expected intra:<k>") from None
            if k < 1:
                raise ValueError("intra block size must be >= 1")
            return cls("intra", k)
        raise ValueError(f"unknown scenario {text!r}; expected inter or intra:<k>")

    def __str__(self):
        return "inter" if self.kind == "inter" else f"intra:{self.subjects_per_block}"


@dataclass
class ScenarioReport:
    scenario: Scenario
    blocks: list
    results: dict
    mean_p: dict


def subject_blocks(table, k):
    """Consecutive blocks of ``k`` subject ids; an incomplete final block is dropped."""
    subjects = sorted({r.subject for r in table})
    if k > len(subjects):
        raise ValueError(f"block of {k} subjects requested but only {len(subjects)} available")
    n_blocks = len(subjects) // k
    return [tuple(subjects[i * k:(i + 1) * k]) for i in range(n_blocks)]


def scenario_runner(table, scenario):
    """Per-feature Kruskal-Wallis over gesture groups for a scenario.

    ``results[feature]`` is a list with one result per block (a single block
    holding every subject for the inter-subject scenario).
    """
    if not table:
        raise ValueError("empty feature table")
    if scenario.kind == "inter":
        blocks = [tuple(sorted({r.subject for r in table}))]
    else:
        blocks = subject_blocks(table, scenario.subjects_per_block)
    results = {f: [] for f in FEATURES}
    for block in blocks:
        members = set(block)
        rows = [r for r in table if r.subject in members]
        labels = [r.gesture for r in rows]
        for f in FEATURES:
            results[f].append(kruskal_wallis(column(rows, f), labels))
    mean_p = {f: float(np.mean([r.p_value for r in results[f]])) for f in FEATURES}
    return ScenarioReport(scenario, blocks, results, mean_p)
