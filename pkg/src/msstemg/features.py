"""Joint time-frequency moment features and feature-table normalisation."""

from dataclasses import dataclass, field, replace

import numpy as np

FEATURES = ("mean", "variance", "skewness", "kurtosis")
GESTURES = ("X", "E", "F", "U", "R", "G", "B", "D", "S", "P")


@dataclass(frozen=True)
class TfDistribution:
    """Nonnegative weights over (frequency bin, time) summing to one."""

    P: np.ndarray
    freq_axis_hz: np.ndarray
    time_axis_s: np.ndarray

    def marginal_time(self):
        return self.P.sum(axis=0)

    def marginal_freq(self):
        return self.P.sum(axis=1)


def normalize_distribution(T, distribution="magnitude"):
    """Turn a time-frequency matrix into a distribution.

    ``distribution="magnitude"`` uses ``|T|``; ``"energy"`` uses ``|T|**2``.
    """
    if distribution == "magnitude":
        w = np.abs(T.coefficients)
    elif distribution == "energy":
        w = np.abs(T.coefficients) ** 2
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    total = w.sum()
    if not total > 0 or not np.isfinite(total):
        raise ValueError("degenerate distribution")
    return TfDistribution(w / total, np.asarray(T.freq_axis_hz, dtype=float),
                          np.asarray(T.time_axis_s, dtype=float))


def _axis_stats(P):
    pt = P.marginal_time()
    pf = P.marginal_freq()
    t, f = P.time_axis_s, P.freq_axis_hz
    mt = float(pt @ t)
    mf = float(pf @ f)
    st = float(np.sqrt(max(pt @ (t - mt) ** 2, 0.0)))
    sf = float(np.sqrt(max(pf @ (f - mf) ** 2, 0.0)))
    return mt, mf, st, sf


def joint_moment(P, n, m, centered=False, standardized=False):
    """Sum of ``t**n * w**m * P(w, t)`` with t in seconds and w in Hz.

    ``centered`` replaces t, w by their deviations from the distribution means;
    ``standardized`` additionally divides them by the marginal standard
    deviations. A zero standard deviation on an axis with positive order makes
    the standardized moment 0.
    """
    if n < 0 or m < 0:
        raise ValueError("moment orders must be nonnegative")
    t = P.time_axis_s
    f = P.freq_axis_hz
    if centered or standardized:
        mt, mf, st, sf = _axis_stats(P)
        t = t - mt
        f = f - mf
        if standardized:
            if (n > 0 and st == 0.0) or (m > 0 and sf == 0.0):
                return 0.0
            if n > 0:
                t = t / st
            if m > 0:
                f = f / sf
    # separable weights: sum_w sum_t f^m P t^n
    return float((f ** m) @ P.P @ (t ** n))


@dataclass(frozen=True)
class FeatureRecord:
    subject: int
    gesture: str
    repetition: int
    window: int
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    degenerate: bool = field(default=False, compare=False)

    def key(self):
        return (self.subject, GESTURES.index(self.gesture) if self.gesture in GESTURES else 99,
                self.gesture, self.repetition, self.window)

    def values(self):
        return (self.mean, self.variance, self.skewness, self.kurtosis)


def moment_features(P, mode="joint", T=None):
    """Return ``(mean, variance, skewness, kurtosis, degenerate)``.

    ``joint`` mode: raw (1, 1) moment, centered (2, 2) moment and standardized
    (3, 3) and (4, 4) moments of ``P``. ``elementwise`` mode: sample statistics
    of the flattened coefficient magnitudes (``T`` if given, else ``P``).
    """
    if mode == "joint":
        mean = joint_moment(P, 1, 1)
        var = joint_moment(P, 2, 2, centered=True)
        _, _, st, sf = _axis_stats(P)
        degenerate = st == 0.0 or sf == 0.0
        skew = joint_moment(P, 3, 3, standardized=True)
        kurt = joint_moment(P, 4, 4, standardized=True)
        return mean, var, skew, kurt, degenerate
    if mode == "elementwise":
        v = np.abs(T.coefficients).ravel() if T is not None else P.P.ravel()
        return _flat_stats(v)
    raise ValueError(f"unknown feature mode {mode!r}")


def _flat_stats(v):
    v = np.asarray(v, dtype=float)
    n = v.size
    mean = float(v.mean())
    d = v - mean
    var = float(d @ d / (n - 1)) if n > 1 else 0.0
    m2 = float(d @ d / n)
    if m2 == 0.0:
        return mean, var, 0.0, 0.0, True
    skew = float(np.mean(d ** 3) / m2 ** 1.5)
    kurt = float(np.mean(d ** 4) / m2 ** 2)
    return mean, var, skew, kurt, False


def features_from_matrix(T, mode="joint", distribution="magnitude"):
    """Moment features of a time-frequency matrix; all-zero matrices give zeros."""
    try:
        P = normalize_distribution(T, distribution)
    except ValueError:
        return 0.0, 0.0, 0.0, 0.0, True
    return moment_features(P, mode, T)


def zscore_columns(table):
    """Standardize every feature column with its mean and sample deviation."""
    if not table:
        raise ValueError("empty feature table")
    X = np.array([r.values() for r in table], dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1) if len(table) > 1 else np.zeros(X.shape[1])
    out = []
    Z = np.zeros_like(X)
    for c in range(X.shape[1]):
        if sd[c] > 0:
            Z[:, c] = (X[:, c] - mu[c]) / sd[c]
    for r, z in zip(table, Z):
        out.append(replace(r, mean=float(z[0]), variance=float(z[1]),
                           skewness=float(z[2]), kurtosis=float(z[3])))
    return out


def column(table, feature):
    if feature not in FEATURES:
        raise ValueError(f"unknown feature {feature!r}; choose from {', '.join(FEATURES)}")
    return np.array([getattr(r, feature) for r in table], dtype=float)


# --- feature table CSV ---------------------------------------------------------

HEADER = "subject,gesture,repetition,window,mean,variance,skewness,kurtosis"


def write_feature_csv(path, table):
    with open(path, "w", newline="") as fh:
        fh.write(HEADER + "\n")
        for r in table:
            fh.write(f"{int(r.subject)},{r.gesture},{int(r.repetition)},{int(r.window)},"
                     + ",".join(repr(float(v)) for v in r.values()) + "\n")


def read_feature_csv(path):
    table = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ValueError(f"{path}:{lineno}: expected 8 fields, got {len(parts)}")
            try:
                table.append(FeatureRecord(int(parts[0]), parts[1], int(parts[2]), int(parts[3]),
                                           *(float(p) for p in parts[4:])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return table
