"""End-to-end run: trials -> windows -> MSST -> moment features -> KW tests -> files."""

import json
import logging
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _accel
from .dataio import DataError, load_trial, read_manifest, segment_array, synth_trial
from .features import (FEATURES, GESTURES, FeatureRecord, features_from_matrix,
                       write_feature_csv, zscore_columns)
from .msst import msst_array
from .report import boxplot_svg
from .signal import design_filter, prefilter
from .sst import TimeFrequencyMatrix
from .stats import pairwise_kw, scenario_runner, write_pvalue_csv

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialTask:
    subject: int
    gesture: str
    repetition: int
    path: str = ""


def trial_tasks(cfg):
    if cfg.synthetic:
        return [TrialTask(s, g, r)
                for s in range(1, cfg.synth_subjects + 1)
                for g in GESTURES
                for r in range(1, cfg.synth_repetitions + 1)]
    if not cfg.manifest:
        raise DataError("no manifest given and synthetic mode is off")
    man = read_manifest(cfg.manifest, cfg.sample_rate_hz, cfg.channels)
    if not man.entries:
        raise DataError(f"{cfg.manifest}: manifest lists no trials")
    return [TrialTask(e.subject, e.gesture, e.repetition, e.path) for e in man.entries]


def load_task(task, cfg):
    if cfg.synthetic:
        return synth_trial(cfg.seed, task.subject, task.gesture, task.repetition,
                           cfg.synth_mode, cfg.synth_duration_s, cfg.sample_rate_hz, cfg.channels)
    expected = cfg.expected_samples or None
    return load_trial(task.path, sample_rate_hz=cfg.sample_rate_hz, channel_count=cfg.channels,
                      expected_samples=expected)


def trial_features(task, cfg):
    """Feature records for every window of one trial."""
    sig = load_task(task, cfg)
    if cfg.prefilter_enabled():
        sig = prefilter(sig, [design_filter(s, sig.sample_rate_hz) for s in cfg.filter_specs()])
    windows = segment_array(sig.samples, sig.sample_rate_hz, cfg.segmentation())
    wavelet = cfg.wavelet_spec()
    axis = cfg.out_axis()
    n = windows.shape[-1]
    t_axis = np.arange(n) / sig.sample_rate_hz
    records = []
    for k in range(windows.shape[0]):
        M = msst_array(np.ascontiguousarray(windows[k]), sig.sample_rate_hz, wavelet,
                       cfg.bands, axis)
        T = TimeFrequencyMatrix(M, axis, t_axis, sig.sample_rate_hz)
        mean, var, skew, kurt, degenerate = features_from_matrix(T, cfg.feature_mode,
                                                                 cfg.distribution)
        records.append(FeatureRecord(task.subject, task.gesture, task.repetition, k,
                                     mean, var, skew, kurt, degenerate))
    return records


def _run_task(args):
    task, cfg = args
    return trial_features(task, cfg)


def extract_features(cfg, tasks=None):
    """Feature table sorted by (subject, gesture, repetition, window)."""
    if tasks is None:
        tasks = trial_tasks(cfg)
    jobs = [(t, cfg) for t in tasks]
    if cfg.workers == 1 or len(jobs) <= 1:
        chunks = [_run_task(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_task, jobs, chunksize=1))
    table = [r for chunk in chunks for r in chunk]
    table.sort(key=FeatureRecord.key)
    return table


# --- reporting -----------------------------------------------------------------

def kw_summary(report, significance):
    doc = {
        "scenario": str(report.scenario),
        "significance_threshold": significance,
        "blocks": [list(b) for b in report.blocks],
        "tests": [],
        "mean_p": report.mean_p,
    }
    for f in FEATURES:
        for block, r in zip(report.blocks, report.results[f]):
            doc["tests"].append({
                "feature": f,
                "subjects": list(block),
                "groups": list(r.groups),
                "group_sizes": list(r.group_sizes),
                "group_rank_sums": list(r.group_rank_sums),
                "H": r.H,
                "df": r.df,
                "tie_correction": r.tie_correction,
                "p_value": r.p_value,
                "significant": bool(r.p_value < significance),
            })
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


class _ListHandler(logging.Handler):
    def __init__(self):
        super().__init__(logging.INFO)
        self.lines = []

    def emit(self, record):
        self.lines.append(f"{record.levelname.lower()}: {record.getMessage()}")


def analyse(table, cfg, out_dir, lines):
    """KW summary, pairwise CSVs and box plots for an existing feature table."""
    z = zscore_columns(table)
    report = scenario_runner(z, cfg.scenario_spec())
    with open(os.path.join(out_dir, "kw_summary.txt"), "w") as fh:
        fh.write(kw_summary(report, cfg.significance))
    n_pairwise = 0
    for f in FEATURES:
        gestures, P, results = pairwise_kw(z, f)
        _, P_raw, _ = pairwise_kw(table, f)
        if not np.array_equal(P, P_raw):
            raise AssertionError(f"pairwise p-values for {f} changed under z-scoring")
        n_pairwise += len(results)
        write_pvalue_csv(os.path.join(out_dir, f"pairwise_{f}.csv"), gestures, P)
        overall = report.results[f][0].p_value if len(report.results[f]) == 1 else None
        with open(os.path.join(out_dir, f"boxplot_{f}.svg"), "w") as fh:
            fh.write(boxplot_svg(z, f, overall, (gestures, P)))
        sig = sum(r.p_value < cfg.significance for r in results.values())
        lines.append(f"pairwise {f}: {len(results)} tests, {sig} below {cfg.significance}")
    n_overall = sum(len(v) for v in report.results.values())
    lines.append(f"overall tests: {n_overall}")
    lines.append(f"pairwise tests: {n_pairwise}")
    lines.append("pairwise p-values identical for raw and z-scored features: yes")
    return report


def _header_lines(cfg, command):
    lines = [f"command: {command}", f"kernel backend: {_accel.backend()}"]
    lines += [f"config {k} = {v!r}" for k, v in cfg.knobs()]
    lines.append(f"prefilter in effect: {'on' if cfg.prefilter_enabled() else 'off'}")
    seg = cfg.segmentation()
    lines.append("window samples: %d, step samples: %d" % seg.samples(cfg.sample_rate_hz)[2:])
    lines.append("rng: PCG64 seeded from (seed, subject, gesture, repetition)")
    return lines


def _staged(out_dir, body):
    """Run ``body(stage_dir)``; move results into ``out_dir`` only on success."""
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".msstemg-", dir=parent)
    try:
        body(stage)
        os.makedirs(out_dir, exist_ok=True)
        for name in sorted(os.listdir(stage)):
            os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return out_dir


def run_pipeline(cfg, command="pipeline", table=None):
    """Write features.csv, kw_summary.txt, pairwise_*.csv, boxplot_*.svg and run.log."""
    handler = _ListHandler()
    root = logging.getLogger("msstemg")
    root.addHandler(handler)
    if root.level == logging.NOTSET or root.level > logging.INFO:
        root.setLevel(logging.INFO)

    def body(stage):
        lines = _header_lines(cfg, command)
        tbl = extract_features(cfg) if table is None else table
        if not tbl:
            raise DataError("no feature rows produced")
        write_feature_csv(os.path.join(stage, "features.csv"), tbl)
        write_feature_csv(os.path.join(stage, "features_zscore.csv"), zscore_columns(tbl))
        lines.append(f"trials: {len({(r.subject, r.gesture, r.repetition) for r in tbl})}")
        lines.append(f"feature rows: {len(tbl)}")
        lines.append(f"degenerate windows: {sum(r.degenerate for r in tbl)}")
        if command == "pipeline":
            analyse(tbl, cfg, stage, lines)
        lines += handler.lines
        with open(os.path.join(stage, "run.log"), "w") as fh:
            fh.write("\n".join(lines) + "\n")

    try:
        return _staged(cfg.out, body)
    finally:
        root.removeHandler(handler)


def run_kwtest(table, cfg):
    handler = _ListHandler()
    root = logging.getLogger("msstemg")
    root.addHandler(handler)

    def body(stage):
        lines = ["command: kwtest", f"feature rows: {len(table)}",
                 f"config scenario = {cfg.scenario!r}",
                 f"config significance = {cfg.significance!r}"]
        analyse(table, cfg, stage, lines)
        lines += handler.lines
        with open(os.path.join(stage, "run.log"), "w") as fh:
            fh.write("\n".join(lines) + "\n")

    try:
        return _staged(cfg.out, body)
    finally:
        root.removeHandler(handler)


def expected_rows(cfg):
    seg = cfg.segmentation()
    n = int(round(cfg.synth_duration_s * cfg.sample_rate_hz))
    return cfg.synth_subjects * len(GESTURES) * cfg.synth_repetitions * seg.window_count(
        n, cfg.sample_rate_hz)
