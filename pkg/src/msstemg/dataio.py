"""Trial ingestion, steady-state trimming, sliding windows and synthetic signals."""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .features import GESTURES
from .signal import MultichannelSignal

SAMPLE_RATE_HZ = 2000.0
CHANNELS = 4
TRIAL_SECONDS = 6.0
RNG_ALGORITHM = "PCG64"


class DataError(ValueError):
    """Malformed or inconsistent input data."""


# --- manifest ------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    subject: int
    gesture: str
    repetition: int
    path: str


@dataclass(frozen=True)
class TrialManifest:
    entries: tuple
    sample_rate_hz: float = SAMPLE_RATE_HZ
    channel_count: int = CHANNELS

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise DataError("manifest paths are not unique")
        for e in self.entries:
            if e.gesture not in GESTURES:
                raise DataError(f"unknown gesture label {e.gesture!r}")


def read_manifest(path, sample_rate_hz=SAMPLE_RATE_HZ, channel_count=CHANNELS):
    """Read ``subject,gesture,repetition,path``; relative paths resolve against the manifest."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["subject", "gesture", "repetition", "path"]:
            raise DataError(f"{path}: expected header subject,gesture,repetition,path")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields")
            try:
                subject, rep = int(row[0]), int(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: subject and repetition must be integers") from None
            p = row[3].strip()
            if not os.path.isabs(p):
                p = os.path.join(base, p)
            entries.append(ManifestEntry(subject, row[1].strip(), rep, p))
    return TrialManifest(tuple(entries), sample_rate_hz, channel_count)


def write_manifest(path, entries, relative_to=None):
    with open(path, "w", newline="") as fh:
        fh.write("subject,gesture,repetition,path\n")
        for e in entries:
            p = os.path.relpath(e.path, relative_to) if relative_to else e.path
            fh.write(f"{e.subject},{e.gesture},{e.repetition},{p}\n")


# --- trial files ---------------------------------------------------------------

def load_trial(path, entry=None, sample_rate_hz=SAMPLE_RATE_HZ, channel_count=CHANNELS,
               expected_samples=None):
    """Read a CSV trial: one row per sample, one column per channel, optional header."""
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read trial {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise DataError(f"{path}:{lineno}: malformed row") from None
            if len(vals) != channel_count:
                raise DataError(f"{path}:{lineno}: expected {channel_count} columns, got {len(vals)}")
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}:{lineno}: non-finite sample")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: empty trial")
    if expected_samples is not None and len(rows) != expected_samples:
        raise DataError(f"{path}: length mismatch ({len(rows)} rows, expected {expected_samples})")
    return MultichannelSignal(np.array(rows, dtype=float).T, sample_rate_hz)


def save_trial(path, sig, header=True):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(f"ch{i + 1}" for i in range(sig.channel_count)) + "\n")
        for row in sig.samples.T:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# --- segmentation ----------------------------------------------------------------

@dataclass(frozen=True)
class SegmentationSpec:
    trim_head_s: float = 1.0
    trim_tail_s: float = 1.0
    window_s: float = 0.250
    step_s: float = 0.050

    def __post_init__(self):
        if not self.window_s > 0:
            raise ValueError("window_s must be positive")
        if not 0 < self.step_s <= self.window_s:
            raise ValueError("step_s must satisfy 0 < step_s <= window_s")
        if self.trim_head_s < 0 or self.trim_tail_s < 0:
            raise ValueError("trim lengths must be nonnegative")

    def samples(self, sample_rate_hz):
        r = lambda s: int(round(s * sample_rate_hz))  # noqa: E731
        return r(self.trim_head_s), r(self.trim_tail_s), r(self.window_s), r(self.step_s)

    def window_count(self, n_samples, sample_rate_hz):
        head, tail, w, s = self.samples(sample_rate_hz)
        L = n_samples - head - tail
        if L < w:
            return 0
        return (L - w) // s + 1


def segment_array(samples, sample_rate_hz, spec=SegmentationSpec()):
    """Windows of the trimmed signal as a read-only view (windows, channels, samples)."""
    x = np.asarray(samples)
    head, tail, w, s = spec.samples(sample_rate_hz)
    if w < 1 or s < 1:
        raise ValueError("window and step must span at least one sample")
    n = x.shape[-1]
    trimmed = x[..., head:n - tail]
    L = trimmed.shape[-1]
    if L < w:
        raise ValueError(f"trimmed signal ({L} samples) shorter than window ({w} samples)")
    count = (L - w) // s + 1
    view = np.lib.stride_tricks.sliding_window_view(trimmed, w, axis=-1)[..., ::s, :][..., :count, :]
    return np.moveaxis(view, -2, 0)


def trim_and_segment(sig, spec=SegmentationSpec()):
    """Overlapping windows of the steady-state part of a trial."""
    win = segment_array(sig.samples, sig.sample_rate_hz, spec)
    fs = sig.sample_rate_hz
    return [MultichannelSignal._trusted(win[k], fs) for k in range(win.shape[0])]


# --- synthetic signals -------------------------------------------------------------

@dataclass(frozen=True)
class Tone:
    freq_hz: float
    amp: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class Chirp:
    f0_hz: float
    f1_hz: float
    amp: float = 1.0


@dataclass(frozen=True)
class Noise:
    sigma: float
    seed: int


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def synth_multichannel(channels, duration_s, sample_rate_hz=SAMPLE_RATE_HZ, channel_count=None):
    """Sum of tones, linear chirps and Gaussian noise per channel.

    ``channels`` holds one sequence of components per channel. Tones are
    cosines; noise is drawn from PCG64 seeded by the component's seed.
    """
    if channel_count is None:
        channel_count = len(channels)
    if len(channels) != channel_count:
        raise ValueError(f"{len(channels)} component lists for {channel_count} channels")
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise ValueError("duration too short")
    nyq = sample_rate_hz / 2
    t = np.arange(n) / sample_rate_hz
    out = np.zeros((channel_count, n))
    for c, comps in enumerate(channels):
        for comp in comps:
            if isinstance(comp, Tone):
                if not 0 <= comp.freq_hz < nyq:
                    raise ValueError(f"tone frequency {comp.freq_hz} Hz not below Nyquist {nyq} Hz")
                out[c] += comp.amp * np.cos(2 * np.pi * comp.freq_hz * t + comp.phase)
            elif isinstance(comp, Chirp):
                if not (0 <= comp.f0_hz < nyq and 0 <= comp.f1_hz < nyq):
                    raise ValueError("chirp frequency not below Nyquist")
                rate = (comp.f1_hz - comp.f0_hz) / duration_s
                out[c] += comp.amp * np.cos(2 * np.pi * (comp.f0_hz * t + 0.5 * rate * t * t))
            elif isinstance(comp, Noise):
                out[c] += comp.sigma * _rng(comp.seed).standard_normal(n)
            else:
                raise TypeError(f"unknown component {comp!r}")
    return MultichannelSignal(out, sample_rate_hz)


# synthetic cohort: each trial is band-limited noise bursts plus a few tones per
# channel. In "gesture" mode the tone frequencies and burst envelope depend on
# the gesture; in "null" mode every gesture shares one distribution.
_GESTURE_SHIFT_HZ = {g: 15.0 * i for i, g in enumerate(GESTURES)}


def trial_seed(seed, subject, gesture, repetition):
    return int(np.random.SeedSequence(
        [int(seed), int(subject), GESTURES.index(gesture), int(repetition)]).generate_state(1)[0])


def synth_trial(seed, subject, gesture, repetition, mode="null",
                duration_s=TRIAL_SECONDS, sample_rate_hz=SAMPLE_RATE_HZ, channel_count=CHANNELS):
    """Deterministic synthetic sEMG-like trial."""
    if mode not in ("null", "gesture"):
        raise ValueError(f"unknown synthetic mode {mode!r}")
    rng = _rng(trial_seed(seed, subject, gesture, repetition))
    shift = _GESTURE_SHIFT_HZ[gesture] if mode == "gesture" else 0.0
    chans = []
    for c in range(channel_count):
        base = 60.0 + 40.0 * c + shift
        comps = [Tone(base + rng.uniform(-5, 5), rng.uniform(0.5, 1.5), rng.uniform(0, 2 * np.pi)),
                 Tone(2.3 * base + rng.uniform(-10, 10), rng.uniform(0.2, 0.8), rng.uniform(0, 2 * np.pi)),
                 Noise(rng.uniform(0.3, 0.6), int(rng.integers(0, 2 ** 63)))]
        chans.append(comps)
    return synth_multichannel(chans, duration_s, sample_rate_hz, channel_count)
