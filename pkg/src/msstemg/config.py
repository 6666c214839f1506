"""Pipeline configuration: ``key = value`` files plus command-line overrides."""

from dataclasses import dataclass, fields, replace

import numpy as np

from .dataio import SegmentationSpec
from .msst import BandPartition
from .signal import IirFilterSpec
from .sst import WaveletSpec, linear_axis
from .stats import Scenario


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    # input
    manifest: str = ""
    synthetic: bool = False
    synth_subjects: int = 5
    synth_repetitions: int = 5
    synth_mode: str = "null"
    synth_duration_s: float = 6.0
    sample_rate_hz: float = 2000.0
    channels: int = 4
    expected_samples: int = 0
    # preprocessing
    prefilter: str = "auto"
    bandpass_order: int = 6
    bandpass_low_hz: float = 5.0
    bandpass_high_hz: float = 500.0
    notch_hz: float = 50.0
    notch_q: float = 35.0
    # segmentation
    trim_head_s: float = 1.0
    trim_tail_s: float = 1.0
    window_s: float = 0.250
    step_s: float = 0.050
    # transform
    wavelet: str = "morlet"
    center_frequency_cycles: float = 6.0 / (2 * np.pi)
    voices_per_octave: int = 16
    min_freq_hz: float = 5.0
    max_freq_hz: float = 500.0
    cwt_boundary: str = "predict"
    sst_bins: int = 256
    bands: int = 32
    # features and statistics
    feature_mode: str = "joint"
    distribution: str = "magnitude"
    scenario: str = "inter"
    significance: float = 0.001
    # execution
    out: str = "run"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        try:
            self.validate()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    def validate(self):
        if self.prefilter not in ("auto", "on", "off"):
            raise ValueError("prefilter must be auto, on or off")
        if self.feature_mode not in ("joint", "elementwise"):
            raise ValueError("feature_mode must be joint or elementwise")
        if self.distribution not in ("magnitude", "energy"):
            raise ValueError("distribution must be magnitude or energy")
        if self.synth_mode not in ("null", "gesture"):
            raise ValueError("synth_mode must be null or gesture")
        if not 0 < self.significance < 1:
            raise ValueError("significance must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.sst_bins < 2:
            raise ValueError("sst_bins must be >= 2")
        if self.synth_subjects < 1 or self.synth_repetitions < 1:
            raise ValueError("synthetic cohort must have at least one subject and repetition")
        if self.max_freq_hz > self.sample_rate_hz / 2:
            raise ValueError("max_freq_hz exceeds Nyquist")
        self.segmentation()
        self.wavelet_spec()
        self.partition()
        self.scenario_spec()
        if self.prefilter_enabled():
            self.filter_specs()

    # derived specs
    def segmentation(self):
        return SegmentationSpec(self.trim_head_s, self.trim_tail_s, self.window_s, self.step_s)

    def wavelet_spec(self):
        return WaveletSpec(self.wavelet, self.center_frequency_cycles, self.voices_per_octave,
                           self.min_freq_hz, self.max_freq_hz, self.cwt_boundary)

    def out_axis(self):
        return linear_axis(self.min_freq_hz, self.max_freq_hz, self.sst_bins)

    def partition(self):
        return BandPartition.equal_width(self.sst_bins, self.bands)

    def scenario_spec(self):
        return Scenario.parse(self.scenario)

    def prefilter_enabled(self):
        if self.prefilter == "auto":
            return self.synthetic
        return self.prefilter == "on"

    def filter_specs(self):
        bp = IirFilterSpec("butterworth_bandpass", self.bandpass_order,
                           self.bandpass_low_hz, self.bandpass_high_hz)
        notch = IirFilterSpec("notch", 2, center_hz=self.notch_hz, quality_factor=self.notch_q)
        nyq = self.sample_rate_hz / 2
        if not 0 < self.bandpass_low_hz < self.bandpass_high_hz < nyq:
            raise ValueError("invalid cutoff")
        return bp, notch

    def knobs(self):
        """Every setting that can influence output bytes, in a stable order."""
        return [(f.name, getattr(self, f.name)) for f in fields(self)
                if f.name not in ("workers", "out")]


_FIELDS = {f.name: f for f in fields(PipelineConfig)}


def _coerce(name, text):
    f = _FIELDS.get(name)
    if f is None:
        raise ConfigError(f"unknown config key {name!r}")
    default = getattr(PipelineConfig, name, None)
    kind = type(default)
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None
    return text


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        values[key] = _coerce(key, val)
    return values


def load_config(path=None, overrides=None):
    values = {}
    if path:
        try:
            with open(path) as fh:
                values.update(parse_config_text(fh.read(), path))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        k = k.replace("-", "_")
        if k not in _FIELDS:
            raise ConfigError(f"unknown config key {k!r}")
        values[k] = _coerce(k, v) if isinstance(v, str) else v
    return PipelineConfig(**values)


def with_overrides(cfg, **kw):
    return replace(cfg, **kw)


def format_config(cfg):
    return "\n".join(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}"
                     for k, v in [(f.name, getattr(cfg, f.name)) for f in fields(cfg)]) + "\n"
