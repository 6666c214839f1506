"""Multivariate synchrosqueezing time-frequency moments for multichannel sEMG.

The package turns multichannel recordings into a single synchrosqueezed
time-frequency matrix per analysis window, summarises each matrix by joint
time-frequency moments and ranks gestures with the Kruskal-Wallis test.
"""

from ._accel import backend
from .dataio import (DataError, SegmentationSpec, TrialManifest, load_trial, read_manifest,
                     save_trial, synth_multichannel, trim_and_segment)
from .features import (FEATURES, GESTURES, FeatureRecord, TfDistribution, joint_moment,
                       moment_features, normalize_distribution, zscore_columns)
from .msst import (BandEstimates, BandPartition, band_if_ia, msst_array, msst_assemble,
                   multivariate_fuse)
from .signal import (IirFilterSpec, MultichannelSignal, apply_filter_zero_phase, design_filter,
                     fft_forward, fft_inverse)
from .sst import TimeFrequencyMatrix, WaveletSpec, cwt, phase_transform, synchrosqueeze
from .stats import (KwResult, chisq_survival, kruskal_wallis, pairwise_kw, rank_with_ties,
                    scenario_runner)

# the ``sst`` and ``msst`` functions live in their same-named submodules; they
# are not re-exported here so ``import msstemg.sst`` keeps naming the module

__version__ = "0.1.0"
