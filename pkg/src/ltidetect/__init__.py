"""Online anomaly detection on multi-seasonal series via local trend inconsistency."""

from .core import LabelTrack, NormalizationParams, PredictedSequence, TimeSeries, load_csv, normalize
from .decomp import DecompositionConfig, SeasonalProfile, fit_decomposition
from .errors import ConfigError, DataError, LTIError, NumericError
from .forecast import ForecastModel, NetworkTopology, TrainingConfig, train
from .lti import dfdist, lsdist, lti_matrix, lti_scalar, wlsdist
from .score import Detector, ScoringParams, calibrate, phi
from .evaluation import roc_auc

__version__ = "0.1.0"
