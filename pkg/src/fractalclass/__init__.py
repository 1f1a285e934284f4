"""Classification of multifractal cascade series by their Hurst exponent."""

__version__ = "0.1.0"

from .calibration import (CalibrationTable, ConfidenceInterval, build_calibration,
                          classify_by_interval, confidence_interval)
from .cascade import CascadeParams, alpha_for_hurst, generate_cascade, hurst_for_alpha
from .classes import HurstClassScheme, eleven_class_scheme, two_class_scheme
from .features import FeatureVector, extract_features
from .forest import ForestModel, TreeNode, best_split, class_score, fit_forest, fit_tree, predict
from .mfdfa import (MfdfaConfig, MfdfaResult, estimate_hurst, fit_h_of_q, fluctuation_function,
                    mfdfa, profile, segment_fluctuation)
