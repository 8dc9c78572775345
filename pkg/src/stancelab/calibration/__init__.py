from .features import FeatureVector, extract_features, feature_matrix, load_polarity_lexicon, rationale_polarity
from .rescorer import (
    CalibratorModel,
    TrainConfig,
    loss_and_gradient,
    max_stable_learning_rate,
    recall_balancing_offsets,
    train_weights,
)
from .fallback import consensus_fallback
from .layer import CounterfactualCalibrator, calibrate, calibrate_all, fit_calibrator
