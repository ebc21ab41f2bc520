"""Rank candidate source models by how well their soft labels separate the target classes."""

from .dataio import LogitMatrix, PredictorWeights, TargetLabels, load_logits, predict_logits
from .gaussian import GaussianFit, fit_gaussian, mahalanobis_sq
from .modeldb import ModelCandidate, ModelDatabase, list_models, open_database, register_model
from .pipeline import RunConfig, rank_database
from .separation import ModelSD, model_sd, pairwise_sd, rank_candidates, regression_sd
from .softlabel import drop_last_dimension, extended_softmax, partition_by_label

__version__ = "0.1.0"
