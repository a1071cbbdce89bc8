"""Adversarial tuning of the parameter priors of a stochastic scene generator."""
from ._kernels import BACKEND
from .discriminator import ClassifierModel, TrainConfig, accuracy, init_model, score_batch, train
from .errors import (AdvTuneError, BinningMismatch, ConfigError, DegenerateTable,
                     DimensionMismatch, EmptyDataset, LengthMismatch, NonFiniteLoss,
                     RetryExhausted)
from .kde import likelihood_tables, weighted_kde
from .priors import (Dim, JointPrior, ParameterSpace, PriorTable, bayes_update, sample_theta,
                     sample_vectors, scene_space, table_kl, uniform_prior)
from .renderer import FeatureImage, LabelImage, RenderConfig, render, render_labels
from .scene_model import GibbsConfig, ObjectMark, Region, SceneLayout, SceneParameters, sample_layout
from .stats import class_pixel_proportions, histogram_kl, intensity_histogram
from .tuning import GeneratorConfig, LoopConfig, TuningReport, generate, run, run_iteration

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ClassifierModel", "TrainConfig", "accuracy", "init_model", "score_batch",
    "train", "AdvTuneError", "BinningMismatch", "ConfigError", "DegenerateTable",
    "DimensionMismatch", "EmptyDataset", "LengthMismatch", "NonFiniteLoss", "RetryExhausted",
    "likelihood_tables", "weighted_kde", "Dim", "JointPrior", "ParameterSpace", "PriorTable",
    "bayes_update", "sample_theta", "sample_vectors", "scene_space", "table_kl",
    "uniform_prior", "FeatureImage", "LabelImage", "RenderConfig", "render", "render_labels",
    "GibbsConfig", "ObjectMark", "Region", "SceneLayout", "SceneParameters", "sample_layout",
    "class_pixel_proportions", "histogram_kl", "intensity_histogram", "GeneratorConfig",
    "LoopConfig", "TuningReport", "generate", "run", "run_iteration",
]
