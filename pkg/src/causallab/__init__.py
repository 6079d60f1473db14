"""Causal-structure classification for pairs of discrete variables.

Given the exact joint probability table of two discrete variables X and
Y, this package decides which of six acyclic causal structures most
plausibly generated it: independence, X->Y, Y->X, pure confounding by a
latent H, or a directed edge together with a confounder.  The generative
model assumes cause distributions and mechanism conditionals are drawn
independently from Dirichlet hyperpriors; the direction question has an
analytical likelihood-ratio answer, the confounding questions are handled
by trained feed-forward classifiers, and an experiment harness measures
how robust both are when the true hyperpriors are Dirichlet mixtures.
"""

from .dirichlet import (
    DirichletMixture,
    DirichletParams,
    HyperpriorSpec,
    dirichlet_density,
    flat_hyperprior,
    flat_mixture,
    mixture_density,
    sample_dirichlet,
    sample_from_mixture,
    sample_hyperprior,
    sample_mixture_params,
)
from .direction import (
    BaselineErrorEstimate,
    LikelihoodRatioResult,
    classify_direction,
    estimate_baseline_error,
    forward_jacobian,
    log_det_forward,
    lr_binary,
    lr_general,
    lr_with_hyperprior,
)
from .errors import (
    BoundaryEvaluationError,
    CausalLabError,
    DatasetFormatError,
    DegenerateMarginalError,
    ModelFormatError,
    TrainingDivergedError,
    UndefinedConditionalError,
    ValidationError,
)
from .experiments import (
    HeatmapGrid,
    HeatmapGridSpec,
    SweepCell,
    SweepConfig,
    SweepResult,
    render_lr_heatmaps,
    run_component_sweep,
    run_confounding_sweep,
    run_direction_sweep,
    run_six_class_experiment,
    train_structure_classifier,
)
from .generate import (
    HyperpriorDescriptor,
    LabeledDataset,
    LabeledDistribution,
    build_dataset,
    load_dataset,
    sample_batch,
    sample_instance,
    save_dataset,
)
from .mlp import (
    ConfusionMatrix,
    MlpModel,
    TrainConfig,
    TrainReport,
    evaluate,
    featurize,
    forward,
    init_model,
    load_model,
    loss_and_gradient,
    save_model,
    train,
)
from .rng import stream
from .structures import ALL_STRUCTURES, CausalStructure
from .tables import (
    ConditionalTable,
    JointTable,
    SimplexVector,
    compose,
    conditional,
    marginal_x,
    marginal_y,
    mutual_information,
    outer,
    transpose,
)

__version__ = "0.1.0"
