"""Robust geometric metric learning on products of SPD manifolds."""

from .baselines import gmml
from .bench import ExperimentConfig, ResultRecord, cross_validate
from .costs import PairDifferences, RgmlParams, build_pairs, rgml_cost, rgml_egrad
from .data import LabeledDataset, load_dataset
from .errors import InvalidInput, NotPositiveDefinite
from .manifold import ProductPoint, ProductTangent
from .optim import SolverOptions, SolverTrace, fit_rgml, minimize

__version__ = "0.1.0"
