"""clarkit: complement-Laplacian regularization for graph neural networks.

A desk-scale spectral graph-learning toolkit: immutable graphs and their
Laplacians, complement-edge sampling, dense eigendecomposition and spectral
filters, a minimal reverse-mode autodiff engine with GCN/MLP backbones,
differentiable graph regularizers, seeded training loops, block-model data
generation, and reproducible experiment runners with CSV/JSON/figure output.
"""

from .graphs import Graph, LaplacianKind, build_graph, homophily_ratio, laplacian
from .sampling import SampleKind, SampleStrategy, sample_complement
from .spectral import EigenSystem, FilterKind, ResponseKind, artificial_filter, eig_sym, frequency_response
from .autodiff import Tape, Tensor, grad_check
from .regularizers import RegKind, RegularizerSpec, clar_loss, dropedge_transform
from .datasets import Dataset, SbmSpec, generate_sbm, load_dataset
from .training import Adam, SplitSpec, TrainConfig, TrainResult, fit_filter, make_split, train

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "LaplacianKind",
    "build_graph",
    "homophily_ratio",
    "laplacian",
    "SampleKind",
    "SampleStrategy",
    "sample_complement",
    "EigenSystem",
    "FilterKind",
    "ResponseKind",
    "artificial_filter",
    "eig_sym",
    "frequency_response",
    "Tape",
    "Tensor",
    "grad_check",
    "RegKind",
    "RegularizerSpec",
    "clar_loss",
    "dropedge_transform",
    "Dataset",
    "SbmSpec",
    "generate_sbm",
    "load_dataset",
    "Adam",
    "SplitSpec",
    "TrainConfig",
    "TrainResult",
    "fit_filter",
    "make_split",
    "train",
]
