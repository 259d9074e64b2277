"""Classify electrical circuits with a graph convolutional network over bond graphs.

Pipeline: netlist text -> Circuit -> BondGraph -> GraphSample -> GcnModel.
"""

from .bondgraph import BgNodeKind, BondGraph, to_bond_graph
from .datagen import Dataset, Suite, generate, split
from .featurize import CapRepr, EdgeMode, FeatureConfig, IndRepr, featurize, fit_normalization
from .gcn import GcnModel, TrainConfig, forward, init_model, normalize_adjacency, train
from .metrics import evaluate, scores_from_confusion
from .netlist import Circuit, Element, ElementKind, Mode, parse_netlist

__version__ = "0.1.0"

__all__ = [
    "BgNodeKind", "BondGraph", "CapRepr", "Circuit", "Dataset", "EdgeMode", "Element",
    "ElementKind", "FeatureConfig", "GcnModel", "IndRepr", "Mode", "Suite", "TrainConfig",
    "evaluate", "featurize", "fit_normalization", "forward", "generate", "init_model",
    "normalize_adjacency", "parse_netlist", "scores_from_confusion", "split", "to_bond_graph",
    "train",
]
