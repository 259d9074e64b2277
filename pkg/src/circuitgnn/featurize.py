"""
Bond graph -> numeric graph sample.

Row layout of the node-feature matrix::

    [V, I, L, R, C, 1, 0, 1s, 0s | value | phase? | frequency?]

The value column holds the (optionally inverted) component value divided
by a per-category maximum fitted on the training graphs.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bondgraph import SWITCHED, BgNode, BgNodeKind, BondGraph
from .errors import DivisionByZero, EmptyDataset, MissingCategoryInBase


class EdgeMode(enum.Enum):
    Ones = "ones"
    Frequency = "frequency"
    NormalizedFrequency = "normalized_frequency"
    ScalingFactor = "scaling_factor"


class CapRepr(enum.Enum):
    Raw = "raw"
    Inverse = "inverse"
    NegativeInverse = "negative_inverse"


class IndRepr(enum.Enum):
    Raw = "raw"
    Inverse = "inverse"


@dataclass(frozen=True)
class FeatureConfig:
    edge_mode: EdgeMode = EdgeMode.Ones
    cap_repr: CapRepr = CapRepr.Inverse
    ind_repr: IndRepr = IndRepr.Raw
    include_phase_column: bool = False
    include_frequency_column: bool = False

    @classmethod
    def optimal(cls) -> FeatureConfig:
        return cls(EdgeMode.Ones, CapRepr.Inverse, IndRepr.Raw)

    @property
    def feature_dim(self) -> int:
        return N_KINDS + 1 + int(self.include_phase_column) + int(self.include_frequency_column)

    def to_dict(self) -> dict:
        return {
            "edge_mode": self.edge_mode.value,
            "cap_repr": self.cap_repr.value,
            "ind_repr": self.ind_repr.value,
            "include_phase_column": self.include_phase_column,
            "include_frequency_column": self.include_frequency_column,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FeatureConfig:
        return cls(
            EdgeMode(d.get("edge_mode", "ones")),
            CapRepr(d.get("cap_repr", "inverse")),
            IndRepr(d.get("ind_repr", "raw")),
            bool(d.get("include_phase_column", False)),
            bool(d.get("include_frequency_column", False)),
        )

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# one-hot column order; the first seven follow the element-ID table
ONE_HOT_ORDER = (
    BgNodeKind.Se, BgNodeKind.Sf, BgNodeKind.I, BgNodeKind.R, BgNodeKind.C,
    BgNodeKind.Junction1, BgNodeKind.Junction0, BgNodeKind.Junction1s, BgNodeKind.Junction0s,
)
N_KINDS = len(ONE_HOT_ORDER)
_POSITION = {k: i for i, k in enumerate(ONE_HOT_ORDER)}

# normalization categories (element kinds that carry a value)
CATEGORY = {
    BgNodeKind.Se: "V", BgNodeKind.Sf: "I", BgNodeKind.I: "L",
    BgNodeKind.R: "R", BgNodeKind.C: "C",
}
FREQUENCY_KEY = "frequency"


def one_hot(kind: BgNodeKind) -> np.ndarray:
    v = np.zeros(N_KINDS)
    v[_POSITION[kind]] = 1.0
    return v


def transform_value(kind: BgNodeKind, value: float, config: FeatureConfig) -> float:
    if kind is BgNodeKind.C and config.cap_repr is not CapRepr.Raw:
        if value == 0:
            raise DivisionByZero("inverse of zero capacitance")
        inv = 1.0 / value
        return -inv if config.cap_repr is CapRepr.NegativeInverse else inv
    if kind is BgNodeKind.I and config.ind_repr is IndRepr.Inverse:
        if value == 0:
            raise DivisionByZero("inverse of zero inductance")
        return 1.0 / value
    return value


@dataclass
class NormalizationBase:
    """Per-category max-abs scale, stored with the dataset."""

    maxima: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(sorted(self.maxima.items()))

    @classmethod
    def from_dict(cls, d: dict) -> NormalizationBase:
        return cls({str(k): float(v) for k, v in d.items()})


def resonance_of(graph: BondGraph) -> float:
    """Resonance used for normalized frequency; falls back to the first L and C."""
    if graph.resonance is not None:
        return graph.resonance
    ls = [n.value for n in graph.nodes if n.kind is BgNodeKind.I]
    cs = [n.value for n in graph.nodes if n.kind is BgNodeKind.C]
    if not ls or not cs:
        raise MissingCategoryInBase("normalized frequency needs an inductor and a capacitor")
    return 1.0 / (2 * math.pi * math.sqrt(ls[0] * cs[0]))


def _shared_edge_weight(graph: BondGraph, base: NormalizationBase, config: FeatureConfig) -> float:
    """Weight of every non-switching bond under the frequency-based edge modes.

    ``Frequency`` is scaled onto the dataset's frequency base (so it lies in
    [0, 1]); ``NormalizedFrequency`` is the dimensionless ratio f / f_res as is.
    """
    if config.edge_mode is EdgeMode.Frequency:
        return min(_scale(base, FREQUENCY_KEY, graph.frequency), 1.0)
    if config.edge_mode is EdgeMode.NormalizedFrequency:
        return graph.frequency / resonance_of(graph)
    return 1.0


def fit_normalization(graphs, config: FeatureConfig) -> NormalizationBase:
    graphs = list(graphs)
    if not graphs:
        raise EmptyDataset("cannot fit normalization on zero graphs")
    maxima: dict[str, float] = {}

    def bump(key: str, v: float) -> None:
        v = abs(v)
        if v > maxima.get(key, 0.0):
            maxima[key] = v

    for g in graphs:
        for n in g.nodes:
            cat = CATEGORY.get(n.kind)
            if cat is not None and n.value != 0:
                bump(cat, transform_value(n.kind, n.value, config))
            if n.frequency:
                bump(FREQUENCY_KEY, n.frequency)
        if g.frequency:
            bump(FREQUENCY_KEY, g.frequency)
    return NormalizationBase(maxima)


def _scale(base: NormalizationBase, key: str, v: float) -> float:
    if v == 0:
        return 0.0
    m = base.maxima.get(key)
    if m is None:
        raise MissingCategoryInBase(f"normalization base has no entry for {key!r}")
    return v / m


@dataclass(eq=False)
class GraphSample:
    x: np.ndarray
    adjacency: np.ndarray
    label: int

    @property
    def node_count(self) -> int:
        return self.x.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.x.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphSample):
            return NotImplemented
        return (self.label == other.label and np.array_equal(self.x, other.x)
                and np.array_equal(self.adjacency, other.adjacency))

    def permuted(self, perm) -> GraphSample:
        """Relabel nodes so that new node ``i`` is old node ``perm[i]``."""
        perm = np.asarray(perm)
        return GraphSample(self.x[perm], self.adjacency[np.ix_(perm, perm)], self.label)


def _node_value(n: BgNode, base: NormalizationBase, config: FeatureConfig) -> float:
    cat = CATEGORY.get(n.kind)
    if cat is None or n.value == 0:
        return 0.0
    return _scale(base, cat, transform_value(n.kind, n.value, config))


def featurize(graph: BondGraph, base: NormalizationBase, config: FeatureConfig,
              label: int | None = None) -> GraphSample:
    n = len(graph.nodes)
    x = np.zeros((n, config.feature_dim))
    values = np.zeros(n)
    for node in graph.nodes:
        i = node.id
        x[i, _POSITION[node.kind]] = 1.0
        values[i] = _node_value(node, base, config)
        col = N_KINDS + 1
        if config.include_phase_column:
            x[i, col] = node.phase / (2 * math.pi)
            col += 1
        if config.include_frequency_column:
            x[i, col] = _scale(base, FREQUENCY_KEY, node.frequency)

    adj = np.zeros((n, n))
    shared = _shared_edge_weight(graph, base, config)
    kinds = [node.kind for node in graph.nodes]
    scaling = config.edge_mode is EdgeMode.ScalingFactor
    normalized = config.edge_mode is EdgeMode.NormalizedFrequency
    for e in graph.edges:
        if kinds[e.a] in SWITCHED or kinds[e.b] in SWITCHED:
            w = e.weight
        elif scaling and (kinds[e.a] in CATEGORY or kinds[e.b] in CATEGORY):
            # the element's normalized value moves onto its bond
            w = min(max(abs(values[e.a]), abs(values[e.b])), 1.0)
        elif normalized and BgNodeKind.C in (kinds[e.a], kinds[e.b]):
            # capacitive bonds scale like reactance, 1 / (f / f_res)
            w = 1.0 / shared
        else:
            w = shared
        adj[e.a, e.b] = adj[e.b, e.a] = w
    if scaling:
        values[:] = 0.0
    x[:, N_KINDS] = values

    if label is None:
        label = graph.class_label if graph.class_label is not None else -1
    return GraphSample(x, adj, int(label))

