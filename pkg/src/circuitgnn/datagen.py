"""
Built-in circuit families, randomized sampling, dataset persistence and splits.

Two suites are provided:

* ``continuous7``: seven resonant RLC topologies of order 2 to 4.
* ``switching6``: Buck, Boost and Buck-Boost converters, each in CCM and DCM.

Component values are drawn log-uniformly; every sample gets its own RNG
seeded from ``(seed, suite, class_id, index)`` so the output does not depend
on generation order. Duty ratios are quantized to multiples of 2**-10,
which keeps ``d1 + d2 + d3 == 1`` exact in binary floating point.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .bondgraph import BondGraph, to_bond_graph
from .errors import DatasetIOError, DegenerateSplit, SchemaVersionMismatch
from .featurize import FeatureConfig, GraphSample, NormalizationBase, featurize, fit_normalization
from .netlist import Circuit, Mode, parse_netlist

SCHEMA_VERSION = 1
DUTY_QUANTUM = 2.0 ** -10


class Suite(enum.Enum):
    Continuous7 = "continuous7"
    Switching6 = "switching6"


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float
    log: bool = True

    def draw(self, rng: np.random.Generator) -> float:
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return float(rng.uniform(self.lo, self.hi))


R_RANGE = Range(1.0, 100.0)
L_RANGE = Range(1e-6, 1e-3)
C_RANGE = Range(1e-9, 10e-6)
SRC_RANGE = Range(1.0, 100.0)
# excitation frequency relative to the tank resonance
DETUNE_RANGE = Range(0.1, 10.0)
SWITCHING_FREQ_RANGE = Range(10e3, 500e3)


def _lc_resonance(l_eq: float, c_eq: float) -> float:
    return 1.0 / (2 * math.pi * math.sqrt(l_eq * c_eq))


def _series(*caps: float) -> float:
    return 1.0 / sum(1.0 / c for c in caps)


@dataclass(frozen=True)
class ClassTemplate:
    name: str
    class_id: int
    netlist_skeleton: str
    sample_ranges: dict[str, Range]
    resonance: Callable[[dict[str, float]], float]
    mode: Mode = Mode.Continuous
    description: str = ""

    def instantiate(self, params: dict[str, float]) -> Circuit:
        text = self.netlist_skeleton.format(**{k: repr(v) for k, v in params.items()})
        return replace(parse_netlist(text), class_label=self.class_id)


def _continuous(class_id, name, skeleton, ranges, resonance, description):
    ranges = dict(ranges, detune=DETUNE_RANGE)
    skeleton = skeleton.strip() + "\n.freq {freq}\n.mode CONT\n"
    return ClassTemplate(name, class_id, skeleton, ranges, resonance, Mode.Continuous, description)


# Classes 2 and 3 share one connection pattern and differ only in how the
# tank is sized (overlapping capacitor bands), so they are the confusable pair.
CONTINUOUS_TEMPLATES = (
    _continuous(
        0, "lc_lowpass",
        "V1 1 0 {V1}\nL1 1 2 {L1}\nC1 2 0 {C1}\nR1 2 0 {R1}",
        {"V1": SRC_RANGE, "L1": L_RANGE, "C1": C_RANGE, "R1": R_RANGE},
        lambda p: _lc_resonance(p["L1"], p["C1"]),
        "2nd order: series L, shunt C with parallel load",
    ),
    _continuous(
        1, "cl_highpass",
        "V1 1 0 {V1}\nC1 1 2 {C1}\nL1 2 0 {L1}\nR1 2 0 {R1}",
        {"V1": SRC_RANGE, "C1": C_RANGE, "L1": L_RANGE, "R1": R_RANGE},
        lambda p: _lc_resonance(p["L1"], p["C1"]),
        "2nd order near-dual of class 0: series C, shunt L with parallel load",
    ),
    _continuous(
        2, "series_rlc_hf",
        "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 3 {L1}\nC1 3 0 {C1}",
        {"V1": SRC_RANGE, "R1": R_RANGE, "L1": L_RANGE, "C1": Range(1e-9, 2.5e-9)},
        lambda p: _lc_resonance(p["L1"], p["C1"]),
        "2nd order series RLC, small resonant capacitor",
    ),
    _continuous(
        3, "series_rlc_lf",
        "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 3 {L1}\nC1 3 0 {C1}",
        {"V1": SRC_RANGE, "R1": R_RANGE, "L1": L_RANGE, "C1": Range(2.4e-9, 10e-9)},
        lambda p: _lc_resonance(p["L1"], p["C1"]),
        "2nd order series RLC sharing class 2's connection, larger capacitor",
    ),
    _continuous(
        4, "lclc_ladder",
        "V1 1 0 {V1}\nR1 1 2 {R1}\nL1 2 3 {L1}\nC1 3 0 {C1}\nL2 3 4 {L2}\nC2 4 0 {C2}\nR2 4 0 {R2}",
        {"V1": SRC_RANGE, "R1": R_RANGE, "L1": L_RANGE, "C1": C_RANGE, "L2": L_RANGE,
         "C2": C_RANGE, "R2": R_RANGE},
        lambda p: _lc_resonance(p["L1"], p["C1"]),
        "4th order LCLC ladder",
    ),
    _continuous(
        5, "lcc",
        "V1 1 0 {V1}\nL1 1 2 {L1}\nC1 2 3 {C1}\nC2 3 0 {C2}\nR1 3 0 {R1}",
        {"V1": SRC_RANGE, "L1": L_RANGE, "C1": C_RANGE, "C2": C_RANGE, "R1": R_RANGE},
        lambda p: _lc_resonance(p["L1"], _series(p["C1"], p["C2"])),
        "3rd order LCC: series L and C, parallel C across the load",
    ),
    _continuous(
        6, "cllc",
        "V1 1 0 {V1}\nC1 1 2 {C1}\nL1 2 3 {L1}\nL2 3 0 {L2}\nC2 3 4 {C2}\nR1 4 0 {R1}",
        {"V1": SRC_RANGE, "C1": C_RANGE, "L1": L_RANGE, "L2": L_RANGE, "C2": C_RANGE,
         "R1": R_RANGE},
        lambda p: _lc_resonance(p["L1"], p["C1"]),
        "4th order CLLC: series C-L, shunt magnetizing L, secondary C to the load",
    ),
)

_BUCK = "V1 1 0 {V1}\nS1 1 2 {D1}\nS2 2 0 {D2}\nL1 2 3 {L1}\nC1 3 0 {C1}\nR1 3 0 {R1}"
_BOOST = "V1 1 0 {V1}\nL1 1 2 {L1}\nS1 2 0 {D1}\nS2 2 3 {D2}\nC1 3 0 {C1}\nR1 3 0 {R1}"
_BUCK_BOOST = "V1 1 0 {V1}\nS1 1 2 {D1}\nL1 2 0 {L1}\nS2 2 3 {D2}\nC1 3 0 {C1}\nR1 3 0 {R1}"

_CONVERTER_RANGES = {
    "V1": SRC_RANGE, "L1": Range(10e-6, 1e-3), "C1": Range(1e-6, 10e-6), "R1": R_RANGE,
    "freq": SWITCHING_FREQ_RANGE,
}


def _converter(class_id, name, skeleton, mode):
    skeleton = skeleton + "\n.freq {freq}\n.mode " + mode.value + "\n"
    return ClassTemplate(name, class_id, skeleton, dict(_CONVERTER_RANGES),
                         lambda p: _lc_resonance(p["L1"], p["C1"]), mode,
                         f"{name} converter")


SWITCHING_TEMPLATES = (
    _converter(0, "buck_ccm", _BUCK, Mode.CCM),
    _converter(1, "boost_ccm", _BOOST, Mode.CCM),
    _converter(2, "buck_boost_ccm", _BUCK_BOOST, Mode.CCM),
    _converter(3, "buck_dcm", _BUCK, Mode.DCM),
    _converter(4, "boost_dcm", _BOOST, Mode.DCM),
    _converter(5, "buck_boost_dcm", _BUCK_BOOST, Mode.DCM),
)

TEMPLATES = {Suite.Continuous7: CONTINUOUS_TEMPLATES, Suite.Switching6: SWITCHING_TEMPLATES}


def _quantize_duty(d: float) -> float:
    return round(d / DUTY_QUANTUM) * DUTY_QUANTUM


def sample_params(template: ClassTemplate, rng: np.random.Generator) -> dict[str, float]:
    params = {name: r.draw(rng) for name, r in template.sample_ranges.items()}
    if template.mode is Mode.CCM:
        d = _quantize_duty(rng.uniform(0.2, 0.8))
        params["D1"], params["D2"] = d, 1.0 - d
    elif template.mode is Mode.DCM:
        d1 = _quantize_duty(rng.uniform(0.2, 0.6))
        d2 = _quantize_duty(rng.uniform(0.1, 0.9 - d1))
        params["D1"], params["D2"] = d1, d2
    if "detune" in params:
        params["freq"] = template.resonance(params) * params.pop("detune")
    return params


def sample_graph(template: ClassTemplate, rng: np.random.Generator) -> BondGraph:
    params = sample_params(template, rng)
    graph = to_bond_graph(template.instantiate(params))
    return replace(graph, resonance=template.resonance(params))


def sample_rng(seed: int, suite: Suite, class_id: int, index: int) -> np.random.Generator:
    suite_no = list(Suite).index(suite)
    return np.random.default_rng([seed, suite_no, class_id, index])


# ---------------------------------------------------------------------------
# datasets

@dataclass(eq=False)
class Dataset:
    samples: list[GraphSample]
    class_names: list[str]
    normalization: NormalizationBase
    feature_config: FeatureConfig
    seed: int
    suite: str = ""

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=int)

    @property
    def feature_dim(self) -> int:
        return self.feature_config.feature_dim

    def subset(self, indices) -> Dataset:
        return replace(self, samples=[self.samples[i] for i in indices])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.class_names == other.class_names
                and self.normalization.to_dict() == other.normalization.to_dict()
                and self.feature_config == other.feature_config
                and self.seed == other.seed and self.suite == other.suite
                and len(self.samples) == len(other.samples)
                and all(a == b for a, b in zip(self.samples, other.samples)))


def generate(suite: Suite | str, per_class: int, seed: int,
             config: FeatureConfig | None = None, classes=None,
             train_fraction: float = 0.7) -> Dataset:
    """Sample ``per_class`` graphs from each template of ``suite``.

    ``classes`` restricts the suite to the listed template ids; labels are
    renumbered 0..k-1 in that order. The normalization base is fitted on the
    portion that ``split(dataset, train_fraction, seed)`` assigns to training.
    """
    suite = Suite(suite)
    config = config or FeatureConfig.optimal()
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    templates = TEMPLATES[suite]
    if classes is not None:
        templates = tuple(templates[c] for c in classes)

    graphs: list[BondGraph] = []
    labels: list[int] = []
    for label, tpl in enumerate(templates):
        for index in range(per_class):
            graphs.append(sample_graph(tpl, sample_rng(seed, suite, tpl.class_id, index)))
            labels.append(label)

    try:
        train_idx, _ = split_indices(labels, train_fraction, seed)
        fit_on = [graphs[i] for i in train_idx]
    except DegenerateSplit:
        fit_on = graphs
    base = fit_normalization(fit_on, config)
    samples = [featurize(g, base, config, label=y) for g, y in zip(graphs, labels)]
    return Dataset(samples, [t.name for t in templates], base, config, seed, suite.value)


def split_indices(labels, train_fraction: float, seed: int) -> tuple[list[int], list[int]]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng([seed, 0x5B17])
    train: list[int] = []
    test: list[int] = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_train = int(math.floor(len(idx) * train_fraction + 0.5))
        if n_train == 0 or n_train == len(idx):
            raise DegenerateSplit(
                f"class {int(c)} with {len(idx)} samples leaves an empty side at fraction {train_fraction}")
        train.extend(idx[:n_train].tolist())
        test.extend(idx[n_train:].tolist())
    train = [train[i] for i in rng.permutation(len(train))]
    test = [test[i] for i in rng.permutation(len(test))]
    return train, test


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified, seeded, disjoint split."""
    train_idx, test_idx = split_indices(dataset.labels, train_fraction, seed)
    return dataset.subset(train_idx), dataset.subset(test_idx)


# ---------------------------------------------------------------------------
# persistence (JSON lines: header, then one graph per line)

def _header(dataset: Dataset) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "suite": dataset.suite,
        "classes": list(dataset.class_names),
        "feature_config": dataset.feature_config.to_dict(),
        "normalization": dataset.normalization.to_dict(),
        "seed": dataset.seed,
        "feature_dim": dataset.feature_dim,
        "count": len(dataset.samples),
    }


def sample_record(k: int, s: GraphSample) -> dict:
    n = s.node_count
    iu, ju = np.triu_indices(n, k=1)
    w = s.adjacency[iu, ju]
    nz = np.flatnonzero(w)
    edges = [[int(iu[t]), int(ju[t]), float(w[t])] for t in nz]
    return {"id": k, "label": int(s.label), "n": n, "x": s.x.tolist(), "edges": edges}


def dumps(dataset: Dataset) -> str:
    lines = [json.dumps(_header(dataset))]
    lines.extend(json.dumps(sample_record(k, s)) for k, s in enumerate(dataset.samples))
    return "\n".join(lines) + "\n"


def save(dataset: Dataset, path) -> None:
    try:
        Path(path).write_text(dumps(dataset), encoding="utf-8")
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def load(path) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def loads(text: str) -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaVersionMismatch("empty dataset file")
    try:
        header = json.loads(lines[0])
        records = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise SchemaVersionMismatch(f"malformed dataset file: {exc}") from None
    if not isinstance(header, dict) or header.get("schema") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"expected schema {SCHEMA_VERSION}, got {header.get('schema')!r}"
                                    if isinstance(header, dict) else "header is not an object")
    try:
        config = FeatureConfig.from_dict(header["feature_config"])
        base = NormalizationBase.from_dict(header["normalization"])
        classes = list(header["classes"])
        seed = int(header["seed"])
        count = int(header["count"])
        dim = int(header["feature_dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaVersionMismatch(f"bad header: {exc}") from None
    if dim != config.feature_dim:
        raise SchemaVersionMismatch(f"header feature_dim {dim} does not match config ({config.feature_dim})")
    if len(records) != count:
        raise SchemaVersionMismatch(f"header promises {count} graphs, file holds {len(records)}")

    samples = []
    for k, rec in enumerate(records):
        try:
            n = int(rec["n"])
            x = np.array(rec["x"], dtype=float).reshape(n, -1) if n else np.zeros((0, dim))
            adj = np.zeros((n, n))
            for i, j, w in rec["edges"]:
                adj[i, j] = adj[j, i] = w
            label = int(rec["label"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SchemaVersionMismatch(f"graph {k}: {exc}") from None
        if x.shape[1] != dim:
            raise SchemaVersionMismatch(f"graph {k}: feature rows of width {x.shape[1]}, header says {dim}")
        if not 0 <= label < len(classes):
            raise SchemaVersionMismatch(f"graph {k}: label {label} outside {len(classes)} classes")
        samples.append(GraphSample(x, adj, label))
    return Dataset(samples, classes, base, config, seed, str(header.get("suite", "")))
