"""The twelve feature-representation experiments, grouped in four sets of three."""

from __future__ import annotations

from dataclasses import dataclass

from . import datagen
from .featurize import CapRepr, EdgeMode, FeatureConfig, IndRepr
from .gcn import TrainConfig, train

# classes 2 and 3 differ only in capacitor sizing, class 1 in topology
SUBSET_3 = (1, 2, 3)


@dataclass(frozen=True)
class Experiment:
    name: str
    config: FeatureConfig
    classes: tuple[int, ...] = SUBSET_3


def _cfg(edge, cap=CapRepr.Raw, ind=IndRepr.Raw) -> FeatureConfig:
    return FeatureConfig(edge, cap, ind)


EXPERIMENT_SETS: dict[int, tuple[Experiment, ...]] = {
    1: (
        Experiment("edge=frequency", _cfg(EdgeMode.Frequency)),
        Experiment("edge=ones", _cfg(EdgeMode.Ones)),
        Experiment("edge=normalized_frequency", _cfg(EdgeMode.NormalizedFrequency)),
    ),
    2: (
        Experiment("edge=ones, C raw", _cfg(EdgeMode.Ones)),
        Experiment("edge=ones, C->1/C", _cfg(EdgeMode.Ones, CapRepr.Inverse)),
        Experiment("edge=normalized_frequency, C->-1/C",
                   _cfg(EdgeMode.NormalizedFrequency, CapRepr.NegativeInverse)),
    ),
    3: (
        Experiment("edge=scaling_factor, C->1/C", _cfg(EdgeMode.ScalingFactor, CapRepr.Inverse)),
        Experiment("edge=ones, C->1/C", _cfg(EdgeMode.Ones, CapRepr.Inverse)),
        Experiment("edge=ones, C->1/C, L->1/L", _cfg(EdgeMode.Ones, CapRepr.Inverse, IndRepr.Inverse)),
    ),
    4: (
        Experiment("4 classes, optimal", FeatureConfig.optimal(), (0, 1, 2, 3)),
        Experiment("5 classes, optimal", FeatureConfig.optimal(), (0, 1, 2, 3, 4)),
        Experiment("7 classes, optimal", FeatureConfig.optimal(), tuple(range(7))),
    ),
}


@dataclass
class ExperimentResult:
    name: str
    classes: tuple[int, ...]
    train_accuracy: float
    test_accuracy: float
    history: object = None


def run_experiment(exp: Experiment, per_class: int, seed: int, train_config: TrainConfig,
                   train_fraction: float = 0.7) -> ExperimentResult:
    ds = datagen.generate(datagen.Suite.Continuous7, per_class, seed, exp.config,
                          classes=exp.classes, train_fraction=train_fraction)
    tr, te = datagen.split(ds, train_fraction, seed)
    _, history = train(tr, te, seed, train_config)
    return ExperimentResult(exp.name, exp.classes, history.train_accuracy[-1],
                            history.test_accuracy[-1], history)


def run_set(set_no: int, per_class: int = 857, seed: int = 0,
            train_config: TrainConfig | None = None, log=None) -> list[ExperimentResult]:
    if set_no not in EXPERIMENT_SETS:
        raise ValueError(f"experiment set must be 1..4, got {set_no}")
    train_config = train_config or TrainConfig(epochs=200)
    results = []
    for exp in EXPERIMENT_SETS[set_no]:
        res = run_experiment(exp, per_class, seed, train_config)
        if log is not None:
            log(res)
        results.append(res)
    return results


def format_results(set_no: int, results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"experiment set {set_no}",
             f"{'configuration':<{width}}  {'train_acc':>9}  {'test_acc':>8}"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.train_accuracy:9.4f}  {r.test_accuracy:8.4f}")
    return "\n".join(lines)
