"""Command-line entry point: convert, gen, train, eval, embed, experiments.

Exit codes: 0 success, 1 bad input, 2 internal invariant failure.
Every output file is a pure function of the flags and seeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import bondgraph, datagen, experiments, gcn, metrics, netlist
from .errors import InputError, InvariantError
from .featurize import CapRepr, EdgeMode, FeatureConfig, IndRepr
from .netlist import Mode

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2


@dataclass
class RunConfig:
    """Everything a run needs; loadable from a JSON file via ``--config``."""

    feature: FeatureConfig = field(default_factory=FeatureConfig.optimal)
    train: gcn.TrainConfig = field(default_factory=gcn.TrainConfig)
    suite: str = datagen.Suite.Continuous7.value
    per_class: int = 857
    seed: int = 0
    train_fraction: float = 0.7
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        named = [str(Path(p)) for p in self.paths.values() if p]
        if len(named) != len(set(named)):
            raise InputError(f"run paths must be distinct: {sorted(named)}")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {"feature", "train", "suite", "per_class", "seed", "train_fraction", "paths"}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        try:
            train = gcn.TrainConfig(**d.get("train", {}))
            return cls(FeatureConfig.from_dict(d.get("feature", {})), train,
                       datagen.Suite(d.get("suite", cls.suite)).value,
                       int(d.get("per_class", cls.per_class)), int(d.get("seed", cls.seed)),
                       float(d.get("train_fraction", cls.train_fraction)), dict(d.get("paths", {})))
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad run config: {exc}") from None


def _load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return RunConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None


def _figure_path(out, suffix: str) -> Path:
    out = Path(out)
    return out.with_name(out.stem + suffix)


# ---------------------------------------------------------------------------
# commands

def cmd_convert(args) -> int:
    try:
        text = Path(args.netlist).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {args.netlist}: {exc}") from None
    circuit = netlist.parse_netlist(text)
    if args.mode:
        circuit = replace(circuit, mode=Mode(args.mode))
    graph = bondgraph.to_bond_graph(circuit)
    blob = json.dumps(bondgraph.to_dict(graph), indent=2) + "\n"
    if args.out:
        _write(args.out, blob)
    else:
        sys.stdout.write(blob)
    print(bondgraph.summary(graph), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def _feature_config(args, base: FeatureConfig) -> FeatureConfig:
    return FeatureConfig(
        EdgeMode(args.edge_mode) if args.edge_mode else base.edge_mode,
        CapRepr(args.cap_repr) if args.cap_repr else base.cap_repr,
        IndRepr(args.ind_repr) if args.ind_repr else base.ind_repr,
        args.phase_column or base.include_phase_column,
        args.frequency_column or base.include_frequency_column,
    )


def cmd_gen(args) -> int:
    run = _load_config(args.config)
    suite = args.suite or run.suite
    per_class = args.per_class if args.per_class is not None else run.per_class
    seed = args.seed if args.seed is not None else run.seed
    classes = [int(c) for c in args.classes.split(",")] if args.classes else None
    config = _feature_config(args, run.feature)
    ds = datagen.generate(suite, per_class, seed, config, classes=classes,
                          train_fraction=run.train_fraction)
    datagen.save(ds, args.out)
    print(f"wrote {len(ds)} graphs ({len(ds.class_names)} classes, d_in={ds.feature_dim}) to {args.out}")
    return EXIT_OK


def _train_config(args, base: gcn.TrainConfig) -> gcn.TrainConfig:
    updates = {
        "epochs": args.epochs, "learning_rate": args.lr, "hidden": args.hidden,
        "layers": args.layers, "batch_size": args.batch_size, "seed": args.seed,
    }
    return replace(base, **{k: v for k, v in updates.items() if v is not None})


def _split(ds: datagen.Dataset, fraction: float):
    return datagen.split(ds, fraction, ds.seed)


def cmd_train(args) -> int:
    run = _load_config(args.config)
    config = _train_config(args, run.train)
    ds = datagen.load(args.data)
    tr, te = _split(ds, run.train_fraction)

    def log(epoch, loss, tr_acc, te_acc):
        if args.verbose and (epoch % args.log_every == 0 or epoch == config.epochs):
            print(f"epoch {epoch:5d}  loss {loss:.4f}  train {tr_acc:.4f}  test {te_acc:.4f}",
                  file=sys.stderr)

    model, history = gcn.train(tr, te, config.seed, config, log=log)
    if not model.is_finite():
        raise InvariantError("training produced non-finite parameters")
    gcn.save_model(model, args.out, ds.class_names)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "train_loss", "train_accuracy", "test_accuracy"])
    for row in history.rows():
        w.writerow([row[0], *(repr(float(v)) for v in row[1:])])
    hist_path = _figure_path(args.out, "_history.csv")
    _write(hist_path, buf.getvalue())
    if not args.no_figures:
        from .plotting import plot_history
        plot_history(history, _figure_path(args.out, "_history.svg"))
    print(f"final train accuracy {history.train_accuracy[-1]:.4f}, "
          f"test accuracy {history.test_accuracy[-1]:.4f}; model saved to {args.out}")
    return EXIT_OK


def _eval_data(args, run: RunConfig):
    ds = datagen.load(args.data)
    if args.split == "all":
        return ds
    tr, te = _split(ds, run.train_fraction)
    return tr if args.split == "train" else te


def _load_checked(path, data):
    model, classes = gcn.load_model(path)
    fp = data.feature_config.fingerprint()
    if model.feature_fingerprint and model.feature_fingerprint != fp:
        raise InputError("checkpoint was trained on a different feature configuration")
    if model.d_in != data.feature_dim:
        raise InputError(f"checkpoint expects d_in={model.d_in}, dataset has {data.feature_dim}")
    return model, classes or data.class_names


def cmd_eval(args) -> int:
    run = _load_config(args.config)
    data = _eval_data(args, run)
    model, classes = _load_checked(args.model, data)
    report = metrics.evaluate(model, data, classes, with_embeddings=False)
    _write(args.out, report.to_json())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\pred", *classes])
    for name, row in zip(classes, report.confusion.tolist()):
        w.writerow([name, *row])
    _write(_figure_path(args.out, "_confusion.csv"), buf.getvalue())
    if not args.no_figures:
        from .plotting import plot_confusion
        plot_confusion(report.confusion, _figure_path(args.out, "_confusion.svg"), classes)
    print(report.table())
    return EXIT_OK


def cmd_embed(args) -> int:
    run = _load_config(args.config)
    data = _eval_data(args, run)
    model, classes = _load_checked(args.model, data)
    report = metrics.evaluate(model, data, classes, with_embeddings=True)
    _write(args.out, metrics.embeddings_csv(report.embeddings))
    if not args.no_figures:
        from .plotting import plot_embedding
        pts = [(x, y) for x, y, _, _ in report.embeddings]
        plot_embedding(pts, [t for _, _, t, _ in report.embeddings],
                       _figure_path(args.out, ".svg"), classes)
    note = " (degenerate: all embeddings identical)" if report.degenerate_embedding else ""
    print(f"wrote {len(report.embeddings)} points to {args.out}{note}")
    return EXIT_OK


def cmd_experiments(args) -> int:
    config = gcn.TrainConfig(epochs=args.epochs, seed=args.seed)
    results = experiments.run_set(args.set, per_class=args.per_class, seed=args.seed,
                                  train_config=config)
    print(experiments.format_results(args.set, results))
    if args.out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["configuration", "classes", "train_accuracy", "test_accuracy"])
        for r in results:
            w.writerow([r.name, " ".join(map(str, r.classes)), repr(r.train_accuracy),
                        repr(r.test_accuracy)])
        _write(args.out, buf.getvalue())
        if not args.no_figures:
            from .plotting import plot_experiments
            plot_experiments(args.set, results, _figure_path(args.out, ".svg"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circuitgnn",
                                description="Bond-graph GCN classifier for electrical circuits.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="netlist -> bond graph JSON")
    c.add_argument("netlist")
    c.add_argument("--mode", choices=[m.value for m in Mode], help="override the .mode directive")
    c.add_argument("--out", help="write JSON here instead of stdout")
    c.set_defaults(func=cmd_convert)

    g = sub.add_parser("gen", help="generate a labelled dataset (JSON lines)")
    g.add_argument("--suite", choices=[s.value for s in datagen.Suite])
    g.add_argument("--per-class", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--classes", help="comma-separated template ids, e.g. 1,2,3")
    g.add_argument("--edge-mode", choices=[e.value for e in EdgeMode])
    g.add_argument("--cap-repr", choices=[e.value for e in CapRepr])
    g.add_argument("--ind-repr", choices=[e.value for e in IndRepr])
    g.add_argument("--phase-column", action="store_true")
    g.add_argument("--frequency-column", action="store_true")
    g.add_argument("--config", help="JSON run config")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a GCN on a dataset file")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--hidden", type=int)
    t.add_argument("--layers", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--config")
    t.add_argument("--verbose", action="store_true")
    t.add_argument("--log-every", type=int, default=50)
    t.add_argument("--no-figures", action="store_true")
    t.set_defaults(func=cmd_train)

    for name, func, helptext in (("eval", cmd_eval, "confusion matrix and per-class scores"),
                                 ("embed", cmd_embed, "2-D PCA of graph readouts")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--data", required=True)
        e.add_argument("--model", required=True)
        e.add_argument("--out", required=True)
        e.add_argument("--split", choices=["test", "train", "all"], default="test")
        e.add_argument("--config")
        e.add_argument("--no-figures", action="store_true")
        e.set_defaults(func=func)

    x = sub.add_parser("experiments", help="run one feature-representation experiment set")
    x.add_argument("--set", type=int, required=True, choices=sorted(experiments.EXPERIMENT_SETS))
    x.add_argument("--per-class", type=int, default=857)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--epochs", type=int, default=200)
    x.add_argument("--out", help="CSV of per-configuration accuracies")
    x.add_argument("--no-figures", action="store_true")
    x.set_defaults(func=cmd_experiments)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "per_class", None) is not None and args.per_class < 1:
        print("error: --per-class must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantError, FloatingPointError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
