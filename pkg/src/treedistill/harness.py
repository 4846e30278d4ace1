"""Experiment orchestration: strength-grid sweeps, best-model selection,
multi-seed fidelity runs, multi-initialization consistency runs, and the
standalone decision-tree baseline.

Grid cells are independent pure computations over immutable inputs; this
implementation runs them sequentially in grid order, which also keeps
the output CSV byte-reproducible (the seconds column aside).
"""

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from treedistill import mlp as nn
from treedistill import tree as dtree
from treedistill.data import (
    SplitSpec,
    resolve_dataset,
    split_with_manifest,
    standardize_apply,
    standardize_fit,
)
from treedistill.errors import DivergenceError, InputError
from treedistill.extraction import extract, train_and_extract
from treedistill.metrics import ConsistencyReport, FidelityReport, auc, consistency, fidelity
from treedistill.regularizers import RegularizerSpec
from treedistill.tree import DtParams

FITNESS_CSV_HEADER = ["lambda1", "lambda_orth", "norm", "apl", "mlp_auc", "dt_auc", "fidelity", "nodes", "seconds"]

LAMBDA1_RANGE = (0.001, 0.1)
LAMBDA_ORTH_RANGE = (0.0001, 2.0)


@dataclass(frozen=True)
class DatasetPreset:
    """Per-dataset training protocol (hidden widths, optimizer, tree smoothing)."""

    hidden_sizes: tuple
    batch_size: int
    learning_rate: float
    epochs: int
    min_samples_leaf: int
    prune: bool


PRESETS = {
    "parabola": DatasetPreset((100, 100, 10), 100, 0.001, 1000, 1, False),
    "iris": DatasetPreset((8,), 10, 0.01, 50, 5, True),
    "breast_cancer": DatasetPreset((64, 32), 10, 0.001, 10, 15, True),
    "pima": DatasetPreset((24,), 128, 0.01, 10, 30, True),
    "titanic": DatasetPreset((100, 50, 25), 16, 0.005, 10, 35, True),
    "mushroom": DatasetPreset((16,), 10, 0.005, 25, 45, True),
    "adult": DatasetPreset((32, 16), 32, 0.005, 10, 75, True),
    "diabetes": DatasetPreset((32, 16, 8), 512, 0.01, 50, 250, True),
}


def preset_train_config(preset, seed=0):
    return nn.TrainConfig(
        learning_rate=preset.learning_rate,
        batch_size=preset.batch_size,
        epochs=preset.epochs,
        seed=seed,
    )


def default_grid(ortho_norm="l1_norm", n_lambda1=6, n_lambda_orth=6,
                 lambda1_range=LAMBDA1_RANGE, lambda_orth_range=LAMBDA_ORTH_RANGE):
    """Log-spaced cross product of strengths over the standard search ranges."""
    l1s = np.geomspace(*lambda1_range, n_lambda1)
    lorths = np.geomspace(*lambda_orth_range, n_lambda_orth)
    return tuple((float(a), float(b), ortho_norm) for a in l1s for b in lorths)


def l1_only_grid(n=8, lambda1_range=LAMBDA1_RANGE):
    return tuple((float(a), 0.0, "none") for a in np.geomspace(*lambda1_range, n))


@dataclass(frozen=True)
class SweepConfig:
    dataset: dict
    hidden_sizes: tuple
    train: "nn.TrainConfig"
    grid: tuple
    dt_params: DtParams
    split: SplitSpec = SplitSpec()
    prune: bool = True
    tree_features: str = "raw"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        object.__setattr__(self, "grid", tuple(tuple(cell) for cell in self.grid))
        if not self.grid:
            raise InputError("sweep grid must be non-empty")
        for l1, lorth, norm in self.grid:
            RegularizerSpec(lambda1=l1, lambda_orth=lorth, ortho_norm=norm)

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "hidden_sizes": list(self.hidden_sizes),
            "train": self.train.to_dict(),
            "grid": [list(cell) for cell in self.grid],
            "dt_params": {
                "min_samples_leaf": self.dt_params.min_samples_leaf,
                "max_depth": self.dt_params.max_depth,
            },
            "split": {"ratios": list(self.split.ratios), "seed": self.split.seed},
            "prune": self.prune,
            "tree_features": self.tree_features,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            dataset=d["dataset"],
            hidden_sizes=tuple(d["hidden_sizes"]),
            train=nn.TrainConfig.from_dict(d["train"]),
            grid=tuple(tuple(cell) for cell in d["grid"]),
            dt_params=DtParams(
                min_samples_leaf=int(d["dt_params"].get("min_samples_leaf", 1)),
                max_depth=d["dt_params"].get("max_depth"),
            ),
            split=SplitSpec(
                ratios=tuple(d.get("split", {}).get("ratios", (0.6, 0.2, 0.2))),
                seed=int(d.get("split", {}).get("seed", 0)),
            ),
            prune=bool(d.get("prune", True)),
            tree_features=d.get("tree_features", "raw"),
        )


@dataclass(frozen=True)
class FitnessPoint:
    lambda1: float
    lambda_orth: float
    norm: str
    apl: float
    mlp_auc: float
    dt_auc: float
    fidelity: float
    nodes: int
    seconds: float
    failed: bool = False

    def csv_row(self):
        return [
            repr(float(self.lambda1)),
            repr(float(self.lambda_orth)),
            self.norm,
            repr(float(self.apl)),
            repr(float(self.mlp_auc)),
            repr(float(self.dt_auc)),
            repr(float(self.fidelity)),
            repr(float(self.nodes)) if math.isnan(self.nodes) else str(int(self.nodes)),
            repr(float(self.seconds)),
        ]


@dataclass
class SweepResult:
    baseline: FitnessPoint
    points: list
    manifest: dict

    @property
    def all_points(self):
        return [self.baseline, *self.points]


def time_run(fn, *args, **kwargs):
    """Run a closure, returning (result, wall-clock seconds)."""
    started = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - started


def _evaluate_cell(result, train_set, test_set, stats):
    X_test_std = standardize_apply(stats, test_set.X)
    scores = nn.class_scores(result.model, X_test_std)
    mlp_auc = auc(scores, test_set.y)
    tree_probs = dtree.predict_proba_tree(result.tree, test_set.X)
    dt_auc = auc(tree_probs[:, 1] if result.tree.n_classes == 2 else tree_probs, test_set.y)
    return {
        "apl": dtree.apl(result.tree, train_set.X),
        "mlp_auc": mlp_auc,
        "dt_auc": dt_auc,
        "fidelity": fidelity(result.tree, result.model, test_set.X, X_test_std),
        "nodes": dtree.node_count(result.tree),
    }


def run_sweep(cfg):
    """One train-and-extract per grid cell, plus the unregularized baseline row.

    Every cell (baseline included) starts from the same initialization
    seed. A diverging cell is recorded as a failed point with NaN
    metrics; the sweep continues.
    """
    dataset = resolve_dataset(cfg.dataset)
    train_set, val_set, test_set, split_manifest = split_with_manifest(dataset, cfg.split)
    stats = standardize_fit(train_set)
    arch = nn.MlpArchitecture(
        input_dim=dataset.X.shape[1], hidden_sizes=cfg.hidden_sizes, n_classes=dataset.n_classes
    )

    def run_cell(reg):
        (result, _), seconds = time_run(
            train_and_extract,
            train_set,
            val_set,
            arch,
            cfg.train,
            reg,
            cfg.dt_params,
            prune=cfg.prune,
            tree_features=cfg.tree_features,
        )
        metrics = _evaluate_cell(result, train_set, test_set, stats)
        return FitnessPoint(
            lambda1=reg.lambda1,
            lambda_orth=reg.lambda_orth,
            norm=reg.ortho_norm,
            seconds=seconds,
            **metrics,
        )

    baseline = run_cell(RegularizerSpec())
    points = []
    for l1, lorth, norm in cfg.grid:
        reg = RegularizerSpec(lambda1=l1, lambda_orth=lorth, ortho_norm=norm)
        try:
            points.append(run_cell(reg))
        except DivergenceError:
            points.append(
                FitnessPoint(
                    lambda1=l1,
                    lambda_orth=lorth,
                    norm=norm,
                    apl=math.nan,
                    mlp_auc=math.nan,
                    dt_auc=math.nan,
                    fidelity=math.nan,
                    nodes=math.nan,
                    seconds=math.nan,
                    failed=True,
                )
            )

    manifest = {
        "config": cfg.to_dict(),
        "dataset": dataset.name,
        "split": split_manifest,
        "init_seed": cfg.train.seed,
        "baseline_mlp_auc": baseline.mlp_auc,
    }
    return SweepResult(baseline=baseline, points=points, manifest=manifest)


def fitness_csv(points):
    """Render fitness points as the canonical CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FITNESS_CSV_HEADER)
    for p in points:
        writer.writerow(p.csv_row())
    return buf.getvalue()


def write_fitness_csv(path, points):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(fitness_csv(points))


def read_fitness_csv(path):
    """Parse a fitness CSV back into points (inverse of write_fitness_csv)."""
    points = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != FITNESS_CSV_HEADER:
            raise InputError(f"unexpected fitness CSV header: {header}")
        for row in reader:
            apl, mlp_auc, dt_auc, fid, nodes, seconds = (float(v) for v in row[3:])
            points.append(
                FitnessPoint(
                    lambda1=float(row[0]),
                    lambda_orth=float(row[1]),
                    norm=row[2],
                    apl=apl,
                    mlp_auc=mlp_auc,
                    dt_auc=dt_auc,
                    fidelity=fid,
                    nodes=math.nan if math.isnan(nodes) else int(nodes),
                    seconds=seconds,
                    failed=math.isnan(mlp_auc),
                )
            )
    return points


@dataclass(frozen=True)
class Selection:
    point: FitnessPoint
    qualified: bool


def select_best(points, baseline_auc):
    """Smallest-APL point whose network AUC reaches the baseline.

    Ties break to higher fidelity, then lower combined strength. When no
    point qualifies, the max-AUC point is returned flagged unqualified.
    """
    usable = [p for p in points if not (p.failed or math.isnan(p.mlp_auc) or math.isnan(p.apl))]
    if not usable:
        raise InputError("select_best needs at least one successful point")
    qualifying = [p for p in usable if p.mlp_auc >= baseline_auc]
    if qualifying:
        best = min(qualifying, key=lambda p: (p.apl, -p.fidelity, p.lambda1 + p.lambda_orth))
        return Selection(point=best, qualified=True)
    return Selection(point=max(usable, key=lambda p: p.mlp_auc), qualified=False)


@dataclass
class FidelityExperimentResult:
    """Per-seed refit results; pruned is the headline report, the unpruned
    twin is kept alongside since either could be the published variant."""

    pruned: FidelityReport
    unpruned: FidelityReport
    apl_per_run: tuple
    split_seeds: tuple

    @property
    def apl_mean(self):
        return float(np.mean(self.apl_per_run))


def run_fidelity_experiment(dataset, hidden_sizes, train_cfg, reg, dt_params,
                            n_seeds=5, prune=True, tree_features="raw",
                            ratios=(0.6, 0.2, 0.2)):
    """Refit over n seeded resplits with fixed strengths; report test fidelity.

    The initialization seed stays fixed (train_cfg.seed); only the split
    seed varies. Any run failure aborts the experiment.
    """
    dataset = resolve_dataset(dataset) if isinstance(dataset, dict) else dataset
    arch = nn.MlpArchitecture(
        input_dim=dataset.X.shape[1], hidden_sizes=tuple(hidden_sizes), n_classes=dataset.n_classes
    )
    pruned_runs, unpruned_runs, apls = [], [], []
    seeds = tuple(range(n_seeds))
    for seed in seeds:
        train_set, val_set, test_set, _ = split_with_manifest(dataset, SplitSpec(ratios, seed))
        stats = standardize_fit(train_set)
        std_train = train_set.replace_matrix(standardize_apply(stats, train_set.X))
        model, _ = nn.train(std_train, arch, train_cfg, reg)

        unpruned = extract(model, train_set, val_set, dt_params, prune=False,
                           tree_features=tree_features)
        final = extract(model, train_set, val_set, dt_params, prune=True,
                        tree_features=tree_features) if prune else unpruned

        X_test_std = standardize_apply(stats, test_set.X)
        unpruned_runs.append(fidelity(unpruned.tree, model, test_set.X, X_test_std))
        pruned_runs.append(fidelity(final.tree, model, test_set.X, X_test_std))
        apls.append(dtree.apl(final.tree, train_set.X))
    return FidelityExperimentResult(
        pruned=FidelityReport.from_runs(pruned_runs),
        unpruned=FidelityReport.from_runs(unpruned_runs),
        apl_per_run=tuple(apls),
        split_seeds=seeds,
    )


def run_consistency_experiment(dataset, hidden_sizes, train_cfg, reg, dt_params,
                               n_sessions=10, init_seeds=None, split_seed=0,
                               prune=True, tree_features="raw"):
    """Train n sessions with different initializations on one fixed split,
    extract one tree per session, and measure unanimity on the test split."""
    if n_sessions < 2:
        raise InputError("need at least two sessions")
    dataset = resolve_dataset(dataset) if isinstance(dataset, dict) else dataset
    if init_seeds is None:
        init_seeds = tuple(range(n_sessions))
    if len(init_seeds) != n_sessions:
        raise InputError("init_seeds must provide one seed per session")

    train_set, val_set, test_set, _ = split_with_manifest(dataset, SplitSpec(seed=split_seed))
    stats = standardize_fit(train_set)
    std_train = train_set.replace_matrix(standardize_apply(stats, train_set.X))
    arch = nn.MlpArchitecture(
        input_dim=dataset.X.shape[1], hidden_sizes=tuple(hidden_sizes), n_classes=dataset.n_classes
    )
    X_test_std = standardize_apply(stats, test_set.X)

    trees, fidelities, apls = [], [], []
    for seed in init_seeds:
        cfg = replace(train_cfg, seed=seed)
        model, _ = nn.train(std_train, arch, cfg, reg)
        result = extract(model, train_set, val_set, dt_params, prune=prune,
                         tree_features=tree_features)
        trees.append(result.tree)
        fidelities.append(fidelity(result.tree, model, test_set.X, X_test_std))
        apls.append(dtree.apl(result.tree, train_set.X))

    return ConsistencyReport(
        consistency=consistency(trees, test_set.X),
        n_sessions=n_sessions,
        apl_mean=float(np.mean(apls)),
        fidelity=FidelityReport.from_runs(fidelities),
    )


def run_standalone_dt_baseline(dataset, min_samples_leaf=1, depths=(None, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10),
                               split_spec=SplitSpec(), prune=True):
    """Trees fitted on true labels, one per max_depth, pruned on true
    validation labels; DT AUC occupies the performance axis."""
    dataset = resolve_dataset(dataset) if isinstance(dataset, dict) else dataset
    train_set, val_set, test_set, _ = split_with_manifest(dataset, split_spec)
    points = []
    for max_depth in depths:
        def build():
            tree = dtree.fit_tree(
                train_set.X,
                train_set.y,
                DtParams(min_samples_leaf=min_samples_leaf, max_depth=max_depth),
                n_classes=dataset.n_classes,
                feature_names=train_set.feature_names,
            )
            if prune:
                tree = dtree.prune_tree(tree, val_set.X, val_set.y)
            return tree

        tree, seconds = time_run(build)
        probs = dtree.predict_proba_tree(tree, test_set.X)
        dt_auc = auc(probs[:, 1] if dataset.n_classes == 2 else probs, test_set.y)
        points.append(
            FitnessPoint(
                lambda1=0.0,
                lambda_orth=0.0,
                norm="dt",
                apl=dtree.apl(tree, train_set.X),
                mlp_auc=math.nan,
                dt_auc=dt_auc,
                fidelity=math.nan,
                nodes=dtree.node_count(tree),
                seconds=seconds,
            )
        )
    return points


def format_fidelity_table(rows):
    """Rows of (dataset, label, FidelityExperimentResult) as aligned text."""
    lines = [f"{'dataset':24s} {'regularizer':18s} {'fidelity':>14s} {'unpruned':>14s} {'apl':>8s}"]
    for dataset, label, result in rows:
        lines.append(
            f"{dataset:24s} {label:18s} {str(result.pruned):>14s} "
            f"{str(result.unpruned):>14s} {result.apl_mean:8.2f}"
        )
    return "\n".join(lines) + "\n"


def format_consistency_table(rows):
    """Rows of (dataset, lambda1, lambda_orth, ConsistencyReport) as text."""
    lines = [
        f"{'dataset':24s} {'lambda1':>9s} {'lambda_orth':>12s} {'apl':>8s} "
        f"{'consistency':>12s} {'fidelity':>14s}"
    ]
    for dataset, lambda1, lambda_orth, report in rows:
        lines.append(
            f"{dataset:24s} {lambda1:9.4g} {lambda_orth:12.4g} {report.apl_mean:8.2f} "
            f"{report.consistency:12.2f} {str(report.fidelity):>14s}"
        )
    return "\n".join(lines) + "\n"
