"""Distillation pipeline: label the training inputs with a trained network,
fit a CART tree on those labels, optionally prune against the network's
predictions on the validation split.

Trees are fitted on raw (unstandardized) features by default so their
thresholds read in original units; the network always sees the
standardized view. ``tree_features="standardized"`` flips that.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from treedistill import mlp as nn
from treedistill import tree as dtree
from treedistill.data import standardize_apply, standardize_fit
from treedistill.errors import InputError
from treedistill.tree import DtParams

TREE_FEATURE_MODES = ("raw", "standardized")


@dataclass
class ExtractionResult:
    model: "nn.MlpModel"
    tree: "dtree.DecisionTree"
    dt_params: DtParams
    provenance: dict


def extract(model, train_set, val_set, dt_params, prune=True, tree_features="raw", provenance=None):
    """Fit a tree to the model's hard predictions on the training inputs.

    The model's labels come from the standardized features (statistics
    fitted on ``train_set``); the tree sees raw or standardized features
    per ``tree_features``. With ``prune``, reduced-error pruning runs
    against the model's predictions on ``val_set``.
    """
    if tree_features not in TREE_FEATURE_MODES:
        raise InputError(f"tree_features must be one of {TREE_FEATURE_MODES}")
    if train_set.X.shape[1] != model.architecture.input_dim:
        raise InputError(
            f"dataset has {train_set.X.shape[1]} features, model expects "
            f"{model.architecture.input_dim}"
        )
    if val_set.X.shape[1] != train_set.X.shape[1]:
        raise InputError("train and validation sets disagree on feature count")

    stats = standardize_fit(train_set)
    X_train_std = standardize_apply(stats, train_set.X)
    y_hat = nn.predict_classes(model, X_train_std)

    X_tree = train_set.X if tree_features == "raw" else X_train_std
    tree = dtree.fit_tree(
        X_tree,
        y_hat,
        dt_params,
        n_classes=model.architecture.n_classes,
        feature_names=train_set.feature_names,
    )

    if prune:
        X_val_std = standardize_apply(stats, val_set.X)
        val_target = nn.predict_classes(model, X_val_std)
        X_val_tree = val_set.X if tree_features == "raw" else X_val_std
        tree = dtree.prune_tree(tree, X_val_tree, val_target)

    info = {
        "dataset": train_set.name,
        "tree_features": tree_features,
        "pruned": bool(prune),
        "dt_params": {"min_samples_leaf": dt_params.min_samples_leaf, "max_depth": dt_params.max_depth},
    }
    if provenance:
        info.update(provenance)
    return ExtractionResult(model=model, tree=tree, dt_params=dt_params, provenance=info)


def train_and_extract(train_set, val_set, arch, cfg, reg, dt_params, prune=True, tree_features="raw"):
    """Train on the standardized train split, then extract; one sweep cell."""
    stats = standardize_fit(train_set)
    std_train = train_set.replace_matrix(standardize_apply(stats, train_set.X))
    model, history = nn.train(std_train, arch, cfg, reg)
    result = extract(
        model,
        train_set,
        val_set,
        dt_params,
        prune=prune,
        tree_features=tree_features,
        provenance={
            "train_seed": cfg.seed,
            "regularizer": reg.to_dict(),
            "train_config": cfg.to_dict(),
            "final_objective": history.objective[-1] if len(history) else None,
        },
    )
    result.provenance["history_len"] = len(history)
    return result, history


def save_result(result, out_dir, train_config=None, regularizer=None, class_names=None):
    """Persist one extraction as a directory of documents.

    Writes model.json, tree.json, tree.dot, rules.txt and provenance.json.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nn.save_model(out / "model.json", result.model, train_config, regularizer)
    with open(out / "tree.json", "w", encoding="utf-8") as f:
        json.dump(dtree.tree_to_document(result.tree), f)
    (out / "tree.dot").write_text(
        dtree.export_dot(result.tree, class_names=class_names), encoding="utf-8"
    )
    (out / "rules.txt").write_text(
        dtree.export_rules(result.tree, class_names=class_names), encoding="utf-8"
    )
    with open(out / "provenance.json", "w", encoding="utf-8") as f:
        json.dump(result.provenance, f, indent=2, sort_keys=True)
    return out


def load_result(out_dir):
    """Rehydrate a persisted extraction directory."""
    out = Path(out_dir)
    model, cfg, reg = nn.load_model(out / "model.json")
    with open(out / "tree.json", encoding="utf-8") as f:
        tree = dtree.tree_from_document(json.load(f))
    with open(out / "provenance.json", encoding="utf-8") as f:
        provenance = json.load(f)
    params = provenance.get("dt_params", {})
    dt_params = DtParams(
        min_samples_leaf=int(params.get("min_samples_leaf", 1)),
        max_depth=params.get("max_depth"),
    )
    return ExtractionResult(model=model, tree=tree, dt_params=dt_params, provenance=provenance)
