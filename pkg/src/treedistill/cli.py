"""Command-line front end.

Every subcommand reads an optional JSON config file plus overriding
flags, writes its artifacts under --out-dir, and exits nonzero with a
diagnostic on any package error.
"""

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from treedistill import data as datamod
from treedistill import extraction, harness, mlp, tree as dtree
from treedistill.data import SplitSpec, split_with_manifest, standardize_apply, standardize_fit
from treedistill.errors import ConfigError, InputError, TreedistillError
from treedistill.harness import PRESETS
from treedistill.regularizers import RegularizerSpec
from treedistill.tree import DtParams


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def dataset_ref(args, config):
    if getattr(args, "dataset", None):
        name = args.dataset
        if name in datamod.builtin_dataset_names():
            return {"kind": "builtin", "name": name}
        if getattr(args, "label_column", None) is None:
            raise ConfigError(
                f"--dataset {name!r} is not a builtin ({datamod.builtin_dataset_names()}); "
                "pass a CSV path together with --label-column"
            )
        return {
            "kind": "csv",
            "path": name,
            "label_column": args.label_column,
            "categorical_columns": config.get("categorical_columns", ()),
        }
    if "dataset" in config:
        return config["dataset"]
    raise ConfigError("no dataset given (use --dataset or the config's dataset entry)")


def preset_for(ref):
    if ref.get("kind") in ("builtin", "parabola"):
        return PRESETS.get(ref.get("name", "parabola"))
    return None


def resolve_protocol(args, config):
    """Merge preset, config file and flags into one experiment protocol."""
    ref = dataset_ref(args, config)
    preset = preset_for(ref)

    hidden = config.get("hidden_sizes") or (preset.hidden_sizes if preset else None)
    if hidden is None:
        raise ConfigError("hidden_sizes needed (config entry, or use a builtin dataset preset)")

    train_cfg = dict(config.get("train", {}))
    if preset is not None:
        train_cfg.setdefault("learning_rate", preset.learning_rate)
        train_cfg.setdefault("batch_size", preset.batch_size)
        train_cfg.setdefault("epochs", preset.epochs)
    train_cfg.setdefault("seed", 0)
    for key in ("learning_rate", "batch_size", "epochs"):
        if key not in train_cfg:
            raise ConfigError(f"train.{key} needed (config entry, or use a builtin preset)")
    if getattr(args, "seed", None) is not None:
        train_cfg["seed"] = args.seed
    cfg = mlp.TrainConfig.from_dict(train_cfg)

    reg_cfg = dict(config.get("regularizer", {}))
    if getattr(args, "lambda1", None) is not None:
        reg_cfg["lambda1"] = args.lambda1
    if getattr(args, "lambda_orth", None) is not None:
        reg_cfg["lambda_orth"] = args.lambda_orth
    if getattr(args, "ortho_norm", None) is not None:
        reg_cfg["ortho_norm"] = args.ortho_norm
    if reg_cfg.get("lambda_orth", 0.0) and "ortho_norm" not in reg_cfg:
        reg_cfg["ortho_norm"] = "l1_norm"
    reg = RegularizerSpec.from_dict(reg_cfg)

    dt_cfg = dict(config.get("dt", {}))
    if preset is not None:
        dt_cfg.setdefault("min_samples_leaf", preset.min_samples_leaf)
    if getattr(args, "min_samples_leaf", None) is not None:
        dt_cfg["min_samples_leaf"] = args.min_samples_leaf
    if getattr(args, "max_depth", None) is not None:
        dt_cfg["max_depth"] = args.max_depth
    dt_params = DtParams(
        min_samples_leaf=int(dt_cfg.get("min_samples_leaf", 1)),
        max_depth=dt_cfg.get("max_depth"),
    )

    prune = config.get("prune")
    if prune is None:
        prune = preset.prune if preset else True
    if getattr(args, "no_prune", False):
        prune = False

    split_cfg = config.get("split", {})
    split_spec = SplitSpec(
        ratios=tuple(split_cfg.get("ratios", (0.6, 0.2, 0.2))),
        seed=int(split_cfg.get("seed", 0)),
    )
    return {
        "ref": ref,
        "hidden_sizes": tuple(hidden),
        "train": cfg,
        "reg": reg,
        "dt_params": dt_params,
        "prune": bool(prune),
        "split": split_spec,
        "config": config,
    }


def out_dir(args):
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_toy(args):
    ds = datamod.generate_parabola(args.n, args.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([*ds.feature_names, "label"])
        for x, y in zip(ds.X, ds.y):
            writer.writerow([repr(float(v)) for v in x] + [ds.class_names[y]])
    print(f"wrote {args.out}: {len(ds)} points, {ds.source['n_flipped']} labels flipped")
    return 0


def cmd_train(args):
    proto = resolve_protocol(args, load_config(args.config))
    dataset = datamod.resolve_dataset(proto["ref"])
    train_set, _, _, manifest = split_with_manifest(dataset, proto["split"])
    stats = standardize_fit(train_set)
    std_train = train_set.replace_matrix(standardize_apply(stats, train_set.X))
    arch = mlp.MlpArchitecture(
        input_dim=dataset.X.shape[1],
        hidden_sizes=proto["hidden_sizes"],
        n_classes=dataset.n_classes,
    )
    model, history = mlp.train(std_train, arch, proto["train"], proto["reg"])

    out = out_dir(args)
    mlp.save_model(out / "model.json", model, proto["train"], proto["reg"])
    with open(out / "history.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "data_loss", "penalty", "objective", "train_accuracy"])
        for e in range(len(history)):
            writer.writerow(
                [e, history.data_loss[e], history.penalty[e], history.objective[e], history.train_accuracy[e]]
            )
    with open(out / "run.json", "w", encoding="utf-8") as f:
        json.dump({"dataset": proto["ref"], "split": manifest, "hidden_sizes": list(proto["hidden_sizes"])}, f, indent=2)
    final = history.train_accuracy[-1] if len(history) else float("nan")
    print(f"trained {len(history)} epochs; final train accuracy {final:.3f}; model at {out/'model.json'}")
    return 0


def cmd_extract(args):
    proto = resolve_protocol(args, load_config(args.config))
    dataset = datamod.resolve_dataset(proto["ref"])
    train_set, val_set, _, _ = split_with_manifest(dataset, proto["split"])
    model, cfg, reg = mlp.load_model(args.model)
    result = extraction.extract(
        model, train_set, val_set, proto["dt_params"], prune=proto["prune"]
    )
    out = extraction.save_result(
        result, out_dir(args), train_config=cfg, regularizer=reg, class_names=dataset.class_names
    )
    print(
        f"extracted tree: {dtree.node_count(result.tree)} nodes, "
        f"train APL {dtree.apl(result.tree, train_set.X):.2f}; artifacts in {out}"
    )
    return 0


def cmd_sweep(args):
    config = load_config(args.config)
    proto = resolve_protocol(args, config)
    grid = config.get("grid")
    if grid:
        grid = tuple(tuple(cell) for cell in grid)
    else:
        norm = getattr(args, "ortho_norm", None) or "l1_norm"
        grid = harness.default_grid(norm)
    sweep_cfg = harness.SweepConfig(
        dataset=proto["ref"],
        hidden_sizes=proto["hidden_sizes"],
        train=proto["train"],
        grid=grid,
        dt_params=proto["dt_params"],
        split=proto["split"],
        prune=proto["prune"],
    )
    sweep = harness.run_sweep(sweep_cfg)
    out = out_dir(args)
    harness.write_fitness_csv(out / "fitness.csv", sweep.all_points)
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(sweep.manifest, f, indent=2, sort_keys=True)
    selection = harness.select_best(sweep.points, sweep.baseline.mlp_auc)
    with open(out / "best.json", "w", encoding="utf-8") as f:
        json.dump(
            {
                "qualified": selection.qualified,
                "lambda1": selection.point.lambda1,
                "lambda_orth": selection.point.lambda_orth,
                "norm": selection.point.norm,
                "apl": selection.point.apl,
                "mlp_auc": selection.point.mlp_auc,
                "fidelity": selection.point.fidelity,
            },
            f,
            indent=2,
        )
    failed = sum(p.failed for p in sweep.points)
    flag = "" if selection.qualified else " (no point reached the baseline; max-AUC fallback)"
    print(
        f"swept {len(sweep.points)} cells ({failed} failed); baseline AUC {sweep.baseline.mlp_auc:.4f}; "
        f"best APL {selection.point.apl:.2f}{flag}; results in {out}"
    )
    return 0


def cmd_fidelity(args):
    config = load_config(args.config)
    proto = resolve_protocol(args, config)
    n_seeds = int(config.get("n_seeds", 5))
    result = harness.run_fidelity_experiment(
        proto["ref"],
        proto["hidden_sizes"],
        proto["train"],
        proto["reg"],
        proto["dt_params"],
        n_seeds=n_seeds,
        prune=proto["prune"],
    )
    label = f"l1={proto['reg'].lambda1:g},orth={proto['reg'].lambda_orth:g}"
    table = harness.format_fidelity_table([(proto["ref"].get("name", "dataset"), label, result)])
    out = out_dir(args)
    (out / "fidelity.txt").write_text(table, encoding="utf-8")
    with open(out / "fidelity.json", "w", encoding="utf-8") as f:
        json.dump(
            {
                "pruned": {"mean": result.pruned.mean, "std": result.pruned.std, "per_run": result.pruned.per_run},
                "unpruned": {"mean": result.unpruned.mean, "std": result.unpruned.std, "per_run": result.unpruned.per_run},
                "apl_per_run": result.apl_per_run,
                "split_seeds": result.split_seeds,
            },
            f,
            indent=2,
        )
    print(table, end="")
    return 0


def cmd_consistency(args):
    config = load_config(args.config)
    proto = resolve_protocol(args, config)
    n_sessions = int(config.get("n_sessions", 10))
    report = harness.run_consistency_experiment(
        proto["ref"],
        proto["hidden_sizes"],
        proto["train"],
        proto["reg"],
        proto["dt_params"],
        n_sessions=n_sessions,
        split_seed=proto["split"].seed,
        prune=proto["prune"],
    )
    table = harness.format_consistency_table(
        [(proto["ref"].get("name", "dataset"), proto["reg"].lambda1, proto["reg"].lambda_orth, report)]
    )
    out = out_dir(args)
    (out / "consistency.txt").write_text(table, encoding="utf-8")
    with open(out / "consistency.json", "w", encoding="utf-8") as f:
        json.dump(
            {
                "consistency": report.consistency,
                "n_sessions": report.n_sessions,
                "apl_mean": report.apl_mean,
                "fidelity_mean": report.fidelity.mean,
                "fidelity_std": report.fidelity.std,
            },
            f,
            indent=2,
        )
    print(table, end="")
    return 0


def cmd_baseline_dt(args):
    config = load_config(args.config)
    proto = resolve_protocol(args, config)
    points = harness.run_standalone_dt_baseline(
        proto["ref"],
        min_samples_leaf=proto["dt_params"].min_samples_leaf,
        split_spec=proto["split"],
        prune=proto["prune"],
    )
    out = out_dir(args)
    harness.write_fitness_csv(out / "baseline_dt.csv", points)
    print(f"fitted {len(points)} standalone trees; results in {out/'baseline_dt.csv'}")
    return 0


def cmd_export(args):
    run = Path(args.run_dir)
    with open(run / "tree.json", encoding="utf-8") as f:
        tree = dtree.tree_from_document(json.load(f))
    out = Path(args.to) if args.to else run
    out.mkdir(parents=True, exist_ok=True)
    (out / "tree.dot").write_text(dtree.export_dot(tree), encoding="utf-8")
    (out / "rules.txt").write_text(dtree.export_rules(tree), encoding="utf-8")
    print(f"exported DOT and rules for {dtree.leaf_count(tree)} leaves to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def add_common_flags(sub, with_model_flags=True):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--dataset", help="builtin dataset name or CSV path")
    sub.add_argument("--label-column", help="label column for CSV datasets")
    sub.add_argument("--out-dir", required=True, help="output directory")
    sub.add_argument("--seed", type=int, help="training seed override")
    sub.add_argument("--min-samples-leaf", type=int)
    sub.add_argument("--max-depth", type=int)
    sub.add_argument("--no-prune", action="store_true", help="skip reduced-error pruning")
    if with_model_flags:
        sub.add_argument("--lambda1", type=float)
        sub.add_argument("--lambda-orth", type=float, dest="lambda_orth")
        sub.add_argument("--ortho-norm", dest="ortho_norm", choices=["l1_norm", "frobenius", "ldd", "none"])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="treedistill",
        description="Train regularized MLPs and distill them into small decision trees.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-toy", help="write the 2-D toy dataset as CSV")
    gen.add_argument("--n", type=int, default=500)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=cmd_gen_toy)

    tr = commands.add_parser("train", help="train one MLP and save the model document")
    add_common_flags(tr)
    tr.set_defaults(fn=cmd_train)

    ex = commands.add_parser("extract", help="distill a saved model into a decision tree")
    add_common_flags(ex, with_model_flags=False)
    ex.add_argument("--model", required=True, help="model.json produced by train")
    ex.set_defaults(fn=cmd_extract)

    sw = commands.add_parser("sweep", help="strength-grid sweep producing a fitness CSV")
    add_common_flags(sw)
    sw.set_defaults(fn=cmd_sweep)

    fi = commands.add_parser("fidelity", help="multi-seed refit fidelity experiment")
    add_common_flags(fi)
    fi.set_defaults(fn=cmd_fidelity)

    co = commands.add_parser("consistency", help="multi-initialization consistency experiment")
    add_common_flags(co)
    co.set_defaults(fn=cmd_consistency)

    bd = commands.add_parser("baseline-dt", help="standalone decision-tree baseline family")
    add_common_flags(bd, with_model_flags=False)
    bd.set_defaults(fn=cmd_baseline_dt)

    xp = commands.add_parser("export", help="re-export DOT and rules from a run directory")
    xp.add_argument("--run-dir", required=True)
    xp.add_argument("--to", help="destination directory (default: the run directory)")
    xp.set_defaults(fn=cmd_export)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TreedistillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
