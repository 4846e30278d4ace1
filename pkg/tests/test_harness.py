import math

import numpy as np
import pytest
from conftest import min_apl_reaching

from treedistill.data import Dataset, SplitSpec
from treedistill.errors import InputError
from treedistill.harness import (
    FITNESS_CSV_HEADER,
    FitnessPoint,
    SweepConfig,
    default_grid,
    fitness_csv,
    format_consistency_table,
    format_fidelity_table,
    l1_only_grid,
    read_fitness_csv,
    run_consistency_experiment,
    run_fidelity_experiment,
    run_standalone_dt_baseline,
    run_sweep,
    select_best,
    time_run,
    write_fitness_csv,
)
from treedistill.mlp import TrainConfig
from treedistill.regularizers import RegularizerSpec
from treedistill.tree import DtParams, fit_tree, predict_tree


def constant_feature_dataset(n=60, positive_fraction=0.2, name="flatline"):
    """All-zero features: any trained model is a constant function."""
    y = np.zeros(n, dtype=np.int64)
    y[: int(n * positive_fraction)] = 1
    return Dataset(name, np.zeros((n, 2)), y, ["a", "b"], 2, ["neg", "pos"])


def toy_sweep_config(grid, seed=0):
    return SweepConfig(
        dataset={"kind": "parabola", "n": 90, "seed": 1},
        hidden_sizes=(6,),
        train=TrainConfig(learning_rate=0.02, batch_size=18, epochs=15, seed=seed),
        grid=grid,
        dt_params=DtParams(min_samples_leaf=2),
        split=SplitSpec(seed=0),
    )


def point(apl, mlp_auc, fid=0.9, l1=0.01, lorth=0.1):
    return FitnessPoint(
        lambda1=l1, lambda_orth=lorth, norm="l1_norm", apl=apl, mlp_auc=mlp_auc,
        dt_auc=mlp_auc, fidelity=fid, nodes=5, seconds=0.1,
    )


# ---------------------------------------------------------------------------
# grids and config


def test_default_grid_spans_standard_ranges():
    grid = default_grid("l1_norm")
    assert len(grid) == 36
    l1s = sorted({c[0] for c in grid})
    lorths = sorted({c[1] for c in grid})
    assert l1s[0] == pytest.approx(0.001) and l1s[-1] == pytest.approx(0.1)
    assert lorths[0] == pytest.approx(0.0001) and lorths[-1] == pytest.approx(2.0)
    assert all(c[2] == "l1_norm" for c in grid)
    assert all(c[1] == 0.0 and c[2] == "none" for c in l1_only_grid(5))


def test_sweep_config_rejects_empty_grid():
    with pytest.raises(InputError):
        toy_sweep_config(grid=())


def test_sweep_config_dict_round_trip():
    cfg = toy_sweep_config(default_grid("frobenius", 2, 2))
    assert SweepConfig.from_dict(cfg.to_dict()) == cfg


# ---------------------------------------------------------------------------
# run_sweep


def test_degenerate_sweep_baseline_plus_one():
    cfg = toy_sweep_config(grid=((0.0, 0.0, "none"),))
    sweep = run_sweep(cfg)
    assert len(sweep.points) == 1
    assert len(sweep.all_points) == 2
    assert not math.isnan(sweep.baseline.mlp_auc)
    # the single none-cell repeats the baseline computation exactly
    assert sweep.points[0].mlp_auc == sweep.baseline.mlp_auc
    assert sweep.manifest["baseline_mlp_auc"] == sweep.baseline.mlp_auc
    assert sweep.manifest["split"]["split_hash"]


def test_sweep_is_deterministic_modulo_seconds():
    cfg = toy_sweep_config(default_grid("l1_norm", 2, 2))
    a = fitness_csv(run_sweep(cfg).all_points)
    b = fitness_csv(run_sweep(cfg).all_points)

    def drop_seconds(text):
        return ["," .join(line.split(",")[:-1]) for line in text.splitlines()]

    assert drop_seconds(a) == drop_seconds(b)


def test_diverging_cell_recorded_not_fatal():
    # an absurd strength overflows the penalty at the first step
    cfg = toy_sweep_config(grid=((0.001, 0.01, "l1_norm"), (0.0, 1e308, "l1_norm")))
    with np.errstate(over="ignore", invalid="ignore"):
        sweep = run_sweep(cfg)
    assert len(sweep.points) == 2
    assert not sweep.points[0].failed
    assert sweep.points[1].failed
    assert math.isnan(sweep.points[1].mlp_auc)


def test_fitness_csv_round_trip(tmp_path):
    cfg = toy_sweep_config(default_grid("l1_norm", 2, 2))
    sweep = run_sweep(cfg)
    path = tmp_path / "fitness.csv"
    write_fitness_csv(path, sweep.all_points)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(FITNESS_CSV_HEADER)
    parsed = read_fitness_csv(path)
    assert len(parsed) == len(sweep.all_points)
    for a, b in zip(parsed, sweep.all_points):
        assert (a.lambda1, a.lambda_orth, a.norm) == (b.lambda1, b.lambda_orth, b.norm)
        assert a.mlp_auc == b.mlp_auc and a.apl == b.apl and a.nodes == b.nodes
    # selection is reproducible from the CSV alone
    baseline, rest = parsed[0], parsed[1:]
    direct = select_best(sweep.points, sweep.baseline.mlp_auc)
    from_csv = select_best(rest, baseline.mlp_auc)
    assert (from_csv.point.lambda1, from_csv.point.lambda_orth) == (
        direct.point.lambda1, direct.point.lambda_orth,
    )


# ---------------------------------------------------------------------------
# selection


def test_select_best_filters_then_minimizes_apl():
    points = [point(apl=2.0, mlp_auc=0.80), point(apl=5.0, mlp_auc=0.95)]
    chosen = select_best(points, baseline_auc=0.90)
    assert chosen.qualified and chosen.point.apl == 5.0


def test_select_best_fallback_flagged():
    points = [point(apl=2.0, mlp_auc=0.80), point(apl=4.0, mlp_auc=0.85)]
    chosen = select_best(points, baseline_auc=0.90)
    assert not chosen.qualified
    assert chosen.point.mlp_auc == 0.85


def test_select_best_breaks_ties_by_fidelity_then_strength():
    points = [
        point(apl=3.0, mlp_auc=0.95, fid=0.90, l1=0.001, lorth=0.001),
        point(apl=3.0, mlp_auc=0.95, fid=0.97, l1=0.05, lorth=0.5),
        point(apl=3.0, mlp_auc=0.95, fid=0.97, l1=0.01, lorth=0.1),
    ]
    chosen = select_best(points, baseline_auc=0.90)
    assert chosen.point.fidelity == 0.97
    assert chosen.point.lambda1 == 0.01


def test_select_best_ignores_failed_points():
    failed = FitnessPoint(0.1, 0.1, "l1_norm", math.nan, math.nan, math.nan,
                          math.nan, math.nan, math.nan, failed=True)
    chosen = select_best([failed, point(apl=1.0, mlp_auc=0.99)], baseline_auc=0.5)
    assert chosen.point.apl == 1.0
    with pytest.raises(InputError):
        select_best([failed], baseline_auc=0.5)


# ---------------------------------------------------------------------------
# experiments


def test_fidelity_experiment_constant_fixture_exact():
    ds = constant_feature_dataset()
    result = run_fidelity_experiment(
        ds, hidden_sizes=(3,),
        train_cfg=TrainConfig(learning_rate=0.05, batch_size=16, epochs=20, seed=0),
        reg=RegularizerSpec(), dt_params=DtParams(), n_seeds=3,
    )
    assert result.pruned.mean == 1.0 and result.pruned.std == 0.0
    assert result.unpruned.mean == 1.0
    assert result.apl_per_run == (0.0, 0.0, 0.0)


def test_consistency_identical_seeds_is_one(iris_ds):
    report = run_consistency_experiment(
        iris_ds, hidden_sizes=(8,),
        train_cfg=TrainConfig(learning_rate=0.01, batch_size=10, epochs=10, seed=0),
        reg=RegularizerSpec(lambda1=0.01, lambda_orth=0.1, ortho_norm="l1_norm"),
        dt_params=DtParams(min_samples_leaf=5),
        n_sessions=4, init_seeds=(7, 7, 7, 7),
    )
    assert report.consistency == 1.0
    assert report.n_sessions == 4


def test_consistency_constant_fixture_is_one():
    ds = constant_feature_dataset()
    report = run_consistency_experiment(
        ds, hidden_sizes=(3,),
        train_cfg=TrainConfig(learning_rate=0.05, batch_size=16, epochs=20, seed=0),
        reg=RegularizerSpec(), dt_params=DtParams(), n_sessions=5,
    )
    assert report.consistency == 1.0
    assert report.apl_mean == 0.0
    assert report.fidelity.mean == 1.0


def test_consistency_needs_two_sessions():
    with pytest.raises(InputError):
        run_consistency_experiment(
            constant_feature_dataset(), hidden_sizes=(3,),
            train_cfg=TrainConfig(learning_rate=0.05, batch_size=16, epochs=5, seed=0),
            reg=RegularizerSpec(), dt_params=DtParams(), n_sessions=1,
        )


# ---------------------------------------------------------------------------
# standalone DT baseline


def test_standalone_baseline_cardinality_and_depth_bound(iris_dt_baseline):
    assert len(iris_dt_baseline) == 11
    depth_one = iris_dt_baseline[1]  # depths are (None, 1, 2, ...)
    assert depth_one.apl <= 1.0
    for p in iris_dt_baseline:
        assert p.norm == "dt"
        assert math.isnan(p.mlp_auc) and math.isnan(p.fidelity)
        assert 0.0 <= p.dt_auc <= 1.0


def test_unbounded_depth_maximizes_training_accuracy(iris_ds):
    # refinement property of the same family the baseline sweeps (unpruned)
    from treedistill.data import split

    train_set, _, _ = split(iris_ds, SplitSpec(seed=0))
    accuracies = []
    for max_depth in (1, 2, 3, None):
        tree = fit_tree(train_set.X, train_set.y, DtParams(max_depth=max_depth),
                        n_classes=iris_ds.n_classes)
        accuracies.append(float(np.mean(predict_tree(tree, train_set.X) == train_set.y)))
    assert accuracies[-1] == max(accuracies)


# ---------------------------------------------------------------------------
# dominance invariant (statistical)


@pytest.mark.slow
def test_l1o_front_dominates_l1_front_iris(iris_l1o_sweep, iris_l1_sweep):
    check_dominance(iris_l1o_sweep, iris_l1_sweep)


@pytest.mark.slow
def test_l1o_front_dominates_l1_front_breast_cancer(bcw_l1o_sweep, bcw_l1_sweep):
    check_dominance(bcw_l1o_sweep, bcw_l1_sweep)


def check_dominance(l1o_sweep, l1_sweep, tol=0.02, apl_cap=5.0):
    l1o = [p for p in l1o_sweep.points if not p.failed]
    for p in l1_sweep.points:
        if p.failed or math.isnan(p.apl) or p.apl > apl_cap:
            continue
        assert any(
            q.apl <= p.apl and q.mlp_auc >= p.mlp_auc - tol for q in l1o
        ), f"L1-only point apl={p.apl:.2f} auc={p.mlp_auc:.4f} not dominated"


# ---------------------------------------------------------------------------
# misc


def test_time_run_returns_result_and_duration():
    result, seconds = time_run(lambda: 42)
    assert result == 42
    assert 0.0 <= seconds < 0.01


def test_report_formatting_smoke():
    from treedistill.metrics import ConsistencyReport, FidelityReport

    fr = FidelityReport.from_runs([0.9, 1.0])
    from treedistill.harness import FidelityExperimentResult

    fe = FidelityExperimentResult(pruned=fr, unpruned=fr, apl_per_run=(1.0, 2.0), split_seeds=(0, 1))
    table = format_fidelity_table([("iris", "l1o(0.01,0.1)", fe)])
    assert "iris" in table and "±" in table

    cr = ConsistencyReport(consistency=0.7, n_sessions=10, apl_mean=2.0, fidelity=fr)
    table2 = format_consistency_table([("iris", 0.01, 0.1, cr)])
    assert "0.70" in table2
