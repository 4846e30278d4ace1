"""Session fixtures shared between module tests and the acceptance suite.

The expensive artifacts (full parabola training runs, sweeps) are built
once per session; everything downstream reuses them.
"""

import math

import numpy as np
import pytest

from treedistill.data import SplitSpec, generate_parabola, load_builtin, split
from treedistill.harness import (
    PRESETS,
    SweepConfig,
    default_grid,
    l1_only_grid,
    preset_train_config,
    run_standalone_dt_baseline,
    run_sweep,
)
from treedistill.mlp import MlpArchitecture, TrainConfig, train
from treedistill.regularizers import RegularizerSpec
from treedistill.tree import DtParams

# training settings used throughout for the toy problem:
# 100-100-10 hidden stack, lr 0.001, batch 100, 1000 epochs
PARABOLA_ARCH = MlpArchitecture(input_dim=2, hidden_sizes=(100, 100, 10), n_classes=2)
PARABOLA_CFG = TrainConfig(learning_rate=0.001, batch_size=100, epochs=1000, seed=0)


@pytest.fixture(scope="session")
def parabola_ds():
    return generate_parabola(500, seed=0)


@pytest.fixture(scope="session")
def parabola_splits(parabola_ds):
    return split(parabola_ds, SplitSpec(seed=0))


@pytest.fixture(scope="session")
def parabola_baseline_run(parabola_splits):
    """Unregularized parabola training on the standardized train split."""
    from treedistill.data import standardize_apply, standardize_fit

    train_set, _, _ = parabola_splits
    stats = standardize_fit(train_set)
    std_train = train_set.replace_matrix(standardize_apply(stats, train_set.X))
    model, history = train(std_train, PARABOLA_ARCH, PARABOLA_CFG, RegularizerSpec())
    return model, history


@pytest.fixture(scope="session")
def iris_ds():
    return load_builtin("iris")


@pytest.fixture(scope="session")
def pima_ds():
    return load_builtin("pima")


@pytest.fixture(scope="session")
def bcw_ds():
    return load_builtin("breast_cancer")


def preset_sweep_config(dataset_name, grid, split_seed=0, init_seed=0):
    preset = PRESETS[dataset_name]
    return SweepConfig(
        dataset={"kind": "builtin", "name": dataset_name},
        hidden_sizes=preset.hidden_sizes,
        train=preset_train_config(preset, seed=init_seed),
        grid=grid,
        dt_params=DtParams(min_samples_leaf=preset.min_samples_leaf),
        split=SplitSpec(seed=split_seed),
        prune=preset.prune,
    )


def min_apl_reaching(points, threshold, axis):
    """Smallest APL among points whose performance axis reaches threshold."""
    values = [
        p.apl
        for p in points
        if not p.failed and not math.isnan(p.apl) and getattr(p, axis) >= threshold
    ]
    return min(values) if values else math.inf


@pytest.fixture(scope="session")
def iris_l1o_sweep():
    return run_sweep(preset_sweep_config("iris", default_grid("l1_norm")))


@pytest.fixture(scope="session")
def iris_l1_sweep():
    return run_sweep(preset_sweep_config("iris", l1_only_grid(8)))


@pytest.fixture(scope="session")
def iris_dt_baseline():
    return run_standalone_dt_baseline(
        {"kind": "builtin", "name": "iris"}, min_samples_leaf=PRESETS["iris"].min_samples_leaf
    )


@pytest.fixture(scope="session")
def pima_l1o_sweep():
    return run_sweep(preset_sweep_config("pima", default_grid("l1_norm")))


@pytest.fixture(scope="session")
def pima_l1_sweep():
    return run_sweep(preset_sweep_config("pima", l1_only_grid(8)))


@pytest.fixture(scope="session")
def pima_dt_baseline():
    return run_standalone_dt_baseline(
        {"kind": "builtin", "name": "pima"}, min_samples_leaf=PRESETS["pima"].min_samples_leaf
    )


@pytest.fixture(scope="session")
def bcw_l1o_sweep():
    return run_sweep(preset_sweep_config("breast_cancer", default_grid("l1_norm")))


@pytest.fixture(scope="session")
def bcw_l1_sweep():
    return run_sweep(preset_sweep_config("breast_cancer", l1_only_grid(8)))
