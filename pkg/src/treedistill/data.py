"""Datasets: toy generator, CSV ingestion, seeded splitting, standardization.

CSV loading one-hot encodes caller-named categorical columns (feature
names "col_eq_value"), maps labels to indices in order of first
appearance, and either rejects or defers missing numeric cells; deferred
NaNs are imputed inside :func:`split` with training-split medians so no
statistics leak across splits.
"""

import csv
import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from treedistill.errors import ConfigError, InputError, ParseError, SchemaError


@dataclass(frozen=True)
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    n_classes: int
    class_names: list
    source: dict | None = field(default=None, compare=False)
    has_missing: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InputError("X must be a non-empty 2-D matrix")
        if y.shape != (X.shape[0],):
            raise InputError("y must hold one label per row")
        if np.isinf(X).any():
            raise InputError("X contains infinite values")
        if not self.has_missing and np.isnan(X).any():
            raise InputError("X contains NaN (load with missing='defer' to keep them)")
        if y.min() < 0 or y.max() >= self.n_classes:
            raise InputError(f"labels must lie in [0, {self.n_classes})")
        if len(self.feature_names) != X.shape[1]:
            raise InputError("feature_names must cover all columns")
        if len(self.class_names) != self.n_classes:
            raise InputError("class_names must cover all classes")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[0]

    def replace_matrix(self, X, has_missing=False):
        return Dataset(
            name=self.name,
            X=X,
            y=self.y.copy(),
            feature_names=list(self.feature_names),
            n_classes=self.n_classes,
            class_names=list(self.class_names),
            source=self.source,
            has_missing=has_missing,
        )

    def take(self, indices, has_missing=None):
        return Dataset(
            name=self.name,
            X=self.X[indices],
            y=self.y[indices],
            feature_names=list(self.feature_names),
            n_classes=self.n_classes,
            class_names=list(self.class_names),
            source=self.source,
            has_missing=self.has_missing if has_missing is None else has_missing,
        )


def boundary_curve(x):
    """The toy problem's class boundary y = 5 (x - 0.5)^2 + 0.4."""
    return 5.0 * (x - 0.5) ** 2 + 0.4


def generate_parabola(n, seed, flip_fraction=0.1, band_only=True):
    """Sample n points on [0,1]^2, label by the parabola boundary, flip noise.

    Points above the boundary are positive; then ``round(flip_fraction *
    pool size)`` labels are flipped, where the pool is the band within
    +-0.2 of the boundary (or every point when ``band_only`` is False).
    Deterministic per seed.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(n, 2))
    boundary = boundary_curve(points[:, 0])
    labels = (points[:, 1] > boundary).astype(np.int64)

    if band_only:
        in_band = (points[:, 1] >= boundary - 0.2) & (points[:, 1] <= boundary + 0.2)
        pool = np.flatnonzero(in_band)
    else:
        pool = np.arange(n)
    n_flip = round(flip_fraction * len(pool))
    if n_flip:
        flip = rng.choice(pool, size=n_flip, replace=False)
        labels[flip] = 1 - labels[flip]

    return Dataset(
        name="parabola",
        X=points,
        y=labels,
        feature_names=["x", "y"],
        n_classes=2,
        class_names=["negative", "positive"],
        source={
            "kind": "parabola",
            "n": n,
            "seed": seed,
            "flip_fraction": flip_fraction,
            "band_only": band_only,
            "n_flipped": int(n_flip),
        },
    )


MISSING_CATEGORY = "missing"


def load_csv(path, label_column, categorical_columns=(), missing="error", name=None):
    """Parse a header CSV into a Dataset.

    ``categorical_columns`` are one-hot encoded with category order of
    first appearance; empty categorical cells become a "missing"
    category. Empty numeric cells raise ParseError under
    ``missing="error"`` or become NaN under ``missing="defer"`` (imputed
    later by :func:`split`). Unparseable cells always raise ParseError
    with the row location.
    """
    if missing not in ("error", "defer"):
        raise InputError("missing must be 'error' or 'defer'")
    categorical = list(categorical_columns)

    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)

    if label_column not in header:
        raise SchemaError(f"{path}: label column {label_column!r} not in header")
    for col in categorical:
        if col not in header:
            raise SchemaError(f"{path}: categorical column {col!r} not in header")
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    label_pos = header.index(label_column)
    feature_cols = [(i, h) for i, h in enumerate(header) if i != label_pos]

    class_names = []
    class_index = {}
    labels = []
    column_values = {h: [] for _, h in feature_cols}
    has_missing = False

    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}", row=r)
        raw_label = row[label_pos].strip()
        if not raw_label:
            raise ParseError(f"{path}: row {r + 2} has an empty label", row=r, column=label_column)
        if raw_label not in class_index:
            class_index[raw_label] = len(class_names)
            class_names.append(raw_label)
        labels.append(class_index[raw_label])

        for i, h in feature_cols:
            cell = row[i].strip()
            if h in categorical:
                column_values[h].append(cell if cell else MISSING_CATEGORY)
            elif not cell:
                if missing == "error":
                    raise ParseError(
                        f"{path}: row {r + 2} has a missing value in {h!r}", row=r, column=h
                    )
                has_missing = True
                column_values[h].append(math.nan)
            else:
                try:
                    column_values[h].append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {r + 2}: cannot parse {cell!r} in column {h!r}",
                        row=r,
                        column=h,
                    ) from None

    feature_names = []
    columns = []
    encoding = {}
    for _, h in feature_cols:
        values = column_values[h]
        if h in categorical:
            categories = []
            seen = {}
            for v in values:
                if v not in seen:
                    seen[v] = len(categories)
                    categories.append(v)
            encoding[h] = categories
            block = np.zeros((len(values), len(categories)))
            block[np.arange(len(values)), [seen[v] for v in values]] = 1.0
            for c, cat in enumerate(categories):
                feature_names.append(f"{h}_eq_{cat}")
                columns.append(block[:, c])
        else:
            feature_names.append(h)
            columns.append(np.asarray(values, dtype=np.float64))

    return Dataset(
        name=name or str(path),
        X=np.column_stack(columns),
        y=np.asarray(labels, dtype=np.int64),
        feature_names=feature_names,
        n_classes=len(class_names),
        class_names=class_names,
        source={
            "kind": "csv",
            "path": str(path),
            "label_column": label_column,
            "categorical_columns": categorical,
            "categories": encoding,
            "class_names": class_names,
            "missing": missing,
        },
        has_missing=has_missing,
    )


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ConfigError("ratios must be three positive fractions")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError("ratios must sum to 1")
        if self.seed < 0:
            raise ConfigError("split seed must be non-negative")


def split_indices(n, spec):
    """Seeded shuffle then contiguous partition; deterministic per seed."""
    if n < 3:
        raise ConfigError("need at least 3 rows to split")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = int(spec.ratios[0] * n)
    n_val = int(spec.ratios[1] * n)
    train, val, test = perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]
    if min(len(train), len(val), len(test)) == 0:
        raise ConfigError(f"split of {n} rows with ratios {spec.ratios} leaves an empty part")
    return train, val, test


def split_hash(n, spec):
    """Short stable fingerprint of the index partition."""
    train, val, test = split_indices(n, spec)
    digest = hashlib.sha256()
    for part in (train, val, test):
        digest.update(part.astype(np.int64).tobytes())
        digest.update(b"|")
    return digest.hexdigest()[:16]


def split(dataset, spec):
    train, val, test, _ = split_with_manifest(dataset, spec)
    return train, val, test


def split_with_manifest(dataset, spec):
    """Split into (train, val, test) plus a manifest that pins the partition.

    Numeric NaNs deferred at load time are imputed here with the
    training split's medians, recorded in the manifest.
    """
    idx_train, idx_val, idx_test = split_indices(len(dataset), spec)
    parts = [dataset.take(i) for i in (idx_train, idx_val, idx_test)]

    imputed = {}
    if dataset.has_missing:
        train_X = parts[0].X
        medians = np.zeros(train_X.shape[1])
        for j in range(train_X.shape[1]):
            col = train_X[:, j]
            if np.isnan(dataset.X[:, j]).any():
                observed = col[~np.isnan(col)]
                if observed.size == 0:
                    raise ConfigError(
                        f"feature {dataset.feature_names[j]!r} has no observed training values"
                    )
                medians[j] = float(np.median(observed))
                imputed[dataset.feature_names[j]] = medians[j]
        filled = []
        for part in parts:
            X = part.X.copy()
            for j in range(X.shape[1]):
                mask = np.isnan(X[:, j])
                X[mask, j] = medians[j]
            filled.append(part.replace_matrix(X))
        parts = filled

    manifest = {
        "source": dataset.source,
        "n": len(dataset),
        "ratios": list(spec.ratios),
        "seed": spec.seed,
        "sizes": [len(p) for p in parts],
        "split_hash": split_hash(len(dataset), spec),
        "imputed_medians": imputed,
    }
    return parts[0], parts[1], parts[2], manifest


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray


def standardize_fit(train):
    """Per-feature mean/std from the training split only.

    Zero-variance features are flagged and pass through unscaled.
    """
    X = train.X if isinstance(train, Dataset) else np.asarray(train, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    zero = std == 0.0
    mean = np.where(zero, 0.0, mean)
    std = np.where(zero, 1.0, std)
    return StandardizationStats(mean=mean, std=std, zero_variance=zero)


def standardize_apply(stats, X):
    return (np.asarray(X, dtype=np.float64) - stats.mean) / stats.std


def standardize_invert(stats, X_std):
    return np.asarray(X_std, dtype=np.float64) * stats.std + stats.mean


_BUILTINS = {
    "parabola": None,  # generated, not a file
    "iris": ("iris.csv", "species", ()),
    "breast_cancer": ("breast_cancer_wisconsin.csv", "diagnosis", ()),
    "pima": ("pima_indians_diabetes.csv", "outcome", ()),
}


def builtin_dataset_names():
    return sorted(_BUILTINS)


def load_builtin(name, parabola_n=500, parabola_seed=0):
    """Load a bundled dataset by registry name."""
    if name not in _BUILTINS:
        raise InputError(f"unknown builtin dataset {name!r}; have {builtin_dataset_names()}")
    if name == "parabola":
        return generate_parabola(parabola_n, parabola_seed)
    filename, label, categorical = _BUILTINS[name]
    path = resources.files("treedistill") / "datasets" / filename
    return load_csv(str(path), label, categorical, name=name)


def resolve_dataset(ref):
    """Materialize a dataset reference dict (kinds: builtin, csv, parabola)."""
    kind = ref.get("kind")
    if kind == "builtin":
        return load_builtin(
            ref["name"],
            parabola_n=int(ref.get("n", 500)),
            parabola_seed=int(ref.get("seed", 0)),
        )
    if kind == "parabola":
        return generate_parabola(
            int(ref.get("n", 500)),
            int(ref.get("seed", 0)),
            flip_fraction=float(ref.get("flip_fraction", 0.1)),
            band_only=bool(ref.get("band_only", True)),
        )
    if kind == "csv":
        return load_csv(
            ref["path"],
            ref["label_column"],
            ref.get("categorical_columns", ()),
            missing=ref.get("missing", "error"),
            name=ref.get("name"),
        )
    raise ConfigError(f"unknown dataset kind {kind!r}")
