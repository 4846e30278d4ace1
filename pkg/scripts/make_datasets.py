"""Regenerate the bundled dataset fixtures under src/treedistill/datasets/.

iris.csv and breast_cancer_wisconsin.csv are verbatim exports of
scikit-learn's bundled copies of the classic UCI data. The Pima file is a
seeded statistical regeneration (768 rows, 500/268 class balance,
per-class feature moments, correlations, zero-inflation of the
missing-as-zero columns matched to the published summary statistics of
the original), because the authentic file is not redistributable from
this environment; see the module docstring it writes and the README.

Run from the repo root: python3 scripts/make_datasets.py
"""

import csv
from pathlib import Path

import numpy as np
from sklearn.datasets import load_breast_cancer, load_iris

OUT = Path(__file__).resolve().parent.parent / "src" / "treedistill" / "datasets"


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fmt(x):
    return repr(float(x))


def make_iris():
    bunch = load_iris()
    header = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"]
    rows = [
        [fmt(v) for v in x] + [bunch.target_names[t]]
        for x, t in zip(bunch.data, bunch.target)
    ]
    write_csv(OUT / "iris.csv", header, rows)


def make_breast_cancer():
    bunch = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    header = names + ["diagnosis"]
    rows = [
        [fmt(v) for v in x] + [bunch.target_names[t]]
        for x, t in zip(bunch.data, bunch.target)
    ]
    write_csv(OUT / "breast_cancer_wisconsin.csv", header, rows)


# Published per-class summary statistics of the Pima cohort
# (order: pregnancies, glucose, blood_pressure, skin_thickness, insulin, bmi, age)
PIMA_MEAN = {
    0: [3.30, 110.0, 68.2, 19.7, 130.0, 30.3, 31.2],
    1: [4.87, 141.3, 70.8, 22.2, 165.0, 35.1, 37.1],
}
PIMA_STD = {
    0: [3.0, 26.0, 18.0, 14.5, 90.0, 7.2, 11.0],
    1: [3.7, 31.9, 21.0, 17.0, 110.0, 7.3, 11.0],
}
# sparse correlation structure: (i, j, rho) over the 7 gaussian features
PIMA_CORR = [
    (0, 6, 0.54),  # pregnancies - age
    (1, 4, 0.33),  # glucose - insulin
    (1, 6, 0.26),  # glucose - age
    (2, 6, 0.24),  # blood pressure - age
    (2, 5, 0.28),  # blood pressure - bmi
    (3, 4, 0.44),  # skin thickness - insulin
    (3, 5, 0.39),  # skin thickness - bmi
]
# zero-inflation rates of the columns whose zeros mean "not measured"
PIMA_ZERO_RATE = {1: 0.0065, 2: 0.046, 3: 0.296, 4: 0.487, 5: 0.014}
PIMA_COUNTS = {0: 500, 1: 268}
PIMA_PEDIGREE_LOG = {0: (np.log(0.39), 0.55), 1: (np.log(0.46), 0.55)}


def make_pima(seed=20240101):
    rng = np.random.default_rng(seed)
    corr = np.eye(7)
    for i, j, rho in PIMA_CORR:
        corr[i, j] = corr[j, i] = rho
    assert np.linalg.eigvalsh(corr).min() > 0, "correlation matrix must be PD"
    chol = np.linalg.cholesky(corr)

    blocks = []
    for cls in (0, 1):
        n = PIMA_COUNTS[cls]
        z = rng.standard_normal((n, 7)) @ chol.T
        x = z * np.asarray(PIMA_STD[cls]) + np.asarray(PIMA_MEAN[cls])
        mu, sigma = PIMA_PEDIGREE_LOG[cls]
        pedigree = np.exp(rng.normal(mu, sigma, size=n))

        x[:, 0] = np.clip(np.rint(x[:, 0]), 0, 17)         # pregnancies
        x[:, 1] = np.clip(np.rint(x[:, 1]), 44, 199)       # glucose
        x[:, 2] = np.clip(np.rint(x[:, 2]), 24, 122)       # blood pressure
        x[:, 3] = np.clip(np.rint(x[:, 3]), 7, 99)         # skin thickness
        x[:, 4] = np.clip(np.rint(x[:, 4]), 14, 846)       # insulin
        x[:, 5] = np.clip(np.round(x[:, 5], 1), 18.2, 67.1)  # bmi
        x[:, 6] = np.clip(np.rint(x[:, 6]), 21, 81)        # age
        for col, rate in PIMA_ZERO_RATE.items():
            mask = rng.random(n) < rate
            x[mask, col] = 0.0
        pedigree = np.clip(np.round(pedigree, 3), 0.078, 2.42)

        full = np.column_stack([x[:, :6], pedigree, x[:, 6]])
        blocks.append((full, np.full(n, cls)))

    X = np.vstack([b[0] for b in blocks])
    y = np.concatenate([b[1] for b in blocks])
    order = rng.permutation(len(y))
    X, y = X[order], y[order]
    if y[0] != 0:  # keep class index 0 = outcome "0" (first appearance)
        first0 = int(np.argmax(y == 0))
        X[[0, first0]] = X[[first0, 0]]
        y[[0, first0]] = y[[first0, 0]]

    header = [
        "pregnancies",
        "glucose",
        "blood_pressure",
        "skin_thickness",
        "insulin",
        "bmi",
        "diabetes_pedigree",
        "age",
        "outcome",
    ]
    rows = []
    for xi, yi in zip(X, y):
        cells = [f"{int(v)}" if c not in (5, 6) else fmt(v) for c, v in enumerate(xi)]
        rows.append(cells + [str(int(yi))])
    write_csv(OUT / "pima_indians_diabetes.csv", header, rows)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    make_iris()
    make_breast_cancer()
    make_pima()
