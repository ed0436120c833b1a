import numpy as np
import pytest

from scorelens.dataset import (Dataset, KIND_BINARY, KIND_NOISE, KIND_SCALAR,
                               VariableSpec)


def make_dataset(X, y=None, kinds=None, names=None, row_ids=None):
    """Quick Dataset from arrays; scalar kind unless told otherwise."""
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    if names is None:
        names = [f"f{j}" for j in range(m)]
    if kinds is None:
        kinds = [KIND_SCALAR] * m
    schema = tuple(VariableSpec(name=names[j], kind=kinds[j]) for j in range(m))
    return Dataset(
        schema=schema,
        rows=X,
        row_ids=np.arange(n, dtype=np.int64) if row_ids is None
        else np.asarray(row_ids, dtype=np.int64),
        target=None if y is None else np.asarray(y, dtype=np.float64),
    )


def planted_signal(n, seed, signal=6, nuisance=3, noise=True):
    """Binary problem with known informative features.

    Columns: ``signal`` informative, ``nuisance`` uninformative, plus an
    optional standard-normal control column appended last.
    """
    rng = np.random.default_rng(seed)
    m = signal + nuisance
    X = rng.normal(size=(n, m))
    coef = np.linspace(1.6, 0.7, signal)
    logits = X[:, :signal] @ coef
    y = (logits + 0.35 * rng.normal(size=n) > 0).astype(np.float64)
    names = [f"sig{j}" for j in range(signal)]
    names += [f"nui{j}" for j in range(nuisance)]
    kinds = [KIND_SCALAR] * m
    if noise:
        X = np.column_stack([X, rng.standard_normal(n)])
        names.append("NOISE")
        kinds.append(KIND_NOISE)
    return make_dataset(X, y, kinds=kinds, names=names)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_survey_csv(path, n=600, seed=7, missing_every=0):
    """Synthetic survey file: 2 scalars, 2 binaries, 1 categorical, 10 PVs.

    BOOKS drives the score strongly, so level pairs are separable.
    """
    gen = np.random.default_rng(seed)
    books = gen.integers(1, 7, n).astype(float)
    cars = gen.integers(0, 5, n).astype(float)
    desk = gen.integers(0, 2, n).astype(float)
    net = gen.integers(0, 2, n).astype(float)
    region = gen.choice(["R1", "R2", "R3"], n)
    score = (240.0 + 60.0 * books + 25.0 * desk - 18.0 * (region == "R1")
             + gen.normal(0, 35, n))
    pvs = score[:, None] + gen.normal(0, 8, (n, 10))
    header = (["BOOKS", "CARS", "DESK", "NET", "REGION"]
              + [f"PV{i}MATH" for i in range(1, 11)])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            cells = [str(books[i]), str(cars[i]), str(int(desk[i])),
                     str(int(net[i])), region[i]]
            cells += [f"{v:.3f}" for v in pvs[i]]
            if missing_every and i % missing_every == 0:
                cells[1] = ""
            fh.write(",".join(cells) + "\n")


BASE_INI = """\
[data]
csv = {csv}
missing =
plausible_values = PV1MATH, PV2MATH, PV3MATH, PV4MATH, PV5MATH, PV6MATH, PV7MATH, PV8MATH, PV9MATH, PV10MATH

[schema]
BOOKS = scalar
CARS = scalar
DESK = binary
NET = binary
REGION = categorical: R1, R2, R3

[preprocess]
noise_seed = 99

[run]
seed = 42
folds = {folds}
background_size = 24
families = {families}
{extra}
"""


def write_config(dir_path, csv_name="students.csv", families="decision-tree",
                 folds=5, extra="", n=600, seed=7, missing_every=97):
    csv_path = dir_path / csv_name
    write_survey_csv(csv_path, n=n, seed=seed, missing_every=missing_every)
    ini_path = dir_path / "run.ini"
    ini_path.write_text(
        BASE_INI.format(csv=csv_name, folds=folds, families=families,
                        extra=extra), encoding="utf-8")
    return ini_path
