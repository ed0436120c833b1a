"""Plain-text run configuration (INI sections, documented in the README).

One file declares the input CSV and its schema, preprocessing seeds, the
cross-validation setup, per-family hyperparameter grids, and the three
pairwise experiments. Only the canonical level pairings are accepted.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..dataset import (CATEGORY_HIGH, CATEGORY_LOW, CATEGORY_MEDIUM,
                       KIND_BINARY, KIND_CATEGORICAL, KIND_PLAUSIBLE,
                       KIND_SCALAR, VariableSpec)
from ..errors import ConfigError
from ..models import DEFAULT_GRIDS, FAMILIES

EXPERIMENT_PAIRINGS = {
    "low-medium": (CATEGORY_LOW, CATEGORY_MEDIUM),
    "high-medium": (CATEGORY_MEDIUM, CATEGORY_HIGH),
    "low-high": (CATEGORY_LOW, CATEGORY_HIGH),
}

_TUPLE_RE = re.compile(r"\(([^)]*)\)")

_INT_AXES = {"n_estimators", "num_leaves", "max_bins", "batch_size",
             "max_epochs", "patience", "max_iter", "max_sweeps"}
_FLOAT_AXES = {"learning_rate", "c", "reg_lambda", "gamma", "tol",
               "learning_rate_init"}
_STR_AXES = {"penalty", "criterion", "kernel", "activation", "max_features"}
_BOOL_AXES = {"bootstrap"}


@dataclass(frozen=True)
class AttributionSettings:
    instances: str | tuple = "extremes"   # or explicit row ids
    background_size: int = 100


@dataclass(frozen=True)
class ExperimentPlan:
    """One pairwise-level experiment: classes, seed, families, attribution."""

    name: str
    positive: str
    negative: str
    seed: int
    families: tuple
    attribution: AttributionSettings = field(default_factory=AttributionSettings)

    def __post_init__(self):
        if self.name not in EXPERIMENT_PAIRINGS:
            raise ConfigError(
                f"unknown experiment {self.name!r}; expected one of "
                f"{sorted(EXPERIMENT_PAIRINGS)}")
        negative, positive = EXPERIMENT_PAIRINGS[self.name]
        if {self.positive, self.negative} != {positive, negative}:
            raise ConfigError(
                f"experiment {self.name!r} must pair {negative!r} with "
                f"{positive!r}, got {self.negative!r}/{self.positive!r}")
        if self.positive == self.negative:
            raise ConfigError("positive and negative classes must differ")
        for family in self.families:
            if family not in FAMILIES:
                raise ConfigError(f"unknown model family {family!r}")


@dataclass(frozen=True)
class RunConfig:
    path: Path
    csv_path: Path
    missing_tokens: tuple
    plausible_values: tuple
    schema: tuple                  # feature VariableSpecs (without PVs)
    noise_seed: int
    noise_name: str
    include_noise: bool
    seed: int
    train_fraction: float
    folds: int
    background_size: int
    families: tuple
    grids: dict
    experiments: dict

    def full_schema(self):
        """Feature schema plus the plausible-value columns, for ingestion."""
        pv = tuple(VariableSpec(name=n, kind=KIND_PLAUSIBLE)
                   for n in self.plausible_values)
        return self.schema + pv

    def grid_for(self, family):
        return self.grids.get(family, DEFAULT_GRIDS[family])

    def experiment(self, name):
        if name in self.experiments:
            return self.experiments[name]
        if name not in EXPERIMENT_PAIRINGS:
            raise ConfigError(
                f"unknown experiment {name!r}; expected one of "
                f"{sorted(EXPERIMENT_PAIRINGS)}")
        negative, positive = EXPERIMENT_PAIRINGS[name]
        return ExperimentPlan(
            name=name, positive=positive, negative=negative, seed=self.seed,
            families=self.families,
            attribution=AttributionSettings(
                background_size=self.background_size))


def _split_list(text, keep_empty=False):
    parts = [t.strip() for t in text.split(",")]
    if keep_empty:
        return parts
    return [p for p in parts if p]


def _parse_bool(text, where):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: cannot parse {text!r} as a boolean")


def _parse_schema_entry(name, spec_text):
    text = spec_text.strip()
    lowered = text.lower()
    if lowered == "scalar":
        return VariableSpec(name=name, kind=KIND_SCALAR)
    if lowered == "binary":
        return VariableSpec(name=name, kind=KIND_BINARY)
    if lowered.startswith("categorical"):
        _, _, rest = text.partition(":")
        categories = tuple(_split_list(rest))
        if not categories:
            raise ConfigError(
                f"schema column {name!r}: categorical needs categories, "
                "e.g. 'categorical: male, female'")
        return VariableSpec(name=name, kind=KIND_CATEGORICAL,
                            categories=categories)
    raise ConfigError(
        f"schema column {name!r}: unknown kind {spec_text!r} (expected "
        "scalar, binary, or categorical: ...)")


def _parse_axis_values(family, axis, text):
    where = f"[grid:{family}] {axis}"
    if axis == "hidden_layer_sizes":
        groups = _TUPLE_RE.findall(text)
        if not groups:
            raise ConfigError(f"{where}: expected tuples like (100), (50, 50)")
        return [tuple(int(v) for v in _split_list(g)) for g in groups]
    values = []
    for token in _split_list(text):
        lowered = token.lower()
        if axis in _INT_AXES or axis == "max_depth":
            values.append(None if lowered == "none" else int(token))
        elif axis in _FLOAT_AXES:
            values.append(float(token))
        elif axis in _BOOL_AXES:
            values.append(_parse_bool(token, where))
        elif axis in _STR_AXES:
            values.append(lowered)
        else:
            raise ConfigError(f"{where}: unknown grid axis")
    if not values:
        raise ConfigError(f"{where}: no values given")
    return values


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str   # column names are case-sensitive
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    def need(section, option, default=None):
        if parser.has_option(section, option):
            return parser.get(section, option)
        if default is not None:
            return default
        raise ConfigError(f"{path}: missing [{section}] {option}")

    if not parser.has_section("data"):
        raise ConfigError(f"{path}: missing [data] section")
    csv_path = Path(need("data", "csv"))
    if not csv_path.is_absolute():
        csv_path = path.parent / csv_path
    missing = tuple(_split_list(parser.get("data", "missing", fallback=""),
                                keep_empty=True))
    if "" not in missing:
        missing = ("",) + missing
    plausible = tuple(_split_list(need("data", "plausible_values")))

    if not parser.has_section("schema"):
        raise ConfigError(f"{path}: missing [schema] section")
    schema = tuple(_parse_schema_entry(name, value)
                   for name, value in parser.items("schema"))
    if not schema:
        raise ConfigError(f"{path}: [schema] declares no columns")

    noise_seed = int(need("preprocess", "noise_seed", "0")) \
        if parser.has_section("preprocess") else 0
    noise_name = parser.get("preprocess", "noise_name", fallback="NOISE")
    include_noise = _parse_bool(
        parser.get("preprocess", "include_noise", fallback="true"),
        "[preprocess] include_noise")

    seed = int(parser.get("run", "seed", fallback="0"))
    train_fraction = float(parser.get("run", "train_fraction", fallback="0.8"))
    folds = int(parser.get("run", "folds", fallback="5"))
    background_size = int(parser.get("run", "background_size", fallback="100"))
    families = tuple(_split_list(parser.get("run", "families",
                                            fallback=",".join(FAMILIES))))
    for family in families:
        if family not in FAMILIES:
            raise ConfigError(f"{path}: unknown family {family!r} in [run]")

    grids = {}
    experiments = {}
    for section in parser.sections():
        if section.startswith("grid:"):
            family = section.split(":", 1)[1].strip()
            if family not in FAMILIES:
                raise ConfigError(f"{path}: unknown family in [{section}]")
            grids[family] = {
                axis: _parse_axis_values(family, axis, text)
                for axis, text in parser.items(section)}
        elif section.startswith("experiment:"):
            name = section.split(":", 1)[1].strip()
            if name not in EXPERIMENT_PAIRINGS:
                raise ConfigError(f"{path}: unknown experiment [{section}]")
            negative, positive = EXPERIMENT_PAIRINGS[name]
            exp_families = tuple(_split_list(
                parser.get(section, "families",
                           fallback=",".join(families))))
            instances = parser.get(section, "instances", fallback="extremes")
            if instances.strip().lower() != "extremes":
                instances = tuple(int(t) for t in _split_list(instances))
            else:
                instances = "extremes"
            experiments[name] = ExperimentPlan(
                name=name,
                positive=parser.get(section, "positive", fallback=positive),
                negative=parser.get(section, "negative", fallback=negative),
                seed=int(parser.get(section, "seed", fallback=str(seed))),
                families=exp_families,
                attribution=AttributionSettings(
                    instances=instances,
                    background_size=int(parser.get(
                        section, "background_size",
                        fallback=str(background_size)))),
            )

    return RunConfig(
        path=path, csv_path=csv_path, missing_tokens=missing,
        plausible_values=plausible, schema=schema, noise_seed=noise_seed,
        noise_name=noise_name, include_noise=include_noise, seed=seed,
        train_fraction=train_fraction, folds=folds,
        background_size=background_size, families=families, grids=grids,
        experiments=experiments,
    )
