"""End-to-end experiment orchestration.

Workflow per experiment: filter the two level categories, stratified 80/20
split, min-max normalization fitted on the training split, stratified
k-fold grid search per family (undersampled fits), per-family test
evaluation in balanced and natural modes, Shapley attribution of the
selected model, and emission of reports, rankings, plot data, SVGs, and a
hashed run manifest. Outputs are byte-deterministic given (config, seed,
input file); wall-clock timings go to a separate plain-text log.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import shutil
import time
from pathlib import Path

import numpy as np

from .. import __version__
from ..attribution import (BackgroundSet, attribute, decision_plot_data,
                           rank_instances, summary_plot_data)
from ..dataset import (KIND_CATEGORICAL, add_noise_control,
                       label_by_plausible_values, load_csv, load_dataset,
                       missing_histogram, normalize_scalars, one_hot_encode,
                       prune_missing, save_dataset, select_categories,
                       split_train_test, undersample)
from ..errors import DataError, ScorelensError
from ..models import fit_model, model_from_dict, model_to_dict
from ..validation import (METRIC_KEYS, evaluate_on_test, grid_search,
                          select_best, stratified_kfold)
from .config import ExperimentPlan, RunConfig
from .render import render_svg

log = logging.getLogger("scorelens")

# spawn keys for deriving stage seeds from the plan seed
_SEED_FINAL_FIT = 101
_SEED_TEST_BALANCE = 202
_SEED_BACKGROUND = 303
_SEED_KERNEL = 404

SUMMARY_PLOT_TOP = 10


def derive_seed(seed, *key):
    seq = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return int(seq.generate_state(1)[0])


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# --- preprocessing ---------------------------------------------------------

def preprocess(config: RunConfig):
    """Chain the ingestion steps; returns (encoded, raw, stage_log).

    ``raw`` keeps the pruned, labeled, pre-encoding columns for decision
    plot annotations. Scalars stay unnormalized here; normalization is
    fitted on the training split inside each experiment.
    """
    stage_log = []

    def record(stage, ds):
        stage_log.append({"stage": stage, "rows": ds.n_rows,
                          "columns": len(ds.schema)})
        log.info("%s: %d rows x %d columns", stage, ds.n_rows, len(ds.schema))

    ds = load_csv(config.csv_path, config.full_schema(), config.missing_tokens)
    record("load", ds)
    histogram = missing_histogram(ds)
    pruned = prune_missing(ds)
    record("prune", pruned)
    labeled = label_by_plausible_values(pruned, config.plausible_values)
    record("label", labeled)
    categorical = [s.name for s in labeled.schema if s.kind == KIND_CATEGORICAL]
    encoded = one_hot_encode(labeled, categorical) if categorical else labeled
    record("one-hot", encoded)
    if config.include_noise:
        encoded = add_noise_control(encoded, config.noise_seed,
                                    config.noise_name)
        record("noise", encoded)
    return encoded, labeled, {"stages": stage_log,
                              "missing_histogram": histogram}


def preprocess_command(config: RunConfig, out_path):
    """CLI entry: deterministic processed files plus a missingness audit."""
    out_path = Path(out_path)
    with open(config.csv_path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.split(",")[0].strip() == "_row_id":
        raise DataError(
            f"{config.csv_path} already looks preprocessed (schema kinds "
            "are encoded); refusing to run again over it")
    encoded, raw, info = preprocess(config)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(encoded, out_path)
    raw_path = out_path.with_name(out_path.stem + ".raw.csv")
    save_dataset(raw, raw_path)
    audit_path = out_path.with_name(out_path.stem + ".preprocess.json")
    audit = {
        "stages": info["stages"],
        "missing_histogram": {str(k): v
                              for k, v in info["missing_histogram"].items()},
    }
    audit_path.write_text(canonical_json(audit), encoding="utf-8")
    return {"processed": out_path, "raw": raw_path, "audit": audit_path}


def load_preprocessed(path):
    return load_dataset(Path(path))


# --- experiment ------------------------------------------------------------

def prepare_experiment_data(config: RunConfig, plan: ExperimentPlan,
                            data):
    """Filter to the plan's categories, split, and normalize on train."""
    sub = select_categories(data, plan.positive, plan.negative)
    train, test = split_train_test(sub, config.train_fraction, plan.seed)
    train, stats = normalize_scalars(train)
    test, _ = normalize_scalars(test, stats)
    return train, test, stats


def _family_search(args):
    train, family, grid, folds, seed = args
    return family, grid_search(train, family, grid, folds, seed=seed)


def run_experiment(plan: ExperimentPlan, data, config: RunConfig,
                   raw=None, out_root="out", jobs=1, primary_balanced=True):
    """Execute one pairwise experiment and write its output bundle.

    Any stage failure removes the partially written bundle and re-raises
    with the stage name. Returns the manifest dictionary.
    """
    out_dir = Path(out_root) / plan.name
    if out_dir.exists():
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True)
    timings = []
    stage_name = "setup"
    t_stage = time.perf_counter()

    def stage(name):
        nonlocal stage_name, t_stage
        timings.append((stage_name, time.perf_counter() - t_stage))
        stage_name = name
        t_stage = time.perf_counter()
        log.info("experiment %s: stage %s", plan.name, name)

    files = {}

    def emit(rel_path, text):
        path = out_dir / rel_path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        files[rel_path] = path

    try:
        stage("filter-split-normalize")
        train, test, norm_stats = prepare_experiment_data(config, plan, data)

        stage("folds")
        folds = stratified_kfold(train, config.folds, plan.seed)

        stage("grid-search")
        tasks = [(train, family, config.grid_for(family), folds, plan.seed)
                 for family in plan.families]
        if jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
                results = dict(ex.map(_family_search, tasks))
        else:
            results = dict(map(_family_search, tasks))
        reports = {family: results[family][1] for family in plan.families}
        best_configs = {family: results[family][0] for family in plan.families}

        stage("final-fit-and-test")
        fit_seed = derive_seed(plan.seed, _SEED_FINAL_FIT)
        balance_seed = derive_seed(plan.seed, _SEED_TEST_BALANCE)
        final_models = {}
        for family in plan.families:
            balanced_train = undersample(train, fit_seed)
            model = fit_model(balanced_train, best_configs[family])
            final_models[family] = model
            test_modes = {}
            for mode, balance in (("balanced", True), ("natural", False)):
                metrics, cm, warnings = evaluate_on_test(
                    model, test, balance=balance, seed=balance_seed)
                test_modes[mode] = {"metrics": metrics,
                                    "confusion": cm.to_dict(),
                                    "warnings": warnings}
            reports[family].test_metrics = test_modes

        stage("select")
        mean_rows = [reports[f].best.mean_metrics for f in plan.families]
        winner_family = plan.families[select_best(mean_rows)]
        selected = final_models[winner_family]
        selection_doc = {
            "criterion": "mean validation AUC, ties by mean ACC then "
                         "family order",
            "families": [{
                "family": f,
                "best_config": best_configs[f].to_dict(),
                "mean_auc": reports[f].best.mean_metrics["AUC"],
                "mean_acc": reports[f].best.mean_metrics["ACC"],
            } for f in plan.families],
            "selected_family": winner_family,
        }

        stage("attribution")
        bg = BackgroundSet.sample(train.rows, plan.attribution.background_size,
                                  seed=derive_seed(plan.seed, _SEED_BACKGROUND))
        baseline = float(np.mean(selected.attribution_output(bg.rows)))
        test_outputs = selected.attribution_output(test.rows)
        # total SHAP equals output minus baseline by the efficiency
        # property, so the full ranking needs no per-feature pass
        totals = [(int(rid), float(out - baseline))
                  for rid, out in zip(test.row_ids, test_outputs)]
        totals.sort(key=lambda item: (-item[1], item[0]))
        if plan.attribution.instances == "extremes":
            chosen_ids = sorted({totals[0][0], totals[-1][0]})
        else:
            chosen_ids = list(plan.attribution.instances)
        id_to_pos = {int(rid): i for i, rid in enumerate(test.row_ids)}
        kernel_seed = derive_seed(plan.seed, _SEED_KERNEL)
        attributions = []
        for rid in chosen_ids:
            if rid not in id_to_pos:
                raise DataError(f"instance {rid} is not in the test partition")
            x = test.rows[id_to_pos[rid]]
            attr = attribute(selected, x, bg, instance_id=rid,
                             seed=kernel_seed)
            attr.feature_names = test.names
            attributions.append(attr)
        summary = rank_instances(attributions)
        summary_doc = summary_plot_data(
            summary, min(SUMMARY_PLOT_TOP, len(test.names)))

        stage("emit")
        for family in plan.families:
            emit(f"{family}/report.json",
                 canonical_json(reports[family].to_dict()))
            emit(f"{family}/report.csv", reports[family].to_csv())
        emit("selection.json", canonical_json(selection_doc))
        emit("selected/model.json", canonical_json(model_to_dict(selected)))
        emit("selected/ranking.json", canonical_json({
            "experiment": plan.name,
            "totals": [{"instance_id": i, "total_shap": t} for i, t in totals],
        }))
        emit("selected/ranking.csv",
             "instance_id,total_shap\n" + "".join(
                 f"{i},{t!r}\n" for i, t in totals))
        emit("selected/attributions.json", canonical_json(
            [a.to_dict() for a in attributions]))
        emit("selected/summary.json", canonical_json(summary.to_dict()))
        emit("selected/summary_plot.json", canonical_json(summary_doc))
        emit("selected/summary_plot.svg", render_svg(summary_doc))
        for attr in attributions:
            values = raw_feature_values(test, raw, attr.instance_id)
            doc = decision_plot_data(attr, values)
            emit(f"selected/decision_{attr.instance_id}.json",
                 canonical_json(doc))
            emit(f"selected/decision_{attr.instance_id}.svg", render_svg(doc))

        stage("manifest")
        inventory = []
        for rel_path in sorted(files):
            path = files[rel_path]
            inventory.append({"path": rel_path, "sha256": _sha256(path),
                              "bytes": path.stat().st_size})
        manifest = {
            "experiment": plan.name,
            "positive": plan.positive,
            "negative": plan.negative,
            "version": __version__,
            "config_digest": _sha256(config.path) if config.path.exists()
            else None,
            "seeds": {
                "plan": plan.seed,
                "final_fit": fit_seed,
                "test_balance": balance_seed,
                "background": derive_seed(plan.seed, _SEED_BACKGROUND),
                "kernel": kernel_seed,
            },
            "normalization": {name: list(bounds)
                              for name, bounds in norm_stats.items()},
            "selected_family": winner_family,
            "selected_config": best_configs[winner_family].to_dict(),
            "primary_test_mode": "balanced" if primary_balanced else "natural",
            "inventory": inventory,
            "timings_file": "run.log",
        }
        emit_manifest = canonical_json(manifest)
        (out_dir / "manifest.json").write_text(emit_manifest, encoding="utf-8")
        timings.append((stage_name, time.perf_counter() - t_stage))
        with open(out_dir / "run.log", "w", encoding="utf-8") as fh:
            fh.write("stage\tseconds\n")
            for name, seconds in timings:
                fh.write(f"{name}\t{seconds:.6f}\n")
        return manifest
    except ScorelensError as exc:
        shutil.rmtree(out_dir, ignore_errors=True)
        exc.args = (f"stage {stage_name}: {exc.args[0]}",) + exc.args[1:]
        raise
    except Exception:
        shutil.rmtree(out_dir, ignore_errors=True)
        raise


def raw_feature_values(test, raw, instance_id):
    """Pre-encoding values aligned to the encoded feature columns.

    One-hot indicators report their source column's original token;
    columns without a raw counterpart (e.g. the noise control) report the
    encoded value itself.
    """
    pos = int(np.flatnonzero(test.row_ids == instance_id)[0])
    raw_pos = None
    if raw is not None:
        hits = np.flatnonzero(raw.row_ids == instance_id)
        raw_pos = int(hits[0]) if hits.size else None
    values = []
    for j, spec in enumerate(test.schema):
        if raw is not None and raw_pos is not None:
            source = spec.source or spec.name
            if source in raw.names:
                raw_spec = raw.schema[raw.names.index(source)]
                cell = raw.column(source)[raw_pos]
                if raw_spec.kind == KIND_CATEGORICAL and not np.isnan(cell):
                    values.append(raw_spec.categories[int(cell)])
                else:
                    values.append(float(cell))
                continue
        values.append(float(test.rows[pos, j]))
    return values


def consolidated_report(out_root, experiment, mode):
    """Stitch per-family reports into one metric table (CSV text)."""
    out_dir = Path(out_root) / experiment
    if not out_dir.exists():
        raise DataError(f"no outputs at {out_dir}; run the experiment first")
    lines = ["model,hyperparameters," + ",".join(METRIC_KEYS)]
    for report_path in sorted(out_dir.glob("*/report.json")):
        doc = json.loads(report_path.read_text(encoding="utf-8"))
        family = doc["family"]
        winner = doc["candidates"][doc["selection"]["winner_index"]]
        hp = "; ".join(f"{k}: {v}" for k, v in
                       sorted(winner["config"]["hyperparameters"].items()))
        metrics = doc["test_metrics"][mode]["metrics"]
        lines.append(",".join(
            [family, f"\"{hp}\""] +
            [f"{metrics[k]:.4f}" for k in METRIC_KEYS]))
    return "\n".join(lines) + "\n"


def explain_instances(config: RunConfig, plan: ExperimentPlan, data, raw,
                      row_ids, out_root="out"):
    """Re-attribute stored-model explanations for explicit row ids."""
    out_dir = Path(out_root) / plan.name
    model_path = out_dir / "selected" / "model.json"
    if not model_path.exists():
        raise DataError(f"no saved model at {model_path}; run the "
                        "experiment first")
    model = model_from_dict(json.loads(model_path.read_text(encoding="utf-8")))
    train, test, _ = prepare_experiment_data(config, plan, data)
    bg = BackgroundSet.sample(train.rows, plan.attribution.background_size,
                              seed=derive_seed(plan.seed, _SEED_BACKGROUND))
    kernel_seed = derive_seed(plan.seed, _SEED_KERNEL)
    explain_dir = out_dir / "explain"
    explain_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rid in row_ids:
        part = None
        for candidate in (test, train):
            hits = np.flatnonzero(candidate.row_ids == rid)
            if hits.size:
                part = candidate
                pos = int(hits[0])
                break
        if part is None:
            raise DataError(f"row id {rid} is not in the "
                            f"{plan.name} experiment data")
        attr = attribute(model, part.rows[pos], bg, instance_id=rid,
                         seed=kernel_seed)
        attr.feature_names = part.names
        doc = decision_plot_data(attr, raw_feature_values(part, raw, rid))
        json_path = explain_dir / f"decision_{rid}.json"
        json_path.write_text(canonical_json(doc), encoding="utf-8")
        svg_path = explain_dir / f"decision_{rid}.svg"
        svg_path.write_text(render_svg(doc), encoding="utf-8")
        written.extend([json_path, svg_path])
    return written
