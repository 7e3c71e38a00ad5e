"""Experiment runners: the conflict demo, OOD uncertainty and view corruption.

Every report carries ``provenance`` (seed, config hash, library version) so
its numbers can be regenerated from the report alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .classifier import MultiViewModel, TrainConfig, predict_batch, train
from .data import Dataset, SyntheticSpec, corrupt_view, make_synthetic
from .errors import ValidationError
from .fusion import conflict_mass, ds_combine_pair, ider_combine_pair
from .metrics import classification_report
from .opinion import DirichletOpinion

ZADEH_OPINIONS = (
    DirichletOpinion([0.99, 0.0, 0.01], 0.0),
    DirichletOpinion([0.0, 0.99, 0.01], 0.0),
)
HIST_BINS = np.linspace(0.0, 1.0, 11)


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(seed, config: dict) -> dict:
    return {"seed": seed, "config_hash": config_hash(config), "version": __version__, "config": config}


# ---------------------------------------------------------------------------
# Zadeh's example

def run_conflict_demo() -> dict:
    """Fuse two experts that each all but rule out the other's favourite class."""
    o1, o2 = ZADEH_OPINIONS
    ds = ds_combine_pair(o1, o2)
    ider = ider_combine_pair(o1, o2)
    return {
        "opinions": [o1.to_json(), o2.to_json()],
        "conflict": conflict_mass(o1, o2),
        "ds": ds.to_json(),
        "ider": ider.to_json(),
        "provenance": provenance(None, {"experiment": "zadeh"}),
    }


def format_conflict_table(report: dict) -> str:
    rows = [
        ("expert 1", report["opinions"][0]),
        ("expert 2", report["opinions"][1]),
        ("DS-combine", report["ds"]),
        ("IDer", report["ider"]),
    ]
    k = len(rows[0][1]["beliefs"])
    head = f"{'':<12}" + "".join(f"{'b' + str(i):>10}" for i in range(k)) + f"{'u':>10}"
    lines = [head]
    for name, op in rows:
        lines.append(f"{name:<12}" + "".join(f"{b:>10.5f}" for b in op["beliefs"])
                     + f"{op['uncertainty']:>10.5f}")
    lines.append(f"conflict mass C = {report['conflict']:.6f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# OOD uncertainty

def _hist(values) -> list:
    counts, _ = np.histogram(np.clip(values, 0.0, 1.0), bins=HIST_BINS)
    return counts.tolist()


def run_ood_experiment(model: MultiViewModel, data: Dataset,
                       softmax_model: Optional[MultiViewModel] = None,
                       cfg: Optional[TrainConfig] = None) -> dict:
    """Compare fused uncertainty on in-distribution test samples and the OOD cluster.

    The softmax baseline is the per-view softmax classifiers (one
    single-view model per view).  When ``softmax_model`` is not given it is
    trained here with ``cfg`` (head switched to softmax).
    """
    if data.ood_views is None or data.ood_views[0].shape[0] == 0:
        raise ValidationError("dataset has no OOD samples")
    cfg = cfg or TrainConfig()
    if softmax_model is None:
        softmax_model = train(data, replace(cfg, head="softmax")).model
    xs, _ = data.subset("test")
    pid = predict_batch(model, xs)
    pood = predict_batch(model, data.ood_views)
    sm_id = np.concatenate([vm.output(x).max(axis=1) for vm, x in zip(softmax_model.views, xs)])
    sm_ood = np.concatenate([vm.output(x).max(axis=1) for vm, x in zip(softmax_model.views, data.ood_views)])
    sm_fused_ood = predict_batch(softmax_model, data.ood_views)["probs"].max(axis=1)
    u_id = float(pid["uncertainty"].mean())
    u_ood = float(pood["uncertainty"].mean())
    return {
        "mean_uncertainty_id": u_id,
        "mean_uncertainty_ood": u_ood,
        "uncertainty_ratio": u_ood / u_id,
        "softmax_mean_max_prob_id": float(sm_id.mean()),
        "softmax_mean_max_prob_ood": float(sm_ood.mean()),
        "softmax_fused_mean_max_prob_ood": float(sm_fused_ood.mean()),
        "histograms": {
            "bin_edges": HIST_BINS.tolist(),
            "fused_uncertainty_id": _hist(pid["uncertainty"]),
            "fused_uncertainty_ood": _hist(pood["uncertainty"]),
            "evidential_max_prob_ood": _hist(pood["probs"].max(axis=1)),
            "softmax_max_prob_id": _hist(sm_id),
            "softmax_max_prob_ood": _hist(sm_ood),
        },
        "n_id": int(xs[0].shape[0]),
        "n_ood": int(data.ood_views[0].shape[0]),
        "provenance": provenance(cfg.seed, {"train": cfg.to_json(), "data": data.generator}),
    }


def write_histogram_csv(report: dict, path) -> Path:
    """One row per histogram bin, one column per series."""
    hist = report["histograms"]
    series = [k for k in hist if k != "bin_edges"]
    edges = hist["bin_edges"]
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", *series])
        for i in range(len(edges) - 1):
            w.writerow([edges[i], edges[i + 1], *(hist[s][i] for s in series)])
    return path


# ---------------------------------------------------------------------------
# robustness to one low-quality view

PIPELINES = ("softmax_sf", "evidential_ds", "evidential_ider")


def _scores(model, data):
    xs, y = data.subset("test")
    out = predict_batch(model, xs)
    rep = classification_report(y, out["predicted"], out["probs"], data.class_count,
                                out.get("uncertainty"))
    return {"accuracy": rep.accuracy, "macro_f1": rep.macro_f1, "macro_auc": rep.macro_auc,
            "mean_uncertainty": rep.mean_uncertainty_id}


def run_robustness_experiment(seeds: Sequence[int] = (0, 1, 2),
                              spec: SyntheticSpec = SyntheticSpec(),
                              cfg: TrainConfig = TrainConfig(),
                              view_index: int = 1,
                              noise_sigma: Optional[float] = None) -> dict:
    """Train the three pipelines per seed and measure their drop under one noisy view.

    Pipelines: softmax heads with score averaging, and one set of evidential
    heads fused by DS-combine and by IDer.  ``noise_sigma`` defaults to five
    times the generator's sigma.
    """
    if noise_sigma is None:
        noise_sigma = 5.0 * spec.sigma
    runs = []
    for seed in seeds:
        data = make_synthetic(spec, seed)
        noisy = corrupt_view(data, view_index, noise_sigma, seed)
        evid = train(data, replace(cfg, seed=seed, head="evidential")).model
        soft = train(data, replace(cfg, seed=seed, head="softmax")).model
        models = {
            "softmax_sf": soft,
            "evidential_ds": evid.with_fusion("ds"),
            "evidential_ider": evid.with_fusion("ider"),
        }
        run = {"seed": seed}
        for name, m in models.items():
            clean, corrupt = _scores(m, data), _scores(m, noisy)
            run[name] = {"clean": clean, "corrupted": corrupt,
                         "accuracy_drop": clean["accuracy"] - corrupt["accuracy"]}
        run["ider_drop_below_sf"] = run["evidential_ider"]["accuracy_drop"] < run["softmax_sf"]["accuracy_drop"]
        runs.append(run)
    summary = {
        name: {
            "mean_clean_accuracy": float(np.mean([r[name]["clean"]["accuracy"] for r in runs])),
            "mean_accuracy_drop": float(np.mean([r[name]["accuracy_drop"] for r in runs])),
        }
        for name in PIPELINES
    }
    summary["ordering_holds_every_seed"] = all(r["ider_drop_below_sf"] for r in runs)
    config = {"spec": spec.to_json(), "train": cfg.to_json(), "view_index": view_index,
              "noise_sigma": noise_sigma, "seeds": list(seeds)}
    return {"runs": runs, "summary": summary, "provenance": provenance(list(seeds), config)}


def write_robustness_csv(report: dict, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "pipeline", "clean_accuracy", "corrupted_accuracy", "accuracy_drop"])
        for run in report["runs"]:
            for name in PIPELINES:
                r = run[name]
                w.writerow([run["seed"], name, r["clean"]["accuracy"], r["corrupted"]["accuracy"],
                            r["accuracy_drop"]])
    return path


def standard_dataset(seed: int = 0) -> Dataset:
    """The reference setup: K=4, V=3, 200 samples/class, s=4 sigma, rho=0.1."""
    return make_synthetic(SyntheticSpec(), seed)
