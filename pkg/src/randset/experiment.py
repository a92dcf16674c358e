"""Reproducible experiment grid over modes, component counts and methods.

A plan names the classes (disc-process models or directories of PBM
files), the feature settings, and the grid. For every (mode, count) cell
one pairwise distance matrix is computed; every repetition then re-draws
the stratified train/test split for the supervised classifier and re-seeds
the k-medoids initialisation. Outputs are plot-ready CSVs plus a JSON
report with full provenance; identical plans and master seeds give
byte-identical CSVs.
"""

from __future__ import annotations

import json
import sys
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classify import best_permutation_alignment, k_medoids, knn_classify, misclassification, ward_cluster
from .features import RealisationFeatures, extract_features
from .ndistance import DistanceMatrix, FeatureMode, SamplingPolicy, pairwise_matrix
from .raster import read_pbm_file
from .simulate import ModelSpec, default_model_spec, load_model_spec, rasterize, simulate

__all__ = ["ClassSource", "ExperimentPlan", "run_experiment", "default_desk_plan", "derive_seed"]

_METHODS = ("knn", "kmedoids", "ward")


def derive_seed(master: int, *parts) -> int:
    """Deterministic 64-bit sub-seed from a master seed and a key path."""
    key = tuple(p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts)
    ss = np.random.SeedSequence(entropy=master, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ClassSource:
    """One class: simulated from a model spec or read from a PBM directory."""

    label: str
    model: ModelSpec | None = None
    directory: str | None = None

    def __post_init__(self):
        if (self.model is None) == (self.directory is None):
            raise ValueError(f"class {self.label!r}: exactly one of model/directory required")


@dataclass
class ExperimentPlan:
    classes: list[ClassSource]
    realisations_per_class: int = 20
    r: int = 5
    modes: list[str] = field(default_factory=lambda: ["ratio", "curvature", "both"])
    component_counts: list[int | None] = field(default_factory=lambda: [10, 20, None])
    split_ratio: float = 0.75
    repetitions: int = 1
    depth: int = 2
    kernel: str = "uniform"
    methods: list[str] = field(default_factory=lambda: list(_METHODS))
    master_seed: int = 0
    drop_border_components: bool = False
    first_merge_average: bool = False

    def __post_init__(self):
        if not self.classes:
            raise ValueError("plan needs at least one class")
        for m in self.methods:
            if m not in _METHODS:
                raise ValueError(f"unknown method {m!r}, expected subset of {_METHODS}")
        if "knn" in self.methods:
            n = self.realisations_per_class
            if n < 4:
                raise ValueError("need at least 4 realisations per class for a train/test split")
            n_train = int(self.split_ratio * n)
            if n_train < 1 or n - n_train < 1:
                raise ValueError(f"split ratio {self.split_ratio} leaves an empty side for {n} per class")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentPlan":
        classes = []
        for c in doc["classes"]:
            model = None
            if "model" in c:
                model = load_model_spec(c["model"])
            elif "default_model" in c:
                model = default_model_spec(c["default_model"])
            classes.append(ClassSource(label=c["label"], model=model, directory=c.get("dir")))
        counts = [SamplingPolicy.parse_count(x) for x in doc.get("component_counts", [10, 20, "all"])]
        return cls(
            classes=classes,
            realisations_per_class=int(doc.get("realisations_per_class", 20)),
            r=int(doc.get("r", 5)),
            modes=list(doc.get("modes", ["ratio", "curvature", "both"])),
            component_counts=counts,
            split_ratio=float(doc.get("split_ratio", 0.75)),
            repetitions=int(doc.get("repetitions", 1)),
            depth=int(doc.get("depth", 2)),
            kernel=doc.get("kernel", "uniform"),
            methods=list(doc.get("methods", list(_METHODS))),
            master_seed=int(doc.get("master_seed", 0)),
            drop_border_components=bool(doc.get("drop_border_components", False)),
            first_merge_average=bool(doc.get("first_merge_average", False)),
        )

    def to_dict(self) -> dict:
        classes = []
        for c in self.classes:
            entry = {"label": c.label}
            if c.model is not None:
                entry["model"] = _model_to_dict(c.model)
            else:
                entry["dir"] = c.directory
            classes.append(entry)
        return {
            "classes": classes,
            "realisations_per_class": self.realisations_per_class,
            "r": self.r,
            "modes": self.modes,
            "component_counts": ["all" if c is None else c for c in self.component_counts],
            "split_ratio": self.split_ratio,
            "repetitions": self.repetitions,
            "depth": self.depth,
            "kernel": self.kernel,
            "methods": self.methods,
            "master_seed": self.master_seed,
            "drop_border_components": self.drop_border_components,
            "first_merge_average": self.first_merge_average,
        }


def _model_to_dict(spec: ModelSpec) -> dict:
    doc = {"kind": spec.kind, "window": list(spec.window)}
    doc["disc_radius"] = (
        list(spec.disc_radius) if isinstance(spec.disc_radius, (tuple, list)) else spec.disc_radius
    )
    if spec.kind == "boolean":
        doc["intensity"] = spec.intensity
    elif spec.kind == "cluster":
        c = spec.cluster
        doc["cluster"] = {
            "parent_intensity": c.parent_intensity,
            "mean_offspring": c.mean_offspring,
            "cluster_radius": c.cluster_radius,
        }
    else:
        hc = spec.hardcore
        doc["hardcore"] = {
            "proposal_intensity": hc.proposal_intensity,
            "hard_core_distance": hc.hard_core_distance,
        }
    return doc


def default_desk_plan(repetitions: int = 10, master_seed: int = 20240) -> ExperimentPlan:
    """Desk-scale grid over the three shipped model classes."""
    return ExperimentPlan(
        classes=[
            ClassSource(label=name, model=default_model_spec(name))
            for name in ("boolean", "cluster", "hardcore")
        ],
        realisations_per_class=20,
        r=5,
        repetitions=repetitions,
        master_seed=master_seed,
    )


def _load_class_realisations(plan: ExperimentPlan) -> list[RealisationFeatures]:
    feats = []
    for ci, cls in enumerate(plan.classes):
        if cls.model is not None:
            rasters = [
                rasterize(simulate(cls.model, derive_seed(plan.master_seed, "sim", ci, i)), cls.model.window)
                for i in range(plan.realisations_per_class)
            ]
        else:
            files = sorted(Path(cls.directory).glob("*.pbm"))
            if len(files) < plan.realisations_per_class:
                raise ValueError(
                    f"class {cls.label!r}: {len(files)} PBM files found, "
                    f"need {plan.realisations_per_class}"
                )
            rasters = [read_pbm_file(f) for f in files[: plan.realisations_per_class]]
        for i, raster in enumerate(rasters):
            feats.append(
                extract_features(
                    raster,
                    r=plan.r,
                    source_id=f"{cls.label}_{i:03d}",
                    class_label=cls.label,
                    drop_border_components=plan.drop_border_components,
                )
            )
    return feats


def stratified_split(labels: np.ndarray, ratio: float, rng: np.random.Generator):
    """Per-class shuffle, then floor(ratio * class size) items train."""
    train, test = [], []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        perm = rng.permutation(idx)
        n_train = min(int(ratio * len(idx)), len(idx) - 1)
        train.extend(perm[:n_train].tolist())
        test.extend(perm[n_train:].tolist())
    return np.array(sorted(train)), np.array(sorted(test))


def _per_class_counts(truth, pred, classes):
    rows = []
    for c in classes:
        sel = truth == c
        correct = int(np.sum(pred[sel] == truth[sel]))
        rows.append((c, correct, int(sel.sum()) - correct))
    return rows


def run_experiment(plan: ExperimentPlan, out_dir, log=None) -> dict:
    """Run the full grid and write miscls_box.csv, accuracy_hist.csv, report.json."""
    t_start = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log = log or (lambda msg: print(msg, file=sys.stderr))

    feats = _load_class_realisations(plan)
    labels = np.array([f.class_label for f in feats])
    ids = [f.source_id for f in feats]
    classes = np.unique(labels)
    k = len(classes)

    box_path = out_dir / "miscls_box.csv"
    hist_path = out_dir / "accuracy_hist.csv"
    summary = {}
    timing = {"features_done": time.perf_counter() - t_start}

    with open(box_path, "w") as box_f, open(hist_path, "w") as hist_f:
        box_f.write("method,mode,count,repetition,rate\n")
        hist_f.write("method,mode,count,repetition,class,correct,incorrect\n")
        for mode_str in plan.modes:
            mode = FeatureMode.parse(mode_str, depth=plan.depth)
            for count in plan.component_counts:
                count_str = "all" if count is None else str(count)
                policy = SamplingPolicy(
                    count=count, seed=derive_seed(plan.master_seed, "dist", mode_str, count_str)
                )
                t0 = time.perf_counter()
                dm = pairwise_matrix(feats, mode, policy)
                timing[f"matrix/{mode_str}/{count_str}"] = time.perf_counter() - t0
                log(f"matrix {mode_str}/{count_str} in {timing[f'matrix/{mode_str}/{count_str}']:.1f}s")
                for rep in range(plan.repetitions):
                    results = _run_cell(plan, dm.values, labels, classes, k, rep)
                    for method in plan.methods:
                        rate, truth, pred = results[method]
                        box_f.write(f"{method},{mode_str},{count_str},{rep},{rate!r}\n")
                        for c, good, bad in _per_class_counts(truth, pred, classes):
                            hist_f.write(
                                f"{method},{mode_str},{count_str},{rep},{c},{good},{bad}\n"
                            )
                        summary.setdefault(method, {}).setdefault(mode_str, {}).setdefault(
                            count_str, []
                        ).append(rate)
                box_f.flush()
                hist_f.flush()

    means = {
        method: {
            mode_str: {count_str: float(np.mean(rates)) for count_str, rates in by_count.items()}
            for mode_str, by_count in by_mode.items()
        }
        for method, by_mode in summary.items()
    }
    report = {
        "schema": 1,
        "version": __version__,
        "plan": plan.to_dict(),
        "n_realisations": len(feats),
        "ids": ids,
        "classes": classes.tolist(),
        "mean_rates": means,
        "timing_seconds": {k_: round(v, 3) for k_, v in timing.items()},
        "total_seconds": round(time.perf_counter() - t_start, 3),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    return report


def _run_cell(plan: ExperimentPlan, values: np.ndarray, labels, classes, k: int, rep: int):
    """One repetition of every method on one distance matrix."""
    results = {}
    if "knn" in plan.methods:
        rng = np.random.default_rng(
            np.random.SeedSequence(derive_seed(plan.master_seed, "split", rep))
        )
        train_idx, test_idx = stratified_split(labels, plan.split_ratio, rng)
        preds, _, _, _ = knn_classify(
            labels[train_idx],
            values[np.ix_(train_idx, train_idx)],
            values[np.ix_(test_idx, train_idx)],
            kernel=plan.kernel,
        )
        truth = labels[test_idx]
        results["knn"] = (misclassification(preds, truth, "fixed"), truth, preds)
    if "kmedoids" in plan.methods:
        assign, _ = k_medoids(values, k, seed=derive_seed(plan.master_seed, "kmedoids", rep))
        aligned, rate = best_permutation_alignment(assign, labels)
        results["kmedoids"] = (rate, labels, aligned)
    if "ward" in plan.methods:
        assign = ward_cluster(values, k, first_merge_average=plan.first_merge_average)
        aligned, rate = best_permutation_alignment(assign, labels)
        results["ward"] = (rate, labels, aligned)
    return results
