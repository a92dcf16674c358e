"""Command line front end: simulate, features, dist, classify, experiment."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import best_permutation_alignment, k_medoids, knn_classify, misclassification, ward_cluster
from .experiment import ExperimentPlan, derive_seed, run_experiment, stratified_split
from .features import extract_features, load_features, save_features
from .ndistance import FeatureMode, SamplingPolicy, load_matrix_csv, pairwise_matrix, save_matrix_csv
from .raster import read_pbm_file, write_pbm_file
from .simulate import load_model_file, rasterize, simulate


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randset",
        description="Classify realisations of planar random closed sets from binary images.",
    )
    parser.add_argument("--version", action="version", version=f"randset {__version__}")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("simulate", help="draw seeded realisations of a disc-process model as PBM files")
    p.add_argument("spec_file", help="model spec JSON (single model or a {models: ...} map)")
    p.add_argument("--model", default=None, help="model label when the file holds several")
    p.add_argument("--n", type=int, required=True, help="number of realisations")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="extract per-component shape features from PBM images")
    p.add_argument("inputs", nargs="+", help="PBM files or directories of PBM files")
    p.add_argument("--r", type=int, default=5, help="osculating disc radius in pixels")
    p.add_argument("--out", required=True, help="output feature JSON")
    p.add_argument("--label", default=None, help="class label applied to every input")
    p.add_argument("--drop-border-components", action="store_true",
                   help="exclude components whose boundary discs overflow the window")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("dist", help="pairwise N-distance matrix between realisations")
    p.add_argument("features_file")
    p.add_argument("--mode", default="both",
                   help="ratio | curvature | both | combined:ALPHA")
    p.add_argument("--count", default="all", help="components sampled per realisation, or 'all'")
    p.add_argument("--depth", type=int, default=2, help="functional kernel depth (1..3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV (metadata sidecar written alongside)")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("classify", help="classify or cluster realisations from a distance matrix")
    p.add_argument("matrix_csv")
    p.add_argument("--labels", default=None, help="CSV with id,label rows (required for knn)")
    p.add_argument("--method", choices=["knn", "kmedoids", "ward"], required=True)
    p.add_argument("--k", type=int, default=None, help="cluster count (default: number of classes)")
    p.add_argument("--kernel", choices=["uniform", "epanechnikov"], default="uniform")
    p.add_argument("--split-ratio", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-literal-first-merge", action="store_true",
                   help="update the first merge with the plain average of the two singleton distances")
    p.add_argument("--out", required=True, help="output JSON report")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("experiment", help="run a full experiment grid from a plan file")
    p.add_argument("plan_file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--kernel", choices=["uniform", "epanechnikov"], default=None)
    p.add_argument("--mode", default=None, help="comma-separated mode list override")
    p.add_argument("--count", default=None, help="comma-separated component count list override")
    p.add_argument("--method", default=None, help="comma-separated method list override")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--split-ratio", type=float, default=None)
    p.add_argument("--drop-border-components", action="store_true", default=None)
    p.add_argument("--paper-literal-first-merge", action="store_true", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def _labels_csv_path(out_dir: Path) -> Path:
    return out_dir / "labels.csv"


def _update_labels_csv(out_dir: Path, new_entries: dict) -> None:
    path = _labels_csv_path(out_dir)
    entries = {}
    if path.exists():
        with open(path) as f:
            for row in csv.DictReader(f):
                entries[row["id"]] = row["label"]
    entries.update(new_entries)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "label"])
        for key in sorted(entries):
            w.writerow([key, entries[key]])


def cmd_simulate(args) -> int:
    specs = load_model_file(args.spec_file, label=args.model)
    if len(specs) != 1:
        raise ValueError(f"spec file holds {sorted(specs)}; pick one with --model")
    label, spec = next(iter(specs.items()))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = {}
    for i in range(args.n):
        raster = rasterize(simulate(spec, derive_seed(args.seed, "sim", label, i)), spec.window)
        name = f"{label}_{i:03d}"
        write_pbm_file(out_dir / f"{name}.pbm", raster)
        entries[name] = label
    _update_labels_csv(out_dir, entries)
    print(f"wrote {args.n} realisations of {label!r} to {out_dir}")
    return 0


def _collect_pbm_inputs(inputs) -> list[Path]:
    files = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files.extend(sorted(path.glob("*.pbm")))
        elif path.exists():
            files.append(path)
        else:
            raise FileNotFoundError(f"input {path} does not exist")
    if not files:
        raise ValueError("no PBM inputs found")
    return files


def cmd_features(args) -> int:
    files = _collect_pbm_inputs(args.inputs)
    # Class labels: explicit flag wins, else any labels.csv beside the input.
    known = {}
    for directory in {f.parent for f in files}:
        path = _labels_csv_path(directory)
        if path.exists():
            with open(path) as f:
                for row in csv.DictReader(f):
                    known[row["id"]] = row["label"]
    feats = []
    for f in files:
        label = args.label if args.label is not None else known.get(f.stem)
        feats.append(
            extract_features(
                read_pbm_file(f),
                r=args.r,
                source_id=f.stem,
                class_label=label,
                drop_border_components=args.drop_border_components,
            )
        )
    save_features(args.out, feats)
    print(f"extracted features of {len(feats)} realisations (r={args.r}) to {args.out}")
    return 0


def cmd_dist(args) -> int:
    feats = load_features(args.features_file)
    mode = FeatureMode.parse(args.mode, depth=args.depth)
    policy = SamplingPolicy(count=SamplingPolicy.parse_count(args.count), seed=args.seed)
    dm = pairwise_matrix(feats, mode, policy)
    save_matrix_csv(args.out, dm)
    print(f"wrote {dm.n}x{dm.n} distance matrix ({mode.spec_string()}, count={policy.count_string()}) to {args.out}")
    return 0


def _read_labels_csv(path) -> dict:
    with open(path) as f:
        return {row["id"]: row["label"] for row in csv.DictReader(f)}


def cmd_classify(args) -> int:
    dm = load_matrix_csv(args.matrix_csv)
    truth_map = _read_labels_csv(args.labels) if args.labels else None
    if truth_map is not None:
        missing = [i for i in dm.ids if i not in truth_map]
        if missing:
            raise ValueError(f"labels file lacks ids: {missing[:5]}")
        truth = np.array([truth_map[i] for i in dm.ids])
        classes = np.unique(truth)
    else:
        truth = None
        classes = None

    report = {
        "method": args.method,
        "params": {"kernel": args.kernel, "k": args.k, "split_ratio": args.split_ratio},
        "seed": args.seed,
        "matrix": {"mode": dm.mode.spec_string(), "count": dm.policy.count_string(), "r": dm.r},
    }

    if args.method == "knn":
        if truth is None:
            raise ValueError("knn needs --labels for training")
        rng = np.random.default_rng(np.random.SeedSequence(derive_seed(args.seed, "split")))
        train_idx, test_idx = stratified_split(truth, args.split_ratio, rng)
        preds, posts, classes_, m_used = knn_classify(
            truth[train_idx],
            dm.values[np.ix_(train_idx, train_idx)],
            dm.values[np.ix_(test_idx, train_idx)],
            kernel=args.kernel,
        )
        report["params"]["m"] = int(m_used)
        report["per_item"] = [
            {
                "id": dm.ids[int(t)],
                "truth": str(truth[t]),
                "pred": str(preds[j]),
                "posterior": {str(c): float(p) for c, p in zip(classes_, posts[j])},
            }
            for j, t in enumerate(test_idx)
        ]
        fixed = misclassification(preds, truth[test_idx], "fixed")
        best = misclassification(preds, truth[test_idx], "best_permutation")
    else:
        k = args.k if args.k is not None else (len(classes) if classes is not None else None)
        if k is None:
            raise ValueError(f"{args.method} needs --k or --labels to infer the cluster count")
        if args.method == "kmedoids":
            assign, medoids = k_medoids(dm.values, k, seed=args.seed)
            report["medoid_ids"] = [dm.ids[int(i)] for i in medoids]
        else:
            assign = ward_cluster(dm.values, k, first_merge_average=args.paper_literal_first_merge)
        if truth is not None:
            # Cluster indices are arbitrary; report them aligned to the truth
            # alphabet by index for the fixed rate, and permutation-optimal
            # for the best rate.
            indexed = np.array([str(classes[min(a, len(classes) - 1)]) for a in assign])
            fixed = misclassification(indexed, truth, "fixed")
            aligned, best = best_permutation_alignment(assign, truth)
            report["per_item"] = [
                {"id": dm.ids[j], "truth": str(truth[j]), "pred": str(aligned[j]), "cluster": int(assign[j])}
                for j in range(dm.n)
            ]
        else:
            fixed = best = None
            report["per_item"] = [
                {"id": dm.ids[j], "truth": None, "pred": None, "cluster": int(assign[j])}
                for j in range(dm.n)
            ]
    report["misclassification_fixed"] = fixed
    report["misclassification_best_perm"] = best
    Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
    if fixed is not None:
        print(f"{args.method}: misclassification fixed={fixed:.4f} best_perm={best:.4f}")
    else:
        print(f"{args.method}: clustered {dm.n} realisations into {k} classes")
    return 0


def cmd_experiment(args) -> int:
    doc = json.loads(Path(args.plan_file).read_text())
    overrides = {
        "master_seed": args.seed,
        "r": args.r,
        "depth": args.depth,
        "kernel": args.kernel,
        "repetitions": args.repetitions,
        "split_ratio": args.split_ratio,
    }
    if args.mode is not None:
        overrides["modes"] = [m.strip() for m in args.mode.split(",") if m.strip()]
    if args.count is not None:
        overrides["component_counts"] = [c.strip() for c in args.count.split(",") if c.strip()]
    if args.method is not None:
        overrides["methods"] = [m.strip() for m in args.method.split(",") if m.strip()]
    if args.drop_border_components:
        overrides["drop_border_components"] = True
    if args.paper_literal_first_merge:
        overrides["first_merge_average"] = True
    doc.update({k: v for k, v in overrides.items() if v is not None})
    plan = ExperimentPlan.from_dict(doc)
    log = (lambda msg: None) if args.quiet else None
    report = run_experiment(plan, args.out_dir, log=log)
    print(
        f"experiment finished in {report['total_seconds']}s; "
        f"outputs in {args.out_dir} (miscls_box.csv, accuracy_hist.csv, report.json)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
