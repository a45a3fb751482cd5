"""Command-line entry point: ``nucleograde run | train-nucleoli | eval | synth | init-config``.

Exit codes: 0 success, 1 configuration error, 2 input error, 3 some
images or stages failed (partial results are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, pipeline, plotting
from .config import SCHEMA, PipelineConfig, dump_config, load_config
from .errors import ConfigError, MissingGroundTruth, ModelFormatError, NucleogradeError

log = logging.getLogger("nucleograde")

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")


def _load_gt(centers, scores) -> io.GroundTruth:
    try:
        return io.GroundTruth.load(centers, scores)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read ground truth: {exc}") from exc


def _evaluation_block(out: Path, gt: io.GroundTruth, centers, scores, radius: float) -> dict:
    try:
        ev = pipeline.evaluate(centers, gt, radius, scores if gt.scores else None)
    except MissingGroundTruth as exc:
        raise InputError(str(exc.args[0])) from exc
    if ev.confusion is not None:
        (out / "figures").mkdir(exist_ok=True)
        plotting.save_confusion_matrix(out / "figures" / "confusion_matrix.png", ev.confusion)
    block = ev.to_dict()
    block["match_radius"] = radius
    return block


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg.run.workers = args.workers
        cfg.validate()
    try:
        model = pipeline.load_nucleoli_model(cfg)
    except ModelFormatError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        paths = io.list_images(args.input)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    if not paths:
        raise InputError(f"no images found in {args.input}")
    gt = _load_gt(args.gt, args.gt_scores) if (args.gt or args.gt_scores) else None
    try:
        baseline = pipeline.resolve_baseline(cfg, model)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot measure baseline: {exc}") from exc

    out = Path(args.output)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    model_name = Path(cfg.run.nucleoli_model).name if cfg.run.nucleoli_model else None
    results = pipeline.process_paths(paths, cfg, baseline, model)

    center_rows, nucleus_rows, summary_rows, all_features = [], [], [], []
    failures = 0
    for path, res in zip(paths, results):
        failures += res.n_failures
        report = pipeline.image_report(res, cfg, baseline, model_name)
        (out / f"{res.image_id}.json").write_text(pipeline.dumps_report(report))
        if res.labels.size:
            io.write_label_png(out / f"{res.image_id}_labels.png", res.labels)
        center_rows += [(res.image_id, x, y) for x, y in res.seed_centers()]
        for d in report["nuclei"]:
            nucleus_rows.append([res.image_id, d["id"], d["quarter"], d["centroid"][0],
                                 d["centroid"][1], d["area"], d["mean_intensity"],
                                 d["circularity"], d["nucleoli_count"]])
        qs = [q.score for q in res.quarters] + [None] * (4 - len(res.quarters))
        summary_rows.append([res.image_id, len(res.seed_centers()), len(res.nuclei),
                             *["" if s is None else s for s in qs[:4]],
                             "" if res.slide_score is None else res.slide_score,
                             res.n_failures])
        all_features += [n.features for n in res.nuclei]
        if args.overlays and res.labels.size:
            plotting.save_overlay(out / "figures" / f"{res.image_id}_overlay.png",
                                  io.read_image(path), res.labels,
                                  res.seed_centers(), title=f"{res.image_id}  score {res.slide_score}")
        log.info("%s: %d nuclei, slide score %s", res.image_id, len(res.nuclei), res.slide_score)

    io.write_centers(out / "centers.csv", center_rows)
    io.write_rows(out / "nuclei.csv",
                  ["image_id", "nucleus_id", "quarter", "x", "y", "area", "mean_intensity",
                   "circularity", "nucleoli_count"], nucleus_rows)
    io.write_rows(out / "summary.csv",
                  ["image_id", "n_seeds", "n_nuclei", "q1", "q2", "q3", "q4", "slide_score",
                   "failures"], summary_rows)
    plotting.save_feature_histograms(out / "figures" / "feature_histograms.png",
                                     all_features, baseline)
    summary = {
        "schema": SCHEMA,
        "config_hash": cfg.hash(),
        "baseline": baseline.to_dict(),
        "images": {r.image_id: {"slide_score": r.slide_score, "n_nuclei": len(r.nuclei),
                                "failures": r.n_failures} for r in results},
    }
    if gt is not None:
        centers = {r.image_id: r.seed_centers() for r in results}
        scores = {r.image_id: r.slide_score for r in results}
        summary["evaluation"] = _evaluation_block(out, gt, centers if gt.centers else {},
                                                  scores, cfg.run.match_radius)
    _write_json(out / "report.json", summary)
    if failures:
        log.warning("%d failure(s); see the per-image JSON files", failures)
        return EXIT_PARTIAL
    return EXIT_OK


def _read_predictions(pred_dir: Path):
    try:
        centers = io.read_centers(pred_dir / "centers.csv")
    except OSError as exc:
        raise InputError(f"cannot read predictions: {exc}") from exc
    scores = {}
    summary = pred_dir / "summary.csv"
    if summary.exists():
        scores = io.read_summary_scores(summary)
        for image_id in scores:
            centers.setdefault(image_id, [])
    return centers, scores


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    radius = args.match_radius if args.match_radius is not None else cfg.run.match_radius
    if radius <= 0:
        raise ConfigError("match radius must be positive")
    pred_dir = Path(args.pred)
    centers, scores = _read_predictions(pred_dir)
    gt = _load_gt(args.gt, args.gt_scores)
    out = Path(args.output) if args.output else pred_dir
    out.mkdir(parents=True, exist_ok=True)
    block = _evaluation_block(out, gt, centers if gt.centers else {}, scores, radius)
    _write_json(out / "eval.json", block)
    print(json.dumps({k: v for k, v in block.items() if k != "per_image"}, sort_keys=True, indent=1))
    return EXIT_OK


def cmd_train(args) -> int:
    from .features import NUCLEOLUS, annotated_descriptor, save_model, svm_train

    cfg = load_config(args.config)
    c_reg = args.c_reg if args.c_reg is not None else cfg.features.svm_c
    try:
        rows = io.read_point_annotations(args.annotations, labelled=True)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read annotations: {exc}") from exc
    if not rows:
        raise InputError("annotation file has no rows")
    images: dict[Path, np.ndarray] = {}
    X, y = [], []
    for path, x, yy, lab in rows:
        if path not in images:
            try:
                images[path] = io.read_image(path)
            except NucleogradeError as exc:
                raise InputError(str(exc)) from exc
        try:
            X.append(annotated_descriptor(images[path], x, yy, cfg))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        y.append(lab)
    try:
        model = svm_train(np.array(X), np.array(y), c_reg, positive_label=NUCLEOLUS)
    except NucleogradeError as exc:
        raise InputError(f"cannot train: {exc}") from exc
    save_model(model, args.output)
    acc = float(np.mean([(s >= 0) == (t == NUCLEOLUS)
                         for s, t in zip(model.decision(np.array(X)), y)]))
    print(f"trained on {len(y)} samples, training accuracy {acc:.3f}, model -> {args.output}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import make_slide

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.count):
        slide = make_slide(seed=args.seed + i, size=args.size, n_nuclei=args.nuclei)
        image_id = f"synthetic_{args.seed + i:03d}"
        io.write_image(out / f"{image_id}.png", slide.rgb)
        rows += [(image_id, x, y) for x, y in slide.centers]
    io.write_centers(out / "centers.csv", rows)
    print(f"wrote {args.count} image(s) and centers.csv to {out}")
    return EXIT_OK


def cmd_init_config(args) -> int:
    text = dump_config(PipelineConfig())
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nucleograde",
                                description="Nuclear pleomorphism scoring of H&E images.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="detect, segment and score every image in a folder")
    r.add_argument("--config", help="TOML config (defaults if omitted)")
    r.add_argument("--input", required=True, help="folder of RGB images")
    r.add_argument("--output", required=True, help="folder for reports")
    r.add_argument("--overlays", action="store_true", help="also write outline overlays")
    r.add_argument("--gt", help="ground-truth centres CSV (image_id,x,y)")
    r.add_argument("--gt-scores", help="ground-truth slide scores CSV (image_id,score)")
    r.add_argument("--workers", type=int, help="parallel worker processes")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("train-nucleoli", help="train the nucleolus classifier")
    t.add_argument("--annotations", required=True, help="CSV image_path,x,y,label (1 nucleolus, 2 other)")
    t.add_argument("--output", required=True, help="model file to write")
    t.add_argument("--config", help="TOML config")
    t.add_argument("--c-reg", type=float, help="SVM penalty (default from config)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a previous run against ground truth")
    e.add_argument("--pred", required=True, help="output folder of a previous run")
    e.add_argument("--gt", help="ground-truth centres CSV")
    e.add_argument("--gt-scores", help="ground-truth slide scores CSV")
    e.add_argument("--match-radius", type=float, help="pixels (default from config)")
    e.add_argument("--config", help="TOML config")
    e.add_argument("--output", help="folder for eval.json (default: --pred)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="write synthetic test slides with known centres")
    s.add_argument("--output", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--size", type=int, default=512)
    s.add_argument("--nuclei", type=int, default=30)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("init-config", help="print a config file with every default")
    c.add_argument("--output", help="write here instead of stdout")
    c.set_defaults(func=cmd_init_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "eval" and not (args.gt or args.gt_scores):
        print("error: eval needs --gt and/or --gt-scores", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
