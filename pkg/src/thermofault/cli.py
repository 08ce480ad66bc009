"""Batch pipeline front end: synth, extract, train, classify, eval.

Each stage reads the previous stage's JSON output, so intermediates stay
inspectable. Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .density import DEFAULT_GRID, FeatureGrid, PdfFeature, feature_vector
from .embedding import (
    TrainConfig,
    embed_many,
    embedder_from_dict,
    embedder_to_dict,
    identity_embedder,
    train_embedder,
)
from .harness import (
    MODE_SUPERVISED,
    MODE_WEAK,
    SWEEP_PARAMS,
    EmbedderSpec,
    ExperimentConfig,
    compare,
    compare_table,
    replicate,
    report_table,
    report_to_dict,
    run_both,
    run_experiment,
    sweep,
    sweep_table,
)
from .images import InputFormatError, ManifestError, extract_region, load_manifest, load_thermal
from .prototypes import build_model, model_from_dict, model_to_dict, posterior, refine_centers
from .synthetic import SynthConfig, default_synth_config, synthesize, write_dataset
from .taxonomy import SubcategoryId, parse_equipment_type, parse_status

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; this project reserves 2 for I/O."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def _read_json(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_synth(args) -> int:
    if args.config is not None:
        cfg = SynthConfig.from_dict(_read_json(Path(args.config)))
    else:
        cfg = default_synth_config()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    images, manifest = synthesize(cfg)
    manifest_path = write_dataset(images, manifest, Path(args.out))
    print(f"wrote {len(images)} images and {manifest_path}")
    print(
        f"splits: labeled={len(manifest.labeled)}"
        f" unlabeled={len(manifest.unlabeled)} test={len(manifest.test)}"
    )
    tally: dict[str, list[int]] = {}
    for split_idx, split in enumerate((manifest.labeled, manifest.test)):
        for region in split:
            row = tally.setdefault(region.subcategory.label, [0, 0])
            row[split_idx] += 1
    for label in sorted(tally):
        lab, tst = tally[label]
        print(f"  {label}: labeled={lab} test={tst}")
    return EXIT_OK


def _region_record(region, split: str, feature: PdfFeature) -> dict:
    return {
        "image_ref": region.image_ref,
        "bbox": list(region.bbox),
        "split": split,
        "equipment_type": region.equipment_type.value,
        "status": None if region.status is None else region.status.value,
        "feature": feature.to_dict(),
    }


def cmd_extract(args) -> int:
    grid = FeatureGrid(args.t_lo, args.t_hi, args.grid_points)
    bandwidth = _parse_bandwidth(args.bandwidth)
    manifest = load_manifest(Path(args.manifest))
    images = {
        image_id: load_thermal(path, source_id=image_id)
        for image_id, path in manifest.image_paths.items()
    }
    records = []
    for split in ("labeled", "unlabeled", "test"):
        for region in getattr(manifest, split):
            samples = extract_region(images[region.image_ref], region.bbox)
            feature = feature_vector(samples, grid, bandwidth)
            records.append(_region_record(region, split, feature))
    _write_json(Path(args.out), {"records": records})
    print(f"wrote {len(records)} feature records to {args.out}")
    return EXIT_OK


def _parse_bandwidth(text: str):
    if text == "auto":
        return "auto"
    value = float(text)
    if value <= 0:
        raise ValueError("bandwidth must be positive")
    return value


def _load_records(path: Path) -> list[dict]:
    payload = _read_json(path)
    if not isinstance(payload, dict) or "records" not in payload:
        raise ValueError(f"{path}: not a feature file (missing 'records')")
    return payload["records"]


def _record_subcategory(rec: dict) -> SubcategoryId | None:
    status = parse_status(rec.get("status"))
    if status is None:
        return None
    return SubcategoryId(parse_equipment_type(rec["equipment_type"]), status)


def _record_vector(rec: dict) -> np.ndarray:
    return PdfFeature.from_dict(rec["feature"]).values


def cmd_train(args) -> int:
    records = _load_records(Path(args.features))
    labeled_pairs = []
    unlabeled = []
    for rec in records:
        if rec["split"] == "labeled":
            subcat = _record_subcategory(rec)
            if subcat is None:
                raise ValueError("labeled record without a status")
            labeled_pairs.append((subcat, _record_vector(rec)))
        elif rec["split"] == "unlabeled":
            unlabeled.append(_record_vector(rec))
    if not labeled_pairs:
        raise ValueError("no labeled records in the feature file")

    if args.embedder == "mlp":
        train_cfg = TrainConfig(
            hidden=args.hidden,
            out_dim=args.out_dim,
            episodes=args.episodes,
            lr=args.lr,
            seed=args.seed,
        )
        emb = train_embedder(labeled_pairs, train_cfg).embedder
        embedder_path = Path(str(args.out) + ".embedder.json")
        _write_json(embedder_path, embedder_to_dict(emb))
        print(f"wrote embedder to {embedder_path}")
        embedded = embed_many(emb, np.stack([v for _, v in labeled_pairs]))
        labeled_pairs = [(c, embedded[i]) for i, (c, _) in enumerate(labeled_pairs)]
        if unlabeled:
            unlabeled = list(embed_many(emb, np.stack(unlabeled)))

    alpha = 1.0 if args.mode == MODE_SUPERVISED else args.alpha
    model = build_model(labeled_pairs, alpha=alpha)
    if args.mode == MODE_WEAK and unlabeled:
        model = refine_centers(model, np.stack(unlabeled), iters=args.refine_iters)
    _write_json(Path(args.out), model_to_dict(model))
    print(
        f"wrote model to {args.out} (mode={args.mode}, alpha={alpha},"
        f" classes={model.n_classes}, dim={model.feature_dim})"
    )
    return EXIT_OK


def cmd_classify(args) -> int:
    model = model_from_dict(_read_json(Path(args.model)))
    records = _load_records(Path(args.features))
    emb = identity_embedder()
    if args.embedder_file is not None:
        emb = embedder_from_dict(_read_json(Path(args.embedder_file)))
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for rec in records:
        v = _record_vector(rec)
        if emb.kind != "identity":
            v = embed_many(emb, v.reshape(1, -1))[0]
        post = posterior(v, model, use_refined=True)
        lines.append(
            json.dumps(
                {
                    "image_ref": rec["image_ref"],
                    "bbox": rec["bbox"],
                    "split": rec["split"],
                    "equipment_type": rec["equipment_type"],
                    "status": rec["status"],
                    "predicted": {
                        "equipment_type": post.predicted.equipment_type.value,
                        "status": post.predicted.status.value,
                    },
                    "posterior": [
                        {
                            "equipment_type": c.equipment_type.value,
                            "status": c.status.value,
                            "distance": float(d),
                            "prob": float(p),
                        }
                        for c, d, p in zip(post.classes, post.distances, post.probs)
                    ],
                },
                sort_keys=True,
            )
        )
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    print(f"wrote {len(lines)} predictions to {args.out}")
    return EXIT_OK


def _eval_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.from_dict(_read_json(Path(args.config)))
    else:
        cfg = ExperimentConfig(synth=default_synth_config())
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def cmd_eval(args) -> int:
    cfg = _eval_config(args)
    out_dir = Path(args.out)

    def emit(name: str, report) -> None:
        _write_json(out_dir / f"{name}.json", report_to_dict(report))
        _write_text(out_dir / f"{name}.txt", report_table(report))

    if args.sweep is not None:
        values = [float(v) for v in args.values.split(",")]
        reports = sweep(cfg, args.sweep, values)
        for v, rep in zip(values, reports):
            tag = f"{v:g}".replace(".", "p").replace("-", "m")
            emit(f"report_sweep_{args.sweep}_{tag}", rep)
        table = sweep_table(args.sweep, values, reports)
        _write_text(out_dir / f"sweep_{args.sweep}.txt", table)
        print(table)
        return EXIT_OK

    if args.mode == "both":
        sup, weak = run_both(cfg)
        emit("report_supervised", sup)
        emit("report_weak", weak)
        deltas = compare(sup, weak)
        table = compare_table(deltas)
        _write_text(out_dir / "compare.txt", table)
        print(report_table(sup))
        print(report_table(weak))
        print(table)
        return EXIT_OK

    if cfg.repeats > 1:
        reports = replicate(cfg, args.mode)
        for rep in reports:
            emit(f"report_{args.mode}_seed{rep.seed}", rep)
        mean = float(np.mean([r.overall.acc_average for r in reports]))
        summary = f"mean overall accuracy over {len(reports)} seeds: {mean:.3f}"
        _write_text(out_dir / f"summary_{args.mode}.txt", summary)
        print(summary)
        return EXIT_OK

    report = run_experiment(cfg, args.mode)
    emit(f"report_{args.mode}", report)
    print(report_table(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermofault", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic thermal dataset")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--config", help="SynthConfig JSON path (default: built-in config)")
    p_synth.add_argument("--seed", type=int, help="override the config seed")
    p_synth.set_defaults(run=cmd_synth)

    p_extract = sub.add_parser("extract", help="extract density features per region")
    p_extract.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p_extract.add_argument("--out", required=True, help="output feature file")
    p_extract.add_argument("--t-lo", type=float, default=DEFAULT_GRID.t_lo)
    p_extract.add_argument("--t-hi", type=float, default=DEFAULT_GRID.t_hi)
    p_extract.add_argument("--grid-points", type=int, default=DEFAULT_GRID.n_points)
    p_extract.add_argument("--bandwidth", default="auto", help='"auto" or a positive float')
    p_extract.set_defaults(run=cmd_extract)

    p_train = sub.add_parser("train", help="build a prototype model from features")
    p_train.add_argument("--features", required=True)
    p_train.add_argument("--out", required=True, help="output model JSON")
    p_train.add_argument("--alpha", type=float, default=0.5)
    p_train.add_argument("--mode", choices=[MODE_SUPERVISED, MODE_WEAK], default=MODE_WEAK)
    p_train.add_argument("--refine-iters", type=int, default=1)
    p_train.add_argument("--embedder", choices=["identity", "mlp"], default="identity")
    p_train.add_argument("--hidden", type=int, default=32)
    p_train.add_argument("--out-dim", type=int, default=16)
    p_train.add_argument("--episodes", type=int, default=200)
    p_train.add_argument("--lr", type=float, default=0.05)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(run=cmd_train)

    p_classify = sub.add_parser("classify", help="classify feature records with a model")
    p_classify.add_argument("--model", required=True)
    p_classify.add_argument("--features", required=True)
    p_classify.add_argument("--out", required=True, help="output predictions (JSON lines)")
    p_classify.add_argument("--embedder-file", help="embedder JSON written by train")
    p_classify.set_defaults(run=cmd_classify)

    p_eval = sub.add_parser("eval", help="run the evaluation harness")
    p_eval.add_argument("--out", required=True, help="output report directory")
    p_eval.add_argument("--config", help="ExperimentConfig JSON (default: built-in synthetic)")
    p_eval.add_argument("--mode", choices=[MODE_SUPERVISED, MODE_WEAK, "both"], default="both")
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--alpha", type=float)
    p_eval.add_argument("--repeats", type=int)
    p_eval.add_argument("--sweep", choices=list(SWEEP_PARAMS))
    p_eval.add_argument("--values", help="comma-separated sweep values")
    p_eval.set_defaults(run=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "sweep", None) is not None and args.values is None:
            raise ValueError("--sweep requires --values")
        return args.run(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_VALIDATION
    except (InputFormatError, OSError, json.JSONDecodeError) as exc:
        if isinstance(exc, ManifestError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
