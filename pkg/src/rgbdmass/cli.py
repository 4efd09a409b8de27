"""Command-line interface: dataset generation, training, evaluation, metrics."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cameras import NUM_VIEWS, Intrinsics


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rgbdmass")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="render an RGBD dataset from a model directory")
    gen.add_argument("--models", required=True, help="directory of .obj models with .json sidecars")
    gen.add_argument("--out", required=True)
    gen.add_argument("--views", type=int, default=NUM_VIEWS)
    gen.add_argument("--split", type=float, default=0.9)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--width", type=int, default=640)
    gen.add_argument("--height", type=int, default=480)

    corpus = sub.add_parser("corpus", help="generate a procedural model corpus")
    corpus.add_argument("--out", required=True)
    corpus.add_argument("--count", type=int, required=True)
    corpus.add_argument("--seed", type=int, default=0)

    train = sub.add_parser("train", help="run a training experiment from a config file")
    train.add_argument("--config", required=True)

    evl = sub.add_parser("eval", help="evaluate a checkpoint on a manifest")
    evl.add_argument("--checkpoint", required=True)
    evl.add_argument("--manifest", required=True)
    evl.add_argument("--out", required=True, help="output JSON report path")
    evl.add_argument("--split", default="test")
    evl.add_argument("--eval-seed", type=int, default=0)

    met = sub.add_parser("metrics", help="compute metric reports from prediction files")
    met.add_argument("--pred", required=True, help="JSONL with id + mass (+ depth_path)")
    met.add_argument("--truth", required=True, help="JSONL with id + mass (+ depth_path)")

    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


def _cmd_generate(args) -> int:
    from .dataset import build_dataset

    manifest = build_dataset(
        args.models, args.out, split_fraction=args.split, seed=args.seed,
        views=args.views, intrinsics=Intrinsics.kinect(args.width, args.height),
    )
    train_ids = {r.id for r in manifest.split_records("train")}
    test_ids = {r.id for r in manifest.split_records("test")}
    print(
        f"wrote {len(manifest.records)} samples "
        f"({len(train_ids)} train / {len(test_ids)} test objects) to {args.out}"
    )
    return 0


def _cmd_corpus(args) -> int:
    from .corpus import make_corpus

    ids = make_corpus(args.out, count=args.count, seed=args.seed)
    print(f"wrote {len(ids)} models to {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .config import ExperimentConfig
    from .training import run_experiment

    config = ExperimentConfig.from_file(args.config)
    result = run_experiment(config)
    if result.history:
        last = result.history[-1]
        print(
            f"finished: alde={last['alde']:.4f} ape={last['ape']:.4f} "
            f"mnre={last['mnre']:.4f} q={last['q']:.4f}"
        )
    print(f"best checkpoint: {result.best_checkpoint}")
    return 0


def _cmd_eval(args) -> int:
    from .checkpoint import load_checkpoint
    from .evaluation import evaluate

    model = load_checkpoint(args.checkpoint)
    report, predictions = evaluate(
        model, args.manifest, split=args.split or None,
        image_size=model.build_config["image_size"],
        num_points=model.build_config["num_points"],
        eval_seed=args.eval_seed,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json() + "\n")
    pred_path = out.with_suffix(".predictions.jsonl")
    pred_path.write_text("".join(json.dumps(p) + "\n" for p in predictions))
    print(report.to_json())
    print(f"per-sample predictions: {pred_path}")
    return 0


def _cmd_metrics(args) -> int:
    from .objectives import depth_metric_report, mass_metrics_report
    from .pngio import read_png

    pred = _read_jsonl_by_id(args.pred)
    truth = _read_jsonl_by_id(args.truth)
    shared = sorted(set(pred) & set(truth))
    if not shared:
        print("no shared ids between the two files", file=sys.stderr)
        return 1

    mass_report = mass_metrics_report(
        [truth[i]["mass"] for i in shared], [pred[i]["mass"] for i in shared]
    )
    print(mass_report.to_json())

    if all("depth_path" in truth[i] and "depth_path" in pred[i] for i in shared):
        import numpy as np

        ys, ps = [], []
        for i in shared:
            t = read_png(Path(args.truth).parent / truth[i]["depth_path"]).astype(float)
            p = read_png(Path(args.pred).parent / pred[i]["depth_path"]).astype(float)
            both = (t > 0) & (p > 0)
            ys.append(t[both])
            ps.append(p[both])
        depth_report = depth_metric_report(np.concatenate(ys), np.concatenate(ps))
        print(depth_report.to_json())
    return 0


def _read_jsonl_by_id(path: str) -> dict:
    records = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            key = (rec["id"], rec.get("view_index", 0))
            records[key] = rec
    return records


_COMMANDS = {
    "generate": _cmd_generate,
    "corpus": _cmd_corpus,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "metrics": _cmd_metrics,
}


if __name__ == "__main__":
    raise SystemExit(main())
