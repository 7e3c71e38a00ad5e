"""Command-line entry point: ``evident-fuse <subcommand>``.

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
Verbosity comes from the ``EVIDENT_FUSE_LOG`` environment variable
(``error``, ``info`` or ``debug``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .classifier import (
    TrainConfig,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    train,
)
from .data import DatasetManifest, SyntheticSpec, generate_synthetic, make_synthetic
from .errors import ValidationError
from .experiments import (
    format_conflict_table,
    run_conflict_demo,
    run_ood_experiment,
    run_robustness_experiment,
    write_histogram_csv,
    write_robustness_csv,
)
from .fusion import RULES, combine_all
from .metrics import classification_report
from .opinion import DirichletOpinion

log = logging.getLogger("evident_fuse")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read_json(path: str):
    if path == "-":
        text = sys.stdin.read()
    else:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"file not found: {p}")
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})")


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    print(text)


def _config(args) -> TrainConfig:
    cfg = TrainConfig.from_json(_read_json(args.config)) if args.config else TrainConfig()
    return replace(cfg, seed=args.seed)


def _write_log(records, path: Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_gen_data(args) -> None:
    spec = SyntheticSpec.from_json(_read_json(args.spec)) if args.spec else SyntheticSpec()
    manifest = generate_synthetic(spec, args.seed, args.out)
    print(str(Path(args.out) / "manifest.json"))
    log.info("wrote %d views to %s", len(manifest.views), args.out)


def cmd_train(args) -> None:
    data = DatasetManifest.load(args.manifest).load_dataset()
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(data, cfg)
    save_checkpoint(result, out / "checkpoint.json")
    _write_log(result.log, out / "train_log.jsonl")
    print(json.dumps(result.log[-1], sort_keys=True))


def cmd_evaluate(args) -> None:
    result = load_checkpoint(args.checkpoint)
    data = DatasetManifest.load(args.manifest).load_dataset()
    model = result.model.with_fusion(args.rule) if args.rule else result.model
    xs, y = data.subset(args.split)
    pred = predict_batch(model, xs)
    ood_u = None
    if data.ood_views is not None and model.head == "evidential":
        ood_u = predict_batch(model, data.ood_views)["uncertainty"]
    report = classification_report(y, pred["predicted"], pred["probs"], data.class_count,
                                   pred.get("uncertainty"), ood_u)
    _emit(report.to_json(), args.out)


def cmd_fuse(args) -> None:
    payload = _read_json(args.opinions)
    if not isinstance(payload, list):
        raise ValidationError("expected a JSON array of opinion objects")
    opinions = [DirichletOpinion.from_json(o) for o in payload]
    _emit(combine_all(opinions, args.rule).to_json(), args.out)


def cmd_demo_zadeh(args) -> None:
    report = run_conflict_demo()
    print(format_conflict_table(report))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")


def cmd_exp_ood(args) -> None:
    cfg = _config(args)
    if args.manifest:
        data = DatasetManifest.load(args.manifest).load_dataset()
    else:
        data = make_synthetic(SyntheticSpec(), args.seed)
    model = load_checkpoint(args.checkpoint).model if args.checkpoint else train(data, cfg).model
    report = run_ood_experiment(model, data, cfg=cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_histogram_csv(report, out / "ood_histograms.csv")
    _emit(report, str(out / "ood_report.json"))


def cmd_exp_robustness(args) -> None:
    cfg = _config(args)
    spec = SyntheticSpec.from_json(_read_json(args.spec)) if args.spec else SyntheticSpec()
    seeds = [args.seed + i for i in range(args.n_seeds)]
    report = run_robustness_experiment(seeds, spec, cfg, args.view, args.noise_sigma)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_robustness_csv(report, out / "robustness.csv")
    _emit(report, str(out / "robustness_report.json"))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="evident-fuse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-data", help="generate a synthetic multi-view dataset")
    s.add_argument("--spec", help="synthetic spec JSON (default: the standard setup)")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", help="train per-view evidential heads")
    s.add_argument("--manifest", required=True)
    s.add_argument("--config", help="TrainConfig JSON")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="directory for checkpoint.json and train_log.jsonl")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="metrics for a checkpoint on a dataset split")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--split", default="test", choices=("train", "val", "test"))
    s.add_argument("--rule", choices=RULES, help="override the checkpoint's fusion rule")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("fuse", help="combine opinions from a JSON array")
    s.add_argument("opinions", help="JSON file, or - for stdin")
    s.add_argument("--rule", choices=RULES, default="ider")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("demo-zadeh", help="DS-combine vs IDer on Zadeh's example")
    s.add_argument("--out", help="also write the JSON report here")
    s.set_defaults(func=cmd_demo_zadeh)

    s = sub.add_parser("exp-ood", help="fused uncertainty on in-distribution vs OOD samples")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--manifest", help="dataset with an OOD cluster (default: standard synthetic)")
    s.add_argument("--checkpoint", help="trained evidential model (default: train one)")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_exp_ood)

    s = sub.add_parser("exp-robustness", help="accuracy drop with one corrupted view")
    s.add_argument("--seed", type=int, required=True, help="first seed; runs seed..seed+n-1")
    s.add_argument("--n-seeds", type=int, default=3)
    s.add_argument("--spec")
    s.add_argument("--config")
    s.add_argument("--view", type=int, default=1)
    s.add_argument("--noise-sigma", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_exp_robustness)
    return p


def main(argv=None) -> int:
    level = os.environ.get("EVIDENT_FUSE_LOG", "error").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
