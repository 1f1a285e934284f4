"""Command-line interface.

All randomness derives from the root ``--seed``: task ``i`` of command ``cmd``
uses ``derive_seed(seed, cmd, i)``, so reruns and partial reruns reproduce.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import DEFAULT_H_GRID, CalibrationTable, build_calibration
from .cascade import CascadeParams, alpha_for_hurst, generate_cascade, hurst_for_alpha
from .experiment import ExperimentPlan, PlanError, format_table, run_experiment
from .features import extract_features
from .fileio import (read_feature_csv, read_json, read_series_csv, resolve_relative,
                     write_feature_csv, write_json, write_series_csv)
from .forest import MODES, ForestModel, class_score, fit_forest, predicted_class
from .mfdfa import DEFAULT_Q, MfdfaConfig, mfdfa
from .seeding import derive_seed

log = logging.getLogger("fractalclass")

OUTPUT_DIR_ENV = "FRACTALCLASS_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _output_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")


def _claim(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _log_config(command: str, config: dict) -> None:
    log.info("resolved config for %s: %s", command, json.dumps(config, sort_keys=True))


def _mfdfa_config(args) -> MfdfaConfig:
    return MfdfaConfig(poly_order=args.poly_order, q=tuple(args.q), backward=not args.no_backward)


def cmd_generate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.hurst is not None:
        try:
            alpha = alpha_for_hurst(args.hurst)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        if not args.alpha > 0:
            raise UsageError("--alpha must be positive")
        alpha = args.alpha
    out = _output_dir(args)
    _log_config("generate", {"n": args.n, "alpha": alpha, "hurst": args.hurst,
                             "count": args.count, "seed": args.seed, "out": str(out)})
    manifest_path = _claim(out / "manifest.json", args.force)
    records = []
    for i in range(args.count):
        params = CascadeParams(args.n, alpha, seed=derive_seed(args.seed, "generate", i))
        name = f"series_{i:04d}.csv"
        write_series_csv(_claim(out / name, args.force), generate_cascade(params))
        records.append({"class_index": None,
                        "H_target": args.hurst if args.hurst is not None else hurst_for_alpha(alpha),
                        "alpha": alpha, "seed": params.seed, "length": params.length, "path": name})
    write_json(manifest_path, records)
    print(f"wrote {args.count} series of length {2 ** args.n} to {out}")
    return EXIT_OK


def cmd_mfdfa(args) -> int:
    x = read_series_csv(args.input)
    cfg = _mfdfa_config(args)
    _log_config("mfdfa", {"input": str(args.input), **cfg.to_dict()})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = mfdfa(x, cfg)
    for w in caught:
        log.warning("%s", w.message)
    if args.json:
        write_json(_claim(Path(args.json), args.force), res.to_dict())
    print(f"{'q':>6}  {'h(q)':>10}  {'R^2':>8}")
    for q, h, r2 in zip(res.q, res.h, res.r2):
        print(f"{q:>6g}  {h:>10.6f}  {r2:>8.4f}")
    return EXIT_OK


def _series_inputs(args):
    """(path, class_index) pairs from --manifest and/or positional files."""
    items = []
    if args.manifest:
        for rec in read_json(args.manifest):
            items.append((resolve_relative(args.manifest, rec["path"]), rec.get("class_index")))
    items += [(Path(p), None) for p in args.inputs]
    if not items:
        raise UsageError("no input series given")
    return items


def cmd_features(args) -> int:
    cfg = _mfdfa_config(args)
    items = _series_inputs(args)
    _log_config("features", {"inputs": [str(p) for p, _ in items], **cfg.to_dict()})
    rows, labels = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for path, label in items:
            x = read_series_csv(path)
            rows.append(extract_features(x, mfdfa(x, cfg)).to_array())
            labels.append(label)
    out = _claim(_output_dir(args) / args.output, args.force)
    write_feature_csv(out, rows, labels)
    print(f"wrote {len(rows)} feature rows to {out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _mfdfa_config(args)
    grid = tuple(args.h_grid) if args.h_grid else DEFAULT_H_GRID
    _log_config("calibrate", {"lengths": args.lengths, "h_grid": list(grid), "trials": args.trials,
                              "seed": args.seed, **cfg.to_dict()})
    out = _claim(_output_dir(args) / args.output, args.force)
    try:
        table = build_calibration(args.lengths, grid, args.trials, derive_seed(args.seed, "calibrate", 0),
                                  cfg, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table.save(out)
    for n, e in sorted(table.entries.items()):
        print(f"N={n:>6}  delta={e.delta:+.5f}  S={e.s:.5f}  trials={e.trials}")
    return EXIT_OK


def cmd_train(args) -> int:
    X, y = read_feature_csv(args.features)
    if any(v is None for v in y):
        raise UsageError(f"{args.features}: every training row needs a class_index")
    _log_config("train", {"features": str(args.features), "mode": args.mode,
                          "n_trees": args.n_trees, "seed": args.seed})
    out = _claim(_output_dir(args) / args.output, args.force)
    model = fit_forest(X, np.array(y, dtype=float), mode=args.mode, n_trees=args.n_trees,
                       seed=derive_seed(args.seed, "train", 0), threads=args.threads)
    write_json(out, model.to_dict())
    print(f"trained {model.n_trees} trees on {len(y)} rows x {X.shape[1]} features -> {out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = ForestModel.from_dict(read_json(args.model))
    X, y = read_feature_csv(args.features)
    _log_config("predict", {"model": str(args.model), "features": str(args.features)})
    try:
        m = model.predict(X)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    k = args.n_classes
    lines = ["prediction,predicted_class,true_class,P"]
    for v, c in zip(m, y):
        p = "" if c is None else f"{class_score(v, c):.17g}"
        lines.append(f"{v:.17g},{predicted_class(v, k)},{'' if c is None else c},{p}")
    text = "\n".join(lines) + "\n"
    if args.output:
        _claim(_output_dir(args) / args.output, args.force).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def bundled_plans() -> list[str]:
    return sorted(p.name for p in resources.files("fractalclass.plans").iterdir()
                  if p.name.endswith(".json"))


def load_plan(ref: str) -> ExperimentPlan:
    path = Path(ref)
    if path.exists():
        return ExperimentPlan.load(path)
    name = ref if ref.endswith(".json") else ref + ".json"
    if name in bundled_plans():
        return ExperimentPlan.from_dict(json.loads(resources.files("fractalclass.plans")
                                                   .joinpath(name).read_text()))
    raise UsageError(f"no plan file {ref!r} (bundled plans: {', '.join(bundled_plans())})")


def cmd_experiment(args) -> int:
    try:
        plan = load_plan(args.plan)
        overrides = {k: v for k, v in {
            "seed": args.plan_seed, "train_per_class": args.train_per_class,
            "test_per_class": args.test_per_class, "n_trees": args.n_trees}.items() if v is not None}
        if overrides:
            plan = plan.with_overrides(**overrides)
    except PlanError as exc:
        raise UsageError(f"invalid plan: {exc}") from None
    resolved = plan.to_dict()
    _log_config("experiment", resolved)
    if args.dry_run:
        print(json.dumps(resolved, indent=2))
        return EXIT_OK
    out = _output_dir(args)
    targets = {"report": out / "report.json", "timing": out / "timing.json",
               "table": out / "table.txt"}
    targets |= {f"hist_{a}": out / f"hist_{a}.csv" for a in plan.approaches}
    for p in targets.values():
        _claim(p, args.force)
    table = CalibrationTable.load(args.calibration) if args.calibration else None
    report = run_experiment(plan, table=table, threads=args.threads)
    targets["report"].write_text(report.to_json())
    write_json(targets["timing"], report.timings)
    text = format_table([report])
    targets["table"].write_text(text)
    for a in plan.approaches:
        targets[f"hist_{a}"].write_text(report.histogram_csv(a))
    sys.stdout.write(text)
    return EXIT_OK


def _add_mfdfa_flags(p):
    p.add_argument("--poly-order", type=int, default=2, help="detrending polynomial degree")
    p.add_argument("--q", type=float, nargs="+", default=list(DEFAULT_Q), help="moment orders")
    p.add_argument("--no-backward", action="store_true", help="skip segments taken from the end")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed")
    common.add_argument("--out-dir", default=None,
                        help=f"output directory (default: ${OUTPUT_DIR_ENV} or .)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")

    parser = _Parser(prog="fractalclass", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="generate cascade series")
    p.add_argument("--n", type=int, required=True, help="levels; series length is 2**n")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--hurst", type=float)
    g.add_argument("--alpha", type=float)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("mfdfa", parents=[common], help="generalized Hurst exponents of a series")
    p.add_argument("input")
    p.add_argument("--json", help="also write the full result as JSON")
    _add_mfdfa_flags(p)
    p.set_defaults(func=cmd_mfdfa)

    p = sub.add_parser("features", parents=[common], help="feature vectors of series")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--manifest", help="manifest JSON listing series and class labels")
    p.add_argument("--output", default="features.csv")
    _add_mfdfa_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("calibrate", parents=[common], help="tabulate estimator bias and spread")
    p.add_argument("--lengths", type=int, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=200, help="trials per (length, H) cell")
    p.add_argument("--h-grid", type=float, nargs="+")
    p.add_argument("--output", default="calibration.json")
    _add_mfdfa_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", parents=[common], help="train a forest on a feature CSV")
    p.add_argument("features")
    p.add_argument("--mode", choices=MODES, default="random_forest")
    p.add_argument("--n-trees", type=int, default=200)
    p.add_argument("--output", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="apply a trained forest")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--n-classes", type=int, default=2)
    p.add_argument("--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", parents=[common], help="run a classification experiment")
    p.add_argument("plan", help="plan JSON path or bundled plan name")
    p.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
    p.add_argument("--calibration", help="calibration table JSON to reuse")
    p.add_argument("--plan-seed", type=int, help="override the plan seed")
    p.add_argument("--train-per-class", type=int)
    p.add_argument("--test-per-class", type=int)
    p.add_argument("--n-trees", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors, --help and --version
        return exc.code
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
