"""Command-line interface: fit, forecast, assess, bootstrap, report.

Configuration comes from a JSON file; command-line flags override
individual keys.  Exit codes: 0 success, 2 input error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .errors import InputError, MtsgenError, NumericalError
from .forecast import var_forecast
from .pipeline import (METRICS_HEADER, PipelineConfig, load_dataset,
                       fit_mts, rolling_forecasts, run_pipeline, write_metrics)
from .serialize import load_model, save_model


def _build_config(args) -> PipelineConfig:
    cfg_dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg_dict = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
    overrides = {
        "dependence": getattr(args, "dependence", None),
        "pca_enabled": getattr(args, "pca", None),
        "n_pth": getattr(args, "n_pth", None),
        "n_rep": getattr(args, "n_rep", None),
        "bootstrap_n_bt": getattr(args, "n_bt", None),
        "gmmn_n_epo": getattr(args, "epochs", None),
    }
    for key, val in overrides.items():
        if val is not None:
            cfg_dict[key] = val
    cfg_dict["seed"] = args.seed
    return PipelineConfig.from_dict(cfg_dict)


def _load_data(args):
    return load_dataset(args.data, transform=args.transform, tau=args.tau,
                        name=args.dataset_name or args.data)


def cmd_fit(args) -> int:
    cfg = _build_config(args)
    dataset = _load_data(args)
    model = fit_mts(cfg, dataset)
    save_model(model, args.out)
    print(f"fitted model ({cfg.dependence}) written to {args.out} "
          f"[config {cfg.config_hash}]")
    return 0


def cmd_bootstrap(args) -> int:
    cfg = _build_config(args)
    if cfg.bootstrap_n_bt < 1:
        raise InputError("bootstrap requires --n-bt >= 1")
    dataset = _load_data(args)
    model = fit_mts(cfg, dataset)
    save_model(model, args.out)
    print(f"bootstrap mixture ({cfg.bootstrap_n_bt} x {cfg.dependence}) "
          f"written to {args.out} [config {cfg.config_hash}]")
    return 0


def cmd_forecast(args) -> int:
    cfg = _build_config(args)
    dataset = _load_data(args)
    model = load_model(args.model)
    ss = np.random.SeedSequence(cfg.seed).spawn(2)[0]
    paths = rolling_forecasts(model, dataset, cfg.n_pth, ss)
    var_series = np.array([var_forecast(paths[i].sum(axis=1), cfg.var_alpha)
                           for i in range(paths.shape[0])])
    np.savez(args.out, paths=paths, var_series=var_series,
             origins=np.arange(dataset.tau, dataset.n_obs),
             seed=cfg.seed)
    print(f"{paths.shape[0]} one-step forecasts "
          f"({cfg.n_pth} paths each) written to {args.out}")
    return 0


def cmd_assess(args) -> int:
    cfg = _build_config(args)
    dataset = _load_data(args)
    model = load_model(args.model) if args.model else None
    result = run_pipeline(cfg, dataset, model=model)
    write_metrics(result.metrics, args.out)
    for row in result.metrics:
        print(f"{row['dataset']}\t{row['model']}\t{row['metric']}\t{row['value']}")
    print(f"metrics written to {args.out}")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.metrics:
        try:
            with open(path, newline="") as fh:
                rows.extend(list(csv.DictReader(fh)))
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
    missing = [r for r in rows if set(METRICS_HEADER) - set(r)]
    if missing:
        raise InputError("metrics file missing required columns")

    # wide table plus AMMD scatter pairs for external plotting
    by_model: dict = {}
    for r in rows:
        by_model.setdefault((r["dataset"], r["model"]), {})[r["metric"]] = r["value"]
    metrics_seen = sorted({r["metric"] for r in rows})
    header = ["dataset", "model"] + metrics_seen
    print("\t".join(header))
    for (ds, model), vals in sorted(by_model.items()):
        print("\t".join([ds, model] + [vals.get(m, "") for m in metrics_seen]))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for (ds, model), vals in sorted(by_model.items()):
                writer.writerow([ds, model] + [vals.get(m, "") for m in metrics_seen])
        print(f"report table written to {args.out}")
    return 0


def _add_common(p, need_model=False):
    p.add_argument("--data", required=True, help="CSV input (time label + numeric columns)")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--transform", default="none",
                   choices=["none", "difference", "log_returns"])
    p.add_argument("--tau", type=int, help="training cut (default: 70%% of rows)")
    p.add_argument("--dataset-name", help="label used in the metrics table")
    p.add_argument("--dependence",
                   choices=["independence", "empirical", "empirical_beta", "gmmn"])
    p.add_argument("--pca", action="store_const", const=True, default=None)
    p.add_argument("--n-pth", type=int, dest="n_pth")
    p.add_argument("--n-rep", type=int, dest="n_rep")
    p.add_argument("--epochs", type=int)
    if need_model:
        p.add_argument("--model", help="fitted model container (.npz)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtsgen",
        description="Multivariate time-series modeling with generative dependence learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit margins, reduction and dependence model")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bootstrap", help="fit a bootstrap mixture of dependence models")
    _add_common(p)
    p.add_argument("--n-bt", type=int, dest="n_bt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("forecast", help="rolling one-step predictive paths")
    _add_common(p, need_model=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("assess", help="run forecasts and emit the metrics table")
    _add_common(p, need_model=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("report", help="merge metrics tables into one report")
    p.add_argument("metrics", nargs="+", help="metrics CSV files")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (InputError, MtsgenError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
