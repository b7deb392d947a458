"""Command-line interface.

Each subcommand reads prepared CSV files, writes CSV/JSON outputs (and
optionally SVG plots) into an output directory, and records a
``manifest.json`` with the fully resolved configuration. ``returncurves
rerun MANIFEST`` replays a run from its manifest.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import DataError, read_xy_csv, sha256_file, write_text
from ._svg import render
from .copulas import FAMILIES, STUDY_COPULAS, CopulaSpec, copula_sample
from .cond_extremes import MIN_SAMPLE
from .curves import AngleGrid, ReturnCurve, angle_grid, points_to_csv, reference_point
from .exceptions import EstimationError
from .inference import Resampler, autocorrelation, bootstrap_curve_summary, diagnostic
from .margins import MARGINS, STANDARD_MARGINS, fit_margins, sample_to_margin
from .pipeline import ESTIMATORS, CurveEstimator
from .rng import derive_seed
from .study import coverage_angles, run_bias_study, run_coverage_study

SCHEMA_VERSION = 1
OUTPUT_ENV = "RETURNCURVES_OUTPUT_DIR"
EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4
P_LIMIT = 0.05


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _add_common(sp):
    sp.add_argument("--output-dir", default=None, help=f"output directory (default ${OUTPUT_ENV} or '.')")
    sp.add_argument("--seed", type=int, default=0, help="master seed (nonnegative)")
    sp.add_argument("--svg", action="store_true", help="also write SVG plots")


def _add_input(sp):
    sp.add_argument("--input", required=True, help="CSV file with header x,y")
    sp.add_argument("--margin", default="native", choices=MARGINS, help="margin of the input data")


def _add_estimator(sp):
    sp.add_argument("--p", type=float, required=True, help="curve probability, 0 < p < 0.05")
    sp.add_argument("--estimator", choices=ESTIMATORS, default="wt")
    sp.add_argument("--threshold-prob", type=float, default=0.95, help="marginal GPD threshold quantile")
    sp.add_argument("--ht-threshold-prob", type=float, default=0.95)
    sp.add_argument("--quantile-grid-size", type=int, default=200)
    sp.add_argument("--sim-draws", type=int, default=10_000)
    sp.add_argument("--num-rays", type=int, default=151)
    sp.add_argument("--hill-threshold-prob", type=float, default=0.95)
    sp.add_argument("--pstar", type=float, default=0.05)


def _add_resampling(sp, default_k):
    sp.add_argument("--K", type=int, default=default_k, help="bootstrap replicates")
    sp.add_argument("--mode", choices=("iid", "block", "identity"), default="iid")
    sp.add_argument("--block-size", type=int, default=None)
    sp.add_argument("--m", type=int, default=150, help="number of angles")
    sp.add_argument("--level", type=float, default=0.95)


def _add_copula(sp):
    sp.add_argument(
        "--copula", required=True,
        help=f"study copula ({', '.join(STUDY_COPULAS)}) or family ({', '.join(FAMILIES)}) with --param",
    )
    sp.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="copula parameter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="returncurves", description="Estimate bivariate extremal return curves.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate a copula sample")
    _add_common(sp)
    _add_copula(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--to", dest="target", choices=STANDARD_MARGINS, default="exponential")

    sp = sub.add_parser("margins", help="fit marginal models and transform a sample")
    _add_common(sp)
    _add_input(sp)
    sp.add_argument("--threshold-prob", type=float, default=0.95)
    sp.add_argument("--to", dest="target", choices=STANDARD_MARGINS, default="exponential")

    sp = sub.add_parser("curve", help="estimate a return curve")
    _add_common(sp)
    _add_input(sp)
    _add_estimator(sp)

    sp = sub.add_parser("uncertainty", help="bootstrap median, mean and pointwise band curves")
    _add_common(sp)
    _add_input(sp)
    _add_estimator(sp)
    _add_resampling(sp, 1000)

    sp = sub.add_parser("diagnose", help="survival-region diagnostic for a fitted curve")
    _add_common(sp)
    _add_input(sp)
    sp.add_argument("--curve", required=True, help="curve.json written by the curve command")
    _add_resampling(sp, 1000)

    for name, helptext in (("bias-study", "bias of median curves"), ("coverage-study", "coverage of bootstrap bands")):
        sp = sub.add_parser(name, help=helptext)
        _add_common(sp)
        _add_copula(sp)
        sp.add_argument("--estimator", choices=(*ESTIMATORS, "both"), default="both")
        sp.add_argument("--p", type=float, required=True)
        sp.add_argument("--num-samples", type=int, required=True)
        sp.add_argument("--sample-size", type=int, required=True)
        sp.add_argument("--workers", type=int, default=1)
        if name == "coverage-study":
            sp.add_argument("--K", type=int, default=100)
            sp.add_argument("--level", type=float, default=0.95)

    sp = sub.add_parser("rerun", help="replay a run from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("--output-dir", default=None, help="write outputs here instead of the recorded directory")
    return ap


def parse_copula(name: str, params) -> CopulaSpec:
    values = {}
    for item in params:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            values[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--param {key}: {val!r} is not a number") from None
    if name in STUDY_COPULAS:
        spec = STUDY_COPULAS[name]
        merged = {**spec.params, **values}
        family = spec.family
    elif name in FAMILIES:
        merged, family = values, name
    else:
        raise UsageError(f"unknown copula {name!r}")
    try:
        return CopulaSpec(family, merged)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_p(p):
    if not 0 < p < P_LIMIT:
        raise UsageError(
            f"p = {p:g} is out of range: the curve probability must be smaller than {P_LIMIT:g}, "
            "the exceedance probability of the 0.95 threshold above which the tail models are fitted"
        )


def _estimator(cfg, kind=None) -> CurveEstimator:
    _check_p(cfg["p"])
    try:
        return CurveEstimator(
            kind or cfg["estimator"], cfg["p"], cfg["margin"], cfg["threshold_prob"], cfg["quantile_grid_size"],
            cfg["sim_draws"], cfg["ht_threshold_prob"], cfg["num_rays"], cfg["hill_threshold_prob"], cfg["pstar"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _resampler(cfg) -> Resampler:
    try:
        return Resampler(cfg["mode"], derive_seed(cfg["seed"], 1), cfg["K"], cfg["block_size"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid(cfg, sample, margin) -> AngleGrid:
    if cfg["m"] < 1:
        raise UsageError("--m must be positive")
    ref = (0.0, 0.0) if margin in ("exponential", "uniform", "frechet") else reference_point(sample)
    return angle_grid(cfg["m"], ref)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _load(cfg, min_rows=1):
    data = read_xy_csv(cfg["input"], min_rows)
    if cfg.get("margin") and cfg["margin"] != "native":
        try:
            sample_to_margin(data, cfg["margin"], "uniform")
        except ValueError as exc:
            raise DataError(f"{cfg['input']}: {exc}") from None
    return data


def cmd_simulate(cfg, out: Path):
    spec = parse_copula(cfg["copula"], cfg["param"])
    if cfg["n"] < 1:
        raise UsageError("--n must be positive")
    sample = copula_sample(spec, cfg["n"], cfg["target"], cfg["seed"])
    return {"sample.csv": points_to_csv(sample)}, {"copula": spec.to_dict()}


def cmd_margins(cfg, out: Path):
    data = _load(cfg, 2)
    if cfg["margin"] != "native":
        raise UsageError("the margins command fits native-scale data; use --margin native")
    models = fit_margins(data, cfg["threshold_prob"])
    transformed = sample_to_margin(data, "native", cfg["target"], models=models)
    info = {"x": models[0].to_dict(), "y": models[1].to_dict()}
    files = {
        "margins.json": json.dumps(info, indent=2) + "\n",
        "transformed.csv": points_to_csv(transformed),
    }
    return files, {}


def cmd_curve(cfg, out: Path):
    est = _estimator(cfg)
    data = _load(cfg, MIN_SAMPLE)
    curve = est(data, derive_seed(cfg["seed"], 0))
    files = {"curve.csv": curve.to_csv(), "curve.json": curve.to_json(indent=2) + "\n"}
    if cfg["svg"]:
        files["curve.svg"] = render(
            [{"xy": data, "kind": "points", "color": "grey"}, {"xy": curve.points, "color": "green", "label": "estimate"}],
            title=f"{est.kind.upper()} return curve, p = {est.p:g}",
        )
    return files, {}


def cmd_uncertainty(cfg, out: Path):
    est = _estimator(cfg)
    data = _load(cfg, MIN_SAMPLE)
    resampler = _resampler(cfg)
    grid = _grid(cfg, data, est.margin)
    extra = {}
    if resampler.mode == "block":
        acf = np.column_stack([autocorrelation(data[:, 0]), autocorrelation(data[:, 1])])
        print("lag  acf_x    acf_y")
        for lag, (a, b) in enumerate(acf, start=1):
            print(f"{lag:3d}  {a:+.4f}  {b:+.4f}")
        extra["acf.csv"] = points_to_csv(np.column_stack([np.arange(1, len(acf) + 1), acf]), ("lag", "x", "y"))
    summary = bootstrap_curve_summary(data, est, grid, resampler, cfg["level"])
    files = {"summary.csv": summary.to_csv(), "summary.json": json.dumps(summary.to_dict(), indent=2) + "\n", **extra}
    if cfg["svg"]:
        files["bands.svg"] = render(
            [
                {"xy": data, "kind": "points", "color": "grey"},
                {"xy": summary.median_curve.points, "color": "green", "label": "median"},
                {"xy": summary.mean_curve.points, "color": "blue", "label": "mean"},
                {"xy": summary.lower_curve.points, "color": "black", "dash": True, "label": "band"},
                {"xy": summary.upper_curve.points, "color": "black", "dash": True},
            ],
            title=f"{est.kind.upper()} bootstrap summary, p = {est.p:g}",
        )
    return files, {"failures": summary.failures}


def cmd_diagnose(cfg, out: Path):
    try:
        curve = ReturnCurve.from_json(Path(cfg["curve"]).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{cfg['curve']}: file not found") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{cfg['curve']}: not a curve file ({exc})") from None
    if curve.margin != cfg["margin"]:
        raise DataError(f"curve is on {curve.margin} margins but the data are declared {cfg['margin']}")
    data = _load(cfg, 1)
    resampler = _resampler(cfg)
    grid = _grid(cfg, data, curve.margin)
    report = diagnostic(data, curve, grid, resampler, cfg["level"])
    files = {"diagnostic.csv": report.to_csv()}
    if cfg["svg"]:
        j = np.arange(1, len(grid.angles) + 1)
        files["diagnostic.svg"] = render(
            [
                {"xy": np.column_stack([j, report.phat_median]), "color": "black", "label": "median"},
                {"xy": np.column_stack([j, report.phat_lower]), "color": "blue", "dash": True, "label": "band"},
                {"xy": np.column_stack([j, report.phat_upper]), "color": "blue", "dash": True},
            ],
            title=f"Empirical survival probability, p = {curve.p:g}",
            xlabel="angle index",
            ylabel="probability",
            hlines=[(curve.p, "red")],
        )
    return files, {}


def _study_estimators(cfg):
    kinds = ESTIMATORS if cfg["estimator"] == "both" else (cfg["estimator"],)
    _check_p(cfg["p"])
    if cfg["num_samples"] < 1 or cfg["sample_size"] < MIN_SAMPLE:
        raise UsageError(f"--num-samples must be positive and --sample-size at least {MIN_SAMPLE}")
    return kinds


def cmd_bias_study(cfg, out: Path):
    spec = parse_copula(cfg["copula"], cfg["param"])
    kinds = _study_estimators(cfg)
    results = {
        k: run_bias_study(spec, k, cfg["p"], cfg["num_samples"], cfg["sample_size"], cfg["seed"], cfg["workers"])
        for k in kinds
    }
    header = ("copula", "p", *(f"A_{k}" for k in kinds))
    lines = [",".join(header), ",".join([spec.label().replace(",", ";"), repr(cfg["p"]), *(repr(r.A_value) for r in results.values())])]
    files = {
        "bias.csv": "\n".join(lines) + "\n",
        "bias.json": json.dumps({k: r.to_dict() for k, r in results.items()}, indent=2) + "\n",
    }
    return files, {"elapsed_seconds": {k: r.elapsed for k, r in results.items()}}


def cmd_coverage_study(cfg, out: Path):
    spec = parse_copula(cfg["copula"], cfg["param"])
    kinds = _study_estimators(cfg)
    if cfg["K"] < 1:
        raise UsageError("--K must be positive")
    results = {
        k: run_coverage_study(
            spec, k, cfg["p"], cfg["num_samples"], cfg["sample_size"], cfg["K"], cfg["seed"],
            level=cfg["level"], workers=cfg["workers"],
        )
        for k in kinds
    }
    n_angles = 5
    lines = ["copula,p,estimator," + ",".join(f"angle_{i}" for i in range(1, n_angles + 1))]
    for k, r in results.items():
        cov = [repr(float(c)) for c in r.coverage] + ["*"] * (n_angles - len(r.coverage))
        lines.append(",".join([spec.label().replace(",", ";"), repr(cfg["p"]), k, *cov]))
    files = {
        "coverage.csv": "\n".join(lines) + "\n",
        "coverage.json": json.dumps({k: r.to_dict() for k, r in results.items()}, indent=2) + "\n",
    }
    return files, {"angles": coverage_angles(spec).tolist()}


COMMANDS = {
    "simulate": cmd_simulate,
    "margins": cmd_margins,
    "curve": cmd_curve,
    "uncertainty": cmd_uncertainty,
    "diagnose": cmd_diagnose,
    "bias-study": cmd_bias_study,
    "coverage-study": cmd_coverage_study,
}
_PATH_KEYS = ("input", "curve")


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "command"}
    for key in _PATH_KEYS:
        if cfg.get(key):
            cfg[key] = str(Path(cfg[key]).resolve())
    out = cfg.get("output_dir") or os.environ.get(OUTPUT_ENV) or "."
    cfg["output_dir"] = str(Path(out).resolve())
    if cfg.get("seed", 0) < 0:
        raise UsageError("--seed must be nonnegative")
    return cfg


def execute(command: str, cfg: dict) -> Path:
    """Run one command with a resolved config; write its outputs and manifest."""
    out = Path(cfg["output_dir"])
    files, extra = COMMANDS[command](cfg, out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        write_text(out / name, text)
    inputs = {key: {"path": cfg[key], "sha256": sha256_file(cfg[key])} for key in _PATH_KEYS if cfg.get(key)}
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "seed": cfg.get("seed"),
        "config": cfg,
        "inputs": inputs,
        "outputs": sorted(files),
        "info": extra,
    }
    write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def rerun(manifest_path, output_dir=None) -> Path:
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{manifest_path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON ({exc})") from None
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"{manifest_path}: unsupported manifest schema {manifest.get('schema_version')!r}")
    command = manifest["command"]
    if command not in COMMANDS:
        raise DataError(f"{manifest_path}: unknown command {command!r}")
    for key, info in manifest.get("inputs", {}).items():
        if not Path(info["path"]).exists():
            raise DataError(f"recorded {key} file {info['path']} is missing")
        if sha256_file(info["path"]) != info["sha256"]:
            raise DataError(f"recorded {key} file {info['path']} has changed since the original run")
    cfg = dict(manifest["config"])
    if output_dir is not None:
        cfg["output_dir"] = str(Path(output_dir).resolve())
    return execute(command, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "rerun":
            out = rerun(args.manifest, args.output_dir)
        else:
            out = execute(args.command, resolve_config(args))
    except UsageError as exc:
        print(f"returncurves: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"returncurves: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EstimationError, ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"returncurves: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"returncurves: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote outputs to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
