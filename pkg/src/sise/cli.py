"""Command-line interface.

Subcommands:
  fit        fit the smoothed survival model to a censored-data CSV
  simulate   run benchmark scenarios, a holdout split, or emit one cohort
  impute     impute event times for intervals under a saved fit JSON
  bootstrap  pointwise confidence bands by refitting on resamples

Exit codes: 0 success, 2 unusable input (parse, schema, configuration),
3 estimation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .estimator import SmoothedSurvivalEstimator
from .exceptions import EstimationError, InvalidConfigError, ParseError
from .inference import impute_event_times
from .io import (
    dump_json,
    gridded_to_payload,
    load_density_json,
    read_censored_data,
    read_onsets_csv,
    step_to_payload,
    write_bands_csv,
    write_curve_csv,
    write_imputation_csv,
    write_intervals_csv,
    write_onsets_csv,
    write_records_csv,
    write_replicates_csv,
)
from .simbench import (
    ScenarioConfig,
    presets,
    run_scenario,
    run_split_evaluation,
    simulate_cohort,
)


@dataclass(frozen=True)
class CommandResult:
    """What a subcommand did: exit code, files written, one-line summary."""

    exit_code: int = 0
    artifacts: list = field(default_factory=list)
    summary: str = ""


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SISE_THREADS", "1")))
    except ValueError:
        return 1


def _add_fit_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--penalty", choices=("n", "nm", "ne"), default="ne",
                        help="sample-size measure for the roughness penalty (default: ne)")
    parser.add_argument("--delta-t", type=float, default=0.01, metavar="STEP",
                        help="grid step for the binned density (default: 0.01)")
    parser.add_argument("--max-bandwidth", type=float, default=None, metavar="D",
                        help="bandwidth search cap (default: frame right edge x grid step)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for the bandwidth search (default: 0)")
    parser.add_argument("--global-budget", type=int, default=100, metavar="N",
                        help="evaluation budget of the global search stage (default: 100)")
    parser.add_argument("--em-tol", type=float, default=1e-8, metavar="TOL",
                        help="EM stopping tolerance (default: 1e-8)")
    parser.add_argument("--em-max-iter", type=int, default=20000, metavar="N",
                        help="EM iteration cap (default: 20000)")


def _build_estimator(args) -> SmoothedSurvivalEstimator:
    return SmoothedSurvivalEstimator(
        penalty=args.penalty,
        delta_t=args.delta_t,
        max_bandwidth=args.max_bandwidth,
        em_tol=args.em_tol,
        em_max_iter=args.em_max_iter,
        seed=args.seed,
        global_budget=args.global_budget,
    )


def _load_and_fit(args):
    left, right, mult, counts, frame = read_censored_data(args.data)
    if args.penalty == "nm" and counts is None:
        raise InvalidConfigError(
            'penalty "nm" needs per-individual visit counts; provide the '
            "id,time,status record layout instead of an interval file"
        )
    est = _build_estimator(args)
    est.fit((left, right, mult), frame=frame, visit_counts=counts)
    return est, (left, right, mult)


def _fit_report_payload(est, args, mult) -> dict:
    return {
        "penalty": args.penalty,
        "n_observations": int(mult.sum()),
        "frame": {"left": est.frame_.left, "right": est.frame_.right},
        "n_e": est.n_e_,
        "bandwidth": est.bandwidth_,
        "report": est.report_.to_dict(),
        "raw_report": est.raw_report_.to_dict(),
    }


def cmd_fit(args) -> CommandResult:
    est, (left, right, mult) = _load_and_fit(args)
    report = _fit_report_payload(est, args, mult)

    if args.out_dir is None:
        report["raw_fit"] = step_to_payload(est.raw_estimate_)
        sys.stdout.write(dump_json(report))
        return CommandResult(summary="")

    os.makedirs(args.out_dir, exist_ok=True)
    paths = {
        "raw_fit": os.path.join(args.out_dir, "raw_fit.json"),
        "smoothed_fit": os.path.join(args.out_dir, "smoothed_fit.json"),
        "report": os.path.join(args.out_dir, "report.json"),
        "curve": os.path.join(args.out_dir, "curve.csv"),
    }
    raw_payload = gridded_to_payload(est.raw_density_)
    raw_payload["step_fit"] = step_to_payload(est.raw_estimate_)
    dump_json(raw_payload, paths["raw_fit"])
    dump_json(gridded_to_payload(est.density_), paths["smoothed_fit"])
    dump_json(report, paths["report"])
    taus = est.density_.taus
    write_curve_csv(
        paths["curve"],
        taus,
        est.raw_density_.values,
        est.raw_estimate_.survival_at(taus),
        est.density_.values,
        est.density_.survival(),
    )
    arts = [paths["raw_fit"], paths["smoothed_fit"], paths["report"], paths["curve"]]
    return CommandResult(
        artifacts=arts,
        summary=(
            f"fit: n={int(mult.sum())} bandwidth={est.bandwidth_:.6g} "
            f"bic={est.report_.bic_s:.6g} -> {args.out_dir}"
        ),
    )


def _emit_cohort(args) -> CommandResult:
    cfg = ScenarioConfig(
        name="cohort",
        n=args.n,
        onset_components=((1.0, args.onset_mean, args.onset_sd),),
        prevalence=args.prevalence,
        n_visits=args.visits,
        seed=args.seed if args.seed is not None else 0,
    )
    cohort = simulate_cohort(cfg)
    os.makedirs(args.cohort_out, exist_ok=True)
    left, right = cohort.intervals
    paths = {
        "intervals": os.path.join(args.cohort_out, "intervals.csv"),
        "records": os.path.join(args.cohort_out, "records.csv"),
        "onsets": os.path.join(args.cohort_out, "onsets.csv"),
    }
    write_intervals_csv(paths["intervals"], left, right)
    write_records_csv(paths["records"], cohort.to_records())
    write_onsets_csv(paths["onsets"], cohort.onset)
    text = dump_json(
        {
            "files": paths,
            "n": cohort.n,
            "n_visits": cfg.n_visits,
            "bracket_violations": cohort.bracket_violations(),
        },
        args.out,
    )
    if args.out is None:
        sys.stdout.write(text)
    arts = list(paths.values()) + ([args.out] if args.out else [])
    return CommandResult(artifacts=arts, summary="")


def _run_split(args) -> CommandResult:
    if not args.data or not args.onsets:
        raise InvalidConfigError("the split preset needs --data and --onsets files")
    left, right, mult, _, _ = read_censored_data(args.data)
    onsets = read_onsets_csv(args.onsets)
    expanded_n = int(mult.sum())
    if onsets.size != expanded_n:
        raise InvalidConfigError(
            f"onset file has {onsets.size} rows but the data expands to "
            f"{expanded_n} observations"
        )
    result = run_split_evaluation(
        (left, right, mult), onsets, seed=args.seed if args.seed is not None else 0
    )
    text = dump_json({"preset": "split", "result": result}, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return CommandResult(artifacts=[args.out] if args.out else [], summary="")


# short preset spellings accepted on the command line
_PRESET_ALIASES = {"s1": "s1-desk", "s2": "s2-desk", "s3": "s3-desk"}


def _load_scenarios(args) -> list[ScenarioConfig]:
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad config JSON: {exc}", line=exc.lineno) from exc
        items = payload if isinstance(payload, list) else [payload]
        cells = []
        for item in items:
            if not isinstance(item, dict):
                raise InvalidConfigError("config JSON must be an object or list of objects")
            cells.append(ScenarioConfig.from_dict(item))
        return cells
    name = _PRESET_ALIASES.get(args.preset, args.preset)
    catalog = presets()
    if name not in catalog:
        known = ", ".join(sorted(catalog) + sorted(_PRESET_ALIASES) + ["split"])
        raise InvalidConfigError(f"unknown preset {args.preset!r}; choose one of: {known}")
    return catalog[name]


def cmd_simulate(args) -> CommandResult:
    if args.cohort_out:
        return _emit_cohort(args)
    if args.preset is None and args.config is None:
        raise InvalidConfigError("choose --preset NAME, --config FILE, or --cohort-out DIR")
    if args.preset == "split":
        return _run_split(args)

    cells = _load_scenarios(args)
    if args.replicates is not None:
        cells = [replace(c, n_replicates=args.replicates) for c in cells]
    if args.seed is not None:
        cells = [replace(c, seed=args.seed) for c in cells]

    results = []
    for cell in cells:
        def progress(done, total, name=cell.name):
            print(f"{name}: replicate {done}/{total}", file=sys.stderr)

        results.append(run_scenario(cell, threads=args.threads, progress=progress))

    label = args.preset if args.preset else os.path.basename(args.config)
    payload = {"preset": label, "results": [r.to_dict() for r in results]}
    if args.out_dir is None:
        sys.stdout.write(dump_json(payload))
        return CommandResult(summary="")
    os.makedirs(args.out_dir, exist_ok=True)
    report_path = os.path.join(args.out_dir, "report.json")
    long_path = os.path.join(args.out_dir, "replicates.csv")
    dump_json(payload, report_path)
    write_replicates_csv(long_path, results)
    total = sum(c.n_replicates for c in cells)
    return CommandResult(
        artifacts=[report_path, long_path],
        summary=f"simulate: {len(cells)} scenario(s), {total} replicates -> {args.out_dir}",
    )


def cmd_impute(args) -> CommandResult:
    density = load_density_json(args.fit)
    left, right, _, _, _ = read_censored_data(args.data)
    if args.skip_empty:
        imputed, valid = impute_event_times(density, (left, right), skip_empty=True)
        skipped = int(np.sum(~valid))
        if skipped:
            print(
                f"warning: {skipped} interval(s) do not overlap the density grid "
                "and were left blank",
                file=sys.stderr,
            )
    else:
        imputed = impute_event_times(density, (left, right))
        valid = np.ones(imputed.shape, dtype=bool)
    write_imputation_csv(args.out, left, right, imputed, valid)
    return CommandResult(
        artifacts=[args.out],
        summary=f"impute: {int(valid.sum())}/{valid.size} rows -> {args.out}",
    )


def cmd_bootstrap(args) -> CommandResult:
    est, (left, right, mult) = _load_and_fit(args)
    bands = est.bootstrap(
        n_boot=args.n_boot,
        seed=args.boot_seed,
        level=args.level,
        reuse_bandwidth=args.reuse_bandwidth,
    )
    if bands.n_failed > 0.10 * args.n_boot:
        raise EstimationError(
            f"{bands.n_failed} of {args.n_boot} bootstrap replicates failed to fit"
        )
    if bands.n_failed:
        print(f"warning: {bands.n_failed} bootstrap replicate(s) failed to fit", file=sys.stderr)
    os.makedirs(args.out_dir, exist_ok=True)
    bands_path = os.path.join(args.out_dir, "bands.csv")
    summary_path = os.path.join(args.out_dir, "summary.json")
    write_bands_csv(bands_path, bands)
    dump_json(
        {
            "n_boot": args.n_boot,
            "n_success": bands.n_success,
            "n_excluded": bands.n_failed,
            "level": bands.level,
            "reused_bandwidth": bool(args.reuse_bandwidth),
            "bandwidth": est.bandwidth_,
            "n_observations": int(mult.sum()),
        },
        summary_path,
    )
    return CommandResult(
        artifacts=[bands_path, summary_path],
        summary=(
            f"bootstrap: {bands.n_success}/{args.n_boot} replicates "
            f"({bands.n_failed} excluded) -> {args.out_dir}"
        ),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sise",
        description="Smoothed nonparametric survival estimation for censored screening data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the smoothed survival model to a CSV")
    p_fit.add_argument("--data", required=True, help="interval or visit-record CSV")
    p_fit.add_argument("--out-dir", default=None, metavar="DIR",
                       help="write raw_fit.json, smoothed_fit.json, report.json and "
                            "curve.csv here (default: report JSON to stdout)")
    _add_fit_options(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run benchmark scenarios or emit a cohort")
    p_sim.add_argument("--preset",
                       choices=sorted(presets().keys()) + sorted(_PRESET_ALIASES) + ["split"],
                       default=None, help="built-in scenario bundle")
    p_sim.add_argument("--config", default=None, metavar="FILE",
                       help="scenario config JSON (object or list) instead of a preset")
    p_sim.add_argument("--out-dir", default=None, metavar="DIR",
                       help="write report.json + replicates.csv here (default: JSON to stdout)")
    p_sim.add_argument("--out", default=None,
                       help="(split / cohort modes) output JSON path (default: stdout)")
    p_sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_sim.add_argument("--replicates", type=int, default=None, help="override replicate count")
    p_sim.add_argument("--threads", type=int, default=_default_threads(),
                       help="replicate-level worker threads (or SISE_THREADS)")
    p_sim.add_argument("--data", default=None, help="(split) censored-data CSV")
    p_sim.add_argument("--onsets", default=None, help="(split) true onset ages CSV")
    p_sim.add_argument("--cohort-out", default=None, metavar="DIR",
                       help="write one simulated cohort's CSVs and exit")
    p_sim.add_argument("--n", type=int, default=100, help="(cohort) individuals")
    p_sim.add_argument("--onset-mean", type=float, default=50.0, help="(cohort) onset mean age")
    p_sim.add_argument("--onset-sd", type=float, default=10.0, help="(cohort) onset age sd")
    p_sim.add_argument("--prevalence", type=float, default=1.0, help="(cohort) diseased fraction")
    p_sim.add_argument("--visits", type=int, default=6, help="(cohort) visits per individual")
    p_sim.set_defaults(func=cmd_simulate)

    p_imp = sub.add_parser("impute", help="impute event times under a saved fit")
    p_imp.add_argument("--data", required=True, help="interval or visit-record CSV")
    p_imp.add_argument("--fit", required=True,
                       help="fit JSON from 'sise fit' (raw_fit.json or smoothed_fit.json)")
    p_imp.add_argument("--out", required=True, help="output CSV (id,left,right,imputed)")
    p_imp.add_argument("--skip-empty", action="store_true",
                       help="blank rows outside the fitted grid instead of failing")
    p_imp.set_defaults(func=cmd_impute)

    p_boot = sub.add_parser("bootstrap", help="bootstrap confidence bands")
    p_boot.add_argument("--data", required=True, help="interval or visit-record CSV")
    p_boot.add_argument("-B", "--n-boot", type=int, default=200, help="bootstrap replicates")
    p_boot.add_argument("--boot-seed", type=int, default=0, help="resampling seed")
    p_boot.add_argument("--level", type=float, default=0.95, help="band level (default 0.95)")
    p_boot.add_argument("--reuse-bandwidth", action="store_true",
                        help="keep the full-data bandwidth instead of re-searching per replicate")
    p_boot.add_argument("--out-dir", required=True, metavar="DIR",
                        help="write bands.csv and summary.json here")
    _add_fit_options(p_boot)
    p_boot.set_defaults(func=cmd_bootstrap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (ParseError, InvalidConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if result.summary:
        print(result.summary)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
