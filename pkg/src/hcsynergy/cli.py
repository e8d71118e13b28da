"""Command-line interface.

Every command writes one JSON document to stdout on success (exit 0).
Domain and data errors go to stderr with exit 1; bad flags exit 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import inference, regression, review, simulate
from .errors import ConfigError, DataError, DomainError, SynergyError
from .metrics import Direction, MetricSpec, PerformanceTriple, compute_rho_hat, transform_pipeline


class UsageError(Exception):
    """Raised inside a command for input that argparse could not catch."""


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(_clean(payload), indent=2) + "\n")


def _level(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("level must be a decimal in (0, 1), e.g. 0.95")
    return v


def _metric(args) -> MetricSpec:
    try:
        return MetricSpec(
            name="metric",
            direction=Direction.parse(args.direction),
            lower_bound=args.lower_bound,
            upper_bound=args.upper_bound,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _add_metric_flags(p):
    p.add_argument("--direction", choices=["higher", "lower"], default="higher")
    p.add_argument("--lower-bound", type=float, default=0.0)
    p.add_argument("--upper-bound", type=float, default=None)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ratio(args):
    triple = PerformanceTriple(
        args.x_h,
        args.x_c,
        args.x_hc,
        _metric(args),
        h_impossible=args.h_impossible,
        c_impossible=args.c_impossible,
    )
    return compute_rho_hat(triple, transformed=not args.raw).to_dict()


def cmd_transform(args):
    spec = _metric(args)
    return {"x": args.x, "value": transform_pipeline(args.x, spec, upper=not args.lower_only)}


def _read_two_columns(path, paired: bool):
    num, den = [], []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DataError("expected a header with two columns", row=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row[:2]] + [""] * (2 - len(row[:2]))
            try:
                a = float(cells[0]) if cells[0] else None
                b = float(cells[1]) if cells[1] else None
            except ValueError as exc:
                raise DataError(str(exc), row=lineno) from None
            if paired and (a is None or b is None):
                raise DataError("paired data needs both columns on every row", row=lineno)
            if a is not None:
                num.append(a)
            if b is not None:
                den.append(b)
    return num, den


def cmd_ci(args):
    paired = args.design == "paired"
    if args.data:
        x, y = _read_two_columns(args.data, paired)
        if paired:
            num, den = inference.paired_summaries(x, y)
        else:
            num, den = inference.SampleSummary.from_data(x), inference.SampleSummary.from_data(y)
    else:
        needed = ["num_n", "num_mean", "num_sd", "den_n", "den_mean", "den_sd"]
        missing = ["--" + k.replace("_", "-") for k in needed if getattr(args, k) is None]
        if missing:
            raise UsageError(f"give --data or all of {', '.join(missing)}")
        if paired and args.r is None:
            raise UsageError("paired design needs --r")
        num = inference.SampleSummary(args.num_n, args.num_mean, args.num_sd, args.r)
        den = inference.SampleSummary(args.den_n, args.den_mean, args.den_sd, args.r)
    methods = inference.METHODS if args.method == "all" else (args.method,)
    intervals = []
    for m in methods:
        try:
            ci = inference.ratio_ci(num, den, m, args.design, args.level, use_t=args.t)
        except inference.UnboundedInterval as exc:
            if len(methods) == 1:
                raise
            intervals.append({"method": m, "design": args.design, "level": args.level, "error": str(exc)})
            continue
        intervals.append(ci.to_dict())
    return {
        "estimate": num.mean / den.mean,
        "numerator": {"n": num.n, "mean": num.mean, "sd": num.sd},
        "denominator": {"n": den.n, "mean": den.mean, "sd": den.sd},
        "r": num.r if paired else None,
        "intervals": intervals,
    }


def cmd_proportion(args):
    return inference.proportion_test(args.successes, args.n, args.p0).to_dict()


def cmd_regress(args):
    records, scores = regression.read_long_csv(args.data)
    if args.score_threshold is not None:
        if scores is None:
            raise DataError("--score-threshold needs a 'score' column in the data file")
        records = regression.filter_successful(records, scores, args.score_threshold)
    if args.method == "ols":
        fit = regression.fit_ols(records, level=args.level)
    else:
        fit = regression.fit_lmm(records, method="REML" if args.reml else "ML", level=args.level)
    table = regression.format_table(fit)
    sys.stderr.write(table + "\n")
    out = fit.to_dict()
    out["table"] = table
    return out


def _record_dict(r: review.StudyRecord) -> dict:
    return {
        "study_id": r.study_id,
        "task": r.task,
        "measure": r.measure,
        "direction": r.metric.direction.value,
        "x_h": r.x_h,
        "x_c": r.x_c,
        "x_hc": r.x_hc,
        "published_rho_hat": r.published_rho_hat,
        "published_rho_hat_prime": r.published_rho_hat_prime,
    }


def cmd_review(args):
    records = review.load_dataset(args.dataset)
    action = args.review_cmd
    if action == "summarize":
        return {"which": args.which, **review.summarize(records, args.which, args.bin).to_dict()}
    if action == "audit":
        reports = review.audit(records)
        anomalous = [r.to_dict() for r in reports if r.verdict is review.Verdict.ANOMALOUS]
        for a in anomalous:
            sys.stderr.write(f"ANOMALOUS row {a['row']}: {a['study_id']} ({a['measure']})\n")
        return {
            "n": len(reports),
            "consistent": sum(r.verdict is review.Verdict.CONSISTENT for r in reports),
            "anomalous": len(anomalous),
            "anomalous_rows": [a["row"] for a in anomalous],
            "rows": [r.to_dict() for r in reports],
        }
    if action == "hist":
        hist = review.histogram(review.ratio_values(records, args.which), args.bin)
        if args.tsv:
            Path(args.tsv).write_text(review.histogram_tsv(hist), encoding="utf-8")
        return {
            "which": args.which,
            "bin_width": args.bin,
            "total": sum(c for _, _, c in hist),
            "bins": [list(b) for b in hist],
        }
    if action == "top-per-study":
        top = review.subset_top_per_study(records, args.which)
        return {
            "which": args.which,
            "n": len(top),
            "summary": review.summarize(top, args.which).to_dict() if top else None,
            "records": [_record_dict(r) for r in top],
        }
    if action == "by-direction":
        directions = [args.direction] if args.direction else ["higher", "lower"]
        out = {}
        for d in directions:
            sub = review.subset_by_direction(records, d)
            out[Direction.parse(d).value] = {
                "n": len(sub),
                "summary": review.summarize(sub, args.which).to_dict() if sub else None,
            }
        return out
    raise UsageError(f"unknown review command {action!r}")


_SIM_FLAGS = {
    "n_subjects": "n_subjects",
    "beta": "beta",
    "difficulty": "task_difficulty",
    "effect": "condition_effect",
    "order_effect": "order_effect",
    "ability_sd": "ability_log_sd",
    "error_sd": "error_log_sd",
    "design": "design",
}


def _sim_config(args) -> simulate.SimConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise UsageError("config file must hold a JSON object")
    for flag, key in _SIM_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            base[key] = v
    if args.seed is not None:
        base["base_seed"] = args.seed
    try:
        return simulate.SimConfig.from_dict(base)
    except (ConfigError, TypeError) as exc:
        raise UsageError(f"invalid simulation config: {exc}") from None


def cmd_simulate(args):
    if args.seed is None:
        raise UsageError("simulate needs --seed")
    config = _sim_config(args)
    records = simulate.generate(config, args.replicate)
    out = {"config": config.to_dict(), "replicate": args.replicate, "n_records": len(records)}
    if args.output:
        regression.write_long_csv(records, args.output)
        out["output"] = str(args.output)
    else:
        buf = io.StringIO()
        regression.write_long_csv(records, buf)
        out["csv"] = buf.getvalue()
    return out


def cmd_coverage(args):
    config = _sim_config(args)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    report = simulate.recovery_study(config, args.estimator, args.reps, args.level, args.workers)
    return {"config": config.to_dict(), **report.to_dict()}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_sim_flags(p):
    p.add_argument("--config", help="JSON file with SimConfig fields; flags override it")
    p.add_argument("--n-subjects", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--difficulty", type=float, nargs=2, metavar=("D1", "D2"))
    p.add_argument("--effect", type=float, help="condition effect f")
    p.add_argument("--order-effect", type=float)
    p.add_argument("--ability-sd", type=float)
    p.add_argument("--error-sd", type=float)
    p.add_argument("--design", choices=["crossover", "between"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcsynergy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ratio", help="synergy ratio X_HC / max(X_H, X_C)")
    p.add_argument("--x-h", type=float, required=True)
    p.add_argument("--x-c", type=float, required=True)
    p.add_argument("--x-hc", type=float, required=True)
    _add_metric_flags(p)
    p.add_argument("--raw", action="store_true", help="skip all metric transforms")
    p.add_argument("--h-impossible", action="store_true", help="humans alone cannot do the task")
    p.add_argument("--c-impossible", action="store_true", help="computers alone cannot do the task")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("transform", help="apply the metric transform to one value")
    p.add_argument("--x", type=float, required=True)
    _add_metric_flags(p)
    p.add_argument("--lower-only", action="store_true", help="never apply the odds transform")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("ci", help="confidence interval for a ratio of means")
    p.add_argument("--data", help="CSV with two columns: numerator,denominator")
    for side in ("num", "den"):
        p.add_argument(f"--{side}-n", type=int)
        p.add_argument(f"--{side}-mean", type=float)
        p.add_argument(f"--{side}-sd", type=float)
    p.add_argument("--r", type=float, help="paired correlation")
    p.add_argument("--method", choices=list(inference.METHODS) + ["all"], default="all")
    p.add_argument("--design", choices=list(inference.DESIGNS), default="independent")
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--t", action="store_true", help="t critical values instead of normal")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("proportion", help="one-sample proportion z test (upper tail)")
    p.add_argument("--successes", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p0", type=_level, default=0.5)
    p.set_defaults(func=cmd_proportion)

    p = sub.add_parser("regress", help="log-linear regression of a long-format CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["lmm", "ols"], default="lmm")
    p.add_argument("--reml", action="store_true")
    p.add_argument("--score-threshold", type=float)
    p.add_argument("--level", type=_level, default=0.95)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("review", help="review-table analyses")
    rsub = p.add_subparsers(dest="review_cmd", required=True)
    selections = sorted(review.SELECTIONS)
    for name in ("summarize", "audit", "hist", "top-per-study", "by-direction"):
        q = rsub.add_parser(name)
        q.add_argument("--dataset", default=None, help="review CSV (default: bundled table)")
        if name != "audit":
            q.add_argument("--which", choices=selections, default="published_rho_hat")
        if name in ("summarize", "hist"):
            q.add_argument("--bin", type=float, default=0.05)
        if name == "hist":
            q.add_argument("--tsv", help="also write (bin midpoint, count) as TSV here")
        if name == "by-direction":
            q.add_argument("--direction", choices=["higher", "lower"])
        q.set_defaults(func=cmd_review)

    p = sub.add_parser("simulate", help="generate one synthetic crossover experiment")
    _add_sim_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--output", help="write the long-format CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="Monte-Carlo bias/RMSE/coverage of an estimator")
    _add_sim_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimator", choices=list(simulate.ESTIMATORS), default="lmm")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--level", type=_level, default=0.95)
    p.set_defaults(func=cmd_coverage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        payload = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"hcsynergy: error: {exc}\n")
        return 2
    except (SynergyError, DomainError) as exc:
        sys.stderr.write(f"hcsynergy: {type(exc).__name__}: {exc}\n")
        return 1
    _emit(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
