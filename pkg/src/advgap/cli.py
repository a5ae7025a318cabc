"""Command-line entry point: ``advgap <command> [options]``.

Exit codes: 0 success, 1 a verification check failed, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .analytic import bernoulli_error_exact, gaussian_robust_error, gaussian_standard_error
from .attacks import PerturbationBudget
from .classifiers import LinearClassifier, learn_weighted_mean
from .distributions import Dataset, draw_prior_theta, fixed_theta, make_params, sample
from .estimation import mc_robust_error, mc_standard_error
from .experiments import SweepConfig, find_min_n, read_csv, records_to_csv, run_sweep
from .rng import RngSeed
from .verify import resolve, verify

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=2, default=float) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.9g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _model(args):
    """Model parameters from --model-file or from --model/--d/--noise/--theta."""
    if getattr(args, "model_file", None):
        doc = _read_json(args.model_file)
        doc = doc.get("model", doc)
        return make_params(doc["kind"], doc["theta_star"], doc["noise"])
    if args.model is None or args.d is None or args.noise is None:
        raise UsageError("give --model-file or all of --model, --d and --noise")
    if args.theta == "fixed":
        theta = fixed_theta(args.model, args.d)
    else:
        theta = draw_prior_theta(args.model, args.d, RngSeed(args.seed, 1))
    return make_params(args.model, theta, args.noise)


def _model_doc(params) -> dict:
    return {"kind": params.kind, "theta_star": params.theta_star.tolist(), "noise": params.noise}


def _load_classifier(path: str) -> LinearClassifier:
    doc = _read_json(path)
    return LinearClassifier.from_dict(doc.get("classifier", doc))


def cmd_sample(args) -> int:
    params = _model(args)
    data = sample(params, args.n, RngSeed(args.seed, 0))
    if args.format == "json":
        doc = {"model": _model_doc(params), "X": data.X.tolist(), "y": data.y.tolist()}
        _emit(json.dumps(doc) + "\n", args.out)
    else:
        rows = [{"y": int(y), **{f"x{j}": float(v) for j, v in enumerate(x)}} for x, y in zip(data.X, data.y)]
        _emit(_table(rows, "csv"), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    doc = _read_json(args.data)
    data = Dataset(np.asarray(doc["X"], dtype=float), np.asarray(doc["y"]))
    clf = learn_weighted_mean(data, normalize=not args.raw,
                              preprocess="threshold" if args.threshold else "identity")
    out = clf.to_dict()
    if "model" in doc:
        out = {"classifier": out, "model": doc["model"]}
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK


def _analytic_errors(clf, params, budget: PerturbationBudget):
    if clf.thresholded or (params.kind == "bernoulli" and budget.norm_kind != "linf"):
        return None, None
    if params.kind == "gaussian":
        return gaussian_standard_error(clf.w, params), gaussian_robust_error(clf.w, params, budget)
    try:
        return bernoulli_error_exact(clf.w, params), bernoulli_error_exact(clf.w, params, budget)
    except ValueError:
        return None, None


def cmd_eval(args) -> int:
    clf = _load_classifier(args.classifier)
    params = _model(args)
    est = mc_standard_error(clf, params, args.trials, RngSeed(args.seed, 2), args.threads)
    analytic, _ = _analytic_errors(clf, params, PerturbationBudget(0.0))
    row = {"metric": "standard", **est.to_dict(), "analytic": analytic}
    row["ci_low"], row["ci_high"] = row.pop("ci95")
    _emit(_table([row], args.format), args.out)
    return EXIT_OK


def cmd_attack(args) -> int:
    clf = _load_classifier(args.classifier)
    params = _model(args)
    budget = PerturbationBudget(args.eps, args.norm)
    delta = None
    if args.attack == "universal":
        if args.delta_file is None:
            raise UsageError("--attack universal needs --delta-file (JSON list)")
        delta = _read_json(args.delta_file)
    est = mc_robust_error(clf, params, budget, args.attack, args.trials, RngSeed(args.seed, 2),
                          args.threads, delta=delta, pgd_steps=args.steps)
    _, analytic = _analytic_errors(clf, params, budget)
    row = {"metric": "robust", **est.to_dict(), "analytic": analytic}
    row["ci_low"], row["ci_high"] = row.pop("ci95")
    _emit(_table([row], args.format), args.out)
    return EXIT_OK


def _kv(pairs: list[str]) -> dict:
    out = {}
    for p in pairs:
        key, sep, value = p.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {p!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"value for {key} is not a number: {value!r}") from None
    return out


def cmd_bounds(args) -> int:
    if args.list or args.name is None:
        rows = [{"name": n, "required": " ".join(bounds_mod.CATALOG[n].required),
                 "description": bounds_mod.CATALOG[n].doc} for n in bounds_mod.bound_names()]
        _emit(_table(rows, args.format), args.out)
        return EXIT_OK
    try:
        spec = bounds_mod.evaluate_bound(args.name, _kv(args.params))
    except (bounds_mod.UnknownBoundError, bounds_mod.MissingParameterError) as exc:
        raise UsageError(str(exc.args[0])) from None
    row = spec.to_dict()
    params = row.pop("params")
    row = {"name": row["name"], **params, "value": row["value"], "failure_prob": row["failure_prob"]}
    _emit(_table([row], args.format), args.out)
    return EXIT_OK


def _config(args) -> SweepConfig:
    if not args.config:
        raise UsageError("sweep needs --config <file.toml>")
    try:
        cfg = SweepConfig.from_toml(args.config)
    except OSError as exc:
        raise OSError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid config {args.config}: {exc}") from exc
    if args.seed_given:
        cfg.base_seed = args.seed
    return cfg


def cmd_sweep(args) -> int:
    cfg = _config(args)
    records = run_sweep(cfg, args.threads)
    out = args.out or cfg.output
    if args.format == "json":
        text = json.dumps([r.__dict__ for r in records], default=float) + "\n"
    else:
        text = records_to_csv(records)
    _emit(text, out)
    return EXIT_OK


def cmd_find_min_n(args) -> int:
    if args.input:
        records = read_csv(args.input)
    else:
        records = run_sweep(_config(args), args.threads)
    result = find_min_n(records, args.target, args.metric, args.classifier)
    rows = [{"d": d, "noise": s, "eps": e, "min_n": "not reached" if n is None else n,
             "target": args.target, "metric": args.metric, "aggregate": "median over trials"}
            for (d, s, e), n in result.items()]
    _emit(_table(rows, args.format), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        names = resolve(args.checks or ["all"])
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    reports = verify(names, args.seed, args.threads)
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    else:
        text = "".join(r.line() + "\n" for r in reports)
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, action=_SeedAction, help="base seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default csv; json for bounds)")
    common.add_argument("--config", help="sweep configuration (TOML)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=("gaussian", "bernoulli"))
    model.add_argument("--d", type=int)
    model.add_argument("--noise", type=float, help="sigma (gaussian) or tau (bernoulli)")
    model.add_argument("--theta", choices=("fixed", "prior"), default="fixed")
    model.add_argument("--model-file", help="JSON with kind, theta_star and noise")

    parser = argparse.ArgumentParser(prog="advgap", description="Robust vs standard sample complexity lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common, model], help="draw a labeled dataset")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("train", parents=[common], help="fit the weighted-mean classifier")
    p.add_argument("--data", required=True, help="JSON written by 'sample --format json'")
    p.add_argument("--threshold", action="store_true", help="compose with the threshold map")
    p.add_argument("--raw", action="store_true", help="keep the unnormalised mean")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", parents=[common, model], help="standard error of a classifier")
    p.add_argument("--classifier", required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("attack", parents=[common, model], help="robust error under an attack")
    p.add_argument("--classifier", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--norm", choices=("linf", "l2"), default="linf")
    p.add_argument("--attack", choices=("optimal", "pgd", "universal"), default="optimal")
    p.add_argument("--delta-file", help="JSON list: perturbation for the universal attack")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--trials", type=int, default=100_000)
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("bounds", parents=[common], help="evaluate a catalogued bound")
    p.add_argument("name", nargs="?")
    p.add_argument("params", nargs="*", metavar="key=value")
    p.add_argument("--list", action="store_true")
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("sweep", parents=[common], help="run a sample-size sweep")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("find-min-n", parents=[common], help="smallest n reaching a target error")
    p.add_argument("--input", help="sweep CSV (otherwise the sweep in --config is run)")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--metric", choices=("robust", "standard"), default="robust")
    p.add_argument("--classifier", choices=("plain", "thresholded"))
    p.set_defaults(fn=cmd_find_min_n)

    p = sub.add_parser("verify", parents=[common], help="run verification checks")
    p.add_argument("checks", nargs="*", help="suite or check names (default: all)")
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = getattr(args, "seed_given", False)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    if args.format is None:
        args.format = "json" if args.command == "bounds" else "csv"
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"advgap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"advgap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"advgap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
