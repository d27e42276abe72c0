"""Command-line front end.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal
failure (including failed oracle checks).
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields, replace

from . import estimator as E
from . import oracles, regress, serialize, synthetic
from .dataio import DataError, read_dataset, read_matrix, write_dataset, write_matrix
from .errors import DegenerateTarget, TooFewSamples, WidthMismatch

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("condensity")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """JSON experiment document: FitConfig fields plus data and output selection."""

    fit: E.FitConfig
    mechanism: str = None
    n: int = None
    data: str = None
    out: str = None
    report: str = None

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        own = {f.name for f in fields(cls)} - {"fit"}
        extra = {k: d.pop(k) for k in list(d) if k in own}
        try:
            fit = E.FitConfig.from_dict(d)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid config: {exc}") from exc
        if extra.get("mechanism") is not None and extra["mechanism"] not in synthetic.MECHANISMS:
            raise UsageError(f"invalid config: unknown mechanism {extra['mechanism']!r}")
        return cls(fit, **extra)

    @classmethod
    def load(cls, path):
        if path is None:
            return cls(E.FitConfig())
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError(f"config {path} must hold a JSON object")
        return cls.from_dict(doc)


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _fit_config(args):
    exp = ExperimentConfig.load(args.config)
    cfg = exp.fit
    try:
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.backend is not None and args.backend != cfg.regressor.variant:
            cfg = replace(cfg, regressor=regress.CONFIGS[args.backend]())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return exp, cfg


def _load_data(args, exp):
    path = args.data or exp.data
    if path:
        return read_dataset(path)
    if exp.mechanism:
        return synthetic.sample(synthetic.mechanism(exp.mechanism), exp.n or 10000, exp.fit.seed)
    raise UsageError("no data: pass --data or set 'data' or 'mechanism' in the config")


def cmd_generate(args):
    if args.mechanism not in synthetic.MECHANISMS:
        raise UsageError(f"unknown mechanism {args.mechanism!r}; expected one of {sorted(synthetic.MECHANISMS)}")
    if args.n is None or args.n < 1:
        raise UsageError("--n must be a positive integer")
    if not args.out:
        raise UsageError("--out is required")
    data = synthetic.sample(synthetic.mechanism(args.mechanism), args.n, args.seed or 0)
    write_dataset(args.out, data)
    return EXIT_OK


def cmd_fit(args):
    exp, cfg = _fit_config(args)
    data = _load_data(args, exp)
    out = args.out or exp.out
    if not out:
        raise UsageError("--out (model path) is required")
    est = E.fit(data, cfg)
    serialize.save_estimator(est, out)
    _dump({
        "validation_ise": est.validation_ise,
        "validation_ise_original_units": est.validation_ise / est.scaler.y_range,
        "n_train": est.n_train,
        "n_val": est.n_val,
        "M": cfg.M,
        "h": cfg.h,
        "regressor": regress.config_to_dict(cfg.regressor),
        "seed": cfg.seed,
        "rounds_trained": est.rounds_trained,
    }, args.report or exp.report)
    return EXIT_OK


def _load_model(path):
    if not path:
        raise UsageError("--model is required")
    try:
        return serialize.load_estimator(path)
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc


def cmd_evaluate(args):
    est = _load_model(args.model)
    if not args.data:
        raise UsageError("--data (test CSV) is required")
    test = read_dataset(args.data)
    if test.d != est.d:
        raise WidthMismatch(f"test data has {test.d} covariates, model expects {est.d}")
    rep = E.ise(est, test)
    _dump({"ise": rep.value, "ise_original_units": rep.value_original_units,
           "n_test": rep.n_test, "grid_size": rep.grid_size}, args.out)
    return EXIT_OK


def cmd_gridsearch(args):
    exp, cfg = _fit_config(args)
    data = _load_data(args, exp)
    if not args.m_list or not args.h_list:
        raise UsageError("--m-list and --h-list must both be nonempty")
    try:
        for h in args.h_list:
            replace(cfg, h=h)
        for M in args.m_list:
            replace(cfg, M=M)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = args.out or exp.out
    if not out:
        raise UsageError("--out is required")
    cells = E.grid_search(data, args.m_list, args.h_list, cfg)
    with open(out, "w") as fh:
        fh.write("M,h,ise,status\n")
        for c in cells:
            value = repr(c.report.value) if c.report else "nan"
            status = c.status.replace(",", ";").replace("\n", " ")
            fh.write(f"{c.M},{c.h!r},{value},{status}\n")
    return EXIT_OK if any(c.error is None for c in cells) else EXIT_INTERNAL


def cmd_summarize(args):
    est = _load_model(args.model)
    if not args.data:
        raise UsageError("--data (covariate CSV) is required")
    if not args.out:
        raise UsageError("--out is required")
    header, xs = read_matrix(args.data)
    if xs.shape[1] == est.d + 1 and header[-1].strip().lower() == "y":
        xs = xs[:, :-1]  # a full dataset file; the response column is ignored
    if xs.shape[1] != est.d:
        raise WidthMismatch(f"covariate rows have {xs.shape[1]} columns, model expects {est.d}")
    dens = E.predict_density_batch(est, xs)
    rows = []
    for values in dens:
        grid_o, values_o = E.to_original_units(E.DensityCurve(est.grid, values), est.scaler)
        s = E.density_summaries(E.DensityCurve(grid_o, values_o))
        rows.append((s["mode"], s["tail_width"], s["bowley_skew"]))
    write_matrix(args.out, ["mode", "tail_width", "bowley_skew"], rows)
    return EXIT_OK


def cmd_oracle_check(args):
    bandwidths = oracles.CHECK_BANDWIDTHS[::-1] if args.inject_bad_ordering else oracles.CHECK_BANDWIDTHS
    results = oracles.run_checks(bandwidths)
    ok = all(r["passed"] for r in results)
    _dump({"passed": ok, "checks": results}, args.out)
    return EXIT_OK if ok else EXIT_INTERNAL


COMMANDS = {
    "generate": (cmd_generate, "sample a synthetic dataset to CSV"),
    "fit": (cmd_fit, "fit an estimator and write the model file and a JSON report"),
    "evaluate": (cmd_evaluate, "ISE of a saved model on a test CSV"),
    "gridsearch": (cmd_gridsearch, "validation ISE over an M x h grid"),
    "summarize": (cmd_summarize, "mode, tail width and Bowley skew per covariate row"),
    "oracle-check": (cmd_oracle_check, "quadrature checks of the kernel and smoothing"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="condensity", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out")
        if name in ("fit", "gridsearch"):
            p.add_argument("--config")
            p.add_argument("--backend", choices=sorted(regress.CONFIGS))
            p.add_argument("--report")
        if name in ("fit", "gridsearch", "evaluate", "summarize"):
            p.add_argument("--data")
        if name in ("evaluate", "summarize"):
            p.add_argument("--model")
        if name in ("generate", "fit", "gridsearch"):
            p.add_argument("--seed", type=int)
        if name == "generate":
            p.add_argument("--mechanism", required=True)
            p.add_argument("--n", type=int, required=True)
        if name == "gridsearch":
            p.add_argument("--m-list", type=_int_list, required=True)
            p.add_argument("--h-list", type=_float_list, required=True)
        if name == "oracle-check":
            p.add_argument("--inject-bad-ordering", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateTarget, TooFewSamples, WidthMismatch, serialize.ModelFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
