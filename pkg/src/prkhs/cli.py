"""Command-line driver.

Subcommands: ``gen-data``, ``train``, ``predict``, ``validate``, ``compare``,
``bench``.  Every run starts from one JSON config (``--config``); ``--seed``,
``--threads`` and ``--set key.path=value`` override entries of it.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 IO error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import pipeline
from .config import ConfigError, ExperimentConfig, load_config
from .gram import SingularGramError
from .metrics import CostCounters, count_standard_cost, write_report_csv, write_report_json
from .operator import (
    DuplicatePointError,
    fit_product,
    fit_standard,
    load_operator,
    save_operator,
)

log = logging.getLogger("prkhs")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _config(args) -> ExperimentConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "threads", None) is not None:
        overrides.append(f"threads={args.threads}")
    return load_config(args.config, overrides)


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_gen_data(args) -> int:
    cfg = _config(args)
    if args.approach == "standard":
        data = pipeline.standard_data(cfg)
        pipeline.write_standard_data(cfg, args.out, data, cfg.system().output_dim)
        log.info("wrote %d lifted points to %s", data.z_points.shape[0], args.out)
        return EXIT_OK
    signal, ds = pipeline.product_data(cfg)
    pipeline.write_product_data(cfg, args.out, signal, ds)
    log.info("wrote %d trajectories to %s", ds.Y.shape[1], args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    model = cfg.system()
    counters = CostCounters()
    if args.approach == "standard":
        data = pipeline.read_standard_data(args.data, model.state_dim, model.output_dim * (cfg.N + 1))
        op = fit_standard(data.z_points, data.Y, cfg.standard_kernel(), cfg.jitter,
                          state_dim=data.state_dim, counters=counters, threads=cfg.threads)
    else:
        ds = pipeline.read_product_data(args.data, cfg.N, model.input_dim, model.state_dim, model.output_dim)
        op = fit_product(ds, cfg.product_kernel(), cfg.jitter, counters, cfg.threads)
    save_operator(op, args.out)
    _dump({"approach": args.approach, "model": args.out, "counters": counters.to_dict()})
    return EXIT_OK


def _parse_vec(text: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in text.split(",") if v.strip()], dtype=np.float64)
    except ValueError:
        raise ConfigError(f"expected comma separated numbers, got {text!r}") from None


def cmd_predict(args) -> int:
    op = load_operator(args.model)
    if args.queries:
        header, A = pipeline._read_csv(args.queries)
        xcols = [c for c, h in enumerate(header) if h.startswith("x_")]
        ucols = [c for c, h in enumerate(header) if h.startswith("u_")]
        X, U = A[:, xcols], A[:, ucols]
    else:
        if args.x is None or args.u is None:
            raise ConfigError("predict needs --queries CSV or both --x and --u")
        X, U = _parse_vec(args.x)[None, :], _parse_vec(args.u)[None, :]
    P = pipeline.predict_batch(op, U, X)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write(",".join(f"y_{c}" for c in range(P.shape[1])) + "\n")
        for row in P:
            out.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    counters = CostCounters()
    op = load_operator(args.model, counters=counters)
    try:
        report = pipeline.validate(op, cfg, from_training=args.from_training or None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    write_report_json(os.path.join(args.out, "report.json"), report, counters)
    write_report_csv(os.path.join(args.out, "rms.csv"), report)
    _dump(report.to_dict())
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    result = pipeline.compare(cfg)
    pipeline.write_compare(args.out, result)
    for name in ("product", "standard"):
        r = result[name]
        line = f"{name}: {r['status']}, {r['lifted_points']} lifted points"
        if r.get("report") is not None:
            line += f", overall RMS {r['report'].overall:.4g}"
        if r.get("counters") is not None:
            line += f", {r['counters'].kernel_evals} kernel evaluations"
        else:
            line += f", projected {r['projected_kernel_evals']:.3g} kernel evaluations"
        print(line)
    return EXIT_OK


def cmd_bench(args) -> int:
    """Time a product fit at config scale and project the dense-baseline cost."""
    cfg = _config(args)
    counters = CostCounters()
    t0 = time.monotonic()
    op = pipeline.fit_from_config(cfg, "product", counters)
    fit_s = time.monotonic() - t0
    fit_evals = counters.kernel_evals
    U, X, _ = pipeline.validation_pairs(cfg)
    pipeline.predict_batch(op, U, X)
    T = op.dataset.T_u * op.dataset.T_x
    res = {
        "T_u": op.dataset.T_u,
        "T_x": op.dataset.T_x,
        "lifted_points": T,
        "fit_kernel_evals": fit_evals,
        "counters": counters.to_dict(),
        "fit_wall_seconds": fit_s,
        "standard_projected_kernel_evals": count_standard_cost(T),
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "bench.json"), "w") as fh:
            json.dump(res, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _dump(res)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prkhs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help="output directory"):
        p.add_argument("--config", help="experiment JSON config (defaults to the desk-scale profile)")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--threads", type=int, help="threads for Gram assembly")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
        p.add_argument("--out", required=True, help=out_help)

    p = sub.add_parser("gen-data", help="generate training data CSVs")
    common(p)
    p.add_argument("--approach", choices=("product", "standard"), default="product")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit a model from generated data")
    common(p, "model JSON file to write")
    p.add_argument("--data", required=True, help="directory written by gen-data")
    p.add_argument("--approach", choices=("product", "standard"), default="product")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict output trajectories with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--x", help="initial state, comma separated")
    p.add_argument("--u", help="input sequence, comma separated")
    p.add_argument("--queries", help="CSV with x_* and u_* columns")
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("validate", help="RMS report on fresh rollouts")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--from-training", action="store_true",
                   help="diagnostic: validate on training pairs instead of fresh ones")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="product vs standard kernel learner")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time a product fit at config scale")
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularGramError, DuplicatePointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"IO error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
