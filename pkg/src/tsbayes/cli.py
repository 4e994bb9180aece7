"""Command-line front end: fit, auto, forecast, compare, serve.

Configs are JSON; artifacts are directories of CSV/JSON written by
:mod:`tsbayes.storage`. Exit codes: 0 success, 2 user error (bad config,
bad data, bad flags), 3 sampler failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .auto_order import search_order
from .models import GarchSpec, SarimaSpec
from .nuts import SamplerConfig, sample
from .priors import parse_prior
from .selection import (
    bic,
    bridge_log_marginal,
    format_bayes_factor,
    loo_compare,
    psis_loo,
    waic,
)
from .series import TimeSeries, load_csv
from .storage import load_fit, save_fit
from .inference import posterior_predict

__all__ = ["main", "build_spec", "load_config", "resolve_data"]

EXIT_OK = 0
EXIT_USER = 2
EXIT_SAMPLER = 3


class UserError(Exception):
    pass


def _fail(msg: str) -> None:
    raise UserError(msg)


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        _fail(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        _fail(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        _fail("config must be a JSON object")
    return cfg


def resolve_data(block: dict, base: Path | None = None) -> TimeSeries:
    """Read the series a config's data block points at.

    ``builtin:<name>`` resolves to a CSV bundled with the package.
    """
    if "path" not in block:
        _fail("data block needs a 'path'")
    raw = str(block["path"])
    if raw.startswith("builtin:"):
        name = raw.split(":", 1)[1]
        ref = resources.files("tsbayes.data") / f"{name}.csv"
        if not ref.is_file():
            _fail(f"no bundled dataset named {name!r}")
        path = Path(str(ref))
    else:
        path = Path(raw)
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.exists():
            _fail(f"data file not found: {path}")
    try:
        return load_csv(
            path,
            column=block.get("column", 0),
            frequency=int(block.get("frequency", 1)),
            name=block.get("name"),
        )
    except ValueError as exc:
        _fail(str(exc))


def build_spec(model: dict, priors: dict | None, n_xreg_rows: int | None = None,
               xreg: np.ndarray | None = None):
    family = model.get("family", "sarima")
    if family == "sarima":
        try:
            spec = SarimaSpec(
                order=tuple(model.get("order", (1, 0, 0))),
                seasonal=tuple(model.get("seasonal", (0, 0, 0))),
                s=int(model.get("s", model.get("frequency", 1))),
                fourier_k=model.get("fourier_k"),
                xreg=xreg,
            )
        except (ValueError, TypeError) as exc:
            _fail(f"bad model block: {exc}")
    elif family == "garch":
        try:
            spec = GarchSpec(
                arch=int(model.get("arch", 1)),
                garch=int(model.get("garch", 0)),
                innovation=model.get("innovation", "normal"),
            )
        except (ValueError, TypeError) as exc:
            _fail(f"bad model block: {exc}")
    else:
        _fail(f"unknown model family {family!r}")
    for name, text in (priors or {}).items():
        try:
            spec.priors.set(name.replace(" ", ""), parse_prior(text))
        except ValueError as exc:
            _fail(f"bad prior for {name!r}: {exc}")
    return spec


def _sampler_config(block: dict, args) -> SamplerConfig:
    merged = dict(block or {})
    for key in ("chains", "iter", "warmup", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    if getattr(args, "adapt_delta", None) is not None:
        merged["adapt_delta"] = args.adapt_delta
    try:
        return SamplerConfig(
            chains=int(merged.get("chains", 4)),
            iter=int(merged.get("iter", 2000)),
            warmup=None if merged.get("warmup") is None else int(merged["warmup"]),
            adapt_delta=float(merged.get("adapt_delta", 0.8)),
            seed=int(merged.get("seed", 0)),
        )
    except ValueError as exc:
        _fail(f"bad sampler settings: {exc}")


def _report_divergences(fit) -> None:
    total = fit.report.total_divergences
    if total:
        print(
            f"WARNING: {total} divergent transitions after warmup; "
            "estimates may be biased. Consider raising adapt_delta.",
            file=sys.stderr,
        )


def _spec_frequency(model_block: dict, data_block: dict) -> int:
    return int(model_block.get("s", data_block.get("frequency", 1)))


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    base = Path(args.config).resolve().parent
    series = resolve_data(cfg.get("data", {}), base)
    model = dict(cfg.get("model", {}))
    model.setdefault("s", series.frequency)
    xreg = None
    if model.get("xreg_path"):
        xp = Path(model["xreg_path"])
        if not xp.is_absolute():
            xp = base / xp
        if not xp.exists():
            _fail(f"xreg file not found: {xp}")
        xreg = np.loadtxt(xp, delimiter=",", ndmin=2, skiprows=1)
        if xreg.shape[0] != len(series):
            _fail(f"xreg has {xreg.shape[0]} rows, series has {len(series)}")
    spec = build_spec(model, cfg.get("priors"), xreg=xreg)
    scfg = _sampler_config(cfg.get("sampler", {}), args)
    out = Path(args.out or cfg.get("output") or "fit-out")

    try:
        fit = sample(spec, series, scfg)
    except RuntimeError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLER
    save_fit(fit, out)
    print((out / "summary.txt").read_text(), end="")
    _report_divergences(fit)
    print(f"artifacts written to {out}")
    return EXIT_OK


def cmd_auto(args) -> int:
    series = resolve_data(
        {"path": args.data, "column": args.column, "frequency": args.frequency},
        Path.cwd(),
    )
    s = args.frequency
    found = search_order(series, s)
    p, d, q, P, D, Q = found.order
    spec = SarimaSpec(order=(p, d, q), seasonal=(P, D, Q), s=s)
    scfg = _sampler_config({}, args)
    out = Path(args.out or "auto-fit")
    try:
        fit = sample(spec, series, scfg)
    except RuntimeError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLER
    save_fit(fit, out)
    with (out / "search_trace.csv").open("w") as fh:
        fh.write("p,d,q,P,D,Q,bic,converged\n")
        for c in found.trace:
            fh.write(",".join(str(v) for v in c.order)
                     + f",{c.bic:.17g},{int(c.converged)}\n")
    if args.trace:
        print("order search:")
        for c in found.trace:
            print(f"  {c.order}  bic={c.bic:.2f}  converged={c.converged}")
    print((out / "summary.txt").read_text(), end="")
    _report_divergences(fit)
    print(f"selected order ({p},{d},{q})({P},{D},{Q})[{s}]")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _load_fit_dir(path: str):
    p = Path(path)
    try:
        return load_fit(p)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        _fail(f"cannot load fit from {p}: {exc}")


def cmd_forecast(args) -> int:
    fit = _load_fit_dir(args.fit_dir)
    if args.horizon < 1:
        _fail("horizon must be >= 1")
    xreg_future = None
    if args.xreg_future:
        xp = Path(args.xreg_future)
        if not xp.exists():
            _fail(f"xreg file not found: {xp}")
        xreg_future = np.loadtxt(xp, delimiter=",", ndmin=2, skiprows=1)
    try:
        fc = posterior_predict(fit, args.horizon, seed=args.seed or 0,
                               xreg_future=xreg_future)
    except ValueError as exc:
        _fail(str(exc))
    out = Path(args.out or args.fit_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "forecast.csv").open("w") as fh:
        fh.write("horizon,mean,q5,q50,q95\n")
        for h, m, lo, md, hi in fc.rows():
            fh.write(f"{h},{m:.17g},{lo:.17g},{md:.17g},{hi:.17g}\n")
    if args.draws:
        np.savetxt(out / "forecast_draws.csv", fc.draws, fmt="%.17g", delimiter=",")
    print(fc.table())
    return EXIT_OK


def cmd_compare(args) -> int:
    fits = {Path(p).name: _load_fit_dir(p) for p in args.fit_dirs}
    if args.method == "bf":
        if len(args.fit_dirs) != 2:
            _fail("--method bf needs exactly two fit directories")
        (name1, fit1), (name2, fit2) = fits.items()
        b1 = bridge_log_marginal(fit1, seed=args.seed or 0)
        b2 = bridge_log_marginal(fit2, seed=(args.seed or 0) + 1)
        value = b1.log_marginal_likelihood - b2.log_marginal_likelihood
        print(format_bayes_factor(value, log=True,
                                  name1=name1, name2=name2))
        return EXIT_OK
    if len(fits) < 2:
        _fail("need at least two fit directories to compare")
    if args.method == "loo":
        try:
            print(loo_compare({name: psis_loo(f) for name, f in fits.items()}))
        except ValueError as exc:
            _fail(str(exc))
    elif args.method == "waic":
        sizes = {f.pointwise.shape[1] for f in fits.values()}
        if len(sizes) != 1:
            _fail("fits cover different numbers of observations and are incomparable")
        rows = sorted(
            ((name, waic(f)) for name, f in fits.items()),
            key=lambda kv: kv[1].elpd_waic,
            reverse=True,
        )
        width = max(len(n) for n, _ in rows) + 2
        print(" " * width + f"{'elpd_waic':>13}{'se':>13}{'p_waic':>13}{'waic':>13}")
        for name, r in rows:
            print(f"{name:<{width}}{r.elpd_waic:>13.2f}{r.se_elpd_waic:>13.2f}"
                  f"{r.p_waic:>13.2f}{r.waic:>13.2f}")
    elif args.method == "bic":
        rows = sorted(((name, bic(f)) for name, f in fits.items()), key=lambda kv: kv[1])
        width = max(len(n) for n, _ in rows) + 2
        print(" " * width + f"{'bic':>13}")
        for name, v in rows:
            print(f"{name:<{width}}{v:>13.2f}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsbayes",
        description="Bayesian structured time series: fit, order search, "
                    "forecasting and model comparison.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def sampler_flags(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--chains", type=int, default=None)
        p.add_argument("--iter", type=int, default=None)
        p.add_argument("--warmup", type=int, default=None)
        p.add_argument("--adapt-delta", dest="adapt_delta", type=float, default=None)

    p_fit = sub.add_parser("fit", help="fit a model described by a JSON config")
    p_fit.add_argument("config")
    p_fit.add_argument("--out", default=None)
    sampler_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_auto = sub.add_parser("auto", help="select orders by BIC search, then fit")
    p_auto.add_argument("--data", required=True)
    p_auto.add_argument("--column", default=0)
    p_auto.add_argument("--frequency", type=int, default=1)
    p_auto.add_argument("--out", default=None)
    p_auto.add_argument("--trace", action="store_true",
                        help="print the candidate log")
    sampler_flags(p_auto)
    p_auto.set_defaults(func=cmd_auto)

    p_fc = sub.add_parser("forecast", help="simulate beyond the end of a saved fit")
    p_fc.add_argument("fit_dir")
    p_fc.add_argument("--horizon", type=int, required=True)
    p_fc.add_argument("--seed", type=int, default=None)
    p_fc.add_argument("--out", default=None)
    p_fc.add_argument("--draws", action="store_true",
                      help="also dump the simulated paths")
    p_fc.add_argument("--xreg-future", dest="xreg_future", default=None)
    p_fc.set_defaults(func=cmd_forecast)

    p_cmp = sub.add_parser("compare", help="rank saved fits")
    p_cmp.add_argument("fit_dirs", nargs="+")
    p_cmp.add_argument("--method", choices=("loo", "waic", "bic", "bf"),
                       default="loo")
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
