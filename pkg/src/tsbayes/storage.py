"""Fit artifacts on disk: a directory of CSV and JSON files.

A saved fit is inspectable with standard tools and carries everything
needed to resume forecasting or model comparison in a later process.
Floats are written with %.17g so a load reproduces the draws bit for
bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .diagnostics import summarize, summary_text
from .inference import (
    fitted_quantiles,
    median_residuals,
    residual_quantiles,
)
from .models import GarchSpec, ModelSpec, SarimaSpec
from .nuts import FitResult, SamplerReport
from .priors import parse_prior
from .series import TimeSeries, acf, pacf

__all__ = ["save_fit", "load_fit"]

FMT = "%.17g"


def _write_matrix(path: Path, a: np.ndarray, header: str = "") -> None:
    np.savetxt(path, np.atleast_2d(a), fmt=FMT, delimiter=",",
               header=header, comments="")


def _spec_dict(spec: ModelSpec) -> dict:
    if spec.family == "sarima":
        out = {
            "family": "sarima",
            "order": list(spec.order),
            "seasonal": list(spec.seasonal),
            "s": spec.s,
            "fourier_k": spec.fourier_k,
            "has_xreg": spec.xreg is not None and not spec.fourier_k,
        }
    else:
        out = {
            "family": "garch",
            "arch": spec.arch,
            "garch": spec.garch,
            "innovation": spec.innovation,
        }
    out["priors"] = spec.priors.lines()
    return out


def _spec_from_dict(d: dict, xreg: np.ndarray | None) -> ModelSpec:
    if d["family"] == "sarima":
        spec = SarimaSpec(
            order=tuple(d["order"]),
            seasonal=tuple(d["seasonal"]),
            s=d["s"],
            fourier_k=d["fourier_k"],
            xreg=xreg,
        )
    else:
        spec = GarchSpec(arch=d["arch"], garch=d["garch"], innovation=d["innovation"])
    for line in d.get("priors", []):
        name, _, rhs = line.partition("~")
        # display names pad brackets ("ar[ 1 ]"); layout names do not
        spec.priors.set(name.strip().replace(" ", ""), parse_prior(rhs.strip()))
    return spec


def save_fit(fit: FitResult, out_dir: str | Path) -> Path:
    """Write the complete artifact set for a fitted model; returns the dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    meta = {
        "model": _spec_dict(fit.spec),
        "series": {"name": fit.series.name, "frequency": fit.series.frequency},
    }
    (out / "model.json").write_text(json.dumps(meta, indent=2) + "\n")
    (out / "sampler_report.json").write_text(
        json.dumps(fit.report.to_dict(), indent=2) + "\n"
    )
    _write_matrix(out / "series.csv", fit.series.values.reshape(-1, 1),
                  header=fit.series.name)
    if fit.spec.family == "sarima" and fit.spec.xreg is not None and not fit.spec.fourier_k:
        _write_matrix(out / "xreg.csv", fit.spec.xreg.values)

    chains, kept, P = fit.draws.shape
    chain_col = np.repeat(np.arange(chains), kept).reshape(-1, 1)
    draw_col = np.tile(np.arange(kept), chains).reshape(-1, 1)
    names = ",".join(fit.names)
    _write_matrix(
        out / "draws.csv",
        np.hstack([chain_col, draw_col, fit.flat_draws()]),
        header="chain,draw," + names,
    )
    _write_matrix(
        out / "udraws.csv",
        np.hstack([chain_col, draw_col, fit.lp.reshape(-1, 1), fit.flat_udraws()]),
        header="chain,draw,lp," + names,
    )
    _write_matrix(out / "pointwise_loglik.csv", fit.pointwise)

    (out / "summary.txt").write_text(
        fit.header() + "\n\n" + summary_text(fit) + "\n"
    )
    rows = summarize(fit)
    with (out / "summary.csv").open("w") as fh:
        fh.write("name,mean,se,q2.5,q97.5,ess,rhat\n")
        for r in rows:
            fh.write(
                f"{r.name},{r.mean:.17g},{r.se:.17g},{r.q_low:.17g},"
                f"{r.q_high:.17g},{r.ess:.17g},{r.rhat:.17g}\n"
            )

    _write_matrix(out / "fitted_quantiles.csv", fitted_quantiles(fit),
                  header="q5,q50,q95")
    _write_matrix(out / "residual_quantiles.csv", residual_quantiles(fit),
                  header="q5,q50,q95")

    med = median_residuals(fit)
    max_lag = min(20, med.size - 1)
    lags = np.arange(max_lag + 1).reshape(-1, 1)
    _write_matrix(out / "acf.csv",
                  np.hstack([lags, acf(med, max_lag).reshape(-1, 1)]),
                  header="lag,acf")
    _write_matrix(out / "pacf.csv",
                  np.hstack([lags, pacf(med, max_lag).reshape(-1, 1)]),
                  header="lag,pacf")
    return out


def load_fit(fit_dir: str | Path) -> FitResult:
    """Rebuild a :class:`FitResult` from a :func:`save_fit` directory."""
    d = Path(fit_dir)
    if not (d / "model.json").exists():
        raise ValueError(f"{d} is not a fit directory (model.json missing)")
    meta = json.loads((d / "model.json").read_text())
    report = SamplerReport(**json.loads((d / "sampler_report.json").read_text()))

    xreg = None
    if (d / "xreg.csv").exists():
        xreg = np.loadtxt(d / "xreg.csv", delimiter=",", ndmin=2)
    spec = _spec_from_dict(meta["model"], xreg)

    values = np.loadtxt(d / "series.csv", delimiter=",", skiprows=1)
    series = TimeSeries(
        np.atleast_1d(values),
        frequency=meta["series"]["frequency"],
        name=meta["series"]["name"],
    )

    chains = report.chains
    kept = report.iter - report.warmup
    draws = np.loadtxt(d / "draws.csv", delimiter=",", skiprows=1, ndmin=2)
    udraws = np.loadtxt(d / "udraws.csv", delimiter=",", skiprows=1, ndmin=2)
    pointwise = np.loadtxt(d / "pointwise_loglik.csv", delimiter=",", ndmin=2)
    P = draws.shape[1] - 2
    return FitResult(
        spec=spec,
        series=series,
        draws=draws[:, 2:].reshape(chains, kept, P),
        udraws=udraws[:, 3:].reshape(chains, kept, P),
        lp=udraws[:, 2].reshape(chains, kept),
        pointwise=pointwise,
        report=report,
    )
