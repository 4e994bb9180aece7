"""FastAPI application wrapping the core fitting and comparison calls.

Fits live in an in-process registry keyed by ``fit-<n>``; the service is
a thin veneer, all numerical work happens in the library modules.
"""

from __future__ import annotations

import itertools

import numpy as np
from fastapi import FastAPI, HTTPException

from ..auto_order import search_order
from ..diagnostics import summarize, summary_text
from ..inference import posterior_predict
from ..models import GarchSpec, SarimaSpec, param_names
from ..nuts import SamplerConfig, sample
from ..priors import parse_prior
from ..selection import (
    bic,
    bridge_log_marginal,
    format_bayes_factor,
    loo_compare,
    psis_loo,
    waic,
)
from ..series import TimeSeries
from .schemas import (
    AutoRequest,
    AutoResponse,
    CompareRequest,
    CompareResponse,
    FitRequest,
    FitResponse,
    ForecastRequest,
    ForecastResponse,
    ForecastRow,
    ModelIn,
    PriorsResponse,
    SummaryRowOut,
)


def _build_spec(model: ModelIn, frequency: int, priors: dict[str, str]):
    if model.family == "sarima":
        spec = SarimaSpec(
            order=model.order,
            seasonal=model.seasonal,
            s=model.s if model.s is not None else frequency,
            fourier_k=model.fourier_k,
            xreg=None if model.xreg is None else np.asarray(model.xreg, float),
        )
    else:
        if model.xreg is not None:
            raise ValueError("xreg is only supported for sarima models")
        spec = GarchSpec(arch=model.arch, garch=model.garch,
                         innovation=model.innovation)
    for name, text in priors.items():
        spec.priors.set(name.replace(" ", ""), parse_prior(text))
    return spec


def _summary_rows(fit) -> list[SummaryRowOut]:
    return [
        SummaryRowOut(name=r.name, mean=r.mean, se=r.se, q2_5=r.q_low,
                      q97_5=r.q_high, ess=r.ess, rhat=r.rhat)
        for r in summarize(fit)
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="tsbayes", version="0.1.0")
    registry: dict[str, object] = {}
    counter = itertools.count(1)

    def _get_fit(fit_id: str):
        if fit_id not in registry:
            raise HTTPException(status_code=404, detail=f"no fit named {fit_id!r}")
        return registry[fit_id]

    def _fit_response(fit, fit_id: str) -> dict:
        return {
            "fit_id": fit_id,
            "header": fit.header(),
            "summary": _summary_rows(fit),
            "summary_text": summary_text(fit),
            "divergences": fit.report.total_divergences,
        }

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/models/fit", response_model=FitResponse)
    def fit_model(req: FitRequest):
        try:
            spec = _build_spec(req.model, req.data.frequency, req.priors)
            series = TimeSeries(np.asarray(req.data.values), req.data.frequency,
                                req.data.name)
            cfg = SamplerConfig(**req.sampler.model_dump())
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            fit = sample(spec, series, cfg)
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=f"sampler failure: {exc}")
        fit_id = f"fit-{next(counter)}"
        registry[fit_id] = fit
        return _fit_response(fit, fit_id)

    @app.post("/models/auto", response_model=AutoResponse)
    def auto_model(req: AutoRequest):
        try:
            series = TimeSeries(np.asarray(req.data.values), req.data.frequency,
                                req.data.name)
            found = search_order(series, series.frequency)
            p, d, q, P, D, Q = found.order
            spec = SarimaSpec(order=(p, d, q), seasonal=(P, D, Q),
                              s=series.frequency)
            cfg = SamplerConfig(**req.sampler.model_dump())
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            fit = sample(spec, series, cfg)
        except RuntimeError as exc:
            raise HTTPException(status_code=500, detail=f"sampler failure: {exc}")
        fit_id = f"fit-{next(counter)}"
        registry[fit_id] = fit
        out = _fit_response(fit, fit_id)
        out["selected_order"] = found.order
        out["search_trace"] = [
            {"order": list(c.order), "bic": c.bic, "converged": c.converged}
            for c in found.trace
        ]
        return out

    @app.get("/fits")
    def list_fits():
        return {"fits": [
            {"fit_id": k, "header": v.header()} for k, v in registry.items()
        ]}

    @app.get("/fits/{fit_id}/summary", response_model=FitResponse)
    def fit_summary(fit_id: str):
        return _fit_response(_get_fit(fit_id), fit_id)

    @app.post("/fits/{fit_id}/forecast", response_model=ForecastResponse)
    def forecast(fit_id: str, req: ForecastRequest):
        fit = _get_fit(fit_id)
        xf = None if req.xreg_future is None else np.asarray(req.xreg_future)
        try:
            fc = posterior_predict(fit, req.horizon, seed=req.seed, xreg_future=xf)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"rows": [
            ForecastRow(horizon=h, mean=m, q5=lo, q50=md, q95=hi)
            for h, m, lo, md, hi in fc.rows()
        ]}

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest):
        fits = {fid: _get_fit(fid) for fid in req.fit_ids}
        if req.method == "bf":
            if len(req.fit_ids) != 2:
                raise HTTPException(status_code=400,
                                    detail="bf needs exactly two fits")
            (n1, f1), (n2, f2) = fits.items()
            b1 = bridge_log_marginal(f1, seed=req.seed)
            b2 = bridge_log_marginal(f2, seed=req.seed + 1)
            value = b1.log_marginal_likelihood - b2.log_marginal_likelihood
            return {"method": "bf", "log_bayes_factor": value,
                    "line": format_bayes_factor(value, log=True,
                                                name1=n1, name2=n2)}
        try:
            if req.method == "loo":
                table = loo_compare({n: psis_loo(f) for n, f in fits.items()})
            elif req.method == "waic":
                rows = sorted(((n, waic(f)) for n, f in fits.items()),
                              key=lambda kv: kv[1].elpd_waic, reverse=True)
                table = "\n".join(
                    f"{n}  elpd_waic={r.elpd_waic:.2f}  p_waic={r.p_waic:.2f}"
                    for n, r in rows
                )
            else:
                rows = sorted(((n, bic(f)) for n, f in fits.items()),
                              key=lambda kv: kv[1])
                table = "\n".join(f"{n}  bic={v:.2f}" for n, v in rows)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"method": req.method, "table": table}

    @app.get("/models/default-priors", response_model=PriorsResponse)
    def default_priors_endpoint(
        family: str = "sarima",
        p: int = 1, d: int = 0, q: int = 0,
        P: int = 0, D: int = 0, Q: int = 0,
        s: int = 1, fourier_k: int | None = None,
        arch: int = 1, garch: int = 0, innovation: str = "normal",
    ):
        try:
            if family == "sarima":
                spec = SarimaSpec(order=(p, d, q), seasonal=(P, D, Q), s=s,
                                  fourier_k=fourier_k)
            elif family == "garch":
                spec = GarchSpec(arch=arch, garch=garch, innovation=innovation)
            else:
                raise ValueError(f"unknown model family {family!r}")
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"parameters": param_names(spec), "priors": spec.priors.lines()}

    return app
