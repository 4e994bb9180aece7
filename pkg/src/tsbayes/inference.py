"""Posterior quantities derived from a fit: fitted values, residuals, forecasts.

Forecasts are simulated per posterior draw: the ARMA recursion runs forward
on the differenced, regression-adjusted scale with fresh innovations, the
regression part is added back, and the result is undifferenced against the
observed history. Volatility models instead roll the variance recursion
forward with unit-variance innovations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (
    GarchSpec,
    SarimaSpec,
    _expand_poly,
    _prepare,
    _split_params,
    batch_eval,
    param_layout,
)
from .nuts import FitResult
from .series import acf, difference, fourier_terms, pacf, undifference

__all__ = [
    "posterior_fitted",
    "posterior_residuals",
    "fitted_quantiles",
    "residual_quantiles",
    "median_residuals",
    "residual_acf",
    "residual_pacf",
    "Forecast",
    "posterior_predict",
]


def posterior_fitted(fit: FitResult) -> np.ndarray:
    """Per-draw fitted values, (draws, n_eff); model scale.

    For the ARMA family this is the one-step conditional mean of the
    differenced series; for volatility models the conditional standard
    deviation.
    """
    return batch_eval(fit.spec, fit.series, fit.flat_udraws()).fitted


def posterior_residuals(fit: FitResult) -> np.ndarray:
    """Per-draw one-step residuals, (draws, n_eff)."""
    return batch_eval(fit.spec, fit.series, fit.flat_udraws()).residuals


def _quantile_table(draws: np.ndarray, probs) -> np.ndarray:
    return np.quantile(draws, probs, axis=0).T


def fitted_quantiles(fit: FitResult, probs=(0.05, 0.5, 0.95)) -> np.ndarray:
    """(n_eff, len(probs)) pointwise quantiles of the fitted values."""
    return _quantile_table(posterior_fitted(fit), probs)


def residual_quantiles(fit: FitResult, probs=(0.05, 0.5, 0.95)) -> np.ndarray:
    return _quantile_table(posterior_residuals(fit), probs)


def median_residuals(fit: FitResult) -> np.ndarray:
    return np.median(posterior_residuals(fit), axis=0)


def residual_acf(fit: FitResult, max_lag: int = 20) -> np.ndarray:
    """Autocorrelations (lags 0..max_lag) of the median residual series."""
    return acf(median_residuals(fit), max_lag)


def residual_pacf(fit: FitResult, max_lag: int = 20) -> np.ndarray:
    return pacf(median_residuals(fit), max_lag)


@dataclass
class Forecast:
    """Simulated forecast paths and their pointwise summaries."""

    draws: np.ndarray  # (n_draws, horizon) on the original scale
    mean: np.ndarray
    q5: np.ndarray
    q50: np.ndarray
    q95: np.ndarray

    @property
    def horizon(self) -> int:
        return self.draws.shape[1]

    @classmethod
    def from_draws(cls, paths: np.ndarray) -> "Forecast":
        return cls(
            draws=paths,
            mean=paths.mean(axis=0),
            q5=np.quantile(paths, 0.05, axis=0),
            q50=np.quantile(paths, 0.50, axis=0),
            q95=np.quantile(paths, 0.95, axis=0),
        )

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        return [
            (h + 1, float(self.mean[h]), float(self.q5[h]),
             float(self.q50[h]), float(self.q95[h]))
            for h in range(self.horizon)
        ]

    def table(self) -> str:
        lines = [f"{'horizon':>7} {'mean':>12} {'q5':>12} {'q50':>12} {'q95':>12}"]
        for h, m, lo, md, hi in self.rows():
            lines.append(f"{h:>7d} {m:>12.4f} {lo:>12.4f} {md:>12.4f} {hi:>12.4f}")
        return "\n".join(lines)


def _future_design(spec: SarimaSpec, n: int, horizon: int, xreg_future):
    """Differenced regressors for the forecast window, (horizon, k)."""
    k = spec.n_regressors
    if k == 0:
        return None
    _, d, _ = spec.order
    _, D, _ = spec.seasonal
    if spec.fourier_k is not None:
        full = fourier_terms(n + horizon, spec.s, spec.fourier_k).values
    else:
        if xreg_future is None:
            raise ValueError(
                "model has external regressors; pass xreg_future with "
                f"{horizon} rows"
            )
        xf = np.asarray(xreg_future, dtype=float)
        if xf.ndim == 1:
            xf = xf[:, None]
        if xf.shape != (horizon, k):
            raise ValueError(f"xreg_future must have shape ({horizon}, {k})")
        full = np.vstack([spec.xreg.values, xf])
    cols = [difference(full[:, j], d, D, spec.s) for j in range(k)]
    return np.column_stack(cols)[-horizon:]


def _sarima_paths(fit: FitResult, horizon: int, rng, xreg_future) -> np.ndarray:
    spec: SarimaSpec = fit.spec
    y = fit.series.values
    n = y.size
    _, d, _ = spec.order
    _, D, _ = spec.seasonal
    s = spec.s
    data = _prepare(spec, fit.series)
    layout = param_layout(spec)
    flat = fit.flat_draws()
    resid = posterior_residuals(fit)
    xf = _future_design(spec, n, horizon, xreg_future)

    head = y[: d + D * s]
    n_draws = flat.shape[0]
    paths = np.empty((n_draws, horizon))
    for i in range(n_draws):
        blocks = _split_params(layout, list(flat[i]))
        mu0 = blocks["mu0"][0]
        sigma0 = blocks["sigma0"][0]
        alpha = _expand_poly(blocks.get("ar", []), blocks.get("sar", []), s)
        gamma = _expand_poly(blocks.get("ma", []), blocks.get("sma", []), s)
        breg = np.asarray(blocks["breg"]) if blocks.get("breg") else None

        w_hist = list(data.z - data.xm @ breg) if breg is not None else list(data.z)
        e_hist = list(resid[i])
        shocks = rng.standard_normal(horizon) * sigma0
        z_future = np.empty(horizon)
        for h in range(horizon):
            acc = mu0 + shocks[h]
            for k, a in enumerate(alpha, start=1):
                if k <= len(w_hist):
                    acc += a * w_hist[-k]
            for k, g in enumerate(gamma, start=1):
                if k <= len(e_hist):
                    acc -= g * e_hist[-k]
            w_hist.append(acc)
            e_hist.append(shocks[h])
            z_future[h] = acc + (xf[h] @ breg if breg is not None else 0.0)
        full = undifference(np.concatenate([data.z, z_future]), d, D, s, head)
        paths[i] = full[-horizon:]
    return paths


def _garch_paths(fit: FitResult, horizon: int, rng) -> np.ndarray:
    spec: GarchSpec = fit.spec
    layout = param_layout(spec)
    flat = fit.flat_draws()
    be = batch_eval(spec, fit.series, fit.flat_udraws())
    n_draws = flat.shape[0]
    paths = np.empty((n_draws, horizon))
    for i in range(n_draws):
        blocks = _split_params(layout, list(flat[i]))
        mu0 = blocks["mu0"][0]
        sigma0 = blocks["sigma0"][0]
        alphas = blocks.get("arch", [])
        betas = blocks.get("garch", [])
        e_hist = list(be.residuals[i])
        v_hist = list(be.fitted[i] ** 2)
        if spec.innovation == "student_t":
            dfv = blocks["dfv"][0]
            z = rng.standard_t(dfv, horizon) * np.sqrt((dfv - 2.0) / dfv)
        else:
            z = rng.standard_normal(horizon)
        for h in range(horizon):
            v = sigma0
            for k, a in enumerate(alphas, start=1):
                v += a * e_hist[-k] ** 2
            for k, b in enumerate(betas, start=1):
                v += b * v_hist[-k]
            eps = np.sqrt(v) * z[h]
            e_hist.append(eps)
            v_hist.append(v)
            paths[i, h] = mu0 + eps
    return paths


def posterior_predict(
    fit: FitResult,
    horizon: int,
    seed: int = 0,
    xreg_future=None,
) -> Forecast:
    """Simulate ``horizon`` steps beyond the sample, one path per draw."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    if fit.spec.family == "sarima":
        paths = _sarima_paths(fit, horizon, rng, xreg_future)
    else:
        paths = _garch_paths(fit, horizon, rng)
    return Forecast.from_draws(paths)
