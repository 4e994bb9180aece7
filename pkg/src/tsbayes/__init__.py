"""Bayesian structured time series: SARIMA and GARCH models fit by NUTS.

The package is organised around a small pipeline:

- :mod:`tsbayes.series` holds the data containers, differencing, Fourier
  designs, and correlograms.
- :mod:`tsbayes.priors` and :mod:`tsbayes.models` define the model specs,
  their constrained/unconstrained parameterisations, and the log posterior
  with gradients from :mod:`tsbayes.autodiff`.
- :mod:`tsbayes.nuts` samples, :mod:`tsbayes.diagnostics` summarises.
- :mod:`tsbayes.inference` produces fitted values, residuals, forecasts.
- :mod:`tsbayes.selection` compares fits (WAIC, PSIS-LOO, bridge-sampled
  Bayes factors); :mod:`tsbayes.auto_order` picks orders by BIC search.
- :mod:`tsbayes.storage` round-trips fits through artifact directories;
  :mod:`tsbayes.cli` and :mod:`tsbayes.service` expose the same calls from
  the command line and over HTTP.

Typical use::

    from tsbayes import SarimaSpec, SamplerConfig, sample, summary_text

    fit = sample(SarimaSpec(order=(1, 0, 0)), y, SamplerConfig(seed=1))
    print(summary_text(fit))
"""

from .auto_order import (
    CssFit,
    OrderCandidate,
    SearchResult,
    auto_sarima,
    css_fit,
    search_order,
    seasonal_strength,
    select_differences,
)
from .diagnostics import (
    SummaryRow,
    ess_bulk,
    mcse,
    split_rhat,
    summarize,
    summary_text,
)
from .inference import (
    Forecast,
    fitted_quantiles,
    median_residuals,
    posterior_fitted,
    posterior_predict,
    posterior_residuals,
    residual_acf,
    residual_pacf,
    residual_quantiles,
)
from .models import (
    GarchSpec,
    SarimaSpec,
    constrain,
    default_priors,
    describe,
    display_names,
    finite_diff_check,
    grad_log_posterior,
    log_posterior,
    model_header,
    n_effective,
    param_names,
    unconstrain,
)
from .nuts import (
    FitResult,
    GaussianTarget,
    SamplerConfig,
    SamplerReport,
    extract,
    run_nuts,
    sample,
)
from .priors import (
    PriorSet,
    PriorSpec,
    beta,
    beta_on_pm1,
    cauchy,
    chi_square,
    exponential,
    format_prior,
    gamma,
    half_cauchy,
    half_normal,
    half_t,
    inverse_gamma,
    normal,
    parse_prior,
    student_t,
    uniform,
)
from .selection import (
    BridgeResult,
    LooResult,
    WaicResult,
    aic,
    aicc,
    bayes_factor,
    bic,
    bridge_from_samples,
    bridge_log_marginal,
    format_bayes_factor,
    loo_compare,
    psis_loo,
    psis_loo_matrix,
    waic,
    waic_matrix,
)
from .series import (
    RegressorMatrix,
    TimeSeries,
    acf,
    difference,
    fourier_terms,
    load_csv,
    pacf,
    undifference,
)
from .storage import load_fit, save_fit

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # series
    "TimeSeries",
    "RegressorMatrix",
    "difference",
    "undifference",
    "fourier_terms",
    "acf",
    "pacf",
    "load_csv",
    # priors
    "PriorSpec",
    "PriorSet",
    "normal",
    "student_t",
    "cauchy",
    "gamma",
    "inverse_gamma",
    "uniform",
    "beta",
    "beta_on_pm1",
    "half_normal",
    "half_t",
    "half_cauchy",
    "chi_square",
    "exponential",
    "parse_prior",
    "format_prior",
    # models
    "SarimaSpec",
    "GarchSpec",
    "param_names",
    "display_names",
    "default_priors",
    "n_effective",
    "constrain",
    "unconstrain",
    "log_posterior",
    "grad_log_posterior",
    "finite_diff_check",
    "model_header",
    "describe",
    # sampling
    "SamplerConfig",
    "SamplerReport",
    "GaussianTarget",
    "run_nuts",
    "FitResult",
    "sample",
    "extract",
    # diagnostics
    "split_rhat",
    "ess_bulk",
    "mcse",
    "SummaryRow",
    "summarize",
    "summary_text",
    # inference
    "posterior_fitted",
    "posterior_residuals",
    "fitted_quantiles",
    "residual_quantiles",
    "median_residuals",
    "residual_acf",
    "residual_pacf",
    "Forecast",
    "posterior_predict",
    # selection
    "aic",
    "aicc",
    "bic",
    "WaicResult",
    "waic",
    "waic_matrix",
    "LooResult",
    "psis_loo",
    "psis_loo_matrix",
    "loo_compare",
    "BridgeResult",
    "bridge_from_samples",
    "bridge_log_marginal",
    "bayes_factor",
    "format_bayes_factor",
    # order search
    "seasonal_strength",
    "select_differences",
    "css_fit",
    "CssFit",
    "OrderCandidate",
    "SearchResult",
    "search_order",
    "auto_sarima",
    # storage
    "save_fit",
    "load_fit",
]
