"""Automatic SARIMA order selection.

Differencing orders come from cheap stationarity heuristics, the ARMA
orders from a stepwise search over a BIC computed at conditional
maximum-likelihood estimates (flat priors, quasi-Newton on the
unconstrained scale). Only the winning order gets the full Bayesian
treatment. The search itself is deterministic: no RNG anywhere, every
evaluated candidate lands in the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .models import SarimaSpec, grad_log_posterior, n_effective, param_layout
from .nuts import FitResult, SamplerConfig, sample
from .series import TimeSeries, difference

__all__ = [
    "OrderCandidate",
    "CssFit",
    "SearchResult",
    "seasonal_strength",
    "select_differences",
    "css_fit",
    "search_order",
    "auto_sarima",
    "MAX_P",
    "MAX_Q",
    "MAX_SP",
    "MAX_SQ",
]

MAX_P = 5
MAX_Q = 5
MAX_SP = 2
MAX_SQ = 2
MAX_D = 2
SEASONAL_STRENGTH_CUTOFF = 0.64
VARIANCE_DROP = 0.10


def seasonal_strength(y: np.ndarray, s: int) -> float:
    """Share of detrended variance explained by the period-s cycle, in [0, 1]."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if s < 2 or n < 2 * s:
        return 0.0
    # centered moving average of order s removes the trend
    if s % 2 == 0:
        kernel = np.full(s + 1, 1.0 / s)
        kernel[0] = kernel[-1] = 0.5 / s
    else:
        kernel = np.full(s, 1.0 / s)
    trend = np.convolve(y, kernel, mode="valid")
    lo = (y.size - trend.size) // 2
    detrended = y[lo:lo + trend.size] - trend
    idx = (np.arange(detrended.size) + lo) % s
    seasonal = np.array([detrended[idx == j].mean() for j in range(s)])
    remainder = detrended - seasonal[idx]
    var_d = float(np.var(detrended))
    if var_d == 0.0:
        return 0.0
    return max(0.0, 1.0 - float(np.var(remainder)) / var_d)


def select_differences(y, s: int = 1) -> tuple[int, int]:
    """Pick (d, D) by seasonal strength and successive variance reduction."""
    y = np.asarray(getattr(y, "values", y), dtype=float)
    if y.size <= 3 * max(s, 1):
        raise ValueError("series too short for order selection")
    D = 0
    z = y
    if s > 1 and seasonal_strength(y, s) > SEASONAL_STRENGTH_CUTOFF:
        D = 1
        z = difference(y, 0, 1, s)
    d = 0
    while d < MAX_D and z.size > 2:
        nxt = np.diff(z)
        if np.var(nxt) < (1.0 - VARIANCE_DROP) * np.var(z):
            d += 1
            z = nxt
        else:
            break
    return d, D


@dataclass
class CssFit:
    loglik: float
    bic: float
    converged: bool
    params: np.ndarray = field(repr=False)


def css_fit(y, order, seasonal=(0, 0, 0), s: int = 1) -> CssFit:
    """Conditional-ML fit for search scoring: flat priors, zero start.

    Maximizes the data likelihood over the unconstrained parameters with
    L-BFGS and analytic gradients; BIC = k ln(n_eff) - 2 loglik.
    """
    spec = SarimaSpec(order=tuple(order), seasonal=tuple(seasonal), s=s)
    y = y if isinstance(y, TimeSeries) else TimeSeries(np.asarray(y, dtype=float), frequency=s)
    k = len(param_layout(spec))
    n_eff = n_effective(spec, len(y))
    if n_eff <= k + 2:
        raise ValueError(f"need more than {k + 2} effective observations, have {n_eff}")

    def objective(u):
        res = grad_log_posterior(spec, y, u, include_prior=False)
        if not math.isfinite(res.value):
            return 1e12, np.zeros_like(u)
        return -res.value, -res.gradient

    opt = minimize(objective, np.zeros(k), jac=True, method="L-BFGS-B")
    loglik = -float(opt.fun)
    ok = bool(opt.success) and math.isfinite(loglik)
    bic = k * math.log(n_eff) - 2.0 * loglik if ok else math.inf
    return CssFit(loglik=loglik, bic=bic, converged=ok, params=opt.x)


@dataclass
class OrderCandidate:
    order: tuple[int, int, int, int, int, int]
    bic: float
    converged: bool


@dataclass
class SearchResult:
    order: tuple[int, int, int, int, int, int]
    bic: float
    trace: list[OrderCandidate]
    path: list[OrderCandidate]  # accepted incumbents, strictly improving

    @property
    def d(self) -> int:
        return self.order[1]

    @property
    def D(self) -> int:
        return self.order[4]


_SEED_PAIRS = ((2, 2), (0, 0), (1, 0), (0, 1))


def _neighbors(order, seasonal_search):
    p, d, q, P, D, Q = order
    steps = [(1, 0, 0, 0), (-1, 0, 0, 0), (0, 1, 0, 0), (0, -1, 0, 0)]
    if seasonal_search:
        steps += [(0, 0, 1, 0), (0, 0, -1, 0), (0, 0, 0, 1), (0, 0, 0, -1)]
    for dp, dq, dP, dQ in steps:
        np_, nq, nP, nQ = p + dp, q + dq, P + dP, Q + dQ
        if 0 <= np_ <= MAX_P and 0 <= nq <= MAX_Q and 0 <= nP <= MAX_SP and 0 <= nQ <= MAX_SQ:
            yield (np_, d, nq, nP, D, nQ)


def search_order(y, s: int = 1) -> SearchResult:
    """Stepwise BIC descent over (p, q) and, for seasonal data, (P, Q)."""
    y = y if isinstance(y, TimeSeries) else TimeSeries(np.asarray(y, dtype=float), frequency=s)
    d, D = select_differences(y.values, s)
    seasonal_search = s > 1
    trace: list[OrderCandidate] = []
    scores: dict[tuple, float] = {}

    def evaluate(order):
        if order in scores:
            return scores[order]
        p, _, q, P, _, Q = order
        try:
            res = css_fit(y, (p, d, q), (P, D, Q), s)
            bic = res.bic if res.converged else math.inf
            trace.append(OrderCandidate(order=order, bic=bic, converged=res.converged))
        except ValueError:
            bic = math.inf
            trace.append(OrderCandidate(order=order, bic=bic, converged=False))
        scores[order] = bic
        return bic

    if seasonal_search:
        seeds = [(p, d, q, p, D, q) for p, q in _SEED_PAIRS]
    else:
        seeds = [(p, d, q, 0, 0, 0) for p, q in _SEED_PAIRS]
    for seed in seeds:
        evaluate(seed)
    best = min(seeds, key=lambda o: scores[o])
    if not math.isfinite(scores[best]):
        fallback = (0, d, 0, 0, D, 0)
        return SearchResult(order=fallback, bic=math.inf, trace=trace, path=[])

    path = [OrderCandidate(order=best, bic=scores[best], converged=True)]
    while True:
        for cand in _neighbors(best, seasonal_search):
            evaluate(cand)
        challenger = min(scores, key=scores.get)
        if scores[challenger] < scores[best]:
            best = challenger
            path.append(OrderCandidate(order=best, bic=scores[best], converged=True))
        else:
            break
    return SearchResult(order=best, bic=scores[best], trace=trace, path=path)


def auto_sarima(y, s: int = 1, cfg: SamplerConfig | None = None) -> FitResult:
    """Order search followed by the full Bayesian fit of the winner."""
    found = search_order(y, s)
    p, d, q, P, D, Q = found.order
    spec = SarimaSpec(order=(p, d, q), seasonal=(P, D, Q), s=s)
    return sample(spec, y, cfg or SamplerConfig())
