"""Model comparison: information criteria, WAIC, PSIS-LOO, bridge sampling.

Everything here consumes the per-draw pointwise log-likelihood matrix or
the unconstrained draws; nothing refits. The PSIS tail smoothing follows
the published recipe (generalized Pareto fit to the largest importance
ratios by the quantile-posterior estimator, expected-order-statistic
replacement, truncation at the raw maximum). Bridge sampling fits its
normal proposal on one half of the draws and iterates the optimal-bridge
fixed point on the other half to avoid double-use bias.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .diagnostics import ess_bulk
from .models import log_posterior, param_names
from .nuts import FitResult

__all__ = [
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
]


def _mean_loglik(fit: FitResult) -> float:
    return float(fit.total_loglik().mean())


def _k_params(fit: FitResult) -> int:
    return len(param_names(fit.spec))


def aic(fit: FitResult) -> float:
    """2k - 2*mean posterior log-likelihood."""
    return 2.0 * _k_params(fit) - 2.0 * _mean_loglik(fit)


def aicc(fit: FitResult) -> float:
    k = _k_params(fit)
    n = fit.n_eff_obs
    if n <= k + 1:
        raise ValueError(f"AICc undefined: n_eff={n} requires more than k+1={k + 1}")
    return aic(fit) + 2.0 * k * (k + 1) / (n - k - 1)


def bic(fit: FitResult) -> float:
    return _k_params(fit) * math.log(fit.n_eff_obs) - 2.0 * _mean_loglik(fit)


@dataclass
class WaicResult:
    elpd_waic: float
    se_elpd_waic: float
    p_waic: float
    se_p_waic: float
    waic: float
    se_waic: float
    pointwise_elpd: np.ndarray = field(repr=False)


def waic_matrix(pointwise: np.ndarray) -> WaicResult:
    """Widely applicable information criterion from an (draws, n) matrix."""
    pointwise = np.asarray(pointwise, dtype=float)
    n_draws, n = pointwise.shape
    lpd = logsumexp(pointwise, axis=0) - math.log(n_draws)
    p_i = np.var(pointwise, axis=0, ddof=1)
    if np.any(p_i > 0.4):
        warnings.warn(
            f"{int(np.sum(p_i > 0.4))} observations with p_waic > 0.4; "
            "the WAIC approximation may be unreliable",
            RuntimeWarning,
        )
    elpd_i = lpd - p_i
    se = math.sqrt(n * float(np.var(elpd_i, ddof=1)))
    se_p = math.sqrt(n * float(np.var(p_i, ddof=1)))
    elpd = float(np.sum(elpd_i))
    return WaicResult(
        elpd_waic=elpd,
        se_elpd_waic=se,
        p_waic=float(np.sum(p_i)),
        se_p_waic=se_p,
        waic=-2.0 * elpd,
        se_waic=2.0 * se,
        pointwise_elpd=elpd_i,
    )


def waic(fit: FitResult) -> WaicResult:
    return waic_matrix(fit.pointwise)


def _gpd_fit(exceedances: np.ndarray) -> tuple[float, float]:
    """Generalized Pareto (k, sigma) by the quantile-posterior-mean method."""
    x = np.sort(exceedances)
    n = x.size
    m = 30 + int(math.sqrt(n))
    bs = 1.0 - np.sqrt(m / (np.arange(1, m + 1) - 0.5))
    bs /= 3.0 * x[int(n / 4 + 0.5) - 1]
    bs += 1.0 / x[-1]
    ks = np.mean(np.log1p(-bs[:, None] * x), axis=1)
    logw = n * (np.log(-bs / ks) - ks - 1.0)
    weights = 1.0 / np.sum(np.exp(logw - logw[:, None]), axis=1)
    weights /= weights.sum()
    b_post = float(np.sum(bs * weights))
    k_raw = float(np.mean(np.log1p(-b_post * x)))
    sigma = -k_raw / b_post
    # weak prior pulls the shape toward 0.5 for tiny tails; the scale
    # keeps the raw estimate or its sign can flip
    k_post = (n * k_raw + 5.0) / (n + 10.0)
    return k_post, sigma


def _gpd_quantiles(p: np.ndarray, k: float, sigma: float) -> np.ndarray:
    if abs(k) < 1e-12:
        return -sigma * np.log1p(-p)
    return sigma * np.expm1(-k * np.log1p(-p)) / k


def _smooth_tail(lw: np.ndarray, m_tail: int) -> tuple[np.ndarray, float]:
    """Pareto-smooth the largest m_tail log weights; returns (lw, k_hat)."""
    lw = lw - lw.max()
    if m_tail < 5:
        return lw, -math.inf
    order = np.argsort(lw)
    tail_idx = order[-m_tail:]
    cutoff = lw[order[-m_tail - 1]]
    exp_cutoff = math.exp(cutoff)
    exceed = np.exp(lw[tail_idx]) - exp_cutoff
    if np.allclose(exceed, 0.0):
        return lw, -math.inf
    k, sigma = _gpd_fit(exceed)
    if math.isfinite(k):
        probs = (np.arange(1, m_tail + 1) - 0.5) / m_tail
        smoothed = np.log(_gpd_quantiles(probs, k, sigma) + exp_cutoff)
        ranks = np.argsort(lw[tail_idx])
        new = np.empty(m_tail)
        new[ranks] = smoothed
        lw = lw.copy()
        lw[tail_idx] = np.minimum(new, 0.0)  # never exceed the raw maximum
    return lw, k


@dataclass
class LooResult:
    elpd_loo: float
    se_elpd_loo: float
    p_loo: float
    se_p_loo: float
    looic: float
    se_looic: float
    pareto_k: np.ndarray = field(repr=False)
    pointwise_elpd: np.ndarray = field(repr=False)


def psis_loo_matrix(pointwise: np.ndarray) -> LooResult:
    """Pareto-smoothed importance-sampling LOO from an (draws, n) matrix."""
    pointwise = np.asarray(pointwise, dtype=float)
    n_draws, n = pointwise.shape
    m_tail = int(min(0.2 * n_draws, 3.0 * math.sqrt(n_draws)))
    lpd = logsumexp(pointwise, axis=0) - math.log(n_draws)

    elpd_i = np.empty(n)
    khat = np.empty(n)
    for i in range(n):
        lw, k = _smooth_tail(-pointwise[:, i], m_tail)
        lw = lw - logsumexp(lw)
        elpd_i[i] = logsumexp(pointwise[:, i] + lw)
        khat[i] = k
    bad = int(np.sum(khat > 0.7))
    if bad:
        warnings.warn(
            f"{bad} observations with Pareto k > 0.7; PSIS-LOO may be unstable",
            RuntimeWarning,
        )
    p_i = lpd - elpd_i
    elpd = float(np.sum(elpd_i))
    se = math.sqrt(n * float(np.var(elpd_i, ddof=1)))
    se_p = math.sqrt(n * float(np.var(p_i, ddof=1)))
    return LooResult(
        elpd_loo=elpd,
        se_elpd_loo=se,
        p_loo=float(np.sum(p_i)),
        se_p_loo=se_p,
        looic=-2.0 * elpd,
        se_looic=2.0 * se,
        pareto_k=khat,
        pointwise_elpd=elpd_i,
    )


def psis_loo(fit: FitResult) -> LooResult:
    return psis_loo_matrix(fit.pointwise)


_COMPARE_COLS = (
    "elpd_diff", "se_diff", "elpd_loo", "se_elpd_loo",
    "p_loo", "se_p_loo", "looic", "se_looic",
)


def loo_compare(results: dict[str, LooResult]) -> str:
    """Ranked comparison table, best model first.

    ``se_diff`` is the standard error of the pointwise elpd differences
    against the best model, which is sharper than differencing the
    per-model standard errors.
    """
    if len(results) < 2:
        raise ValueError("need at least two results to compare")
    sizes = {r.pointwise_elpd.size for r in results.values()}
    if len(sizes) != 1:
        raise ValueError(
            "results cover different numbers of observations and are incomparable"
        )
    ranked = sorted(results.items(), key=lambda kv: kv[1].elpd_loo, reverse=True)
    best = ranked[0][1]
    n = best.pointwise_elpd.size
    name_w = max(len(name) for name, _ in ranked) + 2
    header = "".join(f"{c:>13}" for c in _COMPARE_COLS)
    lines = [" " * name_w + header]
    for name, res in ranked:
        diff_i = res.pointwise_elpd - best.pointwise_elpd
        elpd_diff = float(np.sum(diff_i))
        se_diff = math.sqrt(n * float(np.var(diff_i, ddof=1)))
        cells = (
            elpd_diff, se_diff, res.elpd_loo, res.se_elpd_loo,
            res.p_loo, res.se_p_loo, res.looic, res.se_looic,
        )
        lines.append(f"{name:<{name_w}}" + "".join(f"{c:>13.2f}" for c in cells))
    return "\n".join(lines)


@dataclass
class BridgeResult:
    log_marginal_likelihood: float
    iterations: int
    relative_error: float
    converged: bool


def bridge_from_samples(
    udraws: np.ndarray,
    log_post,
    seed: int = 0,
    tol: float = 1e-10,
    max_iter: int = 1000,
    verbose: bool = False,
) -> BridgeResult:
    """Log normalizing constant of exp(log_post) from its samples.

    ``udraws`` are draws from the normalized density; ``log_post`` evaluates
    the unnormalized log density. Half the draws fit a moment-matched normal
    proposal, the other half enter the optimal-bridge fixed-point iteration.
    """
    udraws = np.asarray(udraws, dtype=float)
    if udraws.ndim == 1:
        udraws = udraws[:, None]
    n_total, dim = udraws.shape
    if n_total < 20:
        raise ValueError("bridge sampling needs a reasonable number of draws")
    half = n_total // 2
    fit_half, est_half = udraws[:half], udraws[half:]
    n2 = est_half.shape[0]

    mean = fit_half.mean(axis=0)
    cov = np.cov(fit_half, rowvar=False).reshape(dim, dim)
    cov += np.eye(dim) * 1e-10
    chol = np.linalg.cholesky(cov)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    const = -0.5 * dim * math.log(2.0 * math.pi) - 0.5 * log_det

    def log_q(x):
        sol = solve_triangular(chol, (x - mean).T, lower=True).T
        return const - 0.5 * np.sum(sol * sol, axis=-1)

    rng = np.random.default_rng(seed)
    prop = mean + rng.standard_normal((n2, dim)) @ chol.T

    lp_post = np.array([log_post(x) for x in est_half])
    lp_prop = np.array([log_post(x) for x in prop])
    l1 = lp_post - log_q(est_half)
    l2 = lp_prop - log_q(prop)
    keep = np.isfinite(l2)
    l2 = l2[keep]

    lstar = float(np.median(l1))
    # pseudo-sample-size of the correlated posterior half
    ess = np.median(
        [ess_bulk(est_half[None, :, j]) for j in range(dim)]
    )
    if not math.isfinite(ess) or ess <= 0:
        ess = float(n2)
    s1 = ess / (ess + n2)
    s2 = n2 / (ess + n2)

    e1 = np.exp(l1 - lstar)
    e2 = np.exp(l2 - lstar)
    r = 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        num = float(np.mean(e2 / (s1 * e2 + s2 * r)))
        den = float(np.mean(1.0 / (s1 * e1 + s2 * r)))
        r_new = num / den
        if verbose:
            print(f"Iteration: {iterations}")
        if abs(r_new - r) <= tol * abs(r):
            r = r_new
            converged = True
            break
        r = r_new
    if not converged:
        warnings.warn(
            f"bridge iteration did not reach tolerance after {max_iter} steps",
            RuntimeWarning,
        )

    logml = math.log(r) + lstar
    # delta-method relative error of the two Monte Carlo averages
    f1 = e2 / (s1 * e2 + s2 * r)
    f2 = 1.0 / (s1 * e1 + s2 * r)
    n1 = f2.size
    ess_f2 = ess_bulk(f2[None, :])
    if not math.isfinite(ess_f2) or ess_f2 <= 0:
        ess_f2 = float(n1)
    re2 = float(np.var(f1, ddof=1)) / (len(f1) * float(np.mean(f1)) ** 2)
    re2 += (n1 / ess_f2) * float(np.var(f2, ddof=1)) / (n1 * float(np.mean(f2)) ** 2)
    return BridgeResult(
        log_marginal_likelihood=logml,
        iterations=iterations,
        relative_error=math.sqrt(max(re2, 0.0)),
        converged=converged,
    )


def bridge_log_marginal(
    fit: FitResult, seed: int = 0, verbose: bool = False
) -> BridgeResult:
    """Marginal likelihood of a fitted model on the unconstrained scale."""
    spec, y = fit.spec, fit.series

    def lp(u):
        return log_posterior(spec, y, u).log_posterior

    return bridge_from_samples(
        fit.flat_udraws(), lp, seed=seed, verbose=verbose
    )


def format_bayes_factor(
    value: float, log: bool = True, name1: str = "model1", name2: str = "model2"
) -> str:
    kind = "log Bayes factor" if log else "Bayes factor"
    return f"Estimated {kind} in favor of {name1} over {name2}: {value:.5f}"


def bayes_factor(
    fit1: FitResult,
    fit2: FitResult,
    log: bool = True,
    seed: int = 0,
    verbose: bool = False,
) -> float:
    """Bayes factor of fit1 over fit2 via bridge-sampled marginals."""
    b1 = bridge_log_marginal(fit1, seed=seed, verbose=verbose)
    b2 = bridge_log_marginal(fit2, seed=seed + 1, verbose=verbose)
    log_bf = b1.log_marginal_likelihood - b2.log_marginal_likelihood
    value = log_bf if log else math.exp(min(log_bf, 700.0))
    if verbose:
        print(format_bayes_factor(value, log=log))
    return value
