"""Convergence diagnostics and the posterior summary table.

Split potential scale reduction and effective sample size follow the
classic estimators: chains are split in half, R-hat compares within- to
between-chain variance, and ESS integrates the autocorrelation function
truncated by Geyer's initial positive and monotone sequence rules.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .nuts import FitResult

__all__ = [
    "split_chains",
    "split_rhat",
    "ess_bulk",
    "mcse",
    "SummaryRow",
    "summarize",
    "summary_text",
    "SAMPLER_FOOTER",
]

SAMPLER_FOOTER = (
    "Samples were drawn using sampling(NUTS). For each parameter, ess\n"
    "is the effective sample size, and Rhat is the potential\n"
    "scale reduction factor on split chains (at convergence, Rhat = 1)."
)


def _as_chain_matrix(draws: np.ndarray) -> np.ndarray:
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[None, :]
    if draws.ndim != 2:
        raise ValueError("draws must be (chains, iterations)")
    return draws


def split_chains(draws: np.ndarray) -> np.ndarray:
    """Halve every chain; an odd trailing draw is dropped."""
    draws = _as_chain_matrix(draws)
    half = draws.shape[1] // 2
    if half < 1:
        raise ValueError("need at least 2 draws per chain to split")
    return np.vstack([draws[:, :half], draws[:, half : 2 * half]])


def split_rhat(draws: np.ndarray) -> float:
    """Potential scale reduction on split chains."""
    ary = split_chains(draws)
    m, n = ary.shape
    if n < 2:
        return math.nan
    if np.allclose(ary, ary.flat[0]):
        warnings.warn("constant draws: rhat is undefined", RuntimeWarning)
        return math.nan
    chain_means = ary.mean(axis=1)
    within = float(np.mean(np.var(ary, axis=1, ddof=1)))
    between = n * float(np.var(chain_means, ddof=1))
    if within == 0.0:
        warnings.warn("zero within-chain variance: rhat is undefined", RuntimeWarning)
        return math.nan
    var_hat = (n - 1.0) / n * within + between / n
    return math.sqrt(var_hat / within)


def _autocov(ary: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row via FFT."""
    n = ary.shape[1]
    m = next_fast_len(2 * n)
    centered = ary - ary.mean(axis=1, keepdims=True)
    freq = np.fft.rfft(centered, n=m, axis=1)
    freq *= np.conjugate(freq)
    cov = np.fft.irfft(freq, n=m, axis=1)[:, :n].real
    return cov / n

def ess_bulk(draws: np.ndarray) -> float:
    """Effective sample size from split chains.

    Combined autocorrelations are truncated where consecutive pairs of
    lag sums first go negative, then forced non-increasing over pairs.
    """
    ary = split_chains(draws)
    m, n = ary.shape
    if n < 4:
        return math.nan
    if np.allclose(ary, ary.flat[0]):
        warnings.warn("constant draws: ess is undefined", RuntimeWarning)
        return math.nan

    acov = _autocov(ary)
    chain_means = ary.mean(axis=1)
    mean_var = float(np.mean(acov[:, 0])) * n / (n - 1.0)
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += float(np.var(chain_means, ddof=1))
    if var_plus == 0.0:
        warnings.warn("zero variance: ess is undefined", RuntimeWarning)
        return math.nan

    rho = np.zeros(n)
    rho[0] = 1.0
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - float(np.mean(acov[:, 1]))) / var_plus
    rho[1] = rho_odd
    # initial positive sequence: stop once a lag pair sums negative
    t = 1
    while t < n - 3 and (rho_even + rho_odd) > 0.0:
        rho_even = 1.0 - (mean_var - float(np.mean(acov[:, t + 1]))) / var_plus
        rho_odd = 1.0 - (mean_var - float(np.mean(acov[:, t + 2]))) / var_plus
        if (rho_even + rho_odd) >= 0.0:
            rho[t + 1] = rho_even
            rho[t + 2] = rho_odd
        t += 2
    max_t = t - 2
    if rho_even > 0.0:
        rho[max_t + 1] = rho_even
    # initial monotone sequence: pair sums may never increase
    t = 1
    while t <= max_t - 2:
        if (rho[t + 1] + rho[t + 2]) > (rho[t - 1] + rho[t]):
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2

    total = m * n
    tau = -1.0 + 2.0 * float(np.sum(rho[: max_t + 1])) + float(rho[max_t + 1])
    tau = max(tau, 1.0 / math.log10(total))
    if np.isnan(rho).any():
        return math.nan
    return total / tau


def mcse(draws: np.ndarray) -> float:
    """Monte Carlo standard error of the mean: sd over root ESS."""
    ary = _as_chain_matrix(draws)
    ess = ess_bulk(ary)
    if not math.isfinite(ess) or ess <= 0:
        return math.nan
    return float(np.std(ary, ddof=1)) / math.sqrt(ess)


@dataclass
class SummaryRow:
    name: str
    mean: float
    se: float
    q_low: float
    q_high: float
    ess: float
    rhat: float


def _row(name: str, chains: np.ndarray) -> SummaryRow:
    flat = chains.reshape(-1)
    ess = ess_bulk(chains)
    sd = float(np.std(flat, ddof=1))
    se = sd / math.sqrt(ess) if math.isfinite(ess) and ess > 0 else math.nan
    return SummaryRow(
        name=name,
        mean=float(np.mean(flat)),
        se=se,
        q_low=float(np.quantile(flat, 0.025)),
        q_high=float(np.quantile(flat, 0.975)),
        ess=ess,
        rhat=split_rhat(chains),
    )


def summarize(fit: FitResult) -> list[SummaryRow]:
    """One row per parameter plus a trailing total log-likelihood row."""
    chains, kept, _ = fit.draws.shape
    rows = []
    for j, name in enumerate(fit.display):
        rows.append(_row(name, fit.draws[:, :, j]))
    loglik = fit.total_loglik().reshape(chains, kept)
    rows.append(_row("loglik", loglik))
    return rows


def summary_text(fit: FitResult) -> str:
    """Fixed-width summary table with the sampler footer."""
    rows = summarize(fit)
    name_w = max(12, max(len(r.name) for r in rows) + 2)
    header = (
        f"{'':<{name_w}}{'mean':>10}{'se':>9}{'2.5%':>10}"
        f"{'97.5%':>10}{'ess':>11}{'Rhat':>8}"
    )
    lines = [header]
    for r in rows:
        lines.append(
            f"{r.name:<{name_w}}{r.mean:>10.4f}{r.se:>9.4f}{r.q_low:>10.4f}"
            f"{r.q_high:>10.4f}{r.ess:>11.4f}{r.rhat:>8.4f}"
        )
    lines.append("")
    lines.append(SAMPLER_FOOTER)
    return "\n".join(lines)
