"""No-U-Turn sampler with dual-averaging step size and windowed adaptation.

Multinomial trajectory sampling over a binary tree of leapfrog states,
diagonal mass matrix estimated during expanding slow warmup windows,
step size adapted by dual averaging toward a target acceptance statistic.
Each chain owns an independent RNG stream derived from (seed, chain index),
so results are reproducible bit for bit regardless of chain scheduling.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import (
    ModelSpec,
    PosteriorTarget,
    batch_eval,
    constrain,
    display_names,
    model_header,
    n_effective,
    param_layout,
    param_names,
)
from .series import TimeSeries

__all__ = [
    "SamplerConfig",
    "SamplerReport",
    "GaussianTarget",
    "run_nuts",
    "RawRun",
    "FitResult",
    "sample",
    "extract",
]

DELTA_MAX = 1000.0  # energy error treated as divergence


@dataclass
class SamplerConfig:
    chains: int = 4
    iter: int = 2000
    warmup: int | None = None
    adapt_delta: float = 0.8
    max_treedepth: int = 10
    seed: int = 0
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.iter < 2:
            raise ValueError("iter must be >= 2")
        if self.warmup is None:
            self.warmup = self.iter // 2
        if not 0 <= self.warmup < self.iter:
            raise ValueError("need 0 <= warmup < iter")
        if not 0.0 < self.adapt_delta < 1.0:
            raise ValueError("adapt_delta must lie in (0, 1)")
        if self.max_treedepth < 1:
            raise ValueError("max_treedepth must be >= 1")

    @property
    def kept(self) -> int:
        return self.iter - self.warmup

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get("TSBAYES_THREADS", "")
        try:
            return max(1, int(env))
        except ValueError:
            return 1


class GaussianTarget:
    """Independent-Gaussian pseudo-model used as a sampler test hook."""

    def __init__(self, mean, sd):
        self.mean = np.asarray(mean, dtype=float)
        self.sd = np.asarray(sd, dtype=float)
        if self.mean.shape != self.sd.shape or self.mean.ndim != 1:
            raise ValueError("mean and sd must be matching vectors")
        if np.any(self.sd <= 0):
            raise ValueError("sd must be positive")
        self.dim = self.mean.size
        self._const = -0.5 * self.dim * math.log(2.0 * math.pi) - float(
            np.sum(np.log(self.sd))
        )

    def value_and_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        z = (u - self.mean) / self.sd
        return self._const - 0.5 * float(z @ z), -z / self.sd


@dataclass
class _DualAveraging:
    """Nesterov dual averaging of log step size toward an accept target."""

    mu: float
    target: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    m: int = 0
    h_bar: float = 0.0
    log_eps_bar: float = 0.0

    def update(self, accept: float) -> float:
        self.m += 1
        eta = 1.0 / (self.m + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept)
        log_eps = self.mu - math.sqrt(self.m) / self.gamma * self.h_bar
        w = self.m ** (-self.kappa)
        self.log_eps_bar = w * log_eps + (1.0 - w) * self.log_eps_bar
        return math.exp(log_eps)

    def adapted(self) -> float:
        return math.exp(self.log_eps_bar)


class _RunningVar:
    """Welford accumulator for the diagonal metric."""

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, x: np.ndarray) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def regularized_variance(self) -> np.ndarray:
        # shrink toward 1e-3 exactly as a small-sample guard
        if self.n < 2:
            return np.ones_like(self.mean)
        var = self.m2 / (self.n - 1)
        w = self.n / (self.n + 5.0)
        return w * var + (1.0 - w) * 1e-3


def _warmup_schedule(warmup: int) -> tuple[int, list[int]]:
    """Start of the slow region and iteration indices ending slow windows."""
    if warmup < 20:
        # too short to estimate a metric; step-size adaptation only
        return warmup, []
    init_fast, base, term_fast = 75, 25, 50
    if warmup < init_fast + base + term_fast:
        init_fast = int(0.15 * warmup)
        term_fast = int(0.10 * warmup)
        base = warmup - init_fast - term_fast
        if base < 2:
            return warmup, []
    ends = []
    start = init_fast
    size = base
    while True:
        end = start + size
        if end + 2 * size > warmup - term_fast:
            ends.append(warmup - term_fast)
            break
        ends.append(end)
        start = end
        size *= 2
    return init_fast, ends


def _kinetic(p: np.ndarray, inv_mass: np.ndarray) -> float:
    return 0.5 * float(np.sum(p * p * inv_mass))


def _leapfrog(target, q, p, grad, eps, inv_mass):
    p_half = p + 0.5 * eps * grad
    q_new = q + eps * inv_mass * p_half
    value, grad_new = target.value_and_grad(q_new)
    p_new = p_half + 0.5 * eps * grad_new
    return q_new, p_new, value, grad_new


def _find_reasonable_eps(target, q, value, grad, inv_mass, rng) -> float:
    """Double or halve eps until one leapfrog step crosses 0.5 acceptance."""
    eps = 1.0
    p = rng.standard_normal(q.size) / np.sqrt(inv_mass)
    h0 = -value + _kinetic(p, inv_mass)
    direction = 0
    for _ in range(100):
        _, p1, v1, _ = _leapfrog(target, q, p, grad, eps, inv_mass)
        h1 = -v1 + _kinetic(p1, inv_mass) if math.isfinite(v1) else math.inf
        log_ratio = h0 - h1
        step = 1 if log_ratio > math.log(0.5) else -1
        if direction == 0:
            direction = step
        elif step != direction:
            break
        eps *= 2.0**direction
        if eps > 1e7 or eps < 1e-10:
            break
    return eps


class _Subtree:
    __slots__ = (
        "q_minus",
        "p_minus",
        "grad_minus",
        "q_plus",
        "p_plus",
        "grad_plus",
        "q_prop",
        "value_prop",
        "grad_prop",
        "log_sum_w",
        "alpha",
        "n_alpha",
        "divergent",
        "turning",
    )


def _uturn(q_plus, p_plus, q_minus, p_minus, inv_mass) -> bool:
    dq = q_plus - q_minus
    return (
        float(dq @ (inv_mass * p_minus)) < 0.0
        or float(dq @ (inv_mass * p_plus)) < 0.0
    )


def _build_tree(target, depth, q, p, grad, direction, h0, eps, inv_mass, rng):
    if depth == 0:
        q1, p1, v1, g1 = _leapfrog(target, q, p, grad, direction * eps, inv_mass)
        h1 = -v1 + _kinetic(p1, inv_mass) if math.isfinite(v1) else math.inf
        energy_error = h1 - h0
        leaf = _Subtree()
        leaf.q_minus = leaf.q_plus = leaf.q_prop = q1
        leaf.p_minus = leaf.p_plus = p1
        leaf.grad_minus = leaf.grad_plus = leaf.grad_prop = g1
        leaf.value_prop = v1
        leaf.divergent = not math.isfinite(energy_error) or energy_error > DELTA_MAX
        leaf.turning = False
        leaf.log_sum_w = -energy_error if math.isfinite(energy_error) else -math.inf
        leaf.alpha = min(1.0, math.exp(min(0.0, -energy_error)))
        leaf.n_alpha = 1
        return leaf

    first = _build_tree(
        target, depth - 1, q, p, grad, direction, h0, eps, inv_mass, rng
    )
    if first.divergent or first.turning:
        return first
    if direction == 1:
        q_edge, p_edge, g_edge = first.q_plus, first.p_plus, first.grad_plus
    else:
        q_edge, p_edge, g_edge = first.q_minus, first.p_minus, first.grad_minus
    second = _build_tree(
        target, depth - 1, q_edge, p_edge, g_edge, direction, h0, eps, inv_mass, rng
    )

    first.alpha += second.alpha
    first.n_alpha += second.n_alpha
    if second.divergent or second.turning:
        first.divergent = second.divergent
        first.turning = second.turning
        return first

    total = np.logaddexp(first.log_sum_w, second.log_sum_w)
    if math.log(rng.uniform()) < second.log_sum_w - total:
        first.q_prop = second.q_prop
        first.value_prop = second.value_prop
        first.grad_prop = second.grad_prop
    first.log_sum_w = total
    if direction == 1:
        first.q_plus, first.p_plus, first.grad_plus = (
            second.q_plus,
            second.p_plus,
            second.grad_plus,
        )
    else:
        first.q_minus, first.p_minus, first.grad_minus = (
            second.q_minus,
            second.p_minus,
            second.grad_minus,
        )
    first.turning = _uturn(
        first.q_plus, first.p_plus, first.q_minus, first.p_minus, inv_mass
    )
    return first


@dataclass
class _Transition:
    q: np.ndarray
    value: float
    grad: np.ndarray
    accept: float
    divergent: bool
    depth_saturated: bool


def _transition(target, q, value, grad, eps, inv_mass, max_depth, rng) -> _Transition:
    p0 = rng.standard_normal(q.size) / np.sqrt(inv_mass)
    h0 = -value + _kinetic(p0, inv_mass)

    q_minus = q_plus = q
    p_minus = p_plus = p0
    grad_minus = grad_plus = grad
    q_prop, value_prop, grad_prop = q, value, grad
    log_sum_w = 0.0
    alpha_sum = 0.0
    n_alpha = 0
    divergent = False
    saturated = True

    for depth in range(max_depth):
        direction = 1 if rng.integers(0, 2) == 1 else -1
        if direction == 1:
            sub = _build_tree(
                target, depth, q_plus, p_plus, grad_plus, 1, h0, eps, inv_mass, rng
            )
        else:
            sub = _build_tree(
                target, depth, q_minus, p_minus, grad_minus, -1, h0, eps, inv_mass, rng
            )
        alpha_sum += sub.alpha
        n_alpha += sub.n_alpha
        if sub.divergent:
            divergent = True
            saturated = False
            break
        if sub.turning:
            saturated = False
            break
        # biased progressive sampling favors the fresh subtree
        if math.log(rng.uniform()) < sub.log_sum_w - log_sum_w:
            q_prop, value_prop, grad_prop = sub.q_prop, sub.value_prop, sub.grad_prop
        log_sum_w = np.logaddexp(log_sum_w, sub.log_sum_w)
        if direction == 1:
            q_plus, p_plus, grad_plus = sub.q_plus, sub.p_plus, sub.grad_plus
        else:
            q_minus, p_minus, grad_minus = sub.q_minus, sub.p_minus, sub.grad_minus
        if _uturn(q_plus, p_plus, q_minus, p_minus, inv_mass):
            saturated = False
            break

    accept = alpha_sum / n_alpha if n_alpha else 0.0
    return _Transition(q_prop, value_prop, grad_prop, accept, divergent, saturated)


@dataclass
class ChainResult:
    draws: np.ndarray
    lp: np.ndarray
    divergences: int
    treedepth_hits: int
    step_size: float
    accept_mean: float
    inv_mass: np.ndarray
    init_attempts: int
    elapsed: float


def _run_chain(target, cfg: SamplerConfig, chain_idx: int) -> ChainResult:
    rng = np.random.default_rng([cfg.seed, chain_idx])
    t_start = time.perf_counter()
    dim = target.dim

    q = None
    value, grad = -math.inf, None
    attempts = 0
    for attempts in range(1, 101):
        q = rng.uniform(-2.0, 2.0, dim)
        value, grad = target.value_and_grad(q)
        if math.isfinite(value):
            break
    else:
        raise RuntimeError(
            f"initialization failed after 100 attempts for {_target_name(target)}"
        )

    inv_mass = np.ones(dim)
    eps = _find_reasonable_eps(target, q, value, grad, inv_mass, rng)
    da = _DualAveraging(mu=math.log(10.0 * eps), target=cfg.adapt_delta)
    slow_start, slow_ends = _warmup_schedule(cfg.warmup)
    welford = _RunningVar(dim)

    for i in range(cfg.warmup):
        tr = _transition(
            target, q, value, grad, eps, inv_mass, cfg.max_treedepth, rng
        )
        q, value, grad = tr.q, tr.value, tr.grad
        eps = da.update(tr.accept)
        if i >= slow_start and (not slow_ends or i < slow_ends[-1]):
            welford.update(q)
        if slow_ends and (i + 1) == slow_ends[0]:
            slow_ends.pop(0)
            inv_mass = welford.regularized_variance()
            welford = _RunningVar(dim)
            eps = _find_reasonable_eps(target, q, value, grad, inv_mass, rng)
            da = _DualAveraging(mu=math.log(10.0 * eps), target=cfg.adapt_delta)

    if cfg.warmup > 0:
        eps = da.adapted()

    kept = cfg.kept
    draws = np.empty((kept, dim))
    lp = np.empty(kept)
    divergences = 0
    treedepth_hits = 0
    accept_acc = 0.0
    for j in range(kept):
        tr = _transition(
            target, q, value, grad, eps, inv_mass, cfg.max_treedepth, rng
        )
        q, value, grad = tr.q, tr.value, tr.grad
        draws[j] = q
        lp[j] = value
        divergences += tr.divergent
        treedepth_hits += tr.depth_saturated
        accept_acc += tr.accept

    return ChainResult(
        draws=draws,
        lp=lp,
        divergences=divergences,
        treedepth_hits=treedepth_hits,
        step_size=eps,
        accept_mean=accept_acc / kept,
        inv_mass=inv_mass,
        init_attempts=attempts,
        elapsed=time.perf_counter() - t_start,
    )


def _target_name(target) -> str:
    spec = getattr(target, "spec", None)
    if spec is not None:
        return model_header(spec)
    return type(target).__name__


@dataclass
class RawRun:
    """Unconstrained draws from all chains plus per-chain sampler state."""

    draws: np.ndarray  # (chains, kept, dim)
    lp: np.ndarray  # (chains, kept)
    chains: list[ChainResult]
    config: SamplerConfig


def run_nuts(target, cfg: SamplerConfig) -> RawRun:
    """Sample any value-and-gradient target; chains may run on threads."""
    workers = min(cfg.resolved_threads(), cfg.chains)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda c: _run_chain(target, cfg, c), range(cfg.chains))
            )
    else:
        results = [_run_chain(target, cfg, c) for c in range(cfg.chains)]
    draws = np.stack([r.draws for r in results])
    lp = np.stack([r.lp for r in results])
    return RawRun(draws=draws, lp=lp, chains=results, config=cfg)


@dataclass
class SamplerReport:
    """What happened during sampling, one entry per chain where relevant."""

    chains: int
    iter: int
    warmup: int
    adapt_delta: float
    max_treedepth: int
    seed: int
    divergences: list[int]
    treedepth_hits: list[int]
    step_size: list[float]
    accept_stat: list[float]
    init_attempts: list[int]
    elapsed: list[float]

    @property
    def total_divergences(self) -> int:
        return sum(self.divergences)

    def to_dict(self) -> dict:
        return {
            "chains": self.chains,
            "iter": self.iter,
            "warmup": self.warmup,
            "adapt_delta": self.adapt_delta,
            "max_treedepth": self.max_treedepth,
            "seed": self.seed,
            "divergences": list(self.divergences),
            "treedepth_hits": list(self.treedepth_hits),
            "step_size": [float(v) for v in self.step_size],
            "accept_stat": [float(v) for v in self.accept_stat],
            "init_attempts": list(self.init_attempts),
            "elapsed": [float(v) for v in self.elapsed],
        }

    @classmethod
    def from_run(cls, run: RawRun) -> "SamplerReport":
        cfg = run.config
        return cls(
            chains=cfg.chains,
            iter=cfg.iter,
            warmup=cfg.warmup,
            adapt_delta=cfg.adapt_delta,
            max_treedepth=cfg.max_treedepth,
            seed=cfg.seed,
            divergences=[c.divergences for c in run.chains],
            treedepth_hits=[c.treedepth_hits for c in run.chains],
            step_size=[c.step_size for c in run.chains],
            accept_stat=[c.accept_mean for c in run.chains],
            init_attempts=[c.init_attempts for c in run.chains],
            elapsed=[c.elapsed for c in run.chains],
        )


@dataclass
class FitResult:
    """A fitted model: constrained draws, likelihood matrix, sampler report."""

    spec: ModelSpec
    series: TimeSeries
    draws: np.ndarray  # (chains, kept, P) constrained
    udraws: np.ndarray  # (chains, kept, P) unconstrained
    lp: np.ndarray  # (chains, kept) log unnormalized posterior
    pointwise: np.ndarray  # (chains*kept, n_eff) pointwise log-likelihood
    report: SamplerReport

    @property
    def names(self) -> list[str]:
        return param_names(self.spec)

    @property
    def display(self) -> list[str]:
        return display_names(self.spec)

    @property
    def n_eff_obs(self) -> int:
        return n_effective(self.spec, len(self.series))

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0] * self.draws.shape[1]

    def flat_draws(self) -> np.ndarray:
        return self.draws.reshape(-1, self.draws.shape[2])

    def flat_udraws(self) -> np.ndarray:
        return self.udraws.reshape(-1, self.udraws.shape[2])

    def total_loglik(self) -> np.ndarray:
        return self.pointwise.sum(axis=1)

    def header(self) -> str:
        return model_header(self.spec, self.series.name)


def sample(spec: ModelSpec, y, cfg: SamplerConfig | None = None) -> FitResult:
    """Fit a model by NUTS and assemble the posterior bundle."""
    if cfg is None:
        cfg = SamplerConfig()
    if not isinstance(y, TimeSeries):
        y = TimeSeries(np.asarray(y, dtype=float), frequency=getattr(spec, "s", 1))
    target = PosteriorTarget(spec, y)
    run = run_nuts(target, cfg)

    layout = param_layout(spec)
    P = len(layout)
    flat_u = run.draws.reshape(-1, P)
    flat_c = np.empty_like(flat_u)
    for i in range(flat_u.shape[0]):
        flat_c[i], _ = constrain(spec, flat_u[i])
    pointwise = batch_eval(spec, y, flat_u).pointwise

    return FitResult(
        spec=spec,
        series=y,
        draws=flat_c.reshape(run.draws.shape),
        udraws=run.draws,
        lp=run.lp,
        pointwise=pointwise,
        report=SamplerReport.from_run(run),
    )


def extract(fit: FitResult, name: str) -> np.ndarray:
    """Flattened post-warmup draws of one quantity, chain-major order."""
    if name == "lp":
        return fit.lp.reshape(-1).copy()
    if name == "loglik":
        return fit.total_loglik().copy()
    names = fit.names
    if name in names:
        j = names.index(name)
        return fit.draws[:, :, j].reshape(-1).copy()
    shown = fit.display
    if name in shown:
        j = shown.index(name)
        return fit.draws[:, :, j].reshape(-1).copy()
    raise KeyError(f"no parameter named {name!r}")
