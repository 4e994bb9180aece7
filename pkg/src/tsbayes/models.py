"""Model definitions and log-posterior evaluation.

Two observation models share one evaluation pipeline:

* seasonal ARIMA with optional external or Fourier regressors, conditional
  (sum-of-squares style) likelihood with zero pre-sample errors;
* GARCH with normal or scaled student-t innovations.

Every evaluation runs on the unconstrained parameter vector. The same
generic code computes plain values and, fed with dual numbers, the full
gradient in one pass.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .priors import (
    DF,
    PM1,
    POSITIVE,
    REAL,
    UNIT,
    Domain,
    PriorSet,
    format_prior,
    log_density,
)
from .series import (
    RegressorMatrix,
    TimeSeries,
    difference,
    difference_columns,
    fourier_terms,
)

__all__ = [
    "SarimaSpec",
    "GarchSpec",
    "ParamEntry",
    "param_layout",
    "param_names",
    "display_names",
    "default_priors",
    "n_effective",
    "constrain",
    "unconstrain",
    "LogPosteriorResult",
    "log_posterior",
    "GradientResult",
    "grad_log_posterior",
    "finite_diff_check",
    "BatchEval",
    "batch_eval",
    "PosteriorTarget",
    "model_header",
    "describe",
]

LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ParamEntry:
    name: str
    kind: str
    domain: Domain


@dataclass
class SarimaSpec:
    """Seasonal ARIMA(p,d,q)(P,D,Q)[s] with optional regression term.

    ``fourier_k`` builds 2K harmonic regressors from the seasonal period;
    ``xreg`` supplies arbitrary columns. The regression acts on the
    differenced scale and the ARMA recursion runs on the regression-adjusted
    series.
    """

    order: tuple[int, int, int] = (0, 0, 0)
    seasonal: tuple[int, int, int] = (0, 0, 0)
    s: int = 1
    xreg: RegressorMatrix | None = None
    fourier_k: int | None = None
    priors: PriorSet = field(init=False, repr=False)

    family = "sarima"

    def __post_init__(self) -> None:
        self.order = tuple(int(v) for v in self.order)
        self.seasonal = tuple(int(v) for v in self.seasonal)
        self.s = int(self.s)
        if len(self.order) != 3 or len(self.seasonal) != 3:
            raise ValueError("order and seasonal must be (p, d, q) and (P, D, Q)")
        if min(self.order) < 0 or min(self.seasonal) < 0:
            raise ValueError("model orders must be non-negative")
        if self.s < 1:
            raise ValueError("seasonal period must be >= 1")
        if any(self.seasonal) and self.s < 2:
            raise ValueError("seasonal terms require a period >= 2")
        if self.xreg is not None and not isinstance(self.xreg, RegressorMatrix):
            self.xreg = RegressorMatrix(np.asarray(self.xreg, dtype=float))
        if self.fourier_k is not None:
            if self.xreg is not None:
                raise ValueError("give either xreg or fourier_k, not both")
            if self.fourier_k < 1 or 2 * self.fourier_k > self.s:
                raise ValueError("fourier_k must satisfy 1 <= 2K <= s")
            if 2 * self.fourier_k == self.s:
                warnings.warn(
                    "sine column at the Nyquist harmonic is identically zero; "
                    "its coefficient is informed by the prior only",
                    stacklevel=2,
                )
        self.priors = PriorSet.build(param_layout(self))

    @property
    def n_regressors(self) -> int:
        if self.fourier_k is not None:
            return 2 * self.fourier_k
        if self.xreg is not None:
            return self.xreg.n_columns
        return 0


@dataclass
class GarchSpec:
    """GARCH(s, k): s squared-error lags, k variance lags, constant mean."""

    arch: int = 1
    garch: int = 0
    innovation: str = "normal"
    priors: PriorSet = field(init=False, repr=False)

    family = "garch"
    s = 1

    def __post_init__(self) -> None:
        self.arch = int(self.arch)
        self.garch = int(self.garch)
        if self.arch < 0 or self.garch < 0:
            raise ValueError("arch and garch orders must be non-negative")
        if self.arch == 0 and self.garch == 0:
            raise ValueError("need at least one arch or garch lag")
        if self.innovation not in ("normal", "student_t"):
            raise ValueError("innovation must be 'normal' or 'student_t'")
        self.priors = PriorSet.build(param_layout(self))


ModelSpec = SarimaSpec | GarchSpec


def param_layout(spec: ModelSpec) -> list[ParamEntry]:
    """Ordered parameter entries; the unconstrained vector follows this order."""
    out = [ParamEntry("mu0", "mu0", REAL), ParamEntry("sigma0", "sigma0", POSITIVE)]
    if spec.family == "sarima":
        p, _, q = spec.order
        P, _, Q = spec.seasonal
        out += [ParamEntry(f"ar[{i}]", "ar", PM1) for i in range(1, p + 1)]
        out += [ParamEntry(f"ma[{i}]", "ma", PM1) for i in range(1, q + 1)]
        out += [ParamEntry(f"sar[{i}]", "sar", PM1) for i in range(1, P + 1)]
        out += [ParamEntry(f"sma[{i}]", "sma", PM1) for i in range(1, Q + 1)]
        out += [
            ParamEntry(f"breg[{j}]", "breg", REAL)
            for j in range(1, spec.n_regressors + 1)
        ]
    else:
        out += [ParamEntry(f"arch[{i}]", "arch", UNIT) for i in range(1, spec.arch + 1)]
        out += [
            ParamEntry(f"garch[{j}]", "garch", UNIT) for j in range(1, spec.garch + 1)
        ]
        if spec.innovation == "student_t":
            out.append(ParamEntry("dfv", "dfv", DF))
    return out


def param_names(spec: ModelSpec) -> list[str]:
    return [e.name for e in param_layout(spec)]


def display_names(spec: ModelSpec) -> list[str]:
    """Summary-table names: phi/theta style for ARMA blocks."""
    shown = {"ar": "phi", "ma": "theta", "sar": "sphi", "sma": "stheta"}
    layout = param_layout(spec)
    counts: dict[str, int] = {}
    for e in layout:
        counts[e.kind] = counts.get(e.kind, 0) + 1
    out = []
    seen: dict[str, int] = {}
    for e in layout:
        seen[e.kind] = seen.get(e.kind, 0) + 1
        if e.kind in shown:
            base = shown[e.kind]
            out.append(base if counts[e.kind] == 1 else f"{base}.{seen[e.kind]}")
        elif e.kind in ("breg", "arch", "garch"):
            out.append(f"{e.kind}.{seen[e.kind]}")
        else:
            out.append(e.name)
    return out


def default_priors(spec: ModelSpec) -> PriorSet:
    """A fresh default prior set for the model (each spec object carries its own)."""
    return PriorSet.build(param_layout(spec))


def n_effective(spec: ModelSpec, n: int) -> int:
    """Observations actually entering the likelihood after differencing."""
    if spec.family == "sarima":
        _, d, _ = spec.order
        _, D, _ = spec.seasonal
        n_eff = n - d - D * spec.s
    else:
        n_eff = n
    if n_eff < 1:
        raise ValueError(f"series of length {n} too short for this model")
    return n_eff


def constrain(spec: ModelSpec, u: np.ndarray) -> tuple[np.ndarray, float]:
    """Map the unconstrained vector to the constrained scale.

    Returns the constrained values (layout order) and the log-jacobian of
    the map, the term added to the posterior the sampler explores.
    """
    layout = param_layout(spec)
    u = np.asarray(u, dtype=float)
    if u.size != len(layout):
        raise ValueError(f"expected {len(layout)} parameters, got {u.size}")
    values, log_jac = _constrain_generic(layout, list(u))
    return np.asarray(values, dtype=float), float(log_jac)


def _constrain_generic(layout, u_scalars):
    values = []
    log_jac = 0.0
    for entry, ui in zip(layout, u_scalars):
        dom = entry.domain
        if dom is REAL:
            x = ui
        elif dom is POSITIVE:
            x = ad.exp(ui)
            log_jac = log_jac + ui
        elif dom is PM1:
            x = ad.tanh(ui)
            log_jac = log_jac + ad.log1p(-(x * x))
        elif dom is UNIT:
            x = 1.0 / (1.0 + ad.exp(-ui))
            log_jac = log_jac + ad.log(x) + ad.log1p(-x)
        elif dom is DF:
            x = 2.0 + ad.exp(ui)
            log_jac = log_jac + ui
        else:  # pragma: no cover
            raise ValueError(f"no transform for domain {dom.name}")
        values.append(x)
    return values, log_jac


def unconstrain(spec: ModelSpec, values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`constrain`."""
    layout = param_layout(spec)
    values = np.asarray(values, dtype=float)
    if values.size != len(layout):
        raise ValueError(f"expected {len(layout)} parameters, got {values.size}")
    out = np.empty(values.size)
    for i, (entry, x) in enumerate(zip(layout, values)):
        dom = entry.domain
        if dom is REAL:
            out[i] = x
        elif dom is POSITIVE:
            if x <= 0:
                raise ValueError(f"{entry.name} must be positive")
            out[i] = math.log(x)
        elif dom is PM1:
            if not -1.0 < x < 1.0:
                raise ValueError(f"{entry.name} must lie in (-1, 1)")
            out[i] = math.atanh(x)
        elif dom is UNIT:
            if not 0.0 < x < 1.0:
                raise ValueError(f"{entry.name} must lie in (0, 1)")
            out[i] = math.log(x) - math.log1p(-x)
        elif dom is DF:
            if x <= 2.0:
                raise ValueError(f"{entry.name} must exceed 2")
            out[i] = math.log(x - 2.0)
    return out


def _series_values(y) -> np.ndarray:
    if isinstance(y, TimeSeries):
        return y.values
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a non-empty one dimensional series")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    return y


@dataclass
class _PreparedData:
    z: np.ndarray
    xm: np.ndarray | None
    pre_var: float


def _prepare(spec: ModelSpec, y) -> _PreparedData:
    yv = _series_values(y)
    if spec.family == "sarima":
        _, d, _ = spec.order
        _, D, _ = spec.seasonal
        n_effective(spec, yv.size)
        z = difference(yv, d, D, spec.s)
        xm = None
        if spec.fourier_k is not None:
            X = fourier_terms(yv.size, spec.s, spec.fourier_k).values
            xm = difference_columns(X, d, D, spec.s)
        elif spec.xreg is not None:
            if len(spec.xreg) != yv.size:
                raise ValueError("xreg rows must match series length")
            xm = difference_columns(spec.xreg.values, d, D, spec.s)
        return _PreparedData(z, xm, 0.0)
    return _PreparedData(yv, None, float(np.var(yv)))


def _expand_poly(nonseasonal, seasonal, s: int):
    """Lag coefficients of (1 - sum a_i B^i)(1 - sum A_j B^(s*j)), negated.

    Entry k-1 is the coefficient applied to lag k of the series; the
    multiplicative cross terms come out negative.
    """
    L = len(nonseasonal) + s * len(seasonal)
    out = [0.0] * L
    for i, c in enumerate(nonseasonal, start=1):
        out[i - 1] = out[i - 1] + c
    for j, C in enumerate(seasonal, start=1):
        out[s * j - 1] = out[s * j - 1] + C
        for i, c in enumerate(nonseasonal, start=1):
            out[s * j + i - 1] = out[s * j + i - 1] - c * C
    return out


def _split_params(layout, values):
    blocks: dict[str, list] = {}
    for entry, v in zip(layout, values):
        blocks.setdefault(entry.kind, []).append(v)
    return blocks


def _sarima_pointwise(spec: SarimaSpec, data: _PreparedData, blocks):
    mu0 = blocks["mu0"][0]
    sigma0 = blocks["sigma0"][0]
    w = data.z
    if data.xm is not None:
        reg = 0.0
        for j, b in enumerate(blocks["breg"]):
            reg = reg + b * data.xm[:, j]
        w = data.z - reg
    alpha = _expand_poly(blocks.get("ar", []), blocks.get("sar", []), spec.s)
    gamma_ = _expand_poly(blocks.get("ma", []), blocks.get("sma", []), spec.s)
    xi = w - mu0
    for k, a_k in enumerate(alpha, start=1):
        if isinstance(a_k, float) and a_k == 0.0:
            continue
        xi = xi - a_k * ad.lag(w, k, 0.0)
    eps = ad.linear_recursion(gamma_, xi, 0.0)
    inv_var = 1.0 / (sigma0 * sigma0)
    ll = (eps * eps) * (-0.5) * inv_var - (0.5 * LOG2PI) - ad.log(sigma0)
    return ll, eps


def _garch_pointwise(spec: GarchSpec, data: _PreparedData, blocks):
    mu0 = blocks["mu0"][0]
    sigma0 = blocks["sigma0"][0]
    eps = data.z - mu0
    e2 = eps * eps
    driver = np.zeros(data.z.size) + sigma0
    for i, a_i in enumerate(blocks.get("arch", []), start=1):
        driver = driver + a_i * ad.lag(e2, i, data.pre_var)
    sig2 = ad.linear_recursion(blocks.get("garch", []), driver, data.pre_var)
    if spec.innovation == "normal":
        ll = (
            -(0.5 * LOG2PI)
            - 0.5 * ad.log(sig2)
            - e2 / (2.0 * sig2)
        )
    else:
        v = blocks["dfv"][0]
        s2 = sig2 * ((v - 2.0) / v)
        c = (
            ad.lgamma((v + 1.0) / 2.0)
            - ad.lgamma(v / 2.0)
            - 0.5 * ad.log(v)
            - 0.5 * math.log(math.pi)
        )
        ll = c - 0.5 * ad.log(s2) - ((v + 1.0) / 2.0) * ad.log1p(e2 / (s2 * v))
    return ll, eps, sig2


def _eval_generic(spec, data, u_scalars, include_prior):
    layout = param_layout(spec)
    values, log_jac = _constrain_generic(layout, u_scalars)
    blocks = _split_params(layout, values)
    log_prior = 0.0
    if include_prior:
        for entry, v in zip(layout, values):
            log_prior = log_prior + log_density(spec.priors.entries[entry.name], v)
    else:
        # pure data likelihood: no prior mass and no change-of-variable term,
        # so optimizing over u matches optimizing over the constrained values
        log_jac = 0.0
    if spec.family == "sarima":
        ll, eps = _sarima_pointwise(spec, data, blocks)
        extras = (eps, None)
    else:
        ll, eps, sig2 = _garch_pointwise(spec, data, blocks)
        extras = (eps, sig2)
    return ll, log_prior, log_jac, extras


@dataclass
class LogPosteriorResult:
    """Decomposed log posterior at one unconstrained point."""

    log_posterior: float
    pointwise: np.ndarray
    log_prior: float
    log_jacobian: float
    fitted: np.ndarray
    residuals: np.ndarray


def log_posterior(spec: ModelSpec, y, u: np.ndarray, include_prior: bool = True) -> LogPosteriorResult:
    """Evaluate the model at ``u``; plain floats, full decomposition.

    ``fitted`` holds conditional means of the differenced series (sarima)
    or conditional standard deviations (garch); ``residuals`` the matching
    one-step errors (raw for sarima, raw for garch as well).
    """
    data = _prepare(spec, y)
    u = np.asarray(u, dtype=float)
    layout = param_layout(spec)
    if u.size != len(layout):
        raise ValueError(f"expected {len(layout)} parameters, got {u.size}")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ll, log_prior, log_jac, (eps, sig2) = _eval_generic(
            spec, data, list(u), include_prior
        )
    pointwise = np.asarray(ll, dtype=float)
    total = float(np.sum(pointwise)) + float(log_prior) + float(log_jac)
    if spec.family == "sarima":
        fitted = data.z - eps
        residuals = np.asarray(eps, dtype=float)
    else:
        fitted = np.sqrt(np.asarray(sig2, dtype=float))
        residuals = np.asarray(eps, dtype=float)
    return LogPosteriorResult(
        log_posterior=total,
        pointwise=pointwise,
        log_prior=float(log_prior),
        log_jacobian=float(log_jac),
        fitted=np.asarray(fitted, dtype=float),
        residuals=residuals,
    )


@dataclass
class GradientResult:
    value: float
    gradient: np.ndarray


def grad_log_posterior(spec: ModelSpec, y, u: np.ndarray, include_prior: bool = True) -> GradientResult:
    """Log posterior and its gradient on the unconstrained scale.

    One batched forward pass: every parameter's tangent rides along the
    same evaluation that produces the value.
    """
    data = _prepare(spec, y)
    return _grad_on_prepared(spec, data, np.asarray(u, dtype=float), include_prior)


def _grad_on_prepared(spec, data, u, include_prior) -> GradientResult:
    layout = param_layout(spec)
    if u.size != len(layout):
        raise ValueError(f"expected {len(layout)} parameters, got {u.size}")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        duals = ad.seed(u)
        ll, log_prior, log_jac, _ = _eval_generic(spec, data, duals, include_prior)
        out = ad.total(ll) + log_prior + log_jac
    if isinstance(out, ad.Dual):
        return GradientResult(float(out.val), np.asarray(out.tan, dtype=float))
    return GradientResult(float(out), np.zeros(u.size))


def finite_diff_check(spec: ModelSpec, y, u: np.ndarray, h: float = 2e-3) -> float:
    """Max relative disagreement between the gradient and central differences.

    Relative error per coordinate is |ad - fd| / (|ad| + |fd| + 1e-12).
    The default step suits the fourth-order stencil on log-posterior
    surfaces whose values reach the hundreds: small enough to stay under
    the truncation floor, large enough to dodge cancellation noise.
    """
    u = np.asarray(u, dtype=float)
    g = grad_log_posterior(spec, y, u).gradient
    fd = ad.finite_diff(lambda v: grad_log_posterior(spec, y, v).value, u, h)
    return float(np.max(np.abs(g - fd) / (np.abs(g) + np.abs(fd) + 1e-12)))


@dataclass
class BatchEval:
    """Per-draw evaluation matrices, one row per unconstrained draw."""

    pointwise: np.ndarray  # (N, n_eff) log-likelihood terms
    fitted: np.ndarray  # (N, n_eff) conditional means (sarima) or sds (garch)
    residuals: np.ndarray  # (N, n_eff) one-step errors


def batch_eval(spec: ModelSpec, y, udraws: np.ndarray) -> BatchEval:
    """Evaluate many draws against one prepared dataset."""
    data = _prepare(spec, y)
    udraws = np.asarray(udraws, dtype=float)
    if udraws.ndim != 2:
        raise ValueError("udraws must be a (draws, params) matrix")
    n_draws = udraws.shape[0]
    n_obs = data.z.size
    pointwise = np.empty((n_draws, n_obs))
    fitted = np.empty((n_draws, n_obs))
    residuals = np.empty((n_draws, n_obs))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(n_draws):
            ll, _, _, (eps, sig2) = _eval_generic(
                spec, data, list(udraws[i]), include_prior=False
            )
            pointwise[i] = np.asarray(ll, dtype=float)
            eps = np.asarray(eps, dtype=float)
            residuals[i] = eps
            if spec.family == "sarima":
                fitted[i] = data.z - eps
            else:
                fitted[i] = np.sqrt(np.asarray(sig2, dtype=float))
    return BatchEval(pointwise=pointwise, fitted=fitted, residuals=residuals)


class PosteriorTarget:
    """Adapter handing the sampler a clean value-and-gradient interface."""

    def __init__(self, spec: ModelSpec, y):
        self.spec = spec
        self.y = _series_values(y)
        self.data = _prepare(spec, y)
        self.layout = param_layout(spec)
        self.dim = len(self.layout)

    def value_and_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        res = _grad_on_prepared(self.spec, self.data, u, include_prior=True)
        if not math.isfinite(res.value):
            return -math.inf, np.zeros(self.dim)
        if not np.all(np.isfinite(res.gradient)):
            return -math.inf, np.zeros(self.dim)
        return res.value, res.gradient


def model_header(spec: ModelSpec, name: str = "y") -> str:
    """The one-line model statement, e.g. ``y ~ Sarima(1,1,1)(1,1,1)[12]``."""
    if spec.family == "sarima":
        p, d, q = spec.order
        P, D, Q = spec.seasonal
        head = f"{name} ~ Sarima({p},{d},{q})"
        k = spec.n_regressors
        if any((P, D, Q)) or k == 0:
            head += f"({P},{D},{Q})[{spec.s}]"
        if k:
            head += f".reg[{k}]"
        return head
    head = f"{name} ~ Garch({spec.arch},{spec.garch})"
    if spec.innovation == "student_t":
        head += ".t"
    return head


def describe(spec: ModelSpec, y=None, name: str | None = None) -> str:
    """Printable model block: header, bookkeeping and the current priors."""
    if name is None:
        name = y.name if isinstance(y, TimeSeries) else "y"
    lines = [model_header(spec, name)]
    if y is not None:
        yv = _series_values(y)
        lines.append(f"{yv.size} observations and 1 dimension")
        if spec.family == "sarima":
            _, d, _ = spec.order
            _, D, _ = spec.seasonal
            lines.append(f"Differences: {d} seasonal Differences: {D}")
            lines.append(f"Current observations: {n_effective(spec, yv.size)}")
    lines.append("")
    lines.append("Priors:")
    ps = spec.priors
    groups = [
        ("Intercept:", ["mu0"]),
        ("Scale Parameter:", ["sigma0"]),
        (None, ["ar", "ma"]),
        ("Seasonal Parameters:", ["sar", "sma"]),
        ("Regression Parameters:", ["breg"]),
        ("Volatility Parameters:", ["arch", "garch"]),
        ("Degrees of Freedom:", ["dfv"]),
    ]
    for title, kinds in groups:
        rows = [
            format_prior(n, p)
            for n, p in ps.entries.items()
            if ps.kinds[n] in kinds
        ]
        if not rows:
            continue
        if title is not None:
            lines.append(title)
        lines.extend(rows)
        lines.append("")
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines)
