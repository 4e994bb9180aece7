"""Prior families, parameter domains and per-model prior sets.

Densities are written against the generic dual-number helpers so the same
code serves plain evaluation and gradient evaluation. Priors attached to a
bounded parameter domain are renormalized by the domain mass, which keeps
marginal-likelihood estimates meaningful for truncated choices such as a
normal prior on an AR coefficient.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import autodiff as ad

__all__ = [
    "Domain",
    "REAL",
    "POSITIVE",
    "UNIT",
    "PM1",
    "DF",
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
    "default_prior",
    "log_density",
    "set_prior",
    "get_prior",
    "parse_prior",
    "format_prior",
]

LOG2PI = math.log(2.0 * math.pi)
INF = float("inf")


@dataclass(frozen=True)
class Domain:
    """Support of a model parameter on the constrained scale."""

    name: str
    lower: float
    upper: float


REAL = Domain("real", -INF, INF)
POSITIVE = Domain("positive", 0.0, INF)
UNIT = Domain("unit", 0.0, 1.0)
PM1 = Domain("pm1", -1.0, 1.0)
DF = Domain("df", 2.0, INF)


# family -> (printable parameter names, arity)
_FAMILIES = {
    "normal": ("mu", "sd"),
    "student_t": ("loc", "scl", "df"),
    "cauchy": ("loc", "scl"),
    "gamma": ("shape", "rate"),
    "inverse_gamma": ("shape", "scale"),
    "uniform": ("lower", "upper"),
    "beta": ("form1", "form2"),
    "beta_on_pm1": ("form1", "form2"),
    "half_normal": ("mu", "sd"),
    "half_t": ("loc", "scl", "df"),
    "half_cauchy": ("loc", "scl"),
    "chi_square": ("df",),
    "exponential": ("rate",),
}

_PRINT_NAMES = {"student_t": "t", "beta_on_pm1": "beta"}
_PARSE_ALIASES = {"t": "student_t", "student-t": "student_t", "halfnormal": "half_normal"}


def _validate_params(family: str, params: tuple[float, ...]) -> None:
    names = _FAMILIES[family]
    if len(params) != len(names):
        raise ValueError(
            f"{family} takes {len(names)} parameters {names}, got {len(params)}"
        )
    if not all(math.isfinite(p) for p in params):
        raise ValueError(f"{family} parameters must be finite")
    positive_checks = {
        "normal": [1],
        "student_t": [1, 2],
        "cauchy": [1],
        "gamma": [0, 1],
        "inverse_gamma": [0, 1],
        "beta": [0, 1],
        "beta_on_pm1": [0, 1],
        "half_normal": [1],
        "half_t": [1, 2],
        "half_cauchy": [1],
        "chi_square": [0],
        "exponential": [0],
    }
    for idx in positive_checks.get(family, []):
        if params[idx] <= 0:
            raise ValueError(f"{family} parameter {names[idx]} must be > 0")
    if family == "uniform" and params[0] >= params[1]:
        raise ValueError("uniform requires lower < upper")


def _natural_support(family: str, params: tuple[float, ...]) -> tuple[float, float]:
    if family in ("normal", "student_t", "cauchy"):
        return (-INF, INF)
    if family in ("gamma", "inverse_gamma", "chi_square", "exponential"):
        return (0.0, INF)
    if family in ("half_normal", "half_t", "half_cauchy"):
        return (params[0], INF)
    if family == "uniform":
        return (params[0], params[1])
    if family == "beta":
        return (0.0, 1.0)
    if family == "beta_on_pm1":
        return (-1.0, 1.0)
    raise ValueError(f"unknown prior family {family!r}")


def _cdf(family: str, params: tuple[float, ...], x: float) -> float:
    """Distribution function, used only for truncation masses."""
    if x == INF:
        return 1.0
    if x == -INF:
        return 0.0
    if family == "normal":
        return stats.norm.cdf(x, params[0], params[1])
    if family == "student_t":
        return stats.t.cdf(x, params[2], params[0], params[1])
    if family == "cauchy":
        return stats.cauchy.cdf(x, params[0], params[1])
    if family == "gamma":
        return stats.gamma.cdf(x, params[0], scale=1.0 / params[1])
    if family == "inverse_gamma":
        return stats.invgamma.cdf(x, params[0], scale=params[1])
    if family == "uniform":
        return stats.uniform.cdf(x, params[0], params[1] - params[0])
    if family == "beta":
        return stats.beta.cdf(x, params[0], params[1])
    if family == "beta_on_pm1":
        return stats.beta.cdf(x, params[0], params[1], loc=-1.0, scale=2.0)
    if family == "half_normal":
        return stats.halfnorm.cdf(x, params[0], params[1])
    if family == "half_t":
        if x <= params[0]:
            return 0.0
        return 2.0 * (stats.t.cdf(x, params[2], params[0], params[1]) - 0.5)
    if family == "half_cauchy":
        return stats.halfcauchy.cdf(x, params[0], params[1])
    if family == "chi_square":
        return stats.chi2.cdf(x, params[0])
    if family == "exponential":
        return stats.expon.cdf(x, scale=1.0 / params[0])
    raise ValueError(f"unknown prior family {family!r}")


@dataclass
class PriorSpec:
    """A prior family with fixed hyperparameters, optionally domain-bound."""

    family: str
    params: tuple[float, ...]
    domain: Domain | None = None
    lower: float = field(init=False)
    upper: float = field(init=False)
    log_norm: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")
        self.params = tuple(float(p) for p in self.params)
        _validate_params(self.family, self.params)
        lo, hi = _natural_support(self.family, self.params)
        if self.domain is not None:
            lo = max(lo, self.domain.lower)
            hi = min(hi, self.domain.upper)
            if lo >= hi:
                raise ValueError(
                    f"{self.family} prior has no mass on domain {self.domain.name}"
                )
            mass = _cdf(self.family, self.params, hi) - _cdf(self.family, self.params, lo)
            if mass <= 0.0:
                raise ValueError(
                    f"{self.family} prior has no mass on domain {self.domain.name}"
                )
            self.log_norm = math.log(mass) if mass < 1.0 - 1e-12 else 0.0
        self.lower = lo
        self.upper = hi

    def with_domain(self, domain: Domain) -> "PriorSpec":
        return PriorSpec(self.family, self.params, domain)


def normal(mu: float, sd: float) -> PriorSpec:
    return PriorSpec("normal", (mu, sd))


def student_t(loc: float, scale: float, df: float) -> PriorSpec:
    return PriorSpec("student_t", (loc, scale, df))


def cauchy(loc: float, scale: float) -> PriorSpec:
    return PriorSpec("cauchy", (loc, scale))


def gamma(shape: float, rate: float) -> PriorSpec:
    return PriorSpec("gamma", (shape, rate))


def inverse_gamma(shape: float, scale: float) -> PriorSpec:
    return PriorSpec("inverse_gamma", (shape, scale))


def uniform(lower: float, upper: float) -> PriorSpec:
    return PriorSpec("uniform", (lower, upper))


def beta(form1: float, form2: float) -> PriorSpec:
    return PriorSpec("beta", (form1, form2))


def beta_on_pm1(form1: float, form2: float) -> PriorSpec:
    return PriorSpec("beta_on_pm1", (form1, form2))


def half_normal(mu: float, sd: float) -> PriorSpec:
    return PriorSpec("half_normal", (mu, sd))


def half_t(loc: float, scale: float, df: float) -> PriorSpec:
    return PriorSpec("half_t", (loc, scale, df))


def half_cauchy(loc: float, scale: float) -> PriorSpec:
    return PriorSpec("half_cauchy", (loc, scale))


def chi_square(df: float) -> PriorSpec:
    return PriorSpec("chi_square", (df,))


def exponential(rate: float) -> PriorSpec:
    return PriorSpec("exponential", (rate,))


_DEFAULTS = {
    "mu0": lambda: student_t(0.0, 2.5, 6.0),
    "sigma0": lambda: half_t(0.0, 1.0, 7.0),
    "ar": lambda: normal(0.0, 0.5),
    "ma": lambda: normal(0.0, 0.5),
    "sar": lambda: normal(0.0, 0.5),
    "sma": lambda: normal(0.0, 0.5),
    "breg": lambda: student_t(0.0, 2.5, 6.0),
    "arch": lambda: normal(0.0, 0.5),
    "garch": lambda: normal(0.0, 0.5),
    "dfv": lambda: gamma(2.0, 0.1),
}


def default_prior(kind: str, domain: Domain) -> PriorSpec:
    """The stock weakly-informative prior for a parameter block."""
    if kind not in _DEFAULTS:
        raise ValueError(f"no default prior for parameter kind {kind!r}")
    return _DEFAULTS[kind]().with_domain(domain)


# families a user may attach per parameter domain; everything goes on the
# unrestricted location/regression parameters
_ALLOWED = {
    "real": set(_FAMILIES),
    "positive": {
        "gamma",
        "inverse_gamma",
        "chi_square",
        "exponential",
        "half_normal",
        "half_t",
        "half_cauchy",
        "beta",
        "uniform",
    },
    "pm1": {"uniform", "normal", "beta", "beta_on_pm1"},
    "unit": {"uniform", "normal", "beta"},
    "df": {"normal", "gamma", "inverse_gamma", "exponential"},
}


def _bind(prior: PriorSpec, kind: str, domain: Domain) -> PriorSpec:
    family = prior.family
    if domain.name == "pm1" and family == "beta":
        # a beta prior on a [-1, 1] coefficient means the stretched form
        prior = PriorSpec("beta_on_pm1", prior.params)
        family = "beta_on_pm1"
    if family not in _ALLOWED[domain.name]:
        if domain.name == "positive":
            raise ValueError(
                f"{kind} requires a positive-support prior family, got {family}"
            )
        raise ValueError(
            f"family {family} is not usable on the {domain.name} domain of {kind}"
        )
    return prior.with_domain(domain)


def log_density(prior: PriorSpec, x):
    """Natural-log prior density at x; -inf outside the (bound) support.

    Works on plain numbers and on dual numbers.
    """
    xv = ad.value_of(x)
    p = prior.params
    fam = prior.family
    if fam == "uniform":
        if prior.lower <= xv <= prior.upper:
            return -math.log(prior.upper - prior.lower)
        return -INF
    closed_lower = fam in ("half_normal", "half_t", "half_cauchy", "exponential")
    if xv < prior.lower or xv > prior.upper:
        return -INF
    if xv == prior.lower and not closed_lower:
        return -INF
    if xv == prior.upper:
        return -INF

    if fam == "normal":
        z = (x - p[0]) / p[1]
        out = -0.5 * LOG2PI - math.log(p[1]) - 0.5 * z * z
    elif fam == "student_t":
        out = _t_lpdf(x, p[0], p[1], p[2])
    elif fam == "cauchy":
        z = (x - p[0]) / p[1]
        out = -math.log(math.pi * p[1]) - ad.log1p(z * z)
    elif fam == "gamma":
        a, rate = p
        out = a * math.log(rate) - math.lgamma(a) + (a - 1.0) * ad.log(x) - rate * x
    elif fam == "inverse_gamma":
        a, scale = p
        out = a * math.log(scale) - math.lgamma(a) - (a + 1.0) * ad.log(x) - scale / x
    elif fam == "beta":
        out = _beta_lpdf(x, p[0], p[1])
    elif fam == "beta_on_pm1":
        out = _beta_lpdf((x + 1.0) / 2.0, p[0], p[1]) - math.log(2.0)
    elif fam == "half_normal":
        z = (x - p[0]) / p[1]
        out = math.log(2.0) - 0.5 * LOG2PI - math.log(p[1]) - 0.5 * z * z
    elif fam == "half_t":
        out = math.log(2.0) + _t_lpdf(x, p[0], p[1], p[2])
    elif fam == "half_cauchy":
        z = (x - p[0]) / p[1]
        out = math.log(2.0) - math.log(math.pi * p[1]) - ad.log1p(z * z)
    elif fam == "chi_square":
        k = p[0]
        out = (
            (0.5 * k - 1.0) * ad.log(x)
            - 0.5 * x
            - math.lgamma(0.5 * k)
            - 0.5 * k * math.log(2.0)
        )
    elif fam == "exponential":
        out = math.log(p[0]) - p[0] * x
    else:  # pragma: no cover
        raise ValueError(f"unknown prior family {fam!r}")
    if prior.log_norm != 0.0:
        out = out - prior.log_norm
    return out


def _t_lpdf(x, loc, scale, df):
    z = (x - loc) / scale
    c = (
        math.lgamma(0.5 * (df + 1.0))
        - math.lgamma(0.5 * df)
        - 0.5 * math.log(df * math.pi)
        - math.log(scale)
    )
    return c - 0.5 * (df + 1.0) * ad.log1p(z * z / df)


def _beta_lpdf(x, a, b):
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return (a - 1.0) * ad.log(x) + (b - 1.0) * ad.log1p(-x) - lbeta


def _fmt_value(v: float) -> str:
    return format(v, "g")


def format_prior(name: str, prior: PriorSpec) -> str:
    """One printable prior line, e.g. ``ar[ 1 ] ~ normal (mu = 0 , sd = 0.5 )``."""
    shown = re.sub(r"\[(\d+)\]", lambda m: f"[ {m.group(1)} ]", name)
    fam = _PRINT_NAMES.get(prior.family, prior.family)
    keys = _FAMILIES[prior.family]
    parts = [f"{k} = {_fmt_value(v)}" for k, v in zip(keys, prior.params)]
    if prior.family in ("student_t", "half_t"):
        body = " ,".join(parts) + " "
    else:
        body = " , ".join(parts) + " "
    return f"{shown} ~ {fam} ({body})"


_PARSE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_-]*)\s*\(([^)]*)\)\s*$")


def parse_prior(text: str) -> PriorSpec:
    """Parse config-file prior syntax like ``normal(0, 0.5)`` or ``t(0, 2.5, 6)``."""
    m = _PARSE_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse prior {text!r}; expected family(p1, p2, ...)")
    fam = m.group(1).lower()
    fam = _PARSE_ALIASES.get(fam, fam)
    if fam not in _FAMILIES:
        raise ValueError(f"unknown prior family {m.group(1)!r}")
    raw = [piece.strip() for piece in m.group(2).split(",") if piece.strip()]
    # accept both bare numbers and the printed "key = value" form
    raw = [piece.split("=", 1)[-1].strip() for piece in raw]
    try:
        params = tuple(float(piece) for piece in raw)
    except ValueError:
        raise ValueError(f"non-numeric prior parameter in {text!r}") from None
    return PriorSpec(fam, params)


@dataclass
class PriorSet:
    """Ordered map from parameter name to its (domain-bound) prior."""

    entries: dict[str, PriorSpec]
    kinds: dict[str, str]
    domains: dict[str, Domain]

    @classmethod
    def build(cls, layout) -> "PriorSet":
        """Default priors for every entry of a parameter layout."""
        entries: dict[str, PriorSpec] = {}
        kinds: dict[str, str] = {}
        domains: dict[str, Domain] = {}
        for entry in layout:
            entries[entry.name] = default_prior(entry.kind, entry.domain)
            kinds[entry.name] = entry.kind
            domains[entry.name] = entry.domain
        return cls(entries, kinds, domains)

    def names(self) -> list[str]:
        return list(self.entries)

    def set(self, name: str, prior: PriorSpec) -> None:
        targets = self._resolve(name)
        bound = [
            _bind(prior, self.kinds[t], self.domains[t]) for t in targets
        ]
        for t, b in zip(targets, bound):
            self.entries[t] = b

    def get(self, name: str) -> PriorSpec:
        targets = self._resolve(name)
        return self.entries[targets[0]]

    def _resolve(self, name: str) -> list[str]:
        if name in self.entries:
            return [name]
        block = [n for n, kind in self.kinds.items() if kind == name]
        if not block:
            raise ValueError(f"unknown parameter {name!r}")
        return block

    def lines(self) -> list[str]:
        return [format_prior(n, p) for n, p in self.entries.items()]

    def log_density(self, values: dict[str, float]) -> float:
        out = 0.0
        for name, prior in self.entries.items():
            out = out + log_density(prior, values[name])
        return out


def set_prior(ps: PriorSet, name: str, prior: PriorSpec) -> PriorSet:
    """Attach a prior to one parameter or a whole block (e.g. ``"ar"``)."""
    ps.set(name, prior)
    return ps


def get_prior(ps: PriorSet, name: str) -> PriorSpec:
    return ps.get(name)
