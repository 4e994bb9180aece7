"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class SeriesIn(BaseModel):
    values: list[float] = Field(min_length=2)
    frequency: int = 1
    name: str = "y"


class ModelIn(BaseModel):
    family: Literal["sarima", "garch"] = "sarima"
    order: tuple[int, int, int] = (1, 0, 0)
    seasonal: tuple[int, int, int] = (0, 0, 0)
    s: int | None = None
    fourier_k: int | None = None
    xreg: list[list[float]] | None = None
    arch: int = 1
    garch: int = 0
    innovation: Literal["normal", "student_t"] = "normal"


class SamplerIn(BaseModel):
    chains: int = 4
    iter: int = 2000
    warmup: int | None = None
    adapt_delta: float = 0.8
    seed: int = 0


class FitRequest(BaseModel):
    data: SeriesIn
    model: ModelIn = ModelIn()
    priors: dict[str, str] = {}
    sampler: SamplerIn = SamplerIn()


class AutoRequest(BaseModel):
    data: SeriesIn
    sampler: SamplerIn = SamplerIn()


class SummaryRowOut(BaseModel):
    name: str
    mean: float
    se: float
    q2_5: float
    q97_5: float
    ess: float
    rhat: float


class FitResponse(BaseModel):
    fit_id: str
    header: str
    summary: list[SummaryRowOut]
    summary_text: str
    divergences: int


class AutoResponse(FitResponse):
    selected_order: tuple[int, int, int, int, int, int]
    search_trace: list[dict]


class ForecastRequest(BaseModel):
    horizon: int = Field(ge=1)
    seed: int = 0
    xreg_future: list[list[float]] | None = None


class ForecastRow(BaseModel):
    horizon: int
    mean: float
    q5: float
    q50: float
    q95: float


class ForecastResponse(BaseModel):
    rows: list[ForecastRow]


class CompareRequest(BaseModel):
    fit_ids: list[str] = Field(min_length=2)
    method: Literal["loo", "waic", "bic", "bf"] = "loo"
    seed: int = 0


class CompareResponse(BaseModel):
    method: str
    table: str | None = None
    log_bayes_factor: float | None = None
    line: str | None = None


class PriorsResponse(BaseModel):
    parameters: list[str]
    priors: list[str]
