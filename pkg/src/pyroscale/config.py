"""Experiment configuration: a JSON file, then ``PYROSCALE_SEED``, then command-line flags."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .renewal import Law, law_from_dict

MODES = ("discrete", "limit-inf", "limit-bs", "limit-beta", "limit-zero", "percolation",
         "stats", "scales", "classify", "render")

ESTIMATORS = ("qk-bar", "cluster-size", "macro-tail", "kingman", "gap-count", "theta",
              "theta-lambda", "poisson-matches", "lff-beta-vacancy", "stationarity", "lff-zero")


class ConfigError(ValueError):
    pass


class RenderOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    svg: str | None = None
    max_width: int = Field(4000, ge=16, le=4000)
    rows: int = Field(200, ge=2, le=5000)
    height: int = Field(600, ge=16)


class ExperimentConfig(BaseModel):
    """All knobs of one run.

    Times ``T`` and ``t`` and the half-width ``A`` are in rescaled units.
    Unset statistic parameters take the estimator's documented default.
    """

    model_config = ConfigDict(extra="forbid")

    mode: Literal[MODES]  # type: ignore[valid-type]
    law: dict = Field(default_factory=lambda: {"law": "dirac", "T": 1.0})
    match_law: dict | None = None
    poisson_matches: bool = False
    lam: float = Field(1e-3, gt=0, le=1)
    lambdas: list[float] | None = None
    A: float = Field(2.5, gt=0)
    T: float = Field(5.0, gt=0)
    t: float | None = Field(None, gt=0)
    x: float = 0.0
    beta: float = Field(2.0, gt=0)
    replicas: int = Field(1000, ge=1)
    n_sites: int = Field(100000, ge=1)
    n: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)
    jobs: int = Field(1, ge=1)
    fires: bool = True
    estimator: Literal[ESTIMATORS] | None = None  # type: ignore[valid-type]
    k_max: int = Field(20, ge=0)
    m_max: int = Field(10, ge=1)
    u: list[float] = Field(default_factory=lambda: [0.3, 0.7])
    l: float = Field(0.5, gt=0)
    t0: float = 0.0
    t1: float = 0.5
    B: list[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 2.5])
    times: list[float] = Field(default_factory=lambda: [0.0, 1.0, 5.0])
    queries: list[tuple[float, float]] = Field(default_factory=list)
    delta: float | None = Field(None, gt=0)
    out: str | None = None
    snapshot: str | None = None
    vacancy_out: str | None = None
    trace: str | None = None
    trace_kind: Literal["discrete", "barrier"] = "discrete"
    render: RenderOptions = Field(default_factory=RenderOptions)

    @field_validator("law", "match_law", mode="before")
    @classmethod
    def _law(cls, v):
        if v is None:
            return v
        if isinstance(v, str):
            v = {"law": v}
        law_from_dict(v)
        return v

    def seed_law(self) -> Law:
        return law_from_dict(self.law)

    def match_law_obj(self) -> Law | None:
        if self.poisson_matches or self.match_law is None:
            return None
        return law_from_dict(self.match_law)


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _describe(err: ValidationError, text: str | None, source: str) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"])
        where = source
        if text is not None and e["loc"]:
            line = _line_of(text, str(e["loc"][-1] if e["type"] == "extra_forbidden" else e["loc"][0]))
            if line is not None:
                where = f"{source}:{line}"
        parts.append(f"{where}: field '{loc}': {e['msg']}")
    return "\n".join(parts)


def load_config(path: str | None, mode: str, overrides: dict[str, Any],
                env: dict[str, str] | None = None) -> ExperimentConfig:
    """Merge file values, the seed environment variable and flags (in rising priority)."""
    env = os.environ if env is None else env
    data: dict[str, Any] = {}
    text = None
    source = "<flags>"
    if path is not None:
        source = str(path)
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be an object")
    data.setdefault("mode", mode)
    if "PYROSCALE_SEED" in env:
        try:
            data["seed"] = int(env["PYROSCALE_SEED"])
        except ValueError:
            raise ConfigError("PYROSCALE_SEED must be an integer") from None
    for k, v in overrides.items():
        if v is None:
            continue
        if k == "render":
            data.setdefault("render", {}).update(v)
        else:
            data[k] = v
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc, text, source)) from None
