"""Time, space and mesoscopic scales of the seed law, and regime classification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .renewal import Law, Regime, RegimeError, bisect_increasing


@dataclass(frozen=True)
class ScaleSet:
    lam: float
    a_lambda: float
    n_lambda: int
    m_lambda: int | None
    regime: Regime


def compute_a_lambda(law: Law, lam: float) -> float:
    """Time scale: ``T`` for bounded support, else the root of ``lam * a = tail_nu(a)``."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if law.regime.kind == "BS":
        return law.T
    a = bisect_increasing(lambda a: lam * a - float(law.tail_nu(a)), 0.0, 1.0)
    resid = abs(lam * a - float(law.tail_nu(a)))
    if resid >= 1e-12 * lam * a:
        raise ArithmeticError(f"a_lambda residual {resid:.3g} above tolerance")
    return a


def compute_n_lambda(law: Law, lam: float, a_lambda: float | None = None) -> int:
    a = compute_a_lambda(law, lam) if a_lambda is None else a_lambda
    return int(math.floor(1.0 / (lam * a)))


def compute_m_lambda(law: Law, lam: float, epsilon: float = 0.1) -> int:
    """Mesoscopic window half-width.

    Bounded support uses ``floor(sqrt(1/lam))``.  The infinity regime uses
    ``floor(1 / tail_nu(a (1 - epsilon)))`` clamped to ``[1, n - 1]``.  The
    fixed ``epsilon`` is a finite-lambda choice, not a derived constant.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    kind = law.regime.kind
    a = compute_a_lambda(law, lam)
    n = compute_n_lambda(law, lam, a)
    if kind == "BS":
        m = int(math.floor(math.sqrt(1.0 / lam)))
    elif kind == "infinity":
        m = int(math.floor(1.0 / float(law.tail_nu(a * (1.0 - epsilon)))))
    else:
        raise RegimeError(f"m_lambda is only used in the BS and infinity regimes, not {law.regime}")
    return max(1, min(m, n - 1))


def compute_scales(law: Law, lam: float, epsilon: float = 0.1) -> ScaleSet:
    a = compute_a_lambda(law, lam)
    n = compute_n_lambda(law, lam, a)
    m = compute_m_lambda(law, lam, epsilon) if law.regime.kind in ("BS", "infinity") else None
    return ScaleSet(lam=lam, a_lambda=a, n_lambda=n, m_lambda=m, regime=law.regime)


DIAGNOSTIC_X = (1e2, 1e3, 1e4)


def classify_regime(law: Law, t: float = 2.0, xs=DIAGNOSTIC_X) -> tuple[Regime, dict]:
    """Regime tag of the law plus a numeric tail exponent estimate.

    The estimate regresses ``log_t(tail_nu(x) / tail_nu(t x))`` on ``1/log x``
    over the grid and reports the intercept, i.e. the value extrapolated to
    ``x = inf``.  The slowly varying correction of a log tail decays like
    ``1/log x``, which is why the plain ratio is not used.
    """
    regime = law.regime
    if regime.kind == "BS":
        return regime, {"beta_hat": None, "skipped": True}
    xs = np.asarray(xs, dtype=float)
    ratios = (law.log_tail_nu(xs) - law.log_tail_nu(t * xs)) / math.log(t)
    design = np.column_stack([np.ones_like(xs), 1.0 / np.log(xs)])
    if np.all(np.isfinite(ratios)):
        coef, *_ = np.linalg.lstsq(design, ratios, rcond=None)
        beta_hat = float(coef[0])
    else:
        beta_hat = math.inf
    return regime, {"beta_hat": beta_hat, "x": xs.tolist(), "log_ratios": ratios.tolist()}
