"""Exact finite-box simulation of the four limit forest-fire processes."""

from __future__ import annotations

from dataclasses import dataclass

from .barrier import (BarrierTrajectory, MatchMeasure, barrier_from_rows, identity_height,
                      sample_marks, simulate_lff_bs, simulate_lff_inf)
from .beta import BetaTrajectory, VacancyCloud, fresh_cloud_count, simulate_lff_beta
from .theta import (g_S, g_S_mc, regeneration_times, sample_theta, sample_theta_lambda,
                    theta_cdf, theta_inverse)
from .zero import ZeroTrajectory, simulate_lff_0


@dataclass(frozen=True)
class QueryResult:
    Z: float | None
    D: tuple[float, float] | None
    H: float | None
    approximate: bool = False

    def __iter__(self):
        return iter((self.Z, self.D, self.H))


def query(traj, x: float, t: float) -> QueryResult:
    """Values of a limit trajectory at ``(x, t)``.

    Density and barrier height exist only for the barrier processes; the other
    two report the cluster alone.
    """
    if isinstance(traj, BarrierTrajectory):
        z, d, h = traj.query(x, t)
        return QueryResult(z, d, h)
    if isinstance(traj, BetaTrajectory):
        d, approx = traj.query(x, t)
        return QueryResult(None, d, None, bool(approx))
    if isinstance(traj, ZeroTrajectory):
        return QueryResult(None, traj.query(x, t), None)
    raise TypeError(f"not a limit trajectory: {type(traj).__name__}")


__all__ = [
    "BarrierTrajectory", "BetaTrajectory", "MatchMeasure", "QueryResult", "VacancyCloud",
    "ZeroTrajectory", "barrier_from_rows", "fresh_cloud_count", "g_S", "g_S_mc",
    "identity_height", "query", "regeneration_times", "sample_marks", "sample_theta",
    "sample_theta_lambda", "simulate_lff_0", "simulate_lff_beta", "simulate_lff_bs",
    "simulate_lff_inf", "theta_cdf", "theta_inverse",
]
