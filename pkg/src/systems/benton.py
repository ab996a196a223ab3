"""Non-uniqueness example for the inviscid equation -u_t + |u_x|^2 = 0 with zero initial datum.

u1 = 0, u2 = |x| + t and u3 = max(t - |x|, 0) are all a.e. solutions on the window [-1/2, 1/2).
u3 agrees with u1 at t = 0 but separates from it, and its Laplacian at the kinks blows up like 1/h,
so no bound Laplacian(u) <= c1/t + c2 can hold for it.
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from src.models.experiment import TheoremId
from src.models.reports import EstimateReport, ReportStatus

logger = logging.getLogger(__name__)

Profile = Callable[[np.ndarray, float], np.ndarray]

KINK_TIME = 0.25
SEPARATION_TIME = 0.5
DEFAULT_RESOLUTIONS = (64, 128, 256, 512, 1024)


def u_zero(x: np.ndarray, t: float) -> np.ndarray:
    return np.zeros_like(x)


def u_cone(x: np.ndarray, t: float) -> np.ndarray:
    return np.abs(x) + t


def u_tent(x: np.ndarray, t: float) -> np.ndarray:
    return np.maximum(t - np.abs(x), 0.0)


SOLUTIONS: dict[str, Profile] = {"u1": u_zero, "u2": u_cone, "u3": u_tent}
KINKS: dict[str, Callable[[float], list[float]]] = {
    "u1": lambda t: [],
    "u2": lambda t: [0.0, -0.5],
    "u3": lambda t: [-t, 0.0, t],
}


def window(n_points: int) -> np.ndarray:
    """Nodes of [-1/2, 1/2)."""
    return -0.5 + np.arange(n_points) / n_points


def _periodic_distance(x: np.ndarray, point: float) -> np.ndarray:
    return np.abs((x - point + 0.5) % 1.0 - 0.5)


def residual_off_kinks(name: str, n_points: int = 256, t: float = KINK_TIME) -> float:
    """max |-u_t + u_x^2| over nodes at least two cells away from every kink."""
    u = SOLUTIONS[name]
    x = window(n_points)
    h = 1.0 / n_points
    dt = h / 4.0
    u_t = (u(x, t + dt) - u(x, t - dt)) / (2.0 * dt)
    values = u(x, t)
    u_x = (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * h)
    keep = np.ones(n_points, dtype=bool)
    for kink in KINKS[name](t):
        keep &= _periodic_distance(x, kink) > 2.0 * h + dt
    res = np.abs(-u_t + u_x * u_x)[keep]
    return float(res.max()) if res.size else 0.0


def kink_laplacian(name: str, n_points: int, t: float = KINK_TIME) -> float:
    """max of the centered second difference; the kink at x = t sits on a node."""
    values = SOLUTIONS[name](window(n_points), t)
    h = 1.0 / n_points
    return float(np.max((np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / (h * h)))


def laplacian_scaling(resolutions: Sequence[int] = DEFAULT_RESOLUTIONS, t: float = KINK_TIME) -> tuple[np.ndarray, np.ndarray, float]:
    """(h, max Laplacian of u3, log-log slope)."""
    h = 1.0 / np.asarray(resolutions, dtype=float)
    lap = np.array([kink_laplacian("u3", n, t) for n in resolutions])
    slope = float(np.polyfit(np.log(h), np.log(lap), 1)[0])
    return h, lap, slope


@dataclass
class BentonDemo:
    """Everything the demo measured, with the profiles needed for the figure."""
    x: np.ndarray
    profiles: dict[str, np.ndarray]
    h: np.ndarray
    kink_laplacians: np.ndarray
    slope: float
    separation: float
    residuals: dict[str, float] = field(default_factory=dict)
    report: Optional[EstimateReport] = None


def benton_demo(n_points: int = 256, resolutions: Sequence[int] = DEFAULT_RESOLUTIONS) -> BentonDemo:
    """Run every part of the example and summarise it as one report."""
    x = window(n_points)
    profiles = {name: u(x, SEPARATION_TIME) for name, u in SOLUTIONS.items()}
    initial_gap = float(np.max(np.abs(u_tent(x, 0.0) - u_zero(x, 0.0))))
    separation = float(np.max(np.abs(profiles["u3"] - profiles["u1"])))
    residuals = {name: residual_off_kinks(name, n_points) for name in SOLUTIONS}
    h, lap, slope = laplacian_scaling(resolutions)
    u1_laplacian = max(abs(kink_laplacian("u1", n)) for n in resolutions)

    report = EstimateReport(
        theorem_id=TheoremId.BENTON_DEMO, status=ReportStatus.PASSED, lhs=separation, rhs=SEPARATION_TIME,
        slack=SEPARATION_TIME - separation,
        constants_used={"initial_gap": initial_gap, "laplacian_slope": slope, "u1_laplacian": u1_laplacian,
                        **{f"residual_{k}": v for k, v in residuals.items()}},
        notes=["u1 and u3 share the zero initial datum; only u1 satisfies a semiconcavity bound"],
    )
    report.require(initial_gap == 0.0, "u1 and u3 share the initial datum")
    report.require(separation >= 0.4, "u3 separates from u1 by t = 0.5")
    report.require(max(residuals.values()) <= 1e-10, "residual vanishes off the kinks")
    report.require(-1.1 <= slope <= -0.9, "kink Laplacian grows like 1/h")
    report.require(u1_laplacian == 0.0, "u1 has zero Laplacian")
    logger.info("benton demo: separation %.3f, kink slope %.3f", separation, slope)
    return BentonDemo(x=x, profiles=profiles, h=h, kink_laplacians=lap, slope=slope, separation=separation,
                      residuals=residuals, report=report)
