"""Scaling limits: hard edges against Bessel gaps, soft edges against Tracy-Widom."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import CalibrationError, ParameterError
from .fredholm import (
    GapCurve,
    NystromConfig,
    airy_gap_cdf,
    bessel_gap_cdf,
    default_config,
    gap_cdf,
    interval_logdet,
    upper_gap_logdet,
)
from .orthopoly import EnsembleSpec

__all__ = [
    "Edge",
    "EdgeComparison",
    "TwStandardization",
    "jue_hard_edge",
    "lue_hard_edge",
    "tw_standardization",
    "tw_cdf",
    "lue_soft_calibration",
    "kolmogorov_distance",
]


class Edge(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass
class EdgeComparison:
    s_grid: np.ndarray
    finite_n: np.ndarray
    limit: np.ndarray
    edge: Edge
    bessel_order: float

    @property
    def max_abs_err(self) -> float:
        return float(np.max(np.abs(np.asarray(self.finite_n) - np.asarray(self.limit))))


@dataclass(frozen=True)
class TwStandardization:
    mean: float
    sd: float
    source: str = "fredholm_airy"

    def __post_init__(self):
        if not self.sd > 0:
            raise ParameterError("TW standard deviation must be positive")


def jue_hard_edge(
    N: int,
    a: float,
    b: float,
    edge="right",
    s_grid=None,
    resolution: NystromConfig | None = None,
    bessel_nodes: int = 120,
) -> EdgeComparison:
    """F_N(1 - s/(2N^2); a, b) against the order-a Bessel gap.

    The left edge is the right edge of the reflected ensemble (a and b
    swapped), so it never takes a separate kernel path.
    """
    if N < 2:
        raise ParameterError("jue_hard_edge needs N >= 2")
    edge = Edge(edge)
    spec = EnsembleSpec.jue(N, a, b)
    if edge is Edge.LEFT:
        spec = spec.swapped()
    s_grid = np.linspace(0.0, 15.0, 61) if s_grid is None else np.asarray(s_grid, dtype=float)
    finite = gap_cdf(spec, 1.0 - s_grid / (2.0 * N * N), resolution).F
    order = spec.a
    limit = bessel_gap_cdf(order, s_grid, bessel_nodes).F
    return EdgeComparison(s_grid, finite, limit, edge, order)


def lue_hard_edge(N: int, s_grid=None, resolution: NystromConfig | None = None, bessel_nodes: int = 120) -> EdgeComparison:
    """Lower gap E_N((0, s/(4N))) for LUE alpha = 0 against the order-0 Bessel gap."""
    if N < 2:
        raise ParameterError("lue_hard_edge needs N >= 2")
    spec = EnsembleSpec.lue(N, 0.0)
    s_grid = np.linspace(0.5, 10.0, 61) if s_grid is None else np.asarray(s_grid, dtype=float)
    nodes = (resolution or default_config(spec)).nodes
    finite = np.array([math.exp(interval_logdet(spec, 0.0, s / (4.0 * N), nodes).value) if s > 0 else 1.0 for s in s_grid])
    limit = bessel_gap_cdf(0.0, s_grid, bessel_nodes).F
    return EdgeComparison(s_grid, finite, limit, Edge.LEFT, 0.0)


def tw_cdf(x, n_nodes: int = 80):
    return airy_gap_cdf(np.atleast_1d(np.asarray(x, dtype=float)), n_nodes).F


@lru_cache(maxsize=8)
def tw_standardization(x_range=(-10.0, 6.0), n_nodes: int = 80, step: float = 0.01) -> TwStandardization:
    """Mean and standard deviation of F_2 from the Airy-Fredholm CDF.

    The density is a central difference of F_2 on a grid of spacing ``step``.
    """
    lo, hi = x_range
    if lo > -10.0 or hi < 6.0:
        raise ParameterError("x_range must contain [-10, 6]")
    if step > 0.02:
        raise ParameterError("step must be <= 0.02")
    m = int(round((hi - lo) / step))
    x = np.linspace(lo, hi, m + 1)
    F = tw_cdf(x, n_nodes)
    dens = np.gradient(F, x)
    mass = np.trapezoid(dens, x)
    mean = np.trapezoid(x * dens, x) / mass
    second = np.trapezoid(x * x * dens, x) / mass
    return TwStandardization(float(mean), float(math.sqrt(second - mean * mean)))


def _invert(func, target, lo, hi, what):
    try:
        return brentq(lambda v: func(v) - target, lo, hi, xtol=1e-10, rtol=1e-13)
    except ValueError as exc:
        raise CalibrationError(f"cannot invert {what} at level {target}", level=target) from exc


def lue_soft_calibration(
    N: int,
    alpha: float = 0.0,
    quantiles=(0.25, 0.5, 0.75),
    x_range=(-6.0, 6.0),
    n_points: int = 241,
    config: NystromConfig | None = None,
    finite_cdf=None,
    limit_cdf=None,
):
    """Fit (mu, sigma) so that F_N(mu + sigma x_q) = q at three quantiles.

    Returns ``(mu, sigma, max_err)`` with ``max_err`` the sup of
    |F_N(mu + sigma x) - F_2(x)| over ``x_range``. ``finite_cdf`` and
    ``limit_cdf`` override the LUE and Airy CDFs (vectorised callables).
    """
    if N < 10:
        raise ParameterError("lue_soft_calibration needs N >= 10")
    if len(quantiles) != 3:
        raise ParameterError("exactly three quantiles are required")
    if finite_cdf is None:
        spec = EnsembleSpec.lue(N, alpha)
        config = config or default_config(spec)

        def finite_cdf(s):
            s = np.atleast_1d(s)
            return np.array([math.exp(upper_gap_logdet(spec, float(v), config).value) for v in s])

        edge = 4.0 * N + 2.0 * alpha + 2.0
        scale = 2.0 ** (4.0 / 3.0) * N ** (1.0 / 3.0)
    else:
        edge, scale = 0.0, 1.0
    limit_cdf = limit_cdf or tw_cdf
    xq, sq = [], []
    for q in quantiles:
        xq.append(_invert(lambda v: float(limit_cdf(v)[0]), q, -8.0, 6.0, "F_2"))
        sq.append(_invert(lambda v: float(finite_cdf(v)[0]), q, edge - 8.0 * scale, edge + 6.0 * scale, "F_N"))
    design = np.column_stack([np.ones(3), xq])
    (mu, sigma), *_ = np.linalg.lstsq(design, np.array(sq), rcond=None)
    x = np.linspace(x_range[0], x_range[1], n_points)
    err = float(np.max(np.abs(finite_cdf(mu + sigma * x) - limit_cdf(x))))
    return float(mu), float(sigma), err


def kolmogorov_distance(curve_a: GapCurve, curve_b: GapCurve, x_range=(-4.0, 4.0), step: float = 0.01) -> float:
    """sup |F_a - F_b| on ``x_range``, both curves linearly interpolated."""
    lo = max(x_range[0], curve_a.s_grid[0], curve_b.s_grid[0])
    hi = min(x_range[1], curve_a.s_grid[-1], curve_b.s_grid[-1])
    if not hi > lo:
        raise ParameterError("curves do not overlap on the requested range")
    x = np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1)
    return float(np.max(np.abs(curve_a.at(x) - curve_b.at(x))))
