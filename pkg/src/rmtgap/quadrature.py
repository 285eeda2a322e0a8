"""Gauss-Legendre rules and the interval maps used by the Nystrom solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError

__all__ = ["QuadratureRule", "gauss_legendre", "map_affine", "map_semi_infinite"]

MAX_NODES = 2000


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on ``interval``.

    ``interval[1]`` is ``math.inf`` for rules produced by
    :func:`map_semi_infinite`.
    """

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ParameterError("nodes and weights differ in length")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _legendre_with_derivative(n, x):
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=64)
def _reference_rule(n):
    if n == 1:
        return np.array([0.0]), np.array([2.0])
    k = np.arange(1, n // 2 + 1)
    # Chebyshev-like initial guess (Tricomi), refined by Newton
    theta = math.pi * (4 * k - 1) / (4 * n + 2)
    x = (1.0 - (n - 1) / (8.0 * n**3)) * np.cos(theta)
    for _ in range(100):
        p, dp = _legendre_with_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # x holds the positive roots in decreasing order
    if n % 2:
        p_mid, dp_mid = _legendre_with_derivative(n, np.array([0.0]))
        mid_x = np.array([0.0])
        mid_w = 2.0 / dp_mid**2
    else:
        mid_x = np.empty(0)
        mid_w = np.empty(0)
    nodes = np.concatenate([-x, mid_x, x[::-1]])
    weights = np.concatenate([w, mid_w, w[::-1]])
    return nodes, weights


def gauss_legendre(n: int) -> QuadratureRule:
    """N-point Gauss-Legendre rule on (-1, 1)."""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_NODES:
        raise ParameterError(f"gauss_legendre: need 1 <= N <= {MAX_NODES}, got {n!r}")
    nodes, weights = _reference_rule(int(n))
    return QuadratureRule(nodes.copy(), weights.copy(), (-1.0, 1.0))


def map_affine(rule: QuadratureRule, lo: float, hi: float) -> QuadratureRule:
    """Push ``rule`` forward to the finite interval (lo, hi)."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise ParameterError(f"map_affine: need finite lo < hi, got ({lo}, {hi})")
    a, b = rule.interval
    scale = (hi - lo) / (b - a)
    nodes = lo + (rule.nodes - a) * scale
    return QuadratureRule(nodes, rule.weights * scale, (lo, hi))


def map_semi_infinite(rule: QuadratureRule, x: float) -> QuadratureRule:
    """Map a rule on (0, 1) to (x, inf) with t = x + z/(1 - z)."""
    if rule.interval != (0.0, 1.0) and not np.allclose(rule.interval, (0.0, 1.0)):
        raise ParameterError("map_semi_infinite expects a rule on (0, 1)")
    z = rule.nodes
    one_minus = 1.0 - z
    nodes = x + z / one_minus
    weights = rule.weights / one_minus**2
    return QuadratureRule(nodes, weights, (x, math.inf))
