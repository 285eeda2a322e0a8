"""Nystrom evaluation of gap probabilities det(I - K).

Covers the finite-n CD kernels (GUE, LUE on truncated intervals; JUE through
the n x n Gram matrix), the Airy kernel on (x, inf) and the Bessel kernel on
(0, s). Every determinant is computed from the eigenvalues of the symmetric
matrix I - A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from ._parallel import parallel_map
from .errors import NumericalError, ParameterError
from .orthopoly import Ensemble, EnsembleSpec, cd_kernel_matrix, diagonal, phi_matrix
from .quadrature import QuadratureRule, gauss_legendre, map_affine, map_semi_infinite
from .specfun import airy_array, bessel_j_array

__all__ = [
    "KernelOracle",
    "GapCurve",
    "LogDet",
    "NystromConfig",
    "default_config",
    "nystrom_logdet",
    "airy_kernel",
    "bessel_kernel",
    "interval_logdet",
    "upper_gap_logdet",
    "truncation_length",
    "gap_cdf",
    "airy_gap_cdf",
    "bessel_gap_cdf",
]

MIN_NODES = 16
MAX_NODES = 2000


@dataclass(frozen=True)
class KernelOracle:
    """A symmetric kernel. ``eval`` must broadcast over numpy arrays."""

    eval: Callable
    name: str
    matrix: Callable | None = None

    def gram(self, nodes):
        if self.matrix is not None:
            return self.matrix(nodes)
        return self.eval(nodes[:, None], nodes[None, :])


@dataclass
class GapCurve:
    s_grid: np.ndarray
    F: np.ndarray
    logF: np.ndarray
    method: str
    flags: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        self.logF = np.asarray(self.logF, dtype=float)
        if self.flags is None:
            self.flags = np.zeros(self.s_grid.shape, dtype=bool)

    def __len__(self):
        return len(self.s_grid)

    def at(self, s):
        """Linear interpolation of F."""
        return np.interp(s, self.s_grid, self.F)

    @classmethod
    def from_logs(cls, s_grid, logF, method, flags=None):
        logF = np.asarray(logF, dtype=float)
        return cls(np.asarray(s_grid, dtype=float), np.exp(logF), logF, method, flags)


class LogDet(NamedTuple):
    """log det(I - A); ``nonpositive`` is set when some eigenvalue was <= 0."""

    value: float
    nonpositive: bool

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class NystromConfig:
    """Resolution for finite-n gaps.

    ``nodes`` is the Gauss-Legendre size M; ``min_length`` the floor on the
    truncation length L(s); ``cutoff`` the relative diagonal level where the
    truncated interval stops.
    """

    nodes: int = 160
    min_length: float = 8.0
    cutoff: float = 1e-18
    map_kind: str = "truncate"

    def __post_init__(self):
        if not MIN_NODES <= self.nodes <= MAX_NODES:
            raise ParameterError(f"Nystrom nodes must lie in [{MIN_NODES}, {MAX_NODES}], got {self.nodes}")

    def doubled(self):
        return NystromConfig(min(2 * self.nodes, MAX_NODES), self.min_length, self.cutoff, self.map_kind)


def default_config(spec: EnsembleSpec, nodes: int | None = None) -> NystromConfig:
    if spec.kind is Ensemble.GUE:
        return NystromConfig(nodes or 160, 8.0)
    if spec.kind is Ensemble.LUE:
        return NystromConfig(nodes or 240, 40.0)
    return NystromConfig(nodes or 120, 0.0, map_kind="gram")


def _logdet_from_eigenvalues(lam):
    if np.any(lam <= 0.0):
        return LogDet(-math.inf, True)
    return LogDet(float(np.sum(np.log(lam))), False)


def nystrom_logdet(kernel: KernelOracle, rule: QuadratureRule, s: float | None = None) -> LogDet:
    """log det(I - A) with A_ij = sqrt(w_i) K(t_i, t_j) sqrt(w_j)."""
    sw = np.sqrt(rule.weights)
    a = sw[:, None] * kernel.gram(rule.nodes) * sw[None, :]
    m = np.eye(len(sw)) - a
    try:
        lam = scipy.linalg.eigvalsh(m, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigen-decomposition failed: {exc}", size=len(sw), s=s) from exc
    return _logdet_from_eigenvalues(lam)


# --------------------------------------------------------------------------
# Kernels
# --------------------------------------------------------------------------


def _airy_eval(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    ax, apx = airy_array(x)
    ay, apy = airy_array(y)
    d = x - y
    near = np.abs(d) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (ax * apy - apx * ay) / d
    if near.any():
        mid = 0.5 * (x[near] + y[near])
        am, apm = airy_array(mid)
        k[near] = apm * apm - mid * am * am
    return k


def _airy_matrix(nodes):
    ai, aip = airy_array(nodes)
    d = nodes[:, None] - nodes[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (np.outer(ai, aip) - np.outer(aip, ai)) / d
    near = np.abs(d) < 1e-6
    if near.any():
        ii, jj = np.nonzero(near)
        mid = 0.5 * (nodes[ii] + nodes[jj])
        am, apm = airy_array(mid)
        k[ii, jj] = apm * apm - mid * am * am
    return 0.5 * (k + k.T)


def airy_kernel() -> KernelOracle:
    return KernelOracle(_airy_eval, "airy", _airy_matrix)


def _bessel_offdiag(alpha, x, y):
    rx, ry = np.sqrt(x), np.sqrt(y)
    jx, jpx = bessel_j_array(alpha, rx)
    jy, jpy = bessel_j_array(alpha, ry)
    return (jx * ry * jpy - jy * rx * jpx) / (2.0 * (x - y))


def _bessel_diag(alpha, x):
    h = np.minimum(1e-5 * (1.0 + x), 0.5 * x)
    return _bessel_offdiag(alpha, x + h, x - h)


def bessel_kernel(alpha: float) -> KernelOracle:
    if not alpha > -1:
        raise ParameterError(f"Bessel order must exceed -1, got {alpha}")

    def evaluate(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.empty(x.shape)
        diag = x == y
        with np.errstate(divide="ignore", invalid="ignore"):
            out[~diag] = _bessel_offdiag(alpha, x[~diag], y[~diag])
        out[diag] = _bessel_diag(alpha, x[diag])
        return out

    def matrix(nodes):
        rx = np.sqrt(nodes)
        j, jp = bessel_j_array(alpha, rx)
        u = rx * jp
        d = nodes[:, None] - nodes[None, :]
        np.fill_diagonal(d, 1.0)
        k = (np.outer(j, u) - np.outer(u, j)) / (2.0 * d)
        np.fill_diagonal(k, _bessel_diag(alpha, nodes))
        return 0.5 * (k + k.T)

    return KernelOracle(evaluate, f"bessel({alpha:g})", matrix)


def cd_oracle(spec: EnsembleSpec) -> KernelOracle:
    from .orthopoly import cd_kernel

    def evaluate(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.vectorize(lambda u, v: cd_kernel(spec, u, v))(x, y)

    return KernelOracle(evaluate, spec.label(), lambda nodes: cd_kernel_matrix(spec, nodes))


# --------------------------------------------------------------------------
# Finite-n gaps
# --------------------------------------------------------------------------


def _edge_and_scale(spec):
    n = spec.n
    if spec.kind is Ensemble.GUE:
        return math.sqrt(2.0 * n), n ** (-1.0 / 6.0)
    if spec.kind is Ensemble.LUE:
        return 4.0 * n + 2.0 * spec.alpha + 2.0, 2.0 ** (4.0 / 3.0) * n ** (1.0 / 3.0)
    return 1.0, 0.0


def truncation_length(spec: EnsembleSpec, s: float, config: NystromConfig) -> float:
    """L(s): where K(x, x) on [s, inf) has fallen below cutoff * its maximum."""
    edge, scale = _edge_and_scale(spec)
    upper = max(s, edge) + 14.0 * scale + 10.0
    probe = np.linspace(s, upper, 1200)
    d = diagonal(spec, probe)
    dmax = d.max()
    if not dmax > 0.0:
        return config.min_length
    above = np.nonzero(d >= config.cutoff * dmax)[0]
    last = probe[min(above[-1] + 1, len(probe) - 1)]
    return max(config.min_length, last - s)


def interval_logdet(spec: EnsembleSpec, lo: float, hi: float, nodes: int) -> LogDet:
    """log det(I - K_n) on L^2(lo, hi) with an affine Gauss-Legendre rule."""
    rule = map_affine(gauss_legendre(nodes), lo, hi)
    if spec.kind is Ensemble.JUE:
        return _gram_logdet(spec, rule, lo)
    return nystrom_logdet(cd_oracle(spec), rule, s=lo)


def _gram_logdet(spec, rule, s):
    phi = phi_matrix(spec, rule.nodes, spec.n - 1)
    big_phi = phi.T * np.sqrt(rule.weights)[:, None]
    g = big_phi.T @ big_phi
    try:
        mu = scipy.linalg.eigvalsh(g)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Gram eigen-decomposition failed: {exc}", size=g.shape[0], s=s) from exc
    return _logdet_from_eigenvalues(1.0 - mu)


def upper_gap_logdet(spec: EnsembleSpec, s: float, config: NystromConfig | None = None) -> LogDet:
    """log P(lambda_max <= s), with one automatic resolution doubling."""
    config = config or default_config(spec)
    for attempt in range(2):
        if spec.kind is Ensemble.JUE:
            if s >= 1.0:
                return LogDet(0.0, False)
            lo = max(s, -1.0)
            result = interval_logdet(spec, lo, 1.0, config.nodes)
        else:
            lo = max(s, 0.0) if spec.kind is Ensemble.LUE else s
            length = truncation_length(spec, lo, config)
            result = interval_logdet(spec, lo, lo + length, config.nodes)
        if not result.nonpositive or config.nodes >= MAX_NODES:
            return result
        config = config.doubled()
    return result


def gap_cdf(spec: EnsembleSpec, s_grid, resolution: NystromConfig | None = None) -> GapCurve:
    """Largest-eigenvalue CDF F(s) = det(I - K_n) on (s, sup support)."""
    resolution = resolution or default_config(spec)
    s_grid = np.asarray(s_grid, dtype=float)

    def one(s):
        try:
            return upper_gap_logdet(spec, float(s), resolution)
        except NumericalError as exc:
            exc.context.setdefault("s", float(s))
            raise

    results = parallel_map(one, s_grid)
    logs = np.array([r.value for r in results])
    flags = np.array([r.nonpositive for r in results])
    return GapCurve.from_logs(s_grid, logs, f"fredholm-{spec.kind.value.lower()}", flags)


def airy_gap_cdf(x_grid, n_nodes: int = 80) -> GapCurve:
    """Tracy-Widom F_2 as det(I - K_Ai) on (x, inf)."""
    x_grid = np.asarray(x_grid, dtype=float)
    ref = map_affine(gauss_legendre(n_nodes), 0.0, 1.0)
    kernel = airy_kernel()

    def one(x):
        return nystrom_logdet(kernel, map_semi_infinite(ref, float(x)), s=float(x))

    results = parallel_map(one, x_grid)
    logs = np.array([r.value for r in results])
    flags = np.array([r.nonpositive for r in results])
    return GapCurve.from_logs(x_grid, logs, "fredholm-airy", flags)


def bessel_gap_cdf(alpha: float, s_grid, n_nodes: int = 120) -> GapCurve:
    """Hard-edge gap E(s) = det(I - K_Bessel) on (0, s); E(0) = 1."""
    kernel = bessel_kernel(alpha)
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid < 0):
        raise ParameterError("bessel_gap_cdf needs s >= 0")
    ref = gauss_legendre(n_nodes)

    def one(s):
        if s == 0.0:
            return LogDet(0.0, False)
        return nystrom_logdet(kernel, map_affine(ref, 0.0, float(s)), s=float(s))

    results = parallel_map(one, s_grid)
    logs = np.array([r.value for r in results])
    flags = np.array([r.nonpositive for r in results])
    return GapCurve.from_logs(s_grid, logs, f"fredholm-bessel({alpha:g})", flags)
