"""Orthonormal Hermite, Laguerre and Jacobi functions and their CD kernels.

All three families share one code path: the orthonormal polynomials obey

    x p_k(x) = a_{k+1} p_{k+1}(x) + b_k p_k(x) + a_k p_{k-1}(x),

and phi_k = p_k sqrt(w). The recurrence runs on rescaled mantissas with a
per-degree log scale, and the half-weight is applied in log space at the
end, so neither the raw polynomials nor the weight overflow/underflow for
large degree or far-out arguments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .specfun import log_gamma

__all__ = [
    "Ensemble",
    "EnsembleSpec",
    "PhiVector",
    "recurrence_coefficients",
    "phi_values",
    "phi_matrix",
    "cd_kernel",
    "cd_kernel_matrix",
    "cd_prefactor",
    "diagonal",
    "support",
]

_RESCALE = 1e150


class Ensemble(str, enum.Enum):
    GUE = "GUE"
    LUE = "LUE"
    JUE = "JUE"


@dataclass(frozen=True)
class EnsembleSpec:
    """One of GUE(n), LUE(n, alpha) or JUE(n, a, b).

    Use the :meth:`gue`, :meth:`lue` and :meth:`jue` constructors; the JUE
    weight is (1 - x)^a (1 + x)^b on (-1, 1).
    """

    kind: Ensemble
    n: int
    alpha: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Ensemble(self.kind))
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterError(f"matrix size must be a positive integer, got {self.n!r}")
        if self.kind is Ensemble.LUE and not self.alpha > -1:
            raise ParameterError(f"LUE needs alpha > -1, got {self.alpha}")
        if self.kind is Ensemble.JUE and not (self.a > -1 and self.b > -1):
            raise ParameterError(f"JUE needs a, b > -1, got ({self.a}, {self.b})")

    @classmethod
    def gue(cls, n):
        return cls(Ensemble.GUE, n)

    @classmethod
    def lue(cls, n, alpha=0.0):
        return cls(Ensemble.LUE, n, alpha=float(alpha))

    @classmethod
    def jue(cls, n, a=0.0, b=0.0):
        return cls(Ensemble.JUE, n, a=float(a), b=float(b))

    def swapped(self):
        """JUE with (a, b) exchanged, i.e. the reflection x -> -x."""
        if self.kind is not Ensemble.JUE:
            raise ParameterError("swapped() only applies to JUE")
        return EnsembleSpec.jue(self.n, self.b, self.a)

    def label(self):
        if self.kind is Ensemble.GUE:
            return f"GUE(n={self.n})"
        if self.kind is Ensemble.LUE:
            return f"LUE(N={self.n}, alpha={self.alpha:g})"
        return f"JUE(N={self.n}, a={self.a:g}, b={self.b:g})"


@dataclass(frozen=True)
class PhiVector:
    values: np.ndarray

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return len(self.values)


def support(spec: EnsembleSpec):
    if spec.kind is Ensemble.GUE:
        return (-math.inf, math.inf)
    if spec.kind is Ensemble.LUE:
        return (0.0, math.inf)
    return (-1.0, 1.0)


def _jacobi_coefficients(kmax, a, b):
    ab = a + b
    diag = np.empty(kmax + 1)
    off = np.zeros(kmax + 2)
    for k in range(kmax + 1):
        if k == 0:
            diag[0] = (b - a) / (ab + 2.0)
        else:
            s = 2.0 * k + ab
            diag[k] = (b * b - a * a) / (s * (s + 2.0))
    for k in range(1, kmax + 2):
        s = 2.0 * k + ab
        if k == 1:
            sq = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
        else:
            sq = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
        off[k] = math.sqrt(sq)
    log_mu0 = (ab + 1.0) * math.log(2.0) + log_gamma(a + 1.0) + log_gamma(b + 1.0) - log_gamma(ab + 2.0)
    return diag, off, log_mu0


@lru_cache(maxsize=128)
def recurrence_coefficients(spec: EnsembleSpec, kmax: int | None = None):
    """Jacobi-matrix coefficients for the orthonormal family of ``spec``.

    Returns
    -------
    diag : ndarray, shape (kmax + 1,)
        b_0 .. b_kmax
    off : ndarray, shape (kmax + 2,)
        off[k] = a_k for k >= 1 (off[0] is unused and zero)
    log_mu0 : float
        log of the total mass of the weight, so p_0 = exp(-log_mu0 / 2).
    """
    kmax = spec.n if kmax is None else kmax
    k = np.arange(kmax + 2, dtype=float)
    if spec.kind is Ensemble.GUE:
        diag = np.zeros(kmax + 1)
        off = np.sqrt(k / 2.0)
        log_mu0 = 0.5 * math.log(math.pi)
    elif spec.kind is Ensemble.LUE:
        al = spec.alpha
        diag = 2.0 * k[: kmax + 1] + al + 1.0
        off = np.sqrt(k * (k + al))
        log_mu0 = log_gamma(al + 1.0)
    else:
        diag, off, log_mu0 = _jacobi_coefficients(kmax, spec.a, spec.b)
    diag.setflags(write=False)
    off.setflags(write=False)
    return diag, off, log_mu0


def _log_half_weight(spec, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind is Ensemble.GUE:
            return -0.5 * x * x
        if spec.kind is Ensemble.LUE:
            lw = -0.5 * x
            if spec.alpha != 0.0:
                lw = lw + 0.5 * spec.alpha * np.log(x)
            return lw
        lw = np.zeros_like(x)
        if spec.a != 0.0:
            lw = lw + 0.5 * spec.a * np.log1p(-x)
        if spec.b != 0.0:
            lw = lw + 0.5 * spec.b * np.log1p(x)
        return lw


def _inside(spec, x):
    if spec.kind is Ensemble.GUE:
        return np.ones(x.shape, dtype=bool)
    if spec.kind is Ensemble.LUE:
        return x >= 0.0
    return (x > -1.0) & (x < 1.0)


def phi_matrix(spec: EnsembleSpec, x, kmax: int | None = None) -> np.ndarray:
    """phi_0 .. phi_kmax at every point of ``x``; shape (kmax + 1, len(x)).

    Points outside the support give zero columns.
    """
    kmax = spec.n if kmax is None else kmax
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diag, off, log_mu0 = recurrence_coefficients(spec, kmax)
    inside = _inside(spec, x)
    xs = np.where(inside, x, 0.0)
    mant = np.empty((kmax + 1, xs.size))
    scale = np.empty((kmax + 1, xs.size))
    log_scale = np.zeros(xs.size)
    p_prev = np.zeros(xs.size)
    p_cur = np.ones(xs.size)
    mant[0] = p_cur
    scale[0] = log_scale
    for k in range(kmax):
        p_next = ((xs - diag[k]) * p_cur - off[k] * p_prev) / off[k + 1]
        big = np.abs(p_next) > _RESCALE
        if big.any():
            factor = np.where(big, np.abs(p_next), 1.0)
            p_next = p_next / factor
            p_cur = p_cur / factor
            log_scale = log_scale + np.log(factor)
        p_prev, p_cur = p_cur, p_next
        mant[k + 1] = p_cur
        scale[k + 1] = log_scale
    lw = _log_half_weight(spec, xs) - 0.5 * log_mu0
    with np.errstate(over="ignore", invalid="ignore"):
        phi = mant * np.exp(scale + lw)
    phi[:, ~inside] = 0.0
    return phi


def phi_values(spec: EnsembleSpec, x: float) -> PhiVector:
    """phi_0(x) .. phi_n(x) for one point."""
    if not math.isfinite(x):
        raise ParameterError(f"phi_values: non-finite x {x!r}")
    return PhiVector(phi_matrix(spec, np.array([x]))[:, 0])


def cd_prefactor(spec: EnsembleSpec) -> float:
    """gamma_n in K(x, y) = gamma_n (phi_{n-1}(x) phi_n(y) - phi_n(x) phi_{n-1}(y)) / (x - y).

    Equal to -a_n, the last off-diagonal of the Jacobi matrix.
    """
    _, off, _ = recurrence_coefficients(spec)
    return -float(off[spec.n])


def _cd_delta(x, y):
    return 1e-5 * (1.0 + np.abs(x) + np.abs(y))


def cd_kernel(spec: EnsembleSpec, x: float, y: float) -> float:
    """Finite-n kernel K(x, y) with diagonal fallback; symmetric by construction."""
    x, y = (x, y) if x <= y else (y, x)
    phi = phi_matrix(spec, np.array([x, y]))
    n = spec.n
    if abs(x - y) <= _cd_delta(x, y):
        return float(np.dot(phi[:n, 0], phi[:n, 1]))
    gamma = cd_prefactor(spec)
    return float(gamma * (phi[n - 1, 0] * phi[n, 1] - phi[n, 0] * phi[n - 1, 1]) / (x - y))


def cd_kernel_matrix(spec: EnsembleSpec, x, phi: np.ndarray | None = None) -> np.ndarray:
    """Symmetric matrix K(x_i, x_j) over a set of points."""
    x = np.asarray(x, dtype=float)
    n = spec.n
    if phi is None:
        phi = phi_matrix(spec, x)
    gamma = cd_prefactor(spec)
    dx = x[:, None] - x[None, :]
    near = np.abs(dx) <= _cd_delta(x[:, None], x[None, :])
    num = np.outer(phi[n - 1], phi[n]) - np.outer(phi[n], phi[n - 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        k = gamma * num / dx
    if near.any():
        ii, jj = np.nonzero(near)
        k[ii, jj] = np.einsum("ki,ki->i", phi[:n, ii], phi[:n, jj])
    return 0.5 * (k + k.T)


def diagonal(spec: EnsembleSpec, x) -> np.ndarray:
    """K(x, x) = sum_k phi_k(x)^2."""
    phi = phi_matrix(spec, x, spec.n - 1)
    return np.einsum("ki,ki->i", phi, phi)
