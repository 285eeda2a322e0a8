"""Special functions used by the kernels.

Airy Ai/Ai' and Bessel J_alpha/J_alpha' are implemented here from series and
asymptotic expansions; ``log_gamma`` and ``erf`` delegate to :mod:`math`.

Airy on the moderate range [-12, 9] is evaluated by Taylor re-expansion of
the Airy ODE around tabulated nodes. The table is built once at import by
stepping the ODE from exact data: forwards from the Maclaurin values at 0
towards negative x (oscillatory, neutrally stable) and backwards from the
asymptotic values at x = 9 towards 0 (Ai is dominant in that direction).

Bessel J_alpha uses the ascending series up to x = max(12, alpha + 1). Past
that point the Hankel expansion is evaluated at the fractional order and
lifted to alpha by upward recurrence.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "AiryPair",
    "BesselPair",
    "airy",
    "airy_array",
    "bessel_j",
    "bessel_j_array",
    "log_gamma",
    "erf",
]


class AiryPair(NamedTuple):
    ai: float
    aip: float


class BesselPair(NamedTuple):
    j: float
    jp: float


# --------------------------------------------------------------------------
# Airy
# --------------------------------------------------------------------------

_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
_AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))

_TABLE_STEP = 0.25
_TABLE_LO = -12.0
_TABLE_HI = 9.0
_TAYLOR_TERMS = 32
_ASYM_TERMS = 60


def _airy_u_coefficients(count):
    u = np.empty(count)
    u[0] = 1.0
    for k in range(1, count):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    v = np.array([-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(count)])
    v[0] = 1.0
    return u, v


_U, _V = _airy_u_coefficients(_ASYM_TERMS)


def _truncated_series(coeffs, inv_zeta, signs):
    """Sum ``signs[k] coeffs[k] inv_zeta**k`` up to the smallest term."""
    total = np.zeros_like(inv_zeta)
    power = np.ones_like(inv_zeta)
    last = np.full_like(inv_zeta, np.inf)
    active = np.ones(inv_zeta.shape, dtype=bool)
    for k in range(len(coeffs)):
        term = signs[k] * coeffs[k] * power
        mag = np.abs(term)
        active &= mag < last
        total = np.where(active, total + term, total)
        last = np.where(active, mag, last)
        power = power * inv_zeta
        if not active.any():
            break
    return total


def _airy_asym_positive(x):
    x = np.asarray(x, dtype=float)
    zeta = 2.0 / 3.0 * x**1.5
    inv = 1.0 / zeta
    signs = np.array([(-1.0) ** k for k in range(_ASYM_TERMS)])
    su = _truncated_series(_U, inv, signs)
    sv = _truncated_series(_V, inv, signs)
    # exp(-zeta) handled in log space so that huge x underflows cleanly to 0
    log_pref = -zeta - 0.5 * math.log(math.pi) - math.log(2.0)
    quarter = 0.25 * np.log(x)
    ai = np.exp(log_pref - quarter) * su
    aip = -np.exp(log_pref + quarter) * sv
    return ai, aip


def _airy_asym_negative(x):
    """Oscillatory expansion for x << 0."""
    z = -np.asarray(x, dtype=float)
    zeta = 2.0 / 3.0 * z**1.5
    inv = 1.0 / zeta
    inv2 = inv * inv
    half = _ASYM_TERMS // 2
    alt = np.array([(-1.0) ** k for k in range(half)])
    u_even = _truncated_series(_U[0::2][:half], inv2, alt)
    u_odd = inv * _truncated_series(_U[1::2][:half], inv2, alt)
    v_even = _truncated_series(_V[0::2][:half], inv2, alt)
    v_odd = inv * _truncated_series(_V[1::2][:half], inv2, alt)
    phase = zeta - math.pi / 4.0
    c, s = np.cos(phase), np.sin(phase)
    q = z**0.25
    ai = (c * u_even + s * u_odd) / (math.sqrt(math.pi) * q)
    aip = q * (s * v_even - c * v_odd) / math.sqrt(math.pi)
    return ai, aip


def _airy_taylor(x0, y0, yp0, dx):
    """Evaluate Ai, Ai' at x0 + dx from the ODE Taylor series at x0."""
    c_prev2 = y0  # c_{k-2}
    c_prev1 = yp0  # c_{k-1}
    val = y0 + yp0 * dx
    der = yp0.copy() if isinstance(yp0, np.ndarray) else yp0
    power_km1 = dx  # dx**(k-1)
    c_km3 = np.zeros_like(y0)  # c_{k-3}
    for k in range(2, _TAYLOR_TERMS):
        # c_k = (x0 c_{k-2} + c_{k-3}) / (k (k-1))
        c_k = (x0 * c_prev2 + c_km3) / (k * (k - 1))
        der = der + k * c_k * power_km1
        power_km1 = power_km1 * dx
        val = val + c_k * power_km1
        c_km3, c_prev2, c_prev1 = c_prev2, c_prev1, c_k
    return val, der


def _build_airy_table():
    nodes = np.arange(round(_TABLE_LO / _TABLE_STEP), round(_TABLE_HI / _TABLE_STEP) + 1) * _TABLE_STEP
    ai = np.empty_like(nodes)
    aip = np.empty_like(nodes)
    i0 = int(np.argmin(np.abs(nodes)))
    ai[i0], aip[i0] = _AI0, _AIP0
    for i in range(i0 - 1, -1, -1):
        a, b = _airy_taylor(nodes[i + 1], np.array(ai[i + 1]), np.array(aip[i + 1]), -_TABLE_STEP)
        ai[i], aip[i] = float(a), float(b)
    top = len(nodes) - 1
    a, b = _airy_asym_positive(np.array([nodes[top]]))
    ai[top], aip[top] = a[0], b[0]
    for i in range(top - 1, i0, -1):
        a, b = _airy_taylor(nodes[i + 1], np.array(ai[i + 1]), np.array(aip[i + 1]), -_TABLE_STEP)
        ai[i], aip[i] = float(a), float(b)
    return nodes, ai, aip


_NODES, _NODE_AI, _NODE_AIP = _build_airy_table()


def airy_array(x):
    """Vectorised Ai and Ai' for finite real arrays.

    Returns
    -------
    tuple of ndarray
        ``(ai, aip)`` with the shape of ``x``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("airy: non-finite argument")
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    pos = x > _TABLE_HI
    neg = x < _TABLE_LO
    mid = ~(pos | neg)
    if pos.any():
        ai[pos], aip[pos] = _airy_asym_positive(x[pos])
    if neg.any():
        ai[neg], aip[neg] = _airy_asym_negative(x[neg])
    if mid.any():
        xm = x[mid]
        idx = np.rint((xm - _TABLE_LO) / _TABLE_STEP).astype(int)
        x0 = _NODES[idx]
        ai[mid], aip[mid] = _airy_taylor(x0, _NODE_AI[idx], _NODE_AIP[idx], xm - x0)
    return ai, aip


def airy(x: float) -> AiryPair:
    """Airy function Ai and its derivative at a real point."""
    if not math.isfinite(x):
        raise DomainError(f"airy: non-finite argument {x!r}")
    a, b = airy_array(np.array([float(x)]))
    return AiryPair(float(a[0]), float(b[0]))


# --------------------------------------------------------------------------
# Bessel J of real order
# --------------------------------------------------------------------------

_BESSEL_SERIES_TERMS = 120


def _series_limit(alpha):
    return max(12.0, alpha + 1.0)


def _bessel_series(alpha, x):
    """Ascending series for J_alpha and J_alpha' at x > 0."""
    half = 0.5 * x
    if alpha == 0.0:
        lead = np.ones_like(x)
    else:
        with np.errstate(divide="ignore"):
            lead = np.exp(alpha * np.log(half) - math.lgamma(alpha + 1.0))
    q = -(half * half)
    term = np.ones_like(x)
    j_sum = term.copy()
    d_sum = alpha * term
    for k in range(1, _BESSEL_SERIES_TERMS):
        term = term * q / (k * (k + alpha))
        j_sum = j_sum + term
        d_sum = d_sum + (2 * k + alpha) * term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(j_sum), 1e-300)):
            break
    j = lead * j_sum
    jp = lead * d_sum / x
    return j, jp


def _hankel_j(alpha, x):
    mu = 4.0 * alpha * alpha
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    coeff = 1.0
    last = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    power = np.ones_like(x)
    for k in range(0, 80):
        if k > 0:
            coeff = coeff * (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = coeff * power
        mag = np.abs(term)
        # terms may grow while (2k - 1)^2 < 4 alpha^2; truncate at the smallest one after that
        if (2 * k - 1) ** 2 > mu:
            active &= mag < last
        sign = (-1.0) ** (k // 2)
        if k % 2 == 0:
            p = np.where(active, p + sign * term, p)
        else:
            q = np.where(active, q + sign * term, q)
        last = np.where(active, mag, last)
        power = power / x
        if coeff == 0.0 or not active.any():
            break
    omega = x - alpha * math.pi / 2.0 - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(omega) - q * np.sin(omega))


def _bessel_large(alpha, x):
    """Hankel asymptotics at the fractional order, then upward recurrence.

    The recurrence J_{v+1} = (2v/x) J_v - J_{v-1} is stable while v < x,
    which holds on the whole region where this branch is used.
    """
    steps = int(math.floor(alpha)) if alpha >= 1.0 else 0
    nu = alpha - steps
    j_lo = _hankel_j(nu, x)
    j_hi = _hankel_j(nu + 1.0, x)
    for k in range(steps):
        v = nu + 1.0 + k
        j_lo, j_hi = j_hi, (2.0 * v / x) * j_hi - j_lo
    return j_lo, (alpha / x) * j_lo - j_hi


def bessel_j_array(alpha: float, x):
    """Vectorised J_alpha and J_alpha' for ``x >= 0``."""
    if not alpha > -1.0:
        raise ParameterError(f"bessel_j: order must exceed -1, got {alpha}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("bessel_j: argument must be finite and >= 0")
    j = np.empty_like(x)
    jp = np.empty_like(x)
    zero = x == 0.0
    if zero.any():
        if alpha == 0.0:
            j[zero], jp[zero] = 1.0, 0.0
        elif alpha > 0.0:
            j[zero] = 0.0
            jp[zero] = 0.5 if alpha == 1.0 else (0.0 if alpha > 1.0 else np.inf)
        else:
            j[zero], jp[zero] = np.inf, -np.inf
    small = (~zero) & (x <= _series_limit(alpha))
    large = x > _series_limit(alpha)
    if small.any():
        j[small], jp[small] = _bessel_series(alpha, x[small])
    if large.any():
        j[large], jp[large] = _bessel_large(alpha, x[large])
    return j, jp


def bessel_j(alpha: float, x: float) -> BesselPair:
    """Bessel function of the first kind J_alpha and its derivative."""
    j, jp = bessel_j_array(alpha, np.array([float(x)]))
    return BesselPair(float(j[0]), float(jp[0]))


# --------------------------------------------------------------------------
# Gamma / erf
# --------------------------------------------------------------------------


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"log_gamma: need finite x > 0, got {x!r}")
    return math.lgamma(x)


def erf(x):
    """Error function; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return np.vectorize(math.erf, otypes=[float])(x)
