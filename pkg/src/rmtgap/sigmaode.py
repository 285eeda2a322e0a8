"""Adaptive Dormand-Prince 5(4) integration and the Tracy-Widom route via P_II.

Step-size collapse is reported in-band (``terminated_early``) rather than
raised: for Painleve problems it is the signature of a movable pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError, ParameterError
from .fredholm import GapCurve
from .quadrature import gauss_legendre, map_affine, map_semi_infinite
from .specfun import airy, airy_array

__all__ = [
    "IvpProblem",
    "IvpSolution",
    "integrate",
    "hastings_mcleod",
    "tw_cdf_from_q",
    "tracy_widom_pii",
]

EPS = np.finfo(float).eps

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension of order 4 (Shampine), y(t0 + th) = y0 + h K^T P [t, t^2, t^3, t^4]
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0
_MAX_STEPS = 200_000


@dataclass(frozen=True)
class IvpProblem:
    rhs: Callable
    s_start: float
    s_end: float
    state0: np.ndarray
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "state0", np.atleast_1d(np.asarray(self.state0, dtype=float)))
        if not 1e-13 <= self.rtol <= 1e-3:
            raise ParameterError(f"rtol must lie in [1e-13, 1e-3], got {self.rtol}")
        if not 1e-14 <= self.atol <= 1e-6:
            raise ParameterError(f"atol must lie in [1e-14, 1e-6], got {self.atol}")
        if self.s_start == self.s_end:
            raise ParameterError("s_start and s_end coincide")

    @property
    def direction(self):
        return 1.0 if self.s_end > self.s_start else -1.0


class IvpSolution:
    """Dense output over the covered span [s_start, s_reached] (either order)."""

    def __init__(self, s_start, s_reached, terminated_early, ts, ys, h, coeffs, n_rejected=0):
        self.scale = 1.0
        self.s_start = float(s_start)
        self.s_reached = float(s_reached)
        self.terminated_early = bool(terminated_early)
        self.ts = ts
        self.ys = ys
        self._h = h
        self._coeffs = coeffs
        self.n_rejected = n_rejected

    @property
    def span(self):
        return (min(self.s_start, self.s_reached), max(self.s_start, self.s_reached))

    def sample(self, s):
        """State at ``s``; shape (dim,) for scalar input, (len(s), dim) otherwise."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.span
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(s < lo - tol) or np.any(s > hi + tol):
            raise ParameterError(f"sample outside covered span [{lo}, {hi}]")
        if len(self._h) == 0:
            out = self.scale * np.repeat(self.ys[:1], len(s), axis=0)
            return out[0] if scalar else out
        t0 = self.ts[:-1]
        forward = self.ts[-1] >= self.ts[0]
        if forward:
            idx = np.searchsorted(self.ts, s, side="right") - 1
        else:
            idx = np.searchsorted(-self.ts, -s, side="right") - 1
        idx = np.clip(idx, 0, len(t0) - 1)
        theta = (s - t0[idx]) / self._h[idx]
        powers = np.stack([theta, theta**2, theta**3, theta**4], axis=1)
        # coeffs[i] has shape (dim, 4) and already includes h
        out = self.ys[idx] + np.einsum("idk,ik->id", self._coeffs[idx], powers)
        out = self.scale * out
        return out[0] if scalar else out

    def __call__(self, s):
        return self.sample(s)


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(rhs(t0 + direction * h0, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0 if np.all(np.isfinite(f1)) else np.inf
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, span)


def integrate(problem: IvpProblem) -> IvpSolution:
    """Integrate ``problem`` with an embedded 5(4) pair and PI step control.

    Stops early (without raising) when the step falls below
    16 eps max(|s|, 1); the frontier is ``s_reached``.
    """
    rhs = problem.rhs
    t = float(problem.s_start)
    t_end = float(problem.s_end)
    y = problem.state0.copy()
    direction = problem.direction
    rtol, atol = problem.rtol, problem.atol
    f = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f)) or not np.all(np.isfinite(y)):
        raise NumericalError("non-finite right-hand side at the initial point", s=t)

    span = abs(t_end - t)
    h_abs = _initial_step(rhs, t, y, f, direction, rtol, atol, span)
    ts, ys, hs, coeffs = [t], [y.copy()], [], []
    dim = y.size
    k = np.empty((7, dim))
    err_prev = 1e-4
    terminated = False
    rejected = 0

    for _ in range(_MAX_STEPS):
        if t == t_end:
            break
        min_step = 16.0 * EPS * max(abs(t), 1.0)
        while True:
            if h_abs < min_step:
                terminated = True
                break
            h = direction * min(h_abs, abs(t_end - t))
            k[0] = f
            ok = True
            with np.errstate(all="ignore"):
                for i in range(1, 7):
                    yi = y + h * (np.asarray(_A[i]) @ k[:i])
                    k[i] = rhs(t + _C[i] * h, yi)
                y_new = y + h * (_B[:6] @ k[:6])
                if not (np.all(np.isfinite(k)) and np.all(np.isfinite(y_new))):
                    ok = False
                    err = np.inf
                else:
                    err = _error_norm(h * (_E @ k), y, y_new, rtol, atol)
            if ok and err <= 1.0:
                break
            rejected += 1
            factor = _MIN_FACTOR if not np.isfinite(err) else max(_MIN_FACTOR, _SAFETY * err ** (-1.0 / 5.0))
            h_abs *= factor
        if terminated:
            break
        t_new = t_end if abs(t_end - (t + h)) <= 1e-14 * max(1.0, abs(t_end)) else t + h
        coeffs.append(h * (k.T @ _P))
        hs.append(t_new - t)
        t, y, f = t_new, y_new, k[6].copy()
        ts.append(t)
        ys.append(y.copy())
        # PI controller
        err_c = max(err, 1e-10)
        factor = _SAFETY * err_c ** (-_PI_ALPHA) * err_prev**_PI_BETA
        h_abs = abs(hs[-1]) * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = err_c
    else:
        terminated = True

    return IvpSolution(
        problem.s_start,
        t,
        terminated,
        np.array(ts),
        np.array(ys),
        np.array(hs),
        np.array(coeffs).reshape(len(hs), dim, 4),
        rejected,
    )


# --------------------------------------------------------------------------
# Painleve II / Tracy-Widom
# --------------------------------------------------------------------------


def _pii_rhs_scaled(c2):
    # q = c v turns q'' = x q + 2 q^3 into v'' = x v + 2 c^2 v^3
    def rhs(x, u):
        v, w = u
        return np.array([w, x * v + 2.0 * c2 * v**3])

    return rhs


def hastings_mcleod(T0: float = 8.0, x_min: float = -10.0, rtol: float = 1e-12) -> IvpSolution:
    """Hastings-McLeod q on [x_min, T0] from Airy data at T0, integrated backwards.

    The state is rescaled by Ai(T0) so that the absolute tolerance does not
    swamp the tiny initial data; ``sample`` returns the unscaled (q, q').
    """
    if not 6.0 <= T0 <= 12.0:
        raise ParameterError(f"T0 must lie in [6, 12], got {T0}")
    if not -10.0 <= x_min <= 0.0:
        raise ParameterError(f"x_min must lie in [-10, 0], got {x_min}")
    ai, aip = airy(T0)
    tol = min(rtol, 1e-10)
    for _ in range(3):
        rhs = _pii_rhs_scaled(ai * ai)
        sol = integrate(IvpProblem(rhs, T0, x_min, np.array([1.0, aip / ai]), rtol=tol, atol=1e-14))
        sol.scale = ai
        if not sol.terminated_early:
            return sol
        if tol <= 1e-13:
            break
        tol = max(tol / 10.0, 1e-13)
    raise NumericalError("Hastings-McLeod integration hit a pole", x_reached=sol.s_reached)


def _airy_tail_moments(T0, nodes=60):
    rule = map_semi_infinite(map_affine(gauss_legendre(nodes), 0.0, 1.0), T0)
    ai, _ = airy_array(rule.nodes)
    sq = ai * ai
    return rule.integrate(sq), rule.integrate(rule.nodes * sq)


def tw_cdf_from_q(solution: IvpSolution, x_grid, T0: float, step: float = 0.01) -> GapCurve:
    """log F_2(x) = -int_x^inf (t - x) q(t)^2 dt by cumulative trapezoid + Airy tail."""
    x_grid = np.asarray(x_grid, dtype=float)
    lo, hi = solution.span
    if np.any(x_grid < lo - 1e-12) or np.any(x_grid > T0 + 1e-12):
        raise ParameterError("x_grid must lie inside the solution span")
    n = int(math.ceil((T0 - lo) / step))
    grid = np.linspace(lo, T0, n + 1)
    q2 = solution.sample(grid)[:, 0] ** 2
    h = np.diff(grid)
    # cumulative from the right: I0[k] = int_{grid[k]}^{T0} q^2, I1 likewise with t q^2
    seg0 = 0.5 * h * (q2[:-1] + q2[1:])
    seg1 = 0.5 * h * (grid[:-1] * q2[:-1] + grid[1:] * q2[1:])
    i0 = np.concatenate([np.cumsum(seg0[::-1])[::-1], [0.0]])
    i1 = np.concatenate([np.cumsum(seg1[::-1])[::-1], [0.0]])
    tail0, tail1 = _airy_tail_moments(T0)

    k = np.clip(np.searchsorted(grid, x_grid, side="left"), 0, n)
    xq2 = solution.sample(x_grid)[:, 0] ** 2 if x_grid.size else np.empty(0)
    dx = grid[k] - x_grid
    part0 = 0.5 * dx * (xq2 + q2[k])
    part1 = 0.5 * dx * (x_grid * xq2 + grid[k] * q2[k])
    total0 = i0[k] + part0 + tail0
    total1 = i1[k] + part1 + tail1
    log_f = -(total1 - x_grid * total0)
    return GapCurve.from_logs(x_grid, log_f, "painleve-ii")


def tracy_widom_pii(x_grid, T0: float = 8.0, rtol: float = 1e-12) -> GapCurve:
    """Convenience: F_2 on ``x_grid`` via the Hastings-McLeod route."""
    x_grid = np.asarray(x_grid, dtype=float)
    x_min = max(-10.0, min(float(x_grid.min()), 0.0))
    sol = hastings_mcleod(T0, x_min, rtol)
    return tw_cdf_from_q(sol, x_grid, T0)
