"""Fredholm-anchored, branch-locked integration of sigma-form Painleve ODEs.

The sigma-forms are second order and second degree, so sigma'' is only fixed
up to a sign by the algebraic relation. Between consecutive anchors the sign
is frozen to the sign of the Fredholm-estimated sigma'' at the right anchor,
the ODE is integrated leftwards, and the state is overwritten with fresh
Fredholm data at every anchor.

Forms
-----
P_IV (GUE):  sigma = d/ds log F,   sigma''^2 = 4(s sigma' - sigma)^2 - 4 sigma'^2 (sigma' + 2n)
P_V  (LUE):  sigma = s d/ds log F, (s sigma'')^2 = (sigma - s sigma' + 2 sigma'^2 + (2N+a) sigma')^2
                                                 - 4 sigma'^2 (sigma' + N)(sigma' + N + a)
P_VI (JUE):  t = (1 - s)/2, sigma = t(t-1) d/dt log F - v1^2 t + (v1^2 + v2 v4)/2,
             sigma' (t(1-t) sigma'')^2 + [sigma'(2 sigma - (2t-1) sigma') + v1 v2 v3 v4]^2
                 = prod_k (sigma' + v_k^2)
             integrated in the stretched variable y = -log(1 - s).
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._parallel import parallel_map
from .errors import AnchorPlacementError, BranchFailure, ParameterError, WindowError
from .fredholm import GapCurve, NystromConfig, default_config, gap_cdf, upper_gap_logdet
from .orthopoly import Ensemble, EnsembleSpec
from .sigmaode import IvpProblem, IvpSolution, integrate

__all__ = [
    "AnchorDatum",
    "SigmaForm",
    "AnchoredRun",
    "DirectIvpReport",
    "extract_anchor",
    "fit_log_cdf",
    "branch_sign",
    "sigma_piv",
    "sigma_piv_perturbed",
    "sigma_pv",
    "sigma_pvi",
    "form_for",
    "anchored_cdf",
    "auto_window",
    "default_anchor_count",
    "run_config",
    "direct_ivp_demo",
    "okamoto_rhs",
    "okamoto_hamiltonian_ivp",
    "okamoto_initial_data",
    "max_error_vs_fredholm",
]

EPS_INIT = 1e-9
STENCIL_POINTS = 9
LOG_F_FLOOR = math.log(1e-280)
SATURATION = -1e-16
UNRESOLVED_RMS = 1e-4


class IllConditionedAnchorWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# Anchor extraction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnchorDatum:
    """Cauchy data at ``s`` from a degree-4 least-squares fit of log F.

    ``sigma``, ``sigma_prime`` and ``sigma_second`` are derivatives of
    log F in s (c1, 2 c2, 6 c3), whatever variable a sigma-form uses.
    """

    s: float
    F: float
    c: tuple
    residual_rms: float = 0.0
    saturated: bool = False
    ill_conditioned: bool = False

    @property
    def sigma(self):
        return self.c[1]

    @property
    def sigma_prime(self):
        return 2.0 * self.c[2]

    @property
    def sigma_second(self):
        return 6.0 * self.c[3]


def fit_log_cdf(s, offsets, log_values):
    """Least-squares quartic in u = offset; returns (c0..c4, rms residual)."""
    offsets = np.asarray(offsets, dtype=float)
    width = float(np.max(np.abs(offsets)))
    u = offsets / width
    vander = np.vander(u, 5, increasing=True)
    coef, *_ = np.linalg.lstsq(vander, log_values, rcond=None)
    resid = log_values - vander @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    coef = coef / width ** np.arange(5)
    return tuple(float(c) for c in coef), rms


def extract_anchor(
    spec: EnsembleSpec,
    s: float,
    stencil_halfwidth: float = 0.15,
    stencil_points: int = STENCIL_POINTS,
    config: NystromConfig | None = None,
    log_cdf=None,
) -> AnchorDatum:
    """Fit log F on a symmetric stencil around ``s``.

    ``log_cdf`` overrides the Fredholm evaluation (a callable of one array).
    """
    if stencil_points < 7 or stencil_points % 2 == 0:
        raise ParameterError(f"stencil needs an odd number >= 7 of points, got {stencil_points}")
    offsets = np.linspace(-stencil_halfwidth, stencil_halfwidth, stencil_points)
    if log_cdf is None:
        config = config or default_config(spec)
        logs = np.array([upper_gap_logdet(spec, s + u, config).value for u in offsets])
    else:
        logs = np.asarray(log_cdf(s + offsets), dtype=float)
    centre = logs[stencil_points // 2]
    if not np.all(np.isfinite(logs)) or centre < LOG_F_FLOOR:
        raise AnchorPlacementError(f"F({s}) below 1e-280; anchor cannot be fitted")
    coef, rms = fit_log_cdf(s, offsets, logs)
    ill = rms > 1e-6
    if ill:
        warnings.warn(f"anchor at s={s}: fit residual {rms:.2e}", IllConditionedAnchorWarning, stacklevel=2)
    return AnchorDatum(
        s=float(s),
        F=math.exp(coef[0]),
        c=coef,
        residual_rms=rms,
        saturated=bool(centre > SATURATION),
        ill_conditioned=ill,
    )


def branch_sign(datum, eps_init: float = EPS_INIT) -> int:
    """+1 when |sigma''| <= eps_init, else the sign of sigma''.

    ``datum`` is an :class:`AnchorDatum` or a bare curvature value.
    """
    curvature = datum if isinstance(datum, (int, float)) else datum.sigma_second
    if abs(curvature) <= eps_init:
        return 1
    return 1 if curvature > 0 else -1


# --------------------------------------------------------------------------
# Sigma forms
# --------------------------------------------------------------------------


@dataclass
class SigmaForm:
    """Algebraic relation prefactor(x)^2 sigma''^2 = radicand(x, sigma, sigma').

    ``x`` is the form's own variable and ``sigma`` its own function; the
    ``lift``/``log_slope`` pair converts to and from derivatives of log F in
    the CDF argument s. Integration runs in ``variable(s)``; for P_IV and P_V
    that is s itself.
    """

    label: str
    params: dict
    radicand_fn: object
    prefactor_fn: object = None
    kind: str = "piv"

    def radicand(self, x, sigma, sigma_prime):
        return self.radicand_fn(x, sigma, sigma_prime)

    def prefactor(self, x, sigma=None, sigma_prime=None):
        if self.prefactor_fn is None:
            return 1.0
        return self.prefactor_fn(x, sigma, sigma_prime)

    # conversions ---------------------------------------------------------
    def natural(self, s):
        if self.kind == "pvi":
            return 0.5 * (1.0 - s)
        return s

    def variable(self, s):
        if self.kind == "pvi":
            return -math.log1p(-s)
        return s

    def from_variable(self, z):
        if self.kind == "pvi":
            return -math.expm1(-z)
        return z

    def lift(self, s, d1, d2, d3):
        """State (sigma, d sigma/dz) and natural-variable curvature from log F derivatives."""
        if self.kind == "piv":
            return d1, d2, d3
        if self.kind == "pv":
            return s * d1, d1 + s * d2, 2.0 * d2 + s * d3
        t = 0.5 * (1.0 - s)
        v1, c0 = self.params["v1"], self.params["c0"]
        l1, l2, l3 = -2.0 * d1, 4.0 * d2, -8.0 * d3
        sig = t * (t - 1.0) * l1 - v1 * v1 * t + c0
        sig_t = (2.0 * t - 1.0) * l1 + t * (t - 1.0) * l2 - v1 * v1
        sig_tt = 2.0 * l1 + 2.0 * (2.0 * t - 1.0) * l2 + t * (t - 1.0) * l3
        return sig, -t * sig_t, sig_tt

    def log_slope(self, s, sigma):
        """d/ds log F recovered from the form's sigma at s."""
        s = np.asarray(s, dtype=float)
        if self.kind == "piv":
            return sigma
        if self.kind == "pv":
            return sigma / s
        t = 0.5 * (1.0 - s)
        v1, c0 = self.params["v1"], self.params["c0"]
        return -0.5 * (sigma + v1 * v1 * t - c0) / (t * (t - 1.0))

    def second_derivative(self, x, sigma, sigma_prime, sign):
        """sign * sqrt(radicand) / prefactor, frozen to 0 where the radicand is <= 0."""
        r = self.radicand(x, sigma, sigma_prime)
        if not r > 0.0:
            return 0.0
        return sign * math.sqrt(r) / self.prefactor(x, sigma, sigma_prime)

    def rhs(self, sign):
        """First-order right-hand side in the integration variable; records freezes."""
        frozen = {"count": 0}
        if self.kind != "pvi":

            def f(z, u):
                acc = self.second_derivative(z, u[0], u[1], sign)
                if acc == 0.0:
                    frozen["count"] += 1
                return np.array([u[1], acc])

            return f, frozen

        def f_y(y, u):
            t = 0.5 * math.exp(-y)
            sig_t = -u[1] / t
            acc = self.second_derivative(t, u[0], sig_t, sign)
            if acc == 0.0:
                frozen["count"] += 1
            return np.array([u[1], -u[1] + t * t * acc])

        return f_y, frozen

    def state_to_slope(self, s, state):
        return self.log_slope(s, state[..., 0])


def sigma_piv(n: int) -> SigmaForm:
    if n < 1:
        raise ParameterError("sigma_piv needs n >= 1")

    def radicand(s, sig, sp):
        return 4.0 * (s * sp - sig) ** 2 - 4.0 * sp * sp * (sp + 2.0 * n)

    return SigmaForm(f"sigma-PIV(n={n})", {"n": n}, radicand, None, "piv")


def sigma_piv_perturbed(n: int, variant: str) -> SigmaForm:
    """Deliberately altered P_IV radicands used to probe discrimination."""
    if n < 1:
        raise ParameterError("sigma_piv_perturbed needs n >= 1")
    if variant == "shift_001":

        def radicand(s, sig, sp):
            return 4.0 * (s * sp - sig) ** 2 - 4.0 * sp * sp * (sp + 2.0 * n + 0.01)

    elif variant == "alt_A":

        def radicand(s, sig, sp):
            return 4.0 * (s * sp - sig) ** 2 - 4.0 * (sp - n) * (sp - n - 1.0) * sp

    elif variant == "alt_B":

        def radicand(s, sig, sp):
            return 4.0 * (s * sp - sig + n) ** 2 - 4.0 * sp * sp * (sp + 2.0 * n + 1.0) + 3.0 * sp**4

    else:
        raise ParameterError(f"unknown perturbation {variant!r}")
    return SigmaForm(f"sigma-PIV[{variant}](n={n})", {"n": n, "variant": variant}, radicand, None, "piv")


def sigma_pv(N: int, alpha: float) -> SigmaForm:
    """JMO sigma-PV with (nu0, nu1, nu2, nu3) = (0, 0, N + alpha, N)."""
    if N < 1 or not alpha > -1:
        raise ParameterError("sigma_pv needs N >= 1 and alpha > -1")
    nu = (0.0, 0.0, N + alpha, float(N))
    total = sum(nu)

    def radicand(t, sig, sp):
        lin = sig - t * sp + 2.0 * sp * sp + total * sp
        prod = 1.0
        for v in nu:
            prod *= sp + v
        return lin * lin - 4.0 * prod

    def prefactor(t, sig, sp):
        return t

    return SigmaForm(f"sigma-PV(N={N}, alpha={alpha:g})", {"N": N, "alpha": alpha, "nu": nu}, radicand, prefactor, "pv")


def sigma_pvi(N: int, a: float, b: float) -> SigmaForm:
    """sigma-PVI for the JUE largest eigenvalue with weight (1-x)^a (1+x)^b.

    The radicand returned is R / sigma' so that the square root gives
    t(1-t) sigma'' directly; it is reported as 0 (freeze) where sigma' = 0.
    """
    if N < 1 or not (a > -1 and b > -1):
        raise ParameterError("sigma_pvi needs N >= 1 and a, b > -1")
    v1 = v3 = N + 0.5 * (a + b)
    v2 = 0.5 * (a + b)
    v4 = 0.5 * (b - a)
    vs = (v1, v2, v3, v4)
    vprod = v1 * v2 * v3 * v4
    c0 = 0.5 * (v1 * v1 + v2 * v4)

    def radicand(t, sig, sp):
        if sp == 0.0:
            return 0.0
        prod = 1.0
        for v in vs:
            prod *= sp + v * v
        inner = sp * (2.0 * sig - (2.0 * t - 1.0) * sp) + vprod
        return (prod - inner * inner) / sp

    def prefactor(t, sig, sp):
        return t * (1.0 - t)

    params = {"N": N, "a": a, "b": b, "v1": v1, "v2": v2, "v3": v3, "v4": v4, "c0": c0}
    return SigmaForm(f"sigma-PVI(N={N}, a={a:g}, b={b:g})", params, radicand, prefactor, "pvi")


def y_of_s(s):
    """Stretched JUE variable y = -log(1 - s)."""
    return -np.log1p(-np.asarray(s, dtype=float))


def s_of_y(y):
    return -np.expm1(-np.asarray(y, dtype=float))


def form_for(spec: EnsembleSpec) -> SigmaForm:
    if spec.kind is Ensemble.GUE:
        return sigma_piv(spec.n)
    if spec.kind is Ensemble.LUE:
        return sigma_pv(spec.n, spec.alpha)
    return sigma_pvi(spec.n, spec.a, spec.b)


# --------------------------------------------------------------------------
# Windows and anchor counts
# --------------------------------------------------------------------------

# half-widths of the GUE windows used for the n = 5, 10, 20, 100, 500 runs
GUE_HALF_WIDTH = {5: 3.5, 10: 3.5, 20: 3.2, 100: 3.0, 500: 3.0}
# (M, #anchors) for the LUE runs
LUE_RUNS = {(100, 5.0): (280, 101), (50, 2.0): (260, 91), (20, 0.0): (240, 81), (10, 0.0): (220, 61)}


def _gue_half_width(n):
    if n in GUE_HALF_WIDTH:
        return GUE_HALF_WIDTH[n]
    if n < 20:
        return 3.5
    if n < 100:
        return 3.2
    return 3.0


def auto_window(spec: EnsembleSpec, config: NystromConfig | None = None, low=0.1, high=1.0 - 1e-8):
    """Spectral window for an anchored run.

    GUE: sqrt(2n) +- W. LUE: mu +- 6 N^(1/3) with mu = (sqrt(N) + sqrt(N + alpha))^2.
    JUE: solve F(s_min) = low and F(s_max) = high on the Fredholm CDF.
    """
    if spec.kind is Ensemble.GUE:
        centre = math.sqrt(2.0 * spec.n)
        w = _gue_half_width(spec.n)
        return (centre - w, centre + w)
    if spec.kind is Ensemble.LUE:
        mu = (math.sqrt(spec.n) + math.sqrt(spec.n + spec.alpha)) ** 2
        half = 6.0 * spec.n ** (1.0 / 3.0)
        return (max(mu - half, 1e-9), mu + half)
    config = config or default_config(spec)

    def g(y, target):
        return upper_gap_logdet(spec, float(s_of_y(y)), config).value - math.log(target)

    # solve in y = -log(1 - s): the upper target sits within ~1e-10 of s = 1
    lo, hi = float(y_of_s(-1.0 + 1e-12)), float(y_of_s(1.0 - 1e-15))
    out = []
    for target in (low, high):
        try:
            y = brentq(g, lo, hi, args=(target,), xtol=1e-9, rtol=1e-14)
        except ValueError as exc:
            raise WindowError(f"target F = {target} unreachable in (-1, 1)") from exc
        out.append(float(s_of_y(y)))
    return tuple(out)


def run_config(spec: EnsembleSpec) -> NystromConfig:
    """Fredholm settings for anchor extraction; LUE uses the tabulated M per run."""
    config = default_config(spec)
    if spec.kind is Ensemble.LUE:
        key = (spec.n, float(spec.alpha))
        if key in LUE_RUNS:
            config = dataclasses.replace(config, nodes=LUE_RUNS[key][0])
    return config


def default_anchor_count(spec: EnsembleSpec, window) -> int:
    if spec.kind is Ensemble.GUE:
        return int(round(80 * (window[1] - window[0]) / 6.0))
    if spec.kind is Ensemble.LUE:
        key = (spec.n, float(spec.alpha))
        if key in LUE_RUNS:
            return LUE_RUNS[key][1]
        return 81
    return 81


# --------------------------------------------------------------------------
# Anchored run
# --------------------------------------------------------------------------


@dataclass
class AnchoredRun:
    anchors: list
    grid: np.ndarray
    sigma_on_grid: np.ndarray
    F_on_grid: np.ndarray
    branch_signs: list
    logF_on_grid: np.ndarray = None
    frozen_intervals: list = field(default_factory=list)
    form_label: str = ""
    anchor_index: np.ndarray = None
    unanchored_below: float | None = None
    tail_frontier: float | None = None

    def curve(self, method="anchored"):
        order = np.argsort(self.grid)
        return GapCurve(self.grid[order], self.F_on_grid[order], self.logF_on_grid[order], method)


def _anchor_positions(spec, form, window, n_anchors):
    s_min, s_max = window
    if form.kind == "pvi":
        ys = np.linspace(y_of_s(s_max), y_of_s(s_min), n_anchors)
        pos = s_of_y(ys)
        pos[0], pos[-1] = s_max, s_min
        return pos
    return np.linspace(s_max, s_min, n_anchors)


def _stencil_halfwidths(positions, upper=None):
    """min(0.15, spacing/3) per anchor, spacing taken to the nearer neighbour.

    With a finite upper support end the stencil also stays a third of the
    distance to it, so it never straddles the kink of log F there.
    """
    positions = np.asarray(positions, dtype=float)
    gaps = np.abs(np.diff(positions))
    if gaps.size == 0:
        local = np.array([1.0])
    else:
        local = np.minimum(np.r_[gaps, np.inf], np.r_[np.inf, gaps])
    hw = np.minimum(0.15, local / 3.0)
    if upper is not None:
        hw = np.minimum(hw, (upper - positions) / 3.0)
    return hw


def anchored_cdf(
    spec: EnsembleSpec,
    form: SigmaForm | None = None,
    window=None,
    n_anchors: int | None = None,
    grid_size: int = 600,
    eps_init: float = EPS_INIT,
    config: NystromConfig | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-13,
    anchors: list | None = None,
) -> AnchoredRun:
    """Reconstruct F on ``window`` from anchored sigma-form integration.

    Pass ``anchors`` to reuse previously extracted Cauchy data (they must be
    in descending order and span the window).
    """
    form = form or form_for(spec)
    config = config or run_config(spec)
    window = window or auto_window(spec, config)
    s_min, s_max = window
    if anchors is None:
        n_anchors = n_anchors or default_anchor_count(spec, window)
        if n_anchors < 2:
            raise ParameterError("need at least two anchors")
        positions = _anchor_positions(spec, form, window, n_anchors)
        upper = 1.0 if spec.kind is Ensemble.JUE else None
        hw = _stencil_halfwidths(positions, upper)
        anchors = _extract_resolvable(spec, positions, hw, config)
    else:
        anchors = sorted(anchors, key=lambda a: -a.s)
        s_max, s_min = anchors[0].s, anchors[-1].s
    positions = np.array([a.s for a in anchors])

    base = np.linspace(s_max, s_min, grid_size)
    grid = np.unique(np.concatenate([base, positions]))[::-1]
    anchor_index = np.searchsorted(-grid, -positions)

    tail = anchors[-1].s > s_min
    anchor_stops = list(anchor_index)
    if tail:
        anchor_stops.append(len(grid) - 1)
    slope = np.empty_like(grid)
    signs, frozen_flags = [], []
    tail_reached = None
    for j in range(len(anchor_stops) - 1):
        right = anchors[j]
        left_s = grid[anchor_stops[j + 1]]
        i0, i1 = anchor_stops[j], anchor_stops[j + 1]
        sign = branch_sign(right.sigma_second if form.kind == "piv" else _natural_curvature(form, right), eps_init)
        signs.append(sign)
        u0, u1, _ = form.lift(right.s, right.sigma, right.sigma_prime, right.sigma_second)
        f, frozen = form.rhs(sign)
        z0, z1 = form.variable(right.s), form.variable(left_s)
        sol = integrate(IvpProblem(f, z0, z1, np.array([u0, u1]), rtol=rtol, atol=atol))
        pts = grid[i0 : i1 + 1]
        is_tail = j == len(anchors) - 1
        if sol.terminated_early:
            if not is_tail:
                raise BranchFailure(
                    f"integrator collapsed in anchor interval {j}",
                    interval=(left_s, right.s),
                    s_reached=form.from_variable(sol.s_reached),
                )
            # unanchored tail: hold the last reachable slope beyond the frontier
            tail_reached = form.from_variable(sol.s_reached)
            pts = np.maximum(pts, tail_reached) if tail_reached <= right.s else pts
        zs = np.array([form.variable(s) for s in pts])
        states = sol.sample(zs)
        slope[i0 : i1 + 1] = form.state_to_slope(pts, states)
        frozen_flags.append(frozen["count"] > 0)
    # reprojection: every anchor carries its own fitted slope exactly
    for a, idx in zip(anchors, anchor_index):
        slope[idx] = a.sigma

    # trapezoid from the base anchor (largest s) downwards
    log_base = anchors[0].c[0]
    steps = 0.5 * (slope[:-1] + slope[1:]) * (grid[:-1] - grid[1:])
    log_f = log_base - np.concatenate([[0.0], np.cumsum(steps)])
    log_f = np.minimum(log_f, 0.0)
    F = np.clip(np.exp(log_f), 0.0, 1.0)
    return AnchoredRun(
        anchors=list(anchors),
        grid=grid,
        sigma_on_grid=slope,
        F_on_grid=F,
        branch_signs=signs,
        logF_on_grid=log_f,
        frozen_intervals=frozen_flags,
        form_label=form.label,
        anchor_index=anchor_index,
        unanchored_below=anchors[-1].s if tail else None,
        tail_frontier=tail_reached,
    )


def _safe_extract(spec, s, hw, config):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditionedAnchorWarning)
        try:
            return extract_anchor(spec, s, hw, STENCIL_POINTS, config)
        except AnchorPlacementError:
            return None


def _extract_resolvable(spec, positions, hw, config):
    """Anchors from the right down to the first one double precision cannot resolve."""
    data = parallel_map(lambda sh: _safe_extract(spec, float(sh[0]), float(sh[1]), config), zip(positions, hw))
    good = []
    for d in data:
        if d is None or d.residual_rms > UNRESOLVED_RMS:
            break
        if d.ill_conditioned:
            warnings.warn(
                f"anchor at s={d.s}: fit residual {d.residual_rms:.2e}", IllConditionedAnchorWarning, stacklevel=3
            )
        good.append(d)
    if len(good) < 2:
        raise AnchorPlacementError("fewer than two resolvable anchors in the window")
    return good


def _natural_curvature(form, datum):
    return form.lift(datum.s, datum.sigma, datum.sigma_prime, datum.sigma_second)[2]


def max_error_vs_fredholm(run: AnchoredRun, spec: EnsembleSpec, config: NystromConfig | None = None):
    """(max |F_anchored - F_Fredholm| over the run grid, Fredholm curve)."""
    ref = gap_cdf(spec, run.grid, config or default_config(spec))
    return float(np.max(np.abs(run.F_on_grid - ref.F))), ref


# --------------------------------------------------------------------------
# Instability demonstrations
# --------------------------------------------------------------------------


@dataclass
class DirectIvpReport:
    curve: GapCurve
    frontiers: dict
    terminated_early: bool
    max_error: float
    window: tuple


def direct_ivp_demo(
    spec: EnsembleSpec,
    form: SigmaForm | None = None,
    s0: float | None = None,
    window=None,
    config: NystromConfig | None = None,
    grid_size: int = 400,
    anchor: AnchorDatum | None = None,
    rtol: float = 1e-10,
):
    """Shoot the sigma-form from one anchor at s0, forwards and backwards.

    No reprojection. The report carries the covered span, the early
    termination frontiers, and the max error against the Fredholm CDF over
    the covered part of the window.
    """
    form = form or form_for(spec)
    config = config or default_config(spec)
    if s0 is None:
        s0 = math.sqrt(2.0 * spec.n)
    window = window or auto_window(spec, config)
    datum = anchor or extract_anchor(spec, s0, 0.15, STENCIL_POINTS, config)
    sign = branch_sign(datum.sigma_second if form.kind == "piv" else _natural_curvature(form, datum))
    u0, u1, _ = form.lift(datum.s, datum.sigma, datum.sigma_prime, datum.sigma_second)
    frontiers = {}
    pieces = {}
    for name, target in (("forward", window[1]), ("backward", window[0])):
        f, _ = form.rhs(sign)
        sol = integrate(
            IvpProblem(f, form.variable(datum.s), form.variable(target), np.array([u0, u1]), rtol=rtol, atol=1e-13)
        )
        reached = form.from_variable(sol.s_reached)
        frontiers[name] = reached
        pieces[name] = (sol, reached, sol.terminated_early)
    lo = pieces["backward"][1]
    hi = pieces["forward"][1]
    grid = np.linspace(lo, hi, grid_size)
    grid = np.unique(np.concatenate([grid, [datum.s]]))
    slope = np.empty_like(grid)
    for name, mask in (("forward", grid >= datum.s), ("backward", grid <= datum.s)):
        sol = pieces[name][0]
        zs = np.array([form.variable(s) for s in grid[mask]])
        slope[mask] = form.state_to_slope(grid[mask], sol.sample(zs))
    i0 = int(np.searchsorted(grid, datum.s))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (slope[:-1] + slope[1:]) * np.diff(grid))])
    log_f = datum.c[0] + cum - cum[i0]
    curve = GapCurve.from_logs(grid, log_f, "direct-ivp")
    ref = gap_cdf(spec, grid, config)
    with np.errstate(invalid="ignore"):
        err = float(np.nanmax(np.abs(curve.F - ref.F)))
    terminated = pieces["forward"][2] or pieces["backward"][2]
    return DirectIvpReport(curve, frontiers, terminated, err, tuple(window))


def okamoto_rhs(n, alpha1=0.0, alpha2=None):
    """Hamilton equations for H = (2p - q - 2t) p q - 2 alpha1 p - alpha2 q."""
    alpha2 = -float(n) if alpha2 is None else alpha2

    def f(t, u):
        q, p = u
        return np.array([q * (4.0 * p - q - 2.0 * t) - 2.0 * alpha1, 2.0 * p * (q + t - p) + alpha2])

    return f


def okamoto_initial_data(spec: EnsembleSpec, s0: float, config: NystromConfig | None = None, root: str = "small"):
    """(q0, p0) matching H' = sigma' and H'' = sigma'' at s0.

    With alpha1 = 0, alpha2 = -n one has H' = -2pq and
    H'' = -2 q (pq + 2 p^2 - n) ... which, with u = pq = -sigma'/2, gives the
    quadratic 2(u - n) q^2 + sigma'' q + 4 u^2 = 0. ``root`` picks the
    smaller or larger |q|.
    """
    if spec.kind is not Ensemble.GUE:
        raise ParameterError("Okamoto data are defined for GUE only")
    datum = extract_anchor(spec, s0, 0.15, STENCIL_POINTS, config)
    n = spec.n
    u = -0.5 * datum.sigma_prime
    roots = np.roots([2.0 * (u - n), datum.sigma_second, 4.0 * u * u])
    roots = roots[np.isreal(roots)].real
    if roots.size == 0:
        raise ParameterError("no real (q, p) matches the Fredholm data")
    roots = roots[np.argsort(np.abs(roots))]
    q0 = float(roots[0] if root == "small" else roots[-1])
    return q0, u / q0


def okamoto_hamiltonian_ivp(n: int, s0: float, q0: float, p0: float, s_target: float, rtol: float = 1e-10) -> IvpSolution:
    """Integrate Okamoto's P_IV Hamiltonian system with (alpha1, alpha2) = (0, -n)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return integrate(IvpProblem(okamoto_rhs(n), s0, s_target, np.array([q0, p0]), rtol=rtol, atol=1e-13))
