import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtgap.anchored import (
    AnchorDatum,
    anchored_cdf,
    auto_window,
    branch_sign,
    extract_anchor,
    fit_log_cdf,
    form_for,
    max_error_vs_fredholm,
    okamoto_rhs,
    s_of_y,
    sigma_piv,
    sigma_piv_perturbed,
    sigma_pv,
    sigma_pvi,
    y_of_s,
)
from rmtgap.errors import AnchorPlacementError, ParameterError
from rmtgap.orthopoly import EnsembleSpec
from rmtgap.sigmaode import IvpProblem, integrate


@pytest.fixture(scope="module")
def gue5():
    spec = EnsembleSpec.gue(5)
    run = anchored_cdf(spec)
    err, ref = max_error_vs_fredholm(run, spec)
    return spec, run, err, ref


# -- anchors -------------------------------------------------------------


def test_fit_recovers_quartic_exactly():
    coef = (0.3, -1.2, 0.5, 0.25, -0.1)
    u = np.linspace(-0.2, 0.2, 9)
    vals = sum(c * u**k for k, c in enumerate(coef))
    got, rms = fit_log_cdf(0.0, u, vals)
    assert np.allclose(got, coef, rtol=1e-10, atol=1e-12)
    assert rms < 1e-14


def test_anchor_gue_n1_closed_form():
    s = 0.5
    d = extract_anchor(EnsembleSpec.gue(1), s, stencil_halfwidth=0.1)
    assert d.sigma == pytest.approx(2 / math.sqrt(math.pi) * math.exp(-s * s) / (1 + math.erf(s)), abs=1e-6)
    assert d.F == pytest.approx(math.exp(d.c[0]), rel=1e-12)
    assert d.F == pytest.approx(0.5 * (1 + math.erf(s)), abs=1e-8)


def test_anchor_lue_n1_closed_form():
    d = extract_anchor(EnsembleSpec.lue(1, 0.0), 1.0, stencil_halfwidth=0.05)
    assert d.sigma == pytest.approx(math.exp(-1) / (1 - math.exp(-1)), abs=1e-6)


def test_anchor_constant_log():
    d = extract_anchor(EnsembleSpec.gue(3), 2.0, log_cdf=lambda s: np.full(s.shape, -0.5))
    assert abs(d.sigma) < 1e-14 and abs(d.sigma_prime) < 1e-14
    assert d.F == pytest.approx(math.exp(-0.5))


def test_anchor_placement_errors():
    with pytest.raises(AnchorPlacementError):
        extract_anchor(EnsembleSpec.gue(3), 0.0, log_cdf=lambda s: np.full(s.shape, -700.0))
    with pytest.raises(ParameterError):
        extract_anchor(EnsembleSpec.gue(3), 0.0, stencil_points=6)


def test_branch_sign_rule():
    assert branch_sign(0.0) == 1
    assert branch_sign(-0.3, 1e-8) == -1
    assert branch_sign(5e-9, 1e-8) == 1
    assert branch_sign(2e-8, 1e-8) == 1
    assert branch_sign(-2e-8, 1e-8) == -1
    datum = AnchorDatum(1.0, 0.5, (math.log(0.5), 0.1, 0.2, -0.5, 0.0))
    assert branch_sign(datum) == -1


# -- sigma forms -----------------------------------------------------------


def test_piv_radicand_examples():
    form = sigma_piv(4)
    assert form.radicand(1.7, 0.0, 0.0) == 0.0
    assert form.radicand(2.0, 1.0, 0.0) == 4.0
    assert sigma_piv_perturbed(4, "shift_001").radicand(3.0, 0.0, 0.0) == 0.0
    with pytest.raises(ParameterError):
        sigma_piv_perturbed(4, "nope")
    with pytest.raises(ParameterError):
        sigma_piv(0)


def test_piv_along_n1_closed_form():
    # sigma = (log F)' with F = (1 + erf s)/2 satisfies sigma' = -2 s sigma - sigma^2
    form = sigma_piv(1)
    for s in np.linspace(-1.0, 2.0, 31):
        sig = 2 / math.sqrt(math.pi) * math.exp(-s * s) / (1 + math.erf(s))
        sp = -2 * s * sig - sig * sig
        spp = -2 * sig - 2 * s * sp - 2 * sig * sp
        assert abs(spp * spp - form.radicand(s, sig, sp)) <= 1e-6


def test_pv_trivial_point():
    assert sigma_pv(10, 2.0).radicand(5.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_variable_maps():
    assert y_of_s(0.0) == 0.0
    assert y_of_s(1 - math.exp(-3.0)) == pytest.approx(3.0, rel=1e-14)
    assert s_of_y(3.0) == pytest.approx(1 - math.exp(-3.0), rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-0.95, 0.95),
    st.floats(0.01, 5.0),
    st.floats(-5.0, 5.0),
    st.floats(-5.0, 5.0),
    st.sampled_from(["pv", "pvi"]),
)
def test_lift_and_slope_roundtrip(s, d1, d2, d3, kind):
    form = sigma_pvi(6, 1.0, 2.0) if kind == "pvi" else sigma_pv(6, 1.0)
    if kind == "pv":
        s = 3.0 + s
    sig, _, _ = form.lift(s, d1, d2, d3)
    assert form.log_slope(s, sig) == pytest.approx(d1, rel=1e-9, abs=1e-12)


def test_form_for_dispatch():
    assert form_for(EnsembleSpec.gue(3)).kind == "piv"
    assert form_for(EnsembleSpec.lue(3, 1.0)).kind == "pv"
    assert form_for(EnsembleSpec.jue(3, 1.0, 0.0)).kind == "pvi"


# -- windows ---------------------------------------------------------------


def test_auto_window_examples():
    lo, hi = auto_window(EnsembleSpec.jue(1))
    assert lo == pytest.approx(-0.8, abs=1e-6)
    assert hi == pytest.approx(1 - 2e-8, abs=1e-6)
    lo, hi = auto_window(EnsembleSpec.gue(20))
    assert 0.5 * (lo + hi) == pytest.approx(math.sqrt(40), abs=1e-12)


# -- anchored run ------------------------------------------------------------


def test_reprojection_exact(gue5):
    _, run, _, _ = gue5
    for a, idx in zip(run.anchors, run.anchor_index):
        assert run.grid[idx] == a.s
        assert run.sigma_on_grid[idx] == a.sigma


def test_run_shape(gue5):
    _, run, err, _ = gue5
    assert np.all(np.diff(run.grid) < 0)
    assert np.all([a.s for a in run.anchors] == -np.sort(-np.array([a.s for a in run.anchors])))
    assert len(run.branch_signs) == len(run.anchors) - 1
    assert set(run.branch_signs) <= {-1, 1}
    assert np.all((run.F_on_grid >= 0) & (run.F_on_grid <= 1 + 1e-9))
    assert np.all(np.diff(run.F_on_grid[::-1]) >= -1e-6)
    assert err <= 2 * 1.01e-3


def test_branch_sign_constant_in_interval(gue5):
    # the integrated sigma'' never takes the opposite sign inside an interval
    spec, run, _, _ = gue5
    form = sigma_piv(spec.n)
    for j in range(0, len(run.anchors) - 1, 7):
        a, b = run.anchors[j], run.anchors[j + 1]
        f, _ = form.rhs(run.branch_signs[j])
        sol = integrate(IvpProblem(f, a.s, b.s, [a.sigma, a.sigma_prime], rtol=1e-10, atol=1e-13))
        for s in np.linspace(b.s, a.s, 9):
            acc = f(s, sol.sample(s))[1]
            assert acc * run.branch_signs[j] >= 0


def test_sigma_form_residual_on_run(gue5):
    spec, run, _, _ = gue5
    form = sigma_piv(spec.n)
    h = 1e-3
    for j in range(0, len(run.anchors) - 1, 5):
        a, b = run.anchors[j], run.anchors[j + 1]
        f, _ = form.rhs(run.branch_signs[j])
        sol = integrate(IvpProblem(f, a.s, b.s, [a.sigma, a.sigma_prime], rtol=1e-10, atol=1e-13))
        m = 0.5 * (a.s + b.s)
        sp_plus, sp_minus = sol.sample(m + h)[1], sol.sample(m - h)[1]
        spp = (sp_plus - sp_minus) / (2 * h)
        sig, sp = sol.sample(m)
        r = form.radicand(m, sig, sp)
        assert abs(spp * spp - r) <= 1e-5 * (1 + abs(r))


def test_freeze_locality(gue5):
    _, run, _, ref = gue5
    for j, frozen in enumerate(run.frozen_intervals):
        if frozen:
            lo, hi = run.anchors[j + 1].s, run.anchors[j].s
            mask = (run.grid >= lo) & (run.grid <= hi)
            assert np.all((ref.F[mask] < 1e-6) | (ref.F[mask] > 1 - 1e-6))


def test_synthetic_zero_sigma():
    spec = EnsembleSpec.gue(4)
    anchors = [
        extract_anchor(spec, s, log_cdf=lambda x: np.full(x.shape, -0.25)) for s in (4.0, 3.0, 2.0, 1.0)
    ]
    run = anchored_cdf(spec, anchors=anchors, grid_size=50)
    assert np.allclose(run.F_on_grid, math.exp(-0.25), rtol=0, atol=1e-14)
    assert np.max(np.abs(run.sigma_on_grid)) <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_piv_tail_asymptotics(n):
    s = math.sqrt(2 * n) + 3
    d = extract_anchor(EnsembleSpec.gue(n), s)
    lead = 2 ** (n - 1) / (math.sqrt(math.pi) * math.factorial(n - 1)) * s ** (2 * n - 2) * math.exp(-s * s)
    assert d.sigma == pytest.approx(lead, rel=0.2)


def test_anchor_density_sensitivity(gue5):
    spec, run, err, _ = gue5
    half = anchored_cdf(spec, n_anchors=len(run.anchors) // 2)
    quarter = anchored_cdf(spec, n_anchors=len(run.anchors) // 4)
    e_half = max_error_vs_fredholm(half, spec)[0]
    e_quarter = max_error_vs_fredholm(quarter, spec)[0]
    assert err <= e_half <= e_quarter


def test_jue_closed_form_run():
    # a = 0: F = ((1 + s)/2)^{N(N+b)} exactly
    spec = EnsembleSpec.jue(6, 0.0, 1.0)
    run = anchored_cdf(spec, n_anchors=31, grid_size=200)
    exact = ((1 + run.grid) / 2) ** (6 * 7)
    assert np.max(np.abs(run.F_on_grid - exact)) <= 1e-6


def test_lue_small_run():
    spec = EnsembleSpec.lue(5, 1.0)
    run = anchored_cdf(spec, n_anchors=41, grid_size=200)
    assert max_error_vs_fredholm(run, spec)[0] <= 1e-4


def test_too_few_anchors():
    with pytest.raises(ParameterError):
        anchored_cdf(EnsembleSpec.gue(3), n_anchors=1)


# -- Okamoto ----------------------------------------------------------------


def test_okamoto_q_zero_invariant():
    f = okamoto_rhs(20)
    for t in (-1.0, 2.0, 6.4):
        assert f(t, np.array([0.0, 0.7]))[0] == 0.0
