import math

import numpy as np
import pytest
from scipy import special

from rmtgap.errors import ParameterError
from rmtgap.fredholm import (
    KernelOracle,
    NystromConfig,
    airy_gap_cdf,
    bessel_gap_cdf,
    cd_oracle,
    default_config,
    gap_cdf,
    interval_logdet,
    nystrom_logdet,
    upper_gap_logdet,
)
from rmtgap.orthopoly import EnsembleSpec, phi_matrix
from rmtgap.quadrature import gauss_legendre, map_affine


@pytest.mark.parametrize("s", [-2.0, -0.5, 0.0, 0.7, 2.5])
def test_gue_n1_is_erf(s):
    got = math.exp(upper_gap_logdet(EnsembleSpec.gue(1), s).value)
    assert got == pytest.approx(0.5 * (1 + math.erf(s)), abs=1e-8)


@pytest.mark.parametrize("s", [0.1, 1.0, 3.0, 8.0])
def test_lue_n1_is_exponential(s):
    got = math.exp(upper_gap_logdet(EnsembleSpec.lue(1, 0.0), s).value)
    assert got == pytest.approx(1 - math.exp(-s), abs=1e-8)


@pytest.mark.parametrize("s", [-0.9, -0.2, 0.5, 0.95])
def test_jue_n1_is_uniform(s):
    got = math.exp(upper_gap_logdet(EnsembleSpec.jue(1), s).value)
    assert got == pytest.approx((1 + s) / 2, abs=1e-8)


@pytest.mark.parametrize("N,b", [(5, 0.0), (20, 0.0), (12, 3.0)])
def test_jue_a0_scaling_identity(N, b):
    # with a = 0 the gap probability is a pure dilation: ((1 + s)/2)^{N(N + b)}
    spec = EnsembleSpec.jue(N, 0.0, b)
    for target in (-0.5, -5.0, -20.0):
        s = 2 * math.exp(target / (N * (N + b))) - 1
        assert upper_gap_logdet(spec, s).value == pytest.approx(target, abs=1e-8)


def test_rank_one_kernel():
    # K = f(x) f(y) with int f^2 = 1/2 gives det = 1/2
    c = math.sqrt(0.5)
    k = KernelOracle(lambda x, y: c * c * np.ones(np.broadcast(x, y).shape), "const")
    assert nystrom_logdet(k, map_affine(gauss_legendre(20), 0, 1)).value == pytest.approx(math.log(0.5), abs=1e-14)


def test_zero_kernel():
    k = KernelOracle(lambda x, y: np.zeros(np.broadcast(x, y).shape), "zero")
    res = nystrom_logdet(k, gauss_legendre(16))
    assert res.value == 0.0 and not res.nonpositive


def test_nonpositive_flag():
    k = KernelOracle(lambda x, y: np.ones(np.broadcast(x, y).shape), "one")
    assert nystrom_logdet(k, gauss_legendre(16)).nonpositive


def test_tw_moments_from_fredholm():
    # widely tabulated: mean -1.7710868074, variance 0.8131947928; the
    # central-difference density biases the variance by exactly h^2/3
    h = 0.01
    x = np.linspace(-9.0, 6.0, 1501)
    F = airy_gap_cdf(x, 60).F
    d = np.gradient(F, x)
    mean = np.trapezoid(x * d, x)
    var = np.trapezoid(x * x * d, x) - mean**2
    assert mean == pytest.approx(-1.7710868074, abs=1e-5)
    assert var - h * h / 3 == pytest.approx(0.8131947928, abs=1e-6)


def test_airy_self_convergence():
    x = np.array([-6.0, -3.0, -1.0, 0.0, 2.0, 4.0])
    a = airy_gap_cdf(x, 80).logF
    b = airy_gap_cdf(x, 160).logF
    assert np.max(np.abs(a - b)) <= 1e-8


def test_bessel_order_zero_exponential():
    s = np.array([0.0, 0.5, 2.0, 8.0, 15.0])
    assert np.allclose(bessel_gap_cdf(0.0, s).F, np.exp(-s / 4), rtol=1e-9, atol=0)


def test_bessel_small_s_expansion():
    # E(s) = 1 - s^{a+1} / (4^{a+1} Gamma(a+2)^2) + O(s^{a+2})
    for alpha in (0.5, 2.0, 3.0):
        s = 1e-3
        lead = s ** (alpha + 1) / (4 ** (alpha + 1) * special.gamma(alpha + 2) ** 2)
        got = 1 - bessel_gap_cdf(alpha, np.array([s])).F[0]
        assert got == pytest.approx(lead, rel=2e-3)


def test_bessel_tiny_gap_near_one():
    assert bessel_gap_cdf(2.0, np.array([1e-6])).F[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        bessel_gap_cdf(1.0, np.array([-1.0]))


@pytest.mark.parametrize(
    "spec,grid",
    [
        (EnsembleSpec.gue(10), np.linspace(1.0, 7.0, 25)),
        (EnsembleSpec.lue(10, 2.0), np.linspace(20.0, 70.0, 25)),
        (EnsembleSpec.jue(10, 2.0, 3.0), np.linspace(0.2, 0.999, 25)),
    ],
    ids=["gue", "lue", "jue"],
)
def test_monotone_and_limit(spec, grid):
    curve = gap_cdf(spec, grid)
    assert np.all(np.diff(curve.F) >= -1e-9)
    assert curve.F[-1] >= 1 - 1e-7 or spec.kind.value == "JUE"
    assert not curve.flags.any()


@pytest.mark.parametrize(
    "spec,grid",
    [
        (EnsembleSpec.gue(20), np.linspace(2.5, 9.0, 9)),
        (EnsembleSpec.lue(20, 0.0), np.linspace(60.0, 110.0, 9)),
        (EnsembleSpec.jue(20, 1.0, 2.0), np.linspace(0.5, 0.99, 9)),
    ],
    ids=["gue", "lue", "jue"],
)
def test_resolution_doubling(spec, grid):
    cfg = default_config(spec)
    a = gap_cdf(spec, grid, cfg)
    b = gap_cdf(spec, grid, cfg.doubled())
    mask = (a.F >= 1e-8) & (a.F <= 1 - 1e-12)
    assert mask.any()
    assert np.max(np.abs(a.logF[mask] - b.logF[mask])) <= 1e-7


@pytest.mark.parametrize("n,m", [(5, 40), (30, 120), (200, 200)])
def test_gram_nystrom_consistency(n, m):
    spec = EnsembleSpec.jue(n, 1.0, 2.0)
    # a window near the edge where det is O(e^-3): no catastrophic digits lost
    lo = 1.0 - 6.0 / n**2
    rule = map_affine(gauss_legendre(m), lo, 1.0)
    phi = phi_matrix(spec, rule.nodes, n - 1) * np.sqrt(rule.weights)
    small = np.linalg.slogdet(np.eye(n) - phi @ phi.T)
    big = np.linalg.slogdet(np.eye(m) - phi.T @ phi)
    assert small[1] == pytest.approx(big[1], rel=1e-10)
    assert interval_logdet(spec, lo, 1.0, m).value == pytest.approx(small[1], rel=1e-10)


def test_cd_oracle_matches_gram_route():
    spec = EnsembleSpec.jue(8, 2.0, 0.0)
    rule = map_affine(gauss_legendre(80), 0.2, 1.0)
    via_cd = nystrom_logdet(cd_oracle(spec), rule).value
    assert via_cd == pytest.approx(interval_logdet(spec, 0.2, 1.0, 80).value, rel=1e-10)


def test_config_validation():
    with pytest.raises(ParameterError):
        NystromConfig(nodes=8)
    with pytest.raises(ParameterError):
        NystromConfig(nodes=5000)
    assert NystromConfig(nodes=1500).doubled().nodes == 2000
