"""Error law tests: mass, log-moments, sampling law, density bound constants."""
import numpy as np
import pytest
from scipy import integrate

from rifslab import ConfigError, PerturbedUniform, PiecewiseDensity, PowerLaw
from rifslab.error_laws import law_from_dict, log_uniform_tabulation

ALL_LAWS = [
    PerturbedUniform(),
    PerturbedUniform(0.3),
    PerturbedUniform(0.1, eps2=0.25),
    PowerLaw(0.7),
    PowerLaw(3.0),
    PiecewiseDensity([0.5, 1.0, 2.0], [0.8, 0.6]),
    # coarse tabulation: adaptive quadrature cannot chase 400 cell edges
    log_uniform_tabulation(cells=32),
]
IDS = ["pu-bal", "pu-bal-wide", "pu-fixed", "pow-0.7", "pow-3", "piecewise", "log-uni"]


def _cell_edges(law):
    # hint quad about density discontinuities, where the law has any
    return list(getattr(law, "breakpoints", []))


@pytest.mark.parametrize("law", ALL_LAWS, ids=IDS)
def test_density_integrates_to_one(law):
    lo, hi = law.support()
    lo = max(lo, 1e-12)  # power laws have an integrable singularity at 0
    mass, err = integrate.quad(law.density, lo, hi, limit=400, points=_cell_edges(law))
    assert err < 1e-8
    assert abs(mass - 1.0) < 1e-6


@pytest.mark.parametrize("theta", [0.5, 1.0, 4.0])
def test_power_law_log_mean_against_quadrature(theta):
    law = PowerLaw(theta)
    val, _ = integrate.quad(
        lambda x: np.log(x) * law.density(x), 1e-14, 1.0, limit=400
    )
    assert abs(law.log_mean() - (-1.0 / theta)) < 1e-12
    assert abs(val - law.log_mean()) < 1e-6


def test_perturbed_uniform_balance():
    law = PerturbedUniform(0.1)
    assert law.log_mean() == 0.0
    lo, hi = law.support()
    assert lo == pytest.approx(0.9)
    assert hi > 1.1  # the right half must be wider to balance log concavity
    val, _ = integrate.quad(lambda x: np.log(x) * law.density(x), lo, hi)
    assert abs(val) < 1e-10


def test_perturbed_uniform_explicit_eps2():
    law = PerturbedUniform(0.1, eps2=0.4)
    val, _ = integrate.quad(lambda x: np.log(x) * law.density(x), *law.support())
    assert abs(law.log_mean() - val) < 1e-10
    assert law.log_mean() > 0


@pytest.mark.parametrize("law", ALL_LAWS, ids=IDS)
def test_cdf_matches_integrated_density(law):
    lo, hi = law.support()
    lo = max(lo, 1e-12)
    for q in (0.21, 0.5, 0.87):
        x = lo + q * (hi - lo)
        pts = [p for p in _cell_edges(law) if lo < p < x]
        val, _ = integrate.quad(law.density, lo, x, limit=400, points=pts)
        assert abs(law.cdf(x) - val) < 1e-6
    assert law.cdf(lo - 1.0) == 0.0
    assert law.cdf(hi + 1.0) == 1.0


@pytest.mark.parametrize("law", ALL_LAWS, ids=IDS)
def test_sampling_matches_cdf(law):
    # Kolmogorov-Smirnov at the 1% critical value 1.63/sqrt(n)
    n = 100_000
    x = np.sort(law.sample(np.random.default_rng(2024), size=n))
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    F = law.cdf(x)
    ks = max(np.max(np.abs(F - emp_hi)), np.max(np.abs(F - emp_lo)))
    assert ks < 1.63 / np.sqrt(n)
    lo, hi = law.support()
    assert x[0] >= lo and x[-1] <= hi


def test_log_uniform_tabulation_log_mean():
    assert abs(log_uniform_tabulation().log_mean()) < 1e-5  # default 400 cells
    law2 = log_uniform_tabulation(center=2.0, half_width=0.5, cells=600)
    assert abs(law2.log_mean() - np.log(2.0)) < 1e-6
    lo, hi = law2.support()
    assert lo == pytest.approx(2.0 * np.exp(-0.5))
    assert hi == pytest.approx(2.0 * np.exp(0.5))


@pytest.mark.parametrize("law", ALL_LAWS, ids=IDS)
def test_density_bound_constant_is_tight_sup(law):
    lo, hi = law.support()
    x = np.linspace(max(lo, 1e-9), hi, 20_001)
    xf = x * law.density(x)
    C = law.density_bound_constant()
    assert np.max(xf) <= C * (1 + 1e-9)
    assert np.max(xf) >= 0.999 * C


def test_power_law_bounded_variation_flag():
    # the density x**(theta-1) blows up at 0 below theta = 1
    assert PowerLaw(0.5).density_bounded_variation is False
    assert PowerLaw(1.0).density_bounded_variation is True
    assert PowerLaw(2.5).density_bounded_variation is True
    assert PerturbedUniform().density_bounded_variation is True


def test_piecewise_validation():
    with pytest.raises(ConfigError):
        PiecewiseDensity([0.5, 1.0, 2.0], [1.0, 1.0])  # mass 1.5
    with pytest.raises(ConfigError):
        PiecewiseDensity([1.0, 0.5], [2.0])  # decreasing breakpoints
    with pytest.raises(ConfigError):
        PiecewiseDensity([0.0, 1.0], [-1.0])
    with pytest.raises(ConfigError):
        PiecewiseDensity([-0.5, 0.5], [1.0])  # negative support
    with pytest.raises(ConfigError):
        PowerLaw(0.0)
    with pytest.raises(ConfigError):
        PerturbedUniform(1.5)


@pytest.mark.parametrize("law", ALL_LAWS, ids=IDS)
def test_law_round_trips_through_describe(law):
    clone = law_from_dict(law.describe())
    assert clone == law
    assert clone.log_mean() == pytest.approx(law.log_mean(), abs=1e-12)


def test_law_from_dict_unknown_kind():
    with pytest.raises(ConfigError):
        law_from_dict({"kind": "gamma"})


def test_sample_stream_is_prefix_stable():
    """One uniform per draw: regenerating a longer stream reproduces the prefix."""
    for law in ALL_LAWS:
        seed = np.random.SeedSequence(33)
        a = law.sample(np.random.default_rng(seed), size=100)
        b = law.sample(np.random.default_rng(seed), size=250)
        assert np.array_equal(a, b[:100])
