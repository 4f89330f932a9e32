"""Characteristic function and energy integral tests."""
import numpy as np
import pytest

from rifslab import (
    ConfigError,
    arratia_preset,
    characteristic_product,
    empirical_characteristic,
    energy_integral,
    sample_measure,
    sinai_preset,
    sobolev_dimension_estimate,
)
from rifslab.fourier import beta, default_xi_grid, energy_from_values
from rifslab.projection import ErrorRealization
from rifslab.seeds import ROLE_ADHOC, ROLE_ERRORS, seed_sequence, stream


def _arratia_y(theta=3.0, rep=0):
    cfg = arratia_preset(theta)
    return cfg, ErrorRealization.from_seed(cfg.law, seed_sequence(7, ROLE_ERRORS, rep))


def test_characteristic_product_at_zero_is_one():
    cfg, y = _arratia_y()
    xi = np.array([0.0, 3.0, -3.0])
    cp = characteristic_product(cfg.ifs, cfg.measure.symbol_marginal(), y, xi, 50)
    assert cp[0] == 1.0 + 0.0j
    assert np.all(np.abs(cp) <= 1.0 + 1e-12)


def test_characteristic_product_conjugate_symmetry():
    cfg, y = _arratia_y()
    xi = np.linspace(0.0, 25.0, 60)
    plus = characteristic_product(cfg.ifs, cfg.measure.symbol_marginal(), y, xi, 60)
    minus = characteristic_product(cfg.ifs, cfg.measure.symbol_marginal(), y, -xi, 60)
    assert np.array_equal(minus, np.conj(plus))


def test_characteristic_product_matches_sampled_batch():
    cfg, y = _arratia_y()
    batch = sample_measure(
        cfg.ifs, cfg.measure, cfg.law, y, 20_000, 1e-9, stream(7, ROLE_ADHOC, 50)
    )
    xi = np.linspace(0.0, 20.0, 41)
    cp = characteristic_product(cfg.ifs, cfg.measure.symbol_marginal(), y, xi, batch.depth)
    emp = empirical_characteristic(batch.values, xi)
    # Monte Carlo error only: the product is exact at the batch depth
    assert np.max(np.abs(cp - emp)) < 0.05


def test_characteristic_product_depth_stability():
    cfg, y = _arratia_y()
    p = cfg.measure.symbol_marginal()
    xi = np.linspace(0.0, 50.0, 26)
    a = characteristic_product(cfg.ifs, p, y, xi, 60)
    b = characteristic_product(cfg.ifs, p, y, xi, 90)
    assert np.max(np.abs(a - b)) < 1e-5


def test_characteristic_product_rejects_inhomogeneous_ratios():
    cfg = sinai_preset(0.5)
    y = ErrorRealization.from_seed(cfg.law, seed_sequence(7, ROLE_ERRORS, 0))
    with pytest.raises(ConfigError):
        characteristic_product(cfg.ifs, [0.5, 0.5], y, np.array([1.0]), 10)


def test_empirical_characteristic_equals_direct_mean():
    rng = np.random.default_rng(12)
    x = rng.random(100)
    xi = np.array([0.0, 1.0, 5.5, -2.0])
    direct = np.exp(1j * np.outer(x, xi)).mean(axis=0)
    got = empirical_characteristic(x, xi, chunk=7)  # force several chunks
    assert np.allclose(got, direct, atol=1e-13)
    assert got[0] == pytest.approx(1.0)


def test_beta_collision_probability():
    assert beta([0.5, 0.5]) == pytest.approx(0.5, abs=1e-15)
    assert beta([0.2, 0.8]) == pytest.approx(0.68, abs=1e-15)
    with pytest.raises(ConfigError):
        beta([0.5, 0.6])


def test_plancherel_energy_of_analytic_uniform_cf():
    """At order one the energy reduces to the squared L2 norm times 2 pi."""
    xi = default_xi_grid(1.0e3, 20_000)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(
            xi == 0, 1.0 + 0j, (np.exp(1j * xi) - 1.0) / np.where(xi == 0, 1.0, 1j * xi)
        )
    e1, last_decade = energy_from_values(np.abs(f) ** 2, xi, 1.0)
    assert abs(e1 - 2.0 * np.pi) / (2.0 * np.pi) < 0.02
    assert last_decade < 0.05


def test_default_xi_grid_properties():
    xi = default_xi_grid(1.0e3, 20_000)
    assert xi[0] == 0.0
    assert xi[-1] == pytest.approx(1.0e3)
    assert np.all(np.diff(xi) > 0)
    with pytest.raises(ConfigError):
        default_xi_grid(-1.0)
    with pytest.raises(ConfigError):
        default_xi_grid(10.0, nodes=4)


def test_energy_integral_convergence_flags():
    cfg, y = _arratia_y(theta=4.0)
    p = cfg.measure.symbol_marginal()
    low = energy_integral(cfg.ifs, p, y, 1.0, depth=64, xi_max=200.0, nodes=4000)
    assert low.converged is True
    assert low.value > 0
    assert low.alpha == 1.0
    high = energy_integral(cfg.ifs, p, y, 6.0, depth=64, xi_max=200.0, nodes=4000)
    assert high.converged is False  # integrand keeps growing with xi
    assert high.value > low.value


def test_sobolev_estimate_brackets_theory_bound():
    """Above the L2 threshold the converged smoothness order reaches the
    closed-form lower bound |log collision| / |log-contraction|."""
    cfg, y = _arratia_y(theta=4.0)
    p = cfg.measure.symbol_marginal()
    est = sobolev_dimension_estimate(
        cfg.ifs, p, cfg.law, y, depth=64, xi_max=500.0, nodes=8000
    )
    assert est.theory_bound == pytest.approx(4.0 * np.log(2.0), abs=1e-12)
    assert est.converged_any is True
    assert est.value >= est.theory_bound - 0.5
    alphas = [e.alpha for e in est.estimates]
    assert alphas == sorted(alphas)

    # far below the threshold nothing converges and the report says so
    cfg1, y1 = _arratia_y(theta=1.0)
    est1 = sobolev_dimension_estimate(
        cfg1.ifs, cfg1.measure.symbol_marginal(), cfg1.law, y1,
        depth=64, xi_max=500.0, nodes=8000,
    )
    assert est1.converged_any is False
