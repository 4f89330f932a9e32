"""Characteristic functions and Sobolev-energy estimates for conditional measures.

For homogeneous systems (one common ratio) driven by i.i.d. symbols the
conditional measure's characteristic function factorises over series terms:

    cf(xi) = prod_k  sum_j p_j exp(i d_j w_k xi),   w_k = ratio^k * y_1...y_k.

The alpha-energy 2 * int_0^ximax |cf|^2 (1+xi)^(alpha-1) dxi (conjugate
symmetry doubles the half-line) is finite for alpha below the Sobolev
dimension; a finite 1-energy already forces a square-integrable density.
Convergence on a finite window is judged by the share of the last decade.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .error_laws import ErrorLaw
from .exceptions import ConfigError
from .projection import ErrorRealization, IfsSpec
from .symbolic import _check_prob_vector

LAST_DECADE_CONVERGED = 0.05
DEFAULT_XI_MAX = 1.0e3
DEFAULT_NODES = 20_000
DEFAULT_ALPHA_GRID = tuple(np.round(np.arange(1, 13) * 0.25, 2))


def beta(p) -> float:
    """Collision probability sum p_j^2 of a probability vector."""
    p = _check_prob_vector(np.asarray(p, dtype=float), "p")
    return float(np.sum(p**2))


def _weights(ifs: IfsSpec, y: ErrorRealization, depth: int) -> np.ndarray:
    if not ifs.is_homogeneous:
        raise ConfigError(
            ["the characteristic product needs a homogeneous system (one common ratio)"]
        )
    if depth < 0:
        raise ConfigError(["depth must be >= 0"])
    # w_k = ratio^k * y_1...y_k for k = 0..depth, in log space for safety.
    return np.exp(np.arange(depth + 1) * np.log(ifs.ratios[0]) + y.log_cumsums(depth))


def characteristic_product(ifs: IfsSpec, p, y: ErrorRealization, xi, depth: int) -> np.ndarray:
    """Depth-n characteristic function of the conditional measure at points xi.

    Depth follows the projection convention: depth n multiplies the factors
    of series terms 0..n, so the result is the exact characteristic function
    of a depth-n projected batch at the same y.
    """
    p = _check_prob_vector(np.asarray(p, dtype=float), "p")
    if p.size != ifs.m:
        raise ConfigError(["probability vector length must match the number of maps"])
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    w = _weights(ifs, y, depth)
    out = np.ones(xi.shape, dtype=complex)
    for wk in w:
        phase = np.exp(1j * np.outer(ifs.digits, wk * xi))
        out *= p @ phase
    return out


def empirical_characteristic(values: np.ndarray, xi, chunk: int = 8192) -> np.ndarray:
    """Empirical characteristic function of a sample, chunked to bound memory."""
    values = np.asarray(values, dtype=float)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    acc = np.zeros(xi.shape, dtype=complex)
    for start in range(0, values.size, chunk):
        block = values[start : start + chunk]
        acc += np.exp(1j * np.outer(block, xi)).sum(axis=0)
    return acc / values.size


def default_xi_grid(xi_max: float = DEFAULT_XI_MAX, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Frequency grid: geometric below 1, uniform within each decade above."""
    if xi_max <= 0 or nodes < 16:
        raise ConfigError(["need xi_max > 0 and at least 16 nodes"])
    if xi_max <= 1.0:
        return np.concatenate(([0.0], np.geomspace(min(1e-3, xi_max / 10), xi_max, nodes)))
    n_below = max(32, nodes // 10)
    below = np.geomspace(1e-3, 1.0, n_below)
    decades = []
    lo = 1.0
    while lo < xi_max:
        decades.append((lo, min(10.0 * lo, xi_max)))
        lo *= 10.0
    per = max(16, (nodes - n_below) // len(decades))
    above = np.concatenate(
        [np.linspace(a, b, per, endpoint=False) for a, b in decades] + [[xi_max]]
    )
    return np.unique(np.concatenate(([0.0], below, above)))


@dataclass(frozen=True)
class EnergyEstimate:
    alpha: float
    value: float
    xi_max: float
    nodes: int
    depth: int
    converged: bool
    last_decade_fraction: float


def energy_from_values(char_sq: np.ndarray, xi: np.ndarray, alpha: float) -> tuple[float, float]:
    """Trapezoid alpha-energy of given |cf|^2 samples, plus last-decade share."""
    xi = np.asarray(xi, dtype=float)
    char_sq = np.asarray(char_sq, dtype=float)
    integrand = char_sq * (1.0 + xi) ** (alpha - 1.0)
    total = float(np.trapezoid(integrand, xi))
    head_mask = xi <= xi[-1] / 10.0
    head = float(np.trapezoid(integrand[head_mask], xi[head_mask])) if head_mask.sum() > 1 else 0.0
    fraction = (total - head) / total if total > 0 else 1.0
    return 2.0 * total, float(fraction)


def energy_integral(
    ifs: IfsSpec,
    p,
    y: ErrorRealization,
    alpha: float,
    depth: int,
    xi_max: float = DEFAULT_XI_MAX,
    nodes: int = DEFAULT_NODES,
) -> EnergyEstimate:
    """alpha-energy of the conditional measure over [-xi_max, xi_max]."""
    xi = default_xi_grid(xi_max, nodes)
    char_sq = np.abs(characteristic_product(ifs, p, y, xi, depth)) ** 2
    value, fraction = energy_from_values(char_sq, xi, alpha)
    return EnergyEstimate(
        float(alpha), value, float(xi_max), int(xi.size), int(depth),
        bool(fraction < LAST_DECADE_CONVERGED), fraction,
    )


@dataclass(frozen=True)
class SobolevEstimate:
    """Largest grid alpha with a converged energy, next to the theory bound."""

    value: float
    converged_any: bool
    theory_bound: float
    estimates: tuple[EnergyEstimate, ...]


def sobolev_dimension_estimate(
    ifs: IfsSpec,
    p,
    law: ErrorLaw,
    y: ErrorRealization,
    alpha_grid=DEFAULT_ALPHA_GRID,
    depth: int = 64,
    xi_max: float = DEFAULT_XI_MAX,
    nodes: int = DEFAULT_NODES,
) -> SobolevEstimate:
    """Scan the alpha grid for converged energies; report the best alongside theory.

    The theoretical benchmark is |log beta| / |chi| with beta the collision
    probability of p and chi = log(ratio) + E[log Y].  The numeric estimate
    is intentionally conservative: it only reports alphas whose energy looks
    settled on the finite frequency window.
    """
    p_arr = _check_prob_vector(np.asarray(p, dtype=float), "p")
    chi = float(np.log(ifs.ratios[0]) + law.log_mean())
    if chi >= 0:
        raise ConfigError(["Sobolev benchmark needs a contracting-on-average system"])
    bound = float(abs(np.log(beta(p_arr))) / abs(chi))
    xi = default_xi_grid(xi_max, nodes)
    char_sq = np.abs(characteristic_product(ifs, p_arr, y, xi, depth)) ** 2
    estimates = []
    for alpha in sorted(float(a) for a in alpha_grid):
        value, fraction = energy_from_values(char_sq, xi, alpha)
        estimates.append(
            EnergyEstimate(
                alpha, value, float(xi_max), int(xi.size), int(depth),
                bool(fraction < LAST_DECADE_CONVERGED), fraction,
            )
        )
    converged = [e.alpha for e in estimates if e.converged]
    if converged:
        return SobolevEstimate(max(converged), True, bound, tuple(estimates))
    return SobolevEstimate(min(e.alpha for e in estimates), False, bound, tuple(estimates))
