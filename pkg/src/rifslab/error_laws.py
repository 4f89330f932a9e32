"""Laws of the positive multiplicative error Y.

Each law exposes its density, CDF, log-moment E[log Y], inverse-transform
sampling, and the constant C = sup_x x * density(x) used by transversality
estimates.  Samplers consume exactly one uniform per draw so that a stream
regenerated from its seed reproduces any prefix (see projection.ErrorRealization).
"""
from __future__ import annotations

import numpy as np
from scipy import integrate, optimize

from .exceptions import ConfigError

DENSITY_MASS_TOL = 1e-8
_QUAD_BUDGET = 1e-10


class ErrorLaw:
    """Common interface of the multiplicative error laws."""

    kind: str = "?"

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def log_mean(self) -> float:
        """E[log Y]."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def density_bound_constant(self) -> float:
        """Smallest C with density(x) <= C / x on the support."""
        raise NotImplementedError

    @property
    def density_bounded_variation(self) -> bool:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return isinstance(other, ErrorLaw) and self.describe() == other.describe()

    def __repr__(self) -> str:
        lo, hi = self.support()
        return f"{type(self).__name__}(support=[{lo:.4g}, {hi:.4g}])"


def _uniform_log_moment(a: float, b: float) -> float:
    # E[log Y] for Y uniform on [a, b]: antiderivative of log is x log x - x.
    return ((b * np.log(b) - b) - (a * np.log(a) - a)) / (b - a)


class PerturbedUniform(ErrorLaw):
    """Uniform law on [1 - eps1, 1 + eps2].

    By default eps2 is solved from E[log Y] = 0 (root of the exact uniform
    log-moment, bracketed bisection via brentq), so the law is a mean-zero
    perturbation of the noiseless system in log scale.  Passing eps2
    explicitly skips the balance and the log-mean is then whatever the
    closed form gives.
    """

    kind = "perturbed-uniform"

    def __init__(self, eps1: float = 0.1, eps2: float | None = None):
        eps1 = float(eps1)
        if not 0 < eps1 < 1:
            raise ConfigError(["eps1 must lie in (0, 1)"])
        self._balanced = eps2 is None
        if eps2 is None:
            # E[log] is monotone increasing in eps2; the root sits just above eps1.
            eps2 = float(
                optimize.brentq(
                    lambda e2: _uniform_log_moment(1.0 - eps1, 1.0 + e2),
                    eps1 / 2,
                    4 * eps1 + 1e-6,
                    xtol=1e-16,
                    rtol=8.9e-16,
                )
            )
            residual = _uniform_log_moment(1.0 - eps1, 1.0 + eps2)
            if abs(residual) > 1e-13:
                raise ConfigError([f"eps2 balance failed (residual {residual:.3g})"])
        else:
            eps2 = float(eps2)
            if eps2 <= -1:
                raise ConfigError(["eps2 must exceed -1"])
        self.eps1 = eps1
        self.eps2 = eps2

    def support(self):
        return (1.0 - self.eps1, 1.0 + self.eps2)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support()
        return np.where((x >= lo) & (x <= hi), 1.0 / (hi - lo), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support()
        return np.clip((x - lo) / (hi - lo), 0.0, 1.0)

    def log_mean(self) -> float:
        if self._balanced:
            return 0.0  # by construction; residual checked at build time
        return _uniform_log_moment(*self.support())

    def sample(self, rng, size=None):
        lo, hi = self.support()
        return lo + (hi - lo) * rng.random(size)

    def density_bound_constant(self) -> float:
        lo, hi = self.support()
        return hi / (hi - lo)  # x / width, maximal at the right edge

    @property
    def density_bounded_variation(self) -> bool:
        return True

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "eps1": float(self.eps1),
            "eps2": float(self.eps2),
            "balanced": self._balanced,
        }


class PowerLaw(ErrorLaw):
    """Density theta * x**(theta - 1) on (0, 1]; Y is distributed as U**(1/theta)."""

    kind = "power-law"

    def __init__(self, theta: float):
        theta = float(theta)
        if theta <= 0:
            raise ConfigError(["theta must be positive"])
        self.theta = theta

    def support(self):
        return (0.0, 1.0)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = np.where(x > 0, self.theta * x ** (self.theta - 1.0), 0.0)
        return np.where((x > 0) & (x <= 1.0), inside, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(x, 0.0, 1.0) ** self.theta

    def log_mean(self) -> float:
        return -1.0 / self.theta

    def sample(self, rng, size=None):
        return rng.random(size) ** (1.0 / self.theta)

    def density_bound_constant(self) -> float:
        return self.theta  # x * theta x**(theta-1) = theta x**theta <= theta on (0, 1]

    @property
    def density_bounded_variation(self) -> bool:
        # For theta < 1 the density blows up at 0, so its variation is infinite.
        return self.theta >= 1.0

    def describe(self) -> dict:
        return {"kind": self.kind, "theta": float(self.theta)}


class PiecewiseDensity(ErrorLaw):
    """Piecewise-constant density tabulated on a positive interval.

    Parameters
    ----------
    breakpoints : increasing array of cell edges, first one >= 0.
    values : density value on each cell; must integrate to 1 within 1e-8
        (then renormalised exactly).

    The log-moment is computed by adaptive quadrature cell by cell with a
    total absolute-error budget of 1e-10.  A bounded tabulated density always
    has an integrable logarithm, even when the support touches 0.
    """

    kind = "piecewise"

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float)
        problems = []
        if bp.ndim != 1 or v.ndim != 1 or bp.size != v.size + 1 or v.size == 0:
            raise ConfigError(["need n+1 breakpoints for n density values"])
        if bp[0] < 0:
            problems.append("support must lie in [0, inf)")
        if np.any(np.diff(bp) <= 0):
            problems.append("breakpoints must be strictly increasing")
        if np.any(v < 0):
            problems.append("density values must be non-negative")
        if problems:
            raise ConfigError(problems)
        total = float(np.sum(v * np.diff(bp)))
        if abs(total - 1.0) > DENSITY_MASS_TOL:
            raise ConfigError(
                [f"tabulated density integrates to {total!r}, not 1 within {DENSITY_MASS_TOL}"]
            )
        self.breakpoints = bp.copy()
        # Renormalise only above a few ulps so that rebuilding a law from its
        # describe() output reproduces the stored values bit for bit.
        self.values = v / total if abs(total - 1.0) > 1e-14 else v.copy()
        self.breakpoints.setflags(write=False)
        self.values.setflags(write=False)
        self._cell_mass = self.values * np.diff(self.breakpoints)
        self._cum_mass = np.concatenate(([0.0], np.cumsum(self._cell_mass)))
        self._cum_mass[-1] = 1.0

    def support(self):
        return (float(self.breakpoints[0]), float(self.breakpoints[-1]))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, self.values.size - 1)
        inside = (x >= self.breakpoints[0]) & (x <= self.breakpoints[-1])
        return np.where(inside, self.values[idx], 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.breakpoints[0], self.breakpoints[-1])
        idx = np.clip(np.searchsorted(self.breakpoints, xc, side="right") - 1, 0, self.values.size - 1)
        return self._cum_mass[idx] + self.values[idx] * (xc - self.breakpoints[idx])

    def log_mean(self) -> float:
        eps = _QUAD_BUDGET / self.values.size
        total = 0.0
        for a, b, v in zip(self.breakpoints[:-1], self.breakpoints[1:], self.values):
            if v == 0.0:
                continue
            val, _ = integrate.quad(np.log, a, b, epsabs=eps, epsrel=0.0, limit=200)
            total += v * val
        return float(total)

    def sample(self, rng, size=None):
        u = rng.random(size)
        idx = np.clip(np.searchsorted(self._cum_mass, u, side="right") - 1, 0, self.values.size - 1)
        width = np.diff(self.breakpoints)[idx]
        mass = self._cell_mass[idx]
        frac = np.where(mass > 0, (u - self._cum_mass[idx]) / np.where(mass > 0, mass, 1.0), 0.0)
        return self.breakpoints[idx] + np.clip(frac, 0.0, 1.0) * width

    def density_bound_constant(self) -> float:
        # On each cell x * v is maximal at the right edge; this sup is exact.
        return float(np.max(self.values * self.breakpoints[1:]))

    @property
    def density_bounded_variation(self) -> bool:
        return True

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "breakpoints": [float(x) for x in self.breakpoints],
            "values": [float(x) for x in self.values],
        }


def law_from_dict(spec: dict) -> ErrorLaw:
    """Rebuild an ErrorLaw from its describe() dictionary."""
    kind = spec.get("kind")
    if kind == "perturbed-uniform":
        if spec.get("balanced", spec.get("eps2") is None):
            return PerturbedUniform(spec.get("eps1", 0.1))
        return PerturbedUniform(spec.get("eps1", 0.1), spec["eps2"])
    if kind == "power-law":
        return PowerLaw(spec["theta"])
    if kind == "piecewise":
        return PiecewiseDensity(spec["breakpoints"], spec["values"])
    raise ConfigError([f"unknown error law kind {kind!r}"])


def log_uniform_tabulation(center: float = 1.0, half_width: float = 1.0, cells: int = 400) -> PiecewiseDensity:
    """Tabulated approximation of the log-uniform law on [center/e^h, center*e^h].

    Cell edges are equispaced in log x and each cell receives the exact
    log-uniform mass, so E[log Y] = log(center) up to a curvature error of
    order (h / cells)^2.  Handy as a symmetric-in-log test law.
    """
    log_edges = np.linspace(np.log(center) - half_width, np.log(center) + half_width, cells + 1)
    edges = np.exp(log_edges)
    masses = np.full(cells, 1.0 / cells)
    values = masses / np.diff(edges)
    return PiecewiseDensity(edges, values)
