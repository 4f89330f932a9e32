"""Dimension and regularity estimators for one-dimensional sample clouds.

Correlation dimension (Grassberger-Procaccia), box-counting dimension,
histogram L2 refinement diagnostics for absolute continuity, exact measure
of delta-neighbourhoods of the sample, and the empirical transversality
statistic of word pairs under resampled error sequences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from .error_laws import ErrorLaw
from .exceptions import ConfigError
from .projection import ErrorRealization, IfsSpec, truncation_depth
from .symbolic import ShiftMeasure

R2_STABLE = 0.98  # minimum fit quality before an estimate counts as stable
AC_RATIO_TRUE = 1.5  # L2 refinement ratio at or below which the flag is True
AC_RATIO_FALSE = 3.0  # ... above which the flag is False


def geometric_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """Geometric grid from lo to hi inclusive."""
    if not (0 < lo < hi) or points < 2:
        raise ConfigError(["need 0 < lo < hi and at least two grid points"])
    return np.geomspace(lo, hi, points)


def robust_scale(values: np.ndarray) -> float:
    """Bulk length scale of a sample: the interquartile range.

    Value distributions of non-uniformly-contracting systems can have
    polynomial tails, so the raw diameter grows with the sample size and is
    dominated by outliers; scale windows anchored on it land far above the
    bulk and flatten every log-log fit.  Falls back to the diameter when the
    central half of the data is degenerate.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ConfigError(["robust scale needs samples"])
    q25, q75 = np.quantile(values, [0.25, 0.75])
    scale = float(q75 - q25)
    if scale > 0:
        return scale
    return float(np.max(values) - np.min(values))


@dataclass(frozen=True)
class DimensionEstimate:
    """Slope of a log-log scaling fit plus the context needed to judge it.

    ``value`` is the raw fitted slope (never capped), ``stable`` requires
    R^2 >= 0.98 over the fitted window.  ``points_used`` counts the samples,
    ``fit_points`` the grid points inside the window.
    """

    value: float
    stderr: float
    method: str
    scale_window: tuple[float, float]
    points_used: int
    fit_points: int
    r2: float
    stable: bool


def _fit_scaling(log_x: np.ndarray, log_y: np.ndarray, method: str, n_samples: int) -> DimensionEstimate:
    order = np.argsort(log_x)
    log_x, log_y = log_x[order], log_y[order]
    span = (log_x[-1] - log_x[0]) / np.log(10.0) if log_x.size else 0.0
    # Trim the extreme decades, where truncation error, saturation and shot
    # noise live, provided enough span remains for a fit.
    cut = 2.0 if span >= 5.0 else (1.0 if span >= 3.0 else 0.0)
    lo, hi = log_x[0] + cut * np.log(10.0), log_x[-1] - cut * np.log(10.0)
    mask = (log_x >= lo) & (log_x <= hi)
    if mask.sum() < 3:
        mask = np.ones_like(log_x, dtype=bool)
    if mask.sum() < 3:
        return DimensionEstimate(
            float("nan"), float("nan"), method, (float("nan"), float("nan")),
            n_samples, int(mask.sum()), float("nan"), False,
        )
    with np.errstate(all="ignore"):
        fit = stats.linregress(log_x[mask], log_y[mask])
        r2 = float(fit.rvalue**2)
    window = (float(np.exp(log_x[mask][0])), float(np.exp(log_x[mask][-1])))
    stable = bool(np.isfinite(fit.slope)) and np.isfinite(r2) and r2 >= R2_STABLE
    return DimensionEstimate(
        float(fit.slope), float(fit.stderr), method, window,
        n_samples, int(mask.sum()), r2, stable,
    )


def correlation_sum(values: np.ndarray, r_grid: np.ndarray) -> np.ndarray:
    """C(r) = (2 / N(N-1)) #{i < j : |x_i - x_j| < r} via a sorted sweep.

    Sorting once and locating each window edge with a binary search keeps
    the cost at O(N log N + |grid| N log N) instead of the O(N^2) of the
    textbook double loop (kept in ``correlation_sum_naive`` as cross-check).
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 2:
        raise ConfigError(["correlation sums need at least two samples"])
    r_grid = np.asarray(r_grid, dtype=float)
    out = np.empty(r_grid.size)
    idx = np.arange(n)
    for k, r in enumerate(r_grid):
        # count of i < j with x_j - x_i < r  <=>  i past searchsorted(x, x_j - r)
        lefts = np.searchsorted(x, x - r, side="right")
        out[k] = float(np.sum(idx - lefts))
    return out * (2.0 / (n * (n - 1.0)))


def correlation_sum_naive(values: np.ndarray, r_grid: np.ndarray) -> np.ndarray:
    """Quadratic reference implementation, only sensible for small N."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n > 2000:
        raise ConfigError(["naive correlation sum is restricted to N <= 2000"])
    if n < 2:
        raise ConfigError(["correlation sums need at least two samples"])
    d = np.abs(x[:, None] - x[None, :])
    out = np.array([(d < r).sum() - n for r in np.asarray(r_grid, dtype=float)], dtype=float)
    return out / (n * (n - 1.0))


def default_r_grid(values: np.ndarray, points: int = 32, span: float = 3e-5) -> np.ndarray:
    diam = float(np.max(values) - np.min(values))
    if diam <= 0:
        raise ConfigError(["sample cloud has zero diameter"])
    hi = min(4.0 * robust_scale(values), diam)  # clip to data extent
    return geometric_grid(hi * span, hi, points)


def correlation_dimension(values: np.ndarray, r_grid: Optional[np.ndarray] = None) -> DimensionEstimate:
    """Grassberger-Procaccia correlation dimension of a 1-d sample.

    Fits the slope of log C(r) against log r over a stable scale window
    (extreme decades trimmed, empty and saturated radii dropped).  The raw
    slope is reported even when it exceeds 1; ``stable`` is False whenever
    the fit quality falls below R^2 = 0.98.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2 or np.max(values) == np.min(values):
        return DimensionEstimate(
            float("nan"), float("nan"), "correlation", (float("nan"), float("nan")),
            n, 0, float("nan"), False,
        )
    if r_grid is None:
        r_grid = default_r_grid(values)
    r_grid = np.asarray(r_grid, dtype=float)
    c = correlation_sum(values, r_grid)
    keep = (c > 0.0) & (c < 1.0)
    if keep.sum() < 3:
        return DimensionEstimate(
            float("nan"), float("nan"), "correlation", (float("nan"), float("nan")),
            n, int(keep.sum()), float("nan"), False,
        )
    return _fit_scaling(np.log(r_grid[keep]), np.log(c[keep]), "correlation", n)


def box_counts(values: np.ndarray, delta_grid: np.ndarray) -> np.ndarray:
    """Occupied-cell counts N(delta) on grids anchored at the sample minimum."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ConfigError(["box counts need at least one sample"])
    x0 = x.min()
    out = np.empty(np.asarray(delta_grid).size, dtype=np.int64)
    for k, d in enumerate(np.asarray(delta_grid, dtype=float)):
        if d <= 0:
            raise ConfigError(["box sizes must be positive"])
        out[k] = np.unique(np.floor((x - x0) / d)).size
    return out


def default_delta_grid(values: np.ndarray, points: int = 24) -> np.ndarray:
    diam = float(np.max(values) - np.min(values))
    if diam <= 0:
        raise ConfigError(["sample cloud has zero diameter"])
    hi = min(robust_scale(values), diam / 4.0)
    return geometric_grid(hi * 4e-4, hi, points)


def box_dimension(values: np.ndarray, delta_grid: Optional[np.ndarray] = None) -> DimensionEstimate:
    """Box-counting dimension: slope of log N(delta) against log(1/delta)."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2 or np.max(values) == np.min(values):
        return DimensionEstimate(
            float("nan"), float("nan"), "box", (float("nan"), float("nan")), n, 0, float("nan"), False
        )
    if delta_grid is None:
        delta_grid = default_delta_grid(values)
    delta_grid = np.asarray(delta_grid, dtype=float)
    counts = box_counts(values, delta_grid)
    # Drop the saturated regimes: every point in its own cell (counts track
    # the sample size, slope flattens to 0) and a single occupied cell.
    keep = (counts > 1) & (counts < 0.8 * n)
    if keep.sum() < 3:
        keep = counts > 0
    est = _fit_scaling(
        np.log(1.0 / delta_grid[keep]), np.log(counts[keep].astype(float)), "box", n
    )
    # scale_window is in units of 1/delta after the flip; restate it in delta.
    lo, hi = est.scale_window
    return DimensionEstimate(
        est.value, est.stderr, "box", (1.0 / hi, 1.0 / lo) if np.isfinite(lo) and lo > 0 else est.scale_window,
        est.points_used, est.fit_points, est.r2, est.stable,
    )


def _knn_distances(x_sorted: np.ndarray, k: int) -> np.ndarray:
    """Distance from each point of a sorted 1-d sample to its k-th nearest neighbour.

    The k nearest neighbours of a point in a sorted sample form a contiguous
    window around it.  With t neighbours taken on the left the covering
    radius is max(left gap, right gap); the left gap grows with t and the
    right gap shrinks, so the optimal split is found by bisection, O(n log k).
    """
    n = x_sorted.size
    inf = np.full(k, np.inf)
    xp = np.concatenate([-inf, x_sorted, inf])
    idx = np.arange(n)

    def left(t):
        return x_sorted - xp[k + idx - t]

    def right(t):
        return xp[2 * k + idx - t] - x_sorted

    # smallest t with left(t) >= right(t); exists because right(k) = 0
    lo = np.zeros(n, dtype=int)
    hi = np.full(n, k, dtype=int)
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        geq = left(mid) >= right(mid)
        hi = np.where(geq, mid, hi)
        lo = np.where(geq, lo, mid + 1)
    best = np.maximum(left(lo), right(lo))
    prev = np.maximum(lo - 1, 0)
    return np.minimum(best, np.maximum(left(prev), right(prev)))


def default_mass_grid(n_samples: int) -> np.ndarray:
    """Neighbour counts 2, 4, 8, ... up to a small fraction of the sample."""
    k_max = max(4, n_samples // 10)
    return 2 ** np.arange(1, int(np.log2(k_max)) + 1)


def local_dimension(values: np.ndarray, ks: Optional[np.ndarray] = None) -> DimensionEstimate:
    """Typical local scaling exponent via fixed-mass nearest-neighbour radii.

    Regresses psi(k) (digamma; the unbiased stand-in for log k when the mass
    in a k-neighbour ball is Gamma(k)-distributed) on the sample mean of
    log r_k, the distance to the k-th nearest neighbour.  Averaging the
    logarithm weights every point equally, so the fit tracks the
    almost-everywhere local dimension.  For measures whose cylinder weights
    spread multiplicatively the pair-count slope of ``correlation_dimension``
    sits strictly below this value; the two agree on uniform-type measures.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 16 or np.max(values) == np.min(values):
        return DimensionEstimate(
            float("nan"), float("nan"), "local", (float("nan"), float("nan")), n, 0, float("nan"), False
        )
    if ks is None:
        ks = default_mass_grid(n)
    ks = np.unique(np.asarray(ks, dtype=int))
    if ks.size < 2 or ks[0] < 1 or ks[-1] >= n:
        raise ConfigError(["need at least two neighbour counts k with 1 <= k < n"])
    x = np.sort(values)
    mean_logs, used = [], []
    for k in ks:
        r = _knn_distances(x, int(k))
        r = r[r > 0]  # ties contribute nothing to a log-radius
        if r.size < n // 2:
            continue
        mean_logs.append(float(np.mean(np.log(r))))
        used.append(int(k))
    if len(used) < 3:
        return DimensionEstimate(
            float("nan"), float("nan"), "local", (float("nan"), float("nan")), n, len(used), float("nan"), False
        )
    with np.errstate(invalid="ignore"):
        fit = stats.linregress(mean_logs, special.digamma(np.asarray(used, dtype=float)))
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else float("nan")
    stable = bool(np.isfinite(fit.slope) and np.isfinite(r2) and r2 >= R2_STABLE)
    window = (float(np.exp(min(mean_logs))), float(np.exp(max(mean_logs))))
    return DimensionEstimate(
        float(fit.slope), float(fit.stderr), "local", window, n, len(used), r2, stable
    )


@dataclass(frozen=True)
class Histogram:
    """Uniform-bin histogram with masses normalised to 1."""

    edges: np.ndarray
    masses: np.ndarray
    count: int

    @classmethod
    def from_values(cls, values: np.ndarray, bins: int, lo: float, hi: float) -> "Histogram":
        counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=(lo, hi))
        return cls(edges, counts / counts.sum(), int(np.asarray(values).size))

    def l2_norm(self) -> float:
        """Integral of the squared histogram density: sum m_b^2 * B / width."""
        width = float(self.edges[-1] - self.edges[0])
        return float(np.sum(self.masses**2) * self.masses.size / width)


@dataclass(frozen=True)
class DensityDiagnostics:
    bins_coarse: int
    bins_fine: int
    l2_coarse: float
    l2_fine: float
    ratio: float
    ac_flag: Optional[bool]  # True = looks absolutely continuous, None = indeterminate


def default_bins(n_samples: int) -> tuple[int, int]:
    """Coarse/fine bin counts keeping roughly >= 50 samples per fine bin."""
    fine = 2 ** int(np.floor(np.log2(min(4096, max(64, n_samples // 50)))))
    return fine // 4, fine


def density_diagnostics(
    values: np.ndarray,
    bins_coarse: Optional[int] = None,
    bins_fine: Optional[int] = None,
) -> DensityDiagnostics:
    """L2 norms of histogram densities under refinement.

    For a square-integrable density the discrete L2 norm stabilises as bins
    shrink; for singular measures it keeps growing (a point mass scales
    linearly in the bin count).  The flag thresholds are heuristics on the
    fine/coarse ratio: <= 1.5 reads as absolutely continuous, > 3 as
    singular, in between stays indeterminate.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ConfigError(["density diagnostics need samples"])
    if bins_coarse is None or bins_fine is None:
        auto_coarse, auto_fine = default_bins(values.size)
        bins_coarse = auto_coarse if bins_coarse is None else bins_coarse
        bins_fine = auto_fine if bins_fine is None else bins_fine
    if not (0 < bins_coarse < bins_fine):
        raise ConfigError(["need 0 < bins_coarse < bins_fine"])
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        # window the bulk; far tail values would stretch the bins until the
        # body of the sample collapses into one and mimics a point mass
        med = float(np.median(values))
        half = 5.0 * robust_scale(values)
        lo, hi = max(lo, med - half), min(hi, med + half)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5  # point mass: unit window, ratio = bin ratio
    coarse = Histogram.from_values(values, bins_coarse, lo, hi)
    fine = Histogram.from_values(values, bins_fine, lo, hi)
    ratio = fine.l2_norm() / coarse.l2_norm()
    flag: Optional[bool] = None
    if ratio <= AC_RATIO_TRUE:
        flag = True
    elif ratio > AC_RATIO_FALSE:
        flag = False
    return DensityDiagnostics(
        int(bins_coarse), int(bins_fine), coarse.l2_norm(), fine.l2_norm(), float(ratio), flag
    )


def support_measure(values: np.ndarray, delta_grid: np.ndarray) -> np.ndarray:
    """Exact Lebesgue measure of the union of [x_k - delta, x_k + delta].

    Sorting once reduces the union to one pass over the gaps:
    measure = 2 delta + sum over consecutive gaps of min(gap, 2 delta).
    Returns an array of rows (delta, measure).
    """
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ConfigError(["support measure needs samples"])
    gaps = np.diff(x)
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(delta_grid <= 0):
        raise ConfigError(["delta grid must be positive"])
    out = np.empty((delta_grid.size, 2))
    for k, d in enumerate(delta_grid):
        out[k, 0] = d
        out[k, 1] = 2.0 * d + float(np.minimum(gaps, 2.0 * d).sum())
    return out


@dataclass
class TransversalityEstimate:
    """Empirical fraction of error sequences bringing word pairs within r."""

    r: np.ndarray
    a_hat: np.ndarray
    n_pairs: int
    n_errors: int
    depth: int
    density_bound: float
    by_prefix: dict = field(default_factory=dict)


def _common_prefix_lengths(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    neq = a != b
    any_neq = neq.any(axis=1)
    first = neq.argmax(axis=1)
    return np.where(any_neq, first, a.shape[1])


def transversality_statistic(
    ifs: IfsSpec,
    measure: ShiftMeasure,
    law: ErrorLaw,
    r_grid: np.ndarray,
    n_pairs: int,
    n_errors: int,
    rng: np.random.Generator,
    tol: float = 1e-9,
) -> TransversalityEstimate:
    """Monte Carlo estimate of A(r): resample the error sequence, fix word pairs.

    Pairs are drawn from the square of the symbol process conditioned on a
    shared first symbol (rejection sampling), the quantity averaged is the
    fraction of fresh error sequences y with |proj_y(i) - proj_y(j)| < r.
    The per-prefix-length breakdown is reported alongside the average, since
    the linear-in-r behaviour degrades with deeper shared prefixes.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if n_pairs < 1 or n_errors < 1:
        raise ConfigError(["need at least one pair and one error draw"])

    pilot_seed = np.random.SeedSequence(int(rng.integers(0, 2**63)))
    pilot = ErrorRealization.from_seed(law, pilot_seed)
    depth = truncation_depth(ifs, law, pilot, tol, measure=measure).depth

    length = depth + 1
    a_words = np.empty((n_pairs, length), dtype=np.int64)
    b_words = np.empty((n_pairs, length), dtype=np.int64)
    have = 0
    while have < n_pairs:
        block = max(64, 2 * (n_pairs - have))
        cand_a = measure.sample_words(block, length, rng)
        cand_b = measure.sample_words(block, length, rng)
        ok = cand_a[:, 0] == cand_b[:, 0]
        take = min(int(ok.sum()), n_pairs - have)
        a_words[have : have + take] = cand_a[ok][:take]
        b_words[have : have + take] = cand_b[ok][:take]
        have += take

    # Error-product matrix: column j holds [1, y_1, y_1 y_2, ...] for draw j.
    ys = np.asarray(law.sample(rng, size=(n_errors, depth)), dtype=float)
    ycum = np.ones((depth + 1, n_errors))
    np.cumprod(ys.T, axis=0, out=ycum[1:, :])

    def word_terms(words: np.ndarray) -> np.ndarray:
        idx = words - 1
        lam = ifs.ratios[idx]
        ratio_cum = np.ones_like(lam)
        np.cumprod(lam[:, :-1], axis=1, out=ratio_cum[:, 1:])
        return ifs.digits[idx] * ratio_cum

    phi = np.abs(word_terms(a_words) @ ycum - word_terms(b_words) @ ycum)

    a_hat = np.array([float((phi < r).mean()) for r in r_grid])
    prefix_len = _common_prefix_lengths(a_words, b_words)
    by_prefix = {}
    for k in np.unique(prefix_len):
        sel = phi[prefix_len == k]
        by_prefix[int(k)] = {
            "pairs": int(sel.shape[0]),
            "a_hat": [float((sel < r).mean()) for r in r_grid],
        }
    return TransversalityEstimate(
        r_grid, a_hat, int(n_pairs), int(n_errors), int(depth),
        float(law.density_bound_constant()), by_prefix,
    )
