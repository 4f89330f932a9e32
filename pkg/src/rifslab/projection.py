"""Scalar iterated function systems with multiplicative random errors.

The maps are x -> d_i + r_i * Y * x with digits d_i, contraction ratios r_i
and a positive random error Y drawn i.i.d. from an error law.  Conditional
on one error sequence y, a symbol word (i_1, i_2, ...) projects to the series

    value = d_{i_1} + d_{i_2} r_{i_1} y_1 + d_{i_3} r_{i_1} r_{i_2} y_1 y_2 + ...

Depth n keeps the n+1 leading terms (project at depth 0 is just d_{i_1}).
Sampling the word while keeping y fixed produces draws from the conditional
measure of the system; everything downstream (dimension estimators, Fourier
analysis) consumes those draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .error_laws import ErrorLaw
from .exceptions import ConfigError, NotContractingError, NumericError
from .symbolic import ShiftMeasure

FAMILY_DIGITS = "distinct-digits"
FAMILY_RATIOS = "distinct-ratios"

DEPTH_CAP = 100_000
TAIL_SAFETY = 4.0  # multiplier on extrapolated (uncertified) tail bounds
_CHUNK = 4096  # words projected per block; fixed so reports do not depend on it


class IfsSpec:
    """Digits, ratios and separation class of one system.

    Two classes are admitted: pairwise-distinct digits (arbitrary positive
    ratios), or pairwise-distinct ratios with every digit equal to 1.  The
    stored ``separation`` is the smallest pairwise gap of whichever family
    the system belongs to (infinite for a single map).
    """

    def __init__(self, digits, ratios, family: str | None = None):
        digits = np.asarray(digits, dtype=float)
        ratios = np.asarray(ratios, dtype=float)
        problems = []
        if digits.ndim != 1 or ratios.ndim != 1 or digits.size != ratios.size or digits.size == 0:
            raise ConfigError(["digits and ratios must be 1-d arrays of equal positive length"])
        if not np.all(np.isfinite(digits)):
            problems.append("digits must be finite")
        if not np.all(np.isfinite(ratios)) or np.any(ratios <= 0):
            problems.append("ratios must be finite and positive")
        if problems:
            raise ConfigError(problems)

        if family is None:
            if digits.size == 1:
                family = FAMILY_DIGITS
            elif np.unique(digits).size == digits.size:
                family = FAMILY_DIGITS
            elif np.all(digits == 1.0):
                family = FAMILY_RATIOS
            else:
                raise ConfigError(
                    ["system fits neither family: digits collide and are not all 1"]
                )
        if family == FAMILY_DIGITS:
            if np.unique(digits).size != digits.size:
                problems.append("distinct-digits family requires pairwise distinct digits")
            gaps = np.diff(np.sort(digits))
        elif family == FAMILY_RATIOS:
            if not np.all(digits == 1.0):
                problems.append(
                    "distinct-ratios family requires every digit equal to 1 (rescale the system)"
                )
            if np.unique(ratios).size != ratios.size:
                problems.append("distinct-ratios family requires pairwise distinct ratios")
            gaps = np.diff(np.sort(ratios))
        else:
            raise ConfigError([f"unknown family {family!r}"])
        if problems:
            raise ConfigError(problems)

        self.digits = digits.copy()
        self.ratios = ratios.copy()
        self.digits.setflags(write=False)
        self.ratios.setflags(write=False)
        self.family = family
        self.separation = float(gaps.min()) if gaps.size else float("inf")

    @property
    def m(self) -> int:
        return int(self.digits.size)

    @property
    def digit_bound(self) -> float:
        """max_i |d_i|, the constant in every truncation tail bound."""
        return float(np.max(np.abs(self.digits)))

    @property
    def ratio_max(self) -> float:
        return float(np.max(self.ratios))

    @property
    def is_homogeneous(self) -> bool:
        """True when all contraction ratios coincide (Fourier product applies)."""
        return bool(np.all(self.ratios == self.ratios[0]))

    def describe(self) -> dict:
        return {
            "digits": [float(x) for x in self.digits],
            "ratios": [float(x) for x in self.ratios],
            "family": self.family,
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, IfsSpec) and self.describe() == other.describe()

    def __repr__(self) -> str:
        return f"IfsSpec(digits={self.digits.tolist()}, ratios={self.ratios.tolist()}, family={self.family!r})"


def ifs_from_dict(spec: dict) -> IfsSpec:
    return IfsSpec(spec["digits"], spec["ratios"], spec.get("family"))


class ErrorRealization:
    """One realization y_1, y_2, ... of the error sequence.

    Backed either by a seed (the prefix regrows deterministically on demand,
    because every law consumes exactly one uniform per draw) or by an
    explicit array, in which case it cannot be extended past its length.
    """

    def __init__(
        self,
        law: Optional[ErrorLaw],
        seed: Optional[np.random.SeedSequence] = None,
        values=None,
    ):
        if seed is None and values is None:
            raise ConfigError(["an error realization needs a seed or explicit values"])
        self.law = law
        self._seed = seed
        self._values = (
            np.array([], dtype=float) if values is None else np.asarray(values, dtype=float).copy()
        )
        if np.any(self._values <= 0):
            raise ConfigError(["error values must be positive"])

    @classmethod
    def from_seed(cls, law: ErrorLaw, seed: np.random.SeedSequence) -> "ErrorRealization":
        return cls(law, seed=seed)

    @classmethod
    def from_values(cls, values, law: Optional[ErrorLaw] = None) -> "ErrorRealization":
        return cls(law, values=values)

    def __len__(self) -> int:
        return int(self._values.size)

    def ensure(self, n: int) -> None:
        """Grow the realized prefix to at least n values."""
        if n <= self._values.size:
            return
        if self._seed is None:
            raise NumericError(
                f"fixed-value error realization of length {self._values.size} cannot reach {n}"
            )
        target = max(int(n), 2 * self._values.size, 64)
        rng = np.random.default_rng(self._seed)
        fresh = np.asarray(self.law.sample(rng, size=target), dtype=float)
        if self._values.size and not np.array_equal(fresh[: self._values.size], self._values):
            raise NumericError("error stream is not prefix-stable; cannot extend realization")
        self._values = fresh

    def values(self, n: int) -> np.ndarray:
        self.ensure(n)
        return self._values[:n]

    def cumprods(self, n: int) -> np.ndarray:
        """[1, y_1, y_1 y_2, ..., y_1...y_n] (length n+1)."""
        v = self.values(n)
        return np.concatenate(([1.0], np.cumprod(v)))

    def log_cumsums(self, n: int) -> np.ndarray:
        """[0, log y_1, log y_1 + log y_2, ...] (length n+1), overflow-safe."""
        v = self.values(n)
        return np.concatenate(([0.0], np.cumsum(np.log(v))))

    def describe(self) -> dict:
        if self._seed is None:
            source = {"source": "explicit", "length": int(self._values.size)}
        else:
            source = {
                "source": "seed",
                "entropy": int(self._seed.entropy),
                "spawn_key": [int(k) for k in self._seed.spawn_key],
            }
        if self.law is not None:
            source["law"] = self.law.describe()
        return source


@dataclass(frozen=True)
class TruncationResult:
    depth: int
    tail_bound: float
    certified: bool


def lyapunov(ifs: IfsSpec, measure: ShiftMeasure, law: ErrorLaw) -> float:
    """Lyapunov exponent chi = E[log Y] + sum_i w_i log r_i (w = symbol marginal)."""
    if measure.m != ifs.m:
        raise ConfigError(
            [f"symbol process has {measure.m} symbols but the system has {ifs.m} maps"]
        )
    w = measure.symbol_marginal()
    return float(law.log_mean() + w @ np.log(ifs.ratios))


def lyapunov_mc(
    ifs: IfsSpec,
    measure: ShiftMeasure,
    law: ErrorLaw,
    n: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo Lyapunov exponent from a single length-n trajectory.

    Returns the sample mean of log(r_{i_k} y_k) and its standard error
    (sample standard deviation over sqrt(n)).
    """
    if n < 2:
        raise ConfigError(["lyapunov_mc needs a trajectory of length >= 2"])
    if measure.m != ifs.m:
        raise ConfigError(["symbol process and system have different alphabet sizes"])
    word = measure.sample_sequence(n, rng)
    ys = np.asarray(law.sample(rng, size=n), dtype=float)
    terms = np.log(ifs.ratios[word - 1]) + np.log(ys)
    return float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(n))


def _typical_ratio_factor(ifs: IfsSpec, measure: Optional[ShiftMeasure]) -> float:
    if measure is None:
        return ifs.ratio_max
    if measure.m != ifs.m:
        raise ConfigError(["symbol process and system have different alphabet sizes"])
    w = measure.symbol_marginal()
    return float(np.exp(w @ np.log(ifs.ratios)))


def truncation_depth(
    ifs: IfsSpec,
    law: ErrorLaw,
    y: ErrorRealization,
    tol: float,
    measure: Optional[ShiftMeasure] = None,
    depth_cap: int = DEPTH_CAP,
) -> TruncationResult:
    """Series depth whose discarded tail is at most tol.

    When the error law has bounded support [lo, hi] with r_max * hi < 1 the
    bound is a certified worst case over all words: the tail past depth n is
    at most d_max * r_max^(n+1) * y_1...y_(n+1) / (1 - r_max * hi), using the
    realized error products where they sharpen the geometric envelope.

    Otherwise no uniform-in-word bound exists (taking the largest ratio at
    every step can even diverge), and the result is a typical-word bound,
    flagged ``certified=False``: per-symbol factor exp(sum_i w_i log r_i)
    (falling back to r_max without a symbol process), realized error
    products, geometric extrapolation of the remaining tail at the realized
    decay rate, all inflated by a safety factor of 4.
    """
    if tol <= 0:
        raise ConfigError(["tol must be positive"])
    d_max = ifs.digit_bound
    if d_max == 0.0:
        return TruncationResult(0, 0.0, True)
    r_max = ifs.ratio_max
    _, hi = law.support()

    if np.isfinite(hi) and r_max * hi < 1.0:
        q = r_max * hi
        log_const = np.log(d_max) - np.log1p(-q)
        length = 64
        while True:
            logs = y.log_cumsums(length)  # length+1 entries
            n_cand = np.arange(length)
            log_bound = log_const + (n_cand + 1) * np.log(r_max) + logs[1:]
            hits = np.nonzero(log_bound <= np.log(tol))[0]
            if hits.size:
                n = int(hits[0])
                return TruncationResult(n, float(np.exp(log_bound[n])), True)
            if length >= depth_cap:
                raise NumericError(
                    f"certified tail bound did not reach tol={tol} within depth {depth_cap}",
                    achieved=float(np.exp(log_bound.min())),
                )
            length = min(2 * length, depth_cap)

    g = _typical_ratio_factor(ifs, measure)
    log_d = np.log(d_max)
    length = 128
    while True:
        logs = y.log_cumsums(length)
        ell = np.arange(length + 1)
        log_t = log_d + ell * np.log(g) + logs  # log of typical term at each index
        window = max(8, length // 4)
        rate = np.median(np.diff(log_t[-window:]))
        if rate < 0:
            g_hat = float(np.exp(rate))
            t = np.exp(log_t - log_t.max())
            scale = np.exp(log_t.max())
            suffix = np.cumsum(t[::-1])[::-1]  # suffix[n] = sum of t[n:]
            beyond = t[-1] * g_hat / (1.0 - g_hat)
            n_cand = np.arange(length)  # tail past depth n starts at term n+1
            bound = TAIL_SAFETY * scale * (suffix[n_cand + 1] + beyond)
            hits = np.nonzero(bound <= tol)[0]
            # Accept only crossings well inside the realized window so the
            # extrapolation rests on observed terms, unless the cap is hit.
            if hits.size and (hits[0] <= length // 2 or length >= depth_cap):
                n = int(hits[0])
                return TruncationResult(n, float(bound[n]), False)
        if length >= depth_cap:
            achieved = float(TAIL_SAFETY * np.exp(log_t[-1]))
            raise NumericError(
                f"extrapolated tail bound did not reach tol={tol} within depth {depth_cap}",
                achieved=achieved,
            )
        length = min(2 * length, depth_cap)


def project(ifs: IfsSpec, word, y: ErrorRealization, depth: int) -> float:
    """Project one word at the given depth (depth+1 series terms)."""
    if depth < 0:
        raise ConfigError(["depth must be >= 0"])
    w = np.asarray(word, dtype=np.int64)
    if w.ndim != 1 or w.size < depth + 1:
        raise ConfigError([f"word must provide at least depth+1 = {depth + 1} symbols"])
    idx = w[: depth + 1] - 1
    if idx.min() < 0 or idx.max() >= ifs.m:
        raise ConfigError([f"symbols must lie in 1..{ifs.m}"])
    ycum = y.cumprods(depth)
    ratio_cum = np.concatenate(([1.0], np.cumprod(ifs.ratios[idx[:-1]])))
    return float(np.sum(ifs.digits[idx] * ratio_cum * ycum))


def _project_matrix(ifs: IfsSpec, words: np.ndarray, ycum: np.ndarray) -> np.ndarray:
    # words: (count, depth+1) 1-based symbols; ycum: (depth+1,) error products.
    idx = words - 1
    lam = ifs.ratios[idx]
    ratio_cum = np.ones_like(lam)
    np.cumprod(lam[:, :-1], axis=1, out=ratio_cum[:, 1:])
    return (ifs.digits[idx] * ratio_cum) @ ycum


def distance_phi(ifs: IfsSpec, word_i, word_j, y: ErrorRealization, depth: int) -> float:
    """|project(i) - project(j)| at a common depth."""
    return abs(project(ifs, word_i, y, depth) - project(ifs, word_j, y, depth))


@dataclass
class SampleBatch:
    """Draws from one conditional measure (fixed error sequence, random words)."""

    values: np.ndarray
    depth: int
    tail_bound: float
    certified: bool
    provenance: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def metadata(self) -> dict:
        return {
            "count": self.count,
            "depth": int(self.depth),
            "tail_bound": float(self.tail_bound),
            "certified": bool(self.certified),
            "provenance": self.provenance,
        }


def sample_measure(
    ifs: IfsSpec,
    measure: ShiftMeasure,
    law: ErrorLaw,
    y: ErrorRealization,
    count: int,
    tol: float,
    rng: np.random.Generator,
) -> SampleBatch:
    """Sample ``count`` points of the conditional measure at truncation tolerance tol.

    The error realization y stays fixed across the whole batch; only the
    words are redrawn.  Words are generated lazily in fixed-size blocks at
    length depth+1, so memory stays bounded regardless of count.
    """
    if count < 1:
        raise ConfigError(["count must be >= 1"])
    chi = lyapunov(ifs, measure, law)
    if chi >= 0:
        raise NotContractingError(chi)
    trunc = truncation_depth(ifs, law, y, tol, measure=measure)
    ycum = y.cumprods(trunc.depth)
    values = np.empty(count, dtype=float)
    done = 0
    while done < count:
        k = min(_CHUNK, count - done)
        words = measure.sample_words(k, trunc.depth + 1, rng)
        values[done : done + k] = _project_matrix(ifs, words, ycum)
        done += k
    provenance = {
        "ifs": ifs.describe(),
        "measure": measure.describe(),
        "law": law.describe(),
        "errors": y.describe(),
        "tol": float(tol),
        "lyapunov": chi,
    }
    return SampleBatch(values, trunc.depth, trunc.tail_bound, trunc.certified, provenance)
