"""Stationary symbol processes on the alphabet {1, ..., m}.

Three families are supported: i.i.d. (Bernoulli) draws, stationary Markov
chains, and the measure of maximal entropy of a subshift of finite type
(the Parry measure built from Perron eigendata of the adjacency matrix).
Entropies are in nats.
"""
from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, NumericError

PROB_TOL = 1e-12
_POWER_TOL = 1e-14
_POWER_CAP = 100_000


def _check_prob_vector(p: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    problems = []
    if p.ndim != 1 or p.size == 0:
        raise ConfigError([f"{what} must be a non-empty 1-d probability vector"])
    if np.any(p < 0):
        problems.append(f"{what} has negative entries")
    if abs(float(p.sum()) - 1.0) > PROB_TOL:
        problems.append(f"{what} sums to {float(p.sum())!r}, not 1 within {PROB_TOL}")
    if problems:
        raise ConfigError(problems)
    p = p.copy()
    p.setflags(write=False)
    return p


def _entropy_of_rows(weights: np.ndarray, rows: np.ndarray) -> float:
    # -sum_i w_i sum_j q_ij log q_ij with the 0 log 0 = 0 convention.
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0, rows * np.log(np.where(rows > 0, rows, 1.0)), 0.0)
    return float(-(weights @ terms.sum(axis=1)))


def _step_chain(cum_rows: np.ndarray, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # One synchronous transition for a vector of chain states (0-based).
    u = rng.random(state.shape[0])
    nxt = (u[:, None] > cum_rows[state]).sum(axis=1)
    return np.minimum(nxt, cum_rows.shape[1] - 1)


def _categorical(p: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(p)
    u = rng.random(count)
    return np.minimum(np.searchsorted(cum, u, side="right"), p.size - 1)


def _is_irreducible(adjacency: np.ndarray) -> bool:
    m = adjacency.shape[0]
    reach = (adjacency > 0).astype(np.int64) | np.eye(m, dtype=np.int64)
    for _ in range(int(np.ceil(np.log2(max(m, 2)))) + 1):
        reach = ((reach @ reach) > 0).astype(np.int64)
    return bool(np.all(reach > 0))


def _perron_eigendata(A: np.ndarray, tol: float = _POWER_TOL) -> tuple[float, np.ndarray]:
    """Perron root and positive right eigenvector of an irreducible 0/1 matrix.

    Power iteration runs on A + I: the shift leaves eigenvectors unchanged,
    moves the Perron root up by exactly 1, and makes the matrix primitive so
    the iteration converges even for periodic adjacencies.
    """
    m = A.shape[0]
    B = A.astype(float) + np.eye(m)
    v = np.full(m, 1.0 / m)
    lam = 0.0
    for _ in range(_POWER_CAP):
        w = B @ v
        lam_new = float(w.sum())
        w /= lam_new
        done = np.max(np.abs(w - v)) < tol and abs(lam_new - lam) < tol
        v, lam = w, lam_new
        if done:
            break
    else:
        raise NumericError(
            f"power iteration did not reach tolerance {tol} in {_POWER_CAP} steps"
        )
    return lam - 1.0, v


def _stationary_vector(P: np.ndarray) -> np.ndarray:
    # Solve pi (P - I) = 0 with sum(pi) = 1 by replacing one equation with the
    # normalisation row; exact up to the dense solver's round-off.
    m = P.shape[0]
    M = np.transpose(P - np.eye(m)).copy()
    M[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConfigError([f"could not compute a stationary vector: {exc}"]) from exc
    return pi


class ShiftMeasure:
    """Common interface of the three shift-invariant symbol processes."""

    variant: str = "?"
    m: int = 0

    def entropy(self) -> float:
        raise NotImplementedError

    def symbol_marginal(self) -> np.ndarray:
        """Marginal distribution of a single symbol (used for Lyapunov averages)."""
        raise NotImplementedError

    def sample_words(self, count: int, length: int, rng: np.random.Generator) -> np.ndarray:
        """Sample ``count`` independent words of ``length`` symbols, 1-based, shape (count, length)."""
        raise NotImplementedError

    def sample_sequence(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """One word of n symbols drawn from the stationary process."""
        if n < 0:
            raise ConfigError(["sequence length must be >= 0"])
        if n == 0:
            return np.empty(0, dtype=np.int64)
        return self.sample_words(1, n, rng)[0]

    def cylinder_measure(self, word) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def _word_index(self, word) -> np.ndarray:
        w = np.asarray(word, dtype=np.int64)
        if w.ndim != 1:
            raise ValueError("a word must be a 1-d sequence of symbols")
        if w.size and (w.min() < 1 or w.max() > self.m):
            raise ValueError(f"symbols must lie in 1..{self.m}")
        return w - 1

    def __eq__(self, other) -> bool:
        return isinstance(other, ShiftMeasure) and self.describe() == other.describe()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(m={self.m})"


class Bernoulli(ShiftMeasure):
    """Independent symbols with a fixed probability vector."""

    variant = "bernoulli"

    def __init__(self, p):
        self.p = _check_prob_vector(p, "p")
        self.m = int(self.p.size)

    def entropy(self) -> float:
        return _entropy_of_rows(np.ones(1), self.p[None, :])

    def symbol_marginal(self) -> np.ndarray:
        return self.p

    def sample_words(self, count, length, rng):
        return rng.choice(self.m, size=(count, length), p=self.p).astype(np.int64) + 1

    def cylinder_measure(self, word) -> float:
        idx = self._word_index(word)
        return float(np.prod(self.p[idx])) if idx.size else 1.0

    def describe(self) -> dict:
        return {"kind": "bernoulli", "p": [float(x) for x in self.p]}


class Markov(ShiftMeasure):
    """Stationary Markov chain started from its stationary vector.

    Parameters
    ----------
    transition : (m, m) row-stochastic matrix.
    stationary : optional stationary vector; computed from ``transition``
        when omitted, validated against it either way.
    """

    variant = "markov"

    def __init__(self, transition, stationary=None):
        P = np.asarray(transition, dtype=float)
        problems = []
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ConfigError(["transition must be a square matrix"])
        if np.any(P < 0):
            problems.append("transition has negative entries")
        bad_rows = np.where(np.abs(P.sum(axis=1) - 1.0) > PROB_TOL)[0]
        if bad_rows.size:
            problems.append(f"transition rows {bad_rows.tolist()} do not sum to 1")
        if problems:
            raise ConfigError(problems)
        pi = _stationary_vector(P) if stationary is None else np.asarray(stationary, dtype=float)
        pi = _check_prob_vector(pi, "stationary vector")
        residual = float(np.max(np.abs(pi @ P - pi)))
        if residual > PROB_TOL:
            raise ConfigError(
                [f"stationary vector fails pi P = pi (residual {residual:.3g} > {PROB_TOL})"]
            )
        self.transition = P.copy()
        self.transition.setflags(write=False)
        self.stationary = pi
        self.m = int(P.shape[0])
        self._cum_rows = np.cumsum(self.transition, axis=1)

    def entropy(self) -> float:
        return _entropy_of_rows(self.stationary, self.transition)

    def symbol_marginal(self) -> np.ndarray:
        return self.stationary

    def sample_words(self, count, length, rng):
        words = np.empty((count, length), dtype=np.int64)
        state = _categorical(self.stationary, count, rng)
        words[:, 0] = state + 1
        for t in range(1, length):
            state = _step_chain(self._cum_rows, state, rng)
            words[:, t] = state + 1
        return words

    def cylinder_measure(self, word) -> float:
        idx = self._word_index(word)
        if idx.size == 0:
            return 1.0
        value = self.stationary[idx[0]]
        if idx.size > 1:
            value = value * np.prod(self.transition[idx[:-1], idx[1:]])
        return float(value)

    def describe(self) -> dict:
        return {
            "kind": "markov",
            "transition": [[float(x) for x in row] for row in self.transition],
            "stationary": [float(x) for x in self.stationary],
        }


class MaxEntropySFT(ShiftMeasure):
    """Measure of maximal entropy of a subshift of finite type.

    The adjacency matrix lists allowed transitions (entry [i, j] = 1 when
    symbol j may follow symbol i).  Sampling and cylinder weights use the
    Parry chain assembled from the Perron eigendata; the entropy is the log
    of the Perron root.
    """

    variant = "sft"

    def __init__(self, adjacency):
        A = np.asarray(adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ConfigError(["adjacency must be a square matrix"])
        if not np.all(np.isin(A, (0, 1))):
            raise ConfigError(["adjacency entries must be 0 or 1"])
        A = A.astype(np.int64)
        if not _is_irreducible(A):
            raise ConfigError(["adjacency is not irreducible"])
        perron, right = _perron_eigendata(A)
        if perron <= 0:
            raise ConfigError(["adjacency admits no infinite admissible sequences"])
        _, left = _perron_eigendata(A.T)
        P = A * right[None, :] / (perron * right[:, None])
        P /= P.sum(axis=1, keepdims=True)  # absorb eigen-residual
        pi = left * right
        pi /= pi.sum()
        residual = float(np.max(np.abs(pi @ P - pi)))
        if residual > 1e-12:
            raise NumericError(f"Parry chain inconsistent (residual {residual:.3g})")
        self.adjacency = A.copy()
        self.adjacency.setflags(write=False)
        self.perron_root = float(perron)
        self._chain = Markov(P, pi)
        self.m = int(A.shape[0])

    @property
    def parry_chain(self) -> Markov:
        return self._chain

    def entropy(self) -> float:
        return float(np.log(self.perron_root))

    def symbol_marginal(self) -> np.ndarray:
        return self._chain.stationary

    def sample_words(self, count, length, rng):
        return self._chain.sample_words(count, length, rng)

    def cylinder_measure(self, word) -> float:
        # Forbidden transitions carry Parry weight 0, so inadmissible words
        # come out as 0 without a separate admissibility pass.
        return self._chain.cylinder_measure(word)

    def describe(self) -> dict:
        return {"kind": "sft", "adjacency": [[int(x) for x in row] for row in self.adjacency]}


def measure_from_dict(spec: dict) -> ShiftMeasure:
    """Rebuild a ShiftMeasure from its describe() dictionary."""
    kind = spec.get("kind")
    if kind == "bernoulli":
        return Bernoulli(spec["p"])
    if kind == "markov":
        return Markov(spec["transition"], spec.get("stationary"))
    if kind == "sft":
        return MaxEntropySFT(spec["adjacency"])
    raise ConfigError([f"unknown symbol process kind {kind!r}"])
