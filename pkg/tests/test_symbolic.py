"""Symbol process tests: closed-form entropies, Perron data, sampling laws."""
import numpy as np
import pytest

from rifslab import Bernoulli, ConfigError, Markov, MaxEntropySFT
from rifslab.symbolic import measure_from_dict

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def test_bernoulli_fair_coin_entropy():
    assert abs(Bernoulli([0.5, 0.5]).entropy() - np.log(2.0)) < 1e-12


def test_bernoulli_entropy_closed_form():
    p = np.array([0.2, 0.3, 0.5])
    expected = -float(np.sum(p * np.log(p)))
    assert abs(Bernoulli(p).entropy() - expected) < 1e-12


@pytest.mark.parametrize(
    "p",
    [[0.5, 0.6], [-0.1, 1.1], [0.5, 0.5, 0.1]],
)
def test_bernoulli_rejects_bad_probability_vectors(p):
    with pytest.raises(ConfigError):
        Bernoulli(p)


def _example_chain():
    return np.array([[0.9, 0.1], [0.2, 0.8]])


def test_markov_stationary_is_fixed_point():
    chain = Markov(_example_chain())
    pi = chain.symbol_marginal()
    assert np.all(pi > 0)
    assert abs(pi.sum() - 1.0) < 1e-12
    assert np.max(np.abs(pi @ _example_chain() - pi)) < 1e-12
    # independent oracle: left eigenvector of the transition matrix
    w, v = np.linalg.eig(_example_chain().T)
    vec = np.real(v[:, np.argmax(np.real(w))])
    vec = vec / vec.sum()
    assert np.max(np.abs(pi - vec)) < 1e-10


def test_markov_entropy_matches_direct_sum():
    P = _example_chain()
    chain = Markov(P)
    pi = chain.symbol_marginal()
    expected = -sum(
        pi[i] * P[i, j] * np.log(P[i, j]) for i in range(2) for j in range(2)
    )
    assert abs(chain.entropy() - expected) < 1e-12


@pytest.mark.parametrize(
    "measure",
    [Bernoulli([0.3, 0.7]), Markov(_example_chain()), MaxEntropySFT([[1, 1], [1, 0]])],
    ids=["bernoulli", "markov", "sft"],
)
def test_entropy_via_cylinder_decay(measure):
    """Sampled words carry -log(cylinder mass)/K close to the entropy.

    This is the information-content route to h, independent of the row-sum
    formulas the classes use internally.
    """
    rng = np.random.default_rng(101)
    K = 500
    words = measure.sample_words(200, K, rng)
    info = np.array([-np.log(measure.cylinder_measure(w)) / K for w in words])
    se = info.std(ddof=1) / np.sqrt(info.size)
    assert abs(info.mean() - measure.entropy()) < 3.5 * se + 5e-3


@pytest.mark.parametrize(
    "measure",
    [Bernoulli([0.3, 0.7]), Markov(_example_chain()), MaxEntropySFT([[1, 1], [1, 0]])],
    ids=["bernoulli", "markov", "sft"],
)
def test_cylinder_additivity(measure):
    # mu[w] must split exactly across one-symbol extensions
    rng = np.random.default_rng(7)
    symbols = range(1, measure.m + 1)
    for w in measure.sample_words(20, 6, rng):
        total = sum(measure.cylinder_measure(np.append(w, a)) for a in symbols)
        assert abs(total - measure.cylinder_measure(w)) < 1e-14
    assert abs(sum(measure.cylinder_measure([a]) for a in symbols) - 1.0) < 1e-14


def test_fibonacci_entropy_is_log_golden_ratio():
    sft = MaxEntropySFT([[1, 1], [1, 0]])
    assert abs(sft.entropy() - np.log(GOLDEN)) < 1e-12


def test_parry_chain_consistency():
    sft = MaxEntropySFT([[1, 1], [1, 0]])
    chain = sft.parry_chain
    P = np.array(
        [[chain.cylinder_measure([i, j]) for j in (1, 2)] for i in (1, 2)]
    )
    pi = chain.symbol_marginal()
    P = P / pi[:, None]
    assert np.max(np.abs(P.sum(axis=1) - 1.0)) < 1e-12
    assert np.max(np.abs(pi @ P - pi)) < 1e-12
    assert P[1, 1] < 1e-15  # forbidden transition carries no mass
    # Parry weights from the golden ratio directly
    assert abs(P[0, 0] - 1.0 / GOLDEN) < 1e-10
    assert abs(P[0, 1] - 1.0 / GOLDEN**2) < 1e-10


def test_sft_samples_avoid_forbidden_transition():
    sft = MaxEntropySFT([[1, 1], [1, 0]])
    words = sft.sample_words(500, 40, np.random.default_rng(3))
    pairs = np.stack([words[:, :-1], words[:, 1:]])
    assert not np.any((pairs[0] == 2) & (pairs[1] == 2))
    assert set(np.unique(words)) <= {1, 2}


@pytest.mark.parametrize(
    "measure",
    [Bernoulli([0.25, 0.75]), Markov(_example_chain()), MaxEntropySFT([[1, 1], [1, 0]])],
    ids=["bernoulli", "markov", "sft"],
)
def test_symbol_frequencies_match_marginal(measure):
    rng = np.random.default_rng(11)
    words = measure.sample_words(2000, 50, rng)
    freq = np.bincount(words.ravel() - 1, minlength=measure.m) / words.size
    assert np.max(np.abs(freq - measure.symbol_marginal())) < 0.01


def test_sample_words_shape_and_determinism():
    b = Bernoulli([0.5, 0.5])
    w1 = b.sample_words(10, 8, np.random.default_rng(5))
    w2 = b.sample_words(10, 8, np.random.default_rng(5))
    assert w1.shape == (10, 8)
    assert np.array_equal(w1, w2)


@pytest.mark.parametrize(
    "measure",
    [Bernoulli([0.4, 0.6]), Markov(_example_chain()), MaxEntropySFT([[1, 1], [1, 0]])],
    ids=["bernoulli", "markov", "sft"],
)
def test_measure_round_trips_through_describe(measure):
    clone = measure_from_dict(measure.describe())
    assert clone.describe() == measure.describe()
    assert abs(clone.entropy() - measure.entropy()) < 1e-14


def test_sft_rejects_bad_adjacency():
    with pytest.raises(ConfigError):
        MaxEntropySFT([[1, 0], [0, 1]])  # two isolated loops, reducible
    with pytest.raises(ConfigError):
        MaxEntropySFT([[0, 2], [1, 0]])  # entries must be 0/1
    with pytest.raises(ConfigError):
        MaxEntropySFT([[0]])  # no admissible infinite sequence


def test_markov_rejects_bad_rows():
    with pytest.raises(ConfigError):
        Markov([[0.5, 0.4], [0.2, 0.8]])
    with pytest.raises(ConfigError):
        Markov([[1.0], [1.0]])


def test_measure_from_dict_unknown_kind():
    with pytest.raises(ConfigError):
        measure_from_dict({"kind": "poisson"})
