import numpy as np
import pytest

from qipf import DomainError, EngineConfig, KernelConfig, ModeSpec, Signal, decompose_stream
from qipf.baselines import (
    SurpriseConfig,
    bayesian_surprise,
    classical_ip_stream,
    default_surprise_grid,
    entropy_difference,
    interval_entropies,
)
from qipf.kernel import renyi_quadratic_entropy
from qipf.signals import LorenzParams, gen_lorenz, normalize

K = KernelConfig(0.4)


@pytest.fixture(scope="module")
def lorenz():
    return normalize(gen_lorenz(LorenzParams(n_samples=400)))


def test_surprise_non_negative_and_first_zero(lorenz):
    res = bayesian_surprise(lorenz, SurpriseConfig(default_surprise_grid(lorenz, 0.4), K), return_flags=True)
    assert res.values[0] == 0.0
    assert np.all(res.values >= 0)
    assert res.values.shape == (400,)
    assert not res.floored.any()


def test_surprise_duplicate_sample_is_zero():
    x = np.full(1001, 0.7)
    s = bayesian_surprise(x, SurpriseConfig(np.linspace(-2, 3, 256), K))
    assert np.max(np.abs(s)) < 1e-10


def test_surprise_mode_versus_edge(rng):
    base = rng.normal(0.0, 1.0, 2000)
    grid = np.linspace(-6, 6, 256)
    cfg = SurpriseConfig(grid, K)
    at_mode = bayesian_surprise(np.append(base, 0.0), cfg)[-1]
    at_edge = bayesian_surprise(np.append(base, 3.5), cfg)[-1]
    assert at_mode < at_edge


def test_surprise_zero_prior_is_floored():
    # far sample, tiny sigma: the prior underflows to zero on part of the grid
    cfg = SurpriseConfig(np.linspace(-10, 10, 64), KernelConfig(0.05))
    res = bayesian_surprise([-9.0, 9.0], cfg, return_flags=True)
    assert res.floored[1]
    assert np.isfinite(res.values[1]) and res.values[1] > 0


def test_surprise_config_validation():
    with pytest.raises(DomainError):
        SurpriseConfig(np.linspace(0, 1, 10), K)
    with pytest.raises(DomainError):
        SurpriseConfig(np.r_[np.linspace(0, 1, 20), 0.5], K)


def test_entropy_difference_examples(rng):
    a = rng.normal(size=50)
    assert entropy_difference(np.r_[a, a], 50, K)[0] == 0.0
    b = rng.normal(size=50)
    d = entropy_difference(np.r_[np.full(50, 2.0), b], 50, K)[0]
    assert d == pytest.approx(renyi_quadratic_entropy(b, K), abs=1e-15)


def test_entropy_difference_antisymmetric(rng):
    a, b = rng.normal(size=40), rng.uniform(-3, 3, 40)
    assert entropy_difference(np.r_[a, b], 40, K)[0] == -entropy_difference(np.r_[b, a], 40, K)[0]


def test_entropy_difference_stationary_mean():
    means = []
    for seed in range(30):
        x = np.random.default_rng(seed).normal(size=4000)
        means.append(entropy_difference(x, 400, K).mean())
    assert abs(np.mean(means)) < 0.05


def test_entropy_difference_length_check():
    with pytest.raises(DomainError):
        entropy_difference(np.arange(10.0), 6, K)
    assert interval_entropies(np.arange(10.0), 4, K).shape == (2,)


def test_classical_ip_examples():
    assert np.all(classical_ip_stream(np.full(20, 1.5), K) == 1.0)
    far = classical_ip_stream([0.0, 0.1, -0.1, 0.0 + 6.1 * 0.4], K)
    assert far[-1] < 1e-6


def test_classical_ip_matches_engine_channel(lorenz):
    for window in (None, 50):
        trace = decompose_stream(lorenz, EngineConfig(K, ModeSpec(4), window=window))
        assert np.array_equal(classical_ip_stream(lorenz, K, window), trace.ipf)


def test_baselines_are_causal(lorenz):
    x = lorenz.samples
    grid = default_surprise_grid(x, 0.4)
    full_s = bayesian_surprise(x, SurpriseConfig(grid, K))
    full_ip = classical_ip_stream(x, K)
    full_ed = entropy_difference(x, 50, K)
    for cut in (60, 150, 333):
        assert np.array_equal(bayesian_surprise(x[:cut], SurpriseConfig(grid, K)), full_s[:cut])
        assert np.array_equal(classical_ip_stream(x[:cut], K), full_ip[:cut - 1])
    assert np.array_equal(entropy_difference(x[:200], 50, K), full_ed[:3])


def test_windowed_surprise_forgets(rng):
    grid = np.linspace(-5, 5, 128)
    cfg = SurpriseConfig(grid, K, window=30)
    x = np.r_[rng.normal(size=100), np.full(60, 3.0)]
    s = bayesian_surprise(x, cfg)
    assert np.all(s >= 0)
    # after the window fills with the repeated value, the model stops moving
    assert s[-1] < 1e-3 < s[101]


def test_signal_input_type(lorenz):
    assert np.array_equal(classical_ip_stream(Signal(lorenz.samples[:30]), K), classical_ip_stream(lorenz.samples[:30], K))
