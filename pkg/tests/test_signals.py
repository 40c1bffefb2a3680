import math

import numpy as np
import pytest
from scipy.optimize import brentq

from qipf import DomainError, IntegrationError, Signal
from qipf.signals import (
    LORENZ_NOISE_SCHEDULE,
    LorenzParams,
    MackeyGlassParams,
    NoiseSchedule,
    add_noise,
    gen_lorenz,
    gen_mackey_glass,
    gen_sine,
    gen_sine_mixture,
    lorenz_rhs,
    mackey_glass_rhs,
    noise_variances,
    normalize,
    random_schedule,
    read_signal_csv,
    read_signal_raw,
    scale,
    write_signal_csv,
    write_signal_raw,
)


def test_lorenz_fixed_point():
    rho, beta = 28.0, 8.0 / 3.0
    c = math.sqrt(beta * (rho - 1))
    p = LorenzParams(init=(c, c, rho - 1), n_samples=2)
    np.testing.assert_allclose(lorenz_rhs(np.array(p.init), p), 0.0, atol=1e-12)
    for comp in "xyz":
        s = gen_lorenz(LorenzParams(init=(c, c, rho - 1), n_samples=2, component=comp))
        assert s.samples[1] == pytest.approx(s.samples[0], abs=1e-12)


def test_lorenz_initial_derivative():
    p = LorenzParams()
    np.testing.assert_allclose(lorenz_rhs(np.array(p.init), p), [10.0, -1.0, -2.8], rtol=1e-14)


def _halving_change(**kw):
    a = gen_lorenz(LorenzParams(n_samples=100, **kw)).samples
    b = gen_lorenz(LorenzParams(n_samples=199, dt=0.005, **kw)).samples[::2]
    return np.max(np.abs(a - b)) / np.max(np.abs(a))


def test_lorenz_step_halving_default_step():
    # one RK4 step per 0.01 sample; stated bound is 1e-6 relative
    assert _halving_change() < 1e-6


def test_lorenz_fourth_order():
    def g(dt, n, every):
        return gen_lorenz(LorenzParams(dt=dt, n_samples=n)).samples[::every]
    a, b, c = g(0.01, 100, 1), g(0.005, 199, 2), g(0.0025, 397, 4)
    ratio = np.max(np.abs(a - b)) / np.max(np.abs(b - c))
    assert 14 < ratio < 18


def test_lorenz_step_halving_with_substeps():
    assert _halving_change(substeps=4) < 1e-6


def test_lorenz_finite_and_deterministic():
    for beta in (8 / 3, 5 / 3):
        s = gen_lorenz(LorenzParams(beta=beta, n_samples=5000))
        assert np.all(np.isfinite(s.samples))
        assert np.array_equal(s.samples, gen_lorenz(LorenzParams(beta=beta, n_samples=5000)).samples)


def test_lorenz_divergence_reports_step():
    with pytest.raises(IntegrationError) as err:
        gen_lorenz(LorenzParams(rho=1e200, init=(1e200, 1e200, 1e200), n_samples=10))
    assert err.value.step >= 1


def test_mackey_glass_equilibrium():
    alpha, beta, n = 0.2, 0.1, 10.0
    x_star = brentq(lambda x: alpha * x / (1 + x**n) - beta * x, 0.5, 2.0)
    s = gen_mackey_glass(MackeyGlassParams(alpha=alpha, beta_mg=beta, n_exp=n, history_init=x_star, n_samples=1000))
    assert np.max(np.abs(s.samples - x_star)) < 1e-8


def test_mackey_glass_delay_drive():
    p = MackeyGlassParams(n_exp=7.3)
    assert mackey_glass_rhs(0.0, 1.0, p) == pytest.approx(0.1, abs=1e-15)


def test_mackey_glass_step_halving():
    a = gen_mackey_glass(MackeyGlassParams(n_samples=100)).samples
    b = gen_mackey_glass(MackeyGlassParams(n_samples=199, dt=0.05)).samples[::2]
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-5


def test_mackey_glass_step_halving_past_delay():
    # beyond t = tau the interpolated history is in play
    a = gen_mackey_glass(MackeyGlassParams(n_samples=1000)).samples
    b = gen_mackey_glass(MackeyGlassParams(n_samples=1999, dt=0.05)).samples[::2]
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-4


def test_mackey_glass_default_parameters_finite():
    s = gen_mackey_glass(MackeyGlassParams(n_samples=5000))
    assert np.all(np.isfinite(s.samples))
    assert s.samples.std() > 0.05


@pytest.mark.parametrize("field,value", [("alpha", 0.0), ("beta_mg", -1.0), ("tau", 0.0), ("n_exp", 0.0)])
def test_mackey_glass_params_validated(field, value):
    with pytest.raises(DomainError):
        MackeyGlassParams(**{field: value})


def test_sine_lengths_and_values():
    assert len(gen_sine(100, 8000, 0.16)) == 1280
    assert len(gen_sine(100, 8000, 0.05)) == 400
    assert gen_sine(2000, 8000, 0.01).samples[1] == pytest.approx(1.0, abs=1e-15)


def test_sine_alias():
    a = gen_sine(300, 500, 0.2).samples
    b = gen_sine(200, 500, 0.2).samples
    np.testing.assert_allclose(a, -b, atol=1e-12)


def test_sine_mixture_is_sum():
    mix = gen_sine_mixture([300, 500], 8000, 0.01).samples
    np.testing.assert_allclose(mix, gen_sine(300, 8000, 0.01).samples + gen_sine(500, 8000, 0.01).samples, atol=1e-15)


def test_normalize():
    assert np.array_equal(normalize(Signal([-1.0, 1.0])).samples, [-1.0, 1.0])
    assert np.array_equal(normalize(Signal([0.0, 2.0])).samples, [-1.0, 1.0])
    with pytest.raises(DomainError):
        normalize(Signal([3.0, 3.0, 3.0]))
    s = normalize(gen_lorenz(LorenzParams(n_samples=800)))
    assert abs(s.samples.mean()) < 1e-12
    assert abs(s.samples.var() - 1) < 1e-12
    np.testing.assert_allclose(normalize(s).samples, s.samples, atol=1e-12)


def test_scale():
    assert np.array_equal(scale(Signal([-2.0, 2.0]), 0.5).samples, [-1.0, 1.0])
    s = Signal([0.3, -1.2])
    assert np.array_equal(scale(s, 1.0).samples, s.samples)
    assert np.all(scale(s, 0.0).samples == 0.0)


def test_noise_infinite_snr_is_identity():
    s = gen_sine(100, 8000, 0.05)
    out = add_noise(s, NoiseSchedule([(0, 400, math.inf)], rng_seed=1))
    assert np.array_equal(out.samples, s.samples)


def test_noise_preserves_untouched_samples():
    s = normalize(gen_lorenz(LorenzParams(n_samples=1200)))
    out = add_noise(s, LORENZ_NOISE_SCHEDULE.with_seed(4))
    assert len(out) == len(s)
    assert np.array_equal(out.samples[:500], s.samples[:500])
    assert not np.array_equal(out.samples[500:], s.samples[500:])
    assert np.array_equal(out.samples, add_noise(s, LORENZ_NOISE_SCHEDULE.with_seed(4)).samples)


def test_noise_realized_snr_matches_schedule():
    s = normalize(gen_lorenz(LorenzParams(n_samples=1200)))
    snrs = []
    for seed in range(30):
        noisy = add_noise(s, LORENZ_NOISE_SCHEDULE.with_seed(seed))
        clean = s.samples[600:700]
        noise = noisy.samples[600:700] - clean
        snrs.append(10 * math.log10(np.mean(clean**2) / np.mean(noise**2)))
    assert abs(np.mean(snrs) - 20.4) < 1.0


def test_noise_variance_scales_with_power():
    base = gen_sine(100, 8000, 0.1)
    sched = NoiseSchedule([(0, 800, 10.0)])
    v1 = noise_variances(base, sched)[0]
    v2 = noise_variances(scale(base, 2.0), sched)[0]
    assert v2 == pytest.approx(4 * v1, rel=1e-12)
    emp1, emp2 = [], []
    for seed in range(30):
        emp1.append(np.var(add_noise(base, sched.with_seed(seed)).samples - base.samples))
        emp2.append(np.var(add_noise(scale(base, 2.0), sched.with_seed(seed)).samples - 2 * base.samples))
    assert np.mean(emp2) / np.mean(emp1) == pytest.approx(4.0, rel=1e-9)


def test_noise_schedule_validation():
    with pytest.raises(DomainError):
        NoiseSchedule([(0, 10, 5.0), (20, 30, 5.0)])
    with pytest.raises(DomainError):
        add_noise(Signal(np.zeros(10) + 1), NoiseSchedule([(0, 20, 5.0)]))


def test_random_schedule():
    sched = random_schedule(2500, 5000, 500, (0, 20), seed=3)
    assert sched.span == (2500, 5000)
    assert len(sched.intervals) == 5
    assert all(0 <= iv.snr_db <= 20 for iv in sched.intervals)
    assert sched == random_schedule(2500, 5000, 500, (0, 20), seed=3)


def test_signal_io_roundtrip(tmp_path):
    s = gen_mackey_glass(MackeyGlassParams(n_samples=50))
    write_signal_csv(s, tmp_path / "s.csv")
    assert np.array_equal(read_signal_csv(tmp_path / "s.csv").samples, s.samples)
    write_signal_raw(s, tmp_path / "s.f64")
    assert (tmp_path / "s.f64").stat().st_size == 50 * 8
    assert np.array_equal(read_signal_raw(tmp_path / "s.f64").samples, s.samples)
