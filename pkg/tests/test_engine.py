import math

import numpy as np
import pytest
from numpy.polynomial import hermite as nph

from qipf import (
    DomainError,
    EngineConfig,
    KernelConfig,
    ModeSpec,
    ModeState,
    NumericalError,
    causal_field,
    decompose_stream,
    eigen_update,
    ground_state_energy,
    mode_average,
    spatial_qipf,
)
from qipf.engine import read_trace_csv, write_trace_csv
from qipf.signals import LorenzParams, gen_lorenz, normalize


def cfg(sigma=0.5, m=6, **kw):
    return EngineConfig(KernelConfig(sigma), ModeSpec(m), **kw)


@pytest.fixture(scope="module")
def lorenz300():
    return normalize(gen_lorenz(LorenzParams(n_samples=300))).samples


def test_constant_signal_has_zero_qipf():
    sigma, m = 0.4, 8
    trace = decompose_stream(np.full(30, 1.7), cfg(sigma, m))
    # independent oracle: numpy's Hermite series and its derivative
    expected = []
    for k in range(1, m + 1):
        coef = np.zeros(2 * k + 1)
        coef[-1] = 1.0
        h = nph.hermval(1.0, coef)
        dh = nph.hermval(1.0, nph.hermder(coef))
        expected.append(0.5 * sigma**2 * dh * (-1 / (2 * sigma**2)) / h)
    assert np.all(trace.psi == 1.0)
    for r in range(len(trace)):
        np.testing.assert_allclose(trace.ratio[r], expected, rtol=1e-12)
    # the mean of i equal terms can differ from the term by an ulp
    np.testing.assert_allclose(trace.eigen, -trace.ratio, rtol=1e-13)
    np.testing.assert_allclose(trace.qipf, 0.0, atol=1e-12)
    assert not trace.flagged.any()


def test_two_sample_limit():
    trace = decompose_stream([0.0, 1e-8], cfg(1.0, 5))
    assert len(trace) == 1
    assert np.allclose(trace.qipf, 0.0, atol=1e-12)


def test_short_signal_rejected():
    with pytest.raises(DomainError):
        decompose_stream([1.0], cfg())


def test_eigen_update_examples():
    s = ModeState(k=1, running_min_ratio=-0.3)
    t = eigen_update(s, -0.5)
    assert t.running_min_ratio == -0.5 and t.eigenvalue == 0.5
    u = eigen_update(s, 0.1)
    assert u.running_min_ratio == -0.3 and u.eigenvalue == pytest.approx(0.3)
    v = eigen_update(s, math.nan)
    assert v.running_min_ratio == -0.3 and v.skipped == 1


def test_eigen_update_matches_engine(lorenz300):
    trace = decompose_stream(lorenz300, cfg(0.3, 6))
    for k in range(1, 7):
        state = ModeState(k)
        for r in range(len(trace)):
            if not trace.flagged[r, k - 1]:
                state = eigen_update(state, trace.ratio[r, k - 1])
            assert state.eigenvalue == trace.eigen[r, k - 1]


def test_stream_invariants(lorenz300):
    trace = decompose_stream(lorenz300, cfg(0.3, 12))
    assert np.all(trace.qipf >= 0)
    assert np.all(np.diff(trace.eigen, axis=0) >= 0)
    ok = ~trace.flagged
    assert np.array_equal((trace.eigen + trace.ratio)[ok], trace.qipf[ok])
    assert trace.index[0] == 1 and trace.index[-1] == len(lorenz300) - 1


def test_prefix_equivalence(lorenz300):
    c = cfg(0.4, 8)
    full = decompose_stream(lorenz300, c)
    for n in (2, 17, 150):
        part = decompose_stream(lorenz300[:n], c)
        for name in ("psi", "ipf", "ratio", "eigen", "qipf"):
            assert np.array_equal(getattr(part, name), getattr(full, name)[: n - 1])


@pytest.mark.parametrize("include_current", [False, True])
def test_window_consistency(lorenz300, include_current):
    W = 40
    junk = np.random.default_rng(3).normal(0, 3, 25)
    ext = np.concatenate([junk, lorenz300])
    off = junk.size
    for scope in ("history", "window"):
        c = cfg(0.4, 6, window=W, eigen_scope=scope, include_current=include_current)
        base = decompose_stream(lorenz300, c)
        more = decompose_stream(ext, c)
        # rows for samples i >= W + 1 see the same wave-function window
        rows_b = slice(W, None)
        rows_m = slice(W + off, None)
        assert np.array_equal(base.ratio[rows_b], more.ratio[rows_m])
        if scope == "window":
            tail_b = slice(2 * W, None)
            tail_m = slice(2 * W + off, None)
            assert np.array_equal(base.eigen[tail_b], more.eigen[tail_m])


def test_include_current_changes_kernel_sum(lorenz300):
    a = decompose_stream(lorenz300[:50], cfg(include_current=False))
    b = decompose_stream(lorenz300[:50], cfg(include_current=True))
    assert not np.array_equal(a.psi, b.psi)
    # inclusive sum contains the self term exp(0) = 1
    i = 10
    past = lorenz300[:i]
    inc = (np.exp(-(lorenz300[i] - past) ** 2 / (2 * 0.25)).sum() + 1) / (i + 1)
    assert b.ipf[i - 1] == pytest.approx(inc, rel=1e-13)


def test_translation_equivariance(lorenz300):
    c = cfg(0.5, 6)
    a = decompose_stream(lorenz300[:120], c)
    b = decompose_stream(lorenz300[:120] + 7.0, c)
    for name in ("ratio", "eigen", "qipf"):
        A, B = getattr(a, name), getattr(b, name)
        np.testing.assert_allclose(B, A, rtol=1e-8, atol=1e-10)


def test_causal_field_generalizes_stream(lorenz300):
    c = cfg(0.7, 5)
    a = decompose_stream(lorenz300[:80], c)
    b = causal_field(lorenz300[:80], lorenz300[:80], c)
    assert np.array_equal(a.qipf, b.qipf)
    pts = 2 * lorenz300[:80]
    d = causal_field(pts, lorenz300[:80], c)
    assert np.array_equal(d.x, pts[1:])
    assert np.all(d.qipf >= 0)


def test_underflow_raises_numerical_error():
    with pytest.raises(NumericalError) as err:
        decompose_stream([0.0, 1e6], cfg(0.1, 3))
    assert err.value.sample == 1


def test_division_guard_flags_and_skips():
    # psi = 1/sqrt(2) puts the first mode on the zero of H_2
    sigma = 1.0
    d = math.sqrt(2 * math.log(2.0)) * sigma
    trace = decompose_stream([0.0, d, 0.05], EngineConfig(KernelConfig(sigma, epsilon=1e-6), ModeSpec(2)))
    assert trace.flagged[0, 0] and not trace.flagged[0, 1]
    assert (1, 1) in trace.events
    # the flagged ratio never entered the minimum
    assert trace.eigen[1, 0] == -trace.ratio[1, 0]
    assert np.all(trace.qipf >= 0)


def test_spatial_single_point():
    res = spatial_qipf([0.3], [0.3], cfg(0.6, 4))
    assert np.all(res.qipf == 0.0)


def test_spatial_symmetry_and_zero_min():
    grid = np.linspace(-3, 3, 121)
    res = spatial_qipf(grid, [-0.8, 0.8], cfg(0.5, 6))
    np.testing.assert_allclose(res.qipf, res.qipf[::-1], atol=1e-10, rtol=1e-10)
    assert np.all(res.qipf.min(axis=0) == 0.0)
    assert res.ground_qipf.min() == 0.0


def test_spatial_translation(rng):
    data = rng.normal(0, 1, 30)
    grid = np.linspace(-3, 3, 61)
    a = spatial_qipf(grid, data, cfg(0.5, 6))
    b = spatial_qipf(grid + 5, data + 5, cfg(0.5, 6))
    np.testing.assert_allclose(b.eigen, a.eigen, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(b.qipf, a.qipf, rtol=1e-8, atol=1e-10)


def test_ground_state_bounds(rng):
    for _ in range(20):
        data = rng.normal(rng.uniform(-2, 2), rng.uniform(0.2, 3), int(rng.integers(1, 60)))
        e = ground_state_energy(data, KernelConfig(float(rng.uniform(0.1, 2))))
        assert 0.0 <= e <= 0.5


def test_mode_average():
    q = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    assert np.array_equal(mode_average(q, (1, 3)), [2.0, 0.0])
    assert np.array_equal(mode_average(q, (2, 2)), q[:, 1])
    with pytest.raises(DomainError):
        mode_average(q, (0, 2))
    with pytest.raises(DomainError):
        mode_average(q, (2, 4))


def test_config_validation():
    with pytest.raises(DomainError):
        cfg(window=1)
    with pytest.raises(DomainError):
        cfg(eigen_scope="window")
    with pytest.raises(DomainError):
        cfg(eigen_scope="global")


def test_trace_csv_roundtrip(tmp_path, lorenz300):
    trace = decompose_stream(lorenz300[:40], cfg(0.5, 3))
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["index", "x", "psi", "ratio_1", "eigen_1", "qipf_1", "ratio_2", "eigen_2", "qipf_2",
                      "ratio_3", "eigen_3", "qipf_3"]
    back = read_trace_csv(path)
    for name in ("index", "x", "psi", "ratio", "eigen", "qipf"):
        assert np.array_equal(getattr(back, name), getattr(trace, name))
