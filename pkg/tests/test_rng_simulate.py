import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from minwalk.closed_form import mean_exact, sn_squared_exact, a_coeff
from minwalk.errors import CapExceeded, OutOfRange
from minwalk.model import ModelParams, enumerate_distribution
from minwalk.rng import RngSpec, nb_uniforms, stream_key, stream_keys, uniform
from minwalk.simulate import (
    EnsembleStats,
    pow2_checkpoints,
    run_ensemble,
    simulate_naive,
    simulate_reduced,
)


def reference_reduced(params, n, rng):
    x, path = 0, []
    for k in range(n):
        u = uniform(rng.key, k)
        prob = params.s if k == 0 else params.q + params.alpha * x / k
        x += u < prob
        path.append(x)
    return path


def reference_naive(params, n, rng):
    hist = [uniform(rng.key, 1) < params.s]
    for k in range(1, n):
        idx = min(int(uniform(rng.key, 2 * k) * k), k - 1)
        prob = params.p if hist[idx] else params.q
        hist.append(uniform(rng.key, 2 * k + 1) < prob)
    return list(np.cumsum(hist))


@given(seed=st.integers(0, 2**64 - 1), stream=st.integers(0, 2**40), start=st.integers(0, 2**50))
@settings(max_examples=50, deadline=None)
def test_numba_uniforms_match_reference(seed, stream, start):
    key = stream_key(seed, stream)
    got = nb_uniforms(np.uint64(key), start, 8)
    want = [uniform(key, i) for i in range(start, start + 8)]
    assert got.tolist() == want
    assert all(0.0 <= u < 1.0 for u in want)


def test_streams_are_distinct_and_fingerprinted():
    keys = stream_keys(7, range(10_000))
    assert np.unique(keys).size == keys.size
    assert RngSpec(7, 3).fingerprint == f"{int(keys[3]):016x}"
    assert RngSpec(7, 3).uniforms(4).tolist() == [uniform(int(keys[3]), i) for i in range(4)]


def test_uniforms_look_uniform():
    u = nb_uniforms(np.uint64(stream_key(1, 0)), 0, 200_000)
    counts = np.histogram(u, bins=50, range=(0, 1))[0]
    stat = ((counts - 4000) ** 2 / 4000).sum()
    assert chi2.sf(stat, 49) > 1e-4


@pytest.mark.parametrize("pqs", [(0.8, 0.2, 0.5), (0.1, 0.9, 0.3), (0.75, 0.0, 1.0)])
def test_kernels_follow_draw_discipline(pqs):
    params = ModelParams(*pqs)
    for stream in range(5):
        rng = RngSpec(11, stream)
        cps = tuple(range(1, 41))
        assert simulate_reduced(params, 40, rng, cps).positions.tolist() == reference_reduced(params, 40, rng)
        assert simulate_naive(params, 40, rng, cps).positions.tolist() == reference_naive(params, 40, rng)


@pytest.mark.parametrize("engine", ["reduced", "naive"])
def test_degenerate_walks(engine):
    run = run_ensemble(ModelParams(1.0, 0.0, 1.0), 1000, 50, seed=3, engine=engine)
    for i, c in enumerate(run.checkpoints):
        assert np.all(run.positions[:, i] == c)
    run = run_ensemble(ModelParams(0.6, 0.0, 0.0), 1000, 50, seed=3, engine=engine)
    assert not run.positions.any()
    st_ = run.stats[1000]
    assert st_.mean == 0 and st_.variance == 0 and st_.power_sums == (0, 0, 0, 0)


def test_single_replica_matches_simulate():
    params = ModelParams(0.7, 0.3, 0.4)
    run = run_ensemble(params, 5000, 1, seed=99)
    path = simulate_reduced(params, 5000, RngSpec(99, 0))
    assert run.positions[0].tolist() == path.positions.tolist()
    stats = run.stats[5000]
    assert stats.count == 1 and stats.minimum == stats.maximum == path.positions[-1]


@pytest.mark.parametrize("engine", ["reduced", "naive"])
def test_parallel_invariance(engine):
    params = ModelParams(0.8, 0.2, 0.5)
    one = run_ensemble(params, 300, 9000, seed=5, engine=engine, workers=1)
    four = run_ensemble(params, 300, 9000, seed=5, engine=engine, workers=4)
    assert np.array_equal(one.positions, four.positions)
    assert one.stats[256] == four.stats[256]


def test_threads_env(monkeypatch):
    from minwalk.simulate import default_workers

    monkeypatch.setenv("MINWALK_THREADS", "3")
    assert default_workers() == 3


def test_paths_are_monotone_unit_steps():
    run = run_ensemble(ModelParams(0.4, 0.6, 0.5), 64, 500, seed=2, checkpoints=range(1, 65))
    steps = np.diff(run.positions, axis=1)
    assert set(np.unique(steps)) <= {0, 1}
    assert set(np.unique(run.positions[:, 0])) <= {0, 1}


def test_invalid_inputs():
    with pytest.raises(OutOfRange):
        run_ensemble(ModelParams(1.2, 0.2), 10, 10, seed=1)
    with pytest.raises(CapExceeded):
        simulate_naive(ModelParams(0.5, 0.5), 100, RngSpec(1), cap=50)
    with pytest.raises(ValueError):
        run_ensemble(ModelParams(0.5, 0.5), 10, 10, seed=1, checkpoints=[11])


def test_pow2_checkpoints():
    assert pow2_checkpoints(16) == (1, 2, 4, 8, 16)
    assert pow2_checkpoints(20) == (1, 2, 4, 8, 16, 20)
    assert pow2_checkpoints(2**20, start=2**10) == tuple(2**k for k in range(10, 21))


def test_ensemble_mean_matches_closed_form():
    params = ModelParams(0.5, 0.5, 0.5)
    n = 10**4
    stats = run_ensemble(params, n, 10**5, seed=17, checkpoints=[n]).stats[n]
    se = (stats.variance / stats.count) ** 0.5
    assert abs(stats.mean - mean_exact(params, n)) < 5 * se


def test_ensemble_variance_matches_exact_law():
    # Var X_n = a_n^2 s_n^2 holds exactly for any n
    params = ModelParams(0.6, 0.3, 0.5)
    n = 4096
    stats = run_ensemble(params, n, 50_000, seed=4, checkpoints=[n]).stats[n]
    want = float(a_coeff(n, params.alpha)) ** 2 * sn_squared_exact(params, n)
    assert stats.variance == pytest.approx(want, rel=0.03)


def pmf_chi2(counts, probs):
    total = counts.sum()
    expected = probs * total
    keep = expected >= 5
    stat = (((counts - expected) ** 2)[keep] / expected[keep]).sum()
    return chi2.sf(stat, keep.sum() - 1)


@pytest.mark.parametrize("engine", ["reduced", "naive"])
def test_engine_pmf_matches_enumeration(engine):
    params = ModelParams(0.8, 0.2, 0.5)
    run = run_ensemble(params, 12, 100_000, seed=2024, checkpoints=[12], engine=engine)
    counts = np.bincount(run.at(12), minlength=13)
    assert pmf_chi2(counts, enumerate_distribution(params, 12).mass) > 0.001


def test_stats_merge_is_exact():
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 10**6, size=3000)
    ids = np.arange(3000)
    parts = [EnsembleStats.from_values(5, vals[i::3], ids[i::3]) for i in range(3)]
    a, b, c = parts
    whole = EnsembleStats.from_values(5, vals, ids)
    assert (a + b) + c == a + (b + c) == c + (b + a) == whole
    assert whole.power_sums[3] == sum(int(v) ** 4 for v in vals)


def test_stats_merge_rejects_other_checkpoint():
    a = EnsembleStats.from_values(1, np.array([0, 1]))
    b = EnsembleStats.from_values(2, np.array([0, 1]))
    with pytest.raises(ValueError):
        a.merge(b)


def test_stats_moments():
    vals = np.array([1, 2, 3, 4, 10])
    st_ = EnsembleStats.from_values(3, vals)
    assert st_.mean == pytest.approx(4.0)
    assert st_.variance == pytest.approx(np.var(vals, ddof=1))
    assert st_.central_moment(3) == pytest.approx(np.mean((vals - 4.0) ** 3))
    assert st_.central_moment(4) == pytest.approx(np.mean((vals - 4.0) ** 4))
    assert (st_.minimum, st_.maximum) == (1, 10)
