import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from expdiff import gp
from expdiff import sampler as sp
from expdiff.errors import ConfigError, DomainError, NumericalError, SamplingError
from expdiff.expfam import SuffStatsAgg
from expdiff.guidance import GuidanceContext, prior_score
from expdiff.net import DenseNetwork
from expdiff.sde import DiffusionSchedule

SCHED = DiffusionSchedule()


def std_normal_score(x, t):
    return -x


def test_config_validation():
    with pytest.raises(ConfigError):
        sp.SamplerConfig(steps=1)
    with pytest.raises(ConfigError):
        sp.SamplerConfig(snr=0.0)
    with pytest.raises(ConfigError):
        sp.SamplerConfig(corrector_norm="global")
    with pytest.raises(ConfigError):
        sp.McmcConfig(iters=10, burn_in=10)
    with pytest.raises(ConfigError):
        sp.McmcConfig(target_accept=1.0)


def test_pc_standard_normal_score_moments():
    cfg = sp.SamplerConfig(steps=400, n_samples=2000, seed=1)
    x, alive = sp.pc_sample_many(std_normal_score, SCHED, cfg, 2)
    assert alive.all()
    assert np.all(np.abs(x.mean(axis=0)) < 0.05)
    assert np.all(np.abs(x.var(axis=0) - 1.0) < 0.1)


def test_pc_gp_marginal_score_covariance():
    factor = gp.gp_factor(8)
    cfg = sp.SamplerConfig(steps=500, n_samples=3000, seed=2)

    def score(x, t):
        return gp.marginal_score(factor, SCHED, x, t)

    x, _ = sp.pc_sample_many(score, SCHED, cfg, 8)
    assert np.max(np.abs(np.cov(x.T) - factor.cov)) < 0.15


def test_pc_replay_is_deterministic():
    cfg = sp.SamplerConfig(steps=50)
    a = sp.pc_sample(std_normal_score, SCHED, cfg, sp.sample_rng(3, 7), 4)
    b = sp.pc_sample(std_normal_score, SCHED, cfg, sp.sample_rng(3, 7), 4)
    assert np.array_equal(a, b)


def test_sample_index_stream_matches_batched_run():
    cfg = sp.SamplerConfig(steps=40, n_samples=70, seed=9, corrector_norm="sample")
    x, _ = sp.pc_sample_many(std_normal_score, SCHED, cfg, 3)
    single = sp.pc_sample(std_normal_score, SCHED, cfg, sp.sample_rng(9, 66), 3)
    np.testing.assert_allclose(x[66], single, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("norm", ["block", "sample"])
def test_worker_count_does_not_change_samples(norm):
    cfg = sp.SamplerConfig(steps=30, n_samples=200, seed=4, corrector_norm=norm)
    a, _ = sp.pc_sample_many(std_normal_score, SCHED, cfg, 3, workers=1)
    b, _ = sp.pc_sample_many(std_normal_score, SCHED, cfg, 3, workers=4)
    assert np.array_equal(a, b)


def test_non_finite_state_raises_with_location():
    def bad(x, t):
        return np.full_like(x, np.inf) if t < 0.5 else -x

    with pytest.raises(SamplingError) as info:
        sp.pc_sample(bad, SCHED, sp.SamplerConfig(steps=10), sp.sample_rng(0, 0), 2)
    assert info.value.t is not None and info.value.step >= 0


def _ctx(d, weight=0.5, agg=None, link="identity"):
    net = DenseNetwork(d, d, hidden=(), time_embed_len=2)
    net.weights[0][:d, :d] = weight * np.eye(d)
    agg = SuffStatsAgg.empty(d) if agg is None else agg
    return GuidanceContext("normal_fixed_var{sigma2=1}", link, agg, None, None, net, SCHED)


def test_sample_posterior_empty_request():
    out = sp.sample_posterior(_ctx(3), sp.SamplerConfig(n_samples=0))
    assert out.x0.shape == (0, 3) and out.dropped == 0


def test_sample_posterior_provenance_and_drops():
    cfg = sp.SamplerConfig(steps=20, n_samples=300, seed=5)

    def flaky(x, t):
        if np.any(x[:, 0] > 4.0):
            raise DomainError("outside")
        return -x

    with pytest.raises(SamplingError):
        sp.sample_posterior(_ctx(2), cfg, score_fn=lambda x, t: np.where(x > 0, np.nan, -x))
    res = sp.sample_posterior(_ctx(2), cfg, score_fn=flaky)
    assert res.dropped == 1 and res.n == 299
    assert set(res.provenance) >= {"sampler", "sde", "config_hash", "sample_seeds"}


def test_sample_posterior_drops_rows_whose_theta_overflows():
    ctx = _ctx(2, link="exp")
    # draws settle near 2 * 354.1, a few sd below the overflow point of exp (about 709.78)
    res = sp.sample_posterior(ctx, sp.SamplerConfig(steps=20, n_samples=1000, seed=5),
                              score_fn=lambda x, t: -(x - np.array([354.1, 0.0])))
    assert res.dropped == 4 and res.n == 996
    assert np.all(np.isfinite(res.theta))

def _energy_distance(a, b):
    def mean_dist(u, v):
        return np.mean(np.linalg.norm(u[:, None] - v[None], axis=-1))

    return 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b)


def test_zero_observation_posterior_matches_prior_sampling():
    d = 2
    ctx = _ctx(d)
    post = sp.sample_posterior(ctx, sp.SamplerConfig(steps=100, n_samples=200, seed=11)).x0
    prior, _ = sp.pc_sample_many(lambda x, t: prior_score(ctx, x, t), SCHED,
                                 sp.SamplerConfig(steps=100, n_samples=200, seed=12), d)
    stat = _energy_distance(post, prior)
    rng = np.random.default_rng(0)
    pooled = np.vstack([post, prior])
    null = []
    for _ in range(200):
        p = rng.permutation(len(pooled))
        null.append(_energy_distance(pooled[p[:200]], pooled[p[200:]]))
    p_value = (1 + np.sum(np.array(null) >= stat)) / 201
    assert p_value > 0.01


def test_split_rhat():
    rng = np.random.default_rng(0)
    iid = rng.standard_normal((4, 2000, 3))
    assert np.all(np.abs(sp.split_rhat(iid) - 1.0) < 0.01)
    shifted = iid + np.arange(4)[:, None, None]
    assert np.all(sp.split_rhat(shifted) > 1.5)
    with pytest.raises(ConfigError):
        sp.split_rhat(np.zeros((2, 3, 1)))


def test_rwm_standard_normal():
    cfg = sp.McmcConfig(chains=4, iters=20_000, burn_in=5_000, seed=1)
    out = sp.rwm_sample(lambda x: -0.5 * np.sum(x * x, axis=1), 2, cfg)
    assert np.all(np.abs(out.x0.mean(axis=0)) < 0.05)
    assert np.all(np.abs(out.x0.var(axis=0) - 1.0) < 0.1)
    assert np.all(np.array(out.diagnostics["rhat"]) < 1.05)
    assert all(0.1 < a < 0.5 for a in out.diagnostics["acceptance"])


def test_rwm_gaussian_posterior_moments():
    K = gp.gp_factor(3, gp.RbfKernelParams(1.0, 0.5)).cov
    y = np.array([[0.5, 1.0, -0.2], [0.8, 0.4, 0.0]])
    mean, cov = oracles.gaussian_posterior(K, 0.5, y)
    kinv = np.linalg.inv(K)

    def log_target(x):
        return -0.5 * np.einsum("ij,jk,ik->i", x, kinv, x) - np.sum((y[None] - x[:, None]) ** 2, axis=(1, 2))

    out = sp.rwm_sample(log_target, 3, sp.McmcConfig(chains=4, iters=40_000, burn_in=10_000, seed=2, thin=2))
    assert out.n == 4 * 15_000
    # effective sample size is far below n; allow several MC standard errors
    assert np.all(np.abs(out.x0.mean(axis=0) - mean) < 0.05)
    assert np.max(np.abs(np.cov(out.x0.T) - cov)) < 0.05


def test_rwm_initialization_errors():
    def spike(x):
        return np.where(np.all(x == 0, axis=1), 0.0, -np.inf)

    with pytest.raises(NumericalError):
        sp.rwm_sample(spike, 2, sp.McmcConfig(chains=2, iters=100, burn_in=50))
    with pytest.raises(NumericalError):
        sp.rwm_sample(lambda x: np.full(len(x), np.nan), 2, sp.McmcConfig(chains=2, iters=100, burn_in=50))


def test_rwm_transform_and_link():
    out = sp.rwm_sample(lambda x: -0.5 * np.sum(x * x, axis=1), 2,
                        sp.McmcConfig(chains=2, iters=400, burn_in=100), transform=lambda w: 2 * w + 1, link="exp")
    assert out.link.kind == "exp"
    np.testing.assert_allclose(out.theta, np.exp(out.x0))


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.sampled_from(["exp", "sigmoid{s=5}", "identity{shift=1,scale=2}"]))
def test_theta_quantiles_follow_link(seed, link):
    x = np.random.default_rng(seed).normal(size=(101, 3))
    s = sp.SampleSet(x, link)
    qs = [0.025, 0.25, 0.5, 0.75, 0.975]
    q_theta = np.quantile(s.theta, qs, axis=0, method="inverted_cdf")
    q_x = np.quantile(s.x0, qs, axis=0, method="inverted_cdf")
    from expdiff.link import inv_link

    np.testing.assert_allclose(q_theta, inv_link(link, q_x), rtol=1e-12, atol=0)


def test_sample_set_rejects_non_finite():
    with pytest.raises(NumericalError):
        sp.SampleSet(np.array([[np.nan, 0.0]]))
    with pytest.raises(ConfigError):
        sp.SampleSet(np.zeros(3))


def test_config_hash_is_stable():
    assert sp.config_hash({"b": 1, "a": 2}) == sp.config_hash({"a": 2, "b": 1})
    assert len(sp.config_hash({})) == 16
