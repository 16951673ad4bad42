import math

import numpy as np
import pytest
from scipy import stats

import oracles as O
from weightjump import diagnostics as D
from weightjump import measure as M
from weightjump import samplers as S
from weightjump.errors import ConfigurationError, SupportError, UndefinedAnchorError, UnsupportedLawError
from weightjump.rng import make_rng


@pytest.fixture
def bench():
    pi, g = M.discrete(O.PI), M.discrete(O.G_UNIFORM)
    return pi, g, M.WeightFunction(pi, g)


def within(sample, expected, n_se=4.0):
    sample = np.asarray(sample, dtype=float)
    se = sample.std(ddof=1) / math.sqrt(len(sample))
    return abs(sample.mean() - expected) <= n_se * max(se, 1e-15)


# ---------------------------------------------------------------- sojourn laws


@pytest.mark.parametrize("law, x", [
    (S.exponential_law(lambda x: 1.0 + x), 2.0),
    (S.geometric_law(lambda x: 0.3 + 0 * x), 0),
    (S.deterministic_law(lambda x: 2.5 + 0 * x), 0),
])
def test_law_sample_mean(law, x):
    draws = law.sample(make_rng(1), np.full(100_000, x))
    assert within(draws, float(law.mean(x)))
    assert np.all(draws > 0)


def test_law_survival_shape():
    expo = S.exponential_law(lambda x: 2.0 + 0 * x)
    geo = S.geometric_law(lambda x: 0.4 + 0 * x)
    assert float(expo.survival(1e-12, 0)) == pytest.approx(1.0)
    assert float(geo.survival(1, 0)) == 1.0
    u = np.linspace(0, 20, 200)
    assert np.all(np.diff(expo.survival(u, 0)) <= 0)
    assert np.all(np.diff(geo.survival(u, 0)) <= 0)


def test_law_variances():
    assert float(S.exponential_law(lambda x: 3.0 + 0 * x).variance(0)) == 9.0
    assert float(S.geometric_law(lambda x: 0.25 + 0 * x).variance(0)) == pytest.approx(0.75 / 0.0625)
    assert float(S.deterministic_law(lambda x: 3.0 + 0 * x).variance(0)) == 0.0


def test_custom_law_missing_piece():
    law = S.custom_law(mean=lambda x: np.ones(np.shape(x)), sample=lambda rng, x: np.ones(np.shape(x)))
    with pytest.raises(UnsupportedLawError):
        law.variance(0)
    with pytest.raises(UnsupportedLawError):
        law.size_biased(make_rng(0), 0)


# ---------------------------------------------------------------- importance sampling


def test_is_identical_densities():
    d = M.normal(0, 1)
    s = S.standard_is(d, M.WeightFunction(d, d, kappa=2.0)).sample(make_rng(2), 1000)
    assert np.allclose(s.weights, 2.0)


def test_is_mixture_weights_bounded():
    pi, g = M.paper_example_target(), M.paper_example_trial()
    s = S.standard_is(g, M.WeightFunction(pi, g)).sample(make_rng(3), 200_000)
    assert np.all(s.weights > 0) and s.weights.max() <= 6.96


def test_is_discrete_weights(bench):
    _, g, wf = bench
    s = S.standard_is(g, wf).sample(make_rng(4), 1000)
    assert set(np.round(s.weights, 12)) == {0.6, 0.9, 1.5}


def test_is_needs_matching_trial(bench):
    pi, g, _ = bench
    with pytest.raises(ConfigurationError):
        S.standard_is(M.discrete(O.G_UNIFORM), M.WeightFunction(pi, g))


def test_is_needs_sampler(bench):
    pi, _, _ = bench
    no_sampler = M.Density(lambda x: np.zeros(np.shape(x)), M.FiniteSupport(3), 3.0)
    with pytest.raises(ConfigurationError):
        S.standard_is(no_sampler, M.WeightFunction(pi, no_sampler))


# ---------------------------------------------------------------- SZ and Gasemyr


def test_sz_unit_weight_case():
    d = M.discrete([0.3, 0.7])
    st = S.sz_sampler(d, M.WeightFunction(d, d))
    assert np.allclose(st.accept_prob(np.arange(2)), 0.5)
    s = st.sample(make_rng(5), 100_000)
    assert within(s.weights, 2.0)
    pmf = np.bincount(s.weights.astype(int), minlength=6)[1:6] / len(s)
    expect = 0.5 ** np.arange(1, 6)
    assert np.all(np.abs(pmf - expect) <= 4 * np.sqrt(expect * (1 - expect) / len(s)))


def test_sz_large_kappa():
    d = M.discrete([0.3, 0.7])
    st = S.sz_sampler(d, M.WeightFunction(d, d, kappa=1e6))
    assert np.all(st.accept_prob(np.arange(2)) > 1 - 1e-5)
    assert within(st.sample(make_rng(6), 20_000).weights, 1e6 + 1)


def test_gasemyr_reduces_to_sz(bench):
    _, g, wf = bench
    sz = S.sz_sampler(g, wf)
    gas = S.gasemyr_sampler(g, wf, lambda z: wf.value(z) / (1 + wf.value(z)), lambda z: 1 / (1 + wf.value(z)))
    xs = np.arange(3)
    assert np.allclose(sz.embedded_pmf(), gas.embedded_pmf(), atol=1e-15)
    assert np.allclose(sz.law.mean(xs), gas.law.mean(xs), atol=1e-15)
    assert sz.kappa == pytest.approx(gas.kappa, rel=1e-12)
    # joint (state, weight) cells from both samplers are homogeneous
    a = sz.sample(make_rng(7), 100_000)
    b = gas.sample(make_rng(8), 100_000)
    cells = lambda s: 3 * np.minimum(s.weights.astype(int) - 1, 5) + s.states  # noqa: E731
    table = np.vstack([np.bincount(cells(a), minlength=18), np.bincount(cells(b), minlength=18)])
    assert stats.chi2_contingency(table[:, table.sum(axis=0) > 0])[1] > 1e-4


def test_gasemyr_optimal_choice(bench):
    _, g, wf = bench
    gas = S.gasemyr_sampler(g, wf)
    xs = np.arange(3)
    assert np.allclose(gas.accept_prob(xs), np.minimum(1, O.IS_WEIGHTS))
    assert np.allclose(gas.law.param_fn(xs), np.minimum(1, 1 / O.IS_WEIGHTS))


def test_gasemyr_rejection_regime(bench):
    pi, g, _ = bench
    wf = M.WeightFunction(pi, g, kappa=0.5)  # 0.5 <= 1 / 1.5
    gas = S.gasemyr_sampler(g, wf)
    s = gas.sample(make_rng(9), 100_000)
    assert np.all(s.weights == 1.0)
    assert np.allclose(gas.embedded_pmf(), O.PI)
    assert stats.chisquare(np.bincount(s.states, minlength=3), 100_000 * O.PI).pvalue > 1e-4


def test_gasemyr_proportionality_checked(bench):
    _, g, wf = bench
    with pytest.raises(ConfigurationError):
        S.gasemyr_sampler(g, wf, S.table_fn([0.5, 0.5, 0.5]), S.table_fn([0.5, 0.5, 0.5]))
    with pytest.raises(ConfigurationError):
        S.gasemyr_sampler(g, wf, S.table_fn([0.5, 0.5, 0.5]), None)


def test_gasemyr_benchmark_kappa(bench):
    _, g, wf = bench
    gas = S.gasemyr_sampler(g, wf, S.table_fn(O.GEO_ACCEPT), S.table_fn(O.GEO_SUCCESS))
    assert gas.kappa == pytest.approx(O.GEO_KAPPA, rel=1e-12)
    assert np.allclose(gas.embedded_pmf(), O.GEO_EMBEDDED)


# ---------------------------------------------------------------- exponential weights


def test_exponential_unit_weights():
    d = M.normal(0, 1)
    s = S.exponential_weight_sampler(d, M.WeightFunction(d, d)).sample(make_rng(10), 100_000)
    assert within(s.weights, 1.0)
    assert stats.kstest(s.weights, "expon").pvalue > 1e-4


def test_exponential_mixture_mean_weight():
    pi, g = M.paper_example_target(), M.paper_example_trial()
    s = S.exponential_weight_sampler(g, M.WeightFunction(pi, g)).sample(make_rng(11), 1_000_000)
    assert within(s.weights, 1.0)


def test_exponential_chain_base(bench):
    pi, g, wf = bench
    with pytest.raises(ConfigurationError):
        S.exponential_weight_sampler(M.uniform_proposal(3), wf)
    st = S.exponential_weight_sampler(M.uniform_proposal(3), wf, initial=0)
    s = st.sample(make_rng(12), 100_000)
    occupancy = np.bincount(s.states, weights=s.weights, minlength=3) / s.weights.sum()
    assert D.binned_tv(occupancy * 1e6, O.PI) < 0.01


# ---------------------------------------------------------------- proper weighting


@pytest.mark.parametrize("scheme", ["is", "exp", "sz", "gasemyr"])
def test_proper_weighting(bench, scheme):
    pi, g, wf = bench
    st = {"is": lambda: S.standard_is(g, wf), "exp": lambda: S.exponential_weight_sampler(g, wf),
          "sz": lambda: S.sz_sampler(g, wf), "gasemyr": lambda: S.gasemyr_sampler(g, wf)}[scheme]()
    emb = st.embedded_pmf()
    s = st.sample(make_rng(13), 300_000)
    for x in range(3):
        w = s.weights[s.states == x]
        assert len(w) >= 1e4
        assert within(w, st.kappa * O.PI[x] / emb[x])


# ---------------------------------------------------------------- Metropolis-Hastings


def test_mh_symmetric_two_state():
    d = M.discrete([0.5, 0.5])
    s = S.mh_sampler(d, M.uniform_proposal(2), 0).sample(make_rng(14), 5000)
    assert np.all(s.weights == 1.0)


def test_mh_round_trip(bench):
    pi, _, _ = bench
    chain, proposals, accepted = S.mh_trace(pi, M.uniform_proposal(3), 0, 5000, make_rng(15))
    comp = S.compress_trace(chain, accepted)
    assert np.array_equal(S.decompress(comp), chain)
    assert np.all(comp.weights >= 1)


def test_mh_stream_step_law(bench):
    """The compressed stream observed at step t has the law of the MH chain after t steps."""
    pi, _, _ = bench
    st = S.mh_sampler(pi, M.uniform_proposal(3), 0)
    ys = D.replicate_runner(st, [3], 50_000, seed=16)
    exact = np.array([1.0, 0, 0]) @ np.linalg.matrix_power(O.MH_KERNEL, 3)
    assert D.binned_tv(np.bincount(ys[0], minlength=3), exact) < 0.01


def test_mh_independence_bound(bench):
    pi, g, _ = bench
    st = S.mh_sampler(pi, M.independent(g), 0)
    times = [1, 2, 3, 5]
    ys = D.replicate_runner(st, times, 100_000, seed=17)
    bound = D.bound_curve("mh_independence", {"w_star": 1.5}, times)
    for k in range(len(times)):
        tv, err = D.estimate_tv(ys[k], O.PI, rng=make_rng(17, k))
        assert tv <= bound[k] + 3 * err


def test_mh_kernel_helpers(bench):
    pi, _, _ = bench
    emb, success = S.mh_jump_kernel(pi.pmf(), np.full((3, 3), 1 / 3))
    assert np.allclose(emb.sum(axis=1), 1)
    assert np.allclose(S.implied_transition_matrix(emb, success), O.MH_KERNEL, atol=1e-12)
    assert np.allclose(S.stationary_pmf(O.MH_KERNEL), O.PI)


def test_mh_bad_initial(bench):
    pi, _, _ = bench
    with pytest.raises(SupportError):
        S.mh_sampler(pi, M.uniform_proposal(3), 7)


# ---------------------------------------------------------------- reweighting


def test_reweight_iid_transition_unit_weights(bench):
    pi, _, _ = bench
    y = pi.sample(make_rng(18), 1000)
    s = S.reweight_chain_output(y, M.independent(pi), pi)
    assert np.allclose(s.weights, 1.0)


def test_reweight_two_state_table():
    P = np.array([[0.1, 0.9], [0.7, 0.3]])
    target = M.discrete([7 / 16, 9 / 16])  # invariant law of P
    s = S.reweight_chain_output([0, 1, 1, 0, 0], M.from_matrix(P), target)
    assert s.states.tolist() == [1, 1, 0, 0]
    assert np.allclose(s.weights, [0.625, 1.875, 0.625, 4.375], rtol=1e-12)


def test_reweight_gibbs_kernel_limit(bench):
    pi, _, _ = bench
    K = 0.5 * np.eye(3) + 0.5 * np.tile(O.PI, (3, 1))
    st = S.ReweightedChain(M.from_matrix(K), pi, 0)
    s = st.sample(make_rng(19), 100_000)
    occupancy = np.bincount(s.states, weights=s.weights, minlength=3)
    assert D.binned_tv(occupancy, O.PI) < 0.01


def test_anchor_indices_example():
    accepted = [True, True, False, True, False, False]
    assert S.anchor_indices(accepted).tolist() == [0, 1, 1, 3, 3]


def test_anchor_undefined():
    with pytest.raises(UndefinedAnchorError):
        S.anchor_indices([False, True, True])


def test_reweight_mh_all_accepted_equals_chain(bench):
    pi, _, _ = bench
    Qu = M.uniform_proposal(3)
    y = np.array([0, 2, 1, 1, 0, 2])
    a = S.reweight_mh_proposals(y, np.ones(6, dtype=bool), Qu, pi)
    b = S.reweight_chain_output(y, Qu, pi)
    assert np.array_equal(a.states, b.states) and np.allclose(a.weights, b.weights)


def test_reweight_mh_trace_limit(bench):
    pi, _, _ = bench
    Qu = M.uniform_proposal(3)
    _, proposals, accepted = S.mh_trace(pi, Qu, 0, 100_000, make_rng(20))
    s = S.reweight_mh_proposals(proposals, accepted, Qu, pi)
    occupancy = np.bincount(s.states, weights=s.weights, minlength=3)
    assert D.binned_tv(occupancy, O.PI) < 0.01


def test_reweighted_streams_have_no_state_law(bench):
    pi, _, _ = bench
    with pytest.raises(UnsupportedLawError):
        S.ReweightedMHProposals(pi, M.uniform_proposal(3), 0).mean_weight(0)


# ---------------------------------------------------------------- simulation helpers


def test_simulate_path_covers_horizon(bench):
    _, g, wf = bench
    for st in (S.standard_is(g, wf), S.mh_sampler(M.discrete(O.PI), M.uniform_proposal(3), 0)):
        p = S.simulate_path(st, make_rng(21), 50.0)
        assert p.horizon > 50.0


def test_marginals_rejects_unsorted(bench):
    _, g, wf = bench
    with pytest.raises(ValueError):
        S.marginals(S.standard_is(g, wf), [3, 1], 10, make_rng(0))


def test_marginals_first_point_override(bench):
    _, g, wf = bench
    first = (np.full(5, 2), np.full(5, 10.0))
    ys = S.marginals(S.standard_is(g, wf), [0, 9.99], 5, make_rng(0), first=first)
    assert np.all(ys == 2)


def test_stream_next_is_stateful(bench):
    pi, _, _ = bench
    st = S.mh_sampler(pi, M.uniform_proposal(3), 0)
    pts = [st.next(make_rng(22)) for _ in range(3)]
    assert pts[0].state == 0 and all(p.weight >= 1 for p in pts)


def test_batch_points_shapes(bench):
    _, g, wf = bench
    x, w = S.batch_points(S.standard_is(g, wf), 7, 4, make_rng(0))
    assert x.shape == w.shape == (4, 7)
