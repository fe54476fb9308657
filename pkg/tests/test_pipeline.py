import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsprep.core import QueryCounter, fidelity, make_rng, state_from_weights, tv_distance
from qsprep.errors import InvalidInputError, InvalidParameterError, SizeLimitError
from qsprep.pipeline import (
    aa_cap,
    amplify_to_w,
    apply_C,
    circuit_from_top_k,
    importance_sample,
    ksearch_reduction_demo,
    prepare_k_copies,
    preprocess,
    reduce_reference,
    reduction_run,
    reference_full_C,
)


def _exact_H(w, K):
    w = np.asarray(w, dtype=float)
    return set(sorted(range(1, w.size + 1), key=lambda i: (-w[i - 1], i))[:K])


def _eq6(w, H):
    """Flag-0 amplitudes sqrt(w_i / Z) for every i, flag-1 sqrt((gamma - w_i) / Z) off H."""
    w = np.asarray(w, dtype=float)
    gamma = min(w[i - 1] for i in H)
    Z = (w.size - len(H)) * gamma + sum(w[i - 1] for i in H)
    off = np.array([i not in H for i in range(1, w.size + 1)])
    flag1 = np.where(off, np.sqrt(np.maximum(gamma - w, 0.0) / Z), 0.0)
    return np.stack([np.sqrt(w / Z), flag1], axis=1), gamma, Z


# -- preprocessing ----------------------------------------------------------


@pytest.mark.parametrize(
    "K,H,gamma,Z,p",
    [(1, (1,), 4.0, 16.0, 0.5), (2, (1, 2), 2.0, 10.0, 0.8)],
)
def test_preprocess_4211(K, H, gamma, Z, p):
    c = QueryCounter()
    prep = preprocess([4, 2, 1, 1], K, 0.01, 3, c)
    assert prep.H == H
    assert (prep.gamma, prep.Z) == (gamma, Z)
    assert prep.p_w == pytest.approx(p)
    assert prep.p_w >= K / 4
    assert c.count == prep.preprocessing_queries > 0


@pytest.mark.parametrize("K", [1, 3, 8])
def test_preprocess_uniform(K):
    prep = preprocess([1.0] * 8, K, 0.1, 0)
    assert prep.gamma == 1.0 and prep.Z == 8.0 and prep.p_w == 1.0


def test_preprocess_errors():
    with pytest.raises(InvalidParameterError):
        preprocess([1, 2], 3, 0.1, 0)


def test_exact_h_bounds_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        N = int(rng.integers(1, 200))
        K = int(rng.integers(1, N + 1))
        w = rng.random(N) ** int(rng.integers(1, 5))
        prep = circuit_from_top_k(w, _exact_H(w, K))
        W = math.fsum(w)
        assert prep.p_w >= K / N * (1 - 1e-12)
        assert prep.gamma <= W / K * (1 + 1e-12)
        assert prep.Z >= W * (1 - 1e-12)


# -- circuit C --------------------------------------------------------------


def test_apply_C_4211():
    prep = circuit_from_top_k([4, 2, 1, 1], {1, 2})
    c = QueryCounter(10)
    s = apply_C(prep, [4, 2, 1, 1], c)
    assert c.count == 12
    flag0 = s.tensor[:, 0]
    assert float(np.linalg.norm(flag0)) == pytest.approx(math.sqrt(0.8), abs=1e-12)
    assert flag0[2] == pytest.approx(math.sqrt(0.1), abs=1e-12)
    assert flag0[2] == pytest.approx(0.31623, abs=5e-6)
    np.testing.assert_allclose(s.tensor, _eq6([4, 2, 1, 1], {1, 2})[0], atol=1e-12)


def test_apply_C_uniform_has_no_flag_one():
    prep = circuit_from_top_k([2.0] * 5, {1, 4})
    s = apply_C(prep, [2.0] * 5, QueryCounter())
    np.testing.assert_array_equal(s.tensor[:, 1], 0.0)


def test_apply_C_rejects_other_n():
    prep = circuit_from_top_k([1, 2, 3], {3})
    with pytest.raises(InvalidInputError):
        apply_C(prep, [1, 2], QueryCounter())


@settings(max_examples=60)
@given(st.lists(st.floats(min_value=0, max_value=50), min_size=1, max_size=64), st.data())
def test_apply_C_flag_zero_is_w(values, data):
    if max(values) == 0:
        values = values + [1.0]
    K = data.draw(st.integers(1, len(values)))
    prep = circuit_from_top_k(values, _exact_H(values, K))
    s = apply_C(prep, values, QueryCounter())
    branch = s.tensor[:, 0]
    assert float(branch @ branch) == pytest.approx(prep.p_w, abs=1e-10)
    np.testing.assert_allclose(branch / np.linalg.norm(branch), state_from_weights(values).amplitudes, atol=1e-10)


def test_reference_4211_restores_ancillas():
    w = [4, 2, 1, 1]
    prep = circuit_from_top_k(w, {1, 2})
    full = reference_full_C(prep, w)
    np.testing.assert_allclose(full.marginal("qry")[0], 1.0, atol=1e-15)
    np.testing.assert_allclose(full.marginal("ind")[0], 1.0, atol=1e-15)
    np.testing.assert_allclose(reduce_reference(full).tensor, apply_C(prep, w, QueryCounter()).tensor, atol=1e-10)


def test_reference_two_ones():
    prep = circuit_from_top_k([1, 1], {1})
    full = reference_full_C(prep, [1, 1])
    assert full.marginal("rot")[0] == pytest.approx(1.0, abs=1e-15)


def test_reference_matches_on_random_small_instances():
    rng = np.random.default_rng(11)
    for _ in range(150):
        N = int(rng.integers(1, 17))
        K = int(rng.integers(1, N + 1))
        w = rng.integers(0, 6, size=N).astype(float) * rng.choice([1.0, 0.37])
        if not w.any():
            w[0] = 1.0
        prep = circuit_from_top_k(w, _exact_H(w, K))
        full = reference_full_C(prep, w)
        assert full.marginal("qry")[0] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(reduce_reference(full).tensor, apply_C(prep, w, QueryCounter()).tensor, atol=1e-10)


def test_reference_size_limit():
    w = np.ones(17)
    with pytest.raises(SizeLimitError):
        reference_full_C(circuit_from_top_k(w, {1}), w)


# -- amplification ----------------------------------------------------------


def test_amplify_uniform_two_queries():
    prep = circuit_from_top_k([1.0] * 16, {1, 2})
    c = QueryCounter()
    s = amplify_to_w(prep, [1.0] * 16, 0, c)
    assert c.count == 2
    assert fidelity(s, state_from_weights([1.0] * 16)) == pytest.approx(1.0, abs=1e-12)


def test_amplify_first_attempt_rate_is_p_w():
    w = [4, 2, 1, 1]
    prep = circuit_from_top_k(w, {1, 2})
    rng = make_rng(4)
    costs = []
    for _ in range(4000):
        c = QueryCounter()
        amplify_to_w(prep, w, rng, c)
        costs.append(c.count)
    # any later attempt costs at least 4 queries
    assert abs(np.mean(np.array(costs) == 2) - 0.8) < 0.02
    assert all(cost % 2 == 0 for cost in costs)


def test_amplify_iteration_costs_four():
    w = np.zeros(64)
    w[5] = 1.0
    w[9] = 0.5
    prep = circuit_from_top_k(w, {6})
    costs = set()
    rng = make_rng(0)
    for _ in range(200):
        c = QueryCounter()
        amplify_to_w(prep, w, rng, c)
        costs.add(c.count)
    # attempts cost 2 + 4j each
    assert all(cost % 2 == 0 for cost in costs)
    assert any(cost > 2 for cost in costs)


def _mean_copy_cost(N, K, trials, seed):
    rng = np.random.default_rng(seed)
    costs = []
    for _ in range(trials):
        w = rng.random(N)
        prep = circuit_from_top_k(w, _exact_H(w, K))
        c = QueryCounter()
        s = amplify_to_w(prep, w, rng, c)
        assert fidelity(s, state_from_weights(w)) >= 1 - 1e-9
        costs.append(c.count)
    return float(np.mean(costs))


def test_copy_cost_scales_with_sqrt_n_over_k():
    # the schedule constant is fitted at N/K = 16 and used at N/K = 64
    c = _mean_copy_cost(256, 16, 100, 1) / math.sqrt(16)
    mean = _mean_copy_cost(4096, 64, 100, 2)
    assert mean <= 2 * c * math.sqrt(4096 / 64)
    assert aa_cap(circuit_from_top_k(np.ones(4096), set(range(1, 65)))) == 8


# -- K copies and applications ----------------------------------------------


def test_k_copies_uniform():
    states, stats = prepare_k_copies([1.0] * 32, 8, 0.1, 5)
    assert len(states) == 8
    assert stats.per_copy_queries == [2] * 8
    assert stats.total_queries == stats.preprocessing_queries + 16


def test_k_copies_4211_fidelity():
    target = [math.sqrt(0.5), 0.5, math.sqrt(0.125), math.sqrt(0.125)]
    for seed in range(10):
        states, stats = prepare_k_copies([4, 2, 1, 1], 2, 0.1, seed)
        assert stats.valid_H
        for s in states:
            np.testing.assert_allclose(s.amplitudes, target, atol=1e-9)
        assert min(stats.fidelities) >= 1 - 1e-9


def test_k_copies_reproducible():
    w = np.random.default_rng(0).random(300)
    a = prepare_k_copies(w, 5, 0.2, 99)[1]
    b = prepare_k_copies(w, 5, 0.2, 99)[1]
    assert a.preprocessing_queries == b.preprocessing_queries
    assert a.per_copy_queries == b.per_copy_queries
    assert a.seed == 99


def test_importance_sample_single_support():
    w = [0.0, 3.0, 0.0, 0.0, 0.0]
    samples, stats = importance_sample(w, 4, 0.1, 0)
    assert samples == [2, 2, 2, 2]
    assert stats.valid_H


def test_importance_sample_4211_tv():
    m = 100_000
    samples, stats = importance_sample([4, 2, 1, 1], 2, 0.01, 8, n_samples=m)
    assert stats.valid_H
    freq = np.bincount(np.array(samples) - 1, minlength=4) / m
    assert tv_distance(freq, [0.5, 0.25, 0.125, 0.125]) <= 0.02


# -- reduction demo ---------------------------------------------------------


def _bits(N, ones, seed):
    b = np.zeros(N, dtype=int)
    b[np.random.default_rng(seed).choice(N, ones, replace=False)] = 1
    return b


def test_reduction_mean_matches_coupon_collector():
    expected = 8 * (1 - (7 / 8) ** 6)
    assert expected == pytest.approx(4.41, abs=5e-3)
    sizes = [len(ksearch_reduction_demo(_bits(64, 8, s), 3, 6, s)) for s in range(600)]
    assert abs(np.mean(sizes) - expected) < 0.15


def test_reduction_only_reports_ones():
    bits = _bits(32, 6, 1)
    found = ksearch_reduction_demo(bits, 2, 10, 1)
    assert all(bits[i - 1] == 1 for i in found)


def test_reduction_zero_copies():
    assert ksearch_reduction_demo(_bits(16, 4, 0), 2, 0, 0) == set()


def test_reduction_needs_2k_ones():
    with pytest.raises(InvalidInputError):
        ksearch_reduction_demo(_bits(16, 3, 0), 2, 4, 0)
    with pytest.raises(InvalidInputError):
        ksearch_reduction_demo([0, 2, 1, 1], 1, 4, 0)


def test_reduction_stats():
    found, stats = reduction_run(_bits(64, 8, 2), 4, 12, 2)
    assert len(stats.per_copy_queries) == 12
    assert stats.total_queries == stats.preprocessing_queries + sum(stats.per_copy_queries)
