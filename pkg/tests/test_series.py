import json
import math

import numpy as np
import pytest
from scipy import stats

from nctails.matrices import BlockSpec, s_sequence
from nctails.sampling import RngSubstream, TruncationMode, TruncationPolicy
from nctails.sequences import lp_norm
from nctails.series import (
    SampleSet,
    SeriesKind,
    SeriesTag,
    _trace_series,
    empirical_moments,
    empirical_quantile,
    empirical_tail,
    evaluate_sample,
    monte_carlo,
    quantile_interval,
    read_samples_csv,
    samples_from_array,
    trial_stream,
)

EPS = SeriesKind(SeriesTag.EPSILON)
GAUSS = SeriesKind(SeriesTag.GAUSS)
MIXED = [BlockSpec.from_singular_values([3.0]), BlockSpec.from_singular_values([2.0, 1.0])]


def const_set(a, n=50):
    return samples_from_array(np.full(n, a))


# --- kinds --------------------------------------------------------------------


def test_kind_validation():
    with pytest.raises(ValueError):
        SeriesKind(SeriesTag.GAUSS_TRUNC)
    with pytest.raises(ValueError):
        SeriesKind(SeriesTag.GAUSS, TruncationPolicy(4.0))
    with pytest.raises(ValueError):
        SeriesKind(SeriesTag.GAUSS_STAR, TruncationPolicy(4.0, TruncationMode.WHOLE))
    kind = SeriesKind.parse("GAUSS_STAR", lam=3.0)
    assert kind.truncation == TruncationPolicy(3.0, TruncationMode.DIAG_OFFDIAG)
    with pytest.raises(ValueError, match="unknown series kind"):
        SeriesKind.parse("rademacher")


# --- single draws -------------------------------------------------------------


@pytest.mark.parametrize("a", [1.0, 2.5])
def test_scalar_block_epsilon_is_plus_minus_a(a):
    s = monte_carlo([BlockSpec.from_singular_values([a])], EPS, 2000, 1)
    assert set(np.unique(s.samples)) == {-a, a}


def test_identity_hook_attains_l1():
    blocks = [BlockSpec.from_singular_values([3.0]), BlockSpec.from_singular_values([2.0, 1.0]),
              BlockSpec.from_matrix(np.diag([0.5, 0.25, 4.0]))]
    value = _trace_series(blocks, [np.eye(b.d)[None] for b in blocks])[0]
    assert value == pytest.approx(lp_norm(s_sequence(blocks), 1), rel=1e-15)


def test_evaluate_sample_matches_monte_carlo():
    for kind in (EPS, GAUSS, SeriesKind.parse("gauss_star"), SeriesKind(SeriesTag.COMMUTATIVE)):
        s = monte_carlo(MIXED, kind, 50, 77)
        for i in (0, 17, 49):
            assert evaluate_sample(MIXED, kind, trial_stream(77, kind, i)) == s.samples[i]


def test_matrix_kinds_need_blocks():
    with pytest.raises(ValueError):
        evaluate_sample([], EPS, RngSubstream(1, (1, 0)))


def test_gaussian_two_by_two_is_exact_normal():
    blocks = [BlockSpec.from_singular_values([1.0, 1.0])]
    s = monte_carlo(blocks, GAUSS, 100000, 3)
    # variance d * (1 + 1) = 4
    assert stats.kstest(s.samples, "norm", args=(0, 2.0)).statistic <= 0.01


# --- Monte Carlo plumbing -------------------------------------------------------


def test_monte_carlo_deterministic_and_worker_independent():
    a = monte_carlo(MIXED, EPS, 9000, 42)
    b = monte_carlo(MIXED, EPS, 9000, 42)
    c = monte_carlo(MIXED, EPS, 9000, 42, workers=3)
    assert a.samples.tobytes() == b.samples.tobytes() == c.samples.tobytes()
    assert not np.array_equal(a.samples, monte_carlo(MIXED, EPS, 9000, 43).samples)


def test_prefix_is_nested():
    a = monte_carlo(MIXED, EPS, 5000, 42)
    b = monte_carlo(MIXED, EPS, 12000, 42)
    assert np.array_equal(b.prefix(5000).samples, a.samples)


def test_gaussian_kinds_share_draws():
    g = monte_carlo(MIXED, GAUSS, 3000, 5)
    t = monte_carlo(MIXED, SeriesKind.parse("gauss_trunc", lam=1e9), 3000, 5)
    assert np.array_equal(g.samples, t.samples)
    assert t.truncation_hits == 0


def test_sampleset_validation():
    with pytest.raises(ValueError):
        SampleSet(EPS, "", 0, np.zeros(3), 4)
    with pytest.raises(ValueError):
        SampleSet(EPS, "", 0, np.array([1.0, math.nan]), 2)
    with pytest.raises(ValueError):
        monte_carlo(MIXED, EPS, 0, 1)


def test_csv_round_trip(tmp_path):
    s = monte_carlo(MIXED, SeriesKind.parse("gauss_trunc"), 300, 0xABC)
    path = tmp_path / "s.csv"
    s.write_csv(path)
    assert path.read_text().splitlines()[0] == "trial,value"
    assert np.array_equal(read_samples_csv(path), s.samples)
    meta = json.loads((tmp_path / "s.csv.json").read_text())
    assert meta["kind"] == {"tag": "gauss_trunc", "lambda": 4.0, "mode": "whole"}
    assert meta["seed"] == 0xABC and meta["trials"] == 300
    assert meta["blocks_digest"] == s.blocks_digest


def test_csv_read_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("trial,value\n0,1.0\n1,oops\n")
    with pytest.raises(ValueError, match=":3:"):
        read_samples_csv(bad)
    bad.write_text("a,b\n")
    with pytest.raises(ValueError, match="header"):
        read_samples_csv(bad)


# --- estimators -----------------------------------------------------------------


def test_tail_examples():
    s = monte_carlo([BlockSpec.from_singular_values([1.0])], EPS, 20000, 8)
    est = empirical_tail(s, [-5.0, 0.5, 1.0 + 1e-9])
    assert est.probabilities[0] == 1.0
    assert est.probabilities[2] == 0.0
    assert est.ci_low[1] <= 0.5 <= est.ci_high[1]
    with pytest.raises(ValueError):
        empirical_tail(s, [1.0, 0.5])


def test_tail_invariants():
    s = monte_carlo(MIXED, EPS, 5000, 9)
    est = empirical_tail(s, np.linspace(-8, 8, 33))
    assert np.all(np.diff(est.probabilities) <= 0)
    assert np.all(est.ci_low <= est.probabilities) and np.all(est.probabilities <= est.ci_high)
    assert np.array_equal(est.censored(10), est.counts < 10)


def test_constant_estimators():
    s = const_set(-2.5)
    assert empirical_moments(s, [1, 2, 7]) == pytest.approx([2.5, 2.5, 2.5])
    assert empirical_quantile(s, [0.1, 0.5, 0.9]).tolist() == [-2.5] * 3
    with pytest.raises(ValueError):
        empirical_moments(s, [0.5])
    with pytest.raises(ValueError):
        empirical_quantile(s, [0.0])


def test_quantiles_nondecreasing(rng):
    s = samples_from_array(rng.standard_normal(1000))
    q = empirical_quantile(s, np.linspace(0.01, 0.99, 50))
    assert np.all(np.diff(q) >= 0)


def test_quantile_interval_brackets(rng):
    s = samples_from_array(rng.standard_normal(20000))
    lo, hi = quantile_interval(s, 0.9)
    assert lo <= empirical_quantile(s, [0.9])[0] <= hi
    assert lo <= stats.norm.ppf(0.9) <= hi


# --- statistical properties on the bundled scenarios ------------------------------


@pytest.mark.parametrize("name", ["commutative", "oneblock16", "mixed"])
def test_sup_variance_mean_symmetry(standard_runs, name):
    run = standard_runs[name]
    s = run.scenario.s
    x = run.samples(SeriesTag.EPSILON).samples
    l1, l2 = lp_norm(s, 1), lp_norm(s, 2)
    assert x.max() <= l1 * (1 + 1e-9) and -x.min() <= l1 * (1 + 1e-9)
    assert np.var(x, ddof=1) == pytest.approx(l2 ** 2, rel=0.05)
    assert abs(x.mean()) <= 4 * l2 / math.sqrt(x.size)
    # quantile(p) and -quantile(1-p) agree within the order-statistic CI
    eps = run.samples(SeriesTag.EPSILON)
    for p in (0.01, 0.1, 0.3):
        lo, hi = quantile_interval(eps, p)
        lo2, hi2 = quantile_interval(eps, 1 - p)
        assert max(lo, -hi2) <= min(hi, -lo2)


def test_mixed_moments(standard_runs):
    run = standard_runs["mixed"]
    eps = run.samples(SeriesTag.EPSILON)
    gauss = run.samples(SeriesTag.GAUSS)
    assert empirical_moments(eps, [2])[0] ** 2 == pytest.approx(19.0, rel=0.05)
    assert empirical_moments(gauss, [1])[0] == pytest.approx(math.sqrt(19 * 2 / math.pi), rel=0.05)
    assert abs(empirical_quantile(gauss, [0.5])[0]) <= 0.02 * math.sqrt(19)


def test_truncation_consistency_large_blocks(standard_runs):
    run = standard_runs["oneblock16"]
    gauss = run.samples(SeriesTag.GAUSS)
    for tag in (SeriesTag.GAUSS_TRUNC, SeriesTag.GAUSS_STAR):
        trunc = run.samples(tag)
        assert trunc.truncation_hits / trunc.trials <= 0.01
        probs = np.linspace(0.1, 0.9, 9)
        qg = empirical_quantile(gauss, probs)
        qt = empirical_quantile(trunc, probs)
        assert np.all(np.abs(qt - qg) <= 0.02 * np.abs(qg))


def test_commutative_kind_equals_epsilon_for_scalar_blocks(standard_runs):
    run = standard_runs["commutative"]
    a = run.samples(SeriesTag.EPSILON).samples[:20000]
    b = run.samples(SeriesTag.COMMUTATIVE).samples[:20000]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_diagonal_invariance(rng):
    m1 = rng.standard_normal((3, 3))
    m2 = rng.standard_normal((2, 2))
    dense = [BlockSpec.from_matrix(m1), BlockSpec.from_matrix(m2)]
    diag = [BlockSpec.from_singular_values(b.singular_values()) for b in dense]
    a = monte_carlo(dense, EPS, 10000, 1001).samples
    b = monte_carlo(diag, EPS, 10000, 2002).samples
    assert stats.ks_2samp(a, b).pvalue > 0.01
