"""Simulation harness: stream generation, path building, the Monte-Carlo
studies, and the statistical helpers they report through."""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from ccd.core import CepAccumulator, ConformalTransducer, MartingaleDiedError
from ccd.models import BernoulliPair, GaussMeanPair, GaussVarPair
from ccd import sim
from ccd.sim import (
    QUANTILE_LEVELS,
    ExperimentConfig,
    chernoff_check,
    false_alarm_study,
    final_log10_values,
    generate_stream,
    kolmogorov_sf,
    ks_two_sample,
    ks_uniform,
    lag1_autocorrelation,
    paths_from_observations,
    run_paths,
    theorem1_check,
    tie_break_draws,
    validity_study,
)

LN10 = math.log(10.0)


def _bern_config(**kw):
    base = dict(pair=BernoulliPair(0.5, 0.6), n0=50, n1=0, sims=1)
    base.update(kw)
    return ExperimentConfig(**base)


# --- streams and determinism ---


def test_stream_is_deterministic_per_run():
    cfg = _bern_config(n0=40, n1=10)
    a = generate_stream(cfg, run_index=3)
    b = generate_stream(cfg, run_index=3)
    assert np.array_equal(a, b)
    assert a.size == 50
    assert not np.array_equal(a, generate_stream(cfg, run_index=4))


def test_tie_draws_are_their_own_stream():
    # same run index, different role: observations must not reuse tau draws
    cfg = _bern_config(n0=30)
    taus = tie_break_draws(cfg.base_seed, 0, 30)
    assert np.array_equal(taus, tie_break_draws(cfg.base_seed, 0, 30))
    assert np.all((taus >= 0.0) & (taus < 1.0))
    assert not np.array_equal(taus, generate_stream(cfg, 0))


def test_stream_segment_means():
    cfg = ExperimentConfig(pair=GaussMeanPair(1.5), n0=4000, n1=4000)
    z = generate_stream(cfg)
    assert abs(z[:4000].mean()) < 0.1
    assert abs(z[4000:].mean() - 1.5) < 0.1


def test_config_validation():
    with pytest.raises(ValueError):
        _bern_config(n0=-1)
    with pytest.raises(ValueError):
        _bern_config(sims=0)
    with pytest.raises(ValueError):
        _bern_config(threshold=1.0)
    cfg = _bern_config(n0=0, n1=0)
    assert run_paths(cfg).n_steps == 0  # empty experiment is legal


# --- path construction ---


def test_paths_shapes_and_start():
    path = run_paths(_bern_config(n0=5, n1=3))
    assert path.log_lrm.shape == (9,)
    assert path.log_lrm[0] == 0.0 and path.log_ctm[0] == 0.0 and path.log_cep[0] == 0.0


def test_lrm_path_is_cumsum_of_log_ratios():
    cfg = _bern_config(n0=64, n1=16)
    z = generate_stream(cfg)
    path = run_paths(cfg)
    want = np.cumsum(cfg.pair.log_likelihood_ratio(z))
    assert np.array_equal(path.log_lrm[1:], want)


def test_ctm_path_matches_stepwise_transducer():
    cfg = _bern_config(n0=100)
    z = generate_stream(cfg)
    taus = tie_break_draws(cfg.base_seed, 0, z.size)
    scores = cfg.pair.likelihood_ratio(z)
    tr = ConformalTransducer()
    f = cfg.pair.cao_betting()
    logf = [math.log(f(tr.step(float(s), float(t)))) for s, t in zip(scores, taus)]
    path = run_paths(cfg)
    assert np.allclose(path.log_ctm[1:], np.cumsum(logf), rtol=0.0, atol=1e-12)


def test_cep_path_matches_stepwise_accumulator():
    cfg = ExperimentConfig(pair=GaussMeanPair(0.3), n0=200, n1=50)
    z = generate_stream(cfg)
    acc = CepAccumulator()
    want = []
    for v in cfg.pair.likelihood_ratio(z):
        acc.step(float(v))
        want.append(acc.log_product)
    path = run_paths(cfg)
    assert np.allclose(path.log_cep[1:], want, rtol=0.0, atol=1e-10)


def test_paths_from_observations_validation():
    pair = BernoulliPair(0.5, 0.6)
    f = pair.cao_betting()
    with pytest.raises(ValueError):
        paths_from_observations(pair, f, np.zeros((2, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        paths_from_observations(pair, f, np.zeros(3), np.zeros(2))
    empty = paths_from_observations(pair, f, np.array([]), np.array([]))
    assert empty.n_steps == 0
    with pytest.raises(MartingaleDiedError):
        paths_from_observations(pair, lambda p: np.zeros_like(p), np.array([1.0]), np.array([0.5]))


def test_lrm_drift_matches_kullback_leibler():
    # mean final log LRM over runs = -n0*KL(q0||q1) + n1*KL(q1||q0)
    cfg = _bern_config(n0=1000, n1=1000, sims=200)
    finals = final_log10_values(cfg)
    kl01 = 0.5 * math.log(0.5 / 0.6) + 0.5 * math.log(0.5 / 0.4)
    kl10 = 0.6 * math.log(0.6 / 0.5) + 0.4 * math.log(0.4 / 0.5)
    want = (-1000 * kl01 + 1000 * kl10) / LN10
    got = float(np.mean(finals.log10_lrm))
    # per-run sd computed from the two-point log-ratio distributions
    var = 1000 * (0.0411 + 0.0395) / LN10**2
    assert abs(got - want) < 5 * math.sqrt(var / 200)


# --- batched pipeline vs per-run pipeline ---


def test_final_values_match_per_run_paths_exactly():
    cfg = ExperimentConfig(pair=GaussVarPair(1.2), n0=80, n1=40, sims=7)
    fv = final_log10_values(cfg)
    for i in range(cfg.sims):
        path = run_paths(cfg, i)
        assert fv.log10_lrm[i] == path.log_lrm[-1] / LN10
        assert fv.log10_ctm[i] == path.log_ctm[-1] / LN10
        assert fv.log10_cep[i] == path.log_cep[-1] / LN10


def test_parallel_equals_serial():
    cfg = _bern_config(n0=200, sims=150)
    serial = final_log10_values(cfg, workers=1)
    parallel = final_log10_values(cfg, workers=2)
    assert np.array_equal(serial.log10_lrm, parallel.log10_lrm)
    assert np.array_equal(serial.log10_ctm, parallel.log10_ctm)
    assert np.array_equal(serial.log10_cep, parallel.log10_cep)


def test_threads_env_must_be_integer(monkeypatch):
    monkeypatch.setenv("CCD_THREADS", "fast")
    with pytest.raises(ValueError, match="CCD_THREADS"):
        final_log10_values(_bern_config(n0=5))
    monkeypatch.setenv("CCD_THREADS", "1")
    final_log10_values(_bern_config(n0=5))


# --- validity study ---


def test_validity_requires_prechange_only():
    with pytest.raises(ValueError):
        validity_study(_bern_config(n0=10, n1=5))


def test_validity_single_run_quantiles_collapse():
    cfg = _bern_config(n0=30, sims=1)
    summary = validity_study(cfg)
    final = final_log10_values(cfg)
    assert summary.levels == QUANTILE_LEVELS
    assert all(q == final.log10_lrm[0] for q in summary.lrm)
    assert all(q == final.log10_ctm[0] for q in summary.ctm)


def test_validity_median_near_analytic_drift():
    # median of the final log10 LRM under no change sits at
    # -n0 * KL(Ber(0.5) || Ber(0.6)) / ln 10
    cfg = _bern_config(n0=1000, sims=3000)
    summary = validity_study(cfg)
    assert summary.lrm[2] == pytest.approx(-8.864383480215793, abs=0.5)
    # no-change medians of all three processes stay at or below 0
    assert summary.ctm[2] < 0.0
    assert summary.cep[2] < 0.0


def test_quantile_summary_validation():
    with pytest.raises(ValueError):
        sim.QuantileSummary(levels=(0.5,), lrm=(0.0, 1.0), ctm=(0.0,), cep=(0.0,))
    with pytest.raises(ValueError):
        sim.QuantileSummary(levels=(0.25, 0.75), lrm=(1.0, 0.0), ctm=(0.0, 0.0), cep=(0.0, 0.0))


# --- false-alarm study ---


def test_false_alarm_requires_threshold_and_prechange():
    with pytest.raises(ValueError):
        false_alarm_study(_bern_config(n0=10))
    with pytest.raises(ValueError):
        false_alarm_study(_bern_config(n0=10, n1=5, threshold=10.0))
    with pytest.raises(ValueError):
        false_alarm_study(_bern_config(n0=0, threshold=10.0))


def test_false_alarm_counts_match_manual_scan():
    from ccd._backend import cusum_alarms

    cfg = _bern_config(n0=400, sims=10, threshold=1.05)
    report = false_alarm_study(cfg)
    counts = np.zeros(3, dtype=np.int64)
    last_sum = np.zeros(3)
    log_c = math.log(cfg.threshold)
    for i in range(cfg.sims):
        path = run_paths(cfg, i)
        for k, lp in enumerate((path.log_lrm, path.log_ctm, path.log_cep)):
            alarms = cusum_alarms(lp, log_c)
            counts[k] += alarms.size
            if alarms.size:
                last_sum[k] += alarms[-1]
    for k, stats in enumerate((report.lrm, report.ctm, report.cep)):
        assert stats.n_alarms == counts[k]
        assert stats.total_steps == 4000
        assert stats.alarm_rate == counts[k] / 4000
        if counts[k]:
            assert stats.mean_gap == pytest.approx(last_sum[k] / counts[k], rel=1e-12)
        else:
            assert stats.mean_gap is None


def test_false_alarm_quiet_when_threshold_huge():
    report = false_alarm_study(_bern_config(n0=50, sims=3, threshold=1e6))
    assert report.ctm.n_alarms == 0
    assert report.ctm.mean_gap is None
    assert report.ctm.alarm_rate == 0.0


# --- efficiency bound check ---


def test_theorem1_constants():
    report = theorem1_check(0.5, 0.6, n0=1000, n1=30, epsilon=0.1, sims=20)
    assert report.b_const == pytest.approx(math.log(1.5), rel=1e-15)
    assert report.delta == pytest.approx(0.042946940834673756, rel=1e-15)
    want_c = math.log(2.0 / 0.1) / (30 * report.delta + 30 * 31 / 2000.0)
    assert report.c_const == pytest.approx(want_c, rel=1e-15)
    assert report.bound_rhs.shape == (30,)
    assert np.all(np.diff(report.bound_rhs) > 0.0)
    want_last = report.b_const * (
        math.log(2.0 / 0.1) + 5 * 30 * report.delta + 2.5 * 30 * 31 / 1000.0
    )
    assert report.bound_rhs[-1] == pytest.approx(want_last, rel=1e-14)
    assert report.max_log_ratio.shape == (20,)
    assert report.anomalous_count.max() <= 30
    assert report.violated.dtype == np.bool_


def test_theorem1_is_deterministic():
    a = theorem1_check(0.5, 0.6, n0=200, n1=10, epsilon=0.1, sims=30)
    b = theorem1_check(0.5, 0.6, n0=200, n1=10, epsilon=0.1, sims=30)
    assert np.array_equal(a.max_log_ratio, b.max_log_ratio)
    assert np.array_equal(a.anomalous_count, b.anomalous_count)


def test_theorem1_equal_parameters_degenerate():
    # theta1 == theta0 makes L identical to the bets, so the ratio is 0
    # everywhere and the bound (also 0) is never strictly exceeded.
    report = theorem1_check(0.5, 0.5, n0=100, n1=10, epsilon=0.1, sims=40)
    assert report.b_const == 0.0
    assert np.all(report.bound_rhs == 0.0)
    assert np.all(report.max_log_ratio == 0.0)
    assert report.violation_frequency == 0.0


def test_theorem1_validation():
    with pytest.raises(ValueError):
        theorem1_check(0.0, 0.6, 10, 5, 0.1, 3)
    with pytest.raises(ValueError):
        theorem1_check(0.5, 0.6, 10, 5, 1.5, 3)
    with pytest.raises(ValueError):
        theorem1_check(0.5, 0.6, 0, 5, 0.1, 3)


# --- Chernoff tail check ---


def test_chernoff_all_zero_probabilities():
    report = chernoff_check(np.zeros(5), delta=1.0, sims=200, mu=1.0)
    assert report.tail_estimate == 0.0
    assert report.chernoff_bound == pytest.approx(0.6795704571147613, rel=1e-14)
    assert report.relaxed_bound == pytest.approx(0.7165313105737893, rel=1e-14)
    assert report.bounds_ordered
    # theta_i = 0 freezes the exponential process at 1
    assert np.all(report.supermartingale_mean == 1.0)
    assert np.all(report.supermartingale_stderr == 0.0)


def test_chernoff_deterministic_indicator():
    # theta = 1: the indicator always fires, S_1 = (1+delta)*exp(-delta)
    report = chernoff_check([1.0], delta=0.5, sims=8)
    assert report.supermartingale_mean[0] == pytest.approx(
        1.5 * math.exp(-0.5), rel=1e-14
    )
    assert report.supermartingale_stderr[0] == 0.0
    # the sum is always 1 and the cut is 1.5, so the tail is empty
    assert report.tail_estimate == 0.0
    assert report.mu == 1.0


def test_chernoff_bound_values_at_mu_ten():
    report = chernoff_check(np.full(100, 0.1), delta=1.0, sims=50)
    assert report.mu == pytest.approx(10.0, rel=1e-12)
    assert report.chernoff_bound == pytest.approx((math.e / 4.0) ** 10, rel=1e-12)
    assert report.relaxed_bound == pytest.approx(math.exp(-10.0 / 3.0), rel=1e-12)
    assert report.bounds_ordered


def test_chernoff_supermartingale_mean_stays_below_one():
    rng_thetas = np.linspace(0.05, 0.6, 20)
    report = chernoff_check(rng_thetas, delta=0.3, sims=2000)
    ok = report.supermartingale_mean <= 1.0 + 3.0 * report.supermartingale_stderr
    assert np.all(ok)


def test_chernoff_validation():
    with pytest.raises(ValueError):
        chernoff_check([], 1.0, 10)
    with pytest.raises(ValueError):
        chernoff_check([0.5], 0.0, 10)
    with pytest.raises(ValueError):
        chernoff_check([0.5, 0.5], 1.0, 10, mu=0.5)
    with pytest.raises(ValueError):
        chernoff_check([1.5], 1.0, 10)


# --- statistical helpers vs library oracles ---


def test_kolmogorov_sf_matches_scipy():
    ts = np.concatenate([np.linspace(0.05, 1.0, 20), np.linspace(1.0, 3.0, 21)])
    for t in ts:
        assert kolmogorov_sf(float(t)) == pytest.approx(
            float(scipy.special.kolmogorov(t)), abs=1e-12
        )
    assert kolmogorov_sf(0.0) == 1.0
    assert kolmogorov_sf(-2.0) == 1.0
    vals = [kolmogorov_sf(float(t)) for t in ts]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_ks_two_sample_matches_scipy():
    rng = np.random.default_rng(8)
    a = rng.normal(size=300)
    b = rng.normal(loc=0.2, size=450)
    ours = ks_two_sample(a, b)
    ref = scipy.stats.ks_2samp(a, b, method="asymp")
    assert ours.statistic == pytest.approx(float(ref.statistic), abs=1e-15)
    en = math.sqrt(300 * 450 / 750)
    assert ours.pvalue == pytest.approx(
        float(scipy.special.kolmogorov(en * ours.statistic)), abs=1e-12
    )
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


def test_ks_uniform_matches_scipy():
    rng = np.random.default_rng(9)
    x = rng.random(500)
    ours = ks_uniform(x)
    ref = scipy.stats.kstest(x, "uniform")
    assert ours.statistic == pytest.approx(float(ref.statistic), abs=1e-15)
    with pytest.raises(ValueError):
        ks_uniform([1.5])


def test_ks_uniform_detects_non_uniform():
    rng = np.random.default_rng(10)
    x = rng.random(2000) ** 2
    assert ks_uniform(x).pvalue < 1e-6


def test_lag1_autocorrelation():
    rng = np.random.default_rng(12)
    iid = rng.normal(size=20000)
    assert abs(lag1_autocorrelation(iid)) < 4.0 / math.sqrt(20000)
    # AR(1) with coefficient 0.6 should show roughly that correlation
    n = 20000
    ar = np.empty(n)
    ar[0] = 0.0
    eps = rng.normal(size=n)
    for i in range(1, n):
        ar[i] = 0.6 * ar[i - 1] + eps[i]
    assert lag1_autocorrelation(ar) == pytest.approx(0.6, abs=0.05)
    with pytest.raises(ValueError):
        lag1_autocorrelation([1.0])
    with pytest.raises(ValueError):
        lag1_autocorrelation([2.0, 2.0, 2.0])
