"""Seeded Monte-Carlo harness: stream generation, experiment paths, validity
and false-alarm studies, and checkers for the Bernoulli efficiency bound and
the multiplicative Chernoff tail.

Every run draws from a counter-based generator keyed by (base_seed,
run_index, role), with separate roles for observations and tie-break draws,
so results are reproducible and independent of scheduling.  Studies process
runs in fixed-size chunks; the chunk results are stitched in run order,
which makes parallel and serial execution agree exactly.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import MartingaleDiedError, ProcessPath
from .models import BettingFunction, PrePostPair

_LN10 = math.log(10.0)

_OBS_ROLE = 0
_TAU_ROLE = 1

_CHUNK = 128
_CHERNOFF_CHUNK = 16384

QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)


def stream_rng(base_seed: int, run_index: int, role: int) -> np.random.Generator:
    """Counter-based generator for one (run, role) pair; streams for
    different keys are independent and do not depend on draw order."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(run_index), int(role)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one simulated change-detection experiment: n0 draws
    from the pre-change law followed by n1 draws from the post-change law.
    """

    pair: PrePostPair
    n0: int
    n1: int = 0
    threshold: float | None = None
    base_seed: int = 42
    sims: int = 1

    def __post_init__(self) -> None:
        for name in ("n0", "n1", "sims", "base_seed"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.n0 < 0 or self.n1 < 0:
            raise ValueError("segment lengths must be nonnegative")
        if self.sims < 1:
            raise ValueError("run count must be at least 1")
        if self.threshold is not None:
            t = float(self.threshold)
            if not t > 1.0:
                raise ValueError(f"alarm threshold must exceed 1, got {t!r}")
            object.__setattr__(self, "threshold", t)


def generate_stream(config: ExperimentConfig, run_index: int = 0) -> np.ndarray:
    """The run's observations: n0 pre-change draws then n1 post-change."""
    rng = stream_rng(config.base_seed, run_index, _OBS_ROLE)
    pre = config.pair.sample_pre(rng, config.n0)
    post = config.pair.sample_post(rng, config.n1)
    return np.concatenate([pre, post])


def tie_break_draws(base_seed: int, run_index: int, n: int) -> np.ndarray:
    """The run's tie-randomization draws, from its own generator role."""
    return stream_rng(base_seed, run_index, _TAU_ROLE).random(n)


def _tau_draws(config: ExperimentConfig, run_index: int, n: int) -> np.ndarray:
    return tie_break_draws(config.base_seed, run_index, n)


def paths_from_observations(
    pair: PrePostPair, betting: BettingFunction, z, taus
) -> ProcessPath:
    """Drive all three processes over a fixed observation sequence."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    taus = np.ascontiguousarray(taus, dtype=np.float64)
    if z.ndim != 1 or taus.shape != z.shape:
        raise ValueError("observations and tie-break draws must be 1-D and aligned")
    n = z.size
    if n == 0:
        zero = np.zeros(1)
        return ProcessPath(zero, zero.copy(), zero.copy())
    log_l = pair.log_likelihood_ratio(z)
    scores = pair.likelihood_ratio(z)
    p = _backend.conformal_pvalues(scores, taus)
    f = betting(p)
    if np.any(f <= 0.0):
        raise MartingaleDiedError("betting function returned a nonpositive value")
    log_e = (
        log_l
        + np.log(np.arange(1, n + 1, dtype=np.float64))
        - np.log(np.cumsum(scores))
    )
    return ProcessPath(
        log_lrm=_cum0(log_l), log_ctm=_cum0(np.log(f)), log_cep=_cum0(log_e)
    )


def run_paths(config: ExperimentConfig, run_index: int = 0) -> ProcessPath:
    """Generate the run's stream and drive all three processes over it."""
    z = generate_stream(config, run_index)
    taus = _tau_draws(config, run_index, z.size)
    return paths_from_observations(config.pair, config.pair.cao_betting(), z, taus)


def _cum0(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.size + 1)
    np.cumsum(x, out=out[1:])
    return out


def _cum0_rows(x: np.ndarray) -> np.ndarray:
    out = np.zeros((x.shape[0], x.shape[1] + 1))
    np.cumsum(x, axis=1, out=out[:, 1:])
    return out


def _batch_log_paths(
    config: ExperimentConfig, start: int, count: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Log paths (rows are runs start..start+count-1) of lrm, ctm, cep.

    Elementwise identical to run_paths; batching only amortizes array
    overhead across runs.
    """
    n = config.n0 + config.n1
    pair = config.pair
    betting = pair.cao_betting()
    z = np.empty((count, n))
    taus = np.empty((count, n))
    for j in range(count):
        z[j] = generate_stream(config, start + j)
        taus[j] = _tau_draws(config, start + j, n)
    log_l = pair.log_likelihood_ratio(z)
    scores = pair.likelihood_ratio(z)
    p = np.empty_like(z)
    for j in range(count):
        p[j] = _backend.conformal_pvalues(scores[j], taus[j])
    log_f = np.log(betting(p))
    log_e = (
        log_l
        + np.log(np.arange(1, n + 1, dtype=np.float64))
        - np.log(np.cumsum(scores, axis=1))
    )
    return _cum0_rows(log_l), _cum0_rows(log_f), _cum0_rows(log_e)


def _final_values_chunk(config: ExperimentConfig, start: int, count: int) -> np.ndarray:
    lrm, ctm, cep = _batch_log_paths(config, start, count)
    return np.column_stack([lrm[:, -1], ctm[:, -1], cep[:, -1]]) / _LN10


def _resolve_workers(workers) -> int:
    if workers is not None:
        w = int(workers)
    else:
        env = os.environ.get("CCD_THREADS", "").strip()
        if env:
            try:
                w = int(env)
            except ValueError:
                raise ValueError(
                    f"CCD_THREADS must be an integer, got {env!r}"
                ) from None
        else:
            w = os.cpu_count() or 1
    if w < 1:
        raise ValueError("worker count must be at least 1")
    return w


def _run_chunked(chunk_fn, n_runs: int, workers, *args) -> list:
    """Apply chunk_fn(*args, start, count) over fixed-size run chunks and
    return the results in run order; parallelism never changes the output."""
    jobs = [(s, min(_CHUNK, n_runs - s)) for s in range(0, n_runs, _CHUNK)]
    w = min(_resolve_workers(workers), len(jobs))
    if w <= 1:
        return [chunk_fn(*args, s, c) for s, c in jobs]
    with ProcessPoolExecutor(max_workers=w) as pool:
        futures = [pool.submit(chunk_fn, *args, s, c) for s, c in jobs]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class FinalValues:
    """Per-run log10 final values of the three processes, index-aligned."""

    log10_lrm: np.ndarray
    log10_ctm: np.ndarray
    log10_cep: np.ndarray


def final_log10_values(config: ExperimentConfig, workers=None) -> FinalValues:
    parts = _run_chunked(_final_values_chunk, config.sims, workers, config)
    allv = np.concatenate(parts, axis=0)
    return FinalValues(
        log10_lrm=np.ascontiguousarray(allv[:, 0]),
        log10_ctm=np.ascontiguousarray(allv[:, 1]),
        log10_cep=np.ascontiguousarray(allv[:, 2]),
    )


@dataclass(frozen=True)
class QuantileSummary:
    """Per-process quantiles of the log10 final values."""

    levels: tuple[float, ...]
    lrm: tuple[float, ...]
    ctm: tuple[float, ...]
    cep: tuple[float, ...]

    def __post_init__(self) -> None:
        k = len(self.levels)
        for name in ("lrm", "ctm", "cep"):
            vals = getattr(self, name)
            if len(vals) != k:
                raise ValueError("quantiles must align with the levels")
            if any(vals[i] > vals[i + 1] for i in range(k - 1)):
                raise ValueError(f"{name} quantiles must be non-decreasing")


def validity_study(config: ExperimentConfig, workers=None) -> QuantileSummary:
    """Distribution of the final process values under no change."""
    if config.n1 != 0:
        raise ValueError("validity studies use pre-change data only (n1 = 0)")
    finals = final_log10_values(config, workers)

    def qs(a: np.ndarray) -> tuple[float, ...]:
        return tuple(float(v) for v in np.quantile(a, QUANTILE_LEVELS))

    return QuantileSummary(
        levels=QUANTILE_LEVELS,
        lrm=qs(finals.log10_lrm),
        ctm=qs(finals.log10_ctm),
        cep=qs(finals.log10_cep),
    )


@dataclass(frozen=True)
class AlarmStats:
    """Alarm behaviour of one process across a false-alarm study."""

    n_alarms: int
    total_steps: int
    alarm_rate: float
    rate_stderr: float
    n_gaps: int
    mean_gap: float | None


@dataclass(frozen=True)
class FalseAlarmReport:
    threshold: float
    sims: int
    n0: int
    lrm: AlarmStats
    ctm: AlarmStats
    cep: AlarmStats


def _alarm_chunk(config: ExperimentConfig, start: int, count: int) -> np.ndarray:
    """(count, 3 processes, 2): alarm count and last-alarm step per run."""
    paths = _batch_log_paths(config, start, count)
    log_c = math.log(config.threshold)
    out = np.zeros((count, 3, 2))
    for k, mat in enumerate(paths):
        for j in range(count):
            alarms = _backend.cusum_alarms(mat[j], log_c)
            if alarms.size:
                out[j, k, 0] = alarms.size
                out[j, k, 1] = alarms[-1]
    return out


def false_alarm_study(config: ExperimentConfig, workers=None) -> FalseAlarmReport:
    """Alarm rates and inter-alarm gaps under no change.

    The mean gap counts completed gaps only: the spans between consecutive
    alarms, the first span starting at step 0.  Their sum per run telescopes
    to the last alarm step.
    """
    if config.threshold is None:
        raise ValueError("false-alarm studies need an alarm threshold")
    if config.n1 != 0:
        raise ValueError("false-alarm studies use pre-change data only (n1 = 0)")
    if config.n0 < 1:
        raise ValueError("false-alarm studies need at least one step")
    parts = _run_chunked(_alarm_chunk, config.sims, workers, config)
    stats = np.concatenate(parts, axis=0)

    def build(k: int) -> AlarmStats:
        counts = stats[:, k, 0]
        n_alarms = int(counts.sum())
        total_steps = config.sims * config.n0
        rates = counts / config.n0
        stderr = (
            float(np.std(rates, ddof=1) / math.sqrt(config.sims))
            if config.sims > 1
            else 0.0
        )
        gap_count = n_alarms
        gap_sum = float(stats[:, k, 1].sum())
        return AlarmStats(
            n_alarms=n_alarms,
            total_steps=total_steps,
            alarm_rate=n_alarms / total_steps,
            rate_stderr=stderr,
            n_gaps=gap_count,
            mean_gap=gap_sum / gap_count if gap_count else None,
        )

    return FalseAlarmReport(
        threshold=config.threshold,
        sims=config.sims,
        n0=config.n0,
        lrm=build(0),
        ctm=build(1),
        cep=build(2),
    )


@dataclass(frozen=True)
class Theorem1Report:
    """Monte-Carlo check of the Bernoulli efficiency bound.

    The bound says: with probability at least 1 - epsilon, at every
    post-change step n <= n1 the accumulated log ratio of likelihood to bets
    stays below b_const * (ln(2/eps) + 5*n1*delta + 2.5*n1*(n1+1)/n0), where
    b_const is the absolute log odds-ratio gap between the parameters and
    delta the Hoeffding tolerance on the pre-change frequency.  bound_rhs
    holds the same expression with n in place of n1 for n = 1..n1, so its
    last entry is the stated bound.
    """

    theta0: float
    theta1: float
    n0: int
    n1: int
    epsilon: float
    sims: int
    base_seed: int
    b_const: float
    delta: float
    c_const: float
    bound_rhs: np.ndarray
    max_log_ratio: np.ndarray
    anomalous_count: np.ndarray
    violated: np.ndarray
    prefix_within_delta: np.ndarray

    def __post_init__(self) -> None:
        if not self.b_const >= 0.0:
            raise ValueError("the log odds-ratio gap cannot be negative")
        if not self.delta > 0.0:
            raise ValueError("the frequency tolerance must be positive")
        if self.anomalous_count.size and int(self.anomalous_count.max()) > self.n1:
            raise ValueError("anomalous steps cannot exceed the post-change length")

    @property
    def violation_frequency(self) -> float:
        return float(np.mean(self.violated))

    @property
    def violation_stderr(self) -> float:
        v = self.violation_frequency
        return math.sqrt(v * (1.0 - v) / self.sims)

    @property
    def anomalous_mean_bound(self) -> float:
        return self.n1 * self.delta + self.n1 * (self.n1 + 1) / (2.0 * self.n0)

    @property
    def anomalous_mean(self) -> float:
        """Mean anomalous-step count over runs whose pre-change frequency
        stays within delta of theta0 (the regime the bound's argument
        conditions on)."""
        sel = self.anomalous_count[self.prefix_within_delta]
        return float(np.mean(sel)) if sel.size else math.nan

    @property
    def anomalous_stderr(self) -> float:
        sel = self.anomalous_count[self.prefix_within_delta]
        if sel.size < 2:
            return math.nan
        return float(np.std(sel, ddof=1) / math.sqrt(sel.size))


def _theorem1_chunk(
    theta0: float,
    theta1: float,
    n0: int,
    n1: int,
    base_seed: int,
    start: int,
    count: int,
) -> np.ndarray:
    n = n0 + n1
    r1 = theta1 / theta0
    r0 = (1.0 - theta1) / (1.0 - theta0)
    log_r1 = math.log(r1)
    log_r0 = math.log(r0)
    z = np.empty((count, n))
    taus = np.empty((count, n))
    for j in range(count):
        rng = stream_rng(base_seed, start + j, _OBS_ROLE)
        pre = rng.random(n0) < theta0
        post = rng.random(n1) < theta1
        z[j] = np.concatenate([pre, post]).astype(np.float64)
        taus[j] = stream_rng(base_seed, start + j, _TAU_ROLE).random(n)
    scores = np.where(z == 1.0, r1, r0)
    p = np.empty_like(z)
    for j in range(count):
        p[j] = _backend.conformal_pvalues(scores[j], taus[j])
    log_l = np.where(z == 1.0, log_r1, log_r0)
    log_f = np.where(p <= theta0, log_r1, log_r0)
    ratio = np.cumsum((log_l - log_f)[:, n0:], axis=1)
    max_log_ratio = ratio.max(axis=1)
    anomalous = ((p[:, n0:] <= theta0) != (z[:, n0:] == 1.0)).sum(axis=1)
    k0 = z[:, :n0].sum(axis=1)
    return np.column_stack([max_log_ratio, anomalous, k0])


def theorem1_check(
    theta0: float,
    theta1: float,
    n0: int,
    n1: int,
    epsilon: float,
    sims: int,
    base_seed: int = 42,
    workers=None,
) -> Theorem1Report:
    """Check the Bernoulli efficiency bound over `sims` runs.

    Uses the two-level betting function the bound's argument is built on
    (bet theta1/theta0 when p <= theta0, else (1-theta1)/(1-theta0));
    theta0 == theta1 is allowed and makes everything degenerate at 0.
    """
    theta0 = float(theta0)
    theta1 = float(theta1)
    for name, v in (("theta0", theta0), ("theta1", theta1)):
        if not (math.isfinite(v) and 0.0 < v < 1.0):
            raise ValueError(f"{name} must lie strictly inside (0, 1), got {v!r}")
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie strictly inside (0, 1), got {epsilon!r}")
    n0 = int(n0)
    n1 = int(n1)
    sims = int(sims)
    if n0 < 1 or n1 < 1 or sims < 1:
        raise ValueError("n0, n1, and sims must all be at least 1")

    b_const = abs(math.log(theta1 * (1.0 - theta0) / (theta0 * (1.0 - theta1))))
    delta = math.sqrt(math.log(4.0 / epsilon) / (2.0 * n0))
    c_const = math.log(2.0 / epsilon) / (n1 * delta + n1 * (n1 + 1) / (2.0 * n0))
    ns = np.arange(1, n1 + 1, dtype=np.float64)
    bound_rhs = b_const * (
        math.log(2.0 / epsilon) + 5.0 * ns * delta + 2.5 * ns * (ns + 1.0) / n0
    )

    parts = _run_chunked(
        _theorem1_chunk, sims, workers, theta0, theta1, n0, n1, int(base_seed)
    )
    data = np.concatenate(parts, axis=0)
    max_log_ratio = np.ascontiguousarray(data[:, 0])
    anomalous = data[:, 1].astype(np.int64)
    k0 = data[:, 2]
    return Theorem1Report(
        theta0=theta0,
        theta1=theta1,
        n0=n0,
        n1=n1,
        epsilon=epsilon,
        sims=sims,
        base_seed=int(base_seed),
        b_const=b_const,
        delta=delta,
        c_const=c_const,
        bound_rhs=bound_rhs,
        max_log_ratio=max_log_ratio,
        anomalous_count=anomalous,
        violated=max_log_ratio > bound_rhs[-1],
        prefix_within_delta=np.abs(k0 / n0 - theta0) < delta,
    )


@dataclass(frozen=True)
class ChernoffReport:
    """Monte-Carlo check of the multiplicative Chernoff tail and of the
    supermartingale property of the exponential process behind it."""

    delta: float
    mu: float
    n: int
    sims: int
    base_seed: int
    tail_estimate: float
    tail_stderr: float
    chernoff_bound: float
    relaxed_bound: float
    supermartingale_mean: np.ndarray
    supermartingale_stderr: np.ndarray

    @property
    def bounds_ordered(self) -> bool:
        """The sharp bound never exceeds its sub-exponential relaxation."""
        return self.chernoff_bound <= self.relaxed_bound + 1e-15


def chernoff_check(
    theta_seq, delta: float, sims: int, mu: float | None = None, base_seed: int = 42
) -> ChernoffReport:
    """Simulate independent Bernoulli(theta_i) indicators and compare the
    tail P(sum >= (1+delta)*mu) against the multiplicative Chernoff bounds;
    also estimate the mean of the exponential supermartingale
    S_n = prod_i exp(s*xi_i - theta_i*delta) with s = ln(1+delta) at every n.

    mu defaults to sum(theta_seq), the smallest value the bound allows.
    """
    thetas = np.ascontiguousarray(theta_seq, dtype=np.float64)
    if thetas.ndim != 1 or thetas.size == 0:
        raise ValueError("need a non-empty 1-D sequence of probabilities")
    if np.min(thetas) < 0.0 or np.max(thetas) > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    delta = float(delta)
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    sims = int(sims)
    if sims < 1:
        raise ValueError("run count must be at least 1")
    total = float(thetas.sum())
    mu = total if mu is None else float(mu)
    if mu < total - 1e-12:
        raise ValueError(f"mu must be at least sum(theta) = {total!r}, got {mu!r}")

    n = thetas.size
    s = math.log1p(delta)
    comp_cum = np.cumsum(thetas * delta)
    cut = (1.0 + delta) * mu
    sum_s = np.zeros(n)
    sum_s2 = np.zeros(n)
    tail = 0
    rng = stream_rng(base_seed, 0, _OBS_ROLE)
    for start in range(0, sims, _CHERNOFF_CHUNK):
        m = min(_CHERNOFF_CHUNK, sims - start)
        xi = rng.random((m, n)) < thetas
        csum = np.cumsum(xi, axis=1, dtype=np.float64)
        smat = np.exp(s * csum - comp_cum)
        sum_s += smat.sum(axis=0)
        sum_s2 += np.einsum("ij,ij->j", smat, smat)
        tail += int(np.count_nonzero(csum[:, -1] >= cut))

    mean = sum_s / sims
    if sims > 1:
        var = np.clip((sum_s2 - sims * mean * mean) / (sims - 1), 0.0, None)
        stderr = np.sqrt(var / sims)
    else:
        stderr = np.zeros(n)
    tail_estimate = tail / sims
    return ChernoffReport(
        delta=delta,
        mu=mu,
        n=n,
        sims=sims,
        base_seed=int(base_seed),
        tail_estimate=tail_estimate,
        tail_stderr=math.sqrt(tail_estimate * (1.0 - tail_estimate) / sims),
        chernoff_bound=math.exp(mu * (delta - (1.0 + delta) * math.log1p(delta))),
        relaxed_bound=math.exp(-delta * delta * mu / (2.0 + delta)),
        supermartingale_mean=mean,
        supermartingale_stderr=stderr,
    )


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float


def kolmogorov_sf(t: float) -> float:
    """P(K > t) for the asymptotic Kolmogorov sup-distance distribution."""
    t = float(t)
    if t <= 0.0:
        return 1.0
    if t < 1.0:
        # Jacobi-theta form of the cdf; converges fast for small t.
        total = 0.0
        for k in range(1, 20):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * t * t))
            total += term
            if term < 1e-17 * total:
                break
        cdf = math.sqrt(2.0 * math.pi) / t * total
        return min(max(1.0 - cdf, 0.0), 1.0)
    total = 0.0
    sign = 1.0
    for k in range(1, 200):
        term = 2.0 * math.exp(-2.0 * k * k * t * t)
        total += sign * term
        if term < 1e-17:
            break
        sign = -sign
    return min(max(total, 0.0), 1.0)


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return KsResult(statistic=d, pvalue=kolmogorov_sf(en * d))


def ks_uniform(sample) -> KsResult:
    """One-sample Kolmogorov-Smirnov test against U[0, 1]."""
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("sample must be non-empty")
    if x[0] < 0.0 or x[-1] > 1.0:
        raise ValueError("sample values must lie in [0, 1]")
    n = x.size
    i = np.arange(1, n + 1, dtype=np.float64)
    d_plus = float(np.max(i / n - x))
    d_minus = float(np.max(x - (i - 1.0) / n))
    d = max(d_plus, d_minus)
    return KsResult(statistic=d, pvalue=kolmogorov_sf(math.sqrt(n) * d))


def lag1_autocorrelation(x) -> float:
    """Lag-1 sample autocorrelation."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < 2:
        raise ValueError("need at least two values")
    centered = arr - arr.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise ValueError("sample has zero variance")
    return float(np.dot(centered[:-1], centered[1:]) / denom)
