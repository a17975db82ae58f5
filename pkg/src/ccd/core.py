"""Streaming building blocks: conformal p-values, the three tracked
processes (likelihood-ratio martingale, conformal test martingale,
normalized e-process), and the CUSUM alarm rule.

These classes are the per-step reference semantics.  The vectorized studies
in ccd.sim reproduce them through the kernels in ccd._backend; the tests
check both routes agree.  Instances are safe to hand between threads but not
to share mutably.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable

import numpy as np


class MartingaleDiedError(ValueError):
    """A multiplicative update hit zero; the process cannot recover."""


class ConformalTransducer:
    """Turns a stream of nonconformity scores into smoothed conformal
    p-values.

    For the n-th score s with tie-break draw tau,

        p = (gt + tau * eq) / n

    where gt counts previous scores strictly greater than s and eq counts
    scores equal to s, the new one included.  Equality is exact float
    equality.  Under exchangeability the emitted p-values are independent
    uniforms on [0, 1].
    """

    __slots__ = ("_scores",)

    def __init__(self) -> None:
        self._scores: list[float] = []

    @property
    def n(self) -> int:
        """Number of scores absorbed so far."""
        return len(self._scores)

    def count_greater(self, score: float) -> int:
        return len(self._scores) - bisect_right(self._scores, score)

    def count_equal(self, score: float) -> int:
        return bisect_right(self._scores, score) - bisect_left(self._scores, score)

    def step(self, score: float, tau: float) -> float:
        score = float(score)
        tau = float(tau)
        if not math.isfinite(score):
            raise ValueError(f"nonconformity score must be finite, got {score!r}")
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"tie-break draw must lie in [0, 1], got {tau!r}")
        lo = bisect_left(self._scores, score)
        hi = bisect_right(self._scores, score)
        self._scores.insert(hi, score)
        n = len(self._scores)
        gt = n - 1 - hi
        eq = hi - lo + 1
        return (gt + tau * eq) / n


def ctm_step(log_s: float, betting: Callable[[float], float], p: float) -> float:
    """One multiplicative update of a test martingale: log S + log f(p)."""
    value = float(betting(p))
    if value <= 0.0:
        raise MartingaleDiedError(
            f"betting function returned {value!r}; the martingale died"
        )
    return log_s + math.log(value)


def lrm_step(log_s: float, pair, z) -> float:
    """One multiplicative update of the likelihood-ratio process."""
    return log_s + float(pair.log_likelihood_ratio(z))


class CepAccumulator:
    """Running product of normalized e-values.

    Step n maps the likelihood ratio l to e = l / ((l_1 + ... + l_n) / n),
    the ratio of l to the running average with l included.  The running sum
    is kept with compensated addition so long paths do not lose low bits.
    """

    __slots__ = ("n", "log_product", "_sum", "_comp")

    def __init__(self) -> None:
        self.n = 0
        self.log_product = 0.0
        self._sum = 0.0
        self._comp = 0.0

    @property
    def sum_l(self) -> float:
        return self._sum

    def step(self, l: float) -> float:
        l = float(l)
        if not (math.isfinite(l) and l > 0.0):
            raise ValueError(f"likelihood ratio must be finite and positive, got {l!r}")
        y = l - self._comp
        t = self._sum + y
        self._comp = (t - self._sum) - y
        self._sum = t
        self.n += 1
        e = l * self.n / self._sum
        self.log_product += math.log(e)
        return e


class CusumDetector:
    """Alarm rule: fire when the process has grown by a factor of at least c
    over its running minimum since the last alarm, then restart the minimum
    at the current value.  Works on log values; boundary hits count.
    """

    __slots__ = ("c", "log_c", "log_min_since_alarm", "alarms", "n")

    def __init__(self, c: float) -> None:
        c = float(c)
        if not c > 1.0:
            raise ValueError(f"alarm threshold must exceed 1, got {c!r}")
        self.c = c
        self.log_c = math.log(c)
        self.log_min_since_alarm = 0.0
        self.alarms: list[int] = []
        self.n = 0

    def statistic(self, log_s: float) -> float:
        """Ratio of the process to its running minimum, in linear scale."""
        return math.exp(log_s - self.log_min_since_alarm)

    def update(self, log_s: float) -> bool:
        log_s = float(log_s)
        self.n += 1
        if log_s - self.log_min_since_alarm >= self.log_c:
            self.alarms.append(self.n)
            self.log_min_since_alarm = log_s
            return True
        if log_s < self.log_min_since_alarm:
            self.log_min_since_alarm = log_s
        return False


@dataclass(frozen=True)
class ProcessPath:
    """Aligned log paths of the three processes, entry 0 being log 1 = 0."""

    log_lrm: np.ndarray
    log_ctm: np.ndarray
    log_cep: np.ndarray

    def __post_init__(self) -> None:
        for name in ("log_lrm", "log_ctm", "log_cep"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
        n = self.log_lrm.shape[0]
        if self.log_ctm.shape != (n,) or self.log_cep.shape != (n,):
            raise ValueError("process paths must have equal length")
        if n == 0:
            raise ValueError("process paths must contain the starting value")
        if self.log_lrm[0] != 0.0 or self.log_ctm[0] != 0.0 or self.log_cep[0] != 0.0:
            raise ValueError("process paths must start at log 1 = 0")

    @property
    def n_steps(self) -> int:
        return self.log_lrm.shape[0] - 1


def cusum_statistic(log_path) -> np.ndarray:
    """Ratio of the process to its running minimum over the whole history,
    in linear scale, without restarts: entry n is
    exp(log_path[n] - min(log_path[0..n-1])), entry 0 is 1.
    """
    lp = np.ascontiguousarray(log_path, dtype=np.float64)
    if lp.ndim != 1 or lp.size == 0:
        raise ValueError("log path must be a non-empty one-dimensional array")
    if lp[0] != 0.0:
        raise ValueError("log path must start at log 1 = 0")
    out = np.empty_like(lp)
    out[0] = 1.0
    if lp.size > 1:
        prev_min = np.minimum.accumulate(lp)[:-1]
        out[1:] = np.exp(lp[1:] - prev_min)
    return out
