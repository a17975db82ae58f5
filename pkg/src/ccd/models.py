"""Pre-/post-change distribution pairs and their optimal betting functions.

A betting function maps a p-value to a multiplicative bet; the optimal one
for a given pair is the left-continuous inverse of the survival function of
the likelihood ratio under the pre-change law, equivalently the slope of the
ROC curve.  Closed forms are provided for the Bernoulli pair (finite table),
the Gaussian mean shift, and the Gaussian variance change, plus an empirical
construction from samples of the likelihood ratio.

Evaluation clamps p into [1e-12, 1 - 1e-12]; the closed forms blow up or
vanish at the endpoints and every caller feeds p-values that are uniform on
[0, 1], so the clamp changes nothing statistically while keeping the output
finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .normal import std_normal_cdf, std_normal_pdf, std_normal_quantile

P_CLAMP = 1e-12


def _eval_clamped(p, fn):
    """Validate p in [0, 1], clamp, apply fn elementwise, match input shape."""
    arr = np.asarray(p, dtype=np.float64)
    # negated form so NaN fails the check too
    if arr.size and not (np.min(arr) >= 0.0 and np.max(arr) <= 1.0):
        raise ValueError("p-value must lie in [0, 1]")
    flat = np.atleast_1d(arr).ravel()
    out = fn(np.clip(flat, P_CLAMP, 1.0 - P_CLAMP))
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


@dataclass(frozen=True)
class FiniteLikelihoodTable:
    """Distribution of a finitely supported likelihood ratio under the
    pre-change law: strictly increasing positive levels with their masses.
    """

    levels: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self) -> None:
        levels = tuple(float(v) for v in self.levels)
        masses = tuple(float(v) for v in self.masses)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "masses", masses)
        if len(levels) == 0 or len(levels) != len(masses):
            raise ValueError("need equally many levels and masses, at least one")
        if any(not (math.isfinite(v) and v > 0.0) for v in levels):
            raise ValueError("levels must be finite and positive")
        if any(levels[i] >= levels[i + 1] for i in range(len(levels) - 1)):
            raise ValueError("levels must be strictly increasing")
        if any(not (math.isfinite(q) and q > 0.0) for q in masses):
            raise ValueError("masses must be finite and positive")
        if abs(sum(masses) - 1.0) > 1e-9:
            raise ValueError("masses must sum to 1")

    def tail_masses_ascending(self) -> np.ndarray:
        """Mass at or above each level, ordered by ascending level reversed:
        entry j is the mass of the top j+1 levels."""
        return np.cumsum(np.asarray(self.masses, dtype=np.float64)[::-1])

    def tail_powers_ascending(self) -> np.ndarray:
        """Post-change mass (level times pre-change mass) of the top j+1
        levels, aligned with tail_masses_ascending."""
        lv = np.asarray(self.levels, dtype=np.float64)
        ms = np.asarray(self.masses, dtype=np.float64)
        return np.cumsum((lv * ms)[::-1])


class BettingFunction:
    """Non-increasing map from p-values to bets with unit integral."""

    descriptor: str = "betting"

    def _evaluate(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, p):
        return _eval_clamped(p, self._evaluate)


class FiniteCaoBetting(BettingFunction):
    """Optimal bets for a finitely supported likelihood ratio.

    f(p) is the level whose tail mass window contains p; boundary p lands on
    the larger level.
    """

    descriptor = "finite-cao"

    def __init__(self, table: FiniteLikelihoodTable) -> None:
        self.table = table
        self._levels = np.asarray(table.levels, dtype=np.float64)
        self._tails = table.tail_masses_ascending()

    def _evaluate(self, p: np.ndarray) -> np.ndarray:
        # tails[j] is the mass of the top j+1 levels; the first window whose
        # tail reaches p belongs to the (K-1-j0)-th level in ascending order.
        j0 = np.searchsorted(self._tails, p, side="left")
        idx = self._levels.size - 1 - np.clip(j0, 0, self._levels.size - 1)
        return self._levels[idx]


class GaussMeanCaoBetting(BettingFunction):
    """Optimal bets for a standard normal gaining mean mu after the change:
    f(p) = exp(mu * x - mu^2 / 2) with x the (1-p)- or p-quantile depending
    on the sign of mu.
    """

    descriptor = "gauss-mean-cao"

    def __init__(self, mu: float) -> None:
        mu = float(mu)
        if not (math.isfinite(mu) and mu != 0.0):
            raise ValueError(f"mean shift must be finite and nonzero, got {mu!r}")
        self.mu = mu

    def _evaluate(self, p: np.ndarray) -> np.ndarray:
        if self.mu > 0.0:
            x = std_normal_quantile(1.0 - p)
        else:
            x = std_normal_quantile(p)
        return np.exp(self.mu * x - 0.5 * self.mu * self.mu)


class GaussVarCaoBetting(BettingFunction):
    """Optimal bets for a centered normal whose standard deviation becomes
    sigma after the change: f(p) = exp(((1 - 1/sigma^2) / 2) * x^2) / sigma
    with x the (p/2)- or ((1-p)/2)-quantile depending on whether sigma
    exceeds 1.
    """

    descriptor = "gauss-var-cao"

    def __init__(self, sigma: float) -> None:
        sigma = float(sigma)
        if not (math.isfinite(sigma) and sigma > 0.0 and sigma != 1.0):
            raise ValueError(
                f"post-change standard deviation must be positive and differ "
                f"from 1, got {sigma!r}"
            )
        self.sigma = sigma

    def _evaluate(self, p: np.ndarray) -> np.ndarray:
        if self.sigma > 1.0:
            x = std_normal_quantile(0.5 * p)
        else:
            x = std_normal_quantile(0.5 * (1.0 - p))
        return np.exp(0.5 * (1.0 - 1.0 / (self.sigma * self.sigma)) * x * x) / self.sigma


class EmpiricalCaoBetting(BettingFunction):
    """Optimal bets estimated from samples of the likelihood ratio under the
    pre-change law: f(p) is the empirical upper p-quantile, i.e. with the
    samples sorted ascending, f(p) = s[N - ceil(p * N)].

    Meant for use with at least ~1000 samples; with a finitely supported
    ratio and exact sample proportions it reproduces the finite-table bets
    exactly.
    """

    descriptor = "empirical-cao"

    def __init__(self, samples) -> None:
        arr = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if arr.size == 0:
            raise ValueError("need at least one likelihood-ratio sample")
        if not np.isfinite(arr).all() or arr[0] <= 0.0:
            raise ValueError("likelihood-ratio samples must be finite and positive")
        self._sorted = arr

    def _evaluate(self, p: np.ndarray) -> np.ndarray:
        n = self._sorted.size
        m = np.ceil(p * n).astype(np.int64)
        np.clip(m, 1, n, out=m)
        return self._sorted[n - m]


def roc_slope_gauss_mean(mu: float, p):
    """The mean-shift bets computed as the slope of the ROC curve, a ratio
    of normal densities; agrees with GaussMeanCaoBetting to rounding."""
    mu = float(mu)
    if not (math.isfinite(mu) and mu != 0.0):
        raise ValueError(f"mean shift must be finite and nonzero, got {mu!r}")

    def fn(q: np.ndarray) -> np.ndarray:
        x = std_normal_quantile(1.0 - q) if mu > 0.0 else std_normal_quantile(q)
        return std_normal_pdf(x - mu) / std_normal_pdf(x)

    return _eval_clamped(p, fn)


def roc_slope_gauss_var(sigma: float, p):
    """The variance-change bets computed as the slope of the ROC curve;
    agrees with GaussVarCaoBetting to rounding."""
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma > 0.0 and sigma != 1.0):
        raise ValueError(
            f"post-change standard deviation must be positive and differ "
            f"from 1, got {sigma!r}"
        )

    def fn(q: np.ndarray) -> np.ndarray:
        if sigma > 1.0:
            x = std_normal_quantile(0.5 * q)
        else:
            x = std_normal_quantile(0.5 * (1.0 - q))
        return std_normal_pdf(x / sigma) / (sigma * std_normal_pdf(x))

    return _eval_clamped(p, fn)


class PrePostPair:
    """A pre-change law paired with a post-change alternative."""

    kind: str = "pair"

    def log_likelihood_ratio(self, z):
        raise NotImplementedError

    def likelihood_ratio(self, z):
        out = self.log_likelihood_ratio(z)
        if isinstance(out, float):
            return math.exp(out)
        return np.exp(out)

    def sample_pre(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_post(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def cao_betting(self) -> BettingFunction:
        raise NotImplementedError

    def _roc_interior(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def roc(self, p):
        """Power of the most powerful test at false-alarm rate p; exact 0
        and 1 at the endpoints."""
        arr = np.asarray(p, dtype=np.float64)
        if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
            raise ValueError("false-alarm rate must lie in [0, 1]")
        flat = np.atleast_1d(arr).ravel()
        out = np.empty_like(flat)
        out[flat == 0.0] = 0.0
        out[flat == 1.0] = 1.0
        interior = (flat > 0.0) & (flat < 1.0)
        if interior.any():
            out[interior] = self._roc_interior(flat[interior])
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)


@dataclass(frozen=True)
class BernoulliPair(PrePostPair):
    """Bernoulli(theta0) before the change, Bernoulli(theta1) after."""

    theta0: float
    theta1: float

    kind = "bernoulli"

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta0", float(self.theta0))
        object.__setattr__(self, "theta1", float(self.theta1))
        for name in ("theta0", "theta1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 < v < 1.0):
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v!r}")
        if self.theta0 == self.theta1:
            raise ValueError("the pre- and post-change parameters must differ")

    def _ratios(self) -> tuple[float, float]:
        """Likelihood ratio at z=1 and at z=0."""
        return self.theta1 / self.theta0, (1.0 - self.theta1) / (1.0 - self.theta0)

    @staticmethod
    def _check_support(arr: np.ndarray) -> None:
        ok = (arr == 0.0) | (arr == 1.0)
        if not np.all(ok):
            bad = float(arr) if arr.ndim == 0 else float(arr[~ok].flat[0])
            raise ValueError(
                f"observation {bad!r} is outside {{0, 1}}, where both the "
                f"pre- and post-change Bernoulli densities are zero"
            )

    def log_likelihood_ratio(self, z):
        arr = np.asarray(z, dtype=np.float64)
        self._check_support(arr)
        r1, r0 = self._ratios()
        out = np.where(arr == 1.0, math.log(r1), math.log(r0))
        if arr.ndim == 0:
            return float(out)
        return out

    def likelihood_ratio(self, z):
        arr = np.asarray(z, dtype=np.float64)
        self._check_support(arr)
        r1, r0 = self._ratios()
        out = np.where(arr == 1.0, r1, r0)
        if arr.ndim == 0:
            return float(out)
        return out

    def sample_pre(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return (rng.random(n) < self.theta0).astype(np.float64)

    def sample_post(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return (rng.random(n) < self.theta1).astype(np.float64)

    def finite_table(self) -> FiniteLikelihoodTable:
        r1, r0 = self._ratios()
        entries = sorted([(r1, self.theta0), (r0, 1.0 - self.theta0)])
        return FiniteLikelihoodTable(
            levels=tuple(e[0] for e in entries),
            masses=tuple(e[1] for e in entries),
        )

    def cao_betting(self) -> FiniteCaoBetting:
        return FiniteCaoBetting(self.finite_table())

    def _roc_interior(self, q: np.ndarray) -> np.ndarray:
        table = self.finite_table()
        xs = np.concatenate(([0.0], table.tail_masses_ascending()))
        ys = np.concatenate(([0.0], table.tail_powers_ascending()))
        return np.interp(q, xs, ys)


@dataclass(frozen=True)
class GaussMeanPair(PrePostPair):
    """Standard normal before the change, mean shifted to mu after."""

    mu: float

    kind = "gauss-mean"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", float(self.mu))
        if not (math.isfinite(self.mu) and self.mu != 0.0):
            raise ValueError(f"mean shift must be finite and nonzero, got {self.mu!r}")

    def log_likelihood_ratio(self, z):
        arr = np.asarray(z, dtype=np.float64)
        out = self.mu * arr - 0.5 * self.mu * self.mu
        if arr.ndim == 0:
            return float(out)
        return out

    def sample_pre(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal(n)

    def sample_post(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal(n) + self.mu

    def cao_betting(self) -> GaussMeanCaoBetting:
        return GaussMeanCaoBetting(self.mu)

    def _roc_interior(self, q: np.ndarray) -> np.ndarray:
        if self.mu > 0.0:
            return 1.0 - std_normal_cdf(std_normal_quantile(1.0 - q) - self.mu)
        return std_normal_cdf(std_normal_quantile(q) - self.mu)


@dataclass(frozen=True)
class GaussVarPair(PrePostPair):
    """Centered normal whose standard deviation moves from 1 to sigma."""

    sigma: float

    kind = "gauss-var"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", float(self.sigma))
        if not (math.isfinite(self.sigma) and self.sigma > 0.0 and self.sigma != 1.0):
            raise ValueError(
                f"post-change standard deviation must be positive and differ "
                f"from 1, got {self.sigma!r}"
            )

    def log_likelihood_ratio(self, z):
        arr = np.asarray(z, dtype=np.float64)
        s2 = self.sigma * self.sigma
        out = -math.log(self.sigma) + 0.5 * (1.0 - 1.0 / s2) * arr * arr
        if arr.ndim == 0:
            return float(out)
        return out

    def sample_pre(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal(n)

    def sample_post(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sigma * rng.standard_normal(n)

    def cao_betting(self) -> GaussVarCaoBetting:
        return GaussVarCaoBetting(self.sigma)

    def _roc_interior(self, q: np.ndarray) -> np.ndarray:
        if self.sigma > 1.0:
            return 2.0 * std_normal_cdf(std_normal_quantile(0.5 * q) / self.sigma)
        return 1.0 - 2.0 * std_normal_cdf(
            std_normal_quantile(0.5 * (1.0 - q)) / self.sigma
        )
