"""Security and performance formulas for a slot-based PoS chain.

Closed forms (common-prefix and chain-quality violation probabilities,
confirmation depth) sit next to exact or Monte-Carlo oracles used to
cross-check them.  Leader election per slot is modelled as independent
Bernoulli trials: the adversary leads a slot with probability ``1 - gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np

from .errors import DomainError

CONFIRMATION_TARGET = 1e-3

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class SecurityParams:
    gamma: float
    kappa: int = 7
    l: int = 100
    mu: float | None = None
    delta: float = 0.5
    varsigma: int = 1
    tau: float = 1.0

    def __post_init__(self):
        if self.mu is None:
            object.__setattr__(self, "mu", self.gamma)  # ideal chain quality
        _check_gamma(self.gamma)
        if self.kappa < 0 or self.l < 0 or self.varsigma < 1:
            raise DomainError("kappa, l must be >= 0 and varsigma >= 1")
        for name in ("mu", "delta", "tau"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DomainError(f"{name} must lie in (0, 1]")

    @property
    def pr_cp(self) -> float:
        return pr_cp(self.gamma, self.kappa)

    @property
    def pr_cq_bound(self) -> float:
        return pr_cq_bound(self.gamma, self.l, self.delta)


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"honest ratio gamma={gamma} outside (0, 1]")


def pr_cp(gamma: float, kappa: int) -> float:
    """Probability the adversary leads ``kappa`` consecutive slots: (1 - gamma)**kappa."""
    _check_gamma(gamma)
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    return (1.0 - gamma) ** kappa


def pr_cq_bound(gamma: float, l: int, delta: float) -> float:
    """Chernoff-style chain-quality expression ``1 - exp(l (gamma - 1) delta**2 / 2)``."""
    _check_gamma(gamma)
    if l < 0:
        raise DomainError("window length l must be non-negative")
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must lie in (0, 1]")
    value = 1.0 - math.exp(l * (gamma - 1.0) * delta * delta / 2.0)
    return min(1.0, max(0.0, value))


def _binomial_pmf(n: int, p: float) -> list[float]:
    if p <= 0.0:
        return [1.0] + [0.0] * n
    if p >= 1.0:
        return [0.0] * n + [1.0]
    if n <= 1000:
        q = 1.0 - p
        return [math.comb(n, k) * p ** k * q ** (n - k) for k in range(n + 1)]
    lp, lq = math.log(p), math.log1p(-p)
    lg = math.lgamma(n + 1)
    return [math.exp(lg - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * lp + (n - k) * lq)
            for k in range(n + 1)]


def _upper_tails(pmf: list[float]) -> list[float]:
    """tails[k] = P[X > k], accumulated from the top so small tails stay accurate."""
    tails = [0.0] * len(pmf)
    acc = 0.0
    for k in range(len(pmf) - 1, 0, -1):
        acc += pmf[k]
        tails[k - 1] = acc
    return [min(1.0, t) for t in tails]


def pr_cq_exact(gamma: float, l: int, threshold: int) -> float:
    """P[X > threshold] for X ~ Binomial(l, 1 - gamma), by exact summation."""
    _check_gamma(gamma)
    if l < 0 or not 0 <= threshold <= l:
        raise DomainError("need 0 <= threshold <= l")
    if threshold == l:
        return 0.0
    return _upper_tails(_binomial_pmf(l, 1.0 - gamma))[threshold]


def _exact(x: Number) -> Fraction:
    # floats go through their shortest repr so 0.1 means one tenth
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(repr(float(x)))


def confirmation_kappa(adversarial_ratio: Number, target: Number = CONFIRMATION_TARGET) -> int:
    """Smallest kappa with ratio**kappa <= target, in exact rational arithmetic."""
    r, t = _exact(adversarial_ratio), _exact(target)
    if not 0 < r < 1:
        raise DomainError(f"adversarial ratio {adversarial_ratio} outside (0, 1)")
    if not 0 < t < 1:
        raise DomainError("target probability must lie in (0, 1)")
    kappa, power = 1, r
    while power > t:
        kappa += 1
        power *= r
    return kappa


def confirmation_time(adversarial_ratio: Number, slot_seconds: Number = 20,
                      target: Number = CONFIRMATION_TARGET) -> tuple[int, float]:
    if not float(slot_seconds) > 0:
        raise DomainError("slot duration must be positive")
    kappa = confirmation_kappa(adversarial_ratio, target)
    return kappa, float(kappa * _exact(slot_seconds))


def minutes_one_decimal(seconds: Number) -> float:
    """Seconds as minutes truncated to one decimal (100 s -> 1.6)."""
    tenths = math.floor(_exact(seconds) * 10 / 60)
    return tenths / 10


def throughput_threshold(adversarial_ratio: float, l: int,
                         target: float = CONFIRMATION_TARGET) -> float:
    """Smallest k/l such that P[adversary leads more than k of l slots] < target."""
    if not 0.0 < adversarial_ratio < 1.0:
        raise DomainError("adversarial ratio must lie in (0, 1)")
    if l < 1:
        raise DomainError("window length must be at least 1")
    tails = _upper_tails(_binomial_pmf(l, adversarial_ratio))
    for k in range(l + 1):
        if tails[k] < target:
            return k / l
    return 1.0


def _seed_int(seed: Union[int, bytes, str]) -> int:
    if isinstance(seed, bytes):
        return int.from_bytes(seed, "big")
    if isinstance(seed, str):
        return int(seed, 0)
    return int(seed)


def cp_race_oracle(gamma: float, kappa: int, trials: int,
                   seed: Union[int, bytes] = 0, chunk: int = 1 << 18) -> float:
    """Monte-Carlo fraction of windows where the adversary leads ``kappa`` slots in a row.

    Each trial draws the leaders of ``kappa`` consecutive slots starting at a
    fixed slot; the estimator targets ``pr_cp(gamma, kappa)``.
    """
    _check_gamma(gamma)
    if trials < 1:
        raise DomainError("trials must be positive")
    if kappa == 0:
        return 1.0
    rng = np.random.default_rng(_seed_int(seed))
    p_adv = 1.0 - gamma
    hits = 0
    left = trials
    while left:
        n = min(chunk, left)
        draws = rng.random((n, kappa)) < p_adv
        hits += int(np.count_nonzero(draws.all(axis=1)))
        left -= n
    return hits / trials


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)
