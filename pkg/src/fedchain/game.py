"""Stackelberg reward game between chain operators (leaders) and stakeholders (followers).

Follower ``n`` splits budget ``B_n`` over ``M`` chains; chain ``m`` pays
``R_m`` per block, shared in proportion to stake, so the follower earns
``sum_m R_m s_n^m / (s_n^m + T_m)`` where ``T_m`` is everybody else's stake
on chain ``m``.  Stake profiles are ``N x M`` float arrays.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BoundaryProfile, DomainError, InfeasibleProfile, NonpositiveReward

log = logging.getLogger(__name__)

# share given to a chain nobody else stakes on: any positive stake wins its whole reward
_LONE_CHAIN_SHARE = 1e-9


@dataclass(frozen=True)
class GameInstance:
    budgets: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.budgets, dtype=float).reshape(-1)
        r = np.asarray(self.rewards, dtype=float).reshape(-1)
        object.__setattr__(self, "budgets", b)
        object.__setattr__(self, "rewards", r)
        if r.size < 2 or b.size < 1:
            raise DomainError("need at least 2 chains and 1 stakeholder")
        if np.any(b <= 0) or np.any(r <= 0):
            raise DomainError("budgets and rewards must be positive")

    @property
    def N(self) -> int:
        return self.budgets.size

    @property
    def M(self) -> int:
        return self.rewards.size


def check_profile(g: GameInstance, s: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (g.N, g.M):
        raise InfeasibleProfile(f"profile shape {s.shape} != {(g.N, g.M)}")
    if np.any(s < 0):
        raise InfeasibleProfile("negative stake")
    if np.any(s.sum(axis=1) > g.budgets * (1 + rtol)):
        raise InfeasibleProfile("a follower exceeds its budget")
    return s


def others_stake(s: np.ndarray, n: int) -> np.ndarray:
    return s.sum(axis=0) - s[n]


def chain_payoffs(rewards: np.ndarray, own: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Per-chain payoff with 0/0 -> 0 and (x > 0, nobody else) -> full reward."""
    own = np.asarray(own, dtype=float)
    others = np.asarray(others, dtype=float)
    denom = own + others
    out = np.zeros_like(denom)
    pos = own > 0
    out[pos] = rewards[pos] * own[pos] / denom[pos]
    return out


def follower_utility(g: GameInstance, s: np.ndarray, n: int) -> float:
    s = check_profile(g, s)
    return float(chain_payoffs(g.rewards, s[n], others_stake(s, n)).sum())


def water_fill(rewards: np.ndarray, others: np.ndarray, budget: float) -> np.ndarray:
    """Maximise ``sum R_m x_m / (x_m + T_m)`` over ``x >= 0, sum x = budget``.

    KKT: ``x_m = max(0, sqrt(R_m T_m / lam) - T_m)``.  The active set is the
    chains with the largest marginal value ``R_m / T_m`` at zero stake;
    for a given active set ``1/sqrt(lam)`` has a closed form, so no
    bisection is needed.
    """
    R = [float(r) for r in rewards]
    T = [float(t) for t in others]
    return np.array(_water_fill(R, T, float(budget)))


def _water_fill(R: list[float], T: list[float], budget: float) -> list[float]:
    # plain floats: M is small and numpy call overhead dominates on 3-element arrays
    M = len(R)
    x = [0.0] * M
    free = [m for m in range(M) if T[m] <= 0]
    if len(free) == M:
        total = math.fsum(R)
        return [budget * r / total for r in R]
    for m in free:
        x[m] = budget * _LONE_CHAIN_SHARE
    budget -= budget * _LONE_CHAIN_SHARE * len(free)
    order = sorted((m for m in range(M) if T[m] > 0), key=lambda m: -R[m] / T[m])
    t_sum = root_sum = 0.0
    c_best = None
    for m in order:
        t_sum += T[m]
        root_sum += math.sqrt(R[m] * T[m])
        c = (budget + t_sum) / root_sum
        if c_best is not None and math.sqrt(R[m] / T[m]) * c <= 1.0:
            break
        c_best = c
        k = m
    for m in order:
        x[m] = max(0.0, c_best * math.sqrt(R[m] * T[m]) - T[m])
        if m == k:
            break
    return x


def best_response(g: GameInstance, s: np.ndarray, n: int) -> np.ndarray:
    """Utility-maximising full-budget allocation of follower ``n`` against ``s``."""
    s = np.asarray(s, dtype=float)
    return water_fill(g.rewards, others_stake(s, n), g.budgets[n])


def follower_equilibrium(g: GameInstance) -> np.ndarray:
    """Every follower splits its budget in proportion to the rewards."""
    return np.outer(g.budgets, g.rewards / g.rewards.sum())


def best_response_dynamics(g: GameInstance, start: Optional[np.ndarray] = None,
                           max_sweeps: int = 500, tol: float = 1e-12) -> tuple[np.ndarray, int]:
    """Sequential best responses, followers 1..N in order, until no stake moves by more
    than ``tol`` times the largest budget.

    Returns the final profile and the number of sweeps run.
    """
    s = np.zeros((g.N, g.M)) if start is None else np.array(start, dtype=float)
    rows = s.tolist()
    R = g.rewards.tolist()
    budgets = g.budgets.tolist()
    M = g.M
    scale = max(budgets)
    for sweep in range(1, max_sweeps + 1):
        col = [math.fsum(r[m] for r in rows) for m in range(M)]
        moved = 0.0
        for n, row in enumerate(rows):
            others = [col[m] - row[m] for m in range(M)]
            x = _water_fill(R, others, budgets[n])
            for m in range(M):
                moved = max(moved, abs(x[m] - row[m]))
                col[m] = others[m] + x[m]
            rows[n] = x
        if moved <= tol * scale:
            return np.array(rows), sweep
    return np.array(rows), max_sweeps


def stake_shares(s: np.ndarray) -> np.ndarray:
    per_chain = np.asarray(s, dtype=float).sum(axis=0)
    return per_chain / per_chain.sum()


def _leader_utility(budgets: np.ndarray, r_m: float, r_total: float) -> float:
    stakes = np.asarray(budgets, dtype=float) * r_m / r_total
    if np.any(stakes <= 0):
        raise DomainError("log weight undefined for non-positive stake")
    return float(np.sum(stakes * np.log(stakes)) - r_m)


def leader_utility(g: GameInstance, m: int) -> float:
    """Operator utility of chain ``m``: log-weighted equilibrium stake minus reward."""
    stakes = g.budgets * g.rewards[m] / g.rewards.sum()
    if np.any(stakes <= 1):
        log.warning("chain %d: equilibrium stake <= 1 gives a non-positive log weight", m)
    return _leader_utility(g.budgets, g.rewards[m], g.rewards.sum())


def leader_utility_vs_reward(budgets: Sequence[float], r_m: float, others_total: float) -> float:
    """Operator utility as a function of its own reward, other chains' rewards fixed."""
    return _leader_utility(np.asarray(budgets, dtype=float), r_m, r_m + others_total)


def leader_optimum(budgets: Sequence[float], M: int) -> float:
    """Symmetric optimal block reward ``(M-1)/M^2 * sum_n B_n (1 + ln(B_n / M))``."""
    if M < 2:
        raise DomainError("need at least 2 chains")
    b = [float(x) for x in budgets]
    if not b or any(x <= 0 for x in b):
        raise DomainError("budgets must be positive")
    r = (M - 1) / M ** 2 * math.fsum(x * (1.0 + math.log(x / M)) for x in b)
    if r <= 0:
        raise NonpositiveReward(f"optimal reward {r} is not positive for these budgets")
    return r


def leader_marginal(budgets: Sequence[float], r_m: float, others_total: float) -> float:
    """Closed-form dU_m/dR_m with the other chains' rewards held fixed."""
    b = np.asarray(budgets, dtype=float)
    total = r_m + others_total
    return float(np.sum(b * others_total * (1.0 + np.log(b * r_m / total))) / total ** 2 - 1.0)


def rosen_matrix(g: GameInstance, s: np.ndarray) -> np.ndarray:
    """Jacobian G of the pseudo-gradient (all weights 1), rows/cols indexed ``n*M + m``.

    Second derivatives of the follower payoff on chain m, with S the chain total:
    own ``-2 R_m T_n / S^3`` and cross ``R_m (s_n - T_n) / S^3``.  Chains do not
    couple, so G is block sparse.
    """
    s = check_profile(g, s)
    if g.N < 2 or np.any(s <= 0):
        raise BoundaryProfile("Rosen check needs an interior profile with N >= 2")
    N, M = g.N, g.M
    G = np.zeros((N * M, N * M))
    for m in range(M):
        col = s[:, m]
        S = col.sum()
        T = S - col
        scale = g.rewards[m] / S ** 3
        for n in range(N):
            for k in range(N):
                if n == k:
                    G[n * M + m, k * M + m] = -2.0 * scale * T[n]
                else:
                    G[n * M + m, k * M + m] = scale * (col[n] - T[n])
    return G


def rosen_check(g: GameInstance, s: np.ndarray) -> bool:
    """True iff G + G^T is negative definite (diagonal strict concavity)."""
    G = rosen_matrix(g, s)
    return bool(np.all(np.linalg.eigvalsh(G + G.T) < 0))
