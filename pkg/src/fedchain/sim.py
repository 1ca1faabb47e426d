"""Epoch-level simulation of a federation of PoS chains.

Each epoch: chains post rewards (fixed, or the symmetric Stackelberg optimum),
followers allocate stake by sequential best responses, the adversary
attacks, per-chain security/performance metrics are recorded, and a few
random budgets are perturbed.  When ``simulate_chains`` is on, the stakes
are also materialised into real chains that run the beacon, elect leaders
and produce blocks for the epoch.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import math
import random
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Optional, Sequence, Union

import numpy as np

from . import analytics, game
from .beacon import StakeIndex, build_schedule, fts_select, run_beacon
from .consensus import (ChainState, NodeBehavior, begin_epoch, confirm_depth, halt_epoch,
                        run_epoch, run_slot)
from .crosschain import PENDING, build_spv_proof, lock_tokens, open_channel, verify_and_mint
from .errors import BeaconUnavailable, ConfigError, EmptyLedger
from .ledger import (PAYMENT, Fork, Keyring, StakeLedger, Transaction, append_block,
                     common_prefix_depth, empty_block, fork_choice, make_block, round_half_up)

ADVERSARY = "adversary"
REWARD_SCHEMES = ("static", "dynamic")
ADVERSARY_KINDS = ("none", "static", "adaptive")
CORRUPTION_RULES = ("largest", "random")


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    N: int = 100
    M: int = 3
    budget_low: float = 50.0
    budget_high: float = 100.0
    reward_scheme: str = "static"
    rewards: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0])
    adversary: str = "none"
    adversary_budget: float = 0.0      # B_A, static adversary
    corrupt_count: int = 0             # N_A, adaptive adversary
    corruption: str = "largest"
    delta_s: float = 1.0               # perturbation fractions are drawn from U(0, delta_s)
    n_delta: Optional[int] = None      # defaults to N // 10
    n_e: int = 10
    slots_per_epoch: int = 100
    committee_size: int = 10
    rng_seed: int = 0
    kappa: int = 7
    cq_window: int = 100
    cq_delta: float = 0.5
    cq_mu: float = 0.5
    slot_seconds: float = 20.0
    deposit: int = 10
    online_probability: float = 1.0
    adversary_withholds: bool = False
    tx_per_slot: int = 1
    simulate_chains: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def fail(msg):
            raise ConfigError(f"{self.name}: {msg}")

        if self.N < 1 or self.M < 2:
            fail("need N >= 1 and M >= 2")
        if not 0 < self.budget_low <= self.budget_high:
            fail("need 0 < budget_low <= budget_high")
        if self.reward_scheme not in REWARD_SCHEMES:
            fail(f"reward_scheme must be one of {REWARD_SCHEMES}")
        if self.reward_scheme == "static":
            if len(self.rewards) != self.M or any(r <= 0 for r in self.rewards):
                fail("static rewards need M positive values")
        if self.adversary not in ADVERSARY_KINDS:
            fail(f"adversary must be one of {ADVERSARY_KINDS}")
        if self.adversary_budget < 0:
            fail("adversary_budget must be non-negative")
        if not 0 <= self.corrupt_count <= self.N:
            fail("need 0 <= corrupt_count <= N")
        if self.corruption not in CORRUPTION_RULES:
            fail(f"corruption must be one of {CORRUPTION_RULES}")
        if not 0 < self.delta_s <= 1:
            fail("delta_s must lie in (0, 1]")
        if self.n_delta is not None and not 0 <= self.n_delta <= self.N:
            fail("need 0 <= n_delta <= N")
        if self.n_e < 1 or self.slots_per_epoch < 1 or self.committee_size < 1:
            fail("n_e, slots_per_epoch and committee_size must be positive")
        if self.kappa < 0 or self.cq_window < 1:
            fail("kappa must be >= 0 and cq_window >= 1")
        if not 0 < self.cq_delta <= 1 or not 0 < self.cq_mu <= 1:
            fail("cq_delta and cq_mu must lie in (0, 1]")
        if self.slot_seconds <= 0 or not 0 <= self.online_probability <= 1:
            fail("bad slot_seconds or online_probability")

    @property
    def perturbed_per_epoch(self) -> int:
        return self.N // 10 if self.n_delta is None else self.n_delta

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        if isinstance(cfg.rng_seed, str):
            cfg.rng_seed = int(cfg.rng_seed, 0)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


ADVERSARY_LEVELS = {
    "weak": dict(adversary_budget=500.0, corrupt_count=10),
    "medium": dict(adversary_budget=1000.0, corrupt_count=20),
    "strong": dict(adversary_budget=1500.0, corrupt_count=30),
}


def preset_config(level: str, adversary: str = "static", reward_scheme: str = "static",
                  **overrides) -> ScenarioConfig:
    """Weak/medium/strong adversary presets (N=100, M=3, budgets in [50, 100], 10 epochs)."""
    if level not in ADVERSARY_LEVELS:
        raise ConfigError(f"unknown adversary level {level!r}")
    params = dict(name=f"{level}-{adversary}-{reward_scheme}", N=100, M=3, budget_low=50.0,
                  budget_high=100.0, n_e=10, adversary=adversary, reward_scheme=reward_scheme)
    params.update(ADVERSARY_LEVELS[level])
    params.update(overrides)
    return ScenarioConfig(**params)


# -- randomness ------------------------------------------------------------------

def stream_seed(seed: int, label: str) -> int:
    """Independent 256-bit sub-seed for one named random stream."""
    raw = seed.to_bytes(max(32, (seed.bit_length() + 7) // 8), "big")
    return int.from_bytes(hashlib.sha256(raw + b"/" + label.encode()).digest(), "big")


# -- adversary -------------------------------------------------------------------

@dataclass(frozen=True)
class AdversaryConfig:
    kind: str = "none"
    budget: float = 0.0
    corrupt_count: int = 0
    corruption: str = "largest"

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig) -> "AdversaryConfig":
        return cls(cfg.adversary, cfg.adversary_budget, cfg.corrupt_count, cfg.corruption)


@dataclass
class AdversaryOutcome:
    ratios: np.ndarray
    adversarial_stake: np.ndarray
    corrupted: tuple[int, ...] = ()

    @property
    def broken(self) -> np.ndarray:
        # the beacon's honest-majority assumption fails from 50% on
        return self.ratios >= 0.5


def corrupted_set(budgets: np.ndarray, count: int, rule: str = "largest",
                  rng: Optional[np.random.Generator] = None) -> tuple[int, ...]:
    if count <= 0:
        return ()
    if rule == "largest":
        order = sorted(range(len(budgets)), key=lambda i: (-budgets[i], i))
        return tuple(sorted(order[:count]))
    if rng is None:
        raise ValueError("random corruption needs an rng")
    return tuple(sorted(int(i) for i in rng.choice(len(budgets), count, replace=False)))


def apply_adversary(profile: np.ndarray, adversary: AdversaryConfig,
                    budgets: Optional[np.ndarray] = None,
                    rng: Optional[np.random.Generator] = None,
                    corrupted: Optional[Sequence[int]] = None) -> AdversaryOutcome:
    """Adversarial stake ratio per chain.

    ``profile`` is the N x M follower allocation (a 1-D array is read as
    per-chain stake totals).  A static adversary is evaluated against each
    chain separately with its whole budget; an adaptive one owns the stakes
    its corrupted followers hold under ``profile``.  The corrupted set is
    ``corrupted`` when given, else picked from ``budgets`` now.
    """
    profile = np.asarray(profile, dtype=float)
    if profile.ndim == 1:
        profile = profile[None, :]
    stake = profile.sum(axis=0)
    M = stake.size
    if adversary.kind == "static":
        adv = np.full(M, float(adversary.budget))
        total = stake + adv
        ratios = np.divide(adv, total, out=np.zeros(M), where=total > 0)
        return AdversaryOutcome(ratios, adv)
    if adversary.kind == "adaptive":
        if corrupted is not None:
            chosen = tuple(sorted(int(i) for i in corrupted))
        else:
            if budgets is None:
                budgets = profile.sum(axis=1)
            chosen = corrupted_set(np.asarray(budgets, dtype=float), adversary.corrupt_count,
                                   adversary.corruption, rng)
        adv = profile[list(chosen)].sum(axis=0) if chosen else np.zeros(M)
        ratios = np.divide(adv, stake, out=np.zeros(M), where=stake > 0)
        return AdversaryOutcome(np.minimum(ratios, 1.0), adv, chosen)
    return AdversaryOutcome(np.zeros(M), np.zeros(M))


# -- metrics ---------------------------------------------------------------------

@dataclass
class ChainMetrics:
    chain: int
    total_stake: float
    adversarial_ratio: float
    pr_cp: float
    pr_cq_bound: float
    pr_cq_exact: float
    confirmation_kappa: int
    confirmation_time_seconds: float
    throughput_reduction: float
    reward: float
    stake_share: float
    measured_empty_fraction: float = float("nan")
    halted: bool = False
    broken: bool = False


@dataclass
class EpochMetrics:
    epoch: int
    per_chain: list[ChainMetrics]
    rewards: list[float]
    total_system_stake: float


# one row per chain per epoch: the epoch, the chain's metrics, then the system-wide stake
CSV_COLUMNS = (("epoch",) + tuple(f.name for f in dataclasses.fields(ChainMetrics))
               + ("total_system_stake",))


def security_metrics(ratio: float, cfg: ScenarioConfig) -> dict[str, float]:
    """Closed-form and exact metrics for one chain at adversarial ratio ``ratio``."""
    threshold = math.floor((1.0 - cfg.cq_mu) * cfg.cq_window)
    if ratio >= 1.0:
        return dict(pr_cp=1.0, pr_cq_bound=1.0, pr_cq_exact=1.0 if threshold < cfg.cq_window else 0.0,
                    confirmation_kappa=-1, confirmation_time_seconds=math.inf,
                    throughput_reduction=1.0)
    gamma = 1.0 - ratio
    kappa = confirm_depth(None, ratio)
    return dict(
        pr_cp=analytics.pr_cp(gamma, cfg.kappa),
        pr_cq_bound=analytics.pr_cq_bound(gamma, cfg.cq_window, cfg.cq_delta),
        pr_cq_exact=analytics.pr_cq_exact(gamma, cfg.cq_window, threshold),
        confirmation_kappa=kappa,
        confirmation_time_seconds=kappa * cfg.slot_seconds,
        throughput_reduction=(analytics.throughput_threshold(ratio, cfg.cq_window)
                              if ratio > 0 else 0.0),
    )


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics_csv(metrics: Sequence[EpochMetrics], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for em in metrics:
        for cm in em.per_chain:
            row = dataclasses.asdict(cm)
            row.update(epoch=em.epoch, total_system_stake=em.total_system_stake)
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def metrics_csv(metrics: Sequence[EpochMetrics]) -> str:
    buf = io.StringIO()
    write_metrics_csv(metrics, buf)
    return buf.getvalue()


# -- chain materialisation ---------------------------------------------------------

def stakeholder_id(n: int) -> str:
    return f"s{n:04d}"


class _ChainRunner:
    """One chain of the federation, re-staked from the game at every epoch start."""

    def __init__(self, m: int, cfg: ScenarioConfig, keyring: Keyring):
        self.cfg = cfg
        self.state = ChainState(f"chain{m + 1}", StakeLedger(), keyring,
                                slots_per_epoch=cfg.slots_per_epoch,
                                committee_size=cfg.committee_size,
                                slot_duration=cfg.slot_seconds, deposit=cfg.deposit)
        self.rng = random.Random(stream_seed(cfg.rng_seed, f"chain{m}"))
        self._tx = 0

    def run(self, epoch: int, stakes: dict[str, int], reward: float,
            adversarial: set[str]) -> tuple[float, bool]:
        st = self.state
        st.ledger.set_balances({a: v for a, v in stakes.items() if v > 0})
        st.reward = round_half_up(reward)
        st.mempool.clear()
        try:
            index = StakeIndex(st.ledger)
        except EmptyLedger:
            halt_epoch(st)
            return 1.0, True
        if not st.committee:
            genesis_seed = self.rng.randbytes(32)
            st.committee = tuple(fts_select(genesis_seed, j, index)
                                 for j in range(self.cfg.committee_size))
        committee = st.schedule.committee if st.schedule is not None else st.committee
        values = {mbr: self.rng.randbytes(32) for mbr in sorted(set(committee))}
        withholding = adversarial if self.cfg.adversary_withholds else set()
        beacon = run_beacon(epoch, committee, values, withholding)
        try:
            seed = beacon.finalize()
        except BeaconUnavailable:
            seed = None
        behaviors = {a: NodeBehavior(a, honest=a not in adversarial,
                                     online_probability=self.cfg.online_probability)
                     for a in st.ledger.balances}
        honest = [a for a in index.accounts if a not in adversarial]
        before = st.stats.txless_blocks + st.stats.halted_slots
        run_epoch(st, seed, behaviors, self._payments(honest), self.rng)
        after = st.stats.txless_blocks + st.stats.halted_slots
        return (after - before) / self.cfg.slots_per_epoch, st.halted

    def _payments(self, honest: list[str]):
        def source(state: ChainState):
            txs = []
            if len(honest) < 2:
                return txs
            for _ in range(self.cfg.tx_per_slot):
                a, b = self.rng.sample(honest, 2)
                if state.ledger.free(a) >= 1:
                    self._tx += 1
                    txs.append(Transaction(f"{state.chain_id}/tx{self._tx}", PAYMENT, a, b, 1))
            return txs
        return source


# -- scenario driver -----------------------------------------------------------------

def epoch_rewards(cfg: ScenarioConfig, budgets: np.ndarray) -> np.ndarray:
    if cfg.reward_scheme == "dynamic":
        return np.full(cfg.M, game.leader_optimum(budgets, cfg.M))
    return np.asarray(cfg.rewards, dtype=float)


def run_scenario(cfg: ScenarioConfig) -> list[EpochMetrics]:
    """Run ``cfg.n_e`` epochs; fully determined by the config and its ``rng_seed``."""
    cfg.validate()
    budget_rng = np.random.default_rng(stream_seed(cfg.rng_seed, "budgets"))
    adversary_rng = np.random.default_rng(stream_seed(cfg.rng_seed, "adversary"))
    adversary = AdversaryConfig.from_scenario(cfg)
    budgets = budget_rng.uniform(cfg.budget_low, cfg.budget_high, cfg.N)
    keyring = Keyring(stream_seed(cfg.rng_seed, "keys").to_bytes(32, "big"))
    runners = [_ChainRunner(m, cfg, keyring) for m in range(cfg.M)] if cfg.simulate_chains else []
    out: list[EpochMetrics] = []
    # adaptive corruption is chosen on the budgets seen in one epoch and bites from the next
    corrupted = None
    if adversary.kind == "adaptive":
        corrupted = corrupted_set(budgets, adversary.corrupt_count, adversary.corruption,
                                  adversary_rng)

    for epoch in range(cfg.n_e):
        rewards = epoch_rewards(cfg, budgets)
        g = game.GameInstance(budgets, rewards)
        profile, _ = game.best_response_dynamics(g)
        attack = apply_adversary(profile, adversary, budgets, corrupted=corrupted)
        stake = profile.sum(axis=0)
        shares = stake / stake.sum()
        chains = []
        for m in range(cfg.M):
            ratio = float(attack.ratios[m])
            cm = ChainMetrics(chain=m + 1, total_stake=float(stake[m]), adversarial_ratio=ratio,
                              reward=float(rewards[m]), stake_share=float(shares[m]),
                              broken=bool(attack.broken[m]), **security_metrics(ratio, cfg))
            if runners:
                stakes = {stakeholder_id(n): round_half_up(profile[n, m]) for n in range(cfg.N)}
                adversarial = {stakeholder_id(n) for n in attack.corrupted}
                if adversary.kind == "static":
                    stakes[ADVERSARY] = round_half_up(attack.adversarial_stake[m])
                    adversarial.add(ADVERSARY)
                cm.measured_empty_fraction, cm.halted = runners[m].run(
                    epoch, stakes, rewards[m], adversarial)
            chains.append(cm)
        out.append(EpochMetrics(epoch, chains, [float(r) for r in rewards], float(budgets.sum())))
        if adversary.kind == "adaptive":
            corrupted = corrupted_set(budgets, adversary.corrupt_count, adversary.corruption,
                                      adversary_rng)
        budgets = perturb_budgets(budgets, cfg, budget_rng)
    return out


def perturb_budgets(budgets: np.ndarray, cfg: ScenarioConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """Move ``n_delta`` random budgets by ``+-Delta * B_n`` with ``Delta ~ U(0, delta_s)``."""
    budgets = budgets.copy()
    k = cfg.perturbed_per_epoch
    if k == 0:
        return budgets
    chosen = rng.choice(cfg.N, k, replace=False)
    fractions = rng.uniform(0.0, cfg.delta_s, k)
    signs = rng.choice((-1.0, 1.0), k)
    for n, d, sgn in zip(chosen, fractions, signs):
        budgets[n] *= 1.0 + sgn * d
    return budgets


# -- scripted attacks ------------------------------------------------------------------

def empty_block_trace(adversarial_ratio: float, slots: int, seed: int = 0,
                      chain: Optional[ChainState] = None, total_stake: int = 10_000,
                      slots_per_epoch: int = 100, committee_size: int = 10) -> list[bool]:
    """Per-slot flags (True = block without transactions) while the adversary empties its blocks.

    Without ``chain``, honest stake is spread over ten accounts and the
    adversary holds ``adversarial_ratio`` of ``total_stake``.  With a chain,
    an adversary account is added holding that ratio of the new total.
    """
    if not 0.0 <= adversarial_ratio < 1.0:
        raise ValueError("adversarial ratio must lie in [0, 1)")
    rng = random.Random(stream_seed(seed, "empty-block-attack"))
    if chain is None:
        adv = round_half_up(total_stake * adversarial_ratio)
        honest_total = total_stake - adv
        balances = {f"h{i}": honest_total // 10 + (1 if i < honest_total % 10 else 0)
                    for i in range(10)}
        chain = ChainState("attacked", StakeLedger.from_balances(balances),
                           Keyring(b"empty-block-attack"), slots_per_epoch=slots_per_epoch,
                           committee_size=committee_size)
        if adv:
            chain.ledger.credit(ADVERSARY, adv)
    elif adversarial_ratio > 0:
        honest_total = chain.ledger.total
        chain.ledger.credit(ADVERSARY, round_half_up(honest_total * adversarial_ratio
                                                     / (1.0 - adversarial_ratio)))
    honest = [a for a in chain.ledger.stakeholders() if a != ADVERSARY]
    behaviors = {ADVERSARY: NodeBehavior(ADVERSARY, honest=False)}
    index = StakeIndex(chain.ledger)
    if not chain.committee:
        chain.committee = tuple(fts_select(rng.randbytes(32), j, index)
                                for j in range(chain.committee_size))
    counter = [0]

    def payments(state: ChainState):
        # committee members have their whole balance locked, so pay from free accounts
        senders = [a for a in honest if state.ledger.free(a) >= 1]
        if not senders:
            return []
        counter[0] += 1
        a = rng.choice(senders)
        b = rng.choice(honest)
        return [Transaction(f"pay{counter[0]}", PAYMENT, a, b, 1)]

    flags: list[bool] = []
    epoch = 0
    while len(flags) < slots:
        committee = chain.schedule.committee if chain.schedule is not None else chain.committee
        values = {m: rng.randbytes(32) for m in sorted(set(committee))}
        seed_bytes = run_beacon(epoch, committee, values).finalize()
        begin_epoch(chain, seed_bytes)
        for _ in range(min(chain.slots_per_epoch, slots - len(flags))):
            run_slot(chain, behaviors, payments(chain), rng)
            flags.append(not chain.fork.tip.transactions)
        chain.slot = chain.slots_per_epoch
        epoch += 1
    return flags


def empty_block_attack(chain: Optional[ChainState], adversarial_ratio: float, slots: int,
                       seed: int = 0) -> float:
    """Measured throughput reduction: fraction of slots whose block carries no transactions."""
    flags = empty_block_trace(adversarial_ratio, slots, seed, chain)
    return sum(flags) / len(flags)


def window_exceedances(flags: Sequence[bool], l: int, theta: float) -> tuple[int, int]:
    """(# sliding windows of length ``l`` whose empty fraction exceeds ``theta``, # windows)."""
    limit = theta * l
    count = sum(flags[:l])
    windows = len(flags) - l + 1
    hits = int(count > limit + 1e-9)
    for i in range(l, len(flags)):
        count += flags[i] - flags[i - l]
        hits += int(count > limit + 1e-9)
    return hits, windows


@dataclass
class DoubleSpendOutcome:
    succeeded: bool
    minted: bool
    reverted_depth: int
    adopted: str          # "C1" (public fork) or "C2" (adversary's private fork)


_DS_KEYRING = Keyring(b"double-spend")


def scripted_double_spend(adversary_leads: Sequence[bool], kappa: Optional[int] = None,
                          keyring: Keyring = _DS_KEYRING) -> DoubleSpendOutcome:
    """Replay the two-fork construction against a cross-chain transfer.

    The adversary locks all its tokens on the origin chain (public fork C1)
    to be minted on the destination chain, while extending a private fork C2
    that spends the same tokens elsewhere.  ``adversary_leads[i]`` says who
    leads window slot ``i``; the lock lands in the first window slot.  After
    the window the lock is ``kappa`` deep, the destination mints, and C2 is
    released to an honest node that remembers which signed blocks it saw.
    The attack succeeds iff that node adopts C2.
    """
    flags = list(adversary_leads)
    kappa = len(flags) if kappa is None else kappa
    if not flags:
        raise ValueError("empty attack window")
    honest = "honest"
    genesis_ledger = StakeLedger.from_balances({ADVERSARY: 100, honest: 1000})
    schedule = {1: honest}
    for i, adv in enumerate(flags):
        schedule[2 + i] = ADVERSARY if adv else honest

    origin = ChainState("origin", genesis_ledger.copy(), keyring)
    dest = ChainState("dest", StakeLedger.from_balances({honest: 1000}), keyring)
    sc_origin, sc_dest = open_channel(origin, dest, rate=2)
    origin.leaders_by_height.update(schedule)

    origin.fork = append_block(origin.fork, make_block(origin.fork.tip, 0, honest, (), keyring),
                               origin.ledger)
    lock = lock_tokens(origin, ADVERSARY, 100, sc_origin, tx_id="tx1")
    spend = Transaction("tx2", PAYMENT, ADVERSARY, "adversary-wallet", 100)

    c1 = list(origin.fork.blocks)
    c2 = list(origin.fork.blocks)
    observed: dict[int, bytes] = {}
    for i, adv in enumerate(flags):
        leader = schedule[2 + i]
        b1 = make_block(c1[-1], 0, leader, (lock,) if i == 0 else (), keyring)
        if adv:
            b2 = make_block(c2[-1], 0, ADVERSARY, (spend,) if i == 0 else (), keyring)
        else:
            b2 = empty_block(c2[-1], 0)   # the adversary cannot sign an honest slot
        c1.append(b1)
        c2.append(b2)
        observed[b1.height] = b1.digest
    if flags[-1]:
        # grind the private tip so it wins the equal-length tie-break
        base_txs = (spend,) if len(flags) == 1 else ()
        nonce = 0
        while c2[-1].digest >= c1[-1].digest:
            nonce += 1
            extra = Transaction(f"grind{nonce}", PAYMENT, ADVERSARY, ADVERSARY, 0)
            c2[-1] = make_block(c2[-2], 0, ADVERSARY, base_txs + (extra,), keyring)
    fork1, fork2 = Fork(tuple(c1)), Fork(tuple(c2))

    origin.fork = fork1
    proof = build_spv_proof(origin, lock.id)
    mint = verify_and_mint(dest, sc_dest, proof, kappa=kappa)
    minted = mint != PENDING
    if minted:
        dest.ledger.apply_transactions([mint])

    adopted = fork_choice([fork1, fork2], schedule, keyring, genesis_ledger, observed)
    reverted = adopted.tip_digest == fork2.tip_digest
    return DoubleSpendOutcome(succeeded=reverted and minted, minted=minted,
                              reverted_depth=common_prefix_depth(fork1, fork2) if reverted else 0,
                              adopted="C2" if reverted else "C1")


@dataclass
class DoubleSpendTrials:
    trials: int
    successes: int
    consecutive_windows: int    # windows in which the adversary led every slot
    mismatches: int             # successes outside such windows or failures inside them

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def double_spend_trials(gamma: float, kappa: int, trials: int, seed: int = 0) -> DoubleSpendTrials:
    """Run ``scripted_double_spend`` on random leader windows with honest ratio ``gamma``."""
    rng = np.random.default_rng(stream_seed(seed, "double-spend"))
    draws = rng.random((trials, kappa)) < (1.0 - gamma)
    successes = consecutive = mismatches = 0
    for row in draws:
        all_adv = bool(row.all())
        outcome = scripted_double_spend(row.tolist(), kappa)
        successes += outcome.succeeded
        consecutive += all_adv
        mismatches += outcome.succeeded != all_adv
    return DoubleSpendTrials(trials, successes, consecutive, mismatches)
