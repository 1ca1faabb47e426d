"""Per-chain epoch engine: leader schedule, slots, rewards and deposits."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

from . import analytics
from .beacon import EpochSchedule, build_schedule
from .errors import BeaconUnavailable, DomainError
from .ledger import (CROSS_LOCK, Block, Fork, Keyring, StakeLedger, Transaction,
                     append_block, empty_block, make_block)

log = logging.getLogger(__name__)

DEFAULT_SLOTS_PER_EPOCH = 100
DEFAULT_COMMITTEE_SIZE = 10
DEFAULT_DEPOSIT = 10
DEFAULT_SLOT_SECONDS = 20.0


@dataclass
class NodeBehavior:
    stakeholder: str
    honest: bool = True
    online_probability: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.online_probability <= 1.0:
            raise ValueError("online_probability must lie in [0, 1]")


HONEST = NodeBehavior("*")

# An adversary strategy gets the chain and the elected leader and returns the
# block to publish, or None to withhold (an EMPTY block is then added).
AdversaryStrategy = Callable[["ChainState", str], Optional[Block]]


def empty_content_strategy(state: "ChainState", leader: str) -> Block:
    """Sign a block without transactions: the throughput-reduction attack."""
    return make_block(state.fork.tip, state.epoch, leader, (), state.keyring)


@dataclass
class ChainStats:
    slots: int = 0
    blocks: int = 0
    empty_blocks: int = 0        # EMPTY (leaderless) blocks, rule I2
    txless_blocks: int = 0       # any block without transactions
    adversarial_blocks: int = 0
    offline_slots: int = 0
    halted_slots: int = 0
    rewards_minted: int = 0
    transactions: int = 0
    halted_epochs: int = 0


@dataclass
class ChainState:
    chain_id: str
    ledger: StakeLedger
    keyring: Keyring = field(default_factory=Keyring)
    fork: Optional[Fork] = None
    schedule: Optional[EpochSchedule] = None
    reward: int = 0
    epoch: int = -1
    slot: int = 0
    slots_per_epoch: int = DEFAULT_SLOTS_PER_EPOCH
    committee_size: int = DEFAULT_COMMITTEE_SIZE
    slot_duration: float = DEFAULT_SLOT_SECONDS
    deposit: int = DEFAULT_DEPOSIT
    committee: tuple[str, ...] = ()
    contracts: dict[str, Any] = field(default_factory=dict)
    mempool: list[Transaction] = field(default_factory=list)
    leaders_by_height: dict[int, str] = field(default_factory=dict)
    halted: bool = False
    stats: ChainStats = field(default_factory=ChainStats)

    def __post_init__(self):
        if self.fork is None:
            self.fork = Fork.genesis(self.chain_id)
        if self.reward < 0:
            raise ValueError("reward must be non-negative")

    @property
    def epoch_complete(self) -> bool:
        return self.schedule is None or self.halted or self.slot >= self.slots_per_epoch

    @property
    def height(self) -> int:
        return self.fork.tip.height

    def current_leader(self) -> str:
        return self.schedule.leaders[self.slot]


def begin_epoch(state: ChainState, seed: Optional[bytes]) -> ChainState:
    """Elect and broadcast the epoch's leaders (rule I1); lock deposits and committee stakes.

    A missing seed (beacon quorum not met) halts the chain for the epoch.
    """
    if not state.epoch_complete:
        raise RuntimeError(f"epoch {state.epoch} of {state.chain_id} is still running")
    previous = state.schedule
    state.epoch += 1
    state.slot = 0
    state.ledger.unlock_all()
    if seed is None:
        state.halted = True
        state.schedule = None
        state.stats.halted_epochs += 1
        raise BeaconUnavailable(f"{state.chain_id}: no seed for epoch {state.epoch}")
    state.halted = False
    if previous is not None:
        state.committee = previous.committee
    schedule = build_schedule(seed, state.ledger, state.slots_per_epoch, state.committee_size,
                              epoch=state.epoch)
    schedule.broadcast = True
    state.schedule = schedule
    base = state.fork.tip.height + 1
    for i, leader in enumerate(schedule.leaders):
        state.leaders_by_height[base + i] = leader
    for leader in sorted(set(schedule.leaders)):
        state.ledger.lock(leader, state.deposit)
    for member in sorted(set(state.committee)):
        state.ledger.lock(member, state.ledger.balance(member))
    return state


def halt_epoch(state: ChainState) -> ChainState:
    """Begin an epoch without a seed, swallowing the BeaconUnavailable."""
    try:
        begin_epoch(state, None)
    except BeaconUnavailable as exc:
        log.info("%s", exc)
    return state


def _select_transactions(ledger: StakeLedger, mempool: Sequence[Transaction]) -> list[Transaction]:
    chosen: list[Transaction] = []
    for tx in mempool:
        if ledger.check_transactions(chosen + [tx]) is None:
            chosen.append(tx)
    return chosen


def run_slot(state: ChainState, behaviors: Mapping[str, NodeBehavior] = {},
             pending: Iterable[Transaction] = (), rng: Optional[random.Random] = None,
             adversary: Optional[AdversaryStrategy] = None) -> ChainState:
    """Produce the block of the current slot.

    Honest online leaders include every applicable pending transaction and
    earn the reward; offline leaders leave an EMPTY block; adversarial
    leaders follow ``adversary`` (default: sign a block with no transactions).
    """
    state.mempool.extend(pending)
    state.stats.slots += 1
    if state.halted or state.schedule is None:
        state.stats.halted_slots += 1
        state.slot += 1
        return state
    if state.slot >= state.slots_per_epoch:
        raise RuntimeError("epoch finished; call begin_epoch")
    leader = state.current_leader()
    behavior = behaviors.get(leader, HONEST)
    online = True
    if behavior.online_probability < 1.0:
        online = (rng or random).random() < behavior.online_probability
    parent = state.fork.tip

    if not online:
        block = empty_block(parent, state.epoch)
        state.stats.offline_slots += 1
    elif behavior.honest:
        txs = _select_transactions(state.ledger, state.mempool)
        if txs:
            included = {tx.id for tx in txs}
            state.mempool = [tx for tx in state.mempool if tx.id not in included]
        block = make_block(parent, state.epoch, leader, txs, state.keyring)
    else:
        block = (adversary or empty_content_strategy)(state, leader)
        if block is None:
            block = empty_block(parent, state.epoch)
        elif not block.is_empty:
            state.stats.adversarial_blocks += 1

    _append(state, block)
    state.slot += 1
    return state


def _append(state: ChainState, block: Block) -> None:
    reward = 0 if block.is_empty else state.reward
    state.fork = append_block(state.fork, block, state.ledger, reward,
                              state.leaders_by_height, state.keyring)
    st = state.stats
    st.blocks += 1
    st.rewards_minted += reward
    st.transactions += len(block.transactions)
    if block.is_empty:
        st.empty_blocks += 1
    if not block.transactions:
        st.txless_blocks += 1
    for tx in block.transactions:
        if tx.kind == CROSS_LOCK and tx.receiver in state.contracts:
            state.contracts[tx.receiver].locked_pool += tx.amount


def run_epoch(state: ChainState, seed: Optional[bytes],
              behaviors: Mapping[str, NodeBehavior] = {},
              tx_source: Optional[Callable[[ChainState], Iterable[Transaction]]] = None,
              rng: Optional[random.Random] = None,
              adversary: Optional[AdversaryStrategy] = None) -> ChainState:
    if seed is None:
        halt_epoch(state)
    else:
        begin_epoch(state, seed)
    for _ in range(state.slots_per_epoch):
        pending = tx_source(state) if tx_source is not None else ()
        run_slot(state, behaviors, pending, rng, adversary)
    return state


def confirm_depth(state: Optional[ChainState], adversarial_ratio: float,
                  target: float = analytics.CONFIRMATION_TARGET) -> int:
    """Smallest kappa with ratio**kappa <= target; a fully honest chain needs one block."""
    if not 0.0 <= adversarial_ratio < 1.0:
        raise DomainError("adversarial ratio must lie in [0, 1)")
    if adversarial_ratio == 0.0:
        return 1
    return analytics.confirmation_kappa(adversarial_ratio, target)
