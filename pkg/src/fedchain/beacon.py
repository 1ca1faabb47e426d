"""Epoch randomness and stake-weighted leader election.

The randomness source is a commit-reveal stand-in for PVSS: committee seats
commit to a 256-bit value, then reveal it.  The seed exists once a strict
majority of seats has revealed values matching their commitments, and is the
digest of all valid reveals in sorted order.  Members that withhold or reveal
a mismatching value are flagged.

Follow-the-Satoshi maps ``SHA-256(seed || counter)`` onto a token index;
accounts own contiguous index ranges in ascending id order, so each account
is picked with probability proportional to its stake.
"""
from __future__ import annotations

import bisect
import hashlib
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import (BeaconUnavailable, EmptyLedger, NotCommitteeMember, PhaseError,
                     RevealMismatch)
from .ledger import StakeLedger

COMMIT = "commit"
REVEAL = "reveal"


def commitment(member: str, value: bytes) -> bytes:
    return hashlib.sha256(b"commit:" + member.encode("utf-8") + b":" + value).digest()


def reveal_quorum(committee_size: int) -> int:
    """Smallest strict majority of ``committee_size`` seats."""
    return (committee_size + 2) // 2


@dataclass
class RandomnessBeacon:
    epoch: int
    committee: tuple[str, ...]
    commit_slots: int = 1
    commitments: dict[str, bytes] = field(default_factory=dict)
    reveals: dict[str, bytes] = field(default_factory=dict)
    flagged: set[str] = field(default_factory=set)

    def __post_init__(self):
        self.committee = tuple(self.committee)
        if not self.committee:
            raise ValueError("empty committee")
        self._seats = Counter(self.committee)

    def phase(self, slot: int) -> str:
        return COMMIT if slot < self.commit_slots else REVEAL

    @property
    def quorum(self) -> int:
        return reveal_quorum(len(self.committee))

    @property
    def revealed_seats(self) -> int:
        return sum(self._seats[m] for m in self.reveals)

    def commit(self, member: str, digest: bytes, slot: int = 0) -> None:
        self._check_member(member)
        if self.phase(slot) != COMMIT:
            raise PhaseError(f"commit from {member} during the reveal phase")
        self.commitments[member] = digest

    def reveal(self, member: str, value: bytes, slot: Optional[int] = None) -> None:
        self._check_member(member)
        if slot is not None and self.phase(slot) != REVEAL:
            raise PhaseError(f"reveal from {member} during the commit phase")
        if self.commitments.get(member) != commitment(member, value):
            self.flagged.add(member)
            raise RevealMismatch(f"reveal of {member} does not match its commitment")
        self.reveals[member] = value

    def _check_member(self, member: str) -> None:
        if member not in self._seats:
            raise NotCommitteeMember(member)

    @property
    def seed(self) -> Optional[bytes]:
        if self.revealed_seats < self.quorum:
            return None
        h = hashlib.sha256(b"seed:" + struct.pack(">Q", self.epoch))
        for member in sorted(self.reveals):
            h.update(self.reveals[member])
        return h.digest()

    def finalize(self) -> bytes:
        """The seed at the end of the reveal phase; flags members that never revealed."""
        for member in self._seats:
            if member not in self.reveals:
                self.flagged.add(member)
        seed = self.seed
        if seed is None:
            raise BeaconUnavailable(
                f"epoch {self.epoch}: {self.revealed_seats}/{len(self.committee)} seats revealed,"
                f" quorum is {self.quorum}")
        return seed


def contribute(beacon: RandomnessBeacon, member: str, value: bytes, slot: int) -> RandomnessBeacon:
    """Commit-phase slots record ``commitment(member, value)``; reveal-phase slots reveal."""
    if beacon.phase(slot) == COMMIT:
        beacon.commit(member, commitment(member, value), slot)
    else:
        beacon.reveal(member, value, slot)
    return beacon


def run_beacon(epoch: int, committee: Sequence[str], values: dict[str, bytes],
               withholding: frozenset[str] | set[str] = frozenset()) -> RandomnessBeacon:
    """Drive a full commit-then-reveal round; ``withholding`` members commit but never reveal."""
    beacon = RandomnessBeacon(epoch, tuple(committee))
    for member in sorted(set(committee)):
        contribute(beacon, member, values[member], slot=0)
    for member in sorted(set(committee)):
        if member not in withholding:
            contribute(beacon, member, values[member], slot=beacon.commit_slots)
    return beacon


class StakeIndex:
    """Cumulative token ranges of a ledger, ordered by ascending account id."""

    def __init__(self, ledger: StakeLedger):
        self.accounts = ledger.stakeholders()
        self.bounds = []
        acc = 0
        for a in self.accounts:
            acc += ledger.balances[a]
            self.bounds.append(acc)
        self.total = acc
        if self.total <= 0:
            raise EmptyLedger("ledger holds no stake")

    def owner(self, token_index: int) -> str:
        return self.accounts[bisect.bisect_right(self.bounds, token_index)]


def token_index(seed: bytes, counter: int, total: int) -> int:
    h = hashlib.sha256(seed + struct.pack(">Q", counter)).digest()
    return int.from_bytes(h, "big") % total


def fts_select(seed: bytes, counter: int, ledger: StakeLedger | StakeIndex) -> str:
    index = ledger if isinstance(ledger, StakeIndex) else StakeIndex(ledger)
    return index.owner(token_index(seed, counter, index.total))


@dataclass
class EpochSchedule:
    epoch: int
    leaders: tuple[str, ...]
    committee: tuple[str, ...]
    broadcast: bool = False

    def __len__(self) -> int:
        return len(self.leaders)


def build_schedule(seed: bytes, ledger: StakeLedger, slots: int, committee_size: int,
                   epoch: int = 0) -> EpochSchedule:
    """Leaders for counters ``0..slots-1`` and next committee for the following counters."""
    if slots < 1 or committee_size < 1:
        raise ValueError("slots and committee_size must be positive")
    index = StakeIndex(ledger)
    leaders = tuple(fts_select(seed, i, index) for i in range(slots))
    committee = tuple(fts_select(seed, slots + j, index) for j in range(committee_size))
    return EpochSchedule(epoch, leaders, committee)
