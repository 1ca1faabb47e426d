"""Blocks, transactions, forks and the account-model stake ledger.

Canonical byte encoding (stable across implementations)::

    field(x)  = len(x) as 4-byte big-endian || x
    int(n)    = n as 8-byte unsigned big-endian
    str(s)    = UTF-8 bytes of s;  EMPTY / None = zero-length bytes

    tx     = field(id) field(kind) field(sender) field(receiver)
             field(int(amount)) field(payload)
    header = field(int(height)) field(int(epoch)) field(leader)
             field(parent_digest) field(tx_root)

    tx digest    = SHA-256(tx)
    tx_root      = Merkle root over tx digests (odd levels duplicate the
                   last node; an empty list hashes to SHA-256(b""))
    block digest = SHA-256(header)

The leader signature is not part of the digest; it authenticates it.
"""
from __future__ import annotations

import hashlib
import math
import struct
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import InsufficientBalance, InvalidBlock, NoValidFork

PAYMENT = "payment"
CROSS_LOCK = "cross_lock"
CROSS_MINT = "cross_mint"
DEPOSIT_LOCK = "deposit_lock"
TX_KINDS = (PAYMENT, CROSS_LOCK, CROSS_MINT, DEPOSIT_LOCK)

#: leader value of an EMPTY block (rule I2)
EMPTY = None

ZERO_DIGEST = bytes(32)

Schedule = Union[Sequence[Optional[str]], Mapping[int, str]]


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def encode_field(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def encode_int(n: int) -> bytes:
    return struct.pack(">Q", n)


def encode_str(s: Optional[str]) -> bytes:
    return b"" if s is None else s.encode("utf-8")


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    if not leaves:
        return sha256(b"")
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def merkle_path(leaves: Sequence[bytes], index: int) -> list[bytes]:
    """Sibling digests from leaf ``index`` up to the root."""
    if not 0 <= index < len(leaves):
        raise IndexError(index)
    path = []
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        path.append(level[index ^ 1])
        level = [sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        index //= 2
    return path


def merkle_root_from_path(leaf: bytes, index: int, path: Sequence[bytes]) -> bytes:
    node = leaf
    for sibling in path:
        node = sha256(sibling + node) if index & 1 else sha256(node + sibling)
        index //= 2
    return node


def _memo(fn):
    """Read-only property computed once per instance (frozen dataclasses allow __dict__ writes).

    functools.cached_property takes a lock on every access before 3.12, which
    dominates the cost of hashing small blocks.
    """
    key = "_memo_" + fn.__name__

    def get(self):
        d = self.__dict__
        if key not in d:
            d[key] = fn(self)
        return d[key]
    return property(get, doc=fn.__doc__)


@dataclass(frozen=True)
class Transaction:
    id: str
    kind: str
    sender: str
    receiver: str
    amount: int
    payload: Optional[bytes] = None

    def __post_init__(self):
        if self.kind not in TX_KINDS:
            raise ValueError(f"unknown transaction kind {self.kind!r}")
        if not isinstance(self.amount, int) or self.amount < 0:
            raise ValueError("amount must be a non-negative integer")
        if (self.kind == CROSS_MINT) != (self.payload is not None):
            raise ValueError("exactly the cross_mint kind carries an SPV proof reference")

    def encode(self) -> bytes:
        return b"".join((
            encode_field(encode_str(self.id)),
            encode_field(encode_str(self.kind)),
            encode_field(encode_str(self.sender)),
            encode_field(encode_str(self.receiver)),
            encode_field(encode_int(self.amount)),
            encode_field(self.payload or b""),
        ))

    @_memo
    def digest(self) -> bytes:
        return sha256(self.encode())


@dataclass(frozen=True)
class BlockHeader:
    height: int
    epoch: int
    leader: Optional[str]
    parent_digest: bytes
    tx_root: bytes
    signature: Optional[bytes] = None

    def encode(self) -> bytes:
        return b"".join((
            encode_field(encode_int(self.height)),
            encode_field(encode_int(self.epoch)),
            encode_field(encode_str(self.leader)),
            encode_field(self.parent_digest),
            encode_field(self.tx_root),
        ))

    @_memo
    def digest(self) -> bytes:
        return sha256(self.encode())


@dataclass(frozen=True)
class Block:
    height: int
    epoch: int
    leader: Optional[str]
    parent_digest: bytes
    transactions: tuple[Transaction, ...] = ()
    signature: Optional[bytes] = None

    def __post_init__(self):
        if not isinstance(self.transactions, tuple):
            object.__setattr__(self, "transactions", tuple(self.transactions))

    @property
    def is_empty(self) -> bool:
        return self.leader is EMPTY

    @_memo
    def tx_root(self) -> bytes:
        return merkle_root([tx.digest for tx in self.transactions])

    @_memo
    def header(self) -> BlockHeader:
        return BlockHeader(self.height, self.epoch, self.leader, self.parent_digest,
                           self.tx_root, self.signature)

    @property
    def digest(self) -> bytes:
        return self.header.digest


def empty_block(parent: Block, epoch: int) -> Block:
    return Block(parent.height + 1, epoch, EMPTY, parent.digest)


def genesis_block(chain_id: str) -> Block:
    # parent digest is derived from the chain id so that distinct chains never share a genesis
    return Block(0, 0, EMPTY, sha256(b"genesis:" + chain_id.encode("utf-8")))


class Keyring:
    """Simulated signatures: ``tag = SHA-256(secret || digest)``.

    Secrets are derived from a master seed so that a simulation run can
    recreate every stakeholder key.  Forgery is impossible by construction:
    only holders of the keyring can sign.
    """

    def __init__(self, master_seed: bytes = b"fedchain"):
        self._master = master_seed
        self._secrets: dict[str, bytes] = {}

    def secret(self, stakeholder: str) -> bytes:
        s = self._secrets.get(stakeholder)
        if s is None:
            s = sha256(b"key:" + self._master + b":" + stakeholder.encode("utf-8"))
            self._secrets[stakeholder] = s
        return s

    def tag(self, stakeholder: str, digest: bytes) -> bytes:
        return sha256(self.secret(stakeholder) + digest)

    def verify(self, stakeholder: str, digest: bytes, tag: Optional[bytes]) -> bool:
        return tag is not None and tag == self.tag(stakeholder, digest)

    def sign_block(self, block: Block) -> Block:
        if block.is_empty:
            raise InvalidBlock("EMPTY blocks carry no signature")
        return Block(block.height, block.epoch, block.leader, block.parent_digest,
                     block.transactions, self.tag(block.leader, block.digest))


def make_block(parent: Block, epoch: int, leader: str,
               transactions: Iterable[Transaction], keyring: Keyring) -> Block:
    """Build and sign the child of ``parent`` authored by ``leader``."""
    unsigned = Block(parent.height + 1, epoch, leader, parent.digest, tuple(transactions))
    return keyring.sign_block(unsigned)


@dataclass
class StakeLedger:
    """Account balances plus locked amounts and escrow pools.

    ``total`` tracks the sum of balances; tokens moved into an escrow pool
    leave ``total`` and are accounted in ``escrow``.
    """
    balances: dict[str, int] = field(default_factory=dict)
    locked: dict[str, int] = field(default_factory=dict)
    escrow: dict[str, int] = field(default_factory=dict)
    total: int = 0
    minted_claims: set[bytes] = field(default_factory=set)
    seen_tx_ids: set[str] = field(default_factory=set)

    def __post_init__(self):
        if any(v < 0 for v in self.balances.values()):
            raise ValueError("negative balance")
        self.total = sum(self.balances.values())
        for a, v in self.locked.items():
            if v > self.balances.get(a, 0):
                raise ValueError(f"locked amount of {a} exceeds its balance")

    @classmethod
    def from_balances(cls, balances: Mapping[str, int]) -> "StakeLedger":
        return cls(balances=dict(balances))

    def copy(self) -> "StakeLedger":
        new = StakeLedger.__new__(StakeLedger)
        new.balances = dict(self.balances)
        new.locked = dict(self.locked)
        new.escrow = dict(self.escrow)
        new.total = self.total
        new.minted_claims = set(self.minted_claims)
        new.seen_tx_ids = set(self.seen_tx_ids)
        return new

    def balance(self, account: str) -> int:
        return self.balances.get(account, 0)

    def free(self, account: str) -> int:
        return self.balances.get(account, 0) - self.locked.get(account, 0)

    @property
    def escrowed(self) -> int:
        return sum(self.escrow.values())

    def credit(self, account: str, amount: int) -> None:
        self.balances[account] = self.balances.get(account, 0) + amount
        self.total += amount

    def lock(self, account: str, amount: int) -> int:
        """Lock up to ``amount`` more tokens of ``account``; returns the new lock."""
        new = min(self.balances.get(account, 0), self.locked.get(account, 0) + amount)
        self.locked[account] = new
        return new

    def unlock_all(self) -> None:
        self.locked.clear()

    def set_balances(self, balances: Mapping[str, int]) -> None:
        """Replace balances wholesale (epoch-level stake reconciliation); clears locks."""
        self.balances = dict(balances)
        self.locked.clear()
        self.total = sum(self.balances.values())

    def stakeholders(self) -> list[str]:
        return sorted(a for a, v in self.balances.items() if v > 0)

    # -- transaction application -------------------------------------------------

    def check_transactions(self, txs: Iterable[Transaction]) -> Optional[str]:
        """Return a reason string if ``txs`` cannot be applied in order, else None."""
        free: dict[str, int] = {}
        ids: set[str] = set()
        claims: set[bytes] = set()

        def _free(a):
            if a not in free:
                free[a] = self.free(a)
            return free[a]

        for tx in txs:
            if tx.id in self.seen_tx_ids or tx.id in ids:
                return f"duplicate transaction {tx.id}"
            ids.add(tx.id)
            if tx.kind == CROSS_MINT:
                if tx.payload in self.minted_claims or tx.payload in claims:
                    return f"proof already minted by {tx.id}"
                claims.add(tx.payload)
                free[tx.receiver] = _free(tx.receiver) + tx.amount
                continue
            if tx.kind == CROSS_LOCK and tx.amount == 0:
                return f"zero-amount lock {tx.id}"
            if _free(tx.sender) < tx.amount:
                return f"insufficient free balance for {tx.id}"
            free[tx.sender] -= tx.amount
            if tx.kind == PAYMENT:
                free[tx.receiver] = _free(tx.receiver) + tx.amount
        return None

    def apply_transactions(self, txs: Sequence[Transaction]) -> None:
        reason = self.check_transactions(txs)
        if reason is not None:
            raise InsufficientBalance(reason)
        for tx in txs:
            self.seen_tx_ids.add(tx.id)
            if tx.kind == PAYMENT:
                self.balances[tx.sender] -= tx.amount
                self.balances[tx.receiver] = self.balances.get(tx.receiver, 0) + tx.amount
            elif tx.kind == CROSS_LOCK:
                self.balances[tx.sender] -= tx.amount
                self.total -= tx.amount
                self.escrow[tx.receiver] = self.escrow.get(tx.receiver, 0) + tx.amount
            elif tx.kind == CROSS_MINT:
                self.minted_claims.add(tx.payload)
                self.credit(tx.receiver, tx.amount)
            elif tx.kind == DEPOSIT_LOCK:
                self.locked[tx.sender] = self.locked.get(tx.sender, 0) + tx.amount


@dataclass(frozen=True)
class Fork:
    blocks: tuple[Block, ...]

    def __post_init__(self):
        if not isinstance(self.blocks, tuple):
            object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("a fork contains at least its genesis block")

    @classmethod
    def genesis(cls, chain_id: str) -> "Fork":
        return cls((genesis_block(chain_id),))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def tip_digest(self) -> bytes:
        return self.blocks[-1].digest

    def is_well_formed(self) -> bool:
        for i, b in enumerate(self.blocks):
            if b.height != i:
                return False
            if i and b.parent_digest != self.blocks[i - 1].digest:
                return False
        return True

    def find_transaction(self, tx_id: str) -> Optional[tuple[int, int]]:
        """(block height, index within block) of ``tx_id``, or None."""
        for b in reversed(self.blocks):
            for j, tx in enumerate(b.transactions):
                if tx.id == tx_id:
                    return b.height, j
        return None


def scheduled_leader(schedule: Schedule, height: int) -> Optional[str]:
    try:
        return schedule[height]
    except (IndexError, KeyError):
        return None


def validate_block(b: Block, schedule: Schedule, parent: Block, keyring: Keyring,
                   ledger: Optional[StakeLedger] = None) -> bool:
    """Rule I4 validity of ``b`` as a child of ``parent``.

    EMPTY blocks are always acceptable (rule I2) as long as they really are
    empty.  ``ledger`` is the state after ``parent``; when given, the block's
    transactions must apply without conflict.
    """
    if b.is_empty:
        return not b.transactions and b.signature is None
    if scheduled_leader(schedule, b.height) != b.leader:
        return False
    if b.parent_digest != parent.digest or b.height != parent.height + 1:
        return False
    if not keyring.verify(b.leader, b.digest, b.signature):
        return False
    if ledger is not None and ledger.check_transactions(b.transactions) is not None:
        return False
    return True


def validate_fork(fork: Fork, schedule: Schedule, keyring: Keyring,
                  ledger: Optional[StakeLedger] = None,
                  observed: Optional[Mapping[int, bytes]] = None) -> bool:
    """Check every block of ``fork`` from genesis.

    ``ledger`` is the genesis state, replayed on a copy.  ``observed`` maps a
    height to the digest of a signed block this node already saw there; an
    EMPTY block at such a height conflicts with what was broadcast and makes
    the fork invalid.
    """
    if not fork.is_well_formed():
        return False
    replay = ledger.copy() if ledger is not None else None
    blocks = fork.blocks
    for i in range(1, len(blocks)):
        b = blocks[i]
        if not validate_block(b, schedule, blocks[i - 1], keyring, replay):
            return False
        if b.is_empty and observed is not None and b.height in observed:
            return False
        if replay is not None:
            replay.apply_transactions(b.transactions)
    return True


def fork_choice(candidates: Iterable[Fork], schedule: Schedule, keyring: Keyring,
                ledger: Optional[StakeLedger] = None,
                observed: Optional[Mapping[int, bytes]] = None) -> Fork:
    """Longest valid fork; equal lengths go to the smallest tip digest."""
    valid = [f for f in candidates if validate_fork(f, schedule, keyring, ledger, observed)]
    if not valid:
        raise NoValidFork("every candidate fork contains an invalid block")
    return min(valid, key=lambda f: (-len(f), f.tip_digest))


def append_block(f: Fork, b: Block, ledger: Optional[StakeLedger] = None, reward: int = 0,
                 schedule: Optional[Schedule] = None,
                 keyring: Optional[Keyring] = None) -> Fork:
    """Extend ``f`` by ``b`` and update ``ledger`` in place.

    With ``schedule`` and ``keyring`` the block is validated first.  A
    non-EMPTY block credits ``reward`` to its leader.
    """
    parent = f.tip
    if b.height != parent.height + 1 or b.parent_digest != parent.digest:
        raise InvalidBlock("block does not extend the fork tip")
    if b.is_empty and (b.transactions or b.signature is not None):
        raise InvalidBlock("EMPTY block with content")
    if schedule is not None and keyring is not None:
        if not validate_block(b, schedule, parent, keyring, ledger):
            raise InvalidBlock(f"block at height {b.height} fails validation")
    if ledger is not None:
        try:
            ledger.apply_transactions(b.transactions)
        except InsufficientBalance as exc:
            raise InvalidBlock(str(exc)) from exc
        if not b.is_empty and reward:
            ledger.credit(b.leader, reward)
    return Fork(f.blocks + (b,))


def common_prefix_depth(f1: Fork, f2: Fork) -> int:
    """Trailing blocks of the shorter fork outside the longest common prefix."""
    shorter = min(len(f1), len(f2))
    p = 0
    while p < shorter and f1.blocks[p].digest == f2.blocks[p].digest:
        p += 1
    return shorter - p


def round_half_up(x: float) -> int:
    """Real game stakes to integer tokens."""
    return int(math.floor(x + 0.5))
