"""Two-way peg between chains: escrow contracts and SPV proofs.

A transfer from chain A to chain B locks tokens in A's escrow contract
(``cross_lock``), builds an SPV proof of that transaction against A's
canonical fork, and submits it to B's contract, which mints
``floor(amount * rate)`` once the locking block is deep enough.

Proof depth counts the containing block itself: a transaction in the tip
block has depth 1.  The header chain runs from the checkpoint (the origin
genesis) to the origin tip, so the verifier recomputes the depth instead of
trusting it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .consensus import ChainState, confirm_depth
from .errors import (ConflictingProof, InsufficientAmount, InsufficientBalance, InvalidProof,
                     TxNotFound, UnknownOrigin)
from .ledger import (CROSS_LOCK, CROSS_MINT, BlockHeader, Keyring, Schedule, Transaction,
                     encode_field, encode_int, encode_str, merkle_path, merkle_root_from_path,
                     scheduled_leader, sha256)

PENDING = "PENDING"


@dataclass
class EscrowContract:
    """Escrow on ``home_chain``; ``rate`` is home tokens minted per locked peer token."""
    contract_id: str
    home_chain: str
    peer_chain: str
    rate: Fraction
    locked_pool: int = 0
    seen_proofs: set[bytes] = field(default_factory=set)
    peer_contract: Optional[str] = None
    peer_checkpoint: Optional[bytes] = None
    adversarial_ratio: float = 0.0
    _nonce: itertools.count = field(default_factory=itertools.count, init=False, repr=False,
                                   compare=False)

    def __post_init__(self):
        self.rate = Fraction(self.rate)
        if self.rate <= 0:
            raise ValueError("exchange rate must be positive")
        if self.locked_pool < 0:
            raise ValueError("locked pool must be non-negative")


def open_channel(a: ChainState, b: ChainState, rate: Union[Fraction, int, str]) -> tuple[EscrowContract, EscrowContract]:
    """Deploy the contract pair; ``rate`` is b-tokens per a-token."""
    rate = Fraction(rate)
    sc_a = EscrowContract(f"SC[{a.chain_id}->{b.chain_id}]", a.chain_id, b.chain_id, 1 / rate,
                          peer_checkpoint=b.fork.blocks[0].digest)
    sc_b = EscrowContract(f"SC[{b.chain_id}->{a.chain_id}]", b.chain_id, a.chain_id, rate,
                          peer_checkpoint=a.fork.blocks[0].digest)
    sc_a.peer_contract, sc_b.peer_contract = sc_b.contract_id, sc_a.contract_id
    a.contracts[sc_a.contract_id] = sc_a
    b.contracts[sc_b.contract_id] = sc_b
    return sc_a, sc_b


def lock_tokens(chain: ChainState, user: str, amount: int, contract: EscrowContract,
                tx_id: Optional[str] = None) -> Transaction:
    """Create the ``cross_lock`` moving ``amount`` of ``user`` into ``contract``."""
    if contract.home_chain != chain.chain_id:
        raise ValueError(f"{contract.contract_id} does not live on {chain.chain_id}")
    if amount <= 0:
        raise InsufficientAmount("lock amount must be positive")
    if chain.ledger.free(user) < amount:
        raise InsufficientBalance(f"{user} has {chain.ledger.free(user)} free tokens, needs {amount}")
    if tx_id is None:
        tx_id = f"{contract.contract_id}:lock:{next(contract._nonce)}:{user}"
    return Transaction(tx_id, CROSS_LOCK, user, contract.contract_id, amount)


@dataclass(frozen=True)
class SpvProof:
    origin_chain: str
    tx_id: str
    transaction: Transaction
    tx_index: int
    block_digest: bytes
    merkle_path: tuple[bytes, ...]
    header_chain: tuple[BlockHeader, ...]
    containing_index: int
    depth: int

    @property
    def proof_digest(self) -> bytes:
        """Identity of the claim: one mint per origin transaction, however often re-proved."""
        return sha256(encode_field(encode_str(self.origin_chain))
                      + encode_field(self.transaction.digest))

    def encode(self) -> bytes:
        parts = [
            encode_field(encode_str(self.origin_chain)),
            encode_field(encode_str(self.tx_id)),
            encode_field(self.transaction.encode()),
            encode_field(encode_int(self.tx_index)),
            encode_field(self.block_digest),
            encode_field(encode_int(len(self.merkle_path))),
            *(encode_field(d) for d in self.merkle_path),
            encode_field(encode_int(len(self.header_chain))),
            *(encode_field(h.encode() + encode_field(h.signature or b""))
              for h in self.header_chain),
            encode_field(encode_int(self.containing_index)),
            encode_field(encode_int(self.depth)),
        ]
        return b"".join(parts)


def build_spv_proof(origin: ChainState, tx_id: str) -> SpvProof:
    location = origin.fork.find_transaction(tx_id)
    if location is None:
        raise TxNotFound(f"{tx_id} is not on the canonical fork of {origin.chain_id}")
    height, index = location
    blocks = origin.fork.blocks
    block = blocks[height]
    leaves = [tx.digest for tx in block.transactions]
    headers = tuple(b.header for b in blocks)
    return SpvProof(origin.chain_id, tx_id, block.transactions[index], index, block.digest,
                    tuple(merkle_path(leaves, index)), headers, height, len(blocks) - height)


def check_proof(proof: SpvProof, checkpoint: Optional[bytes] = None,
                keyring: Optional[Keyring] = None,
                schedule: Optional[Schedule] = None) -> None:
    """Raise InvalidProof unless the Merkle path and header chain authenticate the transaction.

    With ``keyring`` and ``schedule`` the leader tag of every non-EMPTY
    header is checked as well.
    """
    headers = proof.header_chain
    if not headers:
        raise InvalidProof("empty header chain")
    if checkpoint is not None and headers[0].digest != checkpoint:
        raise InvalidProof("header chain does not start at the checkpoint")
    for prev, cur in zip(headers, headers[1:]):
        if cur.parent_digest != prev.digest or cur.height != prev.height + 1:
            raise InvalidProof(f"header chain broken at height {cur.height}")
    if keyring is not None and schedule is not None:
        for h in headers[1:]:
            if h.leader is None:
                continue
            if scheduled_leader(schedule, h.height) != h.leader or \
                    not keyring.verify(h.leader, h.digest, h.signature):
                raise InvalidProof(f"bad leader tag at height {h.height}")
    if not 0 <= proof.containing_index < len(headers):
        raise InvalidProof("containing block outside the header chain")
    containing = headers[proof.containing_index]
    if containing.digest != proof.block_digest:
        raise InvalidProof("block digest does not match its header")
    if proof.transaction.id != proof.tx_id:
        raise InvalidProof("transaction id mismatch")
    if not 0 <= proof.tx_index < (1 << len(proof.merkle_path)):
        raise InvalidProof("transaction index does not fit the Merkle path")
    root = merkle_root_from_path(proof.transaction.digest, proof.tx_index, proof.merkle_path)
    if root != containing.tx_root:
        raise InvalidProof("Merkle path does not reach the transaction root")
    if proof.depth != len(headers) - proof.containing_index:
        raise InvalidProof("claimed depth disagrees with the header chain")


def minted_amount(amount: int, rate: Fraction) -> int:
    return math.floor(amount * Fraction(rate))


def verify_and_mint(dest: ChainState, contract: EscrowContract, proof: SpvProof,
                    adversarial_ratio: Optional[float] = None, kappa: Optional[int] = None,
                    recipient: Optional[str] = None,
                    origin_keyring: Optional[Keyring] = None,
                    origin_schedule: Optional[Schedule] = None) -> Union[Transaction, str]:
    """Check ``proof`` on ``dest`` and return the ``cross_mint`` transaction, or PENDING.

    The required depth is ``kappa`` when given, otherwise the confirmation
    depth for ``adversarial_ratio`` (default: the contract's configured
    worst-case ratio of the origin chain).
    """
    if proof.origin_chain != contract.peer_chain:
        raise UnknownOrigin(f"{contract.contract_id} does not accept proofs from {proof.origin_chain}")
    if contract.home_chain != dest.chain_id:
        raise UnknownOrigin(f"{contract.contract_id} does not live on {dest.chain_id}")
    check_proof(proof, contract.peer_checkpoint, origin_keyring, origin_schedule)
    tx = proof.transaction
    if tx.kind != CROSS_LOCK:
        raise InvalidProof("only cross_lock transactions can be redeemed")
    if contract.peer_contract is not None and tx.receiver != contract.peer_contract:
        raise InvalidProof(f"tokens were locked in {tx.receiver}, not {contract.peer_contract}")
    digest = proof.proof_digest
    if digest in contract.seen_proofs:
        raise ConflictingProof(f"proof for {proof.tx_id} already redeemed")
    if kappa is None:
        ratio = contract.adversarial_ratio if adversarial_ratio is None else adversarial_ratio
        kappa = confirm_depth(None, ratio)
    if proof.depth < kappa:
        return PENDING
    contract.seen_proofs.add(digest)
    return Transaction(f"mint:{digest.hex()}", CROSS_MINT, contract.contract_id,
                       recipient or tx.sender, minted_amount(tx.amount, contract.rate),
                       payload=digest)
