from __future__ import annotations

import hashlib
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedchain.errors import InvalidBlock, NoValidFork
from fedchain.ledger import (CROSS_LOCK, CROSS_MINT, PAYMENT, Block, Fork, Keyring, StakeLedger,
                             Transaction, append_block, common_prefix_depth, empty_block,
                             encode_field, encode_int, encode_str, fork_choice, genesis_block,
                             make_block, merkle_path, merkle_root, merkle_root_from_path,
                             round_half_up, validate_block, validate_fork)

KEYS = Keyring(b"test")


def h(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# -- encoding and hashing -----------------------------------------------------------

def test_field_encoding_is_length_prefixed():
    assert encode_field(b"abc") == b"\x00\x00\x00\x03abc"
    assert encode_int(1) == b"\x00" * 7 + b"\x01"
    assert encode_str("é") == "é".encode("utf-8")


def test_transaction_digest_matches_hand_encoding():
    tx = Transaction("t1", PAYMENT, "a", "b", 5)
    fields = [b"t1", b"payment", b"a", b"b", struct.pack(">Q", 5), b""]
    expected = h(b"".join(struct.pack(">I", len(f)) + f for f in fields))
    assert tx.digest == expected


def test_merkle_root_small_cases():
    a, b, c = h(b"a"), h(b"b"), h(b"c")
    assert merkle_root([]) == h(b"")
    assert merkle_root([a]) == a
    assert merkle_root([a, b]) == h(a + b)
    # odd level: last node is paired with itself
    assert merkle_root([a, b, c]) == h(h(a + b) + h(c + c))


@given(st.lists(st.binary(min_size=1, max_size=8), min_size=1, max_size=40), st.data())
def test_merkle_path_round_trip(raw, data):
    leaves = [h(x) for x in raw]
    i = data.draw(st.integers(0, len(leaves) - 1))
    path = merkle_path(leaves, i)
    assert merkle_root_from_path(leaves[i], i, path) == merkle_root(leaves)


@given(st.lists(st.binary(min_size=1, max_size=8), min_size=2, max_size=20, unique=True),
       st.data())
def test_merkle_path_rejects_other_leaf(raw, data):
    leaves = [h(x) for x in raw]
    i = data.draw(st.integers(0, len(leaves) - 1))
    path = merkle_path(leaves, i)
    assert merkle_root_from_path(h(b"forged" + raw[i]), i, path) != merkle_root(leaves)


def test_transaction_validation():
    with pytest.raises(ValueError):
        Transaction("x", "bogus", "a", "b", 1)
    with pytest.raises(ValueError):
        Transaction("x", PAYMENT, "a", "b", -1)
    with pytest.raises(ValueError):
        Transaction("x", CROSS_MINT, "a", "b", 1)   # mint needs a proof reference


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.4999, 16.666)] == [1, 2, 2, 17]


# -- blocks and validity ------------------------------------------------------------

def chain_of(leaders, chain_id="c", txs_at=None):
    txs_at = txs_at or {}
    blocks = [genesis_block(chain_id)]
    for i, leader in enumerate(leaders, start=1):
        if leader is None:
            blocks.append(empty_block(blocks[-1], 0))
        else:
            blocks.append(make_block(blocks[-1], 0, leader, txs_at.get(i, ()), KEYS))
    return Fork(tuple(blocks))


SCHEDULE = {1: "a", 2: "b", 3: "a", 4: "c", 5: "b"}


def test_genesis_differs_per_chain():
    assert genesis_block("x").digest != genesis_block("y").digest


def test_signed_block_is_valid_for_scheduled_leader():
    f = chain_of(["a", "b"])
    assert validate_fork(f, SCHEDULE, KEYS)
    b2 = f.blocks[2]
    assert validate_block(b2, SCHEDULE, f.blocks[1], KEYS)


def test_block_from_wrong_leader_is_invalid():
    f = chain_of(["b"])
    assert not validate_fork(f, SCHEDULE, KEYS)


def test_forged_signature_is_invalid():
    f = chain_of(["a"])
    b = f.blocks[1]
    forged = Block(b.height, b.epoch, b.leader, b.parent_digest, b.transactions, b"\x00" * 32)
    assert not validate_block(forged, SCHEDULE, f.blocks[0], KEYS)
    other_keys = Keyring(b"someone else")
    assert not validate_block(b, SCHEDULE, f.blocks[0], other_keys)


def test_empty_block_always_valid_and_carries_nothing():
    f = chain_of([None, None, "a"], txs_at={})
    assert validate_fork(Fork(f.blocks[:3]), SCHEDULE, KEYS)
    e = f.blocks[1]
    assert e.is_empty and e.transactions == () and e.signature is None
    stuffed = Block(e.height, e.epoch, None, e.parent_digest, (Transaction("t", PAYMENT, "a", "b", 1),))
    assert not validate_block(stuffed, SCHEDULE, f.blocks[0], KEYS)


def test_empty_block_conflicting_with_observed_block_is_invalid():
    signed = chain_of(["a", "b"])
    hollow = chain_of(["a", None])
    observed = {2: signed.blocks[2].digest}
    assert validate_fork(hollow, SCHEDULE, KEYS)
    assert not validate_fork(hollow, SCHEDULE, KEYS, observed=observed)


def test_block_with_overspend_is_invalid_against_ledger():
    ledger = StakeLedger.from_balances({"a": 5, "b": 5})
    bad = chain_of(["a"], txs_at={1: (Transaction("t", PAYMENT, "a", "b", 6),)})
    good = chain_of(["a"], txs_at={1: (Transaction("t", PAYMENT, "a", "b", 5),)})
    assert not validate_fork(bad, SCHEDULE, KEYS, ledger)
    assert validate_fork(good, SCHEDULE, KEYS, ledger)
    assert ledger.balance("a") == 5  # validation replays on a copy


def test_fork_choice_prefers_longest_then_smallest_digest():
    short = chain_of(["a", "b"])
    long_ = chain_of(["a", "b", "a"])
    assert fork_choice([short, long_], SCHEDULE, KEYS) is long_
    x = chain_of(["a", "b", "a"], txs_at={3: (Transaction("x", PAYMENT, "a", "a", 0),)})
    y = chain_of(["a", "b", "a"], txs_at={3: (Transaction("y", PAYMENT, "a", "a", 0),)})
    winner = fork_choice([x, y], SCHEDULE, KEYS)
    assert winner.tip_digest == min(x.tip_digest, y.tip_digest)
    assert fork_choice([y, x], SCHEDULE, KEYS) is winner


def test_fork_choice_skips_invalid_and_raises_when_none_valid():
    valid = chain_of(["a", "b"])
    invalid_longer = chain_of(["a", "c", "a"])
    assert fork_choice([valid, invalid_longer], SCHEDULE, KEYS) is valid
    with pytest.raises(NoValidFork):
        fork_choice([invalid_longer], SCHEDULE, KEYS)


def test_append_block_updates_ledger_and_pays_reward():
    ledger = StakeLedger.from_balances({"a": 10, "b": 0})
    f = Fork.genesis("c")
    tx = Transaction("t", PAYMENT, "a", "b", 4)
    f = append_block(f, make_block(f.tip, 0, "a", (tx,), KEYS), ledger, reward=3,
                     schedule=SCHEDULE, keyring=KEYS)
    assert ledger.balances == {"a": 9, "b": 4} and ledger.total == 13
    f = append_block(f, empty_block(f.tip, 0), ledger, reward=3)
    assert ledger.total == 13  # no reward for EMPTY blocks
    with pytest.raises(InvalidBlock):
        append_block(f, make_block(f.tip, 0, "c", (), KEYS), ledger, schedule=SCHEDULE, keyring=KEYS)
    with pytest.raises(InvalidBlock):
        append_block(f, make_block(f.blocks[0], 0, "a", (), KEYS), ledger)


def test_common_prefix_depth():
    a = chain_of(["a", "b", "a"])
    b = chain_of(["a", None, None])
    assert common_prefix_depth(a, a) == 0
    assert common_prefix_depth(a, b) == 2
    assert common_prefix_depth(a, Fork(a.blocks[:2])) == 0


def test_find_transaction():
    tx = Transaction("t", PAYMENT, "a", "b", 1)
    f = chain_of(["a", "b"], txs_at={2: (Transaction("u", PAYMENT, "b", "a", 0), tx)})
    assert f.find_transaction("t") == (2, 1)
    assert f.find_transaction("missing") is None


# -- ledger accounting --------------------------------------------------------------

def test_duplicate_transaction_ids_rejected():
    ledger = StakeLedger.from_balances({"a": 10})
    tx = Transaction("t", PAYMENT, "a", "b", 1)
    assert ledger.check_transactions([tx, tx]) is not None
    ledger.apply_transactions([tx])
    assert ledger.check_transactions([tx]) is not None


def test_locked_stake_cannot_be_spent():
    ledger = StakeLedger.from_balances({"a": 10})
    assert ledger.lock("a", 8) == 8
    assert ledger.check_transactions([Transaction("t", PAYMENT, "a", "b", 3)]) is not None
    assert ledger.check_transactions([Transaction("t", PAYMENT, "a", "b", 2)]) is None
    assert ledger.lock("a", 100) == 10   # capped at the balance
    ledger.unlock_all()
    assert ledger.free("a") == 10


def test_zero_lock_rejected():
    ledger = StakeLedger.from_balances({"a": 10})
    assert ledger.check_transactions([Transaction("t", CROSS_LOCK, "a", "SC", 0)]) is not None


ops = st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.sampled_from(["a", "b", "c", "d"]),
                         st.integers(0, 30), st.booleans()), max_size=25)


@given(ops)
def test_total_plus_escrow_is_conserved(items):
    ledger = StakeLedger.from_balances({"a": 20, "b": 20, "c": 20})
    start = ledger.total
    for i, (sender, receiver, amount, is_lock) in enumerate(items):
        if is_lock:
            tx = Transaction(f"t{i}", CROSS_LOCK, sender, "SC", amount)
        else:
            tx = Transaction(f"t{i}", PAYMENT, sender, receiver, amount)
        if ledger.check_transactions([tx]) is None:
            ledger.apply_transactions([tx])
        assert ledger.total + ledger.escrowed == start
        assert ledger.total == sum(ledger.balances.values())
        assert all(v >= 0 for v in ledger.balances.values())


def test_copy_is_independent():
    ledger = StakeLedger.from_balances({"a": 5})
    other = ledger.copy()
    other.credit("a", 1)
    other.lock("a", 1)
    assert ledger.balance("a") == 5 and ledger.free("a") == 5
