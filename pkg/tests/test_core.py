"""Hashing, transaction ids, and the contract-transaction wire format."""

import hashlib
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from xchain.core import (
    CTX_WIRE_SIZE,
    ZERO_DIGEST,
    BlockHeader,
    ContractTx,
    Transaction,
    TxKind,
    body_digest,
    ctx_transaction,
    decode_ctx,
    encode_ctx,
    encode_header,
    hash_bytes,
    header_hash,
    make_reverse,
    swap_perspective,
)

# SHA-256 of the empty string, fixed by the hash choice.
SHA256_EMPTY = bytes.fromhex("e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855")


def random_ctx(rng: random.Random) -> ContractTx:
    return ContractTx(
        local_tx=rng.randbytes(32),
        local_reverse=rng.randbytes(32),
        local_expiry=rng.randrange(1, 2**40),
        peer=rng.randrange(0, 2**16),
        remote_tx=rng.randbytes(32),
        remote_reverse=rng.randbytes(32),
        remote_expiry=rng.randrange(1, 2**40),
    )


def test_hash_empty_is_sha256_empty():
    assert hash_bytes(b"") == SHA256_EMPTY


def test_hash_deterministic():
    rng = random.Random(1)
    for _ in range(100):
        data = rng.randbytes(rng.randrange(0, 64))
        assert hash_bytes(data) == hash_bytes(data)
        assert len(hash_bytes(data)) == 32


def test_hash_collision_scan():
    # Brute-force scan: distinct inputs never collide at desk scale.
    rng = random.Random(2)
    seen = {}
    for i in range(10_000):
        data = i.to_bytes(4, "big") + rng.randbytes(8)
        digest = hash_bytes(data)
        assert digest not in seen
        seen[digest] = data


def test_ctx_roundtrip():
    rng = random.Random(3)
    for _ in range(100):
        ctx = random_ctx(rng)
        encoded = encode_ctx(ctx)
        assert len(encoded) == CTX_WIRE_SIZE
        assert decode_ctx(encoded) == ctx


def test_ctx_expiry_changes_encoding():
    rng = random.Random(4)
    ctx = random_ctx(rng)
    bumped = ContractTx(
        ctx.local_tx,
        ctx.local_reverse,
        ctx.local_expiry + 1,
        ctx.peer,
        ctx.remote_tx,
        ctx.remote_reverse,
        ctx.remote_expiry,
    )
    assert encode_ctx(ctx) != encode_ctx(bumped)


def test_swap_perspective_matches_field_order():
    # The counterparty encoding is the same seven fields with the two sides
    # exchanged and the producer taking the peer slot.
    rng = random.Random(5)
    producer = 9
    ctx = random_ctx(rng)
    swapped = swap_perspective(ctx, producer)
    expected = (
        ctx.remote_tx
        + ctx.remote_reverse
        + ctx.remote_expiry.to_bytes(8, "big")
        + producer.to_bytes(2, "big")
        + ctx.local_tx
        + ctx.local_reverse
        + ctx.local_expiry.to_bytes(8, "big")
    )
    assert encode_ctx(swapped) == expected


digests = st.binary(min_size=32, max_size=32)
heights = st.integers(min_value=0, max_value=2**63 - 1)
system_ids = st.integers(min_value=0, max_value=2**16 - 1)
ctx_strategy = st.builds(ContractTx, digests, digests, heights, system_ids, digests, digests, heights)


@given(ctx_strategy, ctx_strategy)
def test_encoding_injective(a, b):
    if a != b:
        assert encode_ctx(a) != encode_ctx(b)
    else:
        assert encode_ctx(a) == encode_ctx(b)


def test_decode_rejects_bad_length():
    with pytest.raises(ValueError):
        decode_ctx(b"\x00" * (CTX_WIRE_SIZE - 1))


def test_transaction_id_covers_all_fields():
    base = Transaction.create(TxKind.LOCAL, b"pay", (), origin=1)
    assert base.id == Transaction.create(TxKind.LOCAL, b"pay", (), origin=1).id
    assert base.id != Transaction.create(TxKind.TARGET, b"pay", (), origin=1).id
    assert base.id != Transaction.create(TxKind.LOCAL, b"pay!", (), origin=1).id
    assert base.id != Transaction.create(TxKind.LOCAL, b"pay", (), origin=2).id
    assert base.id != Transaction.create(TxKind.LOCAL, b"pay", (base.id,), origin=1).id


def test_reverse_requires_single_precondition():
    target = Transaction.create(TxKind.TARGET, b"t", (), origin=0)
    reverse = make_reverse(target, b"undo", origin=0)
    assert reverse.preconditions == (target.id,)
    with pytest.raises(ValueError):
        Transaction.create(TxKind.REVERSE, b"undo", (), origin=0)


def test_ctx_transaction_is_content_addressed():
    rng = random.Random(6)
    ctx = random_ctx(rng)
    wrapped = ctx_transaction(ctx, origin=2)
    assert wrapped.kind is TxKind.CONTRACT
    assert decode_ctx(wrapped.payload) == ctx
    assert wrapped.id == ctx_transaction(ctx, origin=2).id
    assert wrapped.id != ctx_transaction(ctx, origin=3).id


def test_header_hash_depends_on_every_field():
    header = BlockHeader(3, ZERO_DIGEST, hash_bytes(b"body"), frozenset({0, 1, 2}))
    same = BlockHeader(3, ZERO_DIGEST, hash_bytes(b"body"), frozenset({2, 1, 0}))
    assert header_hash(header) == header_hash(same)  # signer order is canonical
    different = BlockHeader(4, ZERO_DIGEST, hash_bytes(b"body"), frozenset({0, 1, 2}))
    assert header_hash(header) != header_hash(different)
    assert header_hash(header) == hashlib.sha256(encode_header(header)).digest()


def test_body_digest_is_concatenated_ids():
    txs = [Transaction.create(TxKind.LOCAL, bytes([i]), (), 0) for i in range(3)]
    assert body_digest(txs) == hash_bytes(b"".join(t.id for t in txs))
    assert body_digest(()) == SHA256_EMPTY
