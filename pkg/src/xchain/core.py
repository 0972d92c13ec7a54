"""Shared domain types: digests, transactions, contract encoding, headers, blocks.

Wire layouts (all integers big-endian, fixed width):

* transaction id preimage: kind(u8) || payload_len(u32) || payload ||
  n_preconditions(u16) || each precondition digest (32 bytes) || origin(u16)
* contract transaction:    target(32) || reverse(32) || local_expiry(u64) ||
  peer(u16) || remote_target(32) || remote_reverse(32) || remote_expiry(u64)
* block header:            height(u64) || prev_hash(32) || body_digest(32) ||
  n_sigs(u16) || each signer id (u16), sorted ascending
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

DIGEST_SIZE = 32
ZERO_DIGEST = b"\x00" * DIGEST_SIZE

HEIGHT_WIDTH = 8
SYSTEM_ID_WIDTH = 2

CTX_WIRE_SIZE = 4 * DIGEST_SIZE + 2 * HEIGHT_WIDTH + SYSTEM_ID_WIDTH


def hash_bytes(data: bytes) -> bytes:
    """256-bit content digest; same input gives the same digest on any platform."""
    return hashlib.sha256(data).digest()


def encode_height(height: int) -> bytes:
    return height.to_bytes(HEIGHT_WIDTH, "big")


def encode_system_id(system_id: int) -> bytes:
    return system_id.to_bytes(SYSTEM_ID_WIDTH, "big")


class TxKind(Enum):
    LOCAL = 0
    CONTRACT = 1
    TARGET = 2
    REVERSE = 3


def tx_id(kind: TxKind, payload: bytes, preconditions: tuple[bytes, ...], origin: int) -> bytes:
    parts = [
        bytes([kind.value]),
        len(payload).to_bytes(4, "big"),
        payload,
        len(preconditions).to_bytes(2, "big"),
    ]
    parts.extend(preconditions)
    parts.append(encode_system_id(origin))
    return hash_bytes(b"".join(parts))


@dataclass(frozen=True)
class Transaction:
    """Content-addressed transaction; ``id`` is derived, never assigned."""

    id: bytes
    kind: TxKind
    payload: bytes
    preconditions: tuple[bytes, ...]
    origin: int

    @staticmethod
    def create(
        kind: TxKind,
        payload: bytes,
        preconditions: Iterable[bytes] = (),
        origin: int = 0,
    ) -> "Transaction":
        pres = tuple(preconditions)
        if kind is TxKind.REVERSE and len(pres) != 1:
            raise ValueError("a reverse transaction depends on exactly its target")
        for p in pres:
            if len(p) != DIGEST_SIZE:
                raise ValueError("precondition must be a 32-byte digest")
        return Transaction(tx_id(kind, payload, pres, origin), kind, payload, pres, origin)


def make_reverse(target: Transaction, payload: bytes, origin: int) -> Transaction:
    return Transaction.create(TxKind.REVERSE, payload, (target.id,), origin)


@dataclass(frozen=True)
class ContractTx:
    """Seven-field cross-chain contract: what to commit where, and by when.

    ``local_*`` fields describe the producing system's side, ``remote_*`` the
    counterparty's.  Expiries are block heights in the respective chains.
    """

    local_tx: bytes
    local_reverse: bytes
    local_expiry: int
    peer: int
    remote_tx: bytes
    remote_reverse: bytes
    remote_expiry: int


def encode_ctx(ctx: ContractTx) -> bytes:
    return b"".join(
        (
            ctx.local_tx,
            ctx.local_reverse,
            encode_height(ctx.local_expiry),
            encode_system_id(ctx.peer),
            ctx.remote_tx,
            ctx.remote_reverse,
            encode_height(ctx.remote_expiry),
        )
    )


def decode_ctx(data: bytes) -> ContractTx:
    if len(data) != CTX_WIRE_SIZE:
        raise ValueError(f"contract encoding must be {CTX_WIRE_SIZE} bytes, got {len(data)}")
    o = 0
    local_tx = data[o : o + DIGEST_SIZE]
    o += DIGEST_SIZE
    local_reverse = data[o : o + DIGEST_SIZE]
    o += DIGEST_SIZE
    local_expiry = int.from_bytes(data[o : o + HEIGHT_WIDTH], "big")
    o += HEIGHT_WIDTH
    peer = int.from_bytes(data[o : o + SYSTEM_ID_WIDTH], "big")
    o += SYSTEM_ID_WIDTH
    remote_tx = data[o : o + DIGEST_SIZE]
    o += DIGEST_SIZE
    remote_reverse = data[o : o + DIGEST_SIZE]
    o += DIGEST_SIZE
    remote_expiry = int.from_bytes(data[o : o + HEIGHT_WIDTH], "big")
    return ContractTx(local_tx, local_reverse, local_expiry, peer, remote_tx, remote_reverse, remote_expiry)


def swap_perspective(ctx: ContractTx, producer: int) -> ContractTx:
    """The same contract as seen from the counterparty's side.

    ``producer`` is the system that holds ``ctx`` as its local view; it becomes
    the ``peer`` of the swapped contract.
    """
    return ContractTx(
        local_tx=ctx.remote_tx,
        local_reverse=ctx.remote_reverse,
        local_expiry=ctx.remote_expiry,
        peer=producer,
        remote_tx=ctx.local_tx,
        remote_reverse=ctx.local_reverse,
        remote_expiry=ctx.local_expiry,
    )


def ctx_transaction(ctx: ContractTx, origin: int) -> Transaction:
    """Wrap a contract in the transaction that carries it on ``origin``'s chain."""
    return Transaction.create(TxKind.CONTRACT, encode_ctx(ctx), (), origin)


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    body_digest: bytes
    creator_sigs: frozenset[int]


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    body: tuple[Transaction, ...]


def body_digest(txs: Iterable[Transaction]) -> bytes:
    return hash_bytes(b"".join(tx.id for tx in txs))


def encode_header(header: BlockHeader) -> bytes:
    parts = [
        encode_height(header.height),
        header.prev_hash,
        header.body_digest,
        len(header.creator_sigs).to_bytes(2, "big"),
    ]
    parts.extend(encode_system_id(sig) for sig in sorted(header.creator_sigs))
    return b"".join(parts)


def header_hash(header: BlockHeader) -> bytes:
    return hash_bytes(encode_header(header))
