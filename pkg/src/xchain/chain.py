"""Per-system ledger: block production, finality, verify/check queries, locks, views.

A system is one logical actor here; its ``node_count``/``quorum``/``finality_depth``
parameters only shape proofs and the finalized prefix, consensus among the
system's own nodes is not simulated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    ZERO_DIGEST,
    Block,
    BlockHeader,
    ContractTx,
    Transaction,
    TxKind,
    body_digest,
    decode_ctx,
    hash_bytes,
    header_hash,
)


class ChainError(Exception):
    pass


class EmptyChainError(ChainError):
    """Raised when a view is requested before any block is finalized."""


class InvalidTxError(ChainError):
    """A block was submitted containing a transaction that fails verify()."""


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one blockchain system."""

    system_id: int
    node_count: int = 10
    quorum: int = 7
    finality_depth: int = 0
    adversary_fraction: float = 0.0
    view_depth: int = 5

    def __post_init__(self) -> None:
        if self.system_id < 0:
            raise ValueError("system_id must be non-negative")
        if not 1 <= self.quorum <= self.node_count:
            raise ValueError("quorum must satisfy 1 <= quorum <= node_count")
        if self.finality_depth < 0:
            raise ValueError("finality_depth must be >= 0")
        if not 0.0 <= self.adversary_fraction <= 1.0:
            raise ValueError("adversary_fraction must lie in [0, 1]")
        if self.view_depth < 1:
            raise ValueError("view_depth must be >= 1")


@dataclass(frozen=True)
class View:
    """Compact finality summary: rolling digest, last-k header hashes, quorum proof.

    ``aggregate`` folds header hashes of heights [0, covered - len(recent));
    ``recent`` holds the header hashes just below ``height``; ``height`` is the
    newest finalized height covered.
    """

    aggregate: bytes
    recent: tuple[bytes, ...]
    proof: frozenset[int]
    height: int


def fold_aggregate(seed: bytes, hashes) -> bytes:
    acc = seed
    for h in hashes:
        acc = hash_bytes(acc + h)
    return acc


class Chain:
    """Hash-linked ledger plus the waiting-list / lock bookkeeping contracts need.

    ``waiting`` maps a committed contract transaction's id to its decoded
    contract until a timeout removes it; while a contract waits, its committed
    target's id sits in ``locked`` and blocks every dependent transaction.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        genesis_header = BlockHeader(0, ZERO_DIGEST, body_digest(()), frozenset(range(config.quorum)))
        self.blocks: list[Block] = [Block(genesis_header, ())]
        self.header_hashes: list[bytes] = [header_hash(genesis_header)]
        self.tx_index: dict[bytes, int] = {}
        self.waiting: dict[bytes, ContractTx] = {}
        self.locked: set[bytes] = set()
        # _agg_prefix[i] folds header hashes of heights [0, i); extended lazily.
        self._agg_prefix: list[bytes] = [ZERO_DIGEST]

    @property
    def height(self) -> int:
        return len(self.blocks) - 1

    @property
    def finalized_length(self) -> int:
        """Number of blocks with more than ``finality_depth`` successors."""
        return max(0, len(self.blocks) - 1 - self.config.finality_depth)

    # -- queries -------------------------------------------------------------

    def verify(self, tx: Transaction) -> bool:
        """Whether ``tx`` could be included in the next block.

        True iff the tx is not already committed, every precondition is
        committed and unlocked, and (for contract transactions) the local
        expiry still exceeds the current height.  Preconditions of a contract's
        underlying target are the session's job to check; only the target's
        absence and the expiry are visible from the contract alone.
        """
        if tx.id in self.tx_index:
            return False
        for pre in tx.preconditions:
            if pre not in self.tx_index:
                return False
            if pre in self.locked:
                return False
        if tx.kind is TxKind.CONTRACT:
            try:
                ctx = decode_ctx(tx.payload)
            except ValueError:
                return False
            if ctx.local_expiry <= self.height:
                return False
            if ctx.local_tx in self.tx_index:
                return False
        return True

    def check(self, digest: bytes) -> int:
        """Finalized height of the transaction with this id, or -1.

        Only the finalized prefix is visible: a committed-but-shallow
        transaction answers -1 until it is buried deep enough.
        """
        height = self.tx_index.get(digest)
        if height is None or height >= self.finalized_length:
            return -1
        return height

    # -- mutation ------------------------------------------------------------

    def commit(self, txs: list[Transaction]) -> Block:
        """Append one block containing ``txs``; the whole block is rejected if
        any transaction fails verify() against the pre-block state.

        Transactions inside one block must not depend on each other.
        """
        for tx in txs:
            if not self.verify(tx):
                raise InvalidTxError(f"transaction {tx.id.hex()[:16]} fails verify()")
        new_height = len(self.blocks)
        header = BlockHeader(
            height=new_height,
            prev_hash=self.header_hashes[-1],
            body_digest=body_digest(txs),
            creator_sigs=frozenset(range(self.config.quorum)),
        )
        block = Block(header, tuple(txs))
        self.blocks.append(block)
        self.header_hashes.append(header_hash(header))
        for tx in txs:
            self.tx_index[tx.id] = new_height
            if tx.kind is TxKind.CONTRACT:
                self.waiting[tx.id] = decode_ctx(tx.payload)
            elif tx.kind is TxKind.TARGET:
                for ctx in self.waiting.values():
                    if ctx.local_tx == tx.id:
                        self.locked.add(tx.id)
                        break
        return block

    def expire_and_unlock(self, current_height: int) -> list[ContractTx]:
        """Contracts whose local expiry has passed, ready for timeout handling.

        Reports only; removal (and the actual unlock) happens when the session
        resolves the contract.
        """
        return [ctx for ctx in self.waiting.values() if ctx.local_expiry < current_height]

    def resolve_contract(self, ctx_txid: bytes) -> None:
        """Remove a contract from the waiting list and release its lock."""
        self.waiting.pop(ctx_txid, None)
        self.locked = {
            ctx.local_tx for ctx in self.waiting.values() if ctx.local_tx in self.tx_index
        }

    # -- views ---------------------------------------------------------------

    def _aggregate_to(self, length: int) -> bytes:
        while len(self._agg_prefix) <= length:
            i = len(self._agg_prefix) - 1
            self._agg_prefix.append(hash_bytes(self._agg_prefix[-1] + self.header_hashes[i]))
        return self._agg_prefix[length]

    def generate_view(self, view_depth: int | None = None) -> View:
        """Current view: rolling aggregate, last-k finalized header hashes, proof."""
        k = self.config.view_depth if view_depth is None else view_depth
        m = self.finalized_length
        if m < 1:
            raise EmptyChainError("no finalized block to summarize")
        window = min(k, m)
        return View(
            aggregate=self._aggregate_to(m - window),
            recent=tuple(self.header_hashes[m - window : m]),
            proof=frozenset(range(self.config.quorum)),
            height=m - 1,
        )

    def finalized_hashes(self, start: int, stop: int) -> tuple[bytes, ...]:
        """Header hashes for finalized heights [start, stop)."""
        stop = min(stop, self.finalized_length)
        start = max(start, 0)
        return tuple(self.header_hashes[start:stop])

    # -- debugging -----------------------------------------------------------

    def clone(self, up_to_height: int | None = None) -> "Chain":
        """Independent copy, optionally truncated to ``up_to_height`` inclusive."""
        other = Chain.__new__(Chain)
        other.config = self.config
        end = len(self.blocks) if up_to_height is None else up_to_height + 1
        other.blocks = self.blocks[:end]
        other.header_hashes = self.header_hashes[:end]
        other.tx_index = {d: h for d, h in self.tx_index.items() if h < end}
        other.waiting = {
            txid: ctx for txid, ctx in self.waiting.items() if self.tx_index.get(txid, end) < end
        }
        other.locked = {
            ctx.local_tx for ctx in other.waiting.values() if ctx.local_tx in other.tx_index
        }
        other._agg_prefix = self._agg_prefix[: end + 1]
        return other

    def debug_dump(self) -> dict:
        return {
            "system_id": self.config.system_id,
            "height": self.height,
            "finalized_length": self.finalized_length,
            "tx_heights": {d.hex(): h for d, h in sorted(self.tx_index.items())},
            "waiting": sorted(d.hex() for d in self.waiting),
            "locked": sorted(d.hex() for d in self.locked),
        }
