"""Cross-chain contract engine: the per-task session state machine.

A session drives one side of a two-system atomic task through three stages:
commit the contract transaction, commit-and-lock the target once the peer's
contract is seen, then resolve at timeout (keep the target, or commit the
reverse).  Sessions never talk to each other; everything flows through the
chain, the request channel, and the peer's view in the gossip cache.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .chain import Chain, View
from .channel import DirectRequestChannel
from .core import ContractTx, Transaction, ctx_transaction, swap_perspective


class SessionPhase(Enum):
    INIT = "init"
    CTX_COMMITTED = "ctx-committed"
    TX_COMMITTED = "tx-committed"
    AWAIT_EXPIRY = "await-expiry"
    FINALIZED = "finalized"
    ABORTED = "aborted"


class TimeoutDecision(Enum):
    NOTHING_COMMITTED = "nothing-committed"
    TARGET_STANDS = "target-stands"
    COMMIT_REVERSE = "commit-reverse"


def found(check_result: int) -> bool:
    """A check() result counts as found at any non-negative height.

    Height zero is a valid position, so strictly-positive tests would miss it.
    """
    return check_result >= 0


def derive_counterpart(ctx: ContractTx, self_id: int) -> ContractTx:
    """The contract as the counterparty must commit it (field-swapped)."""
    if ctx.peer == self_id:
        raise ValueError("counterpart derivation needs the producing side's own id")
    return swap_perspective(ctx, self_id)


@dataclass
class CbcSession:
    """One system's side of one cross-chain task."""

    self_id: int
    ctx: ContractTx
    target: Transaction
    reverse: Transaction
    poll_interval: int = 1
    phase: SessionPhase = SessionPhase.INIT
    peer_check_results: tuple[int, int] | None = None
    ctx_tx: Transaction = field(init=False)
    peer_ctx_id: bytes = field(init=False)
    # Commit positions observed on the local chain, for transcripts/audits.
    ctx_height: int | None = None
    target_height: int | None = None
    reverse_height: int | None = None

    def __post_init__(self) -> None:
        if self.ctx.local_tx != self.target.id:
            raise ValueError("contract's local target hash does not match the target")
        if self.ctx.local_reverse != self.reverse.id:
            raise ValueError("contract's local reverse hash does not match the reverse")
        self.ctx_tx = ctx_transaction(self.ctx, self.self_id)
        peer_ctx = derive_counterpart(self.ctx, self.self_id)
        self.peer_ctx_id = ctx_transaction(peer_ctx, self.ctx.peer).id

    @property
    def peer_id(self) -> int:
        return self.ctx.peer

    # -- stage 1: contract commit ---------------------------------------------

    def startable(self, chain: Chain) -> bool:
        return chain.verify(self.ctx_tx) and chain.verify(self.target)

    def mark_ctx_committed(self, height: int) -> None:
        self.phase = SessionPhase.CTX_COMMITTED
        self.ctx_height = height

    # -- stage 2: poll the peer, commit the target -----------------------------

    def may_commit_target(self, chain: Chain) -> bool:
        """Target inclusion must land strictly below the local expiry."""
        return chain.height + 1 < self.ctx.local_expiry and chain.verify(self.target)

    def on_poll_result(self, chain: Chain, peer_ctx_height: int) -> Transaction | None:
        """Apply one poll answer; returns the target if it should be committed now."""
        if self.phase is not SessionPhase.CTX_COMMITTED:
            return None
        if not found(peer_ctx_height):
            return None
        if self.may_commit_target(chain):
            return self.target
        self.phase = SessionPhase.AWAIT_EXPIRY
        return None

    def mark_target_committed(self, height: int) -> None:
        self.phase = SessionPhase.TX_COMMITTED
        self.target_height = height

    def polling_expired(self, chain: Chain) -> bool:
        return chain.height >= self.ctx.local_expiry

    # -- stage 3: timeout -------------------------------------------------------

    def local_expiry_passed(self, chain: Chain) -> bool:
        return self.ctx.local_expiry < chain.height

    def decide_timeout(self, chain: Chain, hc: int, hc2: int) -> TimeoutDecision:
        """Algorithm: drop the waiting-list entry, then keep the target only if
        the peer's target sits at a timely height and its reverse is absent."""
        self.peer_check_results = (hc, hc2)
        if self.target.id not in chain.tx_index:
            return TimeoutDecision.NOTHING_COMMITTED
        if not found(hc) or hc > self.ctx.remote_expiry or found(hc2):
            return TimeoutDecision.COMMIT_REVERSE
        return TimeoutDecision.TARGET_STANDS

    def mark_reverse_committed(self, height: int) -> None:
        self.reverse_height = height
        self.phase = SessionPhase.FINALIZED

    def mark_finalized(self) -> None:
        self.phase = SessionPhase.FINALIZED

    def outcome(self) -> str:
        if self.phase is SessionPhase.ABORTED:
            return "aborted"
        if self.reverse_height is not None:
            return "reversed"
        if self.target_height is not None:
            return "stands"
        return "nothing"


# -- synchronous wrappers -------------------------------------------------------
#
# These drive a session to completion against a live chain, one block per
# commit; the simulator replays the same transitions through its pending pool.


def start_session(session: CbcSession, chain: Chain) -> SessionPhase:
    """Verify and commit the contract transaction, or abort."""
    if session.phase is not SessionPhase.INIT:
        raise ValueError("session already started")
    if not session.startable(chain):
        session.phase = SessionPhase.ABORTED
        return session.phase
    block = chain.commit([session.ctx_tx])
    session.mark_ctx_committed(block.header.height)
    return session.phase


def poll_peer(session: CbcSession, chain: Chain, channel: DirectRequestChannel) -> SessionPhase:
    """One poll: query the peer's contract and commit the target if it is there."""
    if session.phase is not SessionPhase.CTX_COMMITTED:
        raise ValueError("poll_peer requires an uncommitted-target session")
    if session.polling_expired(chain):
        session.phase = SessionPhase.AWAIT_EXPIRY
        return session.phase
    results, _view = channel.check([session.peer_ctx_id])
    to_commit = session.on_poll_result(chain, results[0])
    if to_commit is not None:
        block = chain.commit([to_commit])
        session.mark_target_committed(block.header.height)
    return session.phase


def await_remote_expiry(session: CbcSession, peer_view: View | None) -> bool:
    """Whether the peer's cached view shows its chain past the remote expiry."""
    return peer_view is not None and peer_view.height >= session.ctx.remote_expiry


def timeout(
    session: CbcSession,
    chain: Chain,
    hc: int,
    hc2: int,
    commit_now: bool = True,
) -> TimeoutDecision:
    """Resolve the contract: unlock, then keep the target or commit the reverse.

    ``hc``/``hc2`` are the peer's check results for its target and reverse,
    taken after both expiries were reached.  With ``commit_now`` false the
    reverse commit is left to the caller (simulator pending pool).
    """
    chain.resolve_contract(session.ctx_tx.id)
    decision = session.decide_timeout(chain, hc, hc2)
    if decision is TimeoutDecision.COMMIT_REVERSE and commit_now:
        block = chain.commit([session.reverse])
        session.mark_reverse_committed(block.header.height)
    elif decision is not TimeoutDecision.COMMIT_REVERSE:
        session.mark_finalized()
    return decision
