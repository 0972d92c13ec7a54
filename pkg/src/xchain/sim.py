"""Deterministic seeded discrete-event simulator for the cross-chain network.

One tick is one block interval: every system appends a block each tick, tasks
arrive network-wide per tick with a geometric draw, and all traffic (check
requests, task proposals, gossip pushes/pulls, evidence floods) moves through
one latency-jittered message heap.  Identical seeds give byte-identical
transcripts and metrics.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .adversary import AdversarySpec, AdvKind, AdvStrategy
from .chain import Chain, SystemConfig, View
from .contract import (
    CbcSession,
    SessionPhase,
    TimeoutDecision,
    await_remote_expiry,
    derive_counterpart,
)
from .core import ContractTx, Transaction, TxKind, make_reverse
from .gossip import (
    ConflictEvidence,
    GossipState,
    ViewList,
    apply_pull_response,
    merge,
    push_round,
    register_evidence,
)


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


def derive_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def draw_task_count(task_rate: float, rng: random.Random) -> int:
    """Geometric draw on {0, 1, 2, ...} with mean task_rate / (1 - task_rate)."""
    if not 0.0 <= task_rate < 1.0:
        raise ConfigError("task_rate must lie in [0, 1)")
    count = 0
    while rng.random() < task_rate:
        count += 1
    return count


@dataclass
class SimConfig:
    """Scenario parameters; scenario names follow the n_pc_g convention."""

    name: str = "scenario"
    num_systems: int = 3
    task_rate: float = 0.1
    gossip_rate: float = 0.1
    num_blocks: int = 1000
    block_interval: int = 1
    seed: int = 42
    topology: str | dict[int, list[int]] = "full"
    system_template: SystemConfig | None = None
    systems: list[SystemConfig] | None = None
    adversary: AdversarySpec = field(default_factory=AdversarySpec)
    expiry_factor: float = 2.0
    expiry_jitter: int = 0
    poll_interval: int = 1
    push_timer_blocks: int = 10
    relay_min_blocks: int = 1
    latency_base: int = 1
    latency_jitter: int = 1
    task_cutoff_margin: int = 60
    drain_cap: int = 5000
    record_gap_samples: bool = False
    record_messages: bool = False
    attack_script: dict | None = None

    def resolved_systems(self) -> list[SystemConfig]:
        if self.systems is not None:
            if len(self.systems) != self.num_systems:
                raise ConfigError("systems list must match num_systems")
            return self.systems
        template = self.system_template or SystemConfig(system_id=0)
        return [
            SystemConfig(
                system_id=i,
                node_count=template.node_count,
                quorum=template.quorum,
                finality_depth=template.finality_depth,
                adversary_fraction=template.adversary_fraction,
                view_depth=template.view_depth,
            )
            for i in range(self.num_systems)
        ]

    def validate(self) -> None:
        if self.num_systems < 2:
            raise ConfigError("need at least two systems")
        if not 0.0 <= self.task_rate < 1.0:
            raise ConfigError("task_rate must lie in [0, 1)")
        if not 0.0 <= self.gossip_rate <= 1.0:
            raise ConfigError("gossip_rate must lie in [0, 1]")
        if self.num_blocks < 1 or self.block_interval < 1:
            raise ConfigError("num_blocks and block_interval must be >= 1")
        if self.poll_interval < 1 or self.push_timer_blocks < 1:
            raise ConfigError("poll_interval and push_timer_blocks must be >= 1")
        if self.latency_base < 0 or self.latency_jitter < 0:
            raise ConfigError("latencies must be non-negative")
        adjacency = self.adjacency()
        if self.adversary.kind is AdvKind.NONE and not _connected(adjacency):
            raise ConfigError("gossip topology must be strongly connected for honest runs")

    def adjacency(self) -> dict[int, set[int]]:
        n = self.num_systems
        if self.topology == "full":
            return {i: {j for j in range(n) if j != i} for i in range(n)}
        if isinstance(self.topology, dict):
            adj = {int(k): {int(x) for x in v} for k, v in self.topology.items()}
            for i in range(n):
                adj.setdefault(i, set())
            # gossip channels are bidirectional
            for i, peers in list(adj.items()):
                for j in peers:
                    adj.setdefault(j, set()).add(i)
            return adj
        raise ConfigError("topology must be 'full' or an adjacency mapping")


def _connected(adjacency: Mapping[int, set[int]]) -> bool:
    nodes = sorted(adjacency)
    if not nodes:
        return False
    seen = {nodes[0]}
    frontier = [nodes[0]]
    while frontier:
        cur = frontier.pop()
        for nxt in adjacency[cur]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == len(nodes)


# -- messages ---------------------------------------------------------------------


@dataclass(frozen=True)
class CheckReq:
    src: int
    dst: int
    hashes: tuple[bytes, ...]
    purpose: str  # "poll" | "timeout"
    session_key: tuple
    view_entries: dict[int, View]


@dataclass(frozen=True)
class CheckResp:
    src: int
    dst: int
    hashes: tuple[bytes, ...]
    results: tuple[int, ...]
    purpose: str
    session_key: tuple
    view_entries: dict[int, View]


@dataclass(frozen=True)
class TaskProposal:
    src: int
    dst: int
    task_id: int
    ctx: ContractTx
    target: Transaction
    reverse: Transaction


@dataclass(frozen=True)
class PushMsg:
    src: int
    dst: int
    view_entries: dict[int, View]


@dataclass(frozen=True)
class PullReq:
    src: int
    dst: int
    about: int
    have_height: int
    have_start: int


@dataclass(frozen=True)
class SyncReq:
    """Pull half of the push/pull mix: fetch a peer's whole view list."""

    src: int
    dst: int


@dataclass(frozen=True)
class PullResp:
    src: int
    dst: int
    about: int
    view: View
    hashes: tuple[bytes, ...]
    hashes_start: int


@dataclass(frozen=True)
class EvidenceMsg:
    src: int
    dst: int
    evidence: ConflictEvidence


# -- metrics ----------------------------------------------------------------------


@dataclass
class Metrics:
    requests_sent: dict[int, int] = field(default_factory=dict)
    gossips_sent: dict[int, int] = field(default_factory=dict)
    tasks_started: int = 0
    tasks_succeeded: int = 0
    tasks_reversed: int = 0
    tasks_aborted: int = 0
    conflicts_detected: int = 0
    gap_hist: dict[int, int] = field(default_factory=dict)
    gap_count: int = 0
    gap_sum: int = 0
    gap_sumsq: int = 0
    gap_samples: list[tuple[int, int, int, int]] = field(default_factory=list)
    misc: dict[str, int] = field(default_factory=dict)

    def bump(self, counter: str, amount: int = 1) -> None:
        self.misc[counter] = self.misc.get(counter, 0) + amount

    def record_gap(self, tick: int, observer: int, observed: int, gap: int, keep: bool) -> None:
        self.gap_hist[gap] = self.gap_hist.get(gap, 0) + 1
        self.gap_count += 1
        self.gap_sum += gap
        self.gap_sumsq += gap * gap
        if keep:
            self.gap_samples.append((tick, observer, observed, gap))

    @property
    def requests_total(self) -> int:
        return sum(self.requests_sent.values())

    @property
    def gossips_total(self) -> int:
        return sum(self.gossips_sent.values())

    def mean_gap(self) -> float:
        return self.gap_sum / self.gap_count if self.gap_count else 0.0

    def var_gap(self) -> float:
        if not self.gap_count:
            return 0.0
        mean = self.mean_gap()
        return self.gap_sumsq / self.gap_count - mean * mean

    def percentile_gap(self, q: float) -> int:
        if not self.gap_count:
            return 0
        threshold = q * self.gap_count
        running = 0
        for gap in sorted(self.gap_hist):
            running += self.gap_hist[gap]
            if running >= threshold:
                return gap
        return max(self.gap_hist)

    def to_row(self, config: SimConfig) -> dict:
        return {
            "name": config.name,
            "n": config.num_systems,
            "p_c": config.task_rate,
            "g": config.gossip_rate,
            "requests": self.requests_total,
            "gossips": self.gossips_total,
            "tasks": self.tasks_started,
            "mean_gap": self.mean_gap(),
            "p99_gap": self.percentile_gap(0.99),
        }


def sample_gap(
    view_lists: Mapping[int, ViewList],
    true_heights: Mapping[int, int],
    tick: int,
) -> list[tuple[int, int, int, int]]:
    """Gap records (tick, observer, observed, gap) for every cached pair."""
    records = []
    for observer in sorted(view_lists):
        entries = view_lists[observer].entries
        for observed in sorted(true_heights):
            if observed == observer or observed not in entries:
                continue
            gap = true_heights[observed] - entries[observed].height
            records.append((tick, observer, observed, gap))
    return records


# -- per-task bookkeeping -----------------------------------------------------------


@dataclass
class SimSession:
    session: CbcSession
    task_id: int
    role: str  # "initiator" | "peer"
    next_poll: int = 0
    outstanding: str | None = None
    target_submitted: bool = False
    reverse_submitted: bool = False
    timeout_done: bool = False

    @property
    def done(self) -> bool:
        return self.session.phase in (SessionPhase.FINALIZED, SessionPhase.ABORTED)


@dataclass
class TaskRecord:
    task_id: int
    initiator: int
    peer: int
    started_tick: int
    outcomes: dict[int, str] = field(default_factory=dict)
    commits: dict[int, int] = field(default_factory=dict)

    def resolved(self) -> bool:
        return len(self.outcomes) == 2

    def classify(self) -> str:
        if len(self.outcomes) < 2:
            return "unresolved"
        a, b = self.outcomes.values()
        pair = {a, b}
        if pair == {"stands"}:
            return "success"
        if "reversed" in pair and "stands" not in pair:
            return "reversed"
        if pair <= {"nothing", "aborted"}:
            return "aborted"
        return "partial"


# -- system actor -------------------------------------------------------------------


class SystemActor:
    """One honest system: chain, gossip cache, pending pool, live sessions."""

    def __init__(self, config: SystemConfig, sim: "Simulation"):
        self.config = config
        self.sid = config.system_id
        self.sim = sim
        self.chain = Chain(config)
        self.gossip = GossipState(ViewList(owner=self.sid))
        self.rng = random.Random(derive_seed(sim.config.seed, f"sys:{self.sid}"))
        self.sessions: dict[tuple, SimSession] = {}
        self.pending: list[tuple[Transaction, tuple | None, str]] = []
        self.commit_push_due = False

    # -- block production ----------------------------------------------------------

    def extra_block_txs(self, tick: int) -> list[Transaction]:
        return []

    def produce_block(self, tick: int) -> None:
        batch: list[Transaction] = []
        included: list[tuple[Transaction, tuple | None, str]] = []
        for tx, key, role in self.pending:
            if self.chain.verify(tx):
                batch.append(tx)
                included.append((tx, key, role))
            else:
                self._submission_dropped(key, role)
        self.pending = []
        batch.extend(self.extra_block_txs(tick))
        block = self.chain.commit(batch)
        height = block.header.height
        cross_related = False
        for tx, key, role in included:
            if tx.kind in (TxKind.CONTRACT, TxKind.TARGET, TxKind.REVERSE):
                cross_related = True
            if key is None:
                continue
            sim_session = self.sessions.get(key)
            if sim_session is None:
                continue
            if role == "ctx":
                sim_session.session.mark_ctx_committed(height)
                sim_session.next_poll = tick + self.sim.config.poll_interval
                self.sim.log_phase(sim_session, tick, height)
            elif role == "target":
                sim_session.session.mark_target_committed(height)
                self.sim.log_phase(sim_session, tick, height)
            elif role == "reverse":
                sim_session.session.mark_reverse_committed(height)
                self.sim.log_phase(sim_session, tick, height)
                self.sim.session_finished(sim_session)
        if cross_related:
            self.commit_push_due = True
        self._refresh_own_view()

    def _refresh_own_view(self) -> None:
        if self.chain.finalized_length >= 1:
            self.gossip.view_list.entries[self.sid] = self.chain.generate_view()

    def _submission_dropped(self, key: tuple | None, role: str) -> None:
        if key is None:
            return
        sim_session = self.sessions.get(key)
        if sim_session is None:
            return
        if role == "ctx":
            sim_session.session.phase = SessionPhase.ABORTED
            self.sim.session_finished(sim_session)
        elif role == "target":
            sim_session.target_submitted = False
            sim_session.session.phase = SessionPhase.AWAIT_EXPIRY

    # -- sessions --------------------------------------------------------------------

    def open_session(self, session: CbcSession, task_id: int, role: str, tick: int) -> SimSession:
        key = (task_id, self.sid)
        sim_session = SimSession(session=session, task_id=task_id, role=role)
        self.sessions[key] = sim_session
        if session.phase is SessionPhase.INIT:
            if self.ctx_acceptable(session):
                self.submit(session.ctx_tx, key, "ctx")
            else:
                session.phase = SessionPhase.ABORTED
                self.sim.session_finished(sim_session)
        return sim_session

    def ctx_acceptable(self, session: CbcSession) -> bool:
        if session.peer_id in self.gossip.byzantine:
            return False
        return session.startable(self.chain)

    def submit(self, tx: Transaction, key: tuple | None, role: str) -> None:
        self.pending.append((tx, key, role))

    def step_sessions(self, tick: int) -> None:
        for key in list(self.sessions):
            sim_session = self.sessions[key]
            if sim_session.done:
                continue
            session = sim_session.session
            peer_byz = session.peer_id in self.gossip.byzantine
            if session.phase is SessionPhase.CTX_COMMITTED:
                self._step_polling(sim_session, tick, peer_byz)
            if session.phase in (SessionPhase.TX_COMMITTED, SessionPhase.AWAIT_EXPIRY):
                self._step_timeout(sim_session, tick, peer_byz)

    def _step_polling(self, sim_session: SimSession, tick: int, peer_byz: bool) -> None:
        session = sim_session.session
        if sim_session.target_submitted:
            return
        if session.polling_expired(self.chain) or peer_byz:
            session.phase = SessionPhase.AWAIT_EXPIRY
            return
        if sim_session.outstanding is None and tick >= sim_session.next_poll:
            sim_session.outstanding = "poll"
            self.sim.metrics.bump("poll_sends")
            self.send_message(
                CheckReq(
                    src=self.sid,
                    dst=session.peer_id,
                    hashes=(session.peer_ctx_id,),
                    purpose="poll",
                    session_key=(sim_session.task_id, self.sid),
                    view_entries=self.gossip.view_list.snapshot(),
                )
            )

    def _step_timeout(self, sim_session: SimSession, tick: int, peer_byz: bool) -> None:
        session = sim_session.session
        if sim_session.timeout_done or sim_session.target_submitted and session.target_height is None:
            return
        if not session.local_expiry_passed(self.chain):
            return
        if peer_byz:
            # Evidence against the peer: resolve locally, no query can be trusted.
            self.chain.resolve_contract(session.ctx_tx.id)
            sim_session.timeout_done = True
            decision = (
                TimeoutDecision.COMMIT_REVERSE
                if session.target_height is not None
                else TimeoutDecision.NOTHING_COMMITTED
            )
            self._apply_timeout_decision(sim_session, decision, hc=-1, hc2=-1)
            return
        peer_view = self.gossip.view_list.entries.get(session.peer_id)
        if not await_remote_expiry(session, peer_view):
            return
        if sim_session.outstanding is None:
            sim_session.outstanding = "timeout"
            self.sim.metrics.bump("timeout_sends")
            self.send_message(
                CheckReq(
                    src=self.sid,
                    dst=session.peer_id,
                    hashes=(session.ctx.remote_tx, session.ctx.remote_reverse),
                    purpose="timeout",
                    session_key=(sim_session.task_id, self.sid),
                    view_entries=self.gossip.view_list.snapshot(),
                )
            )

    def _apply_timeout_decision(
        self, sim_session: SimSession, decision: TimeoutDecision, hc: int, hc2: int
    ) -> None:
        session = sim_session.session
        session.peer_check_results = (hc, hc2)
        if decision is TimeoutDecision.COMMIT_REVERSE:
            if not sim_session.reverse_submitted:
                sim_session.reverse_submitted = True
                self.submit(session.reverse, (sim_session.task_id, self.sid), "reverse")
        else:
            session.mark_finalized()
            self.sim.session_finished(sim_session)

    # -- message handling ---------------------------------------------------------

    def handle_message(self, msg, tick: int) -> None:
        if isinstance(msg, CheckReq):
            self._handle_check_req(msg, tick)
        elif isinstance(msg, CheckResp):
            self._handle_check_resp(msg, tick)
        elif isinstance(msg, TaskProposal):
            self._handle_proposal(msg, tick)
        elif isinstance(msg, PushMsg):
            self.merge_entries(msg.src, msg.view_entries, tick)
        elif isinstance(msg, PullReq):
            self._handle_pull_req(msg, tick)
        elif isinstance(msg, PullResp):
            self._handle_pull_resp(msg, tick)
        elif isinstance(msg, SyncReq):
            self.send_message(
                PushMsg(src=self.sid, dst=msg.src, view_entries=self.gossip.view_list.snapshot())
            )
        elif isinstance(msg, EvidenceMsg):
            self._handle_evidence(msg.evidence, tick, rebroadcast=True)

    def answer_check(self, msg: CheckReq) -> CheckResp:
        results = tuple(self.chain.check(d) for d in msg.hashes)
        return CheckResp(
            src=self.sid,
            dst=msg.src,
            hashes=msg.hashes,
            results=results,
            purpose=msg.purpose,
            session_key=msg.session_key,
            view_entries=self.gossip.view_list.snapshot(),
        )

    def _handle_check_req(self, msg: CheckReq, tick: int) -> None:
        self.merge_entries(msg.src, msg.view_entries, tick)
        self.send_message(self.answer_check(msg))

    def _handle_check_resp(self, msg: CheckResp, tick: int) -> None:
        self.merge_entries(msg.src, msg.view_entries, tick)
        sim_session = self.sessions.get(msg.session_key)
        if sim_session is None or sim_session.done:
            return
        session = sim_session.session
        if msg.purpose == "poll":
            if sim_session.outstanding == "poll":
                sim_session.outstanding = None
            if session.phase is not SessionPhase.CTX_COMMITTED or sim_session.target_submitted:
                return
            to_commit = session.on_poll_result(self.chain, msg.results[0])
            if to_commit is not None:
                sim_session.target_submitted = True
                self.submit(to_commit, msg.session_key, "target")
            elif session.phase is SessionPhase.CTX_COMMITTED:
                sim_session.next_poll = tick + self.sim.config.poll_interval
        elif msg.purpose == "timeout":
            if sim_session.outstanding == "timeout":
                sim_session.outstanding = None
            if sim_session.timeout_done:
                return
            peer_view = msg.view_entries.get(session.peer_id)
            if peer_view is None or peer_view.height < session.ctx.remote_expiry:
                return  # stale responder view; the next step retries
            self.chain.resolve_contract(session.ctx_tx.id)
            sim_session.timeout_done = True
            decision = session.decide_timeout(self.chain, msg.results[0], msg.results[1])
            self._apply_timeout_decision(sim_session, decision, msg.results[0], msg.results[1])

    def _handle_proposal(self, msg: TaskProposal, tick: int) -> None:
        try:
            session = CbcSession(
                self_id=self.sid,
                ctx=msg.ctx,
                target=msg.target,
                reverse=msg.reverse,
                poll_interval=self.sim.config.poll_interval,
            )
        except ValueError:
            self.sim.record_outcome(msg.task_id, self.sid, "aborted", {})
            return
        self.open_session(session, msg.task_id, "peer", tick)

    def _handle_pull_req(self, msg: PullReq, tick: int) -> None:
        if self.chain.finalized_length < 1:
            return
        fresh = self.chain.generate_view()
        fresh_start = fresh.height + 1 - len(fresh.recent)
        cap = 4 * self.config.view_depth
        stop = min(fresh_start, msg.have_start + cap)
        hashes = self.chain.finalized_hashes(msg.have_start, stop)
        self.send_message(
            PullResp(
                src=self.sid,
                dst=msg.src,
                about=self.sid,
                view=fresh,
                hashes=hashes,
                hashes_start=msg.have_start,
            )
        )

    def _handle_pull_resp(self, msg: PullResp, tick: int) -> None:
        self.gossip.outstanding_pulls.discard(msg.about)
        if msg.about in self.gossip.byzantine:
            return
        updated, conflict, trusted = apply_pull_response(
            self.gossip.view_list,
            msg.about,
            msg.view,
            msg.hashes,
            msg.hashes_start,
            self.sim.registry,
        )
        if trusted:
            self.sim.metrics.bump("trusted_pull_accepts")
        if updated:
            self.gossip.pending_relay = True
        if conflict is not None:
            self._handle_evidence(conflict, tick, rebroadcast=True)

    def merge_entries(self, sender: int, entries: Mapping[int, View], tick: int) -> None:
        filtered = {
            sid: view
            for sid, view in entries.items()
            if sid != self.sid and sid not in self.gossip.byzantine
        }
        if not filtered:
            return
        result = merge(self.gossip.view_list, filtered, self.sim.registry)
        if result.dropped:
            self.sim.metrics.bump("invalid_proof_entries", len(result.dropped))
        if result.updated:
            self.gossip.pending_relay = True
        for sid in result.pulls:
            if sid not in self.gossip.outstanding_pulls and sid not in self.gossip.byzantine:
                self.gossip.outstanding_pulls.add(sid)
                current = self.gossip.view_list.entries[sid]
                self.send_message(
                    PullReq(
                        src=self.sid,
                        dst=sid,
                        about=sid,
                        have_height=current.height,
                        have_start=current.height + 1 - len(current.recent),
                    )
                )
        for ev in result.conflicts:
            self._handle_evidence(ev, tick, rebroadcast=True)

    def _handle_evidence(self, ev: ConflictEvidence, tick: int, rebroadcast: bool) -> None:
        accepted, fresh = register_evidence(self.gossip, ev, self.sim.registry)
        if not accepted:
            self.sim.metrics.bump("bogus_evidence")
            return
        if not fresh:
            return
        self.sim.note_detection(ev, tick, self.sid)
        if rebroadcast:
            # Security messages flood: probability 1 to every neighbor, once.
            for peer in sorted(self.sim.neighbors(self.sid)):
                self.send_message(EvidenceMsg(src=self.sid, dst=peer, evidence=ev))

    # -- gossip rounds ---------------------------------------------------------------

    def gossip_round(self, tick: int) -> None:
        timer_due = tick % self.sim.config.push_timer_blocks == self.sid % self.sim.config.push_timer_blocks
        relay_due = (
            self.gossip.pending_relay
            and tick - self.gossip.last_push_tick >= self.sim.config.relay_min_blocks
        )
        if not (self.commit_push_due or timer_due or relay_due):
            return
        self.commit_push_due = False
        self.gossip.pending_relay = False
        self.gossip.last_push_tick = tick
        recipients = push_round(
            self.sid,
            self.gossip.view_list,
            sorted(self.sim.neighbors(self.sid)),
            self.sim.config.gossip_rate,
            self.rng,
        )
        snapshot = self.gossip.view_list.snapshot()
        for peer in recipients:
            self.send_message(self.push_payload(peer, snapshot))
        # Pull half of the mix: fetch lists with the same fixed per-neighbor
        # probability the push side uses, direction inverted.
        for peer in push_round(
            self.sid,
            self.gossip.view_list,
            sorted(self.sim.neighbors(self.sid)),
            self.sim.config.gossip_rate,
            self.rng,
        ):
            self.send_message(SyncReq(src=self.sid, dst=peer))

    def push_payload(self, peer: int, snapshot: dict[int, View]) -> PushMsg:
        return PushMsg(src=self.sid, dst=peer, view_entries=snapshot)

    def send_message(self, msg) -> None:
        self.sim.send(msg)


# -- adversarial actors ---------------------------------------------------------------


@dataclass
class _Persona:
    chain: Chain
    label: str
    pending: list[Transaction] = field(default_factory=list)


class ForkActor(SystemActor):
    """Adv2: owns its system, finalizes a fork, and races one task per branch.

    Each victim is served one branch consistently: check responses, pushes, and
    pull responses all come from that victim's branch.  Proof power outside the
    owned system is absent, so entries about other systems are relayed as
    received.
    """

    def __init__(self, config: SystemConfig, sim: "Simulation", script: dict):
        super().__init__(config, sim)
        self.script = script
        self.fork_height = int(script.get("fork_height", 2))
        self.start_tick = int(script.get("start_tick", 5))
        self.victim_branch = {int(k): v for k, v in script["victims"].items()}
        self.forge_polls = script.get("strategy") == AdvStrategy.FORGED_CHECK_ON_FORK.value
        self.personas: dict[str, _Persona] | None = None
        self.adv_sessions: dict[int, CbcSession] = {}
        self.session_state: dict[int, dict] = {}
        self.forged_responses = 0
        self.launched = False

    def _branch_for(self, requester: int) -> Chain:
        if self.personas is None:
            return self.chain
        label = self.victim_branch.get(requester, "a")
        return self.personas[label].chain

    def produce_block(self, tick: int) -> None:
        if self.personas is None:
            if self.chain.height >= self.fork_height:
                self.personas = {
                    "a": _Persona(self.chain, "a"),
                    "b": _Persona(self.chain.clone(), "b"),
                }
            else:
                self.chain.commit([])
                return
        for label in ("a", "b"):
            persona = self.personas[label]
            marker = Transaction.create(
                TxKind.LOCAL, f"branch:{label}:{persona.chain.height + 1}".encode(), (), self.sid
            )
            batch = [tx for tx in persona.pending if persona.chain.verify(tx)]
            persona.pending = []
            batch.append(marker)
            persona.chain.commit(batch)
        self.commit_push_due = True

    def _refresh_own_view(self) -> None:  # views are served per requester instead
        pass

    def step_sessions(self, tick: int) -> None:
        if self.personas is None:
            return
        if not self.launched and tick >= self.start_tick:
            self.launched = True
            for victim in sorted(self.victim_branch):
                self._launch_task(victim, tick)
        for victim in sorted(self.adv_sessions):
            self._drive_adv_session(victim, tick)

    def _launch_task(self, victim: int, tick: int) -> None:
        label = self.victim_branch[victim]
        branch = self.personas[label].chain
        task_id = self.sim.new_task_id()
        rng = self.sim.task_rng
        adv_target = Transaction.create(TxKind.TARGET, rng.randbytes(8), (), self.sid)
        adv_reverse = make_reverse(adv_target, rng.randbytes(8), self.sid)
        victim_target = Transaction.create(TxKind.TARGET, rng.randbytes(8), (), victim)
        victim_reverse = make_reverse(victim_target, rng.randbytes(8), victim)
        margin = self.sim.expiry_margin()
        ctx_adv = ContractTx(
            local_tx=adv_target.id,
            local_reverse=adv_reverse.id,
            local_expiry=branch.height + margin,
            peer=victim,
            remote_tx=victim_target.id,
            remote_reverse=victim_reverse.id,
            remote_expiry=self.sim.actors[victim].chain.height + margin,
        )
        session = CbcSession(
            self_id=self.sid,
            ctx=ctx_adv,
            target=adv_target,
            reverse=adv_reverse,
            poll_interval=self.sim.config.poll_interval,
        )
        self.adv_sessions[victim] = session
        self.session_state[victim] = {
            "task_id": task_id,
            "committed": False,
            "next_poll": tick + self.sim.config.poll_interval,
            "outstanding": False,
        }
        self.personas[label].pending.append(session.ctx_tx)
        self.sim.register_task(task_id, self.sid, victim, tick)
        self.sim.record_outcome_later(task_id, self.sid)
        self.send_message(
            TaskProposal(
                src=self.sid,
                dst=victim,
                task_id=task_id,
                ctx=derive_counterpart(ctx_adv, self.sid),
                target=victim_target,
                reverse=victim_reverse,
            )
        )

    def _drive_adv_session(self, victim: int, tick: int) -> None:
        # Per-branch the adversary plays the contract protocol by the book;
        # its request traffic also carries branch views to the victim.
        session = self.adv_sessions[victim]
        state = self.session_state[victim]
        branch = self.personas[self.victim_branch[victim]].chain
        if session.ctx_tx.id not in branch.tx_index:
            return
        if not state["committed"]:
            if not state["outstanding"] and tick >= state["next_poll"]:
                state["outstanding"] = True
                self.send_message(
                    CheckReq(
                        src=self.sid,
                        dst=victim,
                        hashes=(session.peer_ctx_id,),
                        purpose="poll",
                        session_key=("adv", victim),
                        view_entries=self._entries_for(victim),
                    )
                )
        elif (
            branch.height > session.ctx.local_expiry
            and not state["outstanding"]
            and not state.get("resolved")
        ):
            state["outstanding"] = True
            self.send_message(
                CheckReq(
                    src=self.sid,
                    dst=victim,
                    hashes=(session.ctx.remote_tx, session.ctx.remote_reverse),
                    purpose="timeout",
                    session_key=("adv", victim),
                    view_entries=self._entries_for(victim),
                )
            )

    def answer_check(self, msg: CheckReq) -> CheckResp:
        branch = self._branch_for(msg.src)
        results = list(branch.check(d) for d in msg.hashes)
        if self.forge_polls and msg.purpose == "poll" and results[0] < 0:
            results[0] = max(0, branch.finalized_length - 1)
            self.forged_responses += 1
        return CheckResp(
            src=self.sid,
            dst=msg.src,
            hashes=msg.hashes,
            results=tuple(results),
            purpose=msg.purpose,
            session_key=msg.session_key,
            view_entries=self._entries_for(msg.src),
        )

    def _entries_for(self, requester: int) -> dict[int, View]:
        branch = self._branch_for(requester)
        entries = dict(self.gossip.view_list.entries)
        entries.pop(self.sid, None)
        if branch.finalized_length >= 1:
            entries[self.sid] = branch.generate_view()
        return entries

    def _handle_check_req(self, msg: CheckReq, tick: int) -> None:
        self.merge_entries(msg.src, msg.view_entries, tick)
        self.send_message(self.answer_check(msg))

    def _handle_check_resp(self, msg: CheckResp, tick: int) -> None:
        self.merge_entries(msg.src, msg.view_entries, tick)
        victim = msg.src
        state = self.session_state.get(victim)
        session = self.adv_sessions.get(victim)
        if state is None or session is None:
            return
        state["outstanding"] = False
        if msg.purpose == "poll" and not state["committed"]:
            if msg.results[0] >= 0:
                label = self.victim_branch[victim]
                branch = self.personas[label].chain
                if branch.height + 1 < session.ctx.local_expiry:
                    self.personas[label].pending.append(session.target)
                state["committed"] = True
            else:
                state["next_poll"] = tick + self.sim.config.poll_interval
        elif msg.purpose == "timeout":
            state["resolved"] = True

    def _handle_proposal(self, msg: TaskProposal, tick: int) -> None:
        pass  # the adversary only runs its own scripted tasks

    def _handle_pull_req(self, msg: PullReq, tick: int) -> None:
        branch = self._branch_for(msg.src)
        if branch.finalized_length < 1:
            return
        fresh = branch.generate_view()
        fresh_start = fresh.height + 1 - len(fresh.recent)
        cap = 4 * self.config.view_depth
        stop = min(fresh_start, msg.have_start + cap)
        hashes = branch.finalized_hashes(msg.have_start, stop)
        self.send_message(
            PullResp(
                src=self.sid,
                dst=msg.src,
                about=self.sid,
                view=fresh,
                hashes=hashes,
                hashes_start=msg.have_start,
            )
        )

    def _handle_evidence(self, ev: ConflictEvidence, tick: int, rebroadcast: bool) -> None:
        pass  # evidence about itself is ignored, never relayed

    def handle_message(self, msg, tick: int) -> None:
        if isinstance(msg, SyncReq):
            self.send_message(PushMsg(src=self.sid, dst=msg.src, view_entries=self._entries_for(msg.src)))
            return
        super().handle_message(msg, tick)

    def merge_entries(self, sender: int, entries: Mapping[int, View], tick: int) -> None:
        filtered = {sid: v for sid, v in entries.items() if sid != self.sid}
        if filtered:
            merge(self.gossip.view_list, filtered, self.sim.registry)

    def gossip_round(self, tick: int) -> None:
        timer_due = tick % self.sim.config.push_timer_blocks == self.sid % self.sim.config.push_timer_blocks
        if not (self.commit_push_due or timer_due):
            return
        self.commit_push_due = False
        recipients = push_round(
            self.sid,
            self.gossip.view_list,
            sorted(self.sim.neighbors(self.sid)),
            self.sim.config.gossip_rate,
            self.rng,
        )
        for peer in recipients:
            self.send_message(PushMsg(src=self.sid, dst=peer, view_entries=self._entries_for(peer)))

    def audit(self) -> dict:
        report = {"forged_responses": self.forged_responses, "late_commits": []}
        for victim, session in sorted(self.adv_sessions.items()):
            branch = self.personas[self.victim_branch[victim]].chain if self.personas else self.chain
            height = branch.tx_index.get(session.target.id)
            if height is not None and height > session.ctx.local_expiry:
                report["late_commits"].append({"victim": victim, "height": height})
        return report


class LateCommitActor(SystemActor):
    """Byzantine-by-timing: commits its target only after its own expiry.

    The late inclusion is itself the proof; the honest peer's timeout sees a
    position past the remote expiry and takes the reverse path.
    """

    def __init__(self, config: SystemConfig, sim: "Simulation"):
        super().__init__(config, sim)
        self.held_targets: list[tuple[tuple, Transaction, int]] = []

    def _handle_check_resp(self, msg: CheckResp, tick: int) -> None:
        sim_session = self.sessions.get(msg.session_key)
        if (
            msg.purpose == "poll"
            and sim_session is not None
            and sim_session.session.phase is SessionPhase.CTX_COMMITTED
            and not sim_session.target_submitted
            and msg.results[0] >= 0
        ):
            if sim_session.outstanding == "poll":
                sim_session.outstanding = None
            sim_session.target_submitted = True
            self.held_targets.append(
                (msg.session_key, sim_session.session.target, sim_session.session.ctx.local_expiry)
            )
            return
        super()._handle_check_resp(msg, tick)

    def step_sessions(self, tick: int) -> None:
        still_held = []
        for key, target, expiry in self.held_targets:
            if self.chain.height >= expiry:
                self.pending.append((target, key, "target"))
            else:
                still_held.append((key, target, expiry))
        self.held_targets = still_held
        super().step_sessions(tick)

    def produce_block(self, tick: int) -> None:
        # Late targets bypass the expiry gate; inclusion past expiry is the attack.
        batch = []
        included = []
        for tx, key, role in self.pending:
            ok = self.chain.verify(tx) if role != "target" else tx.id not in self.chain.tx_index
            if ok:
                batch.append(tx)
                included.append((tx, key, role))
        self.pending = [(tx, key, role) for tx, key, role in included]
        super().produce_block(tick)


# -- the simulation -----------------------------------------------------------------


class Simulation:
    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.system_configs = config.resolved_systems()
        self.registry: dict[int, SystemConfig] = {c.system_id: c for c in self.system_configs}
        self._adjacency = config.adjacency()
        self.metrics = Metrics()
        for sid in self.registry:
            self.metrics.requests_sent[sid] = 0
            self.metrics.gossips_sent[sid] = 0
        self.transcript: list[dict] = []
        self.tasks: dict[int, TaskRecord] = {}
        self._task_counter = 0
        self.task_rng = random.Random(derive_seed(config.seed, "tasks"))
        self._heap: list[tuple[int, int, object]] = []
        self._seq = 0
        self.tick = 0
        self.detections: list[dict] = []
        self.actors: dict[int, SystemActor] = {}
        for sys_config in self.system_configs:
            self.actors[sys_config.system_id] = self._build_actor(sys_config)

    def _build_actor(self, sys_config: SystemConfig) -> SystemActor:
        adv = self.config.adversary
        if adv.kind is AdvKind.ADV2 and adv.target_system == sys_config.system_id:
            if adv.strategy is AdvStrategy.LATE_COMMIT:
                return LateCommitActor(sys_config, self)
            script = self.config.attack_script or {}
            return ForkActor(sys_config, self, script)
        return SystemActor(sys_config, self)

    # -- wiring ---------------------------------------------------------------------

    def neighbors(self, sid: int) -> set[int]:
        return self._adjacency[sid]

    def new_task_id(self) -> int:
        self._task_counter += 1
        return self._task_counter

    def send(self, msg) -> None:
        sender = self.actors[msg.src]
        jitter = self.config.latency_jitter
        delay = self.config.latency_base + (sender.rng.randint(-jitter, jitter) if jitter else 0)
        deliver = self.tick + max(0, delay)
        self._seq += 1
        heapq.heappush(self._heap, (deliver, self._seq, msg))
        if isinstance(msg, CheckReq):
            self.metrics.requests_sent[msg.src] += 1
        elif isinstance(msg, (PushMsg, PullReq, PullResp, SyncReq, EvidenceMsg)):
            self.metrics.gossips_sent[msg.src] += 1
        elif isinstance(msg, TaskProposal):
            self.metrics.bump("proposals_sent")
        if self.config.record_messages:
            self.transcript.append(_message_record(msg, self.tick))

    # -- transcript/bookkeeping -------------------------------------------------------

    def log_phase(self, sim_session: SimSession, tick: int, height: int) -> None:
        self.transcript.append(
            {
                "event": "phase",
                "task": sim_session.task_id,
                "system": sim_session.session.self_id,
                "phase": sim_session.session.phase.value,
                "height": height,
                "tick": tick,
            }
        )

    def register_task(self, task_id: int, initiator: int, peer: int, tick: int) -> None:
        self.tasks[task_id] = TaskRecord(task_id, initiator, peer, tick)
        self.metrics.tasks_started += 1
        self.transcript.append(
            {
                "event": "task-started",
                "task": task_id,
                "initiator": initiator,
                "peer": peer,
                "tick": tick,
            }
        )

    def record_outcome_later(self, task_id: int, sid: int) -> None:
        # Adversary sessions resolve off-transcript; close them at run end.
        record = self.tasks[task_id]
        record.outcomes.setdefault(sid, "nothing")

    def session_finished(self, sim_session: SimSession) -> None:
        session = sim_session.session
        record = self.tasks[sim_session.task_id]
        if session.self_id in record.outcomes and record.outcomes[session.self_id] != "nothing":
            return
        record.outcomes[session.self_id] = session.outcome()
        commits = sum(
            1
            for h in (session.ctx_height, session.target_height, session.reverse_height)
            if h is not None
        )
        record.commits[session.self_id] = commits
        self.transcript.append(
            {
                "event": "session-finished",
                "task": sim_session.task_id,
                "system": session.self_id,
                "outcome": session.outcome(),
                "ctx_height": session.ctx_height,
                "target_height": session.target_height,
                "reverse_height": session.reverse_height,
                "tick": self.tick,
            }
        )

    def record_outcome(self, task_id: int, sid: int, outcome: str, commits: dict) -> None:
        record = self.tasks[task_id]
        record.outcomes[sid] = outcome
        self.transcript.append(
            {
                "event": "session-finished",
                "task": task_id,
                "system": sid,
                "outcome": outcome,
                "ctx_height": None,
                "target_height": None,
                "reverse_height": None,
                "tick": self.tick,
            }
        )

    def note_detection(self, ev: ConflictEvidence, tick: int, where: int) -> None:
        self.metrics.conflicts_detected += 1
        self.detections.append({"accused": ev.accused, "reporter": ev.reporter, "system": where, "tick": tick})
        self.transcript.append(
            {
                "event": "evidence",
                "accused": ev.accused,
                "reporter": ev.reporter,
                "system": where,
                "tick": tick,
            }
        )

    def expiry_margin(self) -> int:
        view_depth = self.system_configs[0].view_depth
        gap_estimate = self.metrics.mean_gap() if self.metrics.gap_count else 3.0
        margin = int(round(self.config.expiry_factor * (view_depth + gap_estimate)))
        if self.config.expiry_jitter:
            margin += self.task_rng.randint(0, self.config.expiry_jitter)
        return max(margin, 4)

    # -- task generation ----------------------------------------------------------------

    def generate_tasks(self, tick: int) -> None:
        count = draw_task_count(self.config.task_rate, self.task_rng)
        for _ in range(count):
            initiator = self.task_rng.randrange(self.config.num_systems)
            peer = self.task_rng.choice(
                [s for s in range(self.config.num_systems) if s != initiator]
            )
            self._start_task(initiator, peer, tick)

    def _start_task(self, initiator: int, peer: int, tick: int) -> None:
        actor = self.actors[initiator]
        if isinstance(actor, ForkActor):
            return
        task_id = self.new_task_id()
        rng = self.task_rng
        target_i = Transaction.create(TxKind.TARGET, rng.randbytes(8), (), initiator)
        reverse_i = make_reverse(target_i, rng.randbytes(8), initiator)
        target_j = Transaction.create(TxKind.TARGET, rng.randbytes(8), (), peer)
        reverse_j = make_reverse(target_j, rng.randbytes(8), peer)
        margin = self.expiry_margin()
        # Blocks are produced in lockstep, so the initiator's own height tracks
        # the peer's true height far better than a possibly stale cached view.
        peer_entry = actor.gossip.view_list.entries.get(peer)
        peer_cfg = self.registry[peer]
        peer_height = actor.chain.height
        if peer_entry is not None:
            peer_height = max(peer_height, peer_entry.height + peer_cfg.finality_depth + 1)
        ctx = ContractTx(
            local_tx=target_i.id,
            local_reverse=reverse_i.id,
            local_expiry=actor.chain.height + margin,
            peer=peer,
            remote_tx=target_j.id,
            remote_reverse=reverse_j.id,
            remote_expiry=peer_height + margin,
        )
        session = CbcSession(
            self_id=initiator,
            ctx=ctx,
            target=target_i,
            reverse=reverse_i,
            poll_interval=self.config.poll_interval,
        )
        self.register_task(task_id, initiator, peer, tick)
        sim_session = actor.open_session(session, task_id, "initiator", tick)
        if sim_session.done:
            self.record_outcome(task_id, peer, "aborted", {})
            return
        actor.send_message(
            TaskProposal(
                src=initiator,
                dst=peer,
                task_id=task_id,
                ctx=derive_counterpart(ctx, initiator),
                target=target_j,
                reverse=reverse_j,
            )
        )

    # -- main loop ------------------------------------------------------------------------

    def all_tasks_resolved(self) -> bool:
        if any(not record.resolved() for record in self.tasks.values()):
            return False
        for actor in self.actors.values():
            for sim_session in actor.sessions.values():
                if not sim_session.done:
                    return False
        return True

    def run(self) -> Metrics:
        config = self.config
        cutoff = config.num_blocks - config.task_cutoff_margin
        order = sorted(self.actors)
        adversarial = config.adversary.kind is not AdvKind.NONE
        self.transcript.append(
            {
                "event": "run-start",
                "name": config.name,
                "seed": config.seed,
                "n": config.num_systems,
                "p_c": f"{config.task_rate:.6f}",
                "g": f"{config.gossip_rate:.6f}",
                "num_blocks": config.num_blocks,
            }
        )
        while True:
            if self.tick >= config.num_blocks:
                # Honest runs drain until every task resolves; adversarial runs
                # may starve timeouts by design, so they stop at the bound.
                if adversarial or self.all_tasks_resolved():
                    break
            if self.tick >= config.num_blocks + config.drain_cap:
                raise InvariantViolation("sessions unresolved after the drain cap")
            for sid in order:
                self.actors[sid].produce_block(self.tick)
            while self._heap and self._heap[0][0] <= self.tick:
                _, _, msg = heapq.heappop(self._heap)
                self.actors[msg.dst].handle_message(msg, self.tick)
            for sid in order:
                self.actors[sid].step_sessions(self.tick)
            if config.task_rate > 0 and self.tick <= cutoff:
                self.generate_tasks(self.tick)
            for sid in order:
                self.actors[sid].gossip_round(self.tick)
            if not adversarial:
                self._sample_gaps(self.tick)
            self.tick += 1
        self._close_adversary_tasks()
        self._final_checks()
        self.transcript.append({"event": "run-end", "tick": self.tick})
        return self.metrics

    def _sample_gaps(self, tick: int) -> None:
        true_heights = {}
        view_lists = {}
        for sid, actor in self.actors.items():
            true_heights[sid] = actor.chain.finalized_length - 1
            view_lists[sid] = actor.gossip.view_list
        for record in sample_gap(view_lists, true_heights, tick):
            self.metrics.record_gap(*record, keep=self.config.record_gap_samples)

    def _close_adversary_tasks(self) -> None:
        for actor in self.actors.values():
            if isinstance(actor, ForkActor):
                for victim, session in sorted(actor.adv_sessions.items()):
                    record = self.tasks[actor.session_state[victim]["task_id"]]
                    branch = actor._branch_for(victim)
                    committed = session.target.id in branch.tx_index
                    record.outcomes[actor.sid] = "stands" if committed else "nothing"

    def _final_checks(self) -> None:
        honest = self.config.adversary.kind is AdvKind.NONE
        unresolved = [t for t in self.tasks.values() if not t.resolved()]
        if unresolved and honest:
            raise InvariantViolation(f"{len(unresolved)} tasks never resolved")
        outcomes = {"success": 0, "reversed": 0, "aborted": 0, "partial": 0, "unresolved": 0}
        for record in self.tasks.values():
            kind = record.classify()
            outcomes[kind] += 1
            self.transcript.append(
                {
                    "event": "task-finished",
                    "task": record.task_id,
                    "outcome": kind,
                    "outcomes": {str(k): v for k, v in sorted(record.outcomes.items())},
                }
            )
        self.metrics.tasks_succeeded = outcomes["success"]
        self.metrics.tasks_reversed = outcomes["reversed"]
        self.metrics.tasks_aborted = outcomes["aborted"]
        if outcomes["partial"] and honest:
            raise InvariantViolation("atomicity violated: a task ended partially committed")
        if honest and self.metrics.conflicts_detected:
            raise InvariantViolation("conflict evidence appeared in an honest run")
        total = self.metrics.tasks_succeeded + self.metrics.tasks_reversed + self.metrics.tasks_aborted
        if honest and total != self.metrics.tasks_started:
            raise InvariantViolation("task accounting does not add up")


def _message_record(msg, tick: int) -> dict:
    if isinstance(msg, CheckReq):
        return {
            "event": "message",
            "type": "check-req",
            "sender": msg.src,
            "recipient": msg.dst,
            "hash": [h.hex() for h in msg.hashes],
            "result": None,
            "view": None,
            "tick": tick,
        }
    if isinstance(msg, CheckResp):
        return {
            "event": "message",
            "type": "check-resp",
            "sender": msg.src,
            "recipient": msg.dst,
            "hash": [h.hex() for h in msg.hashes],
            "result": list(msg.results),
            "view": _view_json(msg.view_entries.get(msg.src)),
            "tick": tick,
        }
    if isinstance(msg, PushMsg):
        payload = {str(sid): _view_json(v) for sid, v in sorted(msg.view_entries.items())}
        return {"event": "message", "type": "push", "sender": msg.src, "payload": payload, "tick": tick}
    if isinstance(msg, PullReq):
        payload = {"about": msg.about, "have_height": msg.have_height}
        return {"event": "message", "type": "pull-req", "sender": msg.src, "payload": payload, "tick": tick}
    if isinstance(msg, SyncReq):
        return {"event": "message", "type": "pull-req", "sender": msg.src, "payload": {"about": None}, "tick": tick}
    if isinstance(msg, PullResp):
        payload = {"about": msg.about, "view": _view_json(msg.view), "hashes": len(msg.hashes)}
        return {"event": "message", "type": "pull-resp", "sender": msg.src, "payload": payload, "tick": tick}
    if isinstance(msg, EvidenceMsg):
        payload = {"accused": msg.evidence.accused, "reporter": msg.evidence.reporter}
        return {"event": "message", "type": "evidence", "sender": msg.src, "payload": payload, "tick": tick}
    if isinstance(msg, TaskProposal):
        return {
            "event": "message",
            "type": "task-proposal",
            "sender": msg.src,
            "payload": {"task": msg.task_id},
            "tick": tick,
        }
    raise TypeError(f"unknown message type {type(msg).__name__}")


def _view_json(view: View | None) -> dict | None:
    if view is None:
        return None
    return {
        "aggregate": view.aggregate.hex(),
        "recent": [h.hex() for h in view.recent],
        "proof": sorted(view.proof),
        "height": view.height,
    }


@dataclass
class SimResult:
    config: SimConfig
    metrics: Metrics
    transcript: list[dict]
    tasks: dict[int, TaskRecord]
    detections: list[dict]


def run(config: SimConfig) -> SimResult:
    sim = Simulation(config)
    metrics = sim.run()
    return SimResult(config, metrics, sim.transcript, sim.tasks, sim.detections)


def attack_run(config: SimConfig) -> dict:
    """Run an adversarial scenario and produce the detection report."""
    if config.adversary.kind is AdvKind.NONE:
        raise ConfigError("attack_run needs an adversary in the scenario")
    sim = Simulation(config)
    metrics = sim.run()
    report: dict = {
        "detected": bool(sim.detections),
        "detection_tick": sim.detections[0]["tick"] if sim.detections else None,
        "evidence_count": metrics.conflicts_detected,
        "victim_outcomes": {},
        "double_completion": False,
        "detected_before_expiry": False,
    }
    adv_sid = config.adversary.target_system
    adv_actor = sim.actors.get(adv_sid) if adv_sid is not None else None
    victim_sids = []
    if isinstance(adv_actor, ForkActor):
        report.update(adv_actor.audit())
        victim_sids = sorted(adv_actor.victim_branch)
        expiries = []
        stands = 0
        for victim in victim_sids:
            session = adv_actor.adv_sessions.get(victim)
            if session is None:
                report["victim_outcomes"][str(victim)] = "missing"
                continue
            # Read the outcome off the victim's chain: the ablation starves
            # timeouts, so the session record alone can stay open.
            victim_chain = sim.actors[victim].chain
            target_in = session.ctx.remote_tx in victim_chain.tx_index
            reverse_in = session.ctx.remote_reverse in victim_chain.tx_index
            if reverse_in:
                outcome = "reversed"
            elif target_in:
                outcome = "stands"
            else:
                key = (adv_actor.session_state[victim]["task_id"], victim)
                vs = sim.actors[victim].sessions.get(key)
                outcome = "aborted" if vs is None or vs.done else "nothing"
            report["victim_outcomes"][str(victim)] = outcome
            if outcome == "stands":
                stands += 1
            # local height h is reached at tick h - 1
            expiries.append(session.ctx.remote_expiry - 1)
        report["double_completion"] = stands == len(victim_sids) and stands >= 2
        if sim.detections and expiries:
            report["detected_before_expiry"] = sim.detections[0]["tick"] < max(expiries)
    elif isinstance(adv_actor, LateCommitActor):
        late = []
        for key, sim_session in sorted(adv_actor.sessions.items()):
            session = sim_session.session
            if session.target_height is not None and session.target_height > session.ctx.local_expiry:
                late.append({"task": sim_session.task_id, "height": session.target_height})
        report["late_commits"] = late
        report["victim_outcomes"] = {
            str(record.initiator if record.peer == adv_sid else record.peer): record.classify()
            for record in sim.tasks.values()
        }
    return report
