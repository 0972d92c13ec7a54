"""Blockchain-wise gossip: view lists, the extend/merge rule, conflict evidence.

A view list caches one View per system.  Incoming views replace local entries
only when the local knowledge can reproduce the newer aggregate (the extend
rule); an unverifiable jump asks the source for the missing hashes (pull), and
a verifiable mismatch is proof of a fork and becomes ConflictEvidence.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .chain import SystemConfig, View
from .core import hash_bytes


class ExtendStatus(Enum):
    EXTENDS = "extends"
    CONFLICT = "conflict"
    GAP = "gap"


def extend_status(old: View, new: View) -> ExtendStatus:
    """Can ``new`` be derived from ``old`` by appending finalized blocks?

    Requires new.height >= old.height.  GAP means old's known hashes cannot
    reach the start of new's aggregate, so nothing can be proven either way.
    """
    if new.height < old.height:
        raise ValueError("extend_status expects new.height >= old.height")
    old_start = old.height + 1 - len(old.recent)  # first height in old.recent
    new_start = new.height + 1 - len(new.recent)
    if new.height == old.height:
        same = new.aggregate == old.aggregate and new.recent == old.recent
        return ExtendStatus.EXTENDS if same else ExtendStatus.CONFLICT
    if new_start > old.height + 1:
        return ExtendStatus.GAP
    if new_start < old_start:
        # A taller view whose aggregate covers less than ours: malformed.
        return ExtendStatus.CONFLICT
    acc = old.aggregate
    for h in range(old_start, new_start):
        acc = hash_bytes(acc + old.recent[h - old_start])
    if acc != new.aggregate:
        return ExtendStatus.CONFLICT
    for h in range(new_start, old.height + 1):
        if old.recent[h - old_start] != new.recent[h - new_start]:
            return ExtendStatus.CONFLICT
    return ExtendStatus.EXTENDS


def can_extend(old: View, new: View, view_depth: int) -> bool:
    """True iff ``new`` verifiably extends ``old`` (equal views extend trivially)."""
    if new.height < old.height:
        return False
    return extend_status(old, new) is ExtendStatus.EXTENDS


def views_conflict(a: View, b: View) -> bool:
    """Proof-positive fork: the verifiable overlap of the two views disagrees."""
    lo, hi = (a, b) if a.height <= b.height else (b, a)
    return extend_status(lo, hi) is ExtendStatus.CONFLICT


@dataclass(frozen=True)
class ConflictEvidence:
    """Two irreconcilable proof-bearing views of the same system."""

    accused: int
    view_a: View
    view_b: View
    reporter: int


def view_digest(view: View) -> bytes:
    parts = [view.aggregate]
    parts.extend(view.recent)
    parts.append(view.height.to_bytes(8, "big"))
    parts.extend(n.to_bytes(2, "big") for n in sorted(view.proof))
    return hash_bytes(b"".join(parts))


def evidence_key(ev: ConflictEvidence) -> tuple:
    a, b = sorted((view_digest(ev.view_a), view_digest(ev.view_b)))
    return (ev.accused, a, b)


def valid_proof(view: View, config: SystemConfig) -> bool:
    if len(view.proof) < config.quorum:
        return False
    return all(0 <= node < config.node_count for node in view.proof)


def validate_evidence(ev: ConflictEvidence, registry: Mapping[int, SystemConfig]) -> bool:
    config = registry.get(ev.accused)
    if config is None:
        return False
    if not valid_proof(ev.view_a, config) or not valid_proof(ev.view_b, config):
        return False
    return views_conflict(ev.view_a, ev.view_b)


@dataclass
class ViewList:
    """One system's cache of every peer's latest verifiable view."""

    owner: int
    entries: dict[int, View] = field(default_factory=dict)
    version: int = 0

    def snapshot(self) -> dict[int, View]:
        return dict(self.entries)


@dataclass
class MergeResult:
    updated: bool = False
    updated_systems: list[int] = field(default_factory=list)
    pulls: list[int] = field(default_factory=list)
    conflicts: list[ConflictEvidence] = field(default_factory=list)
    dropped: list[int] = field(default_factory=list)


def merge(
    local: ViewList,
    incoming: Mapping[int, View],
    registry: Mapping[int, SystemConfig],
) -> MergeResult:
    """Fold a received view list (or single attached view) into ``local``.

    Per entry: a verifiable extension replaces, an unverifiable jump requests a
    pull, a verifiable disagreement yields ConflictEvidence, and an entry with
    a malformed proof is dropped.  Entry heights never decrease.
    """
    result = MergeResult()
    for sid in sorted(incoming):
        view = incoming[sid]
        config = registry.get(sid)
        if config is None or not valid_proof(view, config):
            result.dropped.append(sid)
            continue
        current = local.entries.get(sid)
        if current is None:
            local.entries[sid] = view
            result.updated_systems.append(sid)
            continue
        if view.height > current.height:
            status = extend_status(current, view)
            if status is ExtendStatus.EXTENDS:
                local.entries[sid] = view
                result.updated_systems.append(sid)
            elif status is ExtendStatus.GAP:
                result.pulls.append(sid)
            else:
                result.conflicts.append(ConflictEvidence(sid, current, view, local.owner))
        elif view.height == current.height:
            if view.aggregate != current.aggregate or view.recent != current.recent:
                result.conflicts.append(ConflictEvidence(sid, current, view, local.owner))
        else:
            if extend_status(view, current) is ExtendStatus.CONFLICT:
                result.conflicts.append(ConflictEvidence(sid, view, current, local.owner))
    if result.updated_systems:
        result.updated = True
        local.version += 1
    return result


def apply_pull_response(
    local: ViewList,
    source: int,
    fresh: View,
    hashes: tuple[bytes, ...],
    hashes_start: int,
    registry: Mapping[int, SystemConfig],
) -> tuple[bool, ConflictEvidence | None, bool]:
    """Reconcile a pulled view using the provided missing header hashes.

    Returns (updated, conflict, trusted): ``trusted`` marks an entry accepted
    on proof alone because the hash span could not bridge the whole gap.
    """
    config = registry.get(source)
    if config is None or not valid_proof(fresh, config):
        return False, None, False
    current = local.entries.get(source)
    if current is None:
        local.entries[source] = fresh
        local.version += 1
        return True, None, False
    if fresh.height <= current.height:
        if fresh.height == current.height and views_conflict(current, fresh):
            return False, ConflictEvidence(source, current, fresh, local.owner), False
        return False, None, False

    cur_start = current.height + 1 - len(current.recent)
    fresh_start = fresh.height + 1 - len(fresh.recent)
    # Known hashes: current.recent for [cur_start, current.height], then the
    # pulled span for [hashes_start, hashes_start + len(hashes)).
    known: dict[int, bytes] = {cur_start + i: h for i, h in enumerate(current.recent)}
    mismatch = False
    for i, h in enumerate(hashes):
        height = hashes_start + i
        if height in known and known[height] != h:
            mismatch = True
            break
        known[height] = h
    if mismatch:
        return False, ConflictEvidence(source, current, fresh, local.owner), False
    acc = current.aggregate
    covered = True
    for h in range(cur_start, fresh_start):
        if h not in known:
            covered = False
            break
        acc = hash_bytes(acc + known[h])
    if covered:
        ok = acc == fresh.aggregate
        if ok:
            for h in range(fresh_start, fresh.height + 1):
                if h in known and known[h] != fresh.recent[h - fresh_start]:
                    ok = False
                    break
        if not ok:
            return False, ConflictEvidence(source, current, fresh, local.owner), False
        local.entries[source] = fresh
        local.version += 1
        return True, None, False
    # Span capped below the gap: accept on proof validity, as on first contact.
    local.entries[source] = fresh
    local.version += 1
    return True, None, True


def push_round(
    owner: int,
    view_list: ViewList,
    neighbors: Iterable[int],
    send_probability: float,
    rng: random.Random,
) -> list[int]:
    """Pick this round's recipients: each neighbor independently with probability g."""
    if send_probability <= 0.0:
        return []
    return [
        peer
        for peer in neighbors
        if peer != owner and (send_probability >= 1.0 or rng.random() < send_probability)
    ]


def count_digests(view_list: ViewList) -> int:
    """Digests carried on the wire: one aggregate plus the recent window per entry."""
    return sum(1 + len(view.recent) for view in view_list.entries.values())


@dataclass
class GossipState:
    """Mutable gossip-side state of one system actor."""

    view_list: ViewList
    byzantine: set[int] = field(default_factory=set)
    flagged_reporters: set[int] = field(default_factory=set)
    seen_evidence: set[tuple] = field(default_factory=set)
    pending_relay: bool = False
    last_push_tick: int = -(10**9)
    outstanding_pulls: set[int] = field(default_factory=set)


def register_evidence(
    state: GossipState,
    ev: ConflictEvidence,
    registry: Mapping[int, SystemConfig],
) -> tuple[bool, bool]:
    """Validate and record evidence.

    Returns (accepted, fresh): ``fresh`` is False for duplicates, which must
    not be re-broadcast.  Bogus evidence flags the reporter instead.
    """
    if not validate_evidence(ev, registry):
        state.flagged_reporters.add(ev.reporter)
        return False, False
    key = evidence_key(ev)
    if key in state.seen_evidence:
        return True, False
    state.seen_evidence.add(key)
    state.byzantine.add(ev.accused)
    return True, True
