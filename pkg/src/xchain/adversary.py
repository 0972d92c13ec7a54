"""Pluggable adversaries: channel forgery (Adv1) and one fully corrupted system (Adv2).

Signatures are simulated, so unforgeability is modeled as a power rule: an
adversary may fabricate a quorum proof for a system only where it controls at
least that system's quorum.  Adv1 controls less than a quorum everywhere and
can only attack the request channel; Adv2 owns one system outright and can
finalize forks there, but nowhere else.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .chain import Chain, View
from .channel import ChannelMode, containment_probability
from .core import Transaction, TxKind


class AdvKind(Enum):
    NONE = "none"
    ADV1 = "adv1"
    ADV2 = "adv2"


class AdvStrategy(Enum):
    FORGE_CHECK_RESPONSE = "forge-check-response"
    FORK_AND_DOUBLE_TASK = "fork-and-double-task"
    LATE_COMMIT = "late-commit"
    FORGED_CHECK_ON_FORK = "forged-check-on-fork"


@dataclass(frozen=True)
class AdversarySpec:
    kind: AdvKind = AdvKind.NONE
    controlled: dict[int, float] = field(default_factory=dict)
    target_system: int | None = None
    strategy: AdvStrategy | None = None
    fork_height: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "controlled": {str(k): v for k, v in sorted(self.controlled.items())},
            "target_system": self.target_system,
            "strategy": self.strategy.value if self.strategy else None,
            "fork_height": self.fork_height,
        }

    @staticmethod
    def from_dict(data: dict) -> "AdversarySpec":
        return AdversarySpec(
            kind=AdvKind(data.get("kind", "none")),
            controlled={int(k): float(v) for k, v in data.get("controlled", {}).items()},
            target_system=data.get("target_system"),
            strategy=AdvStrategy(data["strategy"]) if data.get("strategy") else None,
            fork_height=int(data.get("fork_height", 0)),
        )


# -- Adv1: request-channel forgery -----------------------------------------------


def adv1_forge_probability(node_count: int, controlled: int, sample_size: int) -> Fraction:
    """Exact chance that every sampled confirmation lands on a controlled node."""
    return containment_probability(node_count, controlled, sample_size)


class Adv1Interceptor:
    """Forges a check response only when the whole confirmation sample is owned.

    In full/delegated permissioned modes a forged answer needs a quorum of
    consistent copies, which fewer-than-quorum nodes cannot produce; in the
    permissionless mode the block proof cannot be fabricated.  Only the sampled
    mode leaves a window, and its size is the hypergeometric containment odds.
    """

    def __init__(
        self,
        mode: ChannelMode,
        node_count: int,
        controlled: int,
        sample_size: int,
        forged_result: int = 0,
    ):
        if controlled > node_count:
            raise ValueError("cannot control more nodes than exist")
        self.mode = mode
        self.node_count = node_count
        self.controlled = controlled
        self.sample_size = sample_size
        self.forged_result = forged_result
        self.attempts = 0
        self.successes = 0

    def intercept(
        self,
        digests: Sequence[bytes],
        results: list[int],
        view: View,
        rng: random.Random,
    ) -> tuple[list[int], View] | None:
        self.attempts += 1
        if self.mode is not ChannelMode.PERMISSIONED_SAMPLED or self.controlled == 0:
            return None
        sample = rng.sample(range(self.node_count), self.sample_size)
        if all(node < self.controlled for node in sample):
            self.successes += 1
            return [self.forged_result] * len(digests), view
        return None


# -- Adv2: one corrupted system ---------------------------------------------------


def _branch_marker(branch: str, height: int, origin: int) -> Transaction:
    payload = f"branch:{branch}:{height}".encode()
    return Transaction.create(TxKind.LOCAL, payload, (), origin)


def adv2_fork(chain: Chain, fork_height: int) -> tuple[Chain, Chain]:
    """Two finalized-looking branches sharing the prefix up to ``fork_height``.

    Each branch is extended far enough past the shared prefix that both carry
    divergent finalized blocks; views generated from them are irreconcilable.
    """
    if fork_height > chain.height:
        raise ValueError("fork height beyond the chain tip")
    if fork_height < 0:
        raise ValueError("fork height must be non-negative")
    cfg = chain.config
    grow = cfg.finality_depth + cfg.view_depth + 1
    branches = []
    for label in ("a", "b"):
        branch = chain.clone(up_to_height=fork_height)
        for _ in range(grow):
            branch.commit([_branch_marker(label, branch.height + 1, cfg.system_id)])
        branches.append(branch)
    return branches[0], branches[1]


def adv2_double_task(
    adv_system: int,
    victim_a: int,
    victim_b: int,
    fork_height: int = 2,
    start_tick: int = 5,
) -> dict:
    """Scenario script: serve one fork branch per victim and race both tasks.

    The simulator executes this script; the report records whether conflict
    evidence surfaced before the later victim's expiry and how each victim's
    session ended.
    """
    if len({adv_system, victim_a, victim_b}) != 3:
        raise ValueError("adversary and victims must be three distinct systems")
    return {
        "kind": AdvKind.ADV2.value,
        "strategy": AdvStrategy.FORK_AND_DOUBLE_TASK.value,
        "target_system": adv_system,
        "fork_height": fork_height,
        "start_tick": start_tick,
        "victims": {str(victim_a): "a", str(victim_b): "b"},
    }
