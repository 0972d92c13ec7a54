"""Request channel between two systems: confirmation math, cost accounting, transport.

The simulator counts each system-to-system request as one message; the
node-level multipliers of the different channel modes are exposed separately
through :func:`request_cost` for reporting.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Protocol, Sequence

from .chain import Chain, View


class ChannelParamError(ValueError):
    pass


class ChannelMode(Enum):
    PERMISSIONLESS = "permissionless"
    PERMISSIONED_FULL = "permissioned-full"
    PERMISSIONED_DELEGATED = "permissioned-delegated"
    PERMISSIONED_SAMPLED = "permissioned-sampled"


def containment_probability(node_count: int, subset_size: int, sample_size: int) -> Fraction:
    """Chance that ``sample_size`` distinct uniform draws all land inside a fixed
    subset of ``subset_size`` nodes (hypergeometric, exact rational)."""
    if sample_size > node_count:
        raise ChannelParamError("cannot sample more distinct nodes than exist")
    if sample_size > subset_size:
        return Fraction(0)
    return Fraction(math.comb(subset_size, sample_size), math.comb(node_count, sample_size))


def sampling_satisfiable(node_count: int, quorum: int) -> bool:
    """Whether any sample size can push the containment ratio below 1."""
    return quorum < node_count


def min_confirmations(node_count: int, quorum: int, p_target: float) -> int:
    """Smallest sample size m with C(quorum, m)/C(node_count, m) < p_target.

    With quorum == node_count the ratio is identically 1 and no m satisfies;
    the degenerate cap ``node_count - quorum + 1`` is returned then (check
    :func:`sampling_satisfiable` to distinguish).
    """
    if not 1 <= quorum <= node_count:
        raise ChannelParamError("need 1 <= quorum <= node_count")
    if not 0.0 < p_target < 1.0:
        raise ChannelParamError("p_target must lie strictly between 0 and 1")
    for m in range(1, node_count + 1):
        if containment_probability(node_count, quorum, m) < Fraction(p_target):
            return m
    return node_count - quorum + 1


def request_cost(
    mode: ChannelMode,
    quorum_src: int,
    quorum_dst: int,
    sample_size: int | None = None,
) -> int:
    """Node-to-node message count for one request under the given channel mode."""
    if quorum_src < 1 or quorum_dst < 1:
        raise ChannelParamError("quorums must be >= 1")
    if mode is ChannelMode.PERMISSIONED_FULL:
        return 2 * quorum_src * quorum_dst
    if mode is ChannelMode.PERMISSIONED_DELEGATED:
        return quorum_dst
    if mode is ChannelMode.PERMISSIONED_SAMPLED:
        if sample_size is None:
            raise ChannelParamError("sampled mode needs a sample size")
        return min(quorum_dst, sample_size * quorum_src)
    # Permissionless: one request, one block-proof response.
    return 2


class Interceptor(Protocol):
    """Adversary hook invoked on every response crossing the channel."""

    def intercept(
        self,
        digests: Sequence[bytes],
        results: list[int],
        view: View,
        rng: random.Random,
    ) -> tuple[list[int], View] | None: ...


@dataclass
class RequestChannel:
    """Query path between two systems; stateless apart from the adversary hook."""

    src: int
    dst: int
    mode: ChannelMode = ChannelMode.PERMISSIONED_FULL
    p_fail_target: float = 0.01
    interceptor: "Interceptor | None" = None


class DirectRequestChannel(RequestChannel):
    """Synchronous channel for protocol-level tests: answers straight from the
    responder's chain, no simulated latency."""

    def __init__(
        self,
        src: int,
        dst: int,
        responder: Callable[[], Chain],
        mode: ChannelMode = ChannelMode.PERMISSIONED_FULL,
        p_fail_target: float = 0.01,
        interceptor: "Interceptor | None" = None,
        rng: random.Random | None = None,
    ):
        super().__init__(src, dst, mode, p_fail_target, interceptor)
        self._responder = responder
        self._rng = rng or random.Random(0)
        self.requests_sent = 0

    def check(self, digests: Sequence[bytes]) -> tuple[list[int], View]:
        self.requests_sent += 1
        chain = self._responder()
        results = [chain.check(d) for d in digests]
        view = chain.generate_view()
        if self.interceptor is not None:
            forged = self.interceptor.intercept(digests, results, view, self._rng)
            if forged is not None:
                return forged
        return results, view


def send_check(channel: DirectRequestChannel, target_hash: bytes) -> tuple[int, View]:
    """Single-hash convenience wrapper over :meth:`DirectRequestChannel.check`."""
    results, view = channel.check([target_hash])
    return results[0], view
