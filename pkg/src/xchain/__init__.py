"""Cross-chain atomic contracts over independent finality-bearing chains,
secured by a gossip network of view lists, plus a seeded simulator."""

from .chain import Chain, SystemConfig, View
from .contract import CbcSession, SessionPhase, derive_counterpart
from .core import Block, BlockHeader, ContractTx, Transaction, TxKind, hash_bytes
from .gossip import ConflictEvidence, ViewList, can_extend, merge
from .sim import Metrics, SimConfig, attack_run, run

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockHeader",
    "CbcSession",
    "Chain",
    "ConflictEvidence",
    "ContractTx",
    "Metrics",
    "SessionPhase",
    "SimConfig",
    "SystemConfig",
    "Transaction",
    "TxKind",
    "View",
    "ViewList",
    "attack_run",
    "can_extend",
    "derive_counterpart",
    "hash_bytes",
    "merge",
    "run",
]
