"""Transaction-vs-profile similarity scoring and the suspicion mapping.

A new transaction is compared directly against the tree: for each of its
items present in the header table the item's node-link chain is walked, and
every node whose prefix path is contained in the transaction contributes a
weighted credit.  Zero similarity means not a single rule matched, which is
the highest suspicion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .core import Transaction
from .errors import ContractError, ScoringError
from .fptree import FpTree, prefix_path

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.01

__all__ = [
    "DEFAULT_EPSILON",
    "WeightTable",
    "CreditParams",
    "SuspicionRecord",
    "credit",
    "sim_match",
    "suspicion",
    "score",
]


@dataclass(frozen=True)
class WeightTable:
    """Per-attribute stress factors; unlisted attributes get the default."""

    weights: Mapping[str, float] = field(default_factory=dict)
    default_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.default_weight < 0 or any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be non-negative")

    def weight_for(self, attribute: str) -> float:
        return self.weights.get(attribute, self.default_weight)


@dataclass(frozen=True)
class CreditParams:
    """epsilon sets the credit cap: a perfect rule earns -log2(epsilon)."""

    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")


def credit(
    support: float | Fraction,
    confidence: float | Fraction,
    params: CreditParams = CreditParams(),
) -> float:
    """Per-rule credit -s * log2(1 + epsilon - c).

    Strictly increasing in both measures (confidence is emphasized), zero at
    c == epsilon, capped at -log2(epsilon) for a perfect rule.  Confidences
    below epsilon would go negative; credits accumulate evidence of normality,
    never penalties, so those are clamped to zero with a diagnostic.
    """
    s, c = float(support), float(confidence)
    if not 0 < s <= c <= 1:
        raise ContractError(
            f"credit requires 0 < support <= confidence <= 1, got s={support}, c={confidence}"
        )
    value = -s * math.log2(1.0 + params.epsilon - c)
    if value < 0:
        log.debug(
            "clamped negative credit to 0 (confidence %.6g below epsilon %.6g)",
            c,
            params.epsilon,
        )
        return 0.0
    return value


def sim_match(
    transaction: Transaction,
    tree: FpTree,
    weights: WeightTable = WeightTable(),
    params: CreditParams = CreditParams(),
) -> float:
    """Similarity between a transaction and the profile tree.

    For each transaction item found in the header table, walks the item's
    node-link chain; every node whose prefix path is a subset of the
    transaction's items adds credit(support, confidence) times the item's
    weight.  Support and confidence come from live node counts, so incremental
    inserts are reflected immediately.  Items absent from the header
    contribute nothing.
    """
    if tree.total_transactions == 0:
        raise ScoringError("no profile: the tree holds no transactions")
    items = transaction.items
    total = 0.0
    for entry in tree.header.entries:  # fixed L order keeps summation deterministic
        if entry.item not in items:
            continue
        item_credit = 0.0
        for node in entry.chain():
            if prefix_path(node) <= items:
                item_credit += credit(
                    Fraction(node.count, tree.total_transactions),
                    Fraction(node.count, entry.total_count),
                    params,
                )
        total += weights.weight_for(entry.item.attribute) * item_credit
    return total


def suspicion(similarity: float) -> float:
    """Maps similarity into (0, 1]: 1/(1 + sim).

    Zero similarity (no rule matched) is the highest suspicion, 1; the value
    decreases strictly toward 0 as similarity grows.
    """
    if similarity < 0:
        raise ContractError(f"similarity must be >= 0, got {similarity}")
    return 1.0 / (1.0 + similarity)


@dataclass(frozen=True)
class SuspicionRecord:
    """A scored transaction: its similarity, suspicion and scoring time."""

    transaction: Transaction
    similarity: float
    suspicion: float
    scored_at: int

    def __post_init__(self) -> None:
        if self.similarity < 0:
            raise ValueError("similarity must be >= 0")
        if not 0 < self.suspicion <= 1:
            raise ValueError("suspicion must be in (0, 1]")


def score(
    transaction: Transaction,
    tree: FpTree,
    weights: WeightTable = WeightTable(),
    params: CreditParams = CreditParams(),
) -> SuspicionRecord:
    """Convenience: sim_match + suspicion, stamped with the transaction time."""
    sim = sim_match(transaction, tree, weights, params)
    return SuspicionRecord(transaction, sim, suspicion(sim), transaction.timestamp)
