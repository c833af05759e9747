"""Profile-driven synthetic transaction generator.

Real transaction histories are rarely shareable, so behavior is simulated
from declarative profiles: categorical distributions per attribute, weekly
timing, an amount model, an IP model, and optional correlation boosts
(condition items make certain values likelier).  A dataset mixes legal
transactions drawn from one profile with fraudulent ones drawn from another,
interleaved in time order.  Every draw flows from one seeded generator, so a
given (profile, counts, seed) triple always yields the identical dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import FRAUD, LEGAL, Item, Transaction
from .errors import ConfigurationError

DAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")

# Synthetic streams start from a fixed origin and span half a year; day and
# hour labels are assigned by construction, not by calendar lookup.
BASE_TIME = 1_600_000_000
WEEKS = 26

_DIST_TOLERANCE = 1e-9

__all__ = [
    "DAY_NAMES",
    "BASE_TIME",
    "WEEKS",
    "CorrelationRule",
    "Timing",
    "LogNormalAmount",
    "UniformAmount",
    "SmallStableGroup",
    "DynamicPerTransaction",
    "BehaviorProfile",
    "LabeledDataset",
    "generate",
    "builtin_profiles",
]


def _check_distribution(name: str, weights: Mapping | Sequence[float]) -> None:
    values = list(weights.values()) if isinstance(weights, Mapping) else list(weights)
    if not values or any(w < 0 for w in values):
        raise ConfigurationError(f"{name}: weights must be non-negative and non-empty")
    if abs(sum(values) - 1.0) > _DIST_TOLERANCE:
        raise ConfigurationError(f"{name}: distribution must sum to 1, got {sum(values)}")


@dataclass(frozen=True)
class CorrelationRule:
    """When every condition item is present, the target value's weight is boosted."""

    condition: frozenset[Item]
    target: Item
    factor: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "condition", frozenset(self.condition))
        if self.factor < 1:
            raise ConfigurationError(f"boost factor must be >= 1, got {self.factor}")


@dataclass(frozen=True)
class Timing:
    """Weekly session timing: day-of-week and hour-of-day weights."""

    day_weights: tuple[float, ...]
    hour_weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "day_weights", tuple(self.day_weights))
        object.__setattr__(self, "hour_weights", tuple(self.hour_weights))
        if len(self.day_weights) != 7 or len(self.hour_weights) != 24:
            raise ConfigurationError("timing needs 7 day weights and 24 hour weights")
        _check_distribution("day weights", self.day_weights)
        _check_distribution("hour weights", self.hour_weights)


@dataclass(frozen=True)
class LogNormalAmount:
    mean_log: float
    sigma: float

    def sample(self, rng: np.random.Generator) -> float:
        return round(float(rng.lognormal(self.mean_log, self.sigma)), 2)


@dataclass(frozen=True)
class UniformAmount:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not 0 <= self.lo <= self.hi:
            raise ConfigurationError(f"bad uniform amount range ({self.lo}, {self.hi})")

    def sample(self, rng: np.random.Generator) -> float:
        return round(float(rng.uniform(self.lo, self.hi)), 2)


@dataclass(frozen=True)
class SmallStableGroup:
    """A fixed group of source address prefixes, most traffic from the first few."""

    addresses: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "addresses", tuple(self.addresses))
        if not self.addresses:
            raise ConfigurationError("stable IP group needs at least one address")


@dataclass(frozen=True)
class DynamicPerTransaction:
    """A fresh address prefix for every transaction, drawn from a wide range."""

    octet_range: tuple[int, int] = (60, 120)

    def __post_init__(self) -> None:
        object.__setattr__(self, "octet_range", tuple(self.octet_range))
        lo, hi = self.octet_range
        if not 0 <= lo < hi <= 255:
            raise ConfigurationError(f"bad dynamic IP octet range {self.octet_range}")


IpModel = SmallStableGroup | DynamicPerTransaction
AmountModel = LogNormalAmount | UniformAmount


@dataclass(frozen=True)
class BehaviorProfile:
    """Everything needed to draw one kind of behavior."""

    name: str
    attribute_models: Mapping[str, Mapping[str, float]]
    timing: Timing
    amount_model: AmountModel
    ip_model: IpModel
    correlation_rules: tuple[CorrelationRule, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "correlation_rules", tuple(self.correlation_rules))
        for attribute, weights in self.attribute_models.items():
            _check_distribution(f"profile {self.name!r}, attribute {attribute!r}", weights)


@dataclass(frozen=True)
class LabeledDataset:
    """Transactions in time order with a parallel legal/fraud label sequence."""

    transactions: tuple[Transaction, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "transactions", tuple(self.transactions))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.transactions) != len(self.labels):
            raise ValueError("transactions and labels must have equal length")
        if any(label not in (LEGAL, FRAUD) for label in self.labels):
            raise ValueError(f"labels must be {LEGAL!r} or {FRAUD!r}")
        stamps = [t.timestamp for t in self.transactions]
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("dataset timestamps must be non-decreasing")

    def __len__(self) -> int:
        return len(self.transactions)


def _choice(rng: np.random.Generator, values: Sequence[str], weights: Sequence[float]) -> str:
    p = np.asarray(weights, dtype=float)
    return values[int(rng.choice(len(values), p=p / p.sum()))]


def _stable_pool(rng: np.random.Generator, model: SmallStableGroup) -> tuple[list[str], list[float]]:
    octets = rng.choice(200, size=model.addresses, replace=False)
    pool = [f"{model.first_octet}.{int(o)}" for o in octets]
    weights = [2.0 ** -i for i in range(model.addresses)]
    return pool, weights


def _draw_transaction(
    profile: BehaviorProfile,
    rng: np.random.Generator,
    entity_id: str,
    stable_pool: tuple[list[str], list[float]] | None,
) -> Transaction:
    day = int(rng.choice(7, p=np.asarray(profile.timing.day_weights)))
    hour = int(rng.choice(24, p=np.asarray(profile.timing.hour_weights)))
    week = int(rng.integers(0, WEEKS))
    minute, second = int(rng.integers(0, 60)), int(rng.integers(0, 60))
    timestamp = BASE_TIME + (((week * 7 + day) * 24 + hour) * 60 + minute) * 60 + second

    items = {Item("day", DAY_NAMES[day]), Item("hour", f"h{hour:02d}")}
    for attribute in sorted(profile.attribute_models):
        weights = dict(profile.attribute_models[attribute])
        for rule in profile.correlation_rules:
            if rule.target.attribute == attribute and rule.condition <= items:
                weights[rule.target.value] = weights.get(rule.target.value, 0.0) * rule.factor
        values = sorted(weights)
        items.add(Item(attribute, _choice(rng, values, [weights[v] for v in values])))

    if isinstance(profile.ip_model, SmallStableGroup):
        assert stable_pool is not None
        pool, pool_weights = stable_pool
        prefix = _choice(rng, pool, pool_weights)
    else:
        lo, hi = profile.ip_model.octet_range
        prefix = f"{int(rng.integers(lo, hi))}.{int(rng.integers(0, 256))}"
    items.add(Item("ip", prefix))

    return Transaction(entity_id, timestamp, frozenset(items), profile.amount_model.sample(rng))


def generate(
    profile: BehaviorProfile,
    n_legal: int,
    n_fraud: int,
    fraud_profile: BehaviorProfile,
    seed: int,
    entity_id: str = "u1",
) -> LabeledDataset:
    """n_legal transactions from ``profile`` plus n_fraud from ``fraud_profile``,
    interleaved in time order for one entity.  Deterministic given the seed."""
    if n_legal < 0 or n_fraud < 0:
        raise ConfigurationError("transaction counts must be >= 0")
    rng = np.random.default_rng(seed)
    pools = {
        p.name: _stable_pool(rng, p.ip_model)
        for p in (profile, fraud_profile)
        if isinstance(p.ip_model, SmallStableGroup)
    }
    drawn = [
        (_draw_transaction(profile, rng, entity_id, pools.get(profile.name)), LEGAL)
        for _ in range(n_legal)
    ]
    drawn += [
        (_draw_transaction(fraud_profile, rng, entity_id, pools.get(fraud_profile.name)), FRAUD)
        for _ in range(n_fraud)
    ]
    drawn.sort(key=lambda pair: pair[0].timestamp)  # stable: ties keep draw order
    return LabeledDataset(
        tuple(t for t, _ in drawn), tuple(label for _, label in drawn)
    )


def _block_hours(night: float, morning: float, afternoon: float, evening: float) -> tuple[float, ...]:
    return tuple([night / 6] * 6 + [morning / 6] * 6 + [afternoon / 6] * 6 + [evening / 6] * 6)


def builtin_profiles() -> dict[str, BehaviorProfile]:
    """The three shipped behavior profiles.

    "regular": a small stable IP group, weekend- and evening-weighted timing,
    a clustered product group.  "irregular": the same habits but a fresh IP on
    every transaction and no time-of-day preference.  "fraud": uniform timing,
    a distinct product group, a distinct dynamic IP range, larger amounts.
    """
    weekend_days = (0.06, 0.06, 0.06, 0.06, 0.06, 0.38, 0.32)
    cluster = {"books": 0.40, "music": 0.27, "games": 0.18, "video": 0.09, "garden": 0.06}
    regular = BehaviorProfile(
        name="regular",
        attribute_models={"category": cluster},
        timing=Timing(weekend_days, _block_hours(0.08, 0.14, 0.23, 0.55)),
        amount_model=LogNormalAmount(mean_log=math.log(32.0), sigma=0.55),
        ip_model=SmallStableGroup(3),
        correlation_rules=(
            CorrelationRule(frozenset({Item("day", "sat")}), Item("category", "games"), 1.6),
        ),
    )
    irregular = BehaviorProfile(
        name="irregular",
        attribute_models={"category": cluster},
        timing=Timing(weekend_days, _block_hours(0.25, 0.25, 0.25, 0.25)),
        amount_model=LogNormalAmount(mean_log=math.log(32.0), sigma=0.55),
        ip_model=DynamicPerTransaction(),
    )
    fraud = BehaviorProfile(
        name="fraud",
        attribute_models={
            "category": {"giftcards": 0.25, "wires": 0.25, "jewelry": 0.25, "casino": 0.25}
        },
        timing=Timing(tuple([1 / 7] * 7), tuple([1 / 24] * 24)),
        amount_model=UniformAmount(150.0, 900.0),
        ip_model=DynamicPerTransaction(octet_range=(198, 250)),
    )
    return {"regular": regular, "irregular": irregular, "fraud": fraud}
