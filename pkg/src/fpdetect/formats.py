"""Line-delimited dataset formats, profile persistence, engine configuration.

Every persisted artifact is versioned.  Line formats carry a header comment
``#fpdetect:<format>:<version>``; readers accept headerless input as version 1
but fail loudly on a newer version, never misparse silently.  All writers are
canonical (sorted items, fixed numeric formatting), so identical inputs give
byte-identical files.

Transaction line grammar (single-space separated, UTF-8)::

    entity_id timestamp amount attr=value [attr=value ...]

where timestamp is integer epoch seconds, amount has two decimals, attribute
names contain neither whitespace nor "=", and values contain no whitespace.
Attributes must be unique within a line.  Items are written in (attribute,
value) order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .accumulator import EXPIRING_KINDS, SINCE_UPDATE, SLIDING, STEP
from .core import (
    FRAUD,
    LEGAL,
    CountWindow,
    GranularityConfig,
    Interval,
    Item,
    Passthrough,
    RangeBuckets,
    TimeWindow,
    Transaction,
    ValueMap,
    WindowSpec,
)
from .errors import ConfigurationError, FormatError
from .evaluator import FIXED_PER_MISS, FULL_AMOUNT
from .fptree import DEFAULT_MIN_SUP, FpTree, from_record, to_record
from .matcher import DEFAULT_EPSILON, SuspicionRecord, WeightTable

FORMAT_VERSION = 1
_HEADER_PREFIX = "#fpdetect:"

TRANSACTIONS = "transactions"
LABELS = "labels"
SCORES = "scores"
ALERTS = "alerts"

__all__ = [
    "FORMAT_VERSION",
    "ParseResult",
    "format_transaction",
    "parse_transactions",
    "read_transactions",
    "write_transactions",
    "parse_labels",
    "read_labels",
    "write_labels",
    "format_score",
    "parse_scores",
    "read_scores",
    "write_scores",
    "format_alert",
    "write_alerts",
    "read_alerts",
    "save_profile",
    "load_profile",
    "EngineConfig",
    "default_config",
    "load_config",
]


def _header(kind: str) -> str:
    return f"{_HEADER_PREFIX}{kind}:{FORMAT_VERSION}"


def _check_header(line: str, kind: str) -> None:
    body = line[len(_HEADER_PREFIX) :]
    name, _, version = body.partition(":")
    if name != kind:
        raise FormatError(f"expected a {kind} file, found {name!r}")
    try:
        major = int(version)
    except ValueError:
        raise FormatError(f"bad format version {version!r}") from None
    if major > FORMAT_VERSION:
        raise FormatError(
            f"{kind} format version {major} is newer than supported version {FORMAT_VERSION}"
        )


def _data_lines(lines: Iterable[str], kind: str):
    """Yields (line_number, stripped_line), validating any header comment."""
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith(_HEADER_PREFIX):
            _check_header(line, kind)
            continue
        if line.startswith("#"):
            continue
        yield number, line


# --------------------------------------------------------------------------
# Transactions
# --------------------------------------------------------------------------


def _check_token(token: str, what: str) -> str:
    if not token or any(ch.isspace() for ch in token):
        raise FormatError(f"{what} must be a non-empty token without whitespace: {token!r}")
    return token


def format_transaction(txn: Transaction) -> str:
    fields = [
        _check_token(txn.entity_id, "entity_id"),
        str(txn.timestamp),
        f"{txn.amount:.2f}",
    ]
    for item in sorted(txn.items):
        _check_token(item.value, "item value")
        attribute = _check_token(item.attribute, "item attribute")
        if "=" in attribute:
            raise FormatError(f"item attribute must not contain '=': {attribute!r}")
        fields.append(f"{item.attribute}={item.value}")
    return " ".join(fields)


def _parse_transaction_line(line: str) -> Transaction:
    fields = line.split(" ")
    if len(fields) < 3 or any(not f for f in fields):
        raise FormatError("expected 'entity_id timestamp amount [attr=value ...]'")
    entity_id, ts_text, amount_text = fields[:3]
    try:
        timestamp = int(ts_text)
    except ValueError:
        raise FormatError(f"bad timestamp {ts_text!r}") from None
    try:
        amount = float(amount_text)
    except ValueError:
        raise FormatError(f"bad amount {amount_text!r}") from None
    if amount < 0:
        raise FormatError(f"amount must be >= 0, got {amount_text}")
    seen: dict[str, str] = {}
    for token in fields[3:]:
        attribute, sep, value = token.partition("=")
        if not sep or not attribute or not value:
            raise FormatError(f"bad item token {token!r}, expected attr=value")
        if attribute in seen:
            raise FormatError(f"duplicate attribute {attribute!r}")
        seen[attribute] = value
    items = frozenset(Item(a, v) for a, v in seen.items())
    return Transaction(entity_id, timestamp, items, amount)


@dataclass
class ParseResult:
    """Parsed records plus, in lenient mode, the skipped (line, reason) pairs."""

    transactions: list[Transaction]
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.transactions)

    def __len__(self) -> int:
        return len(self.transactions)


def parse_transactions(lines: Iterable[str], strict: bool = True) -> ParseResult:
    """Parses a transaction stream.

    Strict mode aborts on the first malformed line; lenient mode skips and
    counts it.  Either way the offending line number is reported.
    """
    result = ParseResult([])
    for number, line in _data_lines(lines, TRANSACTIONS):
        try:
            result.transactions.append(_parse_transaction_line(line))
        except FormatError as err:
            if strict:
                raise FormatError(f"line {number}: {err}") from None
            result.skipped.append((number, str(err)))
    return result


def read_transactions(path: str | Path, strict: bool = True) -> ParseResult:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_transactions(handle, strict=strict)


def write_transactions(path: str | Path, transactions: Iterable[Transaction]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_header(TRANSACTIONS) + "\n")
        for txn in transactions:
            handle.write(format_transaction(txn) + "\n")


# --------------------------------------------------------------------------
# Labels
# --------------------------------------------------------------------------


def parse_labels(lines: Iterable[str]) -> list[str]:
    labels = []
    for number, line in _data_lines(lines, LABELS):
        if line not in (LEGAL, FRAUD):
            raise FormatError(f"line {number}: labels must be {LEGAL!r} or {FRAUD!r}")
        labels.append(line)
    return labels


def read_labels(path: str | Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_labels(handle)


def write_labels(path: str | Path, labels: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_header(LABELS) + "\n")
        for label in labels:
            handle.write(label + "\n")


# --------------------------------------------------------------------------
# Suspicion scores
# --------------------------------------------------------------------------


def format_score(record: SuspicionRecord) -> str:
    txn = record.transaction
    return (
        f"{_check_token(txn.entity_id, 'entity_id')} {record.scored_at} "
        f"{record.similarity!r} {record.suspicion!r} {txn.amount:.2f}"
    )


def parse_scores(lines: Iterable[str]) -> list[SuspicionRecord]:
    """Reads scores back; item sets are not retained by this format."""
    records = []
    for number, line in _data_lines(lines, SCORES):
        fields = line.split(" ")
        if len(fields) != 5:
            raise FormatError(
                f"line {number}: expected 'entity scored_at similarity suspicion amount'"
            )
        try:
            scored_at = int(fields[1])
            similarity, susp, amount = (float(f) for f in fields[2:])
        except ValueError as err:
            raise FormatError(f"line {number}: {err}") from None
        txn = Transaction(fields[0], scored_at, frozenset(), amount)
        records.append(SuspicionRecord(txn, similarity, susp, scored_at))
    return records


def read_scores(path: str | Path) -> list[SuspicionRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_scores(handle)


def write_scores(path: str | Path, records: Iterable[SuspicionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_header(SCORES) + "\n")
        for record in records:
            handle.write(format_score(record) + "\n")


# --------------------------------------------------------------------------
# Alerts
# --------------------------------------------------------------------------


def format_alert(
    entity_id: str,
    window_end: int,
    value: float,
    severity: str | None,
    record_count: int,
    window_has_fraud: bool | None = None,
) -> str:
    flag = "-" if window_has_fraud is None else str(int(window_has_fraud))
    return (
        f"{_check_token(entity_id, 'entity_id')} {window_end} {value!r} "
        f"{severity if severity is not None else '-'} {record_count} {flag}"
    )


def write_alerts(path: str | Path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_header(ALERTS) + "\n")
        for line in lines:
            handle.write(line + "\n")


def read_alerts(path: str | Path) -> list[tuple[str, int, float, str | None, int, bool | None]]:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in _data_lines(handle, ALERTS):
            fields = line.split(" ")
            if len(fields) != 6:
                raise FormatError(f"line {number}: expected 6 alert fields")
            entity, end_text, value_text, severity, count_text, flag = fields
            try:
                row = (
                    entity,
                    int(end_text),
                    float(value_text),
                    None if severity == "-" else severity,
                    int(count_text),
                    None if flag == "-" else bool(int(flag)),
                )
            except ValueError as err:
                raise FormatError(f"line {number}: {err}") from None
            rows.append(row)
    return rows


# --------------------------------------------------------------------------
# Profile persistence
# --------------------------------------------------------------------------


def save_profile(path: str | Path, tree: FpTree, entity_id: str, built_at: int) -> None:
    record = to_record(tree)
    record["entity_id"] = entity_id
    record["built_at"] = built_at
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(record, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_profile(path: str | Path) -> tuple[FpTree, dict]:
    """Returns the tree plus its metadata (entity_id, built_at)."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            record = json.load(handle)
        except json.JSONDecodeError as err:
            raise FormatError(f"{path}: not a profile record ({err})") from None
    tree = from_record(record)
    meta = {"entity_id": record.get("entity_id"), "built_at": record.get("built_at")}
    return tree, meta


# --------------------------------------------------------------------------
# Engine configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EngineConfig:
    """Every tunable of the pipeline in one validated document."""

    min_sup: float = DEFAULT_MIN_SUP
    window: WindowSpec = CountWindow(5000)
    epsilon: float = DEFAULT_EPSILON
    weights: WeightTable = WeightTable()
    expiring_kind: str = STEP
    degree: int = 2
    span: int = 7 * 86400
    anchor_mode: str = SLIDING
    thresholds: tuple[tuple[float, str], ...] = ((50.0, "watch"), (250.0, "alarm"))
    granularity: GranularityConfig = GranularityConfig(
        specs={"amount": Interval(25.0)}, default=Passthrough()
    )
    rebuild_fraction: float = 0.25
    decision_threshold: float = 0.5
    challenge_cost: float = 10.0
    miss_cost_mode: str = FULL_AMOUNT
    fixed_miss_cost: float = 0.0


def default_config() -> EngineConfig:
    return EngineConfig()


def _config_error(field_name: str, message: str) -> ConfigurationError:
    return ConfigurationError(f"{field_name}: {message}")


def _parse_window(raw: dict) -> WindowSpec:
    kind = raw.get("kind")
    try:
        if kind == "count":
            return CountWindow(int(raw["n"]))
        if kind == "time":
            return TimeWindow(int(raw["duration"]))
    except (KeyError, TypeError, ValueError) as err:
        raise _config_error("window", str(err)) from None
    raise _config_error("window.kind", f"must be 'count' or 'time', got {kind!r}")


def _parse_bucket_spec(field_name: str, raw: dict):
    kind = raw.get("kind")
    try:
        if kind == "passthrough":
            return Passthrough()
        if kind == "interval":
            return Interval(float(raw["width"]), float(raw.get("origin", 0.0)))
        if kind == "ranges":
            return RangeBuckets(
                tuple((float(lo), float(hi), str(label)) for lo, hi, label in raw["ranges"])
            )
        if kind == "map":
            default = raw.get("default")
            return ValueMap(
                {str(k): str(v) for k, v in raw["mapping"].items()},
                None if default is None else str(default),
            )
    except ConfigurationError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise _config_error(field_name, str(err)) from None
    raise _config_error(field_name, f"unknown bucket spec kind {kind!r}")


def _parse_granularity(raw: dict) -> GranularityConfig:
    specs = {
        str(attribute): _parse_bucket_spec(f"granularity.specs.{attribute}", spec)
        for attribute, spec in raw.get("specs", {}).items()
    }
    default_raw = raw.get("default")
    default = (
        None if default_raw is None else _parse_bucket_spec("granularity.default", default_raw)
    )
    return GranularityConfig(specs=specs, default=default)


def config_from_dict(raw: dict) -> EngineConfig:
    """Builds a validated EngineConfig; errors name the offending field."""
    version = raw.get("version", FORMAT_VERSION)
    if not isinstance(version, int):
        raise _config_error("version", f"must be an integer, got {version!r}")
    if version > FORMAT_VERSION:
        raise FormatError(
            f"config version {version} is newer than supported version {FORMAT_VERSION}"
        )
    base = default_config()
    known = {
        "version",
        "min_sup",
        "window",
        "epsilon",
        "weights",
        "expiring",
        "anchor_mode",
        "thresholds",
        "granularity",
        "rebuild_fraction",
        "decision_threshold",
        "cost",
    }
    unknown = set(raw) - known
    if unknown:
        raise _config_error(sorted(unknown)[0], "unknown configuration field")

    min_sup = float(raw.get("min_sup", base.min_sup))
    if not 0 < min_sup <= 1:
        raise _config_error("min_sup", f"must be in (0, 1], got {min_sup}")
    epsilon = float(raw.get("epsilon", base.epsilon))
    if not 0 < epsilon <= 1:
        raise _config_error("epsilon", f"must be in (0, 1], got {epsilon}")
    window = _parse_window(raw["window"]) if "window" in raw else base.window

    weights = base.weights
    if "weights" in raw:
        try:
            weights = WeightTable(
                {str(k): float(v) for k, v in raw["weights"].get("attributes", {}).items()},
                float(raw["weights"].get("default", 1.0)),
            )
        except (AttributeError, TypeError, ValueError) as err:
            raise _config_error("weights", str(err)) from None

    expiring_kind, degree, span = base.expiring_kind, base.degree, base.span
    if "expiring" in raw:
        exp = raw["expiring"]
        expiring_kind = exp.get("kind", STEP)
        if expiring_kind not in EXPIRING_KINDS:
            raise _config_error("expiring.kind", f"must be one of {EXPIRING_KINDS}")
        try:
            degree = int(exp.get("degree", base.degree))
            span = int(exp.get("span", base.span))
        except (TypeError, ValueError) as err:
            raise _config_error("expiring", str(err)) from None
        if degree < 1:
            raise _config_error("expiring.degree", f"must be >= 1, got {degree}")
        if span <= 0:
            raise _config_error("expiring.span", f"must be positive, got {span}")

    anchor_mode = raw.get("anchor_mode", base.anchor_mode)
    if anchor_mode not in (SLIDING, SINCE_UPDATE):
        raise _config_error("anchor_mode", f"must be {SLIDING!r} or {SINCE_UPDATE!r}")

    thresholds = base.thresholds
    if "thresholds" in raw:
        try:
            thresholds = tuple((float(v), str(s)) for v, s in raw["thresholds"])
        except (TypeError, ValueError) as err:
            raise _config_error("thresholds", str(err)) from None
        values = [v for v, _ in thresholds]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise _config_error("thresholds", "alert values must be strictly ascending")

    granularity = (
        _parse_granularity(raw["granularity"]) if "granularity" in raw else base.granularity
    )

    rebuild_fraction = float(raw.get("rebuild_fraction", base.rebuild_fraction))
    if not 0 < rebuild_fraction <= 1:
        raise _config_error("rebuild_fraction", f"must be in (0, 1], got {rebuild_fraction}")
    decision_threshold = float(raw.get("decision_threshold", base.decision_threshold))
    if not 0 < decision_threshold <= 1:
        raise _config_error("decision_threshold", f"must be in (0, 1], got {decision_threshold}")

    challenge_cost, miss_cost_mode, fixed_miss = (
        base.challenge_cost,
        base.miss_cost_mode,
        base.fixed_miss_cost,
    )
    if "cost" in raw:
        cost = raw["cost"]
        try:
            challenge_cost = float(cost.get("challenge_cost", base.challenge_cost))
            miss_cost_mode = cost.get("miss_cost_mode", base.miss_cost_mode)
            fixed_miss = float(cost.get("fixed_miss_cost", base.fixed_miss_cost))
        except (AttributeError, TypeError, ValueError) as err:
            raise _config_error("cost", str(err)) from None
        if challenge_cost < 0:
            raise _config_error("cost.challenge_cost", "must be >= 0")
        if miss_cost_mode not in (FULL_AMOUNT, FIXED_PER_MISS):
            raise _config_error(
                "cost.miss_cost_mode", f"must be {FULL_AMOUNT!r} or {FIXED_PER_MISS!r}"
            )

    return EngineConfig(
        min_sup=min_sup,
        window=window,
        epsilon=epsilon,
        weights=weights,
        expiring_kind=expiring_kind,
        degree=degree,
        span=span,
        anchor_mode=anchor_mode,
        thresholds=thresholds,
        granularity=granularity,
        rebuild_fraction=rebuild_fraction,
        decision_threshold=decision_threshold,
        challenge_cost=challenge_cost,
        miss_cost_mode=miss_cost_mode,
        fixed_miss_cost=fixed_miss,
    )


def load_config(path: str | Path | None) -> EngineConfig:
    """Loads a JSON config file; None gives the defaults."""
    if path is None:
        return default_config()
    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"{path}: invalid JSON ({err})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)
