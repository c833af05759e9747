"""Frequent-pattern tree profiles: construction, incremental update, queries.

A profile compresses an entity's recent transactions into a prefix tree over
their frequent items.  Items are filtered against a minimum-support threshold,
ordered by descending support count (the frozen L order), and every filtered
transaction is inserted as one branch with shared prefixes accumulating
counts.  A header table keeps the frequent items in L order, each heading a
node-link chain through all tree nodes carrying that item; the newest node of
an item heads its chain, so chain traversal visits the most recently created
occurrence first.

Trees have a single-writer contract: :func:`insert_incremental` and
:func:`rebuild` must be externally serialized per entity, while read
operations may run concurrently with each other.  Trees for distinct entities
are fully independent.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import AbstractSet, Iterable, Iterator, NamedTuple, Sequence

from .core import Item, Rule
from .errors import FormatError

PROFILE_FORMAT = "fpdetect-profile"
PROFILE_VERSION = 1

# Rules with supports below five percent rarely say anything about a user's
# habits, so that is the default filtering floor.
DEFAULT_MIN_SUP = 0.05

__all__ = [
    "PROFILE_FORMAT",
    "PROFILE_VERSION",
    "DEFAULT_MIN_SUP",
    "FpNode",
    "HeaderEntry",
    "HeaderTable",
    "FpTree",
    "TreeStats",
    "support_threshold",
    "frequent_filter",
    "build",
    "insert_incremental",
    "extract_rules",
    "prefix_path",
    "rebuild",
    "needs_rebuild",
    "tree_stats",
    "path_counts",
    "structural_state",
    "to_record",
    "from_record",
]


def support_threshold(min_sup: float | Fraction, n_transactions: int) -> Fraction:
    """Occurrence count an item needs to be frequent among n transactions.

    ``min_sup`` is read as a decimal literal (0.6 means exactly 3/5) so the
    ``frequency >= min_sup * N`` comparison is exact: float rounding must not
    drop an item that sits exactly on the boundary.
    """
    frac = min_sup if isinstance(min_sup, Fraction) else Fraction(str(min_sup))
    if not 0 < frac <= 1:
        raise ValueError(f"min_sup must be in (0, 1], got {min_sup}")
    return frac * n_transactions


class FpNode:
    """One prefix-tree node: an item and how many window transactions pass here."""

    __slots__ = ("item", "count", "parent", "children", "next_same_item")

    def __init__(self, item: Item | None, parent: "FpNode | None") -> None:
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict[Item, FpNode] = {}
        self.next_same_item: FpNode | None = None

    def root_path(self) -> tuple[Item, ...]:
        """Items from the root down to this node, inclusive."""
        items: list[Item] = []
        node: FpNode | None = self
        while node is not None and node.item is not None:
            items.append(node.item)
            node = node.parent
        return tuple(reversed(items))

    def __repr__(self) -> str:
        return f"FpNode({self.item}, count={self.count})"


class HeaderEntry:
    __slots__ = ("item", "total_count", "chain_head")

    def __init__(self, item: Item, total_count: int = 0) -> None:
        self.item = item
        self.total_count = total_count
        self.chain_head: FpNode | None = None

    def chain(self) -> Iterator[FpNode]:
        """Walks the node-link chain until the null pointer is met."""
        node = self.chain_head
        while node is not None:
            yield node
            node = node.next_same_item


class HeaderTable:
    """The frequent items in L order, each heading a node-link chain."""

    def __init__(self, ordered: Iterable[tuple[Item, int]] = ()) -> None:
        self.entries: list[HeaderEntry] = []
        self._index: dict[Item, HeaderEntry] = {}
        for item, count in ordered:
            entry = HeaderEntry(item, count)
            self._index[item] = entry
            self.entries.append(entry)

    def entry(self, item: Item) -> HeaderEntry | None:
        return self._index.get(item)

    def rank(self, item: Item) -> int:
        return self.entries.index(self._index[item])

    def items_with_counts(self) -> list[tuple[Item, int]]:
        return [(e.item, e.total_count) for e in self.entries]

    def __contains__(self, item: Item) -> bool:
        return item in self._index

    def __len__(self) -> int:
        return len(self.entries)


class FpTree:
    """Per-entity behavior profile over the current transaction window."""

    def __init__(self, min_sup: float = DEFAULT_MIN_SUP, header: HeaderTable | None = None) -> None:
        support_threshold(min_sup, 1)  # validates the range
        self.min_sup = min_sup
        self.root = FpNode(None, None)
        self.header = header if header is not None else HeaderTable()
        self.total_transactions = 0
        # Occurrences of non-header items seen since the last (re)build; used
        # as the promotion trigger for rebuilds, cleared by rebuild.
        self.pending: Counter[Item] = Counter()
        self._rank = {e.item: i for i, e in enumerate(self.header.entries)}

    @property
    def frozen_order(self) -> tuple[Item, ...]:
        """The L ordering in force for insertion."""
        return tuple(e.item for e in self.header.entries)

    def rank(self, item: Item) -> int:
        return self._rank[item]

    def _insert_ordered(self, items: Sequence[Item]) -> None:
        """Inserts one branch of L-ordered header items, sharing prefixes."""
        node = self.root
        for item in items:
            child = node.children.get(item)
            if child is None:
                child = FpNode(item, node)
                node.children[item] = child
                entry = self.header.entry(item)
                assert entry is not None
                child.next_same_item = entry.chain_head
                entry.chain_head = child
            child.count += 1
            node = child

    def nodes(self) -> Iterator[FpNode]:
        """All non-root nodes in preorder (children in creation order)."""
        stack = list(reversed(list(self.root.children.values())))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children.values())))


def frequent_filter(
    transactions: Sequence[AbstractSet[Item]], min_sup: float | Fraction
) -> tuple[list[tuple[Item, int]], list[list[Item]]]:
    """First pass over a window: frequent items in L order, transactions projected.

    An item survives iff its occurrence frequency is at least
    ``min_sup * len(transactions)`` (exact arithmetic, ties survive).  L sorts
    the survivors by descending count, equal counts by item order.  Each
    returned transaction lists its surviving items in L order.
    """
    txns = [frozenset(t) for t in transactions]
    threshold = support_threshold(min_sup, len(txns))
    if not txns:
        return [], []
    counts: Counter[Item] = Counter()
    for txn in txns:
        counts.update(txn)
    order = sorted(
        ((item, c) for item, c in counts.items() if c >= threshold),
        key=lambda ic: (-ic[1], ic[0]),
    )
    rank = {item: pos for pos, (item, _) in enumerate(order)}
    filtered = [
        sorted((i for i in txn if i in rank), key=rank.__getitem__) for txn in txns
    ]
    return order, filtered


def build(
    transactions: Sequence[AbstractSet[Item]], min_sup: float | Fraction = DEFAULT_MIN_SUP
) -> FpTree:
    """Two-pass construction: pass 1 derives L, pass 2 inserts each branch."""
    order, filtered = frequent_filter(transactions, min_sup)
    tree = FpTree(float(min_sup), header=HeaderTable(order))
    tree._rank = {item: pos for pos, (item, _) in enumerate(order)}
    for items in filtered:
        tree._insert_ordered(items)
    tree.total_transactions = len(filtered)
    return tree


def insert_incremental(tree: FpTree, new_transaction: AbstractSet[Item]) -> FpTree:
    """Accumulates one new transaction into the tree under the frozen L order.

    Items outside the header are not inserted; their occurrences go to the
    pending tally so :func:`needs_rebuild` can notice a new habit forming.
    A transaction with no header items still counts toward the total.
    """
    survivors = sorted((i for i in new_transaction if i in tree.header), key=tree.rank)
    tree._insert_ordered(survivors)
    for item in survivors:
        entry = tree.header.entry(item)
        assert entry is not None
        entry.total_count += 1
    for item in new_transaction:
        if item not in tree.header:
            tree.pending[item] += 1
    tree.total_transactions += 1
    return tree


def prefix_path(node: FpNode) -> set[Item]:
    """Items on the ancestors strictly between a node and the root."""
    items: set[Item] = set()
    parent = node.parent
    while parent is not None and parent.item is not None:
        items.add(parent.item)
        parent = parent.parent
    return items


def extract_rules(tree: FpTree, item: Item) -> list[Rule]:
    """All single-consequent rules {item} -> prefix_path along the item's chain.

    Per chain node N the rule's support is N.count over the window total and
    its confidence is N.count over the item's summed chain count.  Nodes that
    are direct children of the root have an empty prefix path and emit no rule.
    """
    entry = tree.header.entry(item)
    if entry is None:
        return []
    rules = []
    for node in entry.chain():
        path = prefix_path(node)
        if not path:
            continue
        rules.append(
            Rule(
                antecedent=frozenset({item}),
                consequent=frozenset(path),
                support=Fraction(node.count, tree.total_transactions),
                confidence=Fraction(node.count, entry.total_count),
            )
        )
    return rules


def rebuild(tree: FpTree, window_transactions: Sequence[AbstractSet[Item]]) -> FpTree:
    """Full two-pass rebuild over the current window; L is recomputed and the
    pending tally starts empty."""
    return build(window_transactions, tree.min_sup)


def needs_rebuild(tree: FpTree) -> bool:
    """True when some pending item's tally has crossed the min_sup threshold."""
    if not tree.pending or tree.total_transactions == 0:
        return False
    threshold = support_threshold(tree.min_sup, tree.total_transactions)
    return any(count >= threshold for count in tree.pending.values())


class TreeStats(NamedTuple):
    node_count: int
    depth: int
    header_size: int


def tree_stats(tree: FpTree) -> TreeStats:
    """Node count (root excluded), maximum depth, and header size."""
    node_count = 0
    depth = 0
    stack: list[tuple[FpNode, int]] = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        if node.item is not None:
            node_count += 1
            depth = max(depth, d)
        stack.extend((child, d + 1) for child in node.children.values())
    return TreeStats(node_count, depth, len(tree.header))


def path_counts(tree: FpTree) -> dict[tuple[Item, ...], int]:
    """Maps every node's root path to its count; the structural fingerprint."""
    return {node.root_path(): node.count for node in tree.nodes()}


def structural_state(tree: FpTree, include_pending: bool = True):
    """A comparable snapshot of everything the persisted profile captures."""
    state = (
        tree.min_sup,
        tree.total_transactions,
        tuple(tree.header.items_with_counts()),
        tuple(sorted(path_counts(tree).items())),
    )
    if include_pending:
        state += (tuple(sorted(tree.pending.items())),)
    return state


# --------------------------------------------------------------------------
# Persistence: versioned, self-describing profile records
# --------------------------------------------------------------------------


def to_record(tree: FpTree) -> dict:
    """Serializes the tree as a plain dict (preorder node list, JSON-friendly)."""
    nodes = []
    stack: list[tuple[FpNode, int]] = [
        (child, 1) for child in reversed(list(tree.root.children.values()))
    ]
    while stack:
        node, depth = stack.pop()
        assert node.item is not None
        nodes.append([depth, node.item.attribute, node.item.value, node.count])
        stack.extend(
            (child, depth + 1) for child in reversed(list(node.children.values()))
        )
    return {
        "format": PROFILE_FORMAT,
        "version": PROFILE_VERSION,
        "min_sup": tree.min_sup,
        "total_transactions": tree.total_transactions,
        "order": [[i.attribute, i.value, c] for i, c in tree.header.items_with_counts()],
        "pending": [
            [i.attribute, i.value, c] for i, c in sorted(tree.pending.items())
        ],
        "nodes": nodes,
    }


def from_record(record: dict) -> FpTree:
    """Rebuilds a tree from :func:`to_record` output.

    Chains are re-threaded in preorder, which is a deterministic traversal of
    the same structure; chain order is not part of the persisted state.
    Structure, counts, header, frozen order and pending tally round-trip
    losslessly.
    """
    if record.get("format") != PROFILE_FORMAT:
        raise FormatError(
            f"expected a {PROFILE_FORMAT!r} record, found {record.get('format')!r}"
        )
    version = record.get("version")
    if not isinstance(version, int):
        raise FormatError(f"profile version must be an integer, found {version!r}")
    if version > PROFILE_VERSION:
        raise FormatError(
            f"profile version {version} is newer than supported version {PROFILE_VERSION}"
        )
    try:
        order = [(Item(a, v), int(c)) for a, v, c in record["order"]]
        tree = FpTree(float(record["min_sup"]), header=HeaderTable(order))
        tree._rank = {item: pos for pos, (item, _) in enumerate(order)}
        tree.total_transactions = int(record["total_transactions"])
        tree.pending = Counter({Item(a, v): int(c) for a, v, c in record["pending"]})
        raw_nodes = record["nodes"]
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(f"malformed profile record: {err}") from None

    stack: list[FpNode] = [tree.root]
    tails: dict[Item, FpNode] = {}
    for raw in raw_nodes:
        try:
            depth, attribute, value, count = raw
            depth, count = int(depth), int(count)
            item = Item(str(attribute), str(value))
        except (TypeError, ValueError) as err:
            raise FormatError(f"malformed profile node {raw!r}: {err}") from None
        if not 1 <= depth <= len(stack):
            raise FormatError(f"profile node {raw!r} has an impossible depth")
        entry = tree.header.entry(item)
        if entry is None:
            raise FormatError(f"profile node item {item} is missing from the header")
        parent = stack[depth - 1]
        if item in parent.children:
            raise FormatError(f"duplicate child {item} in profile record")
        node = FpNode(item, parent)
        node.count = count
        parent.children[item] = node
        tail = tails.get(item)
        if tail is None:
            entry.chain_head = node
        else:
            tail.next_same_item = node
        tails[item] = node
        del stack[depth:]
        stack.append(node)
    return tree
