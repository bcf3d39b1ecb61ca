"""Frequent-itemset mining with FP-Growth and association-rule extraction.

The tree is built with the classic two scans: count item supports,
prune infrequent 1-itemsets, then re-scan to grow the tree.  Rules are
single-consequent (A -> b with A = S minus {b} for each frequent
itemset S), filtered by a confidence threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class MinerConfig:
    min_support: int = 30          # absolute transaction count
    min_confidence: float = 0.5
    top_n: int = 3
    session_gap: float = 1800.0    # seconds of inactivity closing a session

    def __post_init__(self):
        if self.min_support < 1:
            raise ValueError("min_support must be at least 1")
        if not 0.0 < self.min_confidence <= 1.0:
            raise ValueError("min_confidence must be in (0, 1]")
        if self.top_n < 1:
            raise ValueError("top_n must be at least 1")


@dataclass(frozen=True)
class Rule:
    antecedent: frozenset
    consequent: str
    support: int          # support count of antecedent | {consequent}
    confidence: float


@dataclass
class RuleSet:
    itemsets: dict = field(default_factory=dict)   # frozenset -> support count
    rules: list = field(default_factory=list)
    _by_item: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self._by_item and self.rules:
            self._reindex()

    def _reindex(self):
        self._by_item = {}
        for rule in self.rules:
            anchor = min(rule.antecedent)
            self._by_item.setdefault(anchor, []).append(rule)

    def matching(self, context) -> list[Rule]:
        """Rules whose antecedent is contained in the context object set."""
        ctx = set(context)
        out = []
        for item in ctx:
            for rule in self._by_item.get(item, ()):
                if rule.antecedent <= ctx:
                    out.append(rule)
        return out


class _Node:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children = {}


def _build_tree(transactions, counts, min_support):
    order = {item: (-c, item) for item, c in counts.items() if c >= min_support}
    root = _Node(None, None)
    header: dict[str, list[_Node]] = {}
    for tx in transactions:
        items = sorted((i for i in tx if i in order), key=order.__getitem__)
        node = root
        for item in items:
            child = node.children.get(item)
            if child is None:
                child = _Node(item, node)
                node.children[item] = child
                header.setdefault(item, []).append(child)
            child.count += 1
            node = child
    return root, header, order


def _mine(header, order, min_support, suffix, out):
    # Items in reverse frequency order so conditional trees stay small.
    for item in sorted(header, key=order.__getitem__, reverse=True):
        nodes = header[item]
        support = sum(n.count for n in nodes)
        if support < min_support:
            continue
        itemset = suffix | {item}
        out[frozenset(itemset)] = support
        # Conditional pattern base: prefix paths weighted by node count.
        cond_tx = []
        cond_counts: dict[str, int] = {}
        for node in nodes:
            path = []
            cur = node.parent
            while cur is not None and cur.item is not None:
                path.append(cur.item)
                cur = cur.parent
            if path:
                cond_tx.append((path, node.count))
                for it in path:
                    cond_counts[it] = cond_counts.get(it, 0) + node.count
        kept = {it for it, c in cond_counts.items() if c >= min_support}
        if not kept:
            continue
        sub_order = {it: (-cond_counts[it], it) for it in kept}
        sub_root = _Node(None, None)
        sub_header: dict[str, list[_Node]] = {}
        for path, count in cond_tx:
            items = sorted((i for i in path if i in kept), key=sub_order.__getitem__)
            node = sub_root
            for it in items:
                child = node.children.get(it)
                if child is None:
                    child = _Node(it, node)
                    node.children[it] = child
                    sub_header.setdefault(it, []).append(child)
                child.count += count
                node = child
        _mine(sub_header, sub_order, min_support, itemset, out)


def mine_rules(transactions, cfg: MinerConfig) -> RuleSet:
    """Mine frequent itemsets and single-consequent rules.

    Itemsets and supports are exactly those a brute-force enumeration at
    the same min_support would produce.
    """
    tx = [frozenset(t) for t in transactions]
    if not tx:
        raise ValueError("transactions must be non-empty")
    counts: dict[str, int] = {}
    for t in tx:
        for item in t:
            counts[item] = counts.get(item, 0) + 1

    _, header, order = _build_tree(tx, counts, cfg.min_support)
    itemsets: dict[frozenset, int] = {}
    _mine(header, order, cfg.min_support, set(), itemsets)

    rules = []
    for itemset, support in itemsets.items():
        if len(itemset) < 2:
            continue
        for consequent in itemset:
            antecedent = itemset - {consequent}
            confidence = support / itemsets[antecedent]
            if confidence >= cfg.min_confidence:
                rules.append(Rule(antecedent, consequent, support, confidence))
    rules.sort(key=lambda r: (-r.confidence, -r.support,
                              sorted(r.antecedent), r.consequent))
    rs = RuleSet(itemsets, rules)
    rs._reindex()
    return rs


def export_rules(ruleset: RuleSet) -> str:
    """Render rules as 'antecedent|consequent|support|confidence' lines."""
    lines = []
    for r in ruleset.rules:
        ant = "&".join(sorted(r.antecedent))
        lines.append(f"{ant}|{r.consequent}|{r.support}|{r.confidence!r}")
    return "\n".join(lines)
