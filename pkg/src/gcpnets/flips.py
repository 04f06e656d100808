"""Improving-flip semantics over a net's outcome space.

An improving flip changes one variable to its preferred value, as
sanctioned by a rule whose condition holds.  One outcome dominates another
when a nonempty chain of improving flips leads from the second to the
first; a net is consistent when no outcome dominates itself, i.e. when the
flip graph is acyclic.

Dominance and consistency queries walk the flip graph implicitly with
packed-integer outcomes (variable 0 is the most significant bit).  The
materialized path builds the whole graph at once with vectorized numpy
masks and condenses it into strongly connected components (the dominance
classes) with scipy, which keeps nets with a million outcomes tractable.
Outputs are deterministic: outcomes ascend by index, classes ascend by
their smallest member.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapacityError, ModelError
from .logic import (
    And,
    Const,
    Formula,
    Not,
    Or,
    Outcome,
    Var,
    literal_conjunction,
)
from .model import GcpNet, PreferenceRule

# Implicit-graph searches (dominance, consistency) tolerate up to 2**26
# states; materializing the full graph is capped lower because it stores
# every edge.
SEARCH_VAR_LIMIT = 26
MATERIALIZE_VAR_LIMIT = 20


@dataclass(frozen=True)
class Flip:
    """A single improving flip: ``rule`` applied at ``source``."""

    rule_index: int
    rule: PreferenceRule
    source: Outcome
    target: Outcome


class _CompiledRule(NamedTuple):
    rule_index: int
    rule: PreferenceRule
    bit: int          # bit position of the target variable
    want: int         # target bit value after the flip
    holds: Callable[[int], bool]


def _predicate(f: Formula, bit_of: dict[str, int]) -> Callable[[int], bool]:
    lits = literal_conjunction(f)
    if lits is not None:
        mask = 0
        value = 0
        for l in lits:
            b = 1 << bit_of[l.var]
            want = b if l.positive else 0
            if mask & b and (value & b) != want:
                return lambda idx: False  # contradictory conjunction
            mask |= b
            value |= want
        return lambda idx, m=mask, v=value: (idx & m) == v
    if isinstance(f, Const):
        return (lambda idx: True) if f.value else (lambda idx: False)
    if isinstance(f, Var):
        b = bit_of[f.name]
        return lambda idx: (idx >> b) & 1 == 1
    if isinstance(f, Not):
        g = _predicate(f.child, bit_of)
        return lambda idx: not g(idx)
    if isinstance(f, And):
        gs = [_predicate(p, bit_of) for p in f.parts]
        return lambda idx: all(g(idx) for g in gs)
    if isinstance(f, Or):
        gs = [_predicate(p, bit_of) for p in f.parts]
        return lambda idx: any(g(idx) for g in gs)
    raise TypeError(f"not a formula: {f!r}")


def _compile(net: GcpNet) -> list[_CompiledRule]:
    """Rules in (target variable index, rule index) order, with integer
    predicates for the conditions."""
    n = net.size
    bit_of = {v: n - 1 - i for i, v in enumerate(net.variables)}
    compiled = []
    for rule_index, rule in enumerate(net.rules):
        compiled.append(
            _CompiledRule(
                rule_index,
                rule,
                bit_of[rule.target.var],
                int(rule.target.positive),
                _predicate(rule.condition, bit_of),
            )
        )
    compiled.sort(key=lambda c: (net.index_of(c.rule.target.var), c.rule_index))
    return compiled


def _successors(compiled, idx: int) -> list[tuple[int, int]]:
    out = []
    for c in compiled:
        if (idx >> c.bit) & 1 != c.want and c.holds(idx):
            out.append((idx ^ (1 << c.bit), c.rule_index))
    return out


def _check_outcome(net: GcpNet, outcome: Outcome) -> int:
    if outcome.variables != net.variables:
        raise ModelError(
            "outcome variables do not match the net "
            f"({outcome.variables} vs {net.variables})"
        )
    return outcome.index


def _check_limit(net: GcpNet, limit_n: int | None, default: int, what: str) -> int:
    limit = default if limit_n is None else limit_n
    if net.size > limit:
        raise CapacityError(
            f"{what} over {net.size} variables exceeds the limit of {limit}"
        )
    return net.size


def improving_flips(net: GcpNet, outcome: Outcome) -> tuple[Flip, ...]:
    """All improving flips applicable at ``outcome``, ordered by
    (target variable index, rule index)."""
    idx = _check_outcome(net, outcome)
    flips = []
    for c in _compile(net):
        if (idx >> c.bit) & 1 != c.want and c.holds(idx):
            flips.append(
                Flip(
                    c.rule_index,
                    c.rule,
                    outcome,
                    Outcome.from_index(net.variables, idx ^ (1 << c.bit)),
                )
            )
    return tuple(flips)


def _search(
    net: GcpNet,
    start: int,
    goal: int,
    *,
    limit_n: int | None,
    want_path: bool,
) -> list[int] | None:
    """Breadth-first search for a nonempty flip chain start -> goal.

    Returns the index path (including both endpoints) or None.  The
    nonemptiness requirement means start == goal demands a genuine cycle.
    """
    n = _check_limit(net, limit_n, SEARCH_VAR_LIMIT, "dominance search")
    compiled = _compile(net)
    size = 1 << n
    visited = bytearray(size)
    parents: dict[int, int] = {}
    queue: deque[int] = deque()
    for nxt, _rule in _successors(compiled, start):
        if not visited[nxt]:
            visited[nxt] = 1
            if want_path:
                parents[nxt] = start
            if nxt == goal:
                return _unwind(parents, start, goal) if want_path else [start, goal]
            queue.append(nxt)
    while queue:
        cur = queue.popleft()
        for nxt, _rule in _successors(compiled, cur):
            if visited[nxt]:
                continue
            visited[nxt] = 1
            if want_path:
                parents[nxt] = cur
            if nxt == goal:
                return _unwind(parents, start, goal) if want_path else [start, goal]
            queue.append(nxt)
    return None


def _unwind(parents: dict[int, int], start: int, goal: int) -> list[int]:
    path = [goal]
    cur = goal
    while cur != start or len(path) == 1:
        cur = parents[cur]
        path.append(cur)
    path.reverse()
    return path


def dominates(
    net: GcpNet, alpha: Outcome, beta: Outcome, *, limit_n: int | None = None
) -> bool:
    """True iff ``beta`` dominates ``alpha``: a nonempty improving-flip
    chain leads from ``alpha`` to ``beta``."""
    a = _check_outcome(net, alpha)
    b = _check_outcome(net, beta)
    return _search(net, a, b, limit_n=limit_n, want_path=False) is not None


def improving_sequence(
    net: GcpNet, alpha: Outcome, beta: Outcome, *, limit_n: int | None = None
) -> list[Outcome] | None:
    """A shortest improving sequence from ``alpha`` to ``beta`` (both ends
    included), or None when ``beta`` does not dominate ``alpha``."""
    a = _check_outcome(net, alpha)
    b = _check_outcome(net, beta)
    path = _search(net, a, b, limit_n=limit_n, want_path=True)
    if path is None:
        return None
    return [Outcome.from_index(net.variables, i) for i in path]


def self_dominates(
    net: GcpNet, alpha: Outcome, *, limit_n: int | None = None
) -> bool:
    """True iff ``alpha`` lies on a dominance cycle."""
    return dominates(net, alpha, alpha, limit_n=limit_n)


class Relation(Enum):
    """Pairwise classification of two outcomes under dominance."""

    EQUIVALENT = "equivalent"
    ALPHA_STRICTLY_DOMINATES = "alpha-strictly-dominates"
    BETA_STRICTLY_DOMINATES = "beta-strictly-dominates"
    INCOMPARABLE = "incomparable"


def relation(
    net: GcpNet, alpha: Outcome, beta: Outcome, *, limit_n: int | None = None
) -> Relation:
    """Classify the pair: equal or mutually dominating outcomes are
    equivalent; one-sided dominance is strict; otherwise incomparable."""
    if _check_outcome(net, alpha) == _check_outcome(net, beta):
        return Relation.EQUIVALENT
    alpha_reaches_beta = dominates(net, alpha, beta, limit_n=limit_n)
    beta_reaches_alpha = dominates(net, beta, alpha, limit_n=limit_n)
    if alpha_reaches_beta and beta_reaches_alpha:
        return Relation.EQUIVALENT
    if beta_reaches_alpha:
        return Relation.ALPHA_STRICTLY_DOMINATES
    if alpha_reaches_beta:
        return Relation.BETA_STRICTLY_DOMINATES
    return Relation.INCOMPARABLE


def dominance_cycle(
    net: GcpNet, *, limit_n: int | None = None
) -> list[Outcome] | None:
    """Some improving-flip cycle (first outcome repeated last), or None
    when the net is consistent.  Depth-first over the implicit graph."""
    n = _check_limit(net, limit_n, SEARCH_VAR_LIMIT, "consistency check")
    compiled = _compile(net)
    size = 1 << n
    colors = bytearray(size)  # 0 unvisited, 1 on stack, 2 done
    for root in range(size):
        if colors[root]:
            continue
        colors[root] = 1
        path = [root]
        stack = [iter(_successors(compiled, root))]
        while stack:
            advanced = False
            for nxt, _rule in stack[-1]:
                if colors[nxt] == 0:
                    colors[nxt] = 1
                    path.append(nxt)
                    stack.append(iter(_successors(compiled, nxt)))
                    advanced = True
                    break
                if colors[nxt] == 1:
                    cycle = path[path.index(nxt):] + [nxt]
                    return [Outcome.from_index(net.variables, i) for i in cycle]
            if not advanced:
                colors[path.pop()] = 2
                stack.pop()
    return None


def is_consistent(
    net: GcpNet, *, method: str = "implicit", limit_n: int | None = None
) -> bool:
    """True iff the flip graph is acyclic.

    ``method="implicit"`` runs depth-first cycle detection without storing
    edges; ``method="materialized"`` builds the graph and checks that every
    dominance class is a singleton.
    """
    if method == "implicit":
        return dominance_cycle(net, limit_n=limit_n) is None
    if method == "materialized":
        return dominance_classes(net, limit_n=limit_n).is_all_singleton
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Materialized flip graph and its condensation


def _truth_vector(
    f: Formula, bit_of: dict[str, int], idx: np.ndarray
) -> np.ndarray:
    if isinstance(f, Const):
        return np.full(idx.shape, f.value, dtype=bool)
    if isinstance(f, Var):
        return ((idx >> bit_of[f.name]) & 1).astype(bool)
    if isinstance(f, Not):
        return ~_truth_vector(f.child, bit_of, idx)
    if isinstance(f, And):
        acc = np.ones(idx.shape, dtype=bool)
        for p in f.parts:
            acc &= _truth_vector(p, bit_of, idx)
        return acc
    if isinstance(f, Or):
        acc = np.zeros(idx.shape, dtype=bool)
        for p in f.parts:
            acc |= _truth_vector(p, bit_of, idx)
        return acc
    raise TypeError(f"not a formula: {f!r}")


@dataclass
class FlipDigraph:
    """The materialized flip graph in compressed sparse row form.

    ``indptr``/``targets`` index successors per outcome; parallel
    ``rule_ids`` record the sanctioning rule of each edge.  Edges are
    ordered by (source, target variable index, rule index).
    """

    net: GcpNet
    indptr: np.ndarray
    targets: np.ndarray
    rule_ids: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.indptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self.targets)

    def successors(self, idx: int) -> np.ndarray:
        return self.targets[self.indptr[idx]:self.indptr[idx + 1]]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for src in range(self.num_nodes):
            lo, hi = self.indptr[src], self.indptr[src + 1]
            for k in range(lo, hi):
                yield src, int(self.targets[k]), int(self.rule_ids[k])


def flip_digraph(net: GcpNet, *, limit_n: int | None = None) -> FlipDigraph:
    """Materialize every improving flip of the net."""
    n = _check_limit(net, limit_n, MATERIALIZE_VAR_LIMIT, "flip graph")
    size = 1 << n
    bit_of = {v: n - 1 - i for i, v in enumerate(net.variables)}
    idx = np.arange(size, dtype=np.int64)

    src_parts, dst_parts, order_parts, rule_parts = [], [], [], []
    for order, c in enumerate(_compile(net)):
        applicable = _truth_vector(c.rule.condition, bit_of, idx)
        applicable &= ((idx >> c.bit) & 1) != c.want
        src = idx[applicable]
        if len(src) == 0:
            continue
        src_parts.append(src)
        dst_parts.append(src ^ (1 << c.bit))
        order_parts.append(np.full(len(src), order, dtype=np.int32))
        rule_parts.append(np.full(len(src), c.rule_index, dtype=np.int32))

    if src_parts:
        src = np.concatenate(src_parts)
        dst = np.concatenate(dst_parts)
        order = np.concatenate(order_parts)
        rules = np.concatenate(rule_parts)
        perm = np.lexsort((order, src))
        src, dst, rules = src[perm], dst[perm], rules[perm]
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)
        rules = np.empty(0, dtype=np.int32)

    indptr = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=size), out=indptr[1:])
    return FlipDigraph(net, indptr, dst, rules)


@dataclass
class Condensation:
    """Dominance classes (strongly connected components of the flip graph)
    and the strict order between them.

    Classes are numbered by ascending smallest member; ``class_edges``
    holds the direct, deduplicated between-class edges of the quotient
    graph, whose reachability is the class order.
    """

    net: GcpNet
    labels: np.ndarray       # class id per outcome index
    sizes: np.ndarray        # members per class
    class_min: np.ndarray    # smallest member index per class
    class_edges: np.ndarray  # (k, 2) array of distinct quotient edges

    def __post_init__(self):
        self._member_order = np.argsort(self.labels, kind="stable")
        self._boundaries = np.zeros(self.num_classes + 1, dtype=np.int64)
        np.cumsum(self.sizes, out=self._boundaries[1:])
        self._out_degree = np.bincount(
            self.class_edges[:, 0], minlength=self.num_classes
        )
        self._adjacency: dict[int, list[int]] | None = None

    @property
    def num_nodes(self) -> int:
        return len(self.labels)

    @property
    def num_classes(self) -> int:
        return len(self.sizes)

    @property
    def is_all_singleton(self) -> bool:
        return self.num_classes == self.num_nodes

    def class_of(self, outcome: Outcome) -> int:
        return int(self.labels[_check_outcome(self.net, outcome)])

    def members(self, class_id: int) -> np.ndarray:
        lo, hi = self._boundaries[class_id], self._boundaries[class_id + 1]
        return self._member_order[lo:hi]

    def member_outcomes(self, class_id: int) -> tuple[Outcome, ...]:
        return tuple(
            Outcome.from_index(self.net.variables, int(i))
            for i in self.members(class_id)
        )

    def maximal_class_ids(self) -> tuple[int, ...]:
        """Classes with nothing above them in the class order."""
        return tuple(int(c) for c in np.flatnonzero(self._out_degree == 0))

    def dominating_class_id(self) -> int | None:
        """The class below which every other class lies, if it exists.

        In a finite quotient graph every class reaches some maximal class,
        so a dominating class exists exactly when the maximal class is
        unique.
        """
        maximal = self.maximal_class_ids()
        return maximal[0] if len(maximal) == 1 else None

    def strictly_below(self, a: int, b: int) -> bool:
        """Class order query: a is strictly below b (a's members are
        dominated by b's)."""
        if a == b:
            return False
        if self._adjacency is None:
            adj: dict[int, list[int]] = {}
            for u, v in self.class_edges.tolist():
                adj.setdefault(u, []).append(v)
            self._adjacency = adj
        seen = {a}
        queue = deque([a])
        while queue:
            cur = queue.popleft()
            for nxt in self._adjacency.get(cur, ()):
                if nxt == b:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return False


def dominance_classes(
    net: GcpNet, *, limit_n: int | None = None
) -> Condensation:
    """Partition the outcome space into dominance classes."""
    graph = flip_digraph(net, limit_n=limit_n)
    size = graph.num_nodes
    matrix = csr_matrix(
        (np.ones(graph.num_edges, dtype=np.int8), graph.targets, graph.indptr),
        shape=(size, size),
    )
    _, raw = connected_components(matrix, directed=True, connection="strong")

    num_classes = int(raw.max()) + 1 if size else 0
    first = np.full(num_classes, size, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(size, dtype=np.int64))
    order = np.argsort(first)
    rank = np.empty(num_classes, dtype=np.int64)
    rank[order] = np.arange(num_classes, dtype=np.int64)
    labels = rank[raw]
    class_min = first[order]
    sizes = np.bincount(labels, minlength=num_classes)

    src = np.repeat(np.arange(size, dtype=np.int64), np.diff(graph.indptr))
    a = labels[src]
    b = labels[graph.targets]
    cross = a != b
    if cross.any():
        key = a[cross] * num_classes + b[cross]
        uniq = np.unique(key)
        class_edges = np.stack([uniq // num_classes, uniq % num_classes], axis=1)
    else:
        class_edges = np.empty((0, 2), dtype=np.int64)

    return Condensation(net, labels, sizes, class_min, class_edges)


@dataclass(frozen=True)
class OptimalityFlags:
    """Where an outcome sits in the optimality taxonomy."""

    weakly_non_dominated: bool
    non_dominated: bool
    dominating: bool
    strongly_dominating: bool


def _classify(cond: Condensation, class_id: int) -> OptimalityFlags:
    maximal = cond._out_degree[class_id] == 0
    singleton = cond.sizes[class_id] == 1
    dominating = maximal and len(cond.maximal_class_ids()) == 1
    return OptimalityFlags(
        weakly_non_dominated=bool(maximal),
        non_dominated=bool(maximal and singleton),
        dominating=bool(dominating),
        strongly_dominating=bool(dominating and singleton),
    )


def classify_outcome(
    net: GcpNet, alpha: Outcome, *, limit_n: int | None = None
) -> OptimalityFlags:
    """Optimality flags of ``alpha``: weakly non-dominated iff its class is
    maximal; non-dominated iff additionally a singleton; dominating iff
    every other class lies below; strongly dominating iff both."""
    cond = dominance_classes(net, limit_n=limit_n)
    return _classify(cond, cond.class_of(alpha))


def is_non_dominated_local(net: GcpNet, alpha: Outcome) -> bool:
    """Polynomial check: an outcome is non-dominated exactly when no
    improving flip applies to it."""
    idx = _check_outcome(net, alpha)
    for c in _compile(net):
        if (idx >> c.bit) & 1 != c.want and c.holds(idx):
            return False
    return True


@dataclass(frozen=True)
class OptimaReport:
    """All optimal outcomes of a net, by flavour, ascending by index."""

    weakly_non_dominated: tuple[Outcome, ...]
    non_dominated: tuple[Outcome, ...]
    dominating: tuple[Outcome, ...]
    strongly_dominating: tuple[Outcome, ...]

    @property
    def has_weakly_non_dominated(self) -> bool:
        return bool(self.weakly_non_dominated)

    @property
    def has_non_dominated(self) -> bool:
        return bool(self.non_dominated)

    @property
    def has_dominating(self) -> bool:
        return bool(self.dominating)

    @property
    def has_strongly_dominating(self) -> bool:
        return bool(self.strongly_dominating)


def find_optima(net: GcpNet, *, limit_n: int | None = None) -> OptimaReport:
    """Compute the four optimal-outcome sets from the condensation."""
    cond = dominance_classes(net, limit_n=limit_n)
    maximal = cond.maximal_class_ids()

    def outcomes(indices: list[int]) -> tuple[Outcome, ...]:
        return tuple(
            Outcome.from_index(net.variables, int(i)) for i in sorted(indices)
        )

    weakly: list[int] = []
    non_dom: list[int] = []
    for cid in maximal:
        members = cond.members(cid).tolist()
        weakly.extend(members)
        if len(members) == 1:
            non_dom.extend(members)
    dom_class = cond.dominating_class_id()
    dominating = cond.members(dom_class).tolist() if dom_class is not None else []
    strongly = dominating if dominating and len(dominating) == 1 else []

    report = OptimaReport(
        outcomes(weakly), outcomes(non_dom), outcomes(dominating), outcomes(strongly)
    )
    if cond.is_all_singleton:
        # On consistent nets the taxonomy collapses pairwise; fail loudly
        # if the computed sets ever disagree with that.
        if (
            report.weakly_non_dominated != report.non_dominated
            or report.dominating != report.strongly_dominating
        ):
            raise AssertionError("optimality sets inconsistent on an acyclic net")
    return report
