"""Propositional planning with complete states and complete goals.

Actions carry a conjunction of precondition literals and a conjunction of
effect literals.  An action applied where its precondition fails leaves
the state unchanged; plan search only expands state-changing applications,
so found plans are irreducible (every step changes the state).  Action
sets are acyclic when no state can return to itself through a nonempty
irreducible plan.

States reuse ``Outcome`` (same packed-integer encoding); searches are
breadth-first or depth-first over the implicit state graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import CapacityError, ModelError
from .logic import Literal, Outcome, is_valid_name

State = Outcome

SEARCH_VAR_LIMIT = 26


def _dedupe(literals: Iterable[Literal], what: str) -> tuple[Literal, ...]:
    seen: dict[str, bool] = {}
    out: list[Literal] = []
    for l in literals:
        if l.var in seen:
            if seen[l.var] != l.positive:
                raise ModelError(f"{what} contains complementary literals for {l.var!r}")
            continue
        seen[l.var] = l.positive
        out.append(l)
    return tuple(out)


@dataclass(frozen=True)
class Action:
    """A named action with consistent precondition and effect literal sets."""

    name: str
    pre: tuple[Literal, ...]
    post: tuple[Literal, ...]

    def __post_init__(self):
        if not is_valid_name(self.name):
            raise ModelError(f"invalid action name {self.name!r}")
        object.__setattr__(self, "pre", _dedupe(self.pre, f"pre({self.name})"))
        object.__setattr__(self, "post", _dedupe(self.post, f"post({self.name})"))


def normalize_actions(actions: Iterable[Action]) -> tuple[Action, ...]:
    """Drop effect literals already guaranteed by the precondition, and
    actions whose effect thereby becomes empty (they never change a state)."""
    out = []
    for a in actions:
        pre = set(a.pre)
        post = tuple(l for l in a.post if l not in pre)
        if post:
            out.append(Action(a.name, a.pre, post))
    return tuple(out)


@dataclass(frozen=True)
class StripsInstance:
    """Variables, initial state, complete goal state, and action set."""

    variables: tuple[str, ...]
    initial: State
    goal: State
    actions: tuple[Action, ...]

    def __post_init__(self):
        declared = set(self.variables)
        if len(declared) != len(self.variables):
            raise ModelError("duplicate variables")
        for label, state in (("initial", self.initial), ("goal", self.goal)):
            if state.variables != self.variables:
                raise ModelError(f"{label} state is not over the declared variables")
        names = set()
        for a in self.actions:
            if a.name in names:
                raise ModelError(f"duplicate action name {a.name!r}")
            names.add(a.name)
            for l in a.pre + a.post:
                if l.var not in declared:
                    raise ModelError(
                        f"action {a.name!r} mentions undeclared variable {l.var!r}"
                    )

    def action(self, name: str) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise ModelError(f"unknown action {name!r}")


def build_instance(
    variables,
    initial: State,
    goal: State,
    actions: Iterable[Action],
    *,
    normalize: bool = True,
) -> StripsInstance:
    actions = tuple(actions)
    if normalize:
        actions = normalize_actions(actions)
    return StripsInstance(tuple(variables), initial, goal, actions)


def effect(action: Action, state: State) -> State:
    """The successor state: unchanged unless the precondition holds, in
    which case the effect literals are imposed."""
    for l in action.pre:
        if not state.satisfies(l):
            return state
    values = list(state.values)
    position = {v: i for i, v in enumerate(state.variables)}
    for l in action.post:
        if l.var not in position:
            raise ModelError(f"action mentions undeclared variable {l.var!r}")
        values[position[l.var]] = l.positive
    return Outcome(state.variables, tuple(values))


class _CompiledAction(NamedTuple):
    name: str
    pre_mask: int
    pre_value: int
    post_mask: int
    post_value: int

    def apply(self, idx: int) -> int:
        if (idx & self.pre_mask) != self.pre_value:
            return idx
        return (idx & ~self.post_mask) | self.post_value


def _compile(actions: Sequence[Action], variables: tuple[str, ...]):
    n = len(variables)
    bit_of = {v: n - 1 - i for i, v in enumerate(variables)}
    compiled = []
    for a in actions:
        pre_mask = pre_value = post_mask = post_value = 0
        for l in a.pre:
            b = 1 << bit_of[l.var]
            pre_mask |= b
            if l.positive:
                pre_value |= b
        for l in a.post:
            b = 1 << bit_of[l.var]
            post_mask |= b
            if l.positive:
                post_value |= b
        compiled.append(
            _CompiledAction(a.name, pre_mask, pre_value, post_mask, post_value)
        )
    return compiled


@dataclass(frozen=True)
class PlanExecution:
    """The state trace of a plan, with goal and irreducibility verdicts."""

    trace: tuple[State, ...]
    reaches_goal: bool
    irreducible: bool


def execute_plan(inst: StripsInstance, plan: Sequence[str]) -> PlanExecution:
    """Apply the named actions in order from the initial state."""
    trace = [inst.initial]
    irreducible = True
    for name in plan:
        action = inst.action(name)
        nxt = effect(action, trace[-1])
        if nxt == trace[-1]:
            irreducible = False
        trace.append(nxt)
    return PlanExecution(tuple(trace), trace[-1] == inst.goal, irreducible)


def _check_limit(n: int, limit_n: int | None, what: str) -> None:
    limit = SEARCH_VAR_LIMIT if limit_n is None else limit_n
    if n > limit:
        raise CapacityError(
            f"{what} over {n} variables exceeds the limit of {limit}"
        )


def plan_exists(
    inst: StripsInstance, *, limit_n: int | None = None
) -> tuple[str, ...] | None:
    """A shortest plan from the initial state to the goal, or None.

    Breadth-first over state-changing applications only, so the returned
    plan is irreducible; initial == goal yields the empty plan.
    """
    n = len(inst.variables)
    _check_limit(n, limit_n, "plan search")
    start = inst.initial.index
    goal = inst.goal.index
    if start == goal:
        return ()
    compiled = _compile(inst.actions, inst.variables)
    visited = bytearray(1 << n)
    visited[start] = 1
    parents: dict[int, tuple[int, str]] = {}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for c in compiled:
            nxt = c.apply(cur)
            if nxt == cur or visited[nxt]:
                continue
            visited[nxt] = 1
            parents[nxt] = (cur, c.name)
            if nxt == goal:
                plan = []
                node = goal
                while node != start:
                    node, name = parents[node]
                    plan.append(name)
                plan.reverse()
                return tuple(plan)
            queue.append(nxt)
    return None


def nonempty_plan_exists(
    inst: StripsInstance, *, limit_n: int | None = None
) -> bool:
    """Whether a nonempty irreducible plan reaches the goal.

    Differs from ``plan_exists`` only when initial == goal, where it asks
    for a state-changing round trip instead of the empty plan.
    """
    if inst.initial != inst.goal:
        return plan_exists(inst, limit_n=limit_n) is not None
    n = len(inst.variables)
    _check_limit(n, limit_n, "plan search")
    compiled = _compile(inst.actions, inst.variables)
    start = inst.initial.index
    for c in compiled:
        step = c.apply(start)
        if step == start:
            continue
        leg = build_instance(
            inst.variables,
            Outcome.from_index(inst.variables, step),
            inst.goal,
            inst.actions,
            normalize=False,
        )
        if plan_exists(leg, limit_n=limit_n) is not None:
            return True
    return False


def is_acyclic(
    actions: Iterable[Action],
    variables,
    *,
    limit_n: int | None = None,
) -> bool:
    """True iff no state can reach itself through state-changing actions.

    Depth-first cycle detection over the full state graph, from every
    start state.
    """
    variables = tuple(variables)
    n = len(variables)
    _check_limit(n, limit_n, "acyclicity check")
    compiled = _compile(tuple(actions), variables)
    size = 1 << n
    colors = bytearray(size)  # 0 unvisited, 1 on stack, 2 done

    def successors(idx: int) -> list[int]:
        return [nxt for c in compiled if (nxt := c.apply(idx)) != idx]

    for root in range(size):
        if colors[root]:
            continue
        colors[root] = 1
        path = [root]
        stack = [iter(successors(root))]
        while stack:
            advanced = False
            for nxt in stack[-1]:
                if colors[nxt] == 0:
                    colors[nxt] = 1
                    path.append(nxt)
                    stack.append(iter(successors(nxt)))
                    advanced = True
                    break
                if colors[nxt] == 1:
                    return False
            if not advanced:
                colors[path.pop()] = 2
                stack.pop()
    return True
