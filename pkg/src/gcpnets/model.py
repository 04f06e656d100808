"""Generalized conditional-preference nets.

A net is a list of rules ``condition : literal > dual-literal`` over an
ordered variable list.  Per variable, the rules targeting it aggregate into
two derived formulas: the disjunction of conditions under which the
positive value is preferred, and the one for the negative value.  Local
consistency asks that the two never hold together; local completeness asks
that one of them always holds.  A net satisfying both is a complete
conditional-preference net in the classical sense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ModelError
from .logic import (
    FALSE,
    TRUE,
    And,
    Const,
    Formula,
    Literal,
    Not,
    Or,
    fresh_name,
    is_satisfiable,
    is_tautology,
    is_valid_name,
    literal_conjunction,
    variables_of,
)


@dataclass(frozen=True, slots=True)
class PreferenceRule:
    """``condition : target > dual(target)``.

    The condition must not mention the target's variable.
    """

    condition: Formula
    target: Literal

    def __str__(self) -> str:
        return f"{self.condition} : {self.target} > {self.target.dual()}"


@dataclass(frozen=True)
class GcpNet:
    """An immutable rule set over an ordered variable list.

    The per-variable aggregated flip conditions and the conjunctive-form
    flag are computed once at construction and shared by every query.
    """

    variables: tuple[str, ...]
    rules: tuple[PreferenceRule, ...]
    conjunctive_form: bool = field(init=False, compare=False, repr=False)
    _position: dict = field(init=False, compare=False, repr=False)
    _positive: dict = field(init=False, compare=False, repr=False)
    _negative: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        rules = tuple(self.rules)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rules", rules)

        seen = set()
        for v in variables:
            if not is_valid_name(v):
                raise ModelError(f"invalid variable name {v!r}")
            if v in seen:
                raise ModelError(f"duplicate variable {v!r}")
            seen.add(v)
        position = {v: i for i, v in enumerate(variables)}

        pos_parts: dict[str, list[Formula]] = {v: [] for v in variables}
        neg_parts: dict[str, list[Formula]] = {v: [] for v in variables}
        conjunctive = True
        for rule in rules:
            tvar = rule.target.var
            if tvar not in position:
                raise ModelError(f"rule targets undeclared variable {tvar!r}")
            cond_vars = variables_of(rule.condition)
            undeclared = cond_vars - seen
            if undeclared:
                raise ModelError(
                    "rule condition mentions undeclared variable(s) "
                    + ", ".join(sorted(undeclared))
                )
            if tvar in cond_vars:
                raise ModelError(
                    f"rule condition for {tvar!r} mentions its own target variable"
                )
            if literal_conjunction(rule.condition) is None:
                conjunctive = False
            (pos_parts if rule.target.positive else neg_parts)[tvar].append(
                rule.condition
            )

        positive = {
            v: (parts[0] if len(parts) == 1 else Or(tuple(parts)) if parts else FALSE)
            for v, parts in pos_parts.items()
        }
        negative = {
            v: (parts[0] if len(parts) == 1 else Or(tuple(parts)) if parts else FALSE)
            for v, parts in neg_parts.items()
        }
        object.__setattr__(self, "conjunctive_form", conjunctive)
        object.__setattr__(self, "_position", position)
        object.__setattr__(self, "_positive", positive)
        object.__setattr__(self, "_negative", negative)

    @property
    def size(self) -> int:
        return len(self.variables)

    def index_of(self, var: str) -> int:
        try:
            return self._position[var]
        except KeyError:
            raise ModelError(f"unknown variable {var!r}") from None

    def positive_condition(self, var: str) -> Formula:
        self.index_of(var)
        return self._positive[var]

    def negative_condition(self, var: str) -> Formula:
        self.index_of(var)
        return self._negative[var]


def build_net(variables, rules) -> GcpNet:
    """Validate and construct a net; see ``GcpNet`` for the invariants."""
    return GcpNet(tuple(variables), tuple(rules))


def aggregate_conditions(net: GcpNet, var: str) -> tuple[Formula, Formula]:
    """The (positive, negative) aggregated flip conditions for ``var``."""
    return net.positive_condition(var), net.negative_condition(var)


@dataclass(frozen=True)
class DependencyGraph:
    """Directed variable dependencies: edge (y, x) iff y occurs in one of
    x's aggregated flip conditions."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]


def dependency_graph(net: GcpNet) -> DependencyGraph:
    edges = []
    for x in net.variables:
        pos, neg = aggregate_conditions(net, x)
        mentioned = variables_of(pos) | variables_of(neg)
        for y in mentioned:
            edges.append((y, x))
    edges.sort(key=lambda e: (net.index_of(e[0]), net.index_of(e[1])))
    return DependencyGraph(net.variables, tuple(edges))


def _conjunctive_pair_satisfiable(pos: Formula, neg: Formula) -> bool:
    """Satisfiability of pos & neg when both are disjunctions of literal
    conjunctions: some pair of disjuncts must be jointly consistent."""

    def disjuncts(f: Formula) -> list[tuple[Literal, ...]]:
        if isinstance(f, Const) and not f.value:
            return []
        parts = f.parts if isinstance(f, Or) else (f,)
        out = []
        for p in parts:
            lits = literal_conjunction(p)
            if lits is None:
                raise ModelError("aggregate is not in conjunctive form")
            out.append(lits)
        return out

    for a in disjuncts(pos):
        for b in disjuncts(neg):
            seen: dict[str, bool] = {}
            ok = True
            for l in a + b:
                if seen.setdefault(l.var, l.positive) != l.positive:
                    ok = False
                    break
            if ok:
                return True
    return False


def is_locally_consistent(net: GcpNet, *, var_limit: int | None = None) -> bool:
    """No variable's positive and negative flip conditions can hold at once."""
    for x in net.variables:
        pos, neg = aggregate_conditions(net, x)
        if net.conjunctive_form:
            if _conjunctive_pair_satisfiable(pos, neg):
                return False
        elif is_satisfiable(And((pos, neg)), var_limit=var_limit):
            return False
    return True


def is_locally_complete(net: GcpNet, *, var_limit: int | None = None) -> bool:
    """Every variable has a preferred value in every outcome."""
    for x in net.variables:
        pos, neg = aggregate_conditions(net, x)
        if not is_tautology(Or((pos, neg)), var_limit=var_limit):
            return False
    return True


def is_cpnet(net: GcpNet, *, var_limit: int | None = None) -> bool:
    """Locally consistent and locally complete."""
    return is_locally_consistent(net, var_limit=var_limit) and is_locally_complete(
        net, var_limit=var_limit
    )


def cpnet_from_formula(formula: Formula) -> GcpNet:
    """A net that is a complete CP-net exactly when ``formula`` is
    unsatisfiable.

    Over the formula's variables plus one fresh variable z: every original
    variable unconditionally prefers true, and z prefers true exactly where
    the formula fails.  Local consistency always holds; local completeness
    holds iff the negated formula is a tautology.
    """
    base = tuple(sorted(variables_of(formula)))
    z = fresh_name("z", base)
    rules = [PreferenceRule(TRUE, Literal(x, True)) for x in base]
    rules.append(PreferenceRule(Not(formula), Literal(z, True)))
    return build_net(base + (z,), rules)
