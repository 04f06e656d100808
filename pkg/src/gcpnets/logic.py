"""Propositional formulas over named variables, and complete assignments.

Formulas are immutable trees built from constants, variable references,
negation and n-ary conjunction/disjunction (an empty conjunction is true,
an empty disjunction is false).  Satisfiability and tautology checking are
exact: they enumerate the assignments of the variables that actually occur
in the formula, up to a configurable cap.  Formulas that are plain
conjunctions of literals take a linear fast path instead.

The concrete syntax used throughout the package is::

    identifiers   variables (``[A-Za-z_][A-Za-z0-9_]*``, except true/false)
    !f            negation
    f & g & ...   conjunction
    f | g | ...   disjunction
    ( ... )       grouping, with precedence ! > & > |
    true, false   constants
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import CapacityError, FormatError, ModelError

# Enumeration explores 2**k assignments; beyond this the check refuses.
ENUM_VAR_LIMIT = 24

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_RESERVED = frozenset({"true", "false"})


def is_valid_name(name: str) -> bool:
    return bool(_NAME_RE.match(name)) and name not in _RESERVED


class Formula:
    """Base class of formula nodes.  Instances are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, slots=True)
class Var(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Or(Formula):
    parts: tuple[Formula, ...]


class Literal(NamedTuple):
    """A variable or its negation."""

    var: str
    positive: bool

    def dual(self) -> "Literal":
        return Literal(self.var, not self.positive)

    def as_formula(self) -> Formula:
        f: Formula = Var(self.var)
        return f if self.positive else Not(f)

    def __str__(self) -> str:
        return self.var if self.positive else "!" + self.var


def parse_literal(text: str) -> Literal:
    text = text.strip()
    positive = True
    while text.startswith("!"):
        positive = not positive
        text = text[1:].strip()
    if not is_valid_name(text):
        raise FormatError(f"invalid literal {text!r}")
    return Literal(text, positive)


# ---------------------------------------------------------------------------
# Constructors that fold constants.  Used when assembling derived formulas;
# the parser keeps the tree exactly as written.

def negate(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Not):
        return f.child
    return Not(f)


def conj(parts: Iterable[Formula]) -> Formula:
    kept = []
    for p in parts:
        if isinstance(p, Const):
            if not p.value:
                return FALSE
            continue
        kept.append(p)
    if not kept:
        return TRUE
    if len(kept) == 1:
        return kept[0]
    return And(tuple(kept))


def disj(parts: Iterable[Formula]) -> Formula:
    kept = []
    for p in parts:
        if isinstance(p, Const):
            if p.value:
                return TRUE
            continue
        kept.append(p)
    if not kept:
        return FALSE
    if len(kept) == 1:
        return kept[0]
    return Or(tuple(kept))


def iff(a: Formula, b: Formula) -> Formula:
    """Biconditional, spelled out with the available connectives."""
    return Or((And((a, b)), And((negate(a), negate(b)))))


# ---------------------------------------------------------------------------
# Semantics

def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    """Truth value of ``f`` under a (possibly partial) assignment.

    Every variable occurring in ``f`` must be assigned.
    """
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Var):
        try:
            return assignment[f.name]
        except KeyError:
            raise ModelError(f"unresolved variable {f.name!r}") from None
    if isinstance(f, Not):
        return not evaluate(f.child, assignment)
    if isinstance(f, And):
        return all(evaluate(p, assignment) for p in f.parts)
    if isinstance(f, Or):
        return any(evaluate(p, assignment) for p in f.parts)
    raise TypeError(f"not a formula: {f!r}")


def variables_of(f: Formula) -> frozenset[str]:
    """The set of variable names with at least one occurrence in ``f``."""
    acc: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            acc.add(node.name)
        elif isinstance(node, Not):
            stack.append(node.child)
        elif isinstance(node, (And, Or)):
            stack.extend(node.parts)
    return frozenset(acc)


def literal_conjunction(f: Formula) -> tuple[Literal, ...] | None:
    """The literals of ``f`` if it is a conjunction of literals, else None.

    The constant true counts as the empty conjunction.  Nested connectives
    do not count, even when semantically equivalent.
    """
    if isinstance(f, Const):
        return () if f.value else None
    if isinstance(f, Var):
        return (Literal(f.name, True),)
    if isinstance(f, Not) and isinstance(f.child, Var):
        return (Literal(f.child.name, False),)
    if isinstance(f, And):
        lits = []
        for p in f.parts:
            if isinstance(p, Var):
                lits.append(Literal(p.name, True))
            elif isinstance(p, Not) and isinstance(p.child, Var):
                lits.append(Literal(p.child.name, False))
            else:
                return None
        return tuple(lits)
    return None


def is_satisfiable(f: Formula, *, var_limit: int | None = None) -> bool:
    """Exact satisfiability over the variables occurring in ``f``.

    Conjunctions of literals are decided by scanning for a complementary
    pair; everything else enumerates assignments.  Raises ``CapacityError``
    when more than ``var_limit`` (default ``ENUM_VAR_LIMIT``) variables
    occur.
    """
    lits = literal_conjunction(f)
    if lits is not None:
        seen: dict[str, bool] = {}
        for l in lits:
            if seen.setdefault(l.var, l.positive) != l.positive:
                return False
        return True
    names = sorted(variables_of(f))
    if not names:
        return evaluate(f, {})
    limit = ENUM_VAR_LIMIT if var_limit is None else var_limit
    if len(names) > limit:
        raise CapacityError(
            f"satisfiability over {len(names)} variables exceeds the "
            f"enumeration limit of {limit}"
        )
    for bits in itertools.product((False, True), repeat=len(names)):
        if evaluate(f, dict(zip(names, bits))):
            return True
    return False


def is_tautology(f: Formula, *, var_limit: int | None = None) -> bool:
    """True iff ``f`` holds under every assignment of its variables."""
    return not is_satisfiable(Not(f), var_limit=var_limit)


# ---------------------------------------------------------------------------
# Outcomes: complete assignments over an ordered variable list.

@dataclass(frozen=True)
class Outcome:
    """A complete truth assignment, in a fixed variable order.

    The packed integer ``index`` treats variable 0 as the most significant
    bit, so outcomes of an n-variable net enumerate 0 .. 2**n - 1.
    """

    variables: tuple[str, ...]
    values: tuple[bool, ...]

    def __post_init__(self):
        if len(self.variables) != len(self.values):
            raise ModelError(
                f"outcome has {len(self.values)} values for "
                f"{len(self.variables)} variables"
            )

    @classmethod
    def from_index(cls, variables: tuple[str, ...], index: int) -> "Outcome":
        n = len(variables)
        if not 0 <= index < (1 << n):
            raise ModelError(f"outcome index {index} out of range for n={n}")
        values = tuple(bool((index >> (n - 1 - i)) & 1) for i in range(n))
        return cls(variables, values)

    @classmethod
    def from_literals(
        cls, variables: tuple[str, ...], literals: Iterable[Literal]
    ) -> "Outcome":
        position = {name: i for i, name in enumerate(variables)}
        values: list[bool | None] = [None] * len(variables)
        for l in literals:
            if l.var not in position:
                raise ModelError(f"unknown outcome literal {l}")
            i = position[l.var]
            if values[i] is not None and values[i] != l.positive:
                raise ModelError(f"contradictory literals for {l.var!r}")
            values[i] = l.positive
        missing = [v for v, val in zip(variables, values) if val is None]
        if missing:
            raise ModelError(
                "outcome is not complete; missing " + ", ".join(missing)
            )
        return cls(variables, tuple(values))  # type: ignore[arg-type]

    @property
    def index(self) -> int:
        idx = 0
        for v in self.values:
            idx = (idx << 1) | int(v)
        return idx

    def value(self, var: str) -> bool:
        try:
            return self.values[self.variables.index(var)]
        except ValueError:
            raise ModelError(f"unknown variable {var!r}") from None

    def satisfies(self, literal: Literal) -> bool:
        return self.value(literal.var) == literal.positive

    def flip(self, var: str) -> "Outcome":
        i = self.variables.index(var)
        values = self.values[:i] + (not self.values[i],) + self.values[i + 1:]
        return Outcome(self.variables, values)

    def literals(self) -> tuple[Literal, ...]:
        return tuple(
            Literal(v, val) for v, val in zip(self.variables, self.values)
        )

    def assignment(self) -> dict[str, bool]:
        return dict(zip(self.variables, self.values))

    def __str__(self) -> str:
        return ",".join(str(l) for l in self.literals())


# ---------------------------------------------------------------------------
# Concrete syntax

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[!&|()]))"
)


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = text[pos:].strip()
            if not stripped:
                break
            raise FormatError(
                f"unexpected character {stripped[0]!r}", column=pos + 1
            )
        pos = m.end()
        if m.group("name"):
            yield ("name", m.group("name"), m.start("name"))
        else:
            yield ("op", m.group("op"), m.start("op"))
    yield ("end", "", len(text))


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, col = self.advance()
        if kind != "op" or value != op:
            raise FormatError(f"expected {op!r}", column=col + 1)

    def parse(self) -> Formula:
        f = self.disjunction()
        kind, value, col = self.peek()
        if kind != "end":
            raise FormatError(f"unexpected {value!r}", column=col + 1)
        return f

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek()[:2] == ("op", "|"):
            self.advance()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.factor()]
        while self.peek()[:2] == ("op", "&"):
            self.advance()
            parts.append(self.factor())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def factor(self) -> Formula:
        kind, value, col = self.peek()
        if kind == "op" and value == "!":
            self.advance()
            return Not(self.factor())
        if kind == "op" and value == "(":
            self.advance()
            f = self.disjunction()
            self.expect_op(")")
            return f
        if kind == "name":
            self.advance()
            if value == "true":
                return TRUE
            if value == "false":
                return FALSE
            return Var(value)
        raise FormatError(
            f"expected a formula, found {value!r}" if value else "unexpected end of formula",
            column=col + 1,
        )


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


# own precedence of each node kind; higher binds tighter
_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def format_formula(f: Formula) -> str:
    return _format(f, 0)


def _format(f: Formula, need: int) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Not):
        return _wrap("!" + _format(f.child, _PREC_NOT), _PREC_NOT, need)
    if isinstance(f, And):
        if not f.parts:
            return "true"
        if len(f.parts) == 1:
            return _format(f.parts[0], need)
        body = " & ".join(_format(p, _PREC_AND + 1) for p in f.parts)
        return _wrap(body, _PREC_AND, need)
    if isinstance(f, Or):
        if not f.parts:
            return "false"
        if len(f.parts) == 1:
            return _format(f.parts[0], need)
        body = " | ".join(_format(p, _PREC_OR + 1) for p in f.parts)
        return _wrap(body, _PREC_OR, need)
    raise TypeError(f"not a formula: {f!r}")


def _wrap(body: str, own: int, need: int) -> str:
    return body if own >= need else "(" + body + ")"


def fresh_name(base: str, taken: Iterable[str]) -> str:
    """A name not in ``taken``, derived from ``base`` by appending '_'."""
    taken = set(taken)
    if not is_valid_name(base):
        base = "v_" + re.sub(r"[^A-Za-z0-9_]", "_", base)
    name = base
    while name in taken:
        name += "_"
    return name
