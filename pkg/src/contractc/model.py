"""Abstract syntax shared by the whole toolchain.

Contexts declare the semantic types (enum sets, function types, constructor
sets).  Contracts pair a node's typed input/output vectors and topic bindings
with assume/guarantee formulas.  Composition produces obligations (premise
implications) and derived properties (assumption implies eventual guarantee).

Everything here is immutable; values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

# ---------------------------------------------------------------------------
# Types

REAL = "REAL"
NATURAL = "NATURAL"
BOOL = "BOOL"
BASE_TYPES = (REAL, NATURAL, BOOL)


@dataclass(frozen=True)
class EnumSet:
    members: tuple[str, ...]


@dataclass(frozen=True)
class FuncType:
    args: tuple[str, ...]   # base-type names
    result: str


@dataclass(frozen=True)
class CtorDecl:
    name: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class CtorSet:
    ctors: tuple[CtorDecl, ...]


@dataclass(frozen=True)
class EmptySet:
    pass


TypeExpr = Union[EnumSet, FuncType, CtorSet, EmptySet]


@dataclass(frozen=True)
class ContextDecl:
    name: str
    body: TypeExpr
    is_constant: bool = False


# ---------------------------------------------------------------------------
# Contract surface

@dataclass(frozen=True)
class IoVar:
    direction: str  # "in" | "out"
    name: str
    type_name: str  # base type or context type name


@dataclass(frozen=True)
class BindingRef:
    """Target of a topic ``matches`` clause; direction is None for a bare name."""
    direction: Optional[str]
    name: str


@dataclass(frozen=True)
class TopicBinding:
    message_type: str  # slash path or builtin token (int16, string, ...)
    topic_name: str
    binding: Optional[BindingRef] = None


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IoAccess:
    direction: str  # "in" | "out"
    name: str


@dataclass(frozen=True)
class NumLit:
    value: Union[int, float]


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Call:
    """Application ``f(a, ...)``.

    Covers both function-typed variable application (``in.at(x, y)``) and
    constructor application (``move(x, y)``); the typechecker tells them
    apart by resolving the callee.
    """
    callee: Union[Var, IoAccess]
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Sum:
    """Natural-number literal addition, ``i + 1``."""
    base: "Term"
    addend: int


Term = Union[Var, IoAccess, NumLit, BoolLit, Call, Sum]


# ---------------------------------------------------------------------------
# Formulas

FORALL = "forall"
EXISTS = "exists"
EXISTS_UNIQUE = "exists!"


@dataclass(frozen=True)
class QuantVar:
    name: str
    type_name: str


@dataclass(frozen=True)
class Quant:
    kind: str  # forall | exists | exists!
    vars: tuple[QuantVar, ...]
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Membership:
    term: Term
    members: tuple[str, ...]
    negated: bool = False


@dataclass(frozen=True)
class Compare:
    left: Term
    op: str  # == != < <= > >=
    right: Term


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Atom:
    """A bare boolean-valued term used as a formula, e.g. ``out.position(x, y)``."""
    term: Term


Formula = Union[Quant, And, Or, Not, Implies, Iff, Membership, Compare, BoolConst, Atom]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def conjoin(formulas) -> Formula:
    """Left fold of ``and``; TRUE for the empty list (an absent assume)."""
    formulas = list(formulas)
    if not formulas:
        return TRUE
    out = formulas[0]
    for f in formulas[1:]:
        out = And(out, f)
    return out


# ---------------------------------------------------------------------------
# Contracts and system models

@dataclass(frozen=True)
class Contract:
    node_name: str
    inputs: tuple[IoVar, ...]
    outputs: tuple[IoVar, ...]
    topics: tuple[TopicBinding, ...]
    assumes: tuple[Formula, ...]     # empty means TRUE
    guarantees: tuple[Formula, ...]  # at least one

    def io_var(self, direction: str, name: str) -> Optional[IoVar]:
        pool = self.inputs if direction == "in" else self.outputs
        for v in pool:
            if v.name == name:
                return v
        return None

    @property
    def assume_formula(self) -> Formula:
        return conjoin(self.assumes)

    @property
    def guarantee_formula(self) -> Formula:
        return conjoin(self.guarantees)


@dataclass(frozen=True)
class Edge:
    src_node: str
    src_var: str
    dst_node: str
    dst_var: str


@dataclass(frozen=True)
class SystemModel:
    contracts: "dict[str, object]"  # node name -> TypedContract
    edges: tuple[Edge, ...]


@dataclass(frozen=True)
class Obligation:
    """Premise implication of a composition rule: source guarantees must
    entail the sink assumption after wiring renames."""
    quantified_vars: tuple[QuantVar, ...]
    antecedent: Formula
    consequent: Formula
    note: str = ""


@dataclass(frozen=True)
class DerivedProperty:
    """Rule conclusion: entry assumptions imply (eventually) exit guarantees."""
    quantified_vars: tuple[QuantVar, ...]
    antecedent: Formula
    consequents: tuple[tuple[bool, Formula], ...]  # (eventually?, formula)


# ---------------------------------------------------------------------------
# Alpha equivalence

def _terms_alpha(a: Term, b: Term, env_a: dict, env_b: dict) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ka, kb = env_a.get(a.name), env_b.get(b.name)
        if ka is None and kb is None:
            return a.name == b.name  # both free: must agree literally
        return ka is not None and ka == kb
    if isinstance(a, IoAccess):
        return a.direction == b.direction and a.name == b.name
    if isinstance(a, NumLit):
        return a.value == b.value and type(a.value) is type(b.value)
    if isinstance(a, BoolLit):
        return a.value == b.value
    if isinstance(a, Call):
        return (
            _terms_alpha(a.callee, b.callee, env_a, env_b)
            and len(a.args) == len(b.args)
            and all(_terms_alpha(x, y, env_a, env_b) for x, y in zip(a.args, b.args))
        )
    if isinstance(a, Sum):
        return a.addend == b.addend and _terms_alpha(a.base, b.base, env_a, env_b)
    raise TypeError(f"unknown term {a!r}")


def _alpha(a: Formula, b: Formula, env_a: dict, env_b: dict, depth: int) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Quant):
        if a.kind != b.kind or len(a.vars) != len(b.vars):
            return False
        if any(x.type_name != y.type_name for x, y in zip(a.vars, b.vars)):
            return False
        na, nb = dict(env_a), dict(env_b)
        for i, (x, y) in enumerate(zip(a.vars, b.vars)):
            na[x.name] = (depth, i)
            nb[y.name] = (depth, i)
        return _alpha(a.body, b.body, na, nb, depth + 1)
    if isinstance(a, (And, Or, Implies, Iff)):
        return _alpha(a.left, b.left, env_a, env_b, depth) and _alpha(
            a.right, b.right, env_a, env_b, depth)
    if isinstance(a, Not):
        return _alpha(a.body, b.body, env_a, env_b, depth)
    if isinstance(a, Membership):
        return (
            a.negated == b.negated
            and a.members == b.members
            and _terms_alpha(a.term, b.term, env_a, env_b)
        )
    if isinstance(a, Compare):
        return a.op == b.op and _terms_alpha(a.left, b.left, env_a, env_b) and \
            _terms_alpha(a.right, b.right, env_a, env_b)
    if isinstance(a, BoolConst):
        return a.value == b.value
    if isinstance(a, Atom):
        return _terms_alpha(a.term, b.term, env_a, env_b)
    raise TypeError(f"unknown formula {a!r}")


def alpha_equal(a: Formula, b: Formula) -> bool:
    """True iff the formulas are equal up to consistent renaming of bound
    variables.  Free symbols must match literally."""
    return _alpha(a, b, {}, {}, 0)


# ---------------------------------------------------------------------------
# Generic walkers

def sub_terms(t: Term):
    yield t
    if isinstance(t, Call):
        yield from sub_terms(t.callee)
        for a in t.args:
            yield from sub_terms(a)
    elif isinstance(t, Sum):
        yield from sub_terms(t.base)


def formula_terms(f: Formula):
    """All term occurrences in a formula, outermost first."""
    if isinstance(f, Quant):
        yield from formula_terms(f.body)
    elif isinstance(f, (And, Or, Implies, Iff)):
        yield from formula_terms(f.left)
        yield from formula_terms(f.right)
    elif isinstance(f, Not):
        yield from formula_terms(f.body)
    elif isinstance(f, Membership):
        yield from sub_terms(f.term)
    elif isinstance(f, Compare):
        yield from sub_terms(f.left)
        yield from sub_terms(f.right)
    elif isinstance(f, Atom):
        yield from sub_terms(f.term)
    elif isinstance(f, BoolConst):
        return
    else:
        raise TypeError(f"unknown formula {f!r}")


def sub_formulas(f: Formula):
    yield f
    if isinstance(f, Quant):
        yield from sub_formulas(f.body)
    elif isinstance(f, (And, Or, Implies, Iff)):
        yield from sub_formulas(f.left)
        yield from sub_formulas(f.right)
    elif isinstance(f, Not):
        yield from sub_formulas(f.body)


def map_terms(f: Formula, fn) -> Formula:
    """Rebuild a formula with ``fn`` applied to every maximal term."""
    if isinstance(f, Quant):
        return Quant(f.kind, f.vars, map_terms(f.body, fn))
    if isinstance(f, And):
        return And(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Or):
        return Or(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Not):
        return Not(map_terms(f.body, fn))
    if isinstance(f, Implies):
        return Implies(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Iff):
        return Iff(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Membership):
        return Membership(fn(f.term), f.members, f.negated)
    if isinstance(f, Compare):
        return Compare(fn(f.left), f.op, fn(f.right))
    if isinstance(f, Atom):
        return Atom(fn(f.term))
    if isinstance(f, BoolConst):
        return f
    raise TypeError(f"unknown formula {f!r}")
