"""Bounded obligation discharge by exhaustive evaluation over finite domains.

Reals are sampled on a grid; naturals up to a bound; enums always range over
every declared member.  Function-typed symbols are enumerated as complete
tables, which explodes quickly, so an obligation whose consequent is already
valid over its own symbols is accepted without touching the rest of the
state space.  A verdict is never stronger than ``ValidBounded``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

from . import model as m
from .calculus import free_symbols
from .typecheck import Context

DEFAULT_NATURAL_BOUND = 16
DEFAULT_MAX_ASSIGNMENTS = 10_000_000
FUNCTION_DOMAIN_LIMIT = 64


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class DomainBounds:
    """Finite sample domains.  An empty ``real_grid`` means "derive a grid
    from the obligation's comparison constants"."""
    real_grid: tuple[float, ...] = ()
    natural_bound: int = DEFAULT_NATURAL_BOUND
    overrides: tuple[tuple[str, tuple], ...] = ()
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS

    def __post_init__(self):
        if self.real_grid and list(self.real_grid) != sorted(set(self.real_grid)):
            raise ValueError("real_grid must be strictly ascending")

    def override_for(self, type_name: str):
        for name, values in self.overrides:
            if name == type_name:
                return values
        return None


def parse_bounds(text: str) -> DomainBounds:
    """Bounds file: ``real_grid = v, v, ...``, ``natural_bound = n``,
    ``max_assignments = n``, ``type Name = v, v, ...`` lines."""
    grid: tuple[float, ...] = ()
    natural_bound = DEFAULT_NATURAL_BOUND
    cap = DEFAULT_MAX_ASSIGNMENTS
    overrides: list[tuple[str, tuple]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise EvalError(f"bounds line {lineno}: expected 'key = value'")
        if key == "real_grid":
            grid = tuple(float(v) for v in value.split(","))
        elif key == "natural_bound":
            natural_bound = int(value)
        elif key == "max_assignments":
            cap = int(value)
        elif key.startswith("type "):
            name = key[5:].strip()
            overrides.append((name, tuple(v.strip() for v in value.split(","))))
        else:
            raise EvalError(f"bounds line {lineno}: unknown key {key!r}")
    return DomainBounds(grid, natural_bound, tuple(overrides), cap)


# ---------------------------------------------------------------------------
# Values

@dataclass(frozen=True)
class EnumVal:
    member: str

    def __repr__(self):
        return self.member


@dataclass(frozen=True)
class CtorVal:
    tag: str
    args: tuple

    def __repr__(self):
        return f"{self.tag}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class FnVal:
    """A total function as a table over sampled argument tuples."""
    table: tuple  # sorted ((args...), value) pairs

    def __call__(self, args: tuple):
        for key, value in self.table:
            if key == args:
                return value
        raise EvalError(f"function table has no entry for {args!r}")

    def __repr__(self):
        inner = ", ".join(f"{k}:{v!r}" for k, v in self.table)
        return "{" + inner + "}"


@dataclass(frozen=True)
class Verdict:
    kind: str  # ValidBounded | Counterexample | Unknown
    assignment: tuple = ()
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.kind == "ValidBounded"

    def assignment_dict(self) -> dict:
        return dict(self.assignment)


def valid_bounded() -> Verdict:
    return Verdict("ValidBounded")


def counterexample(assignment: dict) -> Verdict:
    return Verdict("Counterexample", tuple(sorted(assignment.items())))


def unknown(reason: str) -> Verdict:
    return Verdict("Unknown", reason=reason)


# ---------------------------------------------------------------------------
# Domains

def derive_real_grid(formulas) -> tuple[float, ...]:
    """Sample points from the comparison constants of the formulas: each
    constant, its neighbours at distance one, and midpoints of adjacent
    constants.  Band predicates over reals flip only at their syntactic
    constants, so this grid is exact for them."""
    constants: set[float] = set()
    for f in formulas:
        for term in _all_terms(f):
            if isinstance(term, m.NumLit):
                constants.add(float(term.value))
    if not constants:
        return (0.0, 1.0)
    points: set[float] = set()
    ordered = sorted(constants)
    for c in ordered:
        points.update((c - 1.0, c, c + 1.0))
    for a, b in zip(ordered, ordered[1:]):
        points.add((a + b) / 2.0)
    return tuple(sorted(points))


def _all_terms(f: m.Formula):
    for sub in m.sub_formulas(f):
        yield from m.formula_terms(sub)


class DomainTooLarge(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


def domain_values(type_name: str, bounds: DomainBounds, ctx: Context) -> list:
    """All sample values of a type, in canonical enumeration order."""
    override = bounds.override_for(type_name)
    if type_name == m.REAL:
        if override is not None:
            return [float(v) for v in override]
        if not bounds.real_grid:
            raise EvalError("REAL quantifier with no grid provided")
        return list(bounds.real_grid)
    if type_name == m.NATURAL:
        if override is not None:
            return [int(v) for v in override]
        return list(range(bounds.natural_bound + 1))
    if type_name == m.BOOL:
        return [False, True]
    resolved = ctx.resolve(type_name)
    if isinstance(resolved, m.EnumSet):
        # enums always range over every declared member, bounds cannot shrink
        return [EnumVal(member) for member in resolved.members]
    if isinstance(resolved, m.CtorSet):
        values = []
        for ctor in resolved.ctors:
            arg_domains = [domain_values(a, bounds, ctx) for a in ctor.args]
            for combo in itertools.product(*arg_domains):
                values.append(CtorVal(ctor.name, combo))
        return values
    if isinstance(resolved, m.FuncType):
        arg_domains = [domain_values(a, bounds, ctx) for a in resolved.args]
        points = list(itertools.product(*arg_domains))
        if len(points) > FUNCTION_DOMAIN_LIMIT:
            raise DomainTooLarge(
                f"function type {type_name}: {len(points)} domain points exceed "
                f"{FUNCTION_DOMAIN_LIMIT}; shrink real_grid or add a per-type override")
        result_domain = domain_values(resolved.result, bounds, ctx)
        tables = []
        for values in itertools.product(result_domain, repeat=len(points)):
            tables.append(FnVal(tuple(zip(points, values))))
        return tables
    if isinstance(resolved, m.EmptySet):
        return [EnumVal(f"<{type_name}>")]  # opaque unit value
    raise EvalError(f"cannot enumerate type {type_name!r}")


def domain_size(type_name: str, bounds: DomainBounds, ctx: Context) -> int:
    override = bounds.override_for(type_name)
    if type_name == m.REAL:
        return len(override) if override is not None else len(bounds.real_grid)
    if type_name == m.NATURAL:
        return len(override) if override is not None else bounds.natural_bound + 1
    if type_name == m.BOOL:
        return 2
    resolved = ctx.resolve(type_name)
    if isinstance(resolved, m.EnumSet):
        return len(resolved.members)
    if isinstance(resolved, m.CtorSet):
        return sum(math.prod(domain_size(a, bounds, ctx) for a in c.args)
                   for c in resolved.ctors)
    if isinstance(resolved, m.FuncType):
        points = math.prod(domain_size(a, bounds, ctx) for a in resolved.args)
        if points > FUNCTION_DOMAIN_LIMIT:
            raise DomainTooLarge(
                f"function type {type_name}: {points} domain points exceed "
                f"{FUNCTION_DOMAIN_LIMIT}; shrink real_grid or add a per-type override")
        return domain_size(resolved.result, bounds, ctx) ** points
    if isinstance(resolved, m.EmptySet):
        return 1
    raise EvalError(f"cannot enumerate type {type_name!r}")


# ---------------------------------------------------------------------------
# Evaluation

def eval_term(t: m.Term, env: dict, ctx: Context):
    if isinstance(t, m.Var):
        if t.name in env:
            return env[t.name]
        enum = ctx.enum_member_index.get(t.name)
        if enum is not None:
            return EnumVal(t.name)
        raise EvalError(f"unbound symbol {t.name!r}")
    if isinstance(t, m.IoAccess):
        if t.name in env:
            return env[t.name]
        raise EvalError(f"unbound symbol {t.direction}.{t.name}")
    if isinstance(t, m.NumLit):
        return t.value
    if isinstance(t, m.BoolLit):
        return t.value
    if isinstance(t, m.Sum):
        base = eval_term(t.base, env, ctx)
        if not isinstance(base, int):
            raise EvalError(f"'+' on non-natural value {base!r}")
        return base + t.addend
    if isinstance(t, m.Call):
        if isinstance(t.callee, m.Var) and t.callee.name in ctx.ctor_index \
                and t.callee.name not in env:
            args = tuple(eval_term(a, env, ctx) for a in t.args)
            return CtorVal(t.callee.name, args)
        fn = eval_term(t.callee, env, ctx)
        if not isinstance(fn, FnVal):
            raise EvalError(f"cannot apply non-function value {fn!r}")
        args = tuple(eval_term(a, env, ctx) for a in t.args)
        return fn(args)
    raise TypeError(f"unknown term {t!r}")


def _values_equal(a, b) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False  # do not let bool==1 slip through
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b  # NATURAL literals widen to REAL
    return a == b


def eval_formula(f: m.Formula, env: dict, bounds: DomainBounds,
                 ctx: Context) -> bool:
    """Truth value under finite-domain quantifier expansion.

    ``env`` must cover every free symbol; function-typed symbols are given
    as finite tables.
    """
    if isinstance(f, m.BoolConst):
        return f.value
    if isinstance(f, m.Not):
        return not eval_formula(f.body, env, bounds, ctx)
    if isinstance(f, m.And):
        return eval_formula(f.left, env, bounds, ctx) and \
            eval_formula(f.right, env, bounds, ctx)
    if isinstance(f, m.Or):
        return eval_formula(f.left, env, bounds, ctx) or \
            eval_formula(f.right, env, bounds, ctx)
    if isinstance(f, m.Implies):
        return (not eval_formula(f.left, env, bounds, ctx)) or \
            eval_formula(f.right, env, bounds, ctx)
    if isinstance(f, m.Iff):
        return eval_formula(f.left, env, bounds, ctx) == \
            eval_formula(f.right, env, bounds, ctx)
    if isinstance(f, m.Membership):
        value = eval_term(f.term, env, ctx)
        if not isinstance(value, EnumVal):
            raise EvalError(f"membership over non-enum value {value!r}")
        inside = value.member in f.members
        return not inside if f.negated else inside
    if isinstance(f, m.Compare):
        left = eval_term(f.left, env, ctx)
        right = eval_term(f.right, env, ctx)
        if f.op == "==":
            return _values_equal(left, right)
        if f.op == "!=":
            return not _values_equal(left, right)
        if not isinstance(left, (int, float)) or not isinstance(right, (int, float)):
            raise EvalError(f"ordering on non-numeric values {left!r}, {right!r}")
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[f.op]
    if isinstance(f, m.Atom):
        value = eval_term(f.term, env, ctx)
        if not isinstance(value, bool):
            raise EvalError(f"bare atom evaluated to non-boolean {value!r}")
        return value
    if isinstance(f, m.Quant):
        domains = [domain_values(qv.type_name, bounds, ctx) for qv in f.vars]
        names = [qv.name for qv in f.vars]
        if f.kind == m.FORALL:
            for combo in itertools.product(*domains):
                inner = {**env, **dict(zip(names, combo))}
                if not eval_formula(f.body, inner, bounds, ctx):
                    return False
            return True
        if f.kind == m.EXISTS:
            for combo in itertools.product(*domains):
                inner = {**env, **dict(zip(names, combo))}
                if eval_formula(f.body, inner, bounds, ctx):
                    return True
            return False
        if f.kind == m.EXISTS_UNIQUE:
            # desugared meaning: a witness exists and any other witness tuple
            # equals it, i.e. exactly one satisfying tuple
            count = 0
            for combo in itertools.product(*domains):
                inner = {**env, **dict(zip(names, combo))}
                if eval_formula(f.body, inner, bounds, ctx):
                    count += 1
                    if count > 1:
                        return False
            return count == 1
    raise TypeError(f"unknown formula {f!r}")


# ---------------------------------------------------------------------------
# Discharge

def discharge(ob: m.Obligation, bounds: DomainBounds, ctx: Context) -> Verdict:
    """Decide an obligation over the bounded domains.

    ``ValidBounded`` iff antecedent implies consequent for every assignment;
    otherwise the lexicographically first counterexample (variables in name
    order, each domain in canonical order).  State spaces beyond the cap
    give ``Unknown``.
    """
    if not bounds.real_grid and bounds.override_for(m.REAL) is None:
        bounds = replace(bounds, real_grid=derive_real_grid(
            [ob.antecedent, ob.consequent]))

    qvars = sorted(ob.quantified_vars, key=lambda qv: qv.name)
    try:
        sizes = {qv.name: domain_size(qv.type_name, bounds, ctx) for qv in qvars}
    except DomainTooLarge as exc:
        return unknown(exc.message)

    # a consequent that is valid over its own symbols settles the obligation
    cons_free = free_symbols(ob.consequent)
    cons_vars = [qv for qv in qvars if qv.name in cons_free]
    cons_space = math.prod(sizes[qv.name] for qv in cons_vars)
    if cons_space <= bounds.max_assignments:
        try:
            if _valid_over(ob.consequent, cons_vars, bounds, ctx):
                return valid_bounded()
        except DomainTooLarge as exc:
            return unknown(exc.message)

    total = math.prod(sizes[qv.name] for qv in qvars)
    if total > bounds.max_assignments:
        return unknown(
            f"state space of {total} assignments exceeds the cap of "
            f"{bounds.max_assignments}; tighten the bounds or add per-type overrides")
    try:
        domains = [domain_values(qv.type_name, bounds, ctx) for qv in qvars]
    except DomainTooLarge as exc:
        return unknown(exc.message)
    names = [qv.name for qv in qvars]
    for combo in itertools.product(*domains):
        env = dict(zip(names, combo))
        if eval_formula(ob.antecedent, env, bounds, ctx) and \
                not eval_formula(ob.consequent, env, bounds, ctx):
            return counterexample(env)
    return valid_bounded()


def _valid_over(f: m.Formula, qvars, bounds: DomainBounds, ctx: Context) -> bool:
    domains = [domain_values(qv.type_name, bounds, ctx) for qv in qvars]
    names = [qv.name for qv in qvars]
    for combo in itertools.product(*domains):
        env = dict(zip(names, combo))
        if not eval_formula(f, env, bounds, ctx):
            return False
    return True
