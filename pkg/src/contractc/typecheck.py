"""Context resolution and contract checking.

A checked contract guarantees that every term occurrence has exactly one
resolved type, every ``matches`` clause points at a declared variable of the
right direction, and assume clauses range over inputs only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import model as m
from .diagnostics import Diagnostic, DiagnosticError, Span, error

_NO_SPAN = Span(1, 1, 0)


class Context:
    """Resolved context table: type name -> TypeExpr, plus member/ctor indexes."""

    def __init__(self, decls: dict[str, m.TypeExpr]):
        self.decls = dict(decls)
        self.enum_member_index: dict[str, str] = {}
        self.ctor_index: dict[str, tuple[str, m.CtorDecl]] = {}
        for name, body in self.decls.items():
            if isinstance(body, m.EnumSet):
                for member in body.members:
                    self.enum_member_index[member] = name
            elif isinstance(body, m.CtorSet):
                for ctor in body.ctors:
                    self.ctor_index[ctor.name] = (name, ctor)

    def resolve(self, type_name: str):
        if type_name in m.BASE_TYPES:
            return type_name
        return self.decls.get(type_name)

    def is_enum(self, type_name: str) -> bool:
        return isinstance(self.decls.get(type_name), m.EnumSet)

    def enum_members(self, type_name: str) -> tuple[str, ...]:
        return self.decls[type_name].members

    def __contains__(self, type_name: str) -> bool:
        return type_name in m.BASE_TYPES or type_name in self.decls

    def __len__(self) -> int:
        return len(self.decls)


def resolve_context(decls) -> Context:
    """Build the context table; duplicate or dangling names are errors."""
    diags: list[Diagnostic] = []
    table: dict[str, m.TypeExpr] = {}
    for d in decls:
        if d.name in table:
            diags.append(error(_NO_SPAN, "T001", f"duplicate type name {d.name!r}"))
            continue
        table[d.name] = d.body
    ctor_names: dict[str, str] = {}
    member_names: dict[str, str] = {}
    for name, body in table.items():
        if isinstance(body, m.FuncType):
            for ref in body.args + (body.result,):
                if ref not in m.BASE_TYPES and ref not in table:
                    diags.append(error(_NO_SPAN, "T002",
                                       f"type {name!r} references undeclared type {ref!r}"))
        elif isinstance(body, m.EnumSet):
            seen = set()
            for member in body.members:
                if member in seen:
                    diags.append(error(_NO_SPAN, "T001",
                                       f"enum {name!r} repeats member {member!r}"))
                seen.add(member)
                if member in member_names and member_names[member] != name:
                    diags.append(error(_NO_SPAN, "T001",
                                       f"enum member {member!r} declared in both "
                                       f"{member_names[member]!r} and {name!r}"))
                member_names[member] = name
        elif isinstance(body, m.CtorSet):
            seen = set()
            for ctor in body.ctors:
                if ctor.name in seen:
                    diags.append(error(_NO_SPAN, "T001",
                                       f"constructor set {name!r} repeats {ctor.name!r}"))
                seen.add(ctor.name)
                if ctor.name in ctor_names and ctor_names[ctor.name] != name:
                    diags.append(error(_NO_SPAN, "T001",
                                       f"constructor {ctor.name!r} declared in both "
                                       f"{ctor_names[ctor.name]!r} and {name!r}"))
                ctor_names[ctor.name] = name
                for ref in ctor.args:
                    if ref not in m.BASE_TYPES and ref not in table:
                        diags.append(error(_NO_SPAN, "T002",
                                           f"constructor {ctor.name!r} references "
                                           f"undeclared type {ref!r}"))
    if diags:
        raise DiagnosticError(diags)
    return Context(table)


@dataclass(frozen=True)
class TypedContract:
    contract: m.Contract
    context: Context
    symbol_table: dict  # id(term occurrence) -> resolved type name
    topic_index: dict   # (direction, var name) -> TopicBinding

    @property
    def node_name(self) -> str:
        return self.contract.node_name


class _Checker:
    def __init__(self, contract: m.Contract, ctx: Context):
        self.c = contract
        self.ctx = ctx
        self.diags: list[Diagnostic] = []
        self.symbols: dict[int, str] = {}

    def err(self, code: str, message: str) -> None:
        self.diags.append(error(_NO_SPAN, code, message))

    # -- term typing --------------------------------------------------------

    def io_type(self, access: m.IoAccess) -> str | None:
        var = self.c.io_var(access.direction, access.name)
        if var is None:
            self.err("T003", f"{access.direction}.{access.name} is not a declared "
                             f"{'input' if access.direction == 'in' else 'output'}")
            return None
        return var.type_name

    def type_of(self, t: m.Term, env: dict[str, str]) -> str | None:
        ty = self._type_of(t, env)
        if ty is not None:
            self.symbols[id(t)] = ty
        return ty

    def _type_of(self, t: m.Term, env: dict[str, str]) -> str | None:
        if isinstance(t, m.Var):
            if t.name in env:
                return env[t.name]
            enum = self.ctx.enum_member_index.get(t.name)
            if enum is not None:
                return enum
            if t.name in self.ctx.ctor_index:
                self.err("T004", f"constructor {t.name!r} used without arguments")
                return None
            self.err("T003", f"unbound symbol {t.name!r}")
            return None
        if isinstance(t, m.IoAccess):
            return self.io_type(t)
        if isinstance(t, m.NumLit):
            return m.REAL if isinstance(t.value, float) else m.NATURAL
        if isinstance(t, m.BoolLit):
            return m.BOOL
        if isinstance(t, m.Sum):
            base = self.type_of(t.base, env)
            if base is not None and base != m.NATURAL:
                self.err("T005", f"'+' needs a NATURAL operand, got {base}")
            return m.NATURAL
        if isinstance(t, m.Call):
            return self.type_of_call(t, env)
        raise TypeError(f"unknown term {t!r}")

    def type_of_call(self, t: m.Call, env: dict[str, str]) -> str | None:
        if isinstance(t.callee, m.Var) and t.callee.name in self.ctx.ctor_index:
            set_name, ctor = self.ctx.ctor_index[t.callee.name]
            self.symbols[id(t.callee)] = set_name
            if len(t.args) != len(ctor.args):
                self.err("T004", f"constructor {ctor.name!r} expects "
                                 f"{len(ctor.args)} arguments, got {len(t.args)}")
                return set_name
            for arg, expected in zip(t.args, ctor.args):
                self.check_arg(arg, expected, env, ctor.name)
            return set_name
        callee_type = self.type_of(t.callee, env)
        if callee_type is None:
            for arg in t.args:
                self.type_of(arg, env)
            return None
        resolved = self.ctx.resolve(callee_type)
        if not isinstance(resolved, m.FuncType):
            self.err("T005", f"{callee_type!r} is not a function type; "
                             f"cannot apply {render_name(t.callee)}")
            return None
        if len(t.args) != len(resolved.args):
            self.err("T004", f"{render_name(t.callee)} expects "
                             f"{len(resolved.args)} arguments, got {len(t.args)}")
            return resolved.result
        for arg, expected in zip(t.args, resolved.args):
            self.check_arg(arg, expected, env, render_name(t.callee))
        return resolved.result

    def check_arg(self, arg: m.Term, expected: str, env, what: str) -> None:
        actual = self.type_of(arg, env)
        if actual is None:
            return
        if not self.compatible(expected, actual, arg):
            self.err("T005", f"{what}: argument of type {actual} where {expected} expected")

    def compatible(self, expected: str, actual: str, term: m.Term) -> bool:
        if expected == actual:
            return True
        # NATURAL literals widen to REAL (the contracts mix them freely)
        if expected == m.REAL and actual == m.NATURAL and _is_literal_natural(term):
            return True
        return False

    # -- formula checking ---------------------------------------------------

    def check_formula(self, f: m.Formula, env: dict[str, str], in_assume: bool) -> None:
        if isinstance(f, m.Quant):
            for qv in f.vars:
                resolved = self.ctx.resolve(qv.type_name)
                if resolved is None:
                    self.err("T002", f"unknown quantifier domain {qv.type_name!r}")
                elif not (qv.type_name in m.BASE_TYPES or isinstance(resolved, m.EnumSet)):
                    self.err("T005", f"quantifier domain {qv.type_name!r} must be "
                                     "REAL, NATURAL, BOOL or an enum type")
            inner = dict(env)
            inner.update({qv.name: qv.type_name for qv in f.vars})
            self.check_formula(f.body, inner, in_assume)
        elif isinstance(f, (m.And, m.Or, m.Implies, m.Iff)):
            self.check_formula(f.left, env, in_assume)
            self.check_formula(f.right, env, in_assume)
        elif isinstance(f, m.Not):
            self.check_formula(f.body, env, in_assume)
        elif isinstance(f, m.Membership):
            self.check_io_use(f.term, in_assume)
            ty = self.type_of(f.term, env)
            if ty is not None:
                if not self.ctx.is_enum(ty):
                    self.err("T005", f"membership needs an enum-typed term, got {ty}")
                else:
                    declared = set(self.ctx.enum_members(ty))
                    for member in f.members:
                        if member not in declared:
                            self.err("T005", f"{member!r} is not a member of {ty}")
        elif isinstance(f, m.Compare):
            self.check_io_use(f.left, in_assume)
            self.check_io_use(f.right, in_assume)
            lt = self.type_of(f.left, env)
            rt = self.type_of(f.right, env)
            if lt is None or rt is None:
                return
            if f.op in ("==", "!="):
                if not (self.compatible(lt, rt, f.right) or self.compatible(rt, lt, f.left)):
                    self.err("T005", f"cannot compare {lt} with {rt}")
            else:
                for side, ty, term in (("left", lt, f.left), ("right", rt, f.right)):
                    if ty not in (m.REAL, m.NATURAL):
                        self.err("T005", f"ordering {side} operand must be numeric, got {ty}")
        elif isinstance(f, m.Atom):
            self.check_io_use(f.term, in_assume)
            ty = self.type_of(f.term, env)
            if ty is not None and ty != m.BOOL:
                self.err("T005", f"bare term used as a formula must be BOOL, got {ty}")
        elif isinstance(f, m.BoolConst):
            pass
        else:
            raise TypeError(f"unknown formula {f!r}")

    def check_io_use(self, t: m.Term, in_assume: bool) -> None:
        if not in_assume:
            return
        for sub in m.sub_terms(t):
            if isinstance(sub, m.IoAccess) and sub.direction == "out":
                self.err("T006", f"assume clause references output out.{sub.name}")

    # -- contract surface ---------------------------------------------------

    def run(self) -> TypedContract:
        for var in self.c.inputs + self.c.outputs:
            if var.type_name not in self.ctx:
                self.err("T002", f"{var.direction}.{var.name}: unknown type {var.type_name!r}")
        topic_index = {}
        for topic in self.c.topics:
            ref = topic.binding
            if ref is None:
                continue
            if ref.direction is not None:
                var = self.c.io_var(ref.direction, ref.name)
                if var is None:
                    self.err("T003", f"topic {topic.topic_name!r} matches undeclared "
                                     f"{ref.direction}.{ref.name}")
                    continue
                topic_index[(ref.direction, ref.name)] = topic
            else:
                hits = [d for d in ("in", "out") if self.c.io_var(d, ref.name)]
                if not hits:
                    self.err("T003", f"topic {topic.topic_name!r} matches undeclared "
                                     f"variable {ref.name!r}")
                    continue
                if len(hits) == 2:
                    self.err("T003", f"topic {topic.topic_name!r}: {ref.name!r} is both an "
                                     "input and an output; use in./out. to disambiguate")
                    continue
                topic_index[(hits[0], ref.name)] = topic
        for a in self.c.assumes:
            self.check_formula(a, {}, in_assume=True)
        for g in self.c.guarantees:
            self.check_formula(g, {}, in_assume=False)
        if self.diags:
            raise DiagnosticError(sorted(
                self.diags, key=lambda d: (d.span.line, d.span.column, d.message)))
        return TypedContract(self.c, self.ctx, self.symbols, topic_index)


def render_name(t) -> str:
    if isinstance(t, m.IoAccess):
        return f"{t.direction}.{t.name}"
    return t.name


def _is_literal_natural(t: m.Term) -> bool:
    return isinstance(t, m.NumLit) and isinstance(t.value, int)


def check_contract(contract: m.Contract, ctx: Context) -> TypedContract:
    """Validate one contract against a resolved context.

    Raises :class:`DiagnosticError` listing every problem found, ordered by
    source position; the check is deterministic.
    """
    return _Checker(contract, ctx).run()


def check_document(source_decls, contracts) -> tuple[Context, list[TypedContract]]:
    ctx = resolve_context(source_decls)
    return ctx, [check_contract(c, ctx) for c in contracts]
