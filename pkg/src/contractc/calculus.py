"""Composition calculus: wiring models, rules R1-R4, FOTL rendering.

A wiring file names the data-flow edges between node contracts.  Rule
application renames the wired input/output vectors into one shared variable
namespace, emits the premise obligations (source guarantees entail sink
assumptions) and the derived system-level property (entry assumptions imply
eventually the exit guarantees).

Inputs of a participating node that no composition source feeds are treated
as environment inputs: they stay universally quantified in the results.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import model as m
from .diagnostics import Diagnostic, DiagnosticError, Span, error
from .render import render_formula
from .typecheck import TypedContract

_NO_SPAN = Span(1, 1, 0)

R3_PERSISTENCE_NOTE = (
    "join composition assumes source outputs persist once generated, so all "
    "sink inputs are available together; discharge does not verify timing"
)


def _err(code: str, message: str, line: int = 1) -> DiagnosticError:
    return DiagnosticError([error(Span(line, 1, 0), code, message)])


# ---------------------------------------------------------------------------
# Wiring files and system models

def parse_wiring(text: str) -> list[m.Edge]:
    edges = []
    diags = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "->" not in line:
            diags.append(error(Span(lineno, 1, len(raw)), "W001",
                               "expected 'src.out_var -> dst.in_var'"))
            continue
        left, _, right = line.partition("->")
        try:
            src_node, src_var = left.strip().split(".")
            dst_node, dst_var = right.strip().split(".")
        except ValueError:
            diags.append(error(Span(lineno, 1, len(raw)), "W001",
                               "expected 'src.out_var -> dst.in_var'"))
            continue
        edges.append(m.Edge(src_node, src_var, dst_node, dst_var))
    if diags:
        raise DiagnosticError(diags)
    return edges


def build_system_model(wiring: str, contracts: list[TypedContract]) -> m.SystemModel:
    """Resolve a wiring file against checked contracts.

    Every edge must connect an existing output to an existing input of the
    same declared type.
    """
    edges = parse_wiring(wiring)
    byname = {tc.node_name: tc for tc in contracts}
    diags = []
    seen = set()
    for e in edges:
        if e in seen:
            diags.append(error(_NO_SPAN, "W002", f"duplicate edge {_edge_str(e)}"))
            continue
        seen.add(e)
        src = byname.get(e.src_node)
        dst = byname.get(e.dst_node)
        if src is None:
            diags.append(error(_NO_SPAN, "W003", f"unknown node {e.src_node!r}"))
            continue
        if dst is None:
            diags.append(error(_NO_SPAN, "W003", f"unknown node {e.dst_node!r}"))
            continue
        out_var = src.contract.io_var("out", e.src_var)
        in_var = dst.contract.io_var("in", e.dst_var)
        if out_var is None:
            diags.append(error(_NO_SPAN, "W004",
                               f"{e.src_node!r} has no output {e.src_var!r}"))
            continue
        if in_var is None:
            diags.append(error(_NO_SPAN, "W004",
                               f"{e.dst_node!r} has no input {e.dst_var!r}"))
            continue
        if out_var.type_name != in_var.type_name:
            diags.append(error(_NO_SPAN, "W005",
                               f"type mismatch on {_edge_str(e)}: "
                               f"{out_var.type_name} vs {in_var.type_name}"))
    if diags:
        raise DiagnosticError(diags)
    return m.SystemModel(contracts=byname, edges=tuple(edges))


def _edge_str(e: m.Edge) -> str:
    return f"{e.src_node}.{e.src_var} -> {e.dst_node}.{e.dst_var}"


# ---------------------------------------------------------------------------
# Shared renaming

class _Renaming:
    """Maps every (node, direction, var) of the participants to one shared
    symbol.  Wired pairs share a class (union over all model edges, so two
    inputs fed by the same output also unify)."""

    def __init__(self, model: m.SystemModel, participants: list[str]):
        self.model = model
        self.parent: dict[tuple, tuple] = {}
        keys = []
        for node in participants:
            tc = model.contracts[node]
            for var in tc.contract.inputs + tc.contract.outputs:
                keys.append((node, var.direction, var.name))
        for key in keys:
            self.parent[key] = key
        for e in model.edges:
            a = (e.src_node, "out", e.src_var)
            b = (e.dst_node, "in", e.dst_var)
            self._ensure(a)
            self._ensure(b)
            self._union(a, b)
        self.names = self._choose_names(participants)

    def _ensure(self, key):
        self.parent.setdefault(key, key)

    def _find(self, key):
        while self.parent[key] != key:
            self.parent[key] = self.parent[self.parent[key]]
            key = self.parent[key]
        return key

    def _union(self, a, b):
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self.parent[min(ra, rb)] = max(ra, rb)

    def _bound_names(self, participants) -> set[str]:
        names = set()
        for node in participants:
            tc = self.model.contracts[node]
            for f in tc.contract.assumes + tc.contract.guarantees:
                for sub in m.sub_formulas(f):
                    if isinstance(sub, m.Quant):
                        names.update(qv.name for qv in sub.vars)
        return names

    def _choose_names(self, participants) -> dict[tuple, str]:
        classes: dict[tuple, list[tuple]] = {}
        for key in self.parent:
            classes.setdefault(self._find(key), []).append(key)
        forbidden = self._bound_names(participants)
        taken: set[str] = set()
        names: dict[tuple, str] = {}
        for root in sorted(classes):
            members = sorted(classes[root])
            var_names = sorted({k[2] for k in members})
            candidate = var_names[0] if len(var_names) == 1 else None
            if candidate is None:
                # wired vars with different names: qualify by the sink side
                sinks = [k for k in members if k[1] == "in"]
                pick = sinks[0] if sinks else members[0]
                candidate = f"{pick[0]}_{pick[2]}"
            if candidate in forbidden or candidate in taken:
                pick = members[0]
                candidate = f"{pick[0]}_{pick[2]}"
                suffix = 2
                while candidate in forbidden or candidate in taken:
                    candidate = f"{pick[0]}_{pick[2]}_{suffix}"
                    suffix += 1
            taken.add(candidate)
            for key in members:
                names[key] = candidate
        return names

    def shared(self, node: str, direction: str, var: str) -> str:
        return self.names[(node, direction, var)]

    def type_of(self, name: str) -> str:
        for (node, direction, var), shared in self.names.items():
            if shared == name:
                tc = self.model.contracts.get(node)
                if tc is not None:
                    io = tc.contract.io_var(direction, var)
                    if io is not None:
                        return io.type_name
        raise KeyError(name)

    def apply(self, node: str, f: m.Formula) -> m.Formula:
        def on_term(t: m.Term) -> m.Term:
            if isinstance(t, m.IoAccess):
                return m.Var(self.shared(node, t.direction, t.name))
            if isinstance(t, m.Call):
                return m.Call(on_term(t.callee), tuple(on_term(a) for a in t.args))
            if isinstance(t, m.Sum):
                return m.Sum(on_term(t.base), t.addend)
            return t
        return m.map_terms(f, on_term)


def free_symbols(f: m.Formula, bound: frozenset = frozenset()) -> set[str]:
    """Free variable and io-access names of a formula."""
    if isinstance(f, m.Quant):
        return free_symbols(f.body, bound | {qv.name for qv in f.vars})
    if isinstance(f, (m.And, m.Or, m.Implies, m.Iff)):
        return free_symbols(f.left, bound) | free_symbols(f.right, bound)
    if isinstance(f, m.Not):
        return free_symbols(f.body, bound)

    out: set[str] = set()

    def scan(t: m.Term):
        if isinstance(t, m.Var):
            if t.name not in bound:
                out.add(t.name)
        elif isinstance(t, m.IoAccess):
            out.add(t.name)
        elif isinstance(t, m.Call):
            scan(t.callee)
            for a in t.args:
                scan(a)
        elif isinstance(t, m.Sum):
            scan(t.base)

    if isinstance(f, m.Membership):
        scan(f.term)
    elif isinstance(f, m.Compare):
        scan(f.left)
        scan(f.right)
    elif isinstance(f, m.Atom):
        scan(f.term)
    return out


@dataclass(frozen=True)
class CompositionResult:
    rule: str
    obligations: tuple[m.Obligation, ...]
    derived: m.DerivedProperty
    substitution: tuple[tuple[tuple[str, str], tuple[str, str]], ...]
    notes: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Rule plumbing

def _require_nodes(model: m.SystemModel, names: list[str]) -> None:
    for n in names:
        if n not in model.contracts:
            raise _err("C001", f"unknown node {n!r}")
    if len(set(names)) != len(names):
        raise _err("C002", "composition nodes must be distinct "
                           "(loops are composed with the loop rule)")


def _edges_between(model: m.SystemModel, src: str, dst: str) -> list[m.Edge]:
    return [e for e in model.edges if e.src_node == src and e.dst_node == dst]


def _require_outputs_consumed(model: m.SystemModel, src: str, dsts: list[str],
                              rule: str) -> list[m.Edge]:
    """Every output of ``src`` must be wired to at least one of ``dsts``."""
    used = []
    tc = model.contracts[src]
    for var in tc.contract.outputs:
        hits = [e for d in dsts for e in _edges_between(model, src, d)
                if e.src_var == var.name]
        if not hits:
            raise _err("C003", f"{rule}: output {src}.{var.name} is not wired to "
                               f"{' or '.join(dsts)}")
        used.extend(hits)
    return used


def _assume(tc: TypedContract) -> m.Formula:
    return tc.contract.assume_formula


def _guarantee(tc: TypedContract) -> m.Formula:
    return tc.contract.guarantee_formula


def _quantified(ren: _Renaming, formulas: list[m.Formula]) -> tuple[m.QuantVar, ...]:
    free: set[str] = set()
    for f in formulas:
        free |= free_symbols(f)
    shared_types: dict[str, str] = {}
    for (node, direction, var), name in ren.names.items():
        if name in free and name not in shared_types:
            tc = ren.model.contracts.get(node)
            if tc is not None:
                io = tc.contract.io_var(direction, var)
                if io is not None:
                    shared_types[name] = io.type_name
    return tuple(m.QuantVar(n, shared_types[n])
                 for n in sorted(free) if n in shared_types)


def _substitution(edges: list[m.Edge]):
    pairs = []
    for e in edges:
        pairs.append(((e.src_node, e.src_var), (e.dst_node, e.dst_var)))
    return tuple(dict.fromkeys(pairs))


def _audit_renaming(ren: _Renaming, obligations, derived) -> None:
    # no-capture audit: shared names are pairwise distinct per class and do
    # not collide with any bound quantifier name in the results
    bound: set[str] = set()
    formulas = [ob.antecedent for ob in obligations] + \
               [ob.consequent for ob in obligations] + \
               [derived.antecedent] + [f for _, f in derived.consequents]
    for f in formulas:
        for sub in m.sub_formulas(f):
            if isinstance(sub, m.Quant):
                bound.update(qv.name for qv in sub.vars)
    clazz: dict[str, tuple] = {}
    for key, name in ren.names.items():
        root = ren._find(key)
        if name in clazz and clazz[name] != root:
            raise _err("C010", f"internal renaming collision on {name!r}")
        clazz[name] = root
        if name in bound:
            raise _err("C010", f"shared name {name!r} captured by a quantifier")


# ---------------------------------------------------------------------------
# Rules

def apply_r1(model: m.SystemModel, chain: list[str]) -> CompositionResult:
    """Linear sequence: every node's outputs feed the next node."""
    if len(chain) < 2:
        raise _err("C004", "a chain needs at least two nodes")
    _require_nodes(model, chain)
    used = []
    for a, b in zip(chain, chain[1:]):
        used += _require_outputs_consumed(model, a, [b], "R1")
    ren = _Renaming(model, chain)
    obligations = []
    for a, b in zip(chain, chain[1:]):
        ant = ren.apply(a, _guarantee(model.contracts[a]))
        cons = ren.apply(b, _assume(model.contracts[b]))
        obligations.append(m.Obligation(
            quantified_vars=_quantified(ren, [ant, cons]),
            antecedent=ant,
            consequent=cons,
        ))
    antecedent = ren.apply(chain[0], _assume(model.contracts[chain[0]]))
    consequent = ren.apply(chain[-1], _guarantee(model.contracts[chain[-1]]))
    derived = m.DerivedProperty(
        quantified_vars=_quantified(ren, [antecedent, consequent]),
        antecedent=antecedent,
        consequents=((True, consequent),),
    )
    result = CompositionResult("R1", tuple(obligations), derived, _substitution(used))
    _audit_renaming(ren, result.obligations, result.derived)
    return result


def apply_r2(model: m.SystemModel, root: str, leaves: list[str]) -> CompositionResult:
    """Branching outputs: the root's output vector splits across the leaves."""
    if not leaves:
        raise _err("C004", "R2 needs at least one leaf")
    _require_nodes(model, [root] + leaves)
    used = _require_outputs_consumed(model, root, leaves, "R2")
    for leaf in leaves:
        if not _edges_between(model, root, leaf):
            raise _err("C003", f"R2: leaf {leaf!r} receives nothing from {root!r}")
    ren = _Renaming(model, [root] + leaves)
    g_root = ren.apply(root, _guarantee(model.contracts[root]))
    obligations = []
    for leaf in leaves:
        a_leaf = ren.apply(leaf, _assume(model.contracts[leaf]))
        obligations.append(m.Obligation(
            quantified_vars=_quantified(ren, [g_root, a_leaf]),
            antecedent=g_root,
            consequent=a_leaf,
        ))
    antecedent = ren.apply(root, _assume(model.contracts[root]))
    consequents = tuple(
        (True, ren.apply(leaf, _guarantee(model.contracts[leaf]))) for leaf in leaves)
    derived = m.DerivedProperty(
        quantified_vars=_quantified(ren, [antecedent] + [f for _, f in consequents]),
        antecedent=antecedent,
        consequents=consequents,
    )
    result = CompositionResult("R2", tuple(obligations), derived, _substitution(used))
    _audit_renaming(ren, result.obligations, result.derived)
    return result


def apply_r3(model: m.SystemModel, sources: list[str], sink: str) -> CompositionResult:
    """Joining outputs: the sink's inputs are the union of the sources' outputs."""
    if not sources:
        raise _err("C004", "R3 needs at least one source")
    _require_nodes(model, sources + [sink])
    used = []
    for src in sources:
        used += _require_outputs_consumed(model, src, [sink], "R3")
    ren = _Renaming(model, sources + [sink])
    antecedent = m.conjoin(
        ren.apply(src, _guarantee(model.contracts[src])) for src in sources)
    consequent = ren.apply(sink, _assume(model.contracts[sink]))
    obligation = m.Obligation(
        quantified_vars=_quantified(ren, [antecedent, consequent]),
        antecedent=antecedent,
        consequent=consequent,
        note=R3_PERSISTENCE_NOTE,
    )
    d_ant = m.conjoin(ren.apply(src, _assume(model.contracts[src])) for src in sources)
    d_cons = ren.apply(sink, _guarantee(model.contracts[sink]))
    derived = m.DerivedProperty(
        quantified_vars=_quantified(ren, [d_ant, d_cons]),
        antecedent=d_ant,
        consequents=((True, d_cons),),
    )
    result = CompositionResult("R3", (obligation,), derived, _substitution(used),
                               notes=(R3_PERSISTENCE_NOTE,))
    _audit_renaming(ren, result.obligations, result.derived)
    return result


def apply_r4(model: m.SystemModel, n1: str, n2: str, n3: str, n4: str) -> CompositionResult:
    """Loop: n1 feeds n2, n2 and n3 feed each other, n3 also feeds n4.

    The three premise obligations come from internally applying the chain,
    branch and join rules to the loop; the branch rule's per-leaf obligations
    collapse into one implication with a conjoined consequent.
    """
    _require_nodes(model, [n1, n2, n3, n4])
    for src, dsts, what in ((n1, [n2], "n1 -> n2"), (n2, [n3], "n2 -> n3"),
                            (n3, [n2, n4], "n3 -> n2 and n3 -> n4")):
        try:
            _require_outputs_consumed(model, src, dsts, "R4")
        except DiagnosticError as exc:
            raise _err("C005", f"R4 loop shape mismatch ({what}): "
                               f"{exc.diagnostics[0].message}") from exc
    # n3's outputs must reach both n2 (closing the loop) and n4 (the exit)
    tc3 = model.contracts[n3]
    for var in tc3.contract.outputs:
        for dst, what in ((n2, "back edge n3 -> n2"), (n4, "exit edge n3 -> n4")):
            if not any(e.src_var == var.name for e in _edges_between(model, n3, dst)):
                raise _err("C005", f"R4 loop shape mismatch: {what} missing for "
                                   f"{n3}.{var.name}")

    sub_chain = apply_r1(model, [n2, n3])
    sub_branch = apply_r2(model, n3, [n2, n4])
    sub_join = apply_r3(model, [n1, n3], n2)

    branch_obs = sub_branch.obligations
    merged_branch = m.Obligation(
        quantified_vars=tuple(sorted(
            {qv for ob in branch_obs for qv in ob.quantified_vars},
            key=lambda qv: qv.name)),
        antecedent=branch_obs[0].antecedent,
        consequent=m.conjoin(ob.consequent for ob in branch_obs),
    )
    obligations = (sub_chain.obligations[0], merged_branch, sub_join.obligations[0])

    ren = _Renaming(model, [n1, n2, n3, n4])
    antecedent = ren.apply(n1, _assume(model.contracts[n1]))
    consequent = ren.apply(n4, _guarantee(model.contracts[n4]))
    derived = m.DerivedProperty(
        quantified_vars=_quantified(ren, [antecedent, consequent]),
        antecedent=antecedent,
        consequents=((True, consequent),),
    )
    used = [e for pair in (sub_chain, sub_branch, sub_join)
            for e in pair.substitution]
    substitution = tuple(dict.fromkeys(used))
    result = CompositionResult("R4", obligations, derived, substitution,
                               notes=sub_join.notes)
    _audit_renaming(ren, (), result.derived)
    return result


# ---------------------------------------------------------------------------
# Rendering

def _render_quantified(qvars: tuple[m.QuantVar, ...], body: str) -> str:
    if not qvars:
        return body
    groups: list[tuple[list[str], str]] = []
    for qv in qvars:
        if groups and groups[-1][1] == qv.type_name:
            groups[-1][0].append(qv.name)
        else:
            groups.append(([qv.name], qv.type_name))
    head = ", ".join(f"{', '.join(ns)} in {t}" for ns, t in groups)
    return f"forall({head} | {body})"


def fotl_skeleton(p) -> m.Formula:
    """The non-temporal formula underlying an obligation or derived property."""
    if isinstance(p, m.Obligation):
        body = m.Implies(p.antecedent, p.consequent)
        qvars = p.quantified_vars
    else:
        body = m.Implies(p.antecedent, m.conjoin(f for _, f in p.consequents))
        qvars = p.quantified_vars
    if qvars:
        return m.Quant(m.FORALL, qvars, body)
    return body


def render_fotl(p) -> str:
    """Plain-text FOTL: eventualities carry a ``<>`` prefix; with the ``<>``
    markers removed the text reparses to the property's formula skeleton."""
    if isinstance(p, m.Obligation):
        body = (f"({render_formula(p.antecedent)}) -> "
                f"({render_formula(p.consequent)})")
        return _render_quantified(p.quantified_vars, body)
    parts = []
    for eventually, f in p.consequents:
        text = f"({render_formula(f)})"
        parts.append(f"<> {text}" if eventually else text)
    body = f"({render_formula(p.antecedent)}) -> {' and '.join(parts)}"
    return _render_quantified(p.quantified_vars, body)


def render_stream_semantics(tc: TypedContract) -> str:
    """The contract in stream shape: consuming an input that satisfies the
    assumption eventually produces an output satisfying the guarantee."""
    c = tc.contract
    ins = ", ".join(v.name for v in c.inputs) or "()"
    outs = ", ".join(v.name for v in c.outputs) or "()"
    assume = render_formula(c.assume_formula)
    guarantee = render_formula(c.guarantee_formula)
    return (
        f"forall S, T |\n"
        f"  ( InStream([({ins}) | S]) and {assume} and OutStream(T) )\n"
        f"  -> <> ( InStream(S) and {guarantee} and OutStream([({outs}) | T]) )\n"
    )
