"""Renderers: RCL concrete syntax (round-trip safe) and LaTeX.

``render_rcl`` output always reparses to a structurally identical document;
the formula renderer inserts parentheses exactly where precedence demands.
"""

from __future__ import annotations

from . import model as m

# precedence levels, loosest first; atoms get the highest level
_PREC_IFF = 1
_PREC_IMPLIES = 2
_PREC_OR = 3
_PREC_AND = 4
_PREC_NOT = 5
_PREC_ATOM = 6


def render_term(t: m.Term) -> str:
    if isinstance(t, m.Var):
        return t.name
    if isinstance(t, m.IoAccess):
        return f"{t.direction}.{t.name}"
    if isinstance(t, m.NumLit):
        return repr(t.value) if isinstance(t.value, float) else str(t.value)
    if isinstance(t, m.BoolLit):
        return "TRUE" if t.value else "FALSE"
    if isinstance(t, m.Call):
        args = ", ".join(render_term(a) for a in t.args)
        return f"{render_term(t.callee)}({args})"
    if isinstance(t, m.Sum):
        return f"{render_term(t.base)} + {t.addend}"
    raise TypeError(f"unknown term {t!r}")


def _quant_groups(qvars: tuple[m.QuantVar, ...]) -> str:
    groups: list[tuple[list[str], str]] = []
    for qv in qvars:
        if groups and groups[-1][1] == qv.type_name:
            groups[-1][0].append(qv.name)
        else:
            groups.append(([qv.name], qv.type_name))
    return ", ".join(f"{', '.join(names)} in {tn}" for names, tn in groups)


def render_formula(f: m.Formula, parent_prec: int = 0) -> str:
    text, prec = _render(f)
    if prec < parent_prec:
        return f"({text})"
    return text


def _render(f: m.Formula) -> tuple[str, int]:
    if isinstance(f, m.Quant):
        kw = {"forall": "forall", "exists": "exists", "exists!": "exists!"}[f.kind]
        return f"{kw}({_quant_groups(f.vars)} | {render_formula(f.body)})", _PREC_ATOM
    if isinstance(f, m.And):
        return (f"{render_formula(f.left, _PREC_AND)} and "
                f"{render_formula(f.right, _PREC_AND + 1)}"), _PREC_AND
    if isinstance(f, m.Or):
        return (f"{render_formula(f.left, _PREC_OR)} or "
                f"{render_formula(f.right, _PREC_OR + 1)}"), _PREC_OR
    if isinstance(f, m.Implies):
        # right associative: parenthesise a left operand of equal level
        return (f"{render_formula(f.left, _PREC_IMPLIES + 1)} -> "
                f"{render_formula(f.right, _PREC_IMPLIES)}"), _PREC_IMPLIES
    if isinstance(f, m.Iff):
        return (f"{render_formula(f.left, _PREC_IFF)} <-> "
                f"{render_formula(f.right, _PREC_IFF + 1)}"), _PREC_IFF
    if isinstance(f, m.Not):
        return f"not {render_formula(f.body, _PREC_ATOM)}", _PREC_NOT
    if isinstance(f, m.Membership):
        op = "!in" if f.negated else "in"
        return f"{render_term(f.term)} {op} {{{', '.join(f.members)}}}", _PREC_ATOM
    if isinstance(f, m.Compare):
        return f"{render_term(f.left)} {f.op} {render_term(f.right)}", _PREC_ATOM
    if isinstance(f, m.BoolConst):
        return ("TRUE" if f.value else "FALSE"), _PREC_ATOM
    if isinstance(f, m.Atom):
        return render_term(f.term), _PREC_ATOM
    raise TypeError(f"unknown formula {f!r}")


# ---------------------------------------------------------------------------
# RCL documents

def _render_type_expr(t: m.TypeExpr) -> str:
    if isinstance(t, m.EnumSet):
        return "{" + ", ".join(t.members) + "}"
    if isinstance(t, m.FuncType):
        return " x ".join(t.args) + " --> " + t.result
    if isinstance(t, m.CtorSet):
        ctors = ", ".join(f"{c.name}({', '.join(c.args)})" for c in t.ctors)
        return "{ " + ctors + " }"
    if isinstance(t, m.EmptySet):
        return "{}"
    raise TypeError(f"unknown type expression {t!r}")


def _render_topic(t: m.TopicBinding) -> str:
    out = f"{t.message_type} {t.topic_name}"
    if t.binding is not None:
        ref = t.binding.name if t.binding.direction is None else \
            f"{t.binding.direction}.{t.binding.name}"
        out += f" matches({ref})"
    return out


def render_contract(c: m.Contract) -> str:
    lines = [f"node {c.node_name} {{"]
    io = ", ".join(f"{v.name} : {v.type_name}" for v in c.inputs)
    lines.append(f"  inputs({io})")
    io = ", ".join(f"{v.name} : {v.type_name}" for v in c.outputs)
    lines.append(f"  outputs({io})")
    if c.topics:
        lines.append("  topics(")
        for i, t in enumerate(c.topics):
            sep = "," if i < len(c.topics) - 1 else ""
            lines.append(f"    {_render_topic(t)}{sep}")
        lines.append("  )")
    else:
        lines.append("  topics()")
    for a in c.assumes:
        lines.append(f"  assume({render_formula(a)})")
    for g in c.guarantees:
        lines.append(f"  guarantee({render_formula(g)})")
    lines.append("}")
    return "\n".join(lines)


def render_rcl(doc) -> str:
    """Render (context declarations, contracts) back to RCL source text."""
    decls, contracts = doc
    chunks = []
    if decls:
        lines = ["context {"]
        for d in decls:
            sep = "=" if d.is_constant else ":"
            lines.append(f"  {d.name} {sep} {_render_type_expr(d.body)};")
        lines.append("}")
        chunks.append("\n".join(lines))
    for c in contracts:
        chunks.append(render_contract(c))
    return "\n\n".join(chunks) + "\n"


# ---------------------------------------------------------------------------
# LaTeX

_LATEX_OPS = {"==": "=", "!=": r"\neq", "<": "<", "<=": r"\leq", ">": ">", ">=": r"\geq"}


def _latex_term(t: m.Term) -> str:
    if isinstance(t, m.Var):
        return t.name.replace("_", r"\_")
    if isinstance(t, m.IoAccess):
        return f"{t.direction}.{t.name}".replace("_", r"\_")
    if isinstance(t, m.NumLit):
        return str(t.value)
    if isinstance(t, m.BoolLit):
        return "TRUE" if t.value else "FALSE"
    if isinstance(t, m.Call):
        return f"{_latex_term(t.callee)}({', '.join(_latex_term(a) for a in t.args)})"
    if isinstance(t, m.Sum):
        return f"{_latex_term(t.base)} + {t.addend}"
    raise TypeError(f"unknown term {t!r}")


def latex_formula(f: m.Formula, parent_prec: int = 0) -> str:
    text, prec = _latex(f)
    if prec < parent_prec:
        return f"({text})"
    return text


def _latex(f: m.Formula) -> tuple[str, int]:
    if isinstance(f, m.Quant):
        sym = {"forall": r"\forall", "exists": r"\exists", "exists!": r"\exists!"}[f.kind]
        groups: list[tuple[list[str], str]] = []
        for qv in f.vars:
            if groups and groups[-1][1] == qv.type_name:
                groups[-1][0].append(qv.name)
            else:
                groups.append(([qv.name], qv.type_name))
        head = ", ".join(f"{', '.join(ns)} \\in {tn}" for ns, tn in groups)
        return f"{sym} {head} \\cdot {latex_formula(f.body)}", _PREC_ATOM
    if isinstance(f, m.And):
        return (f"{latex_formula(f.left, _PREC_AND)} \\land "
                f"{latex_formula(f.right, _PREC_AND + 1)}"), _PREC_AND
    if isinstance(f, m.Or):
        return (f"{latex_formula(f.left, _PREC_OR)} \\lor "
                f"{latex_formula(f.right, _PREC_OR + 1)}"), _PREC_OR
    if isinstance(f, m.Implies):
        return (f"{latex_formula(f.left, _PREC_IMPLIES + 1)} \\implies "
                f"{latex_formula(f.right, _PREC_IMPLIES)}"), _PREC_IMPLIES
    if isinstance(f, m.Iff):
        return (f"{latex_formula(f.left, _PREC_IFF)} \\iff "
                f"{latex_formula(f.right, _PREC_IFF + 1)}"), _PREC_IFF
    if isinstance(f, m.Not):
        return f"\\neg {latex_formula(f.body, _PREC_ATOM)}", _PREC_NOT
    if isinstance(f, m.Membership):
        op = r"\notin" if f.negated else r"\in"
        return f"{_latex_term(f.term)} {op} \\{{{', '.join(f.members)}\\}}", _PREC_ATOM
    if isinstance(f, m.Compare):
        return f"{_latex_term(f.left)} {_LATEX_OPS[f.op]} {_latex_term(f.right)}", _PREC_ATOM
    if isinstance(f, m.BoolConst):
        return ("TRUE" if f.value else "FALSE"), _PREC_ATOM
    if isinstance(f, m.Atom):
        return _latex_term(f.term), _PREC_ATOM
    raise TypeError(f"unknown formula {f!r}")


def render_latex(contract: m.Contract) -> str:
    """One math display per assume/guarantee, Appendix-style."""
    lines = [f"% node {contract.node_name}", r"\begin{array}{rl}"]
    ins = ", ".join(f"{v.name} : {v.type_name}" for v in contract.inputs)
    outs = ", ".join(f"{v.name} : {v.type_name}" for v in contract.outputs)
    lines.append(f"inputs &( {ins} )\\\\".replace("_", r"\_"))
    lines.append(f"outputs &( {outs} )\\\\".replace("_", r"\_"))
    if contract.topics:
        topics = ", ".join(
            (f"{t.message_type}~{t.topic_name}" +
             (f"~matches:~{t.binding.name if t.binding.direction is None else t.binding.direction + '.' + t.binding.name}"
              if t.binding else ""))
            for t in contract.topics)
        lines.append(f"topics &( {topics} )\\\\".replace("_", r"\_"))
    assumes = contract.assumes or (m.TRUE,)
    for a in assumes:
        lines.append(f"assume &( {latex_formula(a)} )\\\\")
    for g in contract.guarantees:
        lines.append(f"guarantee &( {latex_formula(g)} )\\\\")
    lines.append(r"\end{array}")
    return "\n".join(lines) + "\n"
