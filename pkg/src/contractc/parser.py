"""Recursive-descent parser for RCL documents and their formula sub-language.

Grammar sketch (see the repo README for the full table):

    document  : (context_clause | node_clause)+
    context   : "context" "{" (NAME (":" | "=") type_part ";")* "}"
    type_part : base ("x" base)* "-->" base | "{" ... "}" | "{}"
    node      : "node" NAME "{" inputs outputs topics? assume* guarantee+ "}"
    topic     : TYPE NAME ("matches" "(" ("in."|"out.")? NAME ")")?

Formula operator precedence, loosest first:
``<->``, ``->`` (right associative), ``or``, ``and``, ``not``, then
comparisons / membership and quantifier blocks ``forall(vs | body)``.

Parsing never crashes on malformed input: all failures are reported as
:class:`DiagnosticError` carrying spans into the source text.
"""

from __future__ import annotations

from .diagnostics import Diagnostic, DiagnosticError, Span, error
from .lexer import Token, tokenize
from . import model as m

COMPARE_OPS = {"==", "!=", "<", "<=", ">", ">="}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("KEYWORD", word)

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise self.fail(tok, f"expected {what or kind!r}, found {tok.text or 'end of input'!r}")
        return self.next()

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if not self.at_keyword(word):
            raise self.fail(tok, f"expected {word!r}, found {tok.text or 'end of input'!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            raise self.fail(tok, f"keyword {tok.text!r} may not be used as an {what}", code="P002")
        if tok.kind != "IDENT":
            raise self.fail(tok, f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.next()

    def fail(self, tok: Token, message: str, code: str = "P001") -> DiagnosticError:
        return DiagnosticError([error(tok.span, code, message)])

    # -- documents ----------------------------------------------------------

    def document(self) -> tuple[tuple[m.ContextDecl, ...], tuple[m.Contract, ...]]:
        decls: list[m.ContextDecl] = []
        contracts: list[m.Contract] = []
        diags: list[Diagnostic] = []
        while not self.at("EOF"):
            start = self.pos
            try:
                if self.at_keyword("context"):
                    decls.extend(self.context_clause())
                elif self.at_keyword("node"):
                    contracts.append(self.node_clause())
                else:
                    tok = self.peek()
                    raise self.fail(tok, f"expected 'context' or 'node', found {tok.text or 'end of input'!r}")
            except DiagnosticError as exc:
                diags.extend(exc.diagnostics)
                self._sync_clause(start)
        if diags:
            raise DiagnosticError(diags)
        return tuple(decls), tuple(contracts)

    def _sync_clause(self, start: int) -> None:
        """First-error-per-clause recovery: skip to the next clause keyword
        outside the braces of the clause we were in."""
        if self.pos == start:
            self.pos += 1
        depth = 0
        while not self.at("EOF"):
            tok = self.peek()
            if tok.kind == "{":
                depth += 1
            elif tok.kind == "}":
                depth = max(0, depth - 1)
            elif depth == 0 and tok.kind == "KEYWORD" and tok.text in ("context", "node"):
                return
            self.pos += 1

    def context_clause(self) -> list[m.ContextDecl]:
        self.expect_keyword("context")
        self.expect("{")
        decls = []
        while not self.at("}"):
            name = self.expect_ident("type name")
            is_constant = False
            if self.at("="):
                self.next()
                is_constant = True
            else:
                self.expect(":")
            body = self.type_part()
            self.expect(";")
            decls.append(m.ContextDecl(name.text, body, is_constant))
        self.expect("}")
        return decls

    def type_part(self) -> m.TypeExpr:
        if self.at("{"):
            return self.set_type()
        first = self.base_type()
        args = [first]
        while self.at("IDENT", "x"):
            self.next()
            args.append(self.base_type())
        if self.at("-->"):
            self.next()
            result = self.base_type()
            return m.FuncType(tuple(args), result)
        if len(args) == 1:
            raise self.fail(self.peek(), "expected '-->' or 'x' in type declaration")
        raise self.fail(self.peek(), "tuple types without '-->' are not supported; "
                                     "sequences and bare tuples are rejected")

    def base_type(self) -> str:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.text in m.BASE_TYPES:
            self.next()
            return tok.text
        if tok.kind == "IDENT":
            self.next()
            return tok.text
        raise self.fail(tok, f"expected a type, found {tok.text or 'end of input'!r}")

    def set_type(self) -> m.TypeExpr:
        self.expect("{")
        if self.at("}"):
            self.next()
            return m.EmptySet()
        members: list[str] = []
        ctors: list[m.CtorDecl] = []
        while True:
            name = self.expect_ident("set member")
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.base_type())
                    while self.at(","):
                        self.next()
                        args.append(self.base_type())
                self.expect(")")
                ctors.append(m.CtorDecl(name.text, tuple(args)))
            else:
                members.append(name.text)
            if self.at(","):
                self.next()
                continue
            break
        self.expect("}")
        if members and ctors:
            raise self.fail(self.peek(), "a set type may not mix enum members and constructors")
        if ctors:
            return m.CtorSet(tuple(ctors))
        return m.EnumSet(tuple(members))

    # -- node clauses -------------------------------------------------------

    def node_clause(self) -> m.Contract:
        self.expect_keyword("node")
        name = self.expect_ident("node name")
        self.expect("{")
        inputs = self.io_list("inputs")
        outputs = self.io_list("outputs")
        topics: tuple[m.TopicBinding, ...] = ()
        if self.at_keyword("topics"):
            topics = self.topic_list()
        assumes: list[m.Formula] = []
        while self.at_keyword("assume"):
            self.next()
            self.expect("(")
            assumes.append(self.formula())
            self.expect(")")
        guarantees: list[m.Formula] = []
        while self.at_keyword("guarantee"):
            self.next()
            self.expect("(")
            guarantees.append(self.formula())
            self.expect(")")
        close = self.peek()
        self.expect("}")
        if not guarantees:
            raise DiagnosticError([error(
                close.span, "P003",
                f"node {name.text!r}: at least one guarantee required")])
        return m.Contract(
            node_name=name.text,
            inputs=self._dedup_io(inputs, "in", name.text),
            outputs=self._dedup_io(outputs, "out", name.text),
            topics=topics,
            assumes=tuple(assumes),
            guarantees=tuple(guarantees),
        )

    def _dedup_io(self, vars_, direction: str, node: str) -> tuple[m.IoVar, ...]:
        seen = set()
        for v, tok in vars_:
            if v.name in seen:
                raise DiagnosticError([error(
                    tok.span, "P004",
                    f"node {node!r}: duplicate {direction}put variable {v.name!r}")])
            seen.add(v.name)
        return tuple(v for v, _ in vars_)

    def io_list(self, keyword: str):
        self.expect_keyword(keyword)
        self.expect("(")
        direction = "in" if keyword == "inputs" else "out"
        out = []
        if not self.at(")"):
            while True:
                name = self.expect_ident("variable name")
                self.expect(":")
                type_name = self.base_type()
                out.append((m.IoVar(direction, name.text, type_name), name))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        return out

    def topic_list(self) -> tuple[m.TopicBinding, ...]:
        self.expect_keyword("topics")
        self.expect("(")
        topics = []
        if not self.at(")"):
            while True:
                topics.append(self.topic())
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        return tuple(topics)

    def topic(self) -> m.TopicBinding:
        tok = self.peek()
        if tok.kind not in ("PATH", "IDENT"):
            raise self.fail(tok, f"expected a message type, found {tok.text or 'end of input'!r}")
        self.next()
        name = self.expect_ident("topic name")
        binding = None
        if self.at_keyword("matches"):
            self.next()
            self.expect("(")
            binding = self.binding_ref()
            self.expect(")")
        return m.TopicBinding(tok.text, name.text, binding)

    def binding_ref(self) -> m.BindingRef:
        if self.at_keyword("in") or self.at("IDENT", "out"):
            direction = self.next().text
            self.expect(".")
            name = self.expect_ident("variable name")
            return m.BindingRef(direction, name.text)
        name = self.expect_ident("variable name")
        return m.BindingRef(None, name.text)

    # -- formulas -----------------------------------------------------------

    def formula(self) -> m.Formula:
        return self.iff_formula()

    def iff_formula(self) -> m.Formula:
        left = self.implies_formula()
        while self.at("<->"):
            self.next()
            left = m.Iff(left, self.implies_formula())
        return left

    def implies_formula(self) -> m.Formula:
        left = self.or_formula()
        if self.at("->"):
            self.next()
            return m.Implies(left, self.implies_formula())  # right associative
        return left

    def or_formula(self) -> m.Formula:
        left = self.and_formula()
        while self.at_keyword("or"):
            self.next()
            left = m.Or(left, self.and_formula())
        return left

    def and_formula(self) -> m.Formula:
        left = self.unary_formula()
        while self.at_keyword("and"):
            self.next()
            left = m.And(left, self.unary_formula())
        return left

    def unary_formula(self) -> m.Formula:
        if self.at_keyword("not"):
            self.next()
            return m.Not(self.unary_formula())
        if self.at_keyword("forall") or self.at_keyword("exists"):
            return self.quantifier()
        if self.at("("):
            self.next()
            inner = self.formula()
            self.expect(")")
            return self._relational_tail_or(inner)
        return self.relational()

    def _relational_tail_or(self, inner: m.Formula) -> m.Formula:
        # "(x) == y" style: a parenthesised atom may still be the left side
        # of a comparison when it wraps a plain term.
        if (self.at("=") or any(self.at(op) for op in COMPARE_OPS)) and isinstance(inner, m.Atom):
            return self._relational_tail(inner.term)
        return inner

    def quantifier(self) -> m.Formula:
        tok = self.next()
        kind = tok.text
        if self.at("!"):
            self.next()
            if kind != "exists":
                raise self.fail(tok, "'!' is only valid after 'exists'")
            kind = m.EXISTS_UNIQUE
        self.expect("(")
        qvars = self.quant_groups()
        self.expect("|")
        body = self.formula()
        self.expect(")")
        return m.Quant(kind, qvars, body)

    def quant_groups(self) -> tuple[m.QuantVar, ...]:
        out: list[m.QuantVar] = []
        while True:
            names = [self.expect_ident("quantified variable")]
            while self.at(","):
                self.next()
                names.append(self.expect_ident("quantified variable"))
                # a name followed by 'in' closes this group
                if self.at_keyword("in"):
                    break
            self.expect_keyword("in")
            type_name = self.base_type()
            out.extend(m.QuantVar(n.text, type_name) for n in names)
            if self.at(","):
                self.next()
                continue
            break
        seen = set()
        for qv in out:
            if qv.name in seen:
                raise self.fail(self.peek(), f"duplicate quantified variable {qv.name!r}")
            seen.add(qv.name)
        return tuple(out)

    def relational(self) -> m.Formula:
        # TRUE/FALSE standing alone are formulas; before an operator they are
        # boolean literal terms ("in.at(x, y) == TRUE").
        if self.at_keyword("TRUE") or self.at_keyword("FALSE"):
            if not self._next_is_relational(1):
                return m.BoolConst(self.next().text == "TRUE")
        left = self.term()
        return self._relational_tail(left)

    def _relational_tail(self, left: m.Term) -> m.Formula:
        if self.at_keyword("in"):
            self.next()
            return m.Membership(left, self.member_set(), negated=False)
        if self.at("!") and self.peek(1).kind == "KEYWORD" and self.peek(1).text == "in":
            self.next()
            self.next()
            return m.Membership(left, self.member_set(), negated=True)
        for op in COMPARE_OPS:
            if self.at(op):
                self.next()
                return m.Compare(left, op, self.term())
        if self.at("="):  # single '=' accepted as equality
            self.next()
            return m.Compare(left, "==", self.term())
        return m.Atom(left)

    def _next_is_relational(self, offset: int) -> bool:
        tok = self.peek(offset)
        return tok.kind in COMPARE_OPS or tok.kind == "="

    def member_set(self) -> tuple[str, ...]:
        self.expect("{")
        members = [self.expect_ident("enum member").text]
        while self.at(","):
            self.next()
            members.append(self.expect_ident("enum member").text)
        self.expect("}")
        return tuple(members)

    def term(self) -> m.Term:
        base = self.primary_term()
        if self.at("+"):
            tok = self.next()
            num = self.expect("NUMBER", "natural literal")
            if "." in num.text:
                raise self.fail(num, "only natural literals may be added")
            return m.Sum(base, int(num.text))
        return base

    def primary_term(self) -> m.Term:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            value = float(tok.text) if "." in tok.text else int(tok.text)
            return m.NumLit(value)
        if self.at_keyword("TRUE") or self.at_keyword("FALSE"):
            self.next()
            return m.BoolLit(tok.text == "TRUE")
        if self.at_keyword("in") or self.at("IDENT", "out"):
            if self.peek(1).kind == ".":
                direction = self.next().text
                self.next()
                name = self.expect_ident("variable name")
                return self.call_tail(m.IoAccess(direction, name.text))
        if tok.kind == "IDENT":
            self.next()
            return self.call_tail(m.Var(tok.text))
        raise self.fail(tok, f"expected a term, found {tok.text or 'end of input'!r}")

    def call_tail(self, callee) -> m.Term:
        if not self.at("("):
            return callee
        self.next()
        args = []
        if not self.at(")"):
            args.append(self.term())
            while self.at(","):
                self.next()
                args.append(self.term())
        self.expect(")")
        return m.Call(callee, tuple(args))


def parse_document(source: str):
    """Parse an RCL document into context declarations and contracts.

    Raises :class:`DiagnosticError` with every clause's first error on
    malformed input.
    """
    parser = _Parser(tokenize(source))
    return parser.document()


def parse_formula(source: str) -> m.Formula:
    """Parse a single formula in the plain-text FOL encoding."""
    parser = _Parser(tokenize(source))
    formula = parser.formula()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise parser.fail(tok, f"unexpected trailing input {tok.text!r}")
    return formula
