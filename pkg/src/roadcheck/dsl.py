"""Assertion definition language: lexer, parser, AST, pretty-printer.

Grammar (EBNF):

    document    := { const_decl | assertion_decl }
    const_decl  := "const" IDENT "=" expr
    assertion_decl := "assertion" IDENT "{"
                        "odd:" taglist
                        "type:" kind
                        [ "window:" duration ]
                        [ "severity:" ("safety" | "performance") ]
                        [ "mode:" ("first" | "all") ]
                        [ "on_missing:" ("fail" | "pass" | "not_applicable") ]
                        [ "reference:" expr ]
                        "condition:" expr
                      "}"
    kind        := "invariant" | "execution"
                 | "pre_temporal" | "pre_physical"
                 | "post_temporal" | "post_physical"
    taglist     := IDENT { "," IDENT }
    duration    := NUMBER ("s" | "ms")

    expr        := or_expr
    or_expr     := and_expr { "or" and_expr }
    and_expr    := cmp_expr { "and" cmp_expr }
    cmp_expr    := add_expr [ ("<"|"<="|">"|">="|"=="|"!=") add_expr ]
    add_expr    := mul_expr { ("+"|"-") mul_expr }
    mul_expr    := unary { ("*"|"/") unary }
    unary       := ("not" | "-") unary | atom
    atom        := NUMBER | duration | STRING | "true" | "false"
                 | IDENT "(" [expr {"," expr}] ")" | IDENT | "(" expr ")"

Precedence, loosest first: or < and < comparisons < + - < * / < not/-.
Comparisons do not chain.  ``//`` starts a line comment.  Numeric literals
are unit-polymorphic; duration literals carry seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

_CMP_OPS = ("<=", ">=", "==", "!=", "<", ">")
_KINDS = ("invariant", "execution", "pre_temporal", "pre_physical",
          "post_temporal", "post_physical")
_SEVERITIES = ("safety", "performance")
_MODES = ("first", "all")
_ON_MISSING = ("fail", "pass", "not_applicable")


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


class ParseError(ValueError):
    """Syntax or lexical error with a source location."""

    def __init__(self, message, line, col, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        suffix = ""
        if self.expected:
            suffix = f" (expected {', '.join(self.expected)})"
        super().__init__(f"{line}:{col}: {message}{suffix}")


# --- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    span: Span = field(compare=False, repr=False, kw_only=True,
                       default=Span(0, 0))


@dataclass(frozen=True)
class NumberLit(Expr):
    value: float


@dataclass(frozen=True)
class DurationLit(Expr):
    seconds: float


@dataclass(frozen=True)
class StringLit(Expr):
    value: str


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class NameRef(Expr):
    name: str


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str            # "and", "or", "+", "-", "*", "/"
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Compare(Expr):
    op: str            # one of _CMP_OPS
    left: Expr
    right: Expr


@dataclass(frozen=True)
class ConstDecl:
    name: str
    expr: Expr
    span: Span = field(compare=False, repr=False, default=Span(0, 0))


@dataclass(frozen=True)
class AssertionDecl:
    name: str
    odd_tags: tuple
    kind: str
    window: float | None
    severity: str
    mode: str
    on_missing: str
    reference: Expr | None
    condition: Expr
    span: Span = field(compare=False, repr=False, default=Span(0, 0))


@dataclass(frozen=True)
class Document:
    consts: tuple
    assertions: tuple


# --- Lexer ----------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str      # IDENT NUMBER DURATION STRING PUNCT EOF
    value: object
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = seen_exp = False
            while j < n:
                c = text[j]
                if c.isdigit():
                    j += 1
                elif c == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif c in "eE" and not seen_exp and j + 1 < n and (
                        text[j + 1].isdigit() or text[j + 1] in "+-"):
                    seen_exp = True
                    j += 1
                    if text[j] in "+-":
                        j += 1
                else:
                    break
            raw = text[i:j]
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(f"malformed number {raw!r}", line, start_col)
            # духation suffix: s or ms not followed by more identifier chars
            if j < n and text[j] == "m" and j + 1 < n and text[j + 1] == "s" \
                    and (j + 2 >= n or not (text[j + 2].isalnum() or text[j + 2] == "_")):
                tokens.append(Token("DURATION", value / 1000.0, line, start_col))
                j += 2
            elif j < n and text[j] == "s" and (
                    j + 1 >= n or not (text[j + 1].isalnum() or text[j + 1] == "_")):
                tokens.append(Token("DURATION", value, line, start_col))
                j += 1
            else:
                tokens.append(Token("NUMBER", value, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ParseError("unterminated string", line, start_col)
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string", line, start_col)
            tokens.append(Token("STRING", "".join(buf), line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        two = text[i:i + 2]
        if two in ("<=", ">=", "==", "!="):
            tokens.append(Token("PUNCT", two, line, start_col))
            i += 2
            col += 2
            continue
        if ch in "{}(),:=<>+-*/":
            tokens.append(Token("PUNCT", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("EOF", None, line, col))
    return tokens


# --- Parser ---------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, expected=()):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col, expected)

    def expect_punct(self, value) -> Token:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.value == value:
            return self.next()
        got = repr(tok.value) if tok.kind != "EOF" else "end of input"
        self.error(f"found {got}", expected=(repr(value),))

    def expect_ident(self, description="identifier") -> Token:
        tok = self.peek()
        if tok.kind == "IDENT":
            return self.next()
        got = repr(tok.value) if tok.kind != "EOF" else "end of input"
        self.error(f"found {got}", expected=(description,))

    def at_ident(self, value) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.value == value

    # -- document --

    def parse_document(self) -> Document:
        consts = []
        assertions = []
        names = set()
        while self.peek().kind != "EOF":
            if self.at_ident("const"):
                consts.append(self.parse_const())
            elif self.at_ident("assertion"):
                decl = self.parse_assertion()
                if decl.name in names:
                    raise ParseError(f"duplicate assertion id {decl.name!r}",
                                     decl.span.line, decl.span.col)
                names.add(decl.name)
                assertions.append(decl)
            else:
                self.error("expected a declaration",
                           expected=("'const'", "'assertion'"))
        return Document(consts=tuple(consts), assertions=tuple(assertions))

    def parse_const(self) -> ConstDecl:
        kw = self.next()
        name = self.expect_ident("constant name")
        self.expect_punct("=")
        expr = self.parse_expr()
        return ConstDecl(name=name.value, expr=expr,
                         span=Span(kw.line, kw.col))

    def _field(self, name) -> bool:
        """Consume ``name ':'`` when present."""
        if self.at_ident(name):
            save = self.pos
            self.next()
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.value == ":":
                self.next()
                return True
            self.pos = save
        return False

    def parse_assertion(self) -> AssertionDecl:
        kw = self.next()
        name = self.expect_ident("assertion name")
        self.expect_punct("{")

        if not self._field("odd"):
            self.error("assertion body must start with the odd tag list",
                       expected=("'odd:'",))
        tags = [self.expect_ident("ODD tag").value]
        while self.peek().kind == "PUNCT" and self.peek().value == ",":
            self.next()
            tags.append(self.expect_ident("ODD tag").value)

        if not self._field("type"):
            self.error("expected the assertion type", expected=("'type:'",))
        kind_tok = self.expect_ident("assertion kind")
        if kind_tok.value not in _KINDS:
            raise ParseError(f"unknown assertion kind {kind_tok.value!r}",
                             kind_tok.line, kind_tok.col, expected=_KINDS)
        kind = kind_tok.value

        window = None
        if self._field("window"):
            tok = self.peek()
            if tok.kind != "DURATION":
                self.error("window must be a duration",
                           expected=("duration like 2s or 500ms",))
            self.next()
            if tok.value <= 0.0:
                raise ParseError("window must be positive", tok.line, tok.col)
            window = tok.value
        if kind in ("invariant", "execution") and window is not None:
            raise ParseError(f"{kind} assertions take no window",
                             kind_tok.line, kind_tok.col)
        if kind not in ("invariant", "execution") and window is None:
            raise ParseError(f"{kind} assertions require a window",
                             kind_tok.line, kind_tok.col)

        severity = "safety"
        if self._field("severity"):
            tok = self.expect_ident("severity")
            if tok.value not in _SEVERITIES:
                raise ParseError(f"unknown severity {tok.value!r}",
                                 tok.line, tok.col, expected=_SEVERITIES)
            severity = tok.value

        mode = "first"
        if self._field("mode"):
            tok = self.expect_ident("reference mode")
            if tok.value not in _MODES:
                raise ParseError(f"unknown mode {tok.value!r}",
                                 tok.line, tok.col, expected=_MODES)
            mode = tok.value

        on_missing = "fail"
        if self._field("on_missing"):
            tok = self.expect_ident("missing-actor policy")
            if tok.value not in _ON_MISSING:
                raise ParseError(f"unknown policy {tok.value!r}",
                                 tok.line, tok.col, expected=_ON_MISSING)
            on_missing = tok.value

        reference = None
        if self._field("reference"):
            reference = self.parse_expr()
        if kind == "invariant" and reference is not None:
            raise ParseError("invariant assertions take no reference",
                             kind_tok.line, kind_tok.col)
        if kind != "invariant" and reference is None:
            self.error(f"{kind} assertions require a reference",
                       expected=("'reference:'",))

        if not self._field("condition"):
            self.error("expected the assertion condition",
                       expected=("'condition:'",))
        condition = self.parse_expr()

        self.expect_punct("}")
        return AssertionDecl(name=name.value, odd_tags=tuple(tags), kind=kind,
                             window=window, severity=severity, mode=mode,
                             on_missing=on_missing, reference=reference,
                             condition=condition, span=Span(kw.line, kw.col))

    # -- expressions --

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at_ident("or"):
            tok = self.next()
            right = self.parse_and()
            left = BinaryOp(op="or", left=left, right=right,
                            span=Span(tok.line, tok.col))
        return left

    def parse_and(self) -> Expr:
        left = self.parse_cmp()
        while self.at_ident("and"):
            tok = self.next()
            right = self.parse_cmp()
            left = BinaryOp(op="and", left=left, right=right,
                            span=Span(tok.line, tok.col))
        return left

    def parse_cmp(self) -> Expr:
        left = self.parse_add()
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.value in _CMP_OPS:
            self.next()
            right = self.parse_add()
            nxt = self.peek()
            if nxt.kind == "PUNCT" and nxt.value in _CMP_OPS:
                self.error("comparisons do not chain; parenthesise")
            return Compare(op=tok.value, left=left, right=right,
                           span=Span(tok.line, tok.col))
        return left

    def parse_add(self) -> Expr:
        left = self.parse_mul()
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.value in ("+", "-"):
                self.next()
                right = self.parse_mul()
                left = BinaryOp(op=tok.value, left=left, right=right,
                                span=Span(tok.line, tok.col))
            else:
                return left

    def parse_mul(self) -> Expr:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.value in ("*", "/"):
                self.next()
                right = self.parse_unary()
                left = BinaryOp(op=tok.value, left=left, right=right,
                                span=Span(tok.line, tok.col))
            else:
                return left

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if self.at_ident("not"):
            self.next()
            return Not(operand=self.parse_unary(), span=Span(tok.line, tok.col))
        if tok.kind == "PUNCT" and tok.value == "-":
            self.next()
            return Neg(operand=self.parse_unary(), span=Span(tok.line, tok.col))
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.peek()
        span = Span(tok.line, tok.col)
        if tok.kind == "NUMBER":
            self.next()
            return NumberLit(value=tok.value, span=span)
        if tok.kind == "DURATION":
            self.next()
            return DurationLit(seconds=tok.value, span=span)
        if tok.kind == "STRING":
            self.next()
            return StringLit(value=tok.value, span=span)
        if tok.kind == "IDENT":
            if tok.value in ("true", "false"):
                self.next()
                return BoolLit(value=(tok.value == "true"), span=span)
            if tok.value in ("and", "or", "not"):
                self.error(f"{tok.value!r} is not a value")
            self.next()
            nxt = self.peek()
            if nxt.kind == "PUNCT" and nxt.value == "(":
                self.next()
                args = []
                if not (self.peek().kind == "PUNCT" and self.peek().value == ")"):
                    args.append(self.parse_expr())
                    while self.peek().kind == "PUNCT" and self.peek().value == ",":
                        self.next()
                        args.append(self.parse_expr())
                self.expect_punct(")")
                return Call(name=tok.value, args=tuple(args), span=span)
            return NameRef(name=tok.value, span=span)
        if tok.kind == "PUNCT" and tok.value == "(":
            self.next()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        got = repr(tok.value) if tok.kind != "EOF" else "end of input"
        self.error(f"found {got}", expected=("an expression",))


def parse(text: str) -> Document:
    """Parse a document; raises ParseError with line:column on bad input."""
    return _Parser(_lex(text)).parse_document()


def parse_expression(text: str) -> Expr:
    """Parse a single expression (used for programmatic rule construction)."""
    parser = _Parser(_lex(text))
    expr = parser.parse_expr()
    if parser.peek().kind != "EOF":
        parser.error("trailing input after expression")
    return expr


# --- Pretty-printer -------------------------------------------------------

_PREC = {"or": 1, "and": 2, "cmp": 3, "+": 4, "-": 4, "*": 5, "/": 5,
         "unary": 6, "atom": 7}


def _prec(node: Expr) -> int:
    if isinstance(node, BinaryOp):
        return _PREC[node.op]
    if isinstance(node, Compare):
        return _PREC["cmp"]
    if isinstance(node, (Not, Neg)):
        return _PREC["unary"]
    return _PREC["atom"]


def format_expr(node: Expr) -> str:
    """Deterministic rendering with minimal parentheses."""
    if isinstance(node, NumberLit):
        return repr(node.value)
    if isinstance(node, DurationLit):
        return f"{node.seconds!r}s"
    if isinstance(node, StringLit):
        return '"' + node.value.replace('"', '\\"') + '"'
    if isinstance(node, BoolLit):
        return "true" if node.value else "false"
    if isinstance(node, NameRef):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(format_expr(a) for a in node.args)})"
    if isinstance(node, Not):
        inner = format_expr(node.operand)
        if _prec(node.operand) < _PREC["unary"]:
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(node, Neg):
        inner = format_expr(node.operand)
        if _prec(node.operand) < _PREC["unary"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Compare):
        lhs, rhs = format_expr(node.left), format_expr(node.right)
        if _prec(node.left) <= _PREC["cmp"]:
            lhs = f"({lhs})"
        if _prec(node.right) <= _PREC["cmp"]:
            rhs = f"({rhs})"
        return f"{lhs} {node.op} {rhs}"
    if isinstance(node, BinaryOp):
        prec = _PREC[node.op]
        lhs, rhs = format_expr(node.left), format_expr(node.right)
        if _prec(node.left) < prec:
            lhs = f"({lhs})"
        # operators parse left-associative, so a right child at equal
        # precedence must keep its parentheses to re-parse identically
        if _prec(node.right) <= prec:
            rhs = f"({rhs})"
        return f"{lhs} {node.op} {rhs}"
    raise TypeError(f"unknown expression node {type(node).__name__}")


def format_document(doc: Document) -> str:
    """Canonical text; parse(format_document(parse(s))) == parse(s)."""
    chunks = []
    for const in doc.consts:
        chunks.append(f"const {const.name} = {format_expr(const.expr)}")
    for a in doc.assertions:
        lines = [f"assertion {a.name} {{"]
        lines.append(f"  odd: {', '.join(a.odd_tags)}")
        lines.append(f"  type: {a.kind}")
        if a.window is not None:
            lines.append(f"  window: {a.window!r}s")
        lines.append(f"  severity: {a.severity}")
        lines.append(f"  mode: {a.mode}")
        lines.append(f"  on_missing: {a.on_missing}")
        if a.reference is not None:
            lines.append(f"  reference: {format_expr(a.reference)}")
        lines.append(f"  condition: {format_expr(a.condition)}")
        lines.append("}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"
