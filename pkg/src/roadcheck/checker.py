"""Type checking and compilation of assertion documents.

Units are part of the type system: quantities carry (metre, second, radian)
exponents, so comparing metres to seconds is a compile-time error.  Bare
numeric literals are unit-polymorphic in comparisons and additions (they
adopt the other side's unit) and act as dimensionless scalars under * and /.
Duration literals are firmly seconds.

String literals type as actor references; whether an actor is actually
present is an evaluation-time concern, not a compile-time one.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass

from . import dsl
from .dsl import (AssertionDecl, BinaryOp, BoolLit, Call, Compare, Document,
                  DurationLit, NameRef, Neg, Not, NumberLit, StringLit)


@dataclass(frozen=True)
class Quantity:
    """Dimension exponents over (metres, seconds, radians)."""

    m: int = 0
    s: int = 0
    rad: int = 0

    def __str__(self):
        if self == DIMENSIONLESS:
            return "dimensionless"
        parts = []
        for sym, exp in (("m", self.m), ("s", self.s), ("rad", self.rad)):
            if exp == 1:
                parts.append(sym)
            elif exp != 0:
                parts.append(f"{sym}^{exp}")
        return "*".join(parts)


DIMENSIONLESS = Quantity()
METRES = Quantity(m=1)
SECONDS = Quantity(s=1)
MPS = Quantity(m=1, s=-1)
RADIANS = Quantity(rad=1)
AREA = Quantity(m=2)


class _Sentinel:
    def __init__(self, label):
        self.label = label

    def __str__(self):
        return self.label

    __repr__ = __str__


BOOL = _Sentinel("boolean")
POLYGON = _Sentinel("polygon")
ACTOR = _Sentinel("actor")
POLY_NUM = _Sentinel("number")   # unit-polymorphic literal


#: name -> (parameter types, return type)
REGISTRY = {
    "time": ((), SECONDS),
    "speed_of": ((ACTOR,), MPS),
    "box_of": ((ACTOR,), POLYGON),
    "danger_space_of": ((ACTOR,), POLYGON),
    "overlaps": ((POLYGON, POLYGON), BOOL),
    "min_distance": ((POLYGON, POLYGON), METRES),
    "overlap_area": ((POLYGON, POLYGON), AREA),
    "crosses_centreline": ((ACTOR,), BOOL),
    "distance_ahead": ((ACTOR, ACTOR), METRES),
    "sda": ((), METRES),
    "within_lane": ((ACTOR,), BOOL),
    "heading_rel_lane": ((ACTOR,), RADIANS),
    "danger_space_length": ((MPS,), METRES),
}


@dataclass(frozen=True)
class TypeDiagnostic:
    message: str
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class TypecheckError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class CompiledAssertion:
    """A type-checked assertion with constants inlined."""

    decl: AssertionDecl
    reference: dsl.Expr | None
    condition: dsl.Expr

    @property
    def id(self):
        return self.decl.name


@dataclass(frozen=True)
class CompiledDocument:
    assertions: tuple

    def __iter__(self):
        return iter(self.assertions)


class _Checker:
    def __init__(self, registry):
        self.registry = registry
        self.diagnostics = []

    def fail(self, node, message):
        self.diagnostics.append(
            TypeDiagnostic(message, node.span.line, node.span.col))
        return None

    def unify(self, node, got, want, context):
        """Check ``got`` against ``want``; literals adopt quantities."""
        if got is None or want is None:
            return None
        if want is ACTOR:
            if got is ACTOR:
                return ACTOR
            return self.fail(node, f"{context}: expected an actor reference "
                                   f"(a string), got {got}")
        if want is POLYGON or want is BOOL:
            if got is want:
                return want
            return self.fail(node, f"{context}: expected {want}, got {got}")
        if isinstance(want, Quantity):
            if got is POLY_NUM:
                return want
            if isinstance(got, Quantity) and got == want:
                return want
            return self.fail(node, f"{context}: unit mismatch, expected "
                                   f"{want}, got {got}")
        raise AssertionError(f"unhandled type {want}")

    def infer(self, node):
        if isinstance(node, NumberLit):
            return POLY_NUM
        if isinstance(node, DurationLit):
            return SECONDS
        if isinstance(node, StringLit):
            return ACTOR
        if isinstance(node, BoolLit):
            return BOOL
        if isinstance(node, NameRef):
            return self.fail(node, f"unresolved name {node.name!r}")
        if isinstance(node, Not):
            inner = self.infer(node.operand)
            if inner is None:
                return None
            if inner is not BOOL:
                return self.fail(node, f"'not' needs a boolean, got {inner}")
            return BOOL
        if isinstance(node, Neg):
            inner = self.infer(node.operand)
            if inner is None:
                return None
            if inner is POLY_NUM or isinstance(inner, Quantity):
                return inner
            return self.fail(node, f"'-' needs a quantity, got {inner}")
        if isinstance(node, Compare):
            lt = self.infer(node.left)
            rt = self.infer(node.right)
            if lt is None or rt is None:
                return None
            if lt is BOOL and rt is BOOL and node.op in ("==", "!="):
                return BOOL
            ok = self._merge_quantities(node, lt, rt,
                                        f"comparison {node.op!r}")
            return BOOL if ok is not None else None
        if isinstance(node, BinaryOp):
            if node.op in ("and", "or"):
                lt = self.infer(node.left)
                rt = self.infer(node.right)
                if lt is None or rt is None:
                    return None
                for side, t in (("left", lt), ("right", rt)):
                    if t is not BOOL:
                        return self.fail(
                            node, f"{node.op!r} needs booleans, "
                                  f"{side} side is {t}")
                return BOOL
            lt = self.infer(node.left)
            rt = self.infer(node.right)
            if lt is None or rt is None:
                return None
            if node.op in ("+", "-"):
                return self._merge_quantities(node, lt, rt,
                                              f"operator {node.op!r}")
            # * and /: literals act as dimensionless scalars
            lq = DIMENSIONLESS if lt is POLY_NUM else lt
            rq = DIMENSIONLESS if rt is POLY_NUM else rt
            for t in (lq, rq):
                if not isinstance(t, Quantity):
                    return self.fail(node, f"operator {node.op!r} needs "
                                           f"quantities, got {t}")
            if node.op == "*":
                out = Quantity(lq.m + rq.m, lq.s + rq.s, lq.rad + rq.rad)
            else:
                out = Quantity(lq.m - rq.m, lq.s - rq.s, lq.rad - rq.rad)
            if lt is POLY_NUM and rt is POLY_NUM:
                return POLY_NUM
            return out
        if isinstance(node, Call):
            if node.name not in self.registry:
                hint = difflib.get_close_matches(node.name, self.registry, 1)
                extra = f"; did you mean {hint[0]!r}?" if hint else ""
                return self.fail(node, f"unknown function "
                                       f"{node.name!r}{extra}")
            params, ret = self.registry[node.name]
            if len(node.args) != len(params):
                return self.fail(
                    node, f"{node.name}() takes {len(params)} argument(s), "
                          f"got {len(node.args)}")
            ok = True
            for i, (arg, want) in enumerate(zip(node.args, params)):
                got = self.infer(arg)
                if got is None:
                    ok = False
                    continue
                if self.unify(arg, got, want,
                              f"{node.name}() argument {i + 1}") is None:
                    ok = False
            return ret if ok else None
        raise AssertionError(f"unhandled node {type(node).__name__}")

    def _merge_quantities(self, node, lt, rt, context):
        """Both sides must be quantities of one dimension; literals adapt."""
        for t in (lt, rt):
            if not (t is POLY_NUM or isinstance(t, Quantity)):
                return self.fail(node, f"{context}: needs quantities, got {t}")
        if lt is POLY_NUM and rt is POLY_NUM:
            return POLY_NUM
        if lt is POLY_NUM:
            return rt
        if rt is POLY_NUM:
            return lt
        if lt == rt:
            return lt
        return self.fail(node, f"{context}: unit mismatch between "
                               f"{lt} and {rt}")


def _inline_consts(expr, consts, stack, diagnostics):
    """Substitute const references; detects cycles."""
    if isinstance(expr, NameRef):
        if expr.name not in consts:
            return expr  # leave for the type checker to report
        if expr.name in stack:
            diagnostics.append(TypeDiagnostic(
                f"constant cycle through {expr.name!r}",
                expr.span.line, expr.span.col))
            return expr
        return _inline_consts(consts[expr.name], consts,
                              stack | {expr.name}, diagnostics)
    if isinstance(expr, Not):
        return Not(operand=_inline_consts(expr.operand, consts, stack,
                                          diagnostics), span=expr.span)
    if isinstance(expr, Neg):
        return Neg(operand=_inline_consts(expr.operand, consts, stack,
                                          diagnostics), span=expr.span)
    if isinstance(expr, Compare):
        return Compare(op=expr.op,
                       left=_inline_consts(expr.left, consts, stack, diagnostics),
                       right=_inline_consts(expr.right, consts, stack, diagnostics),
                       span=expr.span)
    if isinstance(expr, BinaryOp):
        return BinaryOp(op=expr.op,
                        left=_inline_consts(expr.left, consts, stack, diagnostics),
                        right=_inline_consts(expr.right, consts, stack, diagnostics),
                        span=expr.span)
    if isinstance(expr, Call):
        return Call(name=expr.name,
                    args=tuple(_inline_consts(a, consts, stack, diagnostics)
                               for a in expr.args),
                    span=expr.span)
    return expr


def typecheck(doc: Document, registry=None) -> CompiledDocument:
    """Resolve constants, check types and units, return compiled assertions.

    Raises TypecheckError carrying every diagnostic found.
    """
    registry = REGISTRY if registry is None else registry
    diagnostics = []
    consts = {}
    for const in doc.consts:
        consts[const.name] = const.expr
    checker = _Checker(registry)
    compiled = []
    for decl in doc.assertions:
        reference = None
        if decl.reference is not None:
            reference = _inline_consts(decl.reference, consts, frozenset(),
                                       diagnostics)
            t = checker.infer(reference)
            if t is not None and t is not BOOL:
                checker.fail(reference,
                             f"reference of {decl.name!r} must be boolean, "
                             f"got {t}")
        condition = _inline_consts(decl.condition, consts, frozenset(),
                                   diagnostics)
        t = checker.infer(condition)
        if t is not None and t is not BOOL:
            checker.fail(condition,
                         f"condition of {decl.name!r} must be boolean, got {t}")
        compiled.append(CompiledAssertion(decl=decl, reference=reference,
                                          condition=condition))
    diagnostics.extend(checker.diagnostics)
    if diagnostics:
        raise TypecheckError(diagnostics)
    return CompiledDocument(assertions=tuple(compiled))


def compile_text(text: str, registry=None) -> CompiledDocument:
    """parse + typecheck in one step."""
    return typecheck(dsl.parse(text), registry)


def _expr_to_obj(expr):
    if isinstance(expr, NumberLit):
        return {"num": expr.value}
    if isinstance(expr, DurationLit):
        return {"dur_s": expr.seconds}
    if isinstance(expr, StringLit):
        return {"str": expr.value}
    if isinstance(expr, BoolLit):
        return {"bool": expr.value}
    if isinstance(expr, Not):
        return {"not": _expr_to_obj(expr.operand)}
    if isinstance(expr, Neg):
        return {"neg": _expr_to_obj(expr.operand)}
    if isinstance(expr, Compare):
        return {"cmp": expr.op, "l": _expr_to_obj(expr.left),
                "r": _expr_to_obj(expr.right)}
    if isinstance(expr, BinaryOp):
        return {"op": expr.op, "l": _expr_to_obj(expr.left),
                "r": _expr_to_obj(expr.right)}
    if isinstance(expr, Call):
        return {"call": expr.name,
                "args": [_expr_to_obj(a) for a in expr.args]}
    raise TypeError(type(expr).__name__)


def serialise_plan(compiled: CompiledDocument) -> bytes:
    """Canonical byte form; identical sources compile to identical bytes."""
    obj = []
    for a in compiled.assertions:
        d = a.decl
        obj.append({
            "id": d.name, "odd": sorted(d.odd_tags), "kind": d.kind,
            "window": d.window, "severity": d.severity, "mode": d.mode,
            "on_missing": d.on_missing,
            "reference": None if a.reference is None else _expr_to_obj(a.reference),
            "condition": _expr_to_obj(a.condition),
        })
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
