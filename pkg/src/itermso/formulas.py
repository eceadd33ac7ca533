"""Formula ASTs for all fragments, with an s-expression parser and printer.

The core connectives are negation, conjunction, and the two existential
quantifiers; `or`, `implies` and the universal quantifiers are parser sugar.
A sentence carries a regime that fixes what its set quantifiers range over:
everything, finite sets, chains, or finite unions of chains (and `fo` forbids
set quantifiers outright).

Grammar::

    sentence := "(" regime formula ")"
    regime   := fo | w | ch | mch | full
    formula  := (and f f) | (or f f) | (not f) | (implies f f)
              | (exists v f) | (forall v f) | (exists-set V f) | (forall-set V f)
              | (= t t) | (leq t t) | (rel NAME t ...) | (hat NAME t ...) | (in t V)
    t        := variable | (const NAME) | root

Lines starting with `;` are comments.  The parser renames shadowed binders so
no variable is bound twice on any root-to-leaf path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from itermso.errors import ParseError, UsageError


class Regime(enum.Enum):
    FULL = "full"
    WEAK = "w"
    CHAIN = "ch"
    MULTICHAIN = "mch"
    FO = "fo"


_REGIMES = {r.value: r for r in Regime}


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Root:
    """The root of the iteration: the empty word."""


ROOT = Root()


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Truth:
    """Internal constant-folding node; printed as a canonical (non-)tautology."""

    value: bool


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class HatRel:
    """A base relation lifted to sibling words of the iteration."""

    name: str
    args: tuple


@dataclass(frozen=True)
class PrefLeq:
    left: object
    right: object


@dataclass(frozen=True)
class Mem:
    term: object
    setvar: str


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class ExistsInd:
    var: str
    body: object


@dataclass(frozen=True)
class ExistsSet:
    var: str
    body: object


TRUE = Truth(True)
FALSE = Truth(False)


# ---------------------------------------------------------------------------
# Constant-folding builders (connectives only; quantifiers are kept as-is
# because an existential over an empty universe is not the same as its body)


def not_(f):
    if isinstance(f, Truth):
        return Truth(not f.value)
    if isinstance(f, Not):
        return f.body
    return Not(f)


def and_(a, b):
    if isinstance(a, Truth):
        return b if a.value else FALSE
    if isinstance(b, Truth):
        return a if b.value else FALSE
    return And(a, b)


def or_(a, b):
    if isinstance(a, Truth):
        return TRUE if a.value else b
    if isinstance(b, Truth):
        return TRUE if b.value else a
    return not_(and_(not_(a), not_(b)))


def implies_(a, b):
    return or_(not_(a), b)


def big_and(parts):
    result = TRUE
    for part in parts:
        result = and_(result, part)
    return result


def big_or(parts):
    result = FALSE
    for part in parts:
        result = or_(result, part)
    return result


def forall_ind(var, body):
    if isinstance(body, Truth) and body.value:
        return TRUE  # vacuously true even on the empty universe
    return not_(ExistsInd(var, not_(body)))


def forall_set(var, body):
    if isinstance(body, Truth) and body.value:
        return TRUE
    return not_(ExistsSet(var, not_(body)))


def exists_ind(var, body):
    if isinstance(body, Truth) and not body.value:
        return FALSE
    return ExistsInd(var, body)


def exists_set(var, body):
    if isinstance(body, Truth) and not body.value:
        return FALSE
    return ExistsSet(var, body)


# ---------------------------------------------------------------------------
# Analysis


def quantifier_rank(formula):
    """Maximum quantifier nesting; individual and set quantifiers count alike."""
    if isinstance(formula, (Truth, Eq, Rel, HatRel, PrefLeq, Mem)):
        return 0
    if isinstance(formula, Not):
        return quantifier_rank(formula.body)
    if isinstance(formula, And):
        return max(quantifier_rank(formula.left), quantifier_rank(formula.right))
    if isinstance(formula, (ExistsInd, ExistsSet)):
        return 1 + quantifier_rank(formula.body)
    raise UsageError(f"not a formula node: {formula!r}")


def set_quantifier_depth(formula):
    if isinstance(formula, (Truth, Eq, Rel, HatRel, PrefLeq, Mem)):
        return 0
    if isinstance(formula, Not):
        return set_quantifier_depth(formula.body)
    if isinstance(formula, And):
        return max(set_quantifier_depth(formula.left), set_quantifier_depth(formula.right))
    if isinstance(formula, ExistsInd):
        return set_quantifier_depth(formula.body)
    if isinstance(formula, ExistsSet):
        return 1 + set_quantifier_depth(formula.body)
    raise UsageError(f"not a formula node: {formula!r}")


def free_vars(formula):
    """Free (individual, set) variable names of a formula."""
    ind, setv = set(), set()

    def term(t, bound):
        if isinstance(t, Var) and t.name not in bound:
            ind.add(t.name)

    def walk(f, bound_ind, bound_set):
        if isinstance(f, Truth):
            return
        if isinstance(f, (Eq, PrefLeq)):
            term(f.left, bound_ind)
            term(f.right, bound_ind)
        elif isinstance(f, (Rel, HatRel)):
            for t in f.args:
                term(t, bound_ind)
        elif isinstance(f, Mem):
            term(f.term, bound_ind)
            if f.setvar not in bound_set:
                setv.add(f.setvar)
        elif isinstance(f, Not):
            walk(f.body, bound_ind, bound_set)
        elif isinstance(f, And):
            walk(f.left, bound_ind, bound_set)
            walk(f.right, bound_ind, bound_set)
        elif isinstance(f, ExistsInd):
            walk(f.body, bound_ind | {f.var}, bound_set)
        elif isinstance(f, ExistsSet):
            walk(f.body, bound_ind, bound_set | {f.var})
        else:
            raise UsageError(f"not a formula node: {f!r}")

    walk(formula, frozenset(), frozenset())
    return ind, setv


def all_variable_names(formula):
    names = set()

    def term(t):
        if isinstance(t, Var):
            names.add(t.name)

    def walk(f):
        if isinstance(f, Truth):
            return
        if isinstance(f, (Eq, PrefLeq)):
            term(f.left)
            term(f.right)
        elif isinstance(f, (Rel, HatRel)):
            for t in f.args:
                term(t)
        elif isinstance(f, Mem):
            term(f.term)
            names.add(f.setvar)
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, And):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, ExistsInd):
            names.add(f.var)
            walk(f.body)
        elif isinstance(f, ExistsSet):
            names.add(f.var)
            walk(f.body)

    walk(formula)
    return names


def count_nodes(formula):
    if isinstance(formula, (Truth, Eq, Rel, HatRel, PrefLeq, Mem)):
        return 1
    if isinstance(formula, Not):
        return 1 + count_nodes(formula.body)
    if isinstance(formula, And):
        return 1 + count_nodes(formula.left) + count_nodes(formula.right)
    if isinstance(formula, (ExistsInd, ExistsSet)):
        return 1 + count_nodes(formula.body)
    raise UsageError(f"not a formula node: {formula!r}")


def count_quantifiers(formula):
    if isinstance(formula, (Truth, Eq, Rel, HatRel, PrefLeq, Mem)):
        return 0
    if isinstance(formula, Not):
        return count_quantifiers(formula.body)
    if isinstance(formula, And):
        return count_quantifiers(formula.left) + count_quantifiers(formula.right)
    if isinstance(formula, (ExistsInd, ExistsSet)):
        return 1 + count_quantifiers(formula.body)
    raise UsageError(f"not a formula node: {formula!r}")


class NameSupply:
    """Deterministic fresh names avoiding a fixed set of taken names."""

    def __init__(self, taken):
        self.taken = set(taken)

    def fresh(self, base):
        if base not in self.taken:
            self.taken.add(base)
            return base
        n = 1
        while f"{base}{n}" in self.taken:
            n += 1
        name = f"{base}{n}"
        self.taken.add(name)
        return name


# ---------------------------------------------------------------------------
# Parser


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(_Token(ch, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < len(text) and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            tokens.append(_Token(text[start:i], line, start_col))
    return tokens


class _Reader:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        if self.pos >= len(self.tokens):
            return None
        return self.tokens[self.pos]

    def next(self, expected=None):
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.column)
        if expected is not None and tok.text != expected:
            raise ParseError(f"expected {expected!r}, found {tok.text!r}", tok.line, tok.column)
        self.pos += 1
        return tok


def _read_sexp(reader):
    tok = reader.next()
    if tok.text == "(":
        items = []
        while True:
            nxt = reader.peek()
            if nxt is None:
                raise ParseError("unclosed parenthesis", tok.line, tok.column)
            if nxt.text == ")":
                reader.next()
                return (tok, items)
            items.append(_read_sexp(reader))
    if tok.text == ")":
        raise ParseError("unexpected ')'", tok.line, tok.column)
    return tok


def _is_atom(node):
    return isinstance(node, _Token)


def parse(text):
    """Parse a sentence into (formula, regime).

    Derived connectives are elaborated into the core; shadowed binders are
    silently renamed so every root-to-leaf path binds each name at most once.
    A set quantifier under the `fo` regime is rejected.
    """
    reader = _Reader(_tokenize(text))
    top = _read_sexp(reader)
    trailing = reader.peek()
    if trailing is not None:
        raise ParseError("trailing input after sentence", trailing.line, trailing.column)
    if _is_atom(top) or len(top[1]) != 2 or not _is_atom(top[1][0]):
        tok = top if _is_atom(top) else top[0]
        raise ParseError("sentence must be (regime formula)", tok.line, tok.column)
    head, (regime_tok, body) = top
    regime = _REGIMES.get(regime_tok.text)
    if regime is None:
        raise ParseError(f"unknown regime {regime_tok.text!r}", regime_tok.line, regime_tok.column)

    taken = set()

    def collect(node):
        if _is_atom(node):
            taken.add(node.text)
        else:
            for item in node[1]:
                collect(item)

    collect(body)
    supply = NameSupply(taken)

    formula = _parse_formula(body, regime, {}, supply)
    return formula, regime


def _term(node, scope):
    if _is_atom(node):
        if node.text == "root":
            return ROOT
        return Var(scope.get(node.text, node.text))
    head_tok, items = node
    if items and _is_atom(items[0]) and items[0].text == "const":
        if len(items) != 2 or not _is_atom(items[1]):
            raise ParseError("(const NAME) takes one name", head_tok.line, head_tok.column)
        return Const(items[1].text)
    raise ParseError("expected a term", head_tok.line, head_tok.column)


def _parse_formula(node, regime, scope, supply):
    if _is_atom(node):
        raise ParseError(f"bare atom {node.text!r} is not a formula", node.line, node.column)
    open_tok, items = node
    if not items or not _is_atom(items[0]):
        raise ParseError("formula must start with an operator", open_tok.line, open_tok.column)
    head = items[0]
    op = head.text
    args = items[1:]

    def need(count):
        if len(args) != count:
            raise ParseError(f"{op} takes {count} arguments", head.line, head.column)

    if op in ("and", "or", "implies"):
        need(2)
        left = _parse_formula(args[0], regime, scope, supply)
        right = _parse_formula(args[1], regime, scope, supply)
        if op == "and":
            return and_(left, right)
        if op == "or":
            return or_(left, right)
        return implies_(left, right)
    if op == "not":
        need(1)
        return not_(_parse_formula(args[0], regime, scope, supply))
    if op in ("exists", "forall", "exists-set", "forall-set"):
        need(2)
        if not _is_atom(args[0]):
            raise ParseError(f"{op} needs a variable name", head.line, head.column)
        if op.endswith("-set") and regime is Regime.FO:
            raise ParseError("set quantifier under fo regime", head.line, head.column)
        outer = args[0].text
        # rename only when the same name is already bound on this path
        inner = supply.fresh(outer) if outer in scope.values() else outer
        new_scope = dict(scope)
        new_scope[outer] = inner
        body = _parse_formula(args[1], regime, new_scope, supply)
        if op == "exists":
            return ExistsInd(inner, body)
        if op == "forall":
            return forall_ind(inner, body)
        if op == "exists-set":
            return ExistsSet(inner, body)
        return forall_set(inner, body)
    if op == "=":
        need(2)
        return Eq(_term(args[0], scope), _term(args[1], scope))
    if op == "leq":
        need(2)
        return PrefLeq(_term(args[0], scope), _term(args[1], scope))
    if op == "in":
        need(2)
        if not _is_atom(args[1]):
            raise ParseError("in takes a set variable", head.line, head.column)
        return Mem(_term(args[0], scope), scope.get(args[1].text, args[1].text))
    if op in ("rel", "hat"):
        if len(args) < 1 or not _is_atom(args[0]):
            raise ParseError(f"{op} needs a relation name", head.line, head.column)
        terms = tuple(_term(a, scope) for a in args[1:])
        if op == "rel":
            return Rel(args[0].text, terms)
        return HatRel(args[0].text, terms)
    raise ParseError(f"unknown operator {op!r}", head.line, head.column)


# ---------------------------------------------------------------------------
# Printer


def format_formula(formula, _counter=None):
    """Canonical core-form printing; inverse of `parse` up to renaming."""
    counter = _counter if _counter is not None else [0]

    def term(t):
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Const):
            return f"(const {t.name})"
        if isinstance(t, Root):
            return "root"
        raise UsageError(f"not a term: {t!r}")

    def walk(f):
        if isinstance(f, Truth):
            # canonical closed tautology / contradiction, true/false on every
            # structure including the empty one
            name = f"_t{counter[0]}"
            counter[0] += 1
            core = f"(exists {name} (not (= {name} {name})))"
            return f"(not {core})" if f.value else core
        if isinstance(f, Eq):
            return f"(= {term(f.left)} {term(f.right)})"
        if isinstance(f, PrefLeq):
            return f"(leq {term(f.left)} {term(f.right)})"
        if isinstance(f, Rel):
            return "(rel " + " ".join([f.name] + [term(t) for t in f.args]) + ")"
        if isinstance(f, HatRel):
            return "(hat " + " ".join([f.name] + [term(t) for t in f.args]) + ")"
        if isinstance(f, Mem):
            return f"(in {term(f.term)} {f.setvar})"
        if isinstance(f, Not):
            return f"(not {walk(f.body)})"
        if isinstance(f, And):
            return f"(and {walk(f.left)} {walk(f.right)})"
        if isinstance(f, ExistsInd):
            return f"(exists {f.var} {walk(f.body)})"
        if isinstance(f, ExistsSet):
            return f"(exists-set {f.var} {walk(f.body)})"
        raise UsageError(f"not a formula node: {f!r}")

    return walk(formula)


def format_sentence(formula, regime):
    return f"({regime.value} {format_formula(formula)})"
