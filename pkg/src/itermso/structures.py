"""Finite relational structures and the word-level semantics of the iteration.

A *base* structure is purely relational: no constants and no interpreted
order.  Its Shelah-Stupp iteration is the infinite tree of all finite words
over the universe, ordered by the prefix relation, with every base relation
lifted to tuples of siblings below a common parent word.  The iteration is
never materialised; `prefix_leq` and `eval_hat_relation` give its atomic
semantics and the bounded oracle enumerates the rest.

Structures with constants and an interpreted partial order (the glued-product
inputs of the equivalence laboratory) use the same class; the reserved
relation name `leq` designates the order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from itermso.errors import InternalError, UsageError

ORDER_REL = "leq"

Word = tuple  # finite sequence of base-universe indices


@dataclass(frozen=True)
class Signature:
    """Relation symbols with arities, ordered constants, and named unary sets."""

    relations: tuple  # ((name, arity), ...) sorted by name
    constants: tuple  # constant names, in pointing order
    sets: tuple  # unary expansion names, sorted

    @property
    def is_base(self):
        return not self.constants and ORDER_REL not in dict(self.relations)

    def arity(self, name):
        got = dict(self.relations).get(name)
        if got is None:
            raise UsageError(f"unknown relation symbol {name!r}")
        return got


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    """A finite structure with universe {0, .., universe-1}.

    `relations` maps symbol names to frozensets of index tuples, `constants`
    is an ordered tuple of (name, index) pairs, and `sets` holds named unary
    expansions (automaton matrix cells, tree labels).  If the reserved order
    relation is interpreted it must be a partial order; this is checked on
    construction.  Instances are immutable.
    """

    universe: int
    relations: dict
    arities: dict
    constants: tuple = ()
    sets: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.universe < 0:
            raise UsageError("universe size must be >= 0")
        for name, tuples in self.relations.items():
            arity = self.arities.get(name)
            if arity is None or arity < 1:
                raise UsageError(f"relation {name!r} needs arity >= 1")
            for tup in tuples:
                if len(tup) != arity:
                    raise UsageError(f"tuple {tup} has wrong arity for {name!r}")
                if any(not (0 <= e < self.universe) for e in tup):
                    raise UsageError(f"tuple {tup} outside universe of {name!r}")
        seen = set()
        for name, idx in self.constants:
            if name in seen:
                raise UsageError(f"duplicate constant {name!r}")
            seen.add(name)
            if not (0 <= idx < self.universe):
                raise UsageError(f"constant {name!r} outside universe")
        for name, members in self.sets.items():
            if any(not (0 <= e < self.universe) for e in members):
                raise UsageError(f"set {name!r} outside universe")
        if ORDER_REL in self.relations:
            _check_partial_order(self.relations[ORDER_REL], self.universe)

    @property
    def signature(self):
        return Signature(
            relations=tuple(sorted(self.arities.items())),
            constants=tuple(name for name, _ in self.constants),
            sets=tuple(sorted(self.sets)),
        )

    @property
    def order(self):
        got = self.relations.get(ORDER_REL)
        if got is None:
            raise UsageError("structure has no interpreted partial order")
        return got

    def constant(self, name):
        for cname, idx in self.constants:
            if cname == name:
                return idx
        raise UsageError(f"unknown constant {name!r}")

    def require_base(self):
        """Reject structures unusable as iteration bases, with a diagnostic."""
        if self.constants:
            raise UsageError(
                "base structures are purely relational; remove constants "
                f"{[n for n, _ in self.constants]}"
            )
        if ORDER_REL in self.relations:
            raise UsageError(
                f"relation name {ORDER_REL!r} is reserved for the prefix order "
                "of the iteration and may not appear in a base structure"
            )
        return self


def make_structure(universe, relations=None, constants=(), sets=None):
    """Build a structure from {name: (arity, tuples)} without JSON ceremony."""
    relations = relations or {}
    rels = {}
    arities = {}
    for name, (arity, tuples) in relations.items():
        arities[name] = arity
        rels[name] = frozenset(tuple(t) for t in tuples)
    setmap = {name: frozenset(v) for name, v in (sets or {}).items()}
    return FiniteStructure(universe, rels, arities, tuple(constants), setmap)


def _check_partial_order(pairs, universe):
    for x in range(universe):
        if (x, x) not in pairs:
            raise UsageError(f"order not reflexive at {x}")
    for x, y in pairs:
        if x != y and (y, x) in pairs:
            raise UsageError(f"order not antisymmetric on {x},{y}")
    for x, y in pairs:
        for y2, z in pairs:
            if y2 == y and (x, z) not in pairs:
                raise UsageError(f"order not transitive via {x},{y},{z}")


def transitive_closure(pairs):
    closure = set(pairs)
    changed = True
    while changed:
        changed = False
        for x, y in list(closure):
            for y2, z in list(closure):
                if y2 == y and (x, z) not in closure:
                    closure.add((x, z))
                    changed = True
    return frozenset(closure)


# ---------------------------------------------------------------------------
# Word-level semantics of the iteration


def prefix_leq(u, v):
    """True iff word u is a prefix of word v."""
    return len(u) <= len(v) and tuple(v[: len(u)]) == tuple(u)


def eval_hat_relation(base, name, args):
    """Atomic truth of a lifted relation on a tuple of words.

    A tuple belongs to the lifted relation exactly when all words are
    nonempty, have equal length, agree everywhere except possibly the last
    letter, and the tuple of last letters is in the base relation.
    """
    arity = base.arities.get(name)
    if arity is None:
        raise UsageError(f"unknown relation symbol {name!r}")
    if len(args) != arity:
        raise UsageError(f"relation {name!r} expects {arity} arguments, got {len(args)}")
    words = [tuple(w) for w in args]
    if any(len(w) == 0 for w in words):
        return False
    length = len(words[0])
    if any(len(w) != length for w in words):
        return False
    stem = words[0][: length - 1]
    if any(w[: length - 1] != stem for w in words[1:]):
        return False
    return tuple(w[-1] for w in words) in base.relations[name]


def words_up_to(alphabet, max_len):
    """All words over `alphabet` of length <= max_len, in length-lex order."""
    letters = sorted(alphabet)
    for length in range(max_len + 1):
        for combo in itertools.product(letters, repeat=length):
            yield combo


# ---------------------------------------------------------------------------
# Products of pointed ordered structures


def product(lhs, rhs):
    """Glue a two-pointed factor onto a k-pointed structure.

    The second constant of `lhs` is identified with the first constant of
    `rhs`; relations and unary sets are unioned, the order is transitively
    closed through the glue point, and the resulting constants are the first
    point of `lhs` followed by the remaining points of `rhs`.
    """
    if len(lhs.constants) != 2:
        raise UsageError("left product factor must have exactly two constants")
    if len(rhs.constants) < 1:
        raise UsageError("right product factor must have at least one constant")
    if dict(lhs.arities) != dict(rhs.arities) or sorted(lhs.sets) != sorted(rhs.sets):
        raise UsageError("product factors must share one signature")
    if ORDER_REL not in lhs.relations:
        raise UsageError("product factors must interpret the order")

    glue = lhs.constants[1][1]
    rhs_first = rhs.constants[0][1]

    def embed(e):
        if e == rhs_first:
            return glue
        return lhs.universe + e - (1 if e > rhs_first else 0)

    universe = lhs.universe + rhs.universe - 1
    relations = {}
    for name in lhs.relations:
        merged = set(lhs.relations[name])
        merged.update(tuple(embed(e) for e in tup) for tup in rhs.relations[name])
        if name == ORDER_REL:
            merged = transitive_closure(merged)
        relations[name] = frozenset(merged)
    sets = {
        name: frozenset(lhs.sets[name]) | frozenset(embed(e) for e in rhs.sets[name])
        for name in lhs.sets
    }
    points = [lhs.constants[0][1]] + [embed(idx) for _, idx in rhs.constants[1:]]
    constants = tuple((f"c{i + 1}", idx) for i, idx in enumerate(points))
    try:
        return FiniteStructure(universe, relations, dict(lhs.arities), constants, sets)
    except UsageError as exc:  # glued orders stay partial orders; anything else is a bug
        raise InternalError(f"product violated a structure invariant: {exc}") from exc


def iterated_product(factor, count):
    """Glue `count` copies of a two-pointed factor into a one-pointed chain."""
    if count < 1:
        raise UsageError("iterated product needs count >= 1")
    result = factor
    for _ in range(count - 1):
        result = product(result, factor)
    constants = (("c1", result.constants[0][1]),)
    return FiniteStructure(
        result.universe, result.relations, result.arities, constants, result.sets
    )


# ---------------------------------------------------------------------------
# JSON structure files

_STRUCTURE_KEYS = {"universe", "relations", "constants"}


def structure_from_json(doc):
    """Parse the structure file format, rejecting unknown keys and duplicates."""
    if not isinstance(doc, dict):
        raise UsageError("structure file must contain a JSON object")
    unknown = set(doc) - _STRUCTURE_KEYS
    if unknown:
        raise UsageError(f"unknown structure keys {sorted(unknown)}")
    if "universe" not in doc or not isinstance(doc["universe"], int):
        raise UsageError("structure file needs an integer 'universe'")
    universe = doc["universe"]
    relations = {}
    for name, body in (doc.get("relations") or {}).items():
        if not isinstance(body, dict) or set(body) != {"arity", "tuples"}:
            raise UsageError(f"relation {name!r} needs exactly 'arity' and 'tuples'")
        tuples = [tuple(t) for t in body["tuples"]]
        if len(set(tuples)) != len(tuples):
            raise UsageError(f"duplicate tuples in relation {name!r}")
        relations[name] = (body["arity"], tuples)
    constants = tuple((name, idx) for name, idx in (doc.get("constants") or {}).items())
    return make_structure(universe, relations, constants)


def load_structure(path):
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    return structure_from_json(doc)


def structure_to_json(structure):
    return {
        "universe": structure.universe,
        "relations": {
            name: {"arity": structure.arities[name], "tuples": sorted(map(list, tuples))}
            for name, tuples in sorted(structure.relations.items())
        },
        "constants": {name: idx for name, idx in structure.constants},
    }
