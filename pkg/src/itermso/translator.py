"""Compilation of iteration-side sentences into weak-MSO over the base.

A sentence about the word tree, whose free set variables are presented by
automata (state count, initial state, final set), becomes a base-side formula
whose free set variables are the matrix cells of those automata.  The pieces:

* First-order building blocks over a transition matrix: state-to-state
  reachability, and the language classifiers (multichain, chain, finite,
  singleton) as formulas that quantify letters only; state quantification
  unfolds into finite disjunctions.

* Individual quantifiers compile to a finite disjunction over word lengths,
  binding the word's letters as base-side variables.  Every atom then
  unfolds: equality and prefix tests become letter equalities, membership in
  an automaton-presented set becomes a disjunction over accepting state
  sequences, and a lifted relation becomes shared-prefix equalities plus one
  base relation atom on the last letters.

* A chain or multichain set quantifier becomes existential quantification
  over fresh finite matrix cells and an alphabet set, constrained to be
  well-formed, disjoined over all final sets, guarded by the matching
  classifier formula, with the body compiled under the extended context.

* A weak set quantifier is first rewritten as a multichain quantifier guarded
  by the finiteness embedding: a multichain is finite exactly when every
  nonempty chain inside it has a greatest element, because an infinite prefix
  chain has unbounded word lengths and hence no maximum, while any chain with
  a maximum sits inside the finitely many prefixes of that maximum.

Bound policies: production bounds come from the bounds module and are
astronomically large, so emission is guarded by a node budget and refused
with the computed bound; override bounds exist for testing and are only as
good as the external argument that justifies them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from itermso import formulas as F
from itermso.bounds import bound_set, witness_length
from itermso.errors import ResourceLimit, UsageError
from itermso.formulas import (
    And,
    Const,
    Eq,
    ExistsInd,
    ExistsSet,
    HatRel,
    Mem,
    Not,
    PrefLeq,
    Regime,
    Rel,
    Root,
    Truth,
    Var,
    and_,
    big_and,
    big_or,
    forall_ind,
    forall_set,
    implies_,
    not_,
    or_,
)

DEFAULT_MAX_NODES = 2_000_000


# ---------------------------------------------------------------------------
# Contexts and bound policies


@dataclass(frozen=True)
class ContextEntry:
    """One automaton-presented free set variable."""

    name: str
    states: int
    initial: int
    final: frozenset

    def __post_init__(self):
        if self.states < 1:
            raise UsageError(f"entry {self.name!r} needs at least one state")
        if not (0 <= self.initial < self.states):
            raise UsageError(f"entry {self.name!r} has initial state out of range")
        if any(not (0 <= q < self.states) for q in self.final):
            raise UsageError(f"entry {self.name!r} has final states out of range")


@dataclass(frozen=True)
class AutomatonContext:
    entries: tuple = ()

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise UsageError("context entries must have distinct names")

    def names(self):
        return {e.name for e in self.entries}


def free_cell_name(index, p, q):
    """Matrix-cell set variable of the index-th (1-based) context entry."""
    return f"T{index}_{p}_{q}"


def bound_cell_name(setvar, p, q):
    """Matrix-cell set variable of a quantified automaton for binder `setvar`."""
    return f"T_{setvar}_{p}_{q}"


def bound_alphabet_name(setvar):
    return f"B_{setvar}"


class PaperBounds:
    """Production bound policy: sound and complete, astronomically large."""

    mode = "paper"

    def __init__(self, signature=None):
        self.signature = signature

    def individual_bound(self, entries, body_rank, var):
        return witness_length([e.states for e in entries], len(entries), body_rank, self.signature)

    def set_bound(self, entries, body_rank, kind, var):
        bounds = bound_set([e.states for e in entries], len(entries), body_rank, self.signature)
        return bounds.chain if kind == "ch" else bounds.multichain

    def describe(self):
        return {"mode": "paper"}


class OverrideBounds:
    """Test policy with explicit small bounds.

    Unsound unless an external argument shows the witnesses fit; the output
    metadata flags this.
    """

    mode = "override"

    def __init__(self, set_states, word_length, per_var=None):
        if set_states < 1 or word_length < 0:
            raise UsageError("override bounds must be positive")
        self.set_states = set_states
        self.word_length = word_length
        self.per_var = dict(per_var or {})

    def individual_bound(self, entries, body_rank, var):
        return self.per_var.get(var, self.word_length)

    def set_bound(self, entries, body_rank, kind, var):
        return self.per_var.get(var, self.set_states)

    def describe(self):
        return {
            "mode": "override",
            "set_states": self.set_states,
            "word_length": self.word_length,
            "per_var": dict(self.per_var),
            "warning": "override bounds are unsound unless externally justified",
        }


# ---------------------------------------------------------------------------
# First-order building blocks over a transition matrix


def default_cells(p, q):
    return f"T_{p}_{q}"


def _exists_letter(cell, name="a"):
    return ExistsInd(name, Mem(Var(name), cell))


def _two_letters(cell):
    return ExistsInd(
        "a",
        ExistsInd(
            "b",
            and_(not_(Eq(Var("a"), Var("b"))), and_(Mem(Var("a"), cell), Mem(Var("b"), cell))),
        ),
    )


def _simple_paths(states, start, end):
    """State sequences start..end without repeats, shortest first."""
    paths = []

    def extend(path):
        if path[-1] == end and len(path) >= 1:
            paths.append(tuple(path))
            if start == end:
                return  # the empty path; longer returns to start would repeat it
        for nxt in range(states):
            if nxt not in path:
                path.append(nxt)
                extend(path)
                path.pop()

    extend([start])
    paths.sort(key=lambda p: (len(p), p))
    return paths


def _simple_cycles(states, anchor):
    """Nonempty state cycles anchor..anchor with distinct interior states."""
    cycles = []
    for length in range(1, states + 1):
        for interior in itertools.permutations(
            [s for s in range(states) if s != anchor], length - 1
        ):
            cycles.append((anchor,) + interior + (anchor,))
    cycles.sort(key=lambda c: (len(c), c))
    return cycles


def _path_formula(path, cells):
    return big_and(_exists_letter(cells(path[t - 1], path[t])) for t in range(1, len(path)))


def formula_dkpath(states, p, q, cells=default_cells):
    """State p reaches state q: a disjunction over repeat-free state paths,
    each asking that every step's letter set is nonempty.  Any reachable
    state is reachable by such a path, of length below the state count."""
    if not (0 <= p < states and 0 <= q < states):
        raise UsageError("state out of range")
    return big_or(_path_formula(path, cells) for path in _simple_paths(states, p, q))


def _coaccessible_formula(states, q, final, cells):
    return big_or(formula_dkpath(states, q, f, cells) for f in sorted(final))


def _cycle_formula(states, r, cells):
    return big_or(_path_formula(cycle, cells) for cycle in _simple_cycles(states, r))


def _branching_formula(states, p, final, cells):
    """State p moves two distinct letters to coaccessible states."""
    parts = []
    for q in range(states):
        coacc_q = _coaccessible_formula(states, q, final, cells)
        parts.append(and_(_two_letters(cells(p, q)), coacc_q))
        for q2 in range(q + 1, states):
            # distinct target states: the two letters are distinct for free
            # because the cells of one row are disjoint
            parts.append(
                big_and(
                    [
                        _exists_letter(cells(p, q)),
                        coacc_q,
                        _exists_letter(cells(p, q2)),
                        _coaccessible_formula(states, q2, final, cells),
                    ]
                )
            )
    return big_or(parts)


def formula_chain(states, initial, final, cells=default_cells):
    """The language is a chain: no reachable state branches into two
    coaccessible continuations."""
    return big_and(
        not_(and_(formula_dkpath(states, initial, p, cells), _branching_formula(states, p, final, cells)))
        for p in range(states)
    )


def formula_mchain(states, initial, final, cells=default_cells):
    """The language is a finite union of chains: no state reached through a
    cycle (hence by infinitely many words) branches into two coaccessible
    continuations."""
    parts = []
    for p in range(states):
        through_cycle = big_or(
            big_and(
                [
                    formula_dkpath(states, initial, r, cells),
                    _cycle_formula(states, r, cells),
                    formula_dkpath(states, r, p, cells),
                ]
            )
            for r in range(states)
        )
        parts.append(not_(and_(through_cycle, _branching_formula(states, p, final, cells))))
    return big_and(parts)


def formula_finite(states, initial, final, cells=default_cells):
    """The language is finite: no reachable, coaccessible state sits on a cycle."""
    return big_and(
        not_(
            big_and(
                [
                    formula_dkpath(states, initial, r, cells),
                    _coaccessible_formula(states, r, final, cells),
                    _cycle_formula(states, r, cells),
                ]
            )
        )
        for r in range(states)
    )


def formula_singleton(states, initial, final, cells=default_cells):
    """Exactly one accepted word: finite, chain-shaped, no accepted word
    extends another, and the language is nonempty."""
    no_extension = big_and(
        not_(
            and_(
                formula_dkpath(states, initial, f, cells),
                big_or(
                    and_(_exists_letter(cells(f, r)), formula_dkpath(states, r, f2, cells))
                    for r in range(states)
                ),
            )
        )
        for f in sorted(final)
        for f2 in sorted(final)
    )
    nonempty = big_or(formula_dkpath(states, initial, f, cells) for f in sorted(final))
    return big_and(
        [
            formula_finite(states, initial, final, cells),
            formula_chain(states, initial, final, cells),
            no_extension,
            nonempty,
        ]
    )


# ---------------------------------------------------------------------------
# Finiteness embedding


def embed_finiteness(setvar):
    """Iteration-side guard: every nonempty chain inside the set has a
    greatest element.  Over the word tree this holds exactly for the finite
    multichains, which is what lets weak quantifiers ride on multichain ones."""
    c = f"{setvar}_fc"
    u, p, q, z, g, w = (f"{setvar}_f{suffix}" for suffix in ("u", "p", "q", "z", "g", "w"))
    nonempty = ExistsInd(u, Mem(Var(u), c))
    chain_shaped = forall_ind(
        p,
        forall_ind(
            q,
            implies_(
                and_(Mem(Var(p), c), Mem(Var(q), c)),
                or_(PrefLeq(Var(p), Var(q)), PrefLeq(Var(q), Var(p))),
            ),
        ),
    )
    subset = forall_ind(z, implies_(Mem(Var(z), c), Mem(Var(z), setvar)))
    has_max = ExistsInd(
        g,
        and_(Mem(Var(g), c), forall_ind(w, implies_(Mem(Var(w), c), PrefLeq(Var(w), Var(g))))),
    )
    return forall_set(
        c, implies_(big_and([nonempty, chain_shaped, subset]), has_max)
    )


# ---------------------------------------------------------------------------
# Sentence compilation


@dataclass(frozen=True)
class _SetQ:
    """Internal set quantifier with its resolved range kind."""

    var: str
    body: object
    kind: str  # "ch" or "mch"


def _tag(formula, regime):
    """Resolve each set quantifier's range from the sentence regime; weak
    quantifiers become guarded multichain quantifiers."""
    if isinstance(formula, (Truth, Eq, Rel, HatRel, PrefLeq, Mem)):
        return formula
    if isinstance(formula, Not):
        return Not(_tag(formula.body, regime))
    if isinstance(formula, And):
        return And(_tag(formula.left, regime), _tag(formula.right, regime))
    if isinstance(formula, ExistsInd):
        return ExistsInd(formula.var, _tag(formula.body, regime))
    if isinstance(formula, ExistsSet):
        body = _tag(formula.body, regime)
        if regime is Regime.CHAIN:
            return _SetQ(formula.var, body, "ch")
        if regime is Regime.MULTICHAIN:
            return _SetQ(formula.var, body, "mch")
        if regime is Regime.WEAK:
            guard = _tag(embed_finiteness(formula.var), Regime.MULTICHAIN)
            return _SetQ(formula.var, and_(guard, body), "mch")
        raise UsageError(f"set quantifier not supported under regime {regime.value!r}")
    raise UsageError(f"not a formula node: {formula!r}")


def _tagged_rank(formula):
    if isinstance(formula, (Truth, Eq, Rel, HatRel, PrefLeq, Mem)):
        return 0
    if isinstance(formula, Not):
        return _tagged_rank(formula.body)
    if isinstance(formula, And):
        return max(_tagged_rank(formula.left), _tagged_rank(formula.right))
    if isinstance(formula, (ExistsInd, _SetQ)):
        return 1 + _tagged_rank(formula.body)
    raise UsageError(f"not a formula node: {formula!r}")


def _check_iteration_side(formula):
    if isinstance(formula, Rel):
        raise UsageError("base-relation atoms do not belong in an iteration-side sentence")
    if isinstance(formula, (Eq, PrefLeq)):
        for term in (formula.left, formula.right):
            if isinstance(term, Const):
                raise UsageError("the iteration has no named constants besides root")
    if isinstance(formula, HatRel):
        for term in formula.args:
            if isinstance(term, Const):
                raise UsageError("the iteration has no named constants besides root")
    if isinstance(formula, Mem) and isinstance(formula.term, Const):
        raise UsageError("the iteration has no named constants besides root")
    if isinstance(formula, Not):
        _check_iteration_side(formula.body)
    if isinstance(formula, And):
        _check_iteration_side(formula.left)
        _check_iteration_side(formula.right)
    if isinstance(formula, (ExistsInd, ExistsSet)):
        _check_iteration_side(formula.body)


class _Budget:
    def __init__(self, max_nodes):
        self.max_nodes = max_nodes
        self.used = 0

    def spend(self, amount):
        self.used += amount
        if self.used > self.max_nodes:
            raise ResourceLimit(
                f"translation exceeds the node budget of {self.max_nodes}; "
                "use override bounds or raise the budget"
            )

    def check_bound(self, value, what):
        if not isinstance(value, int) or value > self.max_nodes:
            raise ResourceLimit(
                f"computed {what} is {value}, beyond the node budget of {self.max_nodes}"
            )
        return value


class _Compiler:
    def __init__(self, policy, budget, resolve_set):
        self.policy = policy
        self.budget = budget
        self._resolve_set = resolve_set

    def compile(self, formula, env, entries):
        self.budget.spend(1)
        if isinstance(formula, Truth):
            return formula
        if isinstance(formula, Not):
            return not_(self.compile(formula.body, env, entries))
        if isinstance(formula, And):
            left = self.compile(formula.left, env, entries)
            right = self.compile(formula.right, env, entries)
            return and_(left, right)
        if isinstance(formula, Eq):
            return self._eq(self._letters(formula.left, env), self._letters(formula.right, env))
        if isinstance(formula, PrefLeq):
            return self._prefix(
                self._letters(formula.left, env), self._letters(formula.right, env)
            )
        if isinstance(formula, Mem):
            return self._membership(formula, env, entries)
        if isinstance(formula, HatRel):
            return self._hat(formula, env)
        if isinstance(formula, ExistsInd):
            return self._exists_word(formula, env, entries)
        if isinstance(formula, _SetQ):
            return self._exists_automaton(formula, env, entries)
        raise UsageError(f"not an iteration-side formula node: {formula!r}")

    def _letters(self, term, env):
        if isinstance(term, Root):
            return ()
        if isinstance(term, Var):
            letters = env.get(term.name)
            if letters is None:
                raise UsageError(f"unbound individual variable {term.name!r}")
            return letters
        raise UsageError(f"not an iteration-side term: {term!r}")

    def _eq(self, left, right):
        if len(left) != len(right):
            return F.FALSE
        return big_and(Eq(Var(a), Var(b)) for a, b in zip(left, right))

    def _prefix(self, left, right):
        if len(left) > len(right):
            return F.FALSE
        return big_and(Eq(Var(a), Var(b)) for a, b in zip(left, right))

    def _membership(self, formula, env, entries):
        letters = self._letters(formula.term, env)
        entry, cells = self._resolve_set(formula.setvar, entries)
        self.budget.spend(entry.states ** len(letters))
        runs = []
        for seq in itertools.product(range(entry.states), repeat=len(letters)):
            full = (entry.initial,) + seq
            if full[-1] not in entry.final:
                continue
            runs.append(
                big_and(
                    Mem(Var(letters[t]), cells(full[t], full[t + 1]))
                    for t in range(len(letters))
                )
            )
        return big_or(runs)

    def _hat(self, formula, env):
        words = [self._letters(t, env) for t in formula.args]
        if any(len(w) == 0 for w in words):
            return F.FALSE
        length = len(words[0])
        if any(len(w) != length for w in words):
            return F.FALSE
        shared = big_and(
            Eq(Var(words[0][t]), Var(w[t])) for w in words[1:] for t in range(length - 1)
        )
        return and_(shared, Rel(formula.name, tuple(Var(w[-1]) for w in words)))

    def _exists_word(self, formula, env, entries):
        limit = self.policy.individual_bound(entries, _tagged_rank(formula.body), formula.var)
        limit = self.budget.check_bound(limit, f"witness length for {formula.var!r}")
        branches = []
        for length in range(limit + 1):
            self.budget.spend(length + 1)
            letters = tuple(f"{formula.var}_{t}" for t in range(1, length + 1))
            inner = self.compile(formula.body, {**env, formula.var: letters}, entries)
            for name in reversed(letters):
                inner = ExistsInd(name, inner) if not _is_false(inner) else inner
            branches.append(inner)
        return big_or(branches)

    def _exists_automaton(self, formula, env, entries):
        states = self.policy.set_bound(
            entries, _tagged_rank(formula.body), formula.kind, formula.var
        )
        states = self.budget.check_bound(states, f"automaton bound for {formula.var!r}")
        if states > 30 or (1 << states) > self.budget.max_nodes:
            raise ResourceLimit(
                f"automaton bound {states} for {formula.var!r} implies 2^{states} "
                "final-set branches, beyond the node budget"
            )
        var = formula.var
        cells = lambda p, q: bound_cell_name(var, p, q)  # noqa: E731
        alphabet = bound_alphabet_name(var)
        classifier = formula_chain if formula.kind == "ch" else formula_mchain
        branches = []
        for mask in range(1 << states):
            final = frozenset(q for q in range(states) if mask >> q & 1)
            entry = ContextEntry(var, states, 0, final)
            self.budget.spend(states * states)
            branches.append(
                and_(
                    classifier(states, 0, final, cells),
                    self.compile(formula.body, env, entries + (entry,)),
                )
            )
        body = and_(_matrix_partition(states, cells, alphabet), big_or(branches))
        for p in range(states - 1, -1, -1):
            for q in range(states - 1, -1, -1):
                body = ExistsSet(cells(p, q), body)
        return ExistsSet(alphabet, body)


def _is_false(formula):
    return isinstance(formula, Truth) and not formula.value


def _matrix_partition(states, cells, alphabet):
    """The cells partition the alphabet set row by row."""
    parts = []
    for p in range(states):
        for q in range(states):
            for q2 in range(q + 1, states):
                parts.append(
                    not_(
                        ExistsInd(
                            "a", and_(Mem(Var("a"), cells(p, q)), Mem(Var("a"), cells(p, q2)))
                        )
                    )
                )
        row = big_or(Mem(Var("a"), cells(p, q)) for q in range(states))
        parts.append(
            forall_ind(
                "a",
                and_(
                    implies_(Mem(Var("a"), alphabet), row),
                    implies_(row, Mem(Var("a"), alphabet)),
                ),
            )
        )
    return big_and(parts)


def _matrix_interface(entry, cells):
    """Well-formedness of a free matrix: rows are disjoint and share one
    alphabet.  True of every actual transition matrix; mentioning every cell
    keeps the output's free-variable set equal to the full cell grid."""
    states = entry.states
    parts = []
    for p in range(states):
        for q in range(states):
            cell = cells(p, q)
            parts.append(not_(ExistsInd("a", and_(Mem(Var("a"), cell), not_(Mem(Var("a"), cell))))))
            for q2 in range(q + 1, states):
                parts.append(
                    not_(ExistsInd("a", and_(Mem(Var("a"), cells(p, q)), Mem(Var("a"), cells(p, q2)))))
                )
    for p in range(1, states):
        first = big_or(Mem(Var("a"), cells(0, q)) for q in range(states))
        row = big_or(Mem(Var("a"), cells(p, q)) for q in range(states))
        parts.append(forall_ind("a", and_(implies_(first, row), implies_(row, first))))
    return big_and(parts)


def _resolve_ctx_cells(ctx):
    """Cell namers for the free context entries, by 1-based position."""
    return {
        entry.name: (lambda i: (lambda p, q: free_cell_name(i, p, q)))(index + 1)
        for index, entry in enumerate(ctx.entries)
    }


def translate(
    sentence,
    regime,
    ctx=AutomatonContext(),
    policy=None,
    max_nodes=DEFAULT_MAX_NODES,
    include_interface=True,
):
    """Compile an iteration-side sentence to a weak-MSO base-side formula.

    With the production policy the result is equivalent in the strong sense:
    the iteration with the automata's languages satisfies the sentence exactly
    when the base with the automata's matrices satisfies the output.  The
    output's free set variables are precisely the matrix cells of the context
    entries.
    """
    if policy is None:
        policy = PaperBounds()
    if regime is Regime.FULL:
        raise UsageError("unrestricted set quantification admits no translation")
    _check_iteration_side(sentence)
    free_ind, free_set = F.free_vars(sentence)
    if free_ind:
        raise UsageError(f"sentence has free individual variables {sorted(free_ind)}")
    unknown = free_set - ctx.names()
    if unknown:
        raise UsageError(f"free set variables {sorted(unknown)} missing from the context")

    tagged = _tag(sentence, regime)
    namers = _resolve_ctx_cells(ctx)

    def resolve(setvar, entries):
        for entry in reversed(entries):
            if entry.name == setvar:
                if entry in ctx.entries:
                    return entry, namers[setvar]
                return entry, (lambda p, q: bound_cell_name(setvar, p, q))
        raise UsageError(f"set variable {setvar!r} is not in scope")

    compiler = _Compiler(policy, _Budget(max_nodes), resolve)
    core = compiler.compile(tagged, {}, tuple(ctx.entries))
    if not include_interface:
        return core
    interface = big_and(
        _matrix_interface(entry, namers[entry.name]) for entry in ctx.entries
    )
    return and_(interface, core)
