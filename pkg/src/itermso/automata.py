"""Complete deterministic automata over base-universe alphabets.

Automata present subsets of the word tree: the language lives on the
iteration side while the transition matrix is a tuple of finite letter sets
on the base side.  This module supplies the matrix view, reachability, and
the semantic language classifiers (chain, multichain, finite, singleton)
whose first-order twins the translator emits.

The multichain classifier works on the prefix closure of the language: a word
of the closure is a branching point when it has two distinct one-letter
extensions that still lead somewhere accepting.  A language is a finite union
of chains exactly when only finitely many words branch this way, i.e. when no
branching state is reachable through a cycle.  (A union of j chains has at
most j-1 branching points, and a finitely-branching prefix tree with finitely
many branching points splits into finitely many chains plus finitely many
single words.)
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from itermso.errors import UsageError
from itermso.structures import prefix_leq, words_up_to


@dataclass(frozen=True)
class Dfa:
    """Complete DFA with states 0..states-1 and a sorted alphabet.

    `delta[q][i]` is the successor of state q on letter `alphabet[i]`;
    completeness is guaranteed by shape.  An empty alphabet is allowed only
    for one-state automata (languages inside {empty word}).
    """

    states: int
    alphabet: tuple
    initial: int
    delta: tuple
    final: frozenset

    def __post_init__(self):
        if self.states < 1:
            raise UsageError("automaton needs at least one state")
        if not self.alphabet and self.states != 1:
            raise UsageError("empty alphabet is only allowed with a single state")
        if tuple(sorted(set(self.alphabet))) != self.alphabet:
            raise UsageError("alphabet must be sorted and duplicate-free")
        if not (0 <= self.initial < self.states):
            raise UsageError("initial state out of range")
        if len(self.delta) != self.states:
            raise UsageError("transition table needs one row per state")
        for row in self.delta:
            if len(row) != len(self.alphabet):
                raise UsageError("transition row does not cover the alphabet")
            if any(not (0 <= q < self.states) for q in row):
                raise UsageError("transition target out of range")
        if any(not (0 <= q < self.states) for q in self.final):
            raise UsageError("final state out of range")

    def letter_index(self, letter):
        try:
            return self.alphabet.index(letter)
        except ValueError:
            return None

    def step(self, state, letter):
        idx = self.letter_index(letter)
        if idx is None:
            return None
        return self.delta[state][idx]

    def run(self, word, start=None):
        """State after reading `word`, or None if a letter is foreign."""
        state = self.initial if start is None else start
        for letter in word:
            state = self.step(state, letter)
            if state is None:
                return None
        return state

    def accepts(self, word):
        state = self.run(word)
        return state is not None and state in self.final


def make_dfa(states, alphabet, initial, delta, final):
    order = tuple(sorted(set(alphabet)))
    if isinstance(delta, dict):
        rows = tuple(tuple(delta[(q, b)] for b in order) for q in range(states))
    else:
        rows = tuple(tuple(row) for row in delta)
    return Dfa(states, order, initial, rows, frozenset(final))


# ---------------------------------------------------------------------------
# Transition matrix view


@dataclass(frozen=True)
class TransitionMatrix:
    """For each ordered state pair (p, q), the letters moving p to q.

    For each p the row {cells[p][q]}_q partitions the alphabet; that is what
    makes a tuple of finite base sets act as a deterministic automaton.
    """

    states: int
    cells: tuple  # cells[p][q] is a frozenset of letters

    @property
    def alphabet(self):
        letters = set()
        for q in range(self.states):
            letters |= self.cells[0][q]
        return tuple(sorted(letters))


def matrix_of(dfa):
    cells = tuple(
        tuple(
            frozenset(b for i, b in enumerate(dfa.alphabet) if dfa.delta[p][i] == q)
            for q in range(dfa.states)
        )
        for p in range(dfa.states)
    )
    return TransitionMatrix(dfa.states, cells)


def dfa_of(matrix, initial, final):
    """Inverse of `matrix_of`; rejects rows that do not partition one alphabet."""
    alphabet = None
    for p in range(matrix.states):
        row = matrix.cells[p]
        union = set()
        total = 0
        for cell in row:
            union |= cell
            total += len(cell)
        if total != len(union):
            raise UsageError(f"matrix row {p} has overlapping cells")
        if alphabet is None:
            alphabet = union
        elif union != alphabet:
            raise UsageError(f"matrix row {p} covers a different alphabet")
    order = tuple(sorted(alphabet))
    delta = tuple(
        tuple(
            next(q for q in range(matrix.states) if b in matrix.cells[p][q])
            for b in order
        )
        for p in range(matrix.states)
    )
    return Dfa(matrix.states, order, initial, delta, frozenset(final))


# ---------------------------------------------------------------------------
# Reachability


def reachable(dfa):
    seen = {dfa.initial}
    frontier = [dfa.initial]
    while frontier:
        state = frontier.pop()
        for nxt in dfa.delta[state]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return frozenset(seen)


def coaccessible(dfa):
    """States from which some final state is reachable."""
    back = {q: set() for q in range(dfa.states)}
    for p in range(dfa.states):
        for q in dfa.delta[p]:
            back[q].add(p)
    seen = set(dfa.final)
    frontier = list(dfa.final)
    while frontier:
        state = frontier.pop()
        for prev in back[state]:
            if prev not in seen:
                seen.add(prev)
                frontier.append(prev)
    return frozenset(seen)


def dkpath(dfa, p, q):
    """True iff some word moves state p to state q (a path of length < |Q| does)."""
    if not (0 <= p < dfa.states and 0 <= q < dfa.states):
        raise UsageError("state out of range")
    seen = {p}
    frontier = [p]
    while frontier:
        state = frontier.pop()
        if state == q:
            return True
        for nxt in dfa.delta[state]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return q in seen


def _cyclic_states(dfa, allowed):
    """States of `allowed` lying on a nonempty cycle inside `allowed`."""
    cyclic = set()
    for start in allowed:
        # BFS over nonempty paths from start within allowed
        seen = set()
        frontier = [nxt for nxt in dfa.delta[start] if nxt in allowed]
        while frontier:
            state = frontier.pop()
            if state == start:
                cyclic.add(start)
                break
            if state in seen:
                continue
            seen.add(state)
            frontier.extend(nxt for nxt in dfa.delta[state] if nxt in allowed)
    return frozenset(cyclic)


def _branching_states(dfa):
    """States with two distinct letters leading to coaccessible successors."""
    coacc = coaccessible(dfa)
    branching = set()
    for p in range(dfa.states):
        useful_letters = [i for i, q in enumerate(dfa.delta[p]) if q in coacc]
        if len(useful_letters) >= 2:
            branching.add(p)
    return frozenset(branching)


def is_chain_language(dfa):
    """True iff the language is linearly ordered by the prefix relation.

    Two accepted words are incomparable exactly when they diverge at some
    reachable state via two distinct letters with accepting continuations.
    """
    reach = reachable(dfa)
    return not (_branching_states(dfa) & reach)


def is_multichain_language(dfa):
    """True iff the language is a finite union of chains.

    Fails exactly when some branching state is reached by infinitely many
    words, i.e. is reachable from a reachable cycle.
    """
    reach = reachable(dfa)
    cyclic = _cyclic_states(dfa, reach)
    infinite_reach = set()
    frontier = list(cyclic)
    seen = set(cyclic)
    while frontier:
        state = frontier.pop()
        infinite_reach.add(state)
        for nxt in dfa.delta[state]:
            if nxt in reach and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return not (_branching_states(dfa) & infinite_reach)


def is_finite_language(dfa):
    """True iff no reachable-and-coaccessible state lies on a useful cycle."""
    useful = reachable(dfa) & coaccessible(dfa)
    return not _cyclic_states(dfa, useful)


def _count_accepted(dfa, cap):
    """Number of accepted words, capped; requires a finite language."""
    useful = reachable(dfa) & coaccessible(dfa)
    memo = {}

    def count(state):
        if state in memo:
            return memo[state]
        total = 1 if state in dfa.final else 0
        for nxt in dfa.delta[state]:
            if nxt in useful:
                total += count(nxt)
                if total >= cap:
                    break
        memo[state] = min(total, cap)
        return memo[state]

    if dfa.initial not in useful:
        return 0
    return count(dfa.initial)


def is_singleton(dfa):
    return is_finite_language(dfa) and _count_accepted(dfa, 2) == 1


def word_of_singleton(dfa):
    """The unique accepted word; its accepting run repeats no state, so the
    word is shorter than the state count."""
    if not is_singleton(dfa):
        raise UsageError("automaton does not accept a singleton language")
    for word in words_up_to(dfa.alphabet, dfa.states - 1):
        if dfa.accepts(word):
            return word
    raise UsageError("singleton automaton accepted no word below the state bound")


# ---------------------------------------------------------------------------
# Constructions


def singleton_dfa(word, alphabet):
    """Complete DFA accepting exactly {word}: path states plus one sink."""
    letters = tuple(sorted(set(alphabet)))
    if any(b not in letters for b in word):
        raise UsageError("word uses letters outside the alphabet")
    if not letters:
        # degenerate one-state automaton for the empty word over no letters
        return Dfa(1, (), 0, ((),), frozenset({0}))
    n = len(word)
    sink = n + 1
    delta = []
    for pos in range(n):
        delta.append(tuple(pos + 1 if b == word[pos] else sink for b in letters))
    delta.append(tuple(sink for _ in letters))  # past the word
    delta.append(tuple(sink for _ in letters))  # sink loop
    return Dfa(n + 2, letters, 0, tuple(delta), frozenset({n}))


def derivative(dfa, word):
    """Automaton for the left quotient: same machine started at the state
    reached by `word`."""
    state = dfa.run(word)
    if state is None:
        raise UsageError("derivative word uses letters outside the alphabet")
    return Dfa(dfa.states, dfa.alphabet, state, dfa.delta, dfa.final)


def enumerate_dfas_exact(alphabet, states):
    """Every complete DFA with initial state 0 and exactly `states` states,
    in lexicographic order over (transition table, final set)."""
    letters = tuple(sorted(set(alphabet)))
    if states < 1 or (not letters and states != 1):
        return
    rows = list(itertools.product(range(states), repeat=len(letters)))
    for table in itertools.product(rows, repeat=states):
        for mask in range(1 << states):
            final = frozenset(q for q in range(states) if mask >> q & 1)
            yield Dfa(states, letters, 0, table, final)


def enumerate_dfas(alphabet, max_states):
    """All complete DFAs with initial state 0 and at most `max_states` states,
    smaller machines first, duplicate-free and deterministic."""
    if max_states < 1:
        raise UsageError("max_states must be >= 1")
    for states in range(1, max_states + 1):
        yield from enumerate_dfas_exact(alphabet, states)


def accepted_words(dfa, max_len):
    return [w for w in words_up_to(dfa.alphabet, max_len) if dfa.accepts(w)]


# ---------------------------------------------------------------------------
# Brute-force twins of the classifiers, by language enumeration only.
# The enumeration horizon 3|Q|+2 makes prefix-closure membership decidable
# for words up to 2|Q|+1: any state that accepts at all does so within |Q|-1
# further letters, and branching beyond depth 2|Q| implies branching before.


def brute_horizon(dfa):
    return 3 * dfa.states + 2


def brute_is_chain(dfa):
    words = accepted_words(dfa, brute_horizon(dfa))
    return all(
        prefix_leq(u, v) or prefix_leq(v, u)
        for u, v in itertools.combinations(words, 2)
    )


def brute_is_multichain(dfa):
    words = accepted_words(dfa, brute_horizon(dfa))
    down = set()
    for w in words:
        for i in range(len(w) + 1):
            down.add(w[:i])

    def branch_count(depth):
        count = 0
        for w in down:
            if len(w) > depth:
                continue
            extensions = {w + (b,) for b in dfa.alphabet} & down
            if len(extensions) >= 2:
                count += 1
        return count

    return branch_count(dfa.states) == branch_count(2 * dfa.states)


def brute_is_finite(dfa):
    words = accepted_words(dfa, brute_horizon(dfa))
    return all(len(w) < dfa.states for w in words)


def brute_is_singleton(dfa):
    words = accepted_words(dfa, brute_horizon(dfa))
    return brute_is_finite(dfa) and len(words) == 1


def brute_dkpath(dfa, p, q):
    return any(dfa.run(w, start=p) == q for w in words_up_to(dfa.alphabet, dfa.states))


# ---------------------------------------------------------------------------
# JSON automaton files

_DFA_KEYS = {"states", "alphabet", "initial", "delta", "final"}


def dfa_from_json(doc):
    if not isinstance(doc, dict):
        raise UsageError("automaton file must contain a JSON object")
    unknown = set(doc) - _DFA_KEYS
    if unknown:
        raise UsageError(f"unknown automaton keys {sorted(unknown)}")
    missing = _DFA_KEYS - set(doc)
    if missing:
        raise UsageError(f"automaton file missing keys {sorted(missing)}")
    given = list(doc["alphabet"])
    if len(set(given)) != len(given):
        raise UsageError("alphabet has duplicate letters")
    order = sorted(given)
    pos = [given.index(b) for b in order]
    delta = tuple(tuple(row[i] for i in pos) for row in doc["delta"])
    return Dfa(doc["states"], tuple(order), doc["initial"], delta, frozenset(doc["final"]))


def load_dfa(path):
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    return dfa_from_json(doc)


def dfa_to_json(dfa):
    return {
        "states": dfa.states,
        "alphabet": list(dfa.alphabet),
        "initial": dfa.initial,
        "delta": [list(row) for row in dfa.delta],
        "final": sorted(dfa.final),
    }
