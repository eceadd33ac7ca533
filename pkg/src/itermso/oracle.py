"""Bounded brute-force evaluation of sentences directly over the word tree.

Individual quantifiers range over words up to a length bound; set quantifiers
range over explicit finite word sets up to a cardinality bound and over the
languages of enumerated automata up to a state bound, filtered semantically
by the regime (finite sets, chains, or multichains).  This realises set
quantification restricted to regular multichains, and is the independent
ground truth the translator is tested against.

Verdicts are honest about bounds.  `bound_hit` reports that some search
exhausted its space without the verdict being certified exact; a false with
`bound_hit` means "no witness found", never a refutation.  Searches are
certified exact in two cases: the candidate space was provably complete
(an equality or prefix constraint capped it), or the quantifier is innermost
over quantifier-free matter and the length bound reaches the pumping cutoff

    longest interpreted word  +  product of set-automaton state counts  +  1

beyond which some prefix position repeats every automaton state and the word
can be shortened without changing any atom.

Every true verdict carries the existential witnesses of its deciding branch;
`replay` re-evaluates the sentence with those choices pinned.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from itermso import formulas as F
from itermso.automata import (
    Dfa,
    accepted_words,
    dfa_to_json,
    enumerate_dfas,
    is_chain_language,
    is_finite_language,
    is_multichain_language,
)
from itermso.errors import UsageError
from itermso.formulas import Regime
from itermso.structures import eval_hat_relation, prefix_leq, words_up_to


@dataclass(frozen=True)
class FiniteWords:
    """An explicit finite set of words."""

    words: frozenset

    def __contains__(self, word):
        return tuple(word) in self.words

    def max_word_len(self):
        return max((len(w) for w in self.words), default=0)

    def to_json(self):
        return {"kind": "finite", "words": sorted(map(list, self.words))}


@dataclass(frozen=True)
class RegularWords:
    """The language of a complete DFA over a sub-alphabet of the base."""

    dfa: Dfa

    def __contains__(self, word):
        return self.dfa.accepts(word)

    def max_word_len(self):
        return 0  # contributes through its state count instead

    def to_json(self):
        return {"kind": "dfa", "dfa": dfa_to_json(self.dfa)}


@dataclass(frozen=True)
class OracleConfig:
    """Search bounds: word length d, automaton states b, explicit-set size c."""

    max_word_len: int
    max_states: int
    max_explicit_size: int
    regime: Regime

    def __post_init__(self):
        if self.max_word_len < 0 or self.max_states < 0 or self.max_explicit_size < 0:
            raise UsageError("oracle bounds must be nonnegative")


@dataclass(frozen=True)
class OracleResult:
    truth: bool
    bound_hit: bool
    witnesses: dict

    def witnesses_json(self):
        out = {}
        for name, value in self.witnesses.items():
            if isinstance(value, tuple):
                out[name] = {"kind": "word", "letters": list(value)}
            else:
                out[name] = value.to_json()
        return out


def pumping_cutoff(ctx):
    """Word length at which the ambient automata's joint state vector must
    repeat along a prefix chain: one more than the product of state counts."""
    n = math.prod(e.states for e in ctx.entries) if ctx.entries else 1
    return n + 1


# ---------------------------------------------------------------------------
# Set-candidate enumeration (cached per universe and bounds)

_CANDIDATE_CACHE = {}

_FILTERS = {
    Regime.WEAK: is_finite_language,
    Regime.CHAIN: is_chain_language,
    Regime.MULTICHAIN: is_multichain_language,
}


def _explicit_ok(words, regime):
    if regime is Regime.CHAIN:
        return all(
            prefix_leq(u, v) or prefix_leq(v, u)
            for u, v in itertools.combinations(words, 2)
        )
    return True  # finite sets are finite and are unions of singleton chains


def _set_candidates(universe, cfg):
    key = (universe, cfg.max_word_len, cfg.max_states, cfg.max_explicit_size, cfg.regime)
    cached = _CANDIDATE_CACHE.get(key)
    if cached is not None:
        return cached
    horizon = max(2 * cfg.max_states, 1)
    candidates = []
    seen = set()

    def admit(value, langkey):
        if langkey in seen:
            return
        seen.add(langkey)
        candidates.append(value)

    base_words = list(words_up_to(range(universe), cfg.max_word_len))
    for size in range(cfg.max_explicit_size + 1):
        for combo in itertools.combinations(base_words, size):
            if _explicit_ok(combo, cfg.regime):
                admit(FiniteWords(frozenset(combo)), ("finite", tuple(sorted(combo))))

    regime_filter = _FILTERS[cfg.regime]
    if cfg.max_states >= 1:
        for size in range(universe + 1):
            for letters in itertools.combinations(range(universe), size):
                for dfa in enumerate_dfas(letters, cfg.max_states):
                    if not regime_filter(dfa):
                        continue
                    if is_finite_language(dfa):
                        langkey = ("finite", tuple(sorted(accepted_words(dfa, dfa.states))))
                    else:
                        langkey = ("infinite", tuple(sorted(accepted_words(dfa, horizon))))
                    admit(RegularWords(dfa), langkey)

    _CANDIDATE_CACHE[key] = candidates
    return candidates


# ---------------------------------------------------------------------------
# Evaluation


def _check_iteration_side(formula):
    if isinstance(formula, F.Rel):
        raise UsageError("base-relation atoms do not belong in an iteration-side sentence")
    if isinstance(formula, (F.Eq, F.PrefLeq)):
        for term in (formula.left, formula.right):
            if isinstance(term, F.Const):
                raise UsageError("the iteration has no named constants besides root")
    if isinstance(formula, (F.Not,)):
        _check_iteration_side(formula.body)
    if isinstance(formula, F.And):
        _check_iteration_side(formula.left)
        _check_iteration_side(formula.right)
    if isinstance(formula, (F.ExistsInd, F.ExistsSet)):
        _check_iteration_side(formula.body)


class _Verdict:
    __slots__ = ("truth", "exact", "witnesses")

    def __init__(self, truth, exact, witnesses=None):
        self.truth = truth
        self.exact = exact
        self.witnesses = witnesses or {}


def _quantifier_free(formula):
    if isinstance(formula, (F.Truth, F.Eq, F.PrefLeq, F.Mem, F.HatRel, F.Rel)):
        return True
    if isinstance(formula, F.Not):
        return _quantifier_free(formula.body)
    if isinstance(formula, F.And):
        return _quantifier_free(formula.left) and _quantifier_free(formula.right)
    return False


class _Oracle:
    def __init__(self, base, cfg, pinned=None):
        self.base = base
        self.cfg = cfg
        self.pinned = pinned or {}

    # -- terms

    def word(self, term, env):
        if isinstance(term, F.Root):
            return ()
        if isinstance(term, F.Var):
            value = env.get(term.name)
            if value is None or not isinstance(value, tuple):
                raise UsageError(f"unbound individual variable {term.name!r}")
            return value
        raise UsageError(f"not an iteration-side term: {term!r}")

    # -- exactness certification for innermost word searches

    def _cutoff(self, body, env):
        longest = 0
        states = 1
        for value in env.values():
            if isinstance(value, tuple):
                longest = max(longest, len(value))
            elif isinstance(value, FiniteWords):
                longest = max(longest, value.max_word_len())
            elif isinstance(value, RegularWords):
                states *= value.dfa.states
        return longest + states + 1

    # -- candidate pruning from the positive conjunctive spine

    def _constraints(self, formula, var, env, out):
        if isinstance(formula, F.And):
            self._constraints(formula.left, var, env, out)
            self._constraints(formula.right, var, env, out)
            return
        if isinstance(formula, F.Eq):
            for mine, other in ((formula.left, formula.right), (formula.right, formula.left)):
                if isinstance(mine, F.Var) and mine.name == var:
                    concrete = self._concrete(other, env, var)
                    if concrete is not None:
                        out["eq"] = concrete
        if isinstance(formula, F.PrefLeq):
            if isinstance(formula.left, F.Var) and formula.left.name == var:
                concrete = self._concrete(formula.right, env, var)
                if concrete is not None:
                    out.setdefault("upper", []).append(concrete)
            if isinstance(formula.right, F.Var) and formula.right.name == var:
                concrete = self._concrete(formula.left, env, var)
                if concrete is not None:
                    out.setdefault("lower", []).append(concrete)

    def _concrete(self, term, env, var):
        if isinstance(term, F.Root):
            return ()
        if isinstance(term, F.Var) and term.name != var:
            value = env.get(term.name)
            if isinstance(value, tuple):
                return value
        return None

    def _word_candidates(self, formula, env):
        """Candidate words (within the length bound) plus a completeness flag
        saying the constraint set provably caps the search."""
        d = self.cfg.max_word_len
        hints = {}
        self._constraints(formula.body, formula.var, env, hints)
        if "eq" in hints:
            value = hints["eq"]
            complete = True
            return ([value] if len(value) <= d else []), complete and len(value) <= d
        if "upper" in hints:
            # any witness is a prefix of every upper word, hence of the shortest
            shortest = min(hints["upper"], key=len)
            prefixes = [shortest[:i] for i in range(len(shortest) + 1)]
            return [p for p in prefixes if len(p) <= d], len(shortest) <= d
        if "lower" in hints:
            longest = max(hints["lower"], key=len)
            if len(longest) > d:
                return [], False
            tail = [
                longest + suffix
                for suffix in words_up_to(range(self.base.universe), d - len(longest))
            ]
            return tail, False
        return list(words_up_to(range(self.base.universe), d)), False

    # -- recursion

    def eval(self, formula, env):
        if isinstance(formula, F.Truth):
            return _Verdict(formula.value, True)
        if isinstance(formula, F.Eq):
            return _Verdict(self.word(formula.left, env) == self.word(formula.right, env), True)
        if isinstance(formula, F.PrefLeq):
            return _Verdict(
                prefix_leq(self.word(formula.left, env), self.word(formula.right, env)), True
            )
        if isinstance(formula, F.HatRel):
            words = [self.word(t, env) for t in formula.args]
            return _Verdict(eval_hat_relation(self.base, formula.name, words), True)
        if isinstance(formula, F.Mem):
            value = env.get(formula.setvar)
            if not isinstance(value, (FiniteWords, RegularWords)):
                raise UsageError(f"unbound set variable {formula.setvar!r}")
            return _Verdict(self.word(formula.term, env) in value, True)
        if isinstance(formula, F.Rel):
            raise UsageError("base-relation atoms do not belong on the iteration side")
        if isinstance(formula, F.Not):
            inner = self.eval(formula.body, env)
            return _Verdict(not inner.truth, inner.exact)
        if isinstance(formula, F.And):
            left = self.eval(formula.left, env)
            if not left.truth and left.exact:
                return left
            right = self.eval(formula.right, env)
            if not right.truth and right.exact:
                return right
            truth = left.truth and right.truth
            if truth:
                return _Verdict(True, left.exact and right.exact, {**left.witnesses, **right.witnesses})
            return _Verdict(False, False)
        if isinstance(formula, F.ExistsInd):
            return self._exists_word(formula, env)
        if isinstance(formula, F.ExistsSet):
            return self._exists_set(formula, env)
        raise UsageError(f"not a formula node: {formula!r}")

    def _exists_word(self, formula, env):
        pinned = self.pinned.get(formula.var)
        if isinstance(pinned, tuple):
            inner = self.eval(formula.body, {**env, formula.var: pinned})
            if inner.truth:
                return _Verdict(True, inner.exact, {formula.var: pinned, **inner.witnesses})
            return _Verdict(False, False)
        candidates, complete = self._word_candidates(formula, env)
        certified = complete or (
            _quantifier_free(formula.body)
            and self.cfg.max_word_len >= self._cutoff(formula.body, env)
        )
        best = None
        for word in candidates:
            inner = self.eval(formula.body, {**env, formula.var: word})
            if inner.truth:
                verdict = _Verdict(
                    True, inner.exact, {formula.var: word, **inner.witnesses}
                )
                if inner.exact:
                    return verdict
                best = best or verdict
        if best is not None:
            return best
        return _Verdict(False, certified)

    def _exists_set(self, formula, env):
        if self.cfg.regime is Regime.FO:
            raise UsageError("set quantifier under the fo regime")
        if self.cfg.regime is Regime.FULL:
            raise UsageError("the oracle cannot range over arbitrary infinite sets")
        pinned = self.pinned.get(formula.var)
        if isinstance(pinned, (FiniteWords, RegularWords)):
            inner = self.eval(formula.body, {**env, formula.var: pinned})
            if inner.truth:
                return _Verdict(True, inner.exact, {formula.var: pinned, **inner.witnesses})
            return _Verdict(False, False)
        best = None
        for value in _set_candidates(self.base.universe, self.cfg):
            inner = self.eval(formula.body, {**env, formula.var: value})
            if inner.truth:
                verdict = _Verdict(True, inner.exact, {formula.var: value, **inner.witnesses})
                if inner.exact:
                    return verdict
                best = best or verdict
        if best is not None:
            return best
        return _Verdict(False, False)  # the set space is never exhausted


def oracle_eval(base, sentence, cfg, env=None):
    """Bounded truth of an iteration-side sentence, with honest bound flags."""
    base.require_base()
    _check_iteration_side(sentence)
    engine = _Oracle(base, cfg)
    verdict = engine.eval(sentence, dict(env or {}))
    return OracleResult(verdict.truth, not verdict.exact, verdict.witnesses)


def replay(base, sentence, cfg, witnesses, env=None):
    """Re-evaluate with the recorded existential choices pinned; the verdict
    confirms the witnesses by direct evaluation underneath them."""
    engine = _Oracle(base, cfg, pinned=dict(witnesses))
    return engine.eval(sentence, dict(env or {})).truth
