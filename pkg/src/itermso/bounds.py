"""Numeric bounds driving quantifier compilation.

`hintikka_bound(l, m)` is a computable upper bound on the number of rank-m
equivalence classes (under multichain-restricted set quantification) of
two-pointed ordered structures carrying `l` unary set parameters.  The
recursion counts rank-0 types by atomic truth assignments and bounds a
rank-(i+1) type by its own atoms times the powersets of the rank-i types of
one-point and one-set extensions:

    t_0(p, q)   = 2 ** atoms(p, q)
    t_{i+1}(p,q) = t_0(p, q) * 2**t_i(p+1, q) * 2**t_i(p, q+1)

Any monotone upper bound here keeps the compiled formulas sound and complete
(a larger existential search space loses nothing); the choice only affects
emitted-formula size.  Values explode hyper-exponentially, so results are
exact ints when they fit and exact lazy integers otherwise.

The derived automaton-size bounds for quantifier compilation, with
n = product of the ambient automaton state counts and T = t_m at l+1 set
parameters:

    witness length for one element   n * T
    chain quantifier states          2 * n * T
    branching-length bound           prod(|Q_i| + 1) * T
    multichain quantifier states     (2 * n * T) ** (s + 1),  s = n * T
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from itermso.errors import UsageError
from itermso.exactint import add, as_json, mul, pow2, pow_up


def atom_count(num_params, num_sets, signature=None):
    """Atomic formulas over two constants, `num_params` element parameters,
    and `num_sets` set parameters.

    Trivially-true atoms (reflexive equality and order) are dropped;
    equalities are counted unordered, order atoms ordered.
    """
    terms = num_params + 2
    count = terms * (terms - 1) // 2  # equalities over distinct term pairs
    count += terms * (terms - 1)  # order atoms over distinct ordered pairs
    count += terms * num_sets  # memberships
    if signature is not None:
        for _, arity in signature.relations:
            count += terms**arity
    return count


_HINTIKKA_CACHE = {}


def hintikka_bound(num_sets, rank, signature=None):
    """Upper bound on rank-`rank` multichain-equivalence classes of
    two-pointed structures with `num_sets` set parameters.

    Monotone in both arguments.  Exact int for small ranks, exact lazy
    integer beyond (the true values outgrow machine memory).
    """
    if num_sets < 0 or rank < 0:
        raise UsageError("hintikka_bound needs nonnegative arguments")
    sig_key = None if signature is None else signature.relations
    key = (num_sets, rank, sig_key)
    if key in _HINTIKKA_CACHE:
        return _HINTIKKA_CACHE[key]

    @lru_cache(maxsize=None)
    def level(i, p, q):
        base = pow2(atom_count(p, q + num_sets, signature))
        if i == 0:
            return base
        return mul(mul(base, pow2(level(i - 1, p + 1, q))), pow2(level(i - 1, p, q + 1)))

    result = level(rank, 0, 0)
    _HINTIKKA_CACHE[key] = result
    return result


def witness_length(state_counts, num_sets, rank, signature=None):
    """Word length within which a one-element property finds a witness.

    Beyond n*T letters a prefix position repeats both the state vector of the
    ambient automata and the rank type of the remaining segment, so the word
    can be shortened without changing any rank-`rank` property.
    """
    n = math.prod(state_counts) if state_counts else 1
    return mul(n, hintikka_bound(num_sets + 1, rank, signature))


@dataclass(frozen=True)
class BoundSet:
    """All derived bounds for one quantifier-compilation step."""

    num_sets: int
    rank: int
    n: object  # product of ambient state counts
    T: object  # hintikka_bound(num_sets + 1, rank)
    s: object  # n * T
    chain: object  # 2 * n * T
    branch_length: object  # prod(|Q_i| + 1) * T
    multichain: object  # (2 * n * T) ** (s + 1)

    def to_json(self):
        return {
            "l": self.num_sets,
            "m": self.rank,
            "n": as_json(self.n),
            "T": as_json(self.T),
            "s": as_json(self.s),
            "chain": as_json(self.chain),
            "branch_length": as_json(self.branch_length),
            "multichain": as_json(self.multichain),
        }


def bound_set(state_counts, num_sets, rank, signature=None, t_override=None):
    """Assemble the bound family for ambient automata of the given sizes.

    `t_override` injects a small stand-in for the type-count bound so the
    arithmetic is inspectable in tests; production always computes it.
    """
    counts = list(state_counts)
    if any(c < 1 for c in counts):
        raise UsageError("state counts must be >= 1")
    n = math.prod(counts) if counts else 1
    T = t_override if t_override is not None else hintikka_bound(num_sets + 1, rank, signature)
    s = mul(n, T)
    chain = mul(2, s)
    branch_length = mul(math.prod(c + 1 for c in counts) if counts else 1, T)
    multichain = pow_up(chain, add(s, 1))
    return BoundSet(num_sets, rank, n, T, s, chain, branch_length, multichain)
