"""Exact evaluation of formulas on finite structures.

Set quantifiers range per regime: over all subsets (`full`), all finite sets
(`w`, which on a finite structure is again all subsets), all chains of the
interpreted order (`ch`), or all finite unions of chains (`mch`).  On a
finite partial order every subset is a union of its singleton chains, so the
multichain regime coincides with the full one here; the distinction only has
bite on the infinite word tree, which is the oracle's territory.

Formulas are compiled once into nested closures and cached, so repeated
evaluation of one formula against many structures stays cheap.
"""

from __future__ import annotations

from itermso import formulas as F
from itermso.errors import ResourceLimit, UsageError
from itermso.formulas import Regime
from itermso.structures import ORDER_REL, FiniteStructure

# documented cost guardrail: deep set quantification over large universes
MAX_UNIVERSE_FOR_DEEP_SETS = 16
MAX_FREE_SET_DEPTH = 2


def expand_with_sets(base, named_sets):
    """The structure with additional named unary predicates."""
    merged = dict(base.sets)
    for name, members in named_sets.items():
        merged[name] = frozenset(members)
        if any(not (0 <= e < base.universe) for e in merged[name]):
            raise UsageError(f"set {name!r} contains indices outside the universe")
    return FiniteStructure(base.universe, base.relations, base.arities, base.constants, merged)


class _EvalContext:
    def __init__(self, structure, regime):
        self.structure = structure
        self.universe = range(structure.universe)
        self.relations = structure.relations
        self.sets = structure.sets
        self.constants = dict(structure.constants)
        self.regime = regime
        self._order = structure.relations.get(ORDER_REL)
        self._subsets = None
        self._chains = None

    def order(self):
        if self._order is None:
            raise UsageError("chain/multichain regimes need an interpreted partial order")
        return self._order

    def all_subsets(self):
        if self._subsets is None:
            n = self.structure.universe
            self._subsets = [
                frozenset(i for i in range(n) if mask >> i & 1) for mask in range(1 << n)
            ]
        return self._subsets

    def chain_subsets(self):
        if self._chains is None:
            order = self.order()
            chains = []
            for subset in self.all_subsets():
                members = sorted(subset)
                if all(
                    (x, y) in order or (y, x) in order
                    for i, x in enumerate(members)
                    for y in members[i + 1 :]
                ):
                    chains.append(subset)
            self._chains = chains
        return self._chains


def _compile_term(term):
    if isinstance(term, F.Var):
        name = term.name
        return lambda ctx, env: env[name]
    if isinstance(term, F.Const):
        name = term.name
        def const(ctx, env):
            try:
                return ctx.constants[name]
            except KeyError:
                raise UsageError(f"uninterpreted constant {name!r}") from None
        return const
    if isinstance(term, F.Root):
        raise UsageError("the iteration root is not a term of the base structure")
    raise UsageError(f"not a term: {term!r}")


def _compile(formula):
    if isinstance(formula, F.Truth):
        value = formula.value
        return lambda ctx, env: value
    if isinstance(formula, F.Eq):
        left, right = _compile_term(formula.left), _compile_term(formula.right)
        return lambda ctx, env: left(ctx, env) == right(ctx, env)
    if isinstance(formula, F.PrefLeq):
        left, right = _compile_term(formula.left), _compile_term(formula.right)
        return lambda ctx, env: (left(ctx, env), right(ctx, env)) in ctx.order()
    if isinstance(formula, F.Rel):
        name = formula.name
        args = tuple(_compile_term(t) for t in formula.args)
        def rel(ctx, env):
            table = ctx.relations.get(name)
            if table is None:
                raise UsageError(f"uninterpreted relation {name!r}")
            return tuple(a(ctx, env) for a in args) in table
        return rel
    if isinstance(formula, F.HatRel):
        raise UsageError("lifted relations live on the iteration side; use the oracle")
    if isinstance(formula, F.Mem):
        term = _compile_term(formula.term)
        setvar = formula.setvar
        def mem(ctx, env):
            members = env.get(setvar)
            if members is None:
                members = ctx.sets.get(setvar)
                if members is None:
                    raise UsageError(f"uninterpreted set variable {setvar!r}")
            return term(ctx, env) in members
        return mem
    if isinstance(formula, F.Not):
        body = _compile(formula.body)
        return lambda ctx, env: not body(ctx, env)
    if isinstance(formula, F.And):
        left, right = _compile(formula.left), _compile(formula.right)
        return lambda ctx, env: left(ctx, env) and right(ctx, env)
    if isinstance(formula, F.ExistsInd):
        var = formula.var
        body = _compile(formula.body)
        def exists_ind(ctx, env):
            for value in ctx.universe:
                env[var] = value
                if body(ctx, env):
                    del env[var]
                    return True
            env.pop(var, None)
            return False
        return exists_ind
    if isinstance(formula, F.ExistsSet):
        var = formula.var
        body = _compile(formula.body)
        def exists_set(ctx, env):
            if ctx.regime is Regime.CHAIN:
                candidates = ctx.chain_subsets()
            elif ctx.regime is Regime.MULTICHAIN:
                ctx.order()  # multichains only make sense over an order
                candidates = ctx.all_subsets()
            elif ctx.regime is Regime.FO:
                raise UsageError("set quantifier under the fo regime")
            else:
                candidates = ctx.all_subsets()
            for value in candidates:
                env[var] = value
                if body(ctx, env):
                    del env[var]
                    return True
            env.pop(var, None)
            return False
        return exists_set
    raise UsageError(f"not a formula node: {formula!r}")


_COMPILED = {}


def _compiled(formula):
    key = id(formula)
    hit = _COMPILED.get(key)
    if hit is not None and hit[0] is formula:
        return hit[1]
    fn = _compile(formula)
    if len(_COMPILED) > 4096:
        _COMPILED.clear()
    _COMPILED[key] = (formula, fn)
    return fn


def evaluate(structure, formula, regime, env=None):
    """Truth of `formula` on `structure` under `regime`.

    Free individual variables must be bound by `env`; free set variables may
    be bound by `env` or interpreted by the structure's named sets.
    """
    env = dict(env or {})
    free_ind, free_set = F.free_vars(formula)
    missing = [v for v in sorted(free_ind) if v not in env]
    if missing:
        raise UsageError(f"unbound individual variables {missing}")
    for v in sorted(free_set):
        if v not in env and v not in structure.sets:
            raise UsageError(f"uninterpreted set variable {v!r}")
    if (
        structure.universe > MAX_UNIVERSE_FOR_DEEP_SETS
        and F.set_quantifier_depth(formula) > MAX_FREE_SET_DEPTH
    ):
        raise ResourceLimit(
            f"refusing set quantification of depth > {MAX_FREE_SET_DEPTH} over a "
            f"universe of {structure.universe} > {MAX_UNIVERSE_FOR_DEEP_SETS} elements"
        )
    ctx = _EvalContext(structure, regime)
    return _compiled(formula)(ctx, env)
