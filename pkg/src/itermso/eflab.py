"""Rank-equivalence laboratory: type computation on finite structures.

Two structures agree on all sentences of quantifier rank m (in a given
regime) exactly when they realise the same rank-m type.  Types are computed
recursively: the rank-0 type is the atomic diagram over the constants and
chosen parameters, described positionally so types compare across
structures; the rank-(m+1) type adds the set of rank-m types of all
one-element extensions and, except in the first-order regime, of all
regime-legal one-set extensions.

On a finite partial order every subset is a finite union of singleton
chains, so multichain-restricted set moves coincide with unrestricted ones
here; the chain regime genuinely restricts.  Type computation doubles as the
empirical class counter that sanity-checks the bound recursion from the
bounds module.

The laboratory also houses the glued-product congruence harness, the
tree-graft congruence harness, and finite truncations of the two classic
trees (every branch finite versus one infinite spine) used to illustrate the
negative results at finite scale.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from itermso.errors import UsageError
from itermso.formulas import Regime
from itermso.structures import (
    ORDER_REL,
    FiniteStructure,
    make_structure,
    product,
    transitive_closure,
)


class _TypeContext:
    def __init__(self, structure, regime):
        self.structure = structure
        self.regime = regime
        self.consts = tuple(idx for _, idx in structure.constants)
        self.rel_items = sorted(structure.relations.items())
        self.set_items = sorted(structure.sets.items())
        self.order = structure.relations.get(ORDER_REL)
        if regime in (Regime.CHAIN, Regime.MULTICHAIN) and self.order is None:
            raise UsageError("chain/multichain equivalence needs an interpreted order")
        self.memo = {}
        self._subsets = None
        self._chains = None

    def subsets(self):
        if self._subsets is None:
            n = self.structure.universe
            self._subsets = [
                frozenset(i for i in range(n) if mask >> i & 1) for mask in range(1 << n)
            ]
        return self._subsets

    def set_family(self):
        if self.regime is Regime.CHAIN:
            if self._chains is None:
                self._chains = [
                    s
                    for s in self.subsets()
                    if all(
                        (x, y) in self.order or (y, x) in self.order
                        for x, y in itertools.combinations(sorted(s), 2)
                    )
                ]
            return self._chains
        return self.subsets()

    def atomic_type(self, inds, sets):
        vals = self.consts + inds
        atoms = []
        for i, j in itertools.combinations(range(len(vals)), 2):
            if vals[i] == vals[j]:
                atoms.append(("eq", i, j))
        for name, table in self.rel_items:
            arity = self.structure.arities[name]
            for positions in itertools.product(range(len(vals)), repeat=arity):
                if tuple(vals[p] for p in positions) in table:
                    atoms.append(("rel", name, positions))
        for name, members in self.set_items:
            for i, v in enumerate(vals):
                if v in members:
                    atoms.append(("sig", name, i))
        for s, members in enumerate(sets):
            for i, v in enumerate(vals):
                if v in members:
                    atoms.append(("mem", s, i))
        return frozenset(atoms)

    def leaf_set_image(self, inds, sets):
        """Rank-0 types over one further set move, without enumerating moves.

        The atomic diagram sees a set only through its intersection with the
        term values, and the realisable intersections have closed form: every
        value subset (any regime but chains) or every pairwise-comparable
        value subset (chains, since such a subset is itself a chain).
        """
        vals = self.consts + inds
        distinct = sorted(set(vals))
        s_index = len(sets)
        base = self.atomic_type(inds, sets)
        image = set()
        for size in range(len(distinct) + 1):
            for combo in itertools.combinations(distinct, size):
                if self.regime is Regime.CHAIN and not all(
                    (x, y) in self.order or (y, x) in self.order
                    for x, y in itertools.combinations(combo, 2)
                ):
                    continue
                chosen = set(combo)
                extra = frozenset(
                    ("mem", s_index, i) for i, v in enumerate(vals) if v in chosen
                )
                image.add(base | extra)
        return frozenset(image)

    def rank_type(self, m, inds=(), sets=()):
        key = (m, inds, sets)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if m == 0:
            result = self.atomic_type(inds, sets)
        else:
            points = frozenset(
                self.rank_type(m - 1, inds + (b,), sets)
                for b in range(self.structure.universe)
            )
            if self.regime is Regime.FO:
                moves = None
            elif m == 1:
                moves = self.leaf_set_image(inds, sets)
            else:
                moves = frozenset(
                    self.rank_type(m - 1, inds, sets + (s,)) for s in self.set_family()
                )
            result = (self.atomic_type(inds, sets), points, moves)
        self.memo[key] = result
        return result


def rank_type(structure, m, regime):
    """Canonical rank-m type of a structure; equal types mean rank-m equivalence."""
    return _TypeContext(structure, regime).rank_type(m)


def ef_equiv(a, b, m, regime):
    """True iff the structures satisfy the same sentences of rank <= m."""
    if m < 0:
        raise UsageError("rank must be nonnegative")
    if a.signature != b.signature:
        raise UsageError("rank equivalence needs matching signatures")
    return rank_type(a, m, regime) == rank_type(b, m, regime)


def count_types(structures, m, regime):
    """Number of distinct rank-m types realised across the given structures."""
    return len({rank_type(s, m, regime) for s in structures})


# ---------------------------------------------------------------------------
# Random ordered structures


def random_poset(rng, size, constants=2):
    pairs = set()
    for i in range(size):
        for j in range(i + 1, size):
            if rng.random() < 0.4:
                pairs.add((i, j))
    order = transitive_closure(pairs | {(i, i) for i in range(size)})
    consts = tuple(
        (f"c{k + 1}", rng.randrange(size)) for k in range(constants)
    )
    return make_structure(size, {ORDER_REL: (2, order)}, consts)


# ---------------------------------------------------------------------------
# Product congruence harness


@dataclass
class CongruenceReport:
    tested: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def broken_product(lhs, rhs):
    """Deliberately wrong product: forgets to glue the constants, leaving the
    two factors side by side.  Used to prove the harness detects mistakes."""
    shift = lhs.universe
    relations = {}
    for name in lhs.relations:
        merged = set(lhs.relations[name])
        merged.update(tuple(e + shift for e in t) for t in rhs.relations[name])
        relations[name] = frozenset(merged)
    points = [lhs.constants[0][1]] + [idx + shift for _, idx in rhs.constants[1:]]
    constants = tuple((f"c{i + 1}", idx) for i, idx in enumerate(points))
    return FiniteStructure(
        lhs.universe + rhs.universe, relations, dict(lhs.arities), constants, {}
    )


def _two_chain():
    return make_structure(
        2, {ORDER_REL: (2, {(0, 0), (1, 1), (0, 1)})}, (("c1", 0), ("c2", 1))
    )


def _point():
    return make_structure(1, {ORDER_REL: (2, {(0, 0)})}, (("c1", 0),))


def check_product_congruence(
    samples,
    size_cap,
    m,
    seed=0,
    left_product=product,
    right_product=None,
):
    """Sample equivalent factor pairs and check the products stay equivalent.

    Factors are pooled and bucketed by rank type so the premise pairs are
    genuinely equivalent; a fixed smoke quadruple is prepended so a broken
    product function is caught deterministically.
    """
    right_product = right_product or left_product
    rng = random.Random(seed)
    regime = Regime.MULTICHAIN

    two_pointed, pointed = [], []
    for _ in range(max(samples, 60)):
        two_pointed.append(random_poset(rng, rng.randrange(1, size_cap + 1), 2))
        pointed.append(random_poset(rng, rng.randrange(1, size_cap + 1), 1))

    def buckets(pool, rank):
        grouped = {}
        for s in pool:
            grouped.setdefault(rank_type(s, rank, regime), []).append(s)
        return grouped

    report = CongruenceReport()
    quads = [(_two_chain(), _two_chain(), _point(), _point(), m)]
    left_buckets = buckets(two_pointed, m)
    right_buckets = buckets(pointed, m)
    left_keys = sorted(left_buckets, key=repr)
    right_keys = sorted(right_buckets, key=repr)
    while len(quads) < samples + 1:
        lb = left_buckets[left_keys[rng.randrange(len(left_keys))]]
        rb = right_buckets[right_keys[rng.randrange(len(right_keys))]]
        a, a2 = rng.choice(lb), rng.choice(lb)
        b, b2 = rng.choice(rb), rng.choice(rb)
        quads.append((a, a2, b, b2, m))

    for a, a2, b, b2, rank in quads:
        assert ef_equiv(a, a2, rank, regime) and ef_equiv(b, b2, rank, regime)
        left = left_product(a, b)
        right = right_product(a2, b2)
        report.tested += 1
        if not ef_equiv(left, right, rank, regime):
            report.violations.append(
                {"rank": rank, "left_size": left.universe, "right_size": right.universe}
            )
    return report


# ---------------------------------------------------------------------------
# Trees, grafting, truncations


def make_tree(parents):
    """Rooted tree from a parent array (parents[0] is ignored; node 0 is root).

    The order is ancestry, reflexively and transitively closed, with the root
    as a named constant.
    """
    size = len(parents)
    pairs = {(i, i) for i in range(size)}
    for child in range(1, size):
        node = child
        while node != 0:
            node = parents[node]
            pairs.add((node, child))
    return make_structure(size, {ORDER_REL: (2, pairs)}, (("r", 0),))


def random_tree(rng, size):
    parents = [0] * size
    for child in range(1, size):
        parents[child] = rng.randrange(child)
    return make_tree(parents)


def graft(host, node, scion):
    """Attach `scion` below `node` of `host` by identifying `node` with the
    scion's root; the scion root's children become children of `node`."""
    if not (0 <= node < host.universe):
        raise UsageError("graft node out of range")
    scion_root = scion.constant("r")
    shift = host.universe

    def embed(e):
        if e == scion_root:
            return node
        return shift + e - (1 if e > scion_root else 0)

    pairs = set(host.order)
    pairs.update((embed(x), embed(y)) for x, y in scion.order)
    order = transitive_closure(pairs)
    return make_structure(
        host.universe + scion.universe - 1,
        {ORDER_REL: (2, order)},
        (("r", host.constant("r")),),
    )


def truncated_tree(kind, depth, width, n=0):
    """Finite truncations of the decreasing-pairs tree.

    `T_omega`: nodes are sequences of (letter, level) pairs with strictly
    decreasing levels, letters below `width` and levels below `depth`; every
    branch has length at most `depth`.  `a_leq_n` grows a spine of length `n`
    and roots one truncated tree at every spine node; `T_infty` is the same
    finite object, named for the tree it truncates (whose spine is infinite).
    """
    if depth < 1 or width < 1:
        raise UsageError("depth and width must be >= 1")
    if kind == "T_omega":
        return _decreasing_tree(depth, width)
    if kind in ("a_leq_n", "T_infty"):
        spine = make_tree(list(range(-1, n)))  # a path of n+1 nodes
        result = spine
        for node in range(n + 1):
            result = graft(result, node, _decreasing_tree(depth, width))
        return result
    raise UsageError(f"unknown tree kind {kind!r}")


def _decreasing_tree(depth, width):
    nodes = [()]
    index = {(): 0}

    def extend(node, max_level):
        for level in range(max_level - 1, -1, -1):
            for letter in range(width):
                child = node + ((letter, level),)
                index[child] = len(nodes)
                nodes.append(child)
                extend(child, level)

    extend((), depth)
    pairs = set()
    for node, i in index.items():
        for cut in range(len(node) + 1):
            pairs.add((index[node[:cut]], i))
    return make_structure(len(nodes), {ORDER_REL: (2, pairs)}, (("r", 0),))


def check_graft_congruence(samples, size_cap, k, seed=0):
    """Grafting rank-equivalent trees at one node keeps the hosts equivalent."""
    rng = random.Random(seed)
    regime = Regime.WEAK
    pool = [random_tree(rng, rng.randrange(1, size_cap + 1)) for _ in range(max(3 * samples, 90))]
    grouped = {}
    for tree in pool:
        grouped.setdefault(rank_type(tree, k, regime), []).append(tree)
    keys = sorted(grouped, key=repr)

    report = CongruenceReport()
    while report.tested < samples:
        bucket = grouped[keys[rng.randrange(len(keys))]]
        scion, scion2 = rng.choice(bucket), rng.choice(bucket)
        host = random_tree(rng, rng.randrange(1, size_cap + 1))
        node = rng.randrange(host.universe)
        assert ef_equiv(scion, scion2, k, regime)
        report.tested += 1
        if not ef_equiv(graft(host, node, scion), graft(host, node, scion2), k, regime):
            report.violations.append({"rank": k, "host_size": host.universe, "node": node})
    return report


def enumerate_pointed_posets(max_size, constants=2):
    """Every partial order on at most `max_size` elements with every choice
    of constant tuple; the brute-force family behind the bound sanity check."""
    out = []
    for size in range(1, max_size + 1):
        nonreflexive = [(i, j) for i in range(size) for j in range(size) if i != j]
        for mask in range(1 << len(nonreflexive)):
            pairs = {p for b, p in enumerate(nonreflexive) if mask >> b & 1}
            pairs |= {(i, i) for i in range(size)}
            if not _is_partial_order(pairs, size):
                continue
            for consts in itertools.product(range(size), repeat=constants):
                out.append(
                    make_structure(
                        size,
                        {ORDER_REL: (2, pairs)},
                        tuple((f"c{k + 1}", c) for k, c in enumerate(consts)),
                    )
                )
    return out


def _is_partial_order(pairs, size):
    for x, y in pairs:
        if x != y and (y, x) in pairs:
            return False
        for y2, z in pairs:
            if y2 == y and (x, z) not in pairs:
                return False
    return True
