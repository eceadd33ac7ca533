"""Exact arithmetic for hyper-exponential bound values.

Rank-type counts grow as towers of exponentials: already at rank two the
exact value needs more bits than any machine holds.  Values here are either
plain Python ints (whenever the bit count stays below a budget) or `Big`
objects denoting, exactly, ``sum(c_i * 2**e_i) + low`` where the exponents
are again values of this kind and are certified to dwarf every materialised
int in play.  Comparisons are decided by certified separation of magnitudes,
by stripping equal leading terms, or by materialising; they never guess.

`pow_up` is the one deliberately non-exact operation: it rounds its result up
to a power of two.  Larger bounds only enlarge the search space a compiled
quantifier describes, so soundness is preserved; callers that need exactness
(small stubbed inputs) get exact ints because everything fits the budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from itermso.errors import InternalError

# pow2 materialises up to this many bits (2 MiB numbers)
MAX_SHIFT = 1 << 24
# normalisation materialises Big values whose total size fits this
MATERIALIZE_BITS = 1 << 27


class Undecidable(InternalError):
    """Raised when two values are too entangled to compare without guessing."""


@dataclass(frozen=True)
class Big:
    """Exact integer sum(c * 2**e for (c, e) in terms) + low.

    Terms are sorted with the largest exponent first; exponents are pairwise
    distinct and each exceeds 2**MATERIALIZE_BITS-ish magnitudes of any
    coefficient or of `low`, which keeps every comparison rule sound.
    """

    terms: tuple  # ((coef:int, exp: int|Big), ...) sorted by exp descending
    low: int = 0

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __lt__(self, other):
        return cmp(self, other) < 0

    def __le__(self, other):
        return cmp(self, other) <= 0

    def __gt__(self, other):
        return cmp(self, other) > 0

    def __ge__(self, other):
        return cmp(self, other) >= 0

    def __eq__(self, other):
        if isinstance(other, (int, Big)):
            return cmp(self, other) == 0
        return NotImplemented

    def __hash__(self):
        return hash(("Big", self.terms, self.low))

    def __str__(self):
        parts = [
            (f"2^({_render(e)})" if c == 1 else f"{_render(c)}*2^({_render(e)})")
            for c, e in self.terms
        ]
        if self.low or not parts:
            parts.append(_render(self.low))
        return " + ".join(parts)

    __repr__ = __str__


def _render(value):
    if isinstance(value, int):
        return str(value) if value.bit_length() <= 64 else f"~2^{value.bit_length() - 1}"
    return f"({value})"


def _separated(exp, bits):
    """Certifies 2**exp > 2**bits for a plain-int bit count."""
    if isinstance(exp, int):
        return exp > bits
    return True  # Big exponents exceed every materialised magnitude


def _make(terms, low):
    """Normalise a term list; materialise when everything is small enough."""
    live = [(c, e) for c, e in terms if c]
    if all(isinstance(e, int) for _, e in live):
        total_bits = max((e for _, e in live), default=0)
        if total_bits <= MATERIALIZE_BITS and low.bit_length() <= MATERIALIZE_BITS:
            value = low
            for c, e in live:
                value += c << e
            return value
    if not live:
        return low
    # merge duplicate exponents
    merged = []
    for c, e in live:
        for i, (c0, e0) in enumerate(merged):
            if cmp(e, e0) == 0:
                merged[i] = (c0 + c, e0)
                break
        else:
            merged.append((c, e))
    merged.sort(key=_ExpKey, reverse=True)
    for c, e in merged:
        if not _separated(e, max(low.bit_length(), c.bit_length()) + 8):
            raise InternalError("lazy integer lost magnitude separation")
    return Big(tuple(merged), low)


class _ExpKey:
    def __init__(self, term):
        self.exp = term[1]

    def __lt__(self, other):
        return cmp(self.exp, other.exp) < 0


def pow2(exp):
    """Exactly 2**exp; stays lazy when the shift would be enormous."""
    if isinstance(exp, int):
        if exp < 0:
            raise InternalError("negative exponent")
        if exp <= MAX_SHIFT:
            return 1 << exp
        return Big(((1, exp),), 0)
    return Big(((1, exp),), 0)


def add(x, y):
    if isinstance(x, int) and isinstance(y, int):
        return x + y
    if isinstance(x, int):
        x, y = y, x
    if isinstance(y, int):
        return _make(x.terms, x.low + y)
    return _make(x.terms + y.terms, x.low + y.low)


def mul(x, y):
    if isinstance(x, int) and isinstance(y, int):
        return x * y
    if isinstance(x, int):
        x, y = y, x
    if isinstance(y, int):
        if y == 0:
            return 0
        return _make(tuple((c * y, e) for c, e in x.terms), x.low * y)
    terms = []
    for c1, e1 in x.terms:
        for c2, e2 in y.terms:
            terms.append((c1 * c2, add(e1, e2)))
        if y.low:
            terms.append((c1 * y.low, e1))
    if x.low:
        for c2, e2 in y.terms:
            terms.append((x.low * c2, e2))
    return _make(tuple(terms), x.low * y.low)


def _lo_exp(value):
    """Some E with value >= 2**E (value must be positive)."""
    if isinstance(value, int):
        if value <= 0:
            raise InternalError("nonpositive value in magnitude bound")
        return value.bit_length() - 1
    return value.terms[0][1]


def _hi_exp(value):
    """Some E with value < 2**E."""
    if isinstance(value, int):
        return value.bit_length()
    coefs = sum(c for c, _ in value.terms) + 1
    return add(value.terms[0][1], coefs.bit_length() + value.low.bit_length() + 2)


def _materialize(value):
    if isinstance(value, int):
        return value
    if all(isinstance(e, int) and e <= MATERIALIZE_BITS * 2 for _, e in value.terms):
        total = value.low
        for c, e in value.terms:
            total += c << e
        return total
    return None


def cmp(x, y):
    """Exact three-way comparison; raises Undecidable rather than guessing."""
    if isinstance(x, int) and isinstance(y, int):
        return (x > y) - (x < y)
    if x is y:
        return 0
    if isinstance(x, Big) and isinstance(y, Big):
        if x.terms == y.terms and x.low == y.low:
            return 0
        # strip shared leading terms
        if x.terms and y.terms:
            (cx, ex), (cy, ey) = x.terms[0], y.terms[0]
            head = cmp(ex, ey)
            if head == 0 and cx == cy:
                return cmp(_make(x.terms[1:], x.low), _make(y.terms[1:], y.low))
            if head == 0:
                # same leading exponent, different coefficient: the remaining
                # terms cannot bridge a full 2**ex gap
                rest_x = _make(x.terms[1:], x.low)
                rest_y = _make(y.terms[1:], y.low)
                if _bounded_by(rest_x, ex) and _bounded_by(rest_y, ex):
                    return (cx > cy) - (cx < cy)
    lo_x, hi_x = _lo_exp(x), _hi_exp(x)
    lo_y, hi_y = _lo_exp(y), _hi_exp(y)
    if cmp_exp(lo_x, hi_y) >= 0:
        return 1
    if cmp_exp(lo_y, hi_x) >= 0:
        return -1
    mx, my = _materialize(x), _materialize(y)
    if mx is not None and my is not None:
        return (mx > my) - (mx < my)
    raise Undecidable(f"cannot compare {x} with {y}")


def cmp_exp(a, b):
    """Comparison for exponent positions (themselves values)."""
    if isinstance(a, int) and isinstance(b, int):
        return (a > b) - (a < b)
    return cmp(a, b)


def _bounded_by(value, exp):
    """True when value < 2**exp is certified."""
    if isinstance(value, int) and value == 0:
        return True
    try:
        return cmp_exp(_hi_exp(value), exp) <= 0
    except Undecidable:
        return False


def le(x, y):
    return cmp(x, y) <= 0


def pow_up(base, exponent):
    """A power-of-two upper bound on base**exponent; exact when it all fits."""
    if isinstance(base, int) and base <= 0:
        raise InternalError("pow_up needs a positive base")
    if isinstance(base, int) and isinstance(exponent, int):
        if exponent * max(base.bit_length(), 1) <= MATERIALIZE_BITS:
            return base**exponent
    ceil_log = _ceil_log2(base)
    return pow2(mul(ceil_log, exponent))


def _ceil_log2(value):
    if isinstance(value, int):
        return (value - 1).bit_length() if value > 1 else 0
    return _hi_exp(value)


def as_json(value):
    """Render a value for JSON output: int when materialised, string when lazy."""
    if isinstance(value, int):
        return value
    return str(value)
