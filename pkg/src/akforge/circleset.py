"""Exact arithmetic on the circle T^1 = R/Z.

Rationals are `fractions.Fraction` (arbitrary precision, always reduced).
`CircularIntervalSet` is a finite union of half-open arcs [lo, hi) with
rational endpoints taken mod 1, stored in a canonical normal form so that
set equality is literal equality of the arc lists.

Denominators are never bounded: stage denominators grow super-exponentially
in certified runs and everything here must stay exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Tuple, Union

RationalLike = Union[Fraction, int, str]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_fraction(x: RationalLike) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def format_fraction(x: Fraction) -> str:
    """Serialize as 'num/den' (den always present, bit-exact round trip)."""
    return f"{x.numerator}/{x.denominator}"


def mod1(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def extended_gcd(x: int, y: int) -> Tuple[int, int, int]:
    """Return (g, u, v) with u*x + v*y = g = gcd(x, y), for x, y >= 1."""
    if x < 1 or y < 1:
        raise ValueError("extended_gcd requires positive arguments")
    r0, r1 = x, y
    u0, u1 = 1, 0
    v0, v1 = 0, 1
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        u0, u1 = u1, u0 - q * u1
        v0, v1 = v1, v0 - q * v1
    assert u0 * x + v0 * y == r0
    return r0, u0, v0


def modular_inverse(a: int, q: int) -> int:
    """Smallest positive inverse of a mod q; requires gcd(a, q) = 1."""
    g, u, _ = extended_gcd(a % q if a % q else q, q)
    if g != 1:
        raise ValueError(f"{a} is not invertible mod {q}")
    return u % q


class CircularIntervalSet:
    """Finite union of half-open arcs [lo, hi) of T^1, exact endpoints.

    Canonical form: arcs pairwise disjoint, non-adjacent, sorted by lo,
    with 0 <= lo < hi <= 1.  Arcs crossing 0 are split; an arc ending at 1
    and one starting at 0 are therefore kept separate (splitting keeps the
    ordering total, and the canonical form is still unique).
    """

    __slots__ = ("arcs",)

    def __init__(self, arcs: Iterable[Tuple[RationalLike, RationalLike]] = ()):
        raw = []
        for lo, hi in arcs:
            lo = as_fraction(lo)
            hi = as_fraction(hi)
            width = hi - lo
            if width <= 0:
                continue
            if width >= 1:
                raw = [(ZERO, ONE)]
                break
            lo = mod1(lo)
            hi = lo + width
            if hi > 1:
                raw.append((lo, ONE))
                raw.append((ZERO, hi - 1))
            else:
                raw.append((lo, hi))
        self.arcs: Tuple[Tuple[Fraction, Fraction], ...] = _normalize(raw)

    @classmethod
    def full(cls) -> "CircularIntervalSet":
        return cls([(0, 1)])

    @classmethod
    def _from_normalized(cls, arcs) -> "CircularIntervalSet":
        obj = cls.__new__(cls)
        obj.arcs = tuple(arcs)
        return obj

    # -- queries ---------------------------------------------------------

    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.arcs), ZERO)

    def is_empty(self) -> bool:
        return not self.arcs

    def contains(self, x: RationalLike) -> bool:
        x = mod1(as_fraction(x))
        for lo, hi in self.arcs:
            if lo <= x < hi:
                return True
        return False

    # -- set algebra ------------------------------------------------------

    def union(self, other: "CircularIntervalSet") -> "CircularIntervalSet":
        return _combine(self, other, lambda a, b: a or b)

    def intersection(self, other: "CircularIntervalSet") -> "CircularIntervalSet":
        return _combine(self, other, lambda a, b: a and b)

    def difference(self, other: "CircularIntervalSet") -> "CircularIntervalSet":
        return _combine(self, other, lambda a, b: a and not b)

    def symmetric_difference(self, other: "CircularIntervalSet") -> "CircularIntervalSet":
        return _combine(self, other, lambda a, b: a != b)

    def complement(self) -> "CircularIntervalSet":
        return CircularIntervalSet.full().difference(self)

    def translate(self, t: RationalLike) -> "CircularIntervalSet":
        """The set t + A on T^1."""
        t = as_fraction(t)
        return CircularIntervalSet([(lo + t, hi + t) for lo, hi in self.arcs])

    # -- dunder ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, CircularIntervalSet) and self.arcs == other.arcs

    def __hash__(self) -> int:
        return hash(self.arcs)

    def __repr__(self) -> str:
        inner = " ".join(f"[{format_fraction(lo)},{format_fraction(hi)})" for lo, hi in self.arcs)
        return f"CircularIntervalSet({inner or 'empty'})"

    def to_json(self) -> list:
        return [[format_fraction(lo), format_fraction(hi)] for lo, hi in self.arcs]


def _normalize(raw: Sequence[Tuple[Fraction, Fraction]]):
    """Sort, merge overlapping/adjacent arcs; clip to [0, 1]."""
    if not raw:
        return ()
    raw = sorted(raw)
    merged = [list(raw[0])]
    for lo, hi in raw[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    if len(merged) >= 2 and merged[0][0] == 0 and merged[-1][1] == 1:
        # full-circle coverage check only; crossing arcs stay split
        pass
    if len(merged) == 1 and merged[0][0] == 0 and merged[0][1] == 1:
        return ((ZERO, ONE),)
    return tuple((lo, hi) for lo, hi in merged)


def _combine(a: CircularIntervalSet, b: CircularIntervalSet, keep) -> CircularIntervalSet:
    """Boolean combination by sweeping the merged breakpoint list."""
    points = sorted({ZERO, ONE}
                    | {p for arc in a.arcs for p in arc}
                    | {p for arc in b.arcs for p in arc})
    out = []
    for lo, hi in zip(points, points[1:]):
        mid_in_a = _covers(a.arcs, lo)
        mid_in_b = _covers(b.arcs, lo)
        if keep(mid_in_a, mid_in_b):
            out.append((lo, hi))
    return CircularIntervalSet._from_normalized(_normalize(out))


def _covers(arcs, lo) -> bool:
    # arcs are canonical, so [lo, next_point) is covered iff some arc
    # contains its left endpoint
    for a_lo, a_hi in arcs:
        if a_lo <= lo < a_hi:
            return True
        if a_lo > lo:
            break
    return False


def interval_set(*arcs: Tuple[RationalLike, RationalLike]) -> CircularIntervalSet:
    """Convenience constructor: interval_set((0, '1/2'), ('3/4', 1))."""
    return CircularIntervalSet(arcs)
