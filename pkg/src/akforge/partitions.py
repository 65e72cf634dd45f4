"""Exact circle/annulus partitions and their finite isomorphisms.

The building blocks:

* zeta(q)  -- the circle partition into arcs [i/q, (i+1)/q);
* eta(q)   -- the annulus partition into strips I x [j/q, (j+1)/q);
* K(a, q)  -- the permutation i -> i*a mod q realizing the conjugacy
  between rotation by 1/q on zeta and rotation by a/q on eta;
* the decomposition of R = K([0, 1/q_n)) into b_{n+1} connected
  components, each a stack of width-1/q_{n+1} slices.

Everything here is exact rational set algebra; annulus sets are
represented by their vertical factor (the horizontal factor is always the
full interval).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .circleset import CircularIntervalSet
from .stages import Stage


@dataclass(frozen=True)
class PermutationIso:
    """The bijection i -> i*a mod q of Z/q, with gcd(a, q) = 1.

    Realized two ways: rotation by 1/q acting on the index partition, and
    rotation by a/q acting on the image strips.
    """

    a: int
    q: int

    def __post_init__(self):
        if self.q < 1 or self.a < 0:
            raise ValueError("need q >= 1, a >= 0")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError(f"gcd(a, q) = {math.gcd(self.a, self.q)} != 1")

    def __call__(self, i: int) -> int:
        return (i * self.a) % self.q

    def image_arc(self, i: int) -> CircularIntervalSet:
        """Vertical arc of the image strip of the i-th circle arc."""
        lo = Fraction((i * self.a) % self.q, self.q)
        return CircularIntervalSet([(lo, lo + Fraction(1, self.q))])

    def source_arc(self, i: int) -> CircularIntervalSet:
        lo = Fraction(i % self.q, self.q)
        return CircularIntervalSet([(lo, lo + Fraction(1, self.q))])


def build_Kn(a: int, q: int) -> PermutationIso:
    return PermutationIso(a=a, q=q)


def verify_Kn_diagram(iso: PermutationIso, b: Optional[int] = None,
                      p: Optional[int] = None) -> bool:
    """Exact conjugacy checks over every residue.

    Always: map(i+1) = map(i) + a.  When b with a*b = 1 mod q is supplied,
    also the iterated form map(i + b*p) = map(i) + p.
    """
    a, q = iso.a, iso.q
    for i in range(q):
        if iso((i + 1) % q) != (iso(i) + a) % q:
            return False
    if b is not None:
        if (a * b) % q != 1 % q:
            return False
        step = (b * (p if p is not None else 1)) % q
        shift = (p if p is not None else 1) % q
        for i in range(q):
            if iso((i + step) % q) != (iso(i) + shift) % q:
                return False
    return True


@dataclass(frozen=True)
class RnComponent:
    l: int          # slice residue index
    k: int          # vertical cell, floor(l * a_next * q / q_next)
    r: int          # offset inside the cell, l*a_next - (q_next/q) * k
    f: int          # number of width-1/q_next slices stacked here

    def lo(self, q: int, q_next: int) -> Fraction:
        return Fraction(self.k, q) + Fraction(self.r, q_next)

    def hi(self, q: int, q_next: int) -> Fraction:
        return self.lo(q, q_next) + Fraction(self.f, q_next)


@dataclass(frozen=True)
class RnDecomposition:
    """R = K_n^{n+1}([0, 1/q_n)) as b_{n+1} stacked components.

    Components are listed in increasing r order l_0, ..., l_{b-1}, which is
    also the order in which they tile [0, q_next/q_n) after removing the
    vertical cell offsets: r(l_{i+1}) - r(l_i) = f(l_i).
    """

    q: int
    q_next: int
    a_next: int
    b_next: int
    m: int
    components: Tuple[RnComponent, ...]   # sorted by r

    def vertical_set(self) -> CircularIntervalSet:
        return CircularIntervalSet(
            [(c.lo(self.q, self.q_next), c.hi(self.q, self.q_next))
             for c in self.components])

    def measure(self) -> Fraction:
        return self.vertical_set().measure()

    def sorted_r(self) -> List[int]:
        return [c.r for c in self.components]

    def to_json(self) -> dict:
        return {
            "q": str(self.q),
            "q_next": str(self.q_next),
            "a_next": str(self.a_next),
            "b_next": str(self.b_next),
            "m_n": self.m,
            "components": [
                {"l": c.l, "k": str(c.k), "r": str(c.r), "f": str(c.f),
                 "lo": f"{c.lo(self.q, self.q_next).numerator}/"
                       f"{c.lo(self.q, self.q_next).denominator}",
                 "hi": f"{c.hi(self.q, self.q_next).numerator}/"
                       f"{c.hi(self.q, self.q_next).denominator}"}
                for c in self.components],
        }


def build_Rn_raw(q: int, q_next: int, a_next: int, b_next: int) -> RnDecomposition:
    """Component form of R from the four integers of a stage pair."""
    if q < 1 or q_next % q != 0 or q_next <= q:
        raise ValueError("need q | q_next and q < q_next")
    if math.gcd(a_next, q_next) != 1:
        raise ValueError("need gcd(a_next, q_next) = 1")
    if (a_next * b_next) % q_next != 1 % q_next:
        # the stacking of slices into b_next components uses a*b = 1 mod q'
        raise ValueError("need a_next * b_next = 1 mod q_next")
    big_q = q_next // q
    if b_next < 1 or b_next > big_q:
        raise ValueError("need 1 <= b_next <= q_next/q for distinct offsets")
    base = (big_q - 1) // b_next
    m = big_q - 1 - b_next * base
    comps = []
    for l in range(b_next):
        k, r = divmod(l * a_next, big_q)
        f = base + 1 if l <= m else base
        comps.append(RnComponent(l=l, k=k, r=r, f=f))
    rs = [c.r for c in comps]
    if len(set(rs)) != len(rs):
        raise ValueError("degenerate parameters: offsets r(l) are not distinct")
    comps.sort(key=lambda c: c.r)
    dec = RnDecomposition(q=q, q_next=q_next, a_next=a_next, b_next=b_next,
                          m=m, components=tuple(comps))
    if sum(c.f for c in comps) != big_q:
        raise AssertionError("slice count not conserved")
    return dec


def build_Rn(st: Stage, nxt: Stage) -> RnDecomposition:
    """Decomposition for a consecutive stage pair."""
    if nxt.q % st.q != 0 or nxt.q <= st.q:
        raise ValueError("invalid stage pair: q_n must properly divide q_{n+1}")
    if (nxt.a - st.a) % st.q != 0:
        raise ValueError("invalid stage pair: q_n must divide a_{n+1} - a_n")
    return build_Rn_raw(st.q, nxt.q, nxt.a, nxt.b)


def brute_force_Rn(q: int, q_next: int, a_next: int) -> CircularIntervalSet:
    """Independent oracle: union of the raw slices a_next*i/q_next + [0, 1/q_next)."""
    w = Fraction(1, q_next)
    arcs = []
    for i in range(q_next // q):
        lo = Fraction((a_next * i) % q_next, q_next)
        arcs.append((lo, lo + w))
    return CircularIntervalSet(arcs)


def verify_fundamental_domain(dec: RnDecomposition) -> bool:
    """Exact check that the q_n rotates of R by 1/q_n (equivalently by
    a_n/q_n, same subgroup) tile the circle."""
    base = dec.vertical_set()
    if base.measure() != Fraction(1, dec.q):
        return False
    union = CircularIntervalSet()
    total = Fraction(0)
    for j in range(dec.q):
        t = base.translate(Fraction(j, dec.q))
        if not union.intersection(t).is_empty():
            return False
        union = union.union(t)
        total += t.measure()
    return union == CircularIntervalSet.full() and total == 1


def eta_element(stages: Sequence[Stage], n: int, m: int, i: int) -> CircularIntervalSet:
    """Vertical factor of the i-th element of eta_n^m.

    The coarse arc [i/q_n, (i+1)/q_n) is split into its q_m/q_n fine arcs
    and pushed through K_m; the result is a union of width-1/q_m arcs.
    """
    if not 0 <= n <= m < len(stages):
        raise ValueError("need 0 <= n <= m < len(stages)")
    q_n, q_m, a_m = stages[n].q, stages[m].q, stages[m].a
    ratio = q_m // q_n
    w = Fraction(1, q_m)
    arcs = []
    for kk in range(ratio):
        j = i * ratio + kk
        lo = Fraction((j * a_m) % q_m, q_m)
        arcs.append((lo, lo + w))
    return CircularIntervalSet(arcs)


def build_eta_n_m(stages: Sequence[Stage], n: int, m: int) -> List[CircularIntervalSet]:
    """All q_n elements of the partition eta_n^m (vertical factors)."""
    if n > m:
        raise ValueError("need n <= m")
    return [eta_element(stages, n, m, i) for i in range(stages[n].q)]


def verify_subordination(coarse: Sequence[CircularIntervalSet],
                         fine: Sequence[CircularIntervalSet]) -> bool:
    """Every coarse element is an exact union of fine elements."""
    for ce in coarse:
        rebuilt = CircularIntervalSet()
        for fe in fine:
            inter = ce.intersection(fe)
            if inter.is_empty():
                continue
            if inter != fe:
                return False
            rebuilt = rebuilt.union(fe)
        if rebuilt != ce:
            return False
    return True


def verify_restriction_consistency(stages: Sequence[Stage], n: int) -> bool:
    """K_{n+1} restricted to the coarse arcs equals C_n^{n+1} K_n.

    Computed two ways and compared as exact interval sets: the union of
    fine image arcs (through K_{n+1}) versus the rotate of R by i*a_n/q_n.
    """
    st, nxt = stages[n], stages[n + 1]
    dec = build_Rn(st, nxt)
    base = dec.vertical_set()
    for i in range(st.q):
        via_fine = eta_element(stages, n, n + 1, i)
        via_translate = base.translate(Fraction(i * st.a, st.q))
        if via_fine != via_translate:
            return False
    return True
