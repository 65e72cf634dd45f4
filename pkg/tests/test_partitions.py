import math
import random
from fractions import Fraction

import pytest

from akforge.circleset import CircularIntervalSet, interval_set
from akforge.partitions import (PermutationIso, brute_force_Rn, build_Kn,
                                build_Rn, build_Rn_raw, build_eta_n_m,
                                eta_element, verify_fundamental_domain,
                                verify_Kn_diagram,
                                verify_restriction_consistency,
                                verify_subordination)
from akforge.stages import DEPENDENT, INDEPENDENT, ConstructionPolicy, generate


def relaxed(mode, cs=(1,)):
    return ConstructionPolicy(mode=mode, certified=False, c_overrides=tuple(cs))


# -- K maps -------------------------------------------------------------------

def test_build_Kn_identity():
    iso = build_Kn(1, 5)
    assert [iso(i) for i in range(5)] == [0, 1, 2, 3, 4]
    assert verify_Kn_diagram(iso)


def test_build_Kn_7_20():
    iso = build_Kn(7, 20)
    assert [iso(i) for i in range(4)] == [0, 7, 14, 1]
    assert verify_Kn_diagram(iso, b=3, p=5)


def test_build_Kn_symmetry_case():
    q = 11
    iso = build_Kn(q - 1, q)
    for i in range(q):
        assert iso(i) == (-i) % q
    assert verify_Kn_diagram(iso)


def test_build_Kn_rejects_common_factor():
    with pytest.raises(ValueError):
        build_Kn(6, 20)


def test_tampered_permutation_fails():
    iso = build_Kn(7, 20)

    class Tampered(PermutationIso):
        def __call__(self, i):
            if i == 3:
                return PermutationIso.__call__(self, 4)
            if i == 4:
                return PermutationIso.__call__(self, 3)
            return PermutationIso.__call__(self, i)

    bad = Tampered(7, 20)
    assert not verify_Kn_diagram(bad)


# -- the figure example ---------------------------------------------------------

def test_figure_example_exact():
    dec = build_Rn_raw(2, 20, 7, 3)
    by_l = {c.l: c for c in dec.components}
    assert (by_l[0].k, by_l[1].k, by_l[2].k) == (0, 0, 1)
    assert (by_l[0].r, by_l[1].r, by_l[2].r) == (0, 7, 4)
    assert dec.m == 0
    assert (by_l[0].f, by_l[1].f, by_l[2].f) == (4, 3, 3)
    widths = [Fraction(c.f, 20) for c in dec.components]
    assert sorted(widths, reverse=True) == [Fraction(4, 20), Fraction(3, 20),
                                            Fraction(3, 20)]
    assert dec.measure() == Fraction(1, 2)
    # sorted-by-r order is l = 0, 2, 1
    assert [c.l for c in dec.components] == [0, 2, 1]


def test_figure_example_oracle_and_tiling():
    dec = build_Rn_raw(2, 20, 7, 3)
    assert dec.vertical_set() == brute_force_Rn(2, 20, 7)
    assert verify_fundamental_domain(dec)


def test_single_component_case():
    # b_next = 1: one stack absorbs all slices iff a_next = 1 mod q_next/q
    dec = build_Rn_raw(2, 10, 11, 1)
    assert len(dec.components) == 1
    assert dec.vertical_set() == interval_set((0, Fraction(1, 2)))
    assert verify_fundamental_domain(dec)


def test_slice_count_conservation_random():
    from akforge.circleset import modular_inverse
    rng = random.Random(5)
    count = 0
    while count < 120:
        q = rng.randint(2, 30)
        mult = rng.randint(2, 40)
        q_next = q * mult
        b_next = rng.randint(1, min(mult, 12))
        if math.gcd(b_next, q_next) != 1:
            continue
        a_next = modular_inverse(b_next, q_next)
        try:
            dec = build_Rn_raw(q, q_next, a_next, b_next)
        except ValueError:
            continue
        count += 1
        assert sum(c.f for c in dec.components) == q_next // q
        assert dec.measure() == Fraction(1, q)
        assert dec.vertical_set() == brute_force_Rn(q, q_next, a_next)


def test_sorted_widths_telescope():
    # r(l_{i+1}) - r(l_i) = f(l_i) with r(l_b) = q_next/q
    dec = build_Rn_raw(2, 20, 7, 3)
    rs = dec.sorted_r() + [10]
    for c, (r0, r1) in zip(dec.components, zip(rs, rs[1:])):
        assert r1 - r0 == c.f


def test_shifted_set_fails_fundamental_domain():
    dec = build_Rn_raw(2, 20, 7, 3)
    shifted = dec.vertical_set().translate(Fraction(1, 40))
    union = shifted
    ok = True
    for j in range(1, 2):
        t = shifted.translate(Fraction(j, 2))
        if not union.intersection(t).is_empty():
            ok = False
        union = union.union(t)
    # the quarter-shifted set still tiles (translation of a tiling);
    # instead corrupt by dropping a component
    partial = CircularIntervalSet(
        [(c.lo(dec.q, dec.q_next), c.hi(dec.q, dec.q_next))
         for c in dec.components[:-1]])
    covered = CircularIntervalSet()
    for j in range(2):
        covered = covered.union(partial.translate(Fraction(j, 2)))
    assert covered != CircularIntervalSet.full()
    assert ok  # translation of a fundamental domain remains one


# -- stage-pair decompositions ---------------------------------------------------

def test_build_Rn_from_stage_pair():
    pol = relaxed(DEPENDENT, (3,))
    stages = generate(pol, 1, 2, 3, 1)
    # this seed reproduces the figure parameters
    assert (stages[0].q, stages[1].q, stages[1].a, stages[1].b) == (2, 20, 7, 3)
    dec = build_Rn(stages[0], stages[1])
    assert [c.l for c in dec.components] == [0, 2, 1]


def test_restriction_consistency_worked():
    pol = relaxed(DEPENDENT, (1, 2))
    stages = generate(pol, 1, 5, 3, 2)
    assert verify_restriction_consistency(stages, 0)
    assert verify_restriction_consistency(stages, 1)


def test_restriction_consistency_tampered():
    from akforge.stages import Stage
    pol = relaxed(DEPENDENT, (1, 2))
    stages = generate(pol, 1, 5, 3, 2)
    st1 = stages[1]
    bad = Stage.unchecked(n=1, p=st1.p, q=st1.q, a=st1.a + 1, b=st1.b, s=st1.s)
    with pytest.raises(ValueError):
        # gcd(a+1, q) != 1 here; construction of the decomposition rejects
        verify_restriction_consistency([stages[0], bad], 0)


# -- eta partitions ---------------------------------------------------------------

def test_eta_n_m_measures_and_subordination():
    pol = relaxed(DEPENDENT, (1, 2))
    stages = generate(pol, 1, 5, 3, 2)
    eta_0_2 = build_eta_n_m(stages, 0, 2)
    eta_1_2 = build_eta_n_m(stages, 1, 2)
    assert len(eta_0_2) == 5 and len(eta_1_2) == 20
    for e in eta_0_2:
        assert e.measure() == Fraction(1, 5)
    for e in eta_1_2:
        assert e.measure() == Fraction(1, 20)
    assert verify_subordination(eta_0_2, eta_1_2)


def test_eta_n_n_is_eta():
    pol = relaxed(DEPENDENT, (1,))
    stages = generate(pol, 1, 5, 3, 1)
    eta = build_eta_n_m(stages, 1, 1)
    for i, e in enumerate(eta):
        lo = Fraction((i * stages[1].a) % stages[1].q, stages[1].q)
        assert e == interval_set((lo, lo + Fraction(1, stages[1].q)))


def test_eta_elements_partition_circle():
    pol = relaxed(INDEPENDENT, (1, 1))
    stages = generate(pol, 1, 5, 3, 2)
    eta = build_eta_n_m(stages, 0, 2)
    union = CircularIntervalSet()
    for e in eta:
        assert union.intersection(e).is_empty()
        union = union.union(e)
    assert union == CircularIntervalSet.full()


def test_eta_n_m_rejects_bad_range():
    pol = relaxed(DEPENDENT, (1,))
    stages = generate(pol, 1, 5, 3, 1)
    with pytest.raises(ValueError):
        eta_element(stages, 1, 0, 0)
