"""Integer stage sequences: the arithmetic skeleton.

Every construction stage is a tuple (p, q, a, b, s) with a*b - s*q = 1.
Two recurrences extend a seed stage: the dependent one keeps b fixed (the
two limit angles then satisfy beta = b0 * alpha mod 1 exactly), the
independent one grows b by q each step.  Run this file to watch both.
"""

from fractions import Fraction

from akforge import (ConstructionPolicy, bezout_init, generate,
                     limit_angles, verify_assumptions)

# -- seeding ------------------------------------------------------------
# The seed fraction 1/5 approximates the target angle; b0 = 3 is the
# multiplier tying the second angle to the first.  Bezout gives the
# smallest positive a0 with a0*b0 = 1 mod q0 (and nonzero cofactor).
st0 = bezout_init(3, 5, 1)
print("seed stage:", st0)
assert st0.a * st0.b - st0.s * st0.q == 1

# -- dependent mode, relaxed sizes ---------------------------------------
# Relaxed runs use small auxiliary integers c so that the denominators
# stay small enough to build and plot the conjugacy maps later.
pol = ConstructionPolicy(mode="dependent", certified=False,
                         c_overrides=(1, 2, 3))
stages = generate(pol, 1, 5, 3, 3)
for st in stages:
    print(f"  n={st.n}: p/q = {st.p}/{st.q}   a={st.a} b={st.b} s={st.s}")

checks = verify_assumptions(stages, pol)
print("assumption checks pass:", all(c.all_pass() for c in checks))

la = limit_angles(stages, pol)
print(f"alpha enclosure: [{la.alpha_lo.as_fraction()}, "
      f"{la.alpha_hi.as_fraction()}] (width {la.alpha_width().as_fraction()})")
print(f"beta enclosure:  [{la.beta_lo.as_fraction()}, "
      f"{la.beta_hi.as_fraction()}]  = 3 * alpha exactly")

# -- certified mode -------------------------------------------------------
# Certified runs choose c_n >= (b_{n+1} q_n)^R(n), which makes the
# convergence inequality of every pair checkable; q then explodes.
pol_cert = ConstructionPolicy(mode="dependent", epsilon=Fraction(1, 4))
cert = generate(pol_cert, 1, 5, 3, 2)
print("\ncertified q growth:", [f"{st.q.bit_length()} bits" for st in cert])
cert_checks = verify_assumptions(cert, pol_cert)
print("certified convergence inequality holds:",
      all(c.convergence for c in cert_checks))

# -- independent mode -------------------------------------------------------
pol_ind = ConstructionPolicy(mode="independent", certified=False,
                             c_overrides=(1, 1))
ind = generate(pol_ind, 1, 5, 3, 2)
print("\nindependent mode: b grows by q each step:",
      [(st.b, st.q) for st in ind])
for st, nxt in zip(ind, ind[1:]):
    assert nxt.b - st.b == st.q
