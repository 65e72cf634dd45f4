"""The cyclic-approximation (Katok-Stepin style) ergodicity certificate.

In independent mode the pair of limit angles drives a translation of the
2-torus; its ergodicity follows when the translation is approximated by
cyclic permutations of partitions faster than the partition mesh.  The
certificate is exact integer arithmetic: g_n = gcd(p_n, q_n) stays small
because p_{n+1} - (q_{n+1}/q_n) p_n = 1, and the moved-measure ratio
r_n = (q_n/g_n) * sum_k 4 b_{k+1}/q_{k+1} collapses super-exponentially
on certified runs.
"""

from fractions import Fraction

from akforge import ConstructionPolicy, generate, torus_ergodicity_certificate

pol = ConstructionPolicy(mode="independent", epsilon=Fraction(1, 4))
stages = generate(pol, 1, 2, 1, 3)

print("certified independent run, q sizes:",
      [f"{st.q.bit_length()} bits" for st in stages])

cert = torus_ergodicity_certificate(stages, pol)
print(f"{'n':>2} {'g_n':>4} {'ratio r_n':>12} {'diam bound':>12} "
      f"{'identity':>9} {'g|q_prev':>9}")
for row in cert.rows:
    print(f"{row.n:>2} {row.g:>4} {row.ratio.approx_float():>12.3e} "
          f"{row.diam_bound.approx_float():>12.3e} "
          f"{str(row.identity_ok):>9} {str(row.g_divides_prev_q):>9}")

print("ratios strictly decreasing:", cert.ratios_strictly_decreasing())
print("final ratio below 1/2:     ", cert.final_ratio_below(Fraction(1, 2)))
print("certified tail bound:      ", cert.tail.approx_float())
