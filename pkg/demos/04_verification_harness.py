"""Running the verification harness in-process.

Every finite-stage claim becomes a recorded check: exact integer/rational
identities (assumption inequalities, diagram commutation, fundamental
domains) and sampled estimates (measure preservation, symmetric-difference
bounds, rotation numbers), each with its seed and tolerance.
"""

from akforge import ConstructionPolicy, generate
from akforge.verify import VerifyConfig, run_verification, total_failures

pol = ConstructionPolicy(mode="dependent", certified=False, c_overrides=(1, 2))
stages = generate(pol, 1, 5, 3, 2)

# small sampling budget: this demo favors speed over tight estimates
cfg = VerifyConfig(mc_samples=40_000, grid=96, rotation_iterates=500,
                   norm_grid=12)
reports = run_verification(stages, pol, cfg)

for rep in reports:
    print(f"stage {rep.stage}: {len(rep.checks)} checks, "
          f"{len(rep.failed())} failures")
    for c in rep.checks:
        if c.kind == "sampled" and isinstance(c.value, float):
            print(f"   [{'PASS' if c.passed else 'FAIL'}] {c.name:32s} "
                  f"value={c.value:.3e} bound={c.bound}")
print("total failures:", total_failures(reports))

# a tampered stage is reported, not raised
from akforge import Stage  # noqa: E402
from akforge.verify import run_verification as rv  # noqa: E402

bad = Stage.unchecked(n=1, p=stages[1].p, q=stages[1].q, a=stages[1].a + 1,
                      b=stages[1].b, s=stages[1].s)
bad_reports = rv([stages[0], bad], pol, VerifyConfig(only="exact"))
print("\ntampered a_1: failing checks =",
      [c.name for r in bad_reports for c in r.checks if not c.passed])
