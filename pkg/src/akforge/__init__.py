"""akforge: stage-by-stage successive-conjugation constructions on the
closed annulus, with exact arithmetic certificates and a verification
harness for every finite-stage claim."""

from .circleset import CircularIntervalSet, extended_gcd, interval_set
from .stages import (ConstructionPolicy, ExactRatio, LimitAngles, Stage,
                     bezout_init, generate, limit_angles, step_dependent,
                     step_independent, torus_ergodicity_certificate,
                     verify_assumptions)
from .partitions import (PermutationIso, RnDecomposition, build_Kn, build_Rn,
                         build_Rn_raw, brute_force_Rn, build_eta_n_m,
                         verify_fundamental_domain, verify_Kn_diagram)
from .maps import (CellQuasiRotation, ComposedMap, IdentityMap, PlanarMap,
                   RotationMap, RunBuild, ShearMap, StackedQuasiRotation,
                   StageBuild, StageGeometry, build_run, compose_stage,
                   conjugate_rotation, conjugate_scale, estimate_norm,
                   quasi_rotation)
from .verify import (RotationEstimate, VerificationReport, VerifyConfig,
                     estimate_rotation_number, run_verification,
                     total_failures)

__version__ = "0.1.0"
