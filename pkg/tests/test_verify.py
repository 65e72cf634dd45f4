import numpy as np
import pytest
from fractions import Fraction

from akforge.maps import build_run
from akforge.stages import (DEPENDENT, INDEPENDENT, ConstructionPolicy,
                            Stage, generate)
from akforge.verify import (VerifyConfig, arithmetic_checks,
                            batched_rotation_estimates,
                            component_permutation_check,
                            conjugacy_oracle_check, diagram_finite_check,
                            estimate_rotation_number,
                            generation_diameter_check, rn_oracle_check,
                            rotation_checks, run_verification,
                            symdiff_convergence_check, total_failures)


def relaxed(mode, cs=(1,)):
    return ConstructionPolicy(mode=mode, certified=False, c_overrides=tuple(cs))


@pytest.fixture(scope="module")
def dep():
    pol = relaxed(DEPENDENT, (1, 2))
    stages = generate(pol, 1, 5, 3, 2)
    return stages, pol


@pytest.fixture(scope="module")
def dep_run(dep):
    return build_run(dep[0], norm_grid=12)


@pytest.fixture(scope="module")
def small_cfg():
    return VerifyConfig(mc_samples=30_000, grid=64, rotation_iterates=400,
                        norm_grid=12)


def test_full_verification_green(dep, dep_run, small_cfg):
    stages, pol = dep
    reports = run_verification(stages, pol, small_cfg, run=dep_run)
    assert total_failures(reports) == 0
    # json serializable and stable schema
    doc = reports[0].to_json()
    assert set(doc["checks"][0]) == {"name", "anchor", "kind", "value",
                                     "bound", "tol", "n_samples", "seed",
                                     "pass", "note"}


def test_exact_only_runs_fast(dep):
    stages, pol = dep
    cfg = VerifyConfig(only="exact")
    reports = run_verification(stages, pol, cfg)
    assert total_failures(reports) == 0
    assert all(c.kind == "exact" for r in reports for c in r.checks)


def test_tampered_stage_fails_named_checks(dep):
    stages, pol = dep
    st1 = stages[1]
    bad = Stage.unchecked(n=1, p=st1.p, q=st1.q, a=st1.a + 1, b=st1.b, s=st1.s)
    cfg = VerifyConfig(only="exact")
    reports = run_verification([stages[0], bad], pol, cfg)
    failed = {c.name for r in reports for c in r.checks if not c.passed}
    assert "isomorphism" in failed
    assert "primality" in failed


def test_symdiff_negative_control(small_cfg):
    # the bound 8/(2^n q_n) undercuts the maximal possible mismatch 2/q_n
    # only for n >= 3, so the negative control runs on a 5-stage build
    import akforge.verify as V
    pol = relaxed(DEPENDENT, (1,))
    stages = generate(pol, 1, 5, 3, 4)
    run = build_run(stages, norm_grid=8)
    sb = run.builds[3]
    good = symdiff_convergence_check(sb, small_cfg)
    assert good.passed
    g = sb.geometry
    wrong = g.dec.vertical_set().translate(Fraction(1, 7))
    exact_mismatch = float(
        g.dec.vertical_set().symmetric_difference(wrong).measure())
    rng = small_cfg.rng(99)
    pts = rng.random((small_cfg.mc_samples, 2))
    pre = sb.a1.inverse(sb.a2.inverse(pts))
    in_image = pre[:, 1] < 1.0 / g.q
    in_wrong = V._arc_membership(wrong, pts[:, 1])
    mismatch = float(np.mean(in_image != in_wrong))
    # estimator tracks the exact mismatch measure and exceeds the bound
    assert abs(mismatch - exact_mismatch) < 0.02
    assert mismatch > float(good.bound)


def test_component_permutation(dep_run, small_cfg):
    c = component_permutation_check(dep_run.builds[1], small_cfg)
    assert c.passed


def test_generation_diameter_vacuous_then_informational(dep_run, small_cfg):
    c0 = generation_diameter_check(dep_run, 0, small_cfg)
    assert c0.passed and "vacuous" in c0.note
    c1 = generation_diameter_check(dep_run, 1, small_cfg)
    assert c1.passed


def test_diagram_finite_worked_example(dep):
    stages, _ = dep
    checks = diagram_finite_check(stages, 0, 1, max_q=10_000)
    assert all(c.passed for c in checks)
    checks = diagram_finite_check(stages, 0, 2, max_q=10_000)
    assert all(c.passed for c in checks)
    with pytest.raises(ValueError):
        diagram_finite_check(stages, 1, 1, max_q=10_000)


def test_rn_oracle_check(dep):
    stages, _ = dep
    assert rn_oracle_check(stages[0], stages[1], 10_000).passed
    assert "skipped" in rn_oracle_check(stages[0], stages[1], 10).note


def test_rotation_rigid_exact():
    from akforge.maps import RotationMap
    t = RotationMap(Fraction(5, 20))
    est = estimate_rotation_number(t, (0.3, 0.1), 20, Fraction(5, 20))
    assert est.exact and est.rho_hat == 0.25
    est2 = estimate_rotation_number(t, (0.3, 0.1), 20)
    assert abs(est2.rho_hat - 0.25) < 1e-12
    assert est2.slope_min <= est2.rho_hat <= est2.slope_max


def test_rotation_boundary_and_interior(dep_run, small_cfg):
    for n in (0, 1):
        checks = rotation_checks(dep_run, n, small_cfg)
        assert all(c.passed for c in checks)


def test_batched_estimates_match_single(dep_run):
    t = dep_run.transforms[1]
    starts = np.array([[0.3, 0.4], [0.7, 0.9]])
    rhos = batched_rotation_estimates(t, starts, 50)
    singles = [estimate_rotation_number(t, s, 50).rho_hat for s in starts]
    assert np.allclose(rhos, singles, atol=1e-12)


def test_conjugacy_oracle(dep_run, small_cfg):
    checks = conjugacy_oracle_check(dep_run, 1, small_cfg, n_pts=200)
    assert all(c.passed for c in checks)
    assert all(float(c.value) <= 1e-8 for c in checks)


def test_arithmetic_checks_shape(dep):
    stages, pol = dep
    checks = arithmetic_checks(stages, pol, 0)
    names = [c.name for c in checks]
    assert names == ["primality", "monotonicity", "isomorphism",
                     "b-divisibility", "convergence"]


def test_independent_exact_certificates():
    pol = relaxed(INDEPENDENT, (1,))
    stages = generate(pol, 1, 5, 3, 1)
    cfg = VerifyConfig(only="exact")
    reports = run_verification(stages, pol, cfg)
    assert total_failures(reports) == 0
    names = {c.name for r in reports for c in r.checks}
    assert "ks-identity" in names and "ks-divisibility" in names
