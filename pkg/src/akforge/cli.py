"""Command-line front end.

Commands: gen, build-stage, verify, render-partition, report.
Configuration comes from a flat key=value file, overridden by flags
(flags win); the AKFORGE_SEED environment variable overrides the config
seed but not an explicit --seed flag.  All outputs are deterministic
given (config, seed).
"""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from .maps import build_run
from .partitions import build_Rn
from .render import render_decomposition
from .stages import (DEPENDENT, INDEPENDENT, ConstructionPolicy, Stage,
                     generate, limit_angles, torus_ergodicity_certificate,
                     verify_assumptions)
from .verify import VerifyConfig, run_verification

try:
    sys.set_int_max_str_digits(0)      # certified q_n can have ~10^6 digits
except (AttributeError, ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = DEPENDENT
    stages: int = 2
    epsilon: str = "1/10"
    certified: bool = False
    seed_fraction: str = "1/5"
    seed_b: int = 0
    c_list: str = "1"
    grid: int = 512
    samples: int = 1_000_000
    seed: int = 0xA11CE
    iterates: int = 10_000
    only: str = "all"
    out: str = "akforge-out"

    @classmethod
    def load(cls, path: Optional[str], args: argparse.Namespace) -> "RunConfig":
        cfg = cls()
        if path:
            for line in Path(path).read_text().splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, val = line.partition("=")
                key = key.strip().replace("-", "_")
                val = val.strip()
                if not hasattr(cfg, key):
                    raise SystemExit(f"unknown config key: {key}")
                cur = getattr(cfg, key)
                if isinstance(cur, bool):
                    setattr(cfg, key, val.lower() in ("1", "true", "yes"))
                elif isinstance(cur, int):
                    setattr(cfg, key, int(val))
                else:
                    setattr(cfg, key, val)
        env_seed = os.environ.get("AKFORGE_SEED")
        if env_seed is not None:
            cfg.seed = int(env_seed, 0)
        for f in fields(cls):
            flag = getattr(args, f.name, None)
            if flag is not None:
                setattr(cfg, f.name, flag)
        return cfg

    def dump(self) -> str:
        out = []
        for f in fields(self):
            out.append(f"{f.name}={getattr(self, f.name)}")
        return "\n".join(out) + "\n"

    def policy(self) -> ConstructionPolicy:
        cs = tuple(int(c) for c in str(self.c_list).split(",") if c.strip())
        return ConstructionPolicy(mode=self.mode,
                                  epsilon=Fraction(self.epsilon),
                                  certified=bool(self.certified),
                                  c_overrides=cs or (1,))

    def verify_config(self) -> VerifyConfig:
        return VerifyConfig(mc_samples=self.samples, grid=self.grid,
                            seed=self.seed, rotation_iterates=self.iterates,
                            only=self.only)


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1) + "\n")


def write_stage_file(stages: List[Stage], policy: ConstructionPolicy,
                     path: Path) -> None:
    doc = {
        "policy": policy.to_json(),
        "r_exponents": [st.r for st in stages],
        "stages": [st.to_json() for st in stages],
    }
    _json_dump(doc, path)


def read_stage_file(path: Path, strict: bool = False):
    doc = json.loads(path.read_text())
    pol = doc["policy"]
    policy = ConstructionPolicy(
        mode=pol["mode"], epsilon=Fraction(pol["epsilon"]),
        certified=bool(pol["certified"]),
        c_overrides=tuple(pol.get("c_overrides") or (1,)))
    rs = doc.get("r_exponents") or [None] * len(doc["stages"])
    stages = [Stage.from_json(rec, r=r, strict=strict)
              for rec, r in zip(doc["stages"], rs)]
    return stages, policy


def _int_brief(x: int) -> str:
    s = str(x) if x.bit_length() <= 200 else None
    return s if s is not None else f"~10^{(x.bit_length() * 301) // 1000} ({x.bit_length()} bits)"


def gen_summary(stages: List[Stage], policy: ConstructionPolicy) -> str:
    lines = [f"mode={policy.mode} certified={policy.certified} "
             f"epsilon={policy.epsilon} stages={len(stages)}"]
    for st in stages:
        lines.append(f"  n={st.n} p={_int_brief(st.p)} q={_int_brief(st.q)} "
                     f"a={_int_brief(st.a)} b={_int_brief(st.b)} s={st.s} "
                     f"c={_int_brief(st.c) if st.c is not None else '-'}")
    checks = verify_assumptions(stages, policy)
    lines.append(f"  assumption checks: "
                 f"{'all pass' if all(c.all_pass() for c in checks) else 'FAILED'}")
    la = limit_angles(stages, policy)
    lines.append(f"  alpha in [{la.alpha_lo.approx_float():.12f}, "
                 f"{la.alpha_hi.approx_float():.12f}]"
                 f"{' (certified tail)' if la.certified_tail else ' (uncertified tail)'}")
    lines.append(f"  beta  in [{la.beta_lo.approx_float():.12f}, "
                 f"{la.beta_hi.approx_float():.12f}]")
    if policy.mode == DEPENDENT:
        lines.append(f"  dependence certificate: beta = {stages[0].b} * alpha "
                     f"mod 1, exact")
    else:
        cert = torus_ergodicity_certificate(stages, policy)
        lines.append("  cyclic-approximation ratio table:")
        for row in cert.rows:
            lines.append(f"    n={row.n} g={row.g} "
                         f"ratio={row.ratio.approx_float():.6g} "
                         f"diam_bound={row.diam_bound.approx_float():.6g}")
        lines.append(f"    strictly decreasing: "
                     f"{cert.ratios_strictly_decreasing()}")
    return "\n".join(lines) + "\n"


def cmd_gen(cfg: RunConfig) -> int:
    if not cfg.seed_b:
        print("error: --seed-b is required for gen", file=sys.stderr)
        return 2
    try:
        frac = Fraction(cfg.seed_fraction)
        policy = cfg.policy()
        stages = generate(policy, frac.numerator, frac.denominator,
                          int(cfg.seed_b), int(cfg.stages))
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_stage_file(stages, policy, out / "stages.json")
    summary = gen_summary(stages, policy)
    (out / "summary.txt").write_text(summary)
    sys.stdout.write(summary)
    return 0


def cmd_build_stage(cfg: RunConfig, n: int, stage_path: Path,
                    expect_mode: Optional[str] = None) -> int:
    stages, policy = read_stage_file(stage_path, strict=True)
    if expect_mode in ("relaxed", "certified"):
        actual = "certified" if policy.certified else "relaxed"
        if actual != expect_mode:
            print(f"error: stage file is {actual}, expected {expect_mode}",
                  file=sys.stderr)
            return 2
    elif expect_mode and policy.mode != expect_mode:
        print(f"error: stage file is {policy.mode}, expected {expect_mode}",
              file=sys.stderr)
        return 2
    if not 0 <= n < len(stages) - 1:
        print(f"error: stage pair {n} out of range", file=sys.stderr)
        return 2
    run = build_run(stages[: n + 2])
    sb = run.builds[n]
    res = int(cfg.grid)
    xs = (np.arange(res) + 0.5) / res
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    img = sb.a.forward(pts)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"stage_{n}_map.bin"
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", res))
        fh.write(img.astype("<f8").tobytes())
    meta = {
        "n": n,
        "resolution": res,
        "w": sb.geometry.w,
        "eps1": f"{sb.geometry.eps1.numerator}/{sb.geometry.eps1.denominator}",
        "b_norm_used": sb.b_norm_used,
        "decomposition": sb.geometry.dec.to_json(),
    }
    _json_dump(meta, out / f"stage_{n}_meta.json")
    print(f"wrote {path} ({res}x{res} map dump) and stage_{n}_meta.json")
    return 0


def cmd_verify(cfg: RunConfig, stage_path: Path) -> int:
    try:
        stages, policy = read_stage_file(stage_path, strict=False)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: cannot read stage file: {exc}", file=sys.stderr)
        return 2
    vcfg = cfg.verify_config()
    reports = run_verification(stages, policy, vcfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        _json_dump(rep.to_json(), out / f"report_stage_{rep.stage}.json")
    fails = 0
    for rep in reports:
        for c in rep.checks:
            status = "PASS" if c.passed else "FAIL"
            if not c.passed:
                fails += 1
            val = (f"{c.value:.3e}" if isinstance(c.value, float) else "")
            print(f"stage {rep.stage:2d} [{status}] {c.name:36s} "
                  f"{c.anchor:36s} {val}")
    print(f"total checks: {sum(len(r.checks) for r in reports)}, "
          f"failures: {fails}")
    return min(fails, 125)


def cmd_render(cfg: RunConfig, n: int, stage_path: Path,
               svg_path: Optional[Path]) -> int:
    stages, _ = read_stage_file(stage_path, strict=True)
    if not 0 <= n < len(stages) - 1:
        print(f"error: stage pair {n} out of range", file=sys.stderr)
        return 2
    dec = build_Rn(stages[n], stages[n + 1])
    svg = render_decomposition(dec)
    out = svg_path or Path(cfg.out) / f"partition_{n}.svg"
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(svg)
    print(f"wrote {out}")
    return 0


def cmd_report(report_dir: Path) -> int:
    files = sorted(report_dir.glob("report_stage_*.json"))
    if not files:
        print(f"no reports found in {report_dir}", file=sys.stderr)
        return 2
    total = 0
    failed = 0
    merged = []
    for f in files:
        doc = json.loads(f.read_text())
        merged.append(doc)
        for c in doc["checks"]:
            total += 1
            if not c["pass"]:
                failed += 1
                print(f"FAIL stage {doc['stage']}: {c['name']} ({c['anchor']})")
    _json_dump({"reports": merged, "total_checks": total,
                "failures": failed}, report_dir / "report_summary.json")
    print(f"{len(files)} stage reports, {total} checks, {failed} failures")
    return min(failed, 125)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="akforge")
    p.add_argument("--config", help="flat key=value config file")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--iterates", type=int)

    g = sub.add_parser("gen", help="generate stage sequences")
    g.add_argument("--mode", choices=[DEPENDENT, INDEPENDENT])
    g.add_argument("--stages", type=int, help="number of recurrence steps")
    g.add_argument("--epsilon", help="target neighborhood radius P/Q")
    g.add_argument("--certified", action="store_const", const=True,
                   default=None)
    g.add_argument("--seed-fraction", dest="seed_fraction", help="p0/q0")
    g.add_argument("--seed-b", dest="seed_b", type=int, help="b0")
    g.add_argument("--c-list", dest="c_list",
                   help="relaxed-mode c values, comma separated")
    add_common(g)

    b = sub.add_parser("build-stage", help="build stage maps, dump grid")
    b.add_argument("--stage-file", default=None)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--mode",
                   choices=[DEPENDENT, INDEPENDENT, "relaxed", "certified"],
                   help="expected stage-file mode (angle recurrence or "
                        "relaxed/certified); must match the file")
    add_common(b)

    v = sub.add_parser("verify", help="run the verification harness")
    v.add_argument("--stage-file", default=None)
    v.add_argument("--only", choices=["all", "exact", "sampled"])
    add_common(v)

    r = sub.add_parser("render-partition", help="render the slice figure")
    r.add_argument("--stage-file", default=None)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--svg", default=None)
    add_common(r)

    rep = sub.add_parser("report", help="merge verification reports")
    rep.add_argument("--dir", required=True)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    cfg = RunConfig.load(args.config, args)
    if args.command == "gen":
        return cmd_gen(cfg)
    stage_file = getattr(args, "stage_file", None)
    default_stage_file = Path(cfg.out) / "stages.json"
    if args.command == "build-stage":
        return cmd_build_stage(cfg, args.n,
                               Path(stage_file or default_stage_file),
                               expect_mode=getattr(args, "mode", None))
    if args.command == "verify":
        return cmd_verify(cfg, Path(stage_file or default_stage_file))
    if args.command == "render-partition":
        svg = Path(args.svg) if args.svg else None
        return cmd_render(cfg, args.n, Path(stage_file or default_stage_file),
                          svg)
    if args.command == "report":
        return cmd_report(Path(args.dir))
    return 2


if __name__ == "__main__":
    sys.exit(main())
