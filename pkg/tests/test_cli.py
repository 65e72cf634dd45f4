import json
import struct
from pathlib import Path

from akforge.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def gen_worked(tmp_path, **kw):
    args = ["gen", "--mode", "dependent", "--stages", "2",
            "--seed-fraction", "1/5", "--seed-b", "3", "--c-list", "1,2",
            "--out", tmp_path / "run"]
    for k, v in kw.items():
        args += [k, v]
    assert run_cli(*args) == 0
    return tmp_path / "run"


def test_gen_worked_example(tmp_path, capsys):
    out = gen_worked(tmp_path)
    doc = json.loads((out / "stages.json").read_text())
    qs = [s["q"] for s in doc["stages"]]
    ps = [s["p"] for s in doc["stages"]]
    assert qs == ["5", "20", "140"]
    assert ps == ["1", "5", "36"]
    text = capsys.readouterr().out
    assert "beta = 3 * alpha" in text


def test_gen_independent_worked(tmp_path):
    assert run_cli("gen", "--mode", "independent", "--stages", "1",
                   "--seed-fraction", "1/5", "--seed-b", "3",
                   "--c-list", "1", "--out", tmp_path / "r") == 0
    doc = json.loads((tmp_path / "r" / "stages.json").read_text())
    assert doc["stages"][1]["q"] == "55"


def test_gen_missing_seed_b_is_usage_error(tmp_path, capsys):
    rc = run_cli("gen", "--mode", "dependent", "--stages", "1",
                 "--seed-fraction", "1/5", "--out", tmp_path / "r")
    assert rc == 2
    assert "seed-b" in capsys.readouterr().err


def test_gen_rejects_bad_seed(tmp_path, capsys):
    rc = run_cli("gen", "--mode", "dependent", "--stages", "1",
                 "--seed-fraction", "1/6", "--seed-b", "3",
                 "--out", tmp_path / "r")
    assert rc == 2
    assert "gcd" in capsys.readouterr().err


def test_gen_deterministic(tmp_path):
    a = gen_worked(tmp_path / "a")
    b = gen_worked(tmp_path / "b")
    assert (a / "stages.json").read_bytes() == (b / "stages.json").read_bytes()
    assert (a / "summary.txt").read_bytes() == (b / "summary.txt").read_bytes()


def test_render_golden(tmp_path):
    # the figure-example pair (q, q', a', b') = (2, 20, 7, 3)
    assert run_cli("gen", "--mode", "dependent", "--stages", "1",
                   "--seed-fraction", "1/2", "--seed-b", "3",
                   "--c-list", "3", "--out", tmp_path / "r") == 0
    svg_path = tmp_path / "fig.svg"
    assert run_cli("render-partition", "--n", "0",
                   "--stage-file", tmp_path / "r" / "stages.json",
                   "--svg", svg_path, "--out", tmp_path / "r") == 0
    svg = svg_path.read_text()
    golden = Path(__file__).parent / "data" / "figure_example.svg"
    assert svg == golden.read_text()
    # three shaded components with the figure's widths 4:3:3 (f values)
    assert svg.count("fill-opacity") == 3
    for lab in ("l=0 k=0 r=0 f=4", "l=2 k=1 r=4 f=3", "l=1 k=0 r=7 f=3"):
        assert lab in svg


def test_render_rejects_bad_n(tmp_path, capsys):
    out = gen_worked(tmp_path)
    rc = run_cli("render-partition", "--n", "5",
                 "--stage-file", out / "stages.json", "--out", out)
    assert rc == 2


def test_verify_healthy_run_exit_zero(tmp_path):
    out = gen_worked(tmp_path)
    rc = run_cli("verify", "--stage-file", out / "stages.json",
                 "--out", out / "rep", "--samples", "20000",
                 "--grid", "48", "--iterates", "200")
    assert rc == 0
    reports = sorted((out / "rep").glob("report_stage_*.json"))
    assert len(reports) == 3


def test_verify_only_exact_fast(tmp_path):
    import time
    out = gen_worked(tmp_path)
    t0 = time.time()
    rc = run_cli("verify", "--stage-file", out / "stages.json",
                 "--out", out / "rep", "--only", "exact")
    assert rc == 0
    assert time.time() - t0 < 1.0


def test_verify_tampered_exit_nonzero(tmp_path, capsys):
    out = gen_worked(tmp_path)
    doc = json.loads((out / "stages.json").read_text())
    doc["stages"][1]["a"] = str(int(doc["stages"][1]["a"]) + 1)
    (out / "stages.json").write_text(json.dumps(doc))
    rc = run_cli("verify", "--stage-file", out / "stages.json",
                 "--out", out / "rep", "--only", "exact")
    assert rc >= 1
    text = capsys.readouterr().out
    assert "FAIL" in text and "isomorphism" in text


def test_verify_deterministic(tmp_path):
    out = gen_worked(tmp_path)
    for d in ("r1", "r2"):
        rc = run_cli("verify", "--stage-file", out / "stages.json",
                     "--out", out / d, "--samples", "5000",
                     "--grid", "32", "--iterates", "100")
        assert rc == 0
    for f1 in sorted((out / "r1").glob("*.json")):
        f2 = out / "r2" / f1.name
        assert f1.read_bytes() == f2.read_bytes()


def test_report_command(tmp_path, capsys):
    out = gen_worked(tmp_path)
    run_cli("verify", "--stage-file", out / "stages.json",
            "--out", out / "rep", "--only", "exact")
    rc = run_cli("report", "--dir", out / "rep")
    assert rc == 0
    summary = json.loads((out / "rep" / "report_summary.json").read_text())
    assert summary["failures"] == 0
    assert summary["total_checks"] > 10


def test_build_stage_dump(tmp_path):
    out = gen_worked(tmp_path)
    rc = run_cli("build-stage", "--n", "0",
                 "--stage-file", out / "stages.json",
                 "--out", out, "--grid", "16", "--mode", "relaxed")
    assert rc == 0
    assert run_cli("build-stage", "--n", "0",
                   "--stage-file", out / "stages.json",
                   "--out", out, "--grid", "8", "--mode", "certified") == 2
    blob = (out / "stage_0_map.bin").read_bytes()
    (res,) = struct.unpack("<I", blob[:4])
    assert res == 16
    assert len(blob) == 4 + 16 * 16 * 2 * 8
    meta = json.loads((out / "stage_0_meta.json").read_text())
    assert meta["decomposition"]["b_next"] == "3"


def test_config_file_and_env_seed(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mode=dependent\nstages=1\nseed_fraction=1/5\n"
                   "seed_b=3\nc_list=1\nseed=7\nout=" + str(tmp_path / "o") + "\n")
    assert run_cli("--config", cfg, "gen") == 0
    doc = json.loads((tmp_path / "o" / "stages.json").read_text())
    assert doc["stages"][1]["q"] == "20"
    # env var overrides config seed; flag wins over env
    monkeypatch.setenv("AKFORGE_SEED", "12345")
    from akforge.cli import RunConfig, make_parser
    args = make_parser().parse_args(["--config", str(cfg), "gen"])
    rc = RunConfig.load(str(cfg), args)
    assert rc.seed == 12345
    args = make_parser().parse_args(["--config", str(cfg), "gen",
                                     "--seed", "99"])
    rc = RunConfig.load(str(cfg), args)
    assert rc.seed == 99


def test_verify_certified_skips_sampled(tmp_path, capsys):
    assert run_cli("gen", "--mode", "dependent", "--stages", "2",
                   "--certified", "--epsilon", "1/4",
                   "--seed-fraction", "1/5", "--seed-b", "3",
                   "--out", tmp_path / "c") == 0
    rc = run_cli("verify", "--stage-file", tmp_path / "c" / "stages.json",
                 "--out", tmp_path / "c" / "rep")
    assert rc == 0
    assert "sampled-checks" in capsys.readouterr().out


def test_verify_corrupt_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text('{"nope"')
    rc = run_cli("verify", "--stage-file", bad, "--out", tmp_path / "rep")
    assert rc == 2
    assert "cannot read stage file" in capsys.readouterr().err


def test_config_roundtrip(tmp_path):
    from akforge.cli import RunConfig, make_parser
    cfg = RunConfig(mode="independent", stages=3, epsilon="1/7",
                    certified=True, seed=42, out=str(tmp_path))
    path = tmp_path / "c.cfg"
    path.write_text(cfg.dump())
    args = make_parser().parse_args(["gen"])
    loaded = RunConfig.load(str(path), args)
    assert loaded == cfg
