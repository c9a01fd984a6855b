import json
import hashlib

import pytest

from relhyp.cli import OUTPUT_ENV, load_config, main, preset_names, run_pipeline
from relhyp.config import int_list, parse_config
from relhyp.errors import ConfigError

MINIMAL = """
[job main]
group = free(2)
radii = 2,3
"""

F2_SCAN = """
[run]
seed = 3

[job f2]
group = free(2)
radii = 2,3,4,5
delta.samples = 20000
"""

Z2_BCP = """
[job z2]
group = free_abelian(2)
peripheral.A = cyclic(a)
space = coned
radii = 2,3,4
delta = off
bcp = on
"""

CUSPED_BOUNDARY = """
[job cusp]
group = free(2)
peripheral.c = [a,b]
space = cusped
radii = 4
delta = off
boundary = on
"""


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    (job,) = cfg.jobs
    assert job.radii == (2, 3) and job.depth is None
    assert job.delta == "four-point" and job.delta_cap == 120
    assert job.boundary_epsilon == pytest.approx(0.6931471805599453)
    assert cfg.seed == 0 and cfg.vertex_cap > 0


def test_peripheral_forms():
    cfg = parse_config(MINIMAL + "peripheral.commutator = cyclic([a,b])\nspace = coned\n")
    (p,) = cfg.jobs[0].peripherals
    assert (p.label, p.kind, p.arg) == ("commutator", "cyclic", "[a,b]")
    fam = cfg.jobs[0].family()
    assert len(list(fam)) == 1
    cfg = parse_config(MINIMAL.replace("free(2)", "direct(free(1),free(1))") + "peripheral.P = factor(0)\n"
                       "peripheral.G = whole\nspace = cusped\n")
    assert [p.kind for p in cfg.jobs[0].peripherals] == ["factor", "whole"]


@pytest.mark.parametrize("text,key", [
    (MINIMAL.replace("2,3", "3,2"), "radii"),
    (MINIMAL + "colour = blue\n", "colour"),
    (MINIMAL + "peripheral.c = cyclic(x)\nspace = coned\n", "peripheral.c"),
    (MINIMAL + "space = coned\n", "space"),
    ("[job a]\ngroup = free(2)\nradii = 2\n[job a]\n", None),
    ("[oops]\nseed = 1\n" + MINIMAL, "oops"),
])
def test_rejections(text, key):
    with pytest.raises(ConfigError) as exc:
        cfg = parse_config(text)
        for job in cfg.jobs:
            job.family()
    if key is not None:
        assert key in str(exc.value)


def test_syntax_error_has_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[job a]\ngroup = free(2)\nthis is not a pair\n")
    assert exc.value.line == 3
    with pytest.raises(ConfigError):
        int_list("1,x", "radii")


def test_f2_delta_manifest(tmp_path):
    res = run_pipeline(parse_config(F2_SCAN), tmp_path)
    assert res.ok
    scan = res.results["f2"]["delta"]
    assert len(scan.reports) == 4 and all(r.four_point_x2 == 0 for r in scan.reports)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config"]["seed"] == 3 and man["status"] == "ok"
    for f in man["files"]:
        data = (tmp_path / f["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == f["sha256"] and len(data) == f["bytes"]


def test_z2_bcp_witnesses(tmp_path):
    res = run_pipeline(parse_config(Z2_BCP), tmp_path)
    doc = json.loads((tmp_path / "z2" / "bcp_lambda1.json").read_text())
    assert doc["verdict"] == "violation-witnessed"
    assert all(r["case1"]["witness"] is not None for r in doc["reports"])
    assert res.ok


def test_cusped_boundary_files(tmp_path):
    run_pipeline(parse_config(CUSPED_BOUNDARY), tmp_path)
    names = sorted(p.name for p in (tmp_path / "cusp").iterdir())
    assert "boundary.csv" in names
    assert sum(n.endswith(".svg") for n in names) == 2
    summary = json.loads((tmp_path / "cusp" / "boundary_clusters.json").read_text())
    assert summary["circle"]["is_cycle"]


def test_reruns_are_byte_identical(tmp_path):
    cfg = load_config("criterion8_determinism")
    a = run_pipeline(cfg, tmp_path / "a")
    b = run_pipeline(cfg, tmp_path / "b")
    assert a.ok and b.ok
    assert a.manifest["files"] == b.manifest["files"]
    for f in a.manifest["files"]:
        assert (tmp_path / "a" / f["path"]).read_bytes() == (tmp_path / "b" / f["path"]).read_bytes()


def test_failure_keeps_partial_outputs(tmp_path):
    text = MINIMAL.replace("radii = 2,3", "radii = 2,3\nexport = json\nboundary = on\nboundary.radius = 9")
    res = run_pipeline(parse_config(text), tmp_path)
    assert not res.ok
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["failed_stage"] == "main.boundary" and man["partial"]
    assert (tmp_path / "main" / "graph_R2.json").exists()


def test_presets_all_parse():
    names = preset_names()
    for i in range(1, 9):
        assert any(n.startswith(f"criterion{i}_") for n in names)
    for n in names:
        load_config(n)


def test_cli_commands(capsys, tmp_path):
    assert main(["ball", "--group", "free(2)", "--radius", "1", "--export", "csv"]) == 0
    assert capsys.readouterr().out.count("\n") == 4
    assert main(["cone", "--group", "free_abelian(2)", "--peripheral", "A=cyclic(a)", "--radius", "2",
                 "--export", "dot"]) == 0
    assert "CONE:A" in capsys.readouterr().out
    out = tmp_path / "d.json"
    assert main(["delta", "--group", "free(2)", "--radii", "2,3,4", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["verdict"] == "bounded"
    assert main(["bcp", "--group", "free_abelian(2)", "--peripheral", "A=a", "--radii", "2,3"]) == 0
    assert '"case1"' in capsys.readouterr().out
    assert main(["fineness", "--group", "free_abelian(2)", "--peripheral", "A=a", "--radii", "2,3",
                 "--n", "4"]) == 0
    assert main(["boundary", "--group", "free(2)", "--radius", "2"]) == 0
    assert capsys.readouterr().out.count("\n") >= 12
    assert main(["cusp", "--group", "free(2)", "--peripheral", "c=[a,b]", "--radius", "2"]) == 0
    assert main(["presets"]) == 0


def test_exit_codes(capsys):
    assert main(["delta", "--group", "free(2)", "--radii", "3,2"]) == 2
    assert main(["ball", "--group", "free(9", "--radius", "2"]) == 2
    assert main(["ball", "--group", "free(2)", "--radius", "6", "--vertex-cap", "50"]) == 3
    assert main(["delta", "--group", "free(2)", "--radii", "4", "--policy", "exhaustive"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["nope"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_run_and_env_override(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "mini.cfg"
    cfg.write_text(MINIMAL)
    target = tmp_path / "env-out"
    monkeypatch.setenv(OUTPUT_ENV, str(target))
    assert main(["run", str(cfg)]) == 0
    assert (target / "manifest.json").exists()
    assert "manifest:" in capsys.readouterr().out
    explicit = tmp_path / "explicit"
    assert main(["run", str(cfg), "--output", str(explicit)]) == 0
    assert (explicit / "manifest.json").exists()
    assert main(["run", "no-such-preset"]) == 2
