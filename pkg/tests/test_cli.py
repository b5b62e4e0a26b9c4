import json

import pytest
import yaml

from polyharm import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_oracle_prints_dimension(capsys):
    code, out, _ = run(capsys, "oracle", "--D", "2", "--d", "2")
    assert code == 0 and out.strip() == "5"


def test_growth_csv(capsys):
    code, out, _ = run(capsys, "growth", "--group", "z1", "--nmax", "3")
    assert code == 0
    assert out.splitlines() == ["n,beta", "0,1", "1,3", "2,5", "3,7"]


def test_dim_guard_rail_exits_2(capsys):
    code, _, err = run(capsys, "dim", "--group", "z2", "--d", "9999", "--schedule", "8,12")
    assert code == 2 and "schedule insufficient" in err


@pytest.mark.parametrize("argv", [["growth", "--bogus"], ["frobnicate"], ["growth", "--group", "free2"],
                                  ["growth", "--nmax", "x"], ["dim", "--schedule", "8,4"],
                                  ["rvc", "--theta", "0"], ["growth", "--rel-tol", "-1"]])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_json_report_shape(capsys):
    code, out, _ = run(capsys, "rvc", "--group", "z1", "--nmax", "100", "--theta", "0.1", "--format", "json")
    rep = json.loads(out)
    assert code == 0
    assert rep["payload"]["R0"] == {"0.1": 1}
    assert rep["version"] and rep["config_hash"] and rep["determinism_hash"]
    assert cli.determinism_hash(rep) == rep["determinism_hash"]


def test_out_directory_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"group": "z2", "nmax": 10, "rough": {"D": 1}}))
    code, out, _ = run(capsys, "growth", "--config", str(cfg), "--nmax", "4", "--out", str(tmp_path / "o"))
    assert code == 0 and out == ""
    rep = json.loads((tmp_path / "o" / "growth.json").read_text())
    assert rep["payload"]["beta"] == [1, 5, 13, 25, 41]
    assert rep["config"]["nmax"] == 4 and rep["config"]["rough"]["D"] == 1
    assert (tmp_path / "o" / "growth.csv").read_text().startswith("n,beta\n")


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("group: z2\ncolour: blue\n")
    code, _, err = run(capsys, "growth", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_config_round_trip():
    cfg = cli.RunConfig.from_dict({"group": "heis", "thetas": [0.5, "2"], "rough": {"radii": [5, 6]}})
    again = cli.RunConfig.from_dict(json.loads(cli.canonical_json(cfg.to_dict())))
    assert again == cfg and again.hash() == cfg.hash()


def test_parse_polynomial():
    terms = cli.parse_polynomial("x1^2 - x2^2 + 3*x1*x2 - 2", 2)
    assert terms == [(1.0, (2, 0)), (-1.0, (0, 2)), (3.0, (1, 1)), (-2.0, (0, 0))]
    with pytest.raises(cli.UsageError):
        cli.parse_polynomial("x3", 2)
    with pytest.raises(cli.UsageError):
        cli.parse_polynomial("x1**", 2)


def test_dirichlet_command(capsys):
    code, out, _ = run(capsys, "dirichlet", "--group", "z2", "--radius", "6", "--boundary", "x1^2-x2^2",
                       "--tol", "1e-12", "--format", "json")
    rep = json.loads(out)
    assert code == 0
    assert rep["payload"]["max_deviation_from_boundary_polynomial"] < 1e-10
    assert rep["payload"]["max_principle"] is True


def test_harnack_and_inequalities_commands(capsys):
    assert run(capsys, "harnack", "--group", "heis", "--radius", "4")[0] == 0
    code, out, _ = run(capsys, "poincare", "--group", "z2", "--scales", "1,2")
    assert code == 0 and out.startswith("scale,constant,field_id")
    assert run(capsys, "meanvalue", "--group", "z2", "--scales", "2")[0] == 0


def test_rough_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "rough-check", "--window", "6", "--format", "json")
    assert code == 0 and json.loads(out)["payload"]["check"]["ok"]
    code, out, _ = run(capsys, "rough-extend", "--radius", "3", "--fields", "3", "--format", "json")
    assert code == 0 and json.loads(out)["payload"]["E"]["linear"]
    # a map that is not a rough isometry exits 1 with the violations listed
    (tmp_path / "g.csv").write_text("0,1\n1,2\n2,3\n")
    (tmp_path / "m.csv").write_text("0,0\n1,0\n2,0\n3,0\n")
    code, out, _ = run(capsys, "rough-check", "--graph", str(tmp_path / "g.csv"), "--map", str(tmp_path / "m.csv"),
                       "--group", "z1", "--a", "1", "--b", "0", "--format", "json")
    rep = json.loads(out)
    assert code == 1 and rep["payload"]["check"]["n_lower"] > 0


SMALL = {"group": "z2", "nmax": 12, "d": 1, "schedule": [3, 4], "scales": [1, 2],
         "rough": {"radii": [10, 11], "n_fields": 2, "window": 6}}


def test_pipeline_all_shape_and_determinism():
    cfg = cli.RunConfig.from_dict(SMALL)
    r1, _ = cli.execute("all", cfg)
    r2, _ = cli.execute("all", cli.RunConfig.from_dict(SMALL))
    assert set(r1["payload"]["stages"]) == {"growth", "rvc", "dim", "inequalities", "rough"}
    assert r1["payload"]["errors"] == {}
    assert r1["determinism_hash"] == r2["determinism_hash"]


def test_pipeline_heisenberg_no_oracle():
    cfg = cli.RunConfig.from_dict({**SMALL, "group": "heis", "rough": {"enabled": False}})
    rep, _ = cli.execute("all", cfg)
    assert rep["payload"]["stages"]["dim"]["oracle"] == "no oracle"
    assert "rough" not in rep["payload"]["stages"]


def test_pipeline_unwritable_cache_records_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({**SMALL, "cache_dir": str(blocker / "sub"), "rough": {"enabled": False}}))
    code, out, _ = run(capsys, "all", "--config", str(cfg), "--format", "json")
    rep = json.loads(out)
    assert code == 1
    assert "growth" in rep["payload"]["errors"] and "inequalities" in rep["payload"]["stages"]
