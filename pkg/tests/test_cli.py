import json
import os

import numpy as np
import pytest

from tvmultibang.cli import main, validate_config, resolve_config, build_parser
from tvmultibang.fileio import read_field_csv, read_keyvalues


def run_cli(args):
    return main(args)


SMOKE = ["run", "--scenario", "example1", "--beta", "0", "--nx", "8",
         "--ny", "8"]


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    code = run_cli(SMOKE + ["--out", str(out)])
    return code, str(out)


class TestSmokeRun:
    def test_exit_status_zero(self, smoke_run):
        code, _ = smoke_run
        assert code == 0

    def test_outputs_exist(self, smoke_run):
        _, out = smoke_run
        for name in ("u.csv", "y.csv", "p.csv", "q.csv", "psi.csv",
                     "u_true.csv", "z.csv", "vertices.csv", "triangles.csv",
                     "log.txt", "summary.json", "meta.txt", "scenario.txt"):
            assert os.path.exists(os.path.join(out, name)), name

    def test_meta_consistency(self, smoke_run):
        _, out = smoke_run
        meta = read_keyvalues(os.path.join(out, "meta.txt"))
        assert meta["converged"] == "1"
        assert int(meta["n_vertices"]) == 81
        assert int(meta["n_triangles"]) == 128
        coords, u = read_field_csv(os.path.join(out, "u.csv"))
        assert len(u) == 81

    def test_objective_recompute_roundtrip(self, smoke_run):
        # re-reading u.csv and recomputing the objective reproduces meta.txt
        _, out = smoke_run
        meta = read_keyvalues(os.path.join(out, "meta.txt"))
        _, u = read_field_csv(os.path.join(out, "u.csv"))
        from tvmultibang.optsys import objective
        from tvmultibang.fileio import read_scenario
        sc = read_scenario(os.path.join(out, "scenario.txt"))
        val = objective(sc.problem(), u)
        want = float(meta["objective"])
        assert abs(val - want) <= 1e-12 * max(abs(want), 1e-30)

    def test_log_and_summary_agree(self, smoke_run):
        _, out = smoke_run
        with open(os.path.join(out, "summary.json")) as fh:
            summary = json.load(fh)
        assert all(rec["norm_final"] <= 1e-5 for rec in summary["outer"]
                   if rec["converged"])
        with open(os.path.join(out, "log.txt")) as fh:
            text = fh.read()
        assert "outer k=0" in text

    def test_determinism(self, smoke_run, tmp_path):
        _, out = smoke_run
        out2 = tmp_path / "again"
        assert run_cli(SMOKE + ["--out", str(out2)]) == 0
        for name in ("u.csv", "meta.txt", "log.txt"):
            with open(os.path.join(out, name)) as fh:
                a = fh.read()
            with open(out2 / name) as fh:
                b = fh.read()
            assert a == b, name


class TestValidate:
    def test_default_config_ok(self):
        parser = build_parser()
        cfg = resolve_config(parser.parse_args(["validate"]))
        assert validate_config(cfg) == []

    def test_bad_levels(self):
        parser = build_parser()
        cfg = resolve_config(parser.parse_args(
            ["validate", "--levels", "0.1,0.5"]))
        issues = validate_config(cfg)
        assert any("u_1 must be 0" in msg for msg in issues)

    def test_bad_nu(self):
        parser = build_parser()
        cfg = resolve_config(parser.parse_args(["validate", "--nu", "1.2"]))
        assert validate_config(cfg)

    def test_cli_exit_codes(self, capsys):
        assert run_cli(["validate", "--scenario", "example1"]) == 0
        assert run_cli(["validate", "--levels", "0.1,0.5"]) == 1
        out = capsys.readouterr().out
        assert "violation" in out


class TestConfigFile:
    def test_file_and_flag_override(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(
            "# settings\nscenario = example2\nnx = 12\nny = 12\n"
            "beta = 1e-5\nseed = 7\n")
        parser = build_parser()
        args = parser.parse_args(["validate", "--config", str(cfgfile),
                                  "--nx", "16"])
        cfg = resolve_config(args)
        assert cfg["scenario"] == "example2"
        assert cfg["nx"] == 16          # flag overrides file
        assert cfg["ny"] == 12
        assert cfg["seed"] == 7

    def test_unknown_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("bogus = 1\n")
        parser = build_parser()
        args = parser.parse_args(["validate", "--config", str(cfgfile)])
        with pytest.raises(ValueError):
            resolve_config(args)


class TestExportDesign:
    def test_writes_design_tables(self, tmp_path):
        out = tmp_path / "design"
        code = run_cli(["export-design", "--scenario", "example1",
                        "--nx", "16", "--ny", "16", "--out", str(out)])
        assert code == 0
        coords, u = read_field_csv(str(out / "u_true.csv"))
        assert len(u) == 17 * 17
        assert set(np.unique(u)) <= {0.0, 1.0}
        meta = read_keyvalues(str(out / "meta.txt"))
        assert int(meta["n_vertices"]) == 17 * 17


class TestBetaSweep:
    def test_sweep_directories(self, tmp_path):
        out = tmp_path / "sweep"
        code = run_cli(["run", "--scenario", "example1", "--nx", "6",
                        "--ny", "6", "--beta", "0,1e-6", "--out", str(out)])
        assert code == 0
        assert os.path.exists(out / "beta_0" / "meta.txt")
        assert os.path.exists(out / "beta_1e-06" / "meta.txt")


class TestVtkExport:
    def test_vtk_output(self, tmp_path):
        out = tmp_path / "vtk"
        code = run_cli(["run", "--scenario", "example1", "--nx", "4",
                        "--ny", "4", "--beta", "0", "--out", str(out),
                        "--vtk"])
        assert code == 0
        with open(out / "fields.vtk") as fh:
            head = fh.read(200)
        assert head.startswith("# vtk DataFile Version 3.0")
