import csv
import json

import numpy as np
import pytest

from pdmeshfree.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main
from pdmeshfree.errors import ValidationError
from pdmeshfree.pointcloud import DIRICHLET, PointCloud, generate_uniform_grid, save_pointcloud
from pdmeshfree.runner import (RunConfig, config_matrix, load_run_config, read_config, read_report,
                               run, sweep, write_report)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_default_horizons(self):
        assert RunConfig(order=2).horizon == 3.5
        assert RunConfig(grid="polar", benchmark="plate_hole", order=2).horizon == 2.75
        assert RunConfig(grid="file:a.csv", benchmark="plate_hole", order=1).horizon == 2.25

    @pytest.mark.parametrize("kw", [
        {"benchmark": "beam"}, {"formulation": "fem"}, {"order": 4}, {"grid": "hex"},
        {"benchmark": "manufactured", "grid": "polar"}, {"benchmark": "plate_hole"},
        {"delta": 1.5}, {"delta": 2.0, "order": 2}, {"nu": 0.5}, {"levels": 0}, {"grid": "file:"},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            RunConfig(**kw).validate()

    def test_layering(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[run]\nbenchmark = patch_test\norder = 1\n[material]\nnu = 0.25\n")
        raw = read_config(ini, {"order": "3"}, environ={"PDMESHFREE_LEVELS": "2", "HOME": "/"})
        cfg = load_run_config(raw)
        assert (cfg.benchmark, cfg.order, cfg.levels, cfg.nu) == ("patch_test", 3, 2, 0.25)

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="colour"):
            read_config(None, {"colour": "red"}, environ={})

    def test_matrix(self):
        cfgs = config_matrix({"formulation": "rk, ba_rk", "order": "1,2", "delta": "3.5"})
        assert len(cfgs) == 4
        assert {(c.formulation, c.order) for c in cfgs} == {("rk", 1), ("rk", 2),
                                                           ("ba_rk", 1), ("ba_rk", 2)}
        with pytest.raises(ValidationError):
            load_run_config({"order": "1,2"})

    def test_file_grid_is_not_split(self):
        (cfg,) = config_matrix({"grid": "file:a.csv,b.csv", "benchmark": "plate_hole"})
        assert cfg.files == ["a.csv", "b.csv"]


class TestRunner:
    def test_patch_run(self):
        res = run(RunConfig(benchmark="patch_test", formulation="ba_gmls", order=3, levels=2))
        assert [r.level for r in res.report.rows] == [0, 1]
        assert max(r.rms for r in res.report.rows) <= 1e-10

    def test_single_cell_sweep_equals_run(self, tmp_path):
        cfg = RunConfig(benchmark="patch_test", formulation="rk", order=1, levels=2)
        rep, _ = sweep([cfg])
        write_report(tmp_path / "a.csv", rep)
        write_report(tmp_path / "b.csv", run(cfg).report)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_empty_sweep(self):
        with pytest.raises(ValidationError):
            sweep([])

    def test_sweep_keeps_going(self):
        good = RunConfig(benchmark="patch_test", formulation="rk", order=1, levels=1)
        bad = RunConfig(benchmark="patch_test", formulation="rk", order=2, delta=1.5, levels=1)
        rep, results = sweep([bad, good])
        assert len(results) == 1
        assert rep.rows[0].status.startswith("error: ValidationError")
        assert rep.rows[1].status == "ok"

    def test_report_roundtrip(self, tmp_path):
        res = run(RunConfig(benchmark="patch_test", levels=2))
        write_report(tmp_path / "r.csv", res.report)
        back = read_report(tmp_path / "r.csv")
        assert [(r.level, r.h, r.rms) for r in back.rows] == \
            [(r.level, r.h, r.rms) for r in res.report.rows]

    def test_file_grid(self, tmp_path):
        g = generate_uniform_grid((-1, -1), (1, 1), 0.2, 0.7)
        save_pointcloud(g, tmp_path / "g.csv")
        cfg = RunConfig(benchmark="patch_test", grid=f"file:{tmp_path / 'g.csv'}", order=1)
        res = run(cfg)
        assert len(res.report.rows) == 1
        assert res.report.rows[0].rms <= 1e-10


class TestCli:
    def test_run_writes_outputs(self, tmp_path, capsys):
        out = tmp_path / "o"
        code = main(["run", "--out", str(out), "--benchmark", "patch_test", "--levels", "2",
                     "--formulation", "ba_rk", "--order", "2", "--dump-fields",
                     "--dump-weights", "--plot"])
        assert code == EXIT_OK
        rows = read_rows(out / "report.csv")
        assert list(rows[0])[:7] == ["case", "formulation", "order", "level", "h", "rms", "rate"]
        assert len(rows) == 2
        fields = sorted(out.glob("fields_*.csv"))
        assert len(fields) == 2
        assert list(read_rows(fields[0])[0]) == ["id", "x", "y", "u1", "u2", "e1", "e2"]
        w = read_rows(sorted(out.glob("weights_*.csv"))[0])
        assert {r["kind"] for r in w} == {"kinematic", "force"}
        assert (out / "convergence.png").stat().st_size > 0
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag[0]["levels"][0]["residual"] <= 1e-8
        assert "patch_test ba_rk n=2 L1" in capsys.readouterr().out

    def test_deterministic_bytes(self, tmp_path):
        args = ["run", "--benchmark", "manufactured", "--grid", "perturbed", "--levels", "2",
                "--seed", "4", "--formulation", "ba_gmls"]
        assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
        assert (tmp_path / "a/report.csv").read_bytes() == (tmp_path / "b/report.csv").read_bytes()

    def test_validation_exit_code(self, tmp_path, capsys):
        code = main(["run", "--out", str(tmp_path), "--order", "2", "--delta", "1.5"])
        assert code == EXIT_INVALID
        assert "too small" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) \
            == EXIT_INVALID

    def test_numerical_failure_exit_code(self, tmp_path):
        # a single row of bulk nodes cannot support a 2D gradient
        x = np.linspace(-1, 1, 21)
        X = np.c_[x, np.zeros_like(x)]
        role = np.where(np.abs(x) > 0.8, DIRICHLET, 0)
        save_pointcloud(PointCloud(X, np.full(21, 0.01), role), tmp_path / "line.csv")
        code = main(["run", "--out", str(tmp_path / "o"), "--benchmark", "patch_test",
                     "--grid", f"file:{tmp_path / 'line.csv'}", "--order", "1"])
        assert code == EXIT_NUMERICAL

    def test_sweep_from_config(self, tmp_path, monkeypatch):
        ini = tmp_path / "s.ini"
        ini.write_text("[run]\nbenchmark = patch_test\nlevels = 1\n"
                       "[sweep]\nformulation = rk, gmls\norder = 1, 2\n")
        monkeypatch.setenv("PDMESHFREE_SEED", "9")
        assert main(["sweep", "--config", str(ini), "--out", str(tmp_path / "o")]) == EXIT_OK
        rows = read_rows(tmp_path / "o/report.csv")
        assert len(rows) == 4
        assert {r["seed"] for r in rows} == {"9"}
        assert all(r["status"] == "ok" for r in rows)
