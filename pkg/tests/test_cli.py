import json
import subprocess
import sys

import numpy as np
import pytest

from aaipp.cli import (
    EXIT_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    RunSpec,
    RunSummary,
    UsageError,
    main,
    parse_args,
    read_csv,
    write_csv,
)
from aaipp.vtk import read_vtk


def floats(rows, key):
    return [float(r[key]) for r in rows]


class TestCavity:
    def test_small_data_run(self, tmp_path):
        out = tmp_path / "re1"
        assert main(["cavity", "--re", "1", "--n", "8", "--m", "0", "--out", str(out)]) == EXIT_OK
        rows = read_csv(out / "residuals.csv")
        assert list(rows[0]) == ["iter", "residual", "theta", "effective_depth"]
        res = floats(rows, "residual")
        assert all(b < a for a, b in zip(res, res[1:]))
        summary = RunSummary.from_json((out / "summary.json").read_text())
        assert summary.converged and summary.iterations == len(rows)
        assert summary.final_residual == res[-1]
        assert summary.spec["m"] == 0 and summary.spec["re"] == 1.0

        points, triangles, vectors, scalars = read_vtk(out / "fields.vtk")
        assert triangles.shape[1] == 3 and points.shape[1] == 2
        top = np.isclose(points[:, 1], 1.0)
        np.testing.assert_array_equal(vectors["velocity"][top], np.tile([1.0, 0.0], (top.sum(), 1)))
        assert "pressure" in scalars

    def test_not_converged(self, tmp_path):
        out = tmp_path / "nc"
        code = main(["cavity", "--re", "10000", "--n", "4", "--max-iters", "3", "--out", str(out)])
        assert code == EXIT_NOT_CONVERGED
        assert (out / "summary.json").exists() and (out / "residuals.csv").exists()
        assert not (out / "fields.vtk").exists()
        assert json.loads((out / "summary.json").read_text())["converged"] is False

    def test_full_depth_flag(self, tmp_path):
        assert main(["cavity", "--n", "4", "--m", "full", "--out", str(tmp_path)]) == EXIT_OK
        assert json.loads((tmp_path / "summary.json").read_text())["spec"]["m"] == "full"

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            main(["cavity", "--n", "4", "--re", "200", "--m", "3", "--out", str(tmp_path / name)])
        assert (tmp_path / "a" / "residuals.csv").read_text() == (tmp_path / "b" / "residuals.csv").read_text()


class TestErrors:
    @pytest.mark.parametrize(
        "argv",
        [["cavity", "--m", "deep"], ["cavity", "--re", "-1"], ["cavity", "--beta", "1.5"],
         ["cavity", "--n", "0"], ["bogus"], []],
    )
    def test_usage(self, argv, tmp_path, capsys):
        assert main(argv + (["--out", str(tmp_path)] if argv and argv[0] == "cavity" else [])) == EXIT_ERROR

    def test_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["cavity", "--n", "2", "--out", str(blocker / "sub")]) == EXIT_ERROR

    def test_missing_config(self, tmp_path):
        assert main(["cavity", "--config", str(tmp_path / "none.cfg")]) == EXIT_ERROR

    def test_spec_validation(self):
        with pytest.raises(UsageError):
            RunSpec(tol=0.0)
        assert RunSpec(m="FULL").m == "full"


class TestConfigFile:
    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nre = 250\nn=6\nmax-iters = 40\nbarycentric = false\nm = full\n")
        args = parse_args(["cavity", "--config", str(cfg), "--n", "3"])
        assert args.re == 250.0 and args.n == 3 and args.max_iters == 40
        assert args.barycentric is False and args.m == "full"

    def test_sweep_lists(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text("re_list = 10, 20\nm_list = 0 full\n")
        args = parse_args(["sweep", "--config", str(cfg)])
        assert args.re_list == [10.0, 20.0] and args.m_list == [0, "full"]

    @pytest.mark.parametrize("text", ["bogus = 1\n", "no equals sign\n"])
    def test_bad_file(self, tmp_path, text):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(text)
        assert main(["cavity", "--config", str(cfg)]) == EXIT_ERROR


class TestMms:
    def test_quadratic_exact(self, tmp_path):
        assert main(["mms", "--exact", "quadratic", "--n", "2", "--levels", "2", "--tol", "1e-13",
                     "--re", "1", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "mms_rates.csv")
        assert len(rows) == 2
        assert max(floats(rows, "l2_error") + floats(rows, "h1_error")) <= 1e-9

    def test_rate_table(self, tmp_path):
        assert main(["mms", "--n", "2", "--levels", "3", "--re", "1", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "mms_rates.csv")
        assert [int(r["n"]) for r in rows] == [2, 4, 8]
        assert np.isnan(float(rows[0]["l2_rate"]))
        assert float(rows[-1]["l2_rate"]) > 2.5

    def test_transient(self, tmp_path):
        argv = ["transient-mms", "--n", "2", "--dt", "0.25", "--T", "0.5", "--levels", "2",
                "--re", "1", "--tol", "1e-12", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK
        rows = read_csv(tmp_path / "transient_rates.csv")
        assert [int(r["steps"]) for r in rows] == [2, 4]


class TestSweep:
    def test_depth_sweep(self, tmp_path):
        code = main(["sweep", "--re", "1000", "--n", "8", "--m-list", "0", "1", "2", "5", "10", "--out", str(tmp_path)])
        assert code == EXIT_OK
        rows = read_csv(tmp_path / "sweep.csv")
        assert len(rows) == 5
        it = {r["m"]: int(r["iterations"]) for r in rows}
        assert it["10"] <= it["5"] <= it["2"]
        assert all((tmp_path / f"run_{i:03d}" / "summary.json").exists() for i in range(5))

    def test_empty_list_fails_before_solving(self, tmp_path):
        assert main(["sweep", "--m-list", "--out", str(tmp_path / "x")]) == EXIT_ERROR
        assert not (tmp_path / "x").exists()

    def test_duplicates_identical(self, tmp_path):
        assert main(["sweep", "--n", "4", "--m-list", "2", "2", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "sweep.csv")
        for r in rows:
            r.pop("wall_time")
        assert rows[0] == rows[1]
        a, b = (read_csv(tmp_path / f"run_{i:03d}" / "residuals.csv") for i in range(2))
        assert a == b

    def test_parallel_pool(self, tmp_path):
        assert main(["sweep", "--n", "2", "--re-list", "1", "10", "--jobs", "2", "--out", str(tmp_path)]) == EXIT_OK
        assert len(read_csv(tmp_path / "sweep.csv")) == 2


class TestFormats:
    def test_csv_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=50) * 10.0 ** rng.integers(-300, 300, size=50)
        write_csv(tmp_path / "x.csv", ["v"], [[float(v)] for v in vals])
        assert floats(read_csv(tmp_path / "x.csv"), "v") == vals.tolist()

    def test_summary_roundtrip(self):
        s = RunSummary({"n": 4, "m": "full"}, True, 7, 1.2345678901234567e-9, 3.0e-7, 0.1, 0.5, 1.25)
        text = s.to_json()
        assert RunSummary.from_json(text) == s
        assert RunSummary.from_json(text).to_json() == text

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "aaipp", "cavity", "--n", "2", "--out", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "converged=True" in proc.stdout
