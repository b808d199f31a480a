import csv
import json
import math

import numpy as np
import pytest

from chsplit import cli
from chsplit.config import parse_config
from chsplit.errors import ConfigError


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run_cfg(**scheme):
    base = {"name": "strang", "nu": 1.0, "tau": 0.01, "n_steps": 5}
    base.update(scheme)
    return {
        "grid": {"n_points": 32},
        "scheme": base,
        "experiment": {"initial_data": {"kind": "single_mode", "amplitude": 0.5, "wavenumber": 1}},
    }


class TestRun:
    def test_zero_steps_gives_one_row(self, tmp_path):
        code = cli.main(["run", "--config", str(write(tmp_path, run_cfg(n_steps=0))),
                         "--out", str(tmp_path / "out")])
        assert code == 0
        rows = read_csv(tmp_path / "out" / "series.csv")
        assert rows[0] == cli.SERIES_HEADER
        assert len(rows) == 2 and rows[1][:2] == ["0", "0"]

    def test_zero_data_columns(self, tmp_path):
        doc = run_cfg()
        doc["experiment"]["initial_data"]["amplitude"] = 0.0
        assert cli.main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 0
        rows = read_csv(tmp_path / "o" / "series.csv")
        header = rows[0]
        for row in rows[1:]:
            vals = dict(zip(header, row))
            assert float(vals["energy"]) == pytest.approx(math.pi / 2, rel=1e-14)
            for c in ("mass", "l2", "l4", "h1", "residual", "linf"):
                assert float(vals[c]) == 0.0

    def test_config_echo_rerun_is_byte_identical(self, tmp_path):
        doc = run_cfg()
        doc["experiment"]["initial_data"] = {"kind": "random_bandlimited", "seed": 7, "band": 3,
                                             "amplitude": 0.3}
        assert cli.main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "a")]) == 0
        echo = tmp_path / "a" / "config_echo.json"
        assert json.loads(echo.read_text())["experiment"]["initial_data"]["kind"] == "trig_poly"
        assert cli.main(["run", "--config", str(echo), "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()

    def test_snapshots_round_trip(self, tmp_path):
        doc = run_cfg(n_steps=4)
        doc["output"] = {"snapshot_every": 2}
        cli.main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        snaps = sorted(p.name for p in (tmp_path / "o" / "snapshots").iterdir())
        assert snaps == ["snap_0.csv", "snap_2.csv", "snap_4.csv"]
        rows = read_csv(tmp_path / "o" / "snapshots" / "snap_0.csv")
        x = np.array([float(r[0]) for r in rows[1:]])
        u = np.array([float(r[1]) for r in rows[1:]])
        np.testing.assert_allclose(u, 0.5 * np.cos(x), atol=1e-15)

    def test_runtime_failure_keeps_partial_artifacts(self, tmp_path):
        doc = run_cfg(tau=0.5, n_steps=3, substep={"max_substeps": 2})
        doc["grid"]["n_points"] = 64
        code = cli.main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        assert code == 3
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["verdict"] == "runtime_failure"
        assert summary["failures"][0]["error"] == "StepFailure"
        assert len(read_csv(tmp_path / "o" / "series.csv")) == 2


class TestConfigErrors:
    def test_unknown_key_reports_path(self, tmp_path, capsys):
        doc = run_cfg()
        doc["scheme"]["taus"] = 0.1
        code = cli.main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "scheme.taus" in capsys.readouterr().err

    def test_single_tau_ladder(self, tmp_path):
        doc = run_cfg()
        doc["experiment"]["taus"] = [0.1]
        assert cli.main(["converge", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 2

    @pytest.mark.parametrize("patch,path", [
        ({"grid": {"n_points": 15}}, "grid.n_points"),
        ({"scheme": {"name": "imex", "nu": 0.01, "tau": 0.1, "n_steps": 1}}, "scheme.tau"),
        ({"scheme": {"name": "euler", "nu": 1.0}}, "scheme.name"),
        ({"scheme": {"nu": -1.0}}, "scheme.nu"),
    ])
    def test_paths(self, patch, path):
        doc = run_cfg()
        doc.update(patch)
        with pytest.raises(ConfigError) as exc:
            parse_config(doc)
        assert exc.value.path == path

    def test_missing_file_and_bad_json(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_usage(self):
        assert cli.main([]) == 2
        assert cli.main(["frobnicate"]) == 2


class TestExperiments:
    def test_converge_lie(self, tmp_path):
        doc = run_cfg(name="lie")
        doc["grid"]["n_points"] = 64
        doc["experiment"].update(horizon=0.25, taus=[2**-5, 2**-6, 2**-7, 2**-8],
                                 initial_data={"kind": "single_mode", "amplitude": 0.1, "wavenumber": 1})
        code = cli.main(["converge", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert code == (0 if summary["results"]["pass"] else 1)
        assert summary["results"]["fitted_order"] == pytest.approx(1.0, abs=0.2)
        rows = read_csv(tmp_path / "o" / "convergence.csv")
        assert rows[0] == ["tau", "error_l2", "pairwise_order"]
        assert rows[1][2] == "" and len(rows) == 5

    def test_kernel_scan(self, tmp_path):
        doc = {"scheme": {"nu": 1.0},
               "experiment": {"betas": [1e-4, 1e-3, 1e-2, 1e-1], "ps": [2, "inf"], "variants": ["K"]}}
        code = cli.main(["kernel-scan", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        assert code == 0
        rows = read_csv(tmp_path / "o" / "kernel_scan.csv")
        assert rows[0] == ["beta", "p", "variant", "norm"] and len(rows) == 9
        assert {r[1] for r in rows[1:]} == {"2", "inf"}

    def test_kernel_scan_rejects_beta(self, tmp_path):
        doc = {"scheme": {"nu": 1.0}, "experiment": {"betas": [1e-3, 2.0, 1e-1]}}
        assert cli.main(["kernel-scan", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 2

    def test_dissipation_vacuous(self, tmp_path):
        doc = run_cfg()
        doc["experiment"].update(horizon=0.05, initial_data={"kind": "single_mode", "amplitude": 0.0,
                                                             "wavenumber": 1})
        code = cli.main(["dissipation", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert code == 0 and summary["verdict"] == "vacuous_pass"
        rows = read_csv(tmp_path / "o" / "dissipation.csv")
        assert rows[1][3] == "false" and rows[-1][4] == ""

    def test_dissipation_expected_failure(self, tmp_path):
        doc = {"grid": {"n_points": 64},
               "scheme": {"name": "strang", "nu": 0.1, "tau": 0.5},
               "experiment": {"horizon": 5.0, "expected_failure": True,
                              "initial_data": {"kind": "trig_poly",
                                               "coefficients": [{"k": 1, "cos": 1.0}, {"k": 2, "cos": 0.5}]}}}
        code = cli.main(["dissipation", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert code == 0
        assert summary["verdict"] in {"pass", "vacuous_pass", "expected_failure"}
        assert summary["results"]["expected_failure"] is True


def test_fmt():
    assert cli.fmt(True) == "true" and cli.fmt(None) == "" and cli.fmt(3) == "3"
    x = 0.1 + 0.2
    assert float(cli.fmt(x)) == x
