import json
import subprocess
import sys

import pytest

from susychain.cli import main
from susychain.susy import NumericalConsistencyError


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSpectrum:
    def test_json_listing(self, capsys):
        code, out, _ = run_cli(capsys, "spectrum", "--N", "4", "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert data["N"] == 4
        assert data["zero_mode_count"] == 1
        assert data["zero_mode_length"] == 2
        energies = sorted(lv["energy"] for lv in data["levels"])
        assert energies == pytest.approx([0.0, 2.0, 2.0], abs=1e-10)

    def test_table_marks_zero_modes(self, capsys):
        code, out, _ = run_cli(capsys, "spectrum", "--N", "4")
        assert code == 0
        assert "*zero" in out
        assert "zero modes: 1 (at L=2)" in out

    def test_csv_is_parseable(self, capsys):
        code, out, _ = run_cli(capsys, "spectrum", "--N", "5", "--format", "csv")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "L,n_d,energy,parity,pair_id"
        assert len(lines) == 1 + 5  # C(2,2) + C(3,1) + C(4,0) levels


class TestWitten:
    def test_gca_value(self, capsys):
        code, out, _ = run_cli(capsys, "witten", "--N", "4", "--which", "gca",
                               "--beta", "5", "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert data["value"] == pytest.approx(-0.999909208384, abs=1e-9)
        assert data["beta"] == 5.0

    def test_qgca_value(self, capsys):
        code, out, _ = run_cli(capsys, "witten", "--N", "6", "--which", "qgca",
                               "--beta", "5")
        assert code == 0
        assert abs(float(out.strip())) < 1e-3

    def test_regularized_value(self, capsys):
        code, out, _ = run_cli(capsys, "witten", "--N", "4", "--which",
                               "regularized", "--beta0", "2.0")
        assert code == 0
        assert float(out.strip()) == pytest.approx(-1.0, abs=1e-9)

    def test_out_file_and_manifest(self, capsys, tmp_path):
        out_file = tmp_path / "w.json"
        code, _, _ = run_cli(capsys, "witten", "--N", "4", "--format", "json",
                             "--out", str(out_file))
        assert code == 0
        assert json.loads(out_file.read_text())["N"] == 4
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "witten"
        assert manifest["base_seed"] == 1
        assert manifest["outputs"] == [str(out_file)]
        assert "config" not in manifest["arguments"]
        assert manifest["arguments"]["N"] == 4


class TestConfigFile:
    def test_config_sets_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("# defaults\nbeta = 2.0\n")
        code, out, _ = run_cli(capsys, "witten", "--N", "4", "--format", "json",
                               "--config", str(cfg))
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(-0.964663155972, abs=1e-9)

    def test_flags_beat_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("beta = 2.0\n")
        code, out, _ = run_cli(capsys, "witten", "--N", "4", "--format", "json",
                               "--config", str(cfg), "--beta", "5")
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(-0.999909208384, abs=1e-9)

    def test_bad_config_line_is_a_usage_error(self, capsys, tmp_path):
        cfg = tmp_path / "run.conf"
        cfg.write_text("nonsense\n")
        code, _, err = run_cli(capsys, "witten", "--N", "4", "--config", str(cfg))
        assert code == 2
        assert "bad config" in err

    def test_missing_config_is_an_io_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "witten", "--N", "4", "--config",
                               str(tmp_path / "absent.conf"))
        assert code == 4
        assert "cannot read" in err


class TestDynamics:
    def test_single_sector_trace_and_manifest(self, capsys, tmp_path):
        out_dir = tmp_path / "run"
        code, out, _ = run_cli(
            capsys, "dynamics", "--N", "4", "--protocol", "gca", "--beta", "2",
            "--runs", "600", "--iterations", "40", "--out", str(out_dir),
        )
        assert code == 0
        assert "gca N=4 beta=2.0: window estimate" in out
        trace = out_dir / "trace_gca_N4.csv"
        assert trace.exists()
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["command"] == "dynamics"
        assert manifest["outputs"] == [str(trace)]

    def test_same_seed_reproduces_trace_bytes(self, capsys, tmp_path):
        argv = ["dynamics", "--N", "4", "--protocol", "qgca", "--beta", "2",
                "--runs", "500", "--iterations", "30", "--seed", "7"]
        run_cli(capsys, *argv, "--out", str(tmp_path / "a"))
        run_cli(capsys, *argv, "--out", str(tmp_path / "b"))
        a = (tmp_path / "a" / "trace_qgca_N4.csv").read_bytes()
        b = (tmp_path / "b" / "trace_qgca_N4.csv").read_bytes()
        assert a == b

    def test_default_covers_all_sectors(self, capsys):
        code, out, _ = run_cli(capsys, "dynamics", "--runs", "40",
                               "--iterations", "10", "--beta", "1")
        assert code == 0
        lines = [ln for ln in out.splitlines() if "window estimate" in ln]
        assert len(lines) == 9
        for N in range(3, 12):
            assert any(f"N={N} " in ln for ln in lines)


class TestSweep:
    def test_sweep_writes_csv_fit_and_manifest(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "sweep", "--coupling", "delta", "--N", "4,6",
            "--values", "0.95,0.97,0.99,1.0,1.01,1.03,1.05",
            "--out", str(tmp_path),
        )
        assert code == 0
        csv_path = tmp_path / "sweep_delta_exact-gca.csv"
        fit_path = tmp_path / "fit_delta_exact-gca.json"
        assert csv_path.exists() and fit_path.exists()
        assert str(csv_path) in out and str(fit_path) in out
        rows = csv_path.read_text().splitlines()
        assert rows[1].startswith("N,coupling,value,")
        assert len(rows) == 2 + 2 * 7
        fits = {f["N"]: f for f in json.loads(fit_path.read_text())}
        assert set(fits) == {4, 6}
        assert fits[6]["relative_discrepancy"] <= 0.02
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert len(manifest["outputs"]) == 2

    def test_too_few_points_skips_fit(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "sweep", "--N", "4", "--values", "0.99,1.0,1.01",
            "--out", str(tmp_path),
        )
        assert code == 0
        assert "fit skipped" in err
        assert not (tmp_path / "fit_delta_exact-gca.json").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert len(manifest["outputs"]) == 1


class TestCache:
    def test_inspect_and_clear(self, capsys, tmp_path):
        cache = tmp_path / "cache"
        run_cli(capsys, "witten", "--N", "4", "--cache-dir", str(cache))
        code, out, _ = run_cli(capsys, "cache", "inspect", "--cache-dir", str(cache))
        assert code == 0
        # sector 4 pulls blocks (2,1) and (3,0)
        assert "2 entries" in out
        assert "L=2 n_d=1" in out
        code, out, _ = run_cli(capsys, "cache", "clear", "--cache-dir", str(cache))
        assert code == 0
        assert not cache.exists()

    def test_cache_requires_directory_flag(self, capsys):
        code, _, err = run_cli(capsys, "cache", "inspect")
        assert code == 2
        assert "cache-dir" in err


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["witten", "--N", "4", "--frobnicate"])
        assert exc.value.code == 2

    def test_numerical_consistency_maps_to_3(self, capsys, monkeypatch):
        import susychain.cli as cli_mod

        def boom(*a, **k):
            raise NumericalConsistencyError("estimators disagree")

        monkeypatch.setattr(cli_mod, "wtilde_gca_exact", boom)
        code, _, err = run_cli(capsys, "witten", "--N", "4", "--which", "gca")
        assert code == 3
        assert "consistency" in err

    def test_unwritable_out_is_io_error(self, capsys, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code, _, err = run_cli(capsys, "witten", "--N", "4", "--out",
                               str(blocker / "w.json"))
        assert code == 4
        assert "I/O error" in err


def test_console_script_help_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "susychain.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for name in ("spectrum", "witten", "dynamics", "sweep", "cache"):
        assert name in proc.stdout
