import csv
import json
from pathlib import Path

import numpy as np
import pytest

from ionspec2d import matio
from ionspec2d.cli import ConfigError, RunConfig, build_config, main, run_scenario


class TestBinaryFormat:
    def test_real_round_trip(self, tmp_path):
        m = np.random.default_rng(0).standard_normal((7, 5))
        path = tmp_path / "m.bin"
        matio.write_matrix(path, m)
        assert np.array_equal(matio.read_matrix(path), m)

    def test_complex_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
        path = tmp_path / "m.bin"
        matio.write_matrix(path, m)
        assert np.array_equal(matio.read_matrix(path), m)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "m.bin"
        matio.write_matrix(path, np.zeros((2, 3)))
        blob = path.read_bytes()
        assert blob[:8] == b"ISPEC2D\x00"
        assert int.from_bytes(blob[8:12], "little") == 1  # version
        assert int.from_bytes(blob[12:16], "little") == 0  # real dtype
        assert int.from_bytes(blob[16:24], "little") == 2
        assert int.from_bytes(blob[24:32], "little") == 3
        assert len(blob) == 32 + 6 * 8

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOTMAGIC" + bytes(64))
        with pytest.raises(ValueError, match="magic"):
            matio.read_matrix(path)


class TestConfigValidation:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            build_config({"scenario": "kerr", "bogus_knob": 1})

    def test_scenario_required_and_checked(self):
        with pytest.raises(ConfigError, match="scenario"):
            build_config({})
        with pytest.raises(ConfigError, match="scenario"):
            build_config({"scenario": "sideband"})

    def test_type_checks(self):
        with pytest.raises(ConfigError, match="dims"):
            build_config({"scenario": "kerr", "dims": 9})
        with pytest.raises(ConfigError, match="threads"):
            build_config({"scenario": "kerr", "threads": 1.5})
        with pytest.raises(ConfigError, match="fast_path"):
            build_config({"scenario": "kerr", "fast_path": "yes"})
        with pytest.raises(ConfigError, match="grid_scale"):
            build_config({"scenario": "kerr", "grid_scale": -0.5})
        with pytest.raises(ConfigError, match="window"):
            build_config({"scenario": "kerr", "window": "hann"})
        with pytest.raises(ConfigError, match="matching"):
            build_config({"scenario": "kerr", "dims": [9, 15], "nbar": [1.0, 4.0, 4.0]})

    def test_scenario_defaults(self):
        kerr = build_config({"scenario": "kerr"})
        assert kerr.dims == (9, 15, 15)
        assert kerr.nbar == (1.0, 4.0, 4.0)
        assert kerr.dt_s == pytest.approx(25.3e-6)
        res = build_config({"scenario": "resonance"})
        assert res.dims == (9, 6)
        assert res.nbar == (0.7, 0.2)
        assert res.dt_s == pytest.approx(10.6e-6)
        assert res.heating_quanta_per_ms == (0.2, 0.1)
        assert res.omega_x_hz == pytest.approx(2e6 * np.sqrt(63 / 20), rel=1e-12)
        assert res.alpha == 0.25 and res.n_phases == (4, 4, 4)

    def test_overrides_survive(self):
        cfg = build_config({"scenario": "resonance", "dims": [7, 5], "nbar": [0.5, 0.1]})
        assert cfg.dims == (7, 5)


class TestTablesScenario:
    def test_artifacts_and_speed(self, tmp_path):
        import time

        cfg = build_config({"scenario": "tables", "out_dir": str(tmp_path)})
        t0 = time.time()
        manifest = run_scenario(cfg)
        assert time.time() - t0 < 5.0
        assert manifest["status"] == "ok"
        assert (tmp_path / "freq_shifts_khz.csv").exists()
        assert (tmp_path / "dephasing_rates_khz.csv").exists()
        with open(tmp_path / "dephasing_rates_khz.csv") as fh:
            rows = {r["order"]: r for r in csv.DictReader(fh)}
        assert float(rows["effective"]["osi_half"]) == pytest.approx(2.5615, rel=0.01)
        assert manifest["derived"]["omega_zz_hz"] == pytest.approx(131.95e3, abs=200)

    def test_two_ion_chain_tables(self, tmp_path):
        # N=2 has only COM + stretch: no other x mode, so no x cross-Kerr
        cfg = build_config(
            {"scenario": "tables", "out_dir": str(tmp_path), "n_ions": 2,
             "omega_x_hz": 4.0e6}
        )
        manifest = run_scenario(cfg)
        assert manifest["status"] == "ok"
        with open(tmp_path / "dephasing_rates_khz.csv") as fh:
            header = fh.readline().strip().split(",")
        assert "od_x2" not in header[1:]  # column absent for N=2
        assert np.isfinite(manifest["derived"]["omega_si_hz"])


class TestNoiseTableScenario:
    def test_csv_rows(self, tmp_path):
        cfg = build_config(
            {"scenario": "noise-table", "out_dir": str(tmp_path), "mc_paths": 5000}
        )
        manifest = run_scenario(cfg)
        assert manifest["status"] == "ok"
        with open(tmp_path / "noise_loss.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 5
        published = [1.0, 2.5, 4.0, 1.0, 5.0]
        for row, pub in zip(rows, published):
            assert abs(100 * float(row["loss_analytic"]) - pub) <= 0.1


class TestManifest:
    def _tiny_kerr(self, out_dir, threads=1):
        return build_config(
            {
                "scenario": "kerr",
                "out_dir": str(out_dir),
                "dims": [5, 3, 3],
                "nbar": [0.8, 2.0, 2.0],
                "grid_scale": 0.15,
                "threads": threads,
            }
        )

    def test_reproducible_outputs(self, tmp_path):
        m1 = run_scenario(self._tiny_kerr(tmp_path / "a", threads=1))
        m2 = run_scenario(self._tiny_kerr(tmp_path / "b", threads=2))
        assert m1["outputs"] == m2["outputs"]  # sha256 of every artifact

    def test_config_round_trip(self, tmp_path):
        m1 = run_scenario(self._tiny_kerr(tmp_path / "a"))
        resolved = m1["resolved_config"]
        resolved["out_dir"] = str(tmp_path / "b")
        m2 = run_scenario(build_config(resolved))
        assert m1["outputs"] == m2["outputs"]

    def test_manifest_written_on_failure(self, tmp_path):
        cfg = build_config(
            {"scenario": "resonance", "out_dir": str(tmp_path), "dims": [30, 30],
             "nbar": [0.7, 0.2], "grid_scale": 0.05}
        )
        with pytest.raises(Exception):
            run_scenario(cfg)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["status"] == "error"
        assert "error" in manifest

    def test_dissipation_free_flag(self, tmp_path):
        cfg = build_config(
            {"scenario": "resonance", "out_dir": str(tmp_path), "dims": [4, 3],
             "nbar": [0.3, 0.1], "heating_quanta_per_ms": [0.0, 0.0],
             "grid_scale": 0.05}
        )
        manifest = run_scenario(cfg)
        assert manifest["dissipation_free"] is True
        cfg2 = build_config(
            {"scenario": "resonance", "out_dir": str(tmp_path / "h"), "dims": [4, 3],
             "nbar": [0.3, 0.1], "heating_quanta_per_ms": [0.2, 0.1],
             "grid_scale": 0.05}
        )
        manifest2 = run_scenario(cfg2)
        assert manifest2["dissipation_free"] is False

    def test_grid_scale_sets_grid_size(self, tmp_path):
        cfg = self._tiny_kerr(tmp_path)
        run_scenario(cfg)
        grid = matio.read_matrix(tmp_path / "signal_grid.bin")
        from ionspec2d.protocol import grid_points

        n = grid_points(cfg.t_max_s * cfg.grid_scale, cfg.dt_s)
        assert grid.shape == (n, n)


class TestMainEntry:
    def test_cli_flags_override_config(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"scenario": "tables", "out_dir": "ignored"}))
        rc = main(["--config", str(cfg_path), "--out-dir", str(tmp_path / "out")])
        assert rc == 0
        assert (tmp_path / "out" / "manifest.json").exists()
        assert json.loads(capsys.readouterr().out)["status"] == "ok"

    def test_missing_scenario_errors(self, capsys):
        assert main([]) == 2
        assert "scenario" in capsys.readouterr().err

    def test_bad_config_key_errors(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"scenario": "tables", "wat": 1}))
        assert main(["--config", str(cfg_path)]) == 2
        assert "unknown" in capsys.readouterr().err

    def test_invalid_json_errors(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        assert main(["--config", str(cfg_path)]) == 2

    def test_failing_run_exits_nonzero(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps(
                {"scenario": "resonance", "dims": [30, 30], "nbar": [0.7, 0.2],
                 "out_dir": str(tmp_path / "out"), "grid_scale": 0.05}
            )
        )
        assert main(["--config", str(cfg_path)]) == 1
        assert (tmp_path / "out" / "manifest.json").exists()


class TestPhaseNoiseAttenuation:
    def test_grid_attenuated_pointwise(self, tmp_path):
        base = build_config(
            {"scenario": "kerr", "out_dir": str(tmp_path / "a"), "dims": [5, 3, 3],
             "nbar": [0.8, 2.0, 2.0], "grid_scale": 0.15}
        )
        run_scenario(base)
        noisy_cfg = build_config(
            {"scenario": "kerr", "out_dir": str(tmp_path / "b"), "dims": [5, 3, 3],
             "nbar": [0.8, 2.0, 2.0], "grid_scale": 0.15,
             "phase_noise_diffusion": 3.9478}
        )
        run_scenario(noisy_cfg)
        clean = matio.read_matrix(tmp_path / "a" / "signal_grid.bin")
        noisy = matio.read_matrix(tmp_path / "b" / "signal_grid.bin")
        dt = base.dt_s
        n = clean.shape[0]
        t = np.arange(n) * dt
        t1, t3 = np.meshgrid(t, t, indexing="ij")
        q = base.signature
        loss = 0.5 * 3.9478 * ((q[0] + q[1] + q[2]) ** 2 * t1 + q[2] ** 2 * t3)
        np.testing.assert_allclose(noisy, clean * (1 - loss), rtol=1e-12, atol=1e-18)
