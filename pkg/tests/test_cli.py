"""Tests for the command line interface and configuration parsing."""

import json
import re

import numpy as np
import pytest

from mnplink import cli

DEFAULT = cli.default_config_path()


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def write_config(tmp_path, mutate=None, drop=None, add=None):
    """Copy the default config with a line edited, removed, or added."""
    lines = open(DEFAULT).read().splitlines()
    out = []
    for line in lines:
        key = line.split("=")[0].strip() if "=" in line else None
        if drop and key == drop:
            continue
        if mutate and key == mutate[0]:
            line = f"{mutate[0]} = {mutate[1]}"
        out.append(line)
    if add:
        out.append(add)
    path = tmp_path / "config.ini"
    path.write_text("\n".join(out) + "\n")
    return str(path)


class TestParseConfig:

    def test_defaults_match_parameter_table(self):
        run = cli.parse_config(DEFAULT)
        assert run.env.viscosity == 1e-3
        assert run.env.temperature == 300.0
        assert run.particle.mean_radius == 27.5e-9
        assert run.geometry.height == 10e-6
        assert run.geometry.rx_extent == (1e-4, 1e-6, 1e-6)
        assert run.link.symbol_interval == 2.0
        assert run.link.threshold == 1
        assert run.sim.time_step == 2e-3
        # derived diffusion close to the rounded tabulated 8e-12
        from mnplink import physics
        D = physics.diffusion_coefficient(run.particle.mean_radius, run.env)
        assert D == pytest.approx(8e-12, rel=0.02)

    def test_missing_key_named(self, tmp_path):
        path = write_config(tmp_path, drop="viscosity_kg_per_m_s")
        with pytest.raises(cli.ConfigError, match="viscosity_kg_per_m_s"):
            cli.parse_config(path)

    def test_invalid_value_rejected(self, tmp_path):
        path = write_config(tmp_path, mutate=("height_m", "-1"))
        with pytest.raises(cli.ConfigError):
            cli.parse_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path, add="viscocity_kg_per_m_s = 1e-3")
        with pytest.raises(cli.ConfigError, match="viscocity"):
            cli.parse_config(path)

    def test_unparseable_number_rejected(self, tmp_path):
        path = write_config(tmp_path, mutate=("temperature_K", "warm"))
        with pytest.raises(cli.ConfigError, match="temperature_K"):
            cli.parse_config(path)

    def test_missing_file(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_config("/nonexistent/config.ini")


class TestFieldCommand:

    def test_csv_contents(self, tmp_path, capsys):
        assert cli.main(["field", "--out", str(tmp_path)]) == 0
        header, data = read_csv(tmp_path / "field.csv")
        assert header == ["z_m", "B_T", "dBdz_T_per_m"]
        assert data.shape == (101, 3)
        # row at z = h/2
        j = np.argmin(np.abs(data[:, 0] - 5e-6))
        assert data[j, 1] == pytest.approx(0.144, rel=0.01)
        assert -data[j, 2] == pytest.approx(35.23, rel=0.005)
        # monotone decreasing field away from the magnet
        assert np.all(np.diff(data[:, 1]) < 0)

    def test_nine_significant_digits(self, tmp_path):
        cli.main(["field", "--out", str(tmp_path)])
        body = (tmp_path / "field.csv").read_text().splitlines()[1:]
        for cell in body[0].split(","):
            assert re.fullmatch(r"-?\d\.\d{8}e[+-]\d{2}", cell)

    def test_manifest(self, tmp_path, capsys):
        cli.main(["field", "--out", str(tmp_path)])
        manifest = json.loads((tmp_path / "field_manifest.json").read_text())
        assert manifest["command"] == "field"
        assert set(manifest) >= {"version", "config_sha256", "seed", "outputs"}
        assert "field.csv" in manifest["outputs"]
        printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert printed == manifest


class TestDriftCommand:

    def test_csv_contents(self, tmp_path):
        assert cli.main(["drift", "--out", str(tmp_path)]) == 0
        header, data = read_csv(tmp_path / "drift.csv")
        assert header == ["z_m", "vm_exact", "vm_smallB", "vm_largeB"]
        assert data[0, 1] == pytest.approx(1e-6, rel=0.1)
        # the strong-field approximation tracks the exact curve here
        assert np.allclose(data[:, 3], data[:, 1], rtol=0.15)


class TestImpulseCommand:

    def test_magnet_on_off_and_rerun_identical(self, tmp_path):
        args = ["impulse", "--out", str(tmp_path), "--realizations", "3",
                "--seed", "9"]
        assert cli.main(args) == 0
        on1 = (tmp_path / "impulse_magnet_on.csv").read_bytes()
        off1 = (tmp_path / "impulse_magnet_off.csv").read_bytes()
        assert cli.main(args) == 0
        assert (tmp_path / "impulse_magnet_on.csv").read_bytes() == on1
        assert (tmp_path / "impulse_magnet_off.csv").read_bytes() == off1
        _, on = read_csv(tmp_path / "impulse_magnet_on.csv")
        _, off = read_csv(tmp_path / "impulse_magnet_off.csv")
        # analytic peak with the magnet exceeds the magnet-off peak
        assert on[:, 1].max() > off[:, 1].max()
        # quasi-steady approximation overestimates near the peak
        j = np.argmax(on[:, 1])
        assert on[j, 2] >= on[j, 1]

    def test_magnet_flag_single_variant(self, tmp_path):
        assert cli.main(["impulse", "--out", str(tmp_path), "--magnet", "on",
                         "--realizations", "2"]) == 0
        assert (tmp_path / "impulse_magnet_on.csv").exists()
        assert not (tmp_path / "impulse_magnet_off.csv").exists()


class TestSerCommand:

    def test_columns_and_no_isi_identity(self, tmp_path):
        assert cli.main(["ser", "--out", str(tmp_path), "--magnet", "on",
                         "--realizations", "20", "--seed", "3"]) == 0
        header, data = read_csv(tmp_path / "ser_magnet_on.csv")
        assert header == ["n_tx", "analytic_no_isi", "analytic_exact",
                          "sim_ser", "sim_stderr"]
        assert data.shape[0] == len(cli._SER_NTX)
        # flow clears the duct between slots: enumeration equals no-ISI
        assert np.allclose(data[:, 1], data[:, 2], rtol=1e-12, atol=1e-300)
        # SER decreases with pulse size
        assert np.all(np.diff(data[:, 2]) < 0)


class TestSignalSweepCommand:

    def test_sweep_shape(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "_SWEEP_SIZE_DRAWS", 200)
        assert cli.main(["signal-sweep", "--out", str(tmp_path)]) == 0
        header, data = read_csv(tmp_path / "signal_sweep.csv")
        assert data.shape == (21, 13)
        assert header[0] == "vm0_m_per_s"
        cols = {name: data[:, j] for j, name in enumerate(header)}
        # reflecting walls: signal nondecreasing in the drift velocity
        assert np.all(np.diff(cols["nominal_N10_ka_0e+00"]) >= -1e-15)
        # strong adsorption: interior maximum over the grid
        strong = cols["nominal_N10_ka_1e-06"]
        k = np.argmax(strong)
        assert 0 < k < len(strong) - 1


class TestExitCodes:

    def test_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[fluid]\nviscosity_kg_per_m_s = -1\n")
        assert cli.main(["field", "--config", str(bad),
                         "--out", str(tmp_path)]) == 2

    def test_io_error(self, tmp_path):
        target = tmp_path / "file"
        target.write_text("x")
        assert cli.main(["field", "--out", str(target / "sub")]) == 4

    def test_success(self, tmp_path):
        assert cli.main(["field", "--out", str(tmp_path)]) == 0
