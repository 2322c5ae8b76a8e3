import json
import math

import pytest

from extflow import cli


def run_cli(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


class TestConfig:
    def test_flags_only(self):
        args = cli.build_parser().parse_args(
            ["fixed-points", "--model", "interval", "--l", "1",
             "--group", "translation"])
        cfg = cli.load_config(args)
        assert cfg.model == "interval"
        assert cfg.length == 1.0
        assert cfg.group == "translation"

    def test_incompatible_model_group(self):
        args = cli.build_parser().parse_args(
            ["fixed-points", "--model", "interval", "--group", "scaling"])
        with pytest.raises(cli.IncompatibleModelGroup):
            cli.load_config(args)

    def test_missing_model_names_field(self):
        args = cli.build_parser().parse_args(["fixed-points"])
        with pytest.raises(cli.ParseError, match="model"):
            cli.load_config(args)

    def test_config_file_with_flag_override(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# sample configuration\n"
            "model = interval\n"
            "l = 2.0\n"
            "t = 0.5,1.5\n")
        args = cli.build_parser().parse_args(
            ["fixed-points", "--config", str(path), "--l", "1.0"])
        cfg = cli.load_config(args)
        assert cfg.model == "interval"
        assert cfg.length == 1.0          # flag wins over the file
        assert cfg.t_values == [0.5, 1.5]

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("flavor = strange\n")
        args = cli.build_parser().parse_args(
            ["fixed-points", "--model", "interval", "--config", str(path)])
        with pytest.raises(cli.ParseError, match="flavor"):
            cli.load_config(args)


class TestCommands:
    def test_fixed_points_reports_dirichlet_parameter(self, tmp_path):
        code, text = run_cli(tmp_path, "fixed-points", "--model", "interval",
                             "--l", "1", "--t", "1")
        assert code == 0
        payload = json.loads(text)
        row = payload["results"]["rows"][0]
        assert row["re"] == pytest.approx(math.exp(-1), abs=1e-7)
        assert row["kind"] == "dissipative-nonselfadjoint"
        assert payload["pass"] is True

    def test_period_command(self, tmp_path):
        code, text = run_cli(tmp_path, "period", "--model", "interval", "--l", "1")
        assert code == 0
        payload = json.loads(text)
        assert payload["results"]["period"] == pytest.approx(2 * math.pi, abs=1e-6)

    def test_flow_orbit(self, tmp_path):
        code, text = run_cli(tmp_path, "flow-orbit", "--model", "interval",
                             "--l", "1", "--t", "0.2,0.8,1.9", "--v0", "0.1+0.4j")
        assert code == 0
        payload = json.loads(text)
        rows = payload["results"]["rows"]
        assert len(rows) == 3
        assert all(r["modulus"] <= 1 + 1e-10 for r in rows)

    def test_invariance_with_period(self, tmp_path):
        code, text = run_cli(tmp_path, "invariance", "--model", "interval",
                             "--l", "1", "--t-max", "8.0")
        assert code == 0
        payload = json.loads(text)
        assert payload["results"]["cyclic_period"] == pytest.approx(
            2 * math.pi, abs=1e-6)

    def test_weyl_on_grid_passes(self, tmp_path):
        code, text = run_cli(tmp_path, "weyl", "--model", "interval", "--l", "1",
                             "--n", "256", "--t", "0.9", "--on-grid")
        assert code == 0
        payload = json.loads(text)
        assert payload["results"]["worst_residual"] <= 1e-12
        assert payload["checks"]["on-grid residual <= 1e-12"] is True

    def test_spectrum_dissipative(self, tmp_path):
        code, text = run_cli(tmp_path, "spectrum", "--l", "1",
                             "--rho", str(math.exp(-1)), "--window=-20,20")
        assert code == 0
        payload = json.loads(text)
        rows = payload["results"]["rows"]
        assert all(r["im"] == pytest.approx(1.0, abs=1e-12) for r in rows)

    def test_fk_params(self, tmp_path):
        code, text = run_cli(tmp_path, "fk-params", "--gamma", "0")
        assert code == 0
        payload = json.loads(text)
        assert payload["results"]["v_friedrichs"]["re"] == pytest.approx(1.0, abs=1e-7)
        assert payload["results"]["v_krein"]["im"] == pytest.approx(-1.0, abs=1e-7)

    def test_invariance_interval(self, tmp_path):
        code, text = run_cli(tmp_path, "invariance", "--model", "interval",
                             "--l", "0.5")
        assert code == 0
        payload = json.loads(text)
        assert payload["results"]["verdict"] == "UniqueDissipative"

    def test_generator_check_scaling(self, tmp_path):
        code, text = run_cli(tmp_path, "generator-check", "--model", "halfline",
                             "--group", "scaling", "--t", "0.5")
        assert code == 0
        payload = json.loads(text)
        row = payload["results"]["rows"][0]
        assert row["scale"]["re"] == pytest.approx(math.exp(-0.5), abs=1e-6)

    def test_certify_nonequivalence(self, tmp_path):
        code, text = run_cli(tmp_path, "certify-nonequivalence", "--l", "1",
                             "--l2", "2", "--n", "128")
        assert code == 0
        payload = json.loads(text)
        assert payload["checks"]["certified"] is True

    def test_refine_off_grid(self, tmp_path):
        code, text = run_cli(tmp_path, "refine", "--l", "1",
                             "--n", "64,128,256", "--t", "1.0")
        assert code == 0
        payload = json.loads(text)
        assert payload["results"]["orders"]["off-grid"] >= 0.9

    def test_jobs_flag_does_not_change_output(self, tmp_path):
        _, text1 = run_cli(tmp_path, "weyl", "--l", "1", "--n", "64,128",
                           "--t", "0.5,1.5", "--on-grid", name="a.json")
        _, text2 = run_cli(tmp_path, "weyl", "--l", "1", "--n", "64,128",
                           "--t", "0.5,1.5", "--on-grid", "--jobs", "4",
                           name="b.json")
        payload1 = json.loads(text1)
        payload2 = json.loads(text2)
        payload1["config"]["jobs"] = payload2["config"]["jobs"] = None
        assert payload1 == payload2


class TestEmission:
    def test_json_byte_determinism(self, tmp_path):
        _, text1 = run_cli(tmp_path, "fixed-points", "--model", "interval",
                           "--l", "1", "--t", "0.7,1.9", name="a.json")
        _, text2 = run_cli(tmp_path, "fixed-points", "--model", "interval",
                           "--l", "1", "--t", "0.7,1.9", name="b.json")
        assert text1 == text2

    def test_csv_row_count(self, tmp_path):
        code, text = run_cli(tmp_path, "spectrum", "--l", "1", "--theta", "0",
                             "--window=-10,10", "--format", "csv",
                             name="out.csv")
        assert code == 0
        lines = text.strip().splitlines()
        payload_rows = len(lines) - 1
        assert lines[0].startswith("index,")
        assert payload_rows == 3   # (theta + 2 pi n) in (-10, 10): n = -1, 0, 1

    def test_seventeen_digit_floats(self, tmp_path):
        _, text = run_cli(tmp_path, "period", "--model", "interval", "--l", "1")
        assert "6.2831853071" in text

    def test_invalid_output_path(self):
        code = cli.main(["period", "--model", "interval", "--l", "1",
                         "--out", "/nonexistent-dir/x/y.json"])
        assert code == 3


class TestExitCodes:
    def test_configuration_error_is_2(self):
        assert cli.main(["fixed-points", "--model", "interval",
                         "--group", "scaling"]) == 2
        assert cli.main(["fixed-points"]) == 2

    def test_numerical_error_is_3(self, tmp_path):
        # shooting in the semibounded range is ill-posed
        code = cli.main(["shoot", "--gamma", "0.0", "--count", "2",
                         "--out", str(tmp_path / "x.json")])
        assert code == 3

    def test_unknown_command_is_2(self):
        assert cli.main(["frobnicate"]) == 2
