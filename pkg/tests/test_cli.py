"""CLI contract: exit codes, artifacts, determinism."""

import json

import pytest

from raysep.cli import EXIT_CONFIG, EXIT_OK, ScenarioConfig, main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfig:
    def test_round_trip(self):
        config = ScenarioConfig(map="exp(0.3)", period=2,
                                bbox=(-1.0, 2.0, -3.0, 4.0),
                                domains=(-1, 1), addresses=["0|", "|1,2"])
        again = ScenarioConfig.from_json(config.to_json())
        assert again == config

    def test_config_file(self, tmp_path, capsys):
        path = tmp_path / "scenario.json"
        config = ScenarioConfig(map="exp(0.3)", bbox=(-4.0, 10.0, -12.0, 12.0))
        path.write_text(json.dumps(config.to_json()))
        code, out, _ = run_cli(["setup", "--config", str(path)], capsys)
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["disk"]["radius"] == pytest.approx(0.375)


class TestExitCodes:
    def test_missing_map_is_config_error(self, capsys):
        code, _, err = run_cli(["setup"], capsys)
        assert code == EXIT_CONFIG
        assert json.loads(err)["error"] == "config"

    def test_bad_map_is_config_error(self, capsys):
        code, _, err = run_cli(["setup", "--map", "tan(1)"], capsys)
        assert code == EXIT_CONFIG

    def test_unwritable_out_dir(self, capsys, tmp_path):
        bogus = tmp_path / "missing" / "dir"
        code, _, err = run_cli(
            ["rays", "--map", "exp(0.3)", "--address", "0|",
             "--out", str(bogus)], capsys)
        assert code == EXIT_CONFIG
        assert "error" in json.loads(err)

    def test_verify_ok(self, capsys):
        code, out, _ = run_cli(
            ["verify", "--map", "exp(0.3)", "--period", "1",
             "--bbox=-4,10,-12,12"], capsys)
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["has_violation"] is False
        assert len(data["regions"]) == 1
        assert data["regions"][0]["verdict"] == "exactly_one_interior"

    def test_count_matches(self, capsys):
        code, out, _ = run_cli(
            ["count", "--map", "exp(0.3)", "--domains=-1..1",
             "--bbox=-4,10,-17,17"], capsys)
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["expected_count"] == 4
        assert data["measured_count"] == 4
        assert data["match"] is True


class TestArtifacts:
    def test_rays_csv_and_json(self, capsys, tmp_path):
        code, out, _ = run_cli(
            ["rays", "--map", "exp(0.3)", "--address", "0|",
             "--depth", "320", "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        data = json.loads((tmp_path / "rays.json").read_text())
        ray = data["rays"][0]
        assert ray["status"]["kind"] == "lands_at"
        assert ray["status"]["point"][0] == pytest.approx(1.7813370234, abs=1e-6)
        csv_files = list(tmp_path.glob("ray_*.csv"))
        assert len(csv_files) == 1
        header = csv_files[0].read_text().splitlines()[0]
        assert header == "t,re,im"

    def test_fixedpoints_table(self, capsys, tmp_path):
        code, out, _ = run_cli(
            ["fixedpoints", "--map", "exp(0.3)", "--bbox=-1,3,-2,2",
             "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        rows = (tmp_path / "fixedpoints.csv").read_text().splitlines()
        assert rows[0] == "re,im,period,abs_multiplier,class,multiplicity"
        assert len(rows) == 3

    def test_svg_plot(self, capsys, tmp_path):
        svg_path = tmp_path / "overlay.svg"
        code, _, _ = run_cli(
            ["plot", "--map", "exp(0.3)", "--bbox=-4,10,-12,12",
             "--svg", str(svg_path)], capsys)
        assert code == EXIT_OK
        text = svg_path.read_text()
        assert text.startswith("<svg")
        assert 'viewBox="0 0 1200 1200"' in text
        assert "<polyline" in text

    def test_deterministic_reports(self, capsys):
        args = ["verify", "--map", "exp(0.3)", "--bbox=-4,10,-12,12"]
        _, first, _ = run_cli(args, capsys)
        _, second, _ = run_cli(args, capsys)
        assert first == second
