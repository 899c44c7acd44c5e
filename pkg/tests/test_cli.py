import json

import pytest
from click.testing import CliRunner

from cli import cli
from config import clear_settings_cache

LOOP = "r1^-1 r2 s1 r2 r1^-1"


@pytest.fixture
def runner(monkeypatch, tmp_path):
    monkeypatch.setattr("config.settings.OVERRIDES_FILE", tmp_path / "overrides.json")
    clear_settings_cache()
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, list(args), obj={})


def _built_rings(runner, tmp_path):
    bundle = tmp_path / "rings.json"
    result = _invoke(runner, "build", "-a", "loop", "-w", "r1 r1", "-s", "2", "--lambda", "0.3", "-o", str(bundle))
    assert result.exit_code == 0, result.output
    return bundle


def test_parse_reports_closure_data(runner):
    result = _invoke(runner, "parse", "-w", "s1^-1 s2 s1^-1 s2 s1^-1", "-s", "3", "--json")

    assert result.exit_code == 0
    info = json.loads(result.output)
    assert info["permutation"] == [1, 3, 2]
    assert info["components"]["cycles"] == [[1], [2, 3]]
    assert info["homogeneous"] is True


def test_bad_words_exit_with_the_input_stage(runner):
    result = _invoke(runner, "parse", "-w", "s1 q2", "-s", "3")

    assert result.exit_code == 1
    assert "Error (input)" in result.output


def test_bounds_without_building(runner):
    loop = _invoke(runner, "bounds", "-w", LOOP, "-s", "3", "--loop", "--json")
    spin = _invoke(runner, "bounds", "-w", "s1^-1 s2 s1^-1 s2 s1^-1", "-s", "3", "--n", "3", "--json")

    assert json.loads(loop.output)["bound"] == 52
    assert json.loads(spin.output)["bound"] == 107
    table = _invoke(runner, "bounds", "-w", LOOP, "-s", "3", "--kind", "loop")
    assert "bound = 52" in table.output


def test_build_writes_a_bundle_with_the_requested_parts(runner, tmp_path):
    bundle = tmp_path / "out" / "loop.json"

    result = _invoke(
        runner, "build", "-a", "loop", "-w", "r1 r1", "-s", "2", "--lambda", "0.5", "--emit", "f,bounds", "-o", str(bundle)
    )

    assert result.exit_code == 0, result.output
    data = json.loads(bundle.read_text(encoding="utf-8"))
    assert data["algorithm"] == "loop"
    assert data["lambda"] == 0.5
    assert "f" in data and "bounds" in data and "g" not in data
    assert data["within_bound"] is True


def test_build_rejects_bad_lambda_and_missing_torus_file(runner, tmp_path):
    bad = _invoke(runner, "build", "-a", "loop", "-w", "r1", "-s", "2", "--lambda=-1")
    torus = _invoke(runner, "build", "-a", "torus")

    assert bad.exit_code == 1
    assert torus.exit_code == 1
    assert "needs --torus" in torus.output


def test_verify_passes_and_writes_a_report(runner, tmp_path):
    bundle = _built_rings(runner, tmp_path)

    result = _invoke(runner, "verify", str(bundle), "--checks", "reextract")

    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "rings.report.json").read_text(encoding="utf-8"))
    assert report["status"] == "PASS"
    assert {c["name"]: c["status"] for c in report["checks"]}["reextract"] == "PASS"


def test_verify_exits_two_on_a_failed_check(runner, tmp_path):
    bundle = _built_rings(runner, tmp_path)
    data = json.loads(bundle.read_text(encoding="utf-8"))
    data["word"]["tokens"][1]["sign"] = -1
    bundle.write_text(json.dumps(data), encoding="utf-8")

    result = _invoke(runner, "verify", str(bundle), "--checks", "reextract", "-o", str(tmp_path / "r.json"))

    assert result.exit_code == 2
    assert json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))["status"] == "FAIL"


def test_verify_reports_unreadable_bundles(runner, tmp_path):
    result = _invoke(runner, "verify", str(tmp_path / "nowhere.json"))

    assert result.exit_code == 1
    assert "Error (bundle)" in result.output


def test_vectorfield_and_plotdata_write_csv(runner, tmp_path):
    bundle = _built_rings(runner, tmp_path)
    field_csv = tmp_path / "field.csv"

    field = _invoke(runner, "vectorfield", str(bundle), "--samples", "20", "-o", str(field_csv))
    plots = _invoke(runner, "plotdata", str(bundle), "--slices", "0", "--out-dir", str(tmp_path / "plots"))

    assert field.exit_code == 0, field.output
    assert len(field_csv.read_text(encoding="utf-8").splitlines()) == 21
    assert plots.exit_code == 0, plots.output
    assert (tmp_path / "plots" / "strands.csv").exists()


def test_config_set_persists_overrides(runner, tmp_path):
    result = _invoke(runner, "config", "--set", "seed=5", "--set", "lane_order=ascending")

    assert result.exit_code == 0, result.output
    stored = json.loads((tmp_path / "overrides.json").read_text(encoding="utf-8"))
    assert stored == {"lane_order": "ascending", "seed": 5}
    assert _invoke(runner, "config", "--set", "colour=blue").exit_code == 1


def test_config_set_rejects_values_the_validators_refuse(runner, tmp_path):
    result = _invoke(runner, "config", "--set", "crossing_samples=3")

    assert result.exit_code == 1
    assert "Error (config)" in result.output
    assert not (tmp_path / "overrides.json").exists()
    assert _invoke(runner, "bounds", "-w", "s1", "-s", "2").exit_code == 0
