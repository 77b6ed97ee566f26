import json

import lab_config_setup
from lab_config_setup import get_input_with_default, setup_config
from lab_utils import DEFAULT_CONFIG


def feed(monkeypatch, answers):
    replies = iter(answers)
    monkeypatch.setattr("builtins.input", lambda prompt="": next(replies, ""))


def test_get_input_with_default_parses_types(monkeypatch):
    feed(monkeypatch, ["0x10", "abc", "", "y", "2.5"])
    assert get_input_with_default("Default seed", 1, int) == 16
    assert get_input_with_default("Threads", 3, int) == 3
    assert get_input_with_default("Log folder", "logs") == "logs"
    assert get_input_with_default("Edit?", False, bool) is True
    assert get_input_with_default("Tolerance", 1e-8, float) == 2.5


def test_first_setup_writes_file(monkeypatch, tmp_path):
    path = tmp_path / "lab_config.json"
    # seed, threads, then Enter for everything else
    feed(monkeypatch, ["", "4"])
    config = setup_config(path)
    stored = json.loads(path.read_text())
    assert stored == config
    assert stored["threads"] == 4
    assert stored["default_seed"] == DEFAULT_CONFIG["default_seed"]
    assert stored["acceptance"] == DEFAULT_CONFIG["acceptance"]


def test_view_choice_prints_summary_without_writing(monkeypatch, tmp_path, capsys):
    path = tmp_path / "lab_config.json"
    path.write_text(json.dumps({"threads": 2}))
    before = path.read_text()
    feed(monkeypatch, ["V"])
    assert setup_config(path) is None
    out = capsys.readouterr().out
    assert "Worker processes: 2" in out
    assert "hitting_k1" in out
    assert path.read_text() == before


def test_rerun_keeps_existing_values(monkeypatch, tmp_path):
    path = tmp_path / "lab_config.json"
    path.write_text(json.dumps({"threads": 6, "log_retention_days": 9}))
    feed(monkeypatch, ["R"])
    config = setup_config(path)
    assert config["threads"] == 6
    assert config["log_retention_days"] == 9


def test_summary_shows_seed_in_hex(capsys):
    lab_config_setup.print_summary(json.loads(json.dumps(DEFAULT_CONFIG)))
    assert "0xc0ffee" in capsys.readouterr().out
