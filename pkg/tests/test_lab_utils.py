import json
from datetime import datetime, timedelta

from click.testing import CliRunner

from lab_logging import log_experiment, log_main, log_operation_performance
from lab_utils import (DEFAULT_CONFIG, MASK64, format_probability, load_config,
                       normalize_experiment_name, split_seed, splitmix64)
from log_rotation import LogRotator, format_bytes, main as log_rotation_main


def test_splitmix64_reference_value():
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_split_seed_streams_are_distinct_and_64_bit():
    seeds = [split_seed(0xC0FFEE, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s <= MASK64 for s in seeds)
    assert split_seed(0xC0FFEE, 5) == splitmix64(0xC0FFEE ^ 5)


def test_load_config_writes_defaults_when_missing(tmp_path):
    path = tmp_path / "lab_config.json"
    config = load_config(path)
    assert config == DEFAULT_CONFIG
    assert json.loads(path.read_text()) == DEFAULT_CONFIG


def test_load_config_merges_stored_values_over_defaults(tmp_path):
    path = tmp_path / "lab_config.json"
    path.write_text(json.dumps({"threads": 4, "acceptance": {"hitting_k1": 0.8}, "extra": 1}))
    config = load_config(path)
    assert config["threads"] == 4
    assert config["extra"] == 1
    assert config["acceptance"]["hitting_k1"] == 0.8
    assert config["acceptance"]["hitting_k2"] == DEFAULT_CONFIG["acceptance"]["hitting_k2"]
    assert config["default_seed"] == 0xC0FFEE


def test_load_config_without_create_leaves_disk_alone(tmp_path):
    path = tmp_path / "absent.json"
    load_config(path, create=False)
    assert not path.exists()


def test_normalize_experiment_name():
    assert normalize_experiment_name(" Hitting_Time run ") == "hitting-time-run"


def test_format_probability_uses_15_significant_digits():
    assert format_probability(1 / 3) == "0.333333333333333"
    assert format_probability(0.5) == "0.5"


def test_log_main_writes_dated_line(log_folder):
    log_main("hello lab")
    today = datetime.now().strftime("%Y-%m-%d")
    log_file = log_folder / "system" / "main" / f"main_{today}.log"
    line = log_file.read_text().strip()
    assert line.endswith(" | hello lab")
    datetime.strptime(line.split(" | ")[0], "%Y-%m-%d %H:%M:%S")


def test_slow_operation_also_warns_in_main_log(log_folder):
    log_operation_performance("sweep", "n=4096", 31.0)
    today = datetime.now().strftime("%Y-%m-%d")
    perf = (log_folder / "system" / "performance" / f"performance_{today}.log").read_text()
    main = (log_folder / "system" / "main" / f"main_{today}.log").read_text()
    assert "sweep | n=4096 | 31.00s | SUCCESS" in perf
    assert "WARNING SLOW OPERATION" in main


def test_experiment_log_folder_uses_normalized_name(log_folder):
    log_experiment("Hitting Time", "start")
    today = datetime.now().strftime("%Y-%m-%d")
    assert (log_folder / "experiments" / "hitting-time" / f"hitting-time_{today}.log").exists()


def test_log_rotator_deletes_only_expired_files(tmp_path):
    rotator = LogRotator(tmp_path / "logs", max_days=5)
    folder = rotator.get_system_log_folder("main")
    old = (datetime.now() - timedelta(days=10)).strftime("%Y-%m-%d")
    recent = (datetime.now() - timedelta(days=2)).strftime("%Y-%m-%d")
    (folder / f"main_{old}.log").write_text("old\n")
    (folder / f"main_{recent}.log").write_text("recent\n")
    (folder / "notes.txt").write_text("keep\n")

    assert rotator.cleanup_all_logs() == 1
    assert not (folder / f"main_{old}.log").exists()
    assert (folder / f"main_{recent}.log").exists()
    assert (folder / "notes.txt").exists()


def test_log_stats_counts_files_and_lines(tmp_path):
    rotator = LogRotator(tmp_path / "logs")
    folder = rotator.get_experiment_log_folder("sweep")
    (folder / "sweep_2026-10-17.log").write_text("a\nb\n")
    (folder / "sweep_2026-10-18.log").write_text("c\n")
    stats = rotator.get_log_stats(folder, "sweep")
    assert stats["total_files"] == 2
    assert stats["total_lines"] == 3
    assert stats["files"][0]["date"] == "2026-10-18"


def test_format_bytes():
    assert format_bytes(512) == "512.0 B"
    assert format_bytes(2048) == "2.0 KB"


def test_log_rotation_command_cleans_and_reports():
    runner = CliRunner()
    with runner.isolated_filesystem():
        rotator = LogRotator("logs", max_days=5)
        folder = rotator.get_experiment_log_folder("hitting")
        old = (datetime.now() - timedelta(days=30)).strftime("%Y-%m-%d")
        today = datetime.now().strftime("%Y-%m-%d")
        (folder / f"hitting_{old}.log").write_text("x\n")
        (folder / f"hitting_{today}.log").write_text("a\nb\n")

        result = runner.invoke(log_rotation_main, ["--cleanup", "--stats"])
        assert result.exit_code == 0
        assert "Deleted 1 expired log files" in result.output
        assert f"hitting_{today}.log" in result.output
        assert not (folder / f"hitting_{old}.log").exists()
