"""
lab_logging.py - Dated log files for the lab modules

  logs/system/main/main_YYYY-MM-DD.log               general events
  logs/system/performance/performance_YYYY-MM-DD.log timings
  logs/experiments/{name}/{name}_YYYY-MM-DD.log      per-experiment events
"""

import threading
from datetime import datetime
from pathlib import Path

from lab_utils import get_current_log_file, normalize_experiment_name
from log_rotation import LogRotator

SLOW_OPERATION_SECONDS = 30

_lock = threading.Lock()
_rotator = None
_log_folder = Path("logs")
_max_days = 5


def configure_logging(log_folder, max_days: int = 5):
    """Point every log function at log_folder (created lazily on first write)"""
    global _rotator, _log_folder, _max_days
    with _lock:
        _log_folder = Path(log_folder)
        _max_days = max_days
        _rotator = None


def _get_rotator() -> LogRotator:
    global _rotator
    if _rotator is None:
        _rotator = LogRotator(_log_folder, max_days=_max_days)
    return _rotator


def _append(log_file: Path, msg: str):
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    with open(log_file, "a", encoding="utf-8") as f:
        f.write(f"{timestamp} | {msg}\n")


def log_main(msg: str):
    with _lock:
        rotator = _get_rotator()
        rotator.check_and_rotate_if_needed()
        _append(get_current_log_file(rotator.get_system_log_folder("main"), "main"), msg)


def log_performance(msg: str):
    """Performance log - ONLY timings"""
    with _lock:
        rotator = _get_rotator()
        rotator.check_and_rotate_if_needed()
        _append(get_current_log_file(rotator.get_system_log_folder("performance"), "performance"), msg)


def log_experiment(experiment_name: str, msg: str):
    """Experiment-specific log"""
    normalized_name = normalize_experiment_name(experiment_name)
    with _lock:
        rotator = _get_rotator()
        rotator.check_and_rotate_if_needed()
        folder = rotator.get_experiment_log_folder(normalized_name)
        _append(get_current_log_file(folder, normalized_name), msg)


def log_operation_performance(name: str, operation: str, duration: float, success: bool = True):
    status = "SUCCESS" if success else "FAILED"
    log_performance(f"{name} | {operation} | {duration:.2f}s | {status}")

    if duration > SLOW_OPERATION_SECONDS:
        log_main(f"WARNING SLOW OPERATION: {name} - {operation} took {duration:.2f}s")
