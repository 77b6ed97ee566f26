"""
log_rotation.py - Retention for the lab's dated log files

Every log lives in its own folder and is named <name>_YYYY-MM-DD.log:
  - logs/system/main/main_2026-10-18.log
  - logs/system/performance/performance_2026-10-18.log
  - logs/experiments/<kind>/<kind>_2026-10-18.log

Nothing is renamed. Files past the retention window are deleted the first
time a log is written on a new day.
"""

import re
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterator, Tuple

import click

SYSTEM_LOGS = ("main", "performance")


def _dated_files(folder: Path, name: str) -> Iterator[Tuple[Path, str]]:
    """(path, YYYY-MM-DD) for every <name>_<date>.log in folder, newest first"""
    if not folder.is_dir():
        return
    pattern = re.compile(rf"^{re.escape(name)}_(\d{{4}}-\d{{2}}-\d{{2}})\.log$")
    matches = []
    for path in folder.glob(f"{name}_*.log"):
        match = pattern.match(path.name)
        if match:
            matches.append((path, match.group(1)))
    yield from sorted(matches, key=lambda item: item[1], reverse=True)


class LogRotator:
    """Applies the retention window to system and experiment logs"""

    def __init__(self, log_folder: Path, max_days: int = 5):
        self.log_folder = Path(log_folder)
        self.max_days = max_days
        self.last_cleanup_date: date = datetime.now().date()
        self.system_folder = self.log_folder / "system"
        self.experiments_folder = self.log_folder / "experiments"
        self.system_folder.mkdir(parents=True, exist_ok=True)
        self.experiments_folder.mkdir(parents=True, exist_ok=True)

    def get_system_log_folder(self, log_name: str) -> Path:
        folder = self.system_folder / log_name
        folder.mkdir(parents=True, exist_ok=True)
        return folder

    def get_experiment_log_folder(self, experiment_name: str) -> Path:
        """experiment_name must already be normalized ('hitting', 'sweep', ...)"""
        folder = self.experiments_folder / experiment_name
        folder.mkdir(parents=True, exist_ok=True)
        return folder

    def log_folders(self) -> Iterator[Tuple[Path, str]]:
        """Every (folder, base name) pair the lab writes to"""
        for log_name in SYSTEM_LOGS:
            yield self.system_folder / log_name, log_name
        if self.experiments_folder.is_dir():
            for folder in sorted(self.experiments_folder.iterdir()):
                if folder.is_dir():
                    yield folder, folder.name

    def cleanup_old_logs(self, folder: Path, base_name: str) -> int:
        """Delete dated files older than max_days, returning how many went"""
        cutoff = (datetime.now().date() - timedelta(days=self.max_days)).isoformat()
        deleted = 0
        for path, day in _dated_files(folder, base_name):
            # ISO dates order as strings
            if day >= cutoff:
                continue
            try:
                path.unlink()
                deleted += 1
            except OSError as e:
                click.echo(f"Error deleting {path.name}: {e}", err=True)
        return deleted

    def cleanup_all_logs(self) -> int:
        deleted = sum(self.cleanup_old_logs(folder, name) for folder, name in self.log_folders())
        self.last_cleanup_date = datetime.now().date()
        return deleted

    def check_and_rotate_if_needed(self) -> bool:
        """Run cleanup_all_logs once per calendar day; True when it ran"""
        if datetime.now().date() > self.last_cleanup_date:
            self.cleanup_all_logs()
            return True
        return False

    def get_log_stats(self, folder_path: Path, log_name: str) -> dict:
        files = []
        for path, day in _dated_files(folder_path, log_name):
            with open(path, "r", encoding="utf-8", errors="ignore") as f:
                lines = sum(1 for _ in f)
            files.append({"name": path.name, "date": day, "size": path.stat().st_size, "lines": lines})
        return {
            "log_name": log_name,
            "folder": folder_path,
            "total_files": len(files),
            "total_size": sum(f["size"] for f in files),
            "total_lines": sum(f["lines"] for f in files),
            "files": files,
        }


def format_bytes(bytes_size: float) -> str:
    for unit in ("B", "KB", "MB", "GB"):
        if bytes_size < 1024.0:
            return f"{bytes_size:.1f} {unit}"
        bytes_size /= 1024.0
    return f"{bytes_size:.1f} TB"


@click.command()
@click.option("--cleanup", is_flag=True, help="Delete logs past the retention window now.")
@click.option("--stats", is_flag=True, help="Show file counts and sizes per log.")
def main(cleanup: bool, stats: bool):
    """Inspect or prune the lab's dated log files."""
    from lab_utils import load_config

    config = load_config()
    root = Path(config["log_folder"])
    rotator = LogRotator(root, max_days=config["log_retention_days"])

    if cleanup:
        click.echo(f"Deleted {rotator.cleanup_all_logs()} expired log files "
                   f"(retention {rotator.max_days} days)")
    if stats:
        for folder, name in rotator.log_folders():
            info = rotator.get_log_stats(folder, name)
            if not info["total_files"]:
                continue
            click.echo(f"{folder.relative_to(root)}/  {info['total_files']} files, "
                       f"{format_bytes(info['total_size'])}, {info['total_lines']:,} lines")
            for entry in info["files"][:5]:
                click.echo(f"    {entry['name']}: {format_bytes(entry['size'])}, {entry['lines']:,} lines")
            if len(info["files"]) > 5:
                click.echo(f"    ... and {len(info['files']) - 5} more")
    if not (cleanup or stats):
        click.echo(click.get_current_context().get_help())


if __name__ == "__main__":
    main()
