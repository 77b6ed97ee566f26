import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from lab_logging import configure_logging  # noqa: E402


@pytest.fixture(autouse=True)
def log_folder(tmp_path):
    """Every test logs into its own temporary folder"""
    folder = tmp_path / "logs"
    configure_logging(folder)
    yield folder
    configure_logging(Path("logs"))
