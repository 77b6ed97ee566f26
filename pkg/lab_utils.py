"""
lab_utils.py - Utility Functions Module
Common utility functions used throughout the lab: config loading, dated log
file names, experiment name normalisation and per-trial seed splitting.
"""

import json
from datetime import datetime
from pathlib import Path

CONFIG_FILE = "lab_config.json"

DEFAULT_SEED = 0xC0FFEE
MASK64 = 0xFFFFFFFFFFFFFFFF

DEFAULT_CONFIG = {
    "default_seed": DEFAULT_SEED,
    "threads": 1,
    "eigen_tolerance": 1e-8,
    "brute_force_max_size": 6,
    "brute_force_budget": 5_000_000,
    "vertex_cap": 1 << 22,
    "lambda_ceiling_factor": 2.1,
    "construction_max_retries": 50,
    "log_folder": "logs",
    "log_retention_days": 5,
    "acceptance": {
        "hitting_k1": 0.9,
        "hitting_k2": 0.85,
        "structure_k1": 0.9,
        "structure_k2": 0.85,
        "tightness_separation": 0.5,
        "reference_separation_max": 0.1,
        "threshold_ratio_min": 1.1,
        "threshold_ratio_max_product": 1.03,
    },
}


class LabError(Exception):
    """Base class for every error raised by the lab modules"""


def load_config(path=CONFIG_FILE, create: bool = True) -> dict:
    """
    Load the lab configuration, merged over the defaults

    Args:
        path: Path to the JSON config file
        create: Write the defaults to disk when the file does not exist

    Returns:
        Configuration dictionary
    """
    path = Path(path)
    config = json.loads(json.dumps(DEFAULT_CONFIG))

    if path.exists():
        with open(path, "r") as f:
            stored = json.load(f)
        acceptance = dict(config["acceptance"])
        acceptance.update(stored.get("acceptance", {}))
        config.update(stored)
        config["acceptance"] = acceptance
    elif create:
        with open(path, "w") as f:
            json.dump(config, f, indent=4)

    return config


def normalize_experiment_name(name: str) -> str:
    """Convert an experiment name to lowercase kebab-case"""
    return name.strip().lower().replace("_", "-").replace(" ", "-")


def get_current_log_file(folder: Path, name: str) -> Path:
    """Get current log file with today's date"""
    date_str = datetime.now().strftime("%Y-%m-%d")
    return folder / f"{name}_{date_str}.log"


def splitmix64(x: int) -> int:
    """One splitmix64 output for state x (64-bit wrap-around arithmetic)"""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def split_seed(base_seed: int, index: int) -> int:
    """Seed of stream `index` derived from base_seed: splitmix64(base_seed XOR index)"""
    return splitmix64((base_seed ^ index) & MASK64)


def format_probability(p: float) -> str:
    """Probabilities are printed with 15 significant digits"""
    return f"{p:.15g}"
