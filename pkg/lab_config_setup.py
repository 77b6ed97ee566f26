"""
lab_config_setup.py - Interactive Configuration Setup
Creates or updates lab_config.json. Press Enter at any prompt to keep the
current value.
"""

import json
from pathlib import Path

from lab_utils import CONFIG_FILE, DEFAULT_CONFIG, load_config


def get_input_with_default(prompt, default_value, value_type=str):
    """Get user input with existing value as default"""
    if default_value is not None:
        if value_type == bool:
            default_str = "Y" if default_value else "N"
            display_prompt = f"{prompt} [{default_str}]: "
        elif value_type == int and prompt.lower().endswith("seed"):
            display_prompt = f"{prompt} [{hex(default_value)}]: "
        else:
            display_prompt = f"{prompt} [{default_value}]: "
    else:
        display_prompt = f"{prompt}: "

    user_input = input(display_prompt).strip()

    if not user_input and default_value is not None:
        return default_value

    if value_type in (int, float):
        try:
            return int(user_input, 0) if value_type == int else float(user_input)
        except ValueError:
            print(f"⚠ Invalid input, using default: {default_value}")
            return default_value
    elif value_type == bool:
        if user_input.upper() in ['Y', 'YES']:
            return True
        elif user_input.upper() in ['N', 'NO']:
            return False
        return default_value

    return user_input if user_input else default_value


def print_summary(config: dict):
    print("=" * 60)
    print("▶ Configuration Summary")
    print("=" * 60)
    print(f"▶ Default seed: {hex(config['default_seed'])}")
    print(f"▶ Worker processes: {config['threads']}")
    print(f"▶ Eigensolver tolerance: {config['eigen_tolerance']}")
    print(f"▶ Brute force: sets up to size {config['brute_force_max_size']}, "
          f"budget {config['brute_force_budget']:,} sets")
    print(f"▶ Product vertex cap: {config['vertex_cap']:,}")
    print(f"▶ Construction: lambda factor {config['lambda_ceiling_factor']}, "
          f"{config['construction_max_retries']} retries")
    print(f"□ Log folder: {config['log_folder']} ({config['log_retention_days']} days kept)")

    print("\n▶ ACCEPTANCE GATES:")
    for name, value in config["acceptance"].items():
        print(f"  • {name}: {value}")
    print("=" * 60)


def setup_config(path=CONFIG_FILE):
    """View the current configuration or walk through every setting"""
    path = Path(path)
    existing_config = json.loads(json.dumps(DEFAULT_CONFIG))

    if path.exists():
        print("=" * 60)
        print("▶ Existing configuration found")
        print("  [V] View configuration")
        print("  [R] Re-run setup")
        choice = input("\nYour choice [V/R]: ").strip().upper()

        if choice == "V":
            try:
                print_summary(load_config(path, create=False))
            except (OSError, ValueError, KeyError) as e:
                print(f"⚠ Could not read configuration: {e}")
            return None
        elif choice == "R":
            print("\n▶ Re-running setup...")
            print("▶ Press Enter to keep existing values, or type new values\n")
            try:
                existing_config = load_config(path, create=False)
            except (OSError, ValueError) as e:
                print(f"⚠ Could not load existing config: {e}")
        else:
            print("⚠ Unknown choice, nothing changed")
            return None

    config = dict(existing_config)
    config["default_seed"] = get_input_with_default("Default seed", existing_config["default_seed"], int)
    config["threads"] = max(1, get_input_with_default("Worker processes", existing_config["threads"], int))
    config["eigen_tolerance"] = get_input_with_default(
        "Eigensolver tolerance", existing_config["eigen_tolerance"], float)
    config["brute_force_max_size"] = get_input_with_default(
        "Brute force max set size", existing_config["brute_force_max_size"], int)
    config["brute_force_budget"] = get_input_with_default(
        "Brute force budget (sets)", existing_config["brute_force_budget"], int)
    config["vertex_cap"] = get_input_with_default("Product vertex cap", existing_config["vertex_cap"], int)
    config["lambda_ceiling_factor"] = get_input_with_default(
        "Construction lambda factor (x sqrt(d1))", existing_config["lambda_ceiling_factor"], float)
    config["construction_max_retries"] = get_input_with_default(
        "Construction retries", existing_config["construction_max_retries"], int)
    config["log_folder"] = get_input_with_default("Log folder", existing_config["log_folder"])
    config["log_retention_days"] = get_input_with_default(
        "Days of logs to keep", existing_config["log_retention_days"], int)

    if get_input_with_default("Edit acceptance gates?", False, bool):
        config["acceptance"] = {
            name: get_input_with_default(f"  {name}", value, float)
            for name, value in existing_config["acceptance"].items()
        }

    with open(path, "w") as f:
        json.dump(config, f, indent=4)

    print(f"\n✅ Configuration saved to {path}")
    print_summary(config)
    return config


if __name__ == "__main__":
    setup_config()
