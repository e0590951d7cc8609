"""
Configuration management module for Virtual Qubit Machines.
Loads default machine parameters, search limits and logging settings from the
environment and an optional `.env` file.
"""
from pathlib import Path
import os
from typing import Optional

import psutil
from dotenv import load_dotenv

# Load .env from project root if present
BASE_DIR = Path(__file__).parent.absolute()
DOTENV_PATH = BASE_DIR / ".env"
if DOTENV_PATH.exists():
    load_dotenv(DOTENV_PATH)
else:
    # Try to load from environment automatically if present
    load_dotenv()


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


# Bath and resource defaults (k_B = hbar = 1)
DEFAULT_BETA_COLD: float = float(os.getenv("VQM_BETA_COLD", "0.2"))
DEFAULT_BETA_HOT: float = float(os.getenv("VQM_BETA_HOT", "0.05"))
DEFAULT_E_MAX: float = float(os.getenv("VQM_E_MAX", "2.0"))
DEFAULT_E_V: float = float(os.getenv("VQM_E_V", "1.0"))
DEFAULT_MODE: str = os.getenv("VQM_MODE", "fridge")

# Dynamics defaults
DEFAULT_TAU_BETA: float = float(os.getenv("VQM_TAU_BETA", "1.0"))
DEFAULT_TAU_SWAP: float = float(os.getenv("VQM_TAU_SWAP", "1.0"))
DEFAULT_TAU_S: float = float(os.getenv("VQM_TAU_S", "1.0"))

# Exhaustive search limits
BRUTE_FORCE_MAX_CONFIGS: int = int(os.getenv("VQM_BRUTE_FORCE_MAX_CONFIGS", str(10 ** 8)))
BRUTE_FORCE_MAX_LEVELS: int = int(os.getenv("VQM_BRUTE_FORCE_MAX_LEVELS", "6"))

# Sweep fan-out (0 = one worker per physical core)
SWEEP_WORKERS: int = int(os.getenv("VQM_SWEEP_WORKERS", "0"))

# Result tables
OUTPUT_SIGNIFICANT_DIGITS: int = int(os.getenv("VQM_OUTPUT_DIGITS", "12"))

# Logging configuration
LOG_DIR = Path(os.getenv("VQM_LOG_DIR", str(BASE_DIR / "logs")))
LOG_FILE = LOG_DIR / "virtual_qubit_machines.log"
LOG_MAX_BYTES = 10 * 1024 * 1024  # 10MB
LOG_BACKUP_COUNT = 5
LOG_LEVEL: str = os.getenv("VQM_LOG_LEVEL", "INFO").upper()
LOG_TO_FILE: bool = _env_flag("VQM_LOG_TO_FILE", "1")


def validate_config() -> tuple[bool, Optional[str]]:
    """
    Validate configuration settings.

    Returns:
        tuple: (is_valid, error_message)
    """
    if not DEFAULT_BETA_HOT < DEFAULT_BETA_COLD:
        return False, (
            f"VQM_BETA_HOT ({DEFAULT_BETA_HOT}) must be below VQM_BETA_COLD ({DEFAULT_BETA_COLD})"
        )
    if DEFAULT_BETA_HOT < 0:
        return False, "VQM_BETA_HOT must be non-negative"
    if not 0 < DEFAULT_E_V <= DEFAULT_E_MAX:
        return False, f"need 0 < VQM_E_V <= VQM_E_MAX, got E_v={DEFAULT_E_V}, E_max={DEFAULT_E_MAX}"
    if DEFAULT_MODE not in ("fridge", "engine"):
        return False, f"VQM_MODE must be 'fridge' or 'engine', got {DEFAULT_MODE!r}"
    for name, value in (
        ("VQM_TAU_BETA", DEFAULT_TAU_BETA),
        ("VQM_TAU_SWAP", DEFAULT_TAU_SWAP),
        ("VQM_TAU_S", DEFAULT_TAU_S),
    ):
        if not value > 0:
            return False, f"{name} must be positive, got {value}"
    if BRUTE_FORCE_MAX_CONFIGS < 1 or BRUTE_FORCE_MAX_LEVELS < 3:
        return False, "brute-force limits must allow at least one 3-level configuration"
    if SWEEP_WORKERS < 0:
        return False, "VQM_SWEEP_WORKERS must be >= 0"
    if not 1 <= OUTPUT_SIGNIFICANT_DIGITS <= 17:
        return False, "VQM_OUTPUT_DIGITS must lie in 1..17"

    return True, None


def get_sweep_workers() -> int:
    """
    Number of worker threads used for parameter sweeps.

    Returns:
        int: configured count, or the number of physical cores when unset
    """
    if SWEEP_WORKERS > 0:
        return SWEEP_WORKERS
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, int(cores))
