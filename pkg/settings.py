# settings.py
# Environment-backed configuration for zt-ratsim

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables (.env in the working directory, if present)
load_dotenv()

REPO_ROOT = Path(__file__).resolve().parent

DATA_DIR = Path(os.getenv("ZT_RATSIM_DATA", str(REPO_ROOT / "data")))
DEFAULTS_FILE = "defaults.scn"
SCENARIO_DIR = "scenarios"

LOG_LEVEL = os.getenv("ZT_RATSIM_LOG_LEVEL", "WARNING").upper()
DEFAULT_SEED = int(os.getenv("ZT_RATSIM_SEED", "42"))
WORKERS = int(os.getenv("ZT_RATSIM_WORKERS", "0")) or (os.cpu_count() or 1)

BUILTIN_SCENARIOS = ("worked-example", "case-study", "figure-2", "portability-ladder")


def data_dir() -> Path:
    """Data directory, re-read from the environment so tests can override it."""
    return Path(os.getenv("ZT_RATSIM_DATA", str(DATA_DIR)))


def defaults_path() -> Path:
    return data_dir() / DEFAULTS_FILE


def scenario_path(name: str) -> Path:
    return data_dir() / SCENARIO_DIR / f"{name}.scn"
