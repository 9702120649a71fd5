import os
import logging
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Centralized logging configuration
def setup_logging(level=None):
    """
    Configure logging for the entire application.
    Sets up consistent logging format and level across all modules.

    Args:
        level: Optional logging level name or number. If None, LOG_LEVEL from
               the environment is used (default: INFO).
    """
    if level is None:
        level = os.getenv("LOG_LEVEL", "INFO")
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        force=True  # Override any existing logging configuration
    )

# Run defaults - Load from environment variables
# Simulation commands run desk-scale by default; the reference runs use 5,000,000 slots
DEFAULT_SLOTS = int(os.getenv("PC_DEFAULT_SLOTS", "1000000"))
DEFAULT_SEED = int(os.getenv("PC_DEFAULT_SEED", "2017"))
# Worker processes for sweep points (1 = run inline)
DEFAULT_WORKERS = int(os.getenv("PC_WORKERS", "1"))

# Solver defaults
# Stopping tolerance of the power bisection
DEFAULT_TOL = 1e-6
# Search upper bound for the transmission power when the config omits Pmax_w
DEFAULT_PMAX_W = 10.0

# PATH CONFIGURATION to centralize file paths
PROJECT_ROOT = Path(__file__).parent.parent  # Goes up from modules/ to project root
DATA_DIR = PROJECT_ROOT / "data"
CONFIGS_DIR = DATA_DIR / "configs"
RESULTS_DIR = Path(os.getenv("PC_RESULTS_DIR", str(DATA_DIR / "results")))

RESULTS_DIR.mkdir(parents=True, exist_ok=True)
