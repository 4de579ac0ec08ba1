import os
from pathlib import Path

from dotenv import load_dotenv

ROOT_PATH = Path(__file__).parent.parent

load_dotenv(ROOT_PATH / ".env")

# Run outputs (stable states, paths, metrics, adjacency)
OUTPUT_PATH = Path(os.environ.get("STAGE_OUTPUT_DIR", "STAGE_Data/runs"))

# Daily run logs, never inside the output folder
LOGS_PATH = Path(os.environ.get("STAGE_LOG_DIR", ROOT_PATH / "logs"))

# Built-in scene definitions
SCENES_FILE = ROOT_PATH / "config" / "scenes.yaml"

DEFAULT_WORKERS = int(os.environ.get("STAGE_WORKERS", "1"))
