"""
Here you will find the configuration of the engine, for example:

Numeric defaults of the simulator, solver and planner, the output folders and
the built-in scenes.
"""

from .paths import OUTPUT_PATH, LOGS_PATH, SCENES_FILE, DEFAULT_WORKERS
from .constants import DT, ACTION_DURATION, N_MAX, M_STABLE
