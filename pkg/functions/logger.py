"""
Simple logging utility for tracking sampling, planning and evaluation runs.
Logs are saved to the logs/ folder with daily rotation, never next to run outputs.
"""

from datetime import datetime

from config.paths import LOGS_PATH


def get_log_file():
    """Get today's log file path."""
    today = datetime.now().strftime("%Y-%m-%d")
    return LOGS_PATH / f"stage_log_{today}.txt"


def _append(entry: str):
    LOGS_PATH.mkdir(parents=True, exist_ok=True)
    with open(get_log_file(), "a", encoding="utf-8") as f:
        f.write(entry)


def _truncate(value, limit: int) -> str:
    text = str(value)
    if len(text) > limit:
        text = text[:limit] + "..."
    return text


def log_separator(label: str = ""):
    """Add a visual separator in the log for a new command or run."""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    _append(f"\n{'='*60}\n[{timestamp}] === {label} ===\n{'='*60}\n")


def log_workflow_step(step: str, details: str = ""):
    """Log a coarse workflow step (e.g., 'SAMPLE: spheres_ramp m=26')."""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    entry = f"[{timestamp}] [WORKFLOW] {step}"
    if details:
        entry += f" | {_truncate(details, 200)}"
    _append(entry + "\n")


def log_run_event(event: str, scene: str = "", method: str = "", seed=None, **kwargs):
    """
    Unified logging for the sampling / planning workflow.

    Events:
        HEADER - Start of a run (creates separator)
        START - Initial info (budget, |C_s|, root id)
        STABLE_OK / STABLE_FAIL - One stable-state attempt
        ITERATION - Periodic tree progress
        TREE_DONE - Tree statistics
        PATHS - Extraction / filtering counts
        METRICS - Metrics report
        BUDGET - Budget parity record
        SAVED - Output written
        ERROR / WARNING - Something went wrong
    """
    timestamp = datetime.now().strftime("%H:%M:%S")

    if event == "HEADER":
        header = f"{method.upper()}: {scene} / seed {seed}"
        entry = f"\n{'='*60}\n[{timestamp}] === {header} ===\n{'='*60}\n"
    elif event == "ITERATION":
        entry = (f"[{timestamp}]   └─ iter {kwargs.get('iteration', 0)} "
                 f"| nodes {kwargs.get('nodes', 0)} | active {kwargs.get('active', 0)}\n")
    else:
        details_parts = [f"{k}: {_truncate(v, 300)}" for k, v in kwargs.items()]
        details_str = " | ".join(details_parts)
        prefix = f"{scene}/{method}/{seed} " if scene else ""
        entry = f"[{timestamp}] {event} {prefix}{'| ' + details_str if details_str else ''}\n"

    _append(entry)
