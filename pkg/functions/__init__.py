"""
Here you will find the functions shared by every package: the run logger, the
error hierarchy, seeded random streams and the file formats of the harness.
"""

from .errors import StageError, ValidationError, DivergedError, ExhaustedError
from .logger import log_separator, log_workflow_step, log_run_event
from .helper_functions import RandomStreams, make_streams, ordered_sum, random_quaternion
