"""Session orchestration: configs, gaze events, the real-time loop,
run records with digest replay, the network service, and the CLI."""

from .config import SessionConfig
from .events import GazeEvent
from .loop import Simulator, run_scripted, run_multi_observer
from .record import RunRecord, verify_record

__all__ = ["SessionConfig", "GazeEvent", "Simulator", "run_scripted",
           "run_multi_observer", "RunRecord", "verify_record"]
