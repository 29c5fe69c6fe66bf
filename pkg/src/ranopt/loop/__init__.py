"""Closed-loop control: commands, epochs, rollback and reports."""
from .commands import Command, CommandLog, validate_command
from .runner import (ClosedLoop, KpiSnapshot, LoopReport, prepare_models,
                     rollback_if_worse, run_closed_loop)

__all__ = ["Command", "CommandLog", "validate_command", "ClosedLoop",
           "KpiSnapshot", "LoopReport", "prepare_models",
           "rollback_if_worse", "run_closed_loop"]
