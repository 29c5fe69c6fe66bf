"""Configuration commands: validation and the audit log."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError
from ..simcore.types import ACTUATABLE_FIELDS, Scenario


@dataclass
class Command:
    cell_id: str
    fields: dict
    issued_by: str
    epoch: int
    command_id: int | None = None

    def is_noop(self) -> bool:
        return not self.fields

    def to_dict(self) -> dict:
        return {"command_id": self.command_id, "epoch": self.epoch,
                "cell_id": self.cell_id, "issued_by": self.issued_by,
                "fields": dict(sorted(self.fields.items()))}


def validate_command(cmd: Command, scenario: Scenario) -> None:
    """Whitelist + range check against the target cell; empty deltas pass."""
    for name in cmd.fields:
        if name not in ACTUATABLE_FIELDS:
            raise ValidationError(
                f"field {name!r} is not actuatable "
                f"(allowed: {', '.join(ACTUATABLE_FIELDS)})")
    trial = scenario.cell(cmd.cell_id).replace(**cmd.fields)
    trial.validate()


@dataclass
class CommandLog:
    """Assigns monotone command ids and keeps every applied command."""
    entries: list = field(default_factory=list)
    _next_id: int = 0

    def record(self, cmd: Command) -> Command:
        cmd.command_id = self._next_id
        self._next_id += 1
        self.entries.append(cmd)
        return cmd

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.entries]
