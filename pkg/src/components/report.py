from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

from src.errors import MetricError

OK = 0
FAILED = 1
USAGE = 2


@dataclass
class CommandResult:
    """Outcome of one shell command: exit code, report lines, files written."""
    exit_code: int = OK
    lines: List[str] = field(default_factory=list)
    artifacts: List[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.exit_code == OK

    def add(self, *lines: str) -> 'CommandResult':
        self.lines.extend(lines)
        return self

    def wrote(self, path) -> 'CommandResult':
        self.artifacts.append(Path(path))
        return self

    def fail_unless(self, passed: bool) -> 'CommandResult':
        if not passed:
            self.exit_code = FAILED
        return self

    @classmethod
    def from_error(cls, error: MetricError) -> 'CommandResult':
        return cls(FAILED, [error.report_line()])

    def decorated(self, color: bool) -> Tuple[str, ...]:
        """Status marker for the terminal; empty when color is off."""
        if not color:
            return ()
        return ('✓' if self.ok else '✗',)
