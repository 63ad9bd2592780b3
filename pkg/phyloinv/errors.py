from __future__ import annotations

from typing import Optional


class PhyloInvError(ValueError):
    """Base class for validation and domain errors raised by the library."""


class NewickSyntaxError(PhyloInvError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"newick_syntax_error: pos={position} {message}")
        self.position = position


class TreeValidationError(PhyloInvError):
    pass


class ShapeMismatchError(PhyloInvError):
    pass


class ScalarModeError(PhyloInvError):
    pass


class ParamsError(PhyloInvError):
    pass


class RankViolationError(PhyloInvError):
    def __init__(self, message: str, rank: int) -> None:
        super().__init__(message)
        self.rank = rank


class TermCountGuardError(PhyloInvError):
    def __init__(self, estimate: int, guard: int) -> None:
        super().__init__(
            f"symbolic_term_guard_exceeded: estimated_terms={estimate} guard={guard}; "
            "use probe mode (numeric Z matrices) for this flattening"
        )
        self.estimate = estimate
        self.guard = guard


class BaseSetRequiredError(PhyloInvError):
    pass


class FormatError(PhyloInvError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"format_error: {prefix}{message}")
        self.line = line
