"""
Structured lab errors.

Every error carries a stable ``code`` (the class name) and the CLI exit code it maps to.
The CLI renders them as ``[code] message``.
"""

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


class LabError(Exception):
    """Base class for all domain errors raised by the lab."""

    exit_code = EXIT_RUNTIME

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        self.code = code or type(self).__name__

    def __str__(self) -> str:
        return f"[{self.code}] {self.args[0]}"


class InvalidSymbol(LabError):
    exit_code = EXIT_INVALID_INPUT


class PatchTooLarge(LabError):
    """Raised when a patch would exceed the vertex cap, or is too small for a construction."""

    exit_code = EXIT_INVALID_INPUT

    def __init__(self, message: str, required_radius: int | None = None, vertex_count: int | None = None):
        super().__init__(message)
        self.required_radius = required_radius
        self.vertex_count = vertex_count


class GenerationError(LabError):
    """Face gluing reached a state a regular hyperbolic tiling cannot produce."""


class EmptyDual(LabError):
    pass


class TruncatedBoundary(LabError):
    exit_code = EXIT_INVALID_INPUT


class UnstableClassification(LabError):
    def __init__(self, message: str, candidates: tuple[str, ...]):
        super().__init__(message)
        self.candidates = candidates


class MappingNotFound(LabError):
    pass


class InvalidSweepSpec(LabError):
    exit_code = EXIT_INVALID_INPUT


class EstimatorDegenerate(LabError):
    pass


class MissingEstimates(LabError):
    exit_code = EXIT_INVALID_INPUT


class InvalidConfig(LabError):
    exit_code = EXIT_INVALID_INPUT


class GraphFormatError(LabError):
    exit_code = EXIT_INVALID_INPUT
