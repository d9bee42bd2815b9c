"""Exception types shared by every part of the toolkit."""

from __future__ import annotations


class FusionError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FusionError):
    """Input violates a documented invariant or precondition."""


class BundleFormatError(FusionError):
    """App bundle directory is missing or structurally broken."""


class ParseError(FusionError):
    """An XML document could not be parsed."""

    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        self.file = file
        self.line = line
        if file is not None and line is not None:
            message = f"{file}:{line}: {message}"
        elif file is not None:
            message = f"{file}: {message}"
        super().__init__(message)


class ModelFormatError(FusionError):
    """App model document violates the model schema."""

    def __init__(self, message: str, field_path: str | None = None):
        self.field_path = field_path
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)


class DriverStateError(FusionError):
    """Device driver used in a state it does not allow."""


class ComponentNotPresentError(FusionError):
    """Target component is not on the current screen."""


class ActionNotSupportedError(FusionError):
    """Component does not support the requested action."""


class ExplorationError(FusionError):
    """Systematic exploration failed; the partial graph is preserved."""

    def __init__(self, message: str, partial_graph=None):
        self.partial_graph = partial_graph
        super().__init__(message)


class ReplayDivergenceError(FusionError):
    """Observed screen did not match the expected screen during replay."""

    def __init__(self, step_index: int, expected: str, observed: str):
        self.step_index = step_index
        self.expected = expected
        self.observed = observed
        super().__init__(
            f"divergence at step {step_index}: expected {expected}, observed {observed}"
        )


class NotFoundError(FusionError):
    """Requested app, document, or blob does not exist."""


class IntegrityError(FusionError):
    """A document references a blob that is not in the store."""


class StaleSuggestionError(FusionError):
    """Suggestion no longer matches the session's candidate screens."""


class SessionClosedError(FusionError):
    """Session was already finalized."""


class GapError(FusionError):
    """Report contains manual steps and cannot drive a replay script."""

    def __init__(self, manual_steps: list[int]):
        self.manual_steps = list(manual_steps)
        steps = ", ".join(str(n) for n in self.manual_steps)
        super().__init__(f"report has manual steps not backed by the app model: {steps}")
