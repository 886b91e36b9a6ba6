"""Error hierarchy shared by every stage of the toolchain."""


class RomeError(Exception):
    """
    Base class for language errors.

    Carries an optional 1-based source position so diagnostics can be
    rendered as ``file:line:col: error: message``.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def at(self, pos: tuple[int, int] | None) -> 'RomeError':
        """Attach a position unless one is already known."""
        if pos is not None and self.line is None:
            self.line, self.col = pos
        return self

    def format(self, path: str = '<input>') -> str:
        if self.line is None:
            return f"{path}: error: {self.message}"
        return f"{path}:{self.line}:{self.col}: error: {self.message}"

    def __str__(self) -> str:
        return self.message


class ParseError(RomeError):
    """Lexical, syntactic or name-resolution failure."""


class KindError(RomeError):
    """A type does not have the kind its position demands."""


class TypeCheckError(RomeError):
    """A term does not have the type its position demands."""


class UnsolvablePredicate(TypeCheckError):
    """No evidence could be constructed for a row predicate."""

    def __init__(self, message: str, goal=None, facts=None, line=None, col=None):
        super().__init__(message, line, col)
        self.goal = goal
        self.facts = list(facts or [])


class OutOfFuel(RomeError):
    """Evaluation exceeded its step budget."""

    def __init__(self, message: str, steps: int = 0, term=None):
        super().__init__(message)
        self.steps = steps
        self.term = term


class InvariantBreach(RomeError):
    """An internal invariant failed. Always a bug in the toolchain."""


class StuckTerm(InvariantBreach):
    """A closed well-typed term that is not a value and cannot step."""
