"""Exception hierarchy.

Every error raised on bad input derives from :class:`VibronixError` so the
command line can map them to exit code 2 in one place.
"""


class VibronixError(Exception):
    pass


class DomainError(VibronixError, ValueError):
    """An argument lies outside the domain of the operation."""


class GridCoverageError(VibronixError, ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        listed = ", ".join(f"n={n} at {e:.4f} eV" for n, e in self.missing)
        super().__init__(f"grid does not cover peaks: {listed}")


class SpectrumParseError(VibronixError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class FitError(VibronixError, RuntimeError):
    """Base class for fitting failures."""


class ConvergenceError(FitError):
    def __init__(self, message, best=None, cost=None, iterations=None):
        self.best = best
        self.cost = cost
        self.iterations = iterations
        super().__init__(message)


class DegenerateFitError(FitError):
    pass


class IllConditionedError(FitError):
    pass


class NotALadderError(VibronixError, ValueError):
    pass


class InconsistencyError(VibronixError, ValueError):
    pass


class LatticeError(VibronixError, ValueError):
    pass
