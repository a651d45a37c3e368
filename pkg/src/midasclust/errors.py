"""Exception types shared across the package.

The CLI maps these onto exit codes, so each carries a coarse category.
"""


class MidasError(Exception):
    """Base class for all package errors."""


class InvalidConfig(MidasError, ValueError):
    pass


class DimensionMismatch(MidasError, ValueError):
    pass


class EmptyRow(MidasError, ValueError):
    pass


class DegenerateSample(MidasError, ValueError):
    pass


class RankDeficient(MidasError, ArithmeticError):
    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class GroupRankDeficient(RankDeficient):
    def __init__(self, group, condition_number=float("inf")):
        super().__init__(f"pooled design of group {group} is singular", condition_number)
        self.group = group


class SingularGammaUpdate(RankDeficient):
    pass


class SingularDesign(RankDeficient):
    pass


class TooFewColumns(MidasError, ValueError):
    pass


class SubjectSetMismatch(MidasError, ValueError):
    pass


class SchemaError(MidasError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
