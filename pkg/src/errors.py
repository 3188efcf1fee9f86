"""Domain errors for the metric engine.

Each error is a ValueError whose class name doubles as the report code. The
identifying fields are stored as attributes and rendered by report_line().
"""
from fractions import Fraction
from typing import Any, Tuple


def format_field(value: Any) -> str:
    """Render one report field."""
    if value is None:
        return '-'
    if isinstance(value, (list, tuple)):
        return ' '.join(format_field(v) for v in value)
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


class MetricError(ValueError):
    """Base class for all domain errors."""
    fields: Tuple[str, ...] = ()

    def __init__(self, *values: Any, message: str = ''):
        if len(values) != len(self.fields):
            raise TypeError(f"{type(self).__name__} expects {len(self.fields)} fields, got {len(values)}")
        for name, value in zip(self.fields, values):
            setattr(self, name, value)
        self.message = message
        super().__init__(message or self.report_line())

    def report_line(self) -> str:
        """Return '<Name> <field> ...' as written on the first report line."""
        parts = [type(self).__name__]
        parts.extend(format_field(getattr(self, name)) for name in self.fields)
        return ' '.join(p for p in parts if p != '')


# Matrices and spaces
class NotSquare(MetricError):
    fields = ('row', 'length', 'expected')


class NonzeroDiagonal(MetricError):
    fields = ('index',)


class AsymmetricMatrix(MetricError):
    fields = ('i', 'j')


class NegativeOrZeroOffDiagonal(MetricError):
    fields = ('i', 'j')


class TriangleViolation(MetricError):
    fields = ('i', 'j', 'k')


class NotFound(MetricError):
    pass


class NotAnIsometry(MetricError):
    fields = ('u', 'v')


class InvalidGlue(MetricError):
    fields = ('left', 'right')


class EmptySubset(MetricError):
    pass


# Graphs
class DisconnectedGraph(MetricError):
    fields = ('components',)


class SelfLoop(MetricError):
    fields = ('vertex',)


# Katetov maps
class LipschitzViolation(MetricError):
    fields = ('x', 'y')


class SumViolation(MetricError):
    fields = ('x', 'y')


class NegativeValue(MetricError):
    fields = ('x',)


class LengthMismatch(MetricError):
    fields = ('expected', 'actual')


class SupportMismatch(MetricError):
    fields = ('x',)


class BaseMismatch(MetricError):
    pass


class InfeasiblePartial(MetricError):
    fields = ('point', 'lower', 'upper')


# Constructions
class DuplicatePoint(MetricError):
    fields = ('existing',)


class BudgetExceeded(MetricError):
    fields = ('max_points',)


class AlphaTooLarge(MetricError):
    fields = ('alpha', 'alpha_max')


class NotNice(MetricError):
    fields = ('i', 'j')


class MarginViolated(MetricError):
    fields = ('point', 'value', 'bound')


class HypothesisViolated(MetricError):
    fields = ('reason',)


class TooShort(MetricError):
    fields = ('length',)


class SearchFailed(MetricError):
    fields = ('size',)


# Files
class FormatError(MetricError):
    fields = ('line', 'reason')
