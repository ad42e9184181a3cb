# -*- coding: utf-8 -*-
"""
Various exceptions.

Every exception raised on purpose by this package derives from
``LissnasError``; the ``exit_code`` class attribute is what the command
line runtime reports back to the shell when one of these terminates a
command.
"""

from __future__ import absolute_import

__all__ = [
    'LissnasError',
    'RuntimeAbort',

    'ConfigError',
    'ParseError',
    'SpecViolation',
    'EmptyBenchmark',
    'SchemaMismatch',

    'SpaceMismatch',
    'TooLarge',
    'NoLegalMove',
    'RejectionOverflow',
    'LengthMismatch',
    'EmptySnapshot',
    'SnapshotTooLarge',
    'SingularSystem',
    'DomainError',

    'MissingKey',
    'MissingKeyStorm',

    'BudgetError',
    'BudgetExhaustedBeforeFirstIteration',

    'DegenerateStatistic',
    'ZeroVariance',
    'TooFewObservations',
    'TooFew',
    'EmptyInput',
]


class LissnasError(Exception):
    """
    Root of all errors raised by lissnas.
    """

    exit_code = 1


class RuntimeAbort(LissnasError):
    """
    An expected unrecoverable condition encountered by a runtime.
    """


class ConfigError(LissnasError, ValueError):
    exit_code = 2


class ParseError(ConfigError):
    """
    A malformed input file; carries the offending line number.
    """

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        self.message = message
        super(ParseError, self).__init__(
            '%s:%d: %s' % (path, lineno, message))


class SpecViolation(ConfigError):
    """
    An architecture that is not valid under the search space spec.
    """


class EmptyBenchmark(ConfigError):
    pass


class SchemaMismatch(ConfigError):
    pass


class SpaceMismatch(LissnasError, ValueError):
    pass


class TooLarge(LissnasError, ValueError):
    pass


class NoLegalMove(LissnasError):
    """
    No atomic change keeps the architecture valid.
    """


class RejectionOverflow(LissnasError):
    pass


class LengthMismatch(LissnasError, ValueError):
    pass


class EmptySnapshot(LissnasError, ValueError):
    pass


class SnapshotTooLarge(LissnasError):
    pass


class SingularSystem(LissnasError):
    pass


class DomainError(LissnasError, ValueError):
    pass


class MissingKey(LissnasError, KeyError):
    exit_code = 3

    def __str__(self):
        # KeyError quotes its argument; keep the message readable.
        return Exception.__str__(self)


class MissingKeyStorm(LissnasError):
    exit_code = 3


class BudgetError(LissnasError):
    exit_code = 4


class BudgetExhaustedBeforeFirstIteration(BudgetError):
    pass


class DegenerateStatistic(LissnasError):
    exit_code = 5


class ZeroVariance(DegenerateStatistic):
    pass


class TooFewObservations(DegenerateStatistic):
    pass


class TooFew(DegenerateStatistic):
    pass


class EmptyInput(DegenerateStatistic):
    pass
