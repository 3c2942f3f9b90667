import numpy as np

__all__ = ['eps', 'VCError', 'DimensionError', 'RankDeficient', 'DegenerateModel', 'DegenerateData',
           'DomainError', 'ParseError', 'SchemaError', 'OrderError', 'ConfigError', 'NumericalError',
           'DivisionByZero', 'SingularTransform', 'QuadratureFailure', 'ModeSearchFailure', 'StudyFailure']

eps = np.finfo(np.float64).eps.item()


class VCError(Exception):
    """ Base class of every error raised by vclib. exit_code is the CLI status it maps to. """
    exit_code = 2


class ConfigError(VCError, ValueError):
    exit_code = 1


class DimensionError(VCError, ValueError):
    pass


class RankDeficient(VCError):
    pass


class DegenerateModel(VCError):
    """ The random effect carries no identifiable information (a single distinct eigenvalue). """
    pass


class DomainError(VCError, ValueError):
    pass


class ParseError(VCError):
    def __init__(self, message, line=None):
        if line is not None:
            message = 'line {}: {}'.format(line, message)
        super(ParseError, self).__init__(message)
        self.line = line


class SchemaError(VCError):
    pass


class OrderError(VCError):
    pass


class NumericalError(VCError):
    exit_code = 3


class DegenerateData(NumericalError):
    """ Residual variation vanishes in some stratum, so ratio statistics are undefined. """
    exit_code = 2


class DivisionByZero(NumericalError, ZeroDivisionError):
    pass


class SingularTransform(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class ModeSearchFailure(NumericalError):
    pass


class StudyFailure(NumericalError):
    pass
