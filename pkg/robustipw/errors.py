"""
Exception hierarchy shared by every module; each class carries the CLI exit code.
"""


class IpwError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class ConfigurationError(IpwError):
    """Missing columns, unknown options, out-of-range settings"""

    exit_code = 2


class DataParseError(IpwError):
    """A cell could not be read as a finite number"""

    exit_code = 3


class DataValidationError(IpwError):
    """Parsed data violates a domain rule (e.g. treatment outside {0,1})"""

    exit_code = 3


class ContractError(IpwError, ValueError):
    """A precondition of an operation was violated by the caller"""

    exit_code = 4


class EstimationError(IpwError):
    """A model or estimator could not be computed on the given sample"""

    exit_code = 5


class SeparationError(EstimationError):
    """The binary-response likelihood has no finite maximiser"""

    exit_code = 5


class ThresholdError(IpwError):
    """The trimming-threshold equation has no solution"""

    exit_code = 6


class BandwidthError(IpwError):
    """Too few points inside the local polynomial window"""

    exit_code = 6


class ResamplingError(IpwError):
    """Too many subsampling replications failed"""

    exit_code = 7


class NumericalError(IpwError):
    """Quadrature or another numerical routine did not converge"""

    exit_code = 8


class DiagnosticError(IpwError):
    """A diagnostic statistic is undefined on the given input"""

    exit_code = 8


class DataFetchError(IpwError):
    """Downloading the public replication files failed"""

    exit_code = 9
