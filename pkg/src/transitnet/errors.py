"""Exception hierarchy.

Everything raised on purpose by this package derives from ``TransitNetError``.
``DataError`` marks problems with the input data (CLI exit code 2); the rest
are contract violations by the caller.
"""


class TransitNetError(Exception):
    """Base class for all package errors."""


class DataError(TransitNetError, ValueError):
    """Input data cannot be used as given."""


class ConfigError(TransitNetError, ValueError):
    """Invalid configuration."""


# ingest
class IngestError(DataError):
    pass


class MissingInput(IngestError):
    pass


class MalformedRow(IngestError):
    pass


class MalformedLeg(IngestError):
    pass


class BadTimestamp(IngestError):
    pass


class UnknownMode(IngestError):
    pass


class BadCoordinate(IngestError):
    pass


# cluster
class KTooLarge(DataError):
    pass


class EmptyInput(DataError):
    pass


# frequency
class EmptyCounts(DataError):
    pass


class ConstantSeries(DataError):
    pass


# graph
class DegenerateFlows(DataError):
    pass


class UnmappedStation(DataError):
    pass


# metrics / community / robustness
class TooFewNodes(DataError):
    pass


class TooFewValues(DataError):
    pass


class NotEnoughNodes(DataError):
    pass


class EmptySample(DataError):
    pass


class EmptyGraph(DataError):
    pass


class PartialAssignment(DataError):
    pass


class NoValidComponent(DataError):
    pass


class GraphTooSmall(DataError):
    pass


# oracle
class InvalidConfig(ConfigError):
    pass


class InstanceTooLarge(TransitNetError, ValueError):
    pass
