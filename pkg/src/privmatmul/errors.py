"""Exception hierarchy.

Two families matter to callers: ``ConfigError`` (bad parameters, CLI exit
code 2) and ``ProtocolError`` (a run or plan violated an invariant, exit
code 1).
"""


class PrivMatMulError(Exception):
    pass


class ConfigError(PrivMatMulError, ValueError):
    pass


class ProtocolError(PrivMatMulError):
    pass


# field_core
class NotPrime(ConfigError):
    pass


class DivideByZero(PrivMatMulError, ZeroDivisionError):
    pass


class DimMismatch(PrivMatMulError, ValueError):
    pass


class FieldMismatch(PrivMatMulError, ValueError):
    pass


class SingularSystem(PrivMatMulError, ValueError):
    pass


# scheme_core
class KOutOfRange(ConfigError):
    pass


class FieldTooSmall(ConfigError):
    pass


class BadTheta(ConfigError):
    pass


class BadDims(ConfigError):
    pass


class ZeroEvaluationPoint(ConfigError):
    pass


# query_planner
class PlanInfeasible(ProtocolError):
    pass


# server_sim
class DivisibilityError(ProtocolError):
    pass


class UnknownBlock(ProtocolError):
    pass


class WrongServer(ProtocolError):
    pass


class EmptyRequest(ProtocolError):
    pass


# decoder
class NotEnoughAnswers(ProtocolError):
    pass


class MissingSideInfo(ProtocolError):
    pass


class IncompleteDownload(ProtocolError):
    pass


class DecodeError(ProtocolError):
    pass


# cost_analysis
class BadFactorization(ConfigError):
    pass


class AlphaOutOfRange(ConfigError):
    pass


# harness
class InsufficientTrials(ConfigError):
    pass
