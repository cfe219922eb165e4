"""Exception hierarchy for portflow.

Every validation failure raises a dedicated subclass so callers (and the
CLI exit-code mapping) can tell structural problems apart from numerical
ones without parsing messages.
"""


class PortflowError(Exception):
    """Base class for all portflow errors."""


# -- graph construction -------------------------------------------------

class GraphError(PortflowError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class DisconnectedError(GraphError):
    pass


class UnknownVertexError(GraphError):
    pass


# -- edge dynamics -------------------------------------------------------

class HyperbolicityError(PortflowError):
    pass


class NotStrictlyHyperbolicError(HyperbolicityError):
    pass


class ZeroEigenvalueError(HyperbolicityError):
    pass


class SignChangeError(HyperbolicityError):
    pass


class SingularBasisError(HyperbolicityError):
    """Riemann basis determinant below the admissible floor."""


# -- vertex conditions / global assembly ---------------------------------

class BoundaryConditionError(PortflowError):
    pass


class WrongRowCountError(BoundaryConditionError):
    pass


class LocallyUnsolvableError(BoundaryConditionError):
    pass


class GloballyUnsolvableError(BoundaryConditionError):
    pass


class CountMismatchError(BoundaryConditionError):
    """Outgoing-trace bookkeeping broke an identity that valid inputs cannot break."""


# -- flow solver ----------------------------------------------------------

class FlowError(PortflowError):
    pass


class NonpositiveSpeedError(FlowError):
    pass


class WindowExceededError(FlowError):
    pass


class BadExponentError(FlowError):
    pass


# -- resolvent ------------------------------------------------------------

class ResolventError(PortflowError):
    pass


class SingularBoundaryMatrixError(ResolventError):
    pass


# -- scenario builders ------------------------------------------------------

class ScenarioError(PortflowError):
    pass


class BadCoefficientError(ScenarioError):
    pass


class SubcriticalError(ScenarioError):
    pass


class NotOrthogonalError(ScenarioError):
    pass


class WrongDimensionsError(ScenarioError):
    pass


# -- configuration / CLI ------------------------------------------------------

class ConfigError(PortflowError):
    pass


class ParseError(ConfigError):
    pass
