"""
qgraph exceptions
=================

A single hierarchy rooted at QGraphError:
- ConfigurationError (exit code 2): unreadable or invalid job documents
- ComputationError (exit code 1): graph, boundary-condition and numerical
  failures

Every error carries a unique id, a message and structured details, and can
be serialized with `to_dict()`.

Usage
-----

```python
from qgraph.exceptions import RankDeficient

raise RankDeficient(rank=1, required=2)
```

```python
from qgraph.exceptions import ConfigParseError
from pydantic import ValidationError

try:
    JobConfig.model_validate(raw)
except ValidationError as exc:
    raise ConfigParseError.from_validation_error(exc)
```
"""

from qgraph.exceptions.base import (
    QGraphError,
    ConfigurationError,
    ComputationError,
    ErrorDetail,
    ErrorResponse,
)
from qgraph.exceptions.domain import (
    GraphError,
    EmptyGraph,
    NonPositiveLength,
    DanglingVertexReference,
    IndexOutOfRange,
    CutoffTooLarge,
    BoundaryConditionError,
    RankDeficient,
    ABStarNotSelfAdjoint,
    NonLocalBlocks,
    RankDecisionAmbiguous,
    ParameterCountMismatch,
)
from qgraph.exceptions.numerical import (
    NumericalError,
    PoleProximity,
    TrackingLoss,
    DegenerateBranch,
    ContourThroughZero,
    EigenvalueClusterAmbiguous,
    QuadratureNotConverged,
    ConditionViolated,
    TailNotControlled,
    FitIllConditioned,
    IdentityCheckFailed,
)
from qgraph.exceptions.validation import ConfigParseError, MissingInputFile
from qgraph.exceptions.utils import (
    format_exception,
    capture_exception,
    error_context,
    exit_code_for,
)

__all__ = [
    "QGraphError",
    "ConfigurationError",
    "ComputationError",
    "ErrorDetail",
    "ErrorResponse",
    "GraphError",
    "EmptyGraph",
    "NonPositiveLength",
    "DanglingVertexReference",
    "IndexOutOfRange",
    "CutoffTooLarge",
    "BoundaryConditionError",
    "RankDeficient",
    "ABStarNotSelfAdjoint",
    "NonLocalBlocks",
    "RankDecisionAmbiguous",
    "ParameterCountMismatch",
    "NumericalError",
    "PoleProximity",
    "TrackingLoss",
    "DegenerateBranch",
    "ContourThroughZero",
    "EigenvalueClusterAmbiguous",
    "QuadratureNotConverged",
    "ConditionViolated",
    "TailNotControlled",
    "FitIllConditioned",
    "IdentityCheckFailed",
    "ConfigParseError",
    "MissingInputFile",
    "format_exception",
    "capture_exception",
    "error_context",
    "exit_code_for",
]
