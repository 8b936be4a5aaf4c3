"""
Errors raised while building graphs and boundary conditions.
"""

from typing import Any, Dict, List, Optional

from qgraph.exceptions.base import ComputationError


class GraphError(ComputationError):
    error_type = "graph_error"


class EmptyGraph(GraphError):
    """Raised when a graph description has no edges."""

    error_type = "empty_graph"

    def __init__(self, message: str = "A metric graph needs at least one edge", **kwargs):
        super().__init__(message=message, details=[{"type": self.error_type, "msg": message}], **kwargs)


class NonPositiveLength(GraphError):
    """Raised when an edge length is zero, negative or not finite."""

    error_type = "non_positive_length"

    def __init__(self, edge: Optional[int] = None, length: Optional[float] = None, **kwargs):
        self.edge = edge
        self.length = length
        message = f"Edge {edge} has invalid length {length!r}; lengths must be positive and finite"
        super().__init__(
            message=message,
            details=[{"type": self.error_type, "msg": message, "loc": ["edges", str(edge), "length"]}],
            **kwargs,
        )


class DanglingVertexReference(GraphError):
    """Raised when an edge references a vertex id outside 0..V-1."""

    error_type = "dangling_vertex_reference"

    def __init__(self, edge: Optional[int] = None, vertex: Optional[int] = None, vertex_count: int = 0, **kwargs):
        self.edge = edge
        self.vertex = vertex
        message = f"Edge {edge} references vertex {vertex}, but the graph has {vertex_count} vertices"
        super().__init__(
            message=message,
            details=[{"type": self.error_type, "msg": message, "loc": ["edges", str(edge)]}],
            **kwargs,
        )


class IndexOutOfRange(GraphError):
    """Raised for an edge-end index outside 0..2E-1."""

    error_type = "index_out_of_range"

    def __init__(self, index: Any = None, size: int = 0, **kwargs):
        self.index = index
        message = f"Edge-end index {index} outside 0..{size - 1}"
        super().__init__(message=message, details=[{"type": self.error_type, "msg": message}], **kwargs)


class CutoffTooLarge(GraphError):
    """Raised when orbit enumeration exceeds the configured cap."""

    error_type = "cutoff_too_large"

    def __init__(self, n_max: int = 0, cap: int = 0, reached_length: int = 0, **kwargs):
        self.n_max = n_max
        self.cap = cap
        message = (
            f"Orbit enumeration exceeded the cap of {cap} orbits at topological length "
            f"{reached_length} (requested n_max={n_max})"
        )
        super().__init__(message=message, details=[{"type": self.error_type, "msg": message}], **kwargs)


class BoundaryConditionError(ComputationError):
    error_type = "boundary_condition_error"

    def __init__(
        self,
        message: str = "Invalid boundary conditions",
        details: Optional[List[Dict[str, Any]]] = None,
        **values: Any,
    ):
        for name, value in values.items():
            setattr(self, name, value)
        if not details:
            details = [{"type": self.error_type, "msg": message, **values}]
        super().__init__(message=message, details=details)


class RankDeficient(BoundaryConditionError):
    """Raised when the pair (A, B) does not have maximal rank 2E."""

    error_type = "rank_deficient"

    def __init__(self, rank: int = 0, required: int = 0, **kwargs):
        super().__init__(
            message=f"(A, B) has numerical rank {rank}, but rank {required} is required",
            rank=rank,
            required=required,
            **kwargs,
        )


class ABStarNotSelfAdjoint(BoundaryConditionError):
    """Raised when A B* deviates from its adjoint beyond tolerance."""

    error_type = "ab_star_not_self_adjoint"

    def __init__(self, deviation: float = 0.0, tolerance: float = 0.0, **kwargs):
        super().__init__(
            message=f"A B* is not self-adjoint: deviation {deviation:.3e} exceeds {tolerance:.3e}",
            deviation=float(deviation),
            tolerance=float(tolerance),
            **kwargs,
        )


class NonLocalBlocks(BoundaryConditionError):
    """Raised when declared locality is violated by entries coupling different vertices."""

    error_type = "non_local_blocks"

    def __init__(self, max_offblock: float = 0.0, **kwargs):
        super().__init__(
            message=f"A or B couples edge ends of different vertices (max entry {max_offblock:.3e})",
            max_offblock=float(max_offblock),
            **kwargs,
        )


class RankDecisionAmbiguous(BoundaryConditionError):
    """Raised when a singular value falls inside the ambiguity band around the threshold."""

    error_type = "rank_decision_ambiguous"

    def __init__(self, singular_value: float = 0.0, threshold: float = 0.0, **kwargs):
        super().__init__(
            message=(
                f"Cannot decide numerical rank: singular value {singular_value:.3e} lies "
                f"too close to the threshold {threshold:.3e}"
            ),
            singular_value=float(singular_value),
            threshold=float(threshold),
            **kwargs,
        )


class ParameterCountMismatch(BoundaryConditionError):
    """Raised when a factory receives the wrong number of parameters for a vertex."""

    error_type = "parameter_count_mismatch"

    def __init__(self, kind: str = "", expected: int = 0, received: int = 0, **kwargs):
        super().__init__(
            message=f"{kind} conditions need {expected} parameters, received {received}",
            kind=kind,
            expected=expected,
            received=received,
            **kwargs,
        )
