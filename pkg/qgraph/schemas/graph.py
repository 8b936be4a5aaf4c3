"""
Graph documents: one JSON file per experiment holding the metric graph and
its boundary conditions. Complex matrix entries are [re, im] pairs.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from qgraph.core.boundary import BoundaryConditions, explicit, factory, validate
from qgraph.core.graph import MetricGraph, build_graph
from qgraph.exceptions import ConfigParseError, MissingInputFile
from qgraph.utils import matrix_from_pairs

MatrixEntry = Union[float, List[float]]


class EdgeDocument(BaseModel):
    """Edge as written in the graph file"""

    model_config = ConfigDict(populate_by_name=True)

    initial: int = Field(..., alias="from", description="Vertex at x = 0")
    terminal: int = Field(..., alias="to", description="Vertex at x = length")
    length: float = Field(..., description="Edge length")


class BoundaryDocument(BaseModel):
    """Boundary-condition block: a factory name with parameters, or explicit A and B"""

    type: Literal["kirchhoff", "dirichlet", "neumann", "robin", "blocks", "explicit"]
    params: Dict[str, Any] = Field(default_factory=dict)
    A: Optional[List[List[MatrixEntry]]] = None
    B: Optional[List[List[MatrixEntry]]] = None

    @model_validator(mode="after")
    def _explicit_needs_matrices(self) -> "BoundaryDocument":
        if self.type == "explicit" and (self.A is None or self.B is None):
            raise ValueError("explicit boundary conditions need both A and B")
        return self

    def build(self, g: MetricGraph) -> BoundaryConditions:
        """
        Assemble and validate the boundary conditions on g.

        Raises:
            BoundaryConditionError: the pair is not admissible
        """
        if self.type == "explicit":
            bc = explicit(matrix_from_pairs(self.A), matrix_from_pairs(self.B), g)
        else:
            bc = factory(self.type, g, self.params)
        return validate(bc, g)


class GraphDocument(BaseModel):
    """
    {"vertices": V, "edges": [{"from", "to", "length"}], "boundary": {...}}
    """

    vertices: int = Field(..., ge=1, description="Number of vertices")
    edges: List[EdgeDocument] = Field(..., description="Edges with vertex ids in 0..V-1")
    boundary: Optional[BoundaryDocument] = None

    def to_graph(self) -> MetricGraph:
        return build_graph(self.vertices, [(e.initial, e.terminal, e.length) for e in self.edges])

    def to_boundary(self, g: Optional[MetricGraph] = None) -> BoundaryConditions:
        if self.boundary is None:
            raise ConfigParseError(message="Graph document has no boundary block", key="boundary")
        return self.boundary.build(g or self.to_graph())


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load a JSON object from disk.

    Raises:
        MissingInputFile: the file does not exist
        ConfigParseError: the file is not a JSON object
    """
    path = Path(path)
    if not path.is_file():
        raise MissingInputFile(path=str(path))
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            message=f"Malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        )
    if not isinstance(data, dict):
        raise ConfigParseError(message=f"{path} must contain a JSON object")
    return data


def parse_graph_document(data: Dict[str, Any]) -> GraphDocument:
    try:
        return GraphDocument.model_validate(data)
    except ValidationError as exc:
        raise ConfigParseError.from_validation_error(exc)


def load_graph_document(path: Union[str, Path]) -> GraphDocument:
    return parse_graph_document(read_json(path))
