"""
Job configuration: what to compute, on which graph, with which cutoffs.

A job file either embeds the graph document or points at one:

    {"graph": "star.json", "k_max": 60, "n_max": 12, "test_fn": "gaussian", "t": 0.05}

A plain graph document is also accepted as a job file; every job parameter
then takes its default. Command-line flags override the file.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from qgraph.config import Settings, settings
from qgraph.core.traceformula import TraceIdentity
from qgraph.exceptions import ConfigParseError, MissingInputFile
from qgraph.logging import get_logger
from qgraph.schemas.graph import BoundaryDocument, GraphDocument, parse_graph_document, read_json

logger = get_logger("schemas.job", metadata={"component": "job"})


class TestFunctionName(str, Enum):
    """Built-in test functions"""

    # keep pytest from collecting this class
    __test__ = False

    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


class JobConfig(BaseModel):
    """Parameters of one qgraph invocation"""

    graph: Optional[Union[str, GraphDocument]] = Field(
        None, description="Graph document, inline or as a path relative to the job file"
    )
    boundary: Optional[BoundaryDocument] = Field(None, description="Overrides the graph document's boundary block")
    k_max: float = Field(default_factory=lambda: settings.QGRAPH_KMAX, gt=0)
    n_max: int = Field(default_factory=lambda: settings.QGRAPH_NMAX, ge=1)
    t: float = Field(default_factory=lambda: settings.QGRAPH_T, gt=0)
    a: float = Field(default_factory=lambda: settings.QGRAPH_CAUCHY_A, gt=0)
    test_fn: TestFunctionName = TestFunctionName.GAUSSIAN
    identity: TraceIdentity = TraceIdentity.TF2
    t_values: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.1, 0.5])
    weyl_points: int = Field(50, ge=1)
    spectrum: Optional[str] = Field(None, description="Stored spectrum.json to reuse instead of solving")
    samples: int = Field(100, ge=1, description="Random samples per identity check")
    seed: int = 0
    pretrace: bool = False
    pretrace_l_max: int = Field(8, ge=0)
    tolerances: Dict[str, float] = Field(default_factory=dict, description="QGRAPH_* overrides")
    out: Optional[str] = None

    @field_validator("identity", mode="before")
    @classmethod
    def _heat_alias(cls, value: Any) -> Any:
        return TraceIdentity.TF3 if value == "heat" else value

    @field_validator("t_values")
    @classmethod
    def _positive_times(cls, value: List[float]) -> List[float]:
        if not value or any(t <= 0 for t in value):
            raise ValueError("heat-trace times must be a non-empty list of positive numbers")
        return value

    @field_validator("tolerances")
    @classmethod
    def _known_positive(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, number in value.items():
            if name not in Settings.model_fields or not name.startswith("QGRAPH_"):
                raise ValueError(f"unknown setting {name}")
            if number <= 0:
                raise ValueError(f"{name} must be positive")
        return value

    def apply_tolerances(self, target: Settings = settings) -> None:
        """Write the QGRAPH_* overrides into the process settings."""
        for name, value in self.tolerances.items():
            field_type = Settings.model_fields[name].annotation
            setattr(target, name, field_type(value))
        if self.tolerances:
            logger.info("Applied numerical overrides", metadata=dict(self.tolerances))


class Job(BaseModel):
    """A validated job with its graph document resolved."""

    config: JobConfig
    document: GraphDocument
    base_dir: str

    def resolve(self, path: Optional[str]) -> Optional[Path]:
        if path is None:
            return None
        candidate = Path(path)
        return candidate if candidate.is_absolute() else Path(self.base_dir) / candidate


def load_job(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> Job:
    """
    Read a job or graph file and apply command-line overrides.

    Raises:
        MissingInputFile: the job file, or a file it references, does not exist
        ConfigParseError: a document does not validate; the message names the key
    """
    path = Path(path)
    data = read_json(path)
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}

    if "vertices" in data and "edges" in data:
        document_data = data
        job_data: Dict[str, Any] = {}
    else:
        document_data = None
        job_data = data
    job_data = {**job_data, **overrides}

    try:
        config = JobConfig.model_validate(job_data)
    except ValidationError as exc:
        raise ConfigParseError.from_validation_error(exc)

    if document_data is not None:
        document = parse_graph_document(document_data)
    elif isinstance(config.graph, GraphDocument):
        document = config.graph
    elif isinstance(config.graph, str):
        graph_path = Path(config.graph)
        if not graph_path.is_absolute():
            graph_path = path.parent / graph_path
        document = parse_graph_document(read_json(graph_path))
    else:
        raise ConfigParseError(message="Job file names no graph", key="graph")

    if config.boundary is not None:
        document = document.model_copy(update={"boundary": config.boundary})
    if document.boundary is None:
        raise ConfigParseError(message="No boundary conditions given", key="boundary")

    job = Job(config=config, document=document, base_dir=str(path.parent))
    if config.spectrum is not None and not job.resolve(config.spectrum).is_file():
        raise MissingInputFile(path=str(job.resolve(config.spectrum)))
    logger.debug("Loaded job", metadata={"path": str(path), "vertices": document.vertices})
    return job
