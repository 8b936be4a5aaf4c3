from qgraph.schemas.graph import (
    BoundaryDocument,
    EdgeDocument,
    GraphDocument,
    load_graph_document,
    parse_graph_document,
    read_json,
)
from qgraph.schemas.job import Job, JobConfig, TestFunctionName, load_job
from qgraph.schemas.reports import (
    CheckDocument,
    RunMetadata,
    SpectrumDocument,
    VerifyDocument,
    read_spectrum,
    spectrum_rows,
    write_convergence_csv,
    write_json,
    write_spectrum_csv,
    write_weyl_csv,
)

__all__ = [
    "BoundaryDocument",
    "EdgeDocument",
    "GraphDocument",
    "load_graph_document",
    "parse_graph_document",
    "read_json",
    "Job",
    "JobConfig",
    "TestFunctionName",
    "load_job",
    "CheckDocument",
    "RunMetadata",
    "SpectrumDocument",
    "VerifyDocument",
    "read_spectrum",
    "spectrum_rows",
    "write_convergence_csv",
    "write_json",
    "write_spectrum_csv",
    "write_weyl_csv",
]
