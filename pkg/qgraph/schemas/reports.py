"""
Documents written by the command-line tool, and the CSV renderings that
accompany them. Floats in CSV files carry 17 significant digits; JSON floats
use the shortest round-trip form, so a stored spectrum re-ingests bit-exact.
"""

import csv
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel, Field, ValidationError

from qgraph.config import settings
from qgraph.core.identities import IdentityReport
from qgraph.core.spectrum import Spectrum
from qgraph.core.traceformula import ConvergenceRow, HeatAsymptotics, TraceIdentity, TraceReport
from qgraph.exceptions import ConfigParseError
from qgraph.schemas.graph import read_json
from qgraph.utils import format_float


class RunMetadata(BaseModel):
    """Provenance echoed into every report"""

    run_id: str
    command: str
    version: str = Field(default_factory=lambda: settings.VERSION)
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    numerics: Dict[str, Any] = Field(default_factory=settings.numerics)


class SpectrumDocument(BaseModel):
    """spectrum.json"""

    run: RunMetadata
    graph: Dict[str, Any]
    boundary: Dict[str, Any]
    spectrum: Spectrum
    weyl: List[Dict[str, Any]] = Field(default_factory=list)


class VerifyDocument(BaseModel):
    """report.json of `qgraph verify`"""

    run: RunMetadata
    identity: TraceIdentity
    graph: Dict[str, Any]
    reports: List[TraceReport] = Field(default_factory=list)
    asymptotics: Optional[HeatAsymptotics] = None
    warnings: List[str] = Field(default_factory=list)


class CheckDocument(BaseModel):
    """identities.json of `qgraph check`"""

    run: RunMetadata
    graph: Dict[str, Any]
    passed: bool
    failures: List[str]
    identities: IdentityReport


def write_json(document: BaseModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(document.model_dump_json(indent=2))
    return path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return path


def spectrum_rows(spectrum: Spectrum) -> List[List[Any]]:
    """Rows (k, multiplicity, sign); negative eigenvalues -kappa^2 are listed by kappa."""
    rows: List[List[Any]] = [[ev.kappa, ev.multiplicity, "negative"] for ev in spectrum.negative]
    if spectrum.zero.g0:
        rows.append([0, spectrum.zero.g0, "zero"])
    rows.extend([ev.k, ev.multiplicity, "positive"] for ev in spectrum.positive)
    return rows


def write_spectrum_csv(spectrum: Spectrum, path: Union[str, Path]) -> Path:
    return write_csv(path, ["k", "multiplicity", "sign"], spectrum_rows(spectrum))


def write_weyl_csv(rows: List[Dict[str, Any]], path: Union[str, Path]) -> Path:
    return write_csv(
        path,
        ["K", "N", "weyl", "deviation"],
        ([row["K"], row["N"], row["weyl"], row["deviation"]] for row in rows),
    )


def write_convergence_csv(rows: List[ConvergenceRow], path: Union[str, Path], cutoff: str = "cutoff") -> Path:
    return write_csv(
        path,
        [cutoff, "lhs", "rhs", "residual", "tail_bound"],
        ([row.cutoff if cutoff == "t" else int(row.cutoff), row.lhs, row.rhs, row.residual, row.tail_bound]
         for row in rows),
    )


def read_spectrum(path: Union[str, Path]) -> Spectrum:
    """
    Re-ingest a spectrum.json written by `qgraph spectrum`.

    Raises:
        MissingInputFile: the file does not exist
        ConfigParseError: the file is not a spectrum document
    """
    data = read_json(path)
    try:
        return SpectrumDocument.model_validate(data).spectrum
    except ValidationError as exc:
        raise ConfigParseError.from_validation_error(exc, message=f"{path} is not a spectrum document")
