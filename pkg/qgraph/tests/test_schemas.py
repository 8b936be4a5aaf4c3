import csv
import json
import math

import pytest

from qgraph.config import Settings, settings
from qgraph.core import TraceIdentity
from qgraph.core.traceformula import ConvergenceRow
from qgraph.exceptions import ConfigParseError, MissingInputFile, RankDeficient
from qgraph.schemas import (
    GraphDocument,
    RunMetadata,
    SpectrumDocument,
    TestFunctionName,
    load_graph_document,
    load_job,
    read_json,
    read_spectrum,
    spectrum_rows,
    write_convergence_csv,
    write_json,
)


def test_graph_document_uses_from_and_to(interval_document):
    """Test that edges are read with their from/to aliases."""
    document = GraphDocument.model_validate(interval_document)
    g = document.to_graph()

    assert document.edges[0].initial == 0
    assert document.edges[0].terminal == 1
    assert g.V == 2 and g.E == 1
    assert g.lengths[0] == pytest.approx(math.pi)
    assert document.to_boundary(g).A.shape == (2, 2)


def test_missing_field_names_the_key(graph_file, interval_document):
    """Test that a validation error reports the failing location."""
    del interval_document["edges"][0]["length"]
    with pytest.raises(ConfigParseError) as excinfo:
        load_graph_document(graph_file(interval_document))

    assert excinfo.value.key == "edges.0.length"
    assert "edges.0.length" in excinfo.value.message
    assert excinfo.value.exit_code == 2


def test_explicit_boundary_needs_both_matrices(interval_document):
    """Test that an explicit block without B is refused."""
    interval_document["boundary"] = {"type": "explicit", "A": [[1, 0], [0, 1]]}
    with pytest.raises(ValueError, match="A and B"):
        GraphDocument.model_validate(interval_document)


def test_explicit_boundary_with_complex_entries(interval_document):
    """Test that [re, im] pairs and plain numbers both build the pair."""
    interval_document["boundary"] = {
        "type": "explicit",
        "A": [[[0.0, 0.0], 0], [0, 0]],
        "B": [[1, 0], [0, [1.0, 0.0]]],
    }
    bc = GraphDocument.model_validate(interval_document).to_boundary()
    assert bc.B[1, 1] == 1.0
    assert not bc.A.any()


def test_rank_deficient_explicit_boundary(interval_document):
    """Test that an explicit pair of rank one on two ends is refused."""
    interval_document["boundary"] = {"type": "explicit", "A": [[0, 0], [0, 0]], "B": [[1, 0], [0, 0]]}
    with pytest.raises(RankDeficient) as excinfo:
        GraphDocument.model_validate(interval_document).to_boundary()
    assert excinfo.value.exit_code == 1


def test_missing_boundary_block(interval_document):
    del interval_document["boundary"]
    with pytest.raises(ConfigParseError, match="boundary"):
        GraphDocument.model_validate(interval_document).to_boundary()


def test_read_json_errors(tmp_path):
    """Test missing files, malformed JSON and non-object documents."""
    with pytest.raises(MissingInputFile):
        read_json(tmp_path / "absent.json")

    broken = tmp_path / "broken.json"
    broken.write_text('{"vertices": 2,')
    with pytest.raises(ConfigParseError, match="Malformed JSON"):
        read_json(broken)

    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ConfigParseError, match="JSON object"):
        read_json(listing)


def test_plain_graph_document_is_a_job(graph_file, star_document):
    """Test that a graph file loads as a job with default parameters."""
    job = load_job(graph_file(star_document))

    assert job.document.vertices == 4
    assert job.config.k_max == settings.QGRAPH_KMAX
    assert job.config.identity == TraceIdentity.TF2
    assert job.config.test_fn == TestFunctionName.GAUSSIAN


def test_job_with_graph_reference_and_overrides(graph_file, star_document, interval_document):
    """Test a job pointing at a graph file, with its boundary replaced and flags applied."""
    graph_file(star_document, "star.json")
    path = graph_file(
        {"graph": "star.json", "k_max": 60, "n_max": 12, "boundary": {"type": "robin", "params": {"lambda": 1.0}}},
        "job.json",
    )
    job = load_job(path, {"k_max": 80.0, "n_max": None, "identity": "heat"})

    assert job.config.k_max == 80.0
    assert job.config.n_max == 12
    assert job.config.identity == TraceIdentity.TF3
    assert job.document.boundary.type == "robin"
    assert job.document.edges[2].length == 1.2


def test_job_with_inline_graph(graph_file, interval_document):
    job = load_job(graph_file({"graph": interval_document, "test_fn": "cauchy", "a": 2.0}))
    assert job.config.test_fn == TestFunctionName.CAUCHY
    assert job.document.boundary.type == "neumann"


def test_job_without_graph_or_boundary(graph_file, interval_document):
    """Test that a job must resolve to a graph with a boundary block."""
    with pytest.raises(ConfigParseError, match="graph"):
        load_job(graph_file({"k_max": 10}))

    del interval_document["boundary"]
    with pytest.raises(ConfigParseError, match="boundary"):
        load_job(graph_file({"graph": interval_document}))


def test_job_referencing_missing_files(graph_file, interval_document):
    with pytest.raises(MissingInputFile):
        load_job(graph_file({"graph": "nowhere.json"}))
    with pytest.raises(MissingInputFile):
        load_job(graph_file(interval_document), {"spectrum": "nowhere.json"})


@pytest.mark.parametrize(
    "tolerances",
    [{"QGRAPH_NOT_A_SETTING": 1.0}, {"LOG_LEVEL": 1.0}, {"QGRAPH_TAIL_TOL": -1.0}],
)
def test_tolerance_overrides_are_validated(graph_file, interval_document, tolerances):
    """Test that only known, positive QGRAPH_* settings can be overridden."""
    with pytest.raises(ConfigParseError) as excinfo:
        load_job(graph_file({"graph": interval_document, "tolerances": tolerances}))
    assert excinfo.value.key == "tolerances"


def test_heat_times_must_be_positive(graph_file, interval_document):
    with pytest.raises(ConfigParseError) as excinfo:
        load_job(graph_file({"graph": interval_document, "t_values": [0.1, 0.0]}))
    assert excinfo.value.key == "t_values"


def test_apply_tolerances(graph_file, interval_document):
    """Test that overrides are written into the settings with the field's type."""
    job = load_job(
        graph_file({"graph": interval_document, "tolerances": {"QGRAPH_TAIL_TOL": 1e-6, "QGRAPH_CONTOUR_POINTS": 128}})
    )
    target = Settings()
    job.config.apply_tolerances(target)

    assert target.QGRAPH_TAIL_TOL == 1e-6
    assert target.QGRAPH_CONTOUR_POINTS == 128
    assert isinstance(target.QGRAPH_CONTOUR_POINTS, int)


def test_spectrum_rows_list_zero_mode_first(neumann_interval):
    """Test the CSV rows of the Neumann interval."""
    rows = spectrum_rows(neumann_interval.solver.compute(3.5))
    assert rows[0] == [0, 1, "zero"]
    assert [row[2] for row in rows[1:]] == ["positive"] * 3
    assert [row[0] for row in rows[1:]] == pytest.approx([1.0, 2.0, 3.0], abs=1e-10)


def test_spectrum_rows_list_negative_eigenvalues_by_kappa(robin_interval):
    rows = spectrum_rows(robin_interval.solver.compute(2.0))
    negative = [row for row in rows if row[2] == "negative"]
    assert negative
    assert all(row[0] > 0 for row in negative)
    assert not any(row[2] == "zero" for row in rows)


def test_convergence_csv(tmp_path):
    """Test integer cutoffs for orbit lengths and float cutoffs for heat times."""
    rows = [
        ConvergenceRow(cutoff=2, lhs=1.5, rhs=1.25, residual=0.25, tail_bound=None),
        ConvergenceRow(cutoff=4, lhs=1.5, rhs=1.5, residual=0.0, tail_bound=1e-3),
    ]
    with open(write_convergence_csv(rows, tmp_path / "n.csv", "n"), newline="") as handle:
        table = list(csv.reader(handle))
    assert table[0] == ["n", "lhs", "rhs", "residual", "tail_bound"]
    assert table[1] == ["2", "1.5", "1.25", "0.25", ""]

    heat = [ConvergenceRow(cutoff=0.05, lhs=1.0, rhs=1.0, residual=0.0)]
    with open(write_convergence_csv(heat, tmp_path / "t.csv", "t"), newline="") as handle:
        table = list(csv.reader(handle))
    assert table[0][0] == "t"
    assert float(table[1][0]) == 0.05


def test_stored_spectrum_is_reused_bit_exact(tmp_path, kirchhoff_star):
    """Test that spectrum.json re-ingests to the same eigenvalues."""
    spectrum = kirchhoff_star.solver.compute(15.0)
    document = SpectrumDocument(
        run=RunMetadata(run_id="test", command="spectrum"),
        graph=kirchhoff_star.graph.describe(),
        boundary={"type": "kirchhoff"},
        spectrum=spectrum,
    )
    path = write_json(document, tmp_path / "spectrum.json")

    stored = read_spectrum(path)
    assert [ev.k for ev in stored.positive] == [ev.k for ev in spectrum.positive]
    assert stored.zero == spectrum.zero
    assert stored.k_max == spectrum.k_max
    assert json.loads(path.read_text())["run"]["numerics"]["QGRAPH_TAIL_TOL"] == settings.QGRAPH_TAIL_TOL


def test_read_spectrum_rejects_other_documents(graph_file, interval_document):
    with pytest.raises(ConfigParseError, match="not a spectrum document"):
        read_spectrum(graph_file(interval_document))
