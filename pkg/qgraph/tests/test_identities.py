import json
from unittest.mock import patch

import pytest

from qgraph.core import GaussianTestFunction, IdentitySuite
from qgraph.core.identities import IdentityResult

CHECKS = [
    "unitarity",
    "inverse_relation",
    "direct_representation",
    "s_prime",
    "inversion",
    "norm_bounds",
    "expansions",
    "functional_equation",
    "theta_prime",
    "orbit_oracle",
]


def test_identity_suite_passes_on_kirchhoff_star(kirchhoff_star):
    """Test that every sampled identity holds on the Kirchhoff 3-star."""
    report = IdentitySuite(kirchhoff_star.evaluator).run()

    assert [result.name for result in report.results] == CHECKS
    assert report.passed, report.failures
    unitarity = next(r for r in report.results if r.name == "unitarity")
    assert unitarity.max_residual < 1e-12
    assert unitarity.samples == 200
    assert report.expansions["constant"] is True


def test_identity_suite_passes_on_robin_interval(robin_interval):
    """Test the suite on the Robin interval, where S depends on k."""
    report = IdentitySuite(robin_interval.evaluator, samples=100, seed=1).run()

    assert report.passed, report.failures
    functional = next(r for r in report.results if r.name == "functional_equation")
    assert functional.samples == 100
    assert functional.max_residual < 1e-10
    norms = next(r for r in report.results if r.name == "norm_bounds")
    assert norms.details["regimes"] == ["strip", "far"]
    assert report.canonical["d_plus"] == 2


def test_theta_prime_check_reports_skipped_degeneracies(neumann_interval):
    """Test the eigenphase-derivative check on the Neumann interval."""
    result = IdentitySuite(neumann_interval.evaluator, samples=10).theta_prime()
    assert result.passed
    assert result.details["out_of_bounds"] == 0


def test_pretrace_is_added_with_spectrum(neumann_interval):
    """Test that the pre-trace comparison runs when a spectrum and a test function are supplied."""
    h = GaussianTestFunction(0.05)
    spectrum = neumann_interval.solver.compute(neumann_interval.trace.required_kmax(h) * 1.001)
    report = IdentitySuite(neumann_interval.evaluator, samples=10).run(spectrum=spectrum, h=h, pretrace_l_max=4)

    assert report.results[-1].name == "pretrace"
    assert report.results[-1].passed
    assert report.results[-1].details["l_max"] == 4


def test_failed_identity_is_reported(kirchhoff_star):
    """Test that a failing check shows up in the failures list."""
    failing = IdentityResult(name="unitarity", passed=False, max_residual=1.0, tolerance=1e-12, samples=1)
    with patch.object(IdentitySuite, "unitarity", return_value=failing):
        report = IdentitySuite(kirchhoff_star.evaluator, samples=10).run()

    assert not report.passed
    assert report.failures == ["unitarity"]


def test_identity_report_serializes(robin_interval):
    """Test that the report, canonical data and expansions are JSON-serializable."""
    report = IdentitySuite(robin_interval.evaluator, samples=5).run()
    data = json.loads(report.model_dump_json())
    assert data["expansions"]["constant"] is False
    assert len(data["expansions"]["large_k"]["k"]) == 2
    assert isinstance(data["canonical"]["P"][0][0], list)


@pytest.mark.parametrize("samples", [1, 20])
def test_sampling_is_reproducible(kirchhoff_star, samples):
    """Test that a fixed seed gives identical residuals."""
    first = IdentitySuite(kirchhoff_star.evaluator, samples=samples, seed=4).inverse_relation()
    second = IdentitySuite(kirchhoff_star.evaluator, samples=samples, seed=4).inverse_relation()
    assert first.max_residual == second.max_residual
