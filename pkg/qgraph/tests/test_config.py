import pytest

from qgraph.config import Settings, get_settings, settings


def test_get_settings_returns_the_process_settings():
    assert get_settings() is settings


def test_numerics_only_lists_qgraph_fields():
    """Test that the report echo holds every numerical default and nothing else."""
    numerics = settings.numerics()
    assert numerics
    assert all(name.startswith("QGRAPH_") for name in numerics)
    assert numerics["QGRAPH_TAIL_TOL"] == settings.QGRAPH_TAIL_TOL
    assert "LOG_LEVEL" not in numerics


def test_environment_overrides(monkeypatch):
    """Test that QGRAPH_* environment variables reach a fresh Settings object."""
    monkeypatch.setenv("QGRAPH_KMAX", "75")
    monkeypatch.setenv("QGRAPH_CONTOUR_POINTS", "512")
    fresh = Settings()
    assert fresh.QGRAPH_KMAX == 75.0
    assert fresh.QGRAPH_CONTOUR_POINTS == 512


@pytest.mark.parametrize("environment, local", [("local", True), ("test", True), ("production", False)])
def test_is_local(environment, local):
    assert Settings(ENVIRONMENT=environment).IS_LOCAL is local
