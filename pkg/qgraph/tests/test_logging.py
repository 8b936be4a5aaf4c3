import json
import logging

import numpy as np
import pytest

from qgraph.logging import (
    ContextLoggerAdapter,
    add_metadata,
    clear_metadata,
    configure_logging,
    get_logger,
    get_metadata,
    get_run_id,
    set_run_id,
)
from qgraph.logging.formatter import JSONFormatter, LevelColorFormatter, flatten_metadata
from qgraph.logging.logger_config import build_logging_config


@pytest.fixture
def run_context():
    clear_metadata()
    set_run_id("run-1")
    yield
    set_run_id(None)
    clear_metadata()


def make_record(metadata=None):
    record = logging.LogRecord(
        name="qgraph.spectrum",
        level=logging.INFO,
        pathname="spectrum.py",
        lineno=12,
        msg="Located eigenvalues",
        args=(),
        exc_info=None,
    )
    record.run_id = "run-1"
    if metadata is not None:
        record.custom_metadata = metadata
    return record


def test_context_logger_creation():
    """Test that get_logger returns a context-aware adapter."""
    logger = get_logger("qgraph.test", metadata={"component": "test"})
    assert isinstance(logger, ContextLoggerAdapter)
    assert logger.logger.name == "qgraph.test"
    assert logger.module_metadata == {"component": "test"}


def test_records_carry_run_context(run_context, caplog):
    """Test that module, run and inline metadata are merged into each record."""
    logger = get_logger("qgraph.test", metadata={"component": "test"})
    add_metadata(command="spectrum")

    with caplog.at_level(logging.INFO):
        logger.info("Located eigenvalues", metadata={"count": 51})

    record = caplog.records[-1]
    assert record.run_id == "run-1"
    assert record.custom_metadata == {"component": "test", "command": "spectrum", "count": 51}


def test_run_metadata(run_context):
    add_metadata(command="verify")
    add_metadata(identity="tf2")
    assert get_run_id() == "run-1"
    assert get_metadata() == {"command": "verify", "identity": "tf2"}
    clear_metadata()
    assert get_metadata() == {}


def test_structured_event(run_context, caplog):
    logger = get_logger("qgraph.test")
    with caplog.at_level(logging.WARNING):
        logger.structured("warning", "Identity failed", identity="unitarity")
    assert caplog.records[-1].custom_metadata == {"identity": "unitarity"}


def test_flatten_metadata():
    """Test one-level flattening with numpy and complex values made plain."""
    flat = flatten_metadata({"k": np.float64(1.5), "pole": 1j, "fit": {"gamma": 0.5, "cond": np.int64(3)}})
    assert flat == {"k": 1.5, "pole": [0.0, 1.0], "fit_gamma": 0.5, "fit_cond": 3}
    assert isinstance(flat["fit_cond"], int)


def test_json_formatter():
    """Test that the JSON formatter lifts metadata into top-level fields."""
    formatter = JSONFormatter("%(message)s %(run_id)s")
    data = json.loads(formatter.format(make_record({"count": 51, "flags": {"verified": True}})))

    assert data["message"] == "Located eigenvalues"
    assert data["run_id"] == "run-1"
    assert data["count"] == 51
    assert data["flags_verified"] is True
    assert data["level"] == "INFO"
    assert data["logger"] == "qgraph.spectrum"
    assert "timestamp" in data
    assert "service" in data


def test_console_formatter_appends_metadata():
    formatter = LevelColorFormatter("%(colored_levelname)s %(message)s (%(shortpath)s:%(lineno)d)")
    formatter.use_colors = False

    line = formatter.format(make_record({"count": 51}))
    assert line == "INFO Located eigenvalues (spectrum.py:12) [count=51]"
    assert formatter.format(make_record()) == "INFO Located eigenvalues (spectrum.py:12)"


@pytest.mark.parametrize("style, formatter", [("console", "console"), ("json", "json")])
def test_build_logging_config(style, formatter):
    """Test that the style selects the stderr formatter."""
    config = build_logging_config("DEBUG", style)
    assert config["handlers"]["stderr"]["formatter"] == formatter
    assert config["handlers"]["stderr"]["stream"] == "ext://sys.stderr"
    assert config["root"]["level"] == "DEBUG"


def test_configure_logging_rejects_unknown_level():
    with pytest.raises(ValueError):
        configure_logging("LOUD", "console")
