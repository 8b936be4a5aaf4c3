from unittest.mock import patch

import pytest
from pydantic import BaseModel, Field, ValidationError

import qgraph.exceptions.utils as exception_utils
from qgraph.exceptions import (
    ComputationError,
    ConfigParseError,
    ConfigurationError,
    EmptyGraph,
    IdentityCheckFailed,
    MissingInputFile,
    NonPositiveLength,
    PoleProximity,
    QGraphError,
    RankDeficient,
    TailNotControlled,
    capture_exception,
    error_context,
    exit_code_for,
    format_exception,
)


class Sample(BaseModel):
    name: str
    length: float = Field(gt=0)


def test_exit_codes_follow_the_hierarchy():
    """Test that configuration errors exit with 2 and computation errors with 1."""
    assert ConfigParseError().exit_code == 2
    assert MissingInputFile("job.json").exit_code == 2
    assert isinstance(MissingInputFile("job.json"), ConfigurationError)
    assert RankDeficient(rank=1, required=2).exit_code == 1
    assert isinstance(EmptyGraph(), ComputationError)
    assert QGraphError("custom", exit_code=3).exit_code == 3


def test_exception_to_dict():
    """Test the dictionary form of a domain error."""
    exc = NonPositiveLength(edge=2, length=-1.0)
    data = exc.to_dict()

    assert data["error_id"] == exc.error_id
    assert data["exit_code"] == 1
    assert data["error_type"] == "non_positive_length"
    assert "-1.0" in data["message"]
    assert data["details"][0]["loc"] == ["edges", "2", "length"]


def test_exception_to_response():
    """Test that details become typed ErrorDetail entries."""
    response = ConfigParseError(message="Bad value", key="boundary.params.mu").to_response()

    assert response.exit_code == 2
    assert response.message == "Bad value (key 'boundary.params.mu')"
    assert response.details[0].loc == ["boundary", "params", "mu"]
    assert response.details[0].type == "config_parse_error"


def test_config_parse_error_from_validation_error():
    """Test that the first failing location becomes the key."""
    with pytest.raises(ValidationError) as excinfo:
        Sample.model_validate({"length": -1})
    exc = ConfigParseError.from_validation_error(excinfo.value)

    assert exc.key in ("name", "length")
    assert exc.key in exc.message
    assert {tuple(detail["loc"]) for detail in exc.details} == {("name",), ("length",)}


def test_from_exception_wraps_foreign_errors():
    exc = ComputationError.from_exception(ValueError("singular matrix"))
    assert isinstance(exc, ComputationError)
    assert exc.message == "singular matrix"
    assert exc.details[0]["type"] == "ValueError"

    original = EmptyGraph()
    assert QGraphError.from_exception(original) is original


def test_numerical_errors_keep_their_values():
    """Test that numerical errors expose values as attributes and plain details."""
    exc = PoleProximity(k=1j, pole=1j, radius=1e-6)
    assert exc.k == 1j
    assert exc.details[0]["k"] == [0.0, 1.0]
    assert exc.details[0]["radius"] == 1e-6

    tail = TailNotControlled(k_max=50.0, bound=1e-3, tolerance=1e-10, required=120.0)
    assert "K_max >= 120" in tail.message

    failed = IdentityCheckFailed(["unitarity", "inversion"], "out/identities.json")
    assert failed.failures == ["unitarity", "inversion"]
    assert failed.message == "Identity check failed: unitarity, inversion (see out/identities.json)"


def test_error_context_attaches_to_raised_errors():
    """Test that nested contexts merge onto the raised error."""
    with pytest.raises(EmptyGraph) as excinfo:
        with error_context(command="spectrum"):
            with error_context(config="star.json"):
                raise EmptyGraph()

    assert excinfo.value.context == {"command": "spectrum", "config": "star.json"}


def test_format_exception_includes_context():
    with error_context(command="verify"):
        data = format_exception(RankDeficient(rank=3, required=4))
    assert data["exception_type"] == "RankDeficient"
    assert data["exit_code"] == 1
    assert data["context"] == {"command": "verify"}

    assert "context" not in format_exception(RuntimeError("outside"))


def test_capture_exception_logs_and_reraises():
    """Test logging of captured errors with and without re-raising."""
    with patch.object(exception_utils, "logger") as mock_logger:
        data = capture_exception(EmptyGraph(), reraise=False, message="spectrum failed")
        mock_logger.error.assert_called_once()
        assert mock_logger.error.call_args[0][0] == "spectrum failed"
        assert data["error_type"] == "empty_graph"

        with pytest.raises(RuntimeError):
            capture_exception(RuntimeError("boom"), log_level="exception")
        mock_logger.exception.assert_called_once()


def test_exit_code_for_foreign_errors():
    assert exit_code_for(RuntimeError("boom")) == 1
    assert exit_code_for(ConfigParseError()) == 2
