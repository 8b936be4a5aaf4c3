import math

import numpy as np
import pytest
from scipy.integrate import quad

from qgraph.core import CauchyTestFunction, GaussianTestFunction, make_test_function
from qgraph.config import settings
from qgraph.exceptions import ConfigParseError


@pytest.mark.parametrize("h", [GaussianTestFunction(0.05), CauchyTestFunction(1.5)])
def test_fourier_transform_matches_quadrature(h):
    """Test the closed-form transforms against direct integration."""
    value, _ = quad(lambda k: float(h.h(k)), 0.0, np.inf)
    assert float(h.hhat(0.0)) == pytest.approx(value / math.pi, abs=1e-10)
    for x in (0.7, 2.0):
        value, _ = quad(lambda k: float(h.h(k)), 0.0, np.inf, weight="cos", wvar=x)
        assert float(h.hhat(x)) == pytest.approx(value / math.pi, abs=1e-8)


@pytest.mark.parametrize("h", [GaussianTestFunction(0.1), CauchyTestFunction(2.0)])
def test_test_functions_are_even(h):
    """Test evenness at real and complex arguments."""
    samples = np.array([0.3, 2.0 + 0.4j, -5.0 + 0.1j])
    assert h.evenness_deviation(samples) < 1e-15


def test_gaussian_cutoff_and_tail():
    """Test the Gaussian cutoff and tail integral."""
    h = GaussianTestFunction(0.05)
    K = h.cutoff(1e-14)
    assert float(h.h(K)) == pytest.approx(1e-14)
    value, _ = quad(lambda k: float(h.h(k)), 10.0, np.inf)
    assert h.tail_integral(10.0) == pytest.approx(value, rel=1e-8)
    assert h.strip_l1(0.0) == pytest.approx(math.sqrt(math.pi / 0.05))


def test_cauchy_strip_and_tail():
    """Test the Cauchy function's strip membership and tail integral."""
    h = CauchyTestFunction(1.0)
    assert h.r == 1.0
    assert h.admits_strip(0.99)
    assert not h.admits_strip(1.0)
    assert math.isinf(h.strip_l1(1.0))
    assert h.strip_l1(0.0) == pytest.approx(math.pi, rel=1e-8)
    assert h.tail_integral(0.0) == pytest.approx(math.pi / 2)
    assert h.decay_exponent() == pytest.approx(2.0, abs=0.1)


def test_gaussian_admits_every_strip():
    """Test that the Gaussian is in every H_r."""
    h = GaussianTestFunction(0.05)
    assert math.isinf(h.r)
    assert h.admits_strip(1e6)
    assert h.describe() == {"name": "gaussian", "params": {"t": 0.05}, "r": "inf"}


def test_make_test_function_defaults():
    """Test construction by name with the configured defaults."""
    h = make_test_function("gaussian")
    assert isinstance(h, GaussianTestFunction)
    assert h.t == settings.QGRAPH_T
    assert make_test_function("cauchy", a=3.0).a == 3.0


@pytest.mark.parametrize(
    "name, kwargs",
    [("lorentzian", {}), ("gaussian", {"t": -1.0}), ("cauchy", {"a": 0.0})],
)
def test_make_test_function_rejects_bad_input(name, kwargs):
    """Test that unknown names and non-positive parameters are configuration errors."""
    with pytest.raises(ConfigParseError) as excinfo:
        make_test_function(name, **kwargs)
    assert excinfo.value.exit_code == 2
