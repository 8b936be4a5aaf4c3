"""
Even test functions h(k) for the trace formulae.

A test function in H_r is even, holomorphic in the strip |Im k| < r + delta and
decays like (1 + |k|)^(-1-eta) there. Two are built in: the Gaussian, which is
entire, and the Cauchy-type 1/(k^2 + a^2), which only lives in strips of
half-width below a.
"""

import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from qgraph.config import settings
from qgraph.exceptions import ConfigParseError


class TestFunction(ABC):
    """
    Base class of even test functions.

    Attributes:
        name: Identifier used in job files and reports
        r: Largest strip half-width the function is certified for
        strict: True when the strip condition is r' < r rather than r' <= r
    """

    # keep pytest from collecting this class
    __test__ = False

    name: str = "test_function"
    r: float = math.inf
    strict: bool = False

    @abstractmethod
    def h(self, k: Any) -> np.ndarray:
        """Evaluate h at real or complex k (vectorized)."""

    def hhat(self, x: Any) -> Optional[np.ndarray]:
        """Closed-form Fourier transform (1/2pi) int h(k) e^{ikx} dk, if known."""
        return None

    @property
    def has_hhat(self) -> bool:
        return self.hhat(0.0) is not None

    @property
    def params(self) -> Dict[str, float]:
        return {}

    @abstractmethod
    def cutoff(self, relative: float) -> float:
        """Smallest K with |h(k)| < relative * max|h| for all real |k| >= K."""

    @abstractmethod
    def tail_integral(self, K: float) -> float:
        """int_K^inf |h(k)| dk."""

    def strip_l1(self, kappa: float) -> float:
        """int |h(k + i kappa)| dk over the real line."""
        value, _ = quad(lambda k: 2 * abs(complex(self.h(complex(k, kappa)))), 0.0, np.inf, limit=200)
        return float(value)

    def admits_strip(self, width: float) -> bool:
        """Whether h belongs to H_width."""
        return width < self.r if self.strict else width <= self.r

    @property
    def peak(self) -> float:
        return float(abs(self.h(0.0)))

    def evenness_deviation(self, samples: np.ndarray) -> float:
        samples = np.asarray(samples, dtype=complex)
        return float(np.max(np.abs(self.h(samples) - self.h(-samples))))

    def decay_exponent(self, k_lo: float = 10.0, k_hi: float = 100.0) -> float:
        """Slope of log|h| against log(1 + k) between two sample points."""
        lo, hi = abs(complex(self.h(k_lo))), abs(complex(self.h(k_hi)))
        if hi == 0.0:
            return math.inf
        return -math.log(hi / lo) / math.log((1 + k_hi) / (1 + k_lo))

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "params": self.params, "r": "inf" if math.isinf(self.r) else self.r}


class GaussianTestFunction(TestFunction):
    """h(k) = exp(-k^2 t), in H_r for every r."""

    name = "gaussian"

    def __init__(self, t: float):
        if t <= 0:
            raise ConfigParseError(message=f"Gaussian width must be positive, got {t}", key="t")
        self.t = float(t)

    @property
    def params(self) -> Dict[str, float]:
        return {"t": self.t}

    def h(self, k: Any) -> np.ndarray:
        k = np.asarray(k)
        return np.exp(-(k**2) * self.t)

    def hhat(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-(x**2) / (4 * self.t)) / math.sqrt(4 * math.pi * self.t)

    def cutoff(self, relative: float) -> float:
        return math.sqrt(math.log(1.0 / relative) / self.t)

    def tail_integral(self, K: float) -> float:
        return 0.5 * math.sqrt(math.pi / self.t) * float(erfc(K * math.sqrt(self.t)))

    def strip_l1(self, kappa: float) -> float:
        # |exp(-(k + i kappa)^2 t)| = exp(-(k^2 - kappa^2) t)
        return math.exp(kappa**2 * self.t) * math.sqrt(math.pi / self.t)


class CauchyTestFunction(TestFunction):
    """h(k) = 1/(k^2 + a^2), in H_r for r < a."""

    name = "cauchy"
    strict = True

    def __init__(self, a: float):
        if a <= 0:
            raise ConfigParseError(message=f"Cauchy parameter must be positive, got {a}", key="a")
        self.a = float(a)
        self.r = self.a

    @property
    def params(self) -> Dict[str, float]:
        return {"a": self.a}

    def h(self, k: Any) -> np.ndarray:
        k = np.asarray(k)
        return 1.0 / (k**2 + self.a**2)

    def hhat(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(-self.a * np.abs(x)) / (2 * self.a)

    def cutoff(self, relative: float) -> float:
        return self.a * math.sqrt(max(1.0 / relative - 1.0, 0.0))

    def tail_integral(self, K: float) -> float:
        return (math.pi / 2 - math.atan(K / self.a)) / self.a

    def strip_l1(self, kappa: float) -> float:
        if kappa >= self.a:
            return math.inf
        return super().strip_l1(kappa)


def make_test_function(name: str, t: Optional[float] = None, a: Optional[float] = None) -> TestFunction:
    """
    Build a test function by name.

    Raises:
        ConfigParseError: unknown name or invalid parameter
    """
    if name == "gaussian":
        return GaussianTestFunction(settings.QGRAPH_T if t is None else t)
    if name == "cauchy":
        return CauchyTestFunction(settings.QGRAPH_CAUCHY_A if a is None else a)
    raise ConfigParseError(message=f"Unknown test function '{name}'", key="test_fn")
