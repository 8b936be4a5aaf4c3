"""
A-priori length conditions that decide which spectral statements hold:

- the lower spectral bound -Delta >= -s^2, with s tanh(s l_min / 2) = lambda+_max
- l_min > 2/lambda+_min, under which eigenphases increase monotonically
- l_min > l(sigma), under which the periodic-orbit sum converges absolutely
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel
from scipy.optimize import brentq, minimize_scalar

from qgraph.core.boundary import CanonicalBC
from qgraph.core.graph import MetricGraph


def spectral_bound_s(lambda_plus_max: float, l_min: float) -> float:
    """Unique s >= 0 with s tanh(s l_min / 2) = lambda+_max; 0 when L has no positive part."""
    if lambda_plus_max <= 0:
        return 0.0

    def f(s: float) -> float:
        return s * math.tanh(s * l_min / 2) - lambda_plus_max

    hi = max(lambda_plus_max, 1.0)
    while f(hi) <= 0:
        hi *= 2
    return float(brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def phase_derivative_bounds(g: MetricGraph, canonical: CanonicalBC) -> tuple[float, float]:
    """Lower and upper bounds on the derivative of any eigenphase of U(k)."""
    lower = g.l_min - 2.0 / canonical.lambda_plus_min
    upper = g.l_max + 2.0 / canonical.lambda_minus_min
    return lower, upper


def phases_monotone(g: MetricGraph, canonical: CanonicalBC) -> bool:
    return g.l_min > 2.0 / canonical.lambda_plus_min


def length_function(kappa: float, edge_count: int, lambda_plus_min: float) -> float:
    """l(kappa) = log(2E)/kappa + (2/kappa) artanh(kappa/lambda+_min)."""
    value = math.log(2 * edge_count) / kappa
    if math.isfinite(lambda_plus_min):
        value += 2.0 / kappa * math.atanh(kappa / lambda_plus_min)
    return value


class LengthCondition(BaseModel):
    """Outcome of the l_min > l(sigma) test and the strip width it requires of a test function."""

    sigma: float
    l_sigma: float
    l_min: float
    satisfied: bool
    tail_kappa: Optional[float] = None
    tail_ratio: Optional[float] = None


def sigma_and_lkappa(g: MetricGraph, canonical: CanonicalBC, r: float = math.inf) -> LengthCondition:
    """
    Minimize l(kappa) on (0, lambda+_min) and compare with l_min.

    Without positive eigenvalues of L, l(kappa) = log(2E)/kappa has infimum 0;
    every graph passes and sigma is the smallest strip width with
    l(sigma) = l_min. The tail ratio q = exp(kappa (l(kappa) - l_min)) is
    reported for kappa = min(r, ...) inside the admissible range.
    """
    E = g.E
    lam = canonical.lambda_plus_min
    if not math.isfinite(lam):
        sigma = math.log(2 * E) / g.l_min
        kappa = min(r, 2 * sigma)
        if kappa <= sigma:
            return LengthCondition(sigma=sigma, l_sigma=g.l_min, l_min=g.l_min, satisfied=True)
        q = math.exp(kappa * (length_function(kappa, E, lam) - g.l_min))
        return LengthCondition(
            sigma=sigma, l_sigma=g.l_min, l_min=g.l_min, satisfied=True, tail_kappa=kappa, tail_ratio=q
        )

    result = minimize_scalar(
        lambda kappa: length_function(kappa, E, lam),
        bounds=(lam * 1e-9, lam * (1 - 1e-12)),
        method="bounded",
        options={"xatol": lam * 1e-12},
    )
    sigma = float(result.x)
    l_sigma = float(result.fun)
    satisfied = g.l_min > l_sigma
    condition = LengthCondition(sigma=sigma, l_sigma=l_sigma, l_min=g.l_min, satisfied=satisfied)
    if satisfied and r >= sigma:
        condition.tail_kappa = sigma
        condition.tail_ratio = math.exp(sigma * (l_sigma - g.l_min))
    return condition
