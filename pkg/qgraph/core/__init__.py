from qgraph.core.graph import (
    MetricGraph,
    PeriodicOrbit,
    build_graph,
    enumerate_orbits,
    interval,
    loop,
    star,
)
from qgraph.core.boundary import BoundaryConditions, CanonicalBC, canonicalize, explicit, factory, validate
from qgraph.core.scattering import SMatrixEvaluator
from qgraph.core.conditions import LengthCondition, sigma_and_lkappa, spectral_bound_s
from qgraph.core.spectrum import SpectralSolver, Spectrum, weyl_check
from qgraph.core.testfunctions import (
    CauchyTestFunction,
    GaussianTestFunction,
    TestFunction,
    make_test_function,
)
from qgraph.core.traceformula import HeatAsymptotics, TraceFormula, TraceIdentity, TraceReport
from qgraph.core.identities import IdentityReport, IdentitySuite

__all__ = [
    "MetricGraph",
    "PeriodicOrbit",
    "build_graph",
    "enumerate_orbits",
    "interval",
    "loop",
    "star",
    "BoundaryConditions",
    "CanonicalBC",
    "canonicalize",
    "explicit",
    "factory",
    "validate",
    "SMatrixEvaluator",
    "LengthCondition",
    "sigma_and_lkappa",
    "spectral_bound_s",
    "SpectralSolver",
    "Spectrum",
    "weyl_check",
    "CauchyTestFunction",
    "GaussianTestFunction",
    "TestFunction",
    "make_test_function",
    "HeatAsymptotics",
    "TraceFormula",
    "TraceIdentity",
    "TraceReport",
    "IdentityReport",
    "IdentitySuite",
]
