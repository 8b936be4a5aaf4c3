"""
Identity suite run by `qgraph check`.

Each check samples wave numbers, evaluates an identity the S-matrix, the
quantum map or the orbit engine must satisfy, and records the largest
residual against its tolerance.
"""

import math
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from qgraph.core.conditions import phase_derivative_bounds
from qgraph.core.scattering import SMatrixEvaluator
from qgraph.core.spectrum import SpectralSolver, Spectrum, _wrap
from qgraph.core.testfunctions import TestFunction
from qgraph.core.traceformula import TraceFormula
from qgraph.logging import get_logger
from qgraph.utils import matrix_to_pairs, parallel_map

logger = get_logger("identities", metadata={"component": "identities"})


class IdentityResult(BaseModel):
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    samples: int
    details: Dict[str, Any] = Field(default_factory=dict)


class IdentityReport(BaseModel):
    """Outcome of every check plus the canonical boundary data they ran on."""

    results: List[IdentityResult]
    canonical: Dict[str, Any]
    expansions: Dict[str, Any]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> List[str]:
        return [result.name for result in self.results if not result.passed]


def _result(name: str, residuals: List[float], tolerance: float, **details: Any) -> IdentityResult:
    worst = float(max(residuals, default=0.0))
    return IdentityResult(
        name=name,
        passed=bool(worst < tolerance),
        max_residual=worst,
        tolerance=tolerance,
        samples=len(residuals),
        details=details,
    )


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return matrix_to_pairs(value) if value.ndim == 2 else [_plain(x) for x in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


class IdentitySuite:
    """
    Sampled identity checks for one graph and one set of boundary conditions.

    Args:
        evaluator: S-matrix evaluator
        samples: Random wave numbers per check
        seed: Seed of the sampling generator
        k_range: Real parts are drawn from (k_range[0], k_range[1])
    """

    def __init__(
        self,
        evaluator: SMatrixEvaluator,
        samples: int = 100,
        seed: int = 0,
        k_range: tuple = (0.1, 30.0),
    ):
        self.evaluator = evaluator
        self.canonical = evaluator.canonical
        self.graph = evaluator.graph
        self.solver = SpectralSolver(evaluator)
        self.trace = TraceFormula(evaluator, self.solver)
        self.samples = samples
        self.seed = seed
        self.k_range = k_range

    def _rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)

    def _real_ks(self, offset: int, count: Optional[int] = None) -> np.ndarray:
        lo, hi = self.k_range
        return self._rng(offset).uniform(lo, hi, count or self.samples)

    def _complex_ks(self, offset: int) -> np.ndarray:
        rng = self._rng(offset)
        lo, hi = self.k_range
        real = rng.uniform(max(lo, 0.5), hi, self.samples) * rng.choice([-1.0, 1.0], self.samples)
        return real + 1j * rng.uniform(-0.2, 0.2, self.samples)

    # -- scattering --------------------------------------------------------------

    def unitarity(self) -> IdentityResult:
        ev = self.evaluator
        eye = np.eye(ev.size)
        residuals = []
        for k in self._real_ks(1):
            S, U = ev.S(k), ev.U(k)
            residuals.append(np.linalg.norm(S @ S.conj().T - eye, 2))
            residuals.append(np.linalg.norm(U @ U.conj().T - eye, 2))
        return _result("unitarity", residuals, 1e-12)

    def inverse_relation(self) -> IdentityResult:
        """S(k) S(-k) = 1 off the real axis."""
        ev = self.evaluator
        eye = np.eye(ev.size)
        residuals = []
        for k in self._complex_ks(2):
            S_plus, S_minus = ev.S(k), ev.S(-k)
            scale = max(1.0, np.linalg.norm(S_plus, 2) * np.linalg.norm(S_minus, 2))
            residuals.append(np.linalg.norm(S_plus @ S_minus - eye, 2) / scale)
        return _result("inverse_relation", residuals, 1e-10)

    def direct_representation(self) -> IdentityResult:
        ev = self.evaluator
        residuals = [np.linalg.norm(ev.S(k) - ev.S_direct(k), 2) for k in self._real_ks(3)]
        return _result("direct_representation", residuals, 1e-10)

    def s_prime(self) -> IdentityResult:
        """S' against central differences and against the inverse-matrix form."""
        ev = self.evaluator
        h = 1e-6
        finite, inverse = [], []
        for k in self._real_ks(4):
            derivative = ev.S_prime(k)
            scale = max(1.0, np.linalg.norm(derivative, 2))
            difference = (ev.S(k + h) - ev.S(k - h)) / (2 * h)
            finite.append(np.linalg.norm(difference - derivative, 2) / scale)
            inverse.append(np.linalg.norm(ev.S_prime_from_inverse(k) - derivative, 2) / scale)
        result = _result("s_prime", finite, 1e-6, inverse_form=float(max(inverse)))
        if max(inverse) >= 1e-10:
            result.passed = False
        return result

    def inversion(self) -> IdentityResult:
        """S(A, B; k) = -S(-B, A; 1/k)."""
        residuals = [self.evaluator.inversion_residual(k) for k in self._real_ks(5, 20)]
        return _result("inversion", residuals, 1e-10)

    def norm_bounds(self) -> IdentityResult:
        """Operator-norm bounds of S and U on lines parallel to the real axis."""
        ev = self.evaluator
        c = self.canonical
        rng = self._rng(6)
        residuals: List[float] = []
        regimes = []

        lam = c.lambda_plus_min
        top = lam if math.isfinite(lam) else 5.0
        for k, u in zip(self._real_ks(7) * rng.choice([-1.0, 1.0], self.samples), rng.uniform(0.05, 0.95, self.samples)):
            kappa = u * top
            z = k + 1j * kappa
            bound = ev.norm_bound_strip(kappa)
            residuals.append(np.linalg.norm(ev.S(z), 2) - bound * (1 + 1e-10))
            u_bound = bound * math.exp(-kappa * self.graph.l_min)
            residuals.append(np.linalg.norm(ev.U(z), 2) - u_bound * (1 + 1e-10))
        regimes.append("strip")

        if c.is_robin:
            for k, u in zip(self._real_ks(8), rng.uniform(0.05, 3.0, self.samples)):
                kappa = c.lambda_max * (1 + u)
                bound = ev.norm_bound_far(kappa)
                residuals.append(np.linalg.norm(ev.S(k + 1j * kappa), 2) - bound * (1 + 1e-10))
            regimes.append("far")

        # a violation shows up as a positive excess over the bound
        excess = [max(r, 0.0) for r in residuals]
        return _result("norm_bounds", excess, 1e-300, regimes=regimes)

    def expansions(self) -> IdentityResult:
        """Truncated large-k and small-k series of S within their truncation bounds."""
        report = self.evaluator.limits_and_expansions()
        if report["constant"]:
            return _result("expansions", [], 1.0, constant=True)
        excess = [
            max(report[key]["residual"] - report[key]["bound"] * (1 + 1e-6) - 1e-13, 0.0)
            for key in ("large_k", "small_k")
        ]
        return _result(
            "expansions",
            excess,
            1e-300,
            large_k=report["large_k"]["residual"],
            small_k=report["small_k"]["residual"],
            bound=report["large_k"]["bound"],
        )

    # -- spectrum -----------------------------------------------------------------

    def functional_equation(self) -> IdentityResult:
        residuals = [self.solver.functional_equation_residual(k) for k in self._complex_ks(9)]
        return _result("functional_equation", residuals, 1e-10)

    def theta_prime(self) -> IdentityResult:
        """Eigenphase derivative formula against central differences, and its a-priori bounds."""
        h = 1e-5
        lower, upper = phase_derivative_bounds(self.graph, self.canonical)
        residuals: List[float] = []
        out_of_bounds = 0
        skipped = 0
        for k in self._real_ks(10, 50):
            phases, Z = self.solver.eigensystem(k)
            eig = np.exp(1j * phases)
            for a in range(phases.size):
                gaps = np.abs(eig - eig[a])
                gaps[a] = np.inf
                if gaps.min() < 1e-4:
                    skipped += 1
                    continue
                v = Z[:, a]
                derivative = self.solver.theta_prime(v, k)
                plus = self.solver._branch_phase(k + h, v)
                minus = self.solver._branch_phase(k - h, v)
                residuals.append(abs(float(_wrap(plus - minus)) / (2 * h) - derivative))
                if not lower - 1e-10 <= derivative <= upper + 1e-10:
                    out_of_bounds += 1
        result = _result("theta_prime", residuals, 1e-5, skipped_degenerate=skipped, out_of_bounds=out_of_bounds)
        if out_of_bounds:
            result.passed = False
        return result

    # -- orbits ---------------------------------------------------------------------

    def orbit_oracle(self, l_max: int = 6) -> IdentityResult:
        ks = self._real_ks(11, 20)
        worst = self.trace.orbit_oracle(l_max, ks)
        return _result("orbit_oracle", list(worst.values()), 1e-9, l_max=l_max, **worst)

    def pretrace(self, spectrum: Spectrum, h: TestFunction, l_max: int) -> IdentityResult:
        check = self.trace.pretrace_rhs(spectrum, h, l_max)
        return _result(
            "pretrace",
            [check.residual],
            1e-6,
            lhs=[check.lhs.re, check.lhs.im],
            rhs=[check.rhs.re, check.rhs.im],
            l_max=l_max,
        )

    # -- runner -----------------------------------------------------------------------

    def checks(self) -> List[Callable[[], IdentityResult]]:
        return [
            self.unitarity,
            self.inverse_relation,
            self.direct_representation,
            self.s_prime,
            self.inversion,
            self.norm_bounds,
            self.expansions,
            self.functional_equation,
            self.theta_prime,
            self.orbit_oracle,
        ]

    def run(
        self,
        spectrum: Optional[Spectrum] = None,
        h: Optional[TestFunction] = None,
        pretrace_l_max: int = 8,
    ) -> IdentityReport:
        """
        Run every check; the pre-trace comparison only when a spectrum and a test function are given.
        """
        logger.info("Running identity suite", metadata={"samples": self.samples, "seed": self.seed})
        results = parallel_map(lambda check: check(), self.checks())
        if spectrum is not None and h is not None:
            results.append(self.pretrace(spectrum, h, pretrace_l_max))

        report = IdentityReport(
            results=results,
            canonical=self.canonical.to_dict(),
            expansions=_plain(self.evaluator.limits_and_expansions()),
        )
        for result in results:
            if not result.passed:
                logger.warning(
                    "Identity failed",
                    metadata={"identity": result.name, "residual": result.max_residual, "tolerance": result.tolerance},
                )
        logger.info("Identity suite finished", metadata={"passed": report.passed, "failures": report.failures})
        return report
