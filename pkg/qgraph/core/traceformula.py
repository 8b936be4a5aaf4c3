"""
Trace formulae for quantum graphs.

Both sides of the periodic-orbit identities are evaluated for a test function
h: the spectral side sum_n g_n h(k_n) and the geometric side

    L hhat(0) + (g0 - N/2) h(0) - (1/4pi) int h(k) Im tr S(k)/k dk
        + 1/2 sum_p [(hhat * A_p)(l_p) + (hhat * conj A_p)(l_p)]

where p runs over directed periodic orbits grouped by topological length. The
heat trace is the special case h(k) = exp(-k^2 t), with the Robin integral in
closed form through erfc.
"""

import math
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erfcx

from qgraph.config import settings
from qgraph.core.conditions import LengthCondition, sigma_and_lkappa, spectral_bound_s
from qgraph.core.graph import PeriodicOrbit, enumerate_orbits
from qgraph.core.scattering import SMatrixEvaluator
from qgraph.core.spectrum import SpectralSolver, Spectrum
from qgraph.core.testfunctions import GaussianTestFunction, TestFunction
from qgraph.exceptions import (
    ConditionViolated,
    FitIllConditioned,
    QuadratureNotConverged,
    TailNotControlled,
)
from qgraph.logging import get_logger
from qgraph.utils import parallel_map

logger = get_logger("traceformula", metadata={"component": "traceformula"})

__all__ = [
    "TraceIdentity",
    "ComplexValue",
    "TermBreakdown",
    "ConvergenceRow",
    "TraceReport",
    "PretraceCheck",
    "ImaginaryAxisOrder",
    "HeatAsymptotics",
    "OrbitAmplitude",
    "TraceFormula",
    "sigma_and_lkappa",
]

# quadrature nodes evaluated at once
BLOCK = 4096


class TraceIdentity(str, Enum):
    """Identities the toolkit can verify"""

    TF1 = "tf1"
    TF2 = "tf2"
    TF3 = "tf3"
    HEAT_ASYMPTOTICS = "heat-asymptotics"


class ComplexValue(BaseModel):
    re: float
    im: float = 0.0

    @classmethod
    def of(cls, z: complex) -> "ComplexValue":
        z = complex(z)
        return cls(re=z.real, im=z.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class TermBreakdown(BaseModel):
    """Geometric side of a trace identity, term by term."""

    volume: ComplexValue
    zero_mode: ComplexValue
    robin_integral: ComplexValue
    orbit_sum_by_length: Dict[int, ComplexValue]

    def total(self, up_to: Optional[int] = None) -> complex:
        total = self.volume.value + self.zero_mode.value + self.robin_integral.value
        for n in sorted(self.orbit_sum_by_length):
            if up_to is not None and n > up_to:
                break
            total += self.orbit_sum_by_length[n].value
        return total


class ConvergenceRow(BaseModel):
    cutoff: float
    lhs: float
    rhs: float
    residual: float
    tail_bound: Optional[float] = None


class TraceReport(BaseModel):
    """Side-by-side evaluation of a trace identity."""

    identity: TraceIdentity
    grouping: str = Field(..., description="tf2 when the orbit sum converges absolutely, tf1 otherwise")
    test_function: Dict[str, Any]
    lhs: ComplexValue
    rhs: ComplexValue
    terms: TermBreakdown
    residual: float
    cutoffs: Dict[str, Any]
    flags: Dict[str, bool]
    length_condition: LengthCondition
    spectral_tail_bound: float
    orbit_tail_bound: Optional[float] = None
    convergence: List[ConvergenceRow]
    warnings: List[str] = Field(default_factory=list)


class PretraceCheck(BaseModel):
    """N h(0) + 2 sum g_n h(k_n) against the matrix-power sum over |l| <= l_max."""

    lhs: ComplexValue
    rhs: ComplexValue
    terms: Dict[int, ComplexValue]
    residual: float
    l_max: int


class ImaginaryAxisOrder(BaseModel):
    kappa: float
    kind: str
    order: int


class HeatAsymptotics(BaseModel):
    """Constant term of the small-t heat-trace expansion, fitted and predicted."""

    gamma_fit: float
    gamma_formula: Optional[float] = None
    gamma_formula_exact: Optional[str] = None
    quarter_trace_S: Optional[str] = None
    gamma_euler: Optional[str] = Field(
        None, description="(V - E)/2 for standard Kirchhoff conditions on a connected graph"
    )
    difference: Optional[float] = None
    coefficients: List[float]
    t_window: Tuple[float, float]
    condition_number: float
    fit_residual: float
    widened: bool = False
    orders: Optional[List[ImaginaryAxisOrder]] = None
    samples: List[ConvergenceRow] = Field(default_factory=list)


class OrbitAmplitude:
    """
    Amplitude A_p(k) = l_p^# A1_p(k) + A2_p(k) of one periodic orbit.

    A1_p multiplies the S-matrix entries S[j', omega(j)] along the orbit's
    transitions. A2_p sums the same product with one factor replaced by the
    derivative S', divided by the repetition number and multiplied by -i.
    """

    def __init__(self, orbit: PeriodicOrbit, evaluator: SMatrixEvaluator):
        self.orbit = orbit
        self.evaluator = evaluator
        rep = np.array(orbit.rep, dtype=int)
        omega = evaluator.graph.index.omega_array()
        self._rows = np.roll(rep, -1)
        self._cols = omega[rep]
        self.constant = not evaluator.canonical.is_robin

    def factors(self, S: np.ndarray) -> np.ndarray:
        """Transition factors from a stack of matrices, shape (len(ks), n)."""
        return S[:, self._rows, self._cols]

    def inserted(self, S: np.ndarray, S_prime: np.ndarray) -> np.ndarray:
        """A2_p on the grid S, S' were evaluated on."""
        factors = self.factors(S)
        derivatives = self.factors(S_prime)
        ones = np.ones((factors.shape[0], 1), dtype=complex)
        before = np.concatenate([ones, np.cumprod(factors, axis=1)[:, :-1]], axis=1)
        after = np.concatenate([np.cumprod(factors[:, ::-1], axis=1)[:, ::-1][:, 1:], ones], axis=1)
        return -1j * np.sum(before * derivatives * after, axis=1) / self.orbit.repetition

    def product(self, S: np.ndarray) -> np.ndarray:
        """A1_p on the grid S was evaluated on."""
        return np.prod(self.factors(S), axis=1)

    def values(self, S: np.ndarray, S_prime: Optional[np.ndarray] = None) -> np.ndarray:
        out = self.orbit.primitive_length * self.product(S)
        if S_prime is not None and not self.constant:
            out = out + self.inserted(S, S_prime)
        return out

    def A2(self, ks: Sequence[complex]) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)
        if self.constant:
            return np.zeros(ks.size, dtype=complex)
        return self.inserted(self.evaluator.S_batch(ks), self.evaluator.S_prime_batch(ks))

    def A(self, ks: Sequence[complex]) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)
        S_prime = None if self.constant else self.evaluator.S_prime_batch(ks)
        return self.values(self.evaluator.S_batch(ks), S_prime)

    @property
    def leading_coefficient(self) -> complex:
        """a_p^(0): the amplitude with S replaced by S_infinity = 1 - 2P."""
        S_inf = self.evaluator.canonical.S_infinity()
        return complex(self.orbit.primitive_length * np.prod(S_inf[self._rows, self._cols]))


class TraceFormula:
    """
    Geometric and spectral sides of the trace identities for one graph.

    Args:
        evaluator: S-matrix evaluator of the graph
        solver: Spectral solver, used for imaginary-axis zero and pole orders
    """

    def __init__(self, evaluator: SMatrixEvaluator, solver: Optional[SpectralSolver] = None):
        self.evaluator = evaluator
        self.graph = evaluator.graph
        self.canonical = evaluator.canonical
        self.solver = solver or SpectralSolver(evaluator)
        self._orbits: Dict[int, List[PeriodicOrbit]] = {}

    # -- orbits and amplitudes -----------------------------------------------

    def orbits(self, n_max: int) -> Dict[int, List[PeriodicOrbit]]:
        if max(self._orbits, default=0) < n_max:
            self._orbits = enumerate_orbits(self.graph, self.evaluator.transition_mask, n_max)
        return {n: self._orbits[n] for n in range(1, n_max + 1)}

    def orbit_amplitudes(self, orbit: PeriodicOrbit) -> OrbitAmplitude:
        return OrbitAmplitude(orbit, self.evaluator)

    def matrix_trace_term(self, l: int, k: complex) -> complex:
        """tr[Lambda(k) U(k)^l]; negative l uses U(k)^-1 = T(-k) S(-k)."""
        k = complex(k)
        U = self.evaluator.U(k) if l >= 0 else self.evaluator.U_inverse(k)
        return complex(np.trace(self.evaluator.Lambda(k) @ np.linalg.matrix_power(U, abs(l))))

    def orbit_oracle(self, l_max: int, ks: Sequence[float]) -> Dict[str, float]:
        """
        Largest deviation of the orbit-grouped sums from the matrix-power traces.

        Compares sum_p l_p^# A1_p e^{ikl_p} with tr[D U^l] and sum_p A2_p e^{ikl_p}
        with -2 tr[L/(L^2 + k^2) U^l] for l = 1..l_max.
        """
        ks = np.asarray(ks, dtype=float)
        ev = self.evaluator
        S = ev.S_batch(ks)
        S_prime = ev.S_prime_batch(ks)
        U = ev.U_batch(ks)
        resolvent = ev.L_resolvent_batch(ks)
        D = self.graph.end_lengths

        metric_worst = robin_worst = 0.0
        power = np.broadcast_to(np.eye(ev.size, dtype=complex), U.shape).copy()
        for l, orbits in self.orbits(l_max).items():
            power = power @ U
            metric_trace = np.einsum("j,kjj->k", D, power)
            robin_trace = -2 * np.einsum("kij,kji->k", resolvent, power)
            metric_sum = np.zeros(ks.size, dtype=complex)
            robin_sum = np.zeros(ks.size, dtype=complex)
            for orbit in orbits:
                amplitude = self.orbit_amplitudes(orbit)
                phase = np.exp(1j * ks * orbit.metric_length)
                metric_sum += orbit.primitive_length * amplitude.product(S) * phase
                robin_sum += amplitude.inserted(S, S_prime) * phase
            metric_worst = max(metric_worst, float(np.max(np.abs(metric_sum - metric_trace))))
            robin_worst = max(robin_worst, float(np.max(np.abs(robin_sum - robin_trace))))

        logger.debug(
            "Orbit oracle evaluated",
            metadata={"l_max": l_max, "metric": metric_worst, "robin": robin_worst},
        )
        return {"metric": metric_worst, "robin": robin_worst}

    # -- quadrature -------------------------------------------------------------

    def _analytic_half_width(self, h: TestFunction) -> float:
        widths = [h.r] if math.isfinite(h.r) else []
        lam = np.abs(self.canonical.lambdas)
        if lam.size:
            widths.append(float(lam.min()))
        return min(widths) if widths else math.inf

    def _spacing(self, length: float, h: TestFunction) -> float:
        spacing = math.pi / (8 * max(length, self.graph.l_max))
        width = self._analytic_half_width(h)
        if math.isfinite(width):
            spacing = min(spacing, width / 4)
        return spacing

    @staticmethod
    def _trapezoid(
        integrand: Callable[[np.ndarray], np.ndarray], K_q: float, spacing: float, what: str
    ) -> Optional[np.ndarray]:
        """
        (1/2pi) int_{-K_q}^{K_q} of each row of the integrand by the trapezoid rule.

        The spacing is halved until two successive grids agree. Returns None
        when fewer than two grids fit into the node budget.

        Raises:
            QuadratureNotConverged: the node budget ran out before agreement
        """
        tol = settings.QGRAPH_QUADRATURE_TOL
        max_nodes = settings.QGRAPH_QUADRATURE_MAX_NODES
        n_side = max(2, math.ceil(K_q / spacing))
        previous: Optional[np.ndarray] = None
        difference = math.inf
        while 2 * n_side + 1 <= max_nodes:
            ks = np.linspace(-K_q, K_q, 2 * n_side + 1)
            weights = np.full(ks.size, ks[1] - ks[0])
            weights[[0, -1]] *= 0.5
            current = sum(
                integrand(ks[start:start + BLOCK]) @ weights[start:start + BLOCK]
                for start in range(0, ks.size, BLOCK)
            ) / (2 * math.pi)
            if previous is not None:
                difference = float(np.max(np.abs(current - previous)))
                if difference < tol:
                    return current
            previous = current
            n_side *= 2
        if not math.isfinite(difference):
            return None
        raise QuadratureNotConverged(difference=difference, tolerance=tol, what=what)

    @staticmethod
    def _half_line(fn: Callable[[float], complex], weight: Optional[str] = None, wvar: float = 0.0) -> complex:
        """int_0^inf fn(k) [cos|sin](wvar k) dk for a complex-valued fn."""
        tol = settings.QGRAPH_QUADRATURE_TOL
        options: Dict[str, Any] = {"epsabs": tol, "limit": 400}
        if weight is not None:
            options = {"epsabs": tol, "weight": weight, "wvar": wvar, "limlst": 200}
        re, _ = quad(lambda k: complex(fn(k)).real, 0.0, np.inf, **options)
        im, _ = quad(lambda k: complex(fn(k)).imag, 0.0, np.inf, **options)
        return complex(re, im)

    def _oscillatory_quad(self, amplitude: OrbitAmplitude, h: TestFunction) -> Tuple[complex, complex]:
        """Fourier-weighted half-line quadrature for integrands too wide for the trapezoid grid."""
        length = amplitude.orbit.metric_length

        def pair(k: float) -> Tuple[complex, complex, complex]:
            both = amplitude.A(np.array([k, -k]))
            return complex(h.h(k)), complex(both[0]), complex(both[1])

        def even(k: float) -> complex:
            hk, plus, minus = pair(k)
            return hk * (plus + minus)

        def odd(k: float) -> complex:
            hk, plus, minus = pair(k)
            return hk * (plus - minus)

        def even_conj(k: float) -> complex:
            hk, plus, minus = pair(k)
            return hk * np.conj(plus + minus)

        def odd_conj(k: float) -> complex:
            hk, plus, minus = pair(k)
            return hk * np.conj(plus - minus)

        first = self._half_line(even, "cos", length) + 1j * self._half_line(odd, "sin", length)
        second = self._half_line(even_conj, "cos", length) - 1j * self._half_line(odd_conj, "sin", length)
        return first / (2 * math.pi), second / (2 * math.pi)

    # -- geometric side ---------------------------------------------------------

    def convolution_term(
        self, amplitude: OrbitAmplitude, h: TestFunction, method: str = "auto"
    ) -> Tuple[complex, complex]:
        """
        (hhat * A_p)(l_p) and its companion with conj(A_p).

        Args:
            amplitude: Orbit amplitude
            h: Test function
            method: "auto" uses A_p hhat(l_p) for constant amplitudes, "quadrature" always integrates

        Returns:
            (1/2pi) int h A_p e^{ikl_p} dk and (1/2pi) int h conj(A_p) e^{-ikl_p} dk
        """
        first, second = self._convolve([amplitude], h, method)
        return complex(first[0]), complex(second[0])

    def _convolve(
        self, amplitudes: List[OrbitAmplitude], h: TestFunction, method: str = "auto"
    ) -> Tuple[np.ndarray, np.ndarray]:
        if not amplitudes:
            return np.zeros(0, dtype=complex), np.zeros(0, dtype=complex)
        lengths = np.array([a.orbit.metric_length for a in amplitudes])
        if method != "quadrature" and h.has_hhat and all(a.constant for a in amplitudes):
            constants = np.array([a.leading_coefficient for a in amplitudes])
            hhat = h.hhat(lengths)
            return constants * hhat, np.conj(constants) * hhat

        ev = self.evaluator
        robin = self.canonical.is_robin

        def integrand(ks: np.ndarray) -> np.ndarray:
            S = ev.S_batch(ks)
            S_prime = ev.S_prime_batch(ks) if robin else None
            values = np.stack([a.values(S, S_prime) for a in amplitudes])
            waves = values * np.exp(1j * np.outer(lengths, ks))
            hk = h.h(ks)
            return np.concatenate([waves * hk, np.conj(waves) * hk])

        m = len(amplitudes)
        K_q = h.cutoff(settings.QGRAPH_QUADRATURE_CUTOFF)
        result = self._trapezoid(
            integrand, K_q, self._spacing(float(lengths.max()), h), f"orbit convolution at l_p={lengths.max():.6g}"
        )
        if result is not None:
            return result[:m], result[m:]

        logger.debug("Trapezoid grid exceeds node budget, using Fourier quadrature", metadata={"orbits": m})
        pairs = [self._oscillatory_quad(a, h) for a in amplitudes]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])

    def volume_term(self, h: TestFunction) -> complex:
        """L hhat(0)."""
        if h.has_hhat:
            return complex(self.graph.total_length * float(h.hhat(0.0)))
        return self.graph.total_length * self._half_line(h.h) / math.pi

    def robin_integral_term(self, h: TestFunction) -> complex:
        """-(1/4pi) int h(k) Im tr S(k)/k dk with Im tr S(k)/k = 2 sum lambda/(lambda^2 + k^2)."""
        lam = self.canonical.lambdas
        if not lam.size:
            return 0j

        def integrand(ks: np.ndarray) -> np.ndarray:
            weight = np.sum(lam[:, None] / (lam[:, None] ** 2 + ks[None, :] ** 2), axis=0)
            return (h.h(ks) * weight)[None, :]

        K_q = h.cutoff(settings.QGRAPH_QUADRATURE_CUTOFF)
        value = self._trapezoid(integrand, K_q, self._spacing(0.0, h), "Robin integral")
        if value is not None:
            return -complex(value[0])
        return -self._half_line(lambda k: complex(integrand(np.array([k]))[0, 0])) / math.pi

    def orbit_terms(self, h: TestFunction, n_max: int) -> Dict[int, complex]:
        """1/2 sum over orbits of length n of both convolution terms, for n = 1..n_max."""
        orbits = self.orbits(n_max)

        def per_length(n: int) -> complex:
            amplitudes = [self.orbit_amplitudes(orbit) for orbit in orbits[n]]
            first, second = self._convolve(amplitudes, h)
            return 0.5 * complex(np.sum(first) + np.sum(second))

        lengths = list(orbits)
        return dict(zip(lengths, parallel_map(per_length, lengths)))

    # -- spectral side --------------------------------------------------------------

    @staticmethod
    def spectral_lhs(spectrum: Spectrum, h: TestFunction) -> complex:
        """sum over k_n^2 >= 0 of g_n h(k_n), the zero eigenvalue included."""
        ks, gs = spectrum.wave_numbers()
        total = spectrum.zero.g0 * complex(h.h(0.0))
        if ks.size:
            total += complex(np.sum(gs * h.h(ks)))
        return total

    def spectral_tail_bound(self, h: TestFunction, k_max: float) -> float:
        """(L/pi) int_{k_max}^inf |h| dk, with the safety margin."""
        margin = 1 + settings.QGRAPH_TAIL_MARGIN
        return self.graph.total_length / math.pi * h.tail_integral(k_max) * margin

    def required_kmax(self, h: TestFunction, tol: Optional[float] = None) -> float:
        """Smallest K_max whose spectral tail bound is below tol; inf beyond QGRAPH_KMAX_LIMIT."""
        tol = settings.QGRAPH_TAIL_TOL if tol is None else tol
        limit = settings.QGRAPH_KMAX_LIMIT

        def excess(K: float) -> float:
            return self.spectral_tail_bound(h, K) - tol

        if excess(0.0) <= 0:
            return 0.0
        hi = 1.0
        while excess(hi) > 0:
            hi *= 2
            if hi > limit:
                return math.inf
        return float(brentq(excess, 0.0, hi, xtol=1e-9))

    def _check_tail(self, h: TestFunction, spectrum: Spectrum) -> float:
        bound = self.spectral_tail_bound(h, spectrum.k_max)
        tol = settings.QGRAPH_TAIL_TOL
        if bound > tol:
            raise TailNotControlled(
                k_max=spectrum.k_max, bound=bound, tolerance=tol, required=self.required_kmax(h, tol)
            )
        return bound

    # -- identities ---------------------------------------------------------------

    def length_condition(self, h: TestFunction) -> LengthCondition:
        r = h.r * (1 - 1e-12) if h.strict else h.r
        return sigma_and_lkappa(self.graph, self.canonical, r=r)

    def orbit_tail_bound(self, h: TestFunction, n: int, condition: Optional[LengthCondition] = None) -> Optional[float]:
        """
        Bound C q^(n+1)/(1-q) on the orbit terms beyond topological length n.

        q = exp(kappa (l(kappa) - l_min)) and C = (2E/2pi) sup||Lambda(k + i kappa)|| int|h(k + i kappa)| dk.
        None when the absolute-convergence condition fails.
        """
        condition = condition or self.length_condition(h)
        if condition.tail_kappa is None or condition.tail_ratio is None or condition.tail_ratio >= 1:
            return None
        kappa, q = condition.tail_kappa, condition.tail_ratio
        lam = np.abs(self.canonical.lambdas)
        resolvent = float(np.max(lam / np.abs(lam**2 - kappa**2))) if lam.size else 0.0
        lambda_bound = self.graph.l_max + 2 * resolvent
        constant = 2 * self.graph.E / (2 * math.pi) * lambda_bound * h.strip_l1(kappa)
        return constant * q ** (n + 1) / (1 - q)

    def _grouping(self, h: TestFunction, condition: LengthCondition) -> Tuple[str, List[str]]:
        if not condition.satisfied:
            error = ConditionViolated(condition="l_min > l(sigma)", lhs=condition.l_min, rhs=condition.l_sigma)
        elif not h.admits_strip(condition.sigma):
            error = ConditionViolated(condition="r >= sigma", lhs=h.r, rhs=condition.sigma)
        else:
            return "tf2", []
        logger.warning("Orbit sum not absolutely convergent, grouping by topological length", metadata=error.details[0])
        return "tf1", [error.message]

    def _report(
        self,
        identity: TraceIdentity,
        h: TestFunction,
        spectrum: Spectrum,
        n_max: int,
        lhs: complex,
        volume: complex,
        zero_mode: complex,
        robin: complex,
    ) -> TraceReport:
        condition = self.length_condition(h)
        warnings: List[str] = []
        if identity == TraceIdentity.TF1:
            grouping = "tf1"
        else:
            grouping, warnings = self._grouping(h, condition)

        monotone = spectrum.condition_flags.phases_monotone
        if not monotone:
            warnings.append("l_min <= 2/lambda+_min: trace formula assumptions not met")

        tail = self._check_tail(h, spectrum)
        orbit_terms = self.orbit_terms(h, n_max)
        terms = TermBreakdown(
            volume=ComplexValue.of(volume),
            zero_mode=ComplexValue.of(zero_mode),
            robin_integral=ComplexValue.of(robin),
            orbit_sum_by_length={n: ComplexValue.of(v) for n, v in orbit_terms.items()},
        )
        rhs = terms.total()

        convergence = []
        for n in range(1, n_max + 1):
            partial = terms.total(up_to=n)
            convergence.append(
                ConvergenceRow(
                    cutoff=n,
                    lhs=lhs.real,
                    rhs=partial.real,
                    residual=abs(lhs - partial),
                    tail_bound=self.orbit_tail_bound(h, n, condition) if grouping == "tf2" else None,
                )
            )

        report = TraceReport(
            identity=identity,
            grouping=grouping,
            test_function=h.describe(),
            lhs=ComplexValue.of(lhs),
            rhs=ComplexValue.of(rhs),
            terms=terms,
            residual=abs(lhs - rhs),
            cutoffs={
                "k_max": spectrum.k_max,
                "n_max": n_max,
                "quadrature": {
                    "tol": settings.QGRAPH_QUADRATURE_TOL,
                    "cutoff": settings.QGRAPH_QUADRATURE_CUTOFF,
                    "max_nodes": settings.QGRAPH_QUADRATURE_MAX_NODES,
                },
            },
            flags={
                "absolutely_convergent": grouping == "tf2",
                "phases_monotone": monotone,
                "tail_controlled": True,
            },
            length_condition=condition,
            spectral_tail_bound=tail,
            orbit_tail_bound=self.orbit_tail_bound(h, n_max, condition) if grouping == "tf2" else None,
            convergence=convergence,
            warnings=warnings,
        )
        logger.info(
            "Evaluated trace identity",
            metadata={"identity": identity.value, "grouping": grouping, "n_max": n_max, "residual": report.residual},
        )
        return report

    def evaluate_tf(
        self, spectrum: Spectrum, h: TestFunction, n_max: int, identity: TraceIdentity = TraceIdentity.TF2
    ) -> TraceReport:
        """
        Spectral sum against the geometric side for a test function.

        Requesting TF2 when l_min <= l(sigma) or h is not in H_sigma downgrades
        the report to per-length grouping with a warning.

        Raises:
            TailNotControlled: the spectrum does not reach far enough for h
        """
        identity = TraceIdentity(identity)
        zero = (spectrum.zero.g0 - spectrum.zero.N / 2) * complex(h.h(0.0))
        return self._report(
            identity,
            h,
            spectrum,
            n_max,
            lhs=self.spectral_lhs(spectrum, h),
            volume=self.volume_term(h),
            zero_mode=zero,
            robin=self.robin_integral_term(h),
        )

    def heat_trace(self, spectrum: Spectrum, t: float, n_max: int) -> TraceReport:
        """tr_+ exp(Delta t) against its orbit expansion, with the erfc terms in closed form."""
        h = GaussianTestFunction(t)
        lam = self.canonical.lambdas
        erfc_sum = float(np.sum(np.sign(lam) * erfcx(np.abs(lam) * math.sqrt(t)))) if lam.size else 0.0
        return self._report(
            TraceIdentity.TF3,
            h,
            spectrum,
            n_max,
            lhs=self.spectral_lhs(spectrum, h),
            volume=complex(self.graph.total_length / math.sqrt(4 * math.pi * t)),
            zero_mode=complex(spectrum.zero.g0 - spectrum.zero.N / 2),
            robin=complex(-0.5 * erfc_sum),
        )

    def heat_trace_series(self, spectrum: Spectrum, ts: Sequence[float], n_max: int) -> List[TraceReport]:
        return [self.heat_trace(spectrum, t, n_max) for t in ts]

    @staticmethod
    def full_heat_trace(spectrum: Spectrum, t: float) -> float:
        """tr exp(Delta t), negative eigenvalues included."""
        ks, gs = spectrum.wave_numbers()
        total = float(spectrum.zero.g0) + float(np.sum(gs * np.exp(-(ks**2) * t)))
        for ev in spectrum.negative:
            total += (ev.multiplicity or 0) * math.exp(ev.kappa**2 * t)
        return total

    # -- small-t asymptotics -----------------------------------------------------

    def imaginary_axis_orders(self, spectrum: Spectrum) -> Optional[List[ImaginaryAxisOrder]]:
        """
        Orders of the zeros and poles of F on the positive imaginary axis up to beta.

        Returns None when a zero sits too close to a pole to be separated.
        """
        c = self.canonical
        if any(ev.multiplicity is None for ev in spectrum.negative):
            return None
        s = spectral_bound_s(c.lambda_plus_max if c.d_plus else 0.0, self.graph.l_min)
        beta = 1.1 * max(c.lambda_max if c.d else 0.0, s) + 0.1

        orders = [
            ImaginaryAxisOrder(kappa=ev.kappa, kind="zero", order=int(ev.multiplicity))
            for ev in spectrum.negative
            if ev.kappa <= beta
        ]
        poles: List[float] = []
        for lam in sorted(float(x) for x in c.lambdas if 0 < x <= beta):
            if not poles or lam - poles[-1] > settings.QGRAPH_CLUSTER_TOL * max(1.0, lam):
                poles.append(lam)

        points = [o.kappa for o in orders] + poles
        for lam in poles:
            gaps = [abs(lam - p) for p in points if p != lam]
            radius = min([settings.QGRAPH_CONTOUR_RADIUS, lam / 2] + [0.4 * gap for gap in gaps])
            order = -self.solver.count_zeros(1j * lam, radius)
            if order > 0:
                orders.append(ImaginaryAxisOrder(kappa=lam, kind="pole", order=order))
        return orders

    def gamma_formula(self, spectrum: Spectrum) -> Tuple[Optional[Fraction], Optional[List[ImaginaryAxisOrder]]]:
        """
        gamma = g0 - N/2 + sum g^- - 1/2 sum gamma_0 + 1/2 sum gamma_p - (d+ - d-)/2.

        Exact rational arithmetic on the integer data.
        """
        c = self.canonical
        orders = self.imaginary_axis_orders(spectrum)
        if orders is None:
            return None, None
        gamma = Fraction(spectrum.zero.g0) - Fraction(spectrum.zero.N, 2)
        gamma += sum(ev.multiplicity for ev in spectrum.negative)
        gamma -= Fraction(sum(o.order for o in orders if o.kind == "zero"), 2)
        gamma += Fraction(sum(o.order for o in orders if o.kind == "pole"), 2)
        gamma -= Fraction(c.d_plus - c.d_minus, 2)
        return gamma, orders

    def quarter_trace_S(self) -> Optional[Fraction]:
        """tr S / 4 = (2E - 2 dim ker B)/4 for k-independent S; None otherwise."""
        if self.canonical.is_robin:
            return None
        return Fraction(2 * self.graph.E - 2 * self.canonical.kernel_dimension, 4)

    def _fit(self, spectrum: Spectrum, ts: np.ndarray) -> Tuple[np.ndarray, float, float, List[ConvergenceRow]]:
        y = np.array([self.full_heat_trace(spectrum, t) for t in ts])
        y -= self.graph.total_length / np.sqrt(4 * math.pi * ts)
        X = np.column_stack([np.ones_like(ts), np.sqrt(ts), ts, ts**1.5])
        scale = np.linalg.norm(X, axis=0)
        coefficients, _, rank, singular = np.linalg.lstsq(X / scale, y, rcond=None)
        condition = float(singular[0] / singular[-1]) if rank == X.shape[1] else math.inf
        fitted = X / scale @ coefficients
        residual = float(np.sqrt(np.mean((fitted - y) ** 2)))
        rows = [
            ConvergenceRow(cutoff=float(t), lhs=float(a), rhs=float(b), residual=float(abs(a - b)))
            for t, a, b in zip(ts, y, fitted)
        ]
        return coefficients / scale, condition, residual, rows

    def heat_asymptotics(
        self, spectrum: Spectrum, t_window: Optional[Tuple[float, float]] = None, points: Optional[int] = None
    ) -> HeatAsymptotics:
        """
        Fit tr exp(Delta t) - L/sqrt(4 pi t) by gamma + c1 sqrt(t) + c2 t + c3 t^(3/2).

        An ill-conditioned fit is retried once on a window twice as wide.

        Raises:
            TailNotControlled: the spectrum is too short for the smallest t
            FitIllConditioned: the widened fit is still ill-conditioned
        """
        t_lo, t_hi = t_window or (settings.QGRAPH_HEAT_T_MIN, settings.QGRAPH_HEAT_T_MAX)
        points = points or settings.QGRAPH_HEAT_POINTS
        self._check_tail(GaussianTestFunction(t_lo), spectrum)

        widened = False
        while True:
            ts = np.geomspace(t_lo, t_hi, points)
            coefficients, condition, residual, samples = self._fit(spectrum, ts)
            if condition < 1e10:
                break
            if widened:
                raise FitIllConditioned(condition_number=condition, residual=residual)
            logger.warning("Heat-trace fit ill-conditioned, widening window", metadata={"condition": condition})
            t_hi *= 2
            widened = True

        gamma, orders = self.gamma_formula(spectrum)
        quarter = self.quarter_trace_S()
        euler = self.graph.kirchhoff_gamma() if self.canonical.is_standard_kirchhoff else None
        if euler is not None and gamma is not None and euler != gamma:
            logger.warning(
                "Heat-trace constant differs from the Euler characteristic",
                metadata={"gamma_formula": str(gamma), "euler": str(euler)},
            )
        gamma_fit = float(coefficients[0])
        result = HeatAsymptotics(
            gamma_fit=gamma_fit,
            gamma_formula=float(gamma) if gamma is not None else None,
            gamma_formula_exact=str(gamma) if gamma is not None else None,
            quarter_trace_S=str(quarter) if quarter is not None else None,
            gamma_euler=str(euler) if euler is not None else None,
            difference=abs(gamma_fit - float(gamma)) if gamma is not None else None,
            coefficients=[float(x) for x in coefficients],
            t_window=(float(t_lo), float(t_hi)),
            condition_number=condition,
            fit_residual=residual,
            widened=widened,
            orders=orders,
            samples=samples,
        )
        if gamma is None:
            logger.warning("Zero next to a pole on the imaginary axis, gamma formula unavailable")
        logger.info(
            "Fitted heat-trace constant",
            metadata={"gamma_fit": gamma_fit, "gamma_formula": result.gamma_formula, "window": result.t_window},
        )
        return result

    # -- pre-trace identity ------------------------------------------------------

    def pretrace_rhs(self, spectrum: Spectrum, h: TestFunction, l_max: int) -> PretraceCheck:
        """
        sum_{|l| <= l_max} (1/2 pi i) int tr[Lambda(k) U(k)^l] h(k) dk from matrix powers.

        Compared with N h(0) + 2 sum_n g_n h(k_n).
        """
        ev = self.evaluator
        ks, gs = spectrum.wave_numbers()
        lhs = spectrum.zero.N * complex(h.h(0.0)) + 2 * complex(np.sum(gs * h.h(ks)) if ks.size else 0.0)
        K_q = h.cutoff(settings.QGRAPH_QUADRATURE_CUTOFF)

        def term(l: int) -> complex:
            def integrand(grid: np.ndarray) -> np.ndarray:
                U = ev.U_batch(grid)
                if l < 0:
                    U = np.conj(np.swapaxes(U, 1, 2))
                power = np.linalg.matrix_power(U, abs(l))
                trace = np.einsum("kij,kji->k", ev.Lambda_batch(grid), power)
                return (trace * h.h(grid))[None, :]

            spacing = self._spacing(abs(l) * self.graph.l_max, h)
            value = self._trapezoid(integrand, K_q, spacing, f"pre-trace term l={l}")
            if value is None:
                raise QuadratureNotConverged(difference=math.inf, tolerance=settings.QGRAPH_QUADRATURE_TOL,
                                             what=f"pre-trace term l={l}")
            return complex(value[0]) / 1j

        ls = list(range(-l_max, l_max + 1))
        values = dict(zip(ls, parallel_map(term, ls)))
        rhs = sum(values[l] for l in ls)
        return PretraceCheck(
            lhs=ComplexValue.of(lhs),
            rhs=ComplexValue.of(rhs),
            terms={l: ComplexValue.of(v) for l, v in values.items()},
            residual=abs(lhs - rhs),
            l_max=l_max,
        )
