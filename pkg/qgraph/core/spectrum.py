"""
Spectrum of -Delta(A, B; l) from the secular function F(k) = det(1 - U(k)).

Positive eigenvalues are found by tracking the 2E eigenphases of U(k) along
the real axis and locating where a branch passes through 0 mod 2pi; the
multiplicity is the number of branches crossing together. Negative
eigenvalues -kappa^2 are zeros of F on the positive imaginary axis. The zero
eigenvalue is handled separately through the matrix S(k) C(l; k).
"""

import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, Field
from scipy.optimize import brentq, linear_sum_assignment, minimize_scalar

from qgraph.config import settings
from qgraph.core.conditions import (
    phase_derivative_bounds,
    phases_monotone,
    sigma_and_lkappa,
    spectral_bound_s,
)
from qgraph.core.scattering import SMatrixEvaluator
from qgraph.exceptions import (
    ConditionViolated,
    ContourThroughZero,
    DegenerateBranch,
    EigenvalueClusterAmbiguous,
    PoleProximity,
    TrackingLoss,
)
from qgraph.logging import get_logger

logger = get_logger("spectrum", metadata={"component": "spectrum"})

TWO_PI = 2 * math.pi
UNRESOLVED_NEAR_POLE = "unresolved near pole"


class Eigenvalue(BaseModel):
    """Positive eigenvalue k^2 with its multiplicity."""

    k: float
    multiplicity: int
    zero_order: Optional[int] = Field(None, description="Order of k as a zero of F, when cross-checked")


class NegativeEigenvalue(BaseModel):
    """Eigenvalue -kappa^2."""

    kappa: float
    multiplicity: Optional[int] = None
    status: str = "resolved"


class ZeroMode(BaseModel):
    g0: int = Field(..., description="Multiplicity of the Laplace eigenvalue zero")
    N: int = Field(..., description="Multiplicity of the eigenvalue one of U(0)")
    expected: Optional[Tuple[int, int]] = Field(
        None, description="(g0, N) predicted by the graph topology for standard Kirchhoff conditions"
    )


class ConditionFlags(BaseModel):
    phases_monotone: bool
    orbit_sum_absolute: bool
    multiplicities_verified: bool


class Spectrum(BaseModel):
    """Full eigenvalue data up to k_max."""

    positive: List[Eigenvalue]
    zero: ZeroMode
    negative: List[NegativeEigenvalue]
    k_max: float
    condition_flags: ConditionFlags

    @property
    def negative_count(self) -> int:
        return sum(ev.multiplicity or 0 for ev in self.negative)

    def counting(self, K: float) -> int:
        """N(K): eigenvalues k^2 <= K^2 with multiplicity, negative and zero included."""
        positive = sum(ev.multiplicity for ev in self.positive if ev.k <= K)
        return self.negative_count + self.zero.g0 + positive

    def wave_numbers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Positive k_n and g_n as arrays."""
        ks = np.array([ev.k for ev in self.positive], dtype=float)
        gs = np.array([ev.multiplicity for ev in self.positive], dtype=float)
        return ks, gs


class EigenphaseTrack(BaseModel):
    """Sampled eigenphase branches; phases are unwrapped per branch."""

    ks: List[float]
    phases: List[List[float]]
    derivatives: List[List[float]]

    @property
    def branch_count(self) -> int:
        return len(self.phases[0]) if self.phases else 0


def _wrap(phase: np.ndarray) -> np.ndarray:
    """Map phases into [-pi, pi)."""
    return (np.asarray(phase) + math.pi) % TWO_PI - math.pi


class SpectralSolver:
    """
    Eigenvalue search for one graph and one set of boundary conditions.

    Args:
        evaluator: S-matrix evaluator for the graph
    """

    def __init__(self, evaluator: SMatrixEvaluator):
        self.evaluator = evaluator
        self.graph = evaluator.graph
        self.canonical = evaluator.canonical
        self._D = self.graph.end_lengths

    # -- secular function ---------------------------------------------------

    def secular_F(self, k: complex) -> complex:
        U = self.evaluator.U(k)
        return complex(np.linalg.det(np.eye(U.shape[0]) - U))

    def functional_equation_residual(self, k: complex) -> float:
        """
        Relative residual of F(k) = (-1)^M e^{2ikL} prod (lambda - ik)/(lambda + ik) F(-k).

        M = E + d + dim ker B.
        """
        c = self.canonical
        k = complex(k)
        M = self.graph.E + c.d + c.kernel_dimension
        factor = (-1) ** M * np.exp(2j * k * self.graph.total_length)
        factor *= np.prod((c.lambdas - 1j * k) / (c.lambdas + 1j * k))
        lhs = self.secular_F(k)
        rhs = factor * self.secular_F(-k)
        return float(abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))

    # -- eigenphases ----------------------------------------------------------

    def eigensystem(self, k: float) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenphases in (-pi, pi] and orthonormal eigenvectors of the unitary U(k)."""
        T, Z = la.schur(self.evaluator.U(k), output="complex")
        return np.angle(np.diag(T)), Z

    def theta_prime(self, v: np.ndarray, k: float) -> float:
        """d theta/dk = <v, D v> - 2 <v, L/(L^2 + k^2) v> for a normalized eigenvector v."""
        v = np.asarray(v)
        metric = float(np.real(np.vdot(v, self._D * v)))
        robin = float(np.real(np.vdot(v, self.evaluator.L_resolvent(k) @ v)))
        return metric - 2 * robin

    def tracking_step(self) -> float:
        lower, upper = phase_derivative_bounds(self.graph, self.canonical)
        fastest = max(abs(lower), abs(upper), self.graph.l_max)
        return (math.pi / 4) / fastest

    def _match(
        self, V: np.ndarray, Vn: np.ndarray, phases_n: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Assign new eigenvectors to branches by maximal overlap.

        Returns the assigned column per branch, the continued branch vectors,
        and the worst subspace overlap between a branch and its eigenvalue cluster.
        """
        overlap = np.abs(V.conj().T @ Vn)
        rows, cols = linear_sum_assignment(1.0 - overlap)
        assigned = np.empty(V.shape[1], dtype=int)
        assigned[rows] = cols

        eig = np.exp(1j * phases_n)
        close = np.abs(eig[:, None] - eig[None, :]) < settings.QGRAPH_CLUSTER_TOL

        worst = 1.0
        vectors = np.empty_like(V)
        done = np.zeros(V.shape[1], dtype=bool)
        for a in range(V.shape[1]):
            if done[a]:
                continue
            cluster = np.nonzero(close[assigned[a]])[0]
            branches = np.nonzero(np.isin(assigned, cluster))[0]
            basis = Vn[:, cluster]
            coeffs = basis.conj().T @ V[:, branches]
            worst = min(worst, float(np.linalg.norm(coeffs, axis=0).min()))
            if len(cluster) == 1:
                v = Vn[:, cluster[0]]
                vectors[:, a] = v * np.exp(-1j * np.angle(np.vdot(V[:, a], v)))
            else:
                u, _ = la.polar(basis @ coeffs)
                vectors[:, branches] = u
            done[branches] = True
        return assigned, vectors, worst

    def _branch_phase(self, k: float, reference: np.ndarray) -> float:
        phases, Z = self.eigensystem(k)
        idx = int(np.argmax(np.abs(Z.conj().T @ reference)))
        return float(phases[idx])

    def _refine_crossing(self, k_lo: float, k_hi: float, v_lo: np.ndarray, target: float, branch: int) -> float:
        """Root of the branch phase (relative to the crossed multiple of 2pi) on [k_lo, k_hi]."""

        def g(k: float) -> float:
            return float(_wrap(self._branch_phase(k, v_lo) - target))

        g_lo, g_hi = g(k_lo), g(k_hi)
        if g_lo == 0.0:
            return k_lo
        if g_hi == 0.0:
            return k_hi
        if g_lo * g_hi > 0:
            raise DegenerateBranch(k=k_lo, branch=branch)
        return float(brentq(g, k_lo, k_hi, xtol=settings.QGRAPH_ROOT_TOL, rtol=4 * np.finfo(float).eps))

    def track(
        self, k_max: float, k_start: Optional[float] = None, record: bool = False
    ) -> Tuple[List[Tuple[float, int]], Optional[EigenphaseTrack]]:
        """
        Follow all eigenphase branches from k_start to k_max.

        Returns:
            List of (k, branch) phase crossings through 0 mod 2pi, and the
            sampled track when record is set

        Raises:
            TrackingLoss: continuity cannot be restored by halving the step
        """
        step = self.tracking_step()
        k = k_start if k_start is not None else min(1e-6, step / 10)
        phases, V = self.eigensystem(k)
        theta = phases.copy()
        crossings: List[Tuple[float, int]] = []

        track = None
        if record:
            track = EigenphaseTrack(ks=[], phases=[], derivatives=[])
            self._record(track, k, theta, V)

        while k < k_max:
            h = min(step, k_max - k)
            for _ in range(settings.QGRAPH_MAX_REFINEMENTS + 1):
                phases_n, Vn = self.eigensystem(k + h)
                assigned, vectors, worst = self._match(V, Vn, phases_n)
                if worst > settings.QGRAPH_OVERLAP_MIN:
                    break
                h /= 2
            else:
                raise TrackingLoss(k=k, overlap=worst, step=h)

            new_phases = phases_n[assigned]
            theta_n = theta + _wrap(new_phases - _wrap(theta))
            below = np.floor(theta / TWO_PI)
            after = np.floor(theta_n / TWO_PI)
            for branch in np.nonzero(below != after)[0]:
                target = TWO_PI * max(below[branch], after[branch])
                root = self._refine_crossing(k, k + h, V[:, branch], target, int(branch))
                crossings.append((root, int(branch)))

            k += h
            theta, V = theta_n, vectors
            if record:
                self._record(track, k, theta, V)

        logger.debug("Eigenphase tracking finished", metadata={"k_max": k_max, "crossings": len(crossings)})
        return crossings, track

    def _record(self, track: EigenphaseTrack, k: float, theta: np.ndarray, V: np.ndarray) -> None:
        track.ks.append(float(k))
        track.phases.append([float(x) for x in theta])
        track.derivatives.append([self.theta_prime(V[:, a], k) for a in range(V.shape[1])])

    # -- positive eigenvalues ----------------------------------------------------

    def find_positive_eigenvalues(self, k_max: float) -> Tuple[List[Eigenvalue], bool]:
        """
        All k_n in (0, k_max] with multiplicities.

        Returns the eigenvalues and whether their multiplicities are verified
        by monotone eigenphases. Without monotonicity every root is
        cross-checked with the argument principle.
        """
        crossings, _ = self.track(k_max)
        crossings.sort()

        merged: List[List[float]] = []
        for root, _branch in crossings:
            if merged and root - merged[-1][-1] <= settings.QGRAPH_CLUSTER_TOL * max(1.0, root):
                merged[-1].append(root)
            else:
                merged.append([root])
        eigenvalues = [Eigenvalue(k=float(np.mean(group)), multiplicity=len(group)) for group in merged]

        verified = phases_monotone(self.graph, self.canonical)
        if not verified:
            logger.warning(
                "Eigenphases are not monotone; multiplicities unverified, cross-checking zero orders",
                metadata={"l_min": self.graph.l_min, "lambda_plus_min": self.canonical.lambda_plus_min},
            )
            eigenvalues = self._cross_check(eigenvalues)

        logger.info(
            "Located positive eigenvalues",
            metadata={"k_max": k_max, "count": len(eigenvalues), "verified": verified},
        )
        return eigenvalues, verified

    def _cross_check(self, eigenvalues: List[Eigenvalue]) -> List[Eigenvalue]:
        ks = [ev.k for ev in eigenvalues]
        checked = []
        for i, ev in enumerate(eigenvalues):
            gaps = [abs(ev.k - other) for j, other in enumerate(ks) if j != i]
            radius = min([settings.QGRAPH_CONTOUR_RADIUS, ev.k / 2] + [0.4 * gap for gap in gaps])
            order = self.count_zeros(ev.k, radius)
            if order != ev.multiplicity:
                logger.warning(
                    "Zero order differs from eigenphase multiplicity",
                    metadata={"k": ev.k, "multiplicity": ev.multiplicity, "zero_order": order},
                )
            checked.append(ev.model_copy(update={"zero_order": order}))
        return checked

    # -- argument principle ----------------------------------------------------

    def _winding(self, function: Callable[[complex], complex], center: complex, radius: float, points: int) -> int:
        for n in (points, 2 * points, 4 * points, 8 * points):
            z = center + radius * np.exp(1j * TWO_PI * np.arange(n + 1) / n)
            values = np.array([function(zz) for zz in z])
            magnitude = np.abs(values)
            if magnitude.max() == 0 or magnitude.min() < 1e-12 * magnitude.max():
                raise ContourThroughZero(center=center, radius=radius)
            steps = np.angle(values[1:] / values[:-1])
            if np.abs(steps).max() < math.pi / 2:
                return int(round(steps.sum() / TWO_PI))
        raise ContourThroughZero(center=center, radius=radius)

    def count_zeros(
        self,
        center: complex,
        radius: float,
        points: Optional[int] = None,
        function: Optional[Callable[[complex], complex]] = None,
    ) -> int:
        """
        Zeros minus poles of F inside the circle |k - center| = radius.

        Pass function to wind another secular function instead of F, for
        instance the pole-free regular_secular of the evaluator. A contour
        that passes through a zero or pole is retried with the radius scaled
        by 1.37, up to three times.
        """
        points = points or settings.QGRAPH_CONTOUR_POINTS
        function = function or self.secular_F
        r = radius
        for _ in range(4):
            try:
                return self._winding(function, complex(center), r, points)
            except (ContourThroughZero, PoleProximity):
                r *= 1.37
        raise ContourThroughZero(center=center, radius=r)

    # -- negative eigenvalues -----------------------------------------------------

    def _imaginary_axis_roots(self, kappas: np.ndarray) -> List[float]:
        """
        Roots of the pole-free secular function on i*kappas.

        Odd-order roots show up as sign changes of its real values and are
        bracketed with brentq. Even-order roots touch zero without a sign
        change and are taken from local minima of the modulus.
        """
        H = self.evaluator.regular_secular
        values = np.array([H(1j * kappa) for kappa in kappas])
        real = values.real
        magnitude = np.abs(values)
        scale = float(magnitude.max(initial=0.0)) or 1.0

        roots: List[float] = []
        for i in range(len(kappas) - 1):
            if real[i] == 0.0:
                roots.append(float(kappas[i]))
            elif real[i] * real[i + 1] < 0:
                roots.append(
                    brentq(lambda x: H(1j * x).real, kappas[i], kappas[i + 1], xtol=settings.QGRAPH_ROOT_TOL)
                )
        for i in range(1, len(kappas) - 1):
            if magnitude[i] > magnitude[i - 1] or magnitude[i] > magnitude[i + 1]:
                continue
            if real[i - 1] * real[i] <= 0 or real[i] * real[i + 1] <= 0:
                continue
            result = minimize_scalar(
                lambda x: abs(H(1j * x)),
                bounds=(kappas[i - 1], kappas[i + 1]),
                method="bounded",
                options={"xatol": settings.QGRAPH_ROOT_TOL},
            )
            if abs(H(1j * result.x)) <= 1e-8 * scale:
                roots.append(float(result.x))

        distinct: List[float] = []
        for root in sorted(roots):
            if not distinct or root - distinct[-1] > 1e-8 * max(1.0, root):
                distinct.append(root)
        return distinct

    def find_negative_eigenvalues(self) -> List[NegativeEigenvalue]:
        """
        Zeros of F(i kappa) for kappa in (0, s (1 + margin)].

        The search runs on det(1 - U) prod (lambda_alpha + ik), which has the
        same zeros away from the poles and no poles, so bound states sitting
        next to a pole are bracketed like any other. Multiplicities come from
        its winding number on a small circle.

        Raises:
            ConditionViolated: more negative eigenvalues than positive eigenvalues of L
        """
        c = self.canonical
        s = spectral_bound_s(c.lambda_plus_max, self.graph.l_min)
        if s == 0.0:
            return []

        upper = s * (1 + settings.QGRAPH_NEGATIVE_SCAN_MARGIN)
        n = settings.QGRAPH_NEGATIVE_SCAN_POINTS
        # starts above zero; a zero of F at k = 0 belongs to the zero mode
        kappas = np.linspace(upper / n, upper, n)
        found = self._imaginary_axis_roots(kappas)

        poles = c.lambdas[c.lambdas > 0]
        radius = settings.QGRAPH_CONTOUR_RADIUS
        eigenvalues = []
        for kappa in found:
            if poles.size and np.min(np.abs(poles - kappa)) < settings.QGRAPH_POLE_EXCISION:
                logger.warning("Negative eigenvalue too close to a pole", metadata={"kappa": kappa})
                eigenvalues.append(NegativeEigenvalue(kappa=kappa, status=UNRESOLVED_NEAR_POLE))
                continue
            gaps = [abs(kappa - other) for other in found if other != kappa]
            r = min([radius, 0.4 * kappa] + [0.4 * gap for gap in gaps])
            order = self.count_zeros(1j * kappa, r, function=self.evaluator.regular_secular)
            if order <= 0:
                logger.debug("Discarded imaginary-axis candidate", metadata={"kappa": kappa, "order": order})
                continue
            eigenvalues.append(NegativeEigenvalue(kappa=kappa, multiplicity=order))

        count = sum(ev.multiplicity or 0 for ev in eigenvalues)
        if count > c.d_plus:
            raise ConditionViolated(condition="negative count <= d_plus", lhs=count, rhs=c.d_plus)

        logger.info("Located negative eigenvalues", metadata={"s": s, "count": count})
        return eigenvalues

    # -- zero eigenvalue --------------------------------------------------------------

    def C_matrix(self, k: float) -> np.ndarray:
        """C(l; k): l/(2i/k + l) on the diagonal, (2i/k)/(2i/k + l) between the two ends of an edge."""
        lengths = self._D
        a = 2j / k
        C = np.diag(lengths / (a + lengths)).astype(complex)
        omega = self.graph.index.omega_array()
        C[np.arange(lengths.size), omega] = a / (a + lengths)
        return C

    @staticmethod
    def _unit_multiplicity(M: np.ndarray, quantity: str) -> int:
        """Nullity of M - 1 by a singular-value threshold, refusing ambiguous gaps."""
        tol = settings.QGRAPH_CLUSTER_TOL
        singular = la.svdvals(M - np.eye(M.shape[0]))
        ambiguous = singular[(singular >= tol) & (singular < tol * settings.QGRAPH_RANK_GAP)]
        if ambiguous.size:
            raise EigenvalueClusterAmbiguous(quantity=quantity, distance=float(ambiguous.min()), tolerance=tol)
        return int(np.sum(singular < tol))

    def zero_mode_multiplicities(self, k: float = 1.0) -> ZeroMode:
        """
        g0 from the eigenvalue one of S(k) C(l; k), N from the eigenvalue one of U(0).

        Raises:
            EigenvalueClusterAmbiguous: g0 differs between k and 2k, or a gap is unresolved
        """
        g0 = self._unit_multiplicity(self.evaluator.S(k) @ self.C_matrix(k), "S(k)C(l;k)")
        g0_check = self._unit_multiplicity(self.evaluator.S(2 * k) @ self.C_matrix(2 * k), "S(k)C(l;k)")
        if g0 != g0_check:
            raise EigenvalueClusterAmbiguous(quantity="g0 across k", distance=abs(g0 - g0_check), tolerance=0.0)
        N = self._unit_multiplicity(self.evaluator.U(0.0), "U(0)")

        expected = self.graph.kirchhoff_zero_mode() if self.canonical.is_standard_kirchhoff else None
        if expected is not None and (g0, N) != expected:
            logger.warning(
                "Zero modes differ from the Kirchhoff count",
                metadata={"g0": g0, "N": N, "expected": list(expected)},
            )
        return ZeroMode(g0=g0, N=N, expected=expected)

    # -- full spectrum ----------------------------------------------------------------

    def compute(self, k_max: float) -> Spectrum:
        logger.info("Computing spectrum", metadata={"k_max": k_max, "E": self.graph.E, "V": self.graph.V})
        positive, verified = self.find_positive_eigenvalues(k_max)
        length = sigma_and_lkappa(self.graph, self.canonical)
        return Spectrum(
            positive=positive,
            zero=self.zero_mode_multiplicities(),
            negative=self.find_negative_eigenvalues(),
            k_max=float(k_max),
            condition_flags=ConditionFlags(
                phases_monotone=phases_monotone(self.graph, self.canonical),
                orbit_sum_absolute=length.satisfied,
                multiplicities_verified=verified,
            ),
        )


def weyl_check(spectrum: Spectrum, total_length: float, Ks: Sequence[float]) -> List[Dict[str, Any]]:
    """Rows (K, N(K), L K / pi, deviation) of the Weyl-law comparison."""
    rows = []
    for K in Ks:
        count = spectrum.counting(K)
        expected = total_length * K / math.pi
        rows.append({"K": float(K), "N": count, "weyl": expected, "deviation": count - expected})
    return rows
