"""
Edge S-matrix, metric matrix T(k), quantum map U(k) = S(k) T(k) and Lambda(k).

All evaluations go through the eigen-decomposition of L:

    S(k) = W* diag(-(lambda - ik)/(lambda + ik), 1_r, -1_s) W

which is valid uniformly in k, including k = 0. The direct formula
-(A + ikB)^-1 (A - ikB) is kept as a cross-check.
"""

from functools import cached_property
from typing import Any, Dict, Optional

import numpy as np

from qgraph.config import settings
from qgraph.core.boundary import CanonicalBC
from qgraph.core.graph import MetricGraph, structural_mask
from qgraph.exceptions import BoundaryConditionError, PoleProximity
from qgraph.logging import get_logger

logger = get_logger("scattering", metadata={"component": "scattering"})


class SMatrixEvaluator:
    """
    Evaluate S, S', T, U and Lambda of a graph at complex wave numbers.

    Evaluation refuses wave numbers closer than exclusion_radius to the
    points +-i*lambda_alpha.
    """

    def __init__(
        self,
        g: MetricGraph,
        canonical: CanonicalBC,
        exclusion_radius: Optional[float] = None,
    ):
        if canonical.size != 2 * g.E:
            raise BoundaryConditionError(
                message=f"Boundary conditions act on {canonical.size} edge ends, graph has {2 * g.E}",
            )
        self.graph = g
        self.canonical = canonical
        self.exclusion_radius = (
            exclusion_radius
            if exclusion_radius is not None
            else settings.QGRAPH_EXCLUSION_FACTOR * max(1.0, canonical.lambda_max)
        )
        self._Wstar = canonical.Wstar
        self._W = canonical.W
        self._lambdas = canonical.lambdas
        self._constant_diag = np.concatenate([np.ones(canonical.r), -np.ones(canonical.s)]).astype(complex)
        self._omega = g.index.omega_array()
        self._ends = g.end_lengths

    @property
    def poles(self) -> np.ndarray:
        """Poles of S in the complex k plane, k = i*lambda_alpha."""
        return 1j * self._lambdas

    @property
    def size(self) -> int:
        return 2 * self.graph.E

    def check(self, k: complex) -> None:
        if not self._lambdas.size:
            return
        for pole in np.concatenate([1j * self._lambdas, -1j * self._lambdas]):
            if abs(k - pole) < self.exclusion_radius:
                raise PoleProximity(k=k, pole=pole, radius=self.exclusion_radius)

    def _diag(self, k: complex) -> np.ndarray:
        lam = self._lambdas
        robin = -(lam - 1j * k) / (lam + 1j * k)
        return np.concatenate([robin, self._constant_diag])

    def _from_diag(self, diag: np.ndarray) -> np.ndarray:
        return (self._Wstar * diag) @ self._W

    def S(self, k: complex) -> np.ndarray:
        k = complex(k)
        self.check(k)
        return self._from_diag(self._diag(k))

    def S_direct(self, k: complex) -> np.ndarray:
        """-(A + ikB)^-1 (A - ikB); undefined where A + ikB is singular (k = 0 for singular A)."""
        k = complex(k)
        self.check(k)
        A, B = self.canonical.A, self.canonical.B
        return -np.linalg.solve(A + 1j * k * B, A - 1j * k * B)

    def S_batch(self, ks: np.ndarray) -> np.ndarray:
        """S at many wave numbers at once, shape (len(ks), 2E, 2E). No pole check."""
        ks = np.asarray(ks, dtype=complex)
        lam = self._lambdas[None, :]
        robin = -(lam - 1j * ks[:, None]) / (lam + 1j * ks[:, None])
        diag = np.concatenate([robin, np.broadcast_to(self._constant_diag, (ks.size, self._constant_diag.size))], axis=1)
        return np.einsum("ap,kp,pb->kab", self._Wstar, diag, self._W)

    def _resolvent_diag(self, k: complex) -> np.ndarray:
        """Eigenvalues of L/(L^2 + k^2) in the W basis."""
        lam = self._lambdas
        return np.concatenate([lam / (lam**2 + k**2), np.zeros(self._constant_diag.size)])

    def L_resolvent(self, k: complex) -> np.ndarray:
        """L (L^2 + k^2)^-1."""
        k = complex(k)
        self.check(k)
        return self._from_diag(self._resolvent_diag(k))

    def S_prime(self, k: complex) -> np.ndarray:
        """dS/dk = -2i L/(L^2 + k^2) S(k); regular at k = 0."""
        k = complex(k)
        self.check(k)
        diag = -2j * self._resolvent_diag(k) * self._diag(k)
        return self._from_diag(diag)

    def S_prime_batch(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)
        lam = self._lambdas[None, :]
        k = ks[:, None]
        robin = -2j * lam / (lam**2 + k**2) * (-(lam - 1j * k) / (lam + 1j * k))
        zeros = np.zeros((ks.size, self._constant_diag.size), dtype=complex)
        diag = np.concatenate([robin, zeros], axis=1)
        return np.einsum("ap,kp,pb->kab", self._Wstar, diag, self._W)

    def L_resolvent_batch(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)
        lam = self._lambdas[None, :]
        robin = lam / (lam**2 + ks[:, None] ** 2)
        zeros = np.zeros((ks.size, self._constant_diag.size), dtype=complex)
        diag = np.concatenate([robin, zeros], axis=1)
        return np.einsum("ap,kp,pb->kab", self._Wstar, diag, self._W)

    def U_batch(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=complex)
        S = self.S_batch(ks)
        return S[:, :, self._omega] * np.exp(1j * ks[:, None] * self._ends[None, :])[:, None, :]

    def Lambda_batch(self, ks: np.ndarray) -> np.ndarray:
        return -2j * self.L_resolvent_batch(ks) + 1j * self.graph.D()[None, :, :]

    def S_prime_from_inverse(self, k: complex) -> np.ndarray:
        """-(1/2k) [S(k) - S(k)^-1] S(k), using S(k)^-1 = S(-k). Needs k != 0."""
        k = complex(k)
        S = self.S(k)
        return -(S - self.S(-k)) @ S / (2 * k)

    def T(self, k: complex) -> np.ndarray:
        """T[omega(j), j] = exp(i k l_j); zero elsewhere."""
        k = complex(k)
        size = self.size
        T = np.zeros((size, size), dtype=complex)
        T[self._omega, np.arange(size)] = np.exp(1j * k * self._ends)
        return T

    def U(self, k: complex) -> np.ndarray:
        """Quantum map U(k) = S(k) T(k), built by column scaling without forming T."""
        S = self.S(k)
        return S[:, self._omega] * np.exp(1j * complex(k) * self._ends)[None, :]

    def regular_secular(self, k: complex) -> complex:
        """
        det(1 - U(k)) prod_alpha (lambda_alpha + ik), entire in k.

        In the eigenbasis of L the row of 1 - U belonging to lambda_alpha is
        multiplied by lambda_alpha + ik, which cancels the pole at k = i lambda_alpha.
        On the imaginary axis the value is real.
        """
        k = complex(k)
        lam = self._lambdas
        N = self._W @ self.T(k) @ self._Wstar
        a = np.concatenate([lam + 1j * k, np.ones(self._constant_diag.size)])
        b = np.concatenate([lam - 1j * k, -self._constant_diag])
        return complex(np.linalg.det(np.diag(a) + b[:, None] * N))

    def U_inverse(self, k: complex) -> np.ndarray:
        """U(k)^-1 = T(-k) S(-k)."""
        return self.T(-k) @ self.S(-k)

    def Lambda(self, k: complex) -> np.ndarray:
        """Lambda(k) = -2i L/(L^2 + k^2) + i D(l)."""
        return -2j * self.L_resolvent(k) + 1j * self.graph.D()

    def vertex_smatrix(self, v: int, k: complex) -> np.ndarray:
        """
        Vertex S-matrix -(A_v + ikB_v)^-1 (A_v - ikB_v) on the edge ends of vertex v.

        Rows and columns follow the ascending edge-end order of the vertex.
        """
        ends = np.array(self.graph.vertex_ends[v], dtype=int)
        idx = np.ix_(ends, ends)
        A_v = self.canonical.A[idx]
        B_v = self.canonical.B[idx]
        return -np.linalg.solve(A_v + 1j * k * B_v, A_v - 1j * k * B_v)

    @cached_property
    def transition_mask(self) -> np.ndarray:
        """Structural transition mask from |S| at the reference wave number."""
        return structural_mask(self.graph, self.S(settings.QGRAPH_REFERENCE_K))

    def series_large_k(self, k: complex, terms: int) -> np.ndarray:
        """1 - 2P + 2 sum_{n=1}^{terms} (iL/k)^n, convergent for |k| > lambda_max."""
        c = self.canonical
        out = c.S_infinity().copy()
        step = 1j * c.L / k
        power = np.eye(self.size, dtype=complex)
        for _ in range(terms):
            power = power @ step
            out += 2 * power
        return out

    def series_small_k(self, k: complex, terms: int) -> np.ndarray:
        """-1 + 2P~ - 2 sum_{n=1}^{terms} (ik L~)^n, convergent for |k| < lambda_min."""
        tilde = self.canonical.tilde
        out = self.canonical.S_zero().copy()
        step = 1j * k * tilde.L
        power = np.eye(self.size, dtype=complex)
        for _ in range(terms):
            power = power @ step
            out -= 2 * power
        return out

    def inversion_residual(self, k: float) -> float:
        """|| S(A, B; k) + S(-B, A; 1/k) || for real k != 0."""
        swapped = SMatrixEvaluator(self.graph, self.canonical.tilde)
        return float(np.linalg.norm(self.S(k) + swapped.S(1.0 / k), 2))

    def norm_bound_strip(self, kappa: float) -> float:
        """Bound on ||S(k + i kappa)|| for 0 < kappa < lambda+_min."""
        lam = self.canonical.lambda_plus_min
        if not np.isfinite(lam):
            return 1.0
        return max(1.0, (lam + kappa) / (lam - kappa))

    def norm_bound_far(self, kappa: float) -> float:
        """Bound on ||S(k + i kappa)|| for kappa > lambda_max."""
        lam = self.canonical.lambda_max
        return (kappa + lam) / (kappa - lam)

    def limits_and_expansions(self, terms: int = 12) -> Dict[str, Any]:
        """
        S_infinity, S_0 and truncation residuals of both power series.

        The series are compared at |k| = 4 lambda_max and |k| = lambda_min / 4
        against the bounds 2 q^(terms+1)/(1-q), q = 1/4, scaled by ||L|| powers.
        """
        c = self.canonical
        report: Dict[str, Any] = {
            "S_infinity": c.S_infinity(),
            "S_zero": c.S_zero(),
            "constant": not c.is_robin,
        }
        if not c.is_robin:
            logger.info("S-matrix is k-independent; expansion comparison skipped")
            return report

        q = 0.25
        bound = 2 * q ** (terms + 1) / (1 - q)
        k_large = 4 * c.lambda_max * np.exp(0.3j)
        k_small = 0.25 * c.lambda_min * np.exp(0.3j)
        report["large_k"] = {
            "k": k_large,
            "residual": float(np.linalg.norm(self.S(k_large) - self.series_large_k(k_large, terms), 2)),
            "bound": bound,
        }
        report["small_k"] = {
            "k": k_small,
            "residual": float(np.linalg.norm(self.S(k_small) - self.series_small_k(k_small, terms), 2)),
            "bound": bound,
        }
        logger.debug(
            "Checked S-matrix expansions",
            metadata={"large_k": report["large_k"]["residual"], "small_k": report["small_k"]["residual"]},
        )
        return report
