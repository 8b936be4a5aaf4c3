"""
Self-adjoint boundary conditions A F + B F' = 0 and their canonical form.

The canonical data consists of the projector P onto ker B, Q = 1 - P, and
the self-adjoint map L on ran B* (extended by zero on ker B), so that the
conditions read P F = 0 and L Q F + Q F' = 0.
"""

import math
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, ConfigDict

from qgraph.config import settings
from qgraph.core.graph import MetricGraph
from qgraph.exceptions import (
    ABStarNotSelfAdjoint,
    BoundaryConditionError,
    NonLocalBlocks,
    ParameterCountMismatch,
    RankDecisionAmbiguous,
    RankDeficient,
)
from qgraph.logging import get_logger
from qgraph.utils import matrix_to_pairs

logger = get_logger("boundary", metadata={"component": "boundary"})

INF = math.inf


class BoundaryConditions(BaseModel):
    """
    Raw boundary conditions.

    Attributes:
        A: 2E x 2E complex matrix acting on boundary values
        B: 2E x 2E complex matrix acting on inward derivatives
        vertex_blocks: optional grouping of edge ends by vertex; when present
            A and B must not couple ends of different groups
        kind: factory that produced the pair, for reports
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    A: np.ndarray
    B: np.ndarray
    vertex_blocks: Optional[Tuple[Tuple[int, ...], ...]] = None
    kind: str = "explicit"

    @property
    def size(self) -> int:
        return int(self.A.shape[0])

    def swapped(self) -> "BoundaryConditions":
        """The pair (-B, A), whose S-matrix is -S(A, B; 1/k)."""
        return BoundaryConditions(A=-self.B, B=self.A, vertex_blocks=self.vertex_blocks, kind=f"{self.kind}~")


def _as_matrix(value: Any, size: int) -> np.ndarray:
    matrix = np.array(value, dtype=complex)
    if matrix.ndim == 0:
        matrix = matrix * np.eye(size, dtype=complex)
    return matrix


def validate(bc: BoundaryConditions, g: Optional[MetricGraph] = None) -> BoundaryConditions:
    """
    Check the maximal-rank, self-adjointness and locality conditions.

    Args:
        bc: Raw boundary conditions
        g: Graph whose edge-end count fixes the expected size

    Returns:
        The same BoundaryConditions object, now known to be admissible

    Raises:
        BoundaryConditionError: A or B has the wrong shape
        RankDeficient: rank (A, B) < 2E
        ABStarNotSelfAdjoint: A B* differs from its adjoint
        NonLocalBlocks: declared vertex blocks are violated
    """
    A, B = bc.A, bc.B
    size = 2 * g.E if g is not None else A.shape[0]
    for name, matrix in (("A", A), ("B", B)):
        if matrix.shape != (size, size):
            raise BoundaryConditionError(
                message=f"{name} has shape {matrix.shape}, expected ({size}, {size})",
                matrix=name,
            )

    singular = la.svdvals(np.hstack([A, B]))
    threshold = settings.QGRAPH_RANK_TOL * max(singular[0], 1e-300)
    rank = int(np.sum(singular > threshold)) if singular[0] > 0 else 0
    if rank < size:
        raise RankDeficient(rank=rank, required=size)

    product = A @ B.conj().T
    deviation = float(np.linalg.norm(product - product.conj().T, 2))
    scale = float(np.linalg.norm(A, 2) * np.linalg.norm(B, 2))
    tolerance = settings.QGRAPH_SELF_ADJOINT_TOL * max(scale, 1.0)
    if deviation > tolerance:
        raise ABStarNotSelfAdjoint(deviation=deviation, tolerance=tolerance)

    if bc.vertex_blocks is not None:
        outside = np.ones((size, size), dtype=bool)
        for block in bc.vertex_blocks:
            idx = np.array(block, dtype=int)
            outside[np.ix_(idx, idx)] = False
        max_offblock = float(max(np.abs(A[outside]).max(initial=0.0), np.abs(B[outside]).max(initial=0.0)))
        norm = max(float(np.abs(A).max()), float(np.abs(B).max()), 1.0)
        if max_offblock > settings.QGRAPH_RANK_TOL * norm:
            raise NonLocalBlocks(max_offblock=max_offblock)

    return bc


def _kernel_projector(B: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Projector onto ker B, an orthonormal kernel basis, and the rank threshold used."""
    size = B.shape[0]
    if not np.any(B):
        return np.eye(size, dtype=complex), np.eye(size, dtype=complex), 0.0

    _, singular, vh = la.svd(B)
    threshold = settings.QGRAPH_RANK_TOL * singular[0]
    band = (singular >= threshold) & (singular < threshold * settings.QGRAPH_RANK_GAP)
    if np.any(band):
        raise RankDecisionAmbiguous(singular_value=float(singular[band].min()), threshold=threshold)

    rank = int(np.sum(singular >= threshold))
    kernel = vh[rank:].conj().T
    return kernel @ kernel.conj().T, kernel, threshold


def _eigenspace(projector: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the range of an orthogonal projector."""
    values, vectors = la.eigh((projector + projector.conj().T) / 2)
    return vectors[:, values > 0.5]


class CanonicalBC(BaseModel):
    """
    Canonical form (P, Q, L) with the eigen-decomposition of L.

    W is stored as its adjoint: the columns of Wstar are, in order, the
    eigenvectors of the nonzero eigenvalues lambdas, an orthonormal basis of
    ran Q intersected with ker L (r vectors) and a basis of ker B (s vectors).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    A: np.ndarray
    B: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    L: np.ndarray
    Wstar: np.ndarray
    lambdas: np.ndarray
    r: int
    s: int
    kind: str = "explicit"

    @property
    def size(self) -> int:
        return int(self.P.shape[0])

    @property
    def W(self) -> np.ndarray:
        return self.Wstar.conj().T

    @property
    def d(self) -> int:
        return int(self.lambdas.size)

    @property
    def d_plus(self) -> int:
        return int(np.sum(self.lambdas > 0))

    @property
    def d_minus(self) -> int:
        return int(np.sum(self.lambdas < 0))

    @property
    def is_robin(self) -> bool:
        return self.d > 0

    @property
    def is_standard_kirchhoff(self) -> bool:
        """Kirchhoff conditions with every vertex coupling zero."""
        return self.kind == "kirchhoff" and not self.is_robin

    @property
    def lambda_plus_min(self) -> float:
        positive = self.lambdas[self.lambdas > 0]
        return float(positive.min()) if positive.size else INF

    @property
    def lambda_minus_min(self) -> float:
        negative = self.lambdas[self.lambdas < 0]
        return float(np.abs(negative).min()) if negative.size else INF

    @property
    def lambda_plus_max(self) -> float:
        positive = self.lambdas[self.lambdas > 0]
        return float(positive.max()) if positive.size else 0.0

    @property
    def lambda_max(self) -> float:
        return float(np.abs(self.lambdas).max()) if self.d else 0.0

    @property
    def lambda_min(self) -> float:
        return float(np.abs(self.lambdas).min()) if self.d else INF

    @property
    def kernel_dimension(self) -> int:
        """dim ker B."""
        return self.s

    @cached_property
    def tilde(self) -> "CanonicalBC":
        """Canonical data of the swapped pair (-B, A)."""
        return canonicalize(BoundaryConditions(A=-self.B, B=self.A))

    def S_infinity(self) -> np.ndarray:
        return np.eye(self.size, dtype=complex) - 2 * self.P

    def S_zero(self) -> np.ndarray:
        return -np.eye(self.size, dtype=complex) + 2 * self.tilde.P

    def residual(self, values: np.ndarray, derivatives: np.ndarray) -> float:
        """Largest violation of P F = 0 and L Q F + Q F' = 0 for the given boundary data."""
        first = self.P @ values
        second = self.L @ self.Q @ values + self.Q @ derivatives
        return float(max(np.abs(first).max(initial=0.0), np.abs(second).max(initial=0.0)))

    def to_dict(self) -> Dict[str, Any]:
        def finite(x: float) -> Union[float, str]:
            return x if math.isfinite(x) else "inf"

        return {
            "P": matrix_to_pairs(self.P),
            "L": matrix_to_pairs(self.L),
            "lambdas": [float(x) for x in self.lambdas],
            "d": self.d,
            "r": self.r,
            "s": self.s,
            "d_plus": self.d_plus,
            "d_minus": self.d_minus,
            "lambda_plus_min": finite(self.lambda_plus_min),
            "lambda_minus_min": finite(self.lambda_minus_min),
            "lambda_plus_max": self.lambda_plus_max,
            "lambda_max": self.lambda_max,
            "lambda_min": finite(self.lambda_min),
        }


def canonicalize(bc: BoundaryConditions) -> CanonicalBC:
    """
    Compute P, Q and L = (B restricted to ran B*)^-1 A Q, and diagonalize L.

    The pair is assumed validated. Rank decisions use the singular-value
    threshold QGRAPH_RANK_TOL times the largest singular value of B.

    Raises:
        RankDecisionAmbiguous: a singular value of B sits too close to the threshold
    """
    A = np.asarray(bc.A, dtype=complex)
    B = np.asarray(bc.B, dtype=complex)
    size = A.shape[0]
    identity = np.eye(size, dtype=complex)

    P, kernel, threshold = _kernel_projector(B)
    Q = identity - P
    if threshold > 0:
        B_plus = la.pinv(B, atol=threshold)
        L = Q @ B_plus @ A @ Q
    else:
        L = np.zeros((size, size), dtype=complex)
    L = (L + L.conj().T) / 2

    values, vectors = la.eigh(L)
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    nonzero = np.abs(values) > settings.QGRAPH_RANK_TOL * scale
    lambdas = values[nonzero]
    V_lambda = vectors[:, nonzero]

    V_r = _eigenspace(Q - V_lambda @ V_lambda.conj().T)
    V_P = kernel
    Wstar = np.hstack([V_lambda, V_r, V_P])

    canonical = CanonicalBC(
        A=A,
        B=B,
        P=P,
        Q=Q,
        L=L,
        Wstar=Wstar,
        lambdas=np.asarray(lambdas, dtype=float),
        r=int(V_r.shape[1]),
        s=int(V_P.shape[1]),
        kind=bc.kind,
    )
    logger.debug(
        "Canonicalized boundary conditions",
        metadata={"kind": bc.kind, "d": canonical.d, "r": canonical.r, "s": canonical.s},
    )
    return canonical


def boundary_value_basis(bc: BoundaryConditions) -> Tuple[np.ndarray, np.ndarray]:
    """
    Basis of all boundary data (F, F') satisfying A F + B F' = 0.

    Returns two 2E x 2E arrays whose columns pair up as (F, F').
    """
    size = bc.size
    null = la.null_space(np.hstack([bc.A, bc.B]))
    return null[:size], null[size:]


def _place_blocks(g: MetricGraph, blocks: Sequence[Tuple[np.ndarray, np.ndarray]], kind: str) -> BoundaryConditions:
    size = 2 * g.E
    A = np.zeros((size, size), dtype=complex)
    B = np.zeros((size, size), dtype=complex)
    for ends, (A_v, B_v) in zip(g.vertex_ends, blocks):
        idx = np.array(ends, dtype=int)
        degree = len(ends)
        if degree == 0:
            continue
        if A_v.shape != (degree, degree) or B_v.shape != (degree, degree):
            raise ParameterCountMismatch(kind=kind, expected=degree, received=int(A_v.shape[0]))
        A[np.ix_(idx, idx)] = A_v
        B[np.ix_(idx, idx)] = B_v
    return BoundaryConditions(A=A, B=B, vertex_blocks=g.vertex_ends, kind=kind)


def kirchhoff_block(degree: int, mu: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Generalized Kirchhoff block: continuity rows plus sum(F') + mu f = 0."""
    A_v = np.zeros((degree, degree), dtype=complex)
    B_v = np.zeros((degree, degree), dtype=complex)
    for i in range(degree - 1):
        A_v[i, i] = 1.0
        A_v[i, i + 1] = -1.0
    A_v[degree - 1, degree - 1] = mu
    B_v[degree - 1, :] = 1.0
    return A_v, B_v


def _per_item(value: Any, count: int, kind: str) -> List[float]:
    if value is None:
        return [0.0] * count
    if np.ndim(value) == 0:
        return [float(value)] * count
    values = [float(x) for x in value]
    if len(values) != count:
        raise ParameterCountMismatch(kind=kind, expected=count, received=len(values))
    return values


def factory(kind: str, g: MetricGraph, params: Optional[Dict[str, Any]] = None) -> BoundaryConditions:
    """
    Assemble local boundary conditions of a standard type.

    Args:
        kind: One of dirichlet, neumann, kirchhoff, robin, blocks
        g: The graph
        params: kirchhoff takes "mu" (scalar or one value per vertex), robin
            takes "lambda" (scalar or one value per edge end), blocks takes
            "blocks", a list of per-vertex (A_v, B_v) matrix pairs

    Returns:
        BoundaryConditions with vertex blocks declared

    Raises:
        ParameterCountMismatch: parameters do not match the vertex degrees
    """
    params = params or {}
    kind = kind.lower()
    degrees = g.vertex_degrees
    size = 2 * g.E

    if kind == "dirichlet":
        blocks = [(np.eye(d, dtype=complex), np.zeros((d, d), dtype=complex)) for d in degrees]
    elif kind == "neumann":
        blocks = [(np.zeros((d, d), dtype=complex), np.eye(d, dtype=complex)) for d in degrees]
    elif kind == "kirchhoff":
        mus = _per_item(params.get("mu"), g.V, kind)
        blocks = [kirchhoff_block(d, mu) if d else (np.zeros((0, 0)), np.zeros((0, 0))) for d, mu in zip(degrees, mus)]
    elif kind == "robin":
        lambdas = _per_item(params.get("lambda"), size, kind)
        blocks = [
            (np.diag([lambdas[j] for j in ends]).astype(complex), np.eye(len(ends), dtype=complex))
            for ends in g.vertex_ends
        ]
    elif kind == "blocks":
        raw = params.get("blocks") or []
        if len(raw) != g.V:
            raise ParameterCountMismatch(kind=kind, expected=g.V, received=len(raw))
        blocks = []
        for (A_v, B_v), d in zip(raw, degrees):
            blocks.append((np.array(A_v, dtype=complex).reshape(d, d), np.array(B_v, dtype=complex).reshape(d, d)))
    else:
        raise BoundaryConditionError(message=f"Unknown boundary-condition type '{kind}'", kind=kind)

    bc = _place_blocks(g, blocks, kind)
    logger.debug("Assembled boundary conditions", metadata={"kind": kind, "size": size})
    return bc


def explicit(A: Any, B: Any, g: Optional[MetricGraph] = None) -> BoundaryConditions:
    """Boundary conditions from full matrices, without a declared vertex grouping."""
    size = 2 * g.E if g is not None else np.asarray(A).shape[0]
    return BoundaryConditions(A=_as_matrix(A, size), B=_as_matrix(B, size), kind="explicit")
