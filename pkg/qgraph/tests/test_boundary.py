import math

import numpy as np
import pytest

from qgraph.core import canonicalize, explicit, factory, interval, star, validate
from qgraph.core.boundary import BoundaryConditions, boundary_value_basis, kirchhoff_block
from qgraph.exceptions import (
    ABStarNotSelfAdjoint,
    BoundaryConditionError,
    NonLocalBlocks,
    ParameterCountMismatch,
    RankDeficient,
)


def test_neumann_interval_canonical_form(neumann_interval):
    """Test that Neumann conditions have no kernel and no Robin part."""
    c = neumann_interval.canonical
    assert (c.d, c.r, c.s) == (0, 2, 0)
    assert not c.is_robin
    np.testing.assert_allclose(c.P, np.zeros((2, 2)), atol=1e-14)
    np.testing.assert_allclose(c.S_infinity(), np.eye(2), atol=1e-14)


def test_dirichlet_interval_canonical_form(dirichlet_interval):
    """Test that Dirichlet conditions project onto every edge end."""
    c = dirichlet_interval.canonical
    assert (c.d, c.r, c.s) == (0, 0, 2)
    np.testing.assert_allclose(c.P, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(c.S_infinity(), -np.eye(2), atol=1e-14)


def test_kirchhoff_star_canonical_form(kirchhoff_star):
    """Test that the Kirchhoff center has a two-dimensional kernel of B."""
    c = kirchhoff_star.canonical
    assert c.s == 2
    assert c.r == 4
    assert c.d == 0
    assert math.isinf(c.lambda_plus_min)
    assert c.lambda_plus_max == 0.0


def test_robin_interval_canonical_form(robin_interval):
    """Test that Robin conditions put lambda on the diagonal of L."""
    c = robin_interval.canonical
    assert c.d == 2 and c.d_plus == 2 and c.d_minus == 0
    np.testing.assert_allclose(c.lambdas, [1.0, 1.0])
    np.testing.assert_allclose(c.L, np.eye(2), atol=1e-12)
    assert c.lambda_plus_min == pytest.approx(1.0)
    assert c.to_dict()["lambda_minus_min"] == "inf"


def test_canonical_basis_is_unitary(build_setup):
    """Test that the eigenbasis of L, completed by ker L and ker B, is orthonormal."""
    g = star([1.0, 1.5, 2.0])
    setup = build_setup(g, "kirchhoff", {"mu": [0.7, 0.0, -0.3, 0.0]})
    W = setup.canonical.W
    np.testing.assert_allclose(W @ W.conj().T, np.eye(6), atol=1e-12)
    assert setup.canonical.d == 2
    assert setup.canonical.d_plus == 1 and setup.canonical.d_minus == 1


def test_canonical_data_reproduce_boundary_conditions(robin_interval):
    """Test that every admissible boundary datum satisfies P F = 0 and L Q F + Q F' = 0."""
    values, derivatives = boundary_value_basis(robin_interval.bc)
    assert robin_interval.canonical.residual(values, derivatives) < 1e-12


def test_kirchhoff_block_rows():
    """Test the continuity and current-conservation rows of a Kirchhoff block."""
    A_v, B_v = kirchhoff_block(3, mu=2.0)
    np.testing.assert_allclose(A_v.real, [[1, -1, 0], [0, 1, -1], [0, 0, 2]])
    np.testing.assert_allclose(B_v.real, [[0, 0, 0], [0, 0, 0], [1, 1, 1]])


def test_factory_rejects_wrong_parameter_count():
    """Test that per-edge-end Robin parameters must match 2E."""
    with pytest.raises(ParameterCountMismatch) as excinfo:
        factory("robin", interval(), {"lambda": [1.0, 2.0, 3.0]})
    assert excinfo.value.exit_code == 1


def test_factory_rejects_unknown_kind():
    """Test that an unknown boundary type is refused."""
    with pytest.raises(BoundaryConditionError):
        factory("periodic", interval())


def test_blocks_kind_places_vertex_blocks():
    """Test that per-vertex blocks are placed on the vertex edge ends."""
    g = star([1.0, 1.0])
    center = kirchhoff_block(2)
    leaf = ([[1.0]], [[0.0]])
    bc = factory("blocks", g, {"blocks": [center, leaf, leaf]})
    validate(bc, g)
    assert bc.vertex_blocks == g.vertex_ends
    np.testing.assert_allclose(bc.A[2, 2], 1.0)
    np.testing.assert_allclose(bc.B[2, 2], 0.0)


def test_validate_rejects_rank_deficient_pair():
    """Test that a pair (A, B) of rank below 2E is refused."""
    g = interval()
    bc = explicit([[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]], g)
    with pytest.raises(RankDeficient) as excinfo:
        validate(bc, g)
    assert excinfo.value.exit_code == 1


def test_validate_rejects_non_self_adjoint_pair():
    """Test that A B* must be self-adjoint."""
    g = interval()
    bc = explicit([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 0.0]], g)
    with pytest.raises(ABStarNotSelfAdjoint):
        validate(bc, g)


def test_validate_rejects_coupling_across_vertices():
    """Test that declared vertex blocks forbid coupling between different vertices."""
    g = interval()
    A = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    B = np.zeros((2, 2), dtype=complex)
    bc = BoundaryConditions(A=A, B=B, vertex_blocks=g.vertex_ends)
    with pytest.raises(NonLocalBlocks):
        validate(bc, g)


def test_validate_rejects_wrong_shape():
    """Test that matrices must act on all 2E edge ends."""
    g = star([1.0, 1.0])
    bc = explicit(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(BoundaryConditionError):
        validate(bc, g)


def test_swapped_pair_exchanges_roles():
    """Test that the swapped pair (-B, A) turns Neumann into Dirichlet."""
    g = interval()
    bc = validate(factory("neumann", g), g)
    swapped = canonicalize(bc.swapped())
    assert swapped.s == 2
