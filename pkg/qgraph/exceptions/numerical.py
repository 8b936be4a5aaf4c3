"""
Errors raised by scattering, spectral and trace-formula computations.
"""

from typing import Any, List, Optional

from qgraph.exceptions.base import ComputationError


class NumericalError(ComputationError):
    error_type = "numerical_error"

    def __init__(self, message: str, **values: Any):
        for name, value in values.items():
            setattr(self, name, value)
        super().__init__(
            message=message,
            details=[{"type": self.error_type, "msg": message, **{k: _plain(v) for k, v in values.items()}}],
        )


def _plain(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


class PoleProximity(NumericalError):
    """Raised when k lies within the exclusion radius of a pole on the imaginary axis."""

    error_type = "pole_proximity"

    def __init__(self, k: complex = 0j, pole: complex = 0j, radius: float = 0.0):
        super().__init__(
            f"k={complex(k):.6g} is within {radius:.1e} of the pole {complex(pole):.6g}",
            k=complex(k),
            pole=complex(pole),
            radius=float(radius),
        )


class TrackingLoss(NumericalError):
    """Raised when eigenvector continuity cannot be restored by step refinement."""

    error_type = "tracking_loss"

    def __init__(self, k: float = 0.0, overlap: float = 0.0, step: float = 0.0):
        super().__init__(
            f"Lost eigenphase branch near k={k:.12g}: overlap {overlap:.3f} at step {step:.3e}",
            k=float(k),
            overlap=float(overlap),
            step=float(step),
        )


class DegenerateBranch(NumericalError):
    """Raised when a branch eigenvector cannot be identified at a crossing."""

    error_type = "degenerate_branch"

    def __init__(self, k: float = 0.0, branch: int = 0):
        super().__init__(
            f"Branch {branch} is ambiguous at k={k:.12g}", k=float(k), branch=int(branch)
        )


class ContourThroughZero(NumericalError):
    """Raised when every contour radius tried passes through a zero of F."""

    error_type = "contour_through_zero"

    def __init__(self, center: complex = 0j, radius: float = 0.0):
        super().__init__(
            f"Contour of radius {radius:.3e} around {complex(center):.9g} passes through a zero",
            center=complex(center),
            radius=float(radius),
        )


class EigenvalueClusterAmbiguous(NumericalError):
    """Raised when the gap separating an eigenvalue cluster at 1 is below tolerance."""

    error_type = "eigenvalue_cluster_ambiguous"

    def __init__(self, quantity: str = "", distance: float = 0.0, tolerance: float = 0.0):
        super().__init__(
            f"Cannot count eigenvalue one of {quantity}: nearest outsider at {distance:.3e}, "
            f"cluster tolerance {tolerance:.1e}",
            quantity=quantity,
            distance=float(distance),
            tolerance=float(tolerance),
        )


class QuadratureNotConverged(NumericalError):
    """Raised when successive quadrature refinements disagree beyond tolerance."""

    error_type = "quadrature_not_converged"

    def __init__(self, difference: float = 0.0, tolerance: float = 0.0, what: str = "integral"):
        super().__init__(
            f"Quadrature of {what} did not converge: refinements differ by {difference:.3e} "
            f"(tolerance {tolerance:.1e})",
            difference=float(difference),
            tolerance=float(tolerance),
            what=what,
        )


class ConditionViolated(NumericalError):
    """Raised when a length or strip condition required for absolute convergence does not hold."""

    error_type = "condition_violated"

    def __init__(self, condition: str = "", lhs: float = 0.0, rhs: float = 0.0):
        super().__init__(
            f"Condition {condition} violated: {lhs:.6g} vs {rhs:.6g}",
            condition=condition,
            lhs=float(lhs),
            rhs=float(rhs),
        )


class TailNotControlled(NumericalError):
    """Raised when the spectral-sum remainder beyond K_max exceeds tolerance."""

    error_type = "tail_not_controlled"

    def __init__(self, k_max: float = 0.0, bound: float = 0.0, tolerance: float = 0.0, required: Optional[float] = None):
        message = f"Spectral tail beyond K_max={k_max:.6g} bounded by {bound:.3e} > {tolerance:.1e}"
        if required is not None:
            message += f"; K_max >= {required:.6g} needed"
        super().__init__(message, k_max=float(k_max), bound=float(bound), tolerance=float(tolerance))


class FitIllConditioned(NumericalError):
    """Raised when the small-t fit of the heat trace is unreliable."""

    error_type = "fit_ill_conditioned"

    def __init__(self, condition_number: float = 0.0, residual: float = 0.0):
        super().__init__(
            f"Heat-trace fit ill-conditioned (cond={condition_number:.3e}, residual={residual:.3e})",
            condition_number=float(condition_number),
            residual=float(residual),
        )


class IdentityCheckFailed(NumericalError):
    """Raised when one or more sampled identities exceed their tolerance."""

    error_type = "identity_check_failed"

    def __init__(self, failures: Optional[List[str]] = None, path: str = ""):
        failures = list(failures or [])
        message = f"Identity check failed: {', '.join(failures)}"
        if path:
            message += f" (see {path})"
        super().__init__(message, failures=failures, path=path)
