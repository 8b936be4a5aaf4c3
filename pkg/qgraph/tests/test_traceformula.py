import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import erfc

from qgraph.config import settings
from qgraph.core import CauchyTestFunction, GaussianTestFunction, TraceIdentity, interval, star
from qgraph.exceptions import TailNotControlled

HEAT_TIMES = [0.01, 0.05, 0.1, 0.5]


def solve_for(setup, *test_functions):
    """Spectrum reaching far enough for every test function's tail."""
    k_max = max(setup.trace.required_kmax(h) for h in test_functions) * 1.001
    return setup.solver.compute(k_max)


@pytest.mark.parametrize(
    "fixture", ["neumann_interval", "robin_interval", "kirchhoff_loop", "kirchhoff_star"]
)
def test_orbit_sums_reproduce_matrix_traces(fixture, request):
    """Test grouped orbit sums against tr[D U^l] and -2 tr[L/(L^2 + k^2) U^l] for l <= 6."""
    trace = request.getfixturevalue(fixture).trace
    ks = np.random.default_rng(7).uniform(0.1, 30.0, 20)
    worst = trace.orbit_oracle(6, ks)
    assert worst["metric"] < 1e-9
    assert worst["robin"] < 1e-9


def test_orbit_oracle_with_mixed_vertex_conditions(build_setup):
    """Test the oracle on a star whose center and one leaf carry Robin-type couplings."""
    setup = build_setup(star([1.0, 1.5, 2.0]), "kirchhoff", {"mu": [0.7, 0.0, -0.3, 0.0]})
    ks = np.random.default_rng(3).uniform(0.1, 30.0, 20)
    worst = setup.trace.orbit_oracle(6, ks)
    assert max(worst.values()) < 1e-9


def test_neumann_interval_reduces_to_poisson_summation(neumann_interval):
    """Test TF2 on the Neumann interval with the Gaussian t = 0.05."""
    h = GaussianTestFunction(0.05)
    spectrum = solve_for(neumann_interval, h)
    report = neumann_interval.trace.evaluate_tf(spectrum, h, 6)

    theta = 1.0 + sum(math.exp(-(n**2) * 0.05) for n in range(1, 200))
    assert report.lhs.re == pytest.approx(theta, abs=1e-12)
    assert report.grouping == "tf2"
    assert report.residual < 1e-8
    # L = 0: the Robin integral vanishes identically
    assert report.terms.robin_integral.value == 0
    assert report.terms.zero_mode.re == pytest.approx(0.5)


def test_kirchhoff_star_tf2_converges(kirchhoff_star):
    """Test TF2 on the 3-star with the Gaussian t = 0.05 at n_max = 12."""
    h = GaussianTestFunction(0.05)
    spectrum = solve_for(kirchhoff_star, h)
    report = kirchhoff_star.trace.evaluate_tf(spectrum, h, 12)

    assert report.identity == TraceIdentity.TF2
    assert report.grouping == "tf2"
    assert report.flags["absolutely_convergent"]
    assert report.residual < 1e-6
    assert len(report.convergence) == 12
    assert report.convergence[-1].residual < report.convergence[0].residual
    assert report.orbit_tail_bound is not None and report.orbit_tail_bound < 1e-6
    assert report.length_condition.tail_ratio == pytest.approx(1 / 6)
    assert report.spectral_tail_bound <= settings.QGRAPH_TAIL_TOL


def test_tf1_grouping_on_request(kirchhoff_star):
    """Test that TF1 groups by topological length without a tail bound."""
    h = GaussianTestFunction(0.05)
    spectrum = solve_for(kirchhoff_star, h)
    report = kirchhoff_star.trace.evaluate_tf(spectrum, h, 8, TraceIdentity.TF1)

    assert report.grouping == "tf1"
    assert report.orbit_tail_bound is None
    assert all(row.tail_bound is None for row in report.convergence)


def test_tf2_downgrades_when_length_condition_fails(robin_interval):
    """Test that TF2 falls back to per-length grouping with a warning when l_min <= l(sigma)."""
    h = GaussianTestFunction(0.05)
    spectrum = solve_for(robin_interval, h)
    report = robin_interval.trace.evaluate_tf(spectrum, h, 6, TraceIdentity.TF2)

    assert not report.length_condition.satisfied
    assert report.length_condition.l_sigma > 4.0
    assert report.grouping == "tf1"
    assert any("l_min > l(sigma)" in warning for warning in report.warnings)
    assert report.residual < 1e-6


def test_robin_integral_closed_form(robin_interval):
    """Test the Robin integral against -e^t erfc(sqrt t) for two ends with lambda = 1."""
    t = 0.1
    value = robin_interval.trace.robin_integral_term(GaussianTestFunction(t))
    assert value.real == pytest.approx(-math.exp(t) * erfc(math.sqrt(t)), abs=1e-9)


def test_constant_amplitude_shortcut_matches_quadrature(kirchhoff_star):
    """Test A_p hhat(l_p) against direct integration for a k-independent amplitude."""
    trace = kirchhoff_star.trace
    h = GaussianTestFunction(0.5)
    orbit = trace.orbits(2)[2][0]
    amplitude = trace.orbit_amplitudes(orbit)

    shortcut = trace.convolution_term(amplitude, h)
    integrated = trace.convolution_term(amplitude, h, method="quadrature")
    assert shortcut[0] == pytest.approx(integrated[0], abs=1e-9)
    assert shortcut[1] == pytest.approx(integrated[1], abs=1e-9)
    assert abs(shortcut[0]) > 1e-3


def test_leading_coefficient_of_reflecting_orbit(neumann_interval, dirichlet_interval):
    """Test that the bouncing orbit on the interval has transition product 1 and amplitude l_p^# = 2 pi."""
    trace = neumann_interval.trace
    orbit = trace.orbits(2)[2][0]
    amplitude = trace.orbit_amplitudes(orbit)
    ks = np.array([0.5, 3.0])
    assert amplitude.leading_coefficient == pytest.approx(2 * math.pi)
    np.testing.assert_allclose(amplitude.A(ks), [2 * math.pi, 2 * math.pi])
    np.testing.assert_allclose(amplitude.A2(ks), [0.0, 0.0])
    np.testing.assert_allclose(amplitude.product(neumann_interval.evaluator.S_batch(ks)), [1.0, 1.0])
    dirichlet = dirichlet_interval.trace
    bounce = dirichlet.orbit_amplitudes(dirichlet.orbits(2)[2][0])
    np.testing.assert_allclose(bounce.product(dirichlet_interval.evaluator.S_batch(ks)), [1.0, 1.0])


@pytest.mark.parametrize("fixture", ["robin_interval", "kirchhoff_star"])
def test_heat_trace_identity(fixture, request):
    """Test the heat-trace identity at t in {0.01, 0.05, 0.1, 0.5}."""
    setup = request.getfixturevalue(fixture)
    spectrum = solve_for(setup, GaussianTestFunction(min(HEAT_TIMES)))
    reports = setup.trace.heat_trace_series(spectrum, HEAT_TIMES, 12)

    for t, report in zip(HEAT_TIMES, reports):
        assert report.identity == TraceIdentity.TF3
        assert report.test_function["params"]["t"] == t
        assert report.residual < 1e-6
        expected_volume = setup.graph.total_length / math.sqrt(4 * math.pi * t)
        assert report.terms.volume.re == pytest.approx(expected_volume)
        if setup.canonical.is_robin:
            assert report.terms.robin_integral.re == pytest.approx(-math.exp(t) * erfc(math.sqrt(t)))
        else:
            assert report.terms.robin_integral.re == 0.0


def test_spectral_tail_must_be_controlled(kirchhoff_star):
    """Test that a spectrum too short for the test function is refused."""
    h = GaussianTestFunction(0.05)
    spectrum = kirchhoff_star.solver.compute(5.0)
    with pytest.raises(TailNotControlled) as excinfo:
        kirchhoff_star.trace.evaluate_tf(spectrum, h, 4)
    assert excinfo.value.exit_code == 1


def test_required_kmax(kirchhoff_star):
    """Test that the required K_max puts the tail bound exactly at the tolerance."""
    trace = kirchhoff_star.trace
    h = GaussianTestFunction(0.05)
    required = trace.required_kmax(h)
    assert trace.spectral_tail_bound(h, required) == pytest.approx(settings.QGRAPH_TAIL_TOL, rel=1e-6)
    assert math.isinf(trace.required_kmax(CauchyTestFunction(1.0)))
    assert math.isfinite(trace.required_kmax(CauchyTestFunction(1.0), tol=1e-2))


def test_orbit_tail_bound_decays(kirchhoff_star, robin_interval):
    """Test the orbit tail bound decreases geometrically and is absent without absolute convergence."""
    h = GaussianTestFunction(0.05)
    bounds = [kirchhoff_star.trace.orbit_tail_bound(h, n) for n in (4, 8, 12)]
    assert bounds[0] > bounds[1] > bounds[2] > 0
    assert bounds[1] / bounds[0] == pytest.approx((1 / 6) ** 4)
    assert robin_interval.trace.orbit_tail_bound(h, 4) is None


def test_matrix_trace_term(robin_interval, kirchhoff_star, neumann_interval):
    """Test tr[Lambda U^l] at l = 0, for Kirchhoff conditions and for negative powers."""
    k = 2.0
    expected = -4j / (1 + k**2) + 8j
    assert robin_interval.trace.matrix_trace_term(0, k) == pytest.approx(expected, abs=1e-12)

    ev = kirchhoff_star.evaluator
    for l in (1, 3):
        expected = 1j * np.trace(ev.graph.D() @ np.linalg.matrix_power(ev.U(k), l))
        assert kirchhoff_star.trace.matrix_trace_term(l, k) == pytest.approx(expected, abs=1e-10)

    value = neumann_interval.trace.matrix_trace_term(2, 1.3)
    assert value == pytest.approx(2j * math.pi * np.exp(2j * math.pi * 1.3), abs=1e-12)
    inverse = neumann_interval.trace.matrix_trace_term(-2, 1.3)
    assert inverse == pytest.approx(-value.conjugate(), abs=1e-12)


def test_pretrace_identity(neumann_interval):
    """Test the pre-trace identity from matrix powers of U."""
    h = GaussianTestFunction(0.05)
    spectrum = solve_for(neumann_interval, h)
    check = neumann_interval.trace.pretrace_rhs(spectrum, h, 4)
    assert check.residual < 1e-6
    assert sorted(check.terms) == list(range(-4, 5))


def test_full_heat_trace_counts_negative_eigenvalues(robin_interval):
    """Test that the full heat trace adds exp(kappa^2 t) per negative eigenvalue."""
    h = GaussianTestFunction(0.05)
    spectrum = solve_for(robin_interval, h)
    t = 0.05
    positive = robin_interval.trace.spectral_lhs(spectrum, h).real
    negative = sum(math.exp(ev.kappa**2 * t) for ev in spectrum.negative)
    assert robin_interval.trace.full_heat_trace(spectrum, t) == pytest.approx(positive + negative)


@pytest.mark.parametrize(
    "fixture, gamma",
    [("neumann_interval", Fraction(1, 2)), ("dirichlet_interval", Fraction(-1, 2)), ("kirchhoff_star", Fraction(1, 2))],
)
def test_gamma_formula_equals_quarter_trace(fixture, gamma, request):
    """Test that for k-independent S the heat-trace constant is tr S / 4."""
    setup = request.getfixturevalue(fixture)
    spectrum = setup.solver.compute(5.0)
    value, orders = setup.trace.gamma_formula(spectrum)
    assert value == gamma
    assert setup.trace.quarter_trace_S() == gamma
    assert orders == []


def test_gamma_formula_for_kirchhoff_graph_is_euler_characteristic(kirchhoff_star):
    """Test gamma = (V - E)/2 on a connected Kirchhoff graph."""
    g = kirchhoff_star.graph
    spectrum = kirchhoff_star.solver.compute(5.0)
    value, _ = kirchhoff_star.trace.gamma_formula(spectrum)
    assert value == Fraction(g.V - g.E, 2)
    assert g.kirchhoff_gamma() == value


def test_robin_gamma_formula_counts_poles(robin_interval):
    """Test the imaginary-axis bookkeeping of the Robin interval."""
    spectrum = robin_interval.solver.compute(5.0)
    value, orders = robin_interval.trace.gamma_formula(spectrum)

    poles = [o for o in orders if o.kind == "pole"]
    zeros = [o for o in orders if o.kind == "zero"]
    assert [p.order for p in poles] == [2]
    assert poles[0].kappa == pytest.approx(1.0)
    assert sum(z.order for z in zeros) == spectrum.negative_count
    assert value == Fraction(1, 2)
    assert robin_interval.trace.quarter_trace_S() is None


def test_gamma_formula_with_bound_state_next_to_pole(build_setup):
    """Test gamma = 1/2 for Robin ends lambda = 1 and -1.5 when the bound state almost meets the pole."""
    setup = build_setup(interval(4.0), "robin", {"lambda": [1.0, -1.5]})
    spectrum = setup.solver.compute(5.0)
    value, orders = setup.trace.gamma_formula(spectrum)

    assert (spectrum.zero.g0, spectrum.zero.N) == (0, 1)
    assert [ev.multiplicity for ev in spectrum.negative] == [1]
    assert [(o.kind, o.order) for o in orders] == [("zero", 1), ("pole", 1)]
    assert orders[0].kappa == pytest.approx(0.99986564, abs=1e-8)
    assert orders[1].kappa == pytest.approx(1.0)
    assert (setup.canonical.d_plus, setup.canonical.d_minus) == (1, 1)
    assert value == Fraction(1, 2)


@pytest.mark.slow
@pytest.mark.parametrize(
    "fixture, gamma",
    [("neumann_interval", 0.5), ("dirichlet_interval", -0.5), ("kirchhoff_star", 0.5), ("robin_interval", 0.5)],
)
def test_heat_asymptotics_fit(fixture, gamma, request):
    """Test the fitted small-t constant against the exact value within 1e-3."""
    setup = request.getfixturevalue(fixture)
    spectrum = solve_for(setup, GaussianTestFunction(settings.QGRAPH_HEAT_T_MIN))
    result = setup.trace.heat_asymptotics(spectrum)

    assert result.gamma_formula == pytest.approx(gamma)
    assert result.difference < 1e-3
    assert abs(result.gamma_fit - gamma) < 1e-3
    assert len(result.samples) == settings.QGRAPH_HEAT_POINTS
    assert result.condition_number < 1e10
    assert result.gamma_euler == ("1/2" if fixture == "kirchhoff_star" else None)


def test_heat_asymptotics_needs_long_spectrum(neumann_interval):
    """Test that the fit refuses a spectrum that stops short of the smallest t."""
    spectrum = neumann_interval.solver.compute(20.0)
    with pytest.raises(TailNotControlled):
        neumann_interval.trace.heat_asymptotics(spectrum)


def test_length_condition_on_long_robin_interval(build_setup):
    """Test that a long enough Robin interval satisfies l_min > l(sigma)."""
    setup = build_setup(interval(8.0), "robin", {"lambda": 1.0})
    condition = setup.trace.length_condition(GaussianTestFunction(0.05))
    assert condition.satisfied
    assert 0 < condition.sigma < 1.0
    assert condition.tail_ratio < 1
