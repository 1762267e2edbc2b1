import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boundstates.decompose import (
    Decomposition,
    IntervalLabel,
    run_decomposition,
    whole_line,
)
from boundstates.odes import PruferState, integrate_schrodinger, prufer_evolve
from boundstates.potentials import (
    GridFunction,
    Interval,
    SparseSum,
    SquareBump,
    Zero,
)
from boundstates.scattering import (
    angle_increment_scan,
    maximal_function,
    plane_wave_coefficients,
    reflection_coefficient,
    riccati_potential,
    trace_formula_residual,
)
from boundstates.scattering import _z_reflection


def cosine_hump(amplitude=0.3, nodes=61):
    xs = np.linspace(-math.pi, math.pi, nodes)
    return GridFunction(xs, amplitude * (1.0 + np.cos(xs)) / 2.0, interp="pl")


def rect_well_r2(g, k):
    # textbook reflection probability for the depth-g well of width 2
    kp = math.sqrt(k * k + g)
    num = g * g * math.sin(2 * kp) ** 2 / (4 * k * k * kp * kp)
    return num / (1.0 + num)


# ---------------------------------------------------------------------------
# reflection coefficients


def test_reflection_of_zero_potential():
    assert reflection_coefficient(Zero(), 1.0) == 0.0


@pytest.mark.parametrize("g,k", [(1.0, 0.7), (0.5, 1.3), (2.0, 0.4)])
def test_reflection_matches_rectangular_well_formula(g, k):
    r = reflection_coefficient(SquareBump(g), k)
    assert abs(abs(r) ** 2 - rect_well_r2(g, k)) < 1e-8
    assert abs(r) < 1.0


def test_flux_conservation_on_k_grid():
    V = SquareBump(1.5, 2.0)
    for k in np.linspace(0.2, 5.0, 12):
        a, b = plane_wave_coefficients(V, float(k))
        assert abs(abs(a) ** 2 - abs(b) ** 2 - 1.0) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.2, max_value=6.0), st.floats(min_value=0.1, max_value=3.0))
def test_flux_conservation_property(k, g):
    a, b = plane_wave_coefficients(SquareBump(g, -1.5), k)
    assert abs(abs(a) ** 2 - abs(b) ** 2 - 1.0) < 1e-9


def test_reflection_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        reflection_coefficient(SquareBump(1.0), 0.0)
    with pytest.raises(ValueError):
        plane_wave_coefficients(SquareBump(1.0), -2.0)


# ---------------------------------------------------------------------------
# the W' + W^2 wrapper


def test_riccati_potential_evaluates_profile():
    W = cosine_hump()
    V = riccati_potential(W)
    xs = np.array([-2.0, -0.3, 0.9, 2.2])
    slopes = W.derivative()
    assert np.allclose(V(xs), slopes(xs) + W(xs) ** 2, rtol=0, atol=1e-14)
    assert V.pc_cells() is None
    assert V.support() == Interval(-math.pi, math.pi)


def test_riccati_potential_requires_pl_profile():
    W = GridFunction(np.array([0.0, 1.0]), np.array([1.0]), interp="pc")
    with pytest.raises(ValueError):
        riccati_potential(W)


def test_conserving_frame_agrees_with_transfer_route():
    # the same reflection data through two unrelated integrators
    W = cosine_hump()
    V = riccati_potential(W)
    for k in (0.3, 1.0, 2.5):
        z1, z2 = _z_reflection(W, k)
        r_direct = reflection_coefficient(V, k)
        assert abs(-z2 / z1.conjugate() - r_direct) < 1e-6
        assert abs(abs(z1) ** 2 - abs(z2) ** 2 - 1.0) < 1e-9


# ---------------------------------------------------------------------------
# trace formula


def test_trace_formula_zero_profile():
    W = GridFunction(np.array([0.0, 1.0]), np.zeros(2), interp="pl")
    rep = trace_formula_residual(W)
    assert rep["lhs"] == 0.0 and rep["rhs"] == 0.0 and rep["residual"] == 0.0


def test_trace_formula_cosine_hump():
    rep = trace_formula_residual(cosine_hump(), k_max=12.0, n_k=1200)
    assert rep["residual"] <= 1e-3
    assert rep["tail"] <= 5e-4
    assert rep["rhs"] == pytest.approx(-cosine_hump().square_integral(), rel=1e-14)


def test_trace_formula_asymmetric_hump():
    xs = np.linspace(0.0, 5.0, 81)
    W = GridFunction(xs, 0.25 * np.sin(math.pi * xs / 5.0) ** 2, interp="pl")
    rep = trace_formula_residual(W, k_max=12.0, n_k=1200)
    assert rep["residual"] <= 1e-3
    assert rep["tail"] <= 5e-4


def test_trace_formula_scaling():
    W = cosine_hump()
    r1 = trace_formula_residual(W, k_max=12.0, n_k=800)
    r2 = trace_formula_residual(W.scale_values(2.0), k_max=12.0, n_k=800)
    assert r2["rhs"] == pytest.approx(4.0 * r1["rhs"], rel=1e-14)
    assert r2["lhs"] == pytest.approx(r2["rhs"], abs=2e-3)


def test_trace_formula_rejects_bad_arguments():
    W = cosine_hump()
    with pytest.raises(ValueError):
        trace_formula_residual(W, k_max=0.0)
    with pytest.raises(ValueError):
        trace_formula_residual(W, n_k=4)


# ---------------------------------------------------------------------------
# angle increments


def zero_field_decomposition():
    xs = np.array([0.0, 7.0])
    W = GridFunction(xs, np.zeros(2), interp="pl")
    Q = GridFunction(xs, np.zeros(1), interp="pc")
    partition = [
        (Interval(0.0, 1.0), IntervalLabel(0, 0)),
        (Interval(1.0, 3.0), IntervalLabel(0, 1)),
        (Interval(3.0, 7.0), IntervalLabel(0, 2)),
    ]
    return Decomposition(
        partition=partition, W=W, Q=Q, lengths={}, certificates=[],
        provenance=[{} for _ in partition], domain=whole_line(7.0), meta={},
    )


def test_angle_scan_exact_for_free_rotation():
    rows = angle_increment_scan(zero_field_decomposition(), [0.5, 1.0, 2.0])
    assert len(rows) == 9
    for row in rows:
        assert abs(row["err"]) <= 1e-9
        assert row["increment"] == pytest.approx(2 * row["k"] * (2.0 ** row["n"] / 2.0),
                                                 rel=1e-9)


def test_angle_scan_errors_within_computed_bounds():
    D = run_decomposition(SquareBump(3.0), whole_line(40.0))
    rows = angle_increment_scan(D, [0.5, 2.0])
    assert rows
    for row in rows:
        assert abs(row["err"]) <= row["bound"] + 1e-9


def test_angle_scan_error_not_growing_along_the_chain():
    V = SparseSum((SquareBump(3.0, -6.0), SquareBump(2.5, 6.0)))
    D = run_decomposition(V, whole_line(40.0))
    rows = angle_increment_scan(D, [0.5, 1.0, 2.0])
    for k in (0.5, 1.0, 2.0):
        errs = [abs(r["err"]) for r in rows if r["k"] == k]
        # the defect lives at the wells; the far tiles contribute almost nothing
        assert errs[-1] < 0.2 * max(errs)


def test_angle_scan_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        angle_increment_scan(zero_field_decomposition(), [1.0, 0.0])


def test_prufer_polar_state_matches_direct_integration():
    # y = e^logR sin(psi/2) for the fields (W, Q=W^2) solves the same
    # equation as -y'' + (W' + W^2) y = k^2 y; integrate both ways
    W = cosine_hump()
    fine = np.linspace(-math.pi, math.pi, 1801)
    Q = GridFunction(fine, W(fine) ** 2, interp="pl")
    V = riccati_potential(W)
    a0 = -math.pi
    for k in (0.8, 1.7):
        state = PruferState(logR=0.0, psi=0.0, x=a0, k=k)
        for x_to in (0.4, math.pi):
            state = prufer_evolve(W, Q, state, x_to)
            trace = integrate_schrodinger(V, k * k, Interval(a0, x_to), 0.0, k)
            _, y_direct, _ = trace.endpoint
            assert abs(state.y - y_direct) < 1e-6


# ---------------------------------------------------------------------------
# maximal function


def test_maximal_function_zero():
    W = GridFunction(np.array([0.0, 1.0]), np.zeros(2), interp="pl")
    assert maximal_function(W, Interval(0.0, 1.0), 1.0) == 0.0


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0, 7.3])
def test_maximal_function_box_closed_form(k):
    W = GridFunction(np.array([0.0, 1.0]), np.array([1.0, 1.0]), interp="pl")
    M = maximal_function(W, Interval(0.0, 1.0), k)
    oracle = 1.0 / k if k >= math.pi / 2 else math.sin(k) / k
    assert abs(M - oracle) < 1e-10


def test_maximal_function_static_limit():
    W = GridFunction(np.array([0.0, 1.0]), np.array([1.0, 1.0]), interp="pl")
    assert maximal_function(W, Interval(0.0, 1.0), 0.0) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.0, max_value=10.0))
def test_maximal_function_bounded_by_l1_mass(k):
    W = cosine_hump()
    M = maximal_function(W, Interval(-math.pi, math.pi), k)
    assert M <= W.abs_integral() + 1e-12
    assert M >= 0.0


def test_maximal_function_sum_over_decomposition_intervals():
    D = run_decomposition(SquareBump(3.0), whole_line(40.0))
    ivs = [iv for iv, _ in D.partition]
    total = sum(maximal_function(D.W, iv, 1.0) for iv in ivs)
    assert math.isfinite(total)
    assert total <= D.W.abs_integral() + 1e-9
