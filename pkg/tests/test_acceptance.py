"""Acceptance gate: one test per headline capability.

Each test states its tolerance and time budget inline; together they cover
shallow-well asymptotics, the certified interval decomposition on a small
corpus, positivity of the factored operator, the trace formula, inverse
Lieb-Thirring comparability, sparse construction, and the structural
property checks (transfer determinant, count monotonicity, Prüfer vs direct
integration, Jacobi identity, angle-increment bounds).
"""

import math
import time

import numpy as np
import pytest

from boundstates import (
    DIRICHLET,
    DipoleBump,
    GridFunction,
    Interval,
    PruferState,
    SparseSum,
    SquareBump,
    Zero,
    angle_increment_scan,
    bump_eigenvalue,
    count_below,
    eigenfunction,
    ilt_check_a,
    integrate_schrodinger,
    jacobi_identity_residual,
    lowest_eigenvalue,
    merged_spectrum,
    place_bumps,
    positivity_check,
    prufer_evolve,
    rescale,
    riccati_potential,
    run_decomposition,
    trace_formula_residual,
    transfer_matrix,
    verify_decomposition,
    verify_sparse,
    whole_line,
)


@pytest.fixture(scope="module")
def corpus():
    """Five decompositions: zero, square, dipole, dipole pair, 3-bump sparse.

    Built once; the elapsed time covers construction plus verification and
    is checked by the certificate test below.
    """
    sp = place_bumps([0.4, 0.2, 0.1], kind="square", rho=4.0)
    members = [
        ("zero", Zero(), whole_line(8.0)),
        ("square", SquareBump(3.0), whole_line(40.0)),
        ("dipole", DipoleBump(1.1), whole_line(40.0)),
        ("dipole_pair",
         SparseSum((DipoleBump(1.1, -20.0), DipoleBump(1.0, 20.0))),
         whole_line(80.0)),
        ("sparse3", sp, whole_line(sp.support().hi + 40.0)),
    ]
    out = []
    t0 = time.monotonic()
    for name, V, dom in members:
        D = run_decomposition(V, dom)
        spec = merged_spectrum(V, dom.interval, DIRICHLET)
        report = verify_decomposition(V, D, spectrum=spec)
        out.append({"name": name, "V": V, "domain": dom, "D": D,
                    "spectrum": spec, "report": report})
    return {"members": out, "elapsed": time.monotonic() - t0}


def test_1_square_bump_shallow_asymptotics():
    t0 = time.monotonic()
    devs = []
    for g in (0.02, 0.01, 0.005):
        E = bump_eigenvalue("square", g)
        ratio = E / g ** 2
        assert 0.95 <= ratio <= 1.05
        devs.append(abs(ratio - 1.0))
    assert devs[1] < devs[0] and devs[2] < devs[1]
    assert time.monotonic() - t0 < 5.0


def test_2_dipole_bump_shallow_asymptotics():
    t0 = time.monotonic()
    devs = []
    for g in (0.2, 0.1):
        E = bump_eigenvalue("dipole", g)
        ratio = E / (g ** 4 / 9.0)
        assert 0.8 <= ratio <= 1.2
        devs.append(abs(ratio - 1.0))
    assert devs[1] < devs[0]
    assert time.monotonic() - t0 < 10.0


def test_3_certified_decomposition_on_corpus(corpus):
    assert len(corpus["members"]) == 5
    for m in corpus["members"]:
        rep = m["report"]
        for row in rep["intervals"]:
            # blanket certificate, checked for every interval produced
            assert row["w2"] <= row["bound"] * (1.0 + 1e-9) + 1e-12, \
                (m["name"], row)
            assert row["q1"] <= row["bound"] * (1.0 + 1e-9) + 1e-12, \
                (m["name"], row)
            assert row["geometry_ok"], (m["name"], row)
        # length law ell_n >= 4 E_n^(-1/2) for eigenvalue-bearing families
        assert rep["lengths_ok"], m["name"]
        # reconstruction V = W' + Q in L1 at the working grid step
        assert rep["l1_residual"] <= 1e-4, (m["name"], rep["l1_residual"])
        assert rep["ok"], m["name"]
    assert corpus["elapsed"] < 120.0


def test_4_factored_operator_positivity(corpus):
    for m in corpus["members"]:
        ground = positivity_check(m["D"].W)["ground"]
        assert ground >= -1e-7, (m["name"], ground)


def test_5_trace_formula_two_profiles():
    t0 = time.monotonic()
    xs = np.linspace(-math.pi, math.pi, 61)
    hump = GridFunction(xs, 0.3 * (1.0 + np.cos(xs)) / 2.0, interp="pl")
    ys = np.linspace(0.0, 5.0, 81)
    skew = GridFunction(ys, 0.25 * np.sin(math.pi * ys / 5.0) ** 2,
                        interp="pl")
    for W in (hump, skew):
        rep = trace_formula_residual(W, k_max=12.0, n_k=1200)
        assert abs(rep["residual"]) <= 1e-3, rep
        assert rep["tail"] <= 5e-4, rep
    assert time.monotonic() - t0 < 60.0


def test_6_inverse_lieb_thirring_comparability():
    three = SparseSum((SquareBump(0.4, -12.0), SquareBump(0.5, 0.0),
                       SquareBump(0.45, 12.0)))
    cases = [SquareBump(0.5), SquareBump(2.0, 0.7), three]
    for V in cases:
        base = ilt_check_a(V, 0.5, domain=Interval(-120.0, 120.0))
        assert math.isfinite(base["ratio"]) and base["ratio"] > 0
        scaled = ilt_check_a(rescale(V, 2.0), 0.5,
                             domain=Interval(-60.0, 60.0))
        assert scaled["ratio"] == pytest.approx(base["ratio"], rel=0.01)
        doubled = ilt_check_a(V, 0.5, domain=Interval(-240.0, 240.0))
        assert doubled["ratio"] == pytest.approx(base["ratio"], rel=0.05)


def test_7_sparse_construction_hits_targets():
    t0 = time.monotonic()
    targets = [0.04, 0.02, 0.01]
    V = place_bumps(targets, kind="square")
    rep = verify_sparse(V, targets)
    assert rep["ok"]
    assert rep["count"] == 3  # exactly three negative eigenvalues
    for check, target in zip(rep["checks"], targets):
        assert check["ok"]
        for E in check["E"]:
            assert E <= target  # at most the prescribed envelope

    pair_targets = [4e-3, 1e-3]
    Vd = place_bumps(pair_targets, kind="dipole")
    repd = verify_sparse(Vd, pair_targets)
    assert repd["ok"]
    assert repd["count"] == 2 * len(pair_targets)  # matched +- pairs
    signs = [e["sign"] for e in repd["entries"]]
    assert signs.count("+") == signs.count("-") == len(pair_targets)
    assert time.monotonic() - t0 < 120.0


def test_8_structural_property_suite(corpus):
    # transfer matrix has unit determinant
    for V, E in ((SquareBump(3.0), -1.3), (DipoleBump(1.1), 0.7),
                 (Zero(), -0.2)):
        T = transfer_matrix(V, E, -2.0, 2.0).as_array()
        assert abs(np.linalg.det(T) - 1.0) <= 1e-9

    # zero count is monotone in the energy
    I = Interval(-40.0, 40.0)
    counts = [count_below(SquareBump(3.0), I, DIRICHLET, E)
              for E in (-2.5, -1.0, -0.3, -1e-6, 0.0)]
    assert counts == sorted(counts)

    # polar evolution agrees with direct integration
    xs = np.linspace(-math.pi, math.pi, 61)
    W = GridFunction(xs, 0.3 * (1.0 + np.cos(xs)) / 2.0, interp="pl")
    fine = np.linspace(-math.pi, math.pi, 1801)
    Q = GridFunction(fine, W(fine) ** 2, interp="pl")
    k = 1.3
    state = prufer_evolve(W, Q, PruferState(0.0, 0.0, -math.pi, k), 1.0)
    trace = integrate_schrodinger(riccati_potential(W), k * k,
                                  Interval(-math.pi, 1.0), 0.0, k)
    assert abs(state.y - trace.endpoint[1]) < 1e-6

    # Jacobi identity for a certified eigenpair
    V = SquareBump(0.5)
    I = Interval(-12.0, 12.0)
    lam = lowest_eigenvalue(V, I, tol=1e-12)
    f = eigenfunction(V, lam, I, n=8000)
    phi = GridFunction([-12.0, -1.0, 2.0, 12.0], [0.0, 1.0, 0.7, 0.0], "pl")
    assert jacobi_identity_residual(V, f, lam, phi) <= 1e-6

    # angle increments stay within the computed per-interval bound
    for m in corpus["members"]:
        for row in angle_increment_scan(m["D"], [0.5, 2.0]):
            assert abs(row["err"]) <= row["bound"] + 1e-9, (m["name"], row)
