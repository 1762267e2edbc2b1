"""Spectral inequalities and positivity checks for bump potentials.

Two families of checks live here.  The inverse Lieb-Thirring routines
compare integral norms of a nonpositive potential with moments of its
negative spectrum and report the measured ratio (the inequalities assert
a finite constant, not a value, so stability of the ratio is the useful
signal).  The positivity routines exploit the Riccati structure: whenever
a potential has the form W' + W^2 the quadratic form factorizes as
integral of (phi' - W phi)^2 >= 0, so the operator has no negative
spectrum no matter how deep the potential looks pointwise.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse import csc_matrix, diags
from scipy.sparse.linalg import eigsh

from .decompose import Decomposition
from .eigen import DIRICHLET, NEUMANN, merged_spectrum, moment_sum, truncation_radius
from .potentials import GridFunction, Interval, Potential, interval_norm, pc_profile_on, sample

__all__ = [
    "correction_potential",
    "ilt_check_a",
    "ilt_check_b",
    "length_moment_diag",
    "positivity_check",
]


def _require_nonpositive(V: Potential) -> None:
    sup = V.support()
    if sup is None:
        return
    lo, hi = sup.lo, sup.hi
    prof = pc_profile_on(V, lo, hi)
    if prof is not None:
        edges, values = prof
    else:
        gf = sample(V, Interval(lo, hi), 1e-3)
        edges, values = gf.x, gf.values
    j = int(np.argmax(values))
    if values[j] > 1e-12:
        raise ValueError(
            "potential is not nonpositive: V = %.6g near x = %.6g"
            % (values[j], 0.5 * (edges[j] + edges[j + 1]))
        )


def _resolve_domain(V: Potential, domain: Optional[Interval], E_floor: float):
    """Default truncation plus the wall rule: a domain starting exactly at 0
    is the half-line problem and gets a Neumann condition at the origin."""
    if domain is None:
        R = truncation_radius(V, E_floor, 50.0)
        return Interval(-R, R), DIRICHLET
    bc = NEUMANN if domain.lo == 0.0 else DIRICHLET
    return domain, bc


def _abs_power_integral(V: Potential, r: float, I: Interval) -> float:
    prof = pc_profile_on(V, I.lo, I.hi)
    if prof is None:
        gf = sample(V, I, 1e-3)
        prof = gf.x, gf.values
    edges, values = prof
    widths = np.diff(edges)
    return float(np.sum(widths * np.abs(values) ** r))


def ilt_check_a(V: Potential, p: float, domain: Optional[Interval] = None,
                E_floor: float = 1e-8) -> dict:
    """Compare the integral of |V|^(p+1/2) with the eigenvalue moment sum.

    For nonpositive V and p in (0, 1/2] both sides scale the same way under
    V -> g^2 V(gx), so the reported ratio is a scale-invariant witness of
    the comparison constant.  Zero potential reports ratio 0 by convention.
    """
    if not 0.0 < p <= 0.5:
        raise ValueError("exponent p must lie in (0, 1/2]")
    _require_nonpositive(V)
    I, bc = _resolve_domain(V, domain, E_floor)
    lhs = _abs_power_integral(V, p + 0.5, I)
    spectrum = merged_spectrum(V, I, bc, E_floor=E_floor)
    rhs = float(moment_sum(spectrum, p))
    if rhs > 0.0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else math.inf
    return {
        "p": p,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "entries": spectrum.to_json(),
        "domain": [I.lo, I.hi],
    }


def ilt_check_b(V: Potential, p: float, E0: float,
                domain: Optional[Interval] = None, E_floor: float = 1e-8) -> dict:
    """Unit-cell variant for p >= 1/2, valid only when E_1 <= E0.

    The left side sums (integral of |V| over each unit cell)^(2p) across a
    tiling of the truncation; unlike the p <= 1/2 check this quantity is
    not rescale-invariant, which is why the precondition on the top of the
    spectrum is needed.
    """
    if not p >= 0.5:
        raise ValueError("exponent p must be at least 1/2")
    if not E0 > 0:
        raise ValueError("spectral ceiling E0 must be positive")
    _require_nonpositive(V)
    I, bc = _resolve_domain(V, domain, E_floor)
    spectrum = merged_spectrum(V, I, bc, E_floor=E_floor)
    mags = spectrum.magnitudes
    E1 = float(mags[0]) if len(mags) else 0.0
    if E1 > E0:
        raise ValueError(
            "measured E_1 = %.6g exceeds the ceiling E0 = %.6g" % (E1, E0)
        )
    lhs = 0.0
    sup = V.support()
    if sup is not None:
        a = I.lo
        while a < I.hi:
            cell = Interval(a, min(a + 1.0, I.hi))
            if cell.hi > sup.lo and cell.lo < sup.hi:
                lhs += interval_norm(V, cell, "L1") ** (2.0 * p)
            a += 1.0
    rhs = float(moment_sum(spectrum, p))
    if rhs > 0.0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else math.inf
    return {
        "p": p,
        "E0": E0,
        "E1": E1,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "entries": spectrum.to_json(),
        "domain": [I.lo, I.hi],
    }


def _abs_q_minus_w2(q: float, w0: float, w1: float, h: float) -> float:
    """Exact integral of |q - W(x)^2| over a cell where W runs linearly w0->w1."""
    d = w1 - w0
    if abs(d) <= 1e-14 * (abs(w0) + abs(w1) + 1.0):
        u = 0.5 * (w0 + w1)
        return h * abs(q - u * u)
    ulo, uhi = (w0, w1) if w0 < w1 else (w1, w0)
    pts = [ulo, uhi]
    if q > 0.0:
        r = math.sqrt(q)
        pts += [root for root in (-r, r) if ulo < root < uhi]
        pts.sort()

    def F(u):
        return q * u - u ** 3 / 3.0

    total = sum(abs(F(b) - F(a)) for a, b in zip(pts[:-1], pts[1:]))
    return h / (uhi - ulo) * total


def correction_potential(D: Decomposition) -> dict:
    """The integrable correction V0 = Q - W^2 left after removing W' from V.

    Returned as a piecewise-constant trace holding the exact cell averages
    of Q - W^2 on the merged decomposition grid; ``l1_norm`` is the exact
    integral of |Q - W^2| (computed per cell in closed form, so it can
    slightly exceed the trace's own absolute integral wherever Q - W^2
    changes sign inside a cell).
    """
    W, Q = D.W, D.Q
    xs = np.union1d(W.x, Q.x)
    qs = Q(0.5 * (xs[:-1] + xs[1:]))
    ws = W(xs)
    cells = np.empty(len(xs) - 1)
    means = np.empty(len(xs) - 1)
    for i, (a, b) in enumerate(zip(xs[:-1], xs[1:])):
        w0, w1 = ws[i], ws[i + 1]
        cells[i] = _abs_q_minus_w2(qs[i], w0, w1, b - a)
        means[i] = qs[i] - (w0 * w0 + w0 * w1 + w1 * w1) / 3.0
    V0 = GridFunction(xs, means, interp="pc")
    return {"V0": V0, "l1_norm": float(np.sum(cells))}


def positivity_check(W: GridFunction, domain: Optional[Interval] = None) -> dict:
    """Ground state of -d^2/dx^2 + (W' + W^2) with Dirichlet walls.

    Computed through the factorized quadratic form: for trial functions
    vanishing at the walls, <phi, H phi> equals the integral of
    (phi' - W phi)^2, which a piecewise-linear finite-element basis
    evaluates exactly (three-point Gauss per cell).  The form is manifestly
    nonnegative and the Ritz value bounds the true ground state from above,
    so ``nonneg`` is a robust verdict however deep W' + W^2 dips.
    """
    if domain is None:
        domain = Interval(float(W.x[0]), float(W.x[-1]))
    span = domain.length
    if not (span > 0 and domain.finite):
        raise ValueError("positivity check needs a finite domain of positive length")
    inner = W.x[(W.x > domain.lo) & (W.x < domain.hi)]
    base = np.concatenate(([domain.lo], inner, [domain.hi]))
    h_max = span / 400.0
    nodes = [base[0]]
    for a, b in zip(base[:-1], base[1:]):
        m = max(1, int(math.ceil((b - a) / h_max)))
        nodes.extend(a + (b - a) * j / m for j in range(1, m + 1))
    x = np.asarray(nodes)
    w = W(x)
    h = np.diff(x)
    wL, wR = w[:-1], w[1:]

    # 3-point Gauss on each cell: exact for the quartic form integrand
    gauss_t = 0.5 + 0.5 * np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    gauss_w = 0.5 * np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
    aLL = np.zeros_like(h)
    aLR = np.zeros_like(h)
    aRR = np.zeros_like(h)
    for t, om in zip(gauss_t, gauss_w):
        Wg = wL * (1.0 - t) + wR * t
        bL = -1.0 / h - Wg * (1.0 - t)
        bR = 1.0 / h - Wg * t
        aLL += om * h * bL * bL
        aLR += om * h * bL * bR
        aRR += om * h * bR * bR

    n = len(x)
    diag = np.zeros(n)
    diag[:-1] += aLL
    diag[1:] += aRR
    mdiag = np.zeros(n)
    mdiag[:-1] += h / 3.0
    mdiag[1:] += h / 3.0
    # Dirichlet closure: keep interior nodes only
    A = diags([aLR[1:-1], diag[1:-1], aLR[1:-1]], [-1, 0, 1], format="csc")
    B = diags([h[1:-1] / 6.0, mdiag[1:-1], h[1:-1] / 6.0], [-1, 0, 1], format="csc")
    vals = eigsh(csc_matrix(A), k=1, M=csc_matrix(B), sigma=-1.0, which="LM",
                 return_eigenvectors=False)
    ground = float(vals[0])
    return {"ground": ground, "nonneg": ground >= -1e-7}


def length_moment_diag(D: Decomposition, spectrum, p: float) -> dict:
    """Summability diagnostic: inverse-square length moments versus E moments.

    Every eigenvalue-bearing family satisfies the length law (core length at
    least 4 E_n^(-1/2), dyadic growth outward), which gives
    sum over its intervals of |J|^(-2p) <= C(p) E_n^p with
    C(p) = 4^(4p) * 2 / (1 - 4^(-p)); the constant keeps headroom beyond
    the geometric tail bound.  ``sum_L`` reports all intervals of the
    truncated run for reference, but only eigenvalue-bearing families are
    held against the bound -- free tiles have finite length by truncation
    only, and without eigenvalues the inequality is vacuous.
    """
    if not p > 0:
        raise ValueError("moment exponent p must be positive")
    sum_L = sum(iv.length ** (-2.0 * p) for iv, _ in D.partition)
    eigen_fams = {
        lab.n
        for (iv, lab), prov in zip(D.partition, D.provenance)
        if lab.k == 0 and prov.get("has_eigenvalue")
    }
    sum_L_paired = sum(
        iv.length ** (-2.0 * p) for iv, lab in D.partition if lab.n in eigen_fams
    )
    sum_E = float(moment_sum(spectrum, p))
    C = 4.0 ** (4.0 * p) * 2.0 / (1.0 - 4.0 ** (-p))
    bound = C * sum_E
    if sum_E > 0.0:
        ok = sum_L_paired <= bound
        note = "eigenvalue-bearing families checked against C(p) * sum E^p"
    else:
        ok = sum_L_paired == 0.0
        note = "no eigenvalues: bound vacuous, sums reported for reference"
    return {
        "p": p,
        "sum_L": sum_L,
        "sum_L_paired": sum_L_paired,
        "sum_E": sum_E,
        "C": C,
        "bound": bound,
        "ok": bool(ok),
        "note": note,
    }
