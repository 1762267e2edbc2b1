"""Sparse bump potentials with prescribed negative-eigenvalue envelopes.

A single bump (square well or dipole) in the one-bound-state regime has its
eigenvalue -E characterized by a secular equation: the decaying solution
e^(sqrt(E) x) entering from the left must leave the bump parallel to the
decaying solution e^(-sqrt(E) x) on the right.  `bump_eigenvalue` solves
this with exact transfer matrices, `invert_bump` inverts it for a target
energy, and `place_bumps` strings bumps along the half line far enough
apart that the finished sum has exactly the prescribed spectrum, one
eigenvalue per bump (two for dipoles, one per sign of the operator pair).
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .eigen import DIRICHLET, EigenvalueList, count_below, merged_spectrum, negative_spectrum
from .odes import transfer_matrix
from .potentials import DipoleBump, Interval, Potential, SparseSum, SquareBump, negate

__all__ = [
    "bump_eigenvalue",
    "invert_bump",
    "place_bumps",
    "verify_sparse",
]

_KINDS = ("square", "dipole")


def _make_bump(kind: str, g: float, center: float = 0.0):
    if kind == "square":
        return SquareBump(g, center)
    if kind == "dipole":
        return DipoleBump(g, center)
    raise ValueError(f"unknown bump kind {kind!r}; expected one of {_KINDS}")


def _secular_mismatch(V: Potential, E: float) -> float:
    """Defect of the bound-state matching condition at energy -E.

    Propagates the left-decaying state (1, sqrt(E)) across the bump and
    measures the component along the growing direction on the right; a
    root means the transported state is purely decaying, i.e. -E is an
    eigenvalue of the whole-line operator.
    """
    s = math.sqrt(E)
    T = transfer_matrix(V, -E, -1.0, 1.0).as_array()
    v = T @ np.array([1.0, s])
    return float(v[0] * (-s) - v[1])


def bump_eigenvalue(kind: str, g: float) -> float:
    """The unique negative eigenvalue -E of a single bump; returns E > 0.

    Valid in the one-bound-state regime, which is checked first by an exact
    zero count on a box wide enough for the expected tail length.  Raises
    ValueError when the bump has no resolvable eigenvalue or more than one
    (g too large for the single-level regime).
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown bump kind {kind!r}; expected one of {_KINDS}")
    if not g > 0:
        raise ValueError("bump strength g must be positive")
    V = _make_bump(kind, g)
    E_est = g * g if kind == "square" else g ** 4 / 9.0
    R = max(50.0, 20.0 / math.sqrt(E_est))
    m = count_below(V, Interval(-R, R), DIRICHLET, 0.0)
    if m == 0:
        raise ValueError(f"{kind} bump with g={g:g} has no resolvable negative eigenvalue")
    if m > 1:
        raise ValueError(
            f"{kind} bump with g={g:g} has {m} negative eigenvalues; "
            "the secular equation assumes the single-level regime"
        )
    # bracket the root of the mismatch on a log grid below the well depth
    hi = g * (1.0 - 1e-12)
    lo_floor = max(1e-16, 1e-13 * E_est)
    grid = [hi]
    while grid[-1] > lo_floor:
        grid.append(grid[-1] / math.sqrt(10.0))
    vals = [_secular_mismatch(V, E) for E in grid]
    brackets = [
        (grid[i + 1], grid[i])
        for i in range(len(grid) - 1)
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0
    ]
    if not brackets:
        raise ValueError(
            f"secular equation for {kind} bump g={g:g} has no root above the "
            f"resolution floor {lo_floor:g}"
        )
    if len(brackets) > 1:
        raise ValueError(
            f"secular equation for {kind} bump g={g:g} has {len(brackets)} roots; "
            "g is too large for the single-level regime"
        )
    a, b = brackets[0]
    return float(brentq(lambda E: _secular_mismatch(V, E), a, b,
                        xtol=1e-300, rtol=4 * np.finfo(float).eps))


def invert_bump(kind: str, targetE: float) -> float:
    """Bump strength g whose single eigenvalue is -targetE.

    Bracket expansion from the shallow-bump asymptotic guess followed by a
    root solve; the result satisfies |E(g) - targetE| <= 1e-10 targetE.
    """
    if not targetE > 0:
        raise ValueError("target eigenvalue magnitude must be positive")
    g0 = math.sqrt(targetE) if kind == "square" else (9.0 * targetE) ** 0.25

    def defect(g):
        return bump_eigenvalue(kind, g) - targetE

    g_lo = g_hi = g0
    try:
        d0 = defect(g0)
    except ValueError as err:
        raise ValueError(f"target E={targetE:g} out of range for {kind} bumps: {err}")
    try:
        if d0 < 0:
            while defect(g_hi) < 0:
                g_hi *= 1.5
                if g_hi > 1e3 * g0:
                    raise ValueError(f"target E={targetE:g} out of range for {kind} bumps")
        else:
            while defect(g_lo) > 0:
                g_lo /= 1.5
                if g_lo < 1e-3 * g0:
                    raise ValueError(f"target E={targetE:g} out of range for {kind} bumps")
    except ValueError as err:
        # bump_eigenvalue left the single-level regime during expansion
        raise ValueError(f"target E={targetE:g} out of range for {kind} bumps: {err}")
    g = brentq(defect, g_lo, g_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return float(g)


def _distinct_targets(targets: Sequence[float], slack: float) -> List[float]:
    out = [float(e) for e in targets]
    for e in out:
        if not e > 0:
            raise ValueError("targets must be positive")
    for i in range(len(out) - 1):
        if out[i + 1] > out[i] * (1.0 + 1e-12):
            raise ValueError(
                f"targets must be nonincreasing; e[{i + 1}]={out[i + 1]:g} exceeds e[{i}]={out[i]:g}"
            )
        if out[i + 1] >= out[i]:
            # break exact ties by slightly lowering the later target
            out[i + 1] = out[i] * (1.0 - slack / 8.0)
    return out


def _hits_targets(V: SparseSum, targets: Sequence[float], kind: str,
                  slack: float, x: float, tol: float) -> bool:
    """True when V on (0, 2x) has exactly the prescribed spectrum so far."""
    n = len(targets)
    I = Interval(0.0, 2.0 * x)
    E_floor = targets[-1] / 8.0
    signs = (V,) if kind == "square" else (V, negate(V))
    for Vs in signs:
        if count_below(Vs, I, DIRICHLET, 0.0) != n:
            return False
        lams = negative_spectrum(Vs, I, DIRICHLET, E_floor=E_floor, tol=tol)
        if len(lams) != n:
            return False
        for lam, e in zip(lams, targets):  # ascending lam = descending E
            if abs(-lam - 0.5 * e) > slack * e / 4.0:
                return False
    return True


def place_bumps(targets: Sequence[float], kind: str = "square",
                rho: float = 10.0, slack: float = 0.25,
                x_cap: float = 1e6, tol: float = 1e-10) -> SparseSum:
    """Sparse sum of bumps whose merged negative spectrum follows the targets.

    Bump n gets strength g_n with single-bump eigenvalue targets[n]/2 and is
    pushed out by a doubling search until the operator on (0, 2 x_n) has
    exactly n negative eigenvalues (per sign for dipoles), each within
    slack*e_i/4 of its target e_i/2.  Positions grow at least geometrically
    (x_n >= rho x_{n-1}) and keep x_n - 1 > 2 x_{n-1}, so bump supports are
    far disjoint and the levels decouple.

    Exact ties in the targets are perturbed downward (distinct targets give
    disjoint acceptance windows); an increasing pair is rejected.  Raises
    RuntimeError naming the bump whose search passed x_cap.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown bump kind {kind!r}; expected one of {_KINDS}")
    if not rho > 2:
        raise ValueError("growth ratio rho must exceed 2")
    if not 0 < slack <= 1:
        raise ValueError("slack must lie in (0, 1]")
    targets = _distinct_targets(targets, slack)
    if not targets:
        return SparseSum(())
    bumps: List = []
    x_prev = 0.0
    for n, e in enumerate(targets, start=1):
        g = invert_bump(kind, 0.5 * e)
        x = max(rho * x_prev, 2.0 * x_prev + 2.0, rho)
        while x <= x_cap:
            cand = SparseSum(tuple(bumps + [_make_bump(kind, g, x)]))
            if _hits_targets(cand, targets[:n], kind, slack, x, tol):
                break
            x *= 2.0
        else:
            raise RuntimeError(
                f"placement of bump {n} (target {e:g}) exceeded the position cap {x_cap:g}"
            )
        bumps.append(_make_bump(kind, g, x))
        x_prev = x
    return SparseSum(tuple(bumps))


def verify_sparse(V: SparseSum, targets: Sequence[float],
                  domain: Optional[Interval] = None, tol: float = 1e-10) -> dict:
    """Check a sparse build: counts and one-sided bounds E_n <= e_n.

    The merged spectrum on the domain (default (0, 2 x_N)) must have exactly
    one entry per target for square bumps (all from H_+; V <= 0 leaves H_-
    empty) and a +/- pair per target for dipoles, and the n-th entry (pair)
    must sit at or below e_n.  Report only; "ok" carries the verdict.
    """
    targets = [float(e) for e in targets]
    n = len(targets)
    if not V.bumps:
        spectrum = EigenvalueList([])
        return {"ok": n == 0, "count": 0, "expected_count": 0 if n == 0 else None,
                "entries": spectrum.to_json(), "targets": targets, "checks": []}
    kinds = {type(b).__name__ for b in V.bumps}
    if len(kinds) > 1:
        raise ValueError("mixed bump kinds are not supported")
    kind = "square" if isinstance(V.bumps[0], SquareBump) else "dipole"
    per_bump = 1 if kind == "square" else 2
    if domain is None:
        domain = Interval(0.0, 2.0 * V.bumps[-1].center)
    E_floor = (min(targets) if targets else 1.0) / 8.0
    spectrum = merged_spectrum(V, domain, DIRICHLET, E_floor=E_floor, tol=tol)
    exact = count_below(V, domain, DIRICHLET, 0.0)
    if kind == "dipole":
        exact += count_below(negate(V), domain, DIRICHLET, 0.0)
    checks = []
    mags = list(spectrum.magnitudes)
    for i, e in enumerate(targets):
        got = mags[per_bump * i: per_bump * (i + 1)]
        ok = len(got) == per_bump and all(E <= e for E in got)
        if kind == "dipole" and ok:
            signs = {spectrum.entries[per_bump * i + j].sign for j in range(per_bump)}
            ok = signs == {"+", "-"}
        checks.append({"target": e, "E": got, "ok": ok})
    ok = (
        exact == per_bump * n
        and len(spectrum) == per_bump * n
        and all(c["ok"] for c in checks)
    )
    return {
        "ok": bool(ok),
        "count": exact,
        "expected_count": per_bump * n,
        "entries": spectrum.to_json(),
        "targets": targets,
        "checks": checks,
    }
