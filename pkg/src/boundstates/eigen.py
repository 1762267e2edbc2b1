"""Negative spectrum of -d^2/dx^2 + V on finite intervals.

Counting is oscillation theory: the number of eigenvalues strictly below E
(boundary angle alpha at the left end, Dirichlet on the right) equals the
number of interior zeros of the solution shot from the left boundary
condition at energy E.  Eigenvalues are then bracketed by count jumps and
bisected.  Everything downstream (decompositions, sparse constructions,
moment diagnostics) builds on these routines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .potentials import GridFunction, Interval, Potential, negate, pc_profile_on
from .odes import pc_coefficients, prufer_sweep, shoot, zero_count

__all__ = [
    "BoundaryCondition",
    "DIRICHLET",
    "NEUMANN",
    "EigenEntry",
    "EigenvalueList",
    "count_below",
    "lowest_eigenvalue",
    "negative_spectrum",
    "merged_spectrum",
    "eigenfunction",
    "moment_sum",
    "sup_norm",
    "truncation_radius",
    "jacobi_identity_residual",
]


@dataclass(frozen=True)
class BoundaryCondition:
    """y(a) cos(alpha) - y'(a) sin(alpha) = 0; alpha=0 Dirichlet, pi/2 Neumann."""

    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < math.pi:
            raise ValueError("boundary angle must lie in [0, pi)")

    @property
    def is_dirichlet(self) -> bool:
        return self.alpha == 0.0

    @property
    def is_neumann(self) -> bool:
        return self.alpha == math.pi / 2

    @staticmethod
    def dirichlet() -> "BoundaryCondition":
        return BoundaryCondition(0.0)

    @staticmethod
    def neumann() -> "BoundaryCondition":
        return BoundaryCondition(math.pi / 2)


DIRICHLET = BoundaryCondition.dirichlet()
NEUMANN = BoundaryCondition.neumann()


@dataclass(frozen=True)
class EigenEntry:
    """One merged-list entry: the eigenvalue is -E, from H_plus or H_minus."""

    E: float
    sign: str  # "+" for -d2/dx2 + V, "-" for -d2/dx2 - V
    digits: int

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive (the eigenvalue itself is -E)")
        if self.sign not in ("+", "-"):
            raise ValueError("sign tag must be '+' or '-'")


@dataclass
class EigenvalueList:
    """Merged negative eigenvalues of H_plus and H_minus, E_1 >= E_2 >= ...."""

    entries: List[EigenEntry] = field(default_factory=list)

    def __post_init__(self):
        self.entries = sorted(self.entries, key=lambda e: -e.E)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.array([e.E for e in self.entries])

    def moment_sum(self, p: float) -> float:
        return moment_sum(self, p)

    def to_json(self) -> list:
        return [{"E": e.E, "sign": e.sign, "digits": e.digits} for e in self.entries]

    @staticmethod
    def from_json(doc) -> "EigenvalueList":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return EigenvalueList([EigenEntry(d["E"], d["sign"], int(d["digits"])) for d in doc])


# ---------------------------------------------------------------------------
# counting and bisection
# ---------------------------------------------------------------------------

def count_below(V: Potential, I: Interval, bc: BoundaryCondition, E: float) -> int:
    """Eigenvalues of -d2/dx2 + V on I strictly below E (Dirichlet at hi)."""
    return zero_count(V, E, I, bc.alpha)


def sup_norm(V: Potential, I: Interval) -> float:
    """Exact sup of |V| over I for the potential types of this package."""
    from .potentials import Sampled, Scaled, Negated, Zero
    if isinstance(V, Zero):
        return 0.0
    sup = V.support()
    if sup is None:
        return 0.0
    lo, hi = max(I.lo, sup.lo), min(I.hi, sup.hi)
    if lo >= hi:
        return 0.0
    prof = pc_profile_on(V, lo, hi)
    if prof is not None:
        return float(np.max(np.abs(prof[1])))
    if isinstance(V, Negated):
        return sup_norm(V.inner, I)
    if isinstance(V, Scaled):
        return V.g ** 2 * sup_norm(V.inner, Interval(lo * V.g, hi * V.g))
    if isinstance(V, Sampled) and V.grid.interp == "pl":
        g = V.grid
        cand = [abs(float(g(lo))), abs(float(g(hi)))]
        mask = (g.x >= lo) & (g.x <= hi)
        if np.any(mask):
            cand.append(float(np.max(np.abs(g.values[mask]))))
        return max(cand)
    raise ValueError(f"no exact sup bound for {type(V).__name__}")


def _bisect_kth(V: Potential, I: Interval, bc: BoundaryCondition, k: int,
                lo: float, hi: float, tol: float) -> Tuple[float, float]:
    """Smallest E with count_below >= k, bracketed to |dE| <= tol*max(1,|E|)."""
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if count_below(V, I, bc, mid) >= k:
            hi = mid
        else:
            lo = mid
    return lo, hi


def lowest_eigenvalue(V: Potential, I: Interval, bc: BoundaryCondition = DIRICHLET,
                      tol: float = 1e-10) -> Optional[float]:
    """The most negative eigenvalue on I, or None if the spectrum is >= 0."""
    if not I.finite:
        raise ValueError("interval must be finite")
    if count_below(V, I, bc, 0.0) == 0:
        return None
    depth = sup_norm(V, I)
    lo = -depth - 1e-9 * max(1.0, depth)
    a, b = _bisect_kth(V, I, bc, 1, lo, 0.0, tol)
    return 0.5 * (a + b)


def negative_spectrum(V: Potential, I: Interval, bc: BoundaryCondition = DIRICHLET,
                      E_floor: float = 1e-8, tol: float = 1e-10) -> List[float]:
    """All eigenvalues below -E_floor, ascending (most negative first)."""
    if not I.finite:
        raise ValueError("interval must be finite")
    if not E_floor > 0:
        raise ValueError("E_floor must be positive")
    n = count_below(V, I, bc, -E_floor)
    if n == 0:
        return []
    depth = sup_norm(V, I)
    lo = -depth - 1e-9 * max(1.0, depth)
    out = []
    for k in range(1, n + 1):
        a, b = _bisect_kth(V, I, bc, k, lo, -E_floor, tol)
        out.append(0.5 * (a + b))
        lo = a  # eigenvalues are ordered; reuse the bracket floor
    return out


def merged_spectrum(V: Potential, I: Interval, bc: BoundaryCondition = DIRICHLET,
                    E_floor: float = 1e-8, tol: float = 1e-10) -> EigenvalueList:
    """Negative spectra of both -d2/dx2 + V and -d2/dx2 - V, merged and tagged."""
    entries = []
    digits = max(0, int(round(-math.log10(tol))))
    for sign_tag, W in (("+", V), ("-", negate(V))):
        for lam in negative_spectrum(W, I, bc, E_floor, tol):
            entries.append(EigenEntry(E=-lam, sign=sign_tag, digits=digits))
    return EigenvalueList(entries)


def moment_sum(entries, p: float) -> float:
    """sum E_n^p over the list; p=0 counts entries."""
    if p < 0:
        raise ValueError("moment order must be nonnegative")
    if isinstance(entries, EigenvalueList):
        mags = entries.magnitudes
    else:
        mags = np.abs(np.asarray([float(e) for e in entries]))
    if len(mags) == 0:
        return 0.0
    return float(np.sum(mags ** p))


def truncation_radius(V: Potential, E_floor: float, min_radius: float = 0.0) -> float:
    """Domain half-width for line problems: support + 10 E_floor^(-1/2).

    Eigenfunction tails decay like e^(-sqrt(E)|x|), so eigenvalues above
    E_floor move by a relatively negligible amount under this truncation.
    """
    if not E_floor > 0:
        raise ValueError("E_floor must be positive")
    return max(V.support_radius() + 10.0 / math.sqrt(E_floor), min_radius)


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

def eigenfunction(V: Potential, E: float, I: Interval,
                  bc: BoundaryCondition = DIRICHLET, n: int = 2000,
                  match_tol: float = 1e-6) -> GridFunction:
    """L2-normalized eigenfunction at a certified eigenvalue E (E < 0 or not).

    Shoots from both ends (bc at lo, Dirichlet at hi), matches where both
    solutions are numerically largest, and rejects E when the Wronskian
    mismatch of the two unit states exceeds match_tol.
    """
    if not I.finite:
        raise ValueError("interval must be finite")
    cells = pc_coefficients(V, E, I.lo, I.hi)
    if cells is None:
        raise ValueError("eigenfunction extraction needs a piecewise-constant potential")
    edges, cvals = cells
    solL = shoot(edges, cvals, math.sin(bc.alpha), math.cos(bc.alpha))
    solR = shoot(edges, cvals, 0.0, -1.0, reverse=True)

    logsL = solL.logs - np.max(solL.logs)
    logsR = solR.logs - np.max(solR.logs)
    idx = int(np.argmax(np.minimum(logsL, logsR)))
    sL = solL.states[idx]
    sR = solR.states[idx]
    wr = abs(sL[0] * sR[1] - sR[0] * sL[1])
    if wr > match_tol:
        raise ValueError(
            f"E={E:.12g} is not an eigenvalue: shooting mismatch {wr:.3g} > {match_tol:g}")
    c = float(np.dot(sL, sR))  # +-1 up to the mismatch: aligns the right branch

    grid = np.unique(np.concatenate([np.linspace(I.lo, I.hi, n + 1), edges]))
    xm = edges[idx]
    vals = np.empty(len(grid))
    left = grid <= xm
    y, _, lg = solL.eval(grid[left])
    vals[left] = y * np.exp(lg - solL.logs[idx])
    y, _, lg = solR.eval(grid[~left])
    vals[~left] = c * y * np.exp(lg - solR.logs[idx])

    f = GridFunction(grid, vals, "pl")
    nrm = math.sqrt(f.square_integral())
    vals = vals / nrm
    if vals[int(np.argmax(np.abs(vals)))] < 0:
        vals = -vals
    return GridFunction(grid, vals, "pl")


# ---------------------------------------------------------------------------
# quadratic-form identity for eigenpairs
# ---------------------------------------------------------------------------

def _gauss3(a: np.ndarray, b: np.ndarray):
    """3-point Gauss nodes/weights per cell [a_i, b_i]; exact to degree 5."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    r = math.sqrt(3.0 / 5.0)
    nodes = np.stack([mid - r * half, mid, mid + r * half])
    weights = np.stack([5.0 / 9.0 * half, 8.0 / 9.0 * half, 5.0 / 9.0 * half])
    return nodes, weights


def jacobi_identity_residual(V: Potential, f: GridFunction, E: float,
                             phi: GridFunction) -> float:
    """Relative residual of int[(phi f)'^2 + V (phi f)^2] = int phi'^2 f^2 + E int phi^2 f^2.

    Exact quadrature on the union grid: integrands are polynomials per cell
    (phi, f piecewise linear; V piecewise constant), handled by closed forms
    and 3-point Gauss.  The identity holds for any true eigenpair (f, E) and
    any piecewise-linear phi vanishing at the ends of f's span.
    """
    if f.interp != "pl" or phi.interp != "pl":
        raise ValueError("f and phi must be piecewise linear")
    lo, hi = f.x[0], f.x[-1]
    cuts = np.unique(np.concatenate(
        [f.x, phi.x[(phi.x > lo) & (phi.x < hi)],
         V.breakpoints()[(V.breakpoints() > lo) & (V.breakpoints() < hi)]]))
    a, b = cuts[:-1], cuts[1:]
    w = b - a
    fa, fb = f(a), f(b)
    pa, pb = phi(a), phi(b)
    fslope = (fb - fa) / w
    pslope = (pb - pa) / w

    nodes, weights = _gauss3(a, b)
    fn = fa[None, :] + fslope[None, :] * (nodes - a[None, :])
    pn = pa[None, :] + pslope[None, :] * (nodes - a[None, :])
    Vn = np.asarray(V(0.5 * (a + b)))[None, :]  # pc on the union grid

    # (phi f)' = phi' f + phi f' is linear per cell: exact pl square integral
    da = pslope * fa + pa * fslope
    db = pslope * fb + pb * fslope
    lhs_kin = float(np.sum(w * (da * da + da * db + db * db) / 3.0))
    lhs_pot = float(np.sum(weights * Vn * (pn * fn) ** 2))

    qa, qb = pslope * fa, pslope * fb
    rhs_kin = float(np.sum(w * (qa * qa + qa * qb + qb * qb) / 3.0))
    rhs_E = E * float(np.sum(weights * (pn * fn) ** 2))

    resid = (lhs_kin + lhs_pot) - (rhs_kin + rhs_E)
    scale = max(abs(lhs_kin) + abs(lhs_pot), abs(rhs_kin) + abs(rhs_E), 1e-300)
    return abs(resid) / scale
