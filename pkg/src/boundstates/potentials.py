"""Potentials for the operator pair -d^2/dx^2 +/- V on the line and half line.

Bump potentials are kept exact (characteristic-function bumps with their jump
locations as first-class breakpoints); sums, sign flips and rescalings
preserve the exact piecewise-constant structure.  Everything that is not
piecewise constant is carried on a grid as a `GridFunction`.

Conventions: potentials vanish off a bounded set, and evaluation at a jump
returns the right limit (all piecewise-constant cells are [lo, hi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "Interval",
    "GridFunction",
    "Potential",
    "Zero",
    "SquareBump",
    "DipoleBump",
    "SparseSum",
    "Sampled",
    "Scaled",
    "Negated",
    "negate",
    "rescale",
    "interval_norm",
    "sample",
    "pc_profile_on",
    "potential_to_json",
    "potential_from_json",
]


# ---------------------------------------------------------------------------
# intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Nonempty open interval (lo, hi); endpoints may be +-inf."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo < x < self.hi

    def contains_interval(self, other: "Interval", margin: float = 0.0) -> bool:
        return self.lo + margin <= other.lo and other.hi <= self.hi - margin

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None

    def dist_to_boundary(self, x) -> np.ndarray:
        """Distance from x to the complement of the interval (vectorized)."""
        x = np.asarray(x, dtype=float)
        left = x - self.lo if math.isfinite(self.lo) else np.full_like(x, np.inf)
        right = self.hi - x if math.isfinite(self.hi) else np.full_like(x, np.inf)
        return np.minimum(left, right)

    def __str__(self) -> str:
        return f"({self.lo:g}, {self.hi:g})"


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------

class GridFunction:
    """Function on a breakpoint grid, piecewise constant or piecewise linear.

    interp="pc": len(values) == len(x) - 1, value[i] on [x[i], x[i+1]).
    interp="pl": len(values) == len(x), linear between nodes.
    Evaluation outside the grid span returns 0.
    """

    __slots__ = ("x", "values", "interp")

    def __init__(self, x, values, interp: str):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if interp == "pc":
            if len(values) != len(x) - 1:
                raise ValueError("pc grid function needs one value per cell")
        elif interp == "pl":
            if len(values) != len(x):
                raise ValueError("pl grid function needs one value per node")
        else:
            raise ValueError(f"unknown interpolation {interp!r}")
        self.x = x
        self.values = values
        self.interp = interp

    @property
    def span(self) -> Interval:
        return Interval(self.x[0], self.x[-1])

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=float)
        scalar = xq.ndim == 0
        xq = np.atleast_1d(xq)
        if self.interp == "pl":
            out = np.interp(xq, self.x, self.values)
        else:
            idx = np.searchsorted(self.x, xq, side="right") - 1
            idx = np.clip(idx, 0, len(self.values) - 1)
            out = self.values[idx]
        inside = (xq >= self.x[0]) & (xq < self.x[-1])
        if self.interp == "pl":
            # closed right endpoint for continuous data
            inside |= xq == self.x[-1]
        out = np.where(inside, out, 0.0)
        return float(out[0]) if scalar else out

    def derivative(self) -> "GridFunction":
        if self.interp != "pl":
            raise ValueError("derivative only defined for pl grid functions")
        slopes = np.diff(self.values) / np.diff(self.x)
        return GridFunction(self.x, slopes, "pc")

    # -- exact integrals ----------------------------------------------------

    def _clip_cells(self, lo: float, hi: float):
        """Cell widths and endpoint values of the grid restricted to [lo, hi]."""
        lo = max(lo, self.x[0])
        hi = min(hi, self.x[-1])
        if lo >= hi:
            return None
        cuts = np.unique(np.concatenate([[lo, hi], self.x[(self.x > lo) & (self.x < hi)]]))
        w = np.diff(cuts)
        if self.interp == "pc":
            idx = np.searchsorted(self.x, cuts[:-1], side="right") - 1
            idx = np.clip(idx, 0, len(self.values) - 1)
            return w, self.values[idx], None
        va = np.interp(cuts[:-1], self.x, self.values)
        vb = np.interp(cuts[1:], self.x, self.values)
        return w, va, vb

    def integral(self, lo: float = -math.inf, hi: float = math.inf) -> float:
        got = self._clip_cells(lo, hi)
        if got is None:
            return 0.0
        w, va, vb = got
        if self.interp == "pc":
            return float(np.dot(w, va))
        return float(np.dot(w, 0.5 * (va + vb)))

    def abs_integral(self, lo: float = -math.inf, hi: float = math.inf) -> float:
        got = self._clip_cells(lo, hi)
        if got is None:
            return 0.0
        w, va, vb = got
        if self.interp == "pc":
            return float(np.dot(w, np.abs(va)))
        # linear cell a -> b: integral of |.| is w*(a^2+b^2)/(2(|a|+|b|)) when
        # the sign changes, else the trapezoid value
        same = va * vb >= 0
        denom = np.abs(va) + np.abs(vb)
        cross = np.where(denom > 0, (va * va + vb * vb) / np.maximum(2 * denom, 1e-300), 0.0)
        cell = np.where(same, 0.5 * np.abs(va + vb), cross)
        return float(np.dot(w, cell))

    def square_integral(self, lo: float = -math.inf, hi: float = math.inf) -> float:
        got = self._clip_cells(lo, hi)
        if got is None:
            return 0.0
        w, va, vb = got
        if self.interp == "pc":
            return float(np.dot(w, va * va))
        return float(np.dot(w, (va * va + va * vb + vb * vb) / 3.0))

    def scale_values(self, factor: float) -> "GridFunction":
        return GridFunction(self.x, self.values * factor, self.interp)

    def to_json(self) -> dict:
        return {
            "breakpoints": [float(v) for v in self.x],
            "values": [float(v) for v in self.values],
            "interp": self.interp,
        }

    @staticmethod
    def from_json(doc: dict) -> "GridFunction":
        return GridFunction(doc["breakpoints"], doc["values"], doc["interp"])

    def __repr__(self) -> str:
        return f"GridFunction({len(self.x)} nodes, {self.interp}, span {self.span})"


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

class Potential:
    """Base class: real potential vanishing off a bounded set."""

    def __call__(self, x):
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        """Sorted jump/kink locations."""
        raise NotImplementedError

    def support(self) -> Optional[Interval]:
        """Closed hull of the support, None for the zero potential."""
        raise NotImplementedError

    def pc_cells(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """(edges, values) of an exact piecewise-constant profile, or None."""
        raise NotImplementedError

    def support_radius(self) -> float:
        sup = self.support()
        if sup is None:
            return 0.0
        return max(abs(sup.lo), abs(sup.hi))


@dataclass(frozen=True)
class Zero(Potential):
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.0 if x.ndim == 0 else np.zeros_like(x)

    def breakpoints(self):
        return np.empty(0)

    def support(self):
        return None

    def pc_cells(self):
        return np.empty(0), np.empty(0)


@dataclass(frozen=True)
class SquareBump(Potential):
    """V = -g on [center-1, center+1), zero elsewhere; g > 0."""

    g: float
    center: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("square bump needs g > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= self.center - 1) & (x < self.center + 1), -self.g, 0.0)
        return float(out) if x.ndim == 0 else out

    def breakpoints(self):
        return np.array([self.center - 1, self.center + 1])

    def support(self):
        return Interval(self.center - 1, self.center + 1)

    def pc_cells(self):
        return np.array([self.center - 1, self.center + 1]), np.array([-self.g])


@dataclass(frozen=True)
class DipoleBump(Potential):
    """V = +g on [center-1, center), -g on [center, center+1); mean zero."""

    g: float
    center: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("dipole bump needs g > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            (x >= self.center - 1) & (x < self.center), self.g,
            np.where((x >= self.center) & (x < self.center + 1), -self.g, 0.0),
        )
        return float(out) if x.ndim == 0 else out

    def breakpoints(self):
        return np.array([self.center - 1, self.center, self.center + 1])

    def support(self):
        return Interval(self.center - 1, self.center + 1)

    def pc_cells(self):
        return (
            np.array([self.center - 1, self.center, self.center + 1]),
            np.array([self.g, -self.g]),
        )


Bump = Union[SquareBump, DipoleBump]


@dataclass(frozen=True)
class SparseSum(Potential):
    """Finite sum of bumps with pairwise disjoint supports."""

    bumps: Tuple[Bump, ...]

    def __post_init__(self):
        bumps = tuple(sorted(self.bumps, key=lambda b: b.center))
        object.__setattr__(self, "bumps", bumps)
        centers = [b.center for b in bumps]
        for c0, c1 in zip(centers, centers[1:]):
            if c1 - c0 < 2 - 1e-12:
                raise ValueError("bump supports overlap: centers closer than 2")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape if x.ndim else (1,))
        xa = np.atleast_1d(x)
        for b in self.bumps:
            out = out + np.atleast_1d(b(xa))
        return float(out[0]) if x.ndim == 0 else out

    def breakpoints(self):
        if not self.bumps:
            return np.empty(0)
        return np.unique(np.concatenate([b.breakpoints() for b in self.bumps]))

    def support(self):
        if not self.bumps:
            return None
        return Interval(self.bumps[0].center - 1, self.bumps[-1].center + 1)

    def pc_cells(self):
        if not self.bumps:
            return np.empty(0), np.empty(0)
        e_all = [self.bumps[0].center - 1]
        v_all = []
        for b in self.bumps:
            e, v = b.pc_cells()
            if e[0] > e_all[-1] + 1e-15:
                # zero gap between consecutive bumps
                v_all.append(0.0)
                e_all.append(e[0])
            for j in range(len(v)):
                v_all.append(v[j])
                e_all.append(e[j + 1])
        return np.asarray(e_all), np.asarray(v_all)


@dataclass(frozen=True)
class Sampled(Potential):
    """Potential carried on a grid; zero outside the grid span."""

    grid: GridFunction

    def __call__(self, x):
        return self.grid(x)

    def breakpoints(self):
        return self.grid.x.copy()

    def support(self):
        return Interval(self.grid.x[0], self.grid.x[-1])

    def pc_cells(self):
        if self.grid.interp != "pc":
            return None
        return self.grid.x.copy(), self.grid.values.copy()


@dataclass(frozen=True)
class Scaled(Potential):
    """g^2 V(g x): the covariance that maps eigenvalue E to g^2 E."""

    inner: Potential
    g: float

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("scaling factor must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.g ** 2 * self.inner(self.g * x)

    def breakpoints(self):
        return self.inner.breakpoints() / self.g

    def support(self):
        sup = self.inner.support()
        if sup is None:
            return None
        return Interval(sup.lo / self.g, sup.hi / self.g)

    def pc_cells(self):
        cells = self.inner.pc_cells()
        if cells is None:
            return None
        e, v = cells
        return e / self.g, self.g ** 2 * v


@dataclass(frozen=True)
class Negated(Potential):
    inner: Potential

    def __call__(self, x):
        return -self.inner(x)

    def breakpoints(self):
        return self.inner.breakpoints()

    def support(self):
        return self.inner.support()

    def pc_cells(self):
        cells = self.inner.pc_cells()
        if cells is None:
            return None
        e, v = cells
        return e, -v


def negate(V: Potential) -> Potential:
    """Sign flip, collapsing double negation."""
    if isinstance(V, Negated):
        return V.inner
    if isinstance(V, Zero):
        return V
    return Negated(V)


def rescale(V: Potential, g: float) -> Potential:
    """Return the potential g^2 V(g x)."""
    if not g > 0:
        raise ValueError("scaling factor must be positive")
    if isinstance(V, Zero):
        return V
    if isinstance(V, Scaled):
        return Scaled(V.inner, V.g * g)
    return Scaled(V, g)


# ---------------------------------------------------------------------------
# profiles, sampling, norms
# ---------------------------------------------------------------------------

def pc_profile_on(V: Potential, lo: float, hi: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Exact piecewise-constant cells of V covering [lo, hi].

    Returns (edges, values) with edges[0] == lo, edges[-1] == hi, zero-filled
    outside the support; None when V has no exact pc profile.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise ValueError(f"need a finite nonempty interval, got [{lo}, {hi}]")
    cells = V.pc_cells()
    if cells is None:
        return None
    e, v = cells
    edges = [lo]
    vals = []
    if len(v) == 0:
        return np.array([lo, hi]), np.array([0.0])
    # leading zero stretch
    inner = [float(x) for x in e[(e > lo) & (e < hi)]]
    cut = np.unique(np.array([lo] + inner + [hi]))
    mids = 0.5 * (cut[:-1] + cut[1:])
    idx = np.searchsorted(e, mids, side="right") - 1
    vv = np.where((idx >= 0) & (idx < len(v)), v[np.clip(idx, 0, len(v) - 1)], 0.0)
    # outside the profile span the potential vanishes
    vv = np.where((mids < e[0]) | (mids >= e[-1]), 0.0, vv)
    return cut, vv


def sample(V: Potential, I: Interval, h: float) -> GridFunction:
    """Piecewise-constant sampling of V on I with max cell width h.

    All discontinuities of V inside I become breakpoints, so the result is
    exact for piecewise-constant potentials.
    """
    if not I.finite:
        raise ValueError("sampling needs a finite interval")
    if not h > 0:
        raise ValueError("cell width must be positive")
    prof = pc_profile_on(V, I.lo, I.hi)
    if prof is not None:
        edges, vals = prof
    else:
        bp = V.breakpoints()
        inner = bp[(bp > I.lo) & (bp < I.hi)]
        edges = np.unique(np.concatenate([[I.lo, I.hi], inner]))
        vals = None
    out_edges = [edges[0]]
    out_vals = []
    for j in range(len(edges) - 1):
        a, b = edges[j], edges[j + 1]
        n = max(1, int(math.ceil((b - a) / h - 1e-12)))
        sub = np.linspace(a, b, n + 1)
        for i in range(n):
            out_edges.append(sub[i + 1])
            if vals is not None:
                out_vals.append(vals[j])
            else:
                out_vals.append(float(V(0.5 * (sub[i] + sub[i + 1]))))
    return GridFunction(np.asarray(out_edges), np.asarray(out_vals), "pc")


def interval_norm(V: Potential, I: Interval, kind: str = "L1") -> float:
    """Exact ||V||_{L1(I)} or the square of the L2 norm on I.

    kind: "L1" or "L2sq".  Infinite intervals are allowed because every
    potential here has compact support.
    """
    if kind not in ("L1", "L2sq"):
        raise ValueError(f"unknown norm kind {kind!r}")
    sup = V.support()
    if sup is None:
        return 0.0
    lo = max(I.lo, sup.lo)
    hi = min(I.hi, sup.hi)
    if lo >= hi:
        return 0.0
    prof = pc_profile_on(V, lo, hi)
    if prof is not None:
        edges, vals = prof
        w = np.diff(edges)
        if kind == "L1":
            return float(np.dot(w, np.abs(vals)))
        return float(np.dot(w, vals * vals))
    if isinstance(V, Sampled):
        if kind == "L1":
            return V.grid.abs_integral(lo, hi)
        return V.grid.square_integral(lo, hi)
    raise ValueError(f"no exact norm for potential type {type(V).__name__}")


# ---------------------------------------------------------------------------
# json
# ---------------------------------------------------------------------------

def potential_to_json(V: Potential) -> dict:
    if isinstance(V, Zero):
        return {"schema": 1, "kind": "zero"}
    if isinstance(V, SquareBump):
        return {"schema": 1, "kind": "square", "g": V.g, "center": V.center}
    if isinstance(V, DipoleBump):
        return {"schema": 1, "kind": "dipole", "g": V.g, "center": V.center}
    if isinstance(V, SparseSum):
        return {
            "schema": 1,
            "kind": "sparse",
            "bumps": [
                {"kind": "square" if isinstance(b, SquareBump) else "dipole",
                 "g": b.g, "x": b.center}
                for b in V.bumps
            ],
        }
    if isinstance(V, Sampled):
        return {"schema": 1, "kind": "sampled", **V.grid.to_json()}
    if isinstance(V, Scaled):
        inner = potential_to_json(V.inner)
        inner.pop("schema", None)
        return {"schema": 1, "kind": "scaled", "g": V.g, "inner": inner}
    if isinstance(V, Negated):
        inner = potential_to_json(V.inner)
        inner.pop("schema", None)
        return {"schema": 1, "kind": "negated", "inner": inner}
    raise ValueError(f"cannot serialize potential type {type(V).__name__}")


def potential_from_json(doc: dict) -> Potential:
    kind = doc.get("kind")
    if kind == "zero":
        return Zero()
    if kind == "square":
        return SquareBump(g=float(doc["g"]), center=float(doc.get("center", 0.0)))
    if kind == "dipole":
        return DipoleBump(g=float(doc["g"]), center=float(doc.get("center", 0.0)))
    if kind == "sparse":
        bumps = []
        for b in doc["bumps"]:
            cls = SquareBump if b["kind"] == "square" else DipoleBump
            bumps.append(cls(g=float(b["g"]), center=float(b["x"])))
        return SparseSum(tuple(bumps))
    if kind == "sampled":
        return Sampled(GridFunction.from_json(doc))
    if kind == "scaled":
        return Scaled(potential_from_json(doc["inner"]), float(doc["g"]))
    if kind == "negated":
        return Negated(potential_from_json(doc["inner"]))
    raise ValueError(f"unknown potential kind {kind!r}")
