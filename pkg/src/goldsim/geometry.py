"""Compact convex action spaces with Euclidean projection and safety balls.

Three set kinds are supported, each with a closed-form projection: axis-aligned
boxes, Euclidean balls, and budget-capped nonnegative orthant slices
``{x : x >= lower, sum(x) <= budget}``.  Every set carries an interior
"safety ball" B_r(p) used by the sampling feasibility adjustment: a perturbed
action of the form ``x + d*(u - (x - p)/r)`` with ``d <= r`` is a convex
combination of ``x`` and a point of B_r(p), hence stays inside the set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from goldsim.errors import DegenerateSetError, DimensionMismatchError

# Membership slack for points produced by floating-point projection/perturbation.
BOUNDARY_TOL = 1e-9
# Fixed-point slack when certifying a safety ball at construction time.
_SAFETY_CHECK_TOL = 1e-12


def _as_vector(x, dim: int, name: str = "point") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.shape != (dim,):
        raise DimensionMismatchError(
            f"{name} has shape {v.shape}, expected ({dim},)"
        )
    return v


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ActionSet:
    """Base class for compact convex action spaces.

    Instances are immutable and safe to share across threads; all operations
    are pure functions of their arguments.
    """

    dim: int
    safety_center: np.ndarray = field(repr=False)
    safety_radius: float

    kind = "abstract"

    def project(self, y) -> np.ndarray:
        """Euclidean projection of ``y`` onto the set."""
        raise NotImplementedError

    def diameter(self) -> float:
        """Upper bound on sup ||x - y|| over the set (exact for box/ball)."""
        raise NotImplementedError

    def contains(self, x, tol: float = BOUNDARY_TOL) -> bool:
        x = _as_vector(x, self.dim)
        return bool(np.linalg.norm(self.project(x) - x) <= tol)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Draw uniform points from the set, shape (dim,) or (size, dim)."""
        raise NotImplementedError

    def _check_safety_ball(self) -> None:
        """Certify B_r(p) ⊆ set by projecting p ± r·e along every axis."""
        p = np.asarray(self.safety_center, dtype=np.float64)
        r = float(self.safety_radius)
        if r <= 0.0:
            raise DegenerateSetError("safety radius must be positive")
        for axis in range(self.dim):
            for sign in (1.0, -1.0):
                probe = p.copy()
                probe[axis] += sign * r
                moved = np.linalg.norm(self.project(probe) - probe)
                if moved > _SAFETY_CHECK_TOL:
                    raise DegenerateSetError(
                        f"safety ball of radius {r} at {p} leaves the set "
                        f"along axis {axis} (projection moved {moved:.3e})"
                    )


@dataclass(frozen=True)
class Box(ActionSet):
    """Axis-aligned box {lo <= x <= hi}."""

    kind = "box"

    lo: np.ndarray = field(repr=False, default=None)
    hi: np.ndarray = field(repr=False, default=None)

    def project(self, y) -> np.ndarray:
        y = _as_vector(y, self.dim)
        return np.clip(y, self.lo, self.hi)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol: float = BOUNDARY_TOL) -> bool:
        x = _as_vector(x, self.dim)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.uniform(self.lo, self.hi, size=shape)


@dataclass(frozen=True)
class Ball(ActionSet):
    """Euclidean ball {||x - center|| <= radius}."""

    kind = "ball"

    center: np.ndarray = field(repr=False, default=None)
    radius: float = 0.0

    def project(self, y) -> np.ndarray:
        y = _as_vector(y, self.dim)
        offset = y - self.center
        norm = float(np.linalg.norm(offset))
        if norm <= self.radius:
            return y
        scale = self.radius / norm
        z = self.center + offset * scale
        # a 1-ulp overshoot would make re-projection move the point again;
        # nudge inward until the result is an exact fixed point
        while float(np.linalg.norm(z - self.center)) > self.radius:
            scale = float(np.nextafter(scale, 0.0))
            z = self.center + offset * scale
        return z

    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x, tol: float = BOUNDARY_TOL) -> bool:
        x = _as_vector(x, self.dim)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = 1 if size is None else size
        g = rng.standard_normal((n, self.dim))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        u = g / norms
        # radius ~ R * U^{1/dim} gives the uniform distribution over the ball
        radii = self.radius * rng.random((n, 1)) ** (1.0 / self.dim)
        pts = self.center + radii * u
        return pts[0] if size is None else pts


@dataclass(frozen=True)
class SimplexSlice(ActionSet):
    """Budget-capped orthant slice {x >= lower, sum(x) <= budget}."""

    kind = "simplex_slice"

    budget: float = 0.0
    lower: float = 0.0

    @property
    def _free_budget(self) -> float:
        return self.budget - self.dim * self.lower

    def project(self, y) -> np.ndarray:
        y = _as_vector(y, self.dim)
        v = y - self.lower
        clipped = np.maximum(v, 0.0)
        if clipped.sum() <= self._free_budget:
            return self.lower + clipped
        return self.lower + _project_capped_simplex(v, self._free_budget)

    def diameter(self) -> float:
        b = self._free_budget
        return b * np.sqrt(2.0) if self.dim >= 2 else b

    def contains(self, x, tol: float = BOUNDARY_TOL) -> bool:
        x = _as_vector(x, self.dim)
        return bool(
            np.all(x >= self.lower - tol) and x.sum() <= self.budget + tol
        )

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = 1 if size is None else size
        # uniform over the corner simplex via sorted-uniform spacings with a
        # slack coordinate absorbing the unused budget
        e = rng.dirichlet(np.ones(self.dim + 1), size=n)[:, : self.dim]
        pts = self.lower + self._free_budget * e
        return pts[0] if size is None else pts


def _project_capped_simplex(v: np.ndarray, budget: float) -> np.ndarray:
    """Project v onto {w >= 0, sum(w) = budget} (sort-based, O(n log n))."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - budget
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u * idx > css)[0][-1]
    theta = float(css[rho] / (rho + 1.0))
    w = np.maximum(v - theta, 0.0)
    # rounding can leave sum(w) a few ulps over budget; raise theta until the
    # result re-projects to itself bitwise
    while float(w.sum()) > budget:
        theta = float(np.nextafter(theta, np.inf))
        w = np.maximum(v - theta, 0.0)
    return w


def default_safety_ball(kind, **params) -> tuple[np.ndarray, float]:
    """Construct a certified interior ball for a set (or a kind/params pair).

    For boxes: midpoint and half the minimum side.  For balls: the ball
    itself.  For slices: the inscribed ball of the corner simplex.  Raises
    DegenerateSetError when the set has empty interior.
    """
    if isinstance(kind, ActionSet):
        aset = kind
        if isinstance(aset, Box):
            return default_safety_ball("box", lo=aset.lo, hi=aset.hi)
        if isinstance(aset, Ball):
            return default_safety_ball("ball", center=aset.center, radius=aset.radius)
        if isinstance(aset, SimplexSlice):
            return default_safety_ball(
                "simplex_slice", budget=aset.budget, dim=aset.dim, lower=aset.lower
            )
        raise ValueError(f"unsupported action set {type(aset).__name__}")
    if kind == "box":
        lo = np.asarray(params["lo"], dtype=np.float64)
        hi = np.asarray(params["hi"], dtype=np.float64)
        sides = hi - lo
        if np.any(sides <= 0.0):
            raise DegenerateSetError("no interior: box has a zero-width side")
        return (lo + hi) / 2.0, float(sides.min() / 2.0)
    if kind == "ball":
        center = np.asarray(params["center"], dtype=np.float64)
        radius = float(params["radius"])
        if radius <= 0.0:
            raise DegenerateSetError("no interior: ball has nonpositive radius")
        return center.copy(), radius
    if kind == "simplex_slice":
        dim = int(params["dim"])
        lower = float(params.get("lower", 0.0))
        free = float(params["budget"]) - dim * lower
        if free <= 0.0:
            raise DegenerateSetError("no interior: budget exhausted by lower bounds")
        rho = free / (dim + np.sqrt(dim))
        return np.full(dim, lower + rho), float(rho)
    raise ValueError(f"unknown set kind {kind!r}")


def make_box(lo, hi, safety_center=None, safety_radius=None) -> Box:
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
    if lo.shape != hi.shape or lo.ndim != 1:
        raise DimensionMismatchError("lo and hi must be 1-d and equal length")
    if np.any(lo > hi):
        raise DegenerateSetError("box requires lo <= hi componentwise")
    if safety_center is None or safety_radius is None:
        safety_center, safety_radius = default_safety_ball("box", lo=lo, hi=hi)
    box = Box(
        dim=lo.size,
        safety_center=_frozen(safety_center),
        safety_radius=float(safety_radius),
        lo=_frozen(lo),
        hi=_frozen(hi),
    )
    box._check_safety_ball()
    return box


def make_interval(lo: float, hi: float, **kwargs) -> Box:
    """One-dimensional box, the bidder strategy space {lo <= x <= hi}."""
    return make_box([lo], [hi], **kwargs)


def make_ball(center, radius: float, safety_center=None, safety_radius=None) -> Ball:
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if radius <= 0.0:
        raise DegenerateSetError("ball radius must be positive")
    if safety_center is None or safety_radius is None:
        safety_center, safety_radius = center, radius
    ball = Ball(
        dim=center.size,
        safety_center=_frozen(safety_center),
        safety_radius=float(safety_radius),
        center=_frozen(center),
        radius=float(radius),
    )
    ball._check_safety_ball()
    return ball


def make_simplex_slice(
    budget: float, dim: int, lower: float = 0.0, safety_center=None, safety_radius=None
) -> SimplexSlice:
    if dim < 1:
        raise DegenerateSetError("dim must be >= 1")
    if safety_center is None or safety_radius is None:
        safety_center, safety_radius = default_safety_ball(
            "simplex_slice", budget=budget, dim=dim, lower=lower
        )
    sl = SimplexSlice(
        dim=dim,
        safety_center=_frozen(safety_center),
        safety_radius=float(safety_radius),
        budget=float(budget),
        lower=float(lower),
    )
    sl._check_safety_ball()
    return sl
