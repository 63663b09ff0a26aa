"""Bounded open sets in the plane as CSG trees.

Every node answers two vectorised queries on an ``(n, 2)`` array of points:

``inner(P)``
    lower bound on the distance to the complement of the set (0 outside),
``outer(P)``
    lower bound on the distance to the set (0 inside or on it).

Membership is ``inner(P) > 0``, so boundary points are never inside.
``Complement`` swaps the two bounds, which makes it the interior of the
set-theoretic complement: the complement of an open disk excludes the circle,
the complement of a closed Cantor bar is open.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree


class PointOutside(ValueError):
    pass


class UnboundedRegion(ValueError):
    pass


# closed removed sets are fattened by this relative amount so that grid points
# landing on a bar endpoint up to rounding count as removed
_CLOSED_TOL = 1e-12

INF = math.inf


def _as_points(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P.reshape(1, 2)
    return P


class Region:
    """Base class of all CSG nodes."""

    def inner(self, P) -> np.ndarray:
        raise NotImplementedError

    def outer(self, P) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def children(self) -> tuple["Region", ...]:
        return ()

    # -- derived queries ---------------------------------------------------

    def contains(self, P) -> np.ndarray | bool:
        P = np.asarray(P, dtype=float)
        res = self.inner(_as_points(P)) > 0
        return bool(res[0]) if P.ndim == 1 else res

    def dist_to_complement(self, p) -> float:
        """Conservative lower bound on ``d(p, R^2 minus region)``."""
        p = np.asarray(p, dtype=float)
        d = float(self.inner(p.reshape(1, 2))[0])
        if d <= 0:
            raise PointOutside(f"point {tuple(p)} is not inside the region")
        return d

    def leaves(self) -> list["Region"]:
        out: list[Region] = []

        def walk(node):
            kids = node.children()
            if not kids:
                out.append(node)
            for k in kids:
                walk(k)

        walk(self)
        return out

    def finite_bbox(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.bbox()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise UnboundedRegion(f"region has unbounded bounding box {lo}, {hi}")
        return lo, hi

    def diameter_bound(self) -> float:
        lo, hi = self.finite_bbox()
        return float(np.hypot(*(hi - lo)))

    def validate(self) -> None:
        """Check that closed removed sets only appear under a Complement."""

        def walk(node, negated):
            if isinstance(node, (CantorBar, Point)) and not negated:
                raise ValueError(f"{type(node).__name__} must appear under Complement")
            for k in node.children():
                walk(k, negated ^ isinstance(node, Complement))

        walk(self, False)
        self.finite_bbox()

    def strip(self, kinds: tuple[type, ...]) -> "Region":
        """Copy of the tree with leaves of the given types replaced by ``Empty``."""
        if isinstance(self, kinds):
            return Empty()
        return self

    def without_polar(self) -> "Region":
        """Copy of the tree with isolated points removed (they are polar in 2D)."""
        return self.strip((Point,))

    def thin_leaves(self) -> list["Region"]:
        """Closed removed sets without interior (Cantor bars, points)."""
        return [leaf for leaf in self.leaves() if isinstance(leaf, (CantorBar, Point))]

    def closure_corner(self, P) -> np.ndarray:
        """Points of the closure that avoid every thin removed set.

        The solid part of the region is the tree with thin leaves dropped; a
        mesh vertex may sit on its boundary, never on a bar or a puncture.
        """
        P = _as_points(P)
        ok = self.strip((CantorBar, Point)).outer(P) <= 0
        for leaf in self.thin_leaves():
            ok &= leaf.outer(P) > 0
        return ok

    # -- operators ----------------------------------------------------------

    def __or__(self, other):
        return Union(self, other)

    def __and__(self, other):
        return Intersection(self, other)

    def __sub__(self, other):
        return difference(self, other)

    def __invert__(self):
        return Complement(self)


def difference(a: Region, b: Region) -> Region:
    return Intersection(a, Complement(b))


# -- primitives ---------------------------------------------------------------


@dataclass(frozen=True)
class Disk(Region):
    center: tuple[float, float]
    radius: float

    def _signed(self, P):
        P = _as_points(P)
        return self.radius - np.hypot(P[:, 0] - self.center[0], P[:, 1] - self.center[1])

    def inner(self, P):
        return np.maximum(self._signed(P), 0.0)

    def outer(self, P):
        return np.maximum(-self._signed(P), 0.0)

    def bbox(self):
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius

    def boundary_samples(self, spacing, box):
        n = max(16, int(math.ceil(2 * math.pi * self.radius / spacing)))
        t = 2 * math.pi * np.arange(n) / n
        return np.column_stack([self.center[0] + self.radius * np.cos(t),
                                self.center[1] + self.radius * np.sin(t)])

    def nearest(self, P):
        P = _as_points(P)
        c = np.asarray(self.center, float)
        d = P - c
        r = np.hypot(d[:, 0], d[:, 1])
        r = np.where(r > 0, r, 1.0)
        return c + self.radius * d / r[:, None]


@dataclass(frozen=True)
class Rect(Region):
    lo: tuple[float, float]
    hi: tuple[float, float]

    def inner(self, P):
        P = _as_points(P)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        d = np.minimum(P - lo, hi - P).min(axis=1)
        return np.maximum(d, 0.0)

    def outer(self, P):
        P = _as_points(P)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        gap = np.maximum(np.maximum(lo - P, P - hi), 0.0)
        return np.hypot(gap[:, 0], gap[:, 1])

    def bbox(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def boundary_samples(self, spacing, box):
        (x0, y0), (x1, y1) = self.lo, self.hi
        corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
        pts = []
        for (ax, ay), (bx, by) in zip(corners[:-1], corners[1:]):
            n = max(2, int(math.ceil(math.hypot(bx - ax, by - ay) / spacing)))
            t = np.arange(n) / n
            pts.append(np.column_stack([ax + t * (bx - ax), ay + t * (by - ay)]))
        return np.vstack(pts)

    def nearest(self, P):
        P = _as_points(P)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        Q = np.clip(P, lo, hi)
        inside = np.all((P > lo) & (P < hi), axis=1)
        if inside.any():
            # push interior points to the closest side
            Pi = P[inside]
            gaps = np.column_stack([Pi[:, 0] - lo[0], hi[0] - Pi[:, 0], Pi[:, 1] - lo[1], hi[1] - Pi[:, 1]])
            side = np.argmin(gaps, axis=1)
            Qi = Pi.copy()
            Qi[side == 0, 0] = lo[0]
            Qi[side == 1, 0] = hi[0]
            Qi[side == 2, 1] = lo[1]
            Qi[side == 3, 1] = hi[1]
            Q[inside] = Qi
        return Q


@dataclass(frozen=True)
class HalfPlane(Region):
    """Open half plane ``{x : normal . x < offset}``."""

    normal: tuple[float, float]
    offset: float

    def __post_init__(self):
        n = math.hypot(*self.normal)
        if not math.isclose(n, 1.0, rel_tol=1e-9):
            raise ValueError("HalfPlane normal must be a unit vector")

    def _signed(self, P):
        P = _as_points(P)
        return self.offset - (P[:, 0] * self.normal[0] + P[:, 1] * self.normal[1])

    def inner(self, P):
        return np.maximum(self._signed(P), 0.0)

    def outer(self, P):
        return np.maximum(-self._signed(P), 0.0)

    def bbox(self):
        return np.array([-INF, -INF]), np.array([INF, INF])

    def boundary_samples(self, spacing, box):
        lo, hi = box
        nx, ny = self.normal
        foot = np.array([nx, ny]) * self.offset
        tangent = np.array([-ny, nx])
        half = float(np.hypot(*(hi - lo)))
        centre = (lo + hi) / 2
        s0 = float(tangent @ (centre - foot))
        n = max(2, int(math.ceil(2 * half / spacing)))
        s = s0 + np.linspace(-half, half, n)
        return foot + s[:, None] * tangent

    def nearest(self, P):
        P = _as_points(P)
        n = np.asarray(self.normal, float)
        return P - (P @ n - self.offset)[:, None] * n


@dataclass(frozen=True)
class CantorBar(Region):
    """Closed set ``C_k x {y}`` where ``C_k`` is the generation-k middle-third
    prefix of the Cantor set built on the interval ``[a, b]``."""

    generation: int
    a: float = 0.0
    b: float = 1.0
    y: float = 0.0

    def __post_init__(self):
        if self.generation < 0:
            raise ValueError("generation must be nonnegative")
        if not self.b > self.a:
            raise ValueError("baseline interval must have b > a")

    @cached_property
    def intervals(self) -> np.ndarray:
        k = self.generation
        # left endpoints are a + L * sum_i d_i 3^{-i} with ternary digits d_i in {0, 2}
        idx = np.arange(2 ** k)
        num = np.zeros(2 ** k, dtype=np.int64)
        for bit in range(k):
            num += ((idx >> (k - 1 - bit)) & 1) * 2 * 3 ** (k - 1 - bit)
        scale = 3 ** k
        L = self.b - self.a
        left = self.a + L * num / scale
        right = self.a + L * (num + 1) / scale
        return np.column_stack([left, right])

    @property
    def length(self) -> float:
        """One-dimensional measure of ``C_k``."""
        return (self.b - self.a) * (2.0 / 3.0) ** self.generation

    @property
    def sigma(self) -> float:
        """Hausdorff measure of the bar counted from both sides."""
        return 2.0 * self.length

    def _dx(self, x):
        iv = self.intervals
        j = np.clip(np.searchsorted(iv[:, 0], x, side="right") - 1, 0, len(iv) - 1)
        left, right = iv[j, 0], iv[j, 1]
        d_here = np.maximum(np.maximum(left - x, x - right), 0.0)
        jn = np.minimum(j + 1, len(iv) - 1)
        d_next = np.maximum(iv[jn, 0] - x, 0.0)
        d_next = np.where(jn > j, d_next, INF)
        return np.minimum(d_here, d_next)

    def inner(self, P):
        return np.zeros(len(_as_points(P)))

    def outer(self, P):
        P = _as_points(P)
        d = np.hypot(self._dx(P[:, 0]), P[:, 1] - self.y)
        return np.maximum(d - _CLOSED_TOL * (self.b - self.a), 0.0)

    def bbox(self):
        return np.array([self.a, self.y]), np.array([self.b, self.y])

    def on_bar(self, P) -> np.ndarray:
        return self.outer(P) <= 0

    def boundary_samples(self, spacing, box):
        pts = []
        for left, right in self.intervals:
            n = max(2, int(math.ceil((right - left) / spacing)))
            pts.append(np.linspace(left, right, n + 1))
        x = np.concatenate(pts)
        return np.column_stack([x, np.full_like(x, self.y)])

    def nearest(self, P):
        P = _as_points(P)
        iv = self.intervals
        x = P[:, 0]
        j = np.clip(np.searchsorted(iv[:, 0], x, side="right") - 1, 0, len(iv) - 1)
        jn = np.minimum(j + 1, len(iv) - 1)
        a = np.clip(x, iv[j, 0], iv[j, 1])
        b = np.clip(x, iv[jn, 0], iv[jn, 1])
        qx = np.where(np.abs(b - x) < np.abs(a - x), b, a)
        return np.column_stack([qx, np.full_like(qx, self.y)])


@dataclass(frozen=True)
class Point(Region):
    """A single closed point; in the plane it has zero capacity."""

    at: tuple[float, float]

    def inner(self, P):
        return np.zeros(len(_as_points(P)))

    def outer(self, P):
        P = _as_points(P)
        d = np.hypot(P[:, 0] - self.at[0], P[:, 1] - self.at[1])
        return np.maximum(d - _CLOSED_TOL, 0.0)

    def bbox(self):
        p = np.asarray(self.at, float)
        return p, p.copy()

    def boundary_samples(self, spacing, box):
        return np.asarray([self.at], float)

    def nearest(self, P):
        return np.tile(np.asarray(self.at, float), (len(_as_points(P)), 1))


@dataclass(frozen=True)
class Empty(Region):
    def inner(self, P):
        return np.zeros(len(_as_points(P)))

    def outer(self, P):
        return np.full(len(_as_points(P)), INF)

    def bbox(self):
        return np.array([INF, INF]), np.array([-INF, -INF])

    def boundary_samples(self, spacing, box):
        return np.empty((0, 2))


# -- combinators --------------------------------------------------------------


class _Nary(Region):
    def __init__(self, *parts: Region):
        if len(parts) < 1:
            raise ValueError(f"{type(self).__name__} needs at least one operand")
        self.parts = tuple(parts)

    def children(self):
        return self.parts

    def __eq__(self, other):
        return type(self) is type(other) and self.parts == other.parts

    def __hash__(self):
        return hash((type(self).__name__, self.parts))

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self.parts))})"


class Union(_Nary):
    def inner(self, P):
        return np.max([p.inner(P) for p in self.parts], axis=0)

    def outer(self, P):
        return np.min([p.outer(P) for p in self.parts], axis=0)

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def strip(self, kinds):
        return Union(*(p.strip(kinds) for p in self.parts))


class Intersection(_Nary):
    def inner(self, P):
        return np.min([p.inner(P) for p in self.parts], axis=0)

    def outer(self, P):
        return np.max([p.outer(P) for p in self.parts], axis=0)

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        return np.max([b[0] for b in boxes], axis=0), np.min([b[1] for b in boxes], axis=0)

    def strip(self, kinds):
        return Intersection(*(p.strip(kinds) for p in self.parts))


class Complement(Region):
    def __init__(self, part: Region):
        self.part = part

    def children(self):
        return (self.part,)

    def inner(self, P):
        return self.part.outer(P)

    def outer(self, P):
        return self.part.inner(P)

    def bbox(self):
        return np.array([-INF, -INF]), np.array([INF, INF])

    def strip(self, kinds):
        return Complement(self.part.strip(kinds))

    def __eq__(self, other):
        return isinstance(other, Complement) and self.part == other.part

    def __hash__(self):
        return hash(("Complement", self.part))

    def __repr__(self):
        return f"Complement({self.part!r})"


# -- boundary sampling ----------------------------------------------------------


class BoundaryProjector:
    """Nearest-point projection onto the boundary by dense sampling.

    Samples the boundary curve of every leaf, keeps the samples that lie on
    the boundary of the whole region (outside it, with a region point
    arbitrarily close) and answers nearest-sample queries.
    """

    def __init__(self, region: Region, spacing: float):
        box = region.finite_bbox()
        pad = 2 * spacing
        box = (box[0] - pad, box[1] + pad)
        pts, ids = [], []
        for i, leaf in enumerate(region.leaves()):
            s = leaf.boundary_samples(spacing, box)
            pts.append(s)
            ids.append(np.full(len(s), i))
        P = np.vstack(pts)
        ids = np.concatenate(ids)
        keep = ~region.contains(P)
        eps = 1e-7 * max(spacing, 1e-12)
        near = np.zeros(len(P), bool)
        for ang in np.arange(8) * (np.pi / 4):
            near |= region.contains(P + eps * np.array([np.cos(ang), np.sin(ang)]))
        keep &= near
        if not keep.any():
            raise ValueError("boundary sampling found no boundary points")
        self.points = P[keep]
        self.leaf_ids = ids[keep]
        self.spacing = spacing
        self._region = region
        self._leaves = region.leaves()
        self._scale = max(float(np.abs(np.concatenate(box)).max()), 1.0)
        self._tree = cKDTree(self.points)

    def project(self, Q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (nearest boundary points, leaf indices, distances)."""
        Q = _as_points(Q)
        dist, j = self._tree.query(Q)
        pts, ids = self.points[j].copy(), self.leaf_ids[j]
        # refine with the exact nearest point of the selected leaf when that
        # point is still on the boundary and at least as close
        for leaf_id in np.unique(ids):
            leaf = self._leaves[leaf_id]
            if not hasattr(leaf, "nearest"):
                continue
            m = ids == leaf_id
            cand = leaf.nearest(Q[m])
            dc = np.hypot(*(cand - Q[m]).T)
            # analytic points on a curved side may round to just inside
            ok = (dc <= dist[m] + 1e-12) & (self._region.inner(cand) <= 1e-12 * self._scale)
            sel = np.flatnonzero(m)[ok]
            pts[sel] = cand[ok]
            dist[sel] = dc[ok]
        return pts, ids, dist

    def on_boundary(self, z, tol: float | None = None) -> bool:
        tol = 2 * self.spacing if tol is None else tol
        return bool(self._tree.query(np.asarray(z, float))[0] <= tol)


def iter_nodes(region: Region) -> Iterator[Region]:
    yield region
    for k in region.children():
        yield from iter_nodes(k)


def in_ternary_cantor(t: float, generation: int) -> bool:
    """Generation-k middle-third membership of ``t`` in [0, 1] by ternary digits.

    Independent of ``CantorBar.intervals``; used as a test oracle.
    """
    if t < 0 or t > 1:
        return False
    for _ in range(generation):
        t *= 3
        if 1 < t < 2:
            return False
        if t >= 2:
            t -= 2
        t = min(t, 1.0)
    return True
