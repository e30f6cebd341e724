"""Concrete set models with distance queries, surface sampling, and isometries.

The catalogue covers point sets, affine planes, parametric manifolds
(circle / sphere / polyline), and self-similar attractors of contracting
similarity systems.  Distances are exact closed forms except for attractors,
where a branch-and-bound over cylinder words returns a value within a caller
tolerance of the true distance.

Metric conventions: the ambient metric is the sup norm by default (balls are
boxes, which keeps volumes exact in the estimators) with Euclidean
selectable.  Circles, spheres, and attractors always measure set-distance in
the Euclidean norm, their natural exact geometry; mixing the two norms only
moves the constants in scaling estimates, never the exponents.  Torus
variants reduce per coordinate mod 1 and take the minimum over unit shifts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ArgumentError, DomainError, UnsupportedCombination

ORTHO_TOL = 1e-12


def _as_points(x, n):
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[1] != n:
        raise ArgumentError(f"expected points in dimension {n}, got shape {pts.shape}")
    return pts


def _norm(diff, metric):
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=-1))
    return np.max(np.abs(diff), axis=-1)


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise ArgumentError("point set must be non-empty")
        object.__setattr__(self, "points", pts)

    @property
    def ambient_dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class AffinePlane:
    """Affine subspace base + span(basis rows), dim l < n.

    ``extent`` bounds the parameter window used for sampling and windowed
    volume estimates (the plane itself is unbounded).
    """

    base: np.ndarray
    basis: np.ndarray
    extent: float = 1.0

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if basis.shape[0] >= base.shape[0]:
            raise ArgumentError("plane dimension must be below the ambient dimension")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=ORTHO_TOL):
            raise ArgumentError("basis rows must be orthonormal to 1e-12")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self):
        return self.base.shape[0]

    @property
    def plane_dim(self):
        return self.basis.shape[0]


@dataclass(frozen=True)
class Circle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (2,):
            raise ArgumentError("circle lives in dimension 2")
        if self.radius <= 0:
            raise ArgumentError("radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def ambient_dim(self):
        return 2


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (3,):
            raise ArgumentError("sphere lives in dimension 3")
        if self.radius <= 0:
            raise ArgumentError("radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def ambient_dim(self):
        return 3


@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] < 2:
            raise ArgumentError("polyline needs >= 2 vertices")
        object.__setattr__(self, "vertices", v)

    @property
    def ambient_dim(self):
        return self.vertices.shape[1]


@dataclass(frozen=True)
class IFSMap:
    """Contracting similarity x -> ratio * rotation @ x + translation."""

    ratio: float
    translation: np.ndarray
    rotation: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float)
        object.__setattr__(self, "translation", t)
        if not (0 < self.ratio < 1):
            raise ArgumentError("similarity ratio must lie in (0, 1)")
        if self.rotation is not None:
            rot = np.asarray(self.rotation, dtype=float)
            if not np.allclose(rot @ rot.T, np.eye(rot.shape[0]), atol=ORTHO_TOL):
                raise ArgumentError("rotation must be orthogonal to 1e-12")
            object.__setattr__(self, "rotation", rot)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if self.rotation is not None:
            x = x @ self.rotation.T
        return self.ratio * x + self.translation


@dataclass(frozen=True)
class IFS:
    maps: tuple
    osc_declared: bool = True

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise ArgumentError("an IFS needs at least 2 maps")
        object.__setattr__(self, "maps", maps)

    @property
    def ambient_dim(self):
        return self.maps[0].translation.shape[0]

    @property
    def ratios(self):
        return np.array([m.ratio for m in self.maps])


@dataclass(frozen=True)
class IFSAttractor:
    ifs: IFS

    @property
    def ambient_dim(self):
        return self.ifs.ambient_dim


SetModel = PointSet | AffinePlane | Circle | Sphere | Polyline | IFSAttractor


@dataclass(frozen=True)
class Isometry:
    """Rigid motion x -> rotation @ x + translation, optionally mod 1 (torus)."""

    translation: np.ndarray
    rotation: np.ndarray | None = None
    wrap: bool = False

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float)
        object.__setattr__(self, "translation", t)
        if self.rotation is not None:
            rot = np.asarray(self.rotation, dtype=float)
            if not np.allclose(rot @ rot.T, np.eye(rot.shape[0]), atol=ORTHO_TOL):
                raise ArgumentError("rotation must be orthogonal to 1e-12")
            object.__setattr__(self, "rotation", rot)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if self.rotation is not None:
            x = x @ self.rotation.T
        out = x + self.translation
        if self.wrap:
            out = np.mod(out, 1.0)
        return out


def _is_signed_permutation(rot, tol=1e-9):
    mat = np.abs(np.asarray(rot))
    return bool(
        np.all(np.isclose(mat.sum(axis=0), 1.0, atol=tol))
        and np.all(np.isclose(mat.max(axis=0), 1.0, atol=tol))
    )


# ---------------------------------------------------------------------------
# attractor geometry helpers


def attractor_bounds(ifs: IFS):
    """A Euclidean ball B(z0, R0) containing the attractor, z0 on it.

    z0 is the fixed point of the first map (a point of the attractor), and
    R0 = max_i |phi_i(z0) - z0| / (1 - max ratio) makes the ball invariant.
    """
    m0 = ifs.maps[0]
    n = ifs.ambient_dim
    a = m0.rotation if m0.rotation is not None else np.eye(n)
    z0 = np.linalg.solve(np.eye(n) - m0.ratio * a, m0.translation)
    rmax = float(np.max(ifs.ratios))
    shifts = [np.linalg.norm(m.apply(z0) - z0) for m in ifs.maps]
    r0 = max(shifts) / (1.0 - rmax)
    return z0, max(r0, 1e-300)


def _word_maps(ifs: IFS):
    """Per-map (scale, matrix, offset) triples for fast composition."""
    n = ifs.ambient_dim
    out = []
    for m in ifs.maps:
        rot = m.rotation if m.rotation is not None else np.eye(n)
        out.append((m.ratio, m.ratio * rot, m.translation))
    return out


def distance_to_attractor(model: IFSAttractor, pts, tol=1e-9):
    """Euclidean distance from each query point to the attractor, within tol.

    Branch-and-bound over cylinder words: each live node carries the image of
    the bounding ball; nodes whose lower bound exceeds every point's current
    best are pruned, and refinement stops once all cylinder radii fall
    below tol.
    """
    ifs = model.ifs
    z0, r0 = attractor_bounds(ifs)
    pts = np.asarray(pts, dtype=float)
    k = pts.shape[0]
    best = np.linalg.norm(pts - z0, axis=1) + 0.0  # z0 is on the attractor
    pieces = _word_maps(ifs)
    # frontier: list of (scale, matrix, offset); start from the root cylinder
    frontier = [(1.0, np.eye(ifs.ambient_dim), np.zeros(ifs.ambient_dim))]
    while frontier:
        next_frontier = []
        for scale, mat, off in frontier:
            for r, rmat, t in pieces:
                s2 = scale * r
                m2 = mat @ rmat
                o2 = mat @ t + off
                center = m2 @ z0 + o2  # word image of z0, itself a point of K
                d = np.linalg.norm(pts - center, axis=1)
                rad = s2 * r0
                np.minimum(best, d, out=best)
                low = d - rad
                if rad > tol and np.any(low < best):
                    next_frontier.append((s2, m2, o2))
        frontier = next_frontier
    return best


# ---------------------------------------------------------------------------
# distances


def _plane_distance(m: AffinePlane, pts, metric):
    diff = pts - m.base
    coeff = diff @ m.basis.T
    resid = diff - coeff @ m.basis
    if metric == "euclidean":
        return np.linalg.norm(resid, axis=1)
    n, l = m.ambient_dim, m.plane_dim
    axis_mask = np.isclose(np.abs(m.basis).max(axis=0), 1.0, atol=1e-12)
    if np.count_nonzero(axis_mask) == l and np.allclose(
        np.abs(m.basis).sum(axis=0)[~axis_mask], 0.0, atol=1e-12
    ):
        # axis-aligned span: free coordinates drop out of the sup distance
        return np.max(np.abs(diff[:, ~axis_mask]), axis=1) if l < n else np.zeros(len(pts))
    if l == n - 1:
        # hyperplane: closed form |normal . diff| / ||normal||_1
        _, _, vt = np.linalg.svd(m.basis, full_matrices=True)
        normal = vt[-1]
        return np.abs(diff @ normal) / np.abs(normal).sum()
    # general low-dimensional plane under sup norm: Chebyshev projection LP
    from scipy.optimize import linprog

    out = np.empty(len(pts))
    for i, d in enumerate(diff):
        c = np.zeros(l + 1)
        c[-1] = 1.0
        rows = np.hstack([m.basis.T, -np.ones((n, 1))])
        a_ub = np.vstack([rows, -np.hstack([m.basis.T, np.ones((n, 1))])])
        b_ub = np.concatenate([d, -d])
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * (l + 1))
        out[i] = res.x[-1]
    return out


def _polyline_distance(m: Polyline, pts, metric):
    a = m.vertices[:-1]
    b = m.vertices[1:]
    seg = b - a  # (nseg, n)
    if metric == "euclidean":
        ap = pts[:, None, :] - a[None, :, :]
        denom = np.maximum(np.sum(seg * seg, axis=1), 1e-300)
        t = np.clip(np.sum(ap * seg[None, :, :], axis=2) / denom, 0.0, 1.0)
        nearest = a[None, :, :] + t[:, :, None] * seg[None, :, :]
        return np.min(np.linalg.norm(pts[:, None, :] - nearest, axis=2), axis=1)
    if np.all(np.count_nonzero(seg, axis=1) <= 1):
        # axis-aligned segments are boxes: per-coordinate outside-distance
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        out = np.maximum(lo[None, :, :] - pts[:, None, :], pts[:, None, :] - hi[None, :, :])
        return np.min(np.max(np.maximum(out, 0.0), axis=2), axis=1)
    # sup norm: the per-segment objective max_i |c_i - t d_i| is convex in t;
    # golden-section search resolves it to ~1e-12.
    c = pts[:, None, :] - a[None, :, :]
    d = seg[None, :, :]
    lo = np.zeros(c.shape[:2])
    hi = np.ones(c.shape[:2])
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(48):
        m1 = hi - phi * (hi - lo)
        m2 = lo + phi * (hi - lo)
        f1 = np.max(np.abs(c - m1[:, :, None] * d), axis=2)
        f2 = np.max(np.abs(c - m2[:, :, None] * d), axis=2)
        take = f1 < f2
        hi = np.where(take, m2, hi)
        lo = np.where(take, lo, m1)
    t = 0.5 * (lo + hi)
    vals = np.max(np.abs(c - t[:, :, None] * d), axis=2)
    return np.min(vals, axis=1)


def distance_to_set(m: SetModel, x, tol=1e-9, metric="sup", wrap=False):
    """Distance from x (one point or a batch) to the model.

    Exact closed forms / projections everywhere except attractors, which are
    resolved to within ``tol``.  Circles, spheres, and attractors use the
    Euclidean set-distance regardless of ``metric`` (see module docstring).
    With ``wrap`` the query is taken on the unit torus via minimum over unit
    shifts of the point.
    """
    n = m.ambient_dim
    pts = _as_points(x, n)
    if wrap:
        shifts = np.array(list(product((-1.0, 0.0, 1.0), repeat=n)))
        cand = pts[:, None, :] + shifts[None, :, :]
        flat = cand.reshape(-1, n)
        d = distance_to_set(m, flat, tol=tol, metric=metric, wrap=False)
        d = d.reshape(len(pts), -1).min(axis=1)
        return d if np.ndim(x) == 2 else float(d[0])

    if isinstance(m, PointSet):
        d = np.min(_norm(pts[:, None, :] - m.points[None, :, :], metric), axis=1)
    elif isinstance(m, AffinePlane):
        d = _plane_distance(m, pts, metric)
    elif isinstance(m, Circle) or isinstance(m, Sphere):
        d = np.abs(np.linalg.norm(pts - m.center, axis=1) - m.radius)
    elif isinstance(m, Polyline):
        d = _polyline_distance(m, pts, metric)
    elif isinstance(m, IFSAttractor):
        d = distance_to_attractor(m, pts, tol=tol)
    else:
        raise ArgumentError(f"unknown set model {type(m).__name__}")
    return d if np.ndim(x) == 2 else float(d[0])


# ---------------------------------------------------------------------------
# sampling


def sample_on_set(m: SetModel, k, rng, tol=1e-9):
    """k points on (or within sampling tolerance of) the model."""
    if k < 1:
        raise ArgumentError("k must be >= 1")
    n = m.ambient_dim
    if isinstance(m, PointSet):
        idx = rng.integers(0, len(m.points), size=k)
        return m.points[idx].copy()
    if isinstance(m, AffinePlane):
        u = rng.uniform(-m.extent, m.extent, size=(k, m.plane_dim))
        return m.base + u @ m.basis
    if isinstance(m, Circle):
        theta = rng.uniform(0.0, 2 * math.pi, size=k)
        return m.center + m.radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if isinstance(m, Sphere):
        v = rng.normal(size=(k, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return m.center + m.radius * v
    if isinstance(m, Polyline):
        seg = np.diff(m.vertices, axis=0)
        lengths = np.linalg.norm(seg, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        s = rng.uniform(0.0, cum[-1], size=k)
        j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        t = (s - cum[j]) / np.maximum(lengths[j], 1e-300)
        return m.vertices[j] + t[:, None] * seg[j]
    if isinstance(m, IFSAttractor):
        ifs = m.ifs
        z0, r0 = attractor_bounds(ifs)
        rmax = float(np.max(ifs.ratios))
        depth = max(1, math.ceil(math.log(max(tol, 1e-300) / max(r0, tol)) / math.log(rmax)))
        words = rng.integers(0, len(ifs.maps), size=(k, depth))
        pts = np.tile(z0, (k, 1))
        # z0 lies on the attractor, so word images stay exactly on it
        for col in range(depth - 1, -1, -1):
            for a, mp in enumerate(ifs.maps):
                mask = words[:, col] == a
                if np.any(mask):
                    pts[mask] = mp.apply(pts[mask])
        return pts
    raise ArgumentError(f"unknown set model {type(m).__name__}")


# ---------------------------------------------------------------------------
# word combinatorics and similarity dimension


def words_at_scale(ifs: IFS, r, cap=10_000_000):
    """The cut of words whose contraction product first drops to <= r.

    Returned words are pairwise prefix-incomparable and their products lie in
    (r * min ratio, r].
    """
    if not (0 < r < 1):
        raise ArgumentError("scale must lie in (0, 1)")
    ratios = ifs.ratios
    out = []
    stack = [((), 1.0)]
    while stack:
        word, prod = stack.pop()
        for a, ra in enumerate(ratios):
            p = prod * ra
            if p <= r:
                out.append(word + (a,))
                if len(out) > cap:
                    raise ArgumentError(f"word cut exceeds cap {cap}")
            else:
                stack.append((word + (a,), p))
    return out


def word_interval(ifs: IFS, word, z0, r0):
    """Center and radius bound of a cylinder's bounding ball (Euclidean)."""
    pt = np.array(z0, dtype=float)
    scale = 1.0
    for a in reversed(word):
        pt = ifs.maps[a].apply(pt)
    for a in word:
        scale *= ifs.maps[a].ratio
    return pt, scale * r0


def cylinder_cut(ifs: IFS, target, cap=10_000_000):
    """Bounding balls (centers, radii) of the word cut at contraction ``target``.

    Vectorized expansion of the cylinder tree; words whose contraction
    product first drops to <= target are emitted, so the returned radii are
    at most ``target * r0`` and the balls jointly cover the attractor.
    """
    if not (0 < target):
        raise ArgumentError("target must be positive")
    z0, r0 = attractor_bounds(ifs)
    n = ifs.ambient_dim
    rotfree = all(m.rotation is None for m in ifs.maps)
    ratios = ifs.ratios
    trans = np.stack([m.translation for m in ifs.maps])
    done_c, done_s = [], []
    if target >= 1.0:
        return z0[None, :].copy(), np.array([r0])
    if rotfree:
        scales = np.ones(1)
        offs = np.zeros((1, n))
        while scales.size:
            new_s = (scales[:, None] * ratios[None, :]).reshape(-1)
            new_o = (
                offs[:, None, :] + scales[:, None, None] * trans[None, :, :]
            ).reshape(-1, n)
            if new_s.size + sum(s.size for s in done_s) > cap:
                raise ArgumentError(f"cylinder cut exceeds cap {cap}")
            fin = new_s <= target
            if np.any(fin):
                done_s.append(new_s[fin])
                done_c.append(new_o[fin] + new_s[fin, None] * z0[None, :])
            scales, offs = new_s[~fin], new_o[~fin]
    else:
        scales = np.ones(1)
        mats = np.eye(n)[None, :, :]
        offs = np.zeros((1, n))
        rmats = np.stack(
            [m.ratio * (m.rotation if m.rotation is not None else np.eye(n)) for m in ifs.maps]
        )
        while scales.size:
            new_s = (scales[:, None] * ratios[None, :]).reshape(-1)
            new_m = np.einsum("kij,mjl->kmil", mats, rmats).reshape(-1, n, n)
            new_o = (
                np.einsum("kij,mj->kmi", mats, trans) + offs[:, None, :]
            ).reshape(-1, n)
            if new_s.size + sum(s.size for s in done_s) > cap:
                raise ArgumentError(f"cylinder cut exceeds cap {cap}")
            fin = new_s <= target
            if np.any(fin):
                done_s.append(new_s[fin])
                done_c.append(new_o[fin] + np.einsum("kij,j->ki", new_m[fin], z0))
            scales, mats, offs = new_s[~fin], new_m[~fin], new_o[~fin]
    centers = np.concatenate(done_c, axis=0)
    radii = np.concatenate(done_s) * r0
    return centers, radii


def similarity_dimension(ifs: IFS):
    """Solve sum ratios**d = 1 by bisection to 1e-12."""
    ratios = ifs.ratios
    lo, hi = 0.0, 1.0
    while np.sum(ratios**hi) > 1.0:
        hi *= 2.0
        if hi > 64:
            raise ArgumentError("similarity dimension out of range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(ratios**mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# isometry action


def transform_model(m: SetModel, iso: Isometry) -> SetModel:
    """Image of the model under the isometry; distances are equivariant.

    Equivariance is exact in the Euclidean metric for any orthogonal
    rotation, and in the sup metric when the rotation is a signed
    permutation.  Wrapped isometries require a signed-permutation (or
    identity) rotation, since only those act on the torus.
    """
    n = m.ambient_dim
    if iso.rotation is not None and iso.wrap and not _is_signed_permutation(iso.rotation):
        raise UnsupportedCombination("torus wrap requires an axis-preserving rotation")
    rot = iso.rotation

    def mov(points):
        return iso.apply(points)

    if isinstance(m, PointSet):
        return PointSet(mov(m.points))
    if isinstance(m, AffinePlane):
        basis = m.basis if rot is None else m.basis @ rot.T
        return AffinePlane(mov(m.base), basis, extent=m.extent)
    if isinstance(m, Circle):
        return Circle(mov(m.center), m.radius)
    if isinstance(m, Sphere):
        return Sphere(mov(m.center), m.radius)
    if isinstance(m, Polyline):
        return Polyline(mov(m.vertices))
    if isinstance(m, IFSAttractor):
        if iso.wrap:
            raise UnsupportedCombination("torus wrap of an attractor is not supported")
        maps = []
        for mp in m.ifs.maps:
            a = mp.rotation if mp.rotation is not None else np.eye(n)
            q = rot if rot is not None else np.eye(n)
            new_rot = q @ a @ q.T
            new_t = q @ mp.translation + iso.translation - mp.ratio * (new_rot @ iso.translation)
            maps.append(IFSMap(mp.ratio, new_t, None if rot is None and mp.rotation is None else new_rot))
        return IFSAttractor(IFS(tuple(maps), m.ifs.osc_declared))
    raise ArgumentError(f"unknown set model {type(m).__name__}")


def model_window(m: SetModel, margin=0.0):
    """Axis-aligned bounding window (lo, hi) enclosing the model plus margin.

    Planes are windowed to their declared extent; attractors to their
    invariant bounding ball.
    """
    if isinstance(m, PointSet):
        lo, hi = m.points.min(axis=0), m.points.max(axis=0)
    elif isinstance(m, AffinePlane):
        corners = np.array(list(product((-m.extent, m.extent), repeat=m.plane_dim)))
        pts = m.base + corners @ m.basis
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    elif isinstance(m, (Circle, Sphere)):
        lo, hi = m.center - m.radius, m.center + m.radius
    elif isinstance(m, Polyline):
        lo, hi = m.vertices.min(axis=0), m.vertices.max(axis=0)
    elif isinstance(m, IFSAttractor):
        z0, r0 = attractor_bounds(m.ifs)
        lo, hi = z0 - r0, z0 + r0
    else:
        raise ArgumentError(f"unknown set model {type(m).__name__}")
    return lo - margin, hi + margin


# ---------------------------------------------------------------------------
# serialization


def model_to_json(m: SetModel) -> dict:
    if isinstance(m, PointSet):
        return {"variant": "points", "points": m.points.tolist()}
    if isinstance(m, AffinePlane):
        return {
            "variant": "plane",
            "base": m.base.tolist(),
            "basis": m.basis.tolist(),
            "extent": m.extent,
        }
    if isinstance(m, Circle):
        return {"variant": "circle", "center": m.center.tolist(), "radius": m.radius}
    if isinstance(m, Sphere):
        return {"variant": "sphere", "center": m.center.tolist(), "radius": m.radius}
    if isinstance(m, Polyline):
        return {"variant": "polyline", "vertices": m.vertices.tolist()}
    if isinstance(m, IFSAttractor):
        maps = []
        for mp in m.ifs.maps:
            entry = {"ratio": mp.ratio, "translation": mp.translation.tolist()}
            if mp.rotation is not None:
                entry["rotation"] = mp.rotation.tolist()
            maps.append(entry)
        return {"variant": "ifs", "maps": maps, "osc": m.ifs.osc_declared}
    raise ArgumentError(f"unknown set model {type(m).__name__}")


def model_from_json(obj) -> SetModel:
    if isinstance(obj, str):
        obj = json.loads(obj)
    variant = obj.get("variant")
    if variant == "points":
        return PointSet(np.array(obj["points"], dtype=float))
    if variant == "plane":
        return AffinePlane(
            np.array(obj["base"], dtype=float),
            np.array(obj["basis"], dtype=float),
            extent=float(obj.get("extent", 1.0)),
        )
    if variant == "circle":
        return Circle(np.array(obj["center"], dtype=float), float(obj["radius"]))
    if variant == "sphere":
        return Sphere(np.array(obj["center"], dtype=float), float(obj["radius"]))
    if variant == "polyline":
        return Polyline(np.array(obj["vertices"], dtype=float))
    if variant == "ifs":
        maps = tuple(
            IFSMap(
                float(e["ratio"]),
                np.array(e["translation"], dtype=float),
                np.array(e["rotation"], dtype=float) if "rotation" in e else None,
            )
            for e in obj["maps"]
        )
        return IFSAttractor(IFS(maps, bool(obj.get("osc", True))))
    raise ArgumentError(f"unknown model variant {variant!r}")


def write_points_csv(path, points):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(points):
            writer.writerow([repr(float(v)) for v in row])


def read_points_csv(path):
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise DomainError(f"no points in {path}")
    return np.array(rows)
