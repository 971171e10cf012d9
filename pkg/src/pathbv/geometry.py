"""Domains in R^d with exact signed distance and exterior-ball witnesses.

Sign convention: ``q(x) > 0`` inside the open domain, ``q = 0`` on the
boundary and ``q < 0`` outside the closure. All point arguments broadcast
over leading batch dimensions, i.e. ``x`` has shape ``(..., d)`` and
``signed_distance`` returns shape ``(...)``.

JSON form of a domain::

    {"kind": "ball", "params": {"center": [0, 0], "radius": 1}, "dim": 2}

Parameters per kind:

================  ==========================================================
kind              params
================  ==========================================================
ball              center (list), radius
halfspace         normal (inward, any length), offset; {<normal, x> > offset}
box               lo (list), hi (list)
annulus           center, r_in, r_out  (dim >= 2)
convex_polytope   facets: list of {"normal", "offset"} halfspaces
cusp_union        centers (list of points), radii; the domain is the
                  complement of the union of the closed balls
================  ==========================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError, NumericalError, UnsupportedDeltaError

GEOM_RTOL = 1e-12
BOUNDARY_TOL = 1e-9
POLYTOPE_MAX_SWEEPS = 10_000

KINDS = ("ball", "halfspace", "box", "annulus", "convex_polytope", "cusp_union")


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise InputError(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise InputError("zero normal vector")
    return v / n


def _sphere_samples(n, dim, rng):
    g = rng.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    return g / norms[:, None]


def _radial(x, center, radius):
    """Closest point of the sphere |y - center| = radius to each x."""
    v = x - center
    # rescale first so tiny offsets do not lose precision to subnormals
    big = np.abs(v).max(axis=-1, keepdims=True)
    v = v / np.where(big > 0, big, 1.0)
    rho = np.linalg.norm(v, axis=-1)
    safe = np.where(rho > 0, rho, 1.0)
    u = v / safe[..., None]
    if np.any(rho == 0):
        e1 = np.zeros(x.shape[-1])
        e1[0] = 1.0
        u = np.where((rho == 0)[..., None], e1, u)
    return center + radius * u


class Domain:
    """Base class; concrete kinds implement the closed-form pieces."""

    kind = None

    def __init__(self, dim):
        if int(dim) != dim or dim < 1:
            raise InputError(f"dim must be a positive integer, got {dim}")
        self.dim = int(dim)

    # -- interface implemented per kind --------------------------------------
    def signed_distance(self, x):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def outward_normal(self, y):
        raise NotImplementedError

    def sample_boundary(self, n, rng):
        raise NotImplementedError

    @property
    def admissible_delta(self):
        return math.inf

    def bounding_box(self):
        """Axis-aligned box containing the closure, or None if unbounded."""
        return None

    def kernel_projection(self):
        """(code, params) for the compiled projection, or (PROJ_NONE, None)."""
        return kernels.PROJ_NONE, None

    @property
    def params(self):
        raise NotImplementedError

    # -- shared ------------------------------------------------------------
    def contains(self, x):
        return self.signed_distance(x) > 0

    def to_dict(self):
        return {"kind": self.kind, "params": self.params, "dim": self.dim}

    def __eq__(self, other):
        return isinstance(other, Domain) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return f"{type(self).__name__}({self.params}, dim={self.dim})"


class Ball(Domain):
    kind = "ball"

    def __init__(self, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        super().__init__(center.size)
        if not radius > 0:
            raise InputError("ball radius must be positive")
        self.center = center
        self.radius = float(radius)

    @property
    def params(self):
        return {"center": self.center.tolist(), "radius": self.radius}

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    def project(self, x):
        x = _as_points(x, self.dim)
        outside = self.signed_distance(x) < 0
        return np.where(outside[..., None], _radial(x, self.center, self.radius), x)

    def outward_normal(self, y):
        return (np.asarray(y, float) - self.center) / self.radius

    def sample_boundary(self, n, rng):
        return self.center + self.radius * _sphere_samples(n, self.dim, rng)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def kernel_projection(self):
        return kernels.PROJ_BALL, np.append(self.center, self.radius)


class HalfSpace(Domain):
    """{x : <normal, x> > offset}; ``normal`` points into the domain."""

    kind = "halfspace"

    def __init__(self, normal, offset=0.0, sample_extent=10.0):
        normal = np.atleast_1d(np.asarray(normal, dtype=float))
        super().__init__(normal.size)
        self._raw = (normal.tolist(), float(offset))
        scale = np.linalg.norm(normal)
        self.normal = _unit(normal)
        self.offset = float(offset) / scale
        self.sample_extent = float(sample_extent)

    @property
    def params(self):
        return {"normal": self._raw[0], "offset": self._raw[1]}

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        return x @ self.normal - self.offset

    def project(self, x):
        x = _as_points(x, self.dim)
        s = self.signed_distance(x)
        return x - np.minimum(s, 0.0)[..., None] * self.normal

    def outward_normal(self, y):
        return -self.normal

    def kernel_projection(self):
        return kernels.PROJ_HALFSPACE, np.append(self.normal, self.offset)

    def sample_boundary(self, n, rng):
        foot = self.offset * self.normal
        if self.dim == 1:
            return np.repeat(foot[None, :], n, axis=0)
        # orthonormal basis of the hyperplane from a QR factorisation
        basis = np.linalg.qr(np.column_stack([self.normal, np.eye(self.dim)]))[0][:, 1:]
        coef = rng.uniform(-self.sample_extent, self.sample_extent, (n, self.dim - 1))
        return foot + coef @ basis.T


class Box(Domain):
    kind = "box"

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise InputError("box requires lo < hi componentwise")
        super().__init__(lo.size)
        self.lo, self.hi = lo, hi

    @property
    def params(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        inner = np.minimum(x - self.lo, self.hi - x).min(axis=-1)
        outer = np.linalg.norm(x - np.clip(x, self.lo, self.hi), axis=-1)
        # the largest axis violation guards against underflow of the norm
        return np.where(inner >= 0, inner, -np.maximum(outer, -inner))

    def project(self, x):
        x = _as_points(x, self.dim)
        return np.clip(x, self.lo, self.hi)

    def kernel_projection(self):
        return kernels.PROJ_BOX, np.concatenate([self.lo, self.hi])

    def outward_normal(self, y):
        y = np.asarray(y, float)
        scale = 1.0 + np.abs(y)
        # facets ordered (axis 0 lo, axis 0 hi, axis 1 lo, ...); first active wins
        for i in range(self.dim):
            for side, bound in ((-1.0, self.lo[i]), (1.0, self.hi[i])):
                if abs(y[i] - bound) <= BOUNDARY_TOL * scale[i]:
                    n = np.zeros(self.dim)
                    n[i] = side
                    return n
        raise InputError("point is not on the box boundary")

    def sample_boundary(self, n, rng):
        side = self.hi - self.lo
        areas = np.array([np.prod(np.delete(side, i)) for i in range(self.dim)])
        facet_p = np.repeat(areas, 2) / (2 * areas.sum())
        facet = rng.choice(2 * self.dim, size=n, p=facet_p)
        pts = self.lo + rng.random((n, self.dim)) * side
        axis = facet // 2
        rows = np.arange(n)
        pts[rows, axis] = np.where(facet % 2 == 0, self.lo[axis], self.hi[axis])
        return pts

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()


class Annulus(Domain):
    kind = "annulus"

    def __init__(self, center, r_in, r_out):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        super().__init__(center.size)
        if self.dim < 2:
            raise InputError("annulus requires dim >= 2")
        if not 0 < r_in < r_out:
            raise InputError("annulus requires 0 < r_in < r_out")
        self.center = center
        self.r_in, self.r_out = float(r_in), float(r_out)

    @property
    def params(self):
        return {"center": self.center.tolist(), "r_in": self.r_in, "r_out": self.r_out}

    @property
    def admissible_delta(self):
        return self.r_in

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        rho = np.linalg.norm(x - self.center, axis=-1)
        return np.minimum(rho - self.r_in, self.r_out - rho)

    def project(self, x):
        x = _as_points(x, self.dim)
        rho = np.linalg.norm(x - self.center, axis=-1)[..., None]
        inner = _radial(x, self.center, self.r_in)
        outer = _radial(x, self.center, self.r_out)
        return np.where(rho < self.r_in, inner, np.where(rho > self.r_out, outer, x))

    def outward_normal(self, y):
        v = np.asarray(y, float) - self.center
        rho = np.linalg.norm(v)
        if abs(rho - self.r_in) <= abs(rho - self.r_out):
            return -v / rho
        return v / rho

    def sample_boundary(self, n, rng):
        w_in = self.r_in ** (self.dim - 1)
        w_out = self.r_out ** (self.dim - 1)
        radius = np.where(rng.random(n) < w_in / (w_in + w_out), self.r_in, self.r_out)
        return self.center + radius[:, None] * _sphere_samples(n, self.dim, rng)

    def bounding_box(self):
        return self.center - self.r_out, self.center + self.r_out


class ConvexPolytope(Domain):
    """Intersection of open halfspaces {<n_j, x> > c_j} with inward normals."""

    kind = "convex_polytope"

    def __init__(self, facets, sample_extent=10.0):
        if not facets:
            raise InputError("convex_polytope needs at least one facet")
        normals = [np.atleast_1d(np.asarray(f["normal"], float)) for f in facets]
        super().__init__(normals[0].size)
        if any(v.size != self.dim for v in normals):
            raise InputError("facet normals must share one dimension")
        self._raw = [{"normal": v.tolist(), "offset": float(f["offset"])}
                     for v, f in zip(normals, facets)]
        scale = np.array([np.linalg.norm(v) for v in normals])
        if np.any(scale == 0):
            raise InputError("zero facet normal")
        self.normals = np.array(normals) / scale[:, None]
        self.offsets = np.array([f["offset"] for f in self._raw]) / scale
        self.sample_extent = float(sample_extent)
        self._check_nonempty()

    @property
    def params(self):
        return {"facets": self._raw}

    def _check_nonempty(self):
        from scipy.optimize import linprog

        # Chebyshev centre: maximise s subject to <n_j, x> - s >= c_j, |x|_inf <= extent
        d = self.dim
        cost = np.zeros(d + 1)
        cost[-1] = -1.0
        a_ub = np.hstack([-self.normals, np.ones((len(self.offsets), 1))])
        bounds = [(-self.sample_extent, self.sample_extent)] * d + [(None, 1.0)]
        res = linprog(cost, A_ub=a_ub, b_ub=-self.offsets, bounds=bounds)
        if not res.success or res.x[-1] <= 0:
            raise InputError("convex_polytope has empty interior")
        self._interior_point = res.x[:d]

    def slacks(self, x):
        return x @ self.normals.T - self.offsets

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        flat = x.reshape(-1, self.dim)
        out = self.slacks(flat).min(axis=-1)
        outside = out < 0
        if np.any(outside):
            pts = flat[outside]
            gap = np.linalg.norm(pts - self._dykstra(pts), axis=-1)
            out[outside] = -np.maximum(gap, -out[outside])
        return out.reshape(x.shape[:-1])

    def project(self, x):
        x = _as_points(x, self.dim)
        flat = x.reshape(-1, self.dim)
        res = flat.copy()
        outside = self.slacks(flat).min(axis=-1) < 0
        if np.any(outside):
            res[outside] = self._dykstra(flat[outside])
        return res.reshape(x.shape)

    def _dykstra(self, pts):
        pts = np.atleast_2d(pts)
        y = pts.copy()
        incr = np.zeros((len(self.offsets),) + pts.shape)
        scale = 1.0 + np.abs(pts).max()
        for _ in range(POLYTOPE_MAX_SWEEPS):
            y_prev = y
            for j, (n, c) in enumerate(zip(self.normals, self.offsets)):
                w = y + incr[j]
                y = w + np.maximum(0.0, c - w @ n)[:, None] * n
                incr[j] = w - y
            moved = np.abs(y - y_prev).max()
            feasible = self.slacks(y).min() >= -GEOM_RTOL * scale
            if moved <= GEOM_RTOL * scale and feasible:
                return y
        raise NumericalError("polytope projection did not converge "
                             f"after {POLYTOPE_MAX_SWEEPS} sweeps")

    def outward_normal(self, y):
        y = np.asarray(y, float)
        s = self.slacks(y)
        active = np.flatnonzero(np.abs(s) <= BOUNDARY_TOL * (1.0 + np.abs(y).max()))
        if active.size == 0:
            raise InputError("point is not on the polytope boundary")
        return -self.normals[active[0]]

    def _hull_simplices(self):
        from scipy.spatial import ConvexHull, HalfspaceIntersection

        d = self.dim
        ext = self.sample_extent
        box_n = np.vstack([np.eye(d), -np.eye(d)])
        box_c = np.full(2 * d, -ext)
        # scipy convention: A x + b <= 0
        hs = np.vstack([
            np.hstack([-self.normals, self.offsets[:, None]]),
            np.hstack([-box_n, box_c[:, None]]),
        ])
        verts = HalfspaceIntersection(hs, self._interior_point).intersections
        hull = ConvexHull(verts)
        simplices = verts[hull.simplices]
        edges = simplices[:, 1:, :] - simplices[:, :1, :]
        gram = np.einsum("sik,sjk->sij", edges, edges)
        vol = np.sqrt(np.clip(np.linalg.det(gram), 0, None)) / math.factorial(d - 1)
        return simplices, vol

    def sample_boundary(self, n, rng):
        if self.dim == 1:
            lo_hi = []
            for nrm, c in zip(self.normals[:, 0], self.offsets):
                lo_hi.append(c / nrm)
            pts = np.array(sorted(set(lo_hi)))[:, None]
            keep = np.abs(self.signed_distance(pts)) <= BOUNDARY_TOL
            pts = pts[keep]
            return pts[rng.integers(0, len(pts), n)]
        simplices, vol = self._hull_simplices()
        out = []
        total = 0
        while total < n:
            k = 2 * (n - total) + 16
            pick = rng.choice(len(vol), size=k, p=vol / vol.sum())
            w = rng.dirichlet(np.ones(self.dim), size=k)
            pts = np.einsum("kj,kjd->kd", w, simplices[pick])
            s = np.abs(self.slacks(pts)).min(axis=-1)
            pts = pts[s <= BOUNDARY_TOL * (1.0 + np.abs(pts).max(axis=-1))]
            out.append(pts)
            total += len(pts)
        return np.concatenate(out)[:n]


class CuspUnion(Domain):
    """Complement of a finite union of closed balls.

    Tangent or overlapping balls produce outward cusps and corners of the
    domain; every boundary point still admits an exterior ball inside one of
    the removed balls, so the admissible radius is the smallest ball radius.
    Exact interior distances for overlapping balls are available in dim 1
    and 2; for dim >= 3 the balls must have pairwise disjoint interiors.
    """

    kind = "cusp_union"

    def __init__(self, centers, radii):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        if len(centers) != len(radii) or len(radii) == 0:
            raise InputError("cusp_union needs matching centers and radii")
        if np.any(radii <= 0):
            raise InputError("cusp_union radii must be positive")
        super().__init__(centers.shape[1])
        self.centers, self.radii = centers, radii
        gap = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
        overlap = gap < radii[:, None] + radii[None] - GEOM_RTOL
        np.fill_diagonal(overlap, False)
        self._overlapping = bool(overlap.any())
        if self._overlapping and self.dim >= 3:
            raise InputError("cusp_union with overlapping balls is only exact for dim <= 2")

    @property
    def params(self):
        return {"centers": self.centers.tolist(), "radii": self.radii.tolist()}

    @property
    def admissible_delta(self):
        return float(self.radii.min())

    def _ball_gaps(self, x):
        return np.linalg.norm(x[..., None, :] - self.centers, axis=-1) - self.radii

    def _covered(self, pts, exclude=None):
        g = self._ball_gaps(pts)
        tol = GEOM_RTOL * (1.0 + self.radii)
        inside = g < -tol
        if exclude is not None:
            inside[..., exclude] = False
        return inside.any(axis=-1)

    def _boundary_candidates(self, x):
        """Candidate nearest boundary points for interior-of-union points x (P, d)."""
        cands = []
        for k, (c, r) in enumerate(zip(self.centers, self.radii)):
            if self.dim == 1:
                pts = [np.broadcast_to(c - r, x.shape), np.broadcast_to(c + r, x.shape)]
            else:
                pts = [_radial(x, c, r)]
            for p in pts:
                p = np.array(p)
                ok = ~self._covered(p, exclude=k)
                cands.append(np.where(ok[:, None], p, np.nan))
        if self.dim == 2:
            for i in range(len(self.radii)):
                for j in range(i + 1, len(self.radii)):
                    for p in self._circle_intersections(i, j):
                        if not self._covered(p[None], exclude=[i, j])[0]:
                            cands.append(np.broadcast_to(p, x.shape))
        return np.stack(cands, axis=1)

    def _circle_intersections(self, i, j):
        c0, c1 = self.centers[i], self.centers[j]
        r0, r1 = self.radii[i], self.radii[j]
        dvec = c1 - c0
        dist = np.linalg.norm(dvec)
        if dist == 0 or dist > r0 + r1 or dist < abs(r0 - r1):
            return []
        a = (r0 * r0 - r1 * r1 + dist * dist) / (2 * dist)
        h = math.sqrt(max(r0 * r0 - a * a, 0.0))
        base = c0 + a * dvec / dist
        perp = np.array([-dvec[1], dvec[0]]) / dist
        return [base + h * perp, base - h * perp]

    def signed_distance(self, x):
        x = _as_points(x, self.dim)
        g = self._ball_gaps(x)
        q = g.min(axis=-1)
        if not self._overlapping:
            return q
        flat = x.reshape(-1, self.dim)
        qf = q.reshape(-1).copy()
        inside = qf < 0
        if np.any(inside):
            pts = flat[inside]
            cands = self._boundary_candidates(pts)
            dist = np.linalg.norm(cands - pts[:, None, :], axis=-1)
            qf[inside] = -np.nanmin(dist, axis=1)
        return qf.reshape(q.shape)

    def project(self, x):
        x = _as_points(x, self.dim)
        flat = x.reshape(-1, self.dim)
        out = flat.copy()
        inside = self.signed_distance(flat) < 0
        if np.any(inside):
            pts = flat[inside]
            cands = self._boundary_candidates(pts)
            dist = np.linalg.norm(cands - pts[:, None, :], axis=-1)
            best = np.nanargmin(dist, axis=1)
            out[inside] = cands[np.arange(len(pts)), best]
        return out.reshape(x.shape)

    def outward_normal(self, y):
        y = np.asarray(y, float)
        g = self._ball_gaps(y)
        on = np.flatnonzero(np.abs(g) <= BOUNDARY_TOL * (1.0 + self.radii))
        if on.size == 0:
            raise InputError("point is not on the cusp_union boundary")
        k = on[0]
        return -(y - self.centers[k]) / self.radii[k]

    def sample_boundary(self, n, rng):
        w = self.radii ** (self.dim - 1)
        out, total = [], 0
        while total < n:
            k = 2 * (n - total) + 16
            ball = rng.choice(len(w), size=k, p=w / w.sum())
            pts = self.centers[ball] + self.radii[ball, None] * _sphere_samples(k, self.dim, rng)
            keep = ~np.array([self._covered(p[None], exclude=b)[0] for p, b in zip(pts, ball)])
            out.append(pts[keep])
            total += keep.sum()
        return np.concatenate(out)[:n]


_CLASSES = {
    "ball": Ball,
    "halfspace": HalfSpace,
    "box": Box,
    "annulus": Annulus,
    "convex_polytope": ConvexPolytope,
    "cusp_union": CuspUnion,
}


def domain_from_dict(data):
    """Build a domain from its JSON form; ``dim`` is checked against params."""
    try:
        kind = data["kind"]
        params = dict(data.get("params", {}))
    except (TypeError, KeyError) as exc:
        raise InputError(f"malformed domain description: {data!r}") from exc
    if kind not in _CLASSES:
        raise InputError(f"unknown domain kind {kind!r}; expected one of {KINDS}")
    try:
        dom = _CLASSES[kind](**params)
    except TypeError as exc:
        raise InputError(f"bad params for {kind}: {exc}") from exc
    if "dim" in data and int(data["dim"]) != dom.dim:
        raise InputError(f"dim {data['dim']} does not match params (dim {dom.dim})")
    return dom


def domain_to_dict(domain):
    return domain.to_dict()


def interval(lo=0.0, hi=1.0):
    """The open interval (lo, hi) in R^1 as a box domain."""
    return Box([lo], [hi])


# -- operations on domains ----------------------------------------------------

@dataclass(frozen=True)
class DriftParams:
    """Exterior-ball radius, dimension and the derived radial drift bound K."""

    delta: float
    dim: int

    def __post_init__(self):
        if not self.delta > 0:
            raise InputError("delta must be positive")
        if self.dim < 1:
            raise InputError("dim must be positive")

    @property
    def K(self):
        return (self.dim - 1) / (2.0 * self.delta)


@dataclass(frozen=True)
class ExteriorBallWitness:
    y: np.ndarray
    z: np.ndarray
    delta: float


@dataclass
class UEBCReport:
    passed: bool
    worst_violation: float
    delta: float
    n_samples: int
    worst_point: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {"pass": self.passed, "worst_violation": self.worst_violation,
                "delta": self.delta, "n_samples": self.n_samples}


def signed_distance(domain, x):
    """Distance to the complement minus distance to the domain."""
    return domain.signed_distance(x)


def in_level_set(domain, x, r):
    """True where ``q(x) > r`` (strict)."""
    if r < 0:
        raise InputError("level r must be nonnegative")
    return domain.signed_distance(x) > r


def project_to_closure(domain, x):
    """Euclidean nearest point of the closure; identity where q >= 0."""
    return domain.project(x)


def exterior_ball_witness(domain, y, delta):
    y = _as_points(y, domain.dim)
    if y.ndim != 1:
        raise InputError("exterior_ball_witness takes a single boundary point")
    if not delta > 0:
        raise InputError("delta must be positive")
    if delta > domain.admissible_delta * (1 + GEOM_RTOL):
        raise UnsupportedDeltaError(
            f"delta={delta} exceeds the admissible limit {domain.admissible_delta} "
            f"for kind {domain.kind}")
    return _witness(domain, y, delta)


def _witness(domain, y, delta):
    """Candidate witness y + delta n(y), without the admissibility check."""
    if abs(float(domain.signed_distance(y))) >= BOUNDARY_TOL:
        raise InputError(f"point {y.tolist()} is not on the boundary")
    n = domain.outward_normal(y)
    return ExteriorBallWitness(y=y.copy(), z=y + delta * n, delta=float(delta))


def check_uebc(domain, delta, n_boundary_samples, rng_seed=0, n_closure_samples=None, tol=1e-9):
    """Sample boundary points, build witnesses and look for closure points
    strictly inside the witness balls.

    Radii above the kind's admissible limit are still tested (the candidate
    ball is built the same way) so that an inadmissible radius is reported
    as a failure rather than an error.

    The distance from each centre ``z`` to the closure is taken as the minimum
    over a dense boundary sample and the exact value ``max(-q(z), 0)``.
    """
    if n_boundary_samples < 1:
        raise InputError("n_boundary_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    ys = domain.sample_boundary(n_boundary_samples, rng)
    n_dense = n_closure_samples or max(4 * n_boundary_samples, 2000)
    dense = np.concatenate([domain.sample_boundary(n_dense, rng), ys])
    worst, worst_y = -math.inf, None
    for y in ys:
        if not delta > 0:
            raise InputError("delta must be positive")
        w = _witness(domain, y, delta)
        sampled = np.linalg.norm(dense - w.z, axis=1).min()
        exact = max(-float(domain.signed_distance(w.z)), 0.0)
        violation = delta - min(sampled, exact)
        if violation > worst:
            worst, worst_y = violation, y
    return UEBCReport(passed=bool(worst <= tol * max(1.0, delta)),
                      worst_violation=float(worst), delta=float(delta),
                      n_samples=int(n_boundary_samples), worst_point=worst_y)
