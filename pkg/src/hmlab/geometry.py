"""Example domains, their distance queries, compact exhaustions and boundary charts.

Four domains are built in:

* ``disk``     -- open unit disk in the plane.
* ``cutdisk``  -- unit disk with the radial slit [0, 1) x {0} removed.
* ``spheres``  -- region between a sphere of radius 2 centered (0, 0, 2) and
  the closed unit ball centered (0, 0, 1); the two surfaces touch at the origin.
* ``comb``     -- open unit square minus the teeth x = 1/m, 0 < y <= 1 - 1/m
  for m = 2..N (the infinite family is truncated at N, default 50).

Every domain exposes the exact Euclidean distance to its full boundary;
that single scalar field drives all sampling.  The inner compact sets are
closed disks of radius 1 - 1/n for the disk, the explicit "disk minus a
slit notch" set for the cut disk, and distance level sets {d >= r_n} for
the two implicit domains, restricted to the component of the anchor point.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import ChartError
from . import rng

TWO_PI = 2.0 * np.pi

# Deep interior base points, clear of every boundary feature.
_ANCHORS = {
    "disk": (-0.5, 0.0),
    "cutdisk": (-0.5, 0.0),
    "spheres": (0.0, 0.0, 3.0),
    "comb": (0.75, 0.25),
}

_SPHERE_OUTER_CENTER = np.array([0.0, 0.0, 2.0])
_SPHERE_INNER_CENTER = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Domain:
    """One of the built-in domains, addressable by its canonical string."""

    kind: str
    teeth: int = 0  # comb only: truncation index N

    def __post_init__(self):
        if self.kind not in ("disk", "cutdisk", "spheres", "comb"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "comb" and self.teeth < 3:
            raise ValueError("comb needs teeth_count N >= 3")

    @property
    def dim(self) -> int:
        return 3 if self.kind == "spheres" else 2

    @property
    def diameter(self) -> float:
        return {"disk": 2.0, "cutdisk": 2.0, "spheres": 4.0, "comb": float(np.sqrt(2.0))}[self.kind]

    @property
    def anchor(self) -> np.ndarray:
        return np.array(_ANCHORS[self.kind])

    @property
    def key(self) -> str:
        return f"comb:N={self.teeth}" if self.kind == "comb" else self.kind

    @property
    def eps_chart(self) -> float:
        # level-set seed acceptance tolerance: far below every sampling scale
        return 1e-9 * self.diameter

    def bounding_box(self):
        if self.kind in ("disk", "cutdisk"):
            return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        if self.kind == "spheres":
            return np.array([-2.0, -2.0, 0.0]), np.array([2.0, 2.0, 4.0])
        return np.array([0.0, 0.0]), np.array([1.0, 1.0])


def make_domain(kind: str, teeth: int = 50) -> Domain:
    return Domain(kind=kind, teeth=teeth if kind == "comb" else 0)


def parse_domain(text: str) -> Domain:
    """Parse canonical forms: ``disk``, ``cutdisk``, ``spheres``, ``comb:N=50``."""
    text = text.strip()
    if text.startswith("comb"):
        teeth = 50
        if ":" in text:
            _, spec = text.split(":", 1)
            key, _, val = spec.partition("=")
            if key.strip() != "N":
                raise ValueError(f"bad comb spec {text!r}")
            teeth = int(val)
        return make_domain("comb", teeth=teeth)
    return make_domain(text)


def _as_points(domain: Domain, pts) -> np.ndarray:
    p = np.asarray(pts, dtype=np.float64)
    squeeze = p.ndim == 1
    if squeeze:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != domain.dim:
        raise ValueError(f"expected points of dimension {domain.dim}, got shape {p.shape}")
    return p


def _slit_distance(p: np.ndarray) -> np.ndarray:
    # distance to the closed segment from (0,0) to (1,0)
    x = p[:, 0]
    y = p[:, 1]
    t = np.clip(x, 0.0, 1.0)
    return np.hypot(x - t, y)


def _comb_teeth_distance(p: np.ndarray, teeth: int) -> np.ndarray:
    x = p[:, 0][:, None]
    y = p[:, 1][:, None]
    m = np.arange(2, teeth + 1, dtype=np.float64)
    xm = 1.0 / m
    hm = 1.0 - 1.0 / m
    ty = np.clip(y, 0.0, hm)
    return np.hypot(x - xm, y - ty).min(axis=1)


def _square_boundary_distance(p: np.ndarray) -> np.ndarray:
    x = p[:, 0]
    y = p[:, 1]
    inside = (x > 0) & (x < 1) & (y > 0) & (y < 1)
    edge = np.minimum(np.minimum(x, 1.0 - x), np.minimum(y, 1.0 - y))
    dx = np.maximum(np.maximum(-x, x - 1.0), 0.0)
    dy = np.maximum(np.maximum(-y, y - 1.0), 0.0)
    return np.where(inside, edge, np.hypot(dx, dy))


def distance_to_boundary(domain: Domain, pts) -> np.ndarray:
    """Exact Euclidean distance from each point to the full boundary of W.

    Defined for any point of the ambient space; zero exactly on the boundary.
    """
    p = _as_points(domain, pts)
    if domain.kind == "disk":
        d = np.abs(1.0 - np.hypot(p[:, 0], p[:, 1]))
    elif domain.kind == "cutdisk":
        d = np.minimum(np.abs(1.0 - np.hypot(p[:, 0], p[:, 1])), _slit_distance(p))
    elif domain.kind == "spheres":
        r_out = np.linalg.norm(p - _SPHERE_OUTER_CENTER, axis=1)
        r_in = np.linalg.norm(p - _SPHERE_INNER_CENTER, axis=1)
        d = np.minimum(np.abs(2.0 - r_out), np.abs(r_in - 1.0))
    else:
        d = np.minimum(_square_boundary_distance(p), _comb_teeth_distance(p, domain.teeth))
    return d if np.asarray(pts).ndim > 1 else float(d[0])


def inside_domain(domain: Domain, pts):
    """True where the point belongs to the open set W (slit/teeth excluded)."""
    p = _as_points(domain, pts)
    if domain.kind == "disk":
        ok = np.hypot(p[:, 0], p[:, 1]) < 1.0
    elif domain.kind == "cutdisk":
        on_slit = (p[:, 1] == 0.0) & (p[:, 0] >= 0.0) & (p[:, 0] < 1.0)
        ok = (np.hypot(p[:, 0], p[:, 1]) < 1.0) & ~on_slit
    elif domain.kind == "spheres":
        r_out = np.linalg.norm(p - _SPHERE_OUTER_CENTER, axis=1)
        r_in = np.linalg.norm(p - _SPHERE_INNER_CENTER, axis=1)
        ok = (r_out < 2.0) & (r_in > 1.0)
    else:
        x, y = p[:, 0], p[:, 1]
        in_square = (x > 0.0) & (x < 1.0) & (y > 0.0) & (y < 1.0)
        on_tooth = np.zeros(len(p), dtype=bool)
        for m in range(2, domain.teeth + 1):
            on_tooth |= (x == 1.0 / m) & (y > 0.0) & (y <= 1.0 - 1.0 / m)
        ok = in_square & ~on_tooth
    return ok if np.asarray(pts).ndim > 1 else bool(ok[0])


# ---------------------------------------------------------------------------
# Exhaustion levels


@dataclass(frozen=True)
class ExhaustionLevel:
    """Finite member K_n of the compact exhaustion of W.

    ``shell_radius`` is the distance threshold r_n: for the disk family the
    set is exactly {d >= r_n} in explicit form, for the implicit domains it
    is the anchor component of that level set.
    """

    domain: Domain
    n: int
    shell_radius: float
    chart: Optional["BoundaryCellization"] = None

    @property
    def disk_radius(self) -> float:
        """Radius of K_n for the disk family charts."""
        return 1.0 - 1.0 / self.n

    @property
    def key(self) -> str:
        return f"{self.domain.key}:n={self.n}"

    def with_chart(self, chart: "BoundaryCellization") -> "ExhaustionLevel":
        return replace(self, chart=chart)


def exhaustion_level(domain: Domain, n: int) -> ExhaustionLevel:
    """Level descriptor for K_n; requires n >= 2."""
    if n < 2:
        raise ValueError("exhaustion index n must be >= 2")
    if domain.kind in ("disk", "cutdisk"):
        r = 1.0 / n
    else:
        r = 1.0 / (4.0 * n)
    return ExhaustionLevel(domain=domain, n=n, shell_radius=r)


# Flood-fill component grids for the implicit domains, cached per (domain, n).
# The spheres domain is rotation-symmetric about the z axis, so connectivity
# is decided on the (s, z) half-plane section with s = hypot(x, y).
_component_cache: dict = {}


def _grid_points(domain: Domain, level: ExhaustionLevel):
    pitch = level.shell_radius / 4.0
    if domain.kind == "comb":
        lo = np.array([0.0, 0.0])
        hi = np.array([1.0, 1.0])
    else:  # spheres section: s in [0, 2], z in [0, 4]
        lo = np.array([0.0, 0.0])
        hi = np.array([2.0, 4.0])
    shape = tuple(int(np.floor((hi[i] - lo[i]) / pitch)) + 1 for i in range(2))
    return lo, pitch, shape


def _section_points(domain: Domain, sz: np.ndarray) -> np.ndarray:
    if domain.kind == "comb":
        return sz
    return np.stack((sz[:, 0], np.zeros(len(sz)), sz[:, 1]), axis=1)


def _component_grid(level: ExhaustionLevel):
    key = (level.domain.key, level.n)
    grid = _component_cache.get(key)
    if grid is not None:
        return grid
    domain = level.domain
    lo, pitch, shape = _grid_points(domain, level)
    ii, jj = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    nodes = np.stack((lo[0] + ii.ravel() * pitch, lo[1] + jj.ravel() * pitch), axis=1)
    pts = _section_points(domain, nodes)
    # restrict to W: the distance field is also large deep inside the removed
    # ball and outside the outer sphere, which are not part of the domain
    mask = (
        (distance_to_boundary(domain, pts) >= level.shell_radius)
        & inside_domain(domain, pts)
    ).reshape(shape)
    labels, n_comp = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    anchor = domain.anchor
    a_sz = anchor if domain.kind == "comb" else np.array([np.hypot(anchor[0], anchor[1]), anchor[2]])
    ai = int(round((a_sz[0] - lo[0]) / pitch))
    aj = int(round((a_sz[1] - lo[1]) / pitch))
    anchor_label = int(labels[ai, aj])
    if anchor_label == 0:
        raise ChartError(f"anchor not inside level set for {level.key}")
    grid = (lo, pitch, labels, anchor_label, int(n_comp))
    _component_cache[key] = grid
    return grid


def level_component_count(level: ExhaustionLevel) -> int:
    """Number of grid-resolved components of {d >= r_n} (1 for all built-in cases)."""
    if level.domain.kind in ("disk", "cutdisk"):
        return 1
    return _component_grid(level)[4]


def _in_anchor_component(level: ExhaustionLevel, p: np.ndarray) -> np.ndarray:
    lo, pitch, labels, anchor_label, _ = _component_grid(level)
    domain = level.domain
    sz = p if domain.kind == "comb" else np.stack((np.hypot(p[:, 0], p[:, 1]), p[:, 2]), axis=1)
    i = np.clip(np.rint((sz[:, 0] - lo[0]) / pitch).astype(int), 0, labels.shape[0] - 1)
    j = np.clip(np.rint((sz[:, 1] - lo[1]) / pitch).astype(int), 0, labels.shape[1] - 1)
    ok = labels[i, j] == anchor_label
    # points whose nearest node fell just off the set: accept if any neighbor matches
    miss = np.nonzero(labels[i, j] == 0)[0]
    for k in miss:
        i0, j0 = i[k], j[k]
        neigh = labels[max(0, i0 - 1):i0 + 2, max(0, j0 - 1):j0 + 2]
        ok[k] = bool((neigh == anchor_label).any())
    return ok


def membership_in_k(level: ExhaustionLevel, pts):
    """True where the point lies in K_n."""
    domain = level.domain
    p = _as_points(domain, pts)
    r = level.shell_radius
    if domain.kind == "disk":
        ok = np.hypot(p[:, 0], p[:, 1]) <= level.disk_radius
    elif domain.kind == "cutdisk":
        ok = (np.hypot(p[:, 0], p[:, 1]) <= level.disk_radius) & (_slit_distance(p) >= r)
    else:
        ok = distance_to_boundary(domain, p) >= r
        sub = np.nonzero(ok)[0]
        if len(sub):
            ok[sub] = _in_anchor_component(level, p[sub])
    return ok if np.asarray(pts).ndim > 1 else bool(ok[0])


# ---------------------------------------------------------------------------
# Boundary cellizations


@dataclass(frozen=True)
class BoundaryCellization:
    """Partition of the level boundary into M cells with representative points.

    ``reps`` holds one representative per cell, lying on the level set up to
    the chart tolerance.  ``assign`` maps points near the boundary to cell
    indices; it is total and deterministic.
    """

    level: ExhaustionLevel
    m_cells: int
    seed: int
    kind: str  # "arc", "cutdisk", "voronoi"
    reps: np.ndarray = field(repr=False)

    @property
    def chart_id(self) -> str:
        return f"{self.level.key}:{self.kind}:M={self.m_cells},seed={self.seed}"

    def assign(self, pts) -> np.ndarray:
        p = _as_points(self.level.domain, pts)
        if self.kind == "arc":
            ang = np.mod(np.arctan2(p[:, 1], p[:, 0]), TWO_PI)
            return np.minimum((ang / (TWO_PI / self.m_cells)).astype(np.int64), self.m_cells - 1)
        if self.kind == "cutdisk":
            s = _cutdisk_curve_coordinate(self.level, p)
            total = _cutdisk_curve_length(self.level)
            return np.minimum((s / (total / self.m_cells)).astype(np.int64), self.m_cells - 1)
        # voronoi: nearest seed, first index wins ties
        d2 = ((p[:, None, :] - self.reps[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1).astype(np.int64)

    def cell_edges(self) -> np.ndarray:
        """Angular cell edges for the disk chart (used by the oracles)."""
        if self.kind != "arc":
            raise ValueError("cell_edges is defined for the equal-arc disk chart only")
        return np.linspace(0.0, TWO_PI, self.m_cells + 1)


def _cutdisk_geometry(level: ExhaustionLevel):
    r = level.shell_radius
    big_r = level.disk_radius
    theta_star = np.arcsin(min(1.0, r / big_r))
    x_r = np.sqrt(max(big_r * big_r - r * r, 0.0))
    l_arc = big_r * (TWO_PI - 2.0 * theta_star)
    return r, big_r, theta_star, x_r, l_arc


def _cutdisk_curve_length(level: ExhaustionLevel) -> float:
    r, _, _, x_r, l_arc = _cutdisk_geometry(level)
    return l_arc + 2.0 * x_r + np.pi * r


def _cutdisk_curve_coordinate(level: ExhaustionLevel, p: np.ndarray) -> np.ndarray:
    """Arc-length coordinate of the nearest boundary feature of the cut-disk K_n.

    The boundary is traversed with K_n on the left: outer circular arc from
    angle theta* to 2*pi - theta*, the notch line y = -r from x_r to 0, the
    cap of radius r around the origin from (0,-r) through (-r,0) to (0,r),
    and the notch line y = +r back out to x_r.
    """
    r, big_r, theta_star, x_r, l_arc = _cutdisk_geometry(level)
    x, y = p[:, 0], p[:, 1]

    ang = np.mod(np.arctan2(y, x), TWO_PI)
    ang_c = np.clip(ang, theta_star, TWO_PI - theta_star)
    d_arc = np.hypot(x - big_r * np.cos(ang_c), y - big_r * np.sin(ang_c))
    s_arc = big_r * (ang_c - theta_star)

    x_lo = np.clip(x, 0.0, x_r)
    d_lower = np.hypot(x - x_lo, y + r)
    s_lower = l_arc + (x_r - x_lo)

    # cap parameter u in [0, pi]: point angle phi = -pi/2 - u
    phi = np.arctan2(y, x)
    u = np.mod(-0.5 * np.pi - phi, TWO_PI)
    u = np.clip(u, 0.0, np.pi)
    cap_phi = -0.5 * np.pi - u
    d_cap = np.hypot(x - r * np.cos(cap_phi), y - r * np.sin(cap_phi))
    s_cap = l_arc + x_r + r * u

    x_up = np.clip(x, 0.0, x_r)
    d_upper = np.hypot(x - x_up, y - r)
    s_upper = l_arc + x_r + np.pi * r + x_up

    dists = np.stack((d_arc, d_lower, d_cap, d_upper), axis=0)
    coords = np.stack((s_arc, s_lower, s_cap, s_upper), axis=0)
    pick = dists.argmin(axis=0)
    return coords[pick, np.arange(len(p))]


def _cutdisk_point_at(level: ExhaustionLevel, s: np.ndarray) -> np.ndarray:
    r, big_r, theta_star, x_r, l_arc = _cutdisk_geometry(level)
    s = np.asarray(s, dtype=np.float64)
    out = np.empty((len(s), 2))
    seg1 = s < l_arc
    seg2 = (~seg1) & (s < l_arc + x_r)
    seg3 = (~seg1) & (~seg2) & (s < l_arc + x_r + np.pi * r)
    seg4 = ~(seg1 | seg2 | seg3)
    th = theta_star + s[seg1] / big_r
    out[seg1, 0] = big_r * np.cos(th)
    out[seg1, 1] = big_r * np.sin(th)
    xl = x_r - (s[seg2] - l_arc)
    out[seg2, 0] = xl
    out[seg2, 1] = -r
    u = (s[seg3] - l_arc - x_r) / r
    out[seg3, 0] = r * np.cos(-0.5 * np.pi - u)
    out[seg3, 1] = r * np.sin(-0.5 * np.pi - u)
    xu = s[seg4] - l_arc - x_r - np.pi * r
    out[seg4, 0] = xu
    out[seg4, 1] = r
    return out


def _stratum_coordinate(domain: Domain, pt: np.ndarray) -> float:
    """Scalar in [0, 1) used to spread level-set seeds across the boundary.

    The spheres chart stratifies by azimuth about the symmetry axis so that
    the ring near the tangency point is resolved at any M; the comb chart
    stratifies by x so that neighboring slots fall in different cells.
    """
    if domain.kind == "spheres":
        return float(np.mod(np.arctan2(pt[1], pt[0]), TWO_PI) / TWO_PI)
    return float(np.clip(pt[0], 0.0, 1.0 - 1e-12))


class _SeedDraws:
    """Deterministic scalar-uniform supply for the chart sampler."""

    def __init__(self, seed: int):
        self.seed = seed
        self.counter = 0
        self._buf: list = []

    def take(self, k: int) -> np.ndarray:
        while len(self._buf) < k:
            u, v = rng.uniform_pair(self.seed, np.array([self.counter], dtype=np.uint64), 0)
            self.counter += 1
            self._buf.extend([float(u[0]), float(v[0])])
        out = self._buf[:k]
        del self._buf[:k]
        return np.array(out)


def _level_crossing(level: ExhaustionLevel, draws: _SeedDraws):
    """One candidate point on {d = r_n}: random interior point, random ray, bisect."""
    domain = level.domain
    r = level.shell_radius
    lo, hi = domain.bounding_box()
    span = hi - lo
    tol = domain.eps_chart
    dim = domain.dim
    a = lo + draws.take(dim) * span
    a = a[None, :]
    if not inside_domain(domain, a)[0]:
        return None
    if distance_to_boundary(domain, a)[0] < 1.5 * r:
        return None
    if not membership_in_k(level, a)[0]:
        return None
    if dim == 2:
        ang = TWO_PI * draws.take(1)[0]
        direction = np.array([np.cos(ang), np.sin(ang)])
    else:
        u = draws.take(2)
        z = 2.0 * u[0] - 1.0
        ang = TWO_PI * u[1]
        s = np.sqrt(max(0.0, 1.0 - z * z))
        direction = np.array([s * np.cos(ang), s * np.sin(ang), z])
    step = r / 4.0
    n_steps = int(np.ceil(np.linalg.norm(span) / step)) + 2
    ts = step * np.arange(1, n_steps + 1)
    dvals = distance_to_boundary(domain, a + ts[:, None] * direction[None, :])
    below = np.nonzero(dvals < r)[0]
    if not len(below):
        return None
    k = below[0]
    t_lo = ts[k - 1] if k > 0 else 0.0
    t_hi = ts[k]
    for _ in range(64):
        t_mid = 0.5 * (t_lo + t_hi)
        if distance_to_boundary(domain, a + t_mid * direction[None, :])[0] >= r:
            t_lo = t_mid
        else:
            t_hi = t_mid
        if t_hi - t_lo <= tol:
            break
    pt = (a + 0.5 * (t_lo + t_hi) * direction[None, :])[0]
    if abs(distance_to_boundary(domain, pt[None, :])[0] - r) > tol:
        return None
    return pt


def _sample_level_seeds(level: ExhaustionLevel, m_cells: int, seed: int) -> np.ndarray:
    """Rejection-sample M points on the level set {d = r_n} of an implicit domain.

    Seed j targets the stratum [j/M, (j+1)/M) of the chart coordinate; if the
    per-seed budget runs out (the stratum may be empty on this level set), the
    first valid crossing found stands in.  Fully deterministic in
    (level, M, seed).
    """
    domain = level.domain
    draws = _SeedDraws(seed)
    out = np.empty((m_cells, domain.dim))
    budget = 400
    for j in range(m_cells):
        fallback = None
        placed = False
        for _ in range(budget):
            pt = _level_crossing(level, draws)
            if pt is None:
                continue
            if fallback is None:
                fallback = pt
            c = _stratum_coordinate(domain, pt)
            if j / m_cells <= c < (j + 1) / m_cells:
                out[j] = pt
                placed = True
                break
        if not placed:
            if fallback is None:
                raise ChartError(
                    f"level-set seed sampling exhausted its budget for {level.key} (M={m_cells})"
                )
            out[j] = fallback
    return out


def cellize_boundary(level: ExhaustionLevel, m_cells: int, seed: int = 0) -> BoundaryCellization:
    """Build the M-cell chart of the level boundary.

    Disk-family levels get M equal arc-length cells along the explicit curve;
    implicit levels get Voronoi cells induced by M seeds rejection-sampled on
    the level set.
    """
    if m_cells < 2:
        raise ValueError("cell count M must be >= 2")
    domain = level.domain
    if domain.kind == "disk":
        mid = (np.arange(m_cells) + 0.5) * (TWO_PI / m_cells)
        reps = level.disk_radius * np.stack((np.cos(mid), np.sin(mid)), axis=1)
        return BoundaryCellization(level=level, m_cells=m_cells, seed=seed, kind="arc", reps=reps)
    if domain.kind == "cutdisk":
        total = _cutdisk_curve_length(level)
        mid = (np.arange(m_cells) + 0.5) * (total / m_cells)
        reps = _cutdisk_point_at(level, mid)
        return BoundaryCellization(level=level, m_cells=m_cells, seed=seed, kind="cutdisk", reps=reps)
    reps = _sample_level_seeds(level, m_cells, rng.derive_seed(seed, "chart", level.key, m_cells))
    return BoundaryCellization(level=level, m_cells=m_cells, seed=seed, kind="voronoi", reps=reps)
