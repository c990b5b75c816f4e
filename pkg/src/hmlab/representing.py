"""Finite representing-measure construction for positive harmonic functions.

Fix a base point x0 and a deep level K_gamma with boundary C.  Cellizing C
into sets A_i with representatives y_i and estimating the harmonic measures
mu_x(A_i) by interior walks gives:

* kernel functions  x -> mu_x(A_i) / mu_x0(A_i), normalized to 1 at x0;
* the reconstruction  h(x) ~ sum_i h(y_i) mu_x(A_i);
* the weight vector  w_i = h(y_i) mu_x0(A_i), the finite stand-in for the
  representing measure of h, which can be pushed to the topological boundary
  through the explicit disk charts.

All estimates for one partition share a per-point cache so that affine
relations between functions hold exactly, not just statistically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Sequence, Tuple

import numpy as np

from . import geometry, rng, sampler
from .geometry import BoundaryCellization, Domain, ExhaustionLevel
from .measures import ExitDistribution

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# The built-in catalogue of normalized positive harmonic functions


class HarmonicFunction:
    """Positive harmonic function on W normalized to 1 at its base point."""

    label = "harmonic"

    def evaluate(self, pts) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, pts):
        out = self.evaluate(np.atleast_2d(np.asarray(pts, dtype=np.float64)))
        return out if np.asarray(pts).ndim > 1 else float(out[0])


@dataclass
class ConstantOne(HarmonicFunction):
    label: str = "one"

    def evaluate(self, pts):
        return np.ones(len(pts))


@dataclass
class PoissonUnitDisk(HarmonicFunction):
    """Poisson kernel of the unit disk with pole at angle theta0, normalized at x0."""

    theta0: float
    x0: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.label = f"poisson:theta0={self.theta0:.6g}"
        self._norm = self._raw(np.asarray(self.x0, dtype=np.float64)[None, :])[0]

    @staticmethod
    def _pole(theta0):
        return np.array([np.cos(theta0), np.sin(theta0)])

    def _raw(self, pts):
        b = self._pole(self.theta0)
        diff = b[None, :] - pts
        denom = (diff * diff).sum(axis=1)
        r2 = (pts * pts).sum(axis=1)
        return (1.0 - r2) / denom

    def evaluate(self, pts):
        return self._raw(pts) / self._norm


@dataclass
class AffineCombo(HarmonicFunction):
    """Convex combination sum_j alpha_j h_j; stays normalized at the shared base point."""

    parts: Sequence[Tuple[float, HarmonicFunction]]

    def __post_init__(self):
        alphas = np.array([a for a, _ in self.parts], dtype=np.float64)
        if (alphas <= 0).any():
            raise ValueError("affine weights must be positive")
        if abs(alphas.sum() - 1.0) > 1e-12:
            raise ValueError("affine weights must sum to 1")
        self.label = "combo(" + ",".join(f"{a:.6g}*{h.label}" for a, h in self.parts) + ")"

    def evaluate(self, pts):
        return sum(a * h.evaluate(pts) for a, h in self.parts)


# ---------------------------------------------------------------------------
# Partition of C = boundary of K_gamma


@dataclass
class RepresentingPartition:
    """Cellized deep boundary with harmonic-measure estimates from the base point."""

    domain: Domain
    gamma_level: ExhaustionLevel
    chart: BoundaryCellization
    x0: np.ndarray
    mu_x0: ExitDistribution
    delta_var: Dict[str, float] = field(default_factory=dict)
    _cache: Dict[tuple, ExitDistribution] = field(default_factory=dict, repr=False)

    @property
    def kept(self) -> np.ndarray:
        """Indices of cells with strictly positive estimated base-point mass."""
        return np.nonzero(self.mu_x0.counts > 0)[0]

    @property
    def reps(self) -> np.ndarray:
        return self.chart.reps

    @property
    def abort_fraction(self) -> float:
        return self.mu_x0.abort_fraction

    def _key(self, x: np.ndarray) -> tuple:
        return tuple(float(c) for c in x)

    def measure_at(self, x, params: sampler.WalkParams) -> ExitDistribution:
        """Cached per-cell harmonic measure estimate seen from x."""
        x = np.asarray(x, dtype=np.float64)
        key = self._key(x)
        if key not in self._cache:
            # one sub-stream per evaluation point, stable across calls
            run_params = replace(params, seed=rng.derive_seed(params.seed, "mu", self.chart.chart_id, key))
            self._cache[key] = sampler.harmonic_measure_inside(
                self.domain, self.gamma_level, self.chart, x, run_params
            )
        return self._cache[key]


def _cell_probe_points(chart: BoundaryCellization, k_probe: int = 3) -> np.ndarray:
    """Probe points inside each cell used to bound the in-cell spread of h."""
    level = chart.level
    m = chart.m_cells
    if chart.kind == "arc":
        base = np.arange(m)[:, None] * (TWO_PI / m)
        offs = (np.arange(1, k_probe + 1) / (k_probe + 1))[None, :] * (TWO_PI / m)
        ang = base + offs
        return level.disk_radius * np.stack((np.cos(ang), np.sin(ang)), axis=2)
    if chart.kind == "cutdisk":
        total = geometry._cutdisk_curve_length(level)
        base = np.arange(m)[:, None] * (total / m)
        offs = (np.arange(1, k_probe + 1) / (k_probe + 1))[None, :] * (total / m)
        pts = geometry._cutdisk_point_at(level, (base + offs).ravel())
        return pts.reshape(m, k_probe, 2)
    return chart.reps[:, None, :].repeat(k_probe, axis=1)


def build_partition(
    domain: Domain,
    gamma_n: int,
    m_cells: int,
    x0,
    params: sampler.WalkParams,
    h_list: Sequence[HarmonicFunction] = (),
    chart_seed: int = 0,
) -> RepresentingPartition:
    """Cellize the deep boundary and estimate the base-point harmonic measure.

    Cells that received no mass are dropped from all sums (their estimated
    measure is zero); the dropped and aborted mass stays visible through the
    stored distribution rather than being renormalized away.
    """
    level = geometry.exhaustion_level(domain, gamma_n)
    chart = geometry.cellize_boundary(level, m_cells, seed=chart_seed)
    part = RepresentingPartition(
        domain=domain,
        gamma_level=level,
        chart=chart,
        x0=np.asarray(x0, dtype=np.float64),
        mu_x0=None,  # set below through the shared cache
    )
    part.mu_x0 = part.measure_at(part.x0, params)
    probes = _cell_probe_points(chart)
    flat = probes.reshape(-1, probes.shape[-1])
    for h in h_list:
        vals = h.evaluate(flat).reshape(probes.shape[:2])
        spread = vals.max(axis=1) - vals.min(axis=1)
        part.delta_var[h.label] = float(spread[part.kept].max()) if len(part.kept) else 0.0
    return part


def kernel_eval(partition: RepresentingPartition, x, i: int, params: sampler.WalkParams) -> float:
    """Normalized cell kernel mu_x(A_i) / mu_x0(A_i); equals 1 at x0 exactly."""
    if partition.mu_x0.counts[i] <= 0:
        raise ValueError(f"cell {i} carries no base-point mass")
    mu_x = partition.measure_at(x, params)
    return float(mu_x.probs[i] / partition.mu_x0.probs[i])


def reconstruct(partition: RepresentingPartition, h: HarmonicFunction, x, params: sampler.WalkParams) -> float:
    """Approximate h(x) by sum over kept cells of h(y_i) mu_x(A_i)."""
    mu_x = partition.measure_at(x, params)
    kept = partition.kept
    vals = h.evaluate(partition.reps[kept])
    return float((vals * mu_x.probs[kept]).sum())


@dataclass
class WeightVector:
    """Finite representing measure of h: weight h(y_i) mu_x0(A_i) on each kept cell."""

    partition: RepresentingPartition
    h_label: str
    indices: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def weight_vector(partition: RepresentingPartition, h: HarmonicFunction) -> WeightVector:
    kept = partition.kept
    vals = h.evaluate(partition.reps[kept])
    w = vals * partition.mu_x0.probs[kept]
    return WeightVector(partition=partition, h_label=h.label, indices=kept, weights=w)


def _disk_boundary_angle(reps: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(reps[:, 1], reps[:, 0]), TWO_PI)


def _cutdisk_boundary_coordinate(level: ExhaustionLevel, reps: np.ndarray) -> np.ndarray:
    """Chart coordinate on the cut-disk topological boundary, total length 2 pi + 2.

    [0, 2 pi): circle angle; [2 pi, 2 pi + 1): lower slit side, x = s - 2 pi;
    [2 pi + 1, 2 pi + 2): upper slit side, x = 2 pi + 2 - s.  Representatives
    on the outer arc project radially; notch-line and cap representatives
    project to their side of the slit (the cap splits at the origin by sign).
    """
    r = level.shell_radius
    out = np.empty(len(reps))
    x, y = reps[:, 0], reps[:, 1]
    on_arc = np.hypot(x, y) > level.disk_radius - 0.5 * r
    ang = np.mod(np.arctan2(y, x), TWO_PI)
    out[on_arc] = ang[on_arc]
    low = (~on_arc) & (y < 0)
    high = (~on_arc) & (y >= 0)
    out[low] = TWO_PI + np.clip(x[low], 0.0, 1.0)
    out[high] = TWO_PI + 2.0 - np.clip(x[high], 0.0, 1.0) - 1e-12
    return out


def push_to_boundary(
    partition: RepresentingPartition,
    weights: WeightVector,
    bins: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Histogram the weight vector on the topological boundary proxy.

    Supported for the explicit charts only: unit-disk representatives map
    radially to angular bins on the circle; cut-disk representatives map to
    the two-sided boundary curve.  Returns (bin_edges, masses) with
    sum(masses) equal to the total weight exactly.
    """
    domain = partition.domain
    if domain.kind == "disk":
        coord = _disk_boundary_angle(partition.reps[weights.indices])
        total = TWO_PI
    elif domain.kind == "cutdisk":
        coord = _cutdisk_boundary_coordinate(partition.gamma_level, partition.reps[weights.indices])
        total = TWO_PI + 2.0
    else:
        raise ValueError("push_to_boundary supports the disk and cutdisk charts only")
    edges = np.linspace(0.0, total, bins + 1)
    idx = np.minimum((coord / (total / bins)).astype(np.int64), bins - 1)
    masses = np.zeros(bins)
    np.add.at(masses, idx, weights.weights)
    return edges, masses
