"""Walk-on-spheres engine for exit and interior harmonic-measure sampling.

Two absorbing configurations share one loop:

* exterior runs live in W \\ K_n and stop on the outer boundary (d_W <= eps)
  or on the inner set (r_n - d_W <= eps);
* interior runs live inside K_gamma and stop on its boundary
  (d_W - r_gamma <= eps).

The sphere radius is the shell bound min(d_W, r_n - d_W) (resp. d_W - r_gamma),
a valid lower bound on the distance to the walk region's boundary because d_W
is 1-Lipschitz; for the disk family it coincides with the exact chart
distances.  Per-walk randomness is a pure function of (seed, walk_index, step)
so disjoint index ranges merge exactly regardless of threading or batching.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry, rng
from .errors import ConditioningError
from .geometry import BoundaryCellization, Domain, ExhaustionLevel
from .measures import ExitDistribution

_CHUNK = 32768  # walks per work unit; fixed so thread count cannot affect results


@dataclass(frozen=True)
class WalkParams:
    """Sampling controls shared by all engine entry points."""

    walks: int
    seed: int
    epsilon_shell: float = 1e-6
    max_steps: int = 100_000
    min_accepted: int = 0
    budget_multiplier: float = 20.0
    threads: int = 1
    keep_hit_points: bool = True
    n_boot: int = 200

    def __post_init__(self):
        if self.walks <= 0:
            raise ValueError("walks must be positive")
        if self.max_steps < 1000:
            raise ValueError("max_steps must be at least 1000")
        if self.epsilon_shell <= 0:
            raise ValueError("epsilon_shell must be positive")


@dataclass
class ExitSample:
    """Outcome of a single walk: where it was absorbed and how many steps it took."""

    outcome: str  # "hit_k", "hit_w", "aborted"
    cell: int
    point: Optional[np.ndarray]
    steps: int


@dataclass
class _Tally:
    counts: np.ndarray
    hit_w: int = 0
    aborted: int = 0
    attempts: int = 0
    steps_total: int = 0
    hit_points: list = field(default_factory=list)

    def merged(self, other: "_Tally") -> "_Tally":
        return _Tally(
            counts=self.counts + other.counts,
            hit_w=self.hit_w + other.hit_w,
            aborted=self.aborted + other.aborted,
            attempts=self.attempts + other.attempts,
            steps_total=self.steps_total + other.steps_total,
            hit_points=self.hit_points + other.hit_points,
        )


def _check_shell(level: ExhaustionLevel, eps: float):
    if eps >= level.shell_radius / 4.0:
        raise ValueError(
            f"epsilon_shell {eps} too coarse for r_n={level.shell_radius} (need < r_n/4)"
        )


def shell_radius_bound(domain: Domain, level: ExhaustionLevel, side: str, pts: np.ndarray):
    """Safe sphere radii for points of the walk region (vectorized)."""
    d = geometry.distance_to_boundary(domain, pts)
    r = level.shell_radius
    if side == "exterior":
        return np.minimum(d, r - d), d
    return d - r, d


def wos_step(domain: Domain, level: ExhaustionLevel, side: str, p, seed: int, stream: int, step: int):
    """One exact sphere jump from p; the contract-level single-step operation."""
    pts = np.asarray(p, dtype=np.float64)[None, :]
    rho, _ = shell_radius_bound(domain, level, side, pts)
    if rho[0] <= 0:
        raise ValueError("point lies outside the walk region")
    sid = np.array([stream], dtype=np.uint64)
    direction = rng.directions_2d(seed, sid, step) if domain.dim == 2 else rng.directions_3d(seed, sid, step)
    return (pts + rho[:, None] * direction)[0]


def _run_range(
    domain: Domain,
    level: ExhaustionLevel,
    side: str,
    chart: BoundaryCellization,
    z: np.ndarray,
    run_seed: int,
    start: int,
    count: int,
    eps: float,
    max_steps: int,
    keep_hits: bool,
) -> _Tally:
    """Advance walk indices [start, start+count) to absorption. Pure worker."""
    r = level.shell_radius
    p = np.tile(z, (count, 1))
    stream = np.arange(start, start + count, dtype=np.uint64)
    tally = _Tally(counts=np.zeros(chart.m_cells, dtype=np.int64), attempts=count)
    dirs = rng.directions_2d if domain.dim == 2 else rng.directions_3d

    hit_pts = []
    step = 0
    while p.shape[0]:
        if step >= max_steps:
            tally.aborted += p.shape[0]
            break
        d = geometry.distance_to_boundary(domain, p)
        if side == "exterior":
            absorb_w = d <= eps
            absorb_k = (r - d) <= eps
            done = absorb_w | absorb_k
            absorb_k &= ~absorb_w  # outer boundary wins if both shells overlap numerically
        else:
            absorb_k = (d - r) <= eps
            absorb_w = np.zeros(p.shape[0], dtype=bool)
            done = absorb_k
        if done.any():
            k_pts = p[absorb_k]
            if len(k_pts):
                cells = chart.assign(k_pts)
                tally.counts += np.bincount(cells, minlength=chart.m_cells)
                if keep_hits:
                    hit_pts.append(k_pts.copy())
            tally.hit_w += int(absorb_w.sum())
            keep = ~done
            p = p[keep]
            stream = stream[keep]
            d = d[keep]
            if not p.shape[0]:
                break
        rho = np.minimum(d, r - d) if side == "exterior" else d - r
        p = p + rho[:, None] * dirs(run_seed, stream, step)
        tally.steps_total += p.shape[0]
        step += 1
    tally.hit_points = hit_pts
    return tally


def _run_walks(
    domain: Domain,
    level: ExhaustionLevel,
    side: str,
    chart: BoundaryCellization,
    z: np.ndarray,
    run_seed: int,
    start: int,
    count: int,
    params: WalkParams,
) -> _Tally:
    """Split [start, start+count) into fixed chunks and reduce in index order."""
    spans = [(s, min(s + _CHUNK, start + count)) for s in range(start, start + count, _CHUNK)]
    args = [
        (domain, level, side, chart, z, run_seed, a, b - a,
         params.epsilon_shell, params.max_steps, params.keep_hit_points)
        for a, b in spans
    ]
    if params.threads > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            tallies = list(pool.map(lambda t: _run_range(*t), args))
    else:
        tallies = [_run_range(*a) for a in args]
    out = tallies[0]
    for t in tallies[1:]:
        out = out.merged(t)
    return out


def _validate_exterior_start(domain, level, z, eps):
    z = np.asarray(z, dtype=np.float64)
    if not geometry.inside_domain(domain, z[None, :])[0]:
        raise ValueError("start point must lie inside the domain")
    d = geometry.distance_to_boundary(domain, z[None, :])[0]
    if d <= eps or (level.shell_radius - d) <= eps:
        raise ValueError(
            f"start point must lie strictly between the boundaries "
            f"(d_W={d:.3e}, r_n={level.shell_radius:.3e})"
        )
    return z


def run_exit_walk(
    domain: Domain,
    level: ExhaustionLevel,
    chart: BoundaryCellization,
    z,
    params: WalkParams,
    walk_index: int,
) -> ExitSample:
    """Trace one exit walk; bit-identical to the same index inside any batch."""
    _check_shell(level, params.epsilon_shell)
    z = _validate_exterior_start(domain, level, z, params.epsilon_shell)
    run_seed = params.seed
    r = level.shell_radius
    p = z.copy()
    stream = np.array([walk_index], dtype=np.uint64)
    for step in range(params.max_steps):
        d = geometry.distance_to_boundary(domain, p[None, :])[0]
        if d <= params.epsilon_shell:
            return ExitSample(outcome="hit_w", cell=-1, point=p, steps=step)
        if (r - d) <= params.epsilon_shell:
            cell = int(chart.assign(p[None, :])[0])
            return ExitSample(outcome="hit_k", cell=cell, point=p, steps=step)
        rho = min(d, r - d)
        dirs = rng.directions_2d if domain.dim == 2 else rng.directions_3d
        p = p + rho * dirs(run_seed, stream, step)[0]
    return ExitSample(outcome="aborted", cell=-1, point=None, steps=params.max_steps)


def _finish(tally: _Tally, chart, keep_hits: bool, low: bool) -> ExitDistribution:
    pts = np.concatenate(tally.hit_points) if keep_hits and tally.hit_points else None
    if keep_hits and pts is None:
        pts = np.empty((0, chart.level.domain.dim))
    return ExitDistribution(
        counts=tally.counts,
        accepted=int(tally.counts.sum()),
        trials=tally.attempts,
        aborted=tally.aborted,
        chart_id=chart.chart_id,
        low_acceptance=low,
        hit_points=pts,
    )


def sample_conditioned_exit(
    domain: Domain,
    level: ExhaustionLevel,
    chart: BoundaryCellization,
    z,
    params: WalkParams,
) -> ExitDistribution:
    """Conditioned exit histogram on the cells of the level boundary.

    Runs ``walks`` trials, then keeps adding batches of the same size while
    the accepted count is short of ``min_accepted`` and the attempt budget
    (``budget_multiplier * walks``) allows.  Aborted walks are excluded from
    numerator and denominator but reported.
    """
    _check_shell(level, params.epsilon_shell)
    z = _validate_exterior_start(domain, level, z, params.epsilon_shell)
    budget = int(params.budget_multiplier * params.walks)
    tally = _run_walks(domain, level, "exterior", chart, z, params.seed, 0, params.walks, params)
    while int(tally.counts.sum()) < params.min_accepted and tally.attempts + params.walks <= budget:
        extra = _run_walks(
            domain, level, "exterior", chart, z, params.seed, tally.attempts, params.walks, params
        )
        tally = tally.merged(extra)
    accepted = int(tally.counts.sum())
    if accepted == 0:
        raise ConditioningError(
            f"no walk reached the inner boundary from {z.tolist()} within {tally.attempts} trials"
        )
    low = accepted < params.min_accepted
    return _finish(tally, chart, params.keep_hit_points, low)


def harmonic_measure_inside(
    domain: Domain,
    gamma_level: ExhaustionLevel,
    chart: BoundaryCellization,
    x,
    params: WalkParams,
) -> ExitDistribution:
    """Per-cell harmonic measure on C = boundary of K_gamma seen from x inside."""
    _check_shell(gamma_level, params.epsilon_shell)
    x = np.asarray(x, dtype=np.float64)
    d = geometry.distance_to_boundary(domain, x[None, :])[0]
    if d - gamma_level.shell_radius <= params.epsilon_shell:
        raise ValueError("evaluation point must lie strictly inside K_gamma")
    if domain.kind in ("spheres", "comb") and not geometry.membership_in_k(gamma_level, x[None, :])[0]:
        raise ValueError("evaluation point is not in the anchor component of K_gamma")
    tally = _run_walks(domain, gamma_level, "interior", chart, x, params.seed, 0, params.walks, params)
    accepted = int(tally.counts.sum())
    if accepted == 0:
        raise ConditioningError("all interior walks aborted")
    return _finish(tally, chart, params.keep_hit_points, False)


def throughput_benchmark(walks: int = 50_000, seed: int = 7) -> dict:
    """Walks per second on the standard disk workload (soft benchmark)."""
    import time

    domain = geometry.make_domain("disk")
    level = geometry.exhaustion_level(domain, 2)
    chart = geometry.cellize_boundary(level, 64)
    params = WalkParams(walks=walks, seed=seed, keep_hit_points=False)
    t0 = time.perf_counter()
    dist = sample_conditioned_exit(domain, level, chart, np.array([0.75, 0.0]), params)
    dt = time.perf_counter() - t0
    return {
        "walks": walks,
        "seconds": dt,
        "walks_per_second": walks / dt,
        "acceptance": dist.acceptance_rate,
    }
