"""Boundary-point equivalence probes: does TV of exit measures decay along the exhaustion?

Two near-boundary points are compared through the sequence
n -> TV(conditioned exit measure of x on dK_n, same for y).  The sequence
limit is not computable from finitely many n, so a conservative classifier
labels each probe Equivalent / Distinct / Inconclusive from the estimates,
their bootstrap CIs and a matched same-point noise floor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry, measures, rng, sampler
from .geometry import Domain, ExhaustionLevel

EQUIVALENT = "Equivalent"
DISTINCT = "Distinct"
INCONCLUSIVE = "Inconclusive"

# Classification thresholds, calibrated against the disk oracle where truth
# is known: Equivalent needs the tail of the sequence to sit at the noise
# floor and not grow; Distinct needs the tail bounded away from zero.
EQUIV_ABS_CEILING = 0.1
DISTINCT_FLOOR = 0.25


# ---------------------------------------------------------------------------
# Approach paths


@dataclass(frozen=True)
class RadialDisk:
    """p(t) = (1 - t) e^{i angle} in the unit disk."""

    angle: float

    domain_kind = "disk"

    def point(self, t: float) -> np.ndarray:
        return (1.0 - t) * np.array([np.cos(self.angle), np.sin(self.angle)])

    @property
    def label(self) -> str:
        return f"radial:angle={self.angle:.6g}"


@dataclass(frozen=True)
class SlitSide:
    """p(t) = (a, +-t): same planar location, opposite sides of the removed slit."""

    side: str  # "above" | "below"
    a: float

    domain_kind = "cutdisk"

    def __post_init__(self):
        if self.side not in ("above", "below"):
            raise ValueError("side must be 'above' or 'below'")
        if not 0.0 < self.a < 1.0:
            raise ValueError("slit position must lie in (0, 1)")

    def point(self, t: float) -> np.ndarray:
        sign = 1.0 if self.side == "above" else -1.0
        return np.array([self.a, sign * t])

    @property
    def label(self) -> str:
        return f"slit:{self.side}:a={self.a:.6g}"


@dataclass(frozen=True)
class TangencyAzimuth:
    """Mid-gap point at a given azimuth approaching the sphere tangency point.

    The parameter t is the boundary clearance: p(t) sits midway between the
    two spheres at the horizontal radius where the half-gap equals t, so
    distance_to_boundary(p(t)) ~ t and p(t) -> (0, 0, 0) as t -> 0.  This
    matches the other path kinds, whose parameter is also the distance to
    the boundary feature being approached.
    """

    azimuth: float

    domain_kind = "spheres"

    def point(self, t: float) -> np.ndarray:
        domain = geometry.make_domain("spheres")

        def mid(s: float) -> np.ndarray:
            z_s = 2.0 - np.sqrt(4.0 - s * s)
            z_t = 1.0 - np.sqrt(1.0 - s * s)
            zc = 0.5 * (z_s + z_t)
            return np.array([s * np.cos(self.azimuth), s * np.sin(self.azimuth), zc])

        lo, hi = 1e-6, 0.999
        if geometry.distance_to_boundary(domain, mid(hi)) <= t:
            raise ValueError(f"offset {t} too large for the tangency path")
        for _ in range(80):
            s = 0.5 * (lo + hi)
            if geometry.distance_to_boundary(domain, mid(s)) < t:
                lo = s
            else:
                hi = s
        return mid(0.5 * (lo + hi))

    @property
    def label(self) -> str:
        return f"azimuth:phi={self.azimuth:.6g}"


@dataclass(frozen=True)
class SlotMouth:
    """Point at the center of comb slot m (between teeth m and m+1), t below the mouth."""

    slot: int

    domain_kind = "comb"

    def __post_init__(self):
        if self.slot < 2:
            raise ValueError("slot index must be >= 2")

    def point(self, t: float) -> np.ndarray:
        m = self.slot
        x_c = 0.5 * (1.0 / m + 1.0 / (m + 1))
        return np.array([x_c, 1.0 - 1.0 / m - t])

    @property
    def label(self) -> str:
        return f"slot:m={self.slot}"


def validate_probe_point(domain: Domain, level: ExhaustionLevel, p: np.ndarray, eps: float) -> bool:
    """True when p lies strictly in the walk region W \\ K_n."""
    if not geometry.inside_domain(domain, p[None, :])[0]:
        return False
    d = geometry.distance_to_boundary(domain, p[None, :])[0]
    return (d > eps) and (level.shell_radius - d > eps)


# ---------------------------------------------------------------------------
# Classification


@dataclass
class ProbeRecord:
    n: int
    f_hat: float
    ci: float
    noise_floor: float
    diagnostics: dict


@dataclass
class ProbeResult:
    domain: str
    label_a: str
    label_b: str
    t_a: float
    t_b: float
    point_a: Optional[np.ndarray]
    point_b: Optional[np.ndarray]
    m_cells: int
    seed: int
    records: List[ProbeRecord]
    verdict: str

    def as_rows(self) -> List[dict]:
        """Rows in the pinned probe CSV schema."""
        fmt = lambda p: ",".join(repr(float(c)) for c in p) if p is not None else ""
        rows = []
        for rec in self.records:
            rows.append({
                "domain": self.domain,
                "n": rec.n,
                "M": self.m_cells,
                "x": fmt(self.point_a),
                "y": fmt(self.point_b),
                "f_hat": rec.f_hat,
                "ci": rec.ci,
                "acc_x": rec.diagnostics.get("acc_x"),
                "acc_y": rec.diagnostics.get("acc_y"),
                "abort_x": rec.diagnostics.get("abort_x"),
                "abort_y": rec.diagnostics.get("abort_y"),
                "seed": self.seed,
            })
        return rows

    def as_summary(self) -> dict:
        return {
            "domain": self.domain,
            "pair": [self.label_a, self.label_b],
            "t": [self.t_a, self.t_b],
            "M": self.m_cells,
            "seed": self.seed,
            "verdict": self.verdict,
            "records": [
                {
                    "n": r.n,
                    "f_hat": r.f_hat,
                    "ci": r.ci,
                    "noise_floor": r.noise_floor,
                    "diagnostics": r.diagnostics,
                }
                for r in self.records
            ],
        }


def classify(records: Sequence[ProbeRecord]) -> str:
    """Conservative verdict from the stored estimates alone.

    Rules over the last half of the n-schedule:

    * Equivalent: every f_hat - 2 ci is below max(2 * noise_floor, 0.1) and
      the sequence does not increase beyond combined CIs;
    * Distinct: every f_hat - 2 ci is at least 0.25;
    * otherwise Inconclusive.
    """
    if not records:
        raise ValueError("empty probe schedule")
    tail = list(records)[len(records) // 2:]
    equiv = all(r.f_hat - 2.0 * r.ci <= max(2.0 * r.noise_floor, EQUIV_ABS_CEILING) for r in tail)
    for prev, nxt in zip(tail, tail[1:]):
        if nxt.f_hat > prev.f_hat + 2.0 * (prev.ci + nxt.ci):
            equiv = False
    distinct = all(r.f_hat - 2.0 * r.ci >= DISTINCT_FLOOR for r in tail)
    if equiv and not distinct:
        return EQUIVALENT
    if distinct and not equiv:
        return DISTINCT
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# Sampling plumbing shared by probes and scans


def _point_distribution(domain, chart, p, params, tag):
    run_params = replace(params, seed=rng.derive_seed(params.seed, "cond", tag, chart.chart_id))
    return sampler.sample_conditioned_exit(domain, chart.level, chart, p, run_params)


def _floor_estimate(domain, chart, p, params, tag, main_dist):
    """Same-point probe: TV between the main run and an independent rerun."""
    rerun = _point_distribution(domain, chart, p, params, tag + ":floor")
    return measures.total_variation(main_dist, rerun)


def _build_chart(domain, n, m_cells, seed):
    level = geometry.exhaustion_level(domain, n)
    return geometry.cellize_boundary(level, m_cells, seed=seed)


def probe_pair(
    domain: Domain,
    path_a,
    t_a: float,
    path_b,
    t_b: float,
    n_schedule: Sequence[int],
    params: sampler.WalkParams,
    m_cells: int = 64,
) -> ProbeResult:
    """Estimate the TV sequence for one pair of approach points and classify it."""
    if not n_schedule:
        raise ValueError("empty n schedule")
    p_a = path_a.point(t_a)
    p_b = path_b.point(t_b)
    records = []
    for n in n_schedule:
        chart = _build_chart(domain, n, m_cells, params.seed)
        for label, p in ((path_a.label, p_a), (path_b.label, p_b)):
            if not validate_probe_point(domain, chart.level, p, params.epsilon_shell):
                raise ValueError(f"point {p.tolist()} ({label}) is not strictly in W \\ K_{n}")
        dist_a = _point_distribution(domain, chart, p_a, params, f"a:{path_a.label}:t={t_a}")
        dist_b = _point_distribution(domain, chart, p_b, params, f"b:{path_b.label}:t={t_b}")
        fn = measures.fn_from_distributions(n, dist_a, dist_b, seed=params.seed, n_boot=params.n_boot)
        low_side = (f"a:{path_a.label}:t={t_a}", p_a, dist_a)
        if dist_b.accepted < dist_a.accepted:
            low_side = (f"b:{path_b.label}:t={t_b}", p_b, dist_b)
        floor = _floor_estimate(domain, chart, low_side[1], params, low_side[0], low_side[2])
        records.append(ProbeRecord(n=n, f_hat=fn.f_hat, ci=fn.ci_half_width,
                                   noise_floor=floor, diagnostics=fn.diagnostics))
    return ProbeResult(
        domain=domain.key,
        label_a=path_a.label,
        label_b=path_b.label,
        t_a=t_a,
        t_b=t_b,
        point_a=p_a,
        point_b=p_b,
        m_cells=m_cells,
        seed=params.seed,
        records=records,
        verdict=classify(records),
    )


@dataclass
class ScanOutcome:
    """Pairwise probe results plus the per-level point samples they were scored from."""

    pairs: Dict[Tuple[str, str], ProbeResult]
    levels: Dict[int, dict]


def scan_points(
    domain: Domain,
    points: Dict[str, np.ndarray],
    pairs: Sequence[Tuple[str, str]],
    n_schedule: Sequence[int],
    params: sampler.WalkParams,
    m_cells: int = 64,
    require_valid: bool = True,
) -> ScanOutcome:
    """Pairwise probes over a labeled point set, sampling each point once per level.

    Each point gets a main run and a same-point rerun per level; every pair is
    then scored from the shared histograms with floor = max of the two
    same-point TVs.  Pairs whose points are invalid at some n are skipped when
    ``require_valid`` is false, otherwise raise.
    """
    per_level: Dict[int, dict] = {}
    for n in n_schedule:
        chart = _build_chart(domain, n, m_cells, params.seed)
        entry = {"chart": chart, "dist": {}, "floor": {}, "valid": {}}
        for label, p in points.items():
            ok = validate_probe_point(domain, chart.level, p, params.epsilon_shell)
            entry["valid"][label] = ok
            if not ok:
                if require_valid:
                    raise ValueError(f"point {label} is not strictly in W \\ K_{n}")
                continue
            main = _point_distribution(domain, chart, p, params, label)
            entry["dist"][label] = main
            entry["floor"][label] = _floor_estimate(domain, chart, p, params, label, main)
        per_level[n] = entry

    out: Dict[Tuple[str, str], ProbeResult] = {}
    for la, lb in pairs:
        records = []
        for n in n_schedule:
            entry = per_level[n]
            if la not in entry["dist"] or lb not in entry["dist"]:
                continue
            fn = measures.fn_from_distributions(
                n, entry["dist"][la], entry["dist"][lb], seed=params.seed, n_boot=params.n_boot
            )
            floor = max(entry["floor"][la], entry["floor"][lb])
            records.append(ProbeRecord(n=n, f_hat=fn.f_hat, ci=fn.ci_half_width,
                                       noise_floor=floor, diagnostics=fn.diagnostics))
        if records:
            out[(la, lb)] = ProbeResult(
                domain=domain.key, label_a=la, label_b=lb, t_a=float("nan"), t_b=float("nan"),
                point_a=points.get(la), point_b=points.get(lb),
                m_cells=m_cells, seed=params.seed, records=records, verdict=classify(records),
            )
    return ScanOutcome(pairs=out, levels=per_level)


# ---------------------------------------------------------------------------
# Domain-specific scans


@dataclass
class RingScanResult:
    azimuths: List[float]
    offset: float
    refined_offset: float
    cross: Dict[Tuple[float, float], ProbeResult]
    trends: Dict[float, ProbeResult]

    def cross_verdicts(self) -> Dict[Tuple[float, float], str]:
        return {k: v.verdict for k, v in self.cross.items()}

    def trend_summary(self, azimuth: float) -> dict:
        res = self.trends[azimuth]
        f = [r.f_hat for r in res.records]
        return {
            "azimuth": azimuth,
            "f_hats": f,
            "final_f": f[-1],
            "decreasing": all(b <= a for a, b in zip(f, f[1:])),
        }


def ring_scan(
    domain: Domain,
    azimuth_list: Sequence[float],
    offset: float,
    n_schedule: Sequence[int],
    params: sampler.WalkParams,
    m_cells: int = 64,
    refine_ratio: float = 0.6,
) -> RingScanResult:
    """Pairwise probes among tangency-approach points on the sphere gap.

    Cross-azimuth pairs compare different approach directions at the same
    offset; per-azimuth trend pairs compare the offset against a refined one
    (refine_ratio * offset) along the same azimuth.
    """
    if domain.kind != "spheres":
        raise ValueError("ring_scan runs on the spheres domain")
    refined = offset * refine_ratio
    points = {}
    for phi in azimuth_list:
        path = TangencyAzimuth(azimuth=phi)
        points[f"phi={phi:.6g}@t={offset:.6g}"] = path.point(offset)
        points[f"phi={phi:.6g}@t={refined:.6g}"] = path.point(refined)
    pairs = []
    for i, pa in enumerate(azimuth_list):
        for pb in list(azimuth_list)[i + 1:]:
            pairs.append((f"phi={pa:.6g}@t={offset:.6g}", f"phi={pb:.6g}@t={offset:.6g}"))
    for phi in azimuth_list:
        pairs.append((f"phi={phi:.6g}@t={offset:.6g}", f"phi={phi:.6g}@t={refined:.6g}"))
    outcome = scan_points(domain, points, pairs, n_schedule, params, m_cells=m_cells)
    by_label = {f"phi={phi:.6g}": phi for phi in azimuth_list}
    cross = {}
    trends = {}
    for (la, lb), res in outcome.pairs.items():
        phi_a = by_label[la.split("@")[0]]
        phi_b = by_label[lb.split("@")[0]]
        if phi_a == phi_b:
            trends[phi_a] = res
        else:
            cross[(phi_a, phi_b)] = res
    return RingScanResult(
        azimuths=list(azimuth_list), offset=offset, refined_offset=refined,
        cross=cross, trends=trends,
    )


@dataclass
class CombScanResult:
    slots: List[int]
    mouth_depth: float
    concentration: Dict[Tuple[int, int], dict]  # (slot, n) -> stats
    pairs: Dict[Tuple[int, int, int], ProbeRecord]  # (slot_a, slot_b, n) -> record

    def pair_f(self, slot_a: int, slot_b: int, n: int) -> float:
        return self.pairs[(slot_a, slot_b, n)].f_hat


CORNER = np.array([0.0, 1.0])
CONCENTRATION_RADIUS = 0.25


def comb_scan(
    domain: Domain,
    slot_indices: Sequence[int],
    n_schedule: Sequence[int],
    params: sampler.WalkParams,
    m_cells: int = 64,
    mouth_depth: float = 1e-3,
) -> CombScanResult:
    """Probe slot-mouth points of the comb and measure upper-left exit concentration.

    The concentration statistic is the fraction of conditioned exit mass
    within Euclidean distance 0.25 of the corner point (0, 1).  Slots whose
    mouth point is inside K_n at some n are reported as invalid there rather
    than failing the whole scan.
    """
    if domain.kind != "comb":
        raise ValueError("comb_scan runs on the comb domain")
    params = replace(params, keep_hit_points=True)  # concentration needs landing points
    points = {}
    for m in slot_indices:
        points[f"slot{m}"] = SlotMouth(slot=m).point(mouth_depth)
    pairs = [(f"slot{a}", f"slot{b}")
             for i, a in enumerate(slot_indices) for b in list(slot_indices)[i + 1:]]
    outcome = scan_points(domain, points, pairs, n_schedule, params,
                          m_cells=m_cells, require_valid=False)

    concentration: Dict[Tuple[int, int], dict] = {}
    for n in n_schedule:
        entry = outcome.levels[n]
        for m in slot_indices:
            label = f"slot{m}"
            stats = {"slot": m, "n": n, "valid": entry["valid"][label]}
            if stats["valid"]:
                dist = entry["dist"][label]
                near = np.linalg.norm(dist.hit_points - CORNER, axis=1) <= CONCENTRATION_RADIUS
                stats.update({
                    "accepted": dist.accepted,
                    "acceptance_rate": dist.acceptance_rate,
                    "concentration": float(near.mean()) if dist.accepted else 0.0,
                    "low_acceptance": dist.low_acceptance,
                })
            concentration[(m, n)] = stats

    pair_records: Dict[Tuple[int, int, int], ProbeRecord] = {}
    for (la, lb), res in outcome.pairs.items():
        sa = int(la.replace("slot", ""))
        sb = int(lb.replace("slot", ""))
        for rec in res.records:
            pair_records[(sa, sb, rec.n)] = rec
    return CombScanResult(
        slots=list(slot_indices), mouth_depth=mouth_depth,
        concentration=concentration, pairs=pair_records,
    )
