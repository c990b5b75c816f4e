"""The desk-scale acceptance suite: one function per criterion, one pass/fail line each.

Every tolerance is pinned here, not computed at run time.  The suite is fully
deterministic for a fixed seed; figures and tables land in the chosen output
directory.  Criteria that fail report their measured values so the verdict is
auditable from the summary alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import equivalence, geometry, oracles, reporting, representing, sampler
from .equivalence import DISTINCT, EQUIVALENT, RadialDisk, SlitSide
from .sampler import WalkParams

SUITE_SEED = 20250808

# disk probe grid: six angles spaced pi/3 (every unequal pair has gap >= pi/8)
GRID_ANGLES = [i * np.pi / 3.0 for i in range(6)]
GRID_T = 1e-3
GRID_SCHEDULE = [2, 4, 8, 16, 32, 64, 128, 256]

RING_AZIMUTHS = [0.0, np.pi / 2.0, np.pi]
RING_OFFSET = 0.05
# keep r_n comfortably above the offset so the points behave like remote
# points of the level; r_4 = 1/16 is only 1.25x the offset and sits in the
# boundary-effect regime, so the ring schedule stops at n = 3
RING_SCHEDULE = [2, 3]

COMB_SLOTS = [2, 4, 6]
COMB_SCHEDULE = [2, 4]

RECON_PROBES = [(0.0, 0.0), (0.3, 0.0), (0.0, 0.4), (-0.25, 0.25), (0.5, -0.1)]


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: dict

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.index}: {self.name}"


def _params(seed, walks, min_accepted=0, budget=20.0, threads=1, keep_hits=False):
    return WalkParams(
        walks=walks,
        seed=seed,
        min_accepted=min_accepted,
        budget_multiplier=budget,
        threads=threads,
        keep_hit_points=keep_hits,
    )


# ---------------------------------------------------------------------------
# 1. Oracle calibration


def crit_oracle_calibration(seed: int, threads: int = 1) -> CriterionResult:
    domain = geometry.make_domain("disk")
    level = geometry.exhaustion_level(domain, 2)
    chart = geometry.cellize_boundary(level, 64)
    params = _params(seed, walks=100_000, min_accepted=100_000, threads=threads)
    dist = sampler.sample_conditioned_exit(domain, level, chart, np.array([0.75, 0.0]), params)
    oracle = oracles.AnnulusExit(0.5, 1.0).cell_probabilities(np.array([0.75, 0.0]), chart.cell_edges())
    tv = float(np.abs(dist.probs - oracle).sum())
    return CriterionResult(
        index=1,
        name="oracle calibration: sampled exit vs annulus series, TV < 0.05",
        passed=tv < 0.05 and dist.accepted >= 100_000,
        details={"tv": tv, "accepted": dist.accepted, "aborted": dist.aborted,
                 "acceptance_rate": dist.acceptance_rate},
    )


# ---------------------------------------------------------------------------
# 2. Interior uniformity and mirror symmetry


def _mirror_sigma(p_i, p_j, n):
    var = (p_i * (1 - p_i) + p_j * (1 - p_j) + 2 * p_i * p_j) / n
    return float(np.sqrt(max(var, 1e-300)))


def crit_interior_uniformity(seed: int, threads: int = 1) -> CriterionResult:
    domain = geometry.make_domain("disk")
    gamma = geometry.exhaustion_level(domain, 8)
    chart = geometry.cellize_boundary(gamma, 64)
    params = _params(seed, walks=100_000, threads=threads)
    dist = sampler.harmonic_measure_inside(domain, gamma, chart, np.array([0.0, 0.0]), params)
    tv_uniform = float(np.abs(dist.probs - 1.0 / 64).sum())
    m = 64
    worst = 0.0
    for i in range(m // 2):
        j = m - 1 - i
        sigma = _mirror_sigma(dist.probs[i], dist.probs[j], dist.accepted)
        worst = max(worst, abs(dist.probs[i] - dist.probs[j]) / sigma)
    return CriterionResult(
        index=2,
        name="interior uniformity from the center and mirror symmetry",
        passed=tv_uniform < 0.05 and worst <= 3.0,
        details={"tv_uniform": tv_uniform, "worst_mirror_z": worst,
                 "accepted": dist.accepted, "aborted": dist.aborted},
    )


# ---------------------------------------------------------------------------
# 3. Unit-disk equivalence grid


def _grid_points(t):
    pts = {}
    for theta in GRID_ANGLES:
        for tt in (t, t / 2.0):
            pts[f"a={theta:.6g}@t={tt:.6g}"] = RadialDisk(theta).point(tt)
    return pts


def _grid_pairs(t):
    eq, ne = [], []
    for theta in GRID_ANGLES:
        eq.append((f"a={theta:.6g}@t={t:.6g}", f"a={theta:.6g}@t={t / 2.0:.6g}"))
    for i, ta in enumerate(GRID_ANGLES):
        for tb in GRID_ANGLES[i + 1:]:
            ne.append((f"a={ta:.6g}@t={t:.6g}", f"a={tb:.6g}@t={t:.6g}"))
    return eq, ne


def _run_grid(domain, t, params):
    eq, ne = _grid_pairs(t)
    outcome = equivalence.scan_points(domain, _grid_points(t), eq + ne, GRID_SCHEDULE, params, m_cells=64)
    eq_ok = all(outcome.pairs[p].verdict == EQUIVALENT for p in eq)
    ne_ok = all(outcome.pairs[p].verdict == DISTINCT for p in ne)
    verdicts = {f"{a}|{b}": outcome.pairs[(a, b)].verdict for a, b in eq + ne}
    return eq_ok, ne_ok, verdicts, outcome


def crit_disk_grid(seed: int, threads: int = 1) -> CriterionResult:
    domain = geometry.make_domain("disk")
    base = _params(seed, walks=8000, min_accepted=1500, threads=threads)
    eq_ok, ne_ok, verdicts, _ = _run_grid(domain, GRID_T, base)
    eq_ok_half, ne_ok_half, _, _ = _run_grid(domain, GRID_T / 2.0, base)
    big = _params(seed, walks=32000, min_accepted=6000, budget=5.0, threads=threads)
    eq_ok_4x, ne_ok_4x, _, _ = _run_grid(domain, GRID_T, big)
    passed = all([eq_ok, ne_ok, eq_ok_half, ne_ok_half, eq_ok_4x, ne_ok_4x])
    return CriterionResult(
        index=3,
        name="unit-disk grid: Equivalent iff equal angles, stable under t/2 and 4x walks",
        passed=passed,
        details={
            "base": {"equal_ok": eq_ok, "unequal_ok": ne_ok},
            "t_half": {"equal_ok": eq_ok_half, "unequal_ok": ne_ok_half},
            "walks_4x": {"equal_ok": eq_ok_4x, "unequal_ok": ne_ok_4x},
            "verdicts": verdicts,
        },
    )


# ---------------------------------------------------------------------------
# 4. Cut-disk non-equivalence


def _golden_cutdisk() -> dict:
    with resources.files("hmlab.data").joinpath("cutdisk_reference.json").open() as fh:
        return json.load(fh)


def crit_cutdisk(seed: int, threads: int = 1) -> CriterionResult:
    domain = geometry.make_domain("cutdisk")
    params = _params(seed, walks=12_000, min_accepted=2500, threads=threads)
    result = equivalence.probe_pair(
        domain, SlitSide("above", 0.5), GRID_T, SlitSide("below", 0.5), GRID_T,
        [2, 4, 8, 16, 32, 64], params, m_cells=64,
    )
    f8 = next(r.f_hat for r in result.records if r.n == 8)
    golden = _golden_cutdisk()
    golden_f8 = golden["f_hat_by_n"]["8"]
    passed = result.verdict == DISTINCT and f8 >= 1.0 and golden_f8 >= 1.0
    return CriterionResult(
        index=4,
        name="cut-disk slit pair: verdict Distinct with f_hat(8) >= 1.0",
        passed=passed,
        details={
            "verdict": result.verdict,
            "f_hat": {r.n: r.f_hat for r in result.records},
            "f8": f8,
            "golden_f8": golden_f8,
            "golden_budget_multiplier": golden["budget_multiplier"],
        },
    )


# ---------------------------------------------------------------------------
# 5. Tangent spheres ring


def crit_ring(seed: int, threads: int = 1) -> CriterionResult:
    domain = geometry.make_domain("spheres")
    params = _params(seed, walks=30_000, min_accepted=1500, threads=threads)
    ring = equivalence.ring_scan(
        domain, RING_AZIMUTHS, RING_OFFSET, RING_SCHEDULE, params,
        m_cells=64, refine_ratio=0.85,
    )
    cross_ok = all(res.verdict == DISTINCT for res in ring.cross.values())
    trend_details = {}
    trend_ok = True
    for phi in RING_AZIMUTHS:
        s = ring.trend_summary(phi)
        trend_details[f"phi={phi:.4g}"] = s
        trend_ok = trend_ok and s["decreasing"] and s["final_f"] < 0.15
    return CriterionResult(
        index=5,
        name="tangent-spheres ring: cross azimuths Distinct, same-azimuth trend to < 0.15",
        passed=cross_ok and trend_ok,
        details={
            "cross_verdicts": {f"{a:.4g}|{b:.4g}": r.verdict for (a, b), r in ring.cross.items()},
            "trends": trend_details,
        },
    )


# ---------------------------------------------------------------------------
# 6. Comb accumulation


def crit_comb(seed: int, threads: int = 1) -> CriterionResult:
    domain = geometry.make_domain("comb", teeth=50)
    params = _params(seed, walks=40_000, min_accepted=3000, threads=threads, keep_hits=True)
    scan = equivalence.comb_scan(domain, COMB_SLOTS, COMB_SCHEDULE, params, m_cells=64)
    conc4 = scan.concentration[(4, 4)].get("concentration", 0.0)
    conc6 = scan.concentration[(6, 4)].get("concentration", 0.0)
    f46 = scan.pair_f(4, 6, 2)
    f26 = scan.pair_f(2, 6, 2)
    passed = conc4 >= 0.7 and conc6 >= 0.7 and f46 < f26
    return CriterionResult(
        index=6,
        name="comb slots: exit mass near (0,1) >= 0.7 and f(4,6) < f(2,6)",
        passed=passed,
        details={
            "concentration_slot4_n4": conc4,
            "concentration_slot6_n4": conc6,
            "f_slots_4_6_n2": f46,
            "f_slots_2_6_n2": f26,
            "ordering_ok": f46 < f26,
            "table": {f"slot{m},n{n}": v for (m, n), v in scan.concentration.items()},
        },
    )


# ---------------------------------------------------------------------------
# 7-9. Representing measures (one shared partition)


def _representing_setup(seed: int, threads: int):
    domain = geometry.make_domain("disk")
    params = _params(seed, walks=200_000, threads=threads)
    h_one = representing.ConstantOne()
    h_poisson = representing.PoissonUnitDisk(0.0)
    part = representing.build_partition(domain, 8, 256, (0.0, 0.0), params,
                                        h_list=[h_one, h_poisson])
    return domain, params, part, h_one, h_poisson


def crit_reconstruction(setup) -> CriterionResult:
    _, params, part, h_one, h_poisson = setup
    ones = {}
    ok = True
    for x in RECON_PROBES:
        val = representing.reconstruct(part, h_one, x, params)
        ones[str(x)] = val
        ok = ok and abs(val - 1.0) <= 0.02
    target = h_poisson((0.3, 0.0))
    est = representing.reconstruct(part, h_poisson, (0.3, 0.0), params)
    rel = abs(est - target) / target
    ok = ok and rel < 0.05
    return CriterionResult(
        index=7,
        name="reconstruction: h=1 to within 0.02 and Poisson kernel to within 5%",
        passed=ok,
        details={"constant_reconstructions": ones, "poisson_estimate": est,
                 "poisson_target": target, "poisson_rel_err": rel},
    )


def crit_affinity(setup) -> CriterionResult:
    _, params, part, h_one, h_poisson = setup
    combo = representing.AffineCombo([(0.3, h_one), (0.7, h_poisson)])
    w_one = representing.weight_vector(part, h_one)
    w_poisson = representing.weight_vector(part, h_poisson)
    w_combo = representing.weight_vector(part, combo)
    w_err = float(np.abs(w_combo.weights - (0.3 * w_one.weights + 0.7 * w_poisson.weights)).max())
    x = (0.3, 0.0)
    r_err = abs(
        representing.reconstruct(part, combo, x, params)
        - (0.3 * representing.reconstruct(part, h_one, x, params)
           + 0.7 * representing.reconstruct(part, h_poisson, x, params))
    )
    sums = {"one": w_one.total, "poisson": w_poisson.total, "combo": w_combo.total}
    sums_ok = all(0.95 <= v <= 1.05 for v in sums.values())
    return CriterionResult(
        index=8,
        name="affinity of weights and reconstructions exact to 1e-12 under shared caches",
        passed=w_err <= 1e-12 and r_err <= 1e-12 and sums_ok,
        details={"weight_affinity_err": w_err, "reconstruct_affinity_err": r_err,
                 "weight_totals": sums},
    )


def crit_push(setup, seed: int, threads: int = 1) -> CriterionResult:
    domain, params, part, h_one, h_poisson = setup

    # uniform push of h = 1 across 64 angular bins, within 3 sigma per bin
    w_one = representing.weight_vector(part, h_one)
    _, masses = representing.push_to_boundary(part, w_one, 64)
    n_acc = part.mu_x0.accepted
    expected = w_one.total / 64.0
    sigma = np.sqrt(expected * (1 - expected) / n_acc)
    worst_uniform = float(np.abs(masses - expected).max() / sigma)

    # refinement: same interior walks binned at M = 64 / 256 / 1024, pushed
    # mass in the two bins adjacent to angle 0 compared at fixed walk budget
    level = geometry.exhaustion_level(domain, 8)
    run = sampler.harmonic_measure_inside(
        domain, level, geometry.cellize_boundary(level, 64), np.array([0.0, 0.0]),
        _params(rng_seed_for_push(seed), walks=4_000_000, threads=threads, keep_hits=True),
    )
    hits = run.hit_points
    n_hits = len(hits)
    bins = 16
    window = 2.0 * np.pi / bins
    masses_by_m = {}
    for m_cells in (64, 256, 1024):
        chart = geometry.cellize_boundary(level, m_cells)
        idx = chart.assign(hits)
        counts = np.bincount(idx, minlength=m_cells)
        mid = (np.arange(m_cells) + 0.5) * (2.0 * np.pi / m_cells)
        sel = (mid < window) | (mid > 2.0 * np.pi - window)
        vals = h_poisson.evaluate(chart.reps[sel])
        masses_by_m[m_cells] = float((vals * counts[sel]).sum() / n_hits)
    seq = [masses_by_m[64], masses_by_m[256], masses_by_m[1024]]
    increasing = seq[0] < seq[1] < seq[2]
    return CriterionResult(
        index=9,
        name="push to boundary: uniform within 3 sigma; peak mass monotone in M",
        passed=worst_uniform <= 3.0 and increasing,
        details={"worst_uniform_z": worst_uniform,
                 "peak_mass_by_M": masses_by_m,
                 "monotone_increasing": increasing},
    )


def rng_seed_for_push(seed):
    from . import rng
    return rng.derive_seed(seed, "push-refinement")


# ---------------------------------------------------------------------------
# 10. Reproducibility and merge


def crit_reproducibility(seed: int, out_dir: Path) -> CriterionResult:
    from . import cli

    cfg = {
        "command": "exitdist",
        "domain": "disk",
        "z": [0.75, 0.0],
        "n": 2,
        "M": 64,
        "walks": 20_000,
        "seed": seed,
        "figures": False,
    }
    digests = {}
    for tag, threads in (("run1", 1), ("run2", 1), ("t4", 4)):
        run_dir = Path(out_dir) / f"repro_{tag}"
        cli.run_config({**cfg, "threads": threads, "out": str(run_dir)})
        digests[tag] = b"".join(
            (run_dir / name).read_bytes() for name in ("exitdist.csv", "summary.json")
        )
    repro_ok = digests["run1"] == digests["run2"] == digests["t4"]

    domain = geometry.make_domain("disk")
    level = geometry.exhaustion_level(domain, 2)
    chart = geometry.cellize_boundary(level, 64)
    z = np.array([0.75, 0.0])
    params = _params(seed, walks=20_000)
    full = sampler.sample_conditioned_exit(domain, level, chart, z, params)
    half = sampler._run_walks(domain, level, "exterior", chart, z, params.seed, 0, 10_000, params)
    rest = sampler._run_walks(domain, level, "exterior", chart, z, params.seed, 10_000, 10_000, params)
    merged = half.merged(rest)
    merge_ok = bool(np.array_equal(merged.counts, full.counts)
                    and merged.hit_w + int(merged.counts.sum()) + merged.aborted == full.trials)
    return CriterionResult(
        index=10,
        name="byte-identical outputs across runs and thread counts; exact half-batch merge",
        passed=repro_ok and merge_ok,
        details={"outputs_identical": repro_ok, "merge_exact": merge_ok},
    )


# ---------------------------------------------------------------------------
# Suite driver


def run_suite(out_dir, seed: int = SUITE_SEED, threads: int = 1, echo=print):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []

    def record(res: CriterionResult):
        results.append(res)
        echo(res.line())

    record(crit_oracle_calibration(seed, threads))
    record(crit_interior_uniformity(seed, threads))
    record(crit_disk_grid(seed, threads))
    record(crit_cutdisk(seed, threads))
    record(crit_ring(seed, threads))
    record(crit_comb(seed, threads))
    setup = _representing_setup(seed, threads)
    record(crit_reconstruction(setup))
    record(crit_affinity(setup))
    record(crit_push(setup, seed, threads))
    record(crit_reproducibility(seed, out_dir))

    bench = sampler.throughput_benchmark(walks=50_000, seed=seed)
    echo(f"[info] sampler throughput: {bench['walks_per_second']:.0f} walks/s "
         f"on the disk workload (soft target 1e5)")
    # wall-clock figure: kept out of summary.json to preserve byte determinism
    reporting.write_timing(out_dir / "bench_timing.json", bench["seconds"], threads)

    rows = [{"criterion": r.index, "name": r.name, "passed": r.passed} for r in results]
    reporting.write_csv(out_dir / "accept.csv", ["criterion", "name", "passed"], rows,
                        config={"command": "accept", "seed": seed})
    reporting.write_summary(out_dir / "summary.json", {
        "command": "accept",
        "seed": seed,
        "results": [{"criterion": r.index, "name": r.name, "passed": r.passed,
                     "details": r.details} for r in results],
        "passed": sum(r.passed for r in results),
        "total": len(results),
    })
    reporting.render_acceptance(out_dir / "accept.png",
                                [{"name": f"{r.index}", "passed": r.passed} for r in results])
    return results
