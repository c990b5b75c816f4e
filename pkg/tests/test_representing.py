import numpy as np
import pytest

from hmlab import geometry, oracles, sampler
from hmlab.representing import (
    AffineCombo,
    ConstantOne,
    PoissonUnitDisk,
    build_partition,
    kernel_eval,
    push_to_boundary,
    reconstruct,
    weight_vector,
)

DISK = geometry.make_domain("disk")


@pytest.fixture(scope="module")
def disk_partition():
    params = sampler.WalkParams(walks=60_000, seed=21, keep_hit_points=False)
    h_one = ConstantOne()
    h_p = PoissonUnitDisk(0.0)
    part = build_partition(DISK, 8, 128, (0.0, 0.0), params, h_list=[h_one, h_p])
    return part, params, h_one, h_p


def test_harmonic_functions_normalized_at_base():
    for h in (ConstantOne(), PoissonUnitDisk(0.0), PoissonUnitDisk(2.1),
              AffineCombo([(0.5, ConstantOne()), (0.5, PoissonUnitDisk(1.0))])):
        assert h((0.0, 0.0)) == pytest.approx(1.0, abs=1e-12)
    h = PoissonUnitDisk(0.0, x0=(0.3, 0.1))
    assert h((0.3, 0.1)) == pytest.approx(1.0, abs=1e-12)


def test_harmonic_positive_inside():
    gen = np.random.default_rng(0)
    ang = gen.uniform(0, 2 * np.pi, 200)
    rad = gen.uniform(0, 0.99, 200)
    pts = np.stack((rad * np.cos(ang), rad * np.sin(ang)), axis=1)
    for h in (PoissonUnitDisk(0.7), AffineCombo([(0.2, ConstantOne()), (0.8, PoissonUnitDisk(0.0))])):
        assert (h.evaluate(pts) > 0).all()


def test_affine_combo_validation():
    with pytest.raises(ValueError):
        AffineCombo([(0.5, ConstantOne()), (0.6, PoissonUnitDisk(0.0))])
    with pytest.raises(ValueError):
        AffineCombo([(-0.2, ConstantOne()), (1.2, PoissonUnitDisk(0.0))])


def test_partition_symmetric_masses(disk_partition):
    part, params, *_ = disk_partition
    assert len(part.kept) == 128  # every cell gets mass from the center
    assert part.mu_x0.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert part.abort_fraction == 0.0
    # uniform within noise
    assert np.abs(part.mu_x0.probs - 1.0 / 128).sum() < 0.06


def test_kernel_normalized_at_x0(disk_partition):
    part, params, *_ = disk_partition
    for i in (0, 13, 77):
        assert kernel_eval(part, (0.0, 0.0), i, params) == pytest.approx(1.0, abs=1e-15)


def test_kernel_monotone_toward_near_side(disk_partition):
    part, params, *_ = disk_partition
    near_cell = int(part.chart.assign(np.array([[0.875, 0.0]]))[0])
    far_cell = int(part.chart.assign(np.array([[-0.875, 0.0]]))[0])
    assert kernel_eval(part, (0.5, 0.0), near_cell, params) > 1.0
    assert kernel_eval(part, (0.5, 0.0), far_cell, params) < 1.0


def test_kernel_matches_arc_oracle(disk_partition):
    part, params, *_ = disk_partition
    x = np.array([0.5, 0.0])
    edges = part.chart.cell_edges()
    mu_x = part.measure_at(x, params)
    for i in (0, 20, 64, 100):
        target = oracles.disk_arc_harmonic_measure(0.875, x, edges[i], edges[i + 1])
        base = 1.0 / 128
        k_target = target / base
        k_est = kernel_eval(part, (0.5, 0.0), i, params)
        sigma = np.sqrt(target * (1 - target) / mu_x.accepted) / base
        sigma += k_target * np.sqrt(base * (1 - base) / part.mu_x0.accepted) / base
        assert abs(k_est - k_target) <= 4.0 * sigma


def test_kernel_mean_value_property(disk_partition):
    # kernel at the center of a small circle equals the average over the circle
    part, params, *_ = disk_partition
    center = np.array([0.3, 0.2])
    radius = 0.15
    cell = 5
    k_center = kernel_eval(part, tuple(center), cell, params)
    ring_vals = []
    for j in range(8):
        ang = 2 * np.pi * j / 8
        p = center + radius * np.array([np.cos(ang), np.sin(ang)])
        ring_vals.append(kernel_eval(part, tuple(p), cell, params))
    avg = float(np.mean(ring_vals))
    p0 = part.mu_x0.probs[cell]
    n = part.mu_x0.accepted
    sigma_rel = np.sqrt((1 - p0) / (p0 * n))
    combined = k_center * sigma_rel * np.sqrt(1.0 + 1.0 / 8.0) * 3.0
    assert abs(k_center - avg) <= max(combined, 0.15)


def test_reconstruct_constant_is_total_mass(disk_partition):
    part, params, h_one, _ = disk_partition
    val = reconstruct(part, h_one, (0.3, 0.0), params)
    assert val == pytest.approx(1.0 - part.abort_fraction, abs=1e-12)


def test_reconstruct_poisson(disk_partition):
    part, params, _, h_p = disk_partition
    target = h_p((0.3, 0.0))
    assert target == pytest.approx(0.91 / 0.49)
    est = reconstruct(part, h_p, (0.3, 0.0), params)
    assert abs(est - target) / target < 0.05


def test_affinity_exact_under_shared_caches(disk_partition):
    part, params, h_one, h_p = disk_partition
    combo = AffineCombo([(0.3, h_one), (0.7, h_p)])
    r_combo = reconstruct(part, combo, (0.2, 0.1), params)
    r_parts = 0.3 * reconstruct(part, h_one, (0.2, 0.1), params) + 0.7 * reconstruct(part, h_p, (0.2, 0.1), params)
    assert abs(r_combo - r_parts) <= 1e-12
    w_combo = weight_vector(part, combo)
    w_one = weight_vector(part, h_one)
    w_p = weight_vector(part, h_p)
    assert np.abs(w_combo.weights - (0.3 * w_one.weights + 0.7 * w_p.weights)).max() <= 1e-12


def test_weight_vector_properties(disk_partition):
    part, params, h_one, h_p = disk_partition
    w_one = weight_vector(part, h_one)
    assert np.array_equal(w_one.weights, part.mu_x0.probs[part.kept])
    w_p = weight_vector(part, h_p)
    assert (w_p.weights >= 0).all()
    assert 0.95 <= w_p.total <= 1.05
    peak_cell = w_p.indices[np.argmax(w_p.weights)]
    ang = np.arctan2(part.reps[peak_cell][1], part.reps[peak_cell][0])
    assert abs(ang) < 0.2  # maximal weight faces the kernel pole at angle 0


def test_kernel_consistency_of_adjacent_cells(disk_partition):
    # representatives in the same cell cluster near a boundary angle give
    # kernel columns that agree within Monte Carlo resolution
    part, params, *_ = disk_partition
    probes = [(0.1, 0.0), (0.0, 0.2), (-0.2, -0.1), (0.25, 0.2), (0.0, 0.0)]
    i, j = 40, 41
    worst = 0.0
    for x in probes:
        worst = max(worst, abs(kernel_eval(part, x, i, params) - kernel_eval(part, x, j, params)))
    p0 = 1.0 / 128
    n = part.mu_x0.accepted
    ci = 2.0 * np.sqrt((1 - p0) / (p0 * n)) * 2.0  # two estimates, ~2 sigma each
    assert worst <= 2.0 * ci + 0.25 * ci  # small systematic gap allowed


def test_push_uniform_and_totals(disk_partition):
    part, params, h_one, h_p = disk_partition
    w = weight_vector(part, h_one)
    edges, masses = push_to_boundary(part, w, 64)
    assert masses.sum() == pytest.approx(w.total, abs=1e-12)
    expected = w.total / 64
    sigma = np.sqrt(expected * (1 - expected) / part.mu_x0.accepted)
    assert np.abs(masses - expected).max() <= 3.5 * sigma
    w_p = weight_vector(part, h_p)
    _, masses_p = push_to_boundary(part, w_p, 64)
    assert masses_p.sum() == pytest.approx(w_p.total, abs=1e-12)
    peak_bins = {int(np.argmax(masses_p))}
    assert peak_bins & {0, 63}  # pole at angle zero straddles the first/last bin


def test_push_rejects_implicit_domains():
    spheres = geometry.make_domain("spheres")
    params = sampler.WalkParams(walks=2000, seed=3, keep_hit_points=False)
    part = build_partition(spheres, 2, 16, (0.0, 0.0, 3.0), params)
    w = weight_vector(part, ConstantOne())
    with pytest.raises(ValueError):
        push_to_boundary(part, w, 16)


def test_cutdisk_partition_masses_positive():
    cut = geometry.make_domain("cutdisk")
    params = sampler.WalkParams(walks=40_000, seed=4, keep_hit_points=False)
    part = build_partition(cut, 8, 128, (-0.5, 0.0), params)
    assert (part.mu_x0.probs[part.kept] > 0).all()
    assert part.mu_x0.probs.sum() + part.abort_fraction == pytest.approx(1.0, abs=1e-3)
    w = weight_vector(part, ConstantOne())
    edges, masses = push_to_boundary(part, w, 32)
    assert masses.sum() == pytest.approx(w.total, abs=1e-12)
