import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmlab import geometry
from hmlab.geometry import (
    cellize_boundary,
    distance_to_boundary,
    exhaustion_level,
    inside_domain,
    make_domain,
    membership_in_k,
    parse_domain,
)

DISK = make_domain("disk")
CUTDISK = make_domain("cutdisk")
SPHERES = make_domain("spheres")
COMB = make_domain("comb", teeth=50)
ALL = [DISK, CUTDISK, SPHERES, COMB]


def test_distance_examples():
    assert distance_to_boundary(DISK, np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert distance_to_boundary(CUTDISK, np.array([0.5, 0.1])) == pytest.approx(0.1)
    assert distance_to_boundary(SPHERES, np.array([0.0, 0.0, 3.5])) == pytest.approx(0.5)


def test_inside_examples():
    assert inside_domain(DISK, np.array([0.999, 0.0]))
    assert not inside_domain(CUTDISK, np.array([0.5, 0.0]))
    assert not inside_domain(make_domain("comb", teeth=10), np.array([0.25, 0.5]))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        distance_to_boundary(DISK, np.array([0.1, 0.2, 0.3]))
    with pytest.raises(ValueError):
        inside_domain(SPHERES, np.array([0.1, 0.2]))


def test_parse_domain_forms():
    assert parse_domain("disk").kind == "disk"
    assert parse_domain("comb:N=12").teeth == 12
    assert parse_domain("comb").teeth == 50
    with pytest.raises(ValueError):
        parse_domain("torus")
    with pytest.raises(ValueError):
        parse_domain("comb:K=9")


def test_comb_teeth_are_boundary():
    for m in range(2, 51):
        p = np.array([1.0 / m, (1.0 - 1.0 / m) / 2.0])
        assert distance_to_boundary(COMB, p) == pytest.approx(0.0, abs=1e-15)
        assert not inside_domain(COMB, p)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 3), st.data())
def test_distance_is_1_lipschitz(idx, data):
    domain = ALL[idx]
    lo, hi = domain.bounding_box()
    coords = st.floats(-0.2, 1.2)
    p = np.array([data.draw(coords) for _ in range(domain.dim)]) * (hi - lo) + lo
    q = np.array([data.draw(coords) for _ in range(domain.dim)]) * (hi - lo) + lo
    dp = distance_to_boundary(domain, p)
    dq = distance_to_boundary(domain, q)
    assert abs(dp - dq) <= np.linalg.norm(p - q) + 1e-12


def test_exhaustion_level_examples():
    assert exhaustion_level(DISK, 2).disk_radius == pytest.approx(0.5)
    assert exhaustion_level(DISK, 10).disk_radius == pytest.approx(0.9)
    with pytest.raises(ValueError):
        exhaustion_level(DISK, 1)
    lev = exhaustion_level(SPHERES, 4)
    assert lev.shell_radius == pytest.approx(1.0 / 16.0)
    assert membership_in_k(lev, SPHERES.anchor)
    # a neighborhood of the tangency point is excluded
    assert not membership_in_k(lev, np.array([0.0, 0.0, 0.01]))


def test_membership_examples():
    lev2 = exhaustion_level(DISK, 2)
    assert membership_in_k(lev2, np.array([0.25, 0.0]))
    assert not membership_in_k(lev2, np.array([0.75, 0.0]))
    lev4 = exhaustion_level(COMB, 4)
    deep_slot = np.array([(1.0 / 20 + 1.0 / 21) / 2.0, 0.4])
    assert not membership_in_k(lev4, deep_slot)
    assert membership_in_k(lev4, COMB.anchor)


def test_anchor_in_every_level():
    for domain in ALL:
        for n in (2, 3, 4, 8):
            lev = exhaustion_level(domain, n)
            assert membership_in_k(lev, domain.anchor)
            assert distance_to_boundary(domain, domain.anchor) >= lev.shell_radius


def test_nesting_by_sampling():
    gen = np.random.default_rng(7)
    for domain in ALL:
        lo, hi = domain.bounding_box()
        pts = gen.uniform(lo, hi, size=(4000, domain.dim))
        for n in (2, 4, 8):
            lev = exhaustion_level(domain, n)
            nxt = exhaustion_level(domain, n + 1)
            inside = pts[membership_in_k(lev, pts)]
            if len(inside) == 0:
                continue
            assert (distance_to_boundary(domain, inside) > nxt.shell_radius).all()


def test_level_sets_single_component():
    for domain in (SPHERES, COMB):
        for n in (2, 3, 4, 8):
            assert geometry.level_component_count(exhaustion_level(domain, n)) == 1


def test_disk_cellization_quarters():
    lev = exhaustion_level(DISK, 2)
    chart = cellize_boundary(lev, 4)
    mids = np.arctan2(chart.reps[:, 1], chart.reps[:, 0])
    assert np.allclose(np.linalg.norm(chart.reps, axis=1), 0.5)
    assert mids[0] == pytest.approx(np.pi / 4)
    p = 0.5 * np.array([np.cos(np.deg2rad(10)), np.sin(np.deg2rad(10))])
    assert chart.assign(p[None, :])[0] == 0
    with pytest.raises(ValueError):
        cellize_boundary(lev, 1)


def test_cellization_totality_and_occupancy():
    gen = np.random.default_rng(3)
    lev = exhaustion_level(DISK, 2)
    chart = cellize_boundary(lev, 64)
    ang = gen.uniform(0, 2 * np.pi, 10_000)
    pts = 0.5 * np.stack((np.cos(ang), np.sin(ang)), axis=1)
    idx = chart.assign(pts)
    assert idx.min() >= 0 and idx.max() < 64
    assert len(np.unique(idx)) == 64  # no empty cell on equal arcs


def test_cutdisk_chart_on_level_set():
    for n in (3, 8):
        lev = exhaustion_level(CUTDISK, n)
        chart = cellize_boundary(lev, 48)
        dd = distance_to_boundary(CUTDISK, chart.reps)
        assert np.abs(dd - lev.shell_radius).max() <= CUTDISK.eps_chart
        self_idx = chart.assign(chart.reps)
        assert np.array_equal(self_idx, np.arange(48))


def test_cutdisk_chart_degenerate_level_total():
    # at n = 2 the notch cap coincides with the outer arc (K_2 is the left
    # arc of radius 1/2), so the curve double-covers it; assignment is still
    # a deterministic total map and coincident cells share their representative
    lev = exhaustion_level(CUTDISK, 2)
    chart = cellize_boundary(lev, 48)
    idx = chart.assign(chart.reps)
    assert idx.min() >= 0 and idx.max() < 48
    mism = np.nonzero(idx != np.arange(48))[0]
    assert np.allclose(chart.reps[mism], chart.reps[idx[mism]])


def test_voronoi_chart_deterministic_and_on_level():
    lev = exhaustion_level(SPHERES, 4)
    a = cellize_boundary(lev, 64, seed=7)
    b = cellize_boundary(lev, 64, seed=7)
    c = cellize_boundary(lev, 64, seed=8)
    assert np.array_equal(a.reps, b.reps)
    assert not np.array_equal(a.reps, c.reps)
    dd = distance_to_boundary(SPHERES, a.reps)
    assert np.abs(dd - lev.shell_radius).max() <= SPHERES.eps_chart


def test_comb_chart_on_level_set():
    lev = exhaustion_level(COMB, 4)
    chart = cellize_boundary(lev, 32, seed=5)
    dd = distance_to_boundary(COMB, chart.reps)
    assert np.abs(dd - lev.shell_radius).max() <= COMB.eps_chart
