import numpy as np
import pytest

from hmlab import equivalence, geometry, sampler
from hmlab.equivalence import (
    DISTINCT,
    EQUIVALENT,
    INCONCLUSIVE,
    ProbeRecord,
    RadialDisk,
    SlitSide,
    SlotMouth,
    TangencyAzimuth,
    classify,
    probe_pair,
)

DISK = geometry.make_domain("disk")


def _rec(n, f, ci=0.01, floor=0.02):
    return ProbeRecord(n=n, f_hat=f, ci=ci, noise_floor=floor, diagnostics={})


def test_classify_equivalent_at_noise_floor():
    recs = [_rec(n, f) for n, f in [(2, 0.3), (4, 0.1), (8, 0.05), (16, 0.03)]]
    assert classify(recs) == EQUIVALENT


def test_classify_distinct():
    recs = [_rec(n, f) for n, f in [(2, 1.2), (4, 1.5), (8, 1.8), (16, 1.9)]]
    assert classify(recs) == DISTINCT


def test_classify_inconclusive_between():
    recs = [_rec(n, f) for n, f in [(2, 0.5), (4, 0.4), (8, 0.2), (16, 0.18)]]
    assert classify(recs) == INCONCLUSIVE


def test_classify_growth_breaks_equivalence():
    recs = [_rec(n, f) for n, f in [(2, 0.02), (4, 0.02), (8, 0.02), (16, 0.2)]]
    assert classify(recs) != EQUIVALENT


def test_classify_uses_last_half_only():
    # noisy head, clean distinct tail
    recs = [_rec(2, 0.1), _rec(4, 0.2), _rec(8, 1.5), _rec(16, 1.8)]
    assert classify(recs) == DISTINCT
    with pytest.raises(ValueError):
        classify([])


def test_paths_land_where_stated():
    p = RadialDisk(0.0).point(1e-3)
    assert np.allclose(p, [0.999, 0.0])
    s = SlitSide("above", 0.5).point(1e-3)
    assert np.allclose(s, [0.5, 1e-3])
    s2 = SlitSide("below", 0.5).point(1e-3)
    assert np.allclose(s2, [0.5, -1e-3])
    with pytest.raises(ValueError):
        SlitSide("left", 0.5)
    mouth = SlotMouth(4).point(0.01)
    assert np.allclose(mouth, [(0.25 + 0.2) / 2.0, 0.75 - 0.01])
    spheres = geometry.make_domain("spheres")
    for t in (0.05, 0.02):
        q = TangencyAzimuth(1.0).point(t)
        assert geometry.distance_to_boundary(spheres, q) == pytest.approx(t, abs=1e-9)
        assert np.arctan2(q[1], q[0]) == pytest.approx(1.0)


def test_probe_requires_valid_points():
    params = sampler.WalkParams(walks=100, seed=1)
    with pytest.raises(ValueError):
        # t = 0.6 puts the point inside K_2 (disk of radius 0.5 needs d < r)
        probe_pair(DISK, RadialDisk(0.0), 0.6, RadialDisk(0.0), 0.6, [2], params)
    with pytest.raises(ValueError):
        probe_pair(DISK, RadialDisk(0.0), 1e-3, RadialDisk(0.0), 1e-3, [], params)


def test_same_point_probe_is_noise_floor():
    params = sampler.WalkParams(walks=5000, seed=9, min_accepted=1500, keep_hit_points=False)
    res = probe_pair(DISK, RadialDisk(0.3), 1e-3, RadialDisk(0.3), 1e-3, [8, 16], params)
    assert res.verdict == EQUIVALENT
    for rec in res.records:
        assert rec.f_hat < 4.0 * max(rec.noise_floor, 0.05)


def test_probe_symmetry_of_verdicts():
    params_ab = sampler.WalkParams(walks=4000, seed=31, min_accepted=1000, keep_hit_points=False)
    params_ba = sampler.WalkParams(walks=4000, seed=77, min_accepted=1000, keep_hit_points=False)
    a = RadialDisk(0.0)
    b = RadialDisk(np.pi / 2)
    r1 = probe_pair(DISK, a, 1e-3, b, 1e-3, [8, 16, 32], params_ab)
    r2 = probe_pair(DISK, b, 1e-3, a, 1e-3, [8, 16, 32], params_ba)
    assert r1.verdict == r2.verdict == DISTINCT


def test_verdict_reproducible_from_stored_records():
    params = sampler.WalkParams(walks=4000, seed=13, min_accepted=800, keep_hit_points=False)
    res = probe_pair(DISK, RadialDisk(0.0), 1e-3, RadialDisk(np.pi), 1e-3, [8, 16], params)
    assert classify(res.records) == res.verdict


def test_probe_rows_schema():
    params = sampler.WalkParams(walks=3000, seed=2, min_accepted=500, keep_hit_points=False)
    res = probe_pair(DISK, RadialDisk(0.0), 1e-3, RadialDisk(np.pi), 1e-3, [8], params)
    row = res.as_rows()[0]
    assert set(row) == {"domain", "n", "M", "x", "y", "f_hat", "ci",
                        "acc_x", "acc_y", "abort_x", "abort_y", "seed"}
    assert row["domain"] == "disk"
    assert row["x"].startswith("0.999")
