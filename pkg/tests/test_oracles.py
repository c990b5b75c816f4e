import numpy as np
import pytest
from scipy import integrate

from hmlab import oracles
from hmlab.errors import OracleError


def test_poisson_density_center_uniform():
    assert oracles.poisson_disk_density(1.0, (0.0, 0.0), 0.3) == pytest.approx(1.0 / (2 * np.pi))


def test_poisson_density_ratio_near_far():
    near = oracles.poisson_disk_density(1.0, (0.5, 0.0), 0.0)
    far = oracles.poisson_disk_density(1.0, (0.5, 0.0), np.pi)
    assert near / far == pytest.approx(9.0)


def test_poisson_density_rejects_outside():
    with pytest.raises(ValueError):
        oracles.poisson_disk_density(1.0, (1.0, 0.0), 0.0)


def test_arc_measure_full_circle_is_one():
    total = oracles.disk_arc_harmonic_measure(1.0, (0.3, 0.2), 0.0, 2 * np.pi)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_arc_measure_uniform_from_center():
    m = 16
    val = oracles.disk_arc_harmonic_measure(0.875, (0.0, 0.0), 0.0, 2 * np.pi / m)
    assert val == pytest.approx(1.0 / m, abs=1e-10)


def test_annulus_density_symmetry_and_total():
    ann = oracles.AnnulusExit(0.5, 1.0)
    x = np.array([0.75, 0.0])
    psi = np.linspace(0.1, 3.0, 7)
    up = ann.density(x, psi)
    down = ann.density(x, -psi)
    assert np.allclose(up, down, atol=1e-12)
    # unnormalized inner mass + outer mass = 1
    total_inner, _ = integrate.quad(lambda p: ann.density(x, p, conditional=False)[0], 0, 2 * np.pi, limit=300)
    outer = 1.0 - ann.inner_mass(x)
    assert total_inner + outer == pytest.approx(1.0, abs=1e-8)


def test_annulus_cells_sum_to_one_and_match_density():
    ann = oracles.AnnulusExit(0.5, 1.0)
    x = np.array([0.75, 0.0])
    edges = np.linspace(0, 2 * np.pi, 65)
    cells = ann.cell_probabilities(x, edges)
    assert cells.sum() == pytest.approx(1.0, abs=1e-12)
    assert (cells > -1e-15).all()
    # one cell cross-checked by quadrature of the conditional density
    val, _ = integrate.quad(lambda p: ann.density(x, p)[0], edges[3], edges[4], limit=100)
    assert cells[3] == pytest.approx(val, abs=1e-9)


def test_annulus_mode_truncation_stable():
    x = np.array([0.75, 0.0])
    edges = np.linspace(0, 2 * np.pi, 65)
    base = oracles.AnnulusExit(0.5, 1.0, modes=128).cell_probabilities(x, edges)
    double = oracles.AnnulusExit(0.5, 1.0, modes=256).cell_probabilities(x, edges)
    assert np.abs(base - double).max() < 1e-8


def test_annulus_rejects_nonconverged():
    # evaluation point hugging the inner circle needs more modes than allowed
    ann = oracles.AnnulusExit(0.5, 1.0, modes=8)
    with pytest.raises(OracleError):
        ann.density(np.array([0.5005, 0.0]), 0.0)


def test_annulus_rejects_point_outside():
    ann = oracles.AnnulusExit(0.5, 1.0)
    with pytest.raises(ValueError):
        ann.density(np.array([0.4, 0.0]), 0.0)
    with pytest.raises(ValueError):
        oracles.AnnulusExit(1.0, 0.5)
