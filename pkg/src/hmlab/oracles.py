"""Closed-form references on the disk used to pin expected values and tolerances.

Two facts carry all the calibration weight:

* the harmonic-measure density of a disk seen from an interior point is the
  Poisson kernel, and
* the Dirichlet problem in an annulus separates into a log term plus Fourier
  modes, giving the exit density on the inner circle for Brownian motion
  killed on both circles.

Everything else in the package is checked against these two.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .errors import OracleError

TWO_PI = 2.0 * np.pi


def poisson_disk_density(radius: float, x, phi) -> float | np.ndarray:
    """Poisson kernel of the disk of ``radius`` per unit arc length at angle phi."""
    x = np.asarray(x, dtype=np.float64)
    r2 = float(x[0] ** 2 + x[1] ** 2)
    if r2 >= radius * radius:
        raise ValueError("evaluation point must lie strictly inside the disk")
    phi = np.asarray(phi, dtype=np.float64)
    bx = radius * np.cos(phi) - x[0]
    by = radius * np.sin(phi) - x[1]
    out = (radius * radius - r2) / (TWO_PI * radius * (bx * bx + by * by))
    return out if out.ndim else float(out)


def disk_arc_harmonic_measure(radius: float, x, phi1: float, phi2: float) -> float:
    """Probability that Brownian motion from x exits the disk through the arc [phi1, phi2]."""
    if phi2 < phi1:
        raise ValueError("need phi1 <= phi2")
    val, err = integrate.quad(
        lambda t: poisson_disk_density(radius, x, t) * radius,
        phi1,
        phi2,
        epsabs=1e-12,
        epsrel=1e-12,
        limit=200,
    )
    if err > 1e-10:
        raise OracleError(f"arc quadrature error estimate {err:.2e} above tolerance")
    return val


def _sinh_ratio(a: float, b: float) -> float:
    """sinh(a)/sinh(b) for a, b > 0, stable for large arguments."""
    return np.exp(a - b) * (1.0 - np.exp(-2.0 * a)) / (1.0 - np.exp(-2.0 * b))


class AnnulusExit:
    """Exit distribution on the inner circle of the annulus r_in < |z| < r_out.

    Separation of variables: the harmonic extension of e^{ik psi} from the
    inner circle (zero on the outer) has radial factor
    sinh(k log(r_out/r)) / sinh(k log(r_out/r_in)); the k = 0 factor is
    log(r_out/r) / log(r_out/r_in), which is also the total harmonic measure
    of the inner circle.
    """

    def __init__(self, r_in: float, r_out: float, modes: int = 128):
        if not 0 < r_in < r_out:
            raise ValueError("need 0 < r_in < r_out")
        self.r_in = r_in
        self.r_out = r_out
        self.modes = modes

    def _radial_factors(self, rho: float) -> np.ndarray:
        if not self.r_in < rho < self.r_out:
            raise ValueError("point must lie strictly inside the annulus")
        log_ratio = np.log(self.r_out / rho)
        log_full = np.log(self.r_out / self.r_in)
        k = np.arange(1, self.modes + 1, dtype=np.float64)
        u = np.empty(self.modes + 1)
        u[0] = log_ratio / log_full
        u[1:] = _sinh_ratio(k * log_ratio, k * log_full)
        if u[-1] > 1e-13 * max(u[0], 1e-300):
            raise OracleError(
                f"annulus series not converged at {self.modes} modes (tail {u[-1]:.2e})"
            )
        return u

    def inner_mass(self, x) -> float:
        """Unconditioned harmonic measure of the inner circle from x."""
        rho = float(np.hypot(x[0], x[1]))
        return float(np.log(self.r_out / rho) / np.log(self.r_out / self.r_in))

    def density(self, x, psi, conditional: bool = True) -> np.ndarray:
        """Exit density per unit angle on the inner circle at angles psi."""
        x = np.asarray(x, dtype=np.float64)
        rho = float(np.hypot(x[0], x[1]))
        theta = float(np.arctan2(x[1], x[0]))
        u = self._radial_factors(rho)
        psi = np.atleast_1d(np.asarray(psi, dtype=np.float64))
        k = np.arange(1, self.modes + 1, dtype=np.float64)
        series = u[0] + 2.0 * (u[1:][None, :] * np.cos(k[None, :] * (theta - psi[:, None]))).sum(axis=1)
        out = series / TWO_PI
        if conditional:
            out = out / u[0]
        return out

    def cell_probabilities(self, x, edges, conditional: bool = True) -> np.ndarray:
        """Exact integrals of the exit density over angular cells [edges[i], edges[i+1]]."""
        x = np.asarray(x, dtype=np.float64)
        rho = float(np.hypot(x[0], x[1]))
        theta = float(np.arctan2(x[1], x[0]))
        u = self._radial_factors(rho)
        edges = np.asarray(edges, dtype=np.float64)
        a = edges[:-1]
        b = edges[1:]
        k = np.arange(1, self.modes + 1, dtype=np.float64)
        osc = (np.sin(k[None, :] * (theta - a[:, None])) - np.sin(k[None, :] * (theta - b[:, None]))) / k[None, :]
        vals = (u[0] * (b - a) + 2.0 * (u[1:][None, :] * osc).sum(axis=1)) / TWO_PI
        if conditional:
            vals = vals / u[0]
        return vals


def annulus_conditional_exit_density(r_in: float, r_out: float, x, phi, modes: int = 128):
    """Conditional exit density (per unit angle) on the inner circle at angles phi."""
    oracle = AnnulusExit(r_in, r_out, modes=modes)
    out = oracle.density(x, phi, conditional=True)
    return out if np.asarray(phi).ndim else float(out[0])
