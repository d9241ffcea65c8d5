"""Radial profile of the rotationally symmetric convex translator.

The graph height phi(r) of the m-dimensional model solves

    phi'' / (1 + phi'^2) + (m - 1) phi' / r = 1,   phi(0) = phi'(0) = 0,

which forces phi' >= r/m, phi >= r^2/(2m) and mean curvature
H = 1/sqrt(1 + phi'^2) < m/r.  The origin is a regular singular point; we
leave it with the series phi = r^2/(2m) + r^4/(4 m^3 (m+2)) + O(r^6) and
integrate outward with a high-order adaptive scheme.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationFailureError
from .serialize import write_csv

SERIES_RADIUS = 1e-3


def _series(m, r):
    a4 = 1.0 / (4.0 * m**3 * (m + 2))
    phi = r**2 / (2.0 * m) + a4 * r**4
    dphi = r / m + 4.0 * a4 * r**3
    return phi, dphi


@dataclass(frozen=True)
class BowlProfile:
    """Tabulated profile on a uniform radius grid.

    The dimension field is the dimension of the hypersurface the profile
    generates (``Bowl^m`` has an m-dimensional graph domain).
    """

    dimension: int
    r: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    tolerance: float

    def mean_curvature(self, r=None):
        """H = 1/sqrt(1+phi'^2) of the unit-tip-curvature model."""
        dphi = self.dphi if r is None else self.dphi_at(r)
        return 1.0 / np.sqrt(1.0 + dphi**2)

    def phi_at(self, r):
        return _eval_profile(self, r)[0]

    def dphi_at(self, r):
        return _eval_profile(self, r)[1]

    def ode_residual(self):
        """|phi''/(1+phi'^2) + (m-1) phi'/r - 1| with phi'' from divided
        differences of the tabulated phi' (fourth-order stencil).

        Returns the residual array on the stencil-supported interior points.
        """
        m = self.dimension
        h = self.r[1] - self.r[0]
        dd = (-self.dphi[4:] + 8 * self.dphi[3:-1]
              - 8 * self.dphi[1:-3] + self.dphi[:-4]) / (12.0 * h)
        ri = self.r[2:-2]
        dpi = self.dphi[2:-2]
        res = np.abs(dd / (1.0 + dpi**2)
                     + (m - 1) * dpi / np.where(ri > 0, ri, 1.0) - 1.0)
        # at r=0 the ODE degenerates to m*phi''(0) = 1; use the series value
        res[ri == 0] = np.abs(m * dd[ri == 0] - 1.0)
        return res

    def validate(self):
        m = self.dimension
        assert self.phi[0] == 0.0 and self.dphi[0] == 0.0
        if not np.all(self.dphi >= self.r / m - 1e-12):
            raise AssertionError("phi' >= r/m violated")
        if not np.all(self.phi >= self.r**2 / (2 * m) - 1e-12):
            raise AssertionError("phi >= r^2/(2m) violated")
        res = self.ode_residual()
        if res.max() > self.tolerance:
            raise AssertionError(f"ODE residual {res.max():.3e} > {self.tolerance:.3e}")
        return True

    def to_csv(self, path):
        write_csv(path, ["r", "phi", "dphi"],
                  zip(self.r, self.phi, self.dphi))


def _eval_profile(profile, r):
    r = np.asarray(r, dtype=float)
    phi = np.interp(r, profile.r, profile.phi)
    dphi = np.interp(r, profile.r, profile.dphi)
    return phi, dphi


def solve_bowl_profile(n, r_max, tol=1e-10, num_points=8193, _dense=None):
    """Integrate the profile ODE of ``Bowl^n`` on [0, r_max].

    Linear interpolation of the returned table is only O(h^2); use
    ``solve_bowl_dense`` when point evaluations at full accuracy are needed.
    """
    if n < 3:
        raise ValueError("dimension must be >= 3")
    if r_max <= 0 or tol <= 0:
        raise ValueError("r_max and tol must be positive")
    sol = solve_bowl_dense(n, r_max)
    grid = np.linspace(0.0, r_max, num_points)
    phi, dphi = sol(grid)
    prof = BowlProfile(dimension=n, r=grid, phi=phi, dphi=dphi, tolerance=tol)
    res = prof.ode_residual().max()
    if res > tol:
        raise IntegrationFailureError(
            f"profile residual {res:.3e} exceeds tolerance {tol:.3e}")
    return prof


def solve_bowl_dense(m, r_max):
    """Dense-output solution of the profile ODE; returns phi(r), phi'(r)."""

    def rhs(r, y):
        dphi = y[1]
        return [dphi, (1.0 - (m - 1) * dphi / r) * (1.0 + dphi * dphi)]

    r0 = SERIES_RADIUS
    y0 = _series(m, np.array(r0))
    sol = solve_ivp(rhs, (r0, max(r_max, 2 * r0)), [float(y0[0]), float(y0[1])],
                    method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)
    if not sol.success:
        raise IntegrationFailureError(sol.message)

    def evaluate(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        phi = np.empty_like(r)
        dphi = np.empty_like(r)
        small = r <= r0
        phi[small], dphi[small] = _series(m, r[small])
        if np.any(~small):
            ys = sol.sol(r[~small])
            phi[~small] = ys[0]
            dphi[~small] = ys[1]
        return phi, dphi

    return evaluate
