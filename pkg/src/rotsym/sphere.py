"""Laplace eigenstructure and real harmonic bases on S^{n-2}.

Eigenvalues are l(l+n-3) with multiplicity
N_l = C(n+l-2, n-2) - C(n+l-4, n-2).  Bases are tabulated for n = 3
(Fourier modes on S^1) and n = 4 (real spherical harmonics on S^2, polar
axis along the first block coordinate).  The l = 1 functions are aligned
with the coordinate functions: Y_i proportional to Theta_i for
i = 1..n-1, which the tuning step of the improvement loop relies on.
"""

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gamma, lpmv

from .errors import CapabilityError, ResolutionError
from .quadrature import sphere_grid


def eigenvalue(n, l):
    return float(l * (l + n - 3))


def multiplicity(n, l):
    if l == 0:
        return 1
    return comb(n + l - 2, n - 2) - comb(n + l - 4, n - 2)


def level_offset(n, l):
    """Index of the first mode of level l in the (l, within-level) ordering."""
    return sum(multiplicity(n, k) for k in range(l))


def sphere_area(k):
    return float(2.0 * np.pi ** ((k + 1) / 2) / gamma((k + 1) / 2))


def l1_normalization(n):
    """c with Y_i = c * Theta_i orthonormal in L^2(S^{n-2}), i = 1..n-1."""
    return float(np.sqrt((n - 1) / sphere_area(n - 2)))


@dataclass(frozen=True)
class SphereSpectrum:
    n: int
    l_max: int
    levels: np.ndarray        # per-mode level l, shape (M,)
    eigenvalues: np.ndarray   # per-mode lambda_m
    grid: object              # quadrature SphereGrid, or None
    Y: np.ndarray             # (M, nodes) orthonormal basis table
    grad_Y: np.ndarray        # (M, nodes, n-1) tangential gradients

    @property
    def n_modes(self):
        return self.Y.shape[0] if self.Y is not None else len(self.levels)

    @property
    def weights(self):
        return self.grid.weights

    @property
    def points(self):
        return self.grid.points

    def gram(self):
        return (self.Y * self.weights[None, :]) @ self.Y.T

    def validate(self, tol=1e-8):
        g = self.gram()
        assert np.abs(g - np.eye(self.n_modes)).max() <= tol
        lev = np.array([lv for l in range(self.l_max + 1)
                        for lv in [l] * multiplicity(self.n, l)])
        assert np.array_equal(self.levels, lev)
        return True


def _fourier_basis(l_max, theta):
    rows = [np.full_like(theta, 1.0 / np.sqrt(2.0 * np.pi))]
    drows = [np.zeros_like(theta)]
    for l in range(1, l_max + 1):
        rows.append(np.cos(l * theta) / np.sqrt(np.pi))
        drows.append(-l * np.sin(l * theta) / np.sqrt(np.pi))
        rows.append(np.sin(l * theta) / np.sqrt(np.pi))
        drows.append(l * np.cos(l * theta) / np.sqrt(np.pi))
    return np.array(rows), np.array(drows)


def _legendre_theta_derivative(l, m, ct, st, p_lm, p_lm1):
    """d/dtheta P_l^m(cos theta) via sin(th) dP = l ct P_l^m - (l+m) P_{l-1}^m."""
    return (l * ct * p_lm - (l + m) * p_lm1) / st


def _real_sph_table(l_max, theta, phi):
    """Real spherical harmonics and angular derivatives on S^2 nodes.

    Ordering inside level l: m = 0, then (cos, sin) pairs for m = 1..l.
    Level 1 is reordered to align with the coordinates
    Theta = (cos th, sin th cos ph, sin th sin ph).
    """
    ct, st = np.cos(theta), np.sin(theta)
    rows, d_th, d_ph = [], [], []
    for l in range(l_max + 1):
        block, bth, bph = [], [], []
        for m in range(0, l + 1):
            norm = np.sqrt((2 * l + 1) / (4 * np.pi)
                           * gamma(l - m + 1) / gamma(l + m + 1))
            p = lpmv(m, l, ct)
            p_prev = lpmv(m, l - 1, ct) if l - 1 >= m else np.zeros_like(ct)
            dp = _legendre_theta_derivative(l, m, ct, st, p, p_prev)
            if m == 0:
                block.append(norm * p)
                bth.append(norm * dp)
                bph.append(np.zeros_like(p))
            else:
                s2 = np.sqrt(2.0) * norm
                block.append(s2 * p * np.cos(m * phi))
                bth.append(s2 * dp * np.cos(m * phi))
                bph.append(-m * s2 * p * np.sin(m * phi))
                block.append(s2 * p * np.sin(m * phi))
                bth.append(s2 * dp * np.sin(m * phi))
                bph.append(m * s2 * p * np.cos(m * phi))
        if l == 1:
            # reorder (m=0, cos, sin) so Y_i ~ Theta_i
            order = [0, 1, 2]
            block = [block[i] for i in order]
            bth = [bth[i] for i in order]
            bph = [bph[i] for i in order]
            # fix signs so the proportionality constant is positive
            c = l1_normalization(4)
            theta_coords = [ct, st * np.cos(phi), st * np.sin(phi)]
            for i in range(3):
                ref = c * theta_coords[i]
                if np.vdot(block[i], ref) < 0:
                    block[i], bth[i], bph[i] = -block[i], -bth[i], -bph[i]
        rows += block
        d_th += bth
        d_ph += bph
    return np.array(rows), np.array(d_th), np.array(d_ph)


def sphere_spectrum(n, l_max, resolution=None, with_basis=True):
    """Spectrum of the Laplacian on S^{n-2} with tabulated orthonormal basis.

    Bases are available for n in {3, 4}; for other n only (eigenvalue,
    multiplicity) data is returned unless a basis is requested.
    """
    levels = np.array([lv for l in range(l_max + 1)
                       for lv in [l] * multiplicity(n, l)])
    eig = np.array([eigenvalue(n, l) for l in levels])
    if not with_basis:
        return SphereSpectrum(n=n, l_max=l_max, levels=levels,
                              eigenvalues=eig, grid=None, Y=None, grad_Y=None)
    if n not in (3, 4):
        raise CapabilityError(f"tabulated bases require n in {{3, 4}}, got {n}")

    if n == 3:
        m = resolution[0] if resolution else max(8 * (l_max + 1), 32)
        if m <= 2 * l_max:
            raise ResolutionError(f"{m} nodes alias l_max={l_max}")
        grid = sphere_grid(1, (m,))
        theta = grid.angles[0]
        Y, dY = _fourier_basis(l_max, theta)
        # tangent on S^1: e_theta = (-sin, cos); ambient gradient = dY * e_theta
        e_t = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        grad = dY[:, :, None] * e_t[None, :, :]
        return SphereSpectrum(n=3, l_max=l_max, levels=levels, eigenvalues=eig,
                              grid=grid, Y=Y, grad_Y=grad)

    res = resolution or (2 * l_max + 2, 4 * l_max + 4)
    if res[0] < l_max + 1 or res[1] <= 2 * l_max:
        raise ResolutionError(f"grid {res} aliases l_max={l_max}")
    grid = sphere_grid(2, res)
    th = np.repeat(grid.angles[0], res[1])
    ph = np.tile(grid.angles[1], res[0])
    Y, d_th, d_ph = _real_sph_table(l_max, th, ph)
    ct, st = np.cos(th), np.sin(th)
    # frame: Theta = (ct, st cos, st sin); e_th = dTheta/dth; e_ph = (1/st) dTheta/dph
    e_th = np.stack([-st, ct * np.cos(ph), ct * np.sin(ph)], axis=1)
    e_ph = np.stack([np.zeros_like(ph), -np.sin(ph), np.cos(ph)], axis=1)
    grad = (d_th[:, :, None] * e_th[None, :, :]
            + (d_ph / st)[:, :, None] * e_ph[None, :, :])
    return SphereSpectrum(n=4, l_max=l_max, levels=levels, eigenvalues=eig,
                          grid=grid, Y=Y, grad_Y=grad)


def harmonic_transform(values, spec):
    """Forward transform: quadrature inner products against the basis.

    values: (..., nodes) -> coefficients (..., n_modes).
    """
    values = np.asarray(values)
    if values.shape[-1] != spec.Y.shape[1]:
        raise ResolutionError("value grid does not match the spectrum grid")
    return values @ (spec.Y * spec.weights[None, :]).T


def inverse_transform(coeffs, spec):
    """Backward transform: coefficients (..., n_modes) -> values (..., nodes)."""
    coeffs = np.asarray(coeffs)
    return coeffs @ spec.Y


def surface_gradient(values, spec):
    """Tangential gradient of a band-limited function, shape (nodes, n-1)."""
    c = harmonic_transform(values, spec)
    return np.einsum("m,mnd->nd", c, spec.grad_Y)
