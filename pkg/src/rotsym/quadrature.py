"""Quadrature grids on spheres and intervals.

Spheres S^k are parameterized by iterated polar angles with Gauss-Legendre
nodes in each polar direction and a uniform (trapezoidal, spectrally accurate
for periodic integrands) azimuth.  Weights absorb the area element, so
``sum(w * f(points))`` approximates the surface integral over the unit sphere.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SphereGrid:
    k: int                  # sphere dimension, S^k in R^{k+1}
    points: np.ndarray      # (M, k+1) unit vectors
    weights: np.ndarray     # (M,) quadrature weights, sum ~ area(S^k)
    shape: tuple            # parameter grid shape
    angles: tuple           # per-axis node arrays (polar..., azimuth)

    @property
    def size(self):
        return self.points.shape[0]

    def grid_edges(self):
        """Index pairs of parameter-grid neighbors (azimuth wraps)."""
        idx = np.arange(self.size).reshape(self.shape)
        pairs = []
        ndim = len(self.shape)
        for ax in range(ndim):
            a = np.moveaxis(idx, ax, 0)
            pairs.append(np.stack([a[:-1].ravel(), a[1:].ravel()], axis=1))
            if ax == ndim - 1 and self.shape[ax] > 2:  # azimuth wrap
                pairs.append(np.stack([a[-1].ravel(), a[0].ravel()], axis=1))
        return np.concatenate(pairs, axis=0)


def gauss_legendre(n, a=-1.0, b=1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def line_grid(n, half_width):
    """Gauss-Legendre nodes/weights on [-half_width, half_width]."""
    return gauss_legendre(n, -half_width, half_width)


def sphere_area(k):
    from scipy.special import gamma
    return 2.0 * np.pi ** ((k + 1) / 2) / gamma((k + 1) / 2)


def sphere_grid(k, resolution):
    """Quadrature grid on the unit S^k.

    resolution: tuple of per-axis node counts (k-1 polar axes then azimuth);
    for k == 1 a single count (uniform angles).
    """
    if k == 1:
        (m,) = resolution
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        w = np.full(m, 2.0 * np.pi / m)
        return SphereGrid(1, pts, w, (m,), (theta,))

    *polar_res, m_az = resolution
    if len(polar_res) != k - 1:
        raise ValueError(f"S^{k} needs {k - 1} polar axes + azimuth")
    polar = []
    for i, m in enumerate(polar_res):
        # measure sin^p(psi) dpsi = (1-u^2)^{(p-1)/2} du with u = cos psi:
        # Gauss-Gegenbauer nodes are polynomially exact for this weight
        # (p = 1 reduces to Gauss-Legendre)
        p = k - 1 - i
        from scipy.special import roots_gegenbauer
        u, w = roots_gegenbauer(m, p / 2.0)
        order = np.argsort(-u)        # psi ascending
        nodes = np.arccos(u[order])
        polar.append((nodes, w[order]))
    az = 2.0 * np.pi * np.arange(m_az) / m_az
    az_w = np.full(m_az, 2.0 * np.pi / m_az)

    axes_nodes = [p[0] for p in polar] + [az]
    axes_w = [p[1] for p in polar] + [az_w]
    mesh = np.meshgrid(*axes_nodes, indexing="ij")
    wmesh = np.meshgrid(*axes_w, indexing="ij")
    shape = mesh[0].shape

    pts = np.empty(shape + (k + 1,))
    s = np.ones(shape)
    for i in range(k - 1):
        pts[..., i] = s * np.cos(mesh[i])
        s = s * np.sin(mesh[i])
    pts[..., k - 1] = s * np.cos(mesh[k - 1])
    pts[..., k] = s * np.sin(mesh[k - 1])
    w = np.ones(shape)
    for wm in wmesh:
        w = w * wm
    return SphereGrid(k, pts.reshape(-1, k + 1), w.reshape(-1), shape,
                      tuple(axes_nodes))
