"""Model hypersurface geometries with exact differential-geometric data.

Shrinking cylinders S^{n-2} x R^2, the convex rotational translator Bowl^n,
and the product Bowl^{n-1} x R are sampled with analytic normals, mean
curvature, |A|^2 and principal curvatures.  Ambient coordinate layout
(0-based) used throughout the package:

    coords 0 .. n-2   rotation block (so(n-1) acts here)
    coord  n-1        translation axis of the soliton
    coord  n          splitting / second cylinder direction

Geodesic distances are approximated by shortest paths on the sample
adjacency graph with one midpoint subdivision per edge; edge lengths are
Euclidean chords, so distances carry an O(h) overestimate in the grid
spacing h.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .bowl import BowlProfile, solve_bowl_dense, solve_bowl_profile
from .errors import PreconditionError, RangeError
from .quadrature import sphere_grid
from .serialize import write_csv, write_json


@dataclass(frozen=True)
class ModelTag:
    kind: str               # cylinder | cylinder_family | bowl | bowl_x_r | user
    n: int = 0
    t: float = 0.0
    kappa: float = 1.0

    def label(self):
        if self.kind == "cylinder":
            return f"Cylinder(n={self.n}, t={self.t})"
        if self.kind == "bowl":
            return f"Bowl(n={self.n}, kappa={self.kappa})"
        if self.kind == "bowl_x_r":
            return f"BowlxR(n={self.n}, kappa={self.kappa})"
        return self.kind


@dataclass(frozen=True)
class SurfaceSample:
    """Single-point view of a sample set."""
    position: np.ndarray
    normal: np.ndarray
    H: float
    A_norm_sq: float
    principal: np.ndarray

    def validate(self):
        assert abs(np.linalg.norm(self.normal) - 1.0) <= 1e-12
        assert abs(self.H - self.principal.sum()) <= 1e-10
        assert abs(self.A_norm_sq - (self.principal**2).sum()) <= 1e-10
        return True


@dataclass
class SurfaceSampleSet:
    """Discretized hypersurface M^n in R^{n+1}."""

    n: int
    positions: np.ndarray       # (M, n+1)
    normals: np.ndarray         # (M, n+1) unit
    H: np.ndarray               # (M,)
    A_norm_sq: np.ndarray       # (M,)
    principal: np.ndarray       # (M, n) ascending
    edges: np.ndarray           # (E, 2) int
    edge_lengths: np.ndarray    # (E,)
    model_tag: ModelTag = field(default_factory=lambda: ModelTag("user"))
    param_shape: tuple = ()

    @property
    def size(self):
        return self.positions.shape[0]

    def sample(self, i):
        return SurfaceSample(self.positions[i], self.normals[i],
                             float(self.H[i]), float(self.A_norm_sq[i]),
                             self.principal[i])

    def validate(self):
        assert np.allclose(np.linalg.norm(self.normals, axis=1), 1.0, atol=1e-12)
        assert np.allclose(self.H, self.principal.sum(axis=1), atol=1e-10)
        assert np.allclose(self.A_norm_sq, (self.principal**2).sum(axis=1),
                           atol=1e-10)
        if self.edges.size:
            assert np.all(self.edge_lengths > 0)
        if self.model_tag.kind == "cylinder":
            n, t = self.model_tag.n, self.model_tag.t
            h_exact = np.sqrt((n - 2) / 2.0) / np.sqrt(-t)
            assert np.allclose(self.H, h_exact, atol=1e-10)
        return True

    def subdivided_graph(self):
        """Sparse adjacency with one midpoint per edge; returns (graph, nodes)."""
        m = self.size
        e = self.edges
        if not e.size:
            return coo_matrix((m, m)).tocsr(), self.positions
        mid_idx = m + np.arange(len(e))
        half = 0.5 * self.edge_lengths
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([mid_idx, mid_idx])
        vals = np.concatenate([half, half])
        total = m + len(e)
        g = coo_matrix((vals, (rows, cols)), shape=(total, total))
        g = g + g.T
        nodes = np.vstack([self.positions,
                           0.5 * (self.positions[e[:, 0]] + self.positions[e[:, 1]])])
        return g.tocsr(), nodes

    def geodesic_distances(self, sources):
        """Graph-geodesic distances from sample indices ``sources``."""
        g, _ = self.subdivided_graph()
        d = dijkstra(g, directed=False, indices=np.asarray(sources))
        return d[..., :self.size]

    def restrict(self, mask):
        mask = np.asarray(mask, dtype=bool)
        idx = -np.ones(self.size, dtype=int)
        idx[mask] = np.arange(mask.sum())
        keep = mask[self.edges[:, 0]] & mask[self.edges[:, 1]] if self.edges.size \
            else np.zeros(0, dtype=bool)
        return SurfaceSampleSet(
            n=self.n,
            positions=self.positions[mask],
            normals=self.normals[mask],
            H=self.H[mask],
            A_norm_sq=self.A_norm_sq[mask],
            principal=self.principal[mask],
            edges=idx[self.edges[keep]] if self.edges.size else self.edges,
            edge_lengths=self.edge_lengths[keep] if self.edges.size else self.edge_lengths,
            model_tag=self.model_tag,
            param_shape=(),
        )

    def transformed(self, rotation=None, shift=None):
        """Rigid motion applied to positions and normals."""
        pos, nor = self.positions, self.normals
        if rotation is not None:
            pos = pos @ rotation.T
            nor = nor @ rotation.T
        if shift is not None:
            pos = pos + shift
        return replace(self, positions=pos, normals=nor)

    def to_csv(self, path):
        d = self.n + 1
        header = ([f"x{i}" for i in range(d)] + [f"nu{i}" for i in range(d)]
                  + ["H", "A_norm_sq"] + [f"lam{i + 1}" for i in range(self.n)])
        rows = np.hstack([self.positions, self.normals,
                          self.H[:, None], self.A_norm_sq[:, None], self.principal])
        write_csv(path, header, rows)

    def to_json(self, path):
        write_json(path, {
            "n": self.n,
            "model": self.model_tag.label(),
            "positions": self.positions,
            "normals": self.normals,
            "H": self.H,
            "A_norm_sq": self.A_norm_sq,
            "principal": self.principal,
            "edges": self.edges,
            "edge_lengths": self.edge_lengths,
        })


@dataclass(frozen=True)
class FlowContext:
    """Flow-level data attached to a model at time t."""
    omega: np.ndarray           # translation axis (unit)
    tip: np.ndarray             # tip point p_t (bowls) or axis base (cylinders)
    axis_direction: np.ndarray  # direction of the line l_t (bowl x R), or None
    kappa: float
    t: float


# ---------------------------------------------------------------------------
# grid specifications


@dataclass(frozen=True)
class CylinderGrid:
    sphere_res: tuple = (12, 24)   # resolution of S^{n-2}
    z_half: float = 8.0
    nz: int = 9                    # nodes per z axis


@dataclass(frozen=True)
class BowlGrid:
    r_max: float = 12.0
    n_r: int = 25
    sphere_res: tuple = (12, 24)
    z_half: float = 8.0            # splitting direction, bowl_x_r only
    nz: int = 9


def _grid_edges_nd(shape, wrap_axes=()):
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    pairs = []
    for ax in range(len(shape)):
        a = np.moveaxis(idx, ax, 0)
        pairs.append(np.stack([a[:-1].reshape(-1), a[1:].reshape(-1)], axis=1))
        if ax in wrap_axes and shape[ax] > 2:
            pairs.append(np.stack([a[-1].reshape(-1), a[0].reshape(-1)], axis=1))
    return np.concatenate(pairs, axis=0)


def _edges_from_positions(shape, wrap_axes, positions):
    e = _grid_edges_nd(shape, wrap_axes)
    lengths = np.linalg.norm(positions[e[:, 0]] - positions[e[:, 1]], axis=1)
    keep = lengths > 1e-14
    return e[keep], lengths[keep]


# ---------------------------------------------------------------------------
# model sampling


def cylinder_radius(n, t):
    """Radius of the shrinking cylinder S^{n-2} x R^2 at time t < 0."""
    return np.sqrt(-2.0 * (n - 2) * t)


def sample_cylinder(n, t, grid=None, sphere=None):
    """Exact samples of S^{n-2}_{r(t)} x R^2 in R^{n+1}; inward normal."""
    if t >= 0:
        raise PreconditionError("shrinking cylinder needs t < 0")
    grid = grid or CylinderGrid()
    if sphere is None:
        res = grid.sphere_res if n == 4 else (grid.sphere_res[-1],)
        sphere = sphere_grid(n - 2, res)
    radius = cylinder_radius(n, t)
    z = np.linspace(-grid.z_half, grid.z_half, grid.nz)
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    m_sph, m_z = sphere.size, z1.size

    pos = np.zeros((m_sph, m_z, n + 1))
    pos[:, :, :n - 1] = radius * sphere.points[:, None, :]
    pos[:, :, n - 1] = z1.reshape(-1)[None, :]
    pos[:, :, n] = z2.reshape(-1)[None, :]
    nor = np.zeros_like(pos)
    nor[:, :, :n - 1] = -sphere.points[:, None, :]

    m = m_sph * m_z
    h_val = (n - 2) / radius
    principal = np.zeros((m, n))
    principal[:, 2:] = 1.0 / radius
    shape = sphere.shape + (grid.nz, grid.nz)
    positions = pos.reshape(m, n + 1)
    wrap = (len(sphere.shape) - 1,)  # azimuth axis of the sphere factor
    edges, lengths = _edges_from_positions(shape, wrap, positions)
    return SurfaceSampleSet(
        n=n, positions=positions, normals=nor.reshape(m, n + 1),
        H=np.full(m, h_val), A_norm_sq=np.full(m, (n - 2) / radius**2),
        principal=principal, edges=edges, edge_lengths=lengths,
        model_tag=ModelTag("cylinder", n=n, t=t), param_shape=shape)


def _bowl_curvatures(profile_dim, dphi, ddphi, r):
    """Radial and orbital principal curvatures of a unit-scale bowl graph."""
    s2 = 1.0 + dphi**2
    k_rad = ddphi / s2**1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        k_orb = np.where(r > 0, dphi / np.where(r > 0, r, 1.0) / np.sqrt(s2),
                         1.0 / profile_dim)
    k_rad = np.where(r > 0, k_rad, 1.0 / profile_dim)
    return k_rad, k_orb


def sample_bowl(n, kappa=1.0, grid=None):
    """Bowl^n in R^{n+1}: graph over coords {0..n-2, n}, height along n-1."""
    grid = grid or BowlGrid()
    m = n  # hypersurface dimension = profile dimension
    dense = solve_bowl_dense(m, grid.r_max * kappa * 1.05)
    if len(grid.sphere_res) == m - 1:
        sph_res = grid.sphere_res
    elif m - 1 == 1:
        sph_res = (grid.sphere_res[-1],)
    else:
        sph_res = (8,) * (m - 2) + (16,)
    sphere = sphere_grid(m - 1, sph_res)
    r = np.linspace(0.0, grid.r_max, grid.n_r)
    phi, dphi = dense(kappa * r)
    phi = phi / kappa
    ddphi = (1.0 - (m - 1) * dphi / np.where(kappa * r > 0, kappa * r, 1.0)) \
        * (1.0 + dphi**2)
    ddphi[r == 0] = 1.0 / m

    npts = grid.n_r * sphere.size
    # graph domain = block coords 0..n-2 plus coord n; height along n-1
    pos = np.zeros((grid.n_r, sphere.size, n + 1))
    pos[:, :, :n - 1] = r[:, None, None] * sphere.points[None, :, :n - 1]
    pos[:, :, n] = r[:, None] * sphere.points[None, :, n - 1]
    pos[:, :, n - 1] = phi[:, None]
    s = np.sqrt(1.0 + dphi**2)
    nor = np.zeros_like(pos)
    nor[:, :, :n - 1] = -(dphi / s)[:, None, None] * sphere.points[None, :, :n - 1]
    nor[:, :, n] = -(dphi / s)[:, None] * sphere.points[None, :, n - 1]
    nor[:, :, n - 1] = (1.0 / s)[:, None]

    k_rad, k_orb = _bowl_curvatures(m, dphi, ddphi, kappa * r)
    principal = np.zeros((grid.n_r, sphere.size, n))
    principal[:, :, 0] = (kappa * k_rad)[:, None]
    principal[:, :, 1:] = (kappa * k_orb)[:, None, None]
    principal = np.sort(principal.reshape(npts, n), axis=1)
    H = kappa * (k_rad + (m - 1) * k_orb)
    A2 = kappa**2 * (k_rad**2 + (m - 1) * k_orb**2)

    shape = (grid.n_r,) + sphere.shape
    positions = pos.reshape(npts, n + 1)
    wrap = (len(shape) - 1,)
    edges, lengths = _edges_from_positions(shape, wrap, positions)
    return SurfaceSampleSet(
        n=n, positions=positions, normals=nor.reshape(npts, n + 1),
        H=np.repeat(H, sphere.size), A_norm_sq=np.repeat(A2, sphere.size),
        principal=principal, edges=edges, edge_lengths=lengths,
        model_tag=ModelTag("bowl", n=n, kappa=kappa), param_shape=shape)


def sample_bowl_x_r(n, kappa=1.0, grid=None, sphere=None):
    """Bowl^{n-1} x R in R^{n+1}; bowl graph over coords 0..n-2, split coord n."""
    grid = grid or BowlGrid()
    m = n - 1  # bowl factor dimension; profile ODE coefficient m-1
    dense = solve_bowl_dense(m, grid.r_max * kappa * 1.05)
    if sphere is None:
        res = grid.sphere_res if m - 1 == 2 else (grid.sphere_res[-1],)
        sphere = sphere_grid(m - 1, res)
    r = np.linspace(0.0, grid.r_max, grid.n_r)
    phi, dphi = dense(kappa * r)
    phi = phi / kappa
    ddphi = (1.0 - (m - 1) * dphi / np.where(kappa * r > 0, kappa * r, 1.0)) \
        * (1.0 + dphi**2)
    ddphi[r == 0] = 1.0 / m
    y = np.linspace(-grid.z_half, grid.z_half, grid.nz)

    npts = grid.n_r * sphere.size * grid.nz
    pos = np.zeros((grid.n_r, sphere.size, grid.nz, n + 1))
    pos[:, :, :, :n - 1] = (r[:, None, None, None]
                            * sphere.points[None, :, None, :])
    pos[:, :, :, n - 1] = phi[:, None, None]
    pos[:, :, :, n] = y[None, None, :]
    s = np.sqrt(1.0 + dphi**2)
    nor = np.zeros_like(pos)
    nor[:, :, :, :n - 1] = -(dphi / s)[:, None, None, None] \
        * sphere.points[None, :, None, :]
    nor[:, :, :, n - 1] = (1.0 / s)[:, None, None]

    k_rad, k_orb = _bowl_curvatures(m, dphi, ddphi, kappa * r)
    principal = np.zeros((grid.n_r, n))
    principal[:, 0] = 0.0
    principal[:, 1] = kappa * k_rad
    principal[:, 2:] = kappa * k_orb[:, None]
    principal = np.sort(principal, axis=1)
    H = kappa * (k_rad + (m - 1) * k_orb)
    A2 = kappa**2 * (k_rad**2 + (m - 1) * k_orb**2)

    rep = sphere.size * grid.nz
    shape = (grid.n_r,) + sphere.shape + (grid.nz,)
    positions = pos.reshape(npts, n + 1)
    wrap = (len(shape) - 2,) if m - 1 >= 2 else (1,)
    edges, lengths = _edges_from_positions(shape, wrap, positions)
    return SurfaceSampleSet(
        n=n, positions=positions, normals=nor.reshape(npts, n + 1),
        H=np.repeat(H, rep), A_norm_sq=np.repeat(A2, rep),
        principal=np.repeat(principal, rep, axis=0),
        edges=edges, edge_lengths=lengths,
        model_tag=ModelTag("bowl_x_r", n=n, kappa=kappa), param_shape=shape)


def sample_model(tag, grid=None, t=None):
    """Dispatch on the model tag."""
    if tag.kind == "cylinder":
        return sample_cylinder(tag.n, t if t is not None else tag.t, grid)
    if tag.kind == "bowl":
        return sample_bowl(tag.n, tag.kappa, grid)
    if tag.kind == "bowl_x_r":
        return sample_bowl_x_r(tag.n, tag.kappa, grid)
    raise PreconditionError(f"unsupported model kind {tag.kind!r}")


# ---------------------------------------------------------------------------
# flows


class ShrinkingCylinderFlow:
    """Family S^{n-2}_{sqrt(-2(n-2)t)} x R^2 for t < 0, fixed parameter grid."""

    def __init__(self, n, grid=None, sphere=None):
        self.n = n
        self.grid = grid or CylinderGrid()
        res = self.grid.sphere_res if n == 4 else (self.grid.sphere_res[-1],)
        self.sphere = sphere if sphere is not None else sphere_grid(n - 2, res)

    def radius(self, t):
        return cylinder_radius(self.n, t)

    def mean_curvature(self, t):
        return (self.n - 2) / self.radius(t)

    def samples(self, t):
        return sample_cylinder(self.n, t, self.grid, sphere=self.sphere)

    def context(self, t):
        n = self.n
        omega = np.zeros(n + 1)
        omega[n - 1] = 1.0
        return FlowContext(omega=omega, tip=np.zeros(n + 1),
                           axis_direction=None, kappa=np.nan, t=t)

    def t_valid(self, t):
        return t < 0


class TranslatingBowlFlow:
    """Translating Bowl^n or Bowl^{n-1} x R; M_t = M_0 + t * omega."""

    def __init__(self, n, kappa=1.0, cross_r=True, grid=None):
        self.n = n
        self.kappa = kappa
        self.cross_r = cross_r
        self.grid = grid or BowlGrid()
        self.base = (sample_bowl_x_r(n, kappa, self.grid) if cross_r
                     else sample_bowl(n, kappa, self.grid))
        m = (n - 1) if cross_r else n
        self.profile_dim = m
        self.dense_profile = solve_bowl_dense(m, self.grid.r_max * kappa * 1.1)

    @property
    def omega(self):
        w = np.zeros(self.n + 1)
        w[self.n - 1] = 1.0
        return w

    def samples(self, t):
        return self.base.transformed(shift=t * self.omega)

    def context(self, t):
        axis = np.zeros(self.n + 1)
        axis[self.n] = 1.0
        return FlowContext(omega=self.omega, tip=t * self.omega,
                           axis_direction=axis if self.cross_r else None,
                           kappa=self.kappa, t=t)

    def height(self, positions, t):
        """h(x, t) = <x, omega> - t."""
        return positions @ self.omega - t

    def tip_trajectory(self, t):
        return t * self.omega

    def t_valid(self, t):
        return True


def translator_residual(samples, omega):
    """sup over samples of |H - <omega, nu>|."""
    if samples.size == 0:
        raise PreconditionError("empty sample set")
    return float(np.max(np.abs(samples.H - samples.normals @ omega)))


@dataclass
class SpaceTimeNeighborhood:
    """P-hat(xbar, tbar, L, T): geodesic LH^-1 ball over a T H^-2 time slab."""
    times: np.ndarray
    sets: list
    center_index: int
    radius: float
    H_center: float

    def all_samples(self):
        return self.sets

    @property
    def size(self):
        return sum(s.size for s in self.sets)


def parabolic_neighborhood(flow, center_index, tbar, L, T, num_times=5):
    """Restrict a model flow to the parabolic neighborhood of (xbar, tbar)."""
    base = flow.samples(tbar)
    h0 = float(base.H[center_index])
    if h0 <= 0:
        raise PreconditionError("H(xbar, tbar) must be positive")
    t_lo = tbar - T / h0**2
    if not (flow.t_valid(t_lo) and flow.t_valid(tbar)):
        raise RangeError(f"time window [{t_lo}, {tbar}] outside flow range")
    radius = L / h0
    dist = base.geodesic_distances([center_index])[0]
    mask = dist <= radius * (1.0 + 1e-12)
    mask[center_index] = True
    times = np.linspace(t_lo, tbar, num_times)
    sets = [flow.samples(t).restrict(mask) for t in times]
    return SpaceTimeNeighborhood(times=times, sets=sets,
                                 center_index=int(mask[:center_index].sum()),
                                 radius=radius, H_center=h0)


def discrete_c2_distance(values_a, values_b, spacings):
    """Closeness in a discrete C^2 norm: values, first and second differences.

    Stands in for smooth-norm closeness wherever the construction needs a
    quantitative proximity measure; both fields must share a uniform grid.
    """
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    if a.shape != b.shape:
        raise PreconditionError("fields must share a grid")
    d = a - b
    out = np.max(np.abs(d))
    for ax, h in enumerate(spacings):
        g = np.diff(d, axis=ax) / h
        out = max(out, np.abs(g).max() if g.size else 0.0)
        g2 = np.diff(d, n=2, axis=ax) / h**2
        out = max(out, np.abs(g2).max() if g2.size else 0.0)
    return float(out)
