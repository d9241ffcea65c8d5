"""Per-mode evolution of normal Jacobi fields on the shrinking cylinder.

On S^{n-2} x R^2 with radius sqrt(-2(n-2)t) the linearized flow equation

    u_t = u_{z1 z1} + u_{z2 z2} + Lap_{S} u / (-2(n-2)t) + u / (-2t)

decouples into spherical modes: v_m (coefficient against Y_m) satisfies
v_t = Lap_z v + (n-2-lambda_m) v / (-2(n-2)t), and the gauge transform
vhat_m = v_m (-t)^{(n-2-lambda_m)/(2(n-2))} satisfies the plain 2D heat
equation.  Crank-Nicolson steps on the square are solved exactly in the
discrete sine basis (the DST diagonalizes the Dirichlet Laplacian), with
time-dependent reaction coefficients frozen at the half-step midpoint.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn, idstn

from .errors import PreconditionError, ResolutionError
from .sphere import harmonic_transform, inverse_transform, multiplicity

# ---------------------------------------------------------------------------
# Crank-Nicolson on the square with Dirichlet data


class CrankNicolsonSquare:
    """Heat/reaction stepper on [-L, L]^2 with M intervals per side."""

    def __init__(self, L, M):
        self.L = float(L)
        self.M = int(M)
        self.h = 2.0 * L / M
        self.nodes = np.linspace(-L, L, M + 1)
        i = np.arange(1, M)
        lam1 = -(4.0 / self.h**2) * np.sin(i * np.pi / (2 * M)) ** 2
        self.eig = lam1[:, None] + lam1[None, :]

    def laplacian(self, u):
        """Five-point Laplacian of the interior, using boundary values in u."""
        return (u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:]
                - 4.0 * u[1:-1, 1:-1]) / self.h**2

    def _boundary_coupling(self, u):
        b = np.zeros((self.M - 1, self.M - 1))
        b[0, :] += u[0, 1:-1] / self.h**2
        b[-1, :] += u[-1, 1:-1] / self.h**2
        b[:, 0] += u[1:-1, 0] / self.h**2
        b[:, -1] += u[1:-1, -1] / self.h**2
        return b

    def step(self, u, dt, boundary_new, reaction=0.0):
        """One CN step; boundary_new fills the edges of the returned array."""
        return _cn_step(self, u, dt, boundary_new, reaction)

    def max_stable_positive_dt(self):
        """dt below which the CN update matrix is nonnegativity-preserving."""
        return self.h**2 / 4.0


def gauge_exponent(n, lam):
    """Exponent of (-t) mapping v_m to the heat-gauge field vhat_m."""
    return (n - 2.0 - lam) / (2.0 * (n - 2.0))


@dataclass
class ModeState:
    """Mode coefficient field and its heat-gauge transform at one time."""

    m: int
    lam: float
    n: int
    v: np.ndarray
    t: float

    @property
    def vhat(self):
        return self.v * (-self.t) ** gauge_exponent(self.n, self.lam)

    def validate(self):
        p = gauge_exponent(self.n, self.lam)
        mask = self.v != 0
        if np.any(mask):
            ratio = self.vhat[mask] / self.v[mask]
            assert np.allclose(ratio, (-self.t) ** p, rtol=1e-12)
        return True


def time_steps(t0, t1, eta, dt_max=np.inf):
    """Geometric schedule dt ~ eta * (-t) from t0 up to t1 < 0."""
    ts = [t0]
    t = t0
    while t < t1 - 1e-13:
        dt = min(eta * (-t), dt_max, t1 - t)
        t += dt
        ts.append(t)
    return np.array(ts)


def evolve_mode(n, lam, L, M, t0, t1, initial, boundary, route="gauge",
                eta=0.02, dt_max=np.inf, record=None):
    """Evolve one spherical mode on Omega_L x [t0, t1], t1 < 0.

    initial: array (M+1, M+1) of v_m at t0 (boundary rows included), or scalar.
    boundary: callable t -> scalar/edge arrays giving v_m on the boundary.
    route: "gauge" evolves vhat by the plain heat equation and transforms
    back; "direct" steps the mode equation with the reaction coefficient
    frozen at the midpoint of each step.  Both are second order.
    record: optional callback record(t, v_full_array).
    """
    if not (t0 < t1 < 0):
        raise PreconditionError("need t0 < t1 < 0")
    solver = CrankNicolsonSquare(L, M)
    p = gauge_exponent(n, lam)
    u = np.full((M + 1, M + 1), 0.0) + (initial if np.ndim(initial) else
                                        float(initial))
    g0 = boundary(t0)
    _fill_edges(u, g0)
    ts = time_steps(t0, t1, eta, dt_max)
    if route == "gauge":
        w = u * (-t0) ** p
        for ta, tb in zip(ts[:-1], ts[1:]):
            gb = np.asarray(boundary(tb), dtype=float) * (-tb) ** p
            w = _cn_step(solver, w, tb - ta, gb)
            if record is not None:
                record(tb, w * (-tb) ** (-p))
        return w * (-t1) ** (-p)
    if route == "direct":
        for ta, tb in zip(ts[:-1], ts[1:]):
            tm = 0.5 * (ta + tb)
            c = p / (-tm)
            gb = np.asarray(boundary(tb), dtype=float)
            u = _cn_step(solver, u, tb - ta, gb, reaction=c)
            if record is not None:
                record(tb, u)
        return u
    raise ValueError(f"unknown route {route!r}")


def _fill_edges(u, g):
    g = np.asarray(g, dtype=float)
    if g.ndim == 0:
        u[0, :] = u[-1, :] = u[:, 0] = u[:, -1] = float(g)
    else:
        u[0, :], u[-1, :], u[:, 0], u[:, -1] = g[0], g[1], g[2], g[3]


def _cn_step(solver, u, dt, g_new, reaction=0.0):
    ui = u[1:-1, 1:-1]
    rhs = ui + 0.5 * dt * (solver.laplacian(u) + reaction * ui)
    nxt = u.copy()
    _fill_edges(nxt, g_new)
    rhs = rhs + 0.5 * dt * solver._boundary_coupling(nxt)
    coef = dstn(rhs, type=1)
    coef /= 1.0 - 0.5 * dt * (solver.eig + reaction)
    nxt[1:-1, 1:-1] = idstn(coef, type=1)
    return nxt


def evolve_jacobi_cylinder(n, spec, values0, L, M, t0, t1, boundary_modes,
                           eta=0.02, l_max=None):
    """Evolve full initial data u0 on S^{n-2} x Omega_L by mode reduction.

    values0: (nodes, M+1, M+1) physical values at t0 (band-limited to the
    spectrum); boundary_modes: callable (m, t) -> boundary value of mode m.
    Returns values at t1 and the list of final ModeStates.
    """
    coeffs0 = np.moveaxis(
        harmonic_transform(np.moveaxis(values0, 0, -1), spec), -1, 0)
    if l_max is not None:
        keep = spec.levels <= l_max
    else:
        keep = np.ones(spec.n_modes, dtype=bool)
    # require the top level to be resolved on the z grid
    finals = []
    for m in range(spec.n_modes):
        inactive = (not np.any(np.abs(coeffs0[m]) > 0)
                    and _boundary_is_zero(boundary_modes, m, t0, t1))
        if not keep[m] or inactive:
            finals.append(ModeState(m=m, lam=float(spec.eigenvalues[m]), n=n,
                                    v=np.zeros((M + 1, M + 1)), t=t1))
            continue
        v = evolve_mode(n, float(spec.eigenvalues[m]), L, M, t0, t1,
                        coeffs0[m], lambda t, m=m: boundary_modes(m, t),
                        eta=eta)
        finals.append(ModeState(m=m, lam=float(spec.eigenvalues[m]), n=n,
                                v=v, t=t1))
    stack = np.stack([f.v for f in finals])
    out = np.einsum("mxy,mn->nxy", stack, spec.Y)
    return out, finals


def _boundary_is_zero(boundary_modes, m, t0, t1):
    for t in (t0, 0.5 * (t0 + t1), t1):
        if np.any(np.asarray(boundary_modes(m, t)) != 0):
            return False
    return True


# ---------------------------------------------------------------------------
# decay measurements


def case1_envelope(n, lam):
    """Worst-case gauge-field boundary envelope (-t)^{1 - lam/(2(n-2))}."""
    expo = 1.0 - lam / (2.0 * (n - 2.0))
    return lambda t: (-t) ** expo


def fit_power(x, y):
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    a = np.vstack([lx, np.ones_like(lx)]).T
    sol, *_ = np.linalg.lstsq(a, ly, rcond=None)
    return float(sol[0])


def evolve_envelope_mode(n, lam, L0, M=128, eta=0.04, eps=1.0,
                         boundary_modulation=None, fit_window=(-100.0, -1.0),
                         inner_fraction=0.01):
    """Evolve one mode in gauge with Case-1 envelope boundary data.

    Domain Omega_{L0/4} x [-L0^2/16, -1].  Records the closed-domain
    amplitude sup|vhat| and the inner-region sup over
    Omega_{L0 * inner_fraction} x [-(L0 * inner_fraction)^2, -1].
    Returns a dict with time series and fitted time exponent.
    """
    L = L0 / 4.0
    t0, t1 = -L0**2 / 16.0, -1.0
    solver = CrankNicolsonSquare(L, M)
    env = case1_envelope(n, lam)
    if boundary_modulation is None:
        def bvals(t):
            return eps * env(t)
    else:
        xs = solver.nodes
        mods = [boundary_modulation(np.full_like(xs, -L), xs),
                boundary_modulation(np.full_like(xs, L), xs),
                boundary_modulation(xs, np.full_like(xs, -L)),
                boundary_modulation(xs, np.full_like(xs, L))]

        def bvals(t):
            return [eps * env(t) * m for m in mods]

    w = np.full((M + 1, M + 1), eps * env(t0))
    _fill_edges(w, bvals(t0))
    inner_hw = inner_fraction * L0
    msk = np.abs(solver.nodes) <= inner_hw + 1e-12
    inner_t0 = -(inner_hw**2)
    ts, amps = [], []
    sup_inner = 0.0
    t = t0
    while t < t1 - 1e-12:
        dt = min(eta * (-t), t1 - t)
        w = _cn_step(solver, w, dt, bvals(t + dt))
        t += dt
        if t >= fit_window[0]:
            ts.append(t)
            amps.append(np.abs(w).max())
        if t >= inner_t0:
            sup_inner = max(sup_inner, float(np.abs(w[np.ix_(msk, msk)]).max()))
    ts = np.array(ts)
    amps = np.array(amps)
    sel = ts <= fit_window[1]
    expo = fit_power(-ts[sel], amps[sel])
    return {
        "lam": lam, "L0": L0, "times": ts, "amplitude": amps,
        "fitted_exponent": expo,
        "predicted_exponent": 1.0 - lam / (2.0 * (n - 2.0)),
        "sup_inner": sup_inner, "final": w,
    }


def mode_decay_bound(n, L0_values, eps=1.0, eps0=0.0, l_values=(2, 3, 4, 5),
                     M=128, eta=0.04):
    """Per-mode sups and the aggregate over m >= n across an L0 sweep.

    Boundary data is the synthesized worst-case Case-1 envelope per level;
    the aggregate sums per-level inner-region sups weighted by the level
    multiplicities.  Returns per-run records and the fitted L0 power of the
    aggregate; raises if the sweep is too short to fit.
    """
    if len(L0_values) < 2:
        raise PreconditionError("need at least two L0 values to fit a power")
    runs = []
    aggregates = []
    for L0 in L0_values:
        agg = 0.0
        for l in l_values:
            lam = l * (l + n - 3)
            rec = evolve_envelope_mode(n, lam, L0, M=M, eta=eta, eps=eps)
            rec["l"] = l
            rec["N_l"] = multiplicity(n, l)
            runs.append(rec)
            agg += rec["N_l"] * rec["sup_inner"]
        aggregates.append(agg)
    power = fit_power(L0_values, aggregates)
    return {"runs": runs, "L0_values": list(L0_values),
            "aggregates": aggregates, "aggregate_L0_power": power}


def case2_affine_extract(v, nodes, region_mask=None):
    """Best-fit affine A + B z1 + C z2 and the sup of second differences.

    v: (M+1, M+1) field on the tensor grid of ``nodes``.  Returns dict with
    coefficients, the sup-norm fit residual and max |d2 v/dz_i dz_j|.
    """
    z1, z2 = np.meshgrid(nodes, nodes, indexing="ij")
    if region_mask is None:
        region_mask = np.ones_like(v, dtype=bool)
    a = np.stack([np.ones(region_mask.sum()), z1[region_mask],
                  z2[region_mask]], axis=1)
    sol, *_ = np.linalg.lstsq(a, v[region_mask], rcond=None)
    resid = np.abs(v[region_mask] - a @ sol).max()
    h = nodes[1] - nodes[0]
    d11 = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / h**2
    d22 = (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / h**2
    d12 = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h**2)
    inner = region_mask[1:-1, 1:-1]
    second = max(np.abs(d[inner]).max() if inner.any() else 0.0
                 for d in (d11, d22, d12))
    return {"A": float(sol[0]), "B": float(sol[1]), "C": float(sol[2]),
            "residual_sup": float(resid), "second_diff_sup": float(second)}


# ---------------------------------------------------------------------------
# radial graphs over the cylinder and the mode-0 identity


@dataclass
class RadialGraph:
    """Graph r(Theta, z1, z2) over the sphere-grid x z-grid product."""

    spec: object              # SphereSpectrum
    z1: np.ndarray
    z2: np.ndarray
    r: np.ndarray             # (nodes, nz1, nz2), r > 0

    def __post_init__(self):
        if np.any(self.r <= 0):
            raise PreconditionError("radius function must be positive")

    @property
    def n(self):
        return self.spec.n

    def coefficients(self):
        """Harmonic coefficients of r at each z node: (n_modes, nz1, nz2)."""
        return np.moveaxis(
            harmonic_transform(np.moveaxis(self.r, 0, -1), self.spec), -1, 0)

    def F(self):
        """F_i(z1, z2) = int r Y_i, i = 1..n-1: shape (n-1, nz1, nz2)."""
        return self.coefficients()[1:self.n]

    def F_stencil(self):
        """F_i at (0,0), (1,0), (-1,0), (0,1), (0,-1); grid must contain them."""
        f = self.F()
        pts = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
        out = {}
        for (a, b) in pts:
            i = int(np.argmin(np.abs(self.z1 - a)))
            j = int(np.argmin(np.abs(self.z2 - b)))
            if abs(self.z1[i] - a) > 1e-9 or abs(self.z2[j] - b) > 1e-9:
                raise PreconditionError(
                    "z grids must contain the unit tuning stencil")
            out[(a, b)] = f[:, i, j]
        return out

    def surface_gradients(self):
        """(grad_S r, dr/dz1, dr/dz2) on the grid."""
        c = self.coefficients()
        grad_s = np.einsum("mij,mnd->nijd", c, self.spec.grad_Y)
        dz1 = np.gradient(self.r, self.z1, axis=1)
        dz2 = np.gradient(self.r, self.z2, axis=2)
        return grad_s, dz1, dz2

    def to_samples(self, H_value):
        """Sample set (positions, inward normals, model H) of the graph."""
        from .geometry import ModelTag, SurfaceSampleSet
        n = self.n
        pts = self.spec.points                       # (nodes, n-1)
        nodes, nz1, nz2 = self.r.shape
        grad_s, dz1, dz2 = self.surface_gradients()
        pos = np.zeros((nodes, nz1, nz2, n + 1))
        pos[..., :n - 1] = self.r[..., None] * pts[:, None, None, :]
        pos[..., n - 1] = self.z1[None, :, None]
        pos[..., n] = self.z2[None, None, :]
        raw = np.zeros_like(pos)
        raw[..., :n - 1] = pts[:, None, None, :] \
            - grad_s / self.r[..., None]
        raw[..., n - 1] = -dz1
        raw[..., n] = -dz2
        raw = -raw                                   # inward convention
        raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
        m = nodes * nz1 * nz2
        h = float(H_value)
        principal = np.zeros((m, n))
        principal[:, 2:] = h / (n - 2)
        return SurfaceSampleSet(
            n=n, positions=pos.reshape(m, n + 1), normals=raw.reshape(m, n + 1),
            H=np.full(m, h), A_norm_sq=np.full(m, h**2 / (n - 2)),
            principal=principal, edges=np.zeros((0, 2), dtype=int),
            edge_lengths=np.zeros(0), model_tag=ModelTag("user"),
            param_shape=(nodes, nz1, nz2))


def cylinder_radial_graph(spec, z1, z2, radius, perturbation=None):
    """Radial graph of a (perturbed) cylinder; perturbation(Theta, z1, z2)."""
    nodes = spec.points.shape[0]
    r = np.full((nodes, len(z1), len(z2)), float(radius))
    if perturbation is not None:
        th = spec.points
        r = r + perturbation(th[:, None, None, :], z1[None, :, None],
                             z2[None, None, :])
    return RadialGraph(spec=spec, z1=np.asarray(z1, dtype=float),
                       z2=np.asarray(z2, dtype=float), r=r)


def mode0_check(graph, J_block, fields=None, H_value=1.0):
    """Mode-0 cancellation on a radial graph.

    Returns (a) the sup over z of |int div_S(r J Theta) dTheta| computed as
    the quadrature of <grad_S r, J Theta> (the rotation field J Theta is
    divergence-free), and (b) the sup over z of the plain mean
    |int <K, nu> dTheta| for the supplied field set.
    """
    spec = graph.spec
    n = graph.n
    jt = spec.points @ np.asarray(J_block).T          # (nodes, n-1) tangent
    grad_s, _, _ = graph.surface_gradients()
    integrand = np.einsum("nijd,nd->nij", grad_s, jt)
    div_val = np.abs(np.einsum("n,nij->ij", spec.weights, integrand))
    out = {"div_identity_sup": float(div_val.max())}
    if fields is not None:
        samples = graph.to_samples(H_value)
        vals = fields.evaluate(samples.positions)
        proj = np.einsum("amd,md->am", vals, samples.normals)
        proj = proj.reshape(fields.N, *graph.r.shape)
        means = np.einsum("n,anij->aij", spec.weights, proj)
        out["plain_mean_sup"] = float(np.abs(means).max())
    return out
