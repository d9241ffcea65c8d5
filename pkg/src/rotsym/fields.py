"""Normalized sets of rotation vector fields and symmetry-defect machinery.

A field set is K_a(x) = S J_a S^-1 (x - q) with S in O(n+1), q in R^{n+1}
and {J_a} an orthonormal basis of so(n-1) embedded in so(n+1) (trace inner
product).  The defect of a hypersurface sample set against a field set is
max_a sup |<K_a, nu>| H; the magnitude is max_a sup |K_a| H.

Fitting minimizes the smooth L^2 surrogate sum (<K_a,nu> H)^2 over (S, q)
by Gauss-Newton in the Lie algebra (S = S0 exp(Xi)), with a polar-decomposition
retraction and the gauge q perpendicular to the common kernel re-imposed on
output.  The sup-defect is only reported, never optimized directly.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm, orthogonal_procrustes, polar

from .errors import IdentifiabilityError, NonconvergenceError, PreconditionError
from .serialize import write_json

GAUGE_SV_CUTOFF = 1e-10
IDENTIFIABILITY_RATIO = 1e-8


def so_dim(n):
    return (n - 1) * (n - 2) // 2


@dataclass(frozen=True)
class SoBasis:
    """Orthonormal basis of so(n-1) inside so(n+1)."""

    n: int
    mats: np.ndarray   # (N, n+1, n+1)

    @property
    def N(self):
        return self.mats.shape[0]

    def validate(self):
        gram = np.einsum("aij,bij->ab", self.mats, self.mats)
        assert np.allclose(gram, np.eye(self.N), atol=1e-12)
        # rows/columns n-1, n (0-based) vanish
        assert np.all(self.mats[:, self.n - 1:, :] == 0)
        assert np.all(self.mats[:, :, self.n - 1:] == 0)
        assert np.allclose(self.mats, -np.transpose(self.mats, (0, 2, 1)))
        return True


def standard_so_basis(n):
    """E_{ij}-type basis: entries +-1/sqrt(2) at (i,j),(j,i) for i<j<=n-2."""
    if n < 3:
        raise ValueError("need n >= 3")
    mats = []
    for i in range(n - 1):
        for j in range(i + 1, n - 1):
            m = np.zeros((n + 1, n + 1))
            m[i, j] = 1.0 / np.sqrt(2.0)
            m[j, i] = -1.0 / np.sqrt(2.0)
            mats.append(m)
    return SoBasis(n=n, mats=np.array(mats))


@dataclass(frozen=True)
class RotationFieldSet:
    """K_a(x) = S J_a S^T (x - q)."""

    S: np.ndarray
    q: np.ndarray
    basis: SoBasis

    @property
    def n(self):
        return self.basis.n

    @property
    def N(self):
        return self.basis.N

    def generators(self):
        """Conjugated generators S J_a S^T, shape (N, d, d)."""
        return np.einsum("ij,ajk,lk->ail", self.S, self.basis.mats, self.S)

    def evaluate(self, points):
        """Field values, shape (N, M, d) for points (M, d)."""
        return np.einsum("aij,mj->ami", self.generators(),
                         np.atleast_2d(points) - self.q)

    def common_kernel(self):
        """Orthonormal basis of the common kernel of {J_a S^-1}."""
        stacked = np.concatenate(
            np.einsum("aij,kj->aik", self.basis.mats, self.S), axis=0)
        _, sv, vt = np.linalg.svd(stacked)
        rank = int(np.sum(sv > GAUGE_SV_CUTOFF * sv[0]))
        return vt[rank:].T

    def gauge_projected(self):
        """Project q off the common kernel (minimal-norm representative)."""
        ker = self.common_kernel()
        q = self.q - ker @ (ker.T @ self.q)
        return replace(self, q=q)

    def validate(self):
        d = self.S.shape[0]
        assert np.allclose(self.S @ self.S.T, np.eye(d), atol=1e-10)
        ker = self.common_kernel()
        assert np.linalg.norm(ker.T @ self.q) <= 1e-10 * max(1.0, np.linalg.norm(self.q))
        self.basis.validate()
        return True

    def split_violation(self):
        """Norm of the blocks of S mixing coords 0..n-2 with n-1, n."""
        b = self.n - 1
        return float(np.linalg.norm(self.S[:b, b:])
                     + np.linalg.norm(self.S[b:, :b]))

    def to_json(self, path):
        write_json(path, {"n": self.n, "S": self.S, "q": self.q,
                          "basis": "standard"})


def standard_fields(n, S=None, q=None):
    basis = standard_so_basis(n)
    S = np.eye(n + 1) if S is None else S
    q = np.zeros(n + 1) if q is None else np.asarray(q, dtype=float)
    return RotationFieldSet(S=S, q=q, basis=basis).gauge_projected()


def tilted_fields(n, angle, plane=(0, None), q=None):
    """Standard fields conjugated by a rotation of `angle` in a coordinate plane.

    plane defaults to (0, n-1): first block coordinate against the axis.
    """
    i, j = plane
    if j is None:
        j = n - 1
    g = np.zeros((n + 1, n + 1))
    g[i, j] = -1.0
    g[j, i] = 1.0
    return standard_fields(n, S=expm(angle * g), q=q)


@dataclass(frozen=True)
class SymmetryReport:
    defect: float
    magnitude: float
    region: str = ""

    def csv_row(self):
        return [self.region, self.defect, self.magnitude]


def symmetry_defect(fields, samples, region=""):
    """max_a sup |<K_a,nu>| H and max_a sup |K_a| H over the samples."""
    if isinstance(samples, (list, tuple)):
        reports = [symmetry_defect(fields, s) for s in samples]
        return SymmetryReport(defect=max(r.defect for r in reports),
                              magnitude=max(r.magnitude for r in reports),
                              region=region)
    vals = fields.evaluate(samples.positions)          # (N, M, d)
    proj = np.einsum("amd,md->am", vals, samples.normals)
    defect = np.max(np.abs(proj) * samples.H[None, :])
    magnitude = np.max(np.linalg.norm(vals, axis=2) * samples.H[None, :])
    return SymmetryReport(defect=float(defect), magnitude=float(magnitude),
                          region=region or samples.model_tag.label())


def _antisym_basis(d):
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d))
            m[i, j] = 1.0
            m[j, i] = -1.0
            out.append(m)
    return np.array(out)


def _stack_samples(samples):
    if isinstance(samples, (list, tuple)):
        pos = np.concatenate([s.positions for s in samples], axis=0)
        nor = np.concatenate([s.normals for s in samples], axis=0)
        h = np.concatenate([s.H for s in samples], axis=0)
        return pos, nor, h
    return samples.positions, samples.normals, samples.H


def fit_rotation_fields(samples, init, max_iter=60, tol=1e-12):
    """Local minimizer of sum (<K_a,nu> H)^2 over (S, q) by Gauss-Newton.

    Returns (fitted RotationFieldSet, SymmetryReport of the sup-defect).
    Raises IdentifiabilityError on rank deficiency beyond the structural
    gauge (basis recombination + so(2) + kernel translations) and
    NonconvergenceError (carrying the best iterate) if max_iter runs out.
    """
    pos, nor, hh = _stack_samples(samples)
    n = init.n
    d = n + 1
    basis = init.basis
    J = basis.mats
    gens = _antisym_basis(d)                 # so(n+1) directions for Xi
    n_rot = len(gens)
    structural_null = so_dim(n) + 1 + 2      # so(n-1) + so(2) + ker(q) dirs
    required_rank = n_rot + d - structural_null

    S = init.S.copy()
    q = init.q.copy()
    w = hh

    def residuals(S, q):
        gensS = np.einsum("ij,ajk,lk->ail", S, J, S)
        vals = np.einsum("aij,mj->ami", gensS, pos - q)
        return (np.einsum("amd,md->am", vals, nor) * w).ravel(), gensS

    r, gensS = residuals(S, q)
    cost = 0.5 * float(r @ r)
    best = (cost, S.copy(), q.copy())
    rms = lambda c: np.sqrt(2.0 * c / len(r))
    for _ in range(max_iter):
        if rms(cost) <= tol:
            fitted = RotationFieldSet(S=S, q=q, basis=basis).gauge_projected()
            return fitted, symmetry_defect(fitted, samples, region="fit")

        # Jacobian wrt Xi (rotation directions) and q
        cols = []
        for g in gens:
            comm = np.einsum("ij,ajk->aik", g, gensS) - np.einsum(
                "aij,jk->aik", gensS, g)
            dv = np.einsum("aij,mj->ami", comm, pos - q)
            cols.append((np.einsum("amd,md->am", dv, nor) * w).ravel())
        for c in range(d):
            dv = -gensS[:, :, c]                       # d/dq_c of K = -M e_c
            cols.append((dv @ nor.T * w).ravel())
        jac = np.stack(cols, axis=1)

        sv = np.linalg.svd(jac, compute_uv=False)
        rank = int(np.sum(sv > IDENTIFIABILITY_RATIO * sv[0]))
        if rank < required_rank:
            raise IdentifiabilityError(
                f"Gauss-Newton rank {rank} < required {required_rank} "
                "(degenerate surface)")

        step, *_ = np.linalg.lstsq(jac, -r, rcond=1e-12)
        slope = float(r @ (jac @ step))                # directional derivative
        xi = np.tensordot(step[:n_rot], gens, axes=1)
        dq = step[n_rot:]

        t, accepted = 1.0, False
        for _ in range(40):
            S_new = polar(S @ expm(t * xi))[0]
            q_new = q + t * dq
            r_new, gensS_new = residuals(S_new, q_new)
            c_new = 0.5 * float(r_new @ r_new)
            if c_new <= cost + 1e-4 * t * slope or c_new < cost:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        prev, cost = cost, c_new
        S, q, r, gensS = S_new, q_new, r_new, gensS_new
        if cost < best[0]:
            best = (cost, S.copy(), q.copy())
        if prev - cost <= 1e-8 * tol * max(1.0, prev) and rms(cost) <= 10 * tol:
            break

    if rms(best[0]) <= tol:
        fitted = RotationFieldSet(S=best[1], q=best[2],
                                  basis=basis).gauge_projected()
        return fitted, symmetry_defect(fitted, samples, region="fit")
    fitted = RotationFieldSet(S=best[1], q=best[2], basis=basis).gauge_projected()
    raise NonconvergenceError(
        f"no convergence in {max_iter} Gauss-Newton iterations",
        best=(fitted, symmetry_defect(fitted, samples, region="fit")))


def align_field_sets(k1, k2, samples, center_index, L):
    """Best orthogonal recombination omega of k2 matching k1 on a ball.

    Minimizes the least-squares mismatch over the geodesic ball of radius
    L H(center)^-1 (orthogonal Procrustes on stacked field evaluations),
    then returns (omega, exact sup residual
    max_a sup |K1_a - sum_b omega_ab K2_b| * H(center)).
    """
    if L < 1:
        raise PreconditionError("ball factor L must be >= 1")
    h0 = float(samples.H[center_index])
    dist = samples.geodesic_distances([center_index])[0]
    mask = dist <= L / h0 * (1 + 1e-12)
    mask[center_index] = True
    pts = samples.positions[mask]
    v1 = k1.evaluate(pts).reshape(k1.N, -1)
    v2 = k2.evaluate(pts).reshape(k2.N, -1)
    rot, _ = orthogonal_procrustes(v2.T, v1.T)
    omega = rot.T
    diff = v1.reshape(k1.N, len(pts), -1) - np.einsum(
        "ab,bmd->amd", omega, v2.reshape(k2.N, len(pts), -1))
    residual = float(np.max(np.linalg.norm(diff, axis=2)) * h0)
    return omega, residual


def is_eps_symmetric(flow, center_index, tbar, eps, witness=None,
                     L=None, T=None, num_times=3, max_iter=60):
    """Check eps-symmetry of a space-time point of a model flow.

    Fits a field set on the parabolic neighborhood (or checks a supplied
    witness) and requires defect <= eps and magnitude <= 5n there.
    Returns (bool, witness fields, SymmetryReport).
    """
    n = flow.n
    L = 100.0 * n**2.5 if L is None else L
    T = 100.0**2 * n**5 if T is None else T
    nbhd = parabolic_neighborhood_sets(flow, center_index, tbar, L, T,
                                       num_times)
    if witness is None:
        init = standard_fields(n)
        witness, report = fit_rotation_fields(nbhd, init, max_iter=max_iter)
    else:
        report = symmetry_defect(witness, nbhd, region="witness")
    ok = report.defect <= eps and report.magnitude <= 5.0 * n
    return ok, witness, report


def parabolic_neighborhood_sets(flow, center_index, tbar, L, T, num_times):
    from .geometry import parabolic_neighborhood
    return parabolic_neighborhood(flow, center_index, tbar, L, T,
                                  num_times=num_times).sets
