"""Quasi-static boundary operators and their spectral decomposition.

Single-layer and adjoint-double-layer (Neumann-Poincare) operators are
discretized by centroid-collocation Nystrom on flat panels.  The NP
operator is diagonalized in the energy inner product induced by the
negative single layer, restricted to mean-zero densities; each retained
eigendensity also carries the first-order moment of the surface normal
against it, which drives every dipole-level quantity downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .mesh import TriMesh


class SpectralError(RuntimeError):
    """Raised when operator assembly or the eigensolve cannot proceed."""


def assemble_single_layer(mesh: TriMesh) -> np.ndarray:
    """Single-layer operator matrix (density values -> boundary values).

    The kernel is -1/(4*pi*|x-y|); entry (i, j) carries panel j's area as
    the quadrature weight, and the self term is the analytic potential of
    a flat disk of equal area evaluated at its center.  The matrix is
    self-adjoint in the panel-area inner product: diag(areas) @ S is
    symmetric exactly.
    """
    c = mesh.centroids
    w = mesh.areas
    d = c[:, None, :] - c[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    n = len(w)
    off = ~np.eye(n, dtype=bool)
    if np.min(r[off]) < 1e-12:
        i, j = divmod(int(np.argmin(np.where(off, r, np.inf))), n)
        raise SpectralError(f"coincident panel centroids {i} and {j}")
    S = np.zeros((n, n))
    S[off] = -(w[None, :] * np.ones((n, 1)))[off] / (4.0 * np.pi * r[off])
    # disk of equal area: potential at center is radius/2 (with the sign
    # convention of the kernel above)
    S[np.diag_indices(n)] = -0.5 * np.sqrt(w / np.pi)
    return S


def assemble_np(mesh: TriMesh) -> np.ndarray:
    """Adjoint-double-layer (NP) operator matrix on density values.

    Off-diagonal entries are area_j * (c_i - c_j) . nu_i / (4 pi r^3).
    The diagonal is fixed by the Gauss identity: the area-weighted
    adjoint applied to the constant density must return 1/2, which pins
    each column's self term.
    """
    c = mesh.centroids
    w = mesh.areas
    nu = mesh.normals
    n = len(w)
    d = c[:, None, :] - c[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    num = np.einsum("ijk,ik->ij", d, nu)  # (c_i - c_j) . nu_i
    K = np.zeros((n, n))
    off = ~np.eye(n, dtype=bool)
    K[off] = (w[None, :] * np.ones((n, 1)))[off] * num[off] / (4.0 * np.pi * r[off] ** 3)
    # Column condition: sum_j w_j K[j, i] = w_i / 2  for every i.
    colsum = np.einsum("j,ji->i", w, np.where(off, K, 0.0))
    K[np.diag_indices(n)] = 0.5 - colsum / w
    return K


@dataclass(frozen=True)
class ModeCluster:
    """Group of NP modes with nearly equal eigenvalue."""

    eigenvalue: float
    indices: tuple[int, ...]
    moment_tensor: np.ndarray  # (3, 3), sum of m m^T over the cluster
    c_n: float                 # isotropic part, trace/3


@dataclass(frozen=True)
class NPSpectrum:
    """Retained NP eigenpairs on the mean-zero subspace.

    ``densities`` are orthonormal in the energy inner product
    <phi, psi> = -integral(S[psi] * phi); ``moments`` are the normal
    moments taken against the same eigendensities rescaled to unit
    surface-L2 norm, which reproduces the closed-form unit-ball values.
    """

    eigenvalues: np.ndarray          # (n_modes,)
    densities: np.ndarray            # (n_panels, n_modes)
    moments: np.ndarray              # (n_modes, 3)
    residuals: np.ndarray            # (n_modes,)
    gram_certificate: float
    dropped_eigenvalue: float
    cluster_tol: float = 1e-3
    _clusters: tuple[ModeCluster, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_clusters", _group_clusters(
            self.eigenvalues, self.moments, self.cluster_tol))

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    def clusters(self) -> tuple[ModeCluster, ...]:
        """Eigenvalue clusters ordered by isotropic moment strength."""
        return self._clusters

    def to_json_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "moments": [
                [[float(np.real(m)), float(np.imag(m))] for m in row]
                for row in self.moments
            ],
            "gram_certificate": float(self.gram_certificate),
            "residuals": [float(v) for v in self.residuals],
            "dropped_eigenvalue": float(self.dropped_eigenvalue),
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def spectrum_from_json(path: str) -> NPSpectrum:
    """Rebuild a spectrum (without densities) from its JSON export."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    moments = np.array(
        [[complex(re, im) for re, im in row] for row in data["moments"]])
    if np.allclose(moments.imag, 0.0):
        moments = moments.real
    return NPSpectrum(
        eigenvalues=np.array(data["eigenvalues"], dtype=float),
        densities=np.zeros((0, len(data["eigenvalues"]))),
        moments=moments,
        residuals=np.array(data["residuals"], dtype=float),
        gram_certificate=float(data["gram_certificate"]),
        dropped_eigenvalue=float(data["dropped_eigenvalue"]),
    )


def unit_ball_spectrum(max_degree: int = 2) -> NPSpectrum:
    """Exact unit-ball spectrum (closed forms, no discretization).

    Degree-n modes have eigenvalue 1/(2(2n+1)); only the three degree-1
    modes carry a normal moment, of squared magnitude 4*pi/27 along each
    axis.
    """
    eigs, moms = [], []
    for n in range(1, max_degree + 1):
        lam = 1.0 / (2.0 * (2 * n + 1))
        for l in range(2 * n + 1):
            eigs.append(lam)
            if n == 1:
                m = np.zeros(3)
                m[l] = np.sqrt(4.0 * np.pi / 27.0)
                moms.append(m)
            else:
                moms.append(np.zeros(3))
    return NPSpectrum(
        eigenvalues=np.array(eigs),
        densities=np.zeros((0, len(eigs))),
        moments=np.array(moms),
        residuals=np.zeros(len(eigs)),
        gram_certificate=0.0,
        dropped_eigenvalue=0.5,
    )


def _group_clusters(eigenvalues, moments, tol) -> tuple[ModeCluster, ...]:
    order = np.argsort(eigenvalues)[::-1]
    clusters = []
    current = [order[0]] if len(order) else []
    for idx in order[1:]:
        if abs(eigenvalues[idx] - eigenvalues[current[-1]]) <= tol:
            current.append(idx)
        else:
            clusters.append(current)
            current = [idx]
    if current:
        clusters.append(current)
    out = []
    for idxs in clusters:
        mm = np.zeros((3, 3), dtype=complex)
        for i in idxs:
            m = moments[i]
            mm += np.outer(m, np.conj(m))
        if np.allclose(mm.imag, 0.0):
            mm = mm.real
        out.append(ModeCluster(
            eigenvalue=float(np.mean([eigenvalues[i] for i in idxs])),
            indices=tuple(int(i) for i in idxs),
            moment_tensor=mm,
            c_n=float(np.real(np.trace(mm)) / 3.0),
        ))
    out.sort(key=lambda cl: (-cl.c_n, -cl.eigenvalue))
    return tuple(out)


def _householder_vector(w: np.ndarray) -> np.ndarray:
    """Unit vector v of the reflector P = I - 2vv^T with P e_1 = +/- w/|w|.

    Columns 2..n of P form an orthonormal basis of the hyperplane
    orthogonal to w, used to restrict to mean-zero densities.  P is
    never materialized; it is applied through rank-1 updates.
    """
    u = w / np.linalg.norm(w)
    v = u.copy()
    v[0] += 1.0 if u[0] >= 0 else -1.0
    return v / np.linalg.norm(v)


def _reflect_sym(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """P M P for the reflector P = I - 2vv^T and symmetric M, in O(n^2)."""
    Mv = M @ v
    vMv = float(v @ Mv)
    out = M - 2.0 * np.outer(v, Mv) - 2.0 * np.outer(Mv, v) + 4.0 * vMv * np.outer(v, v)
    return out


def spectral_decomposition(
    S: np.ndarray,
    K: np.ndarray,
    mesh: TriMesh,
    mode_count: int = 8,
    cluster_tol: float = 1e-3,
) -> NPSpectrum:
    """Diagonalize the NP operator in the single-layer energy metric.

    The generalized symmetric pencil uses the Gram matrix
    G = -diag(areas) @ S (symmetric positive definite here) and the
    symmetrized form (G K + K^T G) / 2, restricted to the subspace of
    densities with zero area-weighted mean.  Modes are sorted by normal
    moment magnitude (descending), then eigenvalue (descending), and the
    leading ``mode_count`` are retained.
    """
    n = len(mesh.areas)
    if not 1 <= mode_count <= n - 1:
        raise SpectralError(f"mode_count must be in [1, {n - 1}], got {mode_count}")
    w = mesh.areas
    G = -(w[:, None] * S)
    G = 0.5 * (G + G.T)
    A = 0.5 * (G @ K + K.T @ G)

    v = _householder_vector(w)
    Gp = _reflect_sym(G, v)[1:, 1:]
    Ap = _reflect_sym(A, v)[1:, 1:]
    try:
        scipy.linalg.cholesky(Gp)
    except scipy.linalg.LinAlgError as exc:
        raise SpectralError(
            "energy Gram matrix is not positive definite on the mean-zero "
            "subspace; the discretization is too ill-conditioned") from exc
    lam, Y = scipy.linalg.eigh(Ap, Gp)
    Yfull = np.vstack([np.zeros((1, Y.shape[1])), Y])
    Phi = Yfull - 2.0 * np.outer(v, v @ Yfull)   # G-orthonormal, exactly mean-zero

    # normal moments against unit-L2 eigendensities
    S_phi = S @ Phi
    mom = -np.einsum("i,ic,im->mc", w, mesh.normals, S_phi)   # (n-1, 3)
    l2 = np.sqrt(np.einsum("im,i,im->m", Phi, w, Phi))
    mom = mom / l2[:, None]

    # canonical sign: largest-|entry| component of each density positive
    lead = np.argmax(np.abs(Phi), axis=0)
    signs = np.sign(Phi[lead, np.arange(Phi.shape[1])])
    signs[signs == 0] = 1.0
    Phi *= signs
    mom *= signs[:, None]

    # Sort by moment magnitude (descending), then eigenvalue (descending).
    # Moments below 1% of the largest are discretization noise and rank as
    # zero, so the classic zero-moment clusters keep their eigenvalue order.
    mnorm = np.linalg.norm(mom, axis=1)
    qnorm = np.where(mnorm >= 0.01 * mnorm.max(), mnorm, 0.0)
    order = np.lexsort((-lam, -qnorm))[:mode_count]

    lam_r = lam[order]
    Phi_r = Phi[:, order]
    mom_r = mom[order]
    resid = np.empty(mode_count)
    for k in range(mode_count):
        r = K @ Phi_r[:, k] - lam_r[k] * Phi_r[:, k]
        resid[k] = np.sqrt(max(float(r @ G @ r), 0.0))
    gram = Phi_r.T @ G @ Phi_r
    cert = float(np.max(np.abs(gram - np.eye(mode_count))))

    # The eigenvalue near 1/2 lives outside the mean-zero subspace
    # (equilibrium density); report its Rayleigh quotient.
    try:
        psi_eq = np.linalg.solve(S, -np.ones(n))
        dropped = float((psi_eq @ A @ psi_eq) / (psi_eq @ G @ psi_eq))
    except np.linalg.LinAlgError:
        dropped = float("nan")

    return NPSpectrum(
        eigenvalues=lam_r,
        densities=Phi_r,
        moments=mom_r,
        residuals=resid,
        gram_certificate=cert,
        dropped_eigenvalue=dropped,
        cluster_tol=cluster_tol,
    )


def sphere_spectrum(subdivisions: int = 3, mode_count: int = 8) -> NPSpectrum:
    """Convenience: assemble and decompose an icosphere in one call."""
    from .mesh import icosphere

    mesh = icosphere(subdivisions)
    return spectral_decomposition(
        assemble_single_layer(mesh), assemble_np(mesh), mesh, mode_count)
