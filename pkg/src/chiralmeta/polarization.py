"""Per-mode response matrices and the particle polarization tensor.

Each surface mode of the particle contributes a 2x2 electric/magnetic
response matrix whose inverse blows up when the particle permittivity
approaches a mode-specific negative resonant value.  Summing the mode
contributions weighted by dipole moment outer products gives the 6x6
polarization tensor of the particle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .background import ChiralBackground
from .mesh import TriMesh, signed_volume
from .np_spectral import NPSpectrum

#: stand-in for the formally infinite mu-branch eigenvalue parameter in the
#: achiral limit (magnitude > 1e12 signals the degenerate path to callers)
LAMBDA_MU_SENTINEL = -1.0e15


class SingularModeError(RuntimeError):
    """A mode response matrix is singular (resonance hit exactly)."""


class RootFindError(RuntimeError):
    """Resonance root search failed."""


@dataclass(frozen=True)
class ModeParams:
    """Scalar parameters entering every mode response matrix.

    ``degenerate`` marks the achiral limit where the mu-branch
    eigenvalue parameter diverges; ``lambda_mu`` then carries a sentinel
    of magnitude > 1e12 and the response matrix is assembled from the
    analytic limit instead of the raw formulas.
    """

    lambda_eps: complex
    lambda_mu: complex
    d_eps: complex
    d_mu: complex
    degenerate: bool = False


@dataclass(frozen=True)
class ModeMatrix:
    """Assembled 2x2 response for one surface-mode eigenvalue.

    ``det_direct`` is the determinant of ``A`` computed directly from
    its entries; it is the source of truth for resonance location.
    ``M_blocks`` holds the 2x2 of scalar coefficients multiplying the
    mode's moment outer product in the (EE, EH; HE, HH) blocks.
    """

    lambda_n: float
    A: np.ndarray
    det_direct: complex
    M_blocks: np.ndarray


@dataclass(frozen=True)
class PolarizationTensor:
    M: np.ndarray        # 6x6, blocks (EE, EH; HE, HH)
    M_tilde: np.ndarray  # volume*I6 + M
    volume: float


def mode_params(bg: ChiralBackground, eps_c: complex, mu_c: float | None = None) -> ModeParams:
    """Scalar mode parameters for particle permittivity ``eps_c``.

    ``mu_c`` substitutes a hypothetical particle permeability into the
    mu-branch formulas; the default uses the background permeability,
    matching a non-magnetic particle.
    """
    t = bg.dbf_factor
    eps_den = eps_c - bg.eps_m * t
    if abs(eps_den) < 1e-14 * max(abs(eps_c), abs(bg.eps_m * t)):
        raise SingularModeError(
            f"eps_c = {eps_c} makes the electric denominator eps_c - eps_m*(1+gamma^2 beta^2) vanish")
    mu_val = bg.mu_m if mu_c is None else mu_c
    mu_den = mu_val - bg.mu_m * t
    lambda_eps = (eps_c + bg.eps_m * t) / (2.0 * eps_den)
    d_eps = bg.eps_m * bg.mu_m * bg.beta_m * t / eps_den
    if bg.beta_m == 0.0 and mu_c is None:
        # mu denominator vanishes identically; take the analytic limit
        return ModeParams(lambda_eps=lambda_eps, lambda_mu=LAMBDA_MU_SENTINEL,
                          d_eps=0.0, d_mu=0.0, degenerate=True)
    if abs(mu_den) < 1e-14 * max(abs(mu_val), abs(bg.mu_m * t)):
        raise SingularModeError(
            f"mu_c = {mu_val} makes the magnetic denominator mu_c - mu_m*(1+gamma^2 beta^2) vanish")
    lambda_mu = (mu_val + bg.mu_m * t) / (2.0 * mu_den)
    d_mu = bg.eps_m * bg.mu_m * bg.beta_m * t / mu_den
    return ModeParams(lambda_eps=lambda_eps, lambda_mu=lambda_mu,
                      d_eps=d_eps, d_mu=d_mu, degenerate=False)


def assemble_A_n(params: ModeParams, lambda_n: float, omega: float) -> ModeMatrix:
    """2x2 response matrix and its coefficient blocks at eigenvalue lambda_n."""
    v = 0.5 + lambda_n
    A = np.array(
        [
            [params.lambda_eps - lambda_n, 1j * omega * params.d_eps * v],
            [-1j * omega * params.d_mu * v, params.lambda_mu - lambda_n],
        ],
        dtype=complex,
    )
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if params.degenerate:
        # analytic achiral limit: the mu branch decouples and contributes nothing
        top = A[0, 0]
        if top == 0.0:
            M = np.full((2, 2), complex(np.inf))
        else:
            M = np.array([[-1.0 / top, 0.0], [0.0, 0.0]], dtype=complex)
        return ModeMatrix(lambda_n=lambda_n, A=A, det_direct=det, M_blocks=M)
    B = np.array([[1.0, -1j * omega * params.d_eps],
                  [1j * omega * params.d_mu, 1.0]], dtype=complex)
    if det == 0.0:
        M = np.full((2, 2), complex(np.inf))
    else:
        Ainv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]], dtype=complex) / det
        M = -Ainv @ B
    return ModeMatrix(lambda_n=lambda_n, A=A, det_direct=det, M_blocks=M)


def resonant_eps(bg: ChiralBackground, lambda_n: float) -> complex:
    """Permittivity at which the mode response matrix becomes singular."""
    u = 0.5 - lambda_n
    v = 0.5 + lambda_n
    if abs(u) < 1e-14:
        raise SingularModeError(f"lambda_n = {lambda_n}: resonant permittivity undefined at 1/2")
    fac = 1.0 - bg.k ** 2 * bg.beta_m ** 2 * u
    if abs(fac) < 1e-14:
        raise SingularModeError(
            f"lambda_n = {lambda_n}: chirality factor 1 - k^2 beta^2 (1/2 - lambda_n) vanishes")
    return complex(-bg.eps_m * (v / u) / fac)


def det_closed_form(bg: ChiralBackground, eps_c: complex, lambda_n: float) -> complex:
    """Factored determinant of the mode response matrix.

    Diagnostic only; the assembled determinant (``det_direct``) is
    authoritative.  Undefined in the achiral limit.
    """
    kb2 = bg.k ** 2 * bg.beta_m ** 2
    if kb2 == 0.0:
        raise SingularModeError(
            "closed-form determinant undefined at beta_m = 0; use the assembled determinant")
    u = 0.5 - lambda_n
    star = resonant_eps(bg, lambda_n)
    den = (1.0 - kb2) * eps_c - bg.eps_m
    if abs(den) < 1e-300:
        raise SingularModeError("closed-form determinant denominator vanishes")
    return (-u * (1.0 - kb2 * u) * (1.0 - kb2) / kb2) * (eps_c - star) / den


def det_discrepancy_table(bg: ChiralBackground, eps_c_values, lambda_values,
                          omega: float | None = None):
    """Rows (eps_c, lambda_n, |closed-form - direct|) for cross-validation.

    Emitted as a diagnostic; the two determinants agree to roundoff in
    every regime we have probed, but the assembled value stays the
    authority.
    """
    w = bg.omega if omega is None else omega
    rows = []
    for ec in eps_c_values:
        p = mode_params(bg, ec)
        for ln in lambda_values:
            direct = assemble_A_n(p, float(ln), w).det_direct
            closed = det_closed_form(bg, ec, float(ln))
            rows.append((complex(ec), float(ln), abs(closed - direct)))
    return rows


def polarization_tensor(spectrum: NPSpectrum, bg: ChiralBackground, eps_c: complex,
                        mesh: TriMesh, mu_c: float | None = None) -> PolarizationTensor:
    """6x6 polarization tensor of the particle at permittivity ``eps_c``.

    Sums mode coefficient blocks weighted by dipole-moment outer
    products over modes with non-negligible moments; modes whose
    response matrix is nearly singular raise (resonance is the physics
    of interest, silently regularizing would mask it).
    """
    params = mode_params(bg, eps_c, mu_c=mu_c)
    mom = np.asarray(spectrum.moments)
    lam = np.asarray(spectrum.eigenvalues)
    norms = np.linalg.norm(mom, axis=1)
    cutoff = 1e-6 * norms.max() if norms.size else 0.0
    M6 = np.zeros((6, 6), dtype=complex)
    for i in range(lam.size):
        if norms[i] < cutoff:
            continue
        mm = assemble_A_n(params, float(lam[i]), bg.omega)
        if abs(mm.det_direct) < 1e-14:
            raise SingularModeError(
                f"mode response nearly singular at eps_c = {eps_c}, lambda_n = {lam[i]!r} "
                f"(|det| = {abs(mm.det_direct):.3e})")
        M6 += np.kron(mm.M_blocks, np.outer(mom[i], mom[i]))
    vol = signed_volume(mesh)
    return PolarizationTensor(M=M6, M_tilde=vol * np.eye(6) + M6, volume=vol)


def orientation_average(T: np.ndarray) -> np.ndarray:
    """Isotropic average of a 3x3 tensor over uniformly random rotations."""
    T = np.asarray(T)
    return (np.trace(T) / 3.0) * np.eye(3, dtype=T.dtype)


def drude_eps(omega: float, omega_p: float, tau: float) -> complex:
    """Drude permittivity 1 - omega_p^2/(omega^2 + i tau omega)."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return 1.0 - omega_p ** 2 / (omega ** 2 + 1j * tau * omega)


def drude_omega_for_eps(eps_target: complex, omega_p: float, tau: float = 0.0) -> complex:
    """Frequency at which the Drude permittivity equals ``eps_target``.

    Quadratic inversion; returns the root with positive real part.  For
    tau = 0 and real eps_target < 1 this is omega_p/sqrt(1-eps_target).
    """
    rhs = omega_p ** 2 / (1.0 - eps_target)
    disc = np.sqrt(complex(-tau ** 2 + 4.0 * rhs))
    roots = [(-1j * tau + disc) / 2.0, (-1j * tau - disc) / 2.0]
    root = max(roots, key=lambda z: z.real)
    if root.real <= 0:
        raise RootFindError(f"no positive-frequency solution for eps_target = {eps_target}")
    return root


def _mode_objective(bg: ChiralBackground, lambda_n: float):
    """Objective whose zero locates the resonance in eps_c.

    The assembled determinant, except on the achiral degenerate path
    where the determinant carries the sentinel scale and the finite
    electric factor is the meaningful root function.
    """
    def f(eps_c: complex) -> complex:
        p = mode_params(bg, eps_c)
        if p.degenerate:
            return p.lambda_eps - lambda_n
        return assemble_A_n(p, lambda_n, bg.omega).det_direct
    return f


def find_resonance_root(bg: ChiralBackground, lambda_n: float,
                        bracket: tuple[float, float] | None = None,
                        start: complex | None = None,
                        tol: float = 1e-10, max_iter: int = 200) -> complex:
    """Locate the permittivity zero of the mode response determinant.

    A real ``bracket`` with a sign change runs bisection (the objective
    is real for real permittivity); otherwise a complex secant iteration
    starts from ``start``.
    """
    f = _mode_objective(bg, lambda_n)
    if bracket is not None:
        a, b = float(bracket[0]), float(bracket[1])
        fa, fb = f(a).real, f(b).real
        if fa * fb > 0:
            raise RootFindError(
                f"no sign change on bracket [{a}, {b}]: f(a) = {fa:.3e}, f(b) = {fb:.3e}")
        root = brentq(lambda x: f(x).real, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=max_iter)
        root = complex(root)
    elif start is not None:
        x0, x1 = complex(start), complex(start) * (1.0 + 1e-4) + 1e-8
        f0, f1 = f(x0), f(x1)
        root = None
        for _ in range(max_iter):
            if f1 == f0:
                break
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            x0, f0, x1, f1 = x1, f1, x2, f(x2)
            if abs(f1) < tol:
                root = x1
                break
        if root is None:
            raise RootFindError(f"secant iteration did not converge from start = {start}")
    else:
        raise RootFindError("either a real bracket or a complex start is required")
    if abs(f(root)) > tol:
        raise RootFindError(f"root candidate {root} has |objective| = {abs(f(root)):.3e} > {tol}")
    return root
