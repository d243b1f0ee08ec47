"""Chiral Drude-Born-Fedorov background medium and its wave objects.

The homogeneous background carries permittivity ``eps_m``, permeability
``mu_m`` and chirality ``beta_m`` at angular frequency ``omega``.  Plane
waves split into two circular polarizations travelling with distinct
wavenumbers; the fundamental 6x6 dyadic couples electric and magnetic
parts accordingly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

_I3 = np.eye(3)


class BackgroundError(ValueError):
    """Invalid background medium parameters."""


class SingularPointError(ValueError):
    """Kernel evaluated at its singular point without regularization."""


@dataclass(frozen=True)
class ChiralBackground:
    """Homogeneous chiral background medium.

    ``k * beta_m < 1`` is assumed by the quasi-static theory; passing
    ``allow_kbeta_ge_1=True`` overrides the check (a warning is issued
    and ``out_of_assumption`` is set) so parameter sets outside the
    assumption range can still be evaluated.
    """

    eps_m: float
    mu_m: float
    beta_m: float
    omega: float
    allow_kbeta_ge_1: bool = False

    def __post_init__(self) -> None:
        for name in ("eps_m", "mu_m", "omega"):
            if not getattr(self, name) > 0:
                raise BackgroundError(f"{name} must be positive, got {getattr(self, name)}")
        if self.beta_m < 0:
            raise BackgroundError(f"beta_m must be nonnegative, got {self.beta_m}")
        if self.k * self.beta_m >= 1.0:
            if not self.allow_kbeta_ge_1:
                raise BackgroundError(
                    f"k*beta_m = {self.k * self.beta_m:.6g} >= 1 violates the chirality "
                    "assumption; pass allow_kbeta_ge_1=True to evaluate anyway")
            warnings.warn(
                f"k*beta_m = {self.k * self.beta_m:.6g} >= 1: outside the assumption "
                "range, results are formula-level only", stacklevel=2)

    @property
    def k(self) -> float:
        """Achiral background wavenumber omega*sqrt(eps_m*mu_m)."""
        return self.omega * np.sqrt(self.eps_m * self.mu_m)

    @property
    def out_of_assumption(self) -> bool:
        return self.k * self.beta_m >= 1.0

    @property
    def dbf_factor(self) -> float:
        """Chirality enhancement 1/(1 - (k*beta_m)^2); negative outside the assumption."""
        denom = 1.0 - (self.k * self.beta_m) ** 2
        if denom == 0.0:
            raise BackgroundError("k*beta_m = 1 exactly: background coefficients are singular")
        return 1.0 / denom

    @property
    def gamma_sq(self) -> float:
        """Squared effective wavenumber k^2/(1 - (k*beta_m)^2)."""
        return self.k ** 2 * self.dbf_factor

    @property
    def gamma1(self) -> float:
        """Wavenumber of the left-circular (negative-helicity-curl) branch."""
        return self.k / (1.0 - self.k * self.beta_m)

    @property
    def gamma2(self) -> float:
        """Wavenumber of the right-circular branch."""
        return self.k / (1.0 + self.k * self.beta_m)

    @property
    def omega1(self) -> float:
        return self.omega / (1.0 - self.k * self.beta_m)

    @property
    def omega2(self) -> float:
        return self.omega / (1.0 + self.k * self.beta_m)

    @property
    def impedance_ratio(self) -> float:
        """sqrt(mu_m / eps_m)."""
        return np.sqrt(self.mu_m / self.eps_m)


# ---------------------------------------------------------------------------
# plane waves


@dataclass(frozen=True)
class PlaneWaveSpec:
    """Incident field as a pair of circular plane waves.

    ``q1`` rides the gamma1 branch and must satisfy p1 x q1 = -i q1;
    ``q2`` rides gamma2 with p2 x q2 = +i q2.  Either amplitude may be
    zero for a single circular wave.
    """

    p1: np.ndarray
    q1: np.ndarray
    p2: np.ndarray
    q2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("p1", "q1", "p2", "q2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        for p, q, s, nm in ((self.p1, self.q1, -1.0, "1"), (self.p2, self.q2, +1.0, "2")):
            if abs(np.linalg.norm(p.real) - 1.0) > 1e-12 or np.linalg.norm(p.imag) > 1e-12:
                raise BackgroundError(f"p{nm} must be a real unit vector")
            if abs(np.dot(p, q)) > 1e-12:
                raise BackgroundError(f"p{nm}.q{nm} must vanish")
            if np.linalg.norm(np.cross(p, q) - s * 1j * q) > 1e-12:
                raise BackgroundError(
                    f"p{nm} x q{nm} must equal {'+' if s > 0 else '-'}i q{nm}")


def make_circular_basis(direction, handedness: str) -> tuple[np.ndarray, np.ndarray]:
    """Unit propagation vector and circular polarization for one branch.

    ``handedness`` is ``"left"`` (p x q = -i q) or ``"right"``
    (p x q = +i q).  The transverse frame is chosen deterministically
    from the direction.
    """
    d = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(d)
    if nrm < 1e-300:
        raise BackgroundError("direction must be a nonzero vector")
    d = d / nrm
    seed = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = seed - np.dot(seed, d) * d
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    if handedness == "left":
        q = (e1 + 1j * e2) / np.sqrt(2.0)
    elif handedness == "right":
        q = (e1 - 1j * e2) / np.sqrt(2.0)
    else:
        raise BackgroundError(f"handedness must be 'left' or 'right', got {handedness!r}")
    return d, q


def circular_wave(direction, handedness: str, amplitude: complex = 1.0) -> PlaneWaveSpec:
    """Single circular plane wave (the other branch amplitude is zero)."""
    p, q = make_circular_basis(direction, handedness)
    pl, ql = make_circular_basis(direction, "left")
    pr, qr = make_circular_basis(direction, "right")
    if handedness == "left":
        return PlaneWaveSpec(p1=pl, q1=amplitude * ql, p2=pr, q2=0.0 * qr)
    return PlaneWaveSpec(p1=pl, q1=0.0 * ql, p2=pr, q2=amplitude * qr)


def linear_wave(direction, polarization, amplitude: complex = 1.0) -> PlaneWaveSpec:
    """Equal-amplitude circular pair; reduces to a linearly polarized
    plane wave when beta_m = 0 (e.g. E = x_hat e^{ikz} for direction z,
    polarization x)."""
    d, ql = make_circular_basis(direction, "left")
    _, qr = make_circular_basis(direction, "right")
    e = np.asarray(polarization, dtype=float)
    e = e - np.dot(e, d) * d
    nrm = np.linalg.norm(e)
    if nrm < 1e-300:
        raise BackgroundError("polarization must have a transverse component")
    e /= nrm
    # project the desired linear polarization on the two circular states
    a1 = amplitude * np.vdot(ql, e)
    a2 = amplitude * np.vdot(qr, e)
    return PlaneWaveSpec(p1=d, q1=a1 * ql, p2=d, q2=a2 * qr)


def incident_field(bg: ChiralBackground, wave: PlaneWaveSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the incident (E, H) pair at points ``x`` of shape (..., 3).

    Each circular branch is a Beltrami field: H = -i sqrt(eps/mu) E on
    the gamma1 branch and H = +i sqrt(eps/mu) E on the gamma2 branch,
    which is what the background system requires of each polarization.
    """
    x = np.asarray(x, dtype=float)
    s = 1.0 / bg.impedance_ratio  # sqrt(eps_m/mu_m)
    ph1 = np.exp(1j * bg.gamma1 * (x @ wave.p1.real))
    ph2 = np.exp(1j * bg.gamma2 * (x @ wave.p2.real))
    E = ph1[..., None] * wave.q1 + ph2[..., None] * wave.q2
    H = -1j * s * ph1[..., None] * wave.q1 + 1j * s * ph2[..., None] * wave.q2
    return E, H


def incident_six(bg: ChiralBackground, wave: PlaneWaveSpec, x) -> np.ndarray:
    """Incident field stacked as (..., 6) with E then H components."""
    E, H = incident_field(bg, wave, x)
    return np.concatenate([E, H], axis=-1)


# ---------------------------------------------------------------------------
# fundamental dyadic


def _scalar_kernel(r, gamma, eta):
    """Regularized Helmholtz kernel e^{i gamma r}/(4 pi r + eta) and its
    first two radial derivatives (eta = 0 recovers the free kernel)."""
    v = 4.0 * np.pi * r + eta
    g = np.exp(1j * gamma * r) / v
    b = 1j * gamma - 4.0 * np.pi / v
    g1 = g * b
    g2 = g * (b * b + (4.0 * np.pi / v) ** 2)
    return g, g1, g2


def _cross_matrix(v):
    """Cross-product matrices for vectors of shape (..., 3)."""
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=v.dtype)
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def green_dyadic(bg: ChiralBackground, x, eta: float = 0.0) -> np.ndarray:
    """6x6 fundamental dyadic of the background system at points ``x``.

    Shape (..., 3) -> (..., 6, 6).  With ``eta > 0`` the scalar kernel
    denominator 4 pi r is shifted by eta; at the origin the derivative
    terms are dropped by convention so the value stays finite (only the
    regularized kernel is ever evaluated there).

    Every column, read as an (E, H) pair, satisfies the homogeneous
    background system away from the source.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise BackgroundError(f"points must have trailing dimension 3, got {x.shape}")
    r = np.asarray(np.linalg.norm(x, axis=-1))
    at_origin = r < 1e-12
    if np.any(at_origin):
        if eta == 0.0:
            raise SingularPointError("dyadic evaluated at its singular point with eta = 0")
        r = np.where(at_origin, 1.0, r)  # placeholder, masked below
    xh = x / r[..., None]
    s = bg.impedance_ratio  # sqrt(mu/eps)

    G = np.zeros(x.shape[:-1] + (6, 6), dtype=complex)
    for gamma, om, sign in ((bg.gamma1, bg.omega1, +1.0), (bg.gamma2, bg.omega2, -1.0)):
        g, g1, g2 = _scalar_kernel(r, gamma, eta)
        if np.any(at_origin):
            g = np.where(at_origin, 1.0 / eta, g)
            g1 = np.where(at_origin, 0.0, g1)
            g2 = np.where(at_origin, 0.0, g2)
        xx = xh[..., :, None] * xh[..., None, :]
        hess = (g2 - g1 / r)[..., None, None] * xx + (g1 / r)[..., None, None] * _I3
        if np.any(at_origin):
            hess = np.where(at_origin[..., None, None], 0.0, hess)
        D = g[..., None, None] * _I3 + hess / gamma ** 2
        C = _cross_matrix(g1[..., None] * xh)
        if np.any(at_origin):
            C = np.where(at_origin[..., None, None], 0.0, C)
        pref = gamma ** 2 / om
        blk = np.empty_like(G)
        blk[..., :3, :3] = D
        blk[..., :3, 3:] = (1j * s / gamma) * C
        blk[..., 3:, :3] = (-1j / (s * gamma)) * C
        blk[..., 3:, 3:] = D
        pol = np.array([[1.0, sign * 1j * s], [-sign * 1j / s, 1.0]], dtype=complex)
        G += 0.5 * pref * np.einsum("...ij,jk->...ik", blk, np.kron(pol, _I3))
    return G


def regularized_green(bg: ChiralBackground, x, eta: float) -> np.ndarray:
    """Alias for the eta-regularized dyadic used by the point system."""
    if eta < 0:
        raise BackgroundError(f"eta must be nonnegative, got {eta}")
    return green_dyadic(bg, x, eta=eta)


def maxwell_dyadic(k: float, x) -> np.ndarray:
    """Classical electric dyadic (I + grad grad / k^2) e^{ikr}/(4 pi r).

    Textbook closed form, kept as an independent reference for the
    achiral limit of the chiral dyadic.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(np.linalg.norm(x, axis=-1))
    xh = x / r[..., None]
    kr = k * r
    g = np.asarray(np.exp(1j * kr) / (4.0 * np.pi * r))
    a = np.asarray(1.0 + (1j * kr - 1.0) / kr ** 2)
    b = np.asarray((3.0 - 3j * kr - kr ** 2) / kr ** 2)
    xx = xh[..., :, None] * xh[..., None, :]
    return g[..., None, None] * (a[..., None, None] * _I3 + b[..., None, None] * xx)


# ---------------------------------------------------------------------------
# particle/background contrast and Bohren decomposition


def k0_matrix(bg: ChiralBackground, eps_c: complex) -> np.ndarray:
    """2x2 contrast matrix between the particle interior (permittivity
    ``eps_c``, achiral) and the chiral background."""
    tg = bg.dbf_factor
    return np.array(
        [
            [eps_c / bg.eps_m - tg, -1j * bg.omega * bg.mu_m * bg.beta_m * tg],
            [1j * bg.omega * bg.eps_m * bg.beta_m * tg, 1.0 - tg],
        ],
        dtype=complex,
    )


def _sqrt_upper(z: complex) -> complex:
    """Principal square root folded to nonnegative imaginary part."""
    w = np.sqrt(complex(z))
    return -w if w.imag < 0 else w


@dataclass(frozen=True)
class BeltramiConstants:
    """Scalar constants of the two-branch (Bohren) field decomposition
    inside (particle, ``_c``) and outside (background, ``_m``)."""

    tau_c: complex
    tau_m: complex
    alpha_1c: complex
    alpha_2c: complex
    alpha_1m: complex
    alpha_2m: complex
    zeta_11: complex
    zeta_12: complex
    zeta_21: complex
    zeta_22: complex
    gamma_1m: float
    gamma_2m: float
    gamma_1c: complex
    gamma_2c: complex


def make_beltrami(bg: ChiralBackground, eps_c: complex) -> BeltramiConstants:
    tau_c = _sqrt_upper(bg.mu_m / eps_c)
    tau_m = complex(bg.impedance_ratio)
    gamma_c = bg.omega * _sqrt_upper(eps_c * bg.mu_m)
    return BeltramiConstants(
        tau_c=tau_c,
        tau_m=tau_m,
        alpha_1c=1.0 / (1j * tau_c),
        alpha_2c=-1j * tau_c,
        alpha_1m=1.0 / (1j * tau_m),
        alpha_2m=-1j * tau_m,
        zeta_11=0.5 * (1.0 + tau_m / tau_c),
        zeta_12=0.5j * (tau_c - tau_m),
        zeta_21=0.5j * (1.0 / tau_m - 1.0 / tau_c),
        zeta_22=0.5j * (1.0 + tau_c / tau_m),
        gamma_1m=bg.gamma1,
        gamma_2m=bg.gamma2,
        gamma_1c=gamma_c,
        gamma_2c=gamma_c,
    )


def bohren_split(E, H, consts: BeltramiConstants, region: str):
    """Split (E, H) into the two Beltrami components (Q1, Q2).

    Inverts E = Q1 + alpha_2 Q2, H = alpha_1 Q1 + Q2 with the constants
    of the requested region (``"interior"`` or ``"exterior"``).
    """
    a1, a2 = _region_alphas(consts, region)
    det = 1.0 - a1 * a2
    if abs(det) < 1e-14:
        raise BackgroundError("Beltrami coefficient matrix is singular (alpha1*alpha2 = 1)")
    E = np.asarray(E, dtype=complex)
    H = np.asarray(H, dtype=complex)
    Q1 = (E - a2 * H) / det
    Q2 = (H - a1 * E) / det
    return Q1, Q2


def bohren_merge(Q1, Q2, consts: BeltramiConstants, region: str):
    """Inverse of :func:`bohren_split`."""
    a1, a2 = _region_alphas(consts, region)
    Q1 = np.asarray(Q1, dtype=complex)
    Q2 = np.asarray(Q2, dtype=complex)
    return Q1 + a2 * Q2, a1 * Q1 + Q2


def _region_alphas(consts: BeltramiConstants, region: str):
    if region == "interior":
        return consts.alpha_1c, consts.alpha_2c
    if region == "exterior":
        return consts.alpha_1m, consts.alpha_2m
    raise BackgroundError(f"region must be 'interior' or 'exterior', got {region!r}")
