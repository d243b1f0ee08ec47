"""Effective material parameters of the dilute resonant composite.

A cubic lattice of N^3 small resonant particles contributes a 2x2
correction ("tilde parameters") to the background coefficients.  The
corrected coefficients invert to an effective permittivity,
permeability and chirality; near a shifted resonance both real parts
can turn negative simultaneously.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .background import ChiralBackground, k0_matrix
from .np_spectral import NPSpectrum
from .polarization import SingularModeError, assemble_A_n, mode_params, resonant_eps


class EffectiveError(RuntimeError):
    """Effective-parameter computation failed."""


@dataclass(frozen=True)
class DiluteConfig:
    """Dilute-lattice scaling parameters.

    ``volume_scale`` multiplies the particle volume, ``n_per_axis`` is
    the lattice count per axis, ``dilution_exponent`` controls how fast
    the volume fraction vanishes, and ``moment_scale`` is the scalar
    moment constant of the driving mode cluster.
    """

    volume_scale: float
    n_per_axis: int
    dilution_exponent: float
    moment_scale: float

    def __post_init__(self) -> None:
        if not self.volume_scale > 0:
            raise EffectiveError(f"volume_scale must be positive, got {self.volume_scale}")
        if not (isinstance(self.n_per_axis, (int, np.integer)) and self.n_per_axis >= 1):
            raise EffectiveError(f"n_per_axis must be a positive integer, got {self.n_per_axis}")
        if not self.dilution_exponent > 0:
            raise EffectiveError(
                f"dilution_exponent must be positive, got {self.dilution_exponent}")
        if not self.moment_scale > 0:
            raise EffectiveError(f"moment_scale must be positive, got {self.moment_scale}")
        if self.volume_scale ** (1.0 / 3.0) * self.n_per_axis ** (-self.dilution_exponent) >= 1.0:
            raise EffectiveError(
                "dilution violated: volume_scale^(1/3) * n_per_axis^(-dilution_exponent) "
                "must be < 1 so particles fit their lattice cells")

    @property
    def delta(self) -> float:
        """Particle size scale; < 1/n_per_axis by the dilution invariant."""
        return self.volume_scale ** (1.0 / 3.0) * self.n_per_axis ** (-1.0 - self.dilution_exponent)

    @property
    def dilution_factor(self) -> float:
        """delta^3 * n_per_axis^3 = total particle volume prefactor."""
        return self.volume_scale * self.n_per_axis ** (-3.0 * self.dilution_exponent)


@dataclass(frozen=True)
class TildeParams:
    eps_t: complex
    mu_t: complex
    eps_tt: complex
    mu_tt: complex


@dataclass(frozen=True)
class EffectiveParams:
    eps_eff: complex
    mu_eff: complex
    beta_eff: complex


def coupling_matrix(bg: ChiralBackground, eps_c: complex, cfg: DiluteConfig,
                    lambda_n: float, density: float = 1.0) -> np.ndarray:
    """2x2 lattice coupling: dilution * moment constant * contrast * mode response."""
    p = mode_params(bg, eps_c)
    mm = assemble_A_n(p, lambda_n, bg.omega)
    if abs(mm.det_direct) < 1e-14:
        raise SingularModeError(
            f"mode response nearly singular at eps_c = {eps_c}, lambda_n = {lambda_n}")
    return (density * cfg.dilution_factor * cfg.moment_scale
            * (k0_matrix(bg, eps_c) @ mm.M_blocks))


def tilde_from_coupling(T2: np.ndarray, omega: float) -> TildeParams:
    """Read the four tilde parameters off the 2x2 coupling matrix."""
    return TildeParams(
        eps_t=complex(T2[0, 0]),
        mu_t=complex(T2[1, 1]),
        mu_tt=complex(T2[0, 1] / (1j * omega)),
        eps_tt=complex(T2[1, 0] / (-1j * omega)),
    )


def coupling_from_tilde(tilde: TildeParams, omega: float) -> np.ndarray:
    """Inverse of :func:`tilde_from_coupling`."""
    return np.array(
        [
            [tilde.eps_t, 1j * omega * tilde.mu_tt],
            [-1j * omega * tilde.eps_tt, tilde.mu_t],
        ],
        dtype=complex,
    )


def compatibility_residual(tilde: TildeParams, bg: ChiralBackground) -> float:
    """Relative mismatch of the cross-coupling ratio against eps_m/mu_m.

    Zero for any coupling produced by the contrast-times-response
    product; the cross-multiplied form stays finite in the achiral limit
    where both cross terms vanish.
    """
    t = bg.dbf_factor
    lhs = bg.mu_m * (tilde.eps_tt + bg.eps_m * bg.beta_m * t)
    rhs = bg.eps_m * (tilde.mu_tt + bg.mu_m * bg.beta_m * t)
    scale = max(abs(lhs), abs(rhs))
    if scale == 0.0:
        return 0.0
    return abs(lhs - rhs) / scale


def tilde_from_definition(bg: ChiralBackground, eps_c: complex, cfg: DiluteConfig,
                          spectrum: NPSpectrum, mode_index: int = 0,
                          density: float = 1.0) -> TildeParams:
    """Tilde parameters of the lattice driven by one spectrum cluster."""
    clusters = spectrum.clusters()
    if not 0 <= mode_index < len(clusters):
        raise EffectiveError(f"mode_index {mode_index} out of range for {len(clusters)} clusters")
    lam = clusters[mode_index].eigenvalue
    T2 = coupling_matrix(bg, eps_c, cfg, lam, density=density)
    tilde = tilde_from_coupling(T2, bg.omega)
    res = compatibility_residual(tilde, bg)
    if res >= 1e-8:
        raise EffectiveError(f"compatibility residual {res:.3e} >= 1e-8 for eps_c = {eps_c}")
    return tilde


def invert_effective(tilde: TildeParams, bg: ChiralBackground,
                     roundtrip_tol: float = 1e-8) -> EffectiveParams:
    """Invert corrected coefficients to effective (eps, mu, beta).

    Raises when a divergence denominator is hit or when substituting the
    result back into the coefficient equations fails to reproduce the
    input within ``roundtrip_tol``.
    """
    t = bg.dbf_factor
    w = bg.omega
    P = tilde.eps_t + t
    Q = tilde.mu_t + t
    Rt = tilde.eps_tt + bg.eps_m * bg.beta_m * t
    St = tilde.mu_tt + bg.mu_m * bg.beta_m * t
    if abs(Q) < 1e-14 * max(abs(tilde.mu_t), abs(t)):
        raise EffectiveError(
            "effective permittivity divergence: corrected permeability coefficient vanishes "
            "(permittivity-branch shifted resonance hit)")
    if abs(P) < 1e-14 * max(abs(tilde.eps_t), abs(t)):
        raise EffectiveError(
            "effective permeability divergence: corrected permittivity coefficient vanishes "
            "(permeability-branch shifted resonance hit)")
    eps_eff = bg.eps_m * (P - w ** 2 * Rt * St / Q)
    mu_eff = bg.mu_m * (Q - w ** 2 * Rt * St / P)
    if mu_eff == 0.0:
        raise EffectiveError("effective permeability vanished; chirality recovery undefined")
    beta_eff = bg.mu_m * Rt / (bg.eps_m * mu_eff * P)
    out = EffectiveParams(eps_eff=complex(eps_eff), mu_eff=complex(mu_eff),
                          beta_eff=complex(beta_eff))
    res = roundtrip_residual(tilde, out, bg)
    if res >= roundtrip_tol:
        raise EffectiveError(f"inversion round-trip residual {res:.3e} >= {roundtrip_tol}")
    return out


def roundtrip_residual(tilde: TildeParams, eff: EffectiveParams, bg: ChiralBackground) -> float:
    """Relative residual of the corrected-coefficient equations.

    Substitutes the effective parameters back into the three coefficient
    equations (plus the compatibility twin of the third) and compares
    with the input tilde values.
    """
    t = bg.dbf_factor
    w = bg.omega
    denom_eff = 1.0 - w ** 2 * eff.eps_eff * eff.mu_eff * eff.beta_eff ** 2
    if denom_eff == 0.0:
        return float("inf")
    t_eff = 1.0 / denom_eff
    eq = np.array([
        (eff.eps_eff / bg.eps_m) * t_eff - t,
        (eff.mu_eff / bg.mu_m) * t_eff - t,
        (eff.eps_eff * eff.mu_eff * eff.beta_eff / bg.mu_m) * t_eff - bg.eps_m * bg.beta_m * t,
        (eff.eps_eff * eff.mu_eff * eff.beta_eff / bg.eps_m) * t_eff - bg.mu_m * bg.beta_m * t,
    ])
    got = np.array([tilde.eps_t, tilde.mu_t, tilde.eps_tt, tilde.mu_tt])
    scale = max(float(np.max(np.abs(got))), abs(t), 1e-30)
    return float(np.max(np.abs(eq - got)) / scale)


def s_limit_tilde(bg: ChiralBackground, lambda_n: float, s: float) -> TildeParams:
    """Limiting tilde values when the permittivity tracks the resonance.

    ``s`` in [0, 1) parameterizes how closely the particle permittivity
    approaches the shifted resonance as the lattice refines.
    """
    u = 0.5 - lambda_n
    t = bg.dbf_factor
    kb2 = (bg.k * bg.beta_m) ** 2
    return TildeParams(
        eps_t=-s * t,
        mu_t=-s * t * kb2 * u ** 2,
        eps_tt=-s * t * bg.eps_m * bg.beta_m * u,
        mu_tt=-s * t * bg.mu_m * bg.beta_m * u,
    )


def effective_closed_form(bg: ChiralBackground, lambda_n: float, s: float) -> EffectiveParams:
    """Closed-form effective parameters along the resonance-tracking path.

    Algebraically identical to ``invert_effective(s_limit_tilde(...))``;
    kept in explicit form for the limit analysis.  ``s = 0`` returns the
    background parameters exactly.
    """
    if not 0.0 <= s < 1.0:
        raise EffectiveError(f"s must lie in [0, 1), got {s}")
    u = 0.5 - lambda_n
    t = bg.dbf_factor
    kb2 = (bg.k * bg.beta_m) ** 2
    den = 1.0 - s * kb2 * u ** 2
    if den == 0.0:
        raise EffectiveError("closed-form denominator vanished")
    eps_eff = bg.eps_m * t * ((1.0 - s) - kb2 * (1.0 - s * u) ** 2 / den)
    mu_eff = bg.mu_m * t * (1.0 - s * kb2 * u ** 2 - kb2 * (1.0 - s * u) ** 2 / (1.0 - s))
    if mu_eff == 0.0:
        raise EffectiveError("closed-form effective permeability vanished")
    beta_eff = bg.mu_m * bg.beta_m * (1.0 - s * u) / (mu_eff * (1.0 - s))
    return EffectiveParams(eps_eff=complex(eps_eff), mu_eff=complex(mu_eff),
                           beta_eff=complex(beta_eff))


def tilde_leading_order(bg: ChiralBackground, eps_c: complex, cfg: DiluteConfig,
                        lambda_n: float) -> TildeParams:
    """Leading divergent term of each tilde parameter near the resonance."""
    star = resonant_eps(bg, lambda_n)
    if eps_c == star:
        raise EffectiveError(f"eps_c equals the resonant permittivity {star}")
    u = 0.5 - lambda_n
    fac = 1.0 - bg.k ** 2 * bg.beta_m ** 2 * u
    lead = -cfg.dilution_factor * cfg.moment_scale / (eps_c - star)
    base = bg.eps_m / (u * fac ** 2)
    return TildeParams(
        eps_t=lead * base / u ** 2,
        mu_t=lead * base * bg.k ** 2 * bg.beta_m ** 2,
        eps_tt=lead * base * bg.eps_m * bg.beta_m / u,
        mu_tt=lead * base * bg.mu_m * bg.beta_m / u,
    )


def shifted_resonances(bg: ChiralBackground, lambda_n: float,
                       cfg: DiluteConfig) -> tuple[complex, complex]:
    """Permittivities where the effective permittivity / permeability diverge.

    The lattice correction moves each divergence slightly off the single
    -particle resonance; both shifts are linear in the dilution factor.
    """
    star = resonant_eps(bg, lambda_n)
    u = 0.5 - lambda_n
    fac = 1.0 - bg.k ** 2 * bg.beta_m ** 2 * u
    if abs(fac) < 1e-14 or u == 0.0:
        raise SingularModeError(f"singular shift factors at lambda_n = {lambda_n}")
    scale = cfg.dilution_factor * cfg.moment_scale * bg.eps_m / (fac ** 2 * bg.dbf_factor)
    shift_eps = scale * bg.k ** 2 * bg.beta_m ** 2 / u
    shift_mu = scale / u ** 3
    return star + shift_eps, star + shift_mu


def epsc_from_s(bg: ChiralBackground, lambda_n: float, s: float, cfg: DiluteConfig) -> complex:
    """Particle permittivity tracking the resonance at parameter ``s``."""
    if s == 0.0:
        raise EffectiveError("s = 0 places the permittivity at infinity")
    star = resonant_eps(bg, lambda_n)
    u = 0.5 - lambda_n
    fac = 1.0 - bg.beta_m ** 2 * bg.k ** 2 * u
    shift = (cfg.dilution_factor * cfg.moment_scale * bg.eps_m
             / (u ** 3 * fac ** 2 * bg.dbf_factor))
    return star + shift / s


@dataclass(frozen=True)
class SweepRow:
    eps_c: complex
    eps_eff: complex
    mu_eff: complex
    beta_eff: complex
    double_negative: bool
    out_of_assumption: bool
    nudged: bool
    failed: bool


def _sweep_point(bg, cfg, spectrum, mode_index, density, eps_c) -> SweepRow:
    nudged = False
    for attempt in range(2):
        try:
            tilde = tilde_from_definition(bg, eps_c, cfg, spectrum,
                                          mode_index=mode_index, density=density)
            eff = invert_effective(tilde, bg)
            return SweepRow(
                eps_c=eps_c, eps_eff=eff.eps_eff, mu_eff=eff.mu_eff, beta_eff=eff.beta_eff,
                double_negative=bool(eff.eps_eff.real < 0 and eff.mu_eff.real < 0),
                out_of_assumption=bg.out_of_assumption, nudged=nudged, failed=False)
        except (SingularModeError, EffectiveError):
            if attempt == 0:
                eps_c = eps_c + 1e-12
                nudged = True
            else:
                nan = complex(float("nan"), float("nan"))
                return SweepRow(eps_c=eps_c, eps_eff=nan, mu_eff=nan, beta_eff=nan,
                                double_negative=False, out_of_assumption=bg.out_of_assumption,
                                nudged=nudged, failed=True)
    raise AssertionError("unreachable")


def sweep_figure(bg: ChiralBackground, cfg: DiluteConfig, spectrum: NPSpectrum,
                 eps_c_grid, mode_index: int = 0, density: float = 1.0,
                 threads: int | None = None) -> list[SweepRow]:
    """Effective parameters over a permittivity grid, with per-point flags.

    Points that hit a singularity are nudged once by 1e-12; persistent
    failures are flagged, never fatal.  Output order follows the grid.
    """
    grid = [complex(e) for e in eps_c_grid]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(
                lambda ec: _sweep_point(bg, cfg, spectrum, mode_index, density, ec), grid))
    return [_sweep_point(bg, cfg, spectrum, mode_index, density, ec) for ec in grid]


def sweep_summary(rows: list[SweepRow], reference_abscissa: float | None = None) -> dict:
    """Resonance abscissa (largest effective-permittivity magnitude) and
    the double-negative interval endpoints of a sweep."""
    finite = [r for r in rows if not r.failed and np.isfinite(r.eps_eff)]
    out: dict = {"points": len(rows), "failed": sum(r.failed for r in rows)}
    if finite:
        peak = max(finite, key=lambda r: abs(r.eps_eff))
        out["resonance_abscissa"] = peak.eps_c.real
        out["resonance_peak_magnitude"] = abs(peak.eps_eff)
    dn = [r.eps_c.real for r in rows if r.double_negative]
    out["double_negative_count"] = len(dn)
    if dn:
        out["double_negative_min"] = min(dn)
        out["double_negative_max"] = max(dn)
    if reference_abscissa is not None and "resonance_abscissa" in out:
        out["reference_abscissa"] = reference_abscissa
        out["abscissa_deviation"] = out["resonance_abscissa"] - reference_abscissa
    return out
