"""Command-line interface: reproducible file-based workflows.

Every command reads a key=value config (optionally seeded by a named
preset), writes CSV/JSON artifacts with full-precision numbers, and is
deterministic given its inputs.  Exit codes: 0 success, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .background import (BackgroundError, ChiralBackground, PlaneWaveSpec,
                         circular_wave, incident_six)
from .dipole import FarFieldError, ParticleInstance, scattered_field_dipole
from .effective import (DiluteConfig, EffectiveError, effective_closed_form,
                        invert_effective, s_limit_tilde, shifted_resonances, sweep_figure,
                        sweep_summary, tilde_from_definition)
from .foldy import (FoldyError, build_lattice, check_distribution, compare_homogenization,
                    eval_foldy_field, probe_ring, solve_foldy, uniform_invertibility_stat)
from .mesh import MeshError, mesh_from_file
from .np_spectral import (SpectralError, sphere_spectrum, spectral_decomposition,
                          unit_ball_spectrum)
from .polarization import (RootFindError, SingularModeError, drude_omega_for_eps,
                           find_resonance_root, mode_params, resonant_eps)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Bad configuration: unknown key, unparsable value, invalid parameter."""


# every key any command understands; unknown keys are rejected up front
_KNOWN_KEYS = {
    # background
    "eps_m", "mu_m", "beta_m", "omega", "allow_kbeta_ge_1",
    # spectrum source
    "mesh_source", "subdivisions", "mode_count", "mode_index",
    # dilute lattice scaling
    "volume_scale", "n_per_axis", "dilution_exponent", "moment_scale", "density",
    # permittivity sweep grid
    "eps_c_min", "eps_c_max", "eps_c_points", "dense_window", "dense_points",
    # single-particle / closed-form inputs
    "eps_c_re", "eps_c_im", "lambda_n", "s_values", "delta", "center",
    "far_field_factor", "variant",
    # incident wave
    "direction", "handedness", "amplitude",
    # probes
    "probes_file", "probe_radius", "probe_count",
    # lattice simulation
    "n_list", "eta", "grid_m", "compare", "use_limit_tilde", "n_cap",
    # resonances
    "drude_omega_p", "drude_tau",
}

_PRESETS = {
    "figure1-left": {
        "omega": "1", "eps_m": "1", "mu_m": "1", "beta_m": "1.09",
        "allow_kbeta_ge_1": "true",
        "volume_scale": "3", "n_per_axis": "125", "dilution_exponent": "0.965",
        "moment_scale": "auto", "mesh_source": "analytic", "mode_index": "0",
        "eps_c_min": "-4", "eps_c_max": "-1", "eps_c_points": "1200",
        "dense_window": "5e-5", "dense_points": "800",
    },
    "figure1-right": {
        "omega": "1", "eps_m": "1", "mu_m": "1", "beta_m": "0",
        "volume_scale": "3", "n_per_axis": "125", "dilution_exponent": "0.965",
        "moment_scale": "auto", "mesh_source": "analytic", "mode_index": "0",
        "eps_c_min": "-4", "eps_c_max": "-1", "eps_c_points": "1200",
        "dense_window": "5e-5", "dense_points": "800",
    },
}

# the published resonance abscissa the left-panel sweep is compared against
_FIGURE1_REFERENCE_ABSCISSA = -2.94455


# ---------------------------------------------------------------------------
# config plumbing


def parse_config_file(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def build_config(args) -> dict[str, str]:
    cfg: dict[str, str] = {}
    if args.preset is not None:
        if args.preset not in _PRESETS:
            raise ConfigError(
                f"unknown preset {args.preset!r}; available: {', '.join(sorted(_PRESETS))}")
        cfg.update(_PRESETS[args.preset])
    if args.config is not None:
        cfg.update(parse_config_file(args.config))
    if args.allow_kbeta_ge_1:
        cfg["allow_kbeta_ge_1"] = "true"
    return cfg


def _get_float(cfg, key, default=None) -> float:
    raw = cfg.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return float(default)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: not a number: {raw!r}") from exc


def _get_int(cfg, key, default=None) -> int:
    raw = cfg.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return int(default)
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: not an integer: {raw!r}") from exc


def _get_bool(cfg, key, default=False) -> bool:
    raw = cfg.get(key)
    if raw is None:
        return default
    low = raw.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"config key {key!r}: not a boolean: {raw!r}")


def _get_float_list(cfg, key, default: str) -> list[float]:
    raw = cfg.get(key, default)
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: not a number list: {raw!r}") from exc


def _get_int_list(cfg, key, default: str) -> list[int]:
    raw = cfg.get(key, default)
    try:
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: not an integer list: {raw!r}") from exc


def _get_vec3(cfg, key, default: str) -> np.ndarray:
    vals = _get_float_list(cfg, key, default)
    if len(vals) != 3:
        raise ConfigError(f"config key {key!r}: expected 3 components, got {len(vals)}")
    return np.array(vals, dtype=float)


def build_background(cfg) -> ChiralBackground:
    try:
        return ChiralBackground(
            eps_m=_get_float(cfg, "eps_m", 1.0),
            mu_m=_get_float(cfg, "mu_m", 1.0),
            beta_m=_get_float(cfg, "beta_m", 0.0),
            omega=_get_float(cfg, "omega", 1.0),
            allow_kbeta_ge_1=_get_bool(cfg, "allow_kbeta_ge_1"),
        )
    except BackgroundError as exc:
        raise ConfigError(str(exc)) from exc


def build_spectrum(cfg):
    source = cfg.get("mesh_source", "analytic")
    mode_count = _get_int(cfg, "mode_count", 8)
    if source == "analytic":
        return unit_ball_spectrum()
    if source == "icosphere":
        return sphere_spectrum(_get_int(cfg, "subdivisions", 3), mode_count=mode_count)
    try:
        mesh = mesh_from_file(source)
    except (OSError, MeshError) as exc:
        raise ConfigError(f"cannot read mesh {source!r}: {exc}") from exc
    from .np_spectral import assemble_np, assemble_single_layer
    S = assemble_single_layer(mesh)
    K = assemble_np(mesh)
    return spectral_decomposition(S, K, mesh, mode_count=mode_count)


def build_dilute(cfg, spectrum, mode_index: int) -> DiluteConfig:
    raw_scale = cfg.get("moment_scale", "auto")
    if raw_scale == "auto":
        clusters = spectrum.clusters()
        if not 0 <= mode_index < len(clusters):
            raise ConfigError(
                f"mode_index {mode_index} out of range for {len(clusters)} clusters")
        scale = clusters[mode_index].c_n
    else:
        scale = _get_float(cfg, "moment_scale")
    try:
        return DiluteConfig(
            volume_scale=_get_float(cfg, "volume_scale", 3.0),
            n_per_axis=_get_int(cfg, "n_per_axis", 125),
            dilution_exponent=_get_float(cfg, "dilution_exponent", 0.965),
            moment_scale=scale,
        )
    except EffectiveError as exc:
        raise ConfigError(str(exc)) from exc


def build_incident(cfg) -> PlaneWaveSpec:
    handed = cfg.get("handedness", "left")
    if handed not in ("left", "right"):
        raise ConfigError(f"handedness must be 'left' or 'right', got {handed!r}")
    try:
        return circular_wave(_get_vec3(cfg, "direction", "0,0,1"), handed,
                             amplitude=complex(_get_float(cfg, "amplitude", 1.0)))
    except BackgroundError as exc:
        raise ConfigError(str(exc)) from exc


def load_probes(cfg) -> np.ndarray:
    path = cfg.get("probes_file")
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"probes file not found: {path}")
        rows = []
        for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#") or line.lower().startswith("x"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ConfigError(f"{path}:{lineno}: expected x,y,z")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad number") from exc
        if not rows:
            raise ConfigError(f"probes file {path} holds no points")
        return np.array(rows, dtype=float)
    return probe_ring(_get_int(cfg, "probe_count", 16),
                      radius=_get_float(cfg, "probe_radius", 3.0))


# ---------------------------------------------------------------------------
# deterministic writers (17 significant digits, LF endings, stable order)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _json_render(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {_json_render(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_json_render(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if np.isnan(obj):
            return '"nan"'
        if np.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return fmt(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _json_render({"re": float(obj.real), "im": float(obj.imag)}, indent)
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes((_json_render(obj) + "\n").encode("utf-8"))


def write_csv(path: Path, header: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header] + [",".join(r) for r in rows]
    path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def field_csv_rows(points: np.ndarray, fields: np.ndarray):
    rows = []
    for p, f in zip(points, fields):
        row = [fmt(p[0]), fmt(p[1]), fmt(p[2])]
        for comp in f:
            row.extend([fmt(comp.real), fmt(comp.imag)])
        rows.append(row)
    return rows


_FIELD_HEADER = ("x,y,z,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,"
                 "re_hx,im_hx,re_hy,im_hy,re_hz,im_hz")


# ---------------------------------------------------------------------------
# commands


def cmd_np_spectrum(cfg, out: Path, threads: int | None) -> int:
    cfg = {"mesh_source": "icosphere", **cfg}
    spectrum = build_spectrum(cfg)
    dest = out / "np_spectrum.json"
    dest.parent.mkdir(parents=True, exist_ok=True)
    spectrum.save(dest)
    clusters = spectrum.clusters()
    print(f"wrote {dest} ({len(spectrum.eigenvalues)} modes, {len(clusters)} clusters)")
    for c in clusters:
        print(f"  cluster eigenvalue {fmt(c.eigenvalue)}  size {len(c.indices)}  "
              f"c_n {fmt(c.c_n)}")
    return EXIT_OK


def cmd_resonances(cfg, out: Path, threads: int | None) -> int:
    bg = build_background(cfg)
    spectrum = build_spectrum(cfg)
    mode_index = _get_int(cfg, "mode_index", 0)
    dilute = build_dilute(cfg, spectrum, mode_index)
    omega_p = cfg.get("drude_omega_p")
    tau = _get_float(cfg, "drude_tau", 0.0)
    modes = []
    successes = 0
    for cluster in spectrum.clusters():
        lam = cluster.eigenvalue
        entry: dict = {"lambda_n": lam}
        try:
            star = resonant_eps(bg, lam)
            entry["eps_star"] = star
            root = find_resonance_root(bg, lam, bracket=(star.real - 0.4, star.real + 0.4))
            entry["direct_root"] = root
            s_eps, s_mu = shifted_resonances(bg, lam, dilute)
            entry["shifted_for_eps_eff"] = s_eps
            entry["shifted_for_mu_eff"] = s_mu
            if omega_p is not None:
                entry["drude_omega"] = drude_omega_for_eps(
                    star, _get_float(cfg, "drude_omega_p"), tau)
            successes += 1
        except (SingularModeError, RootFindError, EffectiveError, ValueError) as exc:
            entry["error"] = str(exc)
        modes.append(entry)
    report = {
        "background": {"eps_m": bg.eps_m, "mu_m": bg.mu_m, "beta_m": bg.beta_m,
                       "omega": bg.omega, "k_beta": bg.k * abs(bg.beta_m),
                       "out_of_assumption": bg.out_of_assumption},
        "modes": modes,
    }
    dest = out / "resonances.json"
    write_json(dest, report)
    print(f"wrote {dest} ({successes}/{len(modes)} modes resolved)")
    return EXIT_OK if successes else EXIT_NUMERICAL


def _sweep_grid(cfg, bg, spectrum, mode_index) -> np.ndarray:
    lo = _get_float(cfg, "eps_c_min", -4.0)
    hi = _get_float(cfg, "eps_c_max", -1.0)
    pts = _get_int(cfg, "eps_c_points", 1200)
    if not (hi > lo and pts >= 2):
        raise ConfigError("sweep grid needs eps_c_max > eps_c_min and >= 2 points")
    grid = np.linspace(lo, hi, pts)
    window = _get_float(cfg, "dense_window", 0.0)
    if window > 0.0:
        lam = spectrum.clusters()[mode_index].eigenvalue
        star = resonant_eps(bg, lam).real
        dense = np.linspace(star - window, star + window,
                            _get_int(cfg, "dense_points", 800))
        grid = np.unique(np.concatenate([grid, dense]))
    return grid


def cmd_eff_sweep(cfg, out: Path, threads: int | None, preset: str | None) -> int:
    bg = build_background(cfg)
    spectrum = build_spectrum(cfg)
    mode_index = _get_int(cfg, "mode_index", 0)
    dilute = build_dilute(cfg, spectrum, mode_index)
    density = _get_float(cfg, "density", 1.0)
    grid = _sweep_grid(cfg, bg, spectrum, mode_index)
    rows = sweep_figure(bg, dilute, spectrum, grid, mode_index=mode_index,
                        density=density, threads=threads)
    csv_rows = []
    for r in rows:
        csv_rows.append([
            fmt(r.eps_c.real), fmt(r.eps_eff.real), fmt(r.eps_eff.imag),
            fmt(r.mu_eff.real), fmt(r.mu_eff.imag),
            fmt(r.double_negative), fmt(r.out_of_assumption),
        ])
    dest_csv = out / "eff_sweep.csv"
    write_csv(dest_csv,
              "eps_c,re_eps_eff,im_eps_eff,re_mu_eff,im_mu_eff,"
              "double_negative,out_of_assumption", csv_rows)
    reference = _FIGURE1_REFERENCE_ABSCISSA if preset == "figure1-left" else None
    summary = sweep_summary(rows, reference_abscissa=reference)
    summary["nudged_points"] = [r.eps_c.real for r in rows if r.nudged]
    summary["failed_points"] = [r.eps_c.real for r in rows if r.failed]
    dest_json = out / "eff_sweep_summary.json"
    write_json(dest_json, summary)
    print(f"wrote {dest_csv} ({len(rows)} points) and {dest_json}")
    if "resonance_abscissa" in summary:
        print(f"  resonance abscissa {fmt(summary['resonance_abscissa'])}")
    if reference is not None:
        print(f"  deviation from {fmt(reference)}: {fmt(summary['abscissa_deviation'])}")
    if summary["double_negative_count"]:
        print(f"  double-negative rows: {summary['double_negative_count']} in "
              f"[{fmt(summary['double_negative_min'])}, {fmt(summary['double_negative_max'])}]")
    return EXIT_OK


def cmd_eff_closed_form(cfg, out: Path, threads: int | None) -> int:
    bg = build_background(cfg)
    lam = _get_float(cfg, "lambda_n", 1.0 / 6.0)
    s_values = _get_float_list(cfg, "s_values", "0,0.1,0.5,0.9,0.99")
    rows = []
    worst = 0.0
    for s in s_values:
        eff = effective_closed_form(bg, lam, s)
        via_tilde = invert_effective(s_limit_tilde(bg, lam, s), bg)
        dev = max(abs(eff.eps_eff - via_tilde.eps_eff), abs(eff.mu_eff - via_tilde.mu_eff),
                  abs(eff.beta_eff - via_tilde.beta_eff))
        worst = max(worst, dev)
        rows.append([fmt(s), fmt(eff.eps_eff.real), fmt(eff.eps_eff.imag),
                     fmt(eff.mu_eff.real), fmt(eff.mu_eff.imag),
                     fmt(eff.beta_eff.real), fmt(eff.beta_eff.imag)])
    dest = out / "eff_closed_form.csv"
    write_csv(dest, "s,re_eps_eff,im_eps_eff,re_mu_eff,im_mu_eff,re_beta_eff,im_beta_eff",
              rows)
    # double-negative onset scan along s
    s_grid = np.linspace(1e-6, 0.999, 2000)
    neg = []
    for s in s_grid:
        eff = effective_closed_form(bg, lam, float(s))
        neg.append(eff.eps_eff.real < 0 and eff.mu_eff.real < 0)
    s0 = None
    for i in range(len(s_grid) - 1, -1, -1):
        if not neg[i]:
            s0 = float(s_grid[i + 1]) if i + 1 < len(s_grid) else None
            break
    else:
        s0 = float(s_grid[0])
    summary = {
        "lambda_n": lam,
        "k_beta": bg.k * abs(bg.beta_m),
        "closed_form_vs_inversion_max_dev": worst,
        "double_negative_onset_s0": s0,
        "double_negative_to": 0.999 if s0 is not None else None,
    }
    write_json(out / "eff_closed_form_summary.json", summary)
    print(f"wrote {dest}; closed-form vs inversion max deviation {fmt(worst)}")
    if s0 is not None:
        print(f"  double-negative for s in ({fmt(s0)}, 0.999)")
    return EXIT_OK


def cmd_dipole_field(cfg, out: Path, threads: int | None) -> int:
    bg = build_background(cfg)
    spectrum = build_spectrum(cfg)
    mode_index = _get_int(cfg, "mode_index", 0)
    dilute = build_dilute(cfg, spectrum, mode_index)
    eps_c = complex(_get_float(cfg, "eps_c_re", -3.0), _get_float(cfg, "eps_c_im", 0.0))
    delta = _get_float(cfg, "delta", dilute.delta)
    particle = ParticleInstance(
        center=_get_vec3(cfg, "center", "0.5,0.5,0.5"), delta=delta, eps_c=eps_c,
        spectrum=spectrum, cluster_index=mode_index,
        far_field_factor=_get_float(cfg, "far_field_factor", 10.0))
    wave = build_incident(cfg)
    probes = load_probes(cfg)
    variant = cfg.get("variant", "resonant-mode")
    if variant != "resonant-mode":
        raise ConfigError("only the resonant-mode variant is file-driven (the "
                          "full-tensor variant needs an in-memory mesh)")
    inc_center = incident_six(bg, wave, particle.center)
    scattered = scattered_field_dipole(bg, particle, inc_center, probes)
    total = incident_six(bg, wave, probes) + scattered
    dest = out / "dipole_field.csv"
    write_csv(dest, _FIELD_HEADER, field_csv_rows(probes, total))
    print(f"wrote {dest} ({probes.shape[0]} probes)")
    return EXIT_OK


def cmd_foldy(cfg, out: Path, threads: int | None) -> int:
    bg = build_background(cfg)
    spectrum = build_spectrum(cfg)
    mode_index = _get_int(cfg, "mode_index", 0)
    dilute = build_dilute(cfg, spectrum, mode_index)
    eps_c = complex(_get_float(cfg, "eps_c_re", -3.0), _get_float(cfg, "eps_c_im", 0.0))
    wave = build_incident(cfg)
    probes = load_probes(cfg)
    n_list = _get_int_list(cfg, "n_list", "2,3,4")
    if not n_list:
        raise ConfigError("n_list must not be empty")
    eta_raw = cfg.get("eta")
    tilde = None
    if _get_bool(cfg, "use_limit_tilde"):
        tilde = tilde_from_definition(bg, eps_c, dilute, spectrum, mode_index=mode_index,
                                      density=_get_float(cfg, "density", 1.0))
    n_cap = _get_int(cfg, "n_cap", 10)

    # probe CSV for the largest lattice
    n_big = max(n_list)
    lattice = build_lattice(n_big, dilute)
    eta_big = float(eta_raw) if eta_raw is not None else 0.1 / n_big
    state = solve_foldy(bg, lattice, eps_c, spectrum, wave, eta=eta_big,
                        tilde=tilde, mode_index=mode_index, n_cap=n_cap)
    fields = eval_foldy_field(bg, lattice, state, probes)
    dest_csv = out / "foldy_field.csv"
    write_csv(dest_csv, _FIELD_HEADER, field_csv_rows(probes, fields))
    print(f"wrote {dest_csv} (N={n_big}, residual {fmt(state.solver_report['residual'])})")

    if _get_bool(cfg, "compare", default=True):
        eta_cmp = float(eta_raw) if eta_raw is not None else 0.1
        rows = compare_homogenization(bg, dilute, spectrum, eps_c, n_list, eta_cmp,
                                      probes, grid_m=_get_int(cfg, "grid_m", 10),
                                      mode_index=mode_index, incident=wave, tilde=tilde)
        table = [[str(r.n_per_axis), fmt(r.rel_l2_error), fmt(r.eta),
                  fmt(r.eps_c.real), fmt(r.eps_c.imag)] for r in rows]
        dest_tab = out / "foldy_errors.csv"
        write_csv(dest_tab, "N,rel_l2_error,eta,eps_c_re,eps_c_im", table)
        print(f"wrote {dest_tab}")
    return EXIT_OK


def cmd_compare_hom(cfg, out: Path, threads: int | None) -> int:
    bg = build_background(cfg)
    spectrum = build_spectrum(cfg)
    mode_index = _get_int(cfg, "mode_index", 0)
    dilute = build_dilute(cfg, spectrum, mode_index)
    eps_c = complex(_get_float(cfg, "eps_c_re", -3.0), _get_float(cfg, "eps_c_im", 0.0))
    wave = build_incident(cfg)
    probes = load_probes(cfg)
    n_list = _get_int_list(cfg, "n_list", "2,3,4,5")
    rows = compare_homogenization(
        bg, dilute, spectrum, eps_c, n_list, _get_float(cfg, "eta", 0.1), probes,
        grid_m=_get_int(cfg, "grid_m", 10), mode_index=mode_index, incident=wave)
    table = [[str(r.n_per_axis), fmt(r.rel_l2_error), fmt(r.eta),
              fmt(r.eps_c.real), fmt(r.eps_c.imag)] for r in rows]
    dest = out / "compare_hom.csv"
    write_csv(dest, "N,rel_l2_error,eta,eps_c_re,eps_c_im", table)
    errs = [r.rel_l2_error for r in rows]
    monotone = all(a > b for a, b in zip(errs, errs[1:]))
    write_json(out / "compare_hom_summary.json", {
        "n_list": list(n_list), "errors": errs, "monotone_decreasing": monotone,
    })
    print(f"wrote {dest}; monotone decreasing: {str(monotone).lower()}")
    return EXIT_OK


def cmd_check_assumptions(cfg, out: Path, threads: int | None) -> int:
    bg = build_background(cfg)
    spectrum = build_spectrum(cfg)
    mode_index = _get_int(cfg, "mode_index", 0)
    dilute = build_dilute(cfg, spectrum, mode_index)
    n_list = _get_int_list(cfg, "n_list", "3,4,5,6")
    eta = _get_float(cfg, "eta", 1.0)
    probe_count = _get_int(cfg, "probe_count", 8)
    a = dilute.dilution_exponent

    dist_rows = []
    for N in n_list:
        lat = build_lattice(N, dilute)
        dist_rows.append({"N": N, "eta": eta,
                          "statistic": check_distribution(lat, bg, eta, probe_count)})
    stats = [r["statistic"] for r in dist_rows]
    inv_rows = []
    for N in n_list:
        if N < 2:
            continue
        lat = build_lattice(N, dilute)
        stat = uniform_invertibility_stat(lat, bg)
        inv_rows.append({"N": N, "statistic": stat,
                         "scaled_by_n6a": stat * N ** (6.0 * a)})
    scaled = [r["scaled_by_n6a"] for r in inv_rows]
    report = {
        "k_beta": bg.k * abs(bg.beta_m),
        "out_of_assumption": bg.out_of_assumption,
        "distribution": {
            "rows": dist_rows,
            "monotone_decreasing": all(x > y for x, y in zip(stats, stats[1:])),
        },
        "uniform_invertibility": {
            "dilution_exponent": a,
            "rows": inv_rows,
            "scaled_max_over_min": (max(scaled) / min(scaled)) if scaled else None,
        },
    }
    dest = out / "check_assumptions.json"
    write_json(dest, report)
    print(f"wrote {dest}")
    print(f"  distribution statistic monotone decreasing: "
          f"{str(report['distribution']['monotone_decreasing']).lower()}")
    if scaled:
        print(f"  invertibility statistic * N^(6a) max/min ratio: "
              f"{fmt(report['uniform_invertibility']['scaled_max_over_min'])}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _add_common(sub):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--preset", help="named parameter preset")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--allow-kbeta-ge-1", action="store_true",
                     help="permit backgrounds outside the k*beta < 1 regime")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads for sweeps")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chiralmeta",
        description="Resonant-composite workflows: surface spectra, resonances, "
                    "effective parameters, lattice simulations.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("np-spectrum", "resonances", "eff-sweep", "eff-closed-form",
                 "dipole-field", "foldy", "compare-hom", "check-assumptions"):
        _add_common(subs.add_parser(name))
    args = parser.parse_args(argv)

    try:
        cfg = build_config(args)
        out = Path(args.out)
        if args.command == "np-spectrum":
            return cmd_np_spectrum(cfg, out, args.threads)
        if args.command == "resonances":
            return cmd_resonances(cfg, out, args.threads)
        if args.command == "eff-sweep":
            return cmd_eff_sweep(cfg, out, args.threads, args.preset)
        if args.command == "eff-closed-form":
            return cmd_eff_closed_form(cfg, out, args.threads)
        if args.command == "dipole-field":
            return cmd_dipole_field(cfg, out, args.threads)
        if args.command == "foldy":
            return cmd_foldy(cfg, out, args.threads)
        if args.command == "compare-hom":
            return cmd_compare_hom(cfg, out, args.threads)
        if args.command == "check-assumptions":
            return cmd_check_assumptions(cfg, out, args.threads)
        raise AssertionError("unreachable")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralError, SingularModeError, RootFindError, EffectiveError,
            FoldyError, FarFieldError, BackgroundError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
