import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiralmeta.background import ChiralBackground, k0_matrix
from chiralmeta.polarization import (RootFindError, SingularModeError, assemble_A_n,
                                     det_closed_form, det_discrepancy_table, drude_eps,
                                     drude_omega_for_eps, find_resonance_root, mode_params,
                                     orientation_average, polarization_tensor, resonant_eps)
from _fd import loglog_slope


def test_mode_params_achiral():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    p = mode_params(bg, -2.0)
    assert p.lambda_eps == pytest.approx(1 / 6)
    assert p.d_eps == 0 and p.d_mu == 0
    assert p.degenerate
    assert abs(p.lambda_mu) > 1e12


def test_mode_params_worked_example():
    bg = ChiralBackground(1.0, 1.0, 0.5, 1.0)
    p = mode_params(bg, -3.0)
    assert p.lambda_eps == pytest.approx(5 / 26, rel=1e-14)
    assert not p.degenerate


def test_mode_params_singular_denominator():
    bg = ChiralBackground(1.0, 1.0, 0.5, 1.0)
    with pytest.raises(SingularModeError, match="eps"):
        mode_params(bg, bg.eps_m * bg.dbf_factor)


def test_assemble_diagonal_det():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    p = mode_params(bg, -3.0)
    mm = assemble_A_n(p, 0.2, bg.omega)
    assert mm.det_direct == pytest.approx((p.lambda_eps - 0.2) * (p.lambda_mu - 0.2))


def test_assemble_blocks_definition(rng):
    # M_blocks must reproduce -A^{-1} [[1, -iw d_eps], [iw d_mu, 1]]
    bg = ChiralBackground(1.1, 0.9, 0.4, 1.3)
    p = mode_params(bg, -2.5 + 0.3j)
    mm = assemble_A_n(p, 1 / 6, bg.omega)
    B = np.array([[1.0, -1j * bg.omega * p.d_eps], [1j * bg.omega * p.d_mu, 1.0]])
    recon = -np.linalg.inv(mm.A) @ B
    assert np.abs(mm.M_blocks - recon).max() < 1e-12 * np.abs(recon).max()


def test_det_matches_independent_expansion(rng):
    bg = ChiralBackground(1.2, 0.7, 0.35, 0.9)
    for _ in range(20):
        ec = complex(rng.uniform(-5, -1), rng.uniform(0, 0.5))
        lam = rng.uniform(-0.4, 0.4)
        p = mode_params(bg, ec)
        mm = assemble_A_n(p, lam, bg.omega)
        v = 0.5 + lam
        expand = ((p.lambda_eps - lam) * (p.lambda_mu - lam)
                  - bg.omega ** 2 * p.d_eps * p.d_mu * v * v)
        assert mm.det_direct == pytest.approx(expand, rel=1e-13)


def test_mode_matrix_worked_example():
    # omega = eps_m = mu_m = 1, beta = 0.5, eps_c = -3, lambda = 1/6:
    # exact rational arithmetic gives the matrices below
    bg = ChiralBackground(1.0, 1.0, 0.5, 1.0)
    mm = assemble_A_n(mode_params(bg, -3.0), 1 / 6, bg.omega)
    assert np.allclose(mm.M_blocks, [[-15.0, -2.0j], [-6.0j, 1.0]], rtol=1e-12)
    prod = k0_matrix(bg, -3.0) @ mm.M_blocks
    assert np.allclose(prod, [[61.0, 8.0j], [-8.0j, 1.0]], rtol=1e-12)


def test_resonant_eps_values():
    assert resonant_eps(ChiralBackground(1.0, 1.0, 0.0, 1.0), 1 / 6) == pytest.approx(-2.0)
    got = resonant_eps(ChiralBackground(1.0, 1.0, 0.5, 1.0), 1 / 6)
    assert got == pytest.approx(-24 / 11, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(-0.45, 0.45))
def test_resonant_eps_real_negative(beta, lam):
    bg = ChiralBackground(1.0, 1.0, beta, 1.0)  # k = 1, so k*beta < 1
    star = resonant_eps(bg, lam)
    assert star.imag == 0
    assert star.real < 0


def test_det_closed_form_root():
    bg = ChiralBackground(1.0, 1.0, 0.5, 1.0)
    lam = 1 / 6
    assert det_closed_form(bg, resonant_eps(bg, lam), lam) == 0


def test_det_closed_form_requires_chirality():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(SingularModeError):
        det_closed_form(bg, -2.0, 1 / 6)


def test_det_discrepancy_table():
    # the factored form agrees with the assembled determinant to roundoff
    # over a representative grid; emitted as (eps_c, lambda, rel dev) rows
    bg = ChiralBackground(1.0, 1.0, 0.5, 1.0)
    rows = det_discrepancy_table(bg, [-3.0, -2.5, -1.5 + 0.1j], [0.1, 1 / 6, 0.3])
    assert len(rows) == 9
    assert max(r[2] for r in rows) < 1e-10


def test_polarization_classical_sphere(sphere_spec3, ico3):
    # achiral positive-contrast sphere: only the electric dipole block
    # survives and matches the quasi-static sphere response
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    for ec in (3.0, 5.0):
        pt = polarization_tensor(sphere_spec3, bg, ec, ico3)
        assert np.abs(pt.M[:3, 3:]).max() == 0
        assert np.abs(pt.M[3:, :3]).max() == 0
        assert np.abs(pt.M[3:, 3:]).max() == 0
        pred = -(4 * np.pi / 9) * (ec - 1) / (ec + 2)
        diag = np.diag(pt.M[:3, :3])
        assert np.allclose(diag, pred, rtol=0.05)
        off = pt.M[:3, :3] - np.diag(diag)
        assert np.abs(off).max() < 0.02 * np.abs(diag).max()


def test_polarization_blocks_isotropic(sphere_spec3, ico3):
    bg = ChiralBackground(1.0, 1.0, 0.4, 1.0)
    pt = polarization_tensor(sphere_spec3, bg, -3.0, ico3)
    for bi in (0, 3):
        for bj in (0, 3):
            blk = pt.M[bi:bi + 3, bj:bj + 3]
            diag = np.diag(blk)
            assert np.ptp(np.abs(diag)) <= 0.02 * np.abs(diag).max()
            off = blk - np.diag(diag)
            assert np.abs(off).max() <= 0.02 * np.abs(diag).max()


def test_polarization_blowup_slope(ball_spectrum, ico3):
    bg = ChiralBackground(1.0, 1.0, 0.4, 1.0)
    star = resonant_eps(bg, 1 / 6).real
    offsets = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    norms = [np.linalg.norm(polarization_tensor(ball_spectrum, bg, star + o, ico3).M)
             for o in offsets]
    assert loglog_slope(offsets, norms) == pytest.approx(-1.0, abs=0.05)


def test_polarization_singular_mode_error(ball_spectrum, ico3):
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(SingularModeError, match="lambda"):
        polarization_tensor(ball_spectrum, bg, -2.0, ico3)


def test_polarization_mesh_refinement_stable(sphere_spec3, ico3, sphere_spec4):
    # blocks depend on the mesh only through spectrum and volume
    spec4, mesh4 = sphere_spec4
    bg = ChiralBackground(1.0, 1.0, 0.4, 1.0)
    a = polarization_tensor(sphere_spec3, bg, -3.0, ico3).M
    b = polarization_tensor(spec4, bg, -3.0, mesh4).M
    # the leading eigenvalue moves ~0.07% with refinement; the 1/(lambda_eps -
    # lambda_n) factor amplifies that to ~2% at this contrast
    assert np.abs(a - b).max() / np.abs(b).max() < 0.03


def test_m_tilde_offset(ball_spectrum, ico3):
    bg = ChiralBackground(1.0, 1.0, 0.3, 1.0)
    pt = polarization_tensor(ball_spectrum, bg, -3.0, ico3)
    assert np.allclose(pt.M_tilde, pt.volume * np.eye(6) + pt.M)


def test_orientation_average_identity():
    assert np.allclose(orientation_average(np.eye(3)), np.eye(3))


def test_orientation_average_rank_one():
    assert np.allclose(orientation_average(np.diag([1.0, 0.0, 0.0])), np.eye(3) / 3)


def test_orientation_average_monte_carlo(rng):
    # (trace/3) I is the mean of R T R^T over uniformly random rotations
    from scipy.spatial.transform import Rotation

    m = rng.normal(size=3)
    T = np.outer(m, m)
    R = Rotation.random(40_000, random_state=np.random.RandomState(11)).as_matrix()
    mc = np.einsum("nij,jk,nlk->il", R, T, R) / len(R)
    expect = orientation_average(T)
    assert expect == pytest.approx(np.dot(m, m) / 3 * np.eye(3))
    assert np.abs(mc - expect).max() < 0.01 * np.abs(expect).max()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9))
def test_orientation_average_trace_preserved(entries):
    T = np.array(entries).reshape(3, 3)
    avg = orientation_average(T)
    assert np.trace(avg) == pytest.approx(np.trace(T), rel=1e-12, abs=1e-12)
    assert np.allclose(orientation_average(avg), avg)


def test_drude_values():
    assert drude_eps(1.0, 1.0, 0.0) == 0
    assert drude_eps(1e4, 1.0, 0.0) == pytest.approx(1.0, abs=1e-7)
    assert drude_eps(0.5, 1.0, 0.0) == pytest.approx(-3.0)


def test_drude_inversion():
    w = drude_omega_for_eps(-2.0, 1.0)
    assert w == pytest.approx(1 / np.sqrt(3), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(-8.0, 0.9), st.floats(0.5, 2.0), st.floats(0.0, 0.2))
def test_drude_roundtrip(target, omega_p, tau):
    w = drude_omega_for_eps(complex(target), omega_p, tau)
    back = drude_eps(w.real, omega_p, tau) if tau == 0 else 1.0 - omega_p ** 2 / (w ** 2 + 1j * tau * w)
    assert back == pytest.approx(complex(target), abs=1e-9)


def test_find_root_achiral():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    root = find_resonance_root(bg, 1 / 6, bracket=(-3.0, -1.0))
    assert root == pytest.approx(-2.0, abs=1e-10)


def test_find_root_small_beta_perturbation():
    bg = ChiralBackground(1.0, 1.0, 1e-2, 1.0)
    root = find_resonance_root(bg, 1 / 6, bracket=(-3.0, -1.0))
    assert abs(root - (-2.0)) < 1e-3
    assert abs(root - (-2.0)) > 1e-6  # the shift is real, O(beta^2)


def test_find_root_no_sign_change():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(RootFindError, match="sign change"):
        find_resonance_root(bg, 1 / 6, bracket=(-1.5, -1.0))


def test_find_root_secant_complex():
    bg = ChiralBackground(1.0, 1.0, 0.3, 1.0)
    star = resonant_eps(bg, 1 / 6)
    root = find_resonance_root(bg, 1 / 6, start=star * (1.0 + 1e-3))
    assert abs(root - star) < 1e-8
