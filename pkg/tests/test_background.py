import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiralmeta.background import (BackgroundError, ChiralBackground, SingularPointError,
                                   bohren_merge, bohren_split, circular_wave, green_dyadic,
                                   incident_field, incident_six, k0_matrix, linear_wave,
                                   make_beltrami, make_circular_basis, maxwell_dyadic,
                                   regularized_green)
from _fd import dbf_residual, fd_curl

E3 = np.array([0.0, 0.0, 1.0])


def bg_chiral():
    return ChiralBackground(eps_m=1.2, mu_m=0.8, beta_m=0.3, omega=1.1)


def test_derived_constants_identities():
    bg = bg_chiral()
    assert bg.k == pytest.approx(bg.omega * np.sqrt(bg.eps_m * bg.mu_m), rel=1e-15)
    assert bg.gamma1 * bg.gamma2 == pytest.approx(bg.gamma_sq, rel=1e-14)
    assert 0.5 * (1 / bg.gamma1 + 1 / bg.gamma2) == pytest.approx(1 / bg.k, rel=1e-14)
    assert bg.gamma1 > bg.gamma2 > 0


def test_zero_chirality_constants():
    bg = ChiralBackground(1.0, 1.0, 0.0, 2.0)
    assert bg.gamma1 == bg.gamma2 == bg.k == 2.0
    assert bg.dbf_factor == 1.0
    assert not bg.out_of_assumption


def test_kbeta_guard():
    with pytest.raises(BackgroundError):
        ChiralBackground(1.0, 1.0, 1.09, 1.0)
    with pytest.warns(UserWarning):
        bg = ChiralBackground(1.0, 1.0, 1.09, 1.0, allow_kbeta_ge_1=True)
    assert bg.out_of_assumption


def test_parameter_validation():
    for bad in (dict(eps_m=-1.0), dict(mu_m=0.0), dict(omega=0.0), dict(beta_m=-0.1)):
        kw = dict(eps_m=1.0, mu_m=1.0, beta_m=0.1, omega=1.0)
        kw.update(bad)
        with pytest.raises(BackgroundError):
            ChiralBackground(**kw)


def test_circular_basis_right():
    p, q = make_circular_basis(E3, "right")
    assert np.allclose(q, np.array([1.0, -1.0j, 0.0]) / np.sqrt(2))
    assert np.allclose(np.cross(p, q), 1j * q)


def test_circular_basis_left():
    p, q = make_circular_basis(E3, "left")
    assert np.allclose(q, np.array([1.0, 1.0j, 0.0]) / np.sqrt(2))
    assert np.allclose(np.cross(p, q), -1j * q)


def test_circular_basis_orthogonal():
    for hand in ("left", "right"):
        p, q = make_circular_basis(E3, hand)
        assert np.dot(p, q) == 0  # exact for an axis-aligned frame
        p, q = make_circular_basis(np.array([0.6, 0.0, 0.8]), hand)
        assert abs(np.dot(p, q)) < 1e-15


def test_circular_basis_zero_direction():
    with pytest.raises(BackgroundError):
        make_circular_basis(np.zeros(3), "left")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.sampled_from(["left", "right"]))
def test_circular_basis_invariants(direction, hand):
    d = np.asarray(direction)
    nrm = np.linalg.norm(d)
    if nrm < 1e-3:
        return
    d = d / nrm
    sign = -1.0 if hand == "left" else 1.0
    p, q = make_circular_basis(d, hand)
    assert abs(np.dot(p, q)) < 1e-12
    assert np.linalg.norm(np.cross(p, q) - sign * 1j * q) < 1e-12


def test_incident_at_origin():
    bg = bg_chiral()
    wave = circular_wave(E3, "left")
    e, h = incident_field(bg, wave, np.zeros(3))
    assert np.allclose(e, wave.q1 + wave.q2)
    # H carries the impedance factor with opposite signs per handedness
    imp = np.sqrt(bg.eps_m / bg.mu_m)
    assert np.allclose(h, -1j * imp * wave.q1 + 1j * imp * wave.q2)


def test_incident_q1_term_is_beltrami():
    bg = bg_chiral()
    p, q = make_circular_basis(E3, "left")

    def term(x):
        return q * np.exp(1j * bg.gamma1 * np.dot(p.real, x))

    x = np.array([0.3, -0.2, 0.5])
    curl = fd_curl(term, x)
    assert np.linalg.norm(curl - bg.gamma1 * term(x)) / np.linalg.norm(term(x)) < 1e-4


@pytest.mark.parametrize("hand", ["left", "right"])
def test_incident_satisfies_chiral_system(hand):
    bg = bg_chiral()
    wave = circular_wave(np.array([0.6, 0.0, 0.8]), hand)
    x = np.array([0.2, 0.4, -0.3])
    res = dbf_residual(bg, lambda y: incident_field(bg, wave, y)[0],
                       lambda y: incident_field(bg, wave, y)[1], x)
    assert res < 1e-4


def test_incident_random_samples(rng):
    bg = ChiralBackground(1.0, 1.3, 0.25, 0.9)
    for _ in range(20):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        hand = "left" if rng.random() < 0.5 else "right"
        wave = circular_wave(d, hand)
        x = rng.uniform(-1, 1, size=3)
        res = dbf_residual(bg, lambda y: incident_field(bg, wave, y)[0],
                           lambda y: incident_field(bg, wave, y)[1], x)
        assert res < 1e-4


def test_incident_six_stacks_pair():
    bg = bg_chiral()
    wave = linear_wave(E3, np.array([0.0, 1.0, 0.0]))
    x = np.array([0.1, 0.2, 0.3])
    e, h = incident_field(bg, wave, x)
    assert np.allclose(incident_six(bg, wave, x), np.concatenate([e, h]))


def test_green_classical_reduction():
    bg = ChiralBackground(1.3, 0.7, 0.0, 1.2)
    for x in (np.array([1.0, 0.0, 0.0]), np.array([0.4, -0.8, 0.3])):
        G = green_dyadic(bg, x)
        # EE block carries the omega eps_m mu_m prefactor of the chiral
        # convention relative to the bare (I + grad grad / k^2) g kernel
        ref_ee = bg.omega * bg.eps_m * bg.mu_m * maxwell_dyadic(bg.k, x)
        assert np.abs(G[:3, :3] - ref_ee).max() / np.abs(ref_ee).max() < 1e-10


def test_green_offdiagonal_blocks_beta0():
    # at beta=0 the two circular branches coincide, so the EH and HE
    # blocks are the same curl dyadic up to the medium impedance factors
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    x = np.array([0.5, 0.3, -0.7])
    G = green_dyadic(bg, x)
    assert np.abs(G[:3, 3:] + G[3:, :3]).max() < 1e-12 * np.abs(G).max()


def test_green_columns_satisfy_chiral_system():
    bg = bg_chiral()
    for d in (np.array([1.0, 0.0, 0.0]), np.array([0.5, -0.5, np.sqrt(0.5)])):
        for col in range(6):
            res = dbf_residual(bg, lambda y, c=col: green_dyadic(bg, y)[:3, c],
                               lambda y, c=col: green_dyadic(bg, y)[3:, c], d, h=1e-4)
            assert res < 1e-3


def test_green_outgoing_decay():
    bg = bg_chiral()
    d = np.array([0.8, 0.6, 0.0])
    vals = [r * np.linalg.norm(green_dyadic(bg, r * d), ord=2) for r in (1, 3, 10, 30, 100)]
    assert max(vals) < 10 * vals[-1]  # r * ||G|| stays bounded along the ray


def test_green_singularity_guard():
    with pytest.raises(SingularPointError):
        green_dyadic(bg_chiral(), np.array([0.0, 0.0, 1e-13]))


def test_regularized_reduces_at_eta0():
    bg = bg_chiral()
    x = np.array([0.3, 0.4, 0.5])
    assert np.array_equal(regularized_green(bg, x, 0.0), green_dyadic(bg, x))


def test_regularized_finite_at_origin():
    bg = bg_chiral()
    G = regularized_green(bg, np.zeros(3), 1e-2)
    assert np.all(np.isfinite(G))
    # the scalar kernel value at the origin is 1/eta, so halving eta
    # doubles the matrix magnitude exactly
    G2 = regularized_green(bg, np.zeros(3), 2e-2)
    assert np.abs(G).max() == pytest.approx(2.0 * np.abs(G2).max(), rel=1e-12)


def test_regularized_eta0_origin_error():
    with pytest.raises(SingularPointError):
        regularized_green(bg_chiral(), np.zeros(3), 0.0)


def test_regularized_eta_continuity():
    bg = bg_chiral()
    x = np.array([0.4, 0.1, -0.2])
    G0 = green_dyadic(bg, x)
    devs = [np.abs(regularized_green(bg, x, eta) - G0).max()
            for eta in (0.1, 0.05, 0.025, 0.0125)]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.01 * np.abs(G0).max()


def test_k0_zero_contrast():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    assert np.allclose(k0_matrix(bg, 1.0), np.zeros((2, 2)))


def test_k0_beta0_diagonal():
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    assert np.allclose(k0_matrix(bg, -2.5), np.diag([-3.5, 0.0]))


def test_k0_worked_example():
    bg = ChiralBackground(1.0, 1.0, 0.5, 1.0)
    ec = -3.0
    expected = np.array([[ec - 4.0 / 3.0, -2.0j / 3.0],
                         [2.0j / 3.0, -1.0 / 3.0]])
    assert np.allclose(k0_matrix(bg, ec), expected, rtol=1e-14)


def test_bohren_split_left_circular_pure():
    bg = bg_chiral()
    consts = make_beltrami(bg, 2.0 + 0.0j)
    p, q = make_circular_basis(E3, "left")
    x = np.array([0.2, 0.1, 0.4])
    e = q * np.exp(1j * bg.gamma1 * np.dot(p.real, x))
    h = -1j * np.sqrt(bg.eps_m / bg.mu_m) * e
    q1, q2 = bohren_split(e, h, consts, "exterior")
    assert np.linalg.norm(q2) < 1e-12 * np.linalg.norm(q1)


def test_bohren_merge_inverse():
    bg = bg_chiral()
    consts = make_beltrami(bg, -2.0 + 0.1j)
    rng = np.random.default_rng(7)
    for region in ("interior", "exterior"):
        e = rng.normal(size=3) + 1j * rng.normal(size=3)
        h = rng.normal(size=3) + 1j * rng.normal(size=3)
        q1, q2 = bohren_split(e, h, consts, region)
        e2, h2 = bohren_merge(q1, q2, consts, region)
        assert np.allclose(e2, e, rtol=1e-12, atol=1e-14)
        assert np.allclose(h2, h, rtol=1e-12, atol=1e-14)


def test_bohren_q1_is_beltrami_field():
    bg = bg_chiral()
    consts = make_beltrami(bg, 2.0 + 0.0j)
    p, _ = make_circular_basis(E3, "left")

    def q1_field(x):
        e = incident_field(bg, circular_wave(E3, "left"), x)[0]
        h = incident_field(bg, circular_wave(E3, "left"), x)[1]
        return bohren_split(e, h, consts, "exterior")[0]

    x = np.array([0.15, -0.3, 0.2])
    curl = fd_curl(q1_field, x)
    assert np.linalg.norm(curl - consts.gamma_1m * q1_field(x)) / np.linalg.norm(q1_field(x)) < 1e-4


def test_beltrami_identity_limit_advisory():
    # the verbatim zeta formulas at beta=0, eps_c=eps_m give an
    # identity-like matrix except for the i in zeta_22
    bg = ChiralBackground(1.0, 1.0, 0.0, 1.0)
    consts = make_beltrami(bg, 1.0 + 0.0j)
    assert consts.zeta_11 == pytest.approx(1.0)
    assert abs(consts.zeta_12) < 1e-14
    assert abs(consts.zeta_21) < 1e-14
    assert consts.zeta_22 == pytest.approx(1j)
