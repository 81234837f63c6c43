import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncwigner.errors import DegenerateForm, NotAntisymmetric, NotSymplectic
from ncwigner.symplectic import (
    E2,
    NCParams,
    build_omega,
    conjugate_symplectic,
    form_from_json,
    generic_darboux,
    is_nc_symplectic,
    is_symplectic,
    pf_sign_expected,
    pfaffian,
    pfaffian_matchings,
    planar,
    random_admissible_params,
    random_nc_symplectic,
    random_symplectic,
    standard_darboux,
    standard_j,
    verify_darboux,
)


def test_standard_j_shape_and_square():
    j = standard_j(3)
    assert j.shape == (6, 6)
    np.testing.assert_array_equal(j @ j, -np.eye(6))


def test_omega_blocks(params):
    om = build_omega(params).omega
    np.testing.assert_allclose(om[:2, :2], 0.5 * E2)
    np.testing.assert_allclose(om[2:, 2:], 0.5 * E2)
    np.testing.assert_allclose(om[:2, 2:], np.eye(2))


@pytest.mark.parametrize("theta,eta", [(0.5, 0.5), (0.3, -0.9), (0.0, 0.7), (1.2, 0.4)])
def test_planar_pfaffian_is_zeta_minus_one(theta, eta):
    p = planar(1.0, theta, eta)
    assert build_omega(p).pf == pytest.approx(p.zeta - 1.0, abs=1e-14)


def test_admissibility_bound_rejected():
    with pytest.raises(DegenerateForm, match="hbar"):
        planar(1.0, 1.0, 1.0)
    with pytest.raises(DegenerateForm):
        NCParams(-1.0)


def test_non_antisymmetric_rejected():
    with pytest.raises(NotAntisymmetric):
        NCParams(1.0, np.array([[0.0, 1.0], [0.5, 0.0]]), 0.0, 2)


def test_params_roundtrip(params):
    again = NCParams.from_dict(params.to_dict())
    assert again.same_as(params)
    assert form_from_json(params.to_dict()).pf == pytest.approx(-0.75)


def test_pfaffian_small_closed_forms():
    a = np.array([[0, 2.0], [-2.0, 0]])
    assert pfaffian(a) == 2.0
    m = np.zeros((4, 4))
    m[0, 1], m[0, 2], m[0, 3], m[1, 2], m[1, 3], m[2, 3] = 1, 2, 3, 4, 5, 6
    m = m - m.T
    # Pf = a12 a34 - a13 a24 + a14 a23
    assert pfaffian(m) == pytest.approx(1 * 6 - 2 * 5 + 3 * 4)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
def test_pfaffian_matches_matching_sum_and_det(n, rng):
    a = rng.normal(size=(n, n))
    a = a - a.T
    pf = pfaffian(a)
    assert pf == pytest.approx(pfaffian_matchings(a), rel=1e-10)
    assert pf**2 == pytest.approx(np.linalg.det(a), rel=1e-9)


@given(st.integers(1, 5))
def test_pfaffian_of_j(d):
    assert pfaffian(standard_j(d)) == pytest.approx(pf_sign_expected(d), abs=1e-12)


def test_pfaffian_of_odd_matrix_is_zero_or_rejected():
    a = np.zeros((3, 3))
    with pytest.raises(Exception):
        pfaffian(a)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_standard_darboux(lam):
    dm = standard_darboux(1.0, 0.5, 0.5, lam)
    chk = verify_darboux(dm.s, dm.form)
    assert chk.ok
    assert dm.det == pytest.approx(0.75, abs=1e-12)
    np.testing.assert_allclose(dm.s @ dm.s_inv, np.eye(4), atol=1e-14)


def test_standard_darboux_rejects_bad_lambda():
    with pytest.raises(DegenerateForm):
        standard_darboux(1.0, 0.5, 0.5, 0.0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_generic_darboux(d, rng):
    for _ in range(5):
        try:
            form = build_omega(random_admissible_params(d, rng))
        except DegenerateForm:
            continue
        dm = generic_darboux(form)
        assert verify_darboux(dm.s, form).ok
        assert dm.det > 0


def test_build_omega_refuses_wrong_sign_pfaffian():
    theta = eta = np.array([0.9, 0.9, 0.9])
    p = NCParams(1.0, theta, eta, 3)
    with pytest.raises(DegenerateForm, match="sign"):
        build_omega(p)


def test_random_symplectic_and_conjugation(rng, form):
    dm = standard_darboux(1.0, 0.5, 0.5)
    for _ in range(5):
        p = random_symplectic(2, rng)
        assert is_symplectic(p)
        m = conjugate_symplectic(p, dm)
        assert is_nc_symplectic(m, form)
    assert is_nc_symplectic(random_nc_symplectic(dm, rng), form)


def test_conjugation_rejects_non_symplectic():
    dm = standard_darboux(1.0, 0.5, 0.5)
    with pytest.raises(NotSymplectic):
        conjugate_symplectic(2 * np.eye(4), dm)


def test_sp_omega_is_a_group(rng, form):
    dm = standard_darboux(1.0, 0.5, 0.5)
    a, b = (random_nc_symplectic(dm, rng) for _ in range(2))
    assert is_nc_symplectic(a @ b, form)
    assert is_nc_symplectic(np.linalg.inv(a), form)


def test_pairwise_bound_counts_all_pairs():
    # Every pair of entries must satisfy the bound, including mixed indices.
    theta = np.array([0.2, 0.0, 1.5])
    eta = np.array([0.7, 0.0, 0.1])
    with pytest.raises(DegenerateForm):
        NCParams(1.0, theta, eta, 3)
    assert all(abs(t * e) < 1 for t, e in itertools.product([0.2, 1.5], [0.1, 0.6]))
    NCParams(1.0, theta, np.array([0.6, 0.0, 0.1]), 3)
