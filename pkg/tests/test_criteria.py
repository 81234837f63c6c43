import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncwigner import criteria as cr
from ncwigner.errors import InternalInconsistency, NotHermitian, NotNormalized, NotSPD
from ncwigner.gausspoly import GaussPoly, GaussSum
from ncwigner.measures import F_C, LabeledMeasure, catalog, gaussian_wave, wigner_pure
from ncwigner.symplectic import build_omega, planar


def _min_eig_cubic(m):
    """Smallest eigenvalue of a Hermitian matrix of size <= 3 from its characteristic polynomial."""
    n = m.shape[0]
    if n == 1:
        return m[0, 0].real
    if n == 2:
        a, d, b = m[0, 0].real, m[1, 1].real, abs(m[0, 1])
        return (a + d) / 2 - math.sqrt(((a - d) / 2) ** 2 + b**2)
    # Trigonometric solution of the depressed cubic.
    q = np.trace(m).real / 3
    p1 = abs(m[0, 1]) ** 2 + abs(m[0, 2]) ** 2 + abs(m[1, 2]) ** 2
    p2 = sum((m[i, i].real - q) ** 2 for i in range(3)) + 2 * p1
    p = math.sqrt(p2 / 6)
    if p == 0:
        return q
    r = np.linalg.det((m - q * np.eye(3)) / p).real / 2
    phi = math.acos(min(1.0, max(-1.0, r))) / 3
    return q + 2 * p * math.cos(phi + 2 * math.pi / 3)


def ground_state(params):
    gs = wigner_pure(gaussian_wave(0.5 / params.hbar, 2), params.hbar)
    return LabeledMeasure(gs.fn, gs.provenance, params, gs.claims)


def gaussian_measure(a, params):
    return LabeledMeasure(GaussPoly.normalized_gaussian(a).with_real(True), "test", params)


# -- PSD engine ------------------------------------------------------------------


@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_min_eigenvalue_matches_cubic_oracle(n, seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    m = x + x.conj().T
    v = cr.hermitian_psd(m)
    assert v.min_eigenvalue == pytest.approx(_min_eig_cubic(m), abs=1e-9)
    assert v.is_psd == (v.min_eigenvalue >= -v.tolerance_used)


def test_psd_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        cr.hermitian_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_psd_tolerance_accepts_rounding():
    m = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-13 * np.eye(2)
    assert cr.hermitian_psd(m).is_psd
    assert not cr.hermitian_psd(m - 1e-6 * np.eye(2)).is_psd


# -- Gaussian criteria -------------------------------------------------------------


@pytest.mark.parametrize("hbar", [1.0, 0.3])
def test_ground_state_sits_on_the_boundary(hbar):
    a = np.eye(4) / hbar
    assert cr.gaussian_is_wigner(a, hbar).is_psd
    assert cr.gaussian_is_pure(a, hbar=hbar).is_pure
    assert not cr.gaussian_is_wigner(a * 1.01, hbar).is_psd
    wider = cr.gaussian_is_pure(a * 0.99, hbar=hbar)
    assert cr.gaussian_is_wigner(a * 0.99, hbar).is_psd and not wider.is_pure


def test_squeezed_state_is_pure():
    a = np.diag([4.0, 0.5, 0.25, 2.0])
    assert cr.gaussian_is_pure(a, hbar=1.0).is_pure
    assert np.allclose(cr.symplectic_spectrum(a), [1.0, 1.0])


def test_non_spd_rejected():
    with pytest.raises(NotSPD):
        cr.gaussian_is_wigner(np.diag([1.0, -1.0]), 1.0)
    with pytest.raises(NotSPD):
        cr.gaussian_is_wigner(np.eye(3), 1.0)


def test_ncwm_test_agrees_with_uncertainty_matrix(params, form):
    r = np.random.default_rng(7)
    agree = 0
    for _ in range(50):
        x = r.normal(size=(4, 4))
        c = (x @ x.T + 0.3 * np.eye(4)) * r.uniform(0.1, 1.5)
        exact = cr.gaussian_is_ncwm(c, form)
        if abs(exact.min_eigenvalue) < 1e-6:
            continue
        unc = cr.uncertainty_check(gaussian_measure(c, params))
        assert unc.is_psd == exact.is_psd
        agree += 1
    assert agree >= 45


def test_f6_is_a_pure_ncwm_but_not_a_wigner_function(params, form):
    a = cr.gaussian_form(catalog("f6", params).fn)
    assert cr.gaussian_is_pure(a, "ncwm", form).is_pure
    assert cr.gaussian_is_ncwm(a, form).is_psd
    assert not cr.gaussian_is_wigner(a, params.hbar).is_psd


def test_narrow_f3_fails_uncertainty(params):
    f3 = catalog("f3", params, a=0.1, b=0.1)
    assert not cr.uncertainty_check(f3).is_psd
    assert not cr.uncertainty_check(f3, commutative=True).is_psd


# -- purities ------------------------------------------------------------------


def gaussian_purity(a):
    """Purity of a normalized ``exp(-z^T A z)``: ``sqrt(det A) / (2 pi)^(n/2)``."""
    return math.sqrt(np.linalg.det(a)) / (2 * math.pi) ** (a.shape[0] / 2)


@pytest.mark.parametrize("fid", ["f3", "f5", "f6", "f7"])
def test_purity_of_gaussian_catalog_entries(fid, params):
    f = catalog(fid, params)
    a = cr.gaussian_form(f.fn)
    assert cr.purity_report(f).purity == pytest.approx(gaussian_purity(a), rel=1e-12)


def test_purity_bounds(params, form):
    rep = cr.purity_report(ground_state(params))
    assert rep.purity == pytest.approx(1 / (2 * math.pi) ** 2, rel=1e-12)
    assert rep.wigner_bound == pytest.approx(1 / (2 * math.pi) ** 2)
    assert rep.nc_bound == pytest.approx(rep.wigner_bound / 0.75)
    assert not rep.exceeds_wigner
    assert rep.theta_purity.bound == pytest.approx(1 / math.pi)


def test_pure_wigner_function_saturates_bound(params):
    rep = cr.purity_report(catalog("f1", params))
    assert rep.purity == pytest.approx(rep.wigner_bound, rel=1e-12)


# -- KLM ------------------------------------------------------------------------


def test_lambda_matrix_inverts_omega_at_the_nc_element():
    params = planar(1.0, 0.5, 0.3)
    form = build_omega(params)
    lam = cr.lambda_matrix(*cr.nc_element(params))
    assert np.allclose(lam, np.linalg.inv(form.omega), atol=1e-12)


def test_single_point_klm_matrix_is_one(params, form):
    f = catalog("f6", params)
    assert cr.klm_matrix(f, [[0.3, -0.1, 0.2, 0.5]], 1.0).matrix[0, 0] == pytest.approx(1.0)
    assert cr.klm_matrix(f, [[0.3, -0.1, 0.2, 0.5]], cr.nc_element(params), form).matrix[0, 0] == pytest.approx(1.0)


def test_klm_matrices_are_hermitian(params, form):
    pts = np.random.default_rng(1).normal(size=(6, 4))
    for spec, fm in [(1.0, None), (cr.nc_element(params), form)]:
        m = cr.klm_matrix(catalog("f7", params), pts, spec, fm).matrix
        assert np.allclose(m, m.conj().T, atol=1e-14)


@pytest.mark.parametrize("fid", ["f1", "f3", "f6"])
def test_alpha_and_minus_alpha_agree(fid, params):
    f = catalog(fid, params)
    pts = np.random.default_rng(3).normal(size=(5, 4)) * 0.8
    plus = cr.klm_matrix(f, pts, 0.7).min_eigenvalue
    minus = cr.klm_matrix(f, -pts, -0.7).min_eigenvalue
    assert plus == pytest.approx(minus, abs=1e-12)


def test_klm_matrix_of_gaussian_matches_criterion(params):
    # exp(-z^T A z) has alpha-positive type iff A^-1 + i alpha J >= 0,
    # and for a violating Gaussian a nearby pair of points shows it.
    a = np.eye(4) * 2.0
    f = gaussian_measure(a, params)
    res = cr.klm_search_violation(f, 1.0, trials=50)
    assert res.found
    assert not cr.gaussian_is_wigner(a, 1.0).is_psd


@pytest.mark.parametrize(
    "fid,alpha,trials",
    [("f3", 1.0, 4), ("f6", 1.0, 5), ("f1", 0.5, 148)],
)
def test_frozen_witnesses(fid, alpha, trials, params):
    res = cr.klm_search_violation(catalog(fid, params), alpha)
    assert res.found and res.trials == trials
    assert res.witness.min_eigenvalue < -res.witness.tolerance_used
    again = cr.klm_matrix(catalog(fid, params), res.witness.points, alpha)
    assert again.min_eigenvalue == pytest.approx(res.witness.min_eigenvalue)


def test_ground_state_survives_search(params):
    res = cr.klm_search_violation(ground_state(params), 1.0)
    assert not res.found and res.witness is None
    assert res.best_min_eigenvalue > -1e-9


def test_battery_is_reproducible(params):
    f = catalog("f2", params)
    a = cr.klm_battery(f, 1.0, count=5, seed=9)
    b = cr.klm_battery(f, 1.0, count=5, seed=9)
    assert all(np.array_equal(x.points, y.points) for x, y in zip(a, b))


# -- sharp map ------------------------------------------------------------------


@given(
    st.floats(0.2, 3.0),
    st.floats(-2.0, 2.0),
    st.floats(-2.0, 2.0),
)
def test_sharp_inverse_round_trip(alpha, beta, gamma):
    params = planar(1.0, 0.5, 0.3)
    back = cr.sharp_inverse(*cr.sharp_map(alpha, beta, gamma, params), params)
    assert np.allclose(back, (alpha, beta, gamma), atol=1e-10)


def test_sharp_map_is_odd():
    params = planar(1.3, 0.4, 0.9)
    r = np.random.default_rng(0)
    for x in r.normal(size=(100, 3)):
        assert np.allclose(cr.sharp_map(*(-x), params), -np.array(cr.sharp_map(*x, params)))


def test_sharp_map_landmarks(params):
    assert np.allclose(cr.sharp_map(1.0, 0.0, 0.0, params), np.array([1.25, 1.0, 1.0]) / 0.75**2)
    assert np.allclose(cr.sharp_map(1.0, 0.5, 0.5, params), cr.nc_element(params))


def test_zeta_prime_of_nc_element(params):
    assert cr.zeta_prime(*cr.nc_element(params)) == pytest.approx(params.zeta)


# -- spectrum probe ------------------------------------------------------------


def test_ground_state_spectrum_probe(params):
    hb = params.hbar
    recs = cr.spectrum_probe(ground_state(params), [hb, -hb, hb / 2, -hb / 2, 0.0], trials=100)
    assert [r.verdict for r in recs] == ["consistent"] * 5


def test_probe_refutes_f1_at_half_hbar(params):
    (rec,) = cr.spectrum_probe(catalog("f1", params), [0.5])
    assert rec.verdict == "refuted"
    assert rec.witness is not None


def test_probe_f7_nc_elements(params, form):
    f7 = catalog("f7", params)
    recs = cr.spectrum_probe(f7, [cr.nc_element(params), cr.sharp_map(params.hbar, 0, 0, params)], form, trials=200)
    assert [r.verdict for r in recs] == ["consistent", "consistent"]


# -- sign analysis and classification -------------------------------------------


def test_sign_of_hermite_state_is_negative(params):
    v = cr.sign_analysis(catalog("f1", params).fn)
    assert v.nonnegative is False and v.exact
    assert v.witness_value < 0


def test_sign_of_mixture_is_min_sampling(params):
    f = GaussSum((catalog("f1", params).fn.scale(0.5), catalog("f2", params).fn.scale(0.5)), real=True)
    v = cr.sign_analysis(f)
    assert v.method in ("min-sampling", "negative value found")


@pytest.mark.parametrize("n", range(1, 8))
def test_catalog_regions(n, params):
    rep = cr.classify(catalog(f"f{n}", params))
    assert rep.region == f"Omega_{n}"
    assert rep.certainty == "exact"


def test_commutative_parameters_copy_flags():
    params = planar(1.0, 0.0, 0.0)
    rep = cr.classify(ground_state(params))
    assert rep.flags["F^C"]["member"] and rep.flags["F^NC"]["member"]
    assert rep.region == "Omega_7"


def test_unclaimed_gaussian_uses_exact_criteria(params):
    rep = cr.classify(gaussian_measure(np.eye(4) * 0.6, params))
    assert rep.gaussian_exact is not None
    assert rep.region == "Omega_7"
    # Between the two thresholds: a Wigner function, but not an NCWM.
    assert cr.classify(gaussian_measure(np.eye(4) * 0.9, params)).region == "Omega_5"


def test_contradicting_claim_raises(params):
    f = catalog("f3", params)
    bogus = LabeledMeasure(f.fn, f.provenance, params, {**f.claims, F_C: "wrong"})
    with pytest.raises(InternalInconsistency):
        cr.classify(bogus)


def test_unnormalized_input_rejected(params):
    with pytest.raises(NotNormalized):
        LabeledMeasure(catalog("f2", params).fn.scale(2.0), "bad", params)


def test_report_serializes(params):
    import json

    rep = cr.classify(catalog("f4", params))
    text = json.dumps(rep.to_dict(), sort_keys=True)
    assert json.loads(text)["region"] == "Omega_4"
