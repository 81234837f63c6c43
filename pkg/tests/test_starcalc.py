import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncwigner import starcalc as sc
from ncwigner.errors import DegenerateKernel, GridMismatch, NotGaussian
from ncwigner.gausspoly import GaussPoly, Poly
from ncwigner.measures import gaussian_wave, hermite_wave, wigner_transform
from ncwigner.symplectic import build_omega, planar, standard_j

KINDS_4D = ["full", "hbar", "theta", "eta", "theta-eta"]


def ground_state_2d(hbar=1.0):
    return wigner_transform(gaussian_wave(0.5 / hbar).fn, hbar)


def narrow_pair(scale=1.0):
    a = GaussPoly.gaussian(scale * (3 * np.eye(4) + 0.3 * np.ones((4, 4))), center=[0.1, 0, 0.2, -0.1], linphase=[0.4, 0, 0, -0.3])
    b = GaussPoly.gaussian(scale * np.diag([3.2, 2.9, 3.1, 3.4]), center=[0, 0.1, -0.1, 0])
    return a, b


# -- grid plumbing ---------------------------------------------------------


@pytest.mark.parametrize("npts", [8, 48, 100])
def test_grid_rejects_bad_sizes(npts):
    with pytest.raises(GridMismatch):
        sc.GridSpec.box(1.0, npts, 2)


def test_grid_rejects_three_axes():
    with pytest.raises(GridMismatch):
        sc.GridSpec((-1, -1, -1), (1, 1, 1), (16, 16, 16))


def test_grid_axes_are_cell_centred():
    spec = sc.GridSpec((-1.0, 0.0), (1.0, 4.0), (16, 32))
    x = spec.axis(0)
    assert x[0] == pytest.approx(-1 + 1 / 16)
    assert np.allclose(np.diff(spec.axis(1)), 4 / 32)
    assert spec.cell_volume == pytest.approx((2 / 16) * (4 / 32))
    assert sc.GridSpec.from_dict(spec.to_dict()) == spec


def test_gridfn_values_are_frozen():
    spec = sc.GridSpec.box(1.0, 16, 2)
    f = sc.constant(spec, 2.0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_operands_on_different_grids():
    f = sc.constant(sc.GridSpec.box(1.0, 16, 2))
    g = sc.constant(sc.GridSpec.box(2.0, 16, 2))
    with pytest.raises(GridMismatch):
        sc.star_product(f, g, None, "hbar", hbar=1.0)


def test_sampled_gaussian_integrates_to_one():
    f = GaussPoly.normalized_gaussian(np.diag([1.0, 1.4, 0.8, 1.2]), center=[0.3, 0, 0, -0.2])
    spec = sc.default_grid(f, npts=32)
    g = sc.sample(f, spec)
    assert sc.integrate_grid(g).real == pytest.approx(1.0, abs=1e-9)
    assert g.info["tail_mass"] < 1e-10


def test_tail_mass_shrinks_with_box():
    f = GaussPoly.normalized_gaussian(np.eye(2))
    small = sc.tail_mass(f, sc.GridSpec.box(1.0, 16, 2))
    big = sc.tail_mass(f, sc.GridSpec.box(5.0, 16, 2))
    assert small > 0.1
    assert big < 1e-6


def test_grid_purity_of_ground_state():
    f = ground_state_2d()
    g = sc.sample(f, sc.GridSpec.box(6.0, 64, 2))
    assert sc.grid_purity(g) == pytest.approx(1 / (2 * math.pi), rel=1e-10)


# -- canonical shear -------------------------------------------------------


@pytest.mark.parametrize("hbar,theta,eta", [(1.0, 0.5, 0.5), (1.3, -0.4, 0.9), (0.7, 0.2, -0.3)])
def test_canonical_shear_is_darboux(hbar, theta, eta):
    form = build_omega(planar(hbar, theta, eta))
    s = sc.canonical_shear(form)
    assert np.allclose(s @ standard_j(2) @ s.T, form.omega, atol=1e-12)


# -- star products on 2-axis grids ------------------------------------------


def test_constant_operand_short_circuits():
    spec = sc.GridSpec.box(5.0, 32, 2)
    f = sc.sample(ground_state_2d(), spec)
    one = sc.constant(spec)
    assert np.array_equal(sc.star_product(f, one, None, "hbar", hbar=1.0).values, f.values)
    assert np.array_equal(sc.star_product(one, f, None, "hbar", hbar=1.0).values, f.values)


@pytest.mark.parametrize("hbar", [1.0, 0.5])
def test_pure_state_is_idempotent(hbar):
    w = ground_state_2d(hbar)
    spec = sc.GridSpec.box(5.5 * math.sqrt(hbar), 64, 2)
    f = sc.sample(w, spec)
    ff = sc.star_product(f, f, None, "hbar", hbar=hbar)
    assert ff.info["bandwidth_ratio"] < 1
    expected = f.values / (2 * math.pi * hbar)
    assert sc.interior_max_diff(ff, expected, 0.25) < 1e-6 * np.abs(expected).max()


def test_excited_state_is_idempotent():
    w = wigner_transform(hermite_wave(0.5).fn, 1.0)
    spec = sc.GridSpec.box(6.5, 64, 2)
    f = sc.sample(w, spec)
    ff = sc.star_product(f, f, None, "hbar", hbar=1.0)
    expected = f.values / (2 * math.pi)
    assert sc.interior_max_diff(ff, expected, 0.25) < 1e-5 * np.abs(expected).max()


def _random_gaussian_2d(seed):
    # Widths near the uncertainty scale: very narrow operands have wide
    # operator kernels that a modest box would truncate.
    r = np.random.default_rng(seed)
    m = r.normal(size=(2, 2)) * 0.3
    g = m @ m.T + 0.8 * np.eye(2)
    return GaussPoly.gaussian(g, center=r.uniform(-0.3, 0.3, 2), linphase=r.uniform(-0.5, 0.5, 2))


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_grid_matches_closed_form_2d(seed):
    a, b = _random_gaussian_2d(seed), _random_gaussian_2d(seed + 1)
    a = GaussPoly(Poly.linear([1.0, -0.5], 0.3), a.g, a.h, a.c)
    spec = sc.GridSpec.box(6.0, 64, 2)
    got = sc.star_product(sc.sample(a, spec), sc.sample(b, spec), None, "hbar", hbar=1.0)
    exact = sc.star_closed(a, b, 1.0 * standard_j(1))
    want = exact(spec.points())
    assert sc.interior_max_diff(got, want, 0.25) < 1e-5 * np.abs(want).max()


def test_associativity_2d():
    spec = sc.GridSpec.box(6.0, 64, 2)
    a, b, c = (sc.sample(_random_gaussian_2d(s), spec) for s in (1, 2, 3))
    left = sc.star_product(sc.star_product(a, b, None, "hbar", hbar=1.0), c, None, "hbar", hbar=1.0)
    right = sc.star_product(a, sc.star_product(b, c, None, "hbar", hbar=1.0), None, "hbar", hbar=1.0)
    assert sc.interior_max_diff(left, right, 0.3) < 1e-6 * np.abs(right.values).max()


def test_conjugation_reverses_order():
    spec = sc.GridSpec.box(6.0, 64, 2)
    a, b = (sc.sample(_random_gaussian_2d(s), spec) for s in (4, 5))
    ab = sc.star_product(a, b, None, "hbar", hbar=1.0)
    ba = sc.star_product(b.conj(), a.conj(), None, "hbar", hbar=1.0)
    assert sc.interior_max_diff(ab.conj(), ba, 0.25) < 1e-10
    assert sc.interior_max_diff(ab, sc.star_product(b, a, None, "hbar", hbar=1.0), 0.25) > 1e-3


def test_degenerate_constant_rejected(form):
    spec = sc.GridSpec.box(3.0, 16, 4)
    f = sc.sample(GaussPoly.normalized_gaussian(np.eye(4)), spec)
    commutative = build_omega(planar(1.0, 0.0, 0.5))
    with pytest.raises(DegenerateKernel):
        sc.star_product(f, f, commutative, "theta")


# -- star products on 4-axis grids ------------------------------------------


@pytest.mark.parametrize(
    "kind,scale,half_width",
    [("full", 0.5, 5.0), ("hbar", 0.5, 5.0), ("theta", 1.0, 3.5), ("eta", 1.0, 3.5), ("theta-eta", 1.0, 3.5)],
)
def test_grid_matches_closed_form_4d(kind, scale, half_width, form):
    a, b = narrow_pair(scale)
    spec = sc.GridSpec.box(half_width, 32, 4)
    got = sc.star_product(sc.sample(a, spec), sc.sample(b, spec), form, kind)
    want = sc.star_closed(a, b, sc.poisson_matrix(form, kind))(spec.points())
    assert sc.interior_max_diff(got, want, 0.25) < 2e-5 * np.abs(want).max()


@pytest.mark.parametrize("kind", KINDS_4D)
def test_kernel_route_matches_fourier_route(kind, form, rng):
    a, b = narrow_pair()
    pts = rng.normal(scale=0.4, size=(20, 4))
    k = sc.gaussian_star_gaussian(a, b, form, kind)(pts)
    c = sc.star_closed(a, b, sc.poisson_matrix(form, kind))(pts)
    assert np.allclose(k, c, rtol=1e-12, atol=1e-14)


def test_kernel_route_rejects_polynomials(form):
    a, b = narrow_pair()
    a = GaussPoly(Poly.var(4, 0), a.g, a.h, a.c)
    with pytest.raises(NotGaussian):
        sc.gaussian_star_gaussian(a, b, form)


def test_full_product_reduces_to_hbar_when_commutative():
    form = build_omega(planar(1.0, 0.0, 0.0))
    assert np.allclose(sc.poisson_matrix(form, "full"), standard_j(2))


@pytest.mark.parametrize("kind", ["hbar", "full"])
def test_direct_quadrature_matches_closed_form(kind, form):
    a = GaussPoly.gaussian(2 * np.eye(4) + 0.2 * np.ones((4, 4)), center=[0.1, 0, 0.2, -0.1])
    b = GaussPoly.gaussian(np.diag([2.2, 1.9, 2.1, 2.4]) - 0.1, center=[0, 0.1, -0.1, 0])
    spec = sc.GridSpec.box(4.0, 32, 4)
    pts = np.array([[0, 0, 0, 0], [0.2, -0.1, 0.1, 0.3]])
    got = sc.star_direct(sc.sample(a, spec), sc.sample(b, spec), form, pts, kind)
    want = sc.star_closed(a, b, sc.poisson_matrix(form, kind))(pts)
    assert np.allclose(got, want, rtol=1e-8, atol=1e-12)


# -- positivity functional ---------------------------------------------------


def test_positivity_nonnegative_on_wigner_function():
    spec = sc.GridSpec.box(5.5, 64, 2)
    f = sc.sample(ground_state_2d(), spec)
    for seed in range(4):
        g = sc.sample(_random_gaussian_2d(seed), spec)
        res = sc.positivity_functional(g, f, None, "hbar", hbar=1.0)
        assert res.value > 0
        assert abs(res.imag_residual) < 1e-12


def test_positivity_detects_non_wigner_function():
    # A Gaussian narrower than the uncertainty bound, tested against the
    # excited state whose Wigner function is negative at the origin.
    spec = sc.GridSpec.box(6.5, 64, 2)
    narrow = GaussPoly.normalized_gaussian(np.eye(2) / 0.1)
    w1 = wigner_transform(hermite_wave(0.5).fn, 1.0)
    res = sc.positivity_functional(sc.sample(w1, spec), sc.sample(narrow, spec), None, "hbar", hbar=1.0)
    assert res.value < 0


# -- export --------------------------------------------------------------------


def test_binary_round_trip():
    spec = sc.GridSpec((-1.0, -2.0, -1.5, -1.0), (1.0, 2.0, 1.5, 3.0), (16, 16, 32, 16))
    f = sc.sample(narrow_pair()[0], spec)
    blob = sc.to_binary(f)
    assert blob[:4] == b"NCWG"
    back = sc.from_binary(blob)
    assert back.spec == spec
    assert np.array_equal(back.values, f.values)


def test_binary_rejects_foreign_bytes():
    with pytest.raises(GridMismatch):
        sc.from_binary(b"JUNK" + bytes(40))


def test_csv_export(tmp_path):
    spec = sc.GridSpec.box(2.0, 16, 2)
    f = sc.sample(ground_state_2d(), spec)
    path = tmp_path / "f.csv"
    sc.to_csv(f, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (256, 4)
    assert open(path).readline().strip() == "q,p,re,im"
    assert np.allclose(data[:, 2], f.values.real.reshape(-1), rtol=1e-15)
    assert np.allclose(data[:, :2], spec.points().reshape(-1, 2))


def test_thread_limit_is_a_context_manager():
    with sc.thread_limit(1):
        spec = sc.GridSpec.box(5.0, 32, 2)
        f = sc.sample(ground_state_2d(), spec)
        sc.star_product(f, f, None, "hbar", hbar=1.0)
