"""Constructors for phase-space states.

Covers Wigner transforms of Hermite-Gaussian wavefunctions, their
noncommutative counterparts obtained through a Darboux map, the
two-variable theta/eta quasi-distributions, purity-maximising product states,
convex mixtures and a catalog of witness functions for the seven regions
spanned by the Wigner (``F^C``), noncommutative Wigner (``F^NC``) and
Liouville (``L``) sets.

Every constructor returns a :class:`LabeledMeasure`. It carries *claims*:
set memberships that follow from the construction itself rather than from a
numerical test. Each claim maps to a short reason string.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DarbouxMismatch,
    DegenerateKernel,
    NotNormalized,
    NotSymplectic,
    SideConditionViolated,
    WeightError,
)
from .gausspoly import (
    GaussFn,
    GaussPoly,
    GaussSum,
    Poly,
    affine_pullback,
    convolve,
    fn_from_dict,
    integrate,
    linear_compose,
    marginal,
    multiply,
)
from .symplectic import (
    E2,
    DarbouxMap,
    NCParams,
    build_omega,
    is_nc_symplectic,
    planar,
    verify_darboux,
)

F_C = "F^C"
F_NC = "F^NC"
LIOUVILLE = "L"
NOT_F_C = "not F^C"
NOT_F_NC = "not F^NC"
NOT_L = "not L"
THETA_SATURATED = "theta-purity saturated"
ETA_SATURATED = "eta-purity saturated"

#: Claims that survive convex combination.
CONVEX_STABLE = (F_C, F_NC, LIOUVILLE)

NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# Wavefunctions


@dataclass(frozen=True)
class WaveFn:
    """A normalized wavefunction ``psi`` in the Hermite-Gaussian class."""

    fn: GaussPoly

    def __post_init__(self) -> None:
        norm = integrate(multiply(self.fn.conj(), self.fn)).real
        if abs(norm - 1.0) > 1e-10:
            raise NotNormalized(f"int |psi|^2 = {norm:.12g}, expected 1")

    @property
    def dim(self) -> int:
        return self.fn.dim

    def __call__(self, x) -> np.ndarray:
        return self.fn(x)


def gaussian_wave(a: float, dim: int = 1, center=None) -> WaveFn:
    """``(2a/pi)^(dim/4) exp(-a |x - x0|^2)``."""
    if a <= 0:
        raise SideConditionViolated("a > 0 violated")
    logscale = 0.25 * dim * math.log(2 * a / math.pi)
    return WaveFn(GaussPoly.gaussian(a * np.eye(dim), center, None, logscale, real=True))


def hermite_wave(a: float) -> WaveFn:
    """First excited state ``(32 a^3 / pi)^(1/4) x exp(-a x^2)`` in one variable."""
    if a <= 0:
        raise SideConditionViolated("a > 0 violated")
    poly = Poly(1, {(1,): (32 * a**3 / math.pi) ** 0.25 + 0j})
    return WaveFn(GaussPoly.gaussian(np.array([[a]]), poly=poly, real=True))


def wave_psi5(a: float) -> WaveFn:
    """``(pi a)^(-1/2) exp(-|q|^2 / 2a)`` on the plane."""
    return WaveFn(GaussPoly.gaussian(np.eye(2) / (2 * a), logscale=-0.5 * math.log(math.pi * a), real=True))


def wave_psi1(a: float) -> WaveFn:
    """``(4 / 3a) sqrt(2/pi) q_1 exp(-2 |q|^2 / 3a)`` on the plane."""
    poly = Poly(2, {(1, 0): (4 / (3 * a)) * math.sqrt(2 / math.pi) + 0j})
    return WaveFn(GaussPoly.gaussian(np.eye(2) * 2 / (3 * a), poly=poly, real=True))


def wigner_transform(psi: GaussPoly, hbar: float) -> GaussPoly:
    """``(pi hbar)^-d int exp(-2i y.P/hbar) conj(psi(R-y)) psi(R+y) dy`` over ``(R, P)``."""
    d = psi.dim
    eye, zero = np.eye(d), np.zeros((d, d))
    minus = linear_compose(psi.conj(), np.hstack([eye, zero, -eye]))
    plus = linear_compose(psi, np.hstack([eye, zero, eye]))
    g = np.zeros((3 * d, 3 * d), dtype=complex)
    g[d : 2 * d, 2 * d :] = 1j / hbar * eye
    g[2 * d :, d : 2 * d] = 1j / hbar * eye
    phase = GaussPoly(Poly.const(3 * d), g, np.zeros(3 * d), 0j)
    joint = multiply(multiply(minus, plus), phase)
    out = marginal(joint, list(range(2 * d)))
    return out.scale((math.pi * hbar) ** (-d)).with_real(True)


# ---------------------------------------------------------------------------
# Labeled measures


@dataclass(frozen=True)
class LabeledMeasure:
    """A real, normalized phase-space function with provenance.

    Parameters
    ----------
    fn : GaussPoly or GaussSum
    provenance : str
        Construction tag such as ``"wigner_pure"`` or ``"catalog:f6"``.
    params : NCParams
    claims : mapping
        Membership facts implied by the construction, each with its reason.
    """

    fn: GaussFn
    provenance: str
    params: NCParams
    claims: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "claims", dict(self.claims))
        if not self.fn.real:
            raise NotNormalized("measure must be tagged real")
        norm = integrate(self.fn)
        if abs(norm - 1.0) > NORM_TOL:
            raise NotNormalized(f"integral is {norm.real:.12g}, expected 1")

    @property
    def dim(self) -> int:
        return self.fn.dim

    def has(self, claim: str) -> bool:
        return bool(self.claims.get(claim))

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "params": self.params.to_dict(),
            "claims": dict(sorted(self.claims.items())),
            "function": self.fn.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict, params: NCParams | None = None) -> "LabeledMeasure":
        """Inverse of :meth:`to_dict`. A bare function descriptor gets ``params`` and no claims."""
        if "function" not in data:
            return cls(fn_from_dict(data), "descriptor", params or planar(), {})
        p = NCParams.from_dict(data["params"]) if "params" in data else (params or planar())
        return cls(fn_from_dict(data["function"]), data.get("provenance", "descriptor"), p, data.get("claims", {}))


def _keep_positivity(claims: Mapping[str, str]) -> dict[str, str]:
    return {k: v for k, v in claims.items() if k in (LIOUVILLE, NOT_L)}


def wigner_pure(psi: WaveFn, hbar: float) -> LabeledMeasure:
    """Wigner measure of the pure state ``psi``.

    Raises
    ------
    NotNormalized
    """
    if not isinstance(psi, WaveFn):
        psi = WaveFn(psi)
    fn = wigner_transform(psi.fn, hbar)
    d = psi.dim
    params = NCParams(hbar, np.zeros((d, d)), np.zeros((d, d)), d)
    return LabeledMeasure(fn, "wigner_pure", params, {F_C: "Wigner transform of a normalized wavefunction"})


def ncwm(fc: LabeledMeasure, s: DarbouxMap) -> LabeledMeasure:
    """``f^NC(z) = f^C(S^-1 z) / |Pf Omega|``.

    Raises
    ------
    DarbouxMismatch
        If ``fc`` is not a Wigner measure by construction, its ``hbar``
        differs from the form's, or ``S`` does not satisfy ``S J S^T = Omega``.
    """
    if not fc.has(F_C):
        raise DarbouxMismatch("input is not a Wigner measure by construction")
    if fc.params.d != s.form.d or not math.isclose(fc.params.hbar, s.form.hbar, rel_tol=1e-12):
        raise DarbouxMismatch("Wigner measure and Darboux map use different hbar or dimension")
    if not verify_darboux(s.s, s.form).ok:
        raise DarbouxMismatch("S J S^T != Omega")
    fn = affine_pullback(fc.fn, s.s_inv).scale(1.0 / abs(s.form.pf)).with_real(True)
    claims = _keep_positivity(fc.claims)
    claims[F_NC] = "Darboux pullback of a Wigner measure"
    return LabeledMeasure(fn, "ncwm", s.form.params, claims)


def _require_planar(params: NCParams) -> None:
    if params.d != 2:
        raise SideConditionViolated("d = 2 required")


def theta_wigner(phi: WaveFn, theta: float) -> GaussPoly:
    """Two-variable quasi-distribution over ``(q1, q2)`` with ``theta`` in the role of ``hbar``.

    Its square integrates to ``1 / (2 pi theta)``.
    """
    if theta == 0:
        raise DegenerateKernel("theta = 0 has no theta-Wigner measure")
    if not isinstance(phi, WaveFn):
        phi = WaveFn(phi)
    if phi.dim != 1:
        raise ValueError("phi must be a function of one variable")
    return wigner_transform(phi.fn, theta)


def eta_wigner(chi: WaveFn, eta: float) -> GaussPoly:
    """Momentum analogue of :func:`theta_wigner` over ``(p1, p2)``.

    Uses the same argument pattern ``conj(chi(p1 - y)) chi(p1 + y)``.
    """
    if eta == 0:
        raise DegenerateKernel("eta = 0 has no eta-Wigner measure")
    if not isinstance(chi, WaveFn):
        chi = WaveFn(chi)
    if chi.dim != 1:
        raise ValueError("chi must be a function of one variable")
    return wigner_transform(chi.fn, eta)


def _product_state(first: GaussPoly, second: GaussPoly, params: NCParams, kind: str) -> GaussPoly:
    hbar, zeta = params.hbar, params.zeta
    root = math.sqrt(1.0 - zeta)
    eye, zero = np.eye(2), np.zeros((2, 2))
    if kind == "theta":
        t = params.theta_scalar
        m1 = np.hstack([eye, (t / hbar) * E2]) / root
        m2 = np.hstack([eye, zero])
        coeff = (t / hbar) ** 2 / (1.0 - zeta)
    else:
        e = params.eta_scalar
        m1 = np.hstack([(e / hbar) * E2, eye]) / root
        m2 = np.hstack([zero, eye])
        coeff = (e / hbar) ** 2 / (1.0 - zeta)
    out = multiply(linear_compose(first, m1), linear_compose(second, m2))
    return out.scale(coeff).with_real(True)


def theta_product_state(phi1: WaveFn, phi2: WaveFn, params: NCParams) -> LabeledMeasure:
    """NCWM that saturates the theta-purity bound.

    ``f(q, p) = (theta/hbar)^2 / (1 - zeta) * f1((q + (theta/hbar) E p) / sqrt(1 - zeta)) * f2(q)``
    with ``f1, f2`` the theta-Wigner measures of ``phi1, phi2``.
    """
    _require_planar(params)
    build_omega(params)
    t = params.theta_scalar
    fn = _product_state(theta_wigner(phi1, t), theta_wigner(phi2, t), params, "theta")
    claims = {
        F_NC: "theta product state of two wavefunctions",
        NOT_F_C: "product states of this form exceed the Wigner purity bound",
        THETA_SATURATED: "position marginal is a pure theta-Wigner measure",
    }
    return LabeledMeasure(fn, "theta_product", params, claims)


def eta_product_state(chi1: WaveFn, chi2: WaveFn, params: NCParams) -> LabeledMeasure:
    """NCWM that saturates the eta-purity bound (momentum mirror of :func:`theta_product_state`)."""
    _require_planar(params)
    build_omega(params)
    e = params.eta_scalar
    fn = _product_state(eta_wigner(chi1, e), eta_wigner(chi2, e), params, "eta")
    claims = {
        F_NC: "eta product state of two wavefunctions",
        NOT_F_C: "product states of this form exceed the Wigner purity bound",
        ETA_SATURATED: "momentum marginal is a pure eta-Wigner measure",
    }
    return LabeledMeasure(fn, "eta_product", params, claims)


def convex_mix(members: Sequence[LabeledMeasure], weights: Sequence[float]) -> LabeledMeasure:
    """Weighted sum ``sum_i w_i f_i``.

    Only claims that are stable under convex combination and held by every
    member carry over.

    Raises
    ------
    WeightError
    """
    members = list(members)
    weights = [float(w) for w in weights]
    if not members or len(members) != len(weights):
        raise WeightError("need one weight per member")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise WeightError("weights must be non-negative and sum to 1")
    params = members[0].params
    if any(not m.params.same_as(params) for m in members[1:]):
        raise WeightError("members use different deformation parameters")
    if len(members) == 1:
        return members[0]
    terms = []
    for m, w in zip(members, weights):
        if w > 0:
            terms.extend(t.scale(w) for t in (m.fn.terms if isinstance(m.fn, GaussSum) else (m.fn,)))
    claims = {}
    for c in CONVEX_STABLE:
        if all(m.has(c) for m in members):
            claims[c] = "convex combination of members that all hold this claim"
    fn = GaussSum(tuple(terms), True) if len(terms) > 1 else terms[0].with_real(True)
    return LabeledMeasure(fn, "convex_mix", params, claims)


def symplectic_transform(m: LabeledMeasure, mat) -> LabeledMeasure:
    """``z -> f(M^-1 z)`` for ``M`` in the group preserving ``Omega``.

    NCWMs stay NCWMs and positivity is preserved. Wigner-set claims are
    dropped because ``M`` need not preserve ``J``.
    """
    form = build_omega(m.params)
    mat = np.asarray(mat, dtype=float)
    if not is_nc_symplectic(mat, form):
        raise NotSymplectic("M Omega M^T != Omega")
    fn = affine_pullback(m.fn, np.linalg.inv(mat)).with_real(True)
    claims = _keep_positivity(m.claims)
    if m.has(F_NC):
        claims[F_NC] = "image of an NCWM under an Omega-preserving map"
    return LabeledMeasure(fn, m.provenance + "+transform", m.params, claims)


# ---------------------------------------------------------------------------
# Catalog


def _f6_quadratic(a: float, params: NCParams) -> np.ndarray:
    hbar, t, zeta = params.hbar, params.theta_scalar, params.zeta
    k = (2.0 - zeta) / (1.0 - zeta)
    r = (t / (hbar * math.sqrt(1.0 - zeta))) ** 2
    s = 2.0 * t / (hbar * (1.0 - zeta))
    g = np.zeros((4, 4))
    g[0, 0] = 2 * k * a
    g[1, 1] = k / (2 * a * t**2)
    g[2, 2] = r / (2 * a * t**2)
    g[3, 3] = 2 * r * a
    g[0, 3] = g[3, 0] = s * a
    g[1, 2] = g[2, 1] = -s / (4 * a * t**2)
    return g


def _gaussian_catalog(g: np.ndarray, prefactor: float, poly: Poly | None = None) -> GaussPoly:
    return GaussPoly.gaussian(g, logscale=math.log(prefactor), poly=poly, real=True)


def _need_theta(params: NCParams) -> float:
    t = params.theta_scalar
    if t <= 0:
        raise SideConditionViolated("theta > 0 violated")
    return t


def catalog_f1(params: NCParams, a: float) -> GaussPoly:
    hbar = params.hbar
    g = np.diag([4 / (3 * a)] * 2 + [3 * a / (4 * hbar**2)] * 2)
    poly = Poly(4, {(2, 0, 0, 0): 1.0, (0, 0, 2, 0): 9 * a**2 / (16 * hbar**2), (0, 0, 0, 0): -3 * a / 8})
    return _gaussian_catalog(g, 1.0, poly.scale(8 / (3 * a * (math.pi * hbar) ** 2)))


def catalog_f2(params: NCParams, a: float) -> GaussPoly:
    hbar, t, zeta = params.hbar, params.theta_scalar, params.zeta
    poly = Poly(4, {(2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1 / (4 * a**2 * t**2), (0, 0, 0, 0): -1 / (4 * a)})
    pref = 4 * a / (math.pi * hbar * math.sqrt(1 - zeta)) ** 2
    return _gaussian_catalog(_f6_quadratic(a, params), 1.0, poly.scale(pref))


def catalog_f3(params: NCParams, a: float, b: float) -> GaussPoly:
    return _gaussian_catalog(np.diag([1 / a, 1 / a, 1 / b, 1 / b]), 1 / (math.pi**2 * a * b))


def catalog_f4(params: NCParams) -> GaussPoly:
    """``g`` (with ``c = theta, d = eta``) convolved with ``f2`` at ``a = 1/(2 theta)``, in closed form.

    Same shape as the textbook expression but with prefactor ``1/(9 (pi hbar)^2)``
    instead of ``1/(3 (pi hbar)^2)``, so that it integrates to one.
    """
    hbar, t = params.hbar, params.theta_scalar
    g = np.zeros((4, 4))
    g[0, 0] = g[1, 1] = 2 / (3 * t)
    g[2, 2] = g[3, 3] = 2 * t / (3 * hbar**2)
    # q . E p = q1 p2 - q2 p1
    g[0, 3] = g[3, 0] = 1 / (3 * hbar)
    g[1, 2] = g[2, 1] = -1 / (3 * hbar)
    # u = q - (theta/hbar) E p = (q1 - r p2, q2 + r p1)
    r = t / hbar
    c = 2 / (3 * t)
    poly = Poly(
        4,
        {
            (2, 0, 0, 0): c,
            (0, 2, 0, 0): c,
            (0, 0, 2, 0): c * r * r,
            (0, 0, 0, 2): c * r * r,
            (1, 0, 0, 1): -2 * c * r,
            (0, 1, 1, 0): 2 * c * r,
            (0, 0, 0, 0): -1.0,
        },
    )
    return _gaussian_catalog(g, 1.0, poly.scale(1 / (9 * (math.pi * hbar) ** 2)))


def catalog_f4_printed(params: NCParams) -> GaussPoly:
    """The textbook f4 expression verbatim (integrates to 3)."""
    f = catalog_f4(params)
    return GaussPoly(f.poly.scale(3.0), f.g, f.h, f.c, True)


def catalog_f5(params: NCParams, a: float) -> GaussPoly:
    hbar = params.hbar
    return _gaussian_catalog(np.diag([1 / a, 1 / a, a / hbar**2, a / hbar**2]), 1 / (math.pi * hbar) ** 2)


def catalog_f6(params: NCParams, a: float) -> GaussPoly:
    hbar, zeta = params.hbar, params.zeta
    return _gaussian_catalog(_f6_quadratic(a, params), 1 / (math.pi * hbar * math.sqrt(1 - zeta)) ** 2)


def catalog_g(params: NCParams, c: float, d: float) -> GaussPoly:
    return _gaussian_catalog(np.diag([1 / c, 1 / c, 1 / d, 1 / d]), 1 / (math.pi**2 * c * d))


def g_from_alpha_beta(params: NCParams, alpha: float, beta: float) -> tuple[float, float]:
    """``c = (1 + alpha^2 theta^2) / 2 alpha`` and ``d = (1 + beta^2 eta^2) / 2 beta``."""
    t, e = params.theta_scalar, params.eta_scalar
    return (1 + alpha**2 * t**2) / (2 * alpha), (1 + beta**2 * e**2) / (2 * beta)


def b_gaussian(alpha: float, beta: float) -> GaussPoly:
    """``(2/pi) sqrt(alpha beta) exp(-alpha q^2 - beta p^2)``; ``g = b *theta *eta b``."""
    g = np.diag([alpha, alpha, beta, beta])
    return GaussPoly.gaussian(g, logscale=math.log(2 / math.pi * math.sqrt(alpha * beta)), real=True)


CATALOG_IDS = ("f1", "f2", "f3", "f4", "f5", "f6", "f7", "g")


def default_constants(fid: str, params: NCParams) -> dict[str, float]:
    """Default free constants, chosen to satisfy every side condition with margin."""
    t = params.theta_scalar if params.d == 2 else 0.0
    e = params.eta_scalar if params.d == 2 else 0.0
    if fid in ("f1", "f5"):
        return {"a": 0.2}
    if fid == "f3":
        return {"a": 0.3, "b": 0.3}
    if fid in ("f2", "f6"):
        return {"a": 1 / (2 * t) if t > 0 else 1.0}
    if fid == "f7":
        return {"a": 1 / (2 * t) if t > 0 else 1.0, "alpha": 1 / t if t > 0 else 1.0, "beta": 1 / e if e > 0 else 1.0}
    if fid == "g":
        return {"c": t, "d": e}
    return {}


def catalog(fid: str, params: NCParams | None = None, **consts: float) -> LabeledMeasure:
    """Witness functions ``f1 ... f7`` and the Gaussian ``g``.

    Parameters
    ----------
    fid : {"f1", ..., "f7", "g"}
    params : NCParams, optional
        Defaults to ``hbar = 1, theta = eta = 0.5``.
    **consts
        Free constants (``a``, ``b``, ``c``, ``d``, ``alpha``, ``beta``).
        Missing ones take :func:`default_constants`.

    Raises
    ------
    SideConditionViolated
        With the violated inequality in the message.
    """
    params = planar() if params is None else params
    if fid not in CATALOG_IDS:
        raise ValueError(f"unknown catalog id {fid!r}; choose from {', '.join(CATALOG_IDS)}")
    _require_planar(params)
    build_omega(params)
    vals = default_constants(fid, params)
    unknown = set(consts) - set(vals)
    if unknown:
        raise ValueError(f"{fid} takes no constant(s) {sorted(unknown)}")
    vals.update({k: float(v) for k, v in consts.items() if v is not None})
    hbar, zeta = params.hbar, params.zeta
    t = params.theta_scalar
    e = params.eta_scalar

    def check(cond: bool, text: str) -> None:
        if not cond:
            raise SideConditionViolated(f"{text} violated")

    claims: dict[str, str]
    if fid in ("f1", "f5"):
        a = vals["a"]
        check(0 < a < t, "0 < a < θ")
        fn = catalog_f1(params, a) if fid == "f1" else catalog_f5(params, a)
        claims = {F_C: "Wigner transform of a normalized wavefunction"}
    elif fid in ("f2", "f6"):
        _need_theta(params)
        a = vals["a"]
        check(a > 0, "a > 0")
        fn = catalog_f2(params, a) if fid == "f2" else catalog_f6(params, a)
        claims = {
            F_NC: "theta product state of two wavefunctions",
            NOT_F_C: "product states of this form exceed the Wigner purity bound",
        }
    elif fid == "f3":
        a, b = vals["a"], vals["b"]
        check(a > 0 and b > 0, "a, b > 0")
        check(a * b < hbar**2 * (1 - zeta), "ab < ħ²(1−ζ)")
        fn = catalog_f3(params, a, b)
        claims = {}
    elif fid == "f4":
        _need_theta(params)
        check(e > 0, "η > 0")
        fn = catalog_f4(params)
        claims = {
            F_C: "convolution of an NCWM with a Gaussian of the b *theta *eta b form",
            F_NC: "convolution of an NCWM with a Gaussian of the b *theta *eta b form",
        }
    elif fid == "g":
        c, d = vals["c"], vals["d"]
        check(c >= t and d >= e and c > 0 and d > 0, "c ≥ θ, d ≥ η")
        fn = catalog_g(params, c, d)
        claims = {}
    else:  # f7
        _need_theta(params)
        check(e > 0, "η > 0")
        a, alpha, beta = vals["a"], vals["alpha"], vals["beta"]
        check(a > 0, "a > 0")
        check(alpha > 0 and beta > 0, "α, β > 0")
        c, d = g_from_alpha_beta(params, alpha, beta)
        fn = convolve(catalog_f6(params, a), catalog_g(params, c, d)).with_real(True)
        claims = {
            F_C: "convolution of an NCWM with a Gaussian of the b *theta *eta b form",
            F_NC: "convolution of an NCWM with a Gaussian of the b *theta *eta b form",
        }
    return LabeledMeasure(fn, f"catalog:{fid}", params, claims)


__all__ = [
    "F_C",
    "F_NC",
    "LIOUVILLE",
    "NOT_F_C",
    "NOT_F_NC",
    "NOT_L",
    "WaveFn",
    "LabeledMeasure",
    "gaussian_wave",
    "hermite_wave",
    "wave_psi1",
    "wave_psi5",
    "wigner_transform",
    "wigner_pure",
    "ncwm",
    "theta_wigner",
    "eta_wigner",
    "theta_product_state",
    "eta_product_state",
    "convex_mix",
    "symplectic_transform",
    "catalog",
    "default_constants",
    "CATALOG_IDS",
    "b_gaussian",
    "g_from_alpha_beta",
    "catalog_f4_printed",
]
