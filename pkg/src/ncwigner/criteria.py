"""Positivity, purity, uncertainty and classification tests.

Everything here is a necessary-condition test or an exact Gaussian
criterion. A finite KLM search can refute membership in the Wigner sets but
never certify it, and the reports keep that distinction explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import InternalInconsistency, NotHermitian, NotIntegrable, NotSPD, PreconditionError
from .gausspoly import (
    GaussFn,
    GaussPoly,
    GaussSum,
    marginal,
    moments,
    purity,
    symplectic_ft,
    terms_of,
)
from .measures import F_C, F_NC, LIOUVILLE, NOT_F_C, NOT_F_NC, NOT_L, LabeledMeasure
from .symplectic import E2, NCParams, build_omega, standard_darboux, standard_j

#: Default relative tolerance for generic PSD decisions.
PSD_RTOL = 1e-9
#: Looser tolerance for boundary (pure Gaussian) states.
BOUNDARY_RTOL = 1e-8
#: Relative slack before a purity bound counts as exceeded.
PURITY_RTOL = 1e-9
#: Relative tolerance for "symplectic spectrum equals hbar".
PURE_RTOL = 1e-8


# ---------------------------------------------------------------------------
# PSD engine


@dataclass(frozen=True)
class PsdVerdict:
    is_psd: bool
    min_eigenvalue: float
    tolerance_used: float

    def to_dict(self) -> dict:
        return {"is_psd": self.is_psd, "min_eigenvalue": self.min_eigenvalue, "tolerance_used": self.tolerance_used}


def hermitian_psd(m, tol: float | None = None, rtol: float = PSD_RTOL) -> PsdVerdict:
    """Decide ``m >= 0`` for a Hermitian matrix.

    Parameters
    ----------
    m : (n, n) array_like
    tol : float, optional
        Absolute tolerance. Defaults to ``rtol * (1 + ||m||)``.

    Raises
    ------
    NotHermitian
        If ``m`` differs from its adjoint by more than ``1e-10 ||m||``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.shape[0] != m.shape[1]:
        raise NotHermitian("matrix must be square")
    norm = float(np.linalg.norm(m, 2)) if m.size else 0.0
    if np.abs(m - m.conj().T).max(initial=0.0) > 1e-10 * max(norm, 1e-300):
        raise NotHermitian("matrix is not Hermitian")
    tol = rtol * (1.0 + norm) if tol is None else float(tol)
    lo = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    return PsdVerdict(lo >= -tol, lo, tol)


def _require_spd(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise NotSPD("expected an even-sized square matrix")
    if np.abs(a - a.T).max() > 1e-10 * max(1.0, np.abs(a).max()):
        raise NotSPD("matrix is not symmetric")
    try:
        np.linalg.cholesky(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NotSPD("matrix is not positive definite") from exc
    return 0.5 * (a + a.T)


# ---------------------------------------------------------------------------
# Gaussian criteria (f proportional to exp(-z^T A z))


def gaussian_is_wigner(a_form, hbar: float) -> PsdVerdict:
    """Wigner test for ``exp(-z^T A z)``: ``A^-1 + i hbar J >= 0``."""
    a = _require_spd(a_form)
    b = np.linalg.inv(a) + 1j * hbar * standard_j(a.shape[0] // 2)
    return hermitian_psd(b, rtol=BOUNDARY_RTOL)


def gaussian_is_ncwm(c_form, form) -> PsdVerdict:
    """NCWM test for ``exp(-z^T C z)``: ``C^-1 + i hbar Omega >= 0``."""
    c = _require_spd(c_form)
    if c.shape != form.omega.shape:
        raise NotSPD("form size does not match the extended symplectic form")
    d = np.linalg.inv(c) + 1j * form.hbar * form.omega
    return hermitian_psd(d, rtol=BOUNDARY_RTOL)


@dataclass(frozen=True)
class PurityVerdict:
    is_pure: bool
    spectrum: tuple[float, ...]
    hbar: float

    def to_dict(self) -> dict:
        return {"is_pure": self.is_pure, "symplectic_spectrum": list(self.spectrum), "hbar": self.hbar}


def symplectic_spectrum(a_form) -> np.ndarray:
    """Moduli of the eigenvalues of ``i J A^-1``, one per conjugate pair, ascending."""
    a = _require_spd(a_form)
    vals = np.abs(np.linalg.eigvals(1j * standard_j(a.shape[0] // 2) @ np.linalg.inv(a)))
    return np.sort(vals)[::2]


def gaussian_is_pure(form_matrix, mode: str = "wigner", form=None, hbar: float | None = None) -> PurityVerdict:
    """Pure-state test for ``exp(-z^T A z)``.

    In ``wigner`` mode the symplectic spectrum of ``A`` is compared with
    ``hbar``. In ``ncwm`` mode the matrix is first pulled back to Darboux
    coordinates, ``A = S^T C S``.
    """
    a = _require_spd(form_matrix)
    if mode == "ncwm":
        if form is None:
            raise ValueError("ncwm mode needs the extended symplectic form")
        hbar = form.hbar
        if form.d == 2:
            p = form.params
            s = standard_darboux(p.hbar, p.theta_scalar, p.eta_scalar).s
        else:
            from .symplectic import generic_darboux

            s = generic_darboux(form).s
        a = s.T @ a @ s
    elif mode != "wigner":
        raise ValueError(f"unknown mode {mode!r}")
    if hbar is None:
        hbar = form.hbar if form is not None else 1.0
    spec = symplectic_spectrum(a)
    pure = bool(np.all(np.abs(spec - hbar) <= PURE_RTOL * hbar))
    return PurityVerdict(pure, tuple(float(x) for x in spec), float(hbar))


# ---------------------------------------------------------------------------
# Moments and purities


def _is_commutative(params: NCParams) -> bool:
    return not (np.any(params.Theta) or np.any(params.N))


def _omega_for(params: NCParams):
    return build_omega(params)


def uncertainty_check(f: LabeledMeasure, commutative: bool = False) -> PsdVerdict:
    """Robertson-Schrodinger test ``Sigma + (i hbar / 2) Omega >= 0``.

    With ``commutative=True`` the matrix ``J`` replaces ``Omega``.
    """
    rep = moments(f.fn)
    n = f.dim
    k = standard_j(n // 2) if commutative else _omega_for(f.params).omega
    m = rep.covariance + 0.5j * f.params.hbar * k
    return hermitian_psd(m, rtol=BOUNDARY_RTOL)


@dataclass(frozen=True)
class Bound:
    value: float
    bound: float | None

    @property
    def exceeded(self) -> bool:
        return self.bound is not None and self.value > self.bound * (1 + PURITY_RTOL)

    def to_dict(self) -> dict:
        return {"value": self.value, "bound": self.bound, "exceeded": self.exceeded}


@dataclass(frozen=True)
class PurityReport:
    purity: float
    wigner_bound: float
    nc_bound: float
    theta_purity: Bound | None
    eta_purity: Bound | None

    @property
    def exceeds_wigner(self) -> bool:
        return self.purity > self.wigner_bound * (1 + PURITY_RTOL)

    @property
    def exceeds_nc(self) -> bool:
        nc = self.purity > self.nc_bound * (1 + PURITY_RTOL)
        marg = any(b is not None and b.exceeded for b in (self.theta_purity, self.eta_purity))
        return nc or marg

    def to_dict(self) -> dict:
        return {
            "purity": self.purity,
            "wigner_bound": self.wigner_bound,
            "nc_bound": self.nc_bound,
            "exceeds_wigner_bound": self.exceeds_wigner,
            "theta_purity": self.theta_purity.to_dict() if self.theta_purity else None,
            "eta_purity": self.eta_purity.to_dict() if self.eta_purity else None,
            "exceeds_nc_bounds": self.exceeds_nc,
        }


def purity_report(f: LabeledMeasure) -> PurityReport:
    """Purity and marginal purities with their bounds.

    For ``d = 2`` the marginal purities are ``int P_q^2`` and ``int P_p^2``
    with bounds ``1/(2 pi theta)`` and ``1/(2 pi eta)``; they are omitted when
    the corresponding parameter vanishes.
    """
    p = f.params
    d = f.dim // 2
    form = _omega_for(p)
    hb = p.hbar
    pur = purity(f.fn)
    wb = 1.0 / (2 * math.pi * hb) ** d
    nb = wb / abs(form.pf)
    tp = ep = None
    if d == 2:
        t, e = p.theta_scalar, p.eta_scalar
        tp = Bound(purity(marginal(f.fn, [0, 1])), 1 / (2 * math.pi * t) if t > 0 else None)
        ep = Bound(purity(marginal(f.fn, [2, 3])), 1 / (2 * math.pi * e) if e > 0 else None)
    return PurityReport(pur, wb, nb, tp, ep)


# ---------------------------------------------------------------------------
# KLM matrices


def lambda_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """``[[gamma E, -alpha I], [alpha I, beta E]]``."""
    eye = np.eye(2)
    return np.block([[gamma * E2, -alpha * eye], [alpha * eye, beta * E2]])


@dataclass(frozen=True)
class KlmSpec:
    """Positive-type parameters: ``alpha`` alone, or ``(alpha, beta, gamma)``."""

    alpha: float
    beta: float | None = None
    gamma: float | None = None

    @property
    def nc(self) -> bool:
        return self.beta is not None

    @classmethod
    def commutative(cls, alpha: float) -> "KlmSpec":
        return cls(float(alpha))

    @classmethod
    def noncommutative(cls, alpha: float, beta: float, gamma: float) -> "KlmSpec":
        return cls(float(alpha), float(beta), float(gamma))

    @classmethod
    def coerce(cls, value) -> "KlmSpec":
        if isinstance(value, KlmSpec):
            return value
        if np.ndim(value) == 0:
            return cls.commutative(value)
        a, b, c = value
        return cls.noncommutative(a, b, c)

    def negate(self) -> "KlmSpec":
        if self.nc:
            return KlmSpec(-self.alpha, -self.beta, -self.gamma)
        return KlmSpec(-self.alpha)

    def params(self) -> list[float]:
        return [self.alpha] if not self.nc else [self.alpha, self.beta, self.gamma]

    def to_dict(self) -> dict:
        if self.nc:
            return {"kind": "noncommutative", "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}
        return {"kind": "commutative", "alpha": self.alpha}


@dataclass(frozen=True)
class KlmWitness:
    points: np.ndarray
    matrix: np.ndarray
    min_eigenvalue: float
    spec: KlmSpec
    is_psd: bool
    tolerance_used: float
    trial: int | None = None

    def to_dict(self) -> dict:
        return {
            "spectrum_params": self.spec.to_dict(),
            "points": self.points.tolist(),
            "matrix": {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()},
            "min_eigenvalue": self.min_eigenvalue,
            "is_psd": self.is_psd,
            "tolerance_used": self.tolerance_used,
            "trial": self.trial,
        }


class _KlmKernel:
    """Cached transform and phase matrix for repeated KLM assembly."""

    def __init__(self, f: GaussFn, spec: KlmSpec, form=None) -> None:
        for t in terms_of(f):
            t.require_integrable()
        self.spec = spec
        n = f.dim
        if spec.nc:
            if n != 4:
                raise PreconditionError("noncommutative KLM matrices are defined for d = 2")
            if form is None:
                raise ValueError("noncommutative KLM matrices need the extended symplectic form")
            self.ft = symplectic_ft(f, "Omega", form)
            # exp((i/2) a_k^T Lambda a_j)
            self.phase = 0.5j * lambda_matrix(spec.alpha, spec.beta, spec.gamma)
        else:
            self.ft = symplectic_ft(f, "J")
            # exp(-(i alpha / 2) a_k^T J a_j)
            self.phase = -0.5j * spec.alpha * standard_j(n // 2)
        self.real = f.real

    def matrix(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        vals = self.ft(diff)
        ph = np.einsum("ki,ij,jl->lk", pts, self.phase, pts.T)
        m = vals * np.exp(ph)
        if self.real:
            m = 0.5 * (m + m.conj().T)
        return m

    def witness(self, points: np.ndarray, tol: float | None = None, trial: int | None = None) -> KlmWitness:
        m = self.matrix(points)
        v = hermitian_psd(m, tol)
        return KlmWitness(np.asarray(points, dtype=float), m, v.min_eigenvalue, self.spec, v.is_psd, v.tolerance_used, trial)


def klm_matrix(f: GaussFn, points, spec, form=None, tol: float | None = None) -> KlmWitness:
    """Assemble the KLM matrix for ``f`` at ``points`` and decide positivity.

    Commutative: ``M_jk = f~J(a_j - a_k) exp(-(i alpha/2) a_k^T J a_j)``.
    Noncommutative: ``N_jk = f~Omega(a_j - a_k) exp((i/2) a_k^T Lambda a_j)``.
    """
    if isinstance(f, LabeledMeasure):
        f = f.fn
    return _KlmKernel(f, KlmSpec.coerce(spec), form).witness(np.atleast_2d(points), tol)


def _ft_radius(kernel: _KlmKernel) -> float:
    lam = min(float(np.linalg.eigvalsh(np.real(t.g))[0]) for t in terms_of(kernel.ft))
    return 4.0 / math.sqrt(max(lam, 1e-300))


def _draw_points(rng: np.random.Generator, trial: int, m: int, n: int, radius: float) -> np.ndarray:
    scale = radius * 10.0 ** rng.uniform(-2.0, 0.0)
    if trial % 2 == 0:
        dirs = rng.normal(size=(m, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        r = scale * rng.random(m) ** (1.0 / n)
        return dirs * r[:, None]
    axes = rng.choice(n, size=2, replace=False)
    nodes = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
    pick = rng.choice(len(nodes), size=min(m, len(nodes)), replace=False)
    pts = np.zeros((len(pick), n))
    pts[:, axes] = 0.5 * scale * nodes[pick]
    return pts


@dataclass(frozen=True)
class KlmSearchResult:
    found: bool
    witness: KlmWitness | None
    trials: int
    seed: int
    best_min_eigenvalue: float

    def to_dict(self) -> dict:
        return {
            "outcome": "violation" if self.found else "none_found",
            "trials": self.trials,
            "seed": self.seed,
            "best_min_eigenvalue": self.best_min_eigenvalue,
            "witness": self.witness.to_dict() if self.witness else None,
        }


def klm_battery(f: GaussFn, spec, form=None, count: int = 20, m_max: int = 6, seed: int = 0) -> list[KlmWitness]:
    """``count`` random point sets of size ``1 ... m_max`` with per-set seeds."""
    if isinstance(f, LabeledMeasure):
        f = f.fn
    kern = _KlmKernel(f, KlmSpec.coerce(spec), form)
    radius = _ft_radius(kern)
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        m = int(rng.integers(1, m_max + 1))
        out.append(kern.witness(_draw_points(rng, i, m, f.dim, radius), trial=i))
    return out


def klm_search_violation(
    f: GaussFn,
    spec,
    form=None,
    m_max: int = 8,
    trials: int = 500,
    seed: int = 42,
    refine: int = 4,
    tol: float | None = None,
) -> KlmSearchResult:
    """Randomised search for a non-PSD KLM matrix.

    Trial ``t`` uses the generator seeded with ``[seed, t]``, so results do
    not depend on scheduling. Even trials draw points uniformly in a ball,
    odd trials on a scaled lattice in a random coordinate plane; the scale is
    log-uniform between 1% and 100% of ``4 / sqrt(lambda_min)`` of the
    transform's Gaussian width. If nothing is found, the ``refine`` best
    trials are polished by local minimisation of the smallest eigenvalue.
    """
    if isinstance(f, LabeledMeasure):
        f = f.fn
    kern = _KlmKernel(f, KlmSpec.coerce(spec), form)
    n = f.dim
    radius = _ft_radius(kern)
    best: list[tuple[float, int, np.ndarray]] = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        m = int(rng.integers(2, m_max + 1))
        pts = _draw_points(rng, t, m, n, radius)
        w = kern.witness(pts, tol, trial=t)
        if not w.is_psd:
            return KlmSearchResult(True, w, t + 1, seed, w.min_eigenvalue)
        best.append((w.min_eigenvalue, t, pts))
    best.sort(key=lambda x: x[0])
    lowest = best[0][0] if best else float("inf")

    def objective(x: np.ndarray, shape) -> float:
        return float(np.linalg.eigvalsh(kern.matrix(x.reshape(shape)))[0])

    for val, t, pts in best[:refine]:
        res = minimize(objective, pts.ravel(), args=(pts.shape,), method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-14})
        w = kern.witness(res.x.reshape(pts.shape), tol, trial=t)
        lowest = min(lowest, w.min_eigenvalue)
        if not w.is_psd:
            return KlmSearchResult(True, w, trials, seed, w.min_eigenvalue)
    return KlmSearchResult(False, None, trials, seed, lowest)


# ---------------------------------------------------------------------------
# Sharp map


def sharp_map(alpha: float, beta: float, gamma: float, params: NCParams) -> tuple[float, float, float]:
    """Parameters of positive type carried by ``f~Omega`` when ``f`` is built from ``(alpha, beta, gamma)``."""
    hb, t, e, z = _planar_consts(params)
    ht, tt, et = hb / (1 - z), t / (1 - z), e / (1 - z)
    a_s = (alpha * ht * (1 + z) - et * beta - tt * gamma) / (hb * (1 - z))
    b_s = (2 * alpha * ht * tt - ht**2 * beta - tt**2 * gamma) / hb**2
    g_s = (2 * alpha * ht * et - ht**2 * gamma - et**2 * beta) / hb**2
    return a_s, b_s, g_s


def sharp_inverse(alpha_s: float, beta_s: float, gamma_s: float, params: NCParams) -> tuple[float, float, float]:
    """Invert :func:`sharp_map` (needs ``theta, eta != 0``)."""
    hb, t, e, z = _planar_consts(params)
    alpha = (1 + z) * alpha_s - (e * beta_s + t * gamma_s) / hb
    beta = (2 * hb * z * alpha_s - e * beta_s - t * z * gamma_s) / e
    gamma = (2 * hb * z * alpha_s - t * gamma_s - z * e * beta_s) / t
    return alpha, beta, gamma


def zeta_prime(alpha: float, beta: float, gamma: float) -> float:
    """Dimensionless ``beta gamma / alpha^2``, the analogue of ``zeta`` for ``(alpha, beta, gamma)``."""
    return beta * gamma / alpha**2


def _planar_consts(params: NCParams) -> tuple[float, float, float, float]:
    if params.d != 2:
        raise PreconditionError("the sharp map is defined for d = 2")
    return params.hbar, params.theta_scalar, params.eta_scalar, params.zeta


def nc_element(params: NCParams) -> tuple[float, float, float]:
    """``(hbar~, theta~, eta~) = (hbar, theta, eta) / (1 - zeta)``."""
    hb, t, e, z = _planar_consts(params)
    return hb / (1 - z), t / (1 - z), e / (1 - z)


# ---------------------------------------------------------------------------
# Spectrum probe


@dataclass(frozen=True)
class ProbeRecord:
    spec: KlmSpec
    verdict: str
    witness: KlmWitness | None
    batteries: int
    trials: int

    def to_dict(self) -> dict:
        return {
            "spectrum_params": self.spec.to_dict(),
            "verdict": self.verdict,
            "batteries": self.batteries,
            "trials": self.trials,
            "witness": self.witness.to_dict() if self.witness else None,
        }


def spectrum_probe(
    f: GaussFn,
    candidates: Iterable,
    form=None,
    batteries: int = 20,
    m_max: int = 8,
    trials: int = 500,
    seed: int = 42,
    refine: int = 4,
) -> list[ProbeRecord]:
    """Test candidate spectrum elements; each is ``consistent`` or ``refuted``."""
    if isinstance(f, LabeledMeasure):
        f = f.fn
    out = []
    for cand in candidates:
        spec = KlmSpec.coerce(cand)
        witness = next((w for w in klm_battery(f, spec, form, batteries, min(6, m_max), seed) if not w.is_psd), None)
        if witness is None:
            res = klm_search_violation(f, spec, form, m_max, trials, seed, refine)
            witness = res.witness
        out.append(ProbeRecord(spec, "refuted" if witness is not None else "consistent", witness, batteries, trials))
    return out


# ---------------------------------------------------------------------------
# Liouville analysis


@dataclass(frozen=True)
class SignVerdict:
    nonnegative: bool | None
    exact: bool
    witness_point: list[float] | None = None
    witness_value: float | None = None
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "nonnegative": self.nonnegative,
            "exact": self.exact,
            "method": self.method,
            "witness_point": self.witness_point,
            "witness_value": self.witness_value,
        }


def _positive_envelope(t: GaussPoly) -> bool:
    return bool(np.all(np.abs(np.imag(t.g)) < 1e-14) and np.all(np.abs(np.imag(t.h)) < 1e-14) and abs(t.c.imag) < 1e-12)


def _quadratic_nonnegative(t: GaussPoly) -> bool:
    """Exact test ``P >= 0`` for a real polynomial of degree <= 2 by homogenisation."""
    n = t.dim
    q = np.zeros((n + 1, n + 1))
    for exps, coef in t.poly.terms.items():
        c = coef.real
        idx = [i for i, k in enumerate(exps) for _ in range(k)]
        if not idx:
            q[0, 0] += c
        elif len(idx) == 1:
            q[0, idx[0] + 1] += c / 2
            q[idx[0] + 1, 0] += c / 2
        else:
            i, j = idx[0] + 1, idx[1] + 1
            if i == j:
                q[i, i] += c
            else:
                q[i, j] += c / 2
                q[j, i] += c / 2
    return bool(np.linalg.eigvalsh(q)[0] >= -1e-12 * (1 + np.abs(q).max()))


def sign_analysis(f: GaussFn, samples: int = 512, seed: int = 3) -> SignVerdict:
    """Decide ``f >= 0``.

    Exact for a single term with a positive Gaussian envelope when the
    polynomial is constant, of degree two, or visibly negative somewhere.
    Otherwise falls back to min-sampling, which is evidence only.
    """
    terms = terms_of(f)
    rng = np.random.default_rng(seed)
    if len(terms) == 1 and _positive_envelope(terms[0]):
        t = terms[0]
        if t.poly.is_constant():
            return SignVerdict(t.poly.constant_term().real >= 0, True, method="positive Gaussian")
        hit = _find_negative(f, t, rng, samples)
        if hit is not None:
            return SignVerdict(False, True, hit[0], hit[1], "negative value found")
        if t.poly.degree <= 2:
            return SignVerdict(_quadratic_nonnegative(t), True, method="quadratic polynomial sign")
        return SignVerdict(True, False, method="min-sampling")
    if all(_positive_envelope(t) and t.poly.is_constant() and t.poly.constant_term().real >= 0 for t in terms):
        return SignVerdict(True, True, method="sum of positive Gaussians")
    hit = _find_negative(f, terms[0], rng, samples)
    if hit is not None:
        return SignVerdict(False, True, hit[0], hit[1], "negative value found")
    return SignVerdict(True, False, method="min-sampling")


def _find_negative(f: GaussFn, t: GaussPoly, rng, samples: int):
    cov = np.linalg.inv(np.real(t.g)) / 2
    chol = np.linalg.cholesky(cov)
    pts = t.center + (rng.normal(size=(samples, t.dim)) * 2.0) @ chol.T
    vals = np.real(f(pts))
    starts = pts[np.argsort(vals)[:4]]
    for x0 in starts:
        res = minimize(lambda x: float(np.real(f(x))), x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-16})
        val = float(np.real(f(res.x)))
        if val < 0:
            return [float(v) for v in res.x], val
    i = int(np.argmin(vals))
    if vals[i] < 0:
        return [float(v) for v in pts[i]], float(vals[i])
    return None


# ---------------------------------------------------------------------------
# Classification


REGIONS = {
    (True, False, False): "Omega_1",
    (False, True, False): "Omega_2",
    (False, False, True): "Omega_3",
    (True, True, False): "Omega_4",
    (True, False, True): "Omega_5",
    (False, True, True): "Omega_6",
    (True, True, True): "Omega_7",
    (False, False, False): "outside",
}


@dataclass
class Flag:
    """Membership flag with the evidence that settles it."""

    yes: list[str] = field(default_factory=list)
    no: list[str] = field(default_factory=list)
    consistent: list[str] = field(default_factory=list)

    def value(self, name: str) -> bool | None:
        if self.yes and self.no:
            raise InternalInconsistency(f"{name}: {self.yes[0]!r} contradicts {self.no[0]!r}")
        if self.yes:
            return True
        if self.no:
            return False
        if self.consistent:
            return True
        return None

    def exact(self) -> bool:
        return bool(self.yes or self.no)

    def to_dict(self, name: str) -> dict:
        v = self.value(name)
        return {
            "member": v,
            "certainty": "exact" if self.exact() else ("evidence-only" if v is not None else "undetermined"),
            "because_member": self.yes,
            "because_not_member": self.no,
            "consistent_with": self.consistent,
        }


@dataclass(frozen=True)
class KlmBudget:
    trials: int = 500
    m_max: int = 8
    seed: int = 42
    refine: int = 4
    enabled: bool = True

    def to_dict(self) -> dict:
        return {"trials": self.trials, "m_max": self.m_max, "seed": self.seed, "refine": self.refine, "enabled": self.enabled}


@dataclass
class EvidenceReport:
    provenance: str
    params: dict
    provenance_claims: dict
    purity: PurityReport
    uncertainty: PsdVerdict
    uncertainty_commutative: PsdVerdict
    negativity: SignVerdict
    gaussian_exact: dict | None
    klm: list
    flags: dict
    region: str
    certainty: str

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "params": self.params,
            "provenance_claims": self.provenance_claims,
            "purity": self.purity.to_dict(),
            "uncertainty": self.uncertainty.to_dict(),
            "uncertainty_commutative": self.uncertainty_commutative.to_dict(),
            "negativity": self.negativity.to_dict(),
            "gaussian_exact": self.gaussian_exact,
            "klm": self.klm,
            "flags": self.flags,
            "region": self.region,
            "certainty": self.certainty,
        }


def gaussian_form(fn: GaussFn) -> np.ndarray | None:
    """``A`` if ``fn`` is a single real Gaussian ``c exp(-(z - z0)^T A (z - z0))``, else ``None``."""
    terms = terms_of(fn)
    if len(terms) != 1:
        return None
    t = terms[0]
    if not t.poly.is_constant() or not _positive_envelope(t):
        return None
    return np.real(t.g)


def classify(f: LabeledMeasure, budget: KlmBudget | None = None) -> EvidenceReport:
    """Assign ``f`` to one of the regions ``Omega_1 ... Omega_7``.

    Flags for ``F^C``, ``F^NC`` and ``L`` are settled, in order, by
    provenance claims, exact Gaussian criteria, purity and uncertainty
    violations and, only if still open, a KLM search. Survival of the search
    makes a flag "consistent" (evidence only); it never proves membership.

    Raises
    ------
    InternalInconsistency
        If two verdicts disagree.
    """
    budget = budget or KlmBudget()
    p = f.params
    form = build_omega(p)
    fc, fnc, liou = Flag(), Flag(), Flag()
    claims = dict(f.claims)
    for key, target, positive in (
        (F_C, fc, True), (NOT_F_C, fc, False),
        (F_NC, fnc, True), (NOT_F_NC, fnc, False),
        (LIOUVILLE, liou, True), (NOT_L, liou, False),
    ):
        if key in claims:
            (target.yes if positive else target.no).append(f"provenance: {claims[key]}")

    pur = purity_report(f)
    if pur.exceeds_wigner:
        fc.no.append("purity exceeds 1/(2 pi hbar)^d")
    if pur.purity > pur.nc_bound * (1 + PURITY_RTOL):
        fnc.no.append("purity exceeds the noncommutative bound")
    if pur.theta_purity is not None and pur.theta_purity.exceeded:
        fnc.no.append("theta-purity exceeds 1/(2 pi theta)")
    if pur.eta_purity is not None and pur.eta_purity.exceeded:
        fnc.no.append("eta-purity exceeds 1/(2 pi eta)")

    unc = uncertainty_check(f)
    unc_c = uncertainty_check(f, commutative=True)
    if not unc.is_psd:
        fnc.no.append("uncertainty matrix Sigma + (i hbar/2) Omega is not PSD")
    if not unc_c.is_psd:
        fc.no.append("uncertainty matrix Sigma + (i hbar/2) J is not PSD")

    gexact = None
    a = gaussian_form(f.fn)
    if a is not None:
        w = gaussian_is_wigner(a, p.hbar)
        nc = gaussian_is_ncwm(a, form)
        gexact = {
            "wigner": w.to_dict(),
            "ncwm": nc.to_dict(),
            "pure_wigner": gaussian_is_pure(a, "wigner", hbar=p.hbar).to_dict() if w.is_psd else None,
            "pure_ncwm": gaussian_is_pure(a, "ncwm", form).to_dict() if nc.is_psd else None,
        }
        (fc.yes if w.is_psd else fc.no).append("Gaussian criterion A^-1 + i hbar J")
        (fnc.yes if nc.is_psd else fnc.no).append("Gaussian criterion C^-1 + i hbar Omega")

    sign = sign_analysis(f.fn)
    if sign.exact:
        (liou.yes if sign.nonnegative else liou.no).append(f"sign analysis: {sign.method}")
    elif sign.nonnegative:
        liou.consistent.append("no negative value found by min-sampling")

    if _is_commutative(p):
        # Omega = J: the two Wigner sets coincide.
        fc.yes += [r for r in fnc.yes if r not in fc.yes]
        fc.no += [r for r in fnc.no if r not in fc.no]
        fnc.yes, fnc.no = list(fc.yes), list(fc.no)

    klm_records = []
    if budget.enabled:
        targets = []
        if fc.value("F^C") is None:
            targets.append((fc, KlmSpec.commutative(p.hbar), None))
        if fnc.value("F^NC") is None and p.d == 2 and not _is_commutative(p):
            targets.append((fnc, KlmSpec.noncommutative(*nc_element(p)), form))
        for flag, spec, fm in targets:
            res = klm_search_violation(f.fn, spec, fm, budget.m_max, budget.trials, budget.seed, budget.refine)
            klm_records.append(res.to_dict())
            if res.found:
                flag.no.append(f"KLM violation at {spec.to_dict()}")
            else:
                flag.consistent.append(f"no KLM violation in {res.trials} trials (seed {res.seed})")
        if _is_commutative(p) and targets:
            fnc.no, fnc.consistent = list(fc.no), list(fc.consistent)

    values = (fc.value("F^C"), fnc.value("F^NC"), liou.value("L"))
    flags = {"F^C": fc.to_dict("F^C"), "F^NC": fnc.to_dict("F^NC"), "L": liou.to_dict("L")}
    if None in values:
        region, certainty = "indeterminate", "undetermined"
    else:
        region = REGIONS[values]
        certainty = "exact" if all(fl.exact() for fl in (fc, fnc, liou)) else "evidence-only"
    return EvidenceReport(
        provenance=f.provenance,
        params=p.to_dict(),
        provenance_claims=dict(sorted(claims.items())),
        purity=pur,
        uncertainty=unc,
        uncertainty_commutative=unc_c,
        negativity=sign,
        gaussian_exact=gexact,
        klm=klm_records,
        flags=flags,
        region=region,
        certainty=certainty,
    )


__all__ = [
    "PsdVerdict",
    "hermitian_psd",
    "gaussian_is_wigner",
    "gaussian_is_ncwm",
    "gaussian_is_pure",
    "symplectic_spectrum",
    "PurityVerdict",
    "uncertainty_check",
    "purity_report",
    "PurityReport",
    "Bound",
    "lambda_matrix",
    "KlmSpec",
    "KlmWitness",
    "klm_matrix",
    "klm_battery",
    "klm_search_violation",
    "KlmSearchResult",
    "sharp_map",
    "sharp_inverse",
    "zeta_prime",
    "nc_element",
    "spectrum_probe",
    "ProbeRecord",
    "sign_analysis",
    "SignVerdict",
    "classify",
    "KlmBudget",
    "EvidenceReport",
    "gaussian_form",
    "REGIONS",
]
