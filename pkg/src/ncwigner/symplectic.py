"""Extended symplectic linear algebra.

The deformed commutation relations ``[z_a, z_b] = i hbar Omega_ab`` are encoded
by the ``2d x 2d`` antisymmetric matrix

    Omega = hbar^-1 [[Theta, hbar I], [-hbar I, N]]

with position and momentum noncommutativity ``Theta`` and ``N``. This module
builds ``Omega``, computes Pfaffians, constructs Darboux maps ``S`` with
``S J S^T = Omega`` and tests membership in the group ``Sp_Omega`` of linear
maps that preserve ``Omega``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import expm

from .errors import (
    DegenerateForm,
    NotAntisymmetric,
    NotSymplectic,
    OddDimension,
)

#: Relative tolerance for every matrix identity check in this module.
MATRIX_TOL = 1e-10

#: The 2x2 matrix E with E[0, 1] = -E[1, 0] = 1.
E2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def standard_j(d: int) -> np.ndarray:
    """Return the canonical symplectic matrix ``J = [[0, I], [-I, 0]]``."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def _antisym_from_upper(upper, d: int) -> np.ndarray:
    upper = np.asarray(upper, dtype=float).ravel()
    if upper.size != d * (d - 1) // 2:
        raise ValueError(f"expected {d * (d - 1) // 2} upper-triangular entries, got {upper.size}")
    m = np.zeros((d, d))
    m[np.triu_indices(d, k=1)] = upper
    return m - m.T


def _as_block(value, d: int) -> np.ndarray:
    """Accept a scalar (d=2 only), an upper-triangular vector or a full matrix."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        if d == 2:
            return float(arr) * E2
        if d == 1 and float(arr) == 0.0:
            return np.zeros((1, 1))
        if float(arr) == 0.0:
            return np.zeros((d, d))
        raise ValueError("scalar noncommutativity parameters are only defined for d=2")
    if arr.ndim == 1:
        return _antisym_from_upper(arr, d)
    if arr.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {arr.shape}")
    return arr.copy()


@dataclass(frozen=True)
class NCParams:
    """Deformation data ``(hbar, Theta, N)`` in ``d`` dimensions.

    Parameters
    ----------
    hbar : float
        Positive Planck constant.
    theta, eta : float or array_like
        Position and momentum noncommutativity. For ``d = 2`` a scalar ``t``
        stands for ``t * E``. A 1-D array is read as the strictly upper
        triangular entries in row-major order, which makes antisymmetry hold
        by construction. A full ``d x d`` matrix is also accepted.
    d : int
        Configuration-space dimension.

    Raises
    ------
    DegenerateForm
        If ``theta_ij * eta_kl >= hbar**2`` for some index pair.
    """

    hbar: float
    theta: Any = 0.0
    eta: Any = 0.0
    d: int = 2
    Theta: np.ndarray = field(init=False, repr=False, compare=False)
    N: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not np.isfinite(self.hbar) or self.hbar <= 0:
            raise DegenerateForm(f"hbar must be positive, got {self.hbar}")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        theta_m = _as_block(self.theta, self.d)
        eta_m = _as_block(self.eta, self.d)
        for name, m in (("Theta", theta_m), ("N", eta_m)):
            scale = 1.0 + np.abs(m).max(initial=0.0)
            if np.abs(m + m.T).max(initial=0.0) > 1e-12 * scale:
                raise NotAntisymmetric(f"{name} is not antisymmetric")
        object.__setattr__(self, "Theta", theta_m)
        object.__setattr__(self, "N", eta_m)
        # theta_ij eta_kl < hbar^2 for every index pair; antisymmetry makes
        # both signs appear, so the binding case is the product of maxima.
        prod = np.abs(theta_m).max(initial=0.0) * np.abs(eta_m).max(initial=0.0)
        if prod >= self.hbar**2:
            raise DegenerateForm(
                f"theta_ij eta_kl < hbar^2 violated: max product {prod:.6g} >= {self.hbar**2:.6g}"
            )

    @property
    def theta_scalar(self) -> float:
        """The scalar ``theta`` with ``Theta = theta E`` (d=2)."""
        self._need_planar()
        return float(self.Theta[0, 1])

    @property
    def eta_scalar(self) -> float:
        self._need_planar()
        return float(self.N[0, 1])

    @property
    def zeta(self) -> float:
        """``theta eta / hbar^2`` (d=2)."""
        return self.theta_scalar * self.eta_scalar / self.hbar**2

    def _need_planar(self) -> None:
        if self.d != 2:
            raise ValueError("this quantity is only defined for d=2")

    def commutative(self) -> "NCParams":
        """Same ``hbar`` with ``Theta = N = 0``."""
        return NCParams(self.hbar, np.zeros((self.d, self.d)), np.zeros((self.d, self.d)), self.d)

    def same_as(self, other: "NCParams", rtol: float = 1e-12) -> bool:
        return (
            self.d == other.d
            and np.isclose(self.hbar, other.hbar, rtol=rtol, atol=0)
            and np.allclose(self.Theta, other.Theta, rtol=rtol, atol=1e-15)
            and np.allclose(self.N, other.N, rtol=rtol, atol=1e-15)
        )

    def to_dict(self) -> dict:
        return {
            "hbar": float(self.hbar),
            "theta": self.Theta.tolist(),
            "eta": self.N.tolist(),
            "d": int(self.d),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NCParams":
        return cls(float(data["hbar"]), data.get("theta", 0.0), data.get("eta", 0.0), int(data.get("d", 2)))


def planar(hbar: float = 1.0, theta: float = 0.5, eta: float = 0.5) -> NCParams:
    """Shortcut for the ``d = 2`` parameters with scalar ``theta`` and ``eta``."""
    return NCParams(hbar, theta, eta, 2)


@dataclass(frozen=True)
class ExtendedSymplecticForm:
    """The matrix ``Omega`` with its cached Pfaffian."""

    omega: np.ndarray
    params: NCParams
    pf: float

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def hbar(self) -> float:
        return self.params.hbar

    @property
    def inv(self) -> np.ndarray:
        return np.linalg.inv(self.omega)

    def to_dict(self) -> dict:
        out = self.params.to_dict()
        out["omega"] = self.omega.tolist()
        out["pf"] = float(self.pf)
        return out


def build_omega(params: NCParams) -> ExtendedSymplecticForm:
    """Assemble ``Omega`` for the given deformation parameters.

    Examples
    --------
    >>> form = build_omega(planar(1.0, 0.0, 0.0))
    >>> float(form.pf)
    -1.0
    """
    d, hbar = params.d, params.hbar
    eye = np.eye(d)
    omega = np.block([[params.Theta / hbar, eye], [-eye, params.N / hbar]])
    pf = pfaffian(omega)
    if abs(pf) <= 1e-14:
        raise DegenerateForm("Omega is singular")
    if np.sign(pf) != pf_sign_expected(d):
        # For d >= 3 the pairwise bound does not control the sum of products
        # (d=3: Pf = -(1 - sum_ij theta_ij eta_ij / hbar^2)), so the sign can flip.
        raise DegenerateForm(
            f"Pf(Omega) = {pf:.6g} has sign opposite to Pf(J); "
            "no Darboux map with det S > 0 exists for these parameters"
        )
    return ExtendedSymplecticForm(omega, params, pf)


def form_from_json(data: dict) -> ExtendedSymplecticForm:
    return build_omega(NCParams.from_dict(data))


# ---------------------------------------------------------------------------
# Pfaffians


def _check_antisymmetric(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotAntisymmetric("expected a square matrix")
    if a.shape[0] % 2:
        raise OddDimension(f"Pfaffian needs an even dimension, got {a.shape[0]}")
    scale = 1.0 + np.abs(a).max(initial=0.0)
    if np.abs(a + a.T).max(initial=0.0) > tol * scale:
        raise NotAntisymmetric("matrix is not antisymmetric")
    return a


def _pf_expand(a: np.ndarray) -> float:
    """First-row expansion ``Pf = sum_k (-1)^k a_0k Pf(minor)`` (0-based k>=1)."""
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n == 2:
        return float(a[0, 1])
    total = 0.0
    for k in range(1, n):
        if a[0, k] == 0.0:
            continue
        keep = [i for i in range(1, n) if i != k]
        sign = -1.0 if k % 2 == 0 else 1.0
        total += sign * a[0, k] * _pf_expand(a[np.ix_(keep, keep)])
    return total


def _pf_householder(a: np.ndarray) -> float:
    """Pfaffian by Householder congruences that clear one row at a time.

    After the reflection at even step ``k`` row ``k`` has a single nonzero
    entry at ``k+1``, so ``Pf(A) = a_{k,k+1} Pf(A[k+2:, k+2:])``. Each
    nontrivial reflector ``H`` has ``det H = -1`` and ``Pf(H A H^T) = det H Pf(A)``.
    """
    a = a.copy()
    n = a.shape[0]
    pf = 1.0
    for k in range(0, n - 2, 2):
        x = a[k + 1 :, k].copy()
        tail = np.dot(x[1:], x[1:])
        if tail > 0.0:
            norm_x = np.sqrt(x[0] ** 2 + tail)
            v = x
            v[0] += np.copysign(norm_x, x[0]) if x[0] != 0 else norm_x
            v /= np.linalg.norm(v)
            sub = a[k + 1 :, :]
            sub -= 2.0 * np.outer(v, v @ sub)
            sub = a[:, k + 1 :]
            sub -= 2.0 * np.outer(sub @ v, v)
            pf = -pf
        pf *= a[k, k + 1]
        if pf == 0.0:
            return 0.0
    return float(pf * a[n - 2, n - 1])


def pfaffian(a) -> float:
    """Pfaffian of a real antisymmetric matrix of even size.

    Uses first-row expansion up to 6x6 and Householder reduction beyond.

    Raises
    ------
    OddDimension, NotAntisymmetric
    """
    a = _check_antisymmetric(a)
    a = 0.5 * (a - a.T)
    if a.shape[0] <= 6:
        return _pf_expand(a)
    return _pf_householder(a)


def pfaffian_matchings(a) -> float:
    """Pfaffian as an explicit signed sum over perfect matchings.

    Exponential cost; intended as a slow independent check.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]

    def rec(items: tuple[int, ...]) -> float:
        if not items:
            return 1.0
        first, rest = items[0], items[1:]
        total = 0.0
        for pos, partner in enumerate(rest):
            remaining = rest[:pos] + rest[pos + 1 :]
            total += (-1) ** pos * a[first, partner] * rec(remaining)
        return total

    return rec(tuple(range(n)))


# ---------------------------------------------------------------------------
# Darboux maps


@dataclass(frozen=True)
class DarbouxCheck:
    ok: bool
    form_residual: float
    det_residual: float


@dataclass(frozen=True)
class DarbouxMap:
    """A matrix ``S`` with ``S J S^T = Omega`` and cached inverse."""

    s: np.ndarray
    s_inv: np.ndarray
    det: float
    form: ExtendedSymplecticForm
    lam: float | None = None
    mu: float | None = None

    def to_dict(self) -> dict:
        out = self.form.params.to_dict()
        out.update(
            {
                "S": self.s.tolist(),
                "S_inv": self.s_inv.tolist(),
                "det": float(self.det),
                "pf": float(self.form.pf),
            }
        )
        if self.lam is not None:
            out["lambda"] = float(self.lam)
            out["mu"] = float(self.mu)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def standard_darboux(hbar: float, theta: float, eta: float, lam: float = 1.0) -> DarbouxMap:
    """The standard ``d = 2`` Darboux map with free scale ``lam``.

    ``S = [[lam I, -(theta / 2 lam hbar) E], [(eta / 2 mu hbar) E, mu I]]``
    with ``mu lam = (1 + sqrt(1 - zeta)) / 2``.
    """
    if lam <= 0:
        raise DegenerateForm(f"lambda must be positive, got {lam}")
    form = build_omega(planar(hbar, theta, eta))
    zeta = form.params.zeta
    root = np.sqrt(1.0 - zeta)
    mu = (1.0 + root) / (2.0 * lam)
    eye = np.eye(2)
    s = np.block(
        [
            [lam * eye, -(theta / (2 * lam * hbar)) * E2],
            [(eta / (2 * mu * hbar)) * E2, mu * eye],
        ]
    )
    s_inv = np.block(
        [
            [mu * eye, (theta / (2 * lam * hbar)) * E2],
            [-(eta / (2 * mu * hbar)) * E2, lam * eye],
        ]
    ) / root
    return DarbouxMap(s, s_inv, float(np.linalg.det(s)), form, lam, mu)


def generic_darboux(form: ExtendedSymplecticForm) -> DarbouxMap:
    """A Darboux map for any ``d`` by skew Gram-Schmidt on ``Omega``.

    Builds rows ``t_i`` of ``T = S^-1`` with ``T Omega T^T = J``.
    """
    omega = form.omega
    n = omega.shape[0]
    d = n // 2
    basis = [row.copy() for row in np.eye(n)]
    qs: list[np.ndarray] = []
    ps: list[np.ndarray] = []

    def w(x, y):
        return float(x @ omega @ y)

    while basis:
        u = basis.pop(0)
        pairs = [abs(w(u, v)) for v in basis]
        j = int(np.argmax(pairs))
        v = basis.pop(j)
        v = v / w(u, v)
        qs.append(u)
        ps.append(v)
        # Project the remaining vectors onto the skew complement of span(u, v).
        basis = [x - w(x, v) * u + w(x, u) * v for x in basis]
    t = np.vstack(qs + ps)
    s = np.linalg.inv(t)
    if np.linalg.det(s) < 0:
        # Swap one canonical pair and negate to stay canonical with det > 0.
        t[[0, d]] = t[[d, 0]]
        t[0] = -t[0]
        s = np.linalg.inv(t)
    return DarbouxMap(s, t, float(np.linalg.det(s)), form)


def verify_darboux(s, form: ExtendedSymplecticForm) -> DarbouxCheck:
    """Check ``S J S^T = Omega`` and ``det S = |Pf(Omega)|``."""
    s = np.asarray(s, dtype=float)
    j = standard_j(form.d)
    omega = form.omega
    res_form = float(np.abs(s @ j @ s.T - omega).max())
    res_det = float(abs(np.linalg.det(s) - abs(form.pf)))
    ok = res_form <= MATRIX_TOL * (1.0 + np.abs(omega).max()) and res_det <= MATRIX_TOL * abs(form.pf)
    return DarbouxCheck(bool(ok), res_form, res_det)


# ---------------------------------------------------------------------------
# Sp_Omega


def nc_symplectic_residual(m, form: ExtendedSymplecticForm) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.abs(m @ form.omega @ m.T - form.omega).max())


def is_nc_symplectic(m, form: ExtendedSymplecticForm) -> bool:
    """True iff ``M Omega M^T = Omega`` to ``1e-10 (1 + |Omega|_max)``."""
    return nc_symplectic_residual(m, form) <= MATRIX_TOL * (1.0 + np.abs(form.omega).max())


def is_symplectic(p, tol: float = MATRIX_TOL) -> bool:
    p = np.asarray(p, dtype=float)
    j = standard_j(p.shape[0] // 2)
    return float(np.abs(p @ j @ p.T - j).max()) <= tol * (1.0 + np.abs(p).max() ** 2)


def conjugate_symplectic(p, s: DarbouxMap) -> np.ndarray:
    """Map ``P`` in ``Sp(2d)`` to ``S P S^-1`` in ``Sp_Omega``."""
    p = np.asarray(p, dtype=float)
    if p.shape != s.s.shape:
        raise NotSymplectic(f"shape {p.shape} does not match {s.s.shape}")
    if not is_symplectic(p):
        raise NotSymplectic("P J P^T != J")
    return s.s @ p @ s.s_inv


def random_symplectic(d: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random element of ``Sp(2d)`` as ``expm(J H)`` with ``H`` symmetric."""
    h = rng.uniform(-scale, scale, size=(2 * d, 2 * d))
    h = 0.5 * (h + h.T)
    return expm(standard_j(d) @ h)


def random_nc_symplectic(darboux: DarbouxMap, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    return conjugate_symplectic(random_symplectic(darboux.form.d, rng, scale), darboux)


def random_admissible_params(d: int, rng: np.random.Generator, hbar: float = 1.0) -> NCParams:
    """Random ``(Theta, N)`` with ``max|theta| max|eta| < hbar^2``."""
    k = d * (d - 1) // 2
    theta = rng.uniform(-1.0, 1.0, size=k) * rng.uniform(0.1, 2.0)
    eta = rng.uniform(-1.0, 1.0, size=k)
    t_max = np.abs(theta).max(initial=0.0)
    e_max = np.abs(eta).max(initial=0.0)
    if t_max * e_max > 0:
        target = rng.uniform(0.0, 0.95) * hbar**2
        eta = eta * target / (t_max * e_max)
    return NCParams(hbar, theta, eta, d)


def pf_sign_expected(d: int) -> int:
    """``(-1)^{d(d-1)/2}``, the sign of ``Pf(J)`` and of every admissible ``Pf(Omega)``."""
    return -1 if (d * (d - 1) // 2) % 2 else 1


__all__ = [
    "E2",
    "NCParams",
    "planar",
    "ExtendedSymplecticForm",
    "build_omega",
    "pfaffian",
    "pfaffian_matchings",
    "DarbouxMap",
    "DarbouxCheck",
    "standard_darboux",
    "generic_darboux",
    "verify_darboux",
    "is_nc_symplectic",
    "is_symplectic",
    "conjugate_symplectic",
    "random_symplectic",
    "random_nc_symplectic",
    "random_admissible_params",
    "pf_sign_expected",
    "standard_j",
]
