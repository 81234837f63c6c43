"""Closed-form calculus on polynomial-times-Gaussian functions.

A :class:`GaussPoly` represents

    f(z) = P(z) exp(-z^T G z + h^T z + c)

with ``P`` a sparse complex polynomial, ``G`` complex symmetric with positive
definite real part, ``h`` a complex vector and ``c`` a complex constant. The
public ``center``/``linphase``/``logscale`` view rewrites the exponent as
``-(z - z0)^T G (z - z0) + i b^T z + logscale`` with real ``z0`` and ``b``.

The class is closed under products, affine pullbacks, partial integrals,
convolutions and Fourier transforms. Every one of these reduces to completing
the square plus Gaussian moments of the polynomial part. :class:`GaussSum`
holds finite linear combinations (mixtures).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.stats import qmc

from .errors import DegreeOverflow, NotIntegrable, SingularMatrix

#: Maximal total degree of the polynomial prefactor.
D_MAX = 8

Exps = tuple[int, ...]


# ---------------------------------------------------------------------------
# Sparse polynomials


@dataclass(frozen=True)
class Poly:
    """Sparse multivariate polynomial with complex coefficients."""

    nvars: int
    terms: dict[Exps, complex] = field(default_factory=dict)

    @classmethod
    def const(cls, nvars: int, value: complex = 1.0) -> "Poly":
        if value == 0:
            return cls(nvars, {})
        return cls(nvars, {(0,) * nvars: complex(value)})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0 + 0j})

    @classmethod
    def linear(cls, coeffs: Sequence[complex], offset: complex = 0.0) -> "Poly":
        n = len(coeffs)
        terms: dict[Exps, complex] = {}
        for i, a in enumerate(coeffs):
            if a != 0:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = complex(a)
        if offset != 0:
            terms[(0,) * n] = complex(offset)
        return cls(n, terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_term(self) -> complex:
        return self.terms.get((0,) * self.nvars, 0j)

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, a in other.terms.items():
            out[e] = out.get(e, 0j) + a
        return Poly(self.nvars, {e: a for e, a in out.items() if a != 0})

    def scale(self, k: complex) -> "Poly":
        if k == 0:
            return Poly(self.nvars, {})
        return Poly(self.nvars, {e: a * k for e, a in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[Exps, complex] = {}
        for e1, a1 in self.terms.items():
            for e2, a2 in other.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0j) + a1 * a2
        return Poly(self.nvars, {e: a for e, a in out.items() if a != 0})

    def conj(self) -> "Poly":
        return Poly(self.nvars, {e: np.conj(a) for e, a in self.terms.items()})

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Evaluate at points ``z`` of shape ``(..., nvars)``."""
        z = np.asarray(z)
        out = np.zeros(z.shape[:-1], dtype=complex)
        if not self.terms:
            return out
        deg = self.degree
        powers = [[np.ones(z.shape[:-1])] for _ in range(self.nvars)]
        for i in range(self.nvars):
            for _ in range(deg):
                powers[i].append(powers[i][-1] * z[..., i])
        for e, a in self.terms.items():
            term = np.full(z.shape[:-1], a, dtype=complex)
            for i, k in enumerate(e):
                if k:
                    term = term * powers[i][k]
            out += term
        return out

    def substitute(self, m: np.ndarray, s: np.ndarray | None = None) -> "Poly":
        """Return ``u -> P(m u + s)`` with ``m`` of shape ``(nvars, k)``."""
        m = np.asarray(m)
        k = m.shape[1]
        s = np.zeros(self.nvars) if s is None else np.asarray(s)
        lin = [Poly.linear(m[i], s[i]) if (np.any(m[i] != 0) or s[i] != 0) else Poly(k, {}) for i in range(self.nvars)]
        cache: dict[tuple[int, int], Poly] = {}

        def power(i: int, p: int) -> Poly:
            if p == 0:
                return Poly.const(k)
            key = (i, p)
            if key not in cache:
                cache[key] = power(i, p - 1) * lin[i]
            return cache[key]

        out = Poly(k, {})
        for e, a in self.terms.items():
            term = Poly.const(k, a)
            for i, p in enumerate(e):
                if p:
                    term = term * power(i, p)
            out = out + term
        return out

    def to_list(self) -> list[dict]:
        return [
            {"exponents": list(e), "re": float(np.real(a)), "im": float(np.imag(a))}
            for e, a in sorted(self.terms.items())
        ]

    @classmethod
    def from_list(cls, nvars: int, items: Iterable[dict]) -> "Poly":
        terms: dict[Exps, complex] = {}
        for item in items:
            e = tuple(int(x) for x in item["exponents"])
            if len(e) != nvars:
                raise ValueError("exponent length does not match dim")
            terms[e] = terms.get(e, 0j) + complex(item.get("re", 0.0), item.get("im", 0.0))
        return cls(nvars, {e: a for e, a in terms.items() if a != 0})


def gaussian_moments(cov: np.ndarray):
    """Return ``beta -> E[v^beta]`` for the centred complex Gaussian with covariance ``cov``.

    Uses the Isserlis recursion ``E[v_i F] = sum_j cov_ij E[d_j F]``.
    """
    cov = np.asarray(cov, dtype=complex)

    @lru_cache(maxsize=None)
    def mom(beta: Exps) -> complex:
        total = sum(beta)
        if total == 0:
            return 1.0 + 0j
        if total % 2:
            return 0j
        i = next(k for k, b in enumerate(beta) if b)
        rest = list(beta)
        rest[i] -= 1
        acc = 0j
        for j, bj in enumerate(rest):
            if bj:
                sub = list(rest)
                sub[j] -= 1
                acc += cov[i, j] * bj * mom(tuple(sub))
        return acc

    return mom


def _is_re_pd(g: np.ndarray) -> bool:
    """Cholesky of ``Re g`` with pivot threshold ``1e-12 * trace``."""
    a = np.real(np.asarray(g)).copy()
    n = a.shape[0]
    if n == 0:
        return True
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-14 * (1 + np.abs(a).max())):
        return False
    tr = np.trace(a)
    if tr <= 0:
        return False
    thresh = 1e-12 * tr
    for k in range(n):
        piv = a[k, k] - a[k, :k] @ a[k, :k]
        if piv <= thresh:
            return False
        a[k, k] = np.sqrt(piv)
        for i in range(k + 1, n):
            a[i, k] = (a[i, k] - a[i, :k] @ a[k, :k]) / a[k, k]
    return True


def _sqrt_det_inv(g: np.ndarray) -> complex:
    """``det(g)^(-1/2)`` on the branch continuous from real positive definite forms."""
    lam = np.linalg.eigvals(np.asarray(g, dtype=complex))
    return complex(np.prod(1.0 / np.sqrt(lam)))


# ---------------------------------------------------------------------------
# GaussPoly


@dataclass(frozen=True)
class GaussPoly:
    """``P(z) exp(-z^T G z + h^T z + c)``.

    Parameters
    ----------
    poly : Poly
    g : (n, n) complex array, symmetric
    h : (n,) complex array
    c : complex
    real : bool
        Tag asserting that ``f`` is real-valued on real points.
    """

    poly: Poly
    g: np.ndarray
    h: np.ndarray
    c: complex = 0j
    real: bool = False

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=complex)
        g = 0.5 * (g + g.T)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", np.asarray(self.h, dtype=complex).reshape(g.shape[0]))
        object.__setattr__(self, "c", complex(self.c))
        if self.poly.nvars != g.shape[0]:
            raise ValueError("polynomial and quadratic form dimensions differ")

    # -- construction -----------------------------------------------------
    @classmethod
    def gaussian(
        cls,
        g,
        center=None,
        linphase=None,
        logscale: complex = 0.0,
        poly: Poly | None = None,
        real: bool = False,
    ) -> "GaussPoly":
        """Build from the public view ``P(z) exp(-(z-z0)^T G (z-z0) + i b^T z + logscale)``."""
        g = np.asarray(g, dtype=complex)
        n = g.shape[0]
        z0 = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        b = np.zeros(n) if linphase is None else np.asarray(linphase, dtype=float)
        h = 2.0 * g @ z0 + 1j * b
        c = complex(logscale) - z0 @ g @ z0
        poly = Poly.const(n) if poly is None else poly
        f = cls(poly, g, h, c, real)
        if not f.integrable():
            raise NotIntegrable("Re(G) is not positive definite")
        if f.poly.degree > D_MAX:
            raise DegreeOverflow(f"degree {f.poly.degree} exceeds {D_MAX}")
        return f

    @classmethod
    def normalized_gaussian(cls, a, center=None) -> "GaussPoly":
        """``sqrt(det A / pi^n) exp(-(z - z0)^T A (z - z0))`` for real SPD ``A``."""
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        sign, logdet = np.linalg.slogdet(a)
        if sign <= 0:
            raise NotIntegrable("A must be positive definite")
        return cls.gaussian(a, center, None, 0.5 * (logdet - n * math.log(math.pi)), real=True)

    @classmethod
    def constant(cls, n: int, value: complex = 1.0) -> "GaussPoly":
        """Constant function; not integrable, but usable as a factor."""
        return cls(Poly.const(n, value), np.zeros((n, n)), np.zeros(n), 0j, real=np.imag(value) == 0)

    # -- views --------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def center(self) -> np.ndarray:
        return np.linalg.solve(np.real(self.g), np.real(self.h)) / 2.0

    @property
    def linphase(self) -> np.ndarray:
        return np.imag(self.h) - 2.0 * np.imag(self.g) @ self.center

    @property
    def logscale(self) -> complex:
        z0 = self.center
        return self.c + z0 @ self.g @ z0

    def integrable(self) -> bool:
        return _is_re_pd(self.g)

    def require_integrable(self) -> None:
        if not self.integrable():
            raise NotIntegrable("Re(G) is not positive definite")

    # -- evaluation -------------------------------------------------------
    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        quad = np.einsum("...i,ij,...j->...", z, self.g, z)
        expo = -quad + z @ self.h + self.c
        return self.poly.evaluate(z) * np.exp(expo)

    # -- algebra ------------------------------------------------------------
    def scale(self, k: complex) -> "GaussPoly":
        return GaussPoly(self.poly.scale(k), self.g, self.h, self.c, self.real and np.imag(k) == 0)

    def conj(self) -> "GaussPoly":
        return GaussPoly(self.poly.conj(), np.conj(self.g), np.conj(self.h), np.conj(self.c), self.real)

    def with_real(self, flag: bool = True) -> "GaussPoly":
        return GaussPoly(self.poly, self.g, self.h, self.c, flag)

    def to_dict(self) -> dict:
        ls = self.logscale
        return {
            "dim": self.dim,
            "center": self.center.tolist(),
            "g_re": np.real(self.g).tolist(),
            "g_im": np.imag(self.g).tolist(),
            "linphase": self.linphase.tolist(),
            "poly": self.poly.to_list(),
            "logscale_re": float(np.real(ls)),
            "logscale_im": float(np.imag(ls)),
            "real": bool(self.real),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "GaussPoly":
        n = int(data["dim"])
        g = np.asarray(data["g_re"], dtype=float) + 1j * np.asarray(data.get("g_im", np.zeros((n, n))), dtype=float)
        poly = Poly.from_list(n, data.get("poly", [{"exponents": [0] * n, "re": 1.0, "im": 0.0}]))
        return cls.gaussian(
            g,
            data.get("center"),
            data.get("linphase"),
            complex(data.get("logscale_re", 0.0), data.get("logscale_im", 0.0)),
            poly,
            bool(data.get("real", False)),
        )


def linear_compose(f: GaussPoly, m: np.ndarray, s=None) -> GaussPoly:
    """``u -> f(m u + s)`` for a possibly rectangular ``m`` (no integrability check)."""
    m = np.asarray(m, dtype=float)
    s = np.zeros(f.dim) if s is None else np.asarray(s, dtype=float)
    g = m.T @ f.g @ m
    h = m.T @ (f.h - 2.0 * f.g @ s)
    c = f.c - s @ f.g @ s + f.h @ s
    return GaussPoly(f.poly.substitute(m, s), g, h, c, f.real)


def _product(f: GaussPoly, g: GaussPoly, check_degree: bool = True) -> GaussPoly:
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    poly = f.poly * g.poly
    if check_degree and poly.degree > D_MAX:
        raise DegreeOverflow(f"product degree {poly.degree} exceeds {D_MAX}")
    return GaussPoly(poly, f.g + g.g, f.h + g.h, f.c + g.c, f.real and g.real)


def _marginal(f: GaussPoly, keep: Sequence[int]) -> GaussPoly:
    """Integrate out every variable not in ``keep``; output ordered as ``keep``."""
    n = f.dim
    keep = list(keep)
    drop = [i for i in range(n) if i not in keep]
    if not drop:
        return linear_compose(f, np.eye(n)[:, keep])
    gyy = f.g[np.ix_(drop, drop)]
    if not _is_re_pd(gyy):
        raise NotIntegrable("Re(G) is not positive definite on the integrated block")
    gxy = f.g[np.ix_(keep, drop)]
    gxx = f.g[np.ix_(keep, keep)]
    hx, hy = f.h[keep], f.h[drop]
    gyy_inv = np.linalg.inv(gyy)
    g_new = gxx - gxy @ gyy_inv @ gxy.T
    h_new = hx - gxy @ gyy_inv @ hy
    c_new = f.c + hy @ gyy_inv @ hy / 4.0
    k, r = len(keep), len(drop)
    factor = math.pi ** (r / 2.0) * _sqrt_det_inv(gyy)
    # y = v + A x + a, with v centred Gaussian of covariance gyy^-1 / 2.
    a_mat = -gyy_inv @ gxy.T
    a_vec = gyy_inv @ hy / 2.0
    t = np.zeros((n, k + r), dtype=complex)
    s = np.zeros(n, dtype=complex)
    t[keep, np.arange(k)] = 1.0
    t[np.ix_(drop, np.arange(k))] = a_mat
    t[drop, k + np.arange(r)] = 1.0
    s[drop] = a_vec
    sub = f.poly.substitute(t, s)
    mom = gaussian_moments(gyy_inv / 2.0)
    terms: dict[Exps, complex] = {}
    for e, coeff in sub.terms.items():
        m = mom(e[k:])
        if m != 0:
            ex = e[:k]
            terms[ex] = terms.get(ex, 0j) + coeff * m
    poly = Poly(k, {e: v * factor for e, v in terms.items() if v != 0})
    return GaussPoly(poly, g_new, h_new, c_new, f.real)


def _integrate(f: GaussPoly) -> complex:
    f.require_integrable()
    out = _marginal(f, [])
    return complex(out.poly.constant_term() * np.exp(out.c))


def _fourier(f: GaussPoly) -> GaussPoly:
    """``F(k) = int f(z) exp(i k^T z) dz``."""
    f.require_integrable()
    n = f.dim
    g = np.zeros((2 * n, 2 * n), dtype=complex)
    g[:n, n:] = -0.5j * np.eye(n)
    g[n:, :n] = -0.5j * np.eye(n)
    g[n:, n:] = f.g
    h = np.concatenate([np.zeros(n), f.h])
    poly = Poly(2 * n, {(0,) * n + e: a for e, a in f.poly.terms.items()})
    joint = GaussPoly(poly, g, h, f.c, False)
    return _marginal(joint, list(range(n)))


# ---------------------------------------------------------------------------
# Mixtures


@dataclass(frozen=True)
class GaussSum:
    """Finite sum of :class:`GaussPoly` terms of equal dimension."""

    terms: tuple[GaussPoly, ...]
    real: bool = False

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("GaussSum needs at least one term")
        dims = {t.dim for t in self.terms}
        if len(dims) != 1:
            raise ValueError("terms have different dimensions")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def __call__(self, z) -> np.ndarray:
        return sum(t(z) for t in self.terms)

    def scale(self, k: complex) -> "GaussSum":
        return GaussSum(tuple(t.scale(k) for t in self.terms), self.real and np.imag(k) == 0)

    def conj(self) -> "GaussSum":
        return GaussSum(tuple(t.conj() for t in self.terms), self.real)

    def integrable(self) -> bool:
        return all(t.integrable() for t in self.terms)

    def with_real(self, flag: bool = True) -> "GaussSum":
        return GaussSum(self.terms, flag)

    def to_dict(self) -> dict:
        return {"terms": [t.to_dict() for t in self.terms], "real": bool(self.real)}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussSum":
        return cls(tuple(GaussPoly.from_dict(t) for t in data["terms"]), bool(data.get("real", False)))


GaussFn = Union[GaussPoly, GaussSum]


def terms_of(f: GaussFn) -> tuple[GaussPoly, ...]:
    return f.terms if isinstance(f, GaussSum) else (f,)


def _rewrap(f: GaussFn, terms: Sequence[GaussPoly], real: bool | None = None) -> GaussFn:
    real = f.real if real is None else real
    if isinstance(f, GaussSum) or len(terms) != 1:
        return GaussSum(tuple(terms), real)
    return terms[0].with_real(real)


def fn_from_dict(data: dict) -> GaussFn:
    if "terms" in data:
        return GaussSum.from_dict(data)
    return GaussPoly.from_dict(data)


# ---------------------------------------------------------------------------
# Public operations


def evaluate(f: GaussFn, z) -> np.ndarray:
    """Pointwise value(s) of ``f``."""
    return f(z)


def multiply(f: GaussFn, g: GaussFn) -> GaussFn:
    """Pointwise product in closed form.

    Raises
    ------
    DegreeOverflow
        If a product polynomial exceeds degree ``D_MAX``.
    """
    out = [_product(a, b) for a in terms_of(f) for b in terms_of(g)]
    return _rewrap(f if len(out) == 1 else GaussSum(tuple(out)), out, f.real and g.real)


def add(f: GaussFn, g: GaussFn) -> GaussSum:
    return GaussSum(terms_of(f) + terms_of(g), f.real and g.real)


def affine_pullback(f: GaussFn, m, shift=None) -> GaussFn:
    """``z -> f(m z + shift)`` for square invertible ``m``.

    Raises
    ------
    SingularMatrix
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (f.dim, f.dim):
        raise ValueError("pullback matrix must be square and match dim")
    if abs(np.linalg.det(m)) <= 1e-14 * (1 + np.abs(m).max()) ** f.dim:
        raise SingularMatrix("pullback matrix is singular")
    return _rewrap(f, [linear_compose(t, m, shift) for t in terms_of(f)])


def integrate(f: GaussFn) -> complex:
    """Exact integral over all of ``R^n``.

    Raises
    ------
    NotIntegrable
    """
    return sum((_integrate(t) for t in terms_of(f)), 0j)


def marginal(f: GaussFn, keep: Sequence[int]) -> GaussFn:
    """Integrate out every variable not listed in ``keep``."""
    return _rewrap(f, [_marginal(t, keep) for t in terms_of(f)])


def convolve(f: GaussFn, g: GaussFn) -> GaussFn:
    """``(f * g)(z) = int f(z - w) g(w) dw``."""
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    n = f.dim
    eye = np.eye(n)
    first = np.hstack([eye, -eye])
    second = np.hstack([np.zeros((n, n)), eye])
    out = []
    for a in terms_of(f):
        a.require_integrable()
        for b in terms_of(g):
            b.require_integrable()
            joint = _product(linear_compose(a, first), linear_compose(b, second))
            out.append(_marginal(joint, list(range(n))))
    real = f.real and g.real
    return out[0].with_real(real) if len(out) == 1 else GaussSum(tuple(out), real)


def fourier(f: GaussFn) -> GaussFn:
    """Plain Fourier transform ``F(k) = int f(z) exp(i k^T z) dz``."""
    return _rewrap(f, [_fourier(t) for t in terms_of(f)], False)


def _ft_matrix(kind: str, form, n: int) -> np.ndarray:
    from .symplectic import standard_j

    if kind in ("J", "commutative"):
        return standard_j(n // 2)
    if kind in ("Omega", "noncommutative", "nc"):
        if form is None:
            raise ValueError("the Omega transform needs an extended symplectic form")
        return -np.linalg.inv(form.omega)
    raise ValueError(f"unknown transform kind {kind!r}")


def symplectic_ft(f: GaussFn, kind: str, form=None) -> GaussFn:
    """Symplectic Fourier transform.

    ``kind='J'``: ``int f(z) exp(-i a^T J z) dz``.
    ``kind='Omega'``: ``int f(z) exp(i a^T Omega^-1 z) dz``.
    ``form`` supplies ``Omega`` and is only needed for the second kind.
    """
    k = _ft_matrix(kind, form, f.dim)
    transformed = fourier(f)
    return _rewrap(transformed, [linear_compose(t, k) for t in terms_of(transformed)], False)


def inverse_symplectic_ft(ft: GaussFn, kind: str, form=None) -> GaussFn:
    """Invert :func:`symplectic_ft`."""
    n = ft.dim
    k = _ft_matrix(kind, form, n)
    pref = (2 * math.pi) ** (-n)
    if kind not in ("J", "commutative"):
        pref /= abs(np.linalg.det(form.omega))
    transformed = fourier(ft)
    return _rewrap(transformed, [linear_compose(t, k).scale(pref) for t in terms_of(transformed)], False)


@dataclass(frozen=True)
class MomentReport:
    mean: np.ndarray
    covariance: np.ndarray
    norm: float

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist(), "norm": self.norm}


def _monomial(n: int, exps: Exps) -> Poly:
    return Poly(n, {tuple(exps): 1.0 + 0j})


def moment(f: GaussFn, exps: Exps) -> complex:
    """``int z^exps f(z) dz``."""
    mono = _monomial(f.dim, exps)
    total = 0j
    for t in terms_of(f):
        total += _integrate(GaussPoly(t.poly * mono, t.g, t.h, t.c, t.real))
    return total


def moments(f: GaussFn) -> MomentReport:
    """Mean and covariance, each normalised by ``int f``.

    Raises
    ------
    NotIntegrable
    """
    n = f.dim
    norm = integrate(f).real
    if norm == 0:
        raise NotIntegrable("zero total integral")
    eye = np.eye(n, dtype=int)
    mean = np.array([moment(f, tuple(eye[i])).real for i in range(n)]) / norm
    second = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            second[i, j] = second[j, i] = moment(f, tuple(eye[i] + eye[j])).real / norm
    cov = second - np.outer(mean, mean)
    return MomentReport(mean, 0.5 * (cov + cov.T), float(norm))


def purity(f: GaussFn) -> float:
    """``int f^2``."""
    return float(np.real(integrate(multiply(f, f))))


def sample_points(f: GaussFn, count: int = 64, spread: float = 3.0, seed: int = 7) -> np.ndarray:
    """Quasi-random points covering the bulk of ``f`` (Halton sequence)."""
    n = f.dim
    ref = terms_of(f)[0]
    cov = np.linalg.inv(np.real(ref.g)) / 2.0
    scale = np.sqrt(np.clip(np.diag(cov), 1e-300, None))
    u = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    return ref.center + spread * scale * (2.0 * u - 1.0)


def check_real(f: GaussFn, count: int = 64) -> bool:
    """Sampling test ``|Im f| <= 1e-12 (1 + |f|)``."""
    vals = f(sample_points(f, count))
    return bool(np.all(np.abs(vals.imag) <= 1e-12 * (1.0 + np.abs(vals))))


def tag_real(f: GaussFn) -> GaussFn:
    """Return ``f`` tagged real if sampling confirms it, else unchanged."""
    return f.with_real(True) if check_real(f) else f


__all__ = [
    "D_MAX",
    "Poly",
    "GaussPoly",
    "GaussSum",
    "GaussFn",
    "MomentReport",
    "evaluate",
    "multiply",
    "add",
    "affine_pullback",
    "integrate",
    "marginal",
    "moments",
    "moment",
    "convolve",
    "fourier",
    "symplectic_ft",
    "inverse_symplectic_ft",
    "purity",
    "linear_compose",
    "gaussian_moments",
    "terms_of",
    "fn_from_dict",
    "check_real",
    "tag_real",
    "sample_points",
]
