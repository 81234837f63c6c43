"""Grid backend: sampled phase-space functions and star products.

Star products on a grid
-----------------------
Each canonical plane ``(x, p)`` with deformation constant ``c`` (``hbar``,
``theta`` or ``eta``) is handled through the Weyl correspondence. A symbol
``A(x, p)`` becomes an operator kernel

    K(a, b) = sum_j A((x_a + x_b)/2, p_j) exp(i p_j (x_a - x_b) / c) h_p,

the product of symbols becomes ``K_C = K_A K_B h_x / (2 pi c)``, and the
symbol is recovered from the anti-diagonals of ``K_C``. Midpoints that fall
between grid nodes are obtained by a half-cell spectral shift. Planes that
act together (the two ``J`` planes, or the ``theta`` and ``eta`` planes) are
multiplied jointly in one matrix product. The full ``Omega`` product is
reduced to the ``J`` product by a shear-type Darboux map applied on the grid
with spectral shifts.

The accuracy condition per plane is ``L_x L_p < pi c N / 4`` for a box
``[-L_x, L_x] x [-L_p, L_p]`` with ``N`` points per axis.
"""

from __future__ import annotations

import contextlib
import math
import struct
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import erfc

from .errors import DegenerateKernel, GridMismatch, InternalInconsistency, NotGaussian
from .gausspoly import (
    GaussFn,
    GaussPoly,
    Poly,
    fourier,
    linear_compose,
    marginal,
    multiply,
    terms_of,
)
from .symplectic import ExtendedSymplecticForm, standard_j

#: Rows of the leading batch processed at once by the kernel transforms.
_CHUNK_BYTES = 96 * 2**20

STAR_KINDS = ("full", "hbar", "theta", "eta", "theta-eta")


# ---------------------------------------------------------------------------
# Grids


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid on a box.

    Parameters
    ----------
    lo, hi : sequence of float
        Box corners per axis.
    npts : sequence of int
        Points per axis; powers of two, at least 16.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    npts: tuple[int, ...]

    def __post_init__(self) -> None:
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        npts = tuple(int(n) for n in self.npts)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "npts", npts)
        if not (len(lo) == len(hi) == len(npts)) or len(lo) not in (2, 4):
            raise GridMismatch("grids have 2 or 4 axes with matching lo/hi/npts")
        for a, b, n in zip(lo, hi, npts):
            if not b > a:
                raise GridMismatch("hi must exceed lo on every axis")
            if n < 16 or n & (n - 1):
                raise GridMismatch(f"npts must be a power of two >= 16, got {n}")

    @classmethod
    def box(cls, half_width: float | Sequence[float], npts: int = 64, dims: int = 4) -> "GridSpec":
        hw = np.broadcast_to(np.asarray(half_width, dtype=float), (dims,))
        return cls(tuple(-hw), tuple(hw), (npts,) * dims)

    @property
    def dims(self) -> int:
        return len(self.npts)

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / np.array(self.npts)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, i: int) -> np.ndarray:
        h = (self.hi[i] - self.lo[i]) / self.npts[i]
        return self.lo[i] + (np.arange(self.npts[i]) + 0.5) * h

    @property
    def shape(self) -> tuple[int, ...]:
        return self.npts

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*[self.axis(i) for i in range(self.dims)], indexing="ij")
        return np.stack(mesh, axis=-1)

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "npts": list(self.npts)}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(tuple(data["lo"]), tuple(data["hi"]), tuple(data["npts"]))


@dataclass(frozen=True)
class GridFn:
    """Sampled function; values are read-only."""

    spec: GridSpec
    values: np.ndarray
    meta: str = ""
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.spec.shape:
            raise GridMismatch(f"values have shape {vals.shape}, grid expects {self.spec.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridMismatch("grid values must be finite")
        vals = vals.copy() if vals.flags.writeable and vals.base is not None else vals
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def conj(self) -> "GridFn":
        return GridFn(self.spec, np.conj(self.values), f"conj({self.meta})")

    def __mul__(self, other: "GridFn") -> "GridFn":
        _same_grid(self, other)
        return GridFn(self.spec, self.values * other.values, f"({self.meta})*({other.meta})")

    def scale(self, k: complex) -> "GridFn":
        return GridFn(self.spec, self.values * k, self.meta)


def _same_grid(a: GridFn, b: GridFn) -> None:
    if a.spec != b.spec:
        raise GridMismatch("operands live on different grids")


def envelope_std(f: GaussFn) -> np.ndarray:
    """Per-axis standard deviation of the Gaussian envelope ``exp(-z^T Re(G) z)``, maximised over terms."""
    out = np.zeros(f.dim)
    for t in terms_of(f):
        cov = np.linalg.inv(np.real(t.g)) / 2.0
        width = np.sqrt(np.diag(cov))
        # Polynomial prefactors push mass outwards; widen by sqrt(1 + degree).
        out = np.maximum(out, width * math.sqrt(1.0 + t.poly.degree))
    return out


def default_grid(*fns: GaussFn, npts: int = 64, sigmas: float = 8.0, form: ExtendedSymplecticForm | None = None) -> GridSpec:
    """Symmetric box of ``sigmas`` envelope deviations around the origin.

    With ``form`` given, the box also covers the operands after the shear
    used by the full ``Omega`` product.
    """
    dims = fns[0].dim
    reach = np.zeros(dims)
    for f in fns:
        width = envelope_std(f)
        centre = np.abs(np.array([np.zeros(dims)] + [t.center for t in terms_of(f)])).max(axis=0)
        reach = np.maximum(reach, centre + sigmas * width)
    if form is not None and dims == 4:
        hbar = form.hbar
        t, e = form.params.theta_scalar, form.params.eta_scalar
        reach[1] = reach[1] + abs(t / hbar) * reach[2]
        reach[3] = reach[3] + abs(e / hbar) * reach[0]
    return GridSpec.box(float(reach.max()), npts, dims)


def sample(f: GaussFn, spec: GridSpec, meta: str = "") -> GridFn:
    """Evaluate ``f`` at the cell centres of ``spec``."""
    if f.dim != spec.dims:
        raise GridMismatch(f"function has {f.dim} variables, grid has {spec.dims} axes")
    axes = [spec.axis(i) for i in range(spec.dims)]
    out = np.empty(spec.shape, dtype=complex)
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1)
    for i, x0 in enumerate(axes[0]):
        pts = np.concatenate([np.full(rest.shape[:-1] + (1,), x0), rest], axis=-1)
        out[i] = f(pts)
    return GridFn(spec, out, meta or "sample", {"tail_mass": tail_mass(f, spec)})


def constant(spec: GridSpec, value: complex = 1.0) -> GridFn:
    return GridFn(spec, np.full(spec.shape, value, dtype=complex), "constant")


def tail_mass(f: GaussFn, spec: GridSpec) -> float:
    """Estimated mass of the Gaussian envelope outside the box (aliasing bound)."""
    width = envelope_std(f)
    total = 0.0
    for t in terms_of(f):
        z0 = t.center
        for i in range(spec.dims):
            s = max(width[i], 1e-300)
            total += 0.5 * erfc((spec.hi[i] - z0[i]) / (math.sqrt(2) * s))
            total += 0.5 * erfc((z0[i] - spec.lo[i]) / (math.sqrt(2) * s))
    return float(total)


def integrate_grid(f: GridFn) -> complex:
    """Riemann sum times the cell volume."""
    return complex(f.values.sum() * f.spec.cell_volume)


def grid_purity(f: GridFn) -> float:
    return float(np.real(np.sum(f.values**2) * f.spec.cell_volume))


def interior(spec: GridSpec, margin: float = 0.1) -> tuple[slice, ...]:
    """Index slices dropping ``margin`` of the cells at each end of every axis."""
    return tuple(slice(int(round(margin * n)), n - int(round(margin * n))) for n in spec.npts)


def interior_max_diff(a: GridFn, b: GridFn | np.ndarray, margin: float = 0.1) -> float:
    vb = b.values if isinstance(b, GridFn) else np.asarray(b)
    sl = interior(a.spec, margin)
    return float(np.abs(a.values[sl] - vb[sl]).max())


# ---------------------------------------------------------------------------
# Threads


@contextlib.contextmanager
def thread_limit(n: int | None) -> Iterator[None]:
    """Cap BLAS/FFT worker threads for the duration of the block."""
    if n is None:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=int(n)):
        yield


# ---------------------------------------------------------------------------
# Spectral helpers


def _spectral_shift(values: np.ndarray, axis: int, h: float, delta) -> np.ndarray:
    """Return ``v(x + delta)`` along ``axis``; ``delta`` broadcasts against ``values``."""
    n = values.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    shape = [1] * values.ndim
    shape[axis] = n
    k = k.reshape(shape)
    spec = np.fft.fft(values, axis=axis)
    spec *= np.exp(1j * k * delta)
    return np.fft.ifft(spec, axis=axis)


def _chunks(batch: int, row_bytes: int) -> Iterator[slice]:
    step = max(1, _CHUNK_BYTES // max(row_bytes, 1))
    for start in range(0, batch, step):
        yield slice(start, min(batch, start + step))


@dataclass(frozen=True)
class _Plane:
    x_axis: int
    p_axis: int
    const: float


def _to_kernel(values: np.ndarray, spec: GridSpec, plane: _Plane) -> np.ndarray:
    """Replace axes ``(x, p)`` of ``values`` by kernel indices ``(a, b)``."""
    xa, pa, c = plane.x_axis, plane.p_axis, plane.const
    nx, npp = spec.npts[xa], spec.npts[pa]
    hx, hp = spec.spacing[xa], spec.spacing[pa]
    p = spec.axis(pa)
    moved = np.moveaxis(values, (xa, pa), (-2, -1))
    lead = moved.shape[:-2]
    flat = moved.reshape(-1, nx, npp)
    half = _spectral_shift(flat, 1, hx, hx / 2.0)
    k = np.arange(-(nx - 1), nx)
    phase = np.exp(1j * np.outer(p, k) * hx / c) * hp
    a_idx, b_idx = np.meshgrid(np.arange(nx), np.arange(nx), indexing="ij")
    s_idx = a_idx + b_idx
    d_idx = a_idx - b_idx + nx - 1
    out = np.empty((flat.shape[0], nx, nx), dtype=complex)
    for sl in _chunks(flat.shape[0], (2 * nx) ** 2 * 16):
        mid = np.empty((sl.stop - sl.start, 2 * nx - 1, npp), dtype=complex)
        mid[:, 0::2] = flat[sl]
        mid[:, 1::2] = half[sl, :-1]
        rows = mid.shape[0]
        t = (mid.reshape(-1, npp) @ phase).reshape(rows, 2 * nx - 1, 2 * nx - 1)
        out[sl] = t[:, s_idx, d_idx]
    out = out.reshape(lead + (nx, nx))
    return np.moveaxis(out, (-2, -1), (xa, pa))


def _from_kernel(kern: np.ndarray, spec: GridSpec, plane: _Plane) -> np.ndarray:
    """Inverse of :func:`_to_kernel` using the even anti-diagonals."""
    xa, pa, c = plane.x_axis, plane.p_axis, plane.const
    nx, npp = spec.npts[xa], spec.npts[pa]
    hx = spec.spacing[xa]
    p = spec.axis(pa)
    moved = np.moveaxis(kern, (xa, pa), (-2, -1))
    lead = moved.shape[:-2]
    flat = moved.reshape(-1, nx, nx)
    i_idx, k_idx = np.meshgrid(np.arange(nx), np.arange(-(nx - 1), nx), indexing="ij")
    a_idx, b_idx = i_idx + k_idx, i_idx - k_idx
    valid = (a_idx >= 0) & (a_idx < nx) & (b_idx >= 0) & (b_idx < nx)
    a_idx = np.where(valid, a_idx, 0)
    b_idx = np.where(valid, b_idx, 0)
    phase = np.exp(-1j * np.outer(np.arange(-(nx - 1), nx), p) * 2 * hx / c) * (2 * hx / (2 * np.pi * c))
    out = np.empty((flat.shape[0], nx, npp), dtype=complex)
    for sl in _chunks(flat.shape[0], nx * 2 * nx * 16):
        diag = flat[sl][:, a_idx, b_idx] * valid
        out[sl] = (diag.reshape(-1, 2 * nx - 1) @ phase).reshape(-1, nx, npp)
    out = out.reshape(lead + (nx, npp))
    return np.moveaxis(out, (-2, -1), (xa, pa))


def _joint_product(ka: np.ndarray, kb: np.ndarray, spec: GridSpec, planes: Sequence[_Plane]) -> np.ndarray:
    """Compose kernels over all planes at once; other axes are spectators."""
    a_axes = [pl.x_axis for pl in planes]
    b_axes = [pl.p_axis for pl in planes]
    spect = [i for i in range(spec.dims) if i not in a_axes + b_axes]
    order = spect + a_axes + b_axes
    size = int(np.prod([spec.npts[i] for i in a_axes]))
    batch = int(np.prod([spec.npts[i] for i in spect])) if spect else 1
    weight = 1.0
    for pl in planes:
        weight *= spec.spacing[pl.x_axis] / (2 * np.pi * pl.const)
    ma = np.transpose(ka, order).reshape(batch, size, size)
    mb = np.transpose(kb, order).reshape(batch, size, size)
    mc = np.matmul(ma, mb)
    mc *= weight
    shape = [spec.npts[i] for i in spect] + [spec.npts[i] for i in a_axes] * 2
    return np.transpose(mc.reshape(shape), np.argsort(order))


def _planes_for(kind: str, form: ExtendedSymplecticForm | None, dims: int, hbar: float | None) -> list[_Plane]:
    if dims == 2:
        if kind == "hbar":
            c = hbar if hbar is not None else (form.hbar if form is not None else None)
        elif kind == "theta":
            c = form.params.theta_scalar if form is not None and form.d == 2 else None
        elif kind == "eta":
            c = form.params.eta_scalar if form is not None and form.d == 2 else None
        else:
            raise GridMismatch(f"kind {kind!r} needs a 4-axis grid")
        if c is None:
            raise DegenerateKernel("missing deformation constant")
        if c == 0:
            raise DegenerateKernel(f"{kind} product requested with a zero constant")
        return [_Plane(0, 1, float(c))]
    hb = hbar if hbar is not None else form.hbar
    t = form.params.theta_scalar if form is not None else 0.0
    e = form.params.eta_scalar if form is not None else 0.0
    if kind == "hbar":
        return [_Plane(0, 2, hb), _Plane(1, 3, hb)]
    if kind == "theta":
        if t == 0:
            raise DegenerateKernel("theta product requested with theta = 0")
        return [_Plane(0, 1, t)]
    if kind == "eta":
        if e == 0:
            raise DegenerateKernel("eta product requested with eta = 0")
        return [_Plane(2, 3, e)]
    if kind == "theta-eta":
        if t == 0 or e == 0:
            raise DegenerateKernel("theta-eta product requested with a zero constant")
        return [_Plane(0, 1, t), _Plane(2, 3, e)]
    raise ValueError(f"unknown star kind {kind!r}")


def _plane_product(a: np.ndarray, b: np.ndarray, spec: GridSpec, planes: Sequence[_Plane]) -> np.ndarray:
    ka, kb = a, b
    for pl in planes:
        ka = _to_kernel(ka, spec, pl)
        kb = _to_kernel(kb, spec, pl)
    kc = _joint_product(ka, kb, spec, planes)
    del ka, kb
    for pl in planes:
        kc = _from_kernel(kc, spec, pl)
    return kc


def _shear_params(form: ExtendedSymplecticForm) -> tuple[float, float, float, float]:
    hbar = form.hbar
    t, e = form.params.theta_scalar, form.params.eta_scalar
    return hbar, t, e, 1.0 - t * e / hbar**2


def canonical_shear(form: ExtendedSymplecticForm) -> np.ndarray:
    """The Darboux map used on the grid: ``z = S xi`` with ``S J S^T = Omega``.

    ``q1 = Q1``, ``q2 = Q2 + (theta/hbar) P1``, ``p1 = P1``,
    ``p2 = (1 - zeta) P2 - (eta/hbar) Q1``.
    """
    hbar, t, e, one_m = _shear_params(form)
    s = np.eye(4)
    s[1, 2] = t / hbar
    s[3, 3] = one_m
    s[3, 0] = -e / hbar
    return s


def _to_canonical(values: np.ndarray, spec: GridSpec, form: ExtendedSymplecticForm) -> tuple[np.ndarray, GridSpec]:
    hbar, t, e, one_m = _shear_params(form)
    q1 = spec.axis(0).reshape(-1, 1, 1, 1)
    p1 = spec.axis(2).reshape(1, 1, -1, 1)
    h = spec.spacing
    out = _spectral_shift(values, 1, h[1], (t / hbar) * p1)
    out = _spectral_shift(out, 3, h[3], -(e / hbar) * q1)
    lo, hi = list(spec.lo), list(spec.hi)
    lo[3] /= one_m
    hi[3] /= one_m
    return out, GridSpec(tuple(lo), tuple(hi), spec.npts)


def _from_canonical(values: np.ndarray, spec: GridSpec, xi_spec: GridSpec, form: ExtendedSymplecticForm) -> np.ndarray:
    hbar, t, e, one_m = _shear_params(form)
    q1 = spec.axis(0).reshape(-1, 1, 1, 1)
    p1 = spec.axis(2).reshape(1, 1, -1, 1)
    out = _spectral_shift(values, 1, xi_spec.spacing[1], -(t / hbar) * p1)
    out = _spectral_shift(out, 3, xi_spec.spacing[3], (e / hbar) * q1 / one_m)
    return out


def _is_constant(f: GridFn) -> bool:
    v = f.values
    first = v.flat[0]
    return bool(np.all(np.abs(v - first) <= 1e-14 * (1.0 + abs(first))))


def star_product(
    a: GridFn,
    b: GridFn,
    form: ExtendedSymplecticForm | None,
    kind: str = "full",
    hbar: float | None = None,
) -> GridFn:
    """Star product of two sampled functions.

    Parameters
    ----------
    a, b : GridFn
        Operands on identical grids.
    form : ExtendedSymplecticForm
        Supplies ``hbar, theta, eta``. May be ``None`` for ``kind='hbar'``
        when ``hbar`` is given.
    kind : {"full", "hbar", "theta", "eta", "theta-eta"}
        ``full`` is the product for ``Omega``. The others are the individual
        factors (on 4-axis grids: ``hbar`` uses the ``(q_i, p_i)`` planes,
        ``theta`` the ``(q1, q2)`` plane, ``eta`` the ``(p1, p2)`` plane).
        On 2-axis grids ``hbar``/``theta``/``eta`` act on the single plane.

    Raises
    ------
    GridMismatch, DegenerateKernel
    """
    _same_grid(a, b)
    spec = a.spec
    if _is_constant(a) or _is_constant(b):
        # Derivatives of a constant vanish, so the product is pointwise.
        return GridFn(spec, a.values * b.values, f"star({a.meta},{b.meta})")
    if kind == "full":
        if form is None or spec.dims != 4:
            raise GridMismatch("the full product needs a 4-axis grid and a form")
        if form.params.theta_scalar == 0 and form.params.eta_scalar == 0:
            return star_product(a, b, form, "hbar")
        va, xi_spec = _to_canonical(a.values, spec, form)
        vb, _ = _to_canonical(b.values, spec, form)
        planes = _planes_for("hbar", form, 4, None)
        vc = _plane_product(va, vb, xi_spec, planes)
        out = _from_canonical(vc, spec, xi_spec, form)
    else:
        planes = _planes_for(kind, form, spec.dims, hbar)
        out = _plane_product(a.values, b.values, spec, planes)
    info = {"bandwidth_ratio": bandwidth_ratio(spec, form, kind, hbar)}
    return GridFn(spec, out, f"star_{kind}({a.meta},{b.meta})", info)


def bandwidth_ratio(spec: GridSpec, form, kind: str, hbar: float | None = None) -> float:
    """Largest ``L_x L_p / (pi c N / 4)`` over the active planes.

    Values below 1 mean the grid resolves the phase. This is necessary, not
    sufficient: operands far narrower than ``sqrt(c)`` have operator kernels
    of width about ``c sqrt(2 lambda_max(Re G))``, which the box must also hold.
    """
    if kind == "full":
        planes = _planes_for("hbar", form, 4, None)
        _, _, _, one_m = _shear_params(form)
        scale = [1.0, 1.0, 1.0, 1.0 / one_m]
    else:
        planes = _planes_for(kind, form, spec.dims, hbar)
        scale = [1.0] * spec.dims
    worst = 0.0
    for pl in planes:
        lx = 0.5 * (spec.hi[pl.x_axis] - spec.lo[pl.x_axis]) * scale[pl.x_axis]
        lp = 0.5 * (spec.hi[pl.p_axis] - spec.lo[pl.p_axis]) * scale[pl.p_axis]
        worst = max(worst, lx * lp / (np.pi * abs(pl.const) * spec.npts[pl.x_axis] / 4))
    return worst


# ---------------------------------------------------------------------------
# Closed forms


def poisson_matrix(form: ExtendedSymplecticForm | None, kind: str = "full", dims: int = 4, hbar: float | None = None) -> np.ndarray:
    """Antisymmetric ``P`` with ``A * B = A exp((i/2) <-d^T P ->d) B``."""
    if dims == 2:
        c = {"hbar": hbar if hbar is not None else (form.hbar if form else None)}
        if form is not None and form.d == 2:
            c["theta"] = form.params.theta_scalar
            c["eta"] = form.params.eta_scalar
        if c.get(kind) is None:
            raise DegenerateKernel(f"no constant for kind {kind!r}")
        return c[kind] * standard_j(1)
    hb = hbar if hbar is not None else form.hbar
    if kind == "full":
        return hb * form.omega
    p = np.zeros((4, 4))
    if kind == "hbar":
        return hb * standard_j(2)
    if kind in ("theta", "theta-eta"):
        p[:2, :2] = form.params.Theta
    if kind in ("eta", "theta-eta"):
        p[2:, 2:] = form.params.N
    if kind not in ("theta", "eta", "theta-eta"):
        raise ValueError(f"unknown star kind {kind!r}")
    return p


def star_closed(a: GaussPoly, b: GaussPoly, poisson: np.ndarray) -> GaussPoly:
    """Exact star product of polynomial-Gaussians through their Fourier transforms.

    ``(A * B)(z) = (2 pi)^-2n int int A^(k1) B^(k2) exp(-i (k1 + k2)^T z - (i/2) k1^T P k2)``
    with ``A^(k) = int A(z) exp(i k^T z) dz``. Works for degenerate ``P``.
    """
    n = a.dim
    poisson = np.asarray(poisson, dtype=float)
    fa, fb = fourier(a), fourier(b)
    eye, zero = np.eye(n), np.zeros((n, n))
    ja = linear_compose(fa, np.hstack([zero, eye, zero]))
    jb = linear_compose(fb, np.hstack([zero, zero, eye]))
    g = np.zeros((3 * n, 3 * n), dtype=complex)
    g[:n, n : 2 * n] = g[n : 2 * n, :n] = 0.5j * eye
    g[:n, 2 * n :] = g[2 * n :, :n] = 0.5j * eye
    g[n : 2 * n, 2 * n :] = 0.25j * poisson
    g[2 * n :, n : 2 * n] = 0.25j * poisson.T
    phase = GaussPoly(Poly.const(3 * n), g, np.zeros(3 * n), 0j)
    joint = multiply(multiply(ja, jb), phase)
    out = marginal(joint, list(range(n)))
    return out.scale((2 * np.pi) ** (-2 * n)).with_real(False)


def gaussian_star_gaussian(a: GaussPoly, b: GaussPoly, form: ExtendedSymplecticForm | None, kind: str = "full", hbar: float | None = None) -> GaussPoly:
    """Star product of two pure Gaussians by the double-integral kernel, completed in closed form.

    ``A * B (z) = (pi^k det P_I)^-1 int int A(z') B(z'') exp(2i (z - z')_I^T P_I^-1 (z'' - z)_I)``
    where ``I`` indexes the variables the product acts on and other
    variables are shared.

    Raises
    ------
    NotGaussian
        If either factor has a non-constant polynomial part.
    """
    if not (a.poly.is_constant() and b.poly.is_constant()):
        raise NotGaussian("both factors must be pure Gaussians")
    n = a.dim
    p = poisson_matrix(form, kind, n, hbar)
    active = [i for i in range(n) if np.any(p[i] != 0)]
    k = len(active)
    if k == 0:
        return multiply(a, b)
    p_act = p[np.ix_(active, active)]
    w = np.linalg.inv(p_act)
    # variables v = (z, u', u''), u', u'' replace the active coordinates.
    m = n + 2 * k
    emb_a = np.zeros((n, m))
    emb_b = np.zeros((n, m))
    emb_a[:, :n] = np.eye(n)
    emb_b[:, :n] = np.eye(n)
    for j, i in enumerate(active):
        emb_a[i, i] = 0.0
        emb_a[i, n + j] = 1.0
        emb_b[i, i] = 0.0
        emb_b[i, n + k + j] = 1.0
    mx = np.zeros((k, m))
    my = np.zeros((k, m))
    for j, i in enumerate(active):
        mx[j, i], mx[j, n + j] = 1.0, -1.0
        my[j, n + k + j], my[j, i] = 1.0, -1.0
    g = -1j * (mx.T @ w @ my + my.T @ w.T @ mx)
    kernel = GaussPoly(Poly.const(m), g, np.zeros(m), 0j)
    joint = multiply(multiply(linear_compose(a, emb_a), linear_compose(b, emb_b)), kernel)
    out = marginal(joint, list(range(n)))
    return out.scale(1.0 / (np.pi**k * np.linalg.det(p_act))).with_real(False)


# ---------------------------------------------------------------------------
# Direct quadrature reference


def star_direct(a: GridFn, b: GridFn, form: ExtendedSymplecticForm | None, points, kind: str = "full", hbar: float | None = None) -> np.ndarray:
    """Slow reference: the kernel double integral as a Riemann sum at given points.

    Only for nondegenerate products (``full`` or ``hbar``). The exponential of
    the bilinear phase factorises over coordinate pairs, so the
    ``N^(2n)``-term sum is evaluated as a tensor-network contraction.
    """
    _same_grid(a, b)
    spec = a.spec
    n = spec.dims
    p = poisson_matrix(form, kind, n, hbar)
    if abs(np.linalg.det(p)) < 1e-14:
        raise DegenerateKernel("direct quadrature needs a nondegenerate product")
    w = np.linalg.inv(p)
    axes = [spec.axis(i) for i in range(n)]
    letters_a = "abcd"[:n]
    letters_b = "efgh"[:n]
    pref = spec.cell_volume**2 / (np.pi**n * np.linalg.det(p))
    out = []
    for z in np.atleast_2d(np.asarray(points, dtype=float)):
        operands: list = [a.values, b.values]
        subs = [letters_a, letters_b]
        wz = w.T @ z  # coefficient of z''_beta in z^T W z''
        zw = w @ z  # coefficient of z'_alpha in z'^T W z
        for i in range(n):
            operands.append(np.exp(2j * wz[i] * axes[i]))
            subs.append(letters_b[i])
            operands.append(np.exp(2j * zw[i] * axes[i]))
            subs.append(letters_a[i])
        for i in range(n):
            for j in range(n):
                if w[i, j] != 0:
                    operands.append(np.exp(-2j * w[i, j] * np.outer(axes[i], axes[j])))
                    subs.append(letters_a[i] + letters_b[j])
        expr = ",".join(subs) + "->"
        out.append(pref * np.einsum(expr, *operands, optimize="greedy"))
    return np.array(out)


# ---------------------------------------------------------------------------
# Positivity functional


@dataclass(frozen=True)
class PositivityResult:
    value: float
    imag_residual: float
    cyclic_residual: float

    def to_dict(self) -> dict:
        return {"value": self.value, "imag_residual": self.imag_residual, "cyclic_residual": self.cyclic_residual}


def positivity_functional(
    g: GridFn,
    f: GridFn,
    form: ExtendedSymplecticForm | None,
    kind: str = "full",
    hbar: float | None = None,
    tol: float = 1e-4,
) -> PositivityResult:
    """``int (conj(g) * g) f``; non-negative for every NCWM ``f``.

    Also checks ``int conj(g) * g = int |g|^2``.

    Raises
    ------
    GridMismatch
    InternalInconsistency
        If the cyclic identity fails by more than ``tol`` (relative).
    """
    _same_grid(g, f)
    gg = star_product(g.conj(), g, form, kind, hbar)
    total = integrate_grid(gg * f)
    lhs = integrate_grid(gg)
    rhs = integrate_grid(g.conj() * g)
    cyc = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    if cyc > tol:
        raise InternalInconsistency(f"cyclic identity violated: relative residual {cyc:.3g}")
    return PositivityResult(float(total.real), float(total.imag), float(cyc))


# ---------------------------------------------------------------------------
# Export


NCWG_MAGIC = b"NCWG"
NCWG_VERSION = 1


def to_csv(f: GridFn, path) -> None:
    """One row per grid point: coordinates, then real and imaginary parts."""
    pts = f.spec.points().reshape(-1, f.spec.dims)
    vals = f.values.reshape(-1)
    names = ["q", "p"] if f.spec.dims == 2 else ["q1", "q2", "p1", "p2"]
    data = np.column_stack([pts, vals.real, vals.imag])
    np.savetxt(path, data, delimiter=",", header=",".join(names + ["re", "im"]), comments="", fmt="%.17g")


def to_binary(f: GridFn) -> bytes:
    """Little-endian ``NCWG`` container: header, then ``(re, im)`` f64 pairs in row-major order."""
    head = NCWG_MAGIC + struct.pack("<II", NCWG_VERSION, f.spec.dims)
    for lo, hi, n in zip(f.spec.lo, f.spec.hi, f.spec.npts):
        head += struct.pack("<ddQ", lo, hi, n)
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return head + body


def from_binary(data: bytes) -> GridFn:
    if data[:4] != NCWG_MAGIC:
        raise GridMismatch("not an NCWG file")
    version, dims = struct.unpack_from("<II", data, 4)
    if version != NCWG_VERSION:
        raise GridMismatch(f"unsupported NCWG version {version}")
    off = 12
    lo, hi, npts = [], [], []
    for _ in range(dims):
        a, b, n = struct.unpack_from("<ddQ", data, off)
        off += 24
        lo.append(a)
        hi.append(b)
        npts.append(n)
    spec = GridSpec(tuple(lo), tuple(hi), tuple(npts))
    vals = np.frombuffer(data, dtype="<c16", offset=off).reshape(spec.shape)
    return GridFn(spec, vals.copy(), "ncwg")


__all__ = [
    "GridSpec",
    "GridFn",
    "STAR_KINDS",
    "sample",
    "constant",
    "integrate_grid",
    "grid_purity",
    "interior",
    "interior_max_diff",
    "default_grid",
    "tail_mass",
    "star_product",
    "bandwidth_ratio",
    "canonical_shear",
    "poisson_matrix",
    "star_closed",
    "gaussian_star_gaussian",
    "star_direct",
    "positivity_functional",
    "PositivityResult",
    "to_csv",
    "to_binary",
    "from_binary",
    "thread_limit",
]
