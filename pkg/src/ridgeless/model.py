"""Uniform grids on the torus, kernel matrices and their DFT eigenstructure.

Grid points are ``x_p = 2 pi p / N - pi`` for ``p`` in ``[N]^d`` (0-based).
Frequencies congruent mod N coincide on the grid up to a sign: with ``l`` the
class representative in ``[N]^d`` and ``k = l + m N``,

    phi_k(x_p) = rho(k) phi_l(x_p),   rho(k) = (-1)^(sum m)  for odd N, 1 for even N

because of the ``-pi`` offset. Class sums of the target carry this sign.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from . import _accel
from ._pycore import DIRICHLET, GAUSSIAN, LAPLACE
from .errors import DegenerateClassError, SingularKernelError
from .spectra import Family, KernelSpec, Spectrum

DENSE_LIMIT = 4096
SINGULAR_RTOL = 1e-12
_FAMILY_CODES = {Family.GAUSSIAN: GAUSSIAN, Family.LAPLACE: LAPLACE, Family.DIRICHLET: DIRICHLET}


@dataclass(frozen=True)
class Grid:
    N: int
    d: int = 1

    def __post_init__(self):
        if self.N < 1 or self.d < 1:
            raise ValueError("grid needs N >= 1 and d >= 1")

    @property
    def n(self):
        return self.N**self.d

    @property
    def shape(self):
        return (self.N,) * self.d

    def indices(self):
        """Integer multi-indices ``p`` of shape ``(n, d)`` in C order."""
        return np.ascontiguousarray(np.indices(self.shape).reshape(self.d, -1).T)

    def points(self):
        return 2.0 * np.pi * self.indices() / self.N - np.pi


@dataclass(frozen=True)
class TargetSpec:
    """Sparse Fourier coefficients ``V[k]`` of a target function.

    ``tail_bound`` bounds ``sum |V[k]|`` over frequencies not listed; it must
    be finite, and is zero for finitely supported targets.
    """

    coeffs: MappingProxyType
    dimension: int = 1
    real_valued: bool = True
    tail_bound: float = 0.0
    name: str = "target"

    def __init__(self, coeffs, dimension=1, real_valued=True, tail_bound=0.0, name="target"):
        clean = {}
        for k, v in dict(coeffs).items():
            key = tuple(int(x) for x in np.atleast_1d(k))
            if len(key) != dimension:
                raise ValueError(f"frequency {k} does not have {dimension} components")
            v = complex(v)
            if v != 0:
                clean[key] = clean.get(key, 0) + v
        if not np.isfinite(tail_bound) or tail_bound < 0:
            raise ValueError("targets with infinite support need a finite non-negative tail bound")
        if real_valued:
            for k, v in clean.items():
                mirror = clean.get(tuple(-x for x in k), 0)
                if abs(mirror - v.conjugate()) > 1e-12 * max(1.0, abs(v)):
                    raise ValueError(f"real target needs V[-k] = conj(V[k]); fails at k = {k}")
        object.__setattr__(self, "coeffs", MappingProxyType(clean))
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "real_valued", bool(real_valued))
        object.__setattr__(self, "tail_bound", float(tail_bound))
        object.__setattr__(self, "name", name)

    @classmethod
    def zero(cls, dimension=1):
        return cls({}, dimension, name="zero")

    def frequencies(self):
        if not self.coeffs:
            return np.zeros((0, self.dimension), dtype=int)
        return np.array(list(self.coeffs.keys()), dtype=int)

    def values(self):
        return np.array(list(self.coeffs.values()), dtype=complex)

    def norm_sq(self):
        return float(np.sum(np.abs(self.values()) ** 2))

    def scaled(self, c):
        return TargetSpec({k: c * v for k, v in self.coeffs.items()}, self.dimension,
                          self.real_valued, abs(c) * self.tail_bound, self.name)


def class_index(ks, N):
    """Flat class index of integer frequencies ``ks`` (shape ``(m, d)``)."""
    ks = np.asarray(ks, dtype=int)
    r = np.mod(ks, N)
    out = np.zeros(len(ks), dtype=np.intp)
    for i in range(ks.shape[1]):
        out = out * N + r[:, i]
    return out


def alias_sign(ks, N):
    """``rho(k)``: the sign relating ``phi_k`` to its class representative on the grid."""
    ks = np.asarray(ks, dtype=int)
    if N % 2 == 0:
        return np.ones(len(ks))
    m = np.floor_divide(ks, N).sum(axis=1)
    return 1.0 - 2.0 * np.mod(m, 2)


def _class_indices(N, d):
    return np.indices((N,) * d).reshape(d, -1).T


def kernel_matrix(kernel: KernelSpec, grid: Grid, dense_limit=DENSE_LIMIT, check=True):
    """Dense ``K[p, q] = g(M wrap(x_p - x_q))``.

    With ``check`` set, a class eigenvalue below ``1e-12`` of the largest (in
    magnitude) raises :class:`SingularKernelError`.
    """
    if grid.d != kernel.dimension:
        raise ValueError("grid and kernel dimensions differ")
    if grid.n > dense_limit:
        raise ValueError(f"n = {grid.n} exceeds the dense limit {dense_limit}")
    pts = grid.points()
    code = _FAMILY_CODES.get(kernel.family)
    if code is not None:
        K = _accel.kernel_matrix(code, kernel.bandwidth, pts)
    else:
        K = kernel(pts[:, None, :] - pts[None, :, :])
    if check:
        # block-circulant: eigenvalues are the DFT of the first row
        lam = np.fft.fftn(K[0].reshape(grid.shape)).real
        scale = np.max(np.abs(lam))
        bad = np.flatnonzero(np.abs(lam) <= SINGULAR_RTOL * scale)
        if bad.size:
            raise SingularKernelError(
                f"kernel matrix is singular: {bad.size} class eigenvalue(s) vanish", bad.tolist()
            )
    return K


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Eigenpairs of the kernel matrix, indexed by class ``l`` in ``[N]^d``.

    ``eigenvalues[l] = N^d * sum_m G[m N + l]``. For positive definite kernels
    this equals ``N^d ||G_l||_1``; with a sign-changing spectrum the signed sum
    is the correct eigenvalue.
    """

    N: int
    d: int
    eigenvalues: np.ndarray
    l1: np.ndarray
    l2sq: np.ndarray
    error: float

    def vector(self, ell):
        """Unit DFT vector ``u_l[p] = N^(-d/2) exp(-2 pi j <l, p> / N)``."""
        ell = np.atleast_1d(np.asarray(ell, dtype=int))
        p = Grid(self.N, self.d).indices()
        return np.exp(-2j * np.pi * (p @ ell) / self.N) / np.sqrt(float(self.N) ** self.d)

    def matrix(self):
        """All vectors as columns, ordered like ``eigenvalues.ravel()``."""
        p = Grid(self.N, self.d).indices()
        return np.exp(-2j * np.pi * (p @ p.T) / self.N) / np.sqrt(float(self.N) ** self.d)

    def degenerate(self, rtol=SINGULAR_RTOL):
        """Flat indices of classes whose eigenvalue vanishes relative to the largest."""
        lam = np.abs(self.eigenvalues.ravel())
        return np.flatnonzero(lam <= rtol * np.max(lam))


def eigenstructure(spectrum: Spectrum, N: int) -> EigenStructure:
    if spectrum.cutoff < N:
        raise ValueError(f"spectrum cutoff {spectrum.cutoff} is below N = {N}")
    cs = spectrum.class_stats(N)
    n = float(N) ** spectrum.dimension
    return EigenStructure(N, spectrum.dimension, n * cs.signed, cs.l1, cs.l2sq, n * cs.error)


def _window_members(spectrum, N, ell):
    ell = np.atleast_1d(np.asarray(ell, dtype=int)) % N
    d = spectrum.dimension
    axes = [np.arange(-spectrum.cutoff, spectrum.cutoff + 1)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.all(np.mod(ks, N) == ell, axis=1)
    return ks[keep]


def empirical_eigenfunction(spectrum: Spectrum, N: int, ell):
    """Fourier coefficients of the empirical eigenfunction of class ``ell``.

    Returns ``{k: rho(k) G[k] / sqrt(||G_l||_1)}`` over the stored window
    (``rho`` is 1 for even N). Zero coefficients are dropped.
    """
    ell = np.atleast_1d(np.asarray(ell, dtype=int)) % N
    cs = spectrum.class_stats(N)
    l1 = float(cs.l1[tuple(ell)])
    if l1 <= 0:
        raise DegenerateClassError(f"class {tuple(ell.tolist())} has ||G_l||_1 = 0", [tuple(ell.tolist())])
    ks = _window_members(spectrum, N, ell)
    G = spectrum.coeffs_at(ks) * alias_sign(ks, N)
    nz = G != 0
    return {tuple(k): float(g) / np.sqrt(l1) for k, g in zip(ks[nz].tolist(), G[nz])}


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Projection of a target onto the span of the kernel sections at the grid.

    Per-class arrays (shape ``(N,)*d``):

    * ``v2``: ``||V_l||^2``
    * ``gv``: ``sum rho G V`` over the class
    * ``sv``: signed alias sum ``sum rho V``
    * ``weights``: ``gv / ||G_l||^2`` (0 on classes where ``G`` vanishes)
    """

    N: int
    spectrum: Spectrum
    target: TargetSpec
    v2: np.ndarray
    gv: np.ndarray
    sv: np.ndarray
    l2sq: np.ndarray
    weights: np.ndarray
    touched: np.ndarray = field(repr=False)

    @property
    def projection_norm_sq(self):
        return float(np.sum(np.abs(self.weights) ** 2 * self.l2sq))

    @property
    def residual_by_class(self):
        return np.maximum(self.v2 - np.abs(self.weights) ** 2 * self.l2sq, 0.0)

    @property
    def residual_norm_sq(self):
        return float(np.sum(self.residual_by_class))

    def projection_coeffs(self, ks):
        ks = np.asarray(ks, dtype=int).reshape(-1, self.spectrum.dimension)
        w = self.weights.ravel()[class_index(ks, self.N)]
        return w * alias_sign(ks, self.N) * self.spectrum.coeffs_at(ks)

    def residual_coeffs(self, ks):
        """``V[k] - w_l rho(k) G[k]`` at frequencies ``ks``."""
        ks = np.asarray(ks, dtype=int).reshape(-1, self.spectrum.dimension)
        V = np.array([self.target.coeffs.get(tuple(k), 0) for k in ks.tolist()], dtype=complex)
        return V - self.projection_coeffs(ks)


def _bincount_complex(idx, values, size):
    return np.bincount(idx, values.real, minlength=size) + 1j * np.bincount(idx, values.imag, minlength=size)


def project_target(spectrum: Spectrum, N: int, target: TargetSpec, strict=False) -> ProjectionResult:
    """Project ``target`` onto the span of ``K(., x_p)``.

    Classes where ``||G_l||^2`` vanishes contribute nothing to the projection.
    With ``strict`` set, such a class carrying target mass raises
    :class:`DegenerateClassError`; otherwise the mass is left in the residual.
    """
    d = spectrum.dimension
    if target.dimension != d:
        raise ValueError("target and kernel dimensions differ")
    size = N**d
    cs = spectrum.class_stats(N)
    l2sq = cs.l2sq
    ks = target.frequencies()
    V = target.values()
    if len(ks):
        idx = class_index(ks, N)
        rho = alias_sign(ks, N)
        G = spectrum.coeffs_at(ks)
        v2 = np.bincount(idx, np.abs(V) ** 2, minlength=size)
        gv = _bincount_complex(idx, rho * G * V, size)
        sv = _bincount_complex(idx, rho * V, size)
        touched = np.bincount(idx, minlength=size) > 0
    else:
        v2 = np.zeros(size)
        gv = np.zeros(size, dtype=complex)
        sv = np.zeros(size, dtype=complex)
        touched = np.zeros(size, dtype=bool)
    flat_l2 = l2sq.ravel()
    live = flat_l2 > SINGULAR_RTOL**2 * np.max(flat_l2)
    if strict:
        bad = np.flatnonzero(touched & ~live & (v2 > 0))
        if bad.size:
            raise DegenerateClassError(
                f"target has mass on {bad.size} class(es) where the kernel spectrum vanishes",
                bad.tolist(),
            )
    weights = np.zeros(size, dtype=complex)
    weights[live] = gv[live] / flat_l2[live]
    shape = (N,) * d
    return ProjectionResult(N, spectrum, target, v2.reshape(shape), gv.reshape(shape),
                            sv.reshape(shape), l2sq, weights.reshape(shape), touched.reshape(shape))


def evaluate_on_grid(target: TargetSpec, grid: Grid):
    """Values ``f(x_p)`` in C order, via aliased class sums and an inverse DFT.

    ``f(x_p) = sum_l (-1)^(sum l) S_l exp(2 pi j <l, p> / N)`` where ``S_l``
    is the signed alias sum of class ``l``.
    """
    if target.dimension != grid.d:
        raise ValueError("target and grid dimensions differ")
    N, d = grid.N, grid.d
    ks = target.frequencies()
    folded = np.zeros(grid.n, dtype=complex)
    if len(ks):
        phase = 1.0 - 2.0 * np.mod(ks.sum(axis=1), 2)  # exp(-j pi sum k)
        folded = _bincount_complex(class_index(ks, N), phase * target.values(), grid.n)
    vals = (np.fft.ifftn(folded.reshape(grid.shape)) * grid.n).ravel()
    if target.real_valued:
        scale = max(1.0, float(np.max(np.abs(vals), initial=0.0)))
        if np.max(np.abs(vals.imag), initial=0.0) > 1e-10 * scale:
            raise ValueError("real target produced complex grid values")
        return vals.real.copy()
    return vals


def evaluate_direct(target: TargetSpec, x):
    """Pointwise ``f(x) = sum V[k] exp(j <k, x>)`` at points ``x`` of shape ``(m, d)``."""
    x = np.asarray(x, dtype=float).reshape(-1, target.dimension)
    ks = target.frequencies()
    if not len(ks):
        return np.zeros(len(x))
    vals = np.exp(1j * x @ ks.T.astype(float)) @ target.values()
    return vals.real if target.real_valued else vals


# ---------------------------------------------------------------------------
# fixed target battery

_BATTERY_1D = {
    "zero": {},
    "cos1": {1: 0.5, -1: 0.5},
    "alias": {1: 0.5, -1: 0.5, 9: 0.5, -9: 0.5},
    "sinmix": {2: -0.5j, -2: 0.5j, 3: 0.25, -3: 0.25},
    "alt": {k: (-1) ** abs(k) / (1.0 + k * k) for k in range(-6, 7)},
    "highfreq": {0: 0.3, 5: 0.5, -5: 0.5, 13: -0.2, -13: -0.2},
}
_SECOND_AXIS = {0: 1.0, 2: 0.25, -2: 0.25}

BATTERY_IDS = tuple(_BATTERY_1D)


def battery_target(name, d=1):
    """One of the six fixed test targets. In d > 1 the 1D pattern on the first
    axis is multiplied by ``1 + cos(2 x)/2`` on the second axis."""
    if name not in _BATTERY_1D:
        raise KeyError(f"unknown target {name!r}; choose from {', '.join(BATTERY_IDS)}")
    base = _BATTERY_1D[name]
    if d == 1:
        return TargetSpec({(k,): v for k, v in base.items()}, 1, name=name)
    coeffs = {}
    for k1, v1 in base.items():
        for k2, v2 in _SECOND_AXIS.items():
            coeffs[(k1, k2) + (0,) * (d - 2)] = v1 * v2
    return TargetSpec(coeffs, d, name=name)


def target_battery(d=1):
    return [battery_target(name, d) for name in BATTERY_IDS]
