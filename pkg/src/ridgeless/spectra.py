"""Fourier coefficients of shift-invariant periodic kernels.

A kernel on the torus is ``K(x, x') = g(M * wrap(x - x'))`` where ``wrap``
reduces each coordinate to ``[-pi, pi)``. Its Fourier coefficients are

    G[k] = (2 pi)^-d  integral over [-pi, pi)^d of K(theta) exp(-j <k, theta>)

and the N-hop subsequence of class ``l`` is ``{G[m N + l]}``. Everything the
estimator does on an N-point grid is expressed through sums over these
aliasing classes.

Two storage routes exist:

* separable families (Gaussian, Dirichlet, and Laplace in one dimension) keep
  an exact per-axis coefficient function. Class sums are completed beyond the
  stored window with an asymptotic tail, so they are exact to rounding.
* Laplace for d in {2, 3} and tabulated profiles are tabulated by a tensor
  trapezoid rule on ``2 * cutoff`` nodes per axis. Signed class sums are exact
  (Poisson summation) whenever N divides the node count.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from . import _accel
from .errors import NonConvergenceError, ProfileError

# beyond this the asymptotic tail expansion is used for class completion
_MIN_EXTENDED_CUTOFF = 4096
_MAX_TABLE_ENTRIES = 50_000_000


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    DIRICHLET = "dirichlet"
    TABULATED = "tabulated"


def wrap(theta):
    """Reduce angles to ``[-pi, pi)``."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class KernelSpec:
    """A shift-invariant kernel family at bandwidth ``M`` in dimension ``d``.

    For DIRICHLET the bandwidth is the (integer) order of the Dirichlet kernel
    ``sin((M + 1/2) t) / sin(t / 2)`` rather than an input scaling; in d > 1 the
    kernel is the product over axes. For TABULATED, ``profile_theta`` and
    ``profile_values`` sample the even profile ``g`` on ``[0, tmax]`` and the
    kernel is ``g(M * |theta|)`` (radial in d > 1).
    """

    family: Family
    bandwidth: float
    dimension: int = 1
    profile_theta: tuple = ()
    profile_values: tuple = ()

    def __post_init__(self):
        family = Family(self.family) if not isinstance(self.family, Family) else self.family
        object.__setattr__(self, "family", family)
        M = float(self.bandwidth)
        object.__setattr__(self, "bandwidth", M)
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be an integer >= 1, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))
        if not math.isfinite(M):
            raise ValueError("bandwidth must be finite")
        if family is Family.DIRICHLET:
            if M < 0 or not M.is_integer():
                raise ValueError(f"Dirichlet order must be a non-negative integer, got {M}")
        elif M <= 0:
            raise ValueError(f"bandwidth must be positive, got {M}")
        if family is Family.TABULATED:
            self._check_profile()

    def _check_profile(self):
        t = np.asarray(self.profile_theta, dtype=float)
        v = np.asarray(self.profile_values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 4:
            raise ProfileError("tabulated profile needs at least 4 (theta, value) samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ProfileError("tabulated profile contains non-finite samples")
        if t[0] != 0.0:
            raise ProfileError("tabulated profile must start at theta = 0 (even profile)")
        if np.any(np.diff(t) <= 0):
            raise ProfileError("tabulated theta samples must be strictly increasing")
        reach = self.bandwidth * np.pi * math.sqrt(self.dimension)
        if t[-1] < reach * (1 - 1e-12):
            raise ProfileError(
                f"profile covers t <= {t[-1]:g} but the kernel needs g up to {reach:g}"
            )

    @classmethod
    def tabulated(cls, theta, values, bandwidth=1.0, dimension=1):
        """Build a TABULATED kernel from samples, mirroring negative angles.

        Samples may cover ``[0, a]`` or ``[-a, a]``. In the latter case every
        negative sample must match its mirror image to 1e-9.
        """
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float)
        if theta.shape != values.shape or theta.ndim != 1:
            raise ProfileError("theta and value columns must have equal length")
        order = np.argsort(theta)
        theta, values = theta[order], values[order]
        neg = theta < 0
        if np.any(neg):
            pos_t, pos_v = theta[~neg], values[~neg]
            if pos_t.size < 2 or pos_t[0] != 0.0:
                raise ProfileError("symmetric profile must include theta = 0")
            mirrored = np.interp(-theta[neg], pos_t, pos_v, left=np.nan, right=np.nan)
            gap = np.nanmax(np.abs(mirrored - values[neg])) if np.any(np.isfinite(mirrored)) else 0.0
            if np.any(~np.isfinite(mirrored)) or gap > 1e-9:
                raise ProfileError(
                    f"profile is not symmetric: g(-t) differs from g(t) by {gap:.3g} (> 1e-9)"
                )
            theta, values = pos_t, pos_v
        return cls(Family.TABULATED, bandwidth, dimension, tuple(theta), tuple(values))

    @property
    def order(self):
        return int(self.bandwidth)

    @property
    def separable(self):
        """True when coefficients factor over axes with an exact 1D formula."""
        if self.family in (Family.GAUSSIAN, Family.DIRICHLET):
            return True
        return self.family is Family.LAPLACE and self.dimension == 1

    def base(self):
        """The same family at bandwidth 1."""
        return KernelSpec(self.family, 1.0, self.dimension, self.profile_theta, self.profile_values)

    def with_dimension(self, d):
        return KernelSpec(self.family, self.bandwidth, d, self.profile_theta, self.profile_values)

    def with_bandwidth(self, M):
        return KernelSpec(self.family, M, self.dimension, self.profile_theta, self.profile_values)

    @cached_property
    def _spline(self):
        t = np.asarray(self.profile_theta)
        v = np.asarray(self.profile_values)
        return CubicSpline(np.concatenate([-t[:0:-1], t]), np.concatenate([v[:0:-1], v]))

    def __call__(self, theta):
        """Kernel value at angle differences ``theta`` of shape ``(..., d)``.

        In one dimension a plain array of angles is also accepted. Angles are
        wrapped to ``[-pi, pi)`` first.
        """
        theta = np.asarray(theta, dtype=float)
        if self.dimension == 1 and (theta.ndim == 0 or theta.shape[-1] != 1):
            theta = theta[..., None]
        if theta.shape[-1] != self.dimension:
            raise ValueError(f"expected trailing axis of length {self.dimension}")
        theta = wrap(theta)
        M = self.bandwidth
        if self.family is Family.GAUSSIAN:
            return np.exp(-(M * M) * np.sum(theta * theta, axis=-1))
        if self.family is Family.LAPLACE:
            return np.exp(-M * np.sqrt(np.sum(theta * theta, axis=-1)))
        if self.family is Family.DIRICHLET:
            return np.prod(_dirichlet_profile(theta, self.order), axis=-1)
        return self._spline(M * np.sqrt(np.sum(theta * theta, axis=-1)))


def _dirichlet_profile(theta, order):
    s = np.sin(0.5 * theta)
    small = np.abs(s) < 1e-12
    safe = np.where(small, 1.0, s)
    return np.where(small, 2.0 * order + 1.0, np.sin((order + 0.5) * theta) / safe)


def load_profile(path, bandwidth=1.0, dimension=1):
    """Read a two-column ``theta value`` text file (``#`` comments) into a kernel."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ProfileError(f"{path}: expected two columns 'theta value', got {data.shape[1]}")
    return KernelSpec.tabulated(data[:, 0], data[:, 1], bandwidth, dimension)


# ---------------------------------------------------------------------------
# one-dimensional coefficient formulas


@lru_cache(maxsize=None)
def gaussian_dc(M):
    """G[0] of ``exp(-M^2 t^2)`` on ``[-pi, pi)``, i.e. its mean value."""
    return math.erf(M * math.pi) / (2.0 * math.sqrt(math.pi) * M)


def gaussian_coeffs(M, k):
    """Exact Fourier coefficients of the wrapped Gaussian ``exp(-M^2 t^2)``.

    Completing the square turns the truncated integral into an error function
    of complex argument; writing it through the Faddeeva function keeps the
    expression stable for large ``|k|``:

        G[k] = (e^{-k^2/4M^2} - (-1)^k e^{-M^2 pi^2} Re w(-k/2M + j M pi)) / (2 sqrt(pi) M)

    The second term comes from the kink of the periodized profile at ``pi`` and
    makes some coefficients negative for small ``M``.
    """
    k = np.asarray(k, dtype=float)
    bulk = np.exp(-(k * k) / (4.0 * M * M))
    edge = np.exp(-(M * math.pi) ** 2)
    if edge == 0.0:
        return bulk / (2.0 * math.sqrt(math.pi) * M)
    sign = 1.0 - 2.0 * np.mod(np.abs(k), 2.0)
    w = special.wofz(-k / (2.0 * M) + 1j * M * math.pi).real
    return (bulk - sign * edge * w) / (2.0 * math.sqrt(math.pi) * M)


def laplace_coeffs(M, k):
    """``G[k] = M (1 - (-1)^k e^{-pi M}) / (pi (M^2 + k^2))`` for ``exp(-M|t|)``."""
    k = np.asarray(k, dtype=float)
    sign = 1.0 - 2.0 * np.mod(np.abs(k), 2.0)
    return M * (1.0 - sign * math.exp(-math.pi * M)) / (math.pi * (M * M + k * k))


def dirichlet_coeffs(order, k):
    return (np.abs(np.asarray(k)) <= order).astype(float)


def closed_form_coeff(kernel, k):
    """Closed-form ``G[k]`` for a one-dimensional named family.

    For GAUSSIAN this is the ratio law ``G[0] exp(-k^2 / 4M^2)``. It ignores
    the periodization kink, so it is an approximation; see
    :func:`gaussian_ratio_discrepancy` for its measured error.
    """
    if kernel.dimension != 1:
        raise ValueError("closed forms are one-dimensional; use build_spectrum for d > 1")
    k = int(k)
    M = kernel.bandwidth
    if kernel.family is Family.GAUSSIAN:
        return gaussian_dc(M) * math.exp(-k * k / (4.0 * M * M))
    if kernel.family is Family.LAPLACE:
        return float(laplace_coeffs(M, k))
    if kernel.family is Family.DIRICHLET:
        return 1.0 if abs(k) <= kernel.order else 0.0
    raise ValueError("TABULATED kernels have no closed-form coefficients")


def gaussian_ratio_discrepancy(M, kmax):
    """Largest ``|G[k]/G[0] - exp(-k^2/4M^2)|`` over ``0 <= k <= kmax``."""
    k = np.arange(kmax + 1)
    exact = gaussian_coeffs(M, k)
    return float(np.max(np.abs(exact / exact[0] - np.exp(-(k * k) / (4.0 * M * M)))))


# ---------------------------------------------------------------------------
# quadrature


def _trapezoid_samples(kernel, nodes):
    axis = -np.pi + 2.0 * np.pi * np.arange(nodes) / nodes
    if kernel.dimension == 1:
        return axis, kernel(axis)
    mesh = np.stack(np.meshgrid(*([axis] * kernel.dimension), indexing="ij"), axis=-1)
    return axis, kernel(mesh)


def _trapezoid(kernel, k, nodes):
    axis, values = _trapezoid_samples(kernel, nodes)
    out = values.astype(complex)
    for i, ki in enumerate(k):
        shape = [1] * kernel.dimension
        shape[i] = nodes
        out = out * np.exp(-1j * ki * axis).reshape(shape)
    return float(out.real.sum() / nodes**kernel.dimension)


def quadrature_coeff(kernel, k, nodes_per_axis=None, tol=None):
    """Trapezoid-rule value of ``G[k]`` with ``nodes_per_axis`` nodes per axis.

    With ``tol`` set, the rule is repeated on twice as many nodes and
    :class:`NonConvergenceError` is raised if the two values differ by more
    than ``tol``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=int))
    if k.shape != (kernel.dimension,):
        raise ValueError(f"frequency must have {kernel.dimension} components")
    need = 4 * (int(np.max(np.abs(k))) + 1)
    if nodes_per_axis is None:
        nodes_per_axis = max(need, 1024 if kernel.dimension == 1 else 256)
    if nodes_per_axis < need:
        raise ValueError(f"need at least {need} nodes per axis for frequency {k.tolist()}")
    value = _trapezoid(kernel, k, nodes_per_axis)
    if tol is not None:
        finer = _trapezoid(kernel, k, 2 * nodes_per_axis)
        if abs(finer - value) > tol:
            raise NonConvergenceError(
                f"quadrature changed by {abs(finer - value):.3g} on doubling "
                f"{nodes_per_axis} nodes (tolerance {tol:.3g})"
            )
    return value


# ---------------------------------------------------------------------------
# spectra


def _hurwitz_progression(first, step, s):
    """Sum over t >= 0 of (first + t * step)^-s, elementwise in ``first``."""
    return step ** (-float(s)) * special.zeta(float(s), np.asarray(first, dtype=float) / step)


class _AxisSeries:
    """Exact 1D coefficients plus an asymptotic expansion of the far tail.

    For an even profile f(t) = g(M t) that is smooth on (0, pi], repeated
    integration by parts gives, for large k,

        G[k] ~ (1/pi) sum_j (-1)^(j+1) ((-1)^k f^(2j-1)(pi) - f^(2j-1)(0+)) / k^(2j)

    The expansion coefficients depend on k only through its parity.
    """

    def __init__(self, family, M, cutoff):
        self.family = family
        self.M = M
        self.extended = max(int(cutoff), _MIN_EXTENDED_CUTOFF, int(math.ceil(20 * M)))
        self._class_cache = {}

    def coeffs(self, k):
        if self.family is Family.GAUSSIAN:
            return gaussian_coeffs(self.M, k)
        if self.family is Family.LAPLACE:
            return laplace_coeffs(self.M, k)
        return dirichlet_coeffs(int(self.M), k)

    @cached_property
    def expansion(self):
        """Array ``A[j, parity]`` of the k^-(2j+2) tail coefficients, j = 0, 1, 2."""
        A = np.zeros((3, 2))
        M = self.M
        if self.family is Family.DIRICHLET:
            return A
        for j in range(3):
            n = 2 * j + 1
            if self.family is Family.LAPLACE:
                at_pi = (-M) ** n * math.exp(-M * math.pi)
                at_0 = (-M) ** n
            else:
                at_pi = (-M) ** n * special.eval_hermite(n, M * math.pi) * math.exp(-(M * math.pi) ** 2)
                at_0 = 0.0
            for parity in (0, 1):
                A[j, parity] = (-1) ** j * ((-1) ** parity * at_pi - at_0) / math.pi
        return A

    @cached_property
    def extended_coeffs(self):
        K = self.extended
        return self.coeffs(np.arange(-K, K + 1))

    def class_sums(self, N):
        """Complete (signed, l1, l2sq, error) class sums over all of Z."""
        if N in self._class_cache:
            return self._class_cache[N]
        K = self.extended
        signed, l1, l2sq = _accel.fold_axis(self.extended_coeffs, -K, N)
        A = self.expansion
        err = np.zeros(N)
        if np.any(A):
            P = N if N % 2 == 0 else 2 * N
            r = np.arange(P)
            first = r + P * np.ceil((K + 1 - r) / P)
            Z = {s: _hurwitz_progression(first, P, s) for s in (2, 4, 6, 8)}
            a = A[:, r % 2]
            tail = a[0] * Z[2] + a[1] * Z[4] + a[2] * Z[6]
            tail_sq = a[0] ** 2 * Z[4] + 2 * a[0] * a[1] * Z[6] + (a[1] ** 2 + 2 * a[0] * a[2]) * Z[8]
            tail_err = np.abs(a[2]) * Z[6]
            pos = np.bincount(r % N, tail, minlength=N)
            pos_abs = np.bincount(r % N, np.abs(tail), minlength=N)
            pos_sq = np.bincount(r % N, tail_sq, minlength=N)
            pos_err = np.bincount(r % N, tail_err, minlength=N)
            mirror = np.mod(-np.arange(N), N)
            signed = signed + pos + pos[mirror]
            l1 = l1 + pos_abs + pos_abs[mirror]
            l2sq = l2sq + pos_sq + pos_sq[mirror]
            err = pos_err + pos_err[mirror]
        out = (signed, l1, l2sq, err)
        self._class_cache[N] = out
        return out


@dataclass(frozen=True)
class HopStats:
    """Window statistics of one N-hop subsequence ``{G[m N + l]}``."""

    N: int
    ell: tuple
    l1: float
    l2sq: float
    signed_sum: float
    l1_upper: float
    delta: float


@dataclass(frozen=True)
class ClassStats:
    """Class sums for all ``N^d`` aliasing classes, completed over all of Z^d.

    ``signed`` gives the kernel-matrix eigenvalues as ``N^d * signed``;
    ``exact`` tells whether the completion is exact to rounding.
    """

    N: int
    d: int
    signed: np.ndarray
    l1: np.ndarray
    l2sq: np.ndarray
    error: float
    exact: bool


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients ``G[k]`` for ``|k|_inf <= cutoff``.

    ``coeffs`` is indexed by ``k + cutoff`` along every axis.
    ``truncation_bound`` bounds ``sum |G[k]|`` outside the window (``inf``
    when no analytic tail is available).
    """

    kernel: KernelSpec
    cutoff: int
    coeffs: np.ndarray
    truncation_bound: float
    nodes: int | None = None
    _series: _AxisSeries | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dimension(self):
        return self.kernel.dimension

    @property
    def window_sum(self):
        return float(np.sum(np.abs(self.coeffs)))

    @property
    def has_tail_bound(self):
        return math.isfinite(self.truncation_bound)

    def min_coeff(self):
        return float(np.min(self.coeffs))

    def coeffs_at(self, ks):
        """Coefficients at integer frequencies ``ks`` of shape ``(m, d)``.

        Separable spectra are evaluated exactly anywhere; tabulated spectra
        only inside the window.
        """
        ks = np.asarray(ks, dtype=int).reshape(-1, self.dimension)
        if self._series is not None:
            out = np.ones(len(ks))
            for i in range(self.dimension):
                out = out * self._series.coeffs(ks[:, i])
            return out
        if np.any(np.abs(ks) > self.cutoff):
            raise ValueError(f"frequency outside the stored window |k| <= {self.cutoff}")
        return self.coeffs[tuple((ks + self.cutoff).T)]

    def coeff(self, k):
        return float(self.coeffs_at(np.atleast_1d(k))[0])

    def window_classes(self, N):
        """Flat class index (``k mod N`` raveled over ``[N]^d``) for every window entry."""
        axis = np.mod(np.arange(-self.cutoff, self.cutoff + 1), N)
        idx = np.zeros((1,) * self.dimension, dtype=np.intp)
        for i in range(self.dimension):
            shape = [1] * self.dimension
            shape[i] = axis.size
            idx = idx * N + axis.reshape(shape)
        return np.broadcast_to(idx, self.coeffs.shape)

    def window_class_sums(self, N):
        """(signed, l1, l2sq) over stored aliases, each shaped ``(N,)*d``."""
        key = ("window", N)
        if key not in self._cache:
            shape = (N,) * self.dimension
            if self.dimension == 1:
                sums = _accel.fold_axis(self.coeffs, -self.cutoff, N)
            else:
                sums = _accel.fold_classes(
                    self.coeffs.ravel(), np.ascontiguousarray(self.window_classes(N).ravel()), N**self.dimension
                )
            self._cache[key] = tuple(s.reshape(shape) for s in sums)
        return self._cache[key]

    def class_stats(self, N):
        """Completed class sums; see :class:`ClassStats`."""
        key = ("complete", N)
        if key in self._cache:
            return self._cache[key]
        d = self.dimension
        if self._series is not None:
            signed1, l11, l2sq1, err1 = self._series.class_sums(N)
            signed, l1, l2sq = signed1, l11, l2sq1
            for _ in range(d - 1):
                signed = np.multiply.outer(signed, signed1)
                l1 = np.multiply.outer(l1, l11)
                l2sq = np.multiply.outer(l2sq, l2sq1)
            total1 = float(np.sum(l11))
            error = d * total1 ** (d - 1) * float(np.sum(err1))
            stats = ClassStats(N, d, signed, l1, l2sq, error, True)
        else:
            signed, l1, l2sq = self.window_class_sums(N)
            exact = self.nodes is not None and self.nodes % N == 0
            error = 0.0 if exact else self.truncation_bound
            stats = ClassStats(N, d, signed, l1, l2sq, error, exact)
        self._cache[key] = stats
        return stats


def hop_stats(spectrum, N, ell):
    """Window statistics of class ``ell`` (an int in 1D or a length-d index)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if spectrum.cutoff < N:
        raise ValueError(f"spectrum cutoff {spectrum.cutoff} is below N = {N}")
    ell = tuple(int(x) % N for x in np.atleast_1d(ell))
    if len(ell) != spectrum.dimension:
        raise ValueError(f"class index needs {spectrum.dimension} components")
    signed, l1, l2sq = spectrum.window_class_sums(N)
    base = np.array(ell)
    base = np.where(base > N // 2, base - N, base)  # representative nearest zero
    l1 = float(l1[ell])
    return HopStats(N, ell, l1, float(l2sq[ell]), float(signed[ell]),
                    l1 + spectrum.truncation_bound, l1 - abs(spectrum.coeff(tuple(base))))


# quadrature tables carry an additive aliasing error; it decays roughly like nodes^-2
_QUAD_MIN_CUTOFF = {2: 128, 3: 32}


def default_cutoff(kernel, N=1):
    """Window half-width ``max(8 ceil(M), 4N)``.

    Quadrature routes use a wider minimum window (128 in 2D, 32 in 3D) and
    round up to a multiple of N so that class sums stay exact.
    """
    c = max(8 * math.ceil(max(kernel.bandwidth, 1.0)), 4 * N)
    if not kernel.separable:
        c = max(c, _QUAD_MIN_CUTOFF.get(kernel.dimension, 0))
        c = N * math.ceil(c / N)
    return int(c)


def build_spectrum(kernel, cutoff=None, N=1):
    """Tabulate ``G[k]`` for ``|k|_inf <= cutoff`` (default :func:`default_cutoff`)."""
    if cutoff is None:
        cutoff = default_cutoff(kernel, N)
    cutoff = int(cutoff)
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    d = kernel.dimension
    if (2 * cutoff + 1) ** d > _MAX_TABLE_ENTRIES:
        raise ValueError(f"window of {(2 * cutoff + 1) ** d} coefficients is too large")
    if kernel.separable:
        series = _AxisSeries(kernel.family, kernel.bandwidth, cutoff)
        axis = series.coeffs(np.arange(-cutoff, cutoff + 1))
        table = axis
        for _ in range(d - 1):
            table = np.multiply.outer(table, axis)
        complete = float(np.sum(series.class_sums(1)[1]))
        window = float(np.sum(np.abs(axis)))
        bound = max(complete**d - window**d, 0.0)
        if kernel.family is Family.DIRICHLET and cutoff >= kernel.order:
            bound = 0.0
        table = np.ascontiguousarray(table)
        table.setflags(write=False)
        return Spectrum(kernel, cutoff, table, bound, None, series)
    if kernel.family is Family.LAPLACE and d > 3:
        raise ValueError("Laplace spectra are only supported for d <= 3")
    nodes = 2 * cutoff
    table = _fft_table(kernel, nodes)
    if kernel.family is Family.LAPLACE:
        bound = _laplace_tail_estimate(kernel.bandwidth, d, cutoff)
    else:
        bound = math.inf
    table.setflags(write=False)
    return Spectrum(kernel, cutoff, table, bound, nodes, None)


def _fft_table(kernel, nodes):
    """Trapezoid coefficients on ``nodes`` points per axis, arranged over
    ``-nodes/2 .. nodes/2`` with the Nyquist entries split in half."""
    d = kernel.dimension
    axis = 2.0 * np.pi * np.arange(nodes) / nodes
    if d == 1:
        samples = kernel(axis)
    else:
        samples = kernel(np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1))
    coeffs = np.fft.fftn(samples).real / nodes**d
    half = nodes // 2
    idx = np.mod(np.arange(-half, half + 1), nodes)
    table = coeffs[np.ix_(*([idx] * d))].copy()
    for i in range(d):
        edge = [slice(None)] * d
        for j in (0, -1):
            edge[i] = j
            table[tuple(edge)] *= 0.5
    return np.ascontiguousarray(table)


def _laplace_tail_estimate(M, d, cutoff):
    """Asymptotic bound on ``sum |G[k]|`` for ``|k|_inf > cutoff``.

    Uses the continuous transform ``G[k] ~ c_d M / (M^2 + |k|^2)^((d+1)/2)`` and
    a radial integral, with a safety factor of 2.
    """
    c = 2**d * math.pi ** ((d - 1) / 2) * math.gamma((d + 1) / 2) / (2 * math.pi) ** d
    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return 2.0 * sphere * c * M / cutoff
