"""Brute-force checks for the closed-form MSE.

Interpolants are solved explicitly (dense factorization or FFT diagonalization)
and their error against the target is measured in the Fourier domain through
Parseval. Nothing here uses the per-class MSE formulas.

An interpolant ``f = sum_q alpha_q K(., x_q)`` has Fourier coefficients

    B[k] = G[k] (-1)^(sum k) A[k mod N],   A = fftn(alpha)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DegenerateClassError, SolverError
from .model import DENSE_LIMIT, Grid, TargetSpec, class_index, evaluate_on_grid, kernel_matrix
from .spectra import KernelSpec, Spectrum, build_spectrum

RESIDUAL_RTOL = 1e-8
MC_BLOCK = 1000


@dataclass(frozen=True, eq=False)
class InterpolantCoeffs:
    alpha: np.ndarray
    grid: Grid
    spectrum: Spectrum
    residual: float = 0.0

    @property
    def kernel(self) -> KernelSpec:
        return self.spectrum.kernel

    def dft(self):
        return np.fft.fftn(self.alpha.reshape(self.grid.shape))

    def fourier(self, ks):
        """``B[k]`` at integer frequencies ``ks`` of shape ``(m, d)``."""
        ks = np.asarray(ks, dtype=int).reshape(-1, self.grid.d)
        A = self.dft().ravel()[class_index(ks, self.grid.N)]
        sign = 1.0 - 2.0 * np.mod(ks.sum(axis=1), 2)
        return self.spectrum.coeffs_at(ks) * sign * A


def _factor(K):
    """Cholesky when ``K`` is positive definite; LU otherwise (some wrapped
    Gaussians have slightly negative eigenvalues)."""
    try:
        return "cho", linalg.cho_factor(K, check_finite=False)
    except linalg.LinAlgError:
        return "lu", linalg.lu_factor(K, check_finite=False)


def _solve_factored(fac, rhs):
    kind, f = fac
    if kind == "cho":
        return linalg.cho_solve(f, rhs, check_finite=False)
    return linalg.lu_solve(f, rhs, check_finite=False)


def solve_dense(kernel: KernelSpec, grid: Grid, y, spectrum=None, dense_limit=DENSE_LIMIT):
    """``alpha = K^{-1} y`` from the dense kernel matrix, with a residual check."""
    y = np.asarray(y)
    K = kernel_matrix(kernel, grid, dense_limit)
    alpha = _solve_factored(_factor(K), y)
    res = float(np.max(np.abs(K @ alpha - y), initial=0.0))
    scale = np.max(np.abs(K)) * np.max(np.abs(alpha), initial=0.0) + np.max(np.abs(y), initial=0.0)
    if res > RESIDUAL_RTOL * max(scale, 1e-300):
        raise SolverError(f"dense solve residual {res:.3g} exceeds tolerance")
    if spectrum is None:
        spectrum = build_spectrum(kernel, N=grid.N)
    return InterpolantCoeffs(alpha, grid, spectrum, res)


def class_eigenvalues(spectrum: Spectrum, N: int):
    cs = spectrum.class_stats(N)
    lam = float(N) ** spectrum.dimension * cs.signed
    dead = np.abs(lam) <= 1e-12 * np.max(np.abs(lam))
    if np.any(dead):
        bad = np.flatnonzero(dead.ravel())
        raise DegenerateClassError(f"{bad.size} class eigenvalue(s) vanish", bad.tolist())
    return lam


def solve_fft(spectrum: Spectrum, N: int, d: int, y):
    """``alpha = K^{-1} y`` by diagonalizing the block-circulant kernel matrix."""
    grid = Grid(N, d)
    y = np.asarray(y)
    lam = class_eigenvalues(spectrum, N)
    alpha = np.fft.ifftn(np.fft.fftn(y.reshape(grid.shape)) / lam)
    if not np.iscomplexobj(y):
        alpha = alpha.real
    return InterpolantCoeffs(alpha.ravel(), grid, spectrum)


@dataclass(frozen=True, eq=False)
class NoiselessMse:
    """``value`` includes ``tail``, the part contributed by frequencies beyond
    the probe window. ``by_class`` splits ``value`` over aliasing classes."""

    value: float
    tail: float
    by_class: np.ndarray


def _window(P, d):
    axes = [np.arange(-P, P + 1)] * d
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


def mse_noiseless(coeffs: InterpolantCoeffs, target: TargetSpec, probe_cutoff=None) -> NoiselessMse:
    """``||f_hat - f*||^2`` by Parseval.

    Frequencies with ``|k|_inf <= probe_cutoff`` are summed explicitly. Beyond
    it only ``|B[k]|^2`` is needed, which per class is ``|A_l|^2`` times the
    alias energy outside the window.
    """
    spec = coeffs.spectrum
    N, d = coeffs.grid.N, coeffs.grid.d
    n = N**d
    P = spec.cutoff if probe_cutoff is None else int(probe_cutoff)
    ks = _window(P, d)
    cls = class_index(ks, N)
    B = coeffs.fourier(ks)
    V = np.zeros(len(ks), dtype=complex)
    tks = target.frequencies()
    tv = target.values()
    inside = np.all(np.abs(tks) <= P, axis=1) if len(tks) else np.zeros(0, dtype=bool)
    if np.any(inside):
        flat = np.ravel_multi_index(tuple((tks[inside] + P).T), (2 * P + 1,) * d)
        V[flat] = tv[inside]
    per = np.bincount(cls, np.abs(B - V) ** 2, minlength=n)

    # exact correction for target frequencies beyond the window
    outside = ~inside
    if np.any(outside):
        Bo = coeffs.fourier(tks[outside])
        per += np.bincount(class_index(tks[outside], N), np.abs(Bo - tv[outside]) ** 2 - np.abs(Bo) ** 2,
                           minlength=n)

    G = spec.coeffs_at(ks)
    win_l2 = np.bincount(cls, G * G, minlength=n)
    full_l2 = spec.class_stats(N).l2sq.ravel()
    tail = np.abs(coeffs.dft().ravel()) ** 2 * np.maximum(full_l2 - win_l2, 0.0)
    per += tail
    return NoiselessMse(math.fsum(per), math.fsum(tail), per.reshape(coeffs.grid.shape))


def _dft_matrix(grid):
    p = grid.indices()
    return np.exp(-2j * np.pi * (p @ p.T) / grid.N) / np.sqrt(float(grid.n))


def noisy_error_by_class(spectrum: Spectrum, N: int, d: int, sigma2: float, dense_limit=DENSE_LIMIT):
    """``sigma^2 N^d ||G_i||^2 ||K^{-1} u_i||^2`` per class, from dense solves."""
    grid = Grid(N, d)
    if sigma2 == 0:
        return np.zeros(grid.shape)
    K = kernel_matrix(spectrum.kernel, grid, dense_limit)
    X = _solve_factored(_factor(K), _dft_matrix(grid))
    quad = np.sum(np.abs(X) ** 2, axis=0)
    l2sq = spectrum.class_stats(N).l2sq.ravel()
    return (sigma2 * grid.n * l2sq * quad).reshape(grid.shape)


def noisy_error_deterministic(spectrum: Spectrum, N: int, d: int, sigma2: float, dense_limit=DENSE_LIMIT):
    return math.fsum(noisy_error_by_class(spectrum, N, d, sigma2, dense_limit).ravel())


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    trials: int


def _noise(rng, shape, sigma2, kind):
    if kind == "gaussian":
        return rng.normal(0.0, math.sqrt(sigma2), size=shape)
    if kind == "rademacher":
        return math.sqrt(sigma2) * rng.choice([-1.0, 1.0], size=shape)
    raise ValueError(f"unknown noise {kind!r}")


def mse_monte_carlo(spectrum: Spectrum, N: int, d: int, target: TargetSpec, sigma2: float,
                    trials: int, seed: int, noise="gaussian", dense_limit=DENSE_LIMIT):
    """Average ``||f_hat - f*||^2`` over noisy label draws.

    Trials run in blocks of 1000, block ``b`` drawing from
    ``default_rng([seed, b])``. Solves are dense when ``N^d`` is within the
    dense limit, FFT otherwise. Each trial's error is evaluated exactly over all
    frequencies:

        ||f_hat - f*||^2 = sum_l |A_l|^2 ||G_l||^2 - 2 Re sum_l conj(A_l) c_l + ||V||^2
    """
    if trials < 100:
        raise ValueError("Monte Carlo needs at least 100 trials")
    grid = Grid(N, d)
    f_grid = evaluate_on_grid(target, grid)
    l2sq = spectrum.class_stats(N).l2sq.ravel()
    ks = target.frequencies()
    c = np.zeros(grid.n, dtype=complex)
    if len(ks):
        sign = 1.0 - 2.0 * np.mod(ks.sum(axis=1), 2)
        w = spectrum.coeffs_at(ks) * sign * target.values()
        idx = class_index(ks, N)
        c = np.bincount(idx, w.real, minlength=grid.n) + 1j * np.bincount(idx, w.imag, minlength=grid.n)
    v2 = target.norm_sq()

    if grid.n <= dense_limit:
        fac = _factor(kernel_matrix(spectrum.kernel, grid, dense_limit))

        def solve(Y):
            return _solve_factored(fac, Y)
    else:
        lam = class_eigenvalues(spectrum, N).ravel()

        def solve(Y):
            return np.fft.ifft(np.fft.fft(Y, axis=0) / lam[:, None], axis=0).real  # d = 1 only
        if d != 1:
            raise ValueError("FFT Monte Carlo beyond the dense limit is one-dimensional")

    if sigma2 == 0:
        # every trial is the same deterministic solve
        A = np.fft.fftn(solve(f_grid[:, None]).reshape(grid.shape + (1,)), axes=tuple(range(d))).reshape(grid.n)
        err = float(l2sq @ np.abs(A) ** 2 - 2.0 * np.real(np.conj(c) @ A) + v2)
        return MonteCarloResult(err, 0.0, trials)

    errors = []
    for b, start in enumerate(range(0, trials, MC_BLOCK)):
        m = min(MC_BLOCK, trials - start)
        rng = np.random.default_rng([seed, b])
        Y = f_grid[:, None] + _noise(rng, (grid.n, m), sigma2, noise)
        alpha = solve(Y)
        A = np.fft.fftn(alpha.reshape(grid.shape + (m,)), axes=tuple(range(d))).reshape(grid.n, m)
        err = (l2sq @ (np.abs(A) ** 2)) - 2.0 * np.real(np.conj(c) @ A) + v2
        errors.append(err)
    errors = np.concatenate(errors)
    mean = math.fsum(errors) / trials
    var = math.fsum((errors - mean) ** 2) / (trials - 1)
    return MonteCarloResult(mean, math.sqrt(var / trials), trials)
