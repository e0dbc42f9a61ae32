"""Closed-form expected MSE of the kernel interpolant on a uniform grid.

Per aliasing class ``i`` with kernel class sums ``s`` (signed), ``||G_i||^2``
and target class data from :func:`model.project_target`:

    apx_i   = ||V_i||^2 - |<G_i, V_i>|^2 / ||G_i||^2
    free_i  = ||G_i||^2 * | S_i(V) / s_i - <G_i, V_i> / ||G_i||^2 |^2
    noisy_i = sigma^2 / N^d * ||G_i||^2 / s_i^2

``S_i(V)`` is the signed alias sum of the target. For a kernel with
non-negative spectrum ``s_i = ||G_i||_1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClassError
from .model import SINGULAR_RTOL, ProjectionResult, TargetSpec, project_target
from .spectra import Spectrum


@dataclass(frozen=True)
class ClassTerms:
    """Per-class values (shape ``(N,)*d``) and their total."""

    values: np.ndarray
    total: float


@dataclass(frozen=True, eq=False)
class MseReport:
    N: int
    d: int
    sigma2: float
    apx: np.ndarray
    free: np.ndarray
    noisy: np.ndarray
    E_apx: float
    E_free: float
    E_noisy: float
    E_total: float
    metadata: dict = field(default_factory=dict)

    @property
    def total_by_class(self):
        return self.apx + self.free + self.noisy

    def rows(self):
        """``(class multi-index, apx, free, noisy, total)`` in C order."""
        per = self.total_by_class
        for idx in np.ndindex(self.apx.shape):
            yield idx, float(self.apx[idx]), float(self.free[idx]), float(self.noisy[idx]), float(per[idx])


def _degenerate_mask(spectrum, N):
    s = np.abs(spectrum.class_stats(N).signed)
    return s <= SINGULAR_RTOL * np.max(s)


def _projection(spectrum, N, target):
    if isinstance(target, ProjectionResult):
        return target
    return project_target(spectrum, N, target, strict=False)


def _check_touched(proj, dead, what):
    bad = np.flatnonzero((proj.touched & dead & (proj.v2 > 0)).ravel())
    if bad.size:
        raise DegenerateClassError(
            f"{what}: target has mass on {bad.size} class(es) with a singular kernel eigenvalue",
            bad.tolist(),
        )


def approximation_error(spectrum: Spectrum, N: int, target: TargetSpec) -> ClassTerms:
    proj = _projection(spectrum, N, target)
    _check_touched(proj, _degenerate_mask(spectrum, N), "approximation error")
    vals = proj.residual_by_class
    return ClassTerms(vals, math.fsum(vals.ravel()))


def noise_free_error(spectrum: Spectrum, N: int, target: TargetSpec) -> ClassTerms:
    proj = _projection(spectrum, N, target)
    dead = _degenerate_mask(spectrum, N)
    _check_touched(proj, dead, "noise-free error")
    s = spectrum.class_stats(N).signed
    vals = np.zeros(s.shape)
    live = ~dead & proj.touched
    ratio = proj.sv[live] / s[live]
    vals[live] = proj.l2sq[live] * np.abs(ratio - proj.weights[live]) ** 2
    return ClassTerms(vals, math.fsum(vals.ravel()))


def noisy_error(spectrum: Spectrum, N: int, d: int, sigma2: float) -> ClassTerms:
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if d != spectrum.dimension:
        raise ValueError("d differs from the spectrum dimension")
    cs = spectrum.class_stats(N)
    if sigma2 == 0:
        vals = np.zeros(cs.signed.shape)
        return ClassTerms(vals, 0.0)
    dead = _degenerate_mask(spectrum, N)
    if np.any(dead):
        bad = np.flatnonzero(dead.ravel())
        raise DegenerateClassError(
            f"noisy error is unbounded: {bad.size} class eigenvalue(s) vanish", bad.tolist()
        )
    vals = sigma2 / float(N) ** d * cs.l2sq / cs.signed**2
    return ClassTerms(vals, math.fsum(vals.ravel()))


def tolerance(spectrum: Spectrum, N: int):
    """Comparison tolerance: condition estimate x class-sum error x 10.

    The condition estimate is the eigenvalue spread ``max|s| / min|s|`` over
    live classes. Falls back to 1e-12 when class sums are exact to rounding.
    """
    cs = spectrum.class_stats(N)
    s = np.abs(cs.signed)
    live = s[s > SINGULAR_RTOL * np.max(s)]
    cond = float(np.max(live) / np.min(live))
    err = cs.error if math.isfinite(cs.error) else spectrum.truncation_bound
    return cond, max(10.0 * cond * err, 1e-12)


def full_mse(spectrum: Spectrum, N: int, d: int, target: TargetSpec, sigma2: float,
             on_degenerate="raise") -> MseReport:
    """Assemble the three error terms.

    With ``on_degenerate="nan"`` classes that cannot be evaluated (singular
    eigenvalue with target mass, or any singular class when ``sigma2 > 0``)
    are set to NaN and listed in ``metadata["degenerate"]`` instead of raising.
    """
    if on_degenerate not in ("raise", "nan"):
        raise ValueError("on_degenerate must be 'raise' or 'nan'")
    proj = _projection(spectrum, N, target)
    if on_degenerate == "raise":
        apx = approximation_error(spectrum, N, proj).values
        free = noise_free_error(spectrum, N, proj).values
        noisy = noisy_error(spectrum, N, d, sigma2).values
        bad = np.zeros(apx.shape, dtype=bool)
    else:
        dead = _degenerate_mask(spectrum, N)
        bad_target = proj.touched & dead & (proj.v2 > 0)
        bad = bad_target | (dead & (sigma2 > 0))
        masked = ProjectionResult(proj.N, proj.spectrum, proj.target, np.where(bad_target, 0.0, proj.v2),
                                  proj.gv, proj.sv, proj.l2sq, proj.weights, proj.touched & ~bad_target)
        apx = approximation_error(spectrum, N, masked).values.copy()
        free = noise_free_error(spectrum, N, masked).values.copy()
        apx[bad_target] = np.nan
        free[bad_target] = np.nan
        cs = spectrum.class_stats(N)
        noisy = np.zeros(cs.signed.shape)
        if sigma2 > 0:
            live = ~dead
            noisy[live] = sigma2 / float(N) ** d * cs.l2sq[live] / cs.signed[live] ** 2
            noisy[dead] = np.nan
    E_apx, E_free, E_noisy = (math.fsum(a.ravel()) if not np.any(np.isnan(a)) else math.nan
                              for a in (apx, free, noisy))
    cond, tol = tolerance(spectrum, N)
    k = spectrum.kernel
    meta = {
        "family": k.family.value,
        "M": k.bandwidth,
        "target": proj.target.name,
        "condition": cond,
        "tolerance": tol,
        "class_sum_error": spectrum.class_stats(N).error,
        "target_tail_bound": proj.target.tail_bound,
        "degenerate": np.flatnonzero(bad.ravel()).tolist(),
    }
    return MseReport(N, d, float(sigma2), apx, free, noisy,
                     E_apx, E_free, E_noisy, E_apx + E_free + E_noisy, meta)
