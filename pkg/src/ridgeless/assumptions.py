"""Numerical certification of the spectral scale, tail and head conditions.

scale: the coefficients are absolutely summable, certified by a tail bound
    below 1% of the stored window sum.
tail: for every ``M'`` on a ladder in ``[M, 8M]``, every ``0 <= i <= M'`` and
    every ``k >= 0`` with ``1 <= |k|_inf <= k_max``,
    ``|G[M' k + i]| <= C1 |G[i]| prod 1 / (1 + k_j^2)`` except for a vanishing
    fraction of ``i``.
head: some low frequency ``i*`` (and direction ``m*`` in 0/1 masks for d > 1)
    satisfies ``|G[i*]| <= C3 |G[i* + M' m*]|`` for all ``M' <= M`` once ``M``
    is large enough, with ``G_0[i*] > 0`` at bandwidth 1.

Verdicts are statements about the scanned finite windows only.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError, ProfileError
from .spectra import KernelSpec, Spectrum, build_spectrum

EXCEPTION_BUDGET = 0.05
EXCEPTION_FACTOR = 10.0
HEAD_LIMIT = 1e6
# minimum oversampling of quadrature-route tables relative to the scanned frequencies
_QUAD_OVERSAMPLE = 16
_MAX_QUAD_ENTRIES = 4_000_000
# beyond this even 2x oversampling is not attempted
_HARD_QUAD_ENTRIES = 4 * _MAX_QUAD_ENTRIES


class Verdict(enum.Enum):
    SATISFIED = "SATISFIED"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ScaleResult:
    verdict: Verdict
    window_sum: float
    tail_bound: float

    @property
    def scale_sum(self):
        return self.window_sum + self.tail_bound


@dataclass(frozen=True)
class TailResult:
    verdict: Verdict
    C1: float
    C1_p95: float
    ladder: tuple
    k_max: int
    exception_fractions: tuple
    hard_violations: tuple
    C1_by_k: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HeadResult:
    verdict: Verdict
    C3: float
    C3_open: float
    i_star: int
    m_star: tuple
    C2: float
    ladder: tuple
    per_M: tuple
    base_coeff: float

    @property
    def p_star(self):
        return tuple(self.i_star * np.ones(len(self.m_star), dtype=int))


@dataclass(frozen=True)
class AssumptionReport:
    kernel: KernelSpec
    scale: ScaleResult | None = None
    tail: TailResult | None = None
    head: HeadResult | None = None

    @property
    def verdicts(self):
        out = {}
        for name in ("scale", "tail", "head"):
            part = getattr(self, name)
            if part is not None:
                out[name] = part.verdict
        return out


def check_scale(spectrum: Spectrum) -> ScaleResult:
    """SATISFIED iff the truncation bound is finite and below 1% of the window sum.

    A finite bound that is too loose (window too narrow for the bandwidth)
    still proves summability, so it is INCONCLUSIVE rather than VIOLATED.
    """
    window = spectrum.window_sum
    bound = spectrum.truncation_bound
    if not math.isfinite(window):
        return ScaleResult(Verdict.VIOLATED, window, bound)
    if not math.isfinite(bound) or bound >= 0.01 * window:
        return ScaleResult(Verdict.INCONCLUSIVE, window, bound)
    return ScaleResult(Verdict.SATISFIED, window, bound)


def scan_spectrum(kernel: KernelSpec, max_freq: int, spectrum=None):
    """A spectrum whose coefficients are trustworthy up to ``max_freq`` per axis.

    Separable spectra are exact anywhere. Quadrature tables are rebuilt with
    the window oversampled so trapezoid aliasing stays negligible.
    """
    if kernel.separable:
        if spectrum is not None and spectrum.kernel == kernel:
            return spectrum
        return build_spectrum(kernel, cutoff=max(max_freq, 1))
    d = kernel.dimension
    factor = _QUAD_OVERSAMPLE
    while factor > 2 and (2 * factor * max_freq + 1) ** d > _MAX_QUAD_ENTRIES:
        factor //= 2
    if (2 * factor * max_freq + 1) ** d > _HARD_QUAD_ENTRIES:
        raise NonConvergenceError(
            f"scanning frequencies up to {max_freq} in {d}D needs a quadrature table beyond "
            f"{_HARD_QUAD_ENTRIES} entries"
        )
    cutoff = max(factor * max_freq, spectrum.cutoff if spectrum is not None else 0)
    return build_spectrum(kernel, cutoff=cutoff)


def _k_vectors(d, k_max):
    for k in itertools.product(range(k_max + 1), repeat=d):
        if any(k):
            yield k


def default_tail_ladder(M):
    """Integer ladder ``ceil(M) * {1, 2, 4, 8}`` (contained in ``[M, 8M]`` for integer M)."""
    base = max(1, math.ceil(M))
    return tuple(base * f for f in (1, 2, 4, 8) if base * f <= 8 * M + 1e-12) or (base,)


def check_tail(spectrum: Spectrum, M_prime_ladder=None, k_max=3) -> TailResult:
    kernel = spectrum.kernel
    M = kernel.bandwidth
    d = kernel.dimension
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    ladder = tuple(int(m) for m in (M_prime_ladder or default_tail_ladder(M)))
    if any(m < M - 1e-12 or m > 8 * M + 1e-12 for m in ladder):
        raise ValueError(f"M' ladder must lie in [M, 8M] = [{M:g}, {8 * M:g}]")
    try:
        spec = scan_spectrum(kernel, max(ladder) * (k_max + 1), spectrum)
    except NonConvergenceError:
        return TailResult(Verdict.INCONCLUSIVE, math.nan, math.nan, ladder, k_max, (), ())
    ks = np.array(list(_k_vectors(d, k_max)))
    weight = np.prod(1.0 + ks.astype(float) ** 2, axis=1)

    per_ladder = []
    for Mp in ladder:
        ps = np.array(list(itertools.product(range(Mp + 1), repeat=d)))
        base = np.abs(spec.coeffs_at(ps))
        alias = np.abs(spec.coeffs_at((Mp * ks[None, :, :] + ps[:, None, :]).reshape(-1, d))).reshape(len(ps), len(ks))
        scale = np.max(base)
        zero_base = base <= 1e-14 * scale
        zero_alias = alias <= 1e-14 * scale
        ratio = np.zeros_like(alias)
        live = ~zero_base
        ratio[live] = alias[live] * weight / base[live, None]
        hard = zero_base & np.any(~zero_alias, axis=1)
        per_ladder.append((Mp, ratio.max(axis=1), ratio, hard, live))

    pooled = np.concatenate([r[1][r[4]] for r in per_ladder])
    p95 = float(np.percentile(pooled, 95)) if pooled.size else 0.0
    threshold = EXCEPTION_FACTOR * max(p95, 1e-300)
    fractions, hards, kept = [], [], []
    by_k = np.zeros(len(ks))
    for Mp, Ci, ratio, hard, live in per_ladder:
        exc = (live & (Ci > threshold)) | hard
        fractions.append(float(np.mean(exc)))
        hards.append(int(hard.sum()))
        good = live & ~exc
        if np.any(good):
            kept.append(float(Ci[good].max()))
            by_k = np.maximum(by_k, ratio[good].max(axis=0))
    C1 = max(max(kept, default=0.0), 1e-12)
    monotone = all(b <= a + 1e-15 for a, b in zip(fractions, fractions[1:]))
    ok = fractions[-1] <= EXCEPTION_BUDGET and monotone
    return TailResult(Verdict.SATISFIED if ok else Verdict.VIOLATED, C1, p95, ladder, k_max,
                      tuple(fractions), tuple(hards),
                      {tuple(int(x) for x in k): float(c) for k, c in zip(ks, by_k)})


def default_head_ladder(kernel):
    return (1, 2, 4, 8, 16)


def _masks(d):
    """Nonzero 0/1 directions, unit vectors first (e_1, e_2, ...)."""
    masks = [m for m in itertools.product((0, 1), repeat=d) if any(m)]
    return sorted(masks, key=lambda m: (sum(m), tuple(-x for x in m)))


def check_head(kernel: KernelSpec, M_ladder=None, i_max=8) -> HeadResult:
    """Fit the head constant across a ladder of bandwidths for the family of ``kernel``.

    For each candidate ``(i*, m*)`` and ladder bandwidth ``M`` the worst ratio
    ``|G[i*]| / |G[i* + M' m*]|`` over integers ``1 <= M' <= M`` is recorded
    (``C3``) alongside the open-range variant ``M' < M`` (``C3_open``).
    ``C2`` is the smallest ladder bandwidth from which the worst ratio stays
    below 1e6; the candidate with the smallest ``C3`` wins.
    """
    d = kernel.dimension
    ladder = tuple(M_ladder or default_head_ladder(kernel))
    if len(ladder) < 4:
        raise ValueError("the bandwidth ladder needs at least 4 entries")
    try:
        base_spec = scan_spectrum(kernel.with_bandwidth(1.0), i_max + 1)
        tables = {M: scan_spectrum(kernel.with_bandwidth(M), int(math.ceil(M)) + i_max + 1) for M in ladder}
    except (ProfileError, NonConvergenceError):
        # a tabulated profile too short for the ladder, or an infeasible scan
        return HeadResult(Verdict.INCONCLUSIVE, math.nan, math.nan, -1, (0,) * d, math.nan, ladder, (), 0.0)
    best = None
    for i_star in range(i_max + 1):
        p = np.full(d, i_star)
        g0 = float(base_spec.coeffs_at(p)[0])
        if not g0 > 0:
            continue
        for m in _masks(d):
            per_M, open_M = [], []
            for M in ladder:
                spec = tables[M]
                top = int(math.floor(M + 1e-9))
                Mp = np.arange(1, top + 1)
                ref = abs(float(spec.coeffs_at(p)[0]))
                far = np.abs(spec.coeffs_at(p[None, :] + Mp[:, None] * np.array(m)[None, :]))
                with np.errstate(divide="ignore"):
                    r = np.where(far > 0, ref / np.where(far > 0, far, 1.0), np.inf)
                per_M.append(float(np.max(r, initial=1.0)))
                open_M.append(float(np.max(r[Mp < M], initial=1.0)))
            per_M = np.array(per_M)
            # smallest ladder index from which every ratio stays finite and bounded
            C2_idx = None
            for j in range(len(ladder)):
                if np.all(per_M[j:] <= HEAD_LIMIT):
                    C2_idx = j
                    break
            if C2_idx is None or len(ladder) - C2_idx < 4:
                continue
            C3 = float(np.max(per_M[C2_idx:]))
            C3_open = float(np.max(np.array(open_M)[C2_idx:]))
            cand = (C3, i_star, m, ladder[C2_idx], tuple(per_M.tolist()), C3_open, g0)
            if best is None or cand[0] < best[0] - 1e-12:
                best = cand
    if best is None:
        return HeadResult(Verdict.VIOLATED, math.inf, math.inf, -1, (0,) * d, math.inf, ladder, (), 0.0)
    C3, i_star, m, C2, per_M, C3_open, g0 = best
    return HeadResult(Verdict.SATISFIED, max(C3, 1e-12), max(C3_open, 1e-12), i_star, m, float(C2),
                      ladder, per_M, g0)


def assess(spectrum: Spectrum, M_prime_ladder=None, k_max=3, M_ladder=None) -> AssumptionReport:
    return AssumptionReport(
        spectrum.kernel,
        check_scale(spectrum),
        check_tail(spectrum, M_prime_ladder, k_max),
        check_head(spectrum.kernel, M_ladder),
    )


def witness_target(head: HeadResult):
    """Target with ``V[+-p*] = 1/sqrt(2)``, or ``V[0] = 1`` when ``p* = 0``."""
    from .model import TargetSpec

    p = head.p_star
    if not any(p):
        return TargetSpec({p: 1.0}, len(p), name="witness")
    return TargetSpec({p: 2**-0.5, tuple(-x for x in p): 2**-0.5}, len(p), name="witness")


def lower_bounds(report: AssumptionReport, spectrum: Spectrum, N: int, sigma2: float):
    """``(noisy_bound, apx_bound)``.

    noisy_bound: every class ``i`` with ``Delta_i <= 4^d C1 |G[i]|`` has
    ``noisy_i >= sigma^2 / N^d / (1 + 4^d C1)^2`` because the alias energy is
    at least ``G[i]^2`` while the alias sum is at most ``(1 + 4^d C1)|G[i]|``.
    Summing gives ``sigma^2 * (qualifying fraction) / (1 + 4^d C1)^2``.

    apx_bound: ``1 / (2 pi (1 + C3))`` for the witness target when ``M > N``
    (zero otherwise). It follows from the sharper ``1 / (1 + C3^2)``, which
    dominates it while ``C3 <= 7``; beyond that the sharper value is returned.

    Each bound is zero unless the assumption it rests on is SATISFIED.
    """
    d = spectrum.dimension
    noisy = 0.0
    if report.tail is not None and report.tail.verdict is Verdict.SATISFIED and sigma2 > 0:
        c = 1.0 + 4.0**d * report.tail.C1
        l1 = spectrum.class_stats(N).l1
        reps = np.indices(l1.shape).reshape(d, -1).T
        reps = np.where(reps > N // 2, reps - N, reps)  # member nearest zero
        g = np.abs(spectrum.coeffs_at(reps)).reshape(l1.shape)
        delta = l1 - g
        qualifying = int(np.sum((g > 0) & (delta <= (c - 1.0) * g)))
        noisy = sigma2 * qualifying / N**d / c**2
    apx = 0.0
    if report.head is not None and report.head.verdict is Verdict.SATISFIED and spectrum.kernel.bandwidth > N:
        C3 = report.head.C3
        apx = min(1.0 / (2 * math.pi * (1 + C3)), 1.0 / (1 + C3 * C3))
    return noisy, apx
