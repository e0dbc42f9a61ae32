import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ridgeless.errors import NonConvergenceError, ProfileError
from ridgeless.spectra import (
    Family,
    KernelSpec,
    build_spectrum,
    closed_form_coeff,
    gaussian_coeffs,
    gaussian_ratio_discrepancy,
    hop_stats,
    laplace_coeffs,
    load_profile,
    quadrature_coeff,
)

NAMED = [Family.GAUSSIAN, Family.LAPLACE, Family.DIRICHLET]


def kernel(family, M, d=1):
    return KernelSpec(family, M, d)


# --- closed forms -----------------------------------------------------------


def test_dirichlet_indicator():
    k = kernel(Family.DIRICHLET, 3)
    assert closed_form_coeff(k, 2) == 1.0
    assert closed_form_coeff(k, 5) == 0.0
    assert closed_form_coeff(k, -3) == 1.0


def test_laplace_dc_value():
    k = kernel(Family.LAPLACE, 1.0)
    expected = (1 - math.exp(-math.pi)) / math.pi
    assert closed_form_coeff(k, 0) == pytest.approx(expected, abs=1e-15)
    assert abs(quadrature_coeff(k, [0], 10**6) - expected) <= 1e-8


def test_gaussian_closed_form_is_ratio_law():
    k = kernel(Family.GAUSSIAN, 1.0)
    g0 = closed_form_coeff(k, 0)
    assert closed_form_coeff(k, 2) == pytest.approx(g0 * math.exp(-1.0), rel=1e-15)


def test_gaussian_exact_matches_quadrature():
    for M in (0.5, 1.0, 2.0, 4.0):
        k = kernel(Family.GAUSSIAN, M)
        for j in range(0, 12):
            q = quadrature_coeff(k, [j], 1 << 16)
            assert abs(float(gaussian_coeffs(M, j)) - q) <= 1e-10


def test_gaussian_ratio_law_discrepancy_is_measured():
    # the ratio law ignores the kink of the periodized profile at pi
    k = kernel(Family.GAUSSIAN, 1.0)
    disc = gaussian_ratio_discrepancy(1.0, 10)
    assert 1e-6 < disc < 1e-4
    q0 = quadrature_coeff(k, [0], 1 << 16)
    for j in range(11):
        ratio = quadrature_coeff(k, [j], 1 << 16) / q0
        assert abs(ratio - math.exp(-j * j / 4.0)) <= disc + 1e-10
    # large bandwidth: wrap-around is negligible
    assert gaussian_ratio_discrepancy(3.0, 20) < 1e-15


def test_closed_form_rejects_tabulated():
    t = np.linspace(0, 4, 50)
    k = KernelSpec.tabulated(t, np.exp(-t))
    with pytest.raises(ValueError):
        closed_form_coeff(k, 0)


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0, 8.0])
def test_laplace_closed_form_vs_quadrature(M):
    k = kernel(Family.LAPLACE, M)
    for j in range(4 * math.ceil(M) + 9):
        cf = closed_form_coeff(k, j)
        q = quadrature_coeff(k, [j], 1 << 21)
        assert abs(cf - q) <= 1e-8 * max(1.0, abs(cf))


@pytest.mark.parametrize("M", [0, 1, 2, 8])
def test_dirichlet_closed_form_vs_quadrature(M):
    k = kernel(Family.DIRICHLET, M)
    for j in range(4 * max(M, 1) + 9):
        cf = closed_form_coeff(k, j)
        q = quadrature_coeff(k, [j], 4096)
        assert abs(cf - q) <= 1e-8 * max(1.0, abs(cf))


# --- quadrature -------------------------------------------------------------


def test_quadrature_dirichlet_unit():
    assert quadrature_coeff(kernel(Family.DIRICHLET, 2), [1], 4096) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("family,M", [(Family.GAUSSIAN, 1.0), (Family.LAPLACE, 2.0), (Family.DIRICHLET, 2)])
def test_quadrature_dc_is_mean(family, M):
    k = kernel(family, M)
    theta = -np.pi + 2 * np.pi * np.arange(256) / 256
    vals = k(theta)
    q = quadrature_coeff(k, [0], 256)
    assert q == pytest.approx(vals.mean(), rel=1e-12)
    assert q >= vals.min()


def test_laplace_2d_dc_sandwich():
    k2 = kernel(Family.LAPLACE, 2.0, 2)
    q = quadrature_coeff(k2, [0, 0], 512)
    prod = float(laplace_coeffs(2.0, 0)) ** 2
    assert prod <= q <= 4 * prod


def test_quadrature_nonconvergence_signalled():
    k = kernel(Family.LAPLACE, 1.0)
    with pytest.raises(NonConvergenceError):
        quadrature_coeff(k, [0], 16, tol=1e-12)
    assert quadrature_coeff(k, [0], 1 << 14, tol=1e-7) == pytest.approx(closed_form_coeff(k, 0), abs=1e-7)


def test_quadrature_precondition():
    with pytest.raises(ValueError):
        quadrature_coeff(kernel(Family.GAUSSIAN, 1.0), [10], 16)


def test_gaussian_separable_quadrature():
    k1 = kernel(Family.GAUSSIAN, 1.0)
    k2 = kernel(Family.GAUSSIAN, 1.0, 2)
    for k in [(0, 0), (1, 0), (1, 2), (3, -2)]:
        prod = quadrature_coeff(k1, [k[0]], 256) * quadrature_coeff(k1, [k[1]], 256)
        assert quadrature_coeff(k2, list(k), 256) == pytest.approx(prod, abs=1e-7)


# --- spectra ----------------------------------------------------------------


def test_dirichlet_spectrum_counts():
    s = build_spectrum(kernel(Family.DIRICHLET, 3), cutoff=10)
    assert np.sum(s.coeffs == 1.0) == 7
    assert np.sum(s.coeffs == 0.0) == 14
    assert s.truncation_bound == 0.0


def test_gaussian_2d_product():
    s = build_spectrum(kernel(Family.GAUSSIAN, 1.0, 2), cutoff=4)
    g1 = float(gaussian_coeffs(1.0, 1))
    assert s.coeff((1, 1)) == pytest.approx(g1 * g1, rel=1e-14)
    assert s.coeffs[4 + 1, 4 + 1] == s.coeff((1, 1))


@pytest.mark.parametrize("family,M,d", [(Family.GAUSSIAN, 1.0, 1), (Family.LAPLACE, 1.0, 1),
                                        (Family.DIRICHLET, 3, 2), (Family.GAUSSIAN, 2.0, 2)])
def test_cutoff_extension_consistency_exact(family, M, d):
    a = build_spectrum(kernel(family, M, d), cutoff=8)
    b = build_spectrum(kernel(family, M, d), cutoff=16)
    inner = tuple([slice(8, 25)] * d)
    assert np.array_equal(a.coeffs, b.coeffs[inner])


def test_cutoff_extension_consistency_quadrature_route():
    # tables built by quadrature are refined, not just extended
    a = build_spectrum(kernel(Family.LAPLACE, 1.0, 2), cutoff=32)
    b = build_spectrum(kernel(Family.LAPLACE, 1.0, 2), cutoff=64)
    ca = a.coeffs[32 - 8:32 + 9, 32 - 8:32 + 9]
    cb = b.coeffs[64 - 8:64 + 9, 64 - 8:64 + 9]
    # trapezoid aliasing leaves an absolute error; the kinks at the origin and
    # at the torus boundary make it shrink roughly like nodes^-2
    c = build_spectrum(kernel(Family.LAPLACE, 1.0, 2), cutoff=128)
    cc = c.coeffs[128 - 8:128 + 9, 128 - 8:128 + 9]
    e1, e2 = np.max(np.abs(ca - cb)), np.max(np.abs(cb - cc))
    assert e1 < 1e-4 * cb.max()
    assert e2 < e1 / 3
    assert e2 < 2e-5 * cc.max()


def test_laplace_high_dimension_rejected():
    with pytest.raises(ValueError):
        build_spectrum(kernel(Family.LAPLACE, 1.0, 4), cutoff=4)


def test_truncation_bound_finite_and_monotone():
    for family, M, d in [(Family.GAUSSIAN, 1.0, 1), (Family.LAPLACE, 1.0, 1), (Family.LAPLACE, 1.0, 2),
                         (Family.DIRICHLET, 2, 1), (Family.GAUSSIAN, 0.5, 2)]:
        bounds = [build_spectrum(kernel(family, M, d), cutoff=c).truncation_bound for c in (8, 16, 32, 64)]
        assert all(math.isfinite(b) for b in bounds)
        assert all(b2 <= b1 + 1e-15 for b1, b2 in zip(bounds, bounds[1:]))


def test_dirichlet_bound_zero_once_cutoff_covers_order():
    assert build_spectrum(kernel(Family.DIRICHLET, 5), cutoff=5).truncation_bound == 0.0


def test_named_families_nonnegative_up_to_tolerance():
    for M in (1.0, 2.0, 4.0):
        s = build_spectrum(kernel(Family.LAPLACE, M), cutoff=200)
        assert s.min_coeff() >= -1e-15
    s = build_spectrum(kernel(Family.DIRICHLET, 3), cutoff=50)
    assert s.min_coeff() >= 0
    for M in (2.0, 4.0):
        s = build_spectrum(kernel(Family.GAUSSIAN, M), cutoff=400)
        assert s.min_coeff() >= -1e-15 * s.coeff(0)


def test_small_bandwidth_gaussian_is_indefinite():
    # wrapping exp(-M^2 t^2) onto the circle leaves a kink at pi; for small M
    # the resulting coefficients dip below zero, and so do some eigenvalues
    s = build_spectrum(kernel(Family.GAUSSIAN, 1.0), cutoff=400)
    assert -1e-5 * s.coeff(0) < s.min_coeff() < 0
    s = build_spectrum(kernel(Family.GAUSSIAN, 0.5), cutoff=400)
    assert -1e-2 * s.coeff(0) < s.min_coeff() < 0
    lam = 16 * build_spectrum(kernel(Family.GAUSSIAN, 1.0), N=16).class_stats(16).signed
    assert lam.min() < 0


# --- hop statistics ---------------------------------------------------------


def test_hop_stats_dirichlet_examples():
    s = build_spectrum(kernel(Family.DIRICHLET, 3), cutoff=10)
    h = hop_stats(s, 4, 1)
    assert h.l1 == 2.0 and h.l2sq == 2.0 and h.signed_sum == 2.0
    assert h.delta == 1.0
    h = hop_stats(s, 8, 0)
    assert (h.l1, h.l2sq) == (1.0, 1.0)


def test_hop_stats_single_class_is_whole_window():
    s = build_spectrum(kernel(Family.LAPLACE, 1.0), cutoff=40)
    assert hop_stats(s, 1, 0).l1 == pytest.approx(s.window_sum, rel=1e-14)


def test_hop_stats_precondition():
    s = build_spectrum(kernel(Family.GAUSSIAN, 1.0), cutoff=4)
    with pytest.raises(ValueError):
        hop_stats(s, 8, 0)


def test_class_sums_give_exact_eigenvalues():
    # the circulant eigenvalues are the DFT of a kernel-matrix row
    for family, M, d, N in [(Family.GAUSSIAN, 1.0, 1, 16), (Family.LAPLACE, 0.5, 1, 9),
                            (Family.LAPLACE, 2.0, 2, 8), (Family.GAUSSIAN, 1.0, 2, 6)]:
        k = kernel(family, M, d)
        s = build_spectrum(k, N=N)
        axis = 2 * np.pi * np.arange(N) / N
        mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1)
        row = k(mesh) if d > 1 else k(axis)
        lam = np.fft.fftn(row).real
        got = N**d * s.class_stats(N).signed
        assert np.max(np.abs(got - lam)) <= 1e-12 * np.max(np.abs(lam))


@settings(max_examples=40, deadline=None)
@given(
    family=st.sampled_from(NAMED),
    M=st.sampled_from([0.5, 1.0, 2.0, 3.0, 8.0]),
    d=st.integers(1, 2),
    cutoff=st.integers(4, 40),
)
def test_evenness(family, M, d, cutoff):
    if family is Family.DIRICHLET:
        M = float(math.ceil(M))
    s = build_spectrum(kernel(family, M, d), cutoff=cutoff)
    flipped = s.coeffs[tuple([slice(None, None, -1)] * d)]
    assert np.max(np.abs(s.coeffs - flipped)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(
    family=st.sampled_from(NAMED),
    M=st.sampled_from([1.0, 2.0, 4.0]),
    d=st.integers(1, 2),
    N=st.integers(1, 12),
)
def test_hop_classes_partition_window(family, M, d, N):
    s = build_spectrum(kernel(family, M, d), N=N)
    total = sum(hop_stats(s, N, ell).l1 for ell in np.ndindex((N,) * d))
    assert total == pytest.approx(s.window_sum, rel=1e-12)
    for ell in [(0,) * d, (N - 1,) * d]:
        h = hop_stats(s, N, ell)
        assert h.l1 >= 0 and h.delta >= -1e-15
        assert h.l2sq <= h.l1**2 * (1 + 1e-12)


# --- kernels and profiles ---------------------------------------------------


def test_kernelspec_invariants():
    with pytest.raises(ValueError):
        KernelSpec(Family.GAUSSIAN, 0.0)
    with pytest.raises(ValueError):
        KernelSpec(Family.DIRICHLET, 1.5)
    with pytest.raises(ValueError):
        KernelSpec(Family.LAPLACE, 1.0, 0)
    assert KernelSpec("laplace", 2).family is Family.LAPLACE


def test_dirichlet_removable_singularity():
    k = kernel(Family.DIRICHLET, 4)
    assert float(k(0.0)) == 9.0
    assert float(k(1e-14)) == 9.0


def test_profile_round_trip(tmp_path):
    t = np.linspace(0, 4, 801)
    path = tmp_path / "laplace.txt"
    path.write_text("# theta value\n" + "\n".join(f"{a:.17g} {b:.17g}" for a, b in zip(t, np.exp(-t))))
    k = load_profile(path)
    assert k.family is Family.TABULATED
    s = build_spectrum(k, cutoff=64)
    assert math.isinf(s.truncation_bound)
    for j in range(5):
        assert s.coeff(j) == pytest.approx(closed_form_coeff(kernel(Family.LAPLACE, 1.0), j), abs=1e-4)


def test_profile_symmetric_input_accepted(tmp_path):
    t = np.linspace(-4, 4, 81)
    path = tmp_path / "sym.txt"
    path.write_text("\n".join(f"{a:.17g} {b:.17g}" for a, b in zip(t, np.exp(-t * t))))
    k = load_profile(path)
    assert k.profile_theta[0] == 0.0


def test_profile_asymmetry_rejected(tmp_path):
    path = tmp_path / "asym.txt"
    path.write_text("0 1\n1 0.5\n-1 0.6\n2 0.1\n3 0\n4 0\n")
    with pytest.raises(ProfileError, match="symmetric"):
        load_profile(path)


def test_profile_must_reach_far_enough():
    t = np.linspace(0, 2, 20)
    with pytest.raises(ProfileError):
        KernelSpec.tabulated(t, np.exp(-t), bandwidth=1.0)
    with pytest.raises(ProfileError):
        KernelSpec.tabulated(np.array([0.0, 1, 2, 3, np.nan]), np.ones(5))
