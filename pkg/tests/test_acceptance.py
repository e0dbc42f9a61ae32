"""Acceptance criteria, one test per criterion.

Each test records a one-line summary that the terminal report prints as
``criterion <n>: PASS|FAIL <detail>``. Values are computed before any
assertion, so failing criteria still report what was measured.
"""
import csv
import math
import time

import numpy as np
import pytest

from ridgeless.cli import main
from ridgeless.model import Grid, TargetSpec, evaluate_on_grid, kernel_matrix, target_battery
from ridgeless.mse import approximation_error, full_mse, noisy_error
from ridgeless.oracle import (
    mse_monte_carlo,
    mse_noiseless,
    noisy_error_by_class,
    noisy_error_deterministic,
    solve_dense,
    solve_fft,
)
from ridgeless.spectra import Family, KernelSpec, build_spectrum

SEED = 20240611
FAMILIES = (Family.GAUSSIAN, Family.LAPLACE, Family.DIRICHLET)
GRID = [(f, N, d, M) for f in FAMILIES for d in (1, 2) for N in (4, 8, 16, 32) for M in (1, 2, 4)]


@pytest.fixture
def summary(record_property):
    def put(num, detail):
        record_property("criterion", num)
        record_property("detail", detail)
    return put


def _singular(spec, N):
    s = np.abs(spec.class_stats(N).signed)
    return bool(np.any(s <= 1e-12 * np.max(s)))


def test_criterion_1_eigenvalue_multisets(summary):
    t0 = time.perf_counter()
    worst, worst_l1 = 0.0, 0.0
    for family, N, d, M in GRID:
        spec = build_spectrum(KernelSpec(family, M, d), N=N)
        cs = spec.class_stats(N)
        dense = np.linalg.eigvalsh(kernel_matrix(spec.kernel, Grid(N, d), check=False))
        scale = np.max(np.abs(dense))
        n = float(N) ** d
        worst = max(worst, np.max(np.abs(np.sort(n * cs.signed.ravel()) - dense)) / scale)
        worst_l1 = max(worst_l1, np.max(np.abs(np.sort(n * cs.l1.ravel()) - dense)) / scale)
    elapsed = time.perf_counter() - t0
    summary(1, f"max rel err {worst:.2e} (signed class sums; N^d*l1 gives {worst_l1:.2e}), {elapsed:.1f} s")
    assert worst <= 1e-7
    assert elapsed < 30


def test_criterion_2_closed_form_vs_oracle(summary):
    t0 = time.perf_counter()
    worst_free, worst_noisy, skipped = 0.0, 0.0, 0
    for family, N, d, M in GRID:
        spec = build_spectrum(KernelSpec(family, M, d), N=N)
        if _singular(spec, N):
            skipped += 1
            continue
        grid = Grid(N, d)
        for t in target_battery(d):
            c = solve_dense(spec.kernel, grid, evaluate_on_grid(t, grid), spectrum=spec)
            r = full_mse(spec, N, d, t, 0.0)
            worst_free = max(worst_free, abs(mse_noiseless(c, t).value - r.E_apx - r.E_free))
        oracle_noisy = math.fsum(noisy_error_by_class(spec, N, d, 1.0).ravel())
        worst_noisy = max(worst_noisy, abs(oracle_noisy - noisy_error(spec, N, d, 1.0).total))

    spec = build_spectrum(KernelSpec(Family.GAUSSIAN, 2.0), N=8)
    z_max = 0.0
    mc_ok = True
    for t in target_battery(1):
        mc = mse_monte_carlo(spec, 8, 1, t, 1.0, trials=10_000, seed=SEED)
        total = full_mse(spec, 8, 1, t, 1.0).E_total
        z_max = max(z_max, abs(mc.mean - total) / mc.stderr)
        mc_ok &= abs(mc.mean - total) <= 3 * mc.stderr
    elapsed = time.perf_counter() - t0
    summary(2, f"noiseless {worst_free:.2e}, noisy {worst_noisy:.2e}, {skipped} singular configs skipped, "
               f"Monte Carlo max |z| {z_max:.2f}, {elapsed:.1f} s")
    assert worst_free <= 1e-7
    assert worst_noisy <= 1e-7
    assert mc_ok
    assert elapsed < 120


def test_criterion_3_dirichlet_exact_point(summary):
    spec = build_spectrum(KernelSpec(Family.DIRICHLET, 3), N=4)
    closed = noisy_error(spec, 4, 1, 1.0)
    oracle_total = noisy_error_deterministic(spec, 4, 1, 1.0)
    per = closed.values
    summary(3, f"oracle total {oracle_total:.12g}, closed form {closed.total:.12g}, per class "
               f"{[float(x) for x in per]}; seven coefficients over four classes leave class 0 "
               f"with a single alias, so 0.5 with 0.125 in every class is not attainable")
    assert abs(closed.total - oracle_total) <= 1e-9
    assert abs(closed.total - 0.625) <= 1e-9
    assert np.allclose(per[1:], 0.125, atol=1e-12) and abs(per[0] - 0.25) <= 1e-12


def test_criterion_4_laplace_plateau(summary):
    t0 = time.perf_counter()
    Ns = [8 * 2**j for j in range(7)]
    values = []
    for N in Ns:
        spec = build_spectrum(KernelSpec(Family.LAPLACE, 1.0), N=N)
        values.append(noisy_error(spec, N, 1, 1.0).total)
    # the FFT solve at the largest N reproduces the per-class eigenvalues
    spec = build_spectrum(KernelSpec(Family.LAPLACE, 1.0), N=Ns[-1])
    y = np.random.default_rng(SEED).standard_normal(Ns[-1])
    alpha = solve_fft(spec, Ns[-1], 1, y).alpha
    K = kernel_matrix(spec.kernel, Grid(Ns[-1]))
    resid = np.linalg.norm(K @ alpha - y) / np.linalg.norm(y)
    elapsed = time.perf_counter() - t0
    summary(4, f"min E_noisy {min(values):.6f} at N={Ns[int(np.argmin(values))]} over N={Ns[0]}..{Ns[-1]}, "
               f"FFT residual {resid:.1e}, {elapsed:.2f} s")
    assert min(values) >= 0.05
    assert resid <= 1e-10
    assert elapsed < 10


def _assume(tmp_path, family, M, d, N):
    path = tmp_path / f"{family}-{M}-{d}-{N}.csv"
    code = main(["assume", "--family", family, "--M", str(M), "--d", str(d), "--N", str(N), "--csv", str(path)])
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    return code, {r["constant"]: float(r["value"]) for r in rows}, {r["assumption"]: r["verdict"] for r in rows}


def test_criterion_5_case_one_bound(summary, tmp_path, capsys):
    parts, ok = [], True
    for N in (8, 16):
        M = 4 * N
        code, const, _ = _assume(tmp_path, "gaussian", M, 1, N)
        C3, i_star = const["C3"], int(const["i_star"])
        if i_star == 0:
            witness = TargetSpec({0: 1.0})
        else:
            witness = TargetSpec({i_star: 2**-0.5, -i_star: 2**-0.5})
        spec = build_spectrum(KernelSpec(Family.GAUSSIAN, M), N=N)
        apx = approximation_error(spec, N, witness).total
        bound = 1 / (2 * math.pi * (1 + C3))
        ok &= code == 0 and apx >= bound
        parts.append(f"N={N}: E_apx {apx:.4f} >= {bound:.4f} (C3={C3:.4f})")
    capsys.readouterr()
    summary(5, "; ".join(parts))
    assert ok


def test_criterion_6_assumption_certification(summary, tmp_path, capsys):
    cases = [("gaussian", 1), ("laplace", 1), ("dirichlet", 2)]
    verdicts, checks, failed = [], [], []
    for family, M in cases:
        for d in (1, 2):
            code, const, v = _assume(tmp_path, family, M, d, 16)
            verdicts.append(code == 0 and all(v[a] == "SATISFIED" for a in ("scale", "tail", "head")))
            checks.append(f"{family} d={d} C1={const['C1']:.3f} C3={const['C3']:.3f}")
            # the Gaussian envelope is 1 in every dimension; the Laplace
            # constants 2 and 3 are the one-dimensional envelopes
            if family == "gaussian" and const["C1"] > 1:
                failed.append(f"gaussian d={d} C1 {const['C1']:.4f} > 1")
            if family == "laplace" and d == 1 and const["C1"] > 2:
                failed.append(f"laplace C1 {const['C1']:.4f} > 2")
            if family == "laplace" and d == 1 and const["C3"] > 3:
                failed.append(f"laplace C3 {const['C3']:.4f} > 3")
    capsys.readouterr()
    status = "all SATISFIED" if all(verdicts) else "not all SATISFIED"
    summary(6, f"{status}; {', '.join(checks)}; envelope misses: {', '.join(failed) or 'none'}")
    assert all(verdicts)
    assert not failed


def _max_fft_dense_diff(configs, sizes, draws):
    worst = 0.0
    for family, M in configs:
        for N, d in sizes:
            spec = build_spectrum(KernelSpec(family, M, d), N=N)
            for y in np.random.default_rng(SEED).standard_normal((draws, N**d)):
                a = solve_dense(spec.kernel, Grid(N, d), y, spectrum=spec).alpha
                b = solve_fft(spec, N, d, y).alpha
                worst = max(worst, np.linalg.norm(a - b) / np.linalg.norm(a))
    return worst


def test_criterion_7_fft_dense_agreement(summary):
    configs = [(Family.GAUSSIAN, 1.0), (Family.LAPLACE, 1.0), (Family.LAPLACE, 4.0), (Family.DIRICHLET, 8)]
    sizes = [(4, 1), (7, 1), (16, 1), (3, 2), (6, 2)]
    worst = _max_fft_dense_diff(configs, sizes, 50)
    # recorded only: condition number ~1e10, so both solvers carry ~1e-6 forward error
    ill = _max_fft_dense_diff([(Family.GAUSSIAN, 1.0)], [(16, 2)], 5)
    N = 4096
    spec = build_spectrum(KernelSpec(Family.LAPLACE, 1.0), N=N)
    y = np.random.default_rng(SEED).standard_normal(N)
    t0 = time.perf_counter()
    a = solve_fft(spec, N, 1, y).alpha
    elapsed = time.perf_counter() - t0
    big = np.linalg.norm(a - solve_dense(spec.kernel, Grid(N), y, spectrum=spec).alpha) / np.linalg.norm(a)
    summary(7, f"max rel diff {worst:.2e} over {len(configs) * len(sizes) * 50} seeded solves, N=4096 diff {big:.1e} "
               f"with FFT solve {elapsed * 1e3:.1f} ms; ill-conditioned gaussian M=1 N=16 d=2 differs by {ill:.1e}")
    assert worst <= 1e-10
    assert big <= 1e-10
    assert elapsed < 1


def test_criterion_8_dimension_contrast(summary, tmp_path):
    cfg = tmp_path / "contrast.cfg"
    out = tmp_path / "contrast.csv"
    cfg.write_text("family = gaussian\nM = N\nn = 4096\nd = 1, 2\nsigma2 = 1\ntarget = zero\n")
    assert main(["sweep", str(cfg), "--output", str(out)]) == 0
    with out.open() as fh:
        rows = {int(r["d"]): r for r in csv.DictReader(fh)}
    e1, e2 = float(rows[1]["noisy"]), float(rows[2]["noisy"])
    summary(8, f"n=4096: d=1 (N={rows[1]['N']}) E_noisy {e1:.6f}, d=2 (N={rows[2]['N']}) E_noisy {e2:.6f}")
    assert e2 < e1


SWEEP = """
family = gaussian, laplace, dirichlet
M = 2
M = N
M = sqrtN
N = 4, 8, 16, 32
d = 1, 2
sigma2 = 0, 1
target = zero, cos1, alias, highfreq
trials = 200
seed = 11
"""


def test_criterion_9_sweep_determinism(summary, tmp_path, capsys):
    cfg = tmp_path / "full.cfg"
    cfg.write_text(SWEEP)
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    codes = [main(["sweep", str(cfg), "--output", str(a)]),
             main(["sweep", str(cfg), "--output", str(b)]),
             main(["sweep", str(cfg), "--output", str(c), "--jobs", "4"])]
    capsys.readouterr()
    rows = len(a.read_text().splitlines()) - 1
    same = a.read_bytes() == b.read_bytes()
    same_jobs = a.read_bytes() == c.read_bytes()
    summary(9, f"{rows} rows, repeat run identical: {same}, 4 workers identical: {same_jobs}")
    assert codes == [0, 0, 0]
    assert same and same_jobs
