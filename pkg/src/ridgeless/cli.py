"""Command-line experiment runner.

Subcommands: spectrum, mse, sweep, assume, verify.
Exit status: 0 success, 1 an assumption VIOLATED, 2 usage error,
3 an assumption INCONCLUSIVE, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .assumptions import Verdict, assess, lower_bounds
from .errors import DegenerateClassError, NonConvergenceError, ProfileError, SolverError
from .model import BATTERY_IDS, DENSE_LIMIT, Grid, battery_target, evaluate_on_grid
from .mse import full_mse
from .oracle import mse_monte_carlo, mse_noiseless, noisy_error_by_class, solve_dense
from .spectra import Family, KernelSpec, build_spectrum, hop_stats, load_profile

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_NUMERICAL = 0, 1, 2, 3, 4

MSE_COLUMNS = ("family", "d", "N", "M", "sigma2", "target", "class", "apx", "free", "noisy", "total")
SWEEP_COLUMNS = ("family", "M_rule", "d", "N", "M", "sigma2", "target", "apx", "free", "noisy", "total", "verdict")
SUMMARY_COLUMNS = ("family", "M_rule", "d", "sigma2", "target", "min_total", "argmin_N", "points")
VERIFY_TOL = 1e-7


class UsageError(Exception):
    pass


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def csv_line(values):
    return ",".join(fmt(v) for v in values)


def class_label(idx):
    return ":".join(str(int(i)) for i in idx)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="\n"), True


# ---------------------------------------------------------------------------
# kernel construction


def kernel_from_args(args):
    family = Family(args.family)
    if family is Family.TABULATED:
        if not args.profile:
            raise UsageError("--family tabulated needs --profile FILE")
        return load_profile(args.profile, args.M, args.d)
    if args.profile:
        raise UsageError("--profile is only valid with --family tabulated")
    return KernelSpec(family, args.M, args.d)


def _add_kernel_args(p, M_default=1.0):
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    p.add_argument("--M", type=float, default=M_default, help="bandwidth (Dirichlet: order)")
    p.add_argument("--d", type=int, default=1, help="dimension")
    p.add_argument("--profile", help="two-column 'theta value' file for tabulated kernels")


def _spectrum_for(kernel, N, cutoff=None):
    return build_spectrum(kernel, cutoff=cutoff, N=N)


# ---------------------------------------------------------------------------
# spectrum


def cmd_spectrum(args):
    kernel = kernel_from_args(args)
    N = args.N
    if N is not None and N < 1:
        raise UsageError("--N must be >= 1")
    spec = build_spectrum(kernel, cutoff=args.cutoff, N=N or 1)
    out, close = _open_out(args.output)
    try:
        d = kernel.dimension
        out.write(f"# family={kernel.family.value} d={d} M={fmt(kernel.bandwidth)} cutoff={spec.cutoff}\n")
        out.write(f"# window_sum={fmt(spec.window_sum)} truncation_bound={fmt(spec.truncation_bound)}\n")
        out.write("k,G\n")
        for idx in np.ndindex(spec.coeffs.shape):
            k = tuple(i - spec.cutoff for i in idx)
            out.write(csv_line((class_label(k), spec.coeffs[idx])) + "\n")
        if N is not None:
            if spec.cutoff < N:
                raise UsageError(f"--cutoff must be at least N = {N} for hop statistics")
            out.write(f"# hop statistics N={N}\n")
            out.write("class,l1,l2sq,signed_sum,delta,l1_upper\n")
            total = []
            for ell in np.ndindex((N,) * d):
                hs = hop_stats(spec, N, ell)
                total.append(hs.l1)
                out.write(csv_line((class_label(ell), hs.l1, hs.l2sq, hs.signed_sum, hs.delta, hs.l1_upper)) + "\n")
            out.write(f"# class_l1_total={fmt(math.fsum(total))}\n")
    finally:
        if close:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# mse


def _oracle_by_class(kernel, spec, N, d, target, sigma2):
    grid = Grid(N, d)
    sol = solve_dense(kernel, grid, evaluate_on_grid(target, grid), spec)
    probe = max(spec.cutoff, 1024) if d == 1 and kernel.separable else spec.cutoff
    noiseless = mse_noiseless(sol, target, probe).by_class
    noisy = noisy_error_by_class(spec, N, d, sigma2)
    return noiseless, noisy


def cmd_mse(args):
    kernel = kernel_from_args(args)
    N, d = args.N, kernel.dimension
    if N < 2:
        raise UsageError("--N must be >= 2")
    if args.sigma2 < 0:
        raise UsageError("--sigma2 must be non-negative")
    target = battery_target(args.target, d)
    spec = _spectrum_for(kernel, N, args.cutoff)
    report = full_mse(spec, N, d, target, args.sigma2, on_degenerate="nan")
    degenerate = bool(report.metadata["degenerate"])
    columns = list(MSE_COLUMNS)
    oracle = None
    if args.verify:
        if N**d > DENSE_LIMIT:
            raise UsageError(f"--verify needs N^d <= {DENSE_LIMIT}")
        if degenerate:
            raise DegenerateClassError("cannot verify a report with degenerate classes",
                                       report.metadata["degenerate"])
        oracle = _oracle_by_class(kernel, spec, N, d, target, args.sigma2)
        columns += ["oracle_apx_free", "oracle_noisy"]
    if degenerate:
        columns.append("verdict")
    prefix = (kernel.family.value, d, N, kernel.bandwidth, args.sigma2, target.name)
    bad = set(report.metadata["degenerate"])
    out, close = _open_out(args.output)
    try:
        out.write(",".join(columns) + "\n")
        worst = 0.0
        for flat, (idx, apx, free, noisy, total) in enumerate(report.rows()):
            row = list(prefix) + [class_label(idx), apx, free, noisy, total]
            if oracle is not None:
                o_af, o_n = float(oracle[0][idx]), float(oracle[1][idx])
                worst = max(worst, abs(apx + free - o_af), abs(noisy - o_n))
                row += [o_af, o_n]
            if degenerate:
                row.append("DEGENERATE" if flat in bad else "OK")
            out.write(csv_line(row) + "\n")
        row = list(prefix) + ["total", report.E_apx, report.E_free, report.E_noisy, report.E_total]
        if oracle is not None:
            o_af, o_n = math.fsum(oracle[0].ravel()), math.fsum(oracle[1].ravel())
            worst = max(worst, abs(report.E_apx + report.E_free - o_af), abs(report.E_noisy - o_n))
            row += [o_af, o_n]
        if degenerate:
            row.append("DEGENERATE")
        out.write(csv_line(row) + "\n")
        if oracle is not None:
            out.write(f"# max_discrepancy={fmt(worst)}\n")
    finally:
        if close:
            out.close()
    if degenerate:
        print(f"error: {len(bad)} degenerate class(es): singular kernel eigenvalue", file=sys.stderr)
        return EXIT_NUMERICAL
    if oracle is not None and worst > VERIFY_TOL:
        print(f"error: oracle discrepancy {worst:.3g} exceeds {VERIFY_TOL:g}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

_RULE = re.compile(r"^\s*(?:(?P<c>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\*?\s*)?(?P<f>N\^1\.5|sqrtN|N)?\s*$")


@dataclass(frozen=True)
class BandwidthRule:
    text: str
    coef: float
    form: str | None

    @classmethod
    def parse(cls, text):
        m = _RULE.match(text)
        if not m or (m.group("c") is None and m.group("f") is None):
            raise UsageError(f"bad bandwidth rule {text!r} (use a number, N, 4N, sqrtN, N^1.5)")
        return cls(text.strip(), float(m.group("c") or 1.0), m.group("f"))

    def __call__(self, N, family):
        scale = {None: 1.0, "N": N, "sqrtN": math.sqrt(N), "N^1.5": N**1.5}[self.form]
        M = self.coef * scale
        if family is Family.DIRICHLET:
            M = float(max(0, round(M)))
        if M <= 0 and family is not Family.DIRICHLET:
            raise UsageError(f"rule {self.text!r} gives non-positive bandwidth at N={N}")
        return M


@dataclass
class SweepConfig:
    families: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    Ns: list = field(default_factory=list)
    ns: list = field(default_factory=list)
    ds: list = field(default_factory=lambda: [1])
    sigma2s: list = field(default_factory=lambda: [1.0])
    targets: list = field(default_factory=lambda: ["zero"])
    trials: int = 0
    seed: int = 0
    output: str = "sweep.csv"
    profile: str | None = None
    jobs: int = 1

    def points(self):
        """Grid points in config order: family, rule, d, sigma2, target, N."""
        for fam in self.families:
            for rule in self.rules:
                for d in self.ds:
                    for s2 in self.sigma2s:
                        for tgt in self.targets:
                            for N in self.resolutions(d):
                                yield fam, rule, d, s2, tgt, N

    def resolutions(self, d):
        out = list(self.Ns)
        for n in self.ns:
            N = round(n ** (1.0 / d))
            if N**d != n:
                raise UsageError(f"sample count {n} is not a perfect power for d={d}")
            out.append(N)
        return out


_LIST_KEYS = {"family": "families", "M": "rules", "N": "Ns", "n": "ns", "d": "ds",
              "sigma2": "sigma2s", "target": "targets"}
_SCALAR_KEYS = {"trials", "seed", "output", "profile", "jobs"}


def parse_config(text):
    """Parse flat ``key = value`` lines; repeated list keys accumulate.

    List keys: family, M, N, n, d, sigma2, target (a value may also hold a
    comma-separated list). Scalar keys: trials, seed, output, profile, jobs.
    ``#`` starts a comment.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _LIST_KEYS:
            raw.setdefault(key, []).extend(v.strip() for v in value.split(",") if v.strip())
        elif key in _SCALAR_KEYS:
            raw[key] = value
        else:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
    cfg = SweepConfig()
    try:
        cfg.families = [Family(v) for v in raw.get("family", [])]
        cfg.rules = [BandwidthRule.parse(v) for v in raw.get("M", [])]
        cfg.Ns = [int(v) for v in raw.get("N", [])]
        cfg.ns = [int(v) for v in raw.get("n", [])]
        if "d" in raw:
            cfg.ds = [int(v) for v in raw["d"]]
        if "sigma2" in raw:
            cfg.sigma2s = [float(v) for v in raw["sigma2"]]
        if "target" in raw:
            cfg.targets = raw["target"]
        cfg.trials = int(raw.get("trials", 0))
        cfg.seed = int(raw.get("seed", 0))
        cfg.jobs = int(raw.get("jobs", 1))
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from None
    cfg.output = raw.get("output", cfg.output)
    cfg.profile = raw.get("profile")
    if not cfg.families:
        raise UsageError("config needs at least one family")
    if not cfg.rules:
        raise UsageError("config needs at least one M rule")
    if not cfg.Ns and not cfg.ns:
        raise UsageError("config needs a non-empty N (or n) list")
    if any(N < 2 for N in cfg.Ns):
        raise UsageError("all N must be >= 2")
    if any(s < 0 for s in cfg.sigma2s):
        raise UsageError("all sigma2 must be >= 0")
    if any(d < 1 for d in cfg.ds):
        raise UsageError("all d must be >= 1")
    for t in cfg.targets:
        if t not in BATTERY_IDS:
            raise UsageError(f"unknown target {t!r}; choose from {', '.join(BATTERY_IDS)}")
    if Family.TABULATED in cfg.families and not cfg.profile:
        raise UsageError("tabulated family needs 'profile = FILE'")
    if cfg.trials and cfg.trials < 100:
        raise UsageError("trials must be 0 or >= 100")
    for d in cfg.ds:
        cfg.resolutions(d)
    return cfg


def _sweep_point(cfg, point):
    fam, rule, d, s2, tgt, N = point
    try:
        M = rule(N, fam)
    except UsageError:
        raise
    base = (fam.value, rule.text, d, N, M, s2, tgt)
    try:
        if fam is Family.TABULATED:
            kernel = load_profile(cfg.profile, M, d)
        else:
            kernel = KernelSpec(fam, M, d)
        spec = build_spectrum(kernel, N=N)
        target = battery_target(tgt, d)
        rep = full_mse(spec, N, d, target, s2)
        row = list(base) + [rep.E_apx, rep.E_free, rep.E_noisy, rep.E_total, "OK"]
        if cfg.trials:
            mc = mse_monte_carlo(spec, N, d, target, s2, cfg.trials, cfg.seed)
            row += [mc.mean, mc.stderr]
        return row
    except (DegenerateClassError, SolverError, NonConvergenceError, ValueError) as exc:
        row = list(base) + [math.nan] * 4 + ["ERROR"]
        if cfg.trials:
            row += [math.nan, math.nan]
        return row + [f"# {type(exc).__name__}: {exc}"]


def run_sweep(cfg, out_path):
    points = list(cfg.points())
    if cfg.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(lambda p: _sweep_point(cfg, p), points))
    else:
        rows = [_sweep_point(cfg, p) for p in points]
    columns = list(SWEEP_COLUMNS) + (["mc_mean", "mc_stderr"] if cfg.trials else [])
    width = len(columns)
    with open(out_path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(csv_line(row[:width]) + "\n")
    groups = {}
    for row in rows:
        key = (row[0], row[1], row[2], row[5], row[6])
        groups.setdefault(key, []).append((row[3], row[10]))
    summary_path = os.path.splitext(out_path)[0] + ".summary.csv"
    with open(summary_path, "w", newline="\n") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for key, vals in groups.items():
            finite = [(t, N) for N, t in vals if math.isfinite(t)]
            if finite:
                t, N = min(finite)
            else:
                t, N = math.nan, -1
            fh.write(csv_line(list(key) + [t, N, len(vals)]) + "\n")
    errors = sum(1 for r in rows if r[11] == "ERROR")
    return rows, summary_path, errors


def cmd_sweep(args):
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    if args.jobs is not None:
        cfg.jobs = args.jobs
    out_dir = os.environ.get("RIDGELESS_OUTPUT_DIR")
    out_path = args.output or cfg.output
    if out_dir:
        out_path = os.path.join(out_dir, os.path.basename(out_path))
    _, summary, errors = run_sweep(cfg, out_path)
    print(f"wrote {out_path} and {summary}", file=sys.stderr)
    if errors:
        print(f"{errors} grid point(s) failed; see verdict=ERROR rows", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# assume


def _assume_cutoff(kernel):
    """Window wide enough that the Laplace tail bound can drop below 1%."""
    if kernel.family is Family.LAPLACE:
        c = 256 * max(1, math.ceil(kernel.bandwidth))
        if kernel.dimension == 2:
            c = min(c, 2048)
        elif kernel.dimension == 3:
            c = min(c, 160)
        return c
    return None


def cmd_assume(args):
    kernel = kernel_from_args(args)
    spec = build_spectrum(kernel, cutoff=args.cutoff or _assume_cutoff(kernel), N=args.N)
    M_ladder = tuple(args.head_ladder) if args.head_ladder else None
    report = assess(spec, tuple(args.ladder) if args.ladder else None, args.k_max, M_ladder)
    nb, ab = lower_bounds(report, spec, args.N, args.sigma2)
    sc, tl, hd = report.scale, report.tail, report.head
    lines = [
        f"kernel: family={kernel.family.value} d={kernel.dimension} M={fmt(kernel.bandwidth)}",
        f"scale: {sc.verdict.value} window_sum={fmt(sc.window_sum)} tail_bound={fmt(sc.tail_bound)} "
        f"scale_sum={fmt(sc.scale_sum)}",
        f"tail: {tl.verdict.value} C1={fmt(tl.C1)} C1_p95={fmt(tl.C1_p95)} ladder={list(tl.ladder)} "
        f"k_max={tl.k_max} exception_fractions={[fmt(x) for x in tl.exception_fractions]} "
        f"hard_violations={list(tl.hard_violations)}",
        f"head: {hd.verdict.value} C3={fmt(hd.C3)} C3_open={fmt(hd.C3_open)} i_star={hd.i_star} "
        f"m_star={list(hd.m_star)} C2={fmt(hd.C2)} ladder={list(hd.ladder)}",
        f"lower_bounds: N={args.N} sigma2={fmt(args.sigma2)} noisy_bound={fmt(nb)} apx_bound={fmt(ab)}",
    ]
    print("\n".join(lines))
    if args.csv:
        with open(args.csv, "w", newline="\n") as fh:
            fh.write("family,d,M,assumption,verdict,constant,value\n")
            base = (kernel.family.value, kernel.dimension, kernel.bandwidth)
            rows = [
                ("scale", sc.verdict.value, "scale_sum", sc.scale_sum),
                ("scale", sc.verdict.value, "tail_bound", sc.tail_bound),
                ("tail", tl.verdict.value, "C1", tl.C1),
                ("tail", tl.verdict.value, "C1_p95", tl.C1_p95),
                ("tail", tl.verdict.value, "max_exception_fraction", max(tl.exception_fractions, default=math.nan)),
                ("head", hd.verdict.value, "C3", hd.C3),
                ("head", hd.verdict.value, "C3_open", hd.C3_open),
                ("head", hd.verdict.value, "i_star", hd.i_star),
                ("head", hd.verdict.value, "C2", hd.C2),
                ("bounds", "", "noisy_bound", nb),
                ("bounds", "", "apx_bound", ab),
            ]
            for r in rows:
                fh.write(csv_line(base + r) + "\n")
    verdicts = set(report.verdicts.values())
    if Verdict.VIOLATED in verdicts:
        return EXIT_VIOLATED
    if Verdict.INCONCLUSIVE in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args):
    kernel = kernel_from_args(args)
    N, d = args.N, kernel.dimension
    if N**d > DENSE_LIMIT:
        raise UsageError(f"verify needs N^d <= {DENSE_LIMIT}")
    spec = build_spectrum(kernel, N=N)
    targets = args.target or list(BATTERY_IDS)
    out, close = _open_out(args.output)
    worst = 0.0
    try:
        cols = ["family", "d", "N", "M", "sigma2", "target", "closed_apx_free", "oracle_apx_free",
                "closed_noisy", "oracle_noisy", "discrepancy"]
        if args.trials:
            cols += ["closed_total", "mc_mean", "mc_stderr", "mc_z"]
        out.write(",".join(cols) + "\n")
        noisy_oracle = None
        for name in targets:
            target = battery_target(name, d)
            rep = full_mse(spec, N, d, target, args.sigma2)
            o_af, o_n = _oracle_by_class(kernel, spec, N, d, target, args.sigma2)
            if noisy_oracle is None:
                noisy_oracle = math.fsum(o_n.ravel())
            o_af = math.fsum(o_af.ravel())
            disc = max(abs(rep.E_apx + rep.E_free - o_af), abs(rep.E_noisy - noisy_oracle))
            worst = max(worst, disc)
            row = [kernel.family.value, d, N, kernel.bandwidth, args.sigma2, name,
                   rep.E_apx + rep.E_free, o_af, rep.E_noisy, noisy_oracle, disc]
            if args.trials:
                mc = mse_monte_carlo(spec, N, d, target, args.sigma2, args.trials, args.seed)
                z = (mc.mean - rep.E_total) / mc.stderr if mc.stderr > 0 else 0.0
                row += [rep.E_total, mc.mean, mc.stderr, z]
            out.write(csv_line(row) + "\n")
        out.write(f"# max_discrepancy={fmt(worst)}\n")
    finally:
        if close:
            out.close()
    return EXIT_OK if worst <= VERIFY_TOL else EXIT_NUMERICAL


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="ridgeless", description="Kernel interpolation on uniform torus grids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="dump Fourier coefficients and hop statistics")
    _add_kernel_args(p)
    p.add_argument("--cutoff", type=int, help="window half-width (default max(8 ceil(M), 4N))")
    p.add_argument("--N", type=int, help="also emit hop statistics for this resolution")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("mse", help="closed-form MSE report, one row per class")
    _add_kernel_args(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--target", default="zero", choices=BATTERY_IDS)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--verify", action="store_true", help="append dense-oracle columns")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_mse)

    p = sub.add_parser("sweep", help="run a configured grid of MSE evaluations")
    p.add_argument("config", help="flat 'key = value' config file")
    p.add_argument("--output", "-o", help="override the config output path")
    p.add_argument("--jobs", type=int, help="worker threads")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("assume", help="certify the spectral assumptions")
    _add_kernel_args(p)
    p.add_argument("--N", type=int, default=32, help="resolution for the lower bounds")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--ladder", type=int, nargs="+", help="M' ladder for the tail check")
    p.add_argument("--head-ladder", type=float, nargs="+", help="bandwidth ladder for the head check")
    p.add_argument("--cutoff", type=int)
    p.add_argument("--csv", help="also write constants as CSV")
    p.set_defaults(func=cmd_assume)

    p = sub.add_parser("verify", help="closed form against dense and Monte Carlo oracles")
    _add_kernel_args(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--target", action="append", choices=BATTERY_IDS)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ProfileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateClassError, SolverError, NonConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
