"""Command line front end and reproducible output artifacts.

Subcommands
-----------
critical   table of critical rotation rates and mode determinants
spectrum   per-mode determinants and eigenvalues at a given rotation rate
branch     sweep one bifurcation branch, write CSV + profiles + summary JSON
evolve     integrate a branch profile, write the drift time series + verdict
verify     run the randomized/deterministic invariant suite

Configuration is a flat ``key = value`` text file plus command line
overrides; every output file embeds the resolved configuration as header
comments (CSV) or a ``config`` block (JSON).  Numbers in CSV files carry
17 significant digits; JSON summaries are rounded to 12.  Exit codes:
0 success, 2 usage error, 3 numerical failure.  The environment variable
``SCREWBIF_THREADS`` caps parallelism across independent evaluations.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import evolution, geometry, modes, reduction, spectral
from .branch import monolithic_crosscheck, solve_branch_point, sweep_branch
from .errors import ScrewbifError
from .evolution import drift_report
from .geometry import write_curve_csv
from .spectral import DEFAULT_N, Grid

CSV_FMT = "%.16e"


class UsageError(Exception):
    """Bad arguments or configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    k: int = 2
    R: float = 1.0
    N: int = DEFAULT_N
    lambda_max: float = 0.05
    n_points: int = 6
    t_end: float = 5.0
    dt: float = 0.0          # 0 means: use the dispersive step bound
    tol_inner: float = reduction.TOL_INNER
    tol_outer: float = 1e-10
    defect_max: float = evolution.DEFECT_MAX
    c_cfl: float = evolution.C_CFL
    output_dir: str = "."
    seed: int = 1234

    def __post_init__(self):
        if self.k < 2:
            raise UsageError(f"k must be >= 2, got {self.k}")
        if self.N < 16 or self.N % 2:
            raise UsageError(f"N must be even and >= 16, got {self.N}")
        for name in ("tol_inner", "tol_outer", "defect_max", "c_cfl"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        if self.lambda_max <= 0 or self.t_end <= 0:
            raise UsageError("lambda_max and t_end must be positive")
        if self.n_points < 4:
            raise UsageError("n_points must be at least 4")

    @property
    def grid(self) -> Grid:
        return Grid(self.R, self.N)

    def step(self) -> float:
        bound = self.c_cfl * (self.grid.L / self.N) ** 2
        if self.dt and self.dt > 0:
            return min(self.dt, bound)
        return bound


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values: dict = {}
    if path:
        field_types = {f.name: f.type for f in fields(RunConfig)}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key = value")
                key, raw = (tok.strip() for tok in line.split("=", 1))
                if key not in field_types:
                    raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
                if key == "output_dir":
                    values[key] = raw
                elif key in ("k", "N", "n_points", "seed"):
                    values[key] = int(raw)
                else:
                    values[key] = float(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc))


def _config_lines(cfg: RunConfig) -> list:
    return [f"{name} = {value}" for name, value in asdict(cfg).items()]


def _round12(x: float) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def _write_json(path: str, payload: dict, cfg: RunConfig | None) -> None:
    if cfg is not None:
        payload = {"config": asdict(cfg), **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: str, rows, comments=(), fmts=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(header + "\n")
        for row in rows:
            if fmts is None:
                fh.write(",".join(CSV_FMT % v for v in row) + "\n")
            else:
                fh.write(",".join(f % v for f, v in zip(fmts, row)) + "\n")


def thread_cap() -> int:
    raw = os.environ.get("SCREWBIF_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ----------------------------------------------------------------- critical


def cmd_critical(args) -> int:
    if args.k_max < args.k_min:
        raise UsageError(f"empty mode range {args.k_min}..{args.k_max}")
    if args.k_min < 2:
        raise UsageError("critical rotation rates require k >= 2")
    ks = range(args.k_min, args.k_max + 1)
    rows = []
    for k in ks:
        om = modes.critical_omega(k, args.R)
        for l in range(1, args.l_max + 1):
            rows.append((k, om, l, modes.mode_determinant(l, om, args.R)))
    print(f"{'k':>3} {'Omega_k':>22} {'min |det M_l|, l != k':>24}")
    for k in ks:
        om = modes.critical_omega(k, args.R)
        dets = [abs(modes.mode_determinant(l, om, args.R))
                for l in range(1, args.l_max + 1) if l != k]
        print(f"{k:>3} {om:>22.16g} {min(dets):>24.16g}")
    if args.out:
        comments = [f"critical: k_min = {args.k_min}, k_max = {args.k_max}, "
                    f"R = {args.R}, l_max = {args.l_max}"]
        _write_csv(args.out, "k,Omega_k,l,det_Ml", rows, comments,
                   fmts=("%d", CSV_FMT, "%d", CSV_FMT))
        print(f"wrote {args.out}")
    return 0


# ----------------------------------------------------------------- spectrum


def cmd_spectrum(args) -> int:
    if args.l_max < 1:
        raise UsageError("l_max must be >= 1")
    rows = []
    for l in range(1, args.l_max + 1):
        mm = modes.ModeMatrix(l, args.omega, args.R)
        e1, e2 = mm.eigenvalues
        rows.append((l, mm.determinant, e1, e2))
    comments = [f"spectrum: omega = {args.omega}, R = {args.R}, l_max = {args.l_max}"]
    if args.out:
        _write_csv(args.out, "l,det_Ml,eig1,eig2", rows, comments,
                   fmts=("%d", CSV_FMT, CSV_FMT, CSV_FMT))
        print(f"wrote {args.out}")
    else:
        print("l,det_Ml,eig1,eig2")
        for row in rows:
            print(f"{row[0]:d}," + ",".join(CSV_FMT % v for v in row[1:]))
    return 0


# ----------------------------------------------------------------- branch


def cmd_branch(cfg: RunConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    import warnings as _warnings
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        sweep = sweep_branch(cfg.k, cfg.R, cfg.lambda_max, cfg.n_points,
                             grid=cfg.grid)
    warning_text = "; ".join(str(w.message) for w in caught) or None

    rows = [(p.amplitude, p.omega, p.delta_v, p.c, p.v_axial,
             p.residual_sup, p.dist_to_sigma) for p in sweep.points]
    branch_csv = os.path.join(cfg.output_dir, "branch.csv")
    _write_csv(branch_csv, "lambda,Omega,deltaV,c,V,residual_sup,dist_to_sigma",
               rows, _config_lines(cfg))
    for i, p in enumerate(sweep.points):
        write_curve_csv(os.path.join(cfg.output_dir, f"profile_{i:04d}.csv"),
                        p.curve(),
                        _config_lines(cfg) + [f"lambda = {p.amplitude!r}"])

    target = -cfg.k ** 2 * (cfg.k ** 2 - 1) / (2.0 * cfg.R ** 3)
    estimate = sweep.dv_coefficient
    have_estimate = math.isfinite(estimate)
    summary = {
        "k": cfg.k,
        "R": cfg.R,
        "dv_coefficient_target": _round12(target),
        "dv_coefficient_estimate": _round12(estimate) if have_estimate else None,
        "dv_coefficient_rel_error": (_round12(abs(estimate - target)
                                              / abs(target))
                                     if have_estimate else None),
        "reachable_lambda_max": sweep.amplitudes[-1] if sweep.amplitudes else 0.0,
        "truncated": sweep.truncated,
        "warning": warning_text,
        "points": len(sweep.points),
        "max_residual_sup": _round12(max(p.residual_sup for p in sweep.points)),
        "max_dist_over_lambda": _round12(max(p.dist_to_sigma / abs(p.amplitude)
                                             for p in sweep.points)),
    }
    _write_json(os.path.join(cfg.output_dir, "summary.json"), summary, cfg)
    print(f"branch k={cfg.k}: dv coefficient estimate {estimate:.6g} "
          f"(target {target:g}), wrote {branch_csv}")
    return 0


# ----------------------------------------------------------------- evolve


def cmd_evolve(cfg: RunConfig, lam: float) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    point = solve_branch_point(cfg.k, cfg.R, lam, grid=cfg.grid,
                               tol=cfg.tol_outer)
    dt = cfg.step()
    report = drift_report(point, cfg.t_end, dt, c_cfl=cfg.c_cfl,
                          defect_max=cfg.defect_max)

    rows = zip(report.times, report.dist_sigma, report.z_center,
               report.pointwise_gap, report.length, report.arclength_defect)
    series_csv = os.path.join(cfg.output_dir, "evolve.csv")
    _write_csv(series_csv,
               "t,dist_sigma,z_center,pointwise_gap,length,arclength_defect",
               rows, _config_lines(cfg) + [f"lambda = {lam!r}", f"dt = {dt!r}"])
    snap_dir = os.path.join(cfg.output_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    for i, st in enumerate(report.states):
        write_curve_csv(os.path.join(snap_dir, f"snap_{i:04d}.csv"), st.curve,
                        _config_lines(cfg) + [f"t = {st.t!r}"])

    dist_var = float(report.dist_sigma.max() - report.dist_sigma.min())
    dist_ratio = (float(report.dist_sigma.max()) / abs(lam)) if lam else 0.0
    drift_linear = bool(point.delta_v < 0 and math.isfinite(report.t0)
                        and report.gamma > 0)
    verdict = {
        "lambda": lam,
        "dt": dt,
        "dist_bounded": bool(dist_var <= 1e-6),
        "dist_variation": _round12(dist_var),
        "sup_dist_over_lambda": _round12(dist_ratio),
        "drift_linear": drift_linear,
        "gamma": _round12(report.gamma),
        "t0": report.t0 if math.isfinite(report.t0) else None,
        "fitted_V": _round12(report.fitted_v),
        "branch_V": _round12(point.v_axial),
        "deltaV": _round12(point.delta_v),
    }
    _write_json(os.path.join(cfg.output_dir, "verdict.json"), verdict, cfg)
    print(f"evolve k={cfg.k} lambda={lam:g}: dist variation {dist_var:.3e}, "
          f"fitted V {report.fitted_v:.9g}, wrote {series_csv}")
    return 0


# ----------------------------------------------------------------- verify


def _verify_checks(cfg: RunConfig):
    """(name, callable) pairs; each returns (passed, detail)."""
    grid = cfg.grid
    rng_seed = cfg.seed

    def spectral_roundtrip():
        rng = np.random.default_rng(rng_seed)
        worst = 0.0
        for _ in range(5):
            f = spectral.random_field(grid, rng, grid.N // 6, parity="even",
                                      mean_free=True)
            worst = max(worst, spectral.sup_norm(
                spectral.differentiate(spectral.antiderivative(f)) - f))
        return worst <= 1e-12, f"sup error {worst:.3e}"

    def parity_algebra():
        rng = np.random.default_rng(rng_seed + 1)
        f = spectral.random_field(grid, rng, grid.N // 6, parity="odd")
        g = spectral.random_field(grid, rng, grid.N // 6, parity="odd")
        h = spectral.product(f, g)
        ok = (h.parity == "even"
              and spectral.differentiate(f).parity == "even"
              and abs(spectral.mean(spectral.differentiate(h))) < 1e-14)
        return ok, "odd*odd is even, d/ds flips parity, derivative mean 0"

    def frame_relations():
        t, n, b = geometry.frenet_frame(grid)
        R = grid.R
        worst = 0.0
        for vec, rate in ((t, n), (n, t)):
            for i in range(3):
                d = spectral.differentiate(vec.components[i])
                ref = rate.components[i] * ((1.0 / R) if vec is t else (-1.0 / R))
                worst = max(worst, spectral.sup_norm(d - ref))
        return worst <= 1e-12, f"sup error {worst:.3e}"

    def frame_identity():
        rng = np.random.default_rng(rng_seed + 2)
        mmax = max(4, grid.N // 8)
        p = geometry.FramePerturbation(
            u=0.05 * spectral.random_field(grid, rng, mmax, parity="odd"),
            v0=0.02,
            v_perp=0.05 * spectral.random_field(grid, rng, mmax, parity="even",
                                                mean_free=True),
            w=0.05 * spectral.random_field(grid, rng, mmax, parity="odd"))
        defect = geometry.tangential_identity_defect(p, 1.3, 0.05)
        return defect <= 1e-9, f"defect {defect:.3e}"

    def orbit_invariance():
        circ = geometry.circle_profile(grid)
        rng = np.random.default_rng(rng_seed + 3)
        arr = circ.array + 0.05 * np.vstack([
            spectral.random_field(grid, rng, grid.N // 8).values
            for _ in range(3)])
        x = geometry.Curve3.from_array(grid, arr)
        d0 = geometry.orbit_distance(x).dist
        moved = geometry.Curve3.from_array(grid, arr + np.array([[0.4], [-0.2], [1.0]]))
        a0 = 1.1
        rot = np.array([[math.cos(a0), -math.sin(a0), 0.0],
                        [math.sin(a0), math.cos(a0), 0.0], [0.0, 0.0, 1.0]])
        rotated = geometry.Curve3.from_array(grid, rot @ arr)
        shifted = x.shifted(0.3)
        worst = max(abs(geometry.orbit_distance(c).dist - d0)
                    for c in (moved, rotated, shifted))
        return worst <= 1e-9, f"max deviation {worst:.3e}"

    def self_adjoint():
        rng = np.random.default_rng(rng_seed + 4)
        mmax = grid.N // 6
        f = (spectral.random_field(grid, rng, mmax, "even", mean_free=True),
             spectral.random_field(grid, rng, mmax, "odd"))
        g = (spectral.random_field(grid, rng, mmax, "even", mean_free=True),
             spectral.random_field(grid, rng, mmax, "odd"))
        lf = modes.apply_linearized(1.3, *f)
        lg = modes.apply_linearized(1.3, *g)
        lhs = spectral.h2_inner(lf, g)
        rhs = spectral.h2_inner(f, lg)
        rel = abs(lhs - rhs) / max(abs(lhs), 1e-30)
        return rel <= 1e-9, f"relative asymmetry {rel:.3e}"

    def kernel_and_transversality():
        worst_k, worst_t = 0.0, 0.0
        for R in (0.5, 1.0, 2.0):
            # linear check: any grid resolving mode k works, and a small one
            # keeps the high-bin spectral dust (amplified by xi^2 inside the
            # operator) well under the annihilation tolerance
            gR = Grid(R, 64)
            for k in range(2, 9):
                kern = modes.kernel_vector(k, gR)
                om = modes.critical_omega(k, R)
                l1, l2 = modes.apply_linearized(om, kern.v_perp, kern.w)
                worst_k = max(worst_k, spectral.sup_norm(l1), spectral.sup_norm(l2))
                pair = spectral.h2_inner(
                    modes.apply_linearized_domega(kern.v_perp, kern.w),
                    (kern.v_perp, kern.w))
                target = (-2.0 * np.pi * R * k ** 2 * math.sqrt(k * k - 1.0)
                          * (1.0 + k ** 2 / R ** 2 + k ** 4 / R ** 4))
                worst_t = max(worst_t, abs(pair - target) / abs(target))
        ok = worst_k <= 1e-10 and worst_t <= 1e-9
        return ok, f"kernel sup {worst_k:.3e}, pairing rel {worst_t:.3e}"

    def branch_point_certificates():
        lam = min(0.02, cfg.lambda_max)
        point = solve_branch_point(cfg.k, cfg.R, lam, grid=grid,
                                   tol=cfg.tol_outer)
        r = geometry.residuals(point.perturbation, point.omega, point.delta_v)
        y = point.curve()
        _, variation = geometry.slip_velocity(y, point.omega, point.v_axial)
        tail = spectral.mode_amplitudes(point.reduced.v_perp)
        cut = max(1, (3 * grid.dealias_max) // 4)
        tail_ratio = float(tail[cut:].max() / max(tail.max(), 1e-300))
        ok = (point.residual_sup <= cfg.tol_outer
              and spectral.sup_norm(r.tangential) <= 1e-9
              and variation <= 1e-9)
        return ok, (f"residual {point.residual_sup:.2e}, slip var "
                    f"{variation:.2e}, spectral tail {tail_ratio:.2e}")

    return [
        ("spectral_roundtrip", spectral_roundtrip),
        ("parity_algebra", parity_algebra),
        ("frame_relations", frame_relations),
        ("frame_identity", frame_identity),
        ("orbit_invariance", orbit_invariance),
        ("self_adjoint", self_adjoint),
        ("kernel_and_transversality", kernel_and_transversality),
        ("branch_point_certificates", branch_point_certificates),
    ]


def cmd_verify(cfg: RunConfig) -> int:
    checks = _verify_checks(cfg)
    results = {}
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        futures = {name: pool.submit(fn) for name, fn in checks}
        for name, fut in futures.items():
            try:
                results[name] = fut.result()
            except Exception as exc:  # a crash is a failure, not an abort
                results[name] = (False, f"raised {type(exc).__name__}: {exc}")
    failed = 0
    for name, _fn in checks:
        passed, detail = results[name]
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        failed += 0 if passed else 1
    if cfg.output_dir != ".":
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_json(os.path.join(cfg.output_dir, "verify.json"),
                    {name: {"passed": results[name][0],
                            "detail": results[name][1]}
                     for name, _ in checks}, cfg)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 3


# ----------------------------------------------------------------- main


def _add_config_options(sub):
    sub.add_argument("--config", help="flat key = value configuration file")
    sub.add_argument("--k", type=int)
    sub.add_argument("--R", type=float)
    sub.add_argument("--N", type=int)
    sub.add_argument("--lambda-max", dest="lambda_max", type=float)
    sub.add_argument("--n-points", dest="n_points", type=int)
    sub.add_argument("--t-end", dest="t_end", type=float)
    sub.add_argument("--dt", type=float)
    sub.add_argument("--tol-inner", dest="tol_inner", type=float)
    sub.add_argument("--tol-outer", dest="tol_outer", type=float)
    sub.add_argument("--defect-max", dest="defect_max", type=float)
    sub.add_argument("--c-cfl", dest="c_cfl", type=float)
    sub.add_argument("--output-dir", dest="output_dir")
    sub.add_argument("--seed", type=int)


def _config_from_args(args) -> RunConfig:
    keys = ("k", "R", "N", "lambda_max", "n_points", "t_end", "dt",
            "tol_inner", "tol_outer", "defect_max", "c_cfl", "output_dir",
            "seed")
    overrides = {key: getattr(args, key, None) for key in keys}
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screwbif",
        description="Bifurcating screw motions of closed vortex filaments "
                    "under the binormal curvature flow")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("critical", help="critical rotation rates")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--l-max", type=int, default=20)
    p.add_argument("--out")

    p = sub.add_parser("spectrum", help="mode determinants and eigenvalues")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--l-max", type=int, default=20)
    p.add_argument("--out")

    p = sub.add_parser("branch", help="sweep one bifurcation branch")
    _add_config_options(p)

    p = sub.add_parser("evolve", help="integrate a branch profile")
    _add_config_options(p)
    p.add_argument("--lam", type=float, required=True,
                   help="branch amplitude to evolve")

    p = sub.add_parser("verify", help="run the invariant suite")
    _add_config_options(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "critical":
            return cmd_critical(args)
        if args.command == "spectrum":
            return cmd_spectrum(args)
        cfg = _config_from_args(args)
        if args.command == "branch":
            return cmd_branch(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg, args.lam)
        if args.command == "verify":
            return cmd_verify(cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScrewbifError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
