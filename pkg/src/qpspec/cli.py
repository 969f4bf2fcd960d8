"""Command-line front end.

Subcommands: ``tqse``, ``convergence``, ``diophantine``, ``slice``, ``selftest``.
Every subcommand writes CSV (default) or JSON to ``--out`` or stdout.

Exit codes: 0 success, 1 selftest failure, 2 invalid configuration,
3 solver blow-up.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import tqse
from .core import slice_modulo_points
from .pam import convergents, diophantine_error

RUN_COLUMNS = ["method", "N", "L", "e_N", "wall_seconds", "aliasing_norm"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class CliConfig:
    subcommand: str
    methods: list[str] = field(default_factory=lambda: ["pm"])
    N: list[int] = field(default_factory=lambda: [8])
    L: list[int] = field(default_factory=list)
    M: int | None = None
    tau: float = 1e-7
    T: float = 1e-3
    out: str | None = None
    format: str = "csv"
    timing: bool = True
    jobs: int = 1
    seed: int = 0
    projection: str = "discrete"

    def validate(self):
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not self.N:
            raise ConfigError("N list is empty")
        if any(n < 1 for n in self.N):
            raise ConfigError("every N must be >= 1")
        for m in self.methods:
            if m not in tqse.METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if "pam" in self.methods and not self.L:
            raise ConfigError("pam needs at least one --L")
        if any(L < 1 for L in self.L):
            raise ConfigError("every L must be >= 1")
        if self.M is not None and self.M < 1:
            raise ConfigError("M must be >= 1")
        if not (self.tau > 0 and self.T > 0):
            raise ConfigError("tau and T must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _emit(rows: list[dict], columns: list[str], cfg: CliConfig) -> None:
    if cfg.format == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if row.get(k) is None else row[k] for k in columns})
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _problem(cfg: CliConfig) -> tqse.TqseProblem:
    return tqse.default_problem().replace(T_final=cfg.T, tau=cfg.tau)


def _one_run(args) -> dict:
    problem, method, N, L, M, projection = args
    reference = tqse.reference_solution(problem)
    _, rep = tqse.run(problem, method, N, L=L, M=M, reference=reference, projection=projection)
    return {
        "method": rep.method,
        "N": rep.N,
        "L": rep.L,
        "e_N": f"{rep.e_N:.10e}",
        "wall_seconds": f"{rep.wall_seconds:.6f}",
        "aliasing_norm": None if rep.aliasing_norm is None else f"{rep.aliasing_norm:.6e}",
    }


def _run_table(cfg: CliConfig) -> list[dict]:
    problem = _problem(cfg)
    tasks = []
    for method in cfg.methods:
        for N in cfg.N:
            if method == "pam":
                tasks.extend((problem, method, N, L, cfg.M, cfg.projection) for L in cfg.L)
            else:
                tasks.append((problem, method, N, None, None, cfg.projection))
    # populate the cache once so that workers only read it
    tqse.reference_solution(problem)
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_one_run, tasks))
    else:
        rows = [_one_run(t) for t in tasks]
    if not cfg.timing:
        for r in rows:
            r["wall_seconds"] = None
    return rows


def cmd_tqse(cfg: CliConfig) -> int:
    cfg.validate()
    _emit(_run_table(cfg), RUN_COLUMNS, cfg)
    return EXIT_OK


def cmd_convergence(cfg: CliConfig) -> int:
    """Error / cost sweep; the L column appears only when pam is in the sweep."""
    cfg.validate()
    cols = ["method", "N", "L", "e_N", "wall_seconds"] if "pam" in cfg.methods else ["method", "N", "e_N", "wall_seconds"]
    _emit(_run_table(cfg), cols, cfg)
    return EXIT_OK


def cmd_diophantine(cfg: CliConfig, alpha: float, lo: int, hi: int, n_convergents: int | None,
                    record_minima: bool) -> int:
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    if n_convergents is not None:
        if n_convergents < 1:
            raise ConfigError("--convergents must be >= 1")
        rows = [{"i": i, "p": c.p, "q": c.q} for i, c in enumerate(convergents(alpha, n_convergents))]
        _emit(rows, ["i", "p", "q"], cfg)
        return EXIT_OK
    if lo < 1 or hi < lo:
        raise ConfigError(f"empty or invalid L range {lo}..{hi}")
    Ls = np.arange(lo, hi + 1)
    err = diophantine_error(alpha, Ls)
    if record_minima:
        keep = err < np.minimum.accumulate(np.concatenate([[np.inf], err[:-1]]))
        Ls, err = Ls[keep], err[keep]
    rows = [{"L": int(L), "diophantine_error": f"{e:.10e}"} for L, e in zip(Ls, err)]
    _emit(rows, ["L", "diophantine_error"], cfg)
    return EXIT_OK


def cmd_slice(cfg: CliConfig, P: list[float], x_max: float, step: float) -> int:
    if not step > 0:
        raise ConfigError("step must be positive")
    if not x_max > 0:
        raise ConfigError("x_max must be positive")
    pts = slice_modulo_points(P, x_max, step)
    cols = ["x"] + [f"y{j + 1}" for j in range(pts.shape[1])]
    rows = []
    for i, p in enumerate(pts):
        row = {"x": f"{i * step:.12g}"}
        row.update({c: f"{v:.12g}" for c, v in zip(cols[1:], p)})
        rows.append(row)
    _emit(rows, cols, cfg)
    return EXIT_OK


def cmd_selftest(cfg: CliConfig) -> int:
    """Fast internal consistency checks; one line per check."""
    from . import core, pm, qsm

    rng = np.random.default_rng(cfg.seed)
    P = core.ProjectionMatrix([[1.0, math.sqrt(5.0)]])
    checks = {}

    k = rng.integers(-9, 9, size=(12, 2))
    f = core.QpCoefficientMap(P, k, rng.normal(size=12) + 1j * rng.normal(size=12))
    N = 3
    g = pm.interpolate(pm.sample_on_collocation(f, N), P)
    trunc, alias = pm.aliasing_decompose(f, N)
    gap = (g - trunc - alias).pruned(0.0)
    checks["aliasing identity"] = np.max(np.abs(gap.values), initial=0.0) < 1e-12 * max(1.0, core.parseval_l2_norm(f))

    # the collocation identity lives on the torus nodes y_j that carry x_j = P y_j
    same = pm.sample_on_collocation(g, N).values - pm.sample_on_collocation(f, N).values
    checks["collocation exactness"] = np.max(np.abs(same)) < 1e-10 * core.parseval_l2_norm(f)

    v = core.QpCoefficientMap(P, rng.integers(-2, 3, size=(4, 2)), rng.normal(size=4))
    psi = qsm.truncate(core.QpCoefficientMap(P, rng.integers(-N, N, size=(6, 2)), rng.normal(size=6)), N)
    fast = qsm.convolve(v, psi).to_map().as_dict()
    brute: dict = {}
    for kv, cv in v.as_dict().items():
        for kp, cp in psi.to_map().as_dict().items():
            kk = (kv[0] + kp[0], kv[1] + kp[1])
            if all(-N <= c < N for c in kk):
                brute[kk] = brute.get(kk, 0) + cv * cp
    checks["convolution vs brute force"] = all(abs(fast.get(kk, 0) - c) < 1e-12 for kk, c in brute.items()) and all(
        abs(c) < 1e-12 for kk, c in fast.items() if kk not in brute)

    checks["sqrt5 convergents"] = [c.q for c in convergents(math.sqrt(5.0), 6)] == [1, 4, 17, 72, 305, 1292]

    rows = [{"check": name, "result": "pass" if ok else "FAIL"} for name, ok in checks.items()]
    _emit(rows, ["check", "result"], cfg)
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", default="csv", choices=["csv", "json"])
    common.add_argument("--no-timing", action="store_true", help="leave the wall_seconds column empty")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    common.add_argument("--seed", type=int, default=0)

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--method", default=None, help="comma-separated subset of qsm,pm,pam")
    runs.add_argument("--N", type=_int_list, default=None, help="list of N, e.g. 2,4,8")
    runs.add_argument("--L", type=_int_list, default=[], help="supercell sizes for pam")
    runs.add_argument("--M", type=int, default=None, help="pam resolution per period (default 4N)")
    runs.add_argument("--tau", type=float, default=1e-7)
    runs.add_argument("--T", type=float, default=1e-3)
    runs.add_argument("--projection", default="discrete", choices=["discrete", "exact"])

    parser = argparse.ArgumentParser(prog="qpspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("tqse", parents=[common, runs], help="run the Schrodinger benchmark")
    sub.add_parser("convergence", parents=[common, runs], help="error / cost sweep over N")
    dio = sub.add_parser("diophantine", parents=[common], help="distance of L*alpha to the integers")
    dio.add_argument("--alpha", type=float, default=math.sqrt(5.0))
    dio.add_argument("--L-range", nargs=2, type=int, default=[1, 1300], metavar=("START", "STOP"))
    dio.add_argument("--convergents", type=int, default=None, metavar="K")
    dio.add_argument("--record-minima", action="store_true", help="only L whose error beats every smaller L")
    sl = sub.add_parser("slice", parents=[common], help="points of an irrational line folded onto the torus")
    sl.add_argument("--P", type=float, nargs="+", default=[1.0, math.sqrt(3.0)])
    sl.add_argument("--x-max", type=float, default=20 * math.pi)
    sl.add_argument("--step", type=float, default=0.1)
    sub.add_parser("selftest", parents=[common], help="quick consistency checks")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    cfg = CliConfig(args.subcommand, out=args.out, format=args.format, timing=not args.no_timing,
                    jobs=args.jobs, seed=args.seed)
    try:
        if args.subcommand in ("tqse", "convergence"):
            default_N = [2, 4, 8, 16] if args.subcommand == "convergence" else [8]
            cfg.methods = [m.strip().lower() for m in (args.method or "pm").split(",") if m.strip()]
            cfg.N = default_N if args.N is None else args.N
            cfg.L, cfg.M, cfg.tau, cfg.T, cfg.projection = args.L, args.M, args.tau, args.T, args.projection
            return cmd_tqse(cfg) if args.subcommand == "tqse" else cmd_convergence(cfg)
        if args.subcommand == "diophantine":
            return cmd_diophantine(cfg, args.alpha, *args.L_range, args.convergents, args.record_minima)
        if args.subcommand == "slice":
            return cmd_slice(cfg, args.P, args.x_max, args.step)
        return cmd_selftest(cfg)
    except ConfigError as exc:
        print(f"qpspec: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except tqse.SolverBlowUp as exc:
        print(f"qpspec: solver blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ValueError as exc:
        print(f"qpspec: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
