"""Batch front-end: ``nzl zeta | zeros | verify | langevin``.

Exit codes: 0 ok, 2 usage, 3 numeric or consistency failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from filelock import FileLock

from .errors import NZLError, PoleError
from .moduli import build_grid, rank1_grid

log = logging.getLogger("nzlab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _f(v: float) -> str:
    return f"{float(v):.17g}"


@dataclass
class RunConfig:
    command: str
    rank: int = 1
    s_grid: Optional[Tuple[float, float, int, float, float, int]] = None
    gamma_range: Optional[Tuple[float, float]] = None
    levels: int = 4
    eps: float = 1e-17
    seed: int = 0
    cache: Optional[str] = None
    out: Optional[str] = None
    route: str = "direct"
    step: float = 0.1
    tol: float = 1e-8
    suites: List[str] = field(default_factory=list)
    samples: int = 100
    config: Optional[str] = None
    model: Optional[str] = None
    paths: Optional[int] = None
    steps: Optional[int] = None
    dt: Optional[float] = None

    def validate(self) -> None:
        if self.rank not in (1, 2):
            raise UsageError("--rank must be 1 or 2")
        if not self.eps > 0:
            raise UsageError("--eps must be positive")
        if self.levels < 1:
            raise UsageError("--levels must be >= 1")
        if self.gamma_range is not None and not self.gamma_range[0] < self.gamma_range[1]:
            raise UsageError("--gamma-range must be non-empty")
        if self.step <= 0 or self.tol <= 0:
            raise UsageError("--step and --tol must be positive")
        for path in (self.cache, self.out):
            if path:
                parent = os.path.dirname(os.path.abspath(path))
                if not os.path.isdir(parent):
                    raise OSError(f"directory {parent} does not exist")

    def grid(self):
        return rank1_grid() if self.rank == 1 else build_grid(self.levels, "gl6")


def _parse_floats(text: str, count: int, flag: str) -> List[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != count:
        raise UsageError(f"{flag} expects {count} comma-separated values")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"{flag}: could not parse {text!r}")


def s_points(grid) -> np.ndarray:
    re_lo, re_hi, n_re, im_lo, im_hi, n_im = grid
    re = np.linspace(re_lo, re_hi, int(n_re))
    im = np.linspace(im_lo, im_hi, int(n_im))
    return (re[:, None] + 1j * im[None, :]).ravel()


def _open_out(path: Optional[str]):
    return open(path, "w", newline="") if path else _Stdout()


class _Stdout(io.StringIO):
    def close(self):
        sys.stdout.write(self.getvalue())
        super().close()


# -- commands --------------------------------------------------------------------

def cmd_zeta(cfg: RunConfig) -> int:
    from .zeta import zeta_integral
    if cfg.s_grid is None:
        raise UsageError("zeta needs --s-grid")
    pts = s_points(cfg.s_grid)
    for s in pts:
        if abs(s) == 0.0 or abs(s - 1) == 0.0:
            raise PoleError(f"s = {s} is a pole")
    grid = cfg.grid()
    rows = []
    for s in pts:
        z = zeta_integral(cfg.rank, s, grid, eps=cfg.eps)
        rows.append((s.real, s.imag, z.value.real, z.value.imag, z.err))
    fh = _open_out(cfg.out)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["s_re", "s_im", "value_re", "value_im", "err"])
    for r in rows:
        w.writerow([_f(v) for v in r])
    fh.close()
    return EXIT_OK


def cmd_zeros(cfg: RunConfig) -> int:
    from .resolvent import averaged_phi_eval
    from .zeta import ZeroRecord, critical_line_eval, find_zeros, merge_zero_records
    if cfg.gamma_range is None:
        raise UsageError("zeros needs --gamma-range")
    if not cfg.cache:
        raise UsageError("zeros needs --cache")
    grid = cfg.grid()
    lo, hi = cfg.gamma_range
    routes = ("direct", "phi") if cfg.route == "both" else (cfg.route,)
    records: List[ZeroRecord] = []
    for route in routes:
        ev = None if route == "direct" else (lambda g: averaged_phi_eval(g, grid))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            records += find_zeros(cfg.rank, lo, hi, cfg.step, cfg.tol, grid, route, ev)
        for wmsg in caught:
            log.warning("%s route: %s", route, wmsg.message)
    lock = FileLock(cfg.cache + ".lock")
    with lock:
        merge_zero_records(cfg.cache, records)
    # both routes' residuals at every located ordinate
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "gamma", "tol", "route", "residual_direct", "err_direct",
                        "residual_phi", "err_phi"])
            for r in sorted(records, key=lambda r: (r.route, r.gamma)):
                vd, ed = critical_line_eval(cfg.rank, r.gamma, grid)
                vp, ep = averaged_phi_eval(r.gamma, grid)
                w.writerow([r.n, _f(r.gamma), _f(r.tol), r.route, _f(vd), _f(ed), _f(vp), _f(ep)])
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verify import SUITES, run_suites
    names = cfg.suites or list(SUITES)
    report = run_suites(names, samples=cfg.samples, seed=cfg.seed)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["pass"] else EXIT_NUMERIC


def cmd_langevin(cfg: RunConfig) -> int:
    from .langevin import (LangevinConfig, fp_vs_histogram, km_estimate, run_config, write_km_csv,
                           write_moments_csv)
    if cfg.config:
        with open(cfg.config) as fh:
            lc = LangevinConfig.from_json(fh.read())
    else:
        lc = LangevinConfig()
    for key in ("model", "paths", "steps", "dt"):
        v = getattr(cfg, key)
        if v is not None:
            setattr(lc, key, v)
    lc.seed = cfg.seed
    if lc.paths < 1:
        raise UsageError("--paths must be >= 1")
    try:
        model = lc.build_model()
    except NZLError as exc:
        raise UsageError(str(exc))
    ens = run_config(lc)
    prefix = cfg.out or "langevin"
    with open(prefix + "_moments.csv", "w", newline="") as fh:
        write_moments_csv(ens, fh)
    if lc.model in ("ou", "brownian"):
        target = _equipartition_target(model)
        m1, m2 = ens.moments[-1, 0, 0], ens.moments[-1, 1, 0]
        se = ens.moment_se[-1, 1, 0]
        ok = abs(m2 - target) <= 3 * se
        sys.stdout.write(f"equipartition {'PASS' if ok else 'FAIL'} <x^2>={_f(m2)} target={_f(target)} "
                         f"se={_f(se)} mean={_f(m1)}\n")
    if ens.paths is not None:
        ests = [km_estimate(ens, o) for o in (1, 2, 3, 4)]
        with open(prefix + "_km.csv", "w", newline="") as fh:
            write_km_csv(ests, fh)
        x, W, Hh, l1 = fp_vs_histogram(model, ens)
        with open(prefix + "_fp.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "fp_density", "histogram"])
            for row in zip(x, W, Hh):
                w.writerow([_f(v) for v in row])
        sys.stdout.write(f"fp_vs_histogram L1={_f(l1)}\n")
    return EXIT_OK


def _equipartition_target(model) -> float:
    p = model.params
    if model.name == "ou":
        # noise normalised to <Gamma Gamma> = 2 delta, so D2 = sigma^2
        return p["sigma"] ** 2 / p["theta"]
    return p["gammaT"] / p["m"]


COMMANDS = {"zeta": cmd_zeta, "zeros": cmd_zeros, "verify": cmd_verify, "langevin": cmd_langevin}


# -- argument parsing ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nzl", description="Numerical lattice zeta laboratory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--rank", type=int, default=1)
        sp.add_argument("--levels", type=int, default=4)
        sp.add_argument("--eps", type=float, default=1e-17)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")

    z = sub.add_parser("zeta", help="evaluate the zeta integral on a grid of s")
    common(z)
    z.add_argument("--s-grid", required=True, help="re_lo,re_hi,n_re,im_lo,im_hi,n_im")

    zr = sub.add_parser("zeros", help="locate critical-line zeros and update the cache")
    common(zr)
    zr.add_argument("--gamma-range", required=True, help="lo,hi")
    zr.add_argument("--cache", required=True)
    zr.add_argument("--route", choices=("direct", "phi", "both"), default="direct")
    zr.add_argument("--step", type=float, default=0.1)
    zr.add_argument("--tol", type=float, default=1e-8)

    v = sub.add_parser("verify", help="run verification suites and emit a JSON report")
    common(v)
    v.add_argument("--suite", action="append", default=[], help="heat, resolvent, fp or ray")
    v.add_argument("--samples", type=int, default=100)

    lg = sub.add_parser("langevin", help="simulate a catalogue SDE and write CSV tables")
    common(lg)
    lg.add_argument("--config", help="JSON LangevinConfig")
    lg.add_argument("--model")
    lg.add_argument("--paths", type=int)
    lg.add_argument("--steps", type=int)
    lg.add_argument("--dt", type=float)
    return p


def parse_config(argv: Sequence[str]) -> Tuple[RunConfig, bool]:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(command=ns.command, rank=ns.rank, levels=ns.levels, eps=ns.eps, seed=ns.seed,
                    out=ns.out)
    if ns.command == "zeta":
        vals = _parse_floats(ns.s_grid, 6, "--s-grid")
        if vals[2] < 0 or vals[5] < 0:
            raise UsageError("--s-grid counts must be non-negative")
        cfg.s_grid = (vals[0], vals[1], int(vals[2]), vals[3], vals[4], int(vals[5]))
    elif ns.command == "zeros":
        lo, hi = _parse_floats(ns.gamma_range, 2, "--gamma-range")
        cfg.gamma_range = (lo, hi)
        cfg.cache, cfg.route, cfg.step, cfg.tol = ns.cache, ns.route, ns.step, ns.tol
    elif ns.command == "verify":
        cfg.suites, cfg.samples = ns.suite, ns.samples
    elif ns.command == "langevin":
        cfg.config, cfg.model, cfg.paths, cfg.steps, cfg.dt = ns.config, ns.model, ns.paths, ns.steps, ns.dt
        if cfg.paths is not None and cfg.paths < 1:
            raise UsageError("--paths must be >= 1")
    cfg.validate()
    return cfg, ns.verbose


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, verbose = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"nzl: usage error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"nzl: I/O error: {exc}\n")
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"nzl: usage error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"nzl: I/O error: {exc}\n")
        return EXIT_IO
    except (NZLError, ValueError, FloatingPointError) as exc:
        sys.stderr.write(f"nzl: numeric error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
