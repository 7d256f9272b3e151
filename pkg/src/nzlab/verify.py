"""Verification suites shared by the CLI and the acceptance tests.

Each suite returns a JSON-serialisable dict with a ``pass`` flag, the measured
worst residual and the tolerance it was held to.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Dict, List

import numpy as np

from .fokker_planck import (IDENTITIES, TestFunction, fp_apply, fp_form, lemma_identity_residual,
                            validate_ray_formula)
from .errors import ConsistencyError
from .lattice import GramMatrix, gram_from_tau
from .polyalg import Poly
from .resolvent import determine_sign, resolvent_identity_residual
from .theta import big_theta_pde_residual, heat_residual

SUITES = ("heat", "resolvent", "fp", "ray")


def random_tau(rng: np.random.Generator):
    """Uniform-in-box sample of the truncated fundamental domain by rejection."""
    while True:
        x = rng.uniform(-0.5, 0.5)
        y = rng.uniform(math.sqrt(0.75), 1.0)
        if x * x + y * y >= 1.0:
            return x, y


def random_lattice(rng: np.random.Generator, rank: int) -> GramMatrix:
    if rank == 1:
        return GramMatrix(np.array([[1.0]]))
    return gram_from_tau(random_tau(rng))


def _result(name: str, worst: float, tol: float, **extra) -> dict:
    out = {"suite": name, "max_residual": float(worst), "tolerance": tol, "pass": bool(worst <= tol)}
    out.update(extra)
    return out


def heat_suite(samples: int = 100, seed: int = 0) -> dict:
    """Termwise and FD-in-time residuals of the heat equation and the Theta PDE."""
    rng = np.random.default_rng(seed)
    exact, fd = 0.0, 0.0
    for _ in range(samples):
        rank = int(rng.integers(1, 3))
        H = random_lattice(rng, rank)
        x = rng.uniform(-1, 1, rank)
        t = rng.uniform(0.3, 3.0)
        T = math.log(t)
        exact = max(exact, heat_residual(H, x, t, fd_step=None),
                    big_theta_pde_residual(H, x, T, time_derivative="exact"))
        fd = max(fd, heat_residual(H, x, t, fd_step=1e-4),
                 big_theta_pde_residual(H, x, T, time_derivative="fd"))
    return {"suite": "heat", "exact": _result("heat_exact", exact, 1e-12),
            "fd": _result("heat_fd", fd, 1e-6), "pass": bool(exact <= 1e-12 and fd <= 1e-6)}


def resolvent_suite(samples: int = 100, seed: int = 0) -> dict:
    """Per-lattice resolvent identity at random (lattice, X, gamma)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        rank = int(rng.integers(1, 3))
        H = random_lattice(rng, rank)
        X = rng.uniform(-1, 1, rank)
        gamma = rng.uniform(0.0, 20.0)
        worst = max(worst, resolvent_identity_residual(H, X, gamma))
    return _result("resolvent", worst, 1e-6, sigma=determine_sign())


def random_test_function(rng: np.random.Generator, n: int, degree: int = 3) -> TestFunction:
    terms = {}
    for _ in range(4):
        e = tuple(int(v) for v in rng.integers(0, degree + 1, n))
        terms[e] = terms.get(e, 0.0) + complex(rng.normal(), rng.normal())
    return TestFunction(Poly(n, terms), rng.uniform(0.5, 1.5))


def fp_suite(functions: int = 20, points: int = 20, seed: int = 0) -> dict:
    """Pairwise agreement of the operator forms and the rearrangement identities."""
    rng = np.random.default_rng(seed)
    forms = ("mixed", "forward", "backward", "btemplate")
    good_ids = [i for i in IDENTITIES if not i.endswith("_printed")]
    worst_form, worst_id = 0.0, 0.0
    printed: Dict[str, float] = {f: 0.0 for f in ("forward_printed", "backward_printed")}
    printed.update({i: 0.0 for i in IDENTITIES if i.endswith("_printed")})
    for rank in (1, 2):
        for _ in range(functions):
            H = random_lattice(rng, rank)
            gamma = rng.uniform(0.0, 20.0)
            f = random_test_function(rng, rank)
            ops = {fm: fp_form(fm, H, gamma) for fm in forms + ("forward_printed", "backward_printed")}
            for _ in range(points):
                Y = rng.uniform(-1.5, 1.5, rank)
                vals = {fm: fp_apply(op, f, Y) for fm, op in ops.items()}
                for a, b in combinations(forms, 2):
                    worst_form = max(worst_form, abs(vals[a] - vals[b]))
                for fm in ("forward_printed", "backward_printed"):
                    printed[fm] = max(printed[fm], abs(vals[fm] - vals["mixed"]))
                for name in IDENTITIES:
                    r = lemma_identity_residual(name, f, Y, H)
                    if name in good_ids:
                        worst_id = max(worst_id, r)
                    else:
                        printed[name] = max(printed[name], r)
    return {"suite": "fp", "forms": _result("fp_forms", worst_form, 1e-9),
            "identities": _result("fp_identities", worst_id, 1e-10),
            "printed_variants": {k: float(v) for k, v in sorted(printed.items())},
            "pass": bool(worst_form <= 1e-9 and worst_id <= 1e-10)}


def ray_suite(gammas: List[float] = (14.134725141734695, 5.0)) -> dict:
    """Rank-1 ray formula against a windowed numerical transform."""
    worst = 0.0
    for g in gammas:
        try:
            worst = max(worst, validate_ray_formula(g, tol=np.inf))
        except ConsistencyError:
            worst = np.inf
    return _result("ray", worst, 1e-4)


def run_suites(names=SUITES, samples: int = 100, seed: int = 0) -> dict:
    runners = {
        "heat": lambda: heat_suite(samples, seed),
        "resolvent": lambda: resolvent_suite(samples, seed),
        "fp": lambda: fp_suite(seed=seed),
        "ray": lambda: ray_suite(),
    }
    report = {"seed": seed, "samples": samples, "suites": {}}
    for name in names:
        if name not in runners:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
        report["suites"][name] = runners[name]()
    report["pass"] = all(s["pass"] for s in report["suites"].values())
    return report
