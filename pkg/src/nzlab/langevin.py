"""Langevin ensembles, Kramers-Moyal estimation and 1-D Fokker-Planck solves.

Noise normalization: ``<Gamma_i(t) Gamma_j(t')> = 2 delta_ij delta(t - t')``, so a
Brownian increment over ``dt`` has variance ``2 dt``. With Stratonovich calculus
the Kramers-Moyal coefficients are ``D1 = h + g' g`` and ``D2 = g^2``.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowUpError, ConsistencyError, DomainError
from .reduction import ordered_map, pairwise_sum

CHUNK = 4096


# -- models -------------------------------------------------------------------

@dataclass(frozen=True)
class SDEModel:
    """``dx_i = h_i(x) dt + g_ij(x) dW_j`` (Stratonovich) with ``Var dW = 2 dt``.

    ``drift``: (P, N) -> (P, N); ``noise``: (P, N) -> (P, N, N);
    ``noise_jac``: (P, N) -> (P, N, N, N) holding ``d g_ij / d x_k`` at ``[..., i, j, k]``.
    """

    name: str
    dim: int
    drift: Callable
    noise: Callable
    noise_jac: Callable
    params: Dict[str, float] = field(default_factory=dict)


def _const_noise(P, n, g):
    return np.broadcast_to(np.asarray(g, dtype=float), (P, n, n)).copy()


def make_model(name: str, **params) -> SDEModel:
    """Model catalogue: ``ou``, ``brownian``, ``multiplicative``, ``wiener``, ``ou2d``."""
    if name == "ou":
        th, sg = params.get("theta", 1.0), params.get("sigma", 1.0)
        return SDEModel(name, 1, lambda x: -th * x, lambda x: _const_noise(len(x), 1, [[sg]]),
                        lambda x: np.zeros((len(x), 1, 1, 1)), {"theta": th, "sigma": sg})
    if name == "brownian":
        # m dv/dt = -alpha v + sqrt(alpha gamma T) Gamma
        m, a, kT = params.get("m", 1.0), params.get("alpha", 1.0), params.get("gammaT", 1.0)
        g = math.sqrt(a * kT) / m
        return SDEModel(name, 1, lambda v: -(a / m) * v, lambda v: _const_noise(len(v), 1, [[g]]),
                        lambda v: np.zeros((len(v), 1, 1, 1)), {"m": m, "alpha": a, "gammaT": kT})
    if name == "multiplicative":
        h0 = params.get("h0", 0.0)
        return SDEModel(name, 1, lambda x: np.full_like(x, h0), lambda x: x[:, :, None].copy(),
                        lambda x: np.ones((len(x), 1, 1, 1)), {"h0": h0})
    if name == "wiener":
        return SDEModel(name, 1, lambda x: np.zeros_like(x), lambda x: _const_noise(len(x), 1, [[1.0]]),
                        lambda x: np.zeros((len(x), 1, 1, 1)), {})
    if name == "ou2d":
        a = np.array(params.get("A", [[1.0, 0.3], [-0.3, 1.0]]), dtype=float)
        s = np.array(params.get("S", [[1.0, 0.0], [0.2, 0.8]]), dtype=float)
        return SDEModel(name, 2, lambda x: -x @ a.T, lambda x: _const_noise(len(x), 2, s),
                        lambda x: np.zeros((len(x), 2, 2, 2)), {"A": a.tolist(), "S": s.tolist()})
    raise DomainError(f"unknown model {name!r}")


# -- simulation ---------------------------------------------------------------

@dataclass
class Ensemble:
    model: str
    dt: float
    times: np.ndarray
    moments: np.ndarray            # (R, 4, N): raw moments E[x^k], k = 1..4
    moment_se: np.ndarray          # (R, 4, N)
    paths: Optional[np.ndarray]    # (R, P, N) when stored
    record_every: int
    stationary_from: int = 0

    def final(self) -> np.ndarray:
        if self.paths is None:
            raise ValueError("paths were not stored")
        return self.paths[-1]


def _step(model: SDEModel, x, dt, dW, scheme):
    h = model.drift(x)
    g = model.noise(x)
    gdW = np.einsum("pij,pj->pi", g, dW)
    if scheme == "ito":
        return x + h * dt + gdW
    xp = x + h * dt + gdW
    return x + 0.5 * (h + model.drift(xp)) * dt + 0.5 * (gdW + np.einsum("pij,pj->pi", model.noise(xp), dW))


def _run_chunk(args):
    model, x0, dt, steps, n_paths, seed, index, record_every, store, scheme = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    x = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths, model.dim)).copy()
    R = steps // record_every + 1
    sums = np.zeros((R, 4, model.dim))
    sq = np.zeros((R, 4, model.dim))
    rec = np.empty((R, n_paths, model.dim)) if store else None
    scale = math.sqrt(2.0 * dt)

    def record(r):
        p = np.stack([x ** k for k in range(1, 5)], axis=1)
        sums[r] = pairwise_sum(p, axis=0)
        sq[r] = pairwise_sum(p * p, axis=0)
        if store:
            rec[r] = x

    record(0)
    for s in range(1, steps + 1):
        dW = rng.standard_normal((n_paths, model.dim)) * scale
        x = _step(model, x, dt, dW, scheme)
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"non-finite state at step {s}", step=s)
        if s % record_every == 0:
            record(s // record_every)
    return sums, sq, rec


def simulate(model: SDEModel, x0, dt: float, steps: int, paths: int, seed: int = 0,
             record_every: int = 1, store_paths: bool = False, scheme: str = "stratonovich",
             workers: Optional[int] = None) -> Ensemble:
    """Heun (Stratonovich) ensemble; ``scheme="ito"`` switches to Euler-Maruyama for diagnostics.

    Paths are split into fixed chunks, each with its own ``SeedSequence([seed, chunk])``,
    so results do not depend on the worker count.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    if paths < 1 or steps < 0:
        raise DomainError("need paths >= 1 and steps >= 0")
    if scheme not in ("stratonovich", "ito"):
        raise DomainError(f"unknown scheme {scheme!r}")
    if model.dim > 4:
        raise DomainError("simulation supports dimension <= 4")
    sizes = [min(CHUNK, paths - i) for i in range(0, paths, CHUNK)]
    jobs = [(model, x0, dt, steps, sz, seed, k, record_every, store_paths, scheme) for k, sz in enumerate(sizes)]
    parts = ordered_map(_run_chunk, jobs, workers)
    sums = pairwise_sum(np.stack([p[0] for p in parts]), axis=0)
    sq = pairwise_sum(np.stack([p[1] for p in parts]), axis=0)
    mean = sums / paths
    var = np.maximum(sq / paths - mean * mean, 0.0)
    se = np.sqrt(var / max(paths - 1, 1))
    rec = np.concatenate([p[2] for p in parts], axis=1) if store_paths else None
    times = dt * record_every * np.arange(mean.shape[0])
    return Ensemble(model.name, dt, times, mean, se, rec, record_every)


# -- Kramers-Moyal ---------------------------------------------------------------

@dataclass
class KMEstimate:
    order: int
    x: np.ndarray
    value: np.ndarray
    err: np.ndarray
    tau_ladder: Tuple[float, ...]
    counts: np.ndarray
    mask: np.ndarray
    target: Optional[np.ndarray] = None

    def within(self, target: np.ndarray, k: float = 3.0) -> np.ndarray:
        return np.abs(self.value - target) <= k * self.err


def km_estimate(ensemble: Ensemble, order: int, tau_ladder: Sequence[int] = (1, 2, 4, 8),
                bins: int | np.ndarray = 12, batches: int = 20, min_count: int = 200,
                x_range: Optional[Tuple[float, float]] = None, component: int = 0,
                extrapolation: str = "cubic", target: Optional[Callable] = None) -> KMEstimate:
    """Binned conditional moments ``<dx^nu>/(nu! tau)`` extrapolated to ``tau -> 0``.

    ``tau_ladder`` is in units of recorded steps; error bars come from batch means
    over path groups. ``target(x)`` is averaged over the conditioning samples of each
    bin and returned in ``KMEstimate.target`` for like-for-like comparison.
    """
    if order not in (1, 2, 3, 4):
        raise DomainError("order must be 1..4")
    deg = {"linear": 1, "quadratic": 2, "cubic": 3}.get(extrapolation)
    if deg is None or len(tau_ladder) <= deg:
        raise DomainError("extrapolation must be linear, quadratic or cubic with enough tau values")
    X = ensemble.paths
    if X is None:
        raise ValueError("km_estimate needs stored paths")
    X = X[ensemble.stationary_from:, :, component]
    R, P = X.shape
    kmax = max(tau_ladder)
    start = X[: R - kmax]
    if x_range is None:
        lo, hi = np.quantile(start, [0.02, 0.98])
    else:
        lo, hi = x_range
    edges = np.linspace(lo, hi, bins + 1) if np.isscalar(bins) else np.asarray(bins)
    nb = len(edges) - 1
    idx = np.digitize(start, edges) - 1
    valid = (idx >= 0) & (idx < nb)
    dt = ensemble.dt * ensemble.record_every
    taus = np.array(tau_ladder, dtype=float) * dt
    fact = math.factorial(order)
    batch_of = (np.arange(P) * batches) // P
    # per (batch, bin, tau): sums of increments^order and counts
    S = np.zeros((batches, nb, len(taus)))
    C = np.zeros((batches, nb))
    xs = np.zeros((batches, nb))
    b_idx = np.broadcast_to(batch_of, start.shape)
    flat = np.where(valid, b_idx * nb + np.where(valid, idx, 0), -1).ravel()
    ok = flat >= 0
    C = np.bincount(flat[ok], minlength=batches * nb).reshape(batches, nb).astype(float)
    xs = np.bincount(flat[ok], weights=start.ravel()[ok], minlength=batches * nb).reshape(batches, nb)
    for j, k in enumerate(tau_ladder):
        inc = (X[k: R - kmax + k] - start).ravel() ** order
        S[:, :, j] = np.bincount(flat[ok], weights=inc[ok], minlength=batches * nb).reshape(batches, nb)
    counts = C.sum(axis=0)
    mask = counts >= min_count
    if not mask.all():
        warnings.warn(f"{int((~mask).sum())} KM bins masked (fewer than {min_count} samples)", stacklevel=2)

    def extrapolate(s, c):
        m = s / np.maximum(c, 1)[..., None] / (fact * taus)
        A = np.vstack([taus ** p for p in range(deg + 1)]).T
        coef = np.linalg.lstsq(A, m.reshape(-1, len(taus)).T, rcond=None)[0]
        return coef[0].reshape(m.shape[:-1])

    value = extrapolate(S.sum(axis=0), counts)
    per_batch = extrapolate(S, C)
    good = C > 0
    spread = np.array([np.std(per_batch[good[:, i], i], ddof=1) / math.sqrt(max(good[:, i].sum(), 2))
                       if good[:, i].sum() > 1 else np.inf for i in range(nb)])
    xbar = xs.sum(axis=0) / np.maximum(counts, 1)
    tavg = None
    if target is not None:
        tv = np.asarray(target(start.ravel()[ok]), dtype=float)
        tavg = np.bincount(flat[ok] % nb, weights=tv, minlength=nb) / np.maximum(counts, 1)
    return KMEstimate(order, xbar, np.where(mask, value, np.nan), np.where(mask, spread, np.nan),
                      tuple(taus), counts, mask, tavg)


def km_theoretical(model: SDEModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``D_i = h_i + sum_kj g_kj d_k g_ij`` and ``D_ij = sum_k g_ik g_jk`` at states ``x`` (P, N)."""
    x = np.asarray(x, dtype=float).reshape(-1, model.dim)
    g = model.noise(x)
    jac = model.noise_jac(x)
    D1 = model.drift(x) + np.einsum("pkj,pijk->pi", g, jac)
    D2 = np.einsum("pik,pjk->pij", g, g)
    return D1, D2


def _sqrt_psd(D: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(D)
    if np.any(w < -1e-12 * max(1.0, np.abs(w).max())):
        raise DomainError("diffusion matrix is not positive semi-definite")
    return (V * np.sqrt(np.maximum(w, 0.0))[..., None, :]) @ np.swapaxes(V, -1, -2)


def reconstruct_model(D1_fn: Callable, D2_fn: Callable, dim: int, step: float = 1e-5,
                      name: str = "reconstructed") -> SDEModel:
    """``g = D^{1/2}``, ``h_i = D_i - sum (D^{1/2})_kj d_k (D^{1/2})_ij`` (derivative by central differences)."""
    def noise(x):
        return _sqrt_psd(D2_fn(x))

    def jac(x):
        out = np.zeros((len(x), dim, dim, dim))
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = step
            out[..., k] = (noise(x + e) - noise(x - e)) / (2 * step)
        return out

    def drift(x):
        return D1_fn(x) - np.einsum("pkj,pijk->pi", noise(x), jac(x))

    return SDEModel(name, dim, drift, noise, jac, {})


def increment_correlation(ens: Ensemble, windows: Sequence[Tuple[int, int]]) -> Tuple[float, float]:
    """Correlation of increments over two disjoint record windows and its standard error."""
    (a0, a1), (b0, b1) = windows
    if not (a1 <= b0 or b1 <= a0):
        raise DomainError("windows must be disjoint")
    X = ens.paths[..., 0]
    u, v = X[a1] - X[a0], X[b1] - X[b0]
    r = float(np.corrcoef(u, v)[0, 1])
    return r, 1.0 / math.sqrt(len(u))


# -- 1-D Fokker-Planck --------------------------------------------------------------

@dataclass
class FPGrid1D:
    x_min: float
    x_max: float
    nx: int
    dt: float

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x_min + np.arange(1, self.nx) * self.dx


def _bernoulli(z):
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    big = np.abs(z) > 1e-8
    out[big] = z[big] / np.expm1(z[big])
    out[~big] = 1.0 - 0.5 * z[~big]
    return out


def fp_matrix_1d(D1: Callable, D2: Callable, grid: FPGrid1D) -> np.ndarray:
    """Banded ``(3, nx)`` generator of the Scharfetter-Gummel finite-volume scheme.

    Face flux ``J = (D2_f/dx) [B(-P) W_i - B(P) W_{i+1}]`` with ``P = a dx / D2_f`` and
    effective drift ``a = D1 - dD2/dx``; zero flux through both ends.
    """
    x, xf, dx = grid.x, grid.faces, grid.dx
    d2c = D2(x)
    df = D2(xf)
    if np.any(df <= 0) or np.any(d2c <= 0):
        raise DomainError("D2 must be positive on the grid")
    a = D1(xf) - (d2c[1:] - d2c[:-1]) / dx
    P = a * dx / df
    cl = df / dx * _bernoulli(-P)   # coefficient of W_i in J_{i+1/2}
    cr = df / dx * _bernoulli(P)    # coefficient of W_{i+1}
    n = grid.nx
    ab = np.zeros((3, n))
    # dW_i/dt = -(J_{i+1/2} - J_{i-1/2}) / dx
    ab[1, :-1] -= cl / dx
    ab[0, 1:] += cr / dx
    ab[1, 1:] -= cr / dx
    ab[2, :-1] += cl / dx
    return ab


def fp_solve_1d(D1: Callable, D2: Callable, W0: np.ndarray, grid: FPGrid1D, t_end: float,
                scheme: str = "implicit", mass_tol: float = 1e-10) -> np.ndarray:
    """Backward-Euler (or checked explicit) evolution of ``dW/dt = -(D1 W)' + (D2 W)''``."""
    W = np.asarray(W0, dtype=float).copy()
    mass0 = float(np.sum(W) * grid.dx)
    if abs(mass0 - 1.0) > 1e-8:
        raise DomainError(f"initial density has mass {mass0}")
    ab = fp_matrix_1d(D1, D2, grid)
    steps = int(round(t_end / grid.dt))
    if scheme == "explicit":
        diag = -ab[1]
        if grid.dt * diag.max() > 1.0:
            raise DomainError("explicit step violates the stability bound; reduce dt or use implicit")
    elif scheme != "implicit":
        raise DomainError(f"unknown scheme {scheme!r}")
    lhs = -grid.dt * ab
    lhs[1] += 1.0
    for s in range(steps):
        if scheme == "implicit":
            W = solve_banded((1, 1), lhs, W)
        else:
            W = W + grid.dt * (ab[1] * W + np.r_[ab[0, 1:] * W[1:], 0.0] + np.r_[0.0, ab[2, :-1] * W[:-1]])
        mass = float(np.sum(W) * grid.dx)
        if abs(mass - mass0) > mass_tol:
            raise ConsistencyError(f"mass drift {mass - mass0:.3e} at step {s + 1}")
    if np.any(W < -1e-14):
        raise ConsistencyError("negative density")
    return np.maximum(W, 0.0)


def model_coefficients(model: SDEModel) -> Tuple[Callable, Callable]:
    """Scalar ``(D1, D2)`` callables of a one-dimensional catalogue model."""
    if model.dim != 1:
        raise DomainError("model_coefficients needs a one-dimensional model")

    def d1(x):
        return km_theoretical(model, np.asarray(x, dtype=float).reshape(-1, 1))[0][:, 0]

    def d2(x):
        return km_theoretical(model, np.asarray(x, dtype=float).reshape(-1, 1))[1][:, 0, 0]
    return d1, d2


def fp_vs_histogram(model: SDEModel, ens: Ensemble, start_frac: float = 0.2, nx: int = 400,
                    grid_dt: float = 0.005, hist_bins: int = 50
                    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Evolve the ensemble histogram at ``start_frac`` of the horizon with the FP solver.

    The solver runs on ``nx`` cells; the comparison uses ``hist_bins`` coarse bins
    (``nx`` must be a multiple). Returns coarse centres, solver density, final
    histogram density and their L1 distance.
    """
    X = ens.paths
    if X is None or model.dim != 1:
        raise DomainError("fp_vs_histogram needs stored one-dimensional paths")
    if nx % hist_bins:
        raise DomainError("nx must be a multiple of hist_bins")
    r0 = int(round(start_frac * (len(ens.times) - 1)))
    lo, hi = np.quantile(X[r0:, :, 0], [0.0005, 0.9995])
    pad = 0.25 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    if model.name == "multiplicative":
        lo = max(lo, 1e-3 * hi)
    t_end = float(ens.times[-1] - ens.times[r0])
    steps = max(1, int(math.ceil(t_end / grid_dt)))
    grid = FPGrid1D(float(lo), float(hi), nx, t_end / steps)
    edges = np.linspace(lo, hi, nx + 1)
    h0, _ = np.histogram(X[r0, :, 0], bins=edges)
    W0 = h0 / (h0.sum() * grid.dx)
    d1, d2 = model_coefficients(model)
    W = fp_solve_1d(d1, d2, W0, grid, t_end, mass_tol=1e-8)
    Wc = W.reshape(hist_bins, -1).mean(axis=1)
    coarse = edges[:: nx // hist_bins]
    h1, _ = np.histogram(X[-1, :, 0], bins=coarse)
    bw = coarse[1] - coarse[0]
    H1 = h1 / (X.shape[1] * bw)
    return 0.5 * (coarse[1:] + coarse[:-1]), Wc, H1, float(np.sum(np.abs(Wc - H1)) * bw)


def _fd_derivs(f: Callable, x, h: float = 1e-3):
    x = np.asarray(x, dtype=float)
    fm2, fm1, f0, fp1, fp2 = (f(x - 2 * h), f(x - h), f(x), f(x + h), f(x + 2 * h))
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    return d1, d2


def backward_apply(D1: Callable, D2: Callable, f: Callable, x, convention: str = "adjoint",
                   df: Optional[Callable] = None, d2f: Optional[Callable] = None):
    """Backward operator on ``f``: ``D1 f' + D2 f''`` (adjoint of the forward operator).

    ``convention="printed"`` flips the drift term to ``-D1 f' + D2 f''``.
    """
    if df is None or d2f is None:
        f1, f2 = _fd_derivs(f, x)
    else:
        f1, f2 = df(x), d2f(x)
    sign = {"adjoint": 1.0, "printed": -1.0}.get(convention)
    if sign is None:
        raise DomainError(f"unknown convention {convention!r}")
    return sign * D1(x) * f1 + D2(x) * f2


def _fd4(v: np.ndarray, dx: float, order: int) -> np.ndarray:
    p = np.pad(v, 2, mode="constant")
    if order == 1:
        return (p[:-4] - 8 * p[1:-3] + 8 * p[3:-1] - p[4:]) / (12 * dx)
    return (-p[:-4] + 16 * p[1:-3] - 30 * p[2:-2] + 16 * p[3:-1] - p[4:]) / (12 * dx * dx)


def adjoint_residual(D1: Callable, D2: Callable, W: np.ndarray, f: np.ndarray, x: np.ndarray,
                     convention: str = "adjoint") -> float:
    """``|<L_fwd W, f> - <W, L_bwd f>|`` normalized by ``||W|| ||f||`` on a uniform grid."""
    dx = x[1] - x[0]
    fwd = -_fd4(D1(x) * W, dx, 1) + _fd4(D2(x) * W, dx, 2)
    sign = 1.0 if convention == "adjoint" else -1.0
    bwd = sign * D1(x) * _fd4(f, dx, 1) + D2(x) * _fd4(f, dx, 2)
    lhs = float(np.sum(fwd * f) * dx)
    rhs = float(np.sum(W * bwd) * dx)
    scale = math.sqrt(np.sum(W * W) * dx * np.sum(f * f) * dx)
    return abs(lhs - rhs) / scale


# -- moduli-averaged diagnostics (interpretation) ----------------------------------

def averaged_force_report(grid, level: int = 1, dt: float = 0.01, steps: int = 600, paths: int = 4000,
                          seed: int = 0) -> dict:
    """Weighted average over moduli nodes of a stationary-covariance check.

    Operational reading of a moduli-averaged force equation: at each node the
    metric ``h`` drives ``dX = -h X dt + Gamma``; the simulated stationary
    covariance is compared with the Lyapunov solution of ``h C + C h = 2``.
    """
    from scipy.linalg import solve_continuous_lyapunov
    x, y, w = grid.select(level)
    grams = grid.grams(level)
    devs = []
    for k, h in enumerate(grams):
        model = make_model("ou2d", A=h.tolist(), S=np.eye(len(h)).tolist()) if len(h) == 2 else \
            make_model("ou", theta=float(h[0, 0]), sigma=1.0)
        ens = simulate(model, np.zeros(model.dim), dt, steps, paths, seed=seed + k, store_paths=True,
                       record_every=steps)
        final = ens.paths[-1]
        C = np.cov(final.T).reshape(model.dim, model.dim)
        exact = solve_continuous_lyapunov(h, 2.0 * np.eye(len(h)))
        # standard error of a sample covariance entry
        se = np.sqrt((exact ** 2 + np.outer(np.diag(exact), np.diag(exact))) / paths)
        devs.append(float(np.max(np.abs(C - exact) / se)))
    devs = np.array(devs)
    return {"nodes": int(len(devs)), "weighted_mean_z": float(np.sum(w * devs) / np.sum(w)),
            "max_z": float(devs.max()), "interpretation": "node-wise OU with drift -h X, weighted by the moduli measure"}


# -- configuration and output ----------------------------------------------------

@dataclass
class LangevinConfig:
    model: str = "ou"
    params: Dict[str, object] = field(default_factory=dict)
    x0: List[float] = field(default_factory=lambda: [0.0])
    dt: float = 0.01
    steps: int = 500
    paths: int = 10000
    seed: int = 0
    record_every: int = 1
    scheme: str = "stratonovich"
    km: bool = True

    @classmethod
    def from_json(cls, text: str) -> "LangevinConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def build_model(self) -> SDEModel:
        return make_model(self.model, **self.params)


def run_config(cfg: LangevinConfig) -> Ensemble:
    model = cfg.build_model()
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.size == 1 and model.dim > 1:
        x0 = np.full(model.dim, float(x0[0]))
    return simulate(model, x0, cfg.dt, cfg.steps, cfg.paths, cfg.seed, cfg.record_every,
                    store_paths=cfg.km and model.dim == 1, scheme=cfg.scheme)


def write_moments_csv(ens: Ensemble, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "component", "m1", "m2", "m3", "m4", "se1", "se2", "se3", "se4"])
    for r, t in enumerate(ens.times):
        for i in range(ens.moments.shape[2]):
            w.writerow([f"{t:.17g}", i] + [f"{v:.17g}" for v in ens.moments[r, :, i]]
                       + [f"{v:.17g}" for v in ens.moment_se[r, :, i]])


def write_km_csv(estimates: Sequence[KMEstimate], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["order", "x", "value", "err", "count"])
    for est in estimates:
        for x, v, e, c in zip(est.x, est.value, est.err, est.counts):
            w.writerow([est.order, f"{x:.17g}", f"{v:.17g}", f"{e:.17g}", int(c)])
