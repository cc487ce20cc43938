"""Total-variation estimators, integral bound evaluators and rate fitting.

TV between endpoint laws is never computed in full dimension: tv_binned
compares one- or two-coordinate projections on pooled-quantile bins
(a lower bound by data processing), tv_shift_projection exploits the
shift structure of the linear flow to reuse one sample set for both
kernels, and coupling_tv_upper turns the random-walk coupling's failure
probability into an upper bound.  Values follow the convention that
mutually singular probabilities are at distance 2.

delta1 and delta2 evaluate the restricted shift integrals entering the
coupling bounds by grid suprema over cumulative times s >= eps and unit
shift directions; bound_curve assembles the decay curves with the inner
infimum over eps = 2^-j, j = 0..20.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .coupling import run_mineka_batch, shift_vector
from .levy import (BoundedLipschitz, Constant, IndicatorBall, LevySpec,
                   StableLike, _radial_law, build_jump_law, rho0_values)
from .model import DiagonalModel, cm_log_density, gaussian_sample, state_norm
from .streams import substream

__all__ = [
    "TvEstimate",
    "BoundCurve",
    "tv_binned",
    "tv_shift_projection",
    "coupling_tv_upper",
    "delta1",
    "delta2",
    "bound_curve",
    "fit_bound_constant",
    "fit_rate",
]

_METHODS = ("binned", "projection", "coupling_upper")
_BOOTSTRAP = 100
_BOOT_SEED = 0x7B007


@dataclasses.dataclass(frozen=True)
class TvEstimate:
    """A TV estimate in [0, 2] with its role: projection-style estimates
    are lower bounds on the full-space distance, coupling_upper is an
    upper bound, all up to Monte Carlo error."""

    value: float
    stderr: float
    method: str
    n_samples: int
    n_bins: int | None = None
    direction: tuple | None = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")


def _default_bins(n: int) -> int:
    return min(256, math.ceil(math.sqrt(n) / 2.0))


def _quantile_edges(pooled: np.ndarray, n_bins: int) -> np.ndarray:
    edges = np.quantile(pooled, np.linspace(0.0, 1.0, n_bins + 1))
    return np.unique(edges)[1:-1]


def _bin_indices(x: np.ndarray, inner: np.ndarray) -> np.ndarray:
    return np.searchsorted(inner, x, side="right")


def tv_binned(samples_p, samples_q, bins: int | None = None,
              rng: np.random.Generator | None = None) -> TvEstimate:
    """Sum of |p_hat - q_hat| over pooled-quantile bins of a 1- or
    2-coordinate projection, with a 100-resample bootstrap stderr.

    Default bin count is ceil(sqrt(n)/2) capped at 256 (n the smaller
    side); a 2-column input uses a product grid with ceil(sqrt(bins))
    edges per axis.  Fewer than 1000 samples per side is an error.
    """
    p = np.asarray(samples_p, dtype=float)
    q = np.asarray(samples_q, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if q.ndim == 1:
        q = q[:, None]
    if p.shape[1] != q.shape[1]:
        raise ValueError("samples must share their projection dimension")
    if p.shape[1] not in (1, 2):
        raise ValueError("only 1- or 2-coordinate projections are supported")
    n_p, n_q = p.shape[0], q.shape[0]
    if min(n_p, n_q) < 1000:
        raise ValueError("need at least 1000 samples per side")
    n_bins = _default_bins(min(n_p, n_q)) if bins is None else int(bins)
    if p.shape[1] == 1:
        inner = _quantile_edges(np.concatenate([p[:, 0], q[:, 0]]), n_bins)
        ip = _bin_indices(p[:, 0], inner)
        iq = _bin_indices(q[:, 0], inner)
        total = len(inner) + 1
    else:
        per_axis = math.ceil(math.sqrt(n_bins))
        idx = []
        width = 1
        for axis in range(2):
            inner = _quantile_edges(np.concatenate([p[:, axis], q[:, axis]]), per_axis)
            idx.append((_bin_indices(p[:, axis], inner), _bin_indices(q[:, axis], inner), len(inner) + 1))
        ip = idx[0][0] * idx[1][2] + idx[1][0]
        iq = idx[0][1] * idx[1][2] + idx[1][1]
        total = idx[0][2] * idx[1][2]
    cp = np.bincount(ip, minlength=total).astype(float)
    cq = np.bincount(iq, minlength=total).astype(float)
    value = float(np.abs(cp / n_p - cq / n_q).sum())
    rs = rng if rng is not None else substream(_BOOT_SEED, n_p, n_q, total)
    pv = cp / cp.sum()
    qv = cq / cq.sum()
    boots = np.empty(_BOOTSTRAP)
    for b in range(_BOOTSTRAP):
        rp = rs.multinomial(n_p, pv) / n_p
        rq = rs.multinomial(n_q, qv) / n_q
        boots[b] = np.abs(rp - rq).sum()
    return TvEstimate(value=value, stderr=float(np.std(boots, ddof=1)),
                      method="binned", n_samples=min(n_p, n_q), n_bins=total)


def tv_shift_projection(samples, v, bins: int | None = None,
                        rng: np.random.Generator | None = None) -> TvEstimate:
    """TV between the law of the samples and its v-shift, on the v-projection.

    One simulation serves both kernels: the samples are projected onto
    v/||v|| and compared against themselves shifted by ||v||.  The
    bootstrap resamples path indices once per replicate so the shared-
    sample correlation is kept.  v = 0 returns 0 by definition.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (x.shape[1],):
        raise ValueError("shift vector must match the sample dimension")
    nv = float(np.linalg.norm(v))
    n = x.shape[0]
    if nv == 0.0:
        return TvEstimate(value=0.0, stderr=0.0, method="projection",
                          n_samples=n, direction=tuple(v))
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    s = x @ (v / nv)
    n_bins = _default_bins(n) if bins is None else int(bins)
    inner = _quantile_edges(np.concatenate([s, s + nv]), n_bins)
    ip = _bin_indices(s, inner)
    iq = _bin_indices(s + nv, inner)
    total = len(inner) + 1
    cp = np.bincount(ip, minlength=total).astype(float)
    cq = np.bincount(iq, minlength=total).astype(float)
    value = float(np.abs(cp / n - cq / n).sum())
    rs = rng if rng is not None else substream(_BOOT_SEED, n, total, 1)
    boots = np.empty(_BOOTSTRAP)
    for b in range(_BOOTSTRAP):
        idx = rs.integers(0, n, n)
        rp = np.bincount(ip[idx], minlength=total).astype(float)
        rq = np.bincount(iq[idx], minlength=total).astype(float)
        boots[b] = np.abs(rp / n - rq / n).sum()
    return TvEstimate(value=value, stderr=float(np.std(boots, ddof=1)),
                      method="projection", n_samples=n, n_bins=total,
                      direction=tuple(v))


def coupling_tv_upper(spec: LevySpec, model: DiagonalModel, x, y, t: float,
                      size: int, rng: np.random.Generator) -> TvEstimate:
    """2 * P(chains not coupled by t), an upper TV bound up to MC error."""
    batch = run_mineka_batch(spec, model, x, y, t, int(size), rng)
    return TvEstimate(value=batch.tv_upper, stderr=batch.tv_upper_stderr,
                      method="coupling_upper", n_samples=int(size))


def _unit_directions(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    raw = rng.standard_normal((count, n))
    norms = np.linalg.norm(raw, axis=1)
    norms[norms == 0] = 1.0
    return raw / norms[:, None]


def _shift_s_grid(model: DiagonalModel, eps: float) -> np.ndarray:
    """Master log grid of cumulative times, filtered to s >= eps.

    The master grid does not depend on eps, so larger eps values search
    nested subsets: with shared streams the grid suprema are then exactly
    monotone in eps.
    """
    pos = model.lam[model.lam > 0]
    s_max = max(8.0, 64.0 / float(np.min(pos))) if pos.size else 64.0
    master = np.geomspace(2.0**-20, s_max, 64)
    grid = master[master >= eps]
    return grid if grid.size else np.asarray([eps])


def _rho0_inf_ball(spec: LevySpec, model: DiagonalModel, ball: tuple) -> float:
    """inf of the family density over the closed ball (z0, r0)."""
    fam = spec.rho0
    z0 = np.asarray(ball[0], dtype=float)
    r0 = float(ball[1])
    if isinstance(fam, Constant):
        return fam.c
    if isinstance(fam, BoundedLipschitz):
        top = float(np.linalg.norm(z0)) + r0
        return fam.c / (1.0 + top / fam.scale)
    if isinstance(fam, IndicatorBall):
        cvec = np.zeros(model.n_modes)
        cv = np.asarray(fam.center, dtype=float)
        cvec[:cv.size] = cv
        inside = float(np.linalg.norm(z0 - cvec)) + r0 <= fam.radius + 1e-12
        return fam.c if inside else 0.0
    lo = max(float(np.linalg.norm(z0)) - r0, 0.0)
    hi = float(np.linalg.norm(z0)) + r0
    if lo <= 0 or hi >= fam.r0:
        return 0.0
    law = _radial_law(model, None)
    rr = np.linspace(lo, hi, 513)
    g = np.asarray(law.pdf(rr), dtype=float)
    if np.any(g <= 0):
        return 0.0
    return float(np.min(rr ** (-1.0 - fam.alpha) / g))


def delta1(spec: LevySpec, model: DiagonalModel, eps: float, ball: tuple,
           x_budget: int = 64, budget: int = 100_000,
           rng: np.random.Generator | None = None) -> float:
    """Grid supremum of the restricted squared-shift integral.

    Estimates sup over s >= eps and random unit x of the integral over
    B(z0, r0) of phi_b(z)^2 rho0(z - b)^2 / rho0(z) dmu, b = sigma^{-1} T_s x,
    sharing one z-batch across all grid points; the s -> infinity limit
    (b = 0, integrand rho0 on the ball) is always a candidate, and is the
    only one when x_budget = 0.  rho0 must be positive on the ball.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if rng is None:
        raise ValueError("delta1 needs an explicit rng")
    if _rho0_inf_ball(spec, model, ball) <= 0:
        raise ValueError("rho0 vanishes somewhere on the ball")
    z0 = np.asarray(ball[0], dtype=float)
    r0 = float(ball[1])
    z = gaussian_sample(model, rng, int(budget))
    dirs = _unit_directions(rng, int(x_budget), model.n_modes)
    zb = z[state_norm(z - z0) <= r0]
    scale = zb.shape[0] / z.shape[0]
    base = rho0_values(spec, model, zb) if zb.size else np.zeros(0)
    best = float(np.sum(base)) / z.shape[0]
    with np.errstate(divide="ignore"):
        log_base = np.log(base)
    for s in _shift_s_grid(model, eps):
        for j in range(dirs.shape[0]):
            b = shift_vector(model, float(s), dirs[j])
            logi = (2.0 * cm_log_density(model, b, zb)
                    + 2.0 * np.log(rho0_values(spec, model, zb - b))
                    - log_base)
            val = float(np.mean(np.exp(logi))) * scale if zb.size else 0.0
            best = max(best, val)
    return best


def delta2(spec: LevySpec, model: DiagonalModel, eps: float, ball: tuple,
           mode: str = "closed_form", x_budget: int = 32,
           budget: int = 100_000,
           rng: np.random.Generator | None = None) -> float:
    """Shift integral with the density floored by its ball infimum c0.

    closed_form returns (1/c0)(1 + exp(max_k q_k e^{-2 eps lam_k} / sigma_k^2)).
    numeric mirrors delta1's grid supremum over shifts, estimating the same
    relaxation (1/c0)(1 + E[phi_b^2]) by MC; the s-grid always contains eps
    itself and axis directions are always included, since the supremum is
    attained at s = eps on the axis of max_k.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    c0 = _rho0_inf_ball(spec, model, ball)
    if c0 <= 0:
        raise ValueError("inf of rho0 over the ball is zero")
    if mode == "closed_form":
        m = float(np.max(model.q * np.exp(-2.0 * eps * model.lam) / model.sigma**2))
        return (1.0 + math.exp(m)) / c0
    if mode != "numeric":
        raise ValueError("mode must be 'numeric' or 'closed_form'")
    if rng is None:
        raise ValueError("numeric delta2 needs an explicit rng")
    z = gaussian_sample(model, rng, int(budget))
    axes = np.eye(model.n_modes)
    dirs = np.concatenate([axes, _unit_directions(rng, int(x_budget), model.n_modes)])
    grid = np.concatenate([[eps], _shift_s_grid(model, eps)])
    best = 2.0
    for s in grid:
        scale = np.exp(-float(s) * model.lam) / model.sigma
        b = dirs * scale
        logphi2 = 2.0 * (z @ (model.q * b).T - 0.5 * np.sum(model.q * b * b, axis=1))
        val = 1.0 + float(np.max(np.mean(np.exp(logphi2), axis=0)))
        best = max(best, val)
    return best / c0


@dataclasses.dataclass(frozen=True)
class BoundCurve:
    """Evaluated decay bound C (1 + dist) * rate(t) on a time grid."""

    kind: str
    times: tuple
    values: tuple
    params: dict


_KINDS = ("coupling_i", "coupling_ii", "exponential_z3", "log_rate", "polynomial_52")
_EPS_GRID = tuple(2.0**-j for j in range(21))


def _require(params: dict, kind: str, *keys):
    for key in keys:
        if key not in params:
            raise ValueError(f"bound kind {kind!r} needs parameter {key!r}")


def bound_curve(kind: str, params: dict, times) -> BoundCurve:
    """Evaluate one decay bound on a positive time grid.

    Coupling kinds take a callable params["delta"] mapping eps to the
    corresponding integral and minimize eps + sqrt(delta(eps)/t) over
    eps = 2^-j, j = 0..20 (each delta evaluated once); the returned
    params record those values instead of the callable.  All kinds scale
    by params["C"] * (1 + params.get("dist", 0)).
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown bound kind {kind!r}")
    tgrid = np.asarray([float(t) for t in np.atleast_1d(times)])
    if tgrid.size == 0:
        raise ValueError("times must not be empty")
    # an exponential is defined at t = 0; every other kind diverges there
    floor_ok = tgrid >= 0 if kind == "exponential_z3" else tgrid > 0
    if not np.all(floor_ok):
        raise ValueError("times must be positive")
    _require(params, kind, "C")
    amp = float(params["C"]) * (1.0 + float(params.get("dist", 0.0)))
    record = {k: v for k, v in params.items() if not callable(v)}
    if kind in ("coupling_i", "coupling_ii"):
        _require(params, kind, "delta")
        evaluator = params["delta"]
        if not callable(evaluator):
            raise ValueError(f"bound kind {kind!r} needs a callable delta evaluator")
        deltas = np.asarray([max(float(evaluator(e)), 0.0) for e in _EPS_GRID])
        record["delta_values"] = {repr(e): float(dv) for e, dv in zip(_EPS_GRID, deltas)}
        eps_arr = np.asarray(_EPS_GRID)
        vals = amp * np.min(eps_arr[None, :] + np.sqrt(deltas[None, :] / tgrid[:, None]), axis=1)
    elif kind == "exponential_z3":
        _require(params, kind, "lam0", "lam")
        lam0, lam = float(params["lam0"]), float(params["lam"])
        vals = amp * np.exp(-lam0 * lam * tgrid / (lam0 + lam))
    elif kind == "log_rate":
        vals = amp / np.log1p(tgrid)
    else:
        _require(params, kind, "delta", "d")
        expo = 2.0 / (4.0 + float(params["d"]) * (1.0 + float(params["delta"])))
        vals = amp * tgrid**-expo
    return BoundCurve(kind=kind, times=tuple(float(t) for t in tgrid),
                      values=tuple(float(v) for v in vals), params=record)


def fit_bound_constant(kind: str, params: dict, t0: float, tv0: float) -> float:
    """Calibrate C so the curve passes through (t0, tv0); 0 when tv0 = 0."""
    if tv0 <= 0:
        return 0.0
    base = bound_curve(kind, {**params, "C": 1.0}, [t0]).values[0]
    return float(tv0 / base)


def fit_rate(times, values, model: str = "power") -> tuple[float, float]:
    """Least-squares decay fit; returns (exponent or rate, RMS residual).

    power fits log v against log t, exponential fits log v against t,
    inverse_log fits v against 1/log(1+t); the slope is returned.
    Needs at least 4 grid points and strictly positive values.
    """
    t = np.asarray([float(v) for v in np.atleast_1d(times)])
    v = np.asarray([float(u) for u in np.atleast_1d(values)])
    if t.size != v.size or t.size < 4:
        raise ValueError("need at least 4 (time, value) pairs")
    if np.any(v <= 0):
        raise ValueError("values must be strictly positive")
    if model == "power":
        xs, ys = np.log(t), np.log(v)
    elif model == "exponential":
        xs, ys = t, np.log(v)
    elif model == "inverse_log":
        xs, ys = 1.0 / np.log1p(t), v
    else:
        raise ValueError("model must be power, exponential or inverse_log")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return float(slope), float(math.sqrt(np.mean(resid**2)))
