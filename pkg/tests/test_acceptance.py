"""End-to-end statistical acceptance checks on the shipped presets.

Every test here uses fixed seeds and documented tolerances; runtimes are
dominated by the Monte Carlo budgets, a few minutes in total.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from oulevy import (Constant, DiagonalModel, IndicatorBall, LevySpec,
                    bound_curve, build_jump_law, cm_density, cm_norm,
                    decompose_semigroup, delta2, endpoint_samples, fit_rate,
                    fit_bound_constant, gamma_t, gaussian_sample,
                    lemma31_check, mecke_identity_check, overlap_mass,
                    p1_weighted, run_mineka_coupling, sample_mineka_pairs,
                    semigroup_apply, tv_binned, tv_shift_projection)
from oulevy.cli import load_config
from oulevy.streams import substream


def preset_model():
    cfg = load_config("gaussian52-small")
    return cfg, cfg.model, LevySpec(Constant(1.0))


def test_cm_moments_on_random_models() -> None:
    # 100 random (model, h): the shift density averages to 1 and its
    # square to exp(sum q_k h_k^2), each within 3 stderr at 1e5 samples
    for i in range(100):
        rng = substream(901, "models", i)
        n = int(rng.integers(1, 9))
        mod = DiagonalModel(1.0 + 9.0 * rng.random(n), 2.0 * rng.random(n),
                            np.ones(n))
        g = rng.standard_normal(n)
        h = g * ((0.1 + 0.6 * rng.random()) / cm_norm(mod, g))
        z = gaussian_sample(mod, rng, 100_000)
        phi = cm_density(mod, h, z)
        rn = math.sqrt(len(phi))
        se1 = float(np.std(phi, ddof=1)) / rn
        assert abs(float(np.mean(phi)) - 1.0) <= 3.0 * se1, i
        oracle = math.exp(float(np.sum(mod.q * h * h)))
        p2 = phi * phi
        se2 = float(np.std(p2, ddof=1)) / rn
        assert abs(float(np.mean(p2)) - oracle) <= 3.0 * se2, i


def test_mecke_identity_three_functions() -> None:
    _, model, spec = preset_model()
    for fn in ("const", "small_jump", "endpoint_cos"):
        lhs, rhs, se = mecke_identity_check(spec, model, 2.0, fn, 1_000_000,
                                            substream(902, fn))
        assert abs(lhs - rhs) <= 3.0 * se + 1e-12, fn


def test_mineka_kernel_validity() -> None:
    _, model, spec = preset_model()
    a = np.zeros(8)
    a[0] = 0.5
    u, up, du = sample_mineka_pairs(spec, model, a, 400_000,
                                    substream(903, "pairs"))
    est = tv_binned(u[:, 0], up[:, 0], bins=8)
    assert est.value < 0.01
    n = len(du)
    sym = (du == 1).astype(float) - (du == -1)
    se_sym = float(np.std(sym, ddof=1)) / math.sqrt(n)
    assert abs(float(np.mean(sym))) <= 3.0 * se_sym
    ov = overlap_mass(spec, model, a, 400_000, substream(903, "ov"))
    plus = (du == 1).astype(float)
    pooled = math.hypot(float(np.std(plus, ddof=1)) / math.sqrt(n),
                        ov.stderr / 2.0)
    assert abs(float(np.mean(plus)) - ov.mass / 2.0) <= 3.0 * pooled
    m1 = DiagonalModel([1.0], [1.0], [1.0])
    ov1 = overlap_mass(LevySpec(Constant(1.0)), m1, [2.0], 400_000,
                       substream(903, "1d"))
    assert abs(ov1.mass - 0.31731050786291415) <= 3.0 * ov1.stderr


def test_coupling_endpoint_marginals() -> None:
    # both coupled chains, simulated jump by jump, match fresh direct
    # simulations coordinatewise with binned TV below 0.02 at 1e5 paths
    cfg, model, spec = preset_model()
    n = 100_000
    ex = np.empty((n, 8))
    ey = np.empty((n, 8))
    for i in range(n):
        tr = run_mineka_coupling(spec, model, cfg.x, cfg.y, 4.0,
                                 substream(904, "tr", i))
        ex[i] = tr.endpoint_x
        ey[i] = tr.endpoint_y
    dx = endpoint_samples(spec, model, cfg.x, 4.0, n, substream(904, "dx"))
    dy = endpoint_samples(spec, model, cfg.y, 4.0, n, substream(904, "dy"))
    for k in range(8):
        assert tv_binned(ex[:, k], dx[:, k], bins=6).value < 0.02, ("x", k)
        assert tv_binned(ey[:, k], dy[:, k], bins=6).value < 0.02, ("y", k)


def test_lemma31_identity_on_preset() -> None:
    _, model, _ = preset_model()
    spec = LevySpec(IndicatorBall(0.0, 1.0, 1.0))
    ball = (np.zeros(8), 1.0)
    x = np.zeros(8)
    x[0] = 0.5
    y = np.zeros(8)
    y[0] = 0.2
    for fn in ("const", "cos1"):
        lhs, rhs, se = lemma31_check(spec, model, x, y, 2.0, 0.5, fn, ball,
                                     1_000_000, substream(905, fn))
        assert abs(lhs - rhs) <= 3.0 * se + 1e-12, fn
    lhs, rhs, _ = lemma31_check(spec, model, x, np.zeros(8), 2.0, 0.5,
                                "const", ball, 50_000, substream(905, "zero"))
    assert lhs == rhs


def _decay_table(cfg, spec, seed: int):
    values, stderrs = [], []
    for t in cfg.times:
        ends = endpoint_samples(spec, cfg.model, cfg.x, t, 200_000,
                                substream(seed, "tv", t))
        v = semigroup_apply(cfg.model, t, cfg.x - cfg.y)
        est = tv_shift_projection(ends, v, rng=substream(seed, "boot", t))
        values.append(est.value)
        stderrs.append(est.stderr)
    return values, stderrs


def test_polynomial_rate_shape() -> None:
    cfg, model, spec = preset_model()
    values, stderrs = _decay_table(cfg, spec, 906)
    for i in range(len(values) - 1):
        slack = 2.0 * math.hypot(stderrs[i], stderrs[i + 1])
        assert values[i + 1] <= values[i] + slack
    ball = (np.zeros(8), 1.0)
    params = {"dist": float(np.linalg.norm(cfg.x - cfg.y)),
              "delta": lambda e: delta2(spec, model, e, ball)}
    c = fit_bound_constant("coupling_ii", params, cfg.times[0], values[0])
    curve = bound_curve("coupling_ii", {**params, "C": c}, cfg.times)
    for i in range(1, len(values)):
        assert curve.values[i] >= values[i] - 3.0 * stderrs[i], i
    positive = [(t, v) for t, v in zip(cfg.times, values) if v > 0]
    assert len(positive) >= 2
    if len(positive) >= 4:
        slope, _ = fit_rate([p[0] for p in positive],
                            [p[1] for p in positive], "power")
    else:
        slope = float(np.polyfit(np.log([p[0] for p in positive]),
                                 np.log([p[1] for p in positive]), 1)[0])
    assert slope <= -0.15


def test_exponential_rate_shape() -> None:
    cfg = load_config("z3-exponential")
    law = build_jump_law(cfg.spec, cfg.model)
    assert law.rate == pytest.approx(0.3680011674056626, rel=1e-9)
    values, stderrs = _decay_table(cfg, cfg.spec, 907)
    assert all(v > 0 for v in values)
    slope, _ = fit_rate(cfg.times, values, "exponential")
    lam = float(np.min(cfg.model.lam))
    assert slope <= -0.8 * law.rate * lam / (law.rate + lam)
    params = {"dist": float(np.linalg.norm(cfg.x - cfg.y)),
              "lam0": law.rate, "lam": lam}
    c = fit_bound_constant("exponential_z3", params, cfg.times[0], values[0])
    curve = bound_curve("exponential_z3", {**params, "C": c}, cfg.times)
    for i in range(1, len(values)):
        assert curve.values[i] >= values[i] - 3.0 * stderrs[i], i


def test_decomposition_and_gradient() -> None:
    _, model, spec = preset_model()
    parts = decompose_semigroup(spec, model, "const", np.zeros(8), 2.0,
                                200_000, substream(908, "p0"))
    assert abs(parts.p0_part - math.exp(-2.0)) <= 3.0 * parts.p0_stderr
    z0 = np.zeros(8)
    z0[0] = 1.0
    w, d, se = p1_weighted(spec, model, "cos1", np.zeros(8), z0, 0.1, 2.0,
                           1_000_000, substream(908, "p1"))
    assert abs(w - d) <= 3.0 * se
    # gradient-bound shape: finite differences of the jump part for 20
    # random unit-sup-norm functions stay under c * gamma_t across t,
    # with c = 3 x the worst ratio of one held-out function
    eps = 0.1
    rngf = substream(908, "f")
    ws = rngf.standard_normal((21, 8))
    phases = rngf.random(21) * 2.0 * math.pi
    ratios = np.zeros((21, 3))
    for j, t in enumerate((1.0, 2.0, 4.0)):
        ends, counts = endpoint_samples(spec, model, np.zeros(8), t, 200_000,
                                        substream(908, "fd", t),
                                        return_counts=True)
        shift = semigroup_apply(model, t, eps * z0)
        g = gamma_t(spec, model, t)
        live = (counts >= 1).astype(float)
        for i in range(21):
            f0 = np.cos(ends @ ws[i] + phases[i])
            f1 = np.cos((ends + shift) @ ws[i] + phases[i])
            fd = abs(float(np.mean((f1 - f0) * live))) / eps
            ratios[i, j] = fd / g
    c = 3.0 * float(np.max(ratios[0]))
    assert np.all(ratios[1:] <= c)


def _run_cli(args: list[str], threads: str | None = None) -> str:
    env = dict(os.environ)
    env.pop("OU_LEVY_THREADS", None)
    if threads is not None:
        env["OU_LEVY_THREADS"] = threads
    proc = subprocess.run([sys.executable, "-m", "oulevy.cli", *args],
                          capture_output=True, text=True, env=env, check=False)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def test_cli_determinism(tmp_path) -> None:
    verify_args = ["verify", "all", "--seed", "1", "--replicas", "2000"]
    first = _run_cli(verify_args)
    assert json.loads(first)["pass"] is True
    assert _run_cli(verify_args) == first
    assert _run_cli(verify_args, threads="4") == first

    tv_args = ["tv-decay", "--seed", "7", "--replicas", "2000"]
    outs = []
    for name, threads in (("r1", None), ("r2", None), ("r4", "4")):
        out = tmp_path / name
        _run_cli(tv_args + ["--out", str(out)], threads=threads)
        outs.append((out / "tv_decay.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
