import math

import numpy as np
import pytest

from oulevy import (DiagonalModel, beta, cm_density, cm_density_squared_integral,
                    cm_log_density, cm_norm, fit_smoothing_constant,
                    gaussian_sample, make_gaussian_model, make_wiener_surrogate,
                    semigroup_apply, state_norm)
from oulevy.streams import substream


def test_model_validation() -> None:
    with pytest.raises(ValueError):
        DiagonalModel([], [], [])
    with pytest.raises(ValueError):
        DiagonalModel([1.0, -1.0], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        DiagonalModel([1.0], [-0.1], [1.0])
    with pytest.raises(ValueError):
        DiagonalModel([1.0], [0.0], [0.0])
    with pytest.raises(ValueError):
        DiagonalModel([1.0, 1.0], [0.0], [1.0, 1.0])


def test_semigroup_identity_at_zero() -> None:
    m = DiagonalModel([1.0, 1.0], [1.0, 2.0], [1.0, 1.0])
    assert np.array_equal(semigroup_apply(m, 0.0, [1.0, 1.0]), [1.0, 1.0])


def test_semigroup_scalar_value() -> None:
    m = DiagonalModel([1.0], [1.0], [1.0])
    out = semigroup_apply(m, 0.5, [2.0])
    assert out[0] == pytest.approx(1.2130613194252668, abs=1e-15)


def test_semigroup_rejects_negative_time() -> None:
    m = DiagonalModel([1.0], [1.0], [1.0])
    with pytest.raises(ValueError):
        semigroup_apply(m, -0.1, [1.0])


def test_semigroup_linear_and_composes() -> None:
    rng = substream(101, "semigroup")
    m = DiagonalModel([1.0, 2.0, 3.0], [0.5, 1.0, 2.0], [1.0, -1.0, 2.0])
    x = rng.standard_normal(3)
    y = rng.standard_normal(3)
    s, r = 0.7, 1.3
    both = semigroup_apply(m, s, semigroup_apply(m, r, x))
    direct = semigroup_apply(m, s + r, x)
    assert float(np.max(np.abs(both - direct))) <= 1e-12 * state_norm(x)
    lin = semigroup_apply(m, s, x + y)
    assert np.allclose(lin, semigroup_apply(m, s, x) + semigroup_apply(m, s, y),
                       rtol=0, atol=1e-14)


def test_gaussian_sample_variance() -> None:
    m = DiagonalModel([4.0], [0.0], [1.0])
    z = gaussian_sample(m, substream(102, "gs"), 1_000_000)
    assert float(np.mean(z)) == pytest.approx(0.0, abs=3e-3)
    assert float(np.var(z)) == pytest.approx(0.25, rel=0.01)


def test_gaussian_sample_uncorrelated_coordinates() -> None:
    m = DiagonalModel([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    z = gaussian_sample(m, substream(103, "gs3"), 1_000_000)
    c = np.corrcoef(z.T)
    off = c[np.triu_indices(3, k=1)]
    assert float(np.max(np.abs(off))) < 0.01


def test_cm_density_zero_shift() -> None:
    m = DiagonalModel([2.0, 3.0], [0.0, 0.0], [1.0, 1.0])
    assert cm_density(m, [0.0, 0.0], np.array([0.3, -0.7])) == 1.0


def test_cm_density_point_value() -> None:
    m = DiagonalModel([2.0], [0.0], [1.0])
    val = cm_density(m, [1.0], np.array([0.0]))
    assert val == pytest.approx(0.36787944117144233, abs=1e-15)


def test_cm_density_dimension_mismatch() -> None:
    m = DiagonalModel([1.0, 1.0], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        cm_density(m, [1.0], np.zeros(2))


def test_cm_density_normalization_and_second_moment() -> None:
    m = make_gaussian_model(4, 1.0, 2)
    h = np.array([0.3, -0.2, 0.1, 0.05])
    z = gaussian_sample(m, substream(104, "cm"), 200_000)
    phi = cm_density(m, h, z)
    n = math.sqrt(len(phi))
    assert abs(float(np.mean(phi)) - 1.0) <= 3.0 * float(np.std(phi, ddof=1)) / n
    phi2 = phi * phi
    target = cm_density_squared_integral(m, h)
    assert abs(float(np.mean(phi2)) - target) <= 3.0 * float(np.std(phi2, ddof=1)) / n


def test_cm_change_of_variables_trigonometric() -> None:
    m = make_gaussian_model(3, 1.0, 2)
    h = np.array([0.4, 0.1, -0.2])
    z = gaussian_sample(m, substream(105, "cov"), 200_000)
    f_shift = np.cos(z[:, 0] + h[0]) * np.cos(z[:, 1] + h[1])
    f_weight = np.cos(z[:, 0]) * np.cos(z[:, 1]) * cm_density(m, h, z)
    diff = f_shift - f_weight
    assert abs(float(np.mean(diff))) <= 3.0 * float(np.std(diff, ddof=1)) / math.sqrt(len(diff))


def test_cm_cocycle_exact() -> None:
    m = make_gaussian_model(5, 0.5, 1)
    rng = substream(106, "cocycle")
    g = 0.4 * rng.standard_normal(5)
    h = 0.4 * rng.standard_normal(5)
    z = gaussian_sample(m, rng, 5000)
    lhs = cm_log_density(m, g + h, z)
    rhs = cm_log_density(m, g, z) + cm_log_density(m, h, z - g)
    assert float(np.max(np.abs(lhs - rhs))) <= 1e-12 * (1.0 + float(np.max(np.abs(lhs))))


def test_cm_squared_integral_values() -> None:
    m1 = DiagonalModel([1.0], [0.0], [1.0])
    assert cm_density_squared_integral(m1, [0.0]) == 1.0
    assert cm_density_squared_integral(m1, [1.0]) == pytest.approx(2.718281828459045, abs=1e-12)


def test_beta_oracle_and_monotone() -> None:
    m1 = DiagonalModel([1.0], [0.0], [1.0])
    assert beta(m1, 0.5) == 1.0
    assert beta(m1, 3.0) == 1.0
    ks = np.arange(1, 17, dtype=float)
    m = DiagonalModel(ks**2, ks**2, np.ones(16))
    assert beta(m, 1.0) == pytest.approx(0.36787944117144233, abs=1e-15)
    vals = [beta(m, e) for e in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        beta(m, 0.0)


def test_make_gaussian_model_grids() -> None:
    m = make_gaussian_model(3, 1.0, 2)
    assert np.array_equal(m.q, [1.0, 4.0, 9.0])
    assert np.array_equal(m.lam, [1.0, 2.0, 3.0])
    assert np.array_equal(m.sigma, [1.0, 1.0, 1.0])
    m1 = make_gaussian_model(1, 1.0, 2)
    assert m1.q[0] == 1.0 and m1.lam[0] == 1.0
    m8 = make_gaussian_model(8, 0.5, 1)
    assert m8.n_modes == 8


def test_make_wiener_surrogate_eigenvalues() -> None:
    m = make_wiener_surrogate(2)
    assert m.q[0] == pytest.approx(2.4674011002723395, abs=1e-12)
    assert m.q[1] == pytest.approx(22.206609902451056, abs=1e-12)
    assert np.array_equal(m.q, m.lam)


def test_smoothing_constant_shape() -> None:
    m = make_wiener_surrogate(16)
    c1 = fit_smoothing_constant(m)
    grid = np.logspace(-3, 0, 121)
    for s in grid:
        assert float(np.max(m.q * np.exp(-m.lam * s))) <= c1 / s


def test_norms() -> None:
    m = DiagonalModel([4.0, 9.0], [0.0, 0.0], [1.0, 1.0])
    z = np.array([3.0, 4.0])
    assert state_norm(z) == pytest.approx(5.0, abs=1e-14)
    # H-norm squares the precisions: sum of q_k^2 z_k^2
    assert cm_norm(m, z) == pytest.approx(math.sqrt(16 * 9 + 81 * 16), abs=1e-12)
