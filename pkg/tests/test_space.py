"""Tests for the weighted radial space and its grid discretization."""

import numpy as np
import pytest
import mpmath as mp
from scipy.special import spherical_jn

from camscat.space import (
    SpaceParams,
    Kernel,
    build_grid,
    weight_w,
    measure_mu,
    norm_x,
    dual_norm,
    hs_matrix,
    hs_norm,
)


@pytest.fixture(scope="module")
def grid():
    return build_grid(SpaceParams(alpha=1.0, epsilon=0.1))


# ---------------------------------------------------------------- build_grid

def test_grid_layout_two_panels():
    g = build_grid(SpaceParams(alpha=1.0, epsilon=0.1, r_max=12.0, n_nodes=8, n_panels=2))
    assert g.n == 8
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] > 0 and g.nodes[-1] < 12.0
    assert np.all(g.weights > 0)


def test_grid_exponential_integral():
    # sum q_i e^{-2 R_i} against the closed form (1 - e^{-24})/2
    g = build_grid(SpaceParams(alpha=1.0, epsilon=0.1, r_max=12.0, n_nodes=64, n_panels=4))
    approx = np.sum(g.weights * np.exp(-2.0 * g.nodes))
    exact = (1.0 - np.exp(-24.0)) / 2.0
    assert abs(approx - exact) / exact < 1e-10


def test_grid_self_convergence():
    # integrand R/mu decays exponentially, so node doubling is convergent
    p1 = SpaceParams(alpha=1.0, epsilon=0.1, r_max=12.0, n_nodes=128, n_panels=4)
    p2 = SpaceParams(alpha=1.0, epsilon=0.1, r_max=12.0, n_nodes=256, n_panels=4)
    vals = []
    for p in (p1, p2):
        g = build_grid(p)
        vals.append(np.sum(g.weights * g.nodes / g.mu))
    assert abs(vals[0] - vals[1]) < 1e-12


def test_grid_determinism():
    p = SpaceParams(alpha=1.0, epsilon=0.1)
    g1, g2 = build_grid(p), build_grid(p)
    assert np.array_equal(g1.nodes, g2.nodes)
    assert np.array_equal(g1.weights, g2.weights)


def test_params_validation():
    with pytest.raises(ValueError):
        SpaceParams(alpha=1.0, n_nodes=4)
    with pytest.raises(ValueError):
        SpaceParams(alpha=1.0, r_max=-3.0)
    with pytest.raises(ValueError):
        SpaceParams(alpha=-1.0)
    with pytest.raises(ValueError):
        SpaceParams(alpha=1.0, epsilon=1.5)
    with pytest.raises(ValueError):
        SpaceParams(alpha=1.0, n_panels=0)
    with pytest.raises(ValueError):
        SpaceParams(alpha=1.0, n_nodes=10, n_panels=4)


def test_default_r_max_keeps_tail_small():
    p = SpaceParams(alpha=2.0)
    assert p.r_max * p.alpha >= 10.0


# --------------------------------------------------------------------- norms

def test_norm_zero(grid):
    assert norm_x(np.zeros(grid.n), grid) == 0.0
    assert dual_norm(np.zeros(grid.n), grid) == 0.0


def test_norm_homogeneity(grid):
    rng = np.random.default_rng(7)
    x = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    c = 2.0 - 3.0j
    assert np.isclose(norm_x(c * x, grid), abs(c) * norm_x(x, grid), rtol=1e-14)
    assert np.isclose(dual_norm(c * x, grid), abs(c) * dual_norm(x, grid), rtol=1e-14)


def test_norm_against_mpmath(grid):
    # ||e^{-2R}||^2 = int_0^inf R^0.9 (1+R)^1.2 e^{2R} e^{-4R} dR, exponentially
    # convergent, independently evaluated with mpmath
    x = np.exp(-2.0 * grid.nodes)
    val = norm_x(x, grid) ** 2
    ref = float(
        mp.quad(lambda R: R ** 0.9 * (1 + R) ** 1.2 * mp.e ** (-2 * R), [0, mp.inf])
    )
    assert abs(val - ref) / ref < 1e-10


def test_schwarz_inequality(grid):
    rng = np.random.default_rng(42)
    for _ in range(100):
        x = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        y = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        pairing = abs(np.sum(grid.weights * y * x))
        assert pairing <= dual_norm(y, grid) * norm_x(x, grid) * (1 + 1e-12)


def test_dual_norm_bessel_bound(grid):
    # dual norm of kR j_0(kR) at k=1, alpha=1 obeys the Q_0(3)/2 bound,
    # with Q_0(3) = ln(2)/2
    k = 1.0
    y = k * grid.nodes * spherical_jn(0, k * grid.nodes)
    q03 = 0.5 * np.log(2.0)
    assert dual_norm(y, grid) ** 2 <= 0.5 * q03


def test_vector_length_mismatch(grid):
    with pytest.raises(ValueError):
        norm_x(np.zeros(grid.n + 1), grid)
    with pytest.raises(ValueError):
        dual_norm(np.zeros(3), grid)


# ------------------------------------------------------------------ hs_norm

def test_hs_zero(grid):
    K = Kernel(np.zeros((grid.n, grid.n), dtype=complex), grid)
    assert hs_norm(K) == 0.0


def test_hs_rank_one_factorizes(grid):
    rng = np.random.default_rng(3)
    x = rng.standard_normal(grid.n) * np.exp(-2.0 * grid.nodes)
    y = rng.standard_normal(grid.n)
    K = Kernel(np.outer(x, y).astype(complex), grid)
    assert np.isclose(hs_norm(K), norm_x(x, grid) * dual_norm(y, grid), rtol=1e-13)


def test_hs_equals_double_sum(grid):
    rng = np.random.default_rng(11)
    K = Kernel(
        (rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n)))
        * np.exp(-2.0 * grid.nodes)[:, None],
        grid,
    )
    q, mu = grid.weights, grid.mu
    direct = np.sum(
        q[:, None] * q[None, :] * (mu[:, None] / mu[None, :]) * np.abs(K.matrix) ** 2
    )
    assert np.isclose(hs_norm(K) ** 2, direct, rtol=1e-13)


def test_hs_submultiplicative(grid):
    rng = np.random.default_rng(5)
    decay = np.exp(-grid.nodes)
    for _ in range(5):
        A = rng.standard_normal((grid.n, grid.n)) * decay[:, None]
        B = rng.standard_normal((grid.n, grid.n)) * decay[:, None]
        KA, KB = Kernel(A.astype(complex), grid), Kernel(B.astype(complex), grid)
        # kernel composition (A o B)(R,R'') = int A(R,R') B(R',R'') dR'
        comp = Kernel(A @ (grid.weights[:, None] * B), grid)
        assert hs_norm(comp) <= hs_norm(KA) * hs_norm(KB) * (1 + 1e-12)


def test_kernel_shape_mismatch(grid):
    with pytest.raises(ValueError):
        Kernel(np.zeros((3, 3)), grid)


def test_canonical_matrix_spectrum_rank_one(grid):
    # rank-one kernel: canonical matrix M has exactly one nonzero singular value
    x = np.exp(-2.0 * grid.nodes)
    y = grid.nodes * spherical_jn(0, grid.nodes)
    K = Kernel(np.outer(x, y).astype(complex), grid)
    s = np.linalg.svd(hs_matrix(K), compute_uv=False)
    assert s[1] / s[0] < 1e-14
    assert np.isclose(s[0], hs_norm(K), rtol=1e-13)


# --------------------------------------------------- refinement invariance

def test_norms_stable_under_grid_doubling():
    # exponentially decaying ingredients: doubling both resolution and
    # truncation radius moves the norms by less than 1e-8 relative
    p0 = SpaceParams(alpha=1.0, epsilon=0.1)
    p1 = SpaceParams(alpha=1.0, epsilon=0.1, r_max=40.0, n_nodes=320, n_panels=5)
    out = []
    for p in (p0, p1):
        g = build_grid(p)
        x = np.exp(-2.0 * g.nodes)
        y = g.nodes * spherical_jn(1, 1.7 * g.nodes) * 1.7
        K = Kernel(np.outer(x, y).astype(complex), g)
        out.append((norm_x(x, g), dual_norm(y, g), hs_norm(K)))
    for a, b in zip(*out):
        assert abs(a - b) / abs(b) < 1e-8
