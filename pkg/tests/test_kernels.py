import numpy as np
import pytest

from memwave import (ConfigError, KernelSpec, NormalizedKernel, TimeGrid,
                     convolve, make_grid, normalize, resolvent)

# closed forms used as oracles below (single decaying exponential M = e^{-t}):
#   gamma = -1/2, N(t) = 2 e^{-t} - e^{-2t}


@pytest.fixture(scope="module")
def grid():
    return make_grid(2.0, 1e-3)


@pytest.fixture(scope="module")
def exp_kernel(grid):
    return normalize(KernelSpec("exponential_sum", coefficients=(1.0,),
                                rates=(1.0,)), grid)


def test_zero_kernel_normalizes_to_one(grid):
    ker = normalize(KernelSpec("zero"), grid)
    assert ker.gamma == 0.0
    assert np.array_equal(ker.N, np.ones(len(grid)))
    assert np.array_equal(ker.Np, np.zeros(len(grid)))
    assert np.max(np.abs(ker.N1)) == 0.0


def test_normalization_endpoint_identities(exp_kernel):
    # the rescaling is built to give N(0)=1 and N'(0)=0 exactly in floats
    assert exp_kernel.N[0] == 1.0
    assert exp_kernel.Np[0] == 0.0
    assert exp_kernel.N1[0] == 0.0
    assert exp_kernel.gamma == -0.5
    assert exp_kernel.alpha == -0.5


def test_exponential_kernel_closed_form(exp_kernel, grid):
    t = grid.t
    assert np.max(np.abs(exp_kernel.N - (2 * np.exp(-t) - np.exp(-2 * t)))) < 1e-12
    expected_Np = -2 * np.exp(-t) + 2 * np.exp(-2 * t)
    assert np.max(np.abs(exp_kernel.Np - expected_Np)) < 1e-12
    # N1 = e^{-alpha t} N' with alpha = -1/2
    assert np.max(np.abs(exp_kernel.N1 - np.exp(0.5 * t) * expected_Np)) < 1e-12


def test_polynomial_kernel_normalization():
    grid = make_grid(1.0, 1e-3)
    # M(t) = 1 - t: gamma = -1/2, Ntilde = 1 + t - t^2/2
    ker = normalize(KernelSpec("polynomial", coefficients=(1.0, -1.0)), grid)
    t = grid.t
    expected = np.exp(-t) * (1 + t - 0.5 * t ** 2)
    assert np.max(np.abs(ker.N - expected)) < 1e-12


def test_convolution_is_exact_on_low_degrees(grid):
    h = grid.h
    one = np.ones(len(grid))
    t = grid.t
    # product-trapezoid integrates piecewise-linear integrands exactly
    assert np.max(np.abs(convolve(one, one, h) - t)) < 1e-12
    assert np.max(np.abs(convolve(t, one, h) - t ** 2 / 2)) < 1e-12
    assert convolve(one, one, h)[0] == 0.0


def test_convolution_commutes(grid):
    rng = np.random.default_rng(7)
    f = rng.standard_normal(len(grid))
    g = rng.standard_normal(len(grid))
    assert np.max(np.abs(convolve(f, g, grid.h) - convolve(g, f, grid.h))) < 1e-12


def test_convolution_order_two():
    # smooth nonsymmetric integrand: halving h must cut the error by ~4.
    # (sin * cos is a trap here: its endpoint derivatives cancel and the
    # trapezoid rule turns superconvergent on it)
    errs = []
    for h in (4e-3, 2e-3, 1e-3):
        g = make_grid(1.0, h)
        got = convolve(np.exp(g.t), np.sin(g.t), g.h)[-1]
        exact = 0.5 * (np.e - np.sin(1.0) - np.cos(1.0))
        errs.append(abs(got - exact))
    assert errs[0] / errs[1] > 3.6
    assert errs[1] / errs[2] > 3.6


def test_resolvent_sine_oracle(grid):
    # L + t*L = t has the closed solution L = sin t
    L = resolvent(grid.t.copy(), grid)
    assert np.max(np.abs(L - np.sin(grid.t))) < 5e-7


def test_resolvent_identity_holds(exp_kernel, grid):
    # defining equation L + N1*L = N1 checked by substitution
    L = exp_kernel.L
    lhs = L + convolve(exp_kernel.N1, L, grid.h)
    assert np.max(np.abs(lhs - exp_kernel.N1)) < 1e-8


def test_restrict_slices_every_field(exp_kernel):
    r = exp_kernel.restrict(500)
    assert r.grid.steps == 500
    for name in ("N", "Np", "N1", "N1p", "N1pp", "L"):
        assert np.array_equal(getattr(r, name), getattr(exp_kernel, name)[:501]), name


def test_tabulated_kernel_matches_closed_form(grid):
    t = grid.t
    m = np.exp(-t)
    ker_tab = normalize(KernelSpec("tabulated", samples=m, samples_d1=-m,
                                   samples_d2=m), grid)
    ker_cf = normalize(KernelSpec("exponential_sum", coefficients=(1.0,),
                                  rates=(1.0,)), grid)
    # exact derivative samples, but the running integral of M is O(h^2)
    assert np.max(np.abs(ker_tab.N - ker_cf.N)) < 1e-7
    assert np.max(np.abs(ker_tab.N1 - ker_cf.N1)) < 1e-7


def test_tabulated_without_derivatives_differentiates(grid):
    t = grid.t
    ker = normalize(KernelSpec("tabulated", samples=np.exp(-t)), grid)
    # numerical differentiation is second order; loose tolerance
    assert np.max(np.abs(ker.N - (2 * np.exp(-t) - np.exp(-2 * t)))) < 1e-5


def test_tabulated_rough_data_rejected():
    g = TimeGrid(1.0, 50)   # deliberately coarse
    rng = np.random.default_rng(0)
    noisy = np.exp(-g.t) + 50.0 * rng.standard_normal(len(g))
    with pytest.raises(ConfigError):
        normalize(KernelSpec("tabulated", samples=noisy), g)


def test_kernel_spec_validation():
    with pytest.raises(ConfigError):
        KernelSpec("nope")
    with pytest.raises(ConfigError):
        KernelSpec("exponential_sum", coefficients=(1.0,), rates=())
    with pytest.raises(ConfigError):
        normalize(KernelSpec("tabulated", samples=np.ones(7)), TimeGrid(1.0, 10))
