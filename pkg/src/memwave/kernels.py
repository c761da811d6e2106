"""Relaxation kernels and their normalized form.

The wave model carries a convolution memory term M * (Aw).  All later
stages work instead with the normalized kernel N produced by the
exponential state rescaling with rate gamma = -M(0)/2, which forces
N(0) = 1 and N'(0) = 0.  Those two identities are load-bearing (the
modal equations downstream simplify against them), so they are enforced
analytically per kernel family rather than trusted to quadrature.

Derivative chain used throughout, writing Nt for 1 + int_0^t M and
E(t) = exp(2*gamma*t):

    N    = E * Nt
    N'   = E * (2g*Nt + M)            ->  N'(0)  = 2g + M(0) = 0
    N''  = E * (4g^2*Nt + 4g*M + M')
    N''' = E * (8g^3*Nt + 12g^2*M + 6g*M' + M'')
    N1   = exp(-alpha t) * N'
    N1'  = exp(-alpha t) * (N'' - alpha N')
    N1'' = exp(-alpha t) * (N''' - 2 alpha N'' + alpha^2 N')

The third derivative of N (hence M'' for tabulated input) is only
needed by the refined closeness diagnostics; closed-form families
supply it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigError
from .grid import TimeGrid

KERNEL_FAMILIES = ("zero", "exponential_sum", "polynomial", "tabulated")


@dataclass(frozen=True)
class KernelSpec:
    """Relaxation kernel M(t) plus the velocity coefficient it pairs with.

    family one of:
      zero             M = 0 (memoryless comparator system)
      exponential_sum  M(t) = sum_k coefficients[k] * exp(-rates[k] t)
      polynomial       M(t) = sum_j coefficients[j] * t**j
      tabulated        samples of M (and optionally M', M'') on the run grid
    """

    family: str
    c: float = 0.0
    coefficients: tuple = ()
    rates: tuple = ()
    samples: Optional[np.ndarray] = None
    samples_d1: Optional[np.ndarray] = None
    samples_d2: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.family == "exponential_sum":
            if len(self.coefficients) != len(self.rates):
                raise ConfigError("exponential_sum needs matching coefficients and rates")
            if any(b < 0 for b in self.rates):
                raise ConfigError("exponential_sum rates must be nonnegative")
        if self.family == "tabulated" and self.samples is None:
            raise ConfigError("tabulated kernel needs samples of M")

    def m0(self) -> float:
        if self.family == "zero":
            return 0.0
        if self.family == "exponential_sum":
            return float(sum(self.coefficients))
        if self.family == "polynomial":
            return float(self.coefficients[0]) if self.coefficients else 0.0
        return float(self.samples[0])


@dataclass(frozen=True)
class NormalizedKernel:
    """Grid samples of the normalized kernel and its derived fields."""

    gamma: float
    alpha: float
    N: np.ndarray
    Np: np.ndarray      # N'
    N1: np.ndarray      # exp(-alpha t) N'
    N1p: np.ndarray
    N1pp: np.ndarray
    L: np.ndarray       # resolvent kernel of N1
    grid: TimeGrid
    spec: KernelSpec = field(repr=False, default=None)

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    def restrict(self, steps: int) -> "NormalizedKernel":
        """Restriction to the first `steps` intervals of the same grid.

        All stored fields are either pointwise in t or causal marches,
        so restriction is exact (the resolvent on [0, T'] is the slice
        of the resolvent on [0, T]).
        """
        g = self.grid.restrict(steps)
        k = steps + 1
        return NormalizedKernel(self.gamma, self.alpha, self.N[:k], self.Np[:k],
                                self.N1[:k], self.N1p[:k], self.N1pp[:k],
                                self.L[:k], g, self.spec)


def _closed_form_m(spec: KernelSpec, t: np.ndarray):
    """M, M', M'' and int_0^t M for the closed-form families."""
    if spec.family == "zero":
        z = np.zeros_like(t)
        return z, z.copy(), z.copy(), z.copy()
    if spec.family == "exponential_sum":
        M = np.zeros_like(t)
        Mp = np.zeros_like(t)
        Mpp = np.zeros_like(t)
        I = np.zeros_like(t)
        for a, b in zip(spec.coefficients, spec.rates):
            e = np.exp(-b * t)
            M += a * e
            Mp += -a * b * e
            Mpp += a * b * b * e
            # rate zero degenerates to a constant term
            I += a * t if b == 0 else (a / b) * (1.0 - e)
        return M, Mp, Mpp, I
    if spec.family == "polynomial":
        cs = np.asarray(spec.coefficients, dtype=float)
        M = np.polynomial.polynomial.polyval(t, cs)
        Mp = np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(cs)) \
            if len(cs) > 1 else np.zeros_like(t)
        Mpp = np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(cs, 2)) \
            if len(cs) > 2 else np.zeros_like(t)
        I = np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyint(cs))
        return M, Mp, Mpp, I
    raise ConfigError(f"no closed form for family {spec.family!r}")


def _tabulated_m(spec: KernelSpec, grid: TimeGrid):
    M = np.asarray(spec.samples, dtype=float)
    if M.shape != (grid.steps + 1,):
        raise ConfigError(f"tabulated samples shape {M.shape} does not match grid "
                          f"({grid.steps + 1} points)")
    h = grid.h
    if spec.samples_d1 is not None:
        Mp = np.asarray(spec.samples_d1, dtype=float)
    else:
        Mp = np.gradient(M, h, edge_order=2)
        # a second-difference roughness test: if the sampled kernel is too
        # coarse for stable differentiation the curvature estimate explodes
        rough = np.max(np.abs(np.diff(M, 2))) / (h * h)
        scale = max(1.0, np.max(np.abs(M)))
        if rough * h > 10.0 * scale:
            raise ConfigError("tabulated kernel too coarse to differentiate stably; "
                              "supply samples_d1/samples_d2")
    if spec.samples_d2 is not None:
        Mpp = np.asarray(spec.samples_d2, dtype=float)
    else:
        Mpp = np.gradient(Mp, h, edge_order=2)
    for name, arr in (("samples_d1", Mp), ("samples_d2", Mpp)):
        if arr.shape != M.shape:
            raise ConfigError(f"{name} shape {arr.shape} does not match samples")
    from scipy.integrate import cumulative_trapezoid
    I = cumulative_trapezoid(M, dx=h, initial=0.0)
    return M, Mp, Mpp, I


def convolve(f: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    """Product-trapezoidal causal convolution (f*g)(t_j) on a uniform grid.

    Equals h * (discrete linear convolution - half the two boundary
    products), which is the trapezoid rule applied to every partial
    integral at once; exact for piecewise-linear integrands.  The value
    at t = 0 is pinned to exactly zero.
    """
    if f.shape != g.shape:
        raise ConfigError(f"convolve shape mismatch {f.shape} vs {g.shape}")
    n = f.shape[0]
    full = fftconvolve(f, g)[:n]
    out = h * (full - 0.5 * (f[0] * g + g[0] * f))
    out[0] = 0.0
    return out


def resolvent(N1: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Resolvent kernel L of N1: solves L + N1*L = N1 by marching.

    N1(0) = 0 makes the product-trapezoid step explicit.
    """
    h = grid.h
    m = grid.steps
    L = np.empty(m + 1)
    L[0] = 0.0
    if abs(N1[0]) > 1e-14:
        raise ConfigError("resolvent requires N1(0) = 0")
    for j in range(1, m + 1):
        # trapezoid of int N1(t_j - s) L(s) ds; both end weights vanish
        acc = np.dot(N1[j - 1:0:-1], L[1:j]) if j > 1 else 0.0
        L[j] = N1[j] - h * acc
    return L


def normalize(spec: KernelSpec, grid: TimeGrid) -> NormalizedKernel:
    """Normalized kernel fields on the shared grid.

    Closed-form families get exact derivatives; tabulated input falls
    back to finite differences with a stability guard.
    """
    t = grid.t
    if spec.family == "tabulated":
        M, Mp, Mpp, I = _tabulated_m(spec, grid)
    else:
        M, Mp, Mpp, I = _closed_form_m(spec, t)

    m0 = spec.m0()
    gamma = -0.5 * m0
    alpha = spec.c + gamma

    Nt = 1.0 + I
    E2 = np.exp(2.0 * gamma * t)
    N = E2 * Nt
    # 2*gamma + M(0) = 0 exactly, so Np[0] is an exact zero
    Np = E2 * (2.0 * gamma * Nt + M)
    Npp = E2 * (4.0 * gamma ** 2 * Nt + 4.0 * gamma * M + Mp)
    Nppp = E2 * (8.0 * gamma ** 3 * Nt + 12.0 * gamma ** 2 * M + 6.0 * gamma * Mp + Mpp)

    Em = np.exp(-alpha * t)
    N1 = Em * Np
    N1[0] = 0.0
    N1p = Em * (Npp - alpha * Np)
    N1pp = Em * (Nppp - 2.0 * alpha * Npp + alpha ** 2 * Np)

    L = resolvent(N1, grid)
    return NormalizedKernel(gamma, alpha, N, Np, N1, N1p, N1pp, L, grid, spec)
