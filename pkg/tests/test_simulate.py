import dataclasses

import numpy as np
import pytest
from scipy.integrate import quad

from memwave import (ConfigError, ControlSignal, DomainSpec,
                     InternalConsistencyError, KernelSpec, TargetState,
                     achieved_coefficients, back_transform,
                     build_moment_problem, compute_eigenpairs,
                     compute_responses, make_grid, mode_energies, normalize,
                     route_gap, simulate_convolution, simulate_march,
                     synthesize, viscoelastic_family)

PI = np.pi
DOM = DomainSpec("interval", (PI,))
EXP_KERNEL = KernelSpec("exponential_sum", coefficients=(1.0,), rates=(1.0,))


def manual_control(grid, profile):
    """Wrap a raw boundary signal without going through synthesis."""
    prof = np.asarray(profile, float)[None, :]
    return ControlSignal(prof, np.zeros(2), np.zeros(2), 0.0, 1.0, 1.0, 0.0,
                         grid, (1, -1))


def zero_setup(T, h, modes, c=0.0):
    grid = make_grid(T, h)
    kz = normalize(KernelSpec("zero", c=c), grid)
    pairs = compute_eigenpairs(DOM, modes, alpha=c)
    return grid, kz, pairs


# ------------------------------------------------------------ trivial oracles


def test_zero_control_gives_zero_state():
    grid, kz, pairs = zero_setup(2.0, 2e-3, 4)
    ctrl = manual_control(grid, np.zeros(len(grid)))
    resp = compute_responses(kz, pairs)
    for res in (simulate_convolution(resp, kz, ctrl, 4),
                simulate_march(kz, pairs, ctrl, 4)):
        assert np.all(res.theta_T == 0.0)
        assert np.all(res.theta_t_T == 0.0)
        assert res.tail_energy == 0.0


def test_sine_formula_oracle():
    # memoryless undamped: position coefficient reduces to the windowed
    # sine transform of the control against the scaled boundary trace
    T = 2.0
    grid, kz, pairs = zero_setup(T, 1e-3, 3)
    poly = grid.t ** 2 * (T - grid.t)
    ctrl = manual_control(grid, poly)
    resp = compute_responses(kz, pairs)
    res = simulate_convolution(resp, kz, ctrl, 3)
    for p in pairs:
        b = p.beta.real
        trace = float(np.real(p.trace[0]))
        ref = -trace / b * quad(
            lambda s: np.sin(b * s) * (T - s) ** 2 * (T - (T - s)),
            0.0, T, limit=200)[0]
        assert abs(res.theta_T[p.index - 1] - ref) < 1e-5


def test_superposition():
    grid, kz, pairs = zero_setup(2.0, 2e-3, 5)
    ke = normalize(EXP_KERNEL, grid)
    pairs = compute_eigenpairs(DOM, 5, alpha=ke.alpha)
    resp = compute_responses(ke, pairs)
    f1 = np.sin(grid.t)
    f2 = np.cos(3 * grid.t) * grid.t
    r1 = simulate_convolution(resp, ke, manual_control(grid, f1), 5)
    r2 = simulate_convolution(resp, ke, manual_control(grid, f2), 5)
    r12 = simulate_convolution(resp, ke, manual_control(grid, f1 + f2), 5)
    assert np.max(np.abs(r12.theta_T - (r1.theta_T + r2.theta_T))) < 1e-10
    assert np.max(np.abs(r12.theta_t_T - (r1.theta_t_T + r2.theta_t_T))) < 1e-10


# -------------------------------------------------------------- route checks


def two_route_gap(h):
    grid = make_grid(2.0, h)
    ke = normalize(EXP_KERNEL, grid)
    pairs = compute_eigenpairs(DOM, 3, alpha=ke.alpha)
    ctrl = manual_control(grid, np.sin(grid.t) * (2.0 - grid.t))
    resp = compute_responses(ke, pairs)
    a = simulate_convolution(resp, ke, ctrl, 3)
    b = simulate_march(ke, pairs, ctrl, 3)
    return route_gap(a, b, ke, pairs, check=True), a, b, ke, pairs


def test_two_routes_converge_at_order_two():
    g_coarse = two_route_gap(2e-3)[0]
    g_fine = two_route_gap(1e-3)[0]
    assert g_coarse / g_fine >= 2.0 ** 1.9


def test_route_gap_check_trips_on_corruption():
    _, a, b, ke, pairs = two_route_gap(2e-3)
    bad = dataclasses.replace(a, theta_T=a.theta_T + 1.0)
    with pytest.raises(InternalConsistencyError):
        route_gap(bad, b, ke, pairs, check=True)


def test_energy_constant_after_control_release():
    # wave limit: once the boundary input stops, the modal energy
    # sum theta'^2 + lambda^2 theta^2 is a conserved quantity
    h, T_ctrl = 2e-3, 2.5
    grid_ext = make_grid(T_ctrl + 2 * PI, h)
    kz = normalize(KernelSpec("zero"), grid_ext)
    pairs = compute_eigenpairs(DOM, 6, alpha=0.0)
    cg = grid_ext.restrict(round(T_ctrl / h))
    ctrl = manual_control(cg, np.sin(2 * cg.t) ** 2)
    res = simulate_march(kz, pairs, ctrl, 6, trajectories=True)
    E = np.zeros(len(grid_ext))
    for n, (th, tht) in res.trajectories.items():
        E += tht.real ** 2 + res.lambda_sq[n - 1] * th.real ** 2
    cut = round(T_ctrl / h) + 1
    drift = np.max(np.abs(E[cut:] - E[cut])) / E[cut]
    assert drift <= 1e-4


# ------------------------------------------------------- coordinate changes


def test_back_transform_identity_and_round_trip():
    grid, kz, pairs = zero_setup(1.5, 2e-3, 3)
    ctrl = manual_control(grid, np.sin(grid.t))
    resp = compute_responses(kz, pairs)
    res = simulate_convolution(resp, kz, ctrl, 3, trajectories=True)
    ident = back_transform(res, 0.0)
    assert np.array_equal(ident["w_T"], res.theta_T)
    assert np.array_equal(ident["w_t_T"], res.theta_t_T)

    gamma = -0.5
    bt = back_transform(res, gamma)
    back = np.exp(2.0 * gamma * grid.T) * bt["w_T"]
    assert np.max(np.abs(back - res.theta_T)) < 1e-12
    # velocity rule checked pointwise along the trajectories
    et = np.exp(-2.0 * gamma * grid.t)
    for n, (wt, wtt) in bt["trajectories"].items():
        th, tht = res.trajectories[n]
        assert np.max(np.abs(wt - et * th)) < 1e-14
        assert np.max(np.abs(wtt - et * (tht - 2 * gamma * th))) < 1e-14


def test_back_transform_uses_kernel_gamma():
    grid = make_grid(1.0, 2e-3)
    ke = normalize(EXP_KERNEL, grid)
    assert ke.gamma == -0.5
    pairs = compute_eigenpairs(DOM, 2, alpha=ke.alpha)
    ctrl = manual_control(grid, grid.t * (1 - grid.t))
    resp = compute_responses(ke, pairs)
    res = simulate_convolution(resp, ke, ctrl, 2)
    bt = back_transform(res, ke.gamma)
    assert np.array_equal(res.w_T, bt["w_T"])
    assert np.array_equal(res.w_t_T, bt["w_t_T"])


def test_achieved_coefficients_degenerate_branch():
    dom = DomainSpec("interval", (PI,), q=0.75, c=0.5)
    pairs = compute_eigenpairs(dom, 2, alpha=0.5)
    assert pairs[0].in_J
    grid = make_grid(1.0, 1e-2)
    res_args = dict(w_T=np.zeros(2), w_t_T=np.zeros(2), tail_energy=0.0,
                    K=2, K_sim=2, lambda_sq=np.array([p.lambda_sq for p in pairs]),
                    beta=np.array([p.beta.real for p in pairs]), grid=grid,
                    route="manual")
    from memwave import SimResult
    res = SimResult(theta_T=np.array([0.2, 0.4]),
                    theta_t_T=np.array([0.3, 0.6]), **res_args)
    xi, eta = achieved_coefficients(res, pairs)
    assert xi[0] == 0.2 and eta[0] == 0.3          # velocity read directly
    assert eta[1] == pytest.approx(0.6 / pairs[1].beta.real)


def test_mode_energy_weighting():
    en = mode_energies(np.array([1.0, 2.0]), np.array([3.0, 4.0]),
                       np.array([0.0, 2.0]))
    assert en[0] == pytest.approx(1.0 + 9.0)       # degenerate: raw velocity
    assert en[1] == pytest.approx(4.0 + 4.0)       # scaled: (4/2)^2


# -------------------------------------------------------- end-to-end + tail


@pytest.fixture(scope="module")
def controlled_run():
    grid = make_grid(2.5 * PI, 2e-3)
    ke = normalize(EXP_KERNEL, grid)
    pairs = compute_eigenpairs(DOM, 24, alpha=ke.alpha)
    resp = compute_responses(ke, pairs)
    fam = viscoelastic_family([resp[n] for n in range(1, 7)])
    rng = np.random.default_rng(7)
    target = TargetState(rng.standard_normal(6) / np.arange(1, 7),
                         rng.standard_normal(6) / np.arange(1, 7), 6)
    sig = synthesize(build_moment_problem(fam, target))
    return ke, pairs, resp, target, sig


def test_controlled_modes_hit_target(controlled_run):
    ke, pairs, resp, target, sig = controlled_run
    res = simulate_convolution(resp, ke, sig, 24)
    xi, eta = achieved_coefficients(res, pairs)
    scale = np.linalg.norm(np.r_[target.xi, target.eta])
    err = np.linalg.norm(np.r_[xi[:6] - target.xi, eta[:6] - target.eta]) / scale
    # the convolution route shares its discrete ingredients with the
    # assembled family, so the hit is solver-precision, far below the
    # 1e-3 certification threshold
    assert err <= 1e-10


def test_tail_spillover_weakens_with_mode_index(controlled_run):
    ke, pairs, resp, _, sig = controlled_run
    res = simulate_convolution(resp, ke, sig, 24)
    assert np.isfinite(res.tail_energy) and res.tail_energy > 0
    en = mode_energies(res.theta_T, res.theta_t_T, res.beta)
    near, far = en[6:12], en[12:24]
    assert far.max() < near.max()
    assert far.mean() < near.mean()
    # doubling the simulated band only appends weaker modes
    half = simulate_convolution(resp, ke, sig, 12)
    assert np.max(np.abs(half.theta_T - res.theta_T[:12])) < 1e-14


# ------------------------------------------------------------- error paths


def test_grid_mismatch_rejected():
    grid, kz, pairs = zero_setup(2.0, 2e-3, 2)
    other = make_grid(2.0, 1e-2)
    ctrl = manual_control(other, np.zeros(len(other)))
    resp = compute_responses(kz, pairs)
    with pytest.raises(ConfigError):
        simulate_convolution(resp, kz, ctrl, 2)


def test_control_longer_than_simulation_rejected():
    grid, kz, pairs = zero_setup(2.0, 2e-3, 2)
    longer = make_grid(3.0, 2e-3)
    ctrl = manual_control(longer, np.zeros(len(longer)))
    resp = compute_responses(kz, pairs)
    with pytest.raises(ConfigError):
        simulate_convolution(resp, kz, ctrl, 2)


def test_missing_modes_rejected():
    grid, kz, pairs = zero_setup(2.0, 2e-3, 2)
    ctrl = manual_control(grid, np.sin(grid.t))
    resp = compute_responses(kz, pairs)
    with pytest.raises(ConfigError):
        simulate_convolution(resp, kz, ctrl, 4)       # responses stop at 2
    with pytest.raises(ConfigError):
        simulate_march(kz, pairs, ctrl, 4)
