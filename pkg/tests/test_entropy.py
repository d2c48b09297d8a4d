import numpy as np
import pytest

from horizonfv import (
    Background,
    ContractError,
    StateVector,
    build_uniform_mesh,
    cell_entropy_residuals,
    convex_decomposition_check,
    kruzhkov_pair,
    max_timestep,
    numerical_entropy_flux,
    numerical_flux,
    quadratic_pair,
    step,
)

LEVELS = (-0.75, -0.25, 0.0, 0.25, 0.75)


def test_numerical_entropy_flux_consistency(burgers):
    nf = numerical_flux("godunov", burgers)
    for k in LEVELS:
        pair = kruzhkov_pair(burgers, k)
        for w in (-0.9, -0.3, 0.0, 0.5, 0.8):
            got = numerical_entropy_flux(nf, burgers, k, w, w)
            assert got == pytest.approx(pair.F(w), abs=1e-14)
    # the worked value: w=0.5, k=0 gives f(0.5) - f(0) = 0.125
    assert numerical_entropy_flux(nf, burgers, 0.0, 0.5, 0.5) == pytest.approx(0.125, abs=1e-15)


def test_numerical_entropy_flux_degenerate_levels(burgers, rng):
    nf = numerical_flux("eo", burgers)
    u = rng.uniform(-1, 1, 20)
    v = rng.uniform(-1, 1, 20)
    plain = nf.evaluate(burgers, u, v)
    low = numerical_entropy_flux(nf, burgers, -1.0, u, v)
    high = numerical_entropy_flux(nf, burgers, 1.0, u, v)
    assert np.allclose(low, plain - burgers.f(-1.0), atol=1e-15)
    assert np.allclose(high, burgers.f(1.0) - plain, atol=1e-15)


def test_numerical_entropy_flux_single_valued_per_face(burgers, rng):
    # conservation: the construction is one evaluation per face, so the value
    # a cell sees at its right face equals what the neighbor sees at its left
    nf = numerical_flux("godunov", burgers)
    u, v = rng.uniform(-1, 1, 2)
    assert numerical_entropy_flux(nf, burgers, 0.25, u, v) == numerical_entropy_flux(
        nf, burgers, 0.25, u, v)


def _one_step(mesh, m, kind, values, cfl=0.9):
    nf = numerical_flux(kind, m)
    tau = cfl * max_timestep(mesh, m, nf.lipschitz_bound)
    state = StateVector(values=values, time=0.0, step_index=0)
    new_state, report = step(state, mesh, m, nf, tau)
    return state, new_state, report, nf, tau


def brute_force_transport_residuals(values, mesh, m, nf, fluxes, tau, k):
    """Scalar-loop recomputation of the per-face entropy residuals."""
    pair = kruzhkov_pair(m, k)

    def phi(a, b):
        return (nf.evaluate(m, max(a, k), max(b, k))
                - nf.evaluate(m, min(a, k), min(b, k)))

    n = values.size
    out = np.empty((n, 2))
    for i in range(n):
        v = values[i]
        left_state = values[i - 1] if i > 0 else values[0]
        right_state = values[i + 1] if i < n - 1 else values[-1]
        a_l = mesh.face_weights[i]
        a_r = mesh.face_weights[i + 1]
        dr = mesh.widths[i]
        fc = m.f(v)
        tilde_r = v - 2 * tau * a_r / dr * (fluxes[i + 1] - fc)
        tilde_l = v + 2 * tau * a_l / dr * (fluxes[i] - fc)
        cons = phi(v, v)
        out[i, 0] = pair.U(tilde_l) - pair.U(v) - 2 * tau * a_l / dr * (phi(left_state, v) - cons)
        out[i, 1] = pair.U(tilde_r) - pair.U(v) + 2 * tau * a_r / dr * (phi(v, right_state) - cons)
    return out.max(axis=1)


@pytest.mark.parametrize("kind", ("godunov", "eo", "rusanov"))
def test_residuals_match_brute_force(mesh_m1, burgers, rng, kind):
    values = rng.uniform(-1, 1, mesh_m1.n_cells)
    state, _, report, nf, tau = _one_step(mesh_m1, burgers, kind, values)
    for k in (-0.25, 0.0, 0.75):
        ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, k, tau)
        expected = brute_force_transport_residuals(values, mesh_m1, burgers, nf,
                                                   report.fluxes, tau, k)
        assert np.max(np.abs(ledger.per_cell_residuals - expected)) <= 1e-15
        assert ledger.worst_residual == np.max(ledger.per_cell_residuals)


def test_constant_state_flat_residuals_exact_zero(burgers):
    mesh = build_uniform_mesh(Background(0.0), 10.0, 30)
    state, _, report, nf, tau = _one_step(mesh, burgers, "godunov", np.full(30, 0.6))
    ledger = cell_entropy_residuals(state, report, mesh, burgers, nf, 0.25, tau)
    assert np.array_equal(ledger.per_cell_residuals, np.zeros(30))
    # dissipation and the R bookkeeping cancel exactly in real arithmetic
    assert abs(ledger.global_balance_gap) <= 1e-15 * ledger.balance_scale
    assert ledger.dissipation_sum >= 0.0


def test_plus_one_state_curved_residuals(mesh_m1, burgers):
    state, _, report, nf, tau = _one_step(mesh_m1, burgers, "godunov",
                                          np.ones(mesh_m1.n_cells))
    ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, 0.0, tau)
    assert np.max(np.abs(ledger.per_cell_residuals)) <= 1e-14
    assert abs(ledger.worst_residual_with_source) <= 1e-14  # source vanishes at the root
    assert abs(ledger.global_balance_gap) <= 1e-14


@pytest.mark.parametrize("mass", (0.0, 1.0))
def test_riemann_one_step_residuals(burgers, mass):
    mesh = build_uniform_mesh(Background(mass), 2 * mass + 10.0, 40)
    mid = 2 * mass + 5.0
    values = np.where(mesh.centers < mid, 0.8, -0.8)
    state, _, report, nf, tau = _one_step(mesh, burgers, "godunov", values)
    ledger = cell_entropy_residuals(state, report, mesh, burgers, nf, 0.0, tau)
    assert ledger.worst_residual <= 1e-14


@pytest.mark.parametrize("kind", ("godunov", "eo", "rusanov"))
@pytest.mark.parametrize("k", LEVELS)
def test_transport_residuals_nonpositive_randomized(mesh_m1, burgers, rng, kind, k):
    for _ in range(5):
        values = rng.uniform(-1, 1, mesh_m1.n_cells)
        state, _, report, nf, tau = _one_step(mesh_m1, burgers, kind, values,
                                              cfl=float(rng.uniform(0.2, 1.0)))
        ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, k, tau)
        assert ledger.worst_residual <= 1e-13
        assert ledger.dissipation_sum >= 0.0


def test_source_weighted_variant_is_sign_indefinite(mesh_m1, burgers):
    # reported for reference only: for a constant positive state on a curved
    # background the source-weighted right side is strictly negative while
    # the transport left side vanishes, so this variant cannot be a bound
    state, _, report, nf, tau = _one_step(mesh_m1, burgers, "godunov",
                                          np.full(mesh_m1.n_cells, 0.5))
    ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, 0.0, tau)
    assert np.max(np.abs(ledger.per_cell_residuals)) <= 1e-15
    assert ledger.worst_residual_with_source > 1e-4
    assert ledger.balance_gap_with_source > 0.0


def test_global_balance_nonpositive_randomized(mesh_m1, burgers, rng):
    for kind in ("godunov", "eo", "rusanov"):
        for _ in range(5):
            values = rng.uniform(-1, 1, mesh_m1.n_cells)
            state, _, report, nf, tau = _one_step(mesh_m1, burgers, kind, values)
            ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, 0.0, tau)
            assert ledger.global_balance_gap <= 1e-12 * ledger.balance_scale
            assert ledger.alpha == 1.0


def test_balance_tracks_quadratic_entropy_decay(mesh_m1, burgers, rng):
    # total quadratic entropy (plus dissipation and R bookkeeping) never grows
    values = rng.uniform(-1, 1, mesh_m1.n_cells)
    quad = quadratic_pair(burgers)
    state, new_state, report, nf, tau = _one_step(mesh_m1, burgers, "godunov", values)
    ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, 0.0, tau)
    direct = float(np.sum(mesh_m1.widths * (np.asarray(quad.U(new_state.values))
                                            - np.asarray(quad.U(values)))))
    # entropy change decomposes into flux transport, R terms, and dissipation;
    # the assembled gap must match the direct evaluation to round-off
    fq = np.asarray(quad.F(values))
    a = mesh_m1.face_weights
    flux_sum = tau * float(np.sum((a[1:] - a[:-1]) * fq))
    boundary = tau * float(a[-1] * fq[-1] - a[0] * fq[0])
    w_face = 0.5 * mesh_m1.widths
    from horizonfv.entropy import face_reconstruction
    tilde_l, tilde_r, full_l, full_r = face_reconstruction(state, report, mesh_m1, burgers, tau)
    r_terms = (np.asarray(quad.U(full_r)) - np.asarray(quad.U(tilde_r))
               + np.asarray(quad.U(full_l)) - np.asarray(quad.U(tilde_l)))
    gap_direct = direct + ledger.dissipation_sum - float(np.sum(w_face * r_terms)) - flux_sum + boundary
    assert gap_direct == pytest.approx(ledger.global_balance_gap, abs=1e-12)


def test_decomposition_identity(mesh_m1, burgers, rng):
    for kind in ("godunov", "eo", "rusanov"):
        values = rng.uniform(-1, 1, mesh_m1.n_cells)
        state, new_state, report, nf, tau = _one_step(mesh_m1, burgers, kind, values)
        assert convex_decomposition_check(state, new_state, report, mesh_m1, burgers) <= 1e-13


def test_decomposition_exact_for_uniform_states(mesh_m1, burgers):
    for value in (1.0, -1.0, 0.2):
        state, new_state, report, nf, tau = _one_step(mesh_m1, burgers, "godunov",
                                                      np.full(mesh_m1.n_cells, value))
        assert convex_decomposition_check(state, new_state, report, mesh_m1, burgers) <= 1e-16


def test_dimension_mismatch_rejected(mesh_m1, burgers):
    state, new_state, report, nf, tau = _one_step(mesh_m1, burgers, "godunov",
                                                  np.zeros(mesh_m1.n_cells))
    short = StateVector(values=np.zeros(mesh_m1.n_cells - 1), time=0.0, step_index=0)
    with pytest.raises(ContractError):
        cell_entropy_residuals(short, report, mesh_m1, burgers, nf, 0.0, tau)
    with pytest.raises(ContractError):
        convex_decomposition_check(state, short, report, mesh_m1, burgers)


def test_fixed_boundary_balance_reported_nan(mesh_m1, burgers, rng):
    from horizonfv import fixed_boundary
    nf = numerical_flux("godunov", burgers)
    tau = 0.5 * max_timestep(mesh_m1, burgers, nf.lipschitz_bound)
    outer = fixed_boundary(0.1)
    state = StateVector(values=rng.uniform(-1, 1, mesh_m1.n_cells), time=0.0, step_index=0)
    _, report = step(state, mesh_m1, burgers, nf, tau, outer=outer)
    ledger = cell_entropy_residuals(state, report, mesh_m1, burgers, nf, 0.0, tau, outer=outer)
    assert np.isnan(ledger.global_balance_gap)
    assert ledger.worst_residual <= 1e-13
