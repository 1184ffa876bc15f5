import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgmsim.dynamics import (
    TimeGrid,
    analytic_amplitudes,
    analytic_state,
    evolve_closed,
    evolve_master,
    lindblad_rhs,
    oscillation_period,
    rk4_step_map,
    to_simulation_frame,
)
from wgmsim.errors import SolverGuardError
from wgmsim.hilbert import DimensionLayout, make_layout, partial_trace, subsystem_operator
from wgmsim.model import (
    CollapseChannel,
    build_collapse_channels,
    build_hamiltonian,
    excitation_number,
    symmetric_params,
)
from wgmsim.sweep import initial_vector

SQ2 = math.sqrt(2) / 2


def random_density(dim, rng):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def system(**kw):
    p = symmetric_params(**kw)
    layout = p.layout()
    return p, layout, build_hamiltonian(p, layout), build_collapse_channels(p, layout)


def bell(p):
    return initial_vector("superposition", math.pi / 4, p)


# --- grid ----------------------------------------------------------------

def test_time_grid():
    g = TimeGrid(0, 2, 4)
    assert g.dt == 0.5
    np.testing.assert_array_equal(g.points(), [0, 0.5, 1, 1.5, 2])
    for bad in [(1, 1, 3), (0, 1, 0), (0, math.inf, 3)]:
        with pytest.raises(ValueError):
            TimeGrid(*bad)


# --- closed evolution ----------------------------------------------------

def test_zero_hamiltonian_is_static():
    psi0 = np.array([0.6, 0.8j])
    traj = evolve_closed(np.zeros((2, 2)), psi0, TimeGrid(0, 5, 10))
    np.testing.assert_array_equal(traj.states, np.tile(psi0, (11, 1)))


def test_diagonal_hamiltonian_phases():
    E = np.array([0.3, -1.1, 2.0])
    psi0 = np.ones(3) / math.sqrt(3)
    grid = TimeGrid(0, 4, 40)
    traj = evolve_closed(np.diag(E), psi0, grid)
    np.testing.assert_allclose(traj.states, np.exp(-1j * np.outer(grid.points(), E)) * psi0,
                               atol=1e-14)
    assert np.max(np.abs(traj.scalars["norm"] - 1)) < 1e-14


def test_closed_exchange_cosine():
    p, layout, H, _ = system()
    grid = TimeGrid(0, 20, 199)
    traj = evolve_closed(H, bell(p), grid)
    np.testing.assert_allclose(traj.states[:, 8].real, SQ2 * np.cos(2 * grid.points()), atol=1e-8)


def test_closed_input_checks():
    with pytest.raises(ValueError):
        evolve_closed(np.array([[0, 1], [0, 0]]), np.array([1, 0]), TimeGrid(0, 1, 2))
    with pytest.raises(ValueError):
        evolve_closed(np.eye(2), np.array([1, 1]), TimeGrid(0, 1, 2))
    with pytest.raises(ValueError):
        evolve_closed(np.eye(2), np.array([1, 0, 0]), TimeGrid(0, 1, 2))


@settings(max_examples=25, deadline=None)
@given(om=st.floats(-5, 5), j=st.floats(-5, 5), theta=st.floats(0, math.pi))
def test_closed_conserves_excitation_and_norm(om, j, theta):
    p, layout, H, _ = system(omega=om, scatter_j=j)
    traj = evolve_closed(H, initial_vector("superposition", theta, p), TimeGrid(0, 20, 100))
    N = excitation_number(layout)
    n_t = np.einsum("ti,ij,tj->t", traj.states.conj(), N, traj.states).real
    assert np.max(np.abs(n_t - n_t[0])) < 1e-9
    assert np.max(np.abs(traj.scalars["norm"] - 1)) < 1e-10


# --- analytic amplitudes -------------------------------------------------

@pytest.mark.parametrize("om,j", [(0, 0), (0.2, 1), (5, 0.2), (1, 5)])
def test_amplitudes_initial_condition(om, j):
    a = analytic_amplitudes(math.pi / 4, om, j, 0.0)
    assert abs(a.c1 - SQ2) < 1e-15 and abs(a.c2 - SQ2) < 1e-15 and a.c3 == 0
    a = analytic_amplitudes(0.0, om, j, 0.0)
    assert abs(a.c1 - 1) < 1e-15 and abs(a.c2) < 1e-15 and a.c3 == 0


def test_amplitudes_quarter_period():
    a = analytic_amplitudes(math.pi / 4, 0, 0, math.pi / 4)
    assert abs(a.c1) < 1e-15 and abs(a.c2) < 1e-15
    assert 2 * abs(a.c3) ** 2 == pytest.approx(1, abs=1e-15)
    assert a.d_disc == -16


def test_analytic_state_layout():
    a = analytic_amplitudes(0.0, 0.3, 0.0, 0.0)
    psi = analytic_state(a)
    expected = np.zeros(16)
    expected[8] = 1
    np.testing.assert_allclose(psi, expected, atol=1e-15)
    psi = analytic_state(analytic_amplitudes(math.pi / 4, 0.3, 0.0, 0.0))
    assert psi[8] == pytest.approx(SQ2) and psi[4] == pytest.approx(SQ2)


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(0, math.pi), om=st.floats(0, 5), j=st.floats(0, 5), tau=st.floats(0, 20))
def test_amplitudes_reduce_to_x_state(theta, om, j, tau):
    a = analytic_amplitudes(theta, om, j, tau)
    psi = analytic_state(a)
    rho, _ = partial_trace(np.outer(psi, psi.conj()), make_layout(2, 1), (0, 1))
    assert rho[0, 0] == pytest.approx(2 * abs(a.c3) ** 2, abs=1e-12)
    assert rho[1, 1] == pytest.approx(abs(a.c2) ** 2, abs=1e-12)
    assert rho[2, 2] == pytest.approx(abs(a.c1) ** 2, abs=1e-12)
    assert rho[2, 1] == pytest.approx(a.c1 * np.conj(a.c2), abs=1e-12)
    assert abs(rho[3, 3]) == 0


@pytest.mark.parametrize("theta", [0, math.pi / 8, math.pi / 4])
@pytest.mark.parametrize("om", [0, 0.2, 1, 5])
def test_closed_matches_analytic_at_zero_scattering(theta, om):
    p, _, H, _ = system(omega=om)
    grid = TimeGrid(0, 20, 199)
    traj = evolve_closed(H, initial_vector("superposition", theta, p), grid)
    ref = np.array([to_simulation_frame(analytic_state(analytic_amplitudes(theta, om, 0, t)))
                    for t in grid.points()])
    assert np.max(np.abs(traj.states - ref)) < 1e-8


def test_frame_map_only_touches_b_photon():
    psi = np.arange(16) * (1 + 1j)
    out = to_simulation_frame(psi)
    mask = np.ones(16, bool)
    mask[1] = False
    np.testing.assert_array_equal(out[mask], psi.conj()[mask])
    assert out[1] == -1j * np.conj(psi[1])


# --- Lindblad right-hand side --------------------------------------------

@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kappa=st.floats(0, 2), gamma=st.floats(0, 2),
       om=st.floats(-3, 3))
def test_rhs_traceless_hermitian(seed, kappa, gamma, om):
    p, layout, H, ch = system(omega=om, scatter_j=0.3, kappa=kappa, gamma=gamma)
    rho = random_density(16, np.random.default_rng(seed))
    d = lindblad_rhs(rho, H, ch)
    assert abs(np.trace(d)) < 1e-12
    assert np.max(np.abs(d - d.conj().T)) < 1e-12


def test_rhs_without_channels_is_commutator():
    p, layout, H, _ = system(omega=0.4)
    rho = random_density(16, np.random.default_rng(1))
    np.testing.assert_allclose(lindblad_rhs(rho, H, []), -1j * (H @ rho - rho @ H), atol=1e-14)


def test_rhs_single_atom_decay_rate():
    layout = DimensionLayout((2,))
    s = subsystem_operator("lower", 0, layout)
    gamma = 0.7
    rho = np.diag([0, 1]).astype(complex)
    d = lindblad_rhs(rho, np.zeros((2, 2)), [CollapseChannel(gamma / 2, s)])
    assert d[1, 1].real == pytest.approx(-gamma, abs=1e-15)
    assert d[0, 0].real == pytest.approx(gamma, abs=1e-15)


def test_step_map_matches_rk4_stages():
    p, layout, H, ch = system(omega=0.3, scatter_j=0.2, kappa=0.4, gamma=0.2)
    rho = random_density(16, np.random.default_rng(2))
    h = 0.01
    f = lambda r: lindblad_rhs(r, H, ch)
    k1 = f(rho)
    k2 = f(rho + h / 2 * k1)
    k3 = f(rho + h / 2 * k2)
    k4 = f(rho + h * k3)
    classic = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    mapped = (rk4_step_map(H, ch, h) @ rho.reshape(-1)).reshape(16, 16)
    assert np.max(np.abs(classic - mapped)) < 1e-15


# --- master evolution ----------------------------------------------------

def test_master_closed_limit():
    p, layout, H, ch = system(omega=0.2, scatter_j=0.2)
    grid = TimeGrid(0, 20, 200)
    psi0 = bell(p)
    closed = evolve_closed(H, psi0, grid).states
    master = evolve_master(np.outer(psi0, psi0.conj()), H, ch, grid).states
    assert np.max(np.abs(master - np.einsum("ti,tj->tij", closed, closed.conj()))) < 1e-7


def test_coherence_decays_at_half_population_rate():
    gamma = 0.6
    layout = DimensionLayout((2,))
    ch = [CollapseChannel(gamma / 2, subsystem_operator("lower", 0, layout))]
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    grid = TimeGrid(0, 5, 50)
    traj = evolve_master(rho0, np.zeros((2, 2)), ch, grid)
    t = grid.points()[1:]
    pop = traj.states[1:, 1, 1].real
    coh = np.abs(traj.states[1:, 0, 1])
    pop_rate = -np.polyfit(t, np.log(pop), 1)[0]
    coh_rate = -np.polyfit(t, np.log(coh), 1)[0]
    assert pop_rate == pytest.approx(gamma, rel=1e-8)
    assert coh_rate == pytest.approx(gamma / 2, rel=1e-8)


def test_master_guards_and_excitation_monotone():
    p, layout, H, ch = system(omega=0.2, kappa=0.5, gamma=0.1)
    psi0 = bell(p)
    traj = evolve_master(np.outer(psi0, psi0.conj()), H, ch, TimeGrid(0, 30, 300))
    assert np.max(np.abs(traj.scalars["trace"] - 1)) < 1e-8
    assert np.min(traj.scalars["min_eigenvalue"]) > -1e-7
    N = excitation_number(layout)
    n_t = np.einsum("tij,ji->t", traj.states, N).real
    assert np.all(np.diff(n_t) <= 1e-9)


def test_step_halving_convergence():
    p, layout, H, ch = system(omega=0.2, scatter_j=0.1, kappa=0.5, gamma=0.1)
    psi0 = bell(p)
    rho0 = np.outer(psi0, psi0.conj())
    grid = TimeGrid(0, 10, 100)
    coarse = evolve_master(rho0, H, ch, grid)
    fine = evolve_master(rho0, H, ch, grid, step_scale=0.001)
    assert fine.scalars["substeps"] >= 2 * coarse.scalars["substeps"] - 1
    assert np.max(np.abs(coarse.states - fine.states)) < 1e-7


def test_leakage_guard_propagates():
    layout = DimensionLayout((2,))
    ch = [CollapseChannel(0.5, subsystem_operator("lower", 0, layout))]
    rho0 = np.diag([0, 1]).astype(complex)
    seen = []

    def guard(rho):
        seen.append(rho[1, 1].real)
        if rho[1, 1].real < 0.5:
            raise SolverGuardError("excited population fell below one half")

    with pytest.raises(SolverGuardError):
        evolve_master(rho0, np.zeros((2, 2)), ch, TimeGrid(0, 5, 50), leakage_guard=guard)
    assert seen[0] == 1.0 and len(seen) < 51


def test_master_input_checks():
    p, layout, H, ch = system(kappa=0.1)
    grid = TimeGrid(0, 1, 2)
    with pytest.raises(ValueError):
        evolve_master(np.eye(16), H, ch, grid)
    with pytest.raises(ValueError):
        evolve_master(np.diag([1.5] + [-0.5] + [0] * 14), H, ch, grid)
    with pytest.raises(ValueError):
        evolve_master(np.eye(16) / 16, H, ch, grid, step_scale=0.5)
    with pytest.raises(ValueError):
        evolve_master(np.eye(4) / 4, H, ch, grid)


def test_oscillation_period():
    t = np.linspace(0, 20, 2001)
    assert oscillation_period(t, np.cos(2 * t) ** 2) == pytest.approx(math.pi / 2, rel=1e-2)
    assert math.isnan(oscillation_period(t, np.ones_like(t)))
