"""Oracle cross-checks run by ``simulate --verify``.

Each check compares an independent route against the simulator and reports
the worst disagreement. The closed-form amplitudes and negativity are exact
only for J = 0, so those checks run over Omega with J = 0; the route check
between the generic and X-state negativity covers every (Omega, J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .dynamics import (
    TimeGrid,
    analytic_amplitudes,
    analytic_state,
    evolve_closed,
    evolve_master,
    to_simulation_frame,
)
from .entanglement import (
    PartitionSpec,
    XStateElements,
    closed_form_negativity,
    negativity,
    tripartite_negativity,
    xstate_elements,
    xstate_matrix,
    xstate_negativity,
)
from .hilbert import DimensionLayout, make_layout, partial_trace
from .sweep import initial_vector

THETAS = (0.0, math.pi / 8, math.pi / 4)
PARAM_VALUES = (0.0, 0.2, 1.0, 5.0)

TOLERANCES = {
    "amplitudes": 1e-8,
    "amplitude_norm": 1e-10,
    "closed_form_negativity": 1e-8,
    "xstate_random": 1e-10,
    "xstate_pipeline": 1e-10,
    "closed_limit": 1e-7,
    "emission_rate": 1e-8,
    "w_state": 1e-9,
}


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tol


def _closed_states(theta, omega, j, grid):
    params = model.symmetric_params(omega=omega, scatter_j=j)
    layout = params.layout()
    H = model.build_hamiltonian(params, layout)
    return evolve_closed(H, initial_vector("superposition", theta, params), grid).states, layout


def _atoms(psi, layout):
    rho, _ = partial_trace(np.outer(psi, psi.conj()), layout, layout.atom_indices)
    return rho


def check_amplitudes(grid) -> float:
    worst = 0.0
    for theta in THETAS:
        for omega in PARAM_VALUES:
            states, _ = _closed_states(theta, omega, 0.0, grid)
            for tau, psi in zip(grid.points(), states):
                ref = to_simulation_frame(analytic_state(analytic_amplitudes(theta, omega, 0.0, tau)))
                worst = max(worst, float(np.max(np.abs(psi - ref))))
    return worst


def check_amplitude_norm(grid) -> float:
    worst = 0.0
    for theta in THETAS:
        for omega in PARAM_VALUES:
            for j in PARAM_VALUES:
                for tau in grid.points():
                    worst = max(worst, abs(analytic_amplitudes(theta, omega, j, tau).norm - 1.0))
    return worst


def check_closed_form_negativity(grid) -> float:
    worst = 0.0
    two = DimensionLayout((2, 2))
    for omega in PARAM_VALUES:
        states, layout = _closed_states(math.pi / 4, omega, 0.0, grid)
        for tau, psi in zip(grid.points(), states):
            n = negativity(_atoms(psi, layout), two, PartitionSpec({0}, {1}))
            worst = max(worst, abs(n - closed_form_negativity(omega, 0.0, tau)))
    return worst


def random_xstate(rng) -> XStateElements:
    pops = rng.dirichlet(np.ones(4))
    radius = math.sqrt(pops[1] * pops[2]) * rng.uniform(0, 1)
    return XStateElements(*pops, radius * complex(np.exp(1j * rng.uniform(0, 2 * math.pi))))


def check_xstate_random(count=1000, seed=1234) -> float:
    rng = np.random.default_rng(seed)
    two = DimensionLayout((2, 2))
    worst = 0.0
    for _ in range(count):
        x = random_xstate(rng)
        worst = max(worst, abs(negativity(xstate_matrix(x), two, PartitionSpec({0}, {1}))
                               - xstate_negativity(x)))
    return worst


def check_xstate_pipeline(grid) -> float:
    worst = 0.0
    two = DimensionLayout((2, 2))
    for theta in THETAS:
        for omega in PARAM_VALUES:
            for j in PARAM_VALUES:
                states, layout = _closed_states(theta, omega, j, grid)
                for psi in states:
                    rho = _atoms(psi, layout)
                    n = negativity(rho, two, PartitionSpec({0}, {1}))
                    worst = max(worst, abs(n - xstate_negativity(xstate_elements(rho))))
    return worst


def check_closed_limit() -> float:
    params = model.symmetric_params(omega=0.2, scatter_j=0.2)
    layout = params.layout()
    H = model.build_hamiltonian(params, layout)
    grid = TimeGrid(0.0, 20.0, 200)
    psi0 = initial_vector("superposition", math.pi / 4, params)
    closed = evolve_closed(H, psi0, grid).states
    master = evolve_master(np.outer(psi0, psi0.conj()), H,
                           model.build_collapse_channels(params, layout), grid).states
    ref = np.einsum("ti,tj->tij", closed, closed.conj())
    return float(np.max(np.abs(master - ref)))


def check_emission_rate(gamma=0.3) -> float:
    """Lone excited atom, no cavity coupling: population must follow exp(-gamma tau)."""
    params = model.SystemParams(atom_count=2, couplings=((0, 0), (0, 0)),
                                ddi=((0, 0), (0, 0)), gamma=gamma)
    layout = params.layout()
    H = model.build_hamiltonian(params, layout)
    psi0 = initial_vector("superposition", 0.0, params)
    grid = TimeGrid(0.0, 10.0, 100)
    traj = evolve_master(np.outer(psi0, psi0.conj()), H,
                         model.build_collapse_channels(params, layout), grid)
    excited = []
    for rho in traj.states:
        atoms, _ = partial_trace(rho, layout, layout.atom_indices)
        excited.append(atoms[2, 2].real + atoms[3, 3].real)  # atom 1 in |e>
    return float(np.max(np.abs(np.array(excited) - np.exp(-gamma * grid.points()))))


def check_w_state() -> float:
    w = initial_vector("w_state", 0.0, model.symmetric_params(3))
    rho = _atoms(w, make_layout(3, 1))
    return abs(tripartite_negativity(rho) - 2 * math.sqrt(2) / 3)


def run_oracle_suite(tol: float | None = None) -> list[Check]:
    """Run every oracle check; ``tol`` replaces all per-check tolerances."""
    grid = TimeGrid(0.0, 20.0, 199)
    tols = {k: (tol if tol is not None else v) for k, v in TOLERANCES.items()}
    return [
        Check("closed evolution vs closed-form amplitudes (J=0)", check_amplitudes(grid),
              tols["amplitudes"]),
        Check("closed-form amplitude normalization", check_amplitude_norm(grid),
              tols["amplitude_norm"]),
        Check("pipeline negativity vs closed form (theta=pi/4, J=0)",
              check_closed_form_negativity(grid), tols["closed_form_negativity"]),
        Check("generic vs X-state negativity, 1000 random X-states", check_xstate_random(),
              tols["xstate_random"]),
        Check("generic vs X-state negativity along closed pipeline", check_xstate_pipeline(grid),
              tols["xstate_pipeline"]),
        Check("master equation closed limit vs eigendecomposition", check_closed_limit(),
              tols["closed_limit"]),
        Check("spontaneous emission: population ~ exp(-gamma tau)", check_emission_rate(),
              tols["emission_rate"]),
        Check("W state tripartite negativity = 2 sqrt(2)/3", check_w_state(), tols["w_state"]),
    ]


def format_checks(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'max error':>10}  {'tol':>8}  result"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {c.error:10.3e}  {c.tol:8.1e}  "
                     f"{'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
