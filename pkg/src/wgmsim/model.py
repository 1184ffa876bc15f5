"""Interaction-picture Hamiltonian and dissipation channels.

Units: hbar = 1 and every rate is measured in units of the atom-cavity
coupling g, so time is the dimensionless tau = g t.

In the lab frame the cavity carries two degenerate travelling modes a, b at
frequency omega_C, coupled by backscattering J. The atoms (frequency omega_A)
couple to them through evanescent fields with phase exp(+-i k x). Rotating to
the normal modes A = (a + b)/sqrt(2), B = (a - b)/sqrt(2) and to the
interaction picture gives

    H = (Delta + J) A^dag A + (Delta - J) B^dag B
        + sum_{i<j} Omega_ij (s_i^+ s_j^- + s_j^+ s_i^-)
        + sum_j [ gA_j (A^dag s_j^- + A s_j^+) - i gB_j (B^dag s_j^- - B s_j^+) ]

with Delta = omega_A - omega_C. The radial envelope of the evanescent field is
folded into one effective coupling magnitude per atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import DimensionLayout, make_layout, subsystem_operator

__all__ = [
    "SystemParams",
    "CollapseChannel",
    "coupling_from_position",
    "dipole_strength",
    "build_hamiltonian",
    "build_collapse_channels",
    "excitation_number",
    "symmetric_params",
    "asymmetric_params",
]


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and geometry of one simulation instance (units of g)."""

    atom_count: int
    couplings: tuple[tuple[float, float], ...]
    ddi: tuple[tuple[float, ...], ...]
    delta: float = 0.0
    scatter_j: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    photon_cutoff: int = 1

    def __post_init__(self):
        couplings = tuple((float(a), float(b)) for a, b in self.couplings)
        ddi = tuple(tuple(float(x) for x in row) for row in self.ddi)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "ddi", ddi)
        if self.atom_count not in (2, 3):
            raise ValueError(f"atom_count must be 2 or 3, got {self.atom_count}")
        if len(couplings) != self.atom_count:
            raise ValueError("need one (g_A, g_B) pair per atom")
        n = self.atom_count
        if len(ddi) != n or any(len(row) != n for row in ddi):
            raise ValueError(f"ddi must be {n}x{n}")
        for i in range(n):
            if ddi[i][i] != 0.0:
                raise ValueError("ddi diagonal must be zero")
            for j in range(i):
                if ddi[i][j] != ddi[j][i]:
                    raise ValueError("ddi must be symmetric")
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("kappa and gamma must be non-negative")
        if self.photon_cutoff < 1:
            raise ValueError("photon_cutoff must be >= 1")
        values = [self.delta, self.scatter_j, self.kappa, self.gamma]
        values += [x for pair in couplings for x in pair] + [x for row in ddi for x in row]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("all rates must be finite")

    @property
    def closed(self) -> bool:
        return self.kappa == 0 and self.gamma == 0

    def layout(self) -> DimensionLayout:
        return make_layout(self.atom_count, self.photon_cutoff)

    def as_dict(self) -> dict:
        return {
            "atom_count": self.atom_count,
            "couplings": [list(p) for p in self.couplings],
            "ddi": [list(r) for r in self.ddi],
            "delta": self.delta,
            "scatter_j": self.scatter_j,
            "kappa": self.kappa,
            "gamma": self.gamma,
            "photon_cutoff": self.photon_cutoff,
        }


@dataclass(frozen=True)
class CollapseChannel:
    rate: float
    operator: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("collapse rate must be non-negative")


def coupling_from_position(g_eff: float, kx: float) -> tuple[float, float]:
    """Normal-mode couplings (g_A, g_B) of an atom at phase ``kx`` on the rim."""
    if g_eff < 0:
        raise ValueError("g_eff must be non-negative")
    return g_eff * math.cos(kx), g_eff * math.sin(kx)


def dipole_strength(gamma, omega_A, c_light, d, theta_d):
    """Static dipole-dipole coupling between two identical atoms.

    Omega = (3/4) gamma (c / (omega_A d))^3 (1 - 3 cos^2 theta_d), where
    theta_d is the angle between the separation vector and the dipole.
    """
    if d <= 0:
        raise ValueError("separation d must be positive")
    if omega_A <= 0:
        raise ValueError("omega_A must be positive")
    return 0.75 * gamma * (c_light / (omega_A * d)) ** 3 * (1.0 - 3.0 * math.cos(theta_d) ** 2)


def uniform_ddi(atom_count: int, omega: float) -> tuple[tuple[float, ...], ...]:
    return tuple(
        tuple(0.0 if i == j else float(omega) for j in range(atom_count))
        for i in range(atom_count)
    )


def symmetric_params(atom_count=2, *, g=1.0, omega=0.0, scatter_j=0.0, kappa=0.0,
                     gamma=0.0, delta=0.0, photon_cutoff=1) -> SystemParams:
    """All atoms at kx = pi/4 with g_A = g_B = g and equal pairwise DDI."""
    # equals coupling_from_position(sqrt(2) g, pi/4) without the round-off
    pair = (float(g), float(g))
    return SystemParams(
        atom_count=atom_count,
        couplings=(pair,) * atom_count,
        ddi=uniform_ddi(atom_count, omega),
        delta=delta,
        scatter_j=scatter_j,
        kappa=kappa,
        gamma=gamma,
        photon_cutoff=photon_cutoff,
    )


def asymmetric_params(g1=1.0, g2=1.0, *, scatter_j=0.0, kappa=0.0, gamma=0.0,
                      delta=0.0, photon_cutoff=1) -> SystemParams:
    """Atom 1 at kx = pi/4, atom 2 at kx = 5pi/4, no DDI.

    ``g1`` and ``g2`` are per-mode magnitudes, so atom 2 ends up at
    (-|g2|, -|g2|).
    """
    return SystemParams(
        atom_count=2,
        couplings=((abs(g1), abs(g1)), (-abs(g2), -abs(g2))),
        ddi=uniform_ddi(2, 0.0),
        delta=delta,
        scatter_j=scatter_j,
        kappa=kappa,
        gamma=gamma,
        photon_cutoff=photon_cutoff,
    )


def _check_layout(params: SystemParams, layout: DimensionLayout) -> None:
    if layout != params.layout():
        raise ValueError(
            f"layout {layout.dims} does not match {params.atom_count} atoms "
            f"with photon cutoff {params.photon_cutoff}"
        )


def build_hamiltonian(params: SystemParams, layout: DimensionLayout) -> np.ndarray:
    _check_layout(params, layout)
    n = params.atom_count
    A = subsystem_operator("annihilate", n, layout)
    B = subsystem_operator("annihilate", n + 1, layout)
    Ad, Bd = A.conj().T, B.conj().T
    lowers = [subsystem_operator("lower", j, layout) for j in range(n)]
    raises = [s.conj().T for s in lowers]

    H = (params.delta + params.scatter_j) * (Ad @ A)
    H = H + (params.delta - params.scatter_j) * (Bd @ B)
    for i in range(n):
        for j in range(i + 1, n):
            w = params.ddi[i][j]
            if w:
                H = H + w * (raises[i] @ lowers[j] + raises[j] @ lowers[i])
    for j, (gA, gB) in enumerate(params.couplings):
        H = H + gA * (Ad @ lowers[j] + A @ raises[j])
        H = H - 1j * gB * (Bd @ lowers[j] - B @ raises[j])
    return H


def build_collapse_channels(params: SystemParams, layout: DimensionLayout) -> list[CollapseChannel]:
    """Cavity decay on A and B (coefficient kappa) and emission per atom (gamma/2).

    Each channel enters the master equation as rate * (2 L rho L^dag - L^dag L rho
    - rho L^dag L), so a mode's photon number decays at 2 kappa and an excited
    atom's population decays at gamma.
    """
    _check_layout(params, layout)
    n = params.atom_count
    channels = [
        CollapseChannel(params.kappa, subsystem_operator("annihilate", n, layout)),
        CollapseChannel(params.kappa, subsystem_operator("annihilate", n + 1, layout)),
    ]
    channels += [
        CollapseChannel(params.gamma / 2.0, subsystem_operator("lower", j, layout))
        for j in range(n)
    ]
    return channels


def excitation_number(layout: DimensionLayout) -> np.ndarray:
    """N_exc = sum_j s_j^+ s_j^- + sum_modes a^dag a."""
    N = np.zeros((layout.total, layout.total), dtype=complex)
    for i in range(len(layout)):
        if i in layout.mode_indices:
            N += subsystem_operator("number", i, layout)
        else:
            s = subsystem_operator("lower", i, layout)
            N += s.conj().T @ s
    return N
