"""Negativity: generic partial-transpose route, X-state and closed-form fast paths."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .hilbert import DimensionLayout, hermitian_eigenvalues, partial_transpose

__all__ = [
    "XStateElements",
    "PartitionSpec",
    "negativity",
    "xstate_negativity",
    "xstate_elements",
    "xstate_matrix",
    "closed_form_negativity",
    "tripartite_negativity",
    "negativity_series",
    "tripartite_series",
    "CLAMP_TOL",
]

# eigenvalues in (-CLAMP_TOL, 0) are solver noise, not entanglement
CLAMP_TOL = 1e-12
_DENSITY_TOL = 1e-8


@dataclass(frozen=True)
class XStateElements:
    """Populations of |ee>, |eg>, |ge>, |gg> and the |ge><eg| coherence E."""

    a_pop: float
    b_pop: float
    c_pop: float
    d_pop: float
    e_coh: complex = 0.0

    def __post_init__(self):
        pops = (self.a_pop, self.b_pop, self.c_pop, self.d_pop)
        if min(pops) < 0:
            raise ValueError("populations must be non-negative")
        if abs(sum(pops) - 1.0) > 1e-9:
            raise ValueError(f"populations sum to {sum(pops)!r}, not 1")
        if abs(self.e_coh) ** 2 > self.b_pop * self.c_pop + 1e-12:
            raise ValueError("|E|^2 exceeds B*C: not a positive matrix")


@dataclass(frozen=True)
class PartitionSpec:
    side_one: frozenset
    side_two: frozenset

    def __init__(self, side_one, side_two):
        object.__setattr__(self, "side_one", frozenset(side_one))
        object.__setattr__(self, "side_two", frozenset(side_two))
        if not self.side_one or not self.side_two:
            raise ValueError("both sides of a partition must be non-empty")
        if self.side_one & self.side_two:
            raise ValueError("partition sides overlap")

    @classmethod
    def one_vs_rest(cls, index: int, count: int) -> "PartitionSpec":
        return cls({index}, set(range(count)) - {index})

    def check(self, layout: DimensionLayout) -> None:
        if self.side_one | self.side_two != set(range(len(layout))):
            raise ValueError(f"partition does not cover subsystems 0..{len(layout) - 1}")


def _check_density(rho, n):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n, n):
        raise ValueError(f"density matrix shape {rho.shape}, expected {(n, n)}")
    if abs(np.trace(rho) - 1.0) > _DENSITY_TOL:
        raise ValueError("density matrix must have unit trace")
    return rho


def negativity(rho, layout: DimensionLayout, partition: PartitionSpec) -> float:
    """-2 times the sum of negative eigenvalues of rho partially transposed on side two."""
    rho = _check_density(rho, layout.total)
    partition.check(layout)
    ev = hermitian_eigenvalues(partial_transpose(rho, layout, partition.side_two))
    neg = ev[ev <= -CLAMP_TOL]
    return float(-2.0 * neg.sum()) if neg.size else 0.0


def xstate_negativity(x: XStateElements) -> float:
    d_minus_a = x.d_pop - x.a_pop
    value = math.sqrt(d_minus_a ** 2 + 4 * abs(x.e_coh) ** 2) - x.d_pop - x.a_pop
    return max(0.0, value)


def xstate_elements(rho) -> XStateElements:
    """Read A, B, C, D, E off a 4x4 matrix in the basis |ee>, |eg>, |ge>, |gg>.

    Expects the internal ordering (index 0 = |g>), so |ee> is row 3 and |gg>
    row 0. Entries outside the X pattern are ignored.
    """
    rho = np.asarray(rho, dtype=complex)
    return XStateElements(
        a_pop=rho[3, 3].real,
        b_pop=rho[2, 2].real,
        c_pop=rho[1, 1].real,
        d_pop=rho[0, 0].real,
        e_coh=complex(rho[1, 2]),
    )


def xstate_matrix(x: XStateElements) -> np.ndarray:
    """Inverse of :func:`xstate_elements` (internal basis ordering)."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[3, 3], rho[2, 2], rho[1, 1], rho[0, 0] = x.a_pop, x.b_pop, x.c_pop, x.d_pop
    rho[1, 2] = x.e_coh
    rho[2, 1] = np.conj(x.e_coh)
    return rho


def closed_form_negativity(omega_over_g, j_over_g, tau, *, as_printed: bool = False) -> float:
    """Two-atom negativity for the Bell initial state from the single-excitation closed form.

    With s = sqrt(D) tau / 2 and D = 2 J Omega - J^2 - 16 - Omega^2 (g = 1),

        N = (2/|D|) sqrt( [D cosh^2 s + (J - Omega)^2 sinh^2 s]^2 / 4 + 4 (4 sinh^2 s)^2 )
            - (4/D) (4 sinh^2 s)

    which is what the amplitudes of ``analytic_amplitudes`` give through the
    X-state formula. ``as_printed=True`` instead evaluates the literal
    uncorrected expression: prefactor 2/D and an unsquared -(J - Omega). Since
    D < 0 always, that variant is negative at tau = 0 and is kept only for
    the record.

    Like the amplitudes, the result follows the simulated dynamics only for
    J = 0. The output is clamped to [0, 1 + 1e-9].
    """
    om, J, t = float(omega_over_g), float(j_over_g), float(tau)
    d = 2 * J * om - J ** 2 - (16 + om ** 2)
    s = cmath.sqrt(d) * t / 2
    ch2 = (cmath.cosh(s) ** 2).real
    sh2 = (cmath.sinh(s) ** 2).real
    if as_printed:
        inner = d * ch2 - (J - om) * sh2
        lead = 2.0 / d
    else:
        inner = d * ch2 + (J - om) ** 2 * sh2
        lead = 2.0 / abs(d)
    value = lead * math.sqrt(0.25 * inner ** 2 + 4 * (4 * sh2) ** 2) - (4.0 / d) * (4 * sh2)
    return min(max(value, 0.0), 1.0 + 1e-9)


def tripartite_negativity(rho_atoms) -> float:
    """Geometric mean of the three one-atom-versus-rest negativities."""
    layout = DimensionLayout((2, 2, 2))
    rho_atoms = _check_density(rho_atoms, 8)
    factors = [negativity(rho_atoms, layout, PartitionSpec.one_vs_rest(i, 3)) for i in range(3)]
    if min(factors) == 0.0:
        return 0.0
    return float(np.prod(factors) ** (1.0 / 3.0))


def negativity_series(rhos, layout: DimensionLayout, partition: PartitionSpec) -> np.ndarray:
    """Vectorized :func:`negativity` over a stack of density matrices."""
    rhos = np.asarray(rhos, dtype=complex)
    partition.check(layout)
    k = len(layout)
    n = layout.total
    if rhos.shape[1:] != (n, n):
        raise ValueError(f"stack shape {rhos.shape} does not match layout {layout.dims}")
    t = rhos.reshape((len(rhos),) + layout.dims * 2)
    axes = [0] + [1 + (k + i if i in partition.side_two else i) for i in range(k)]
    axes += [1 + (i if i in partition.side_two else k + i) for i in range(k)]
    pt = t.transpose(axes).reshape(len(rhos), n, n)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().transpose(0, 2, 1)))
    ev = np.where(ev <= -CLAMP_TOL, ev, 0.0)
    return -2.0 * ev.sum(axis=1) + 0.0  # no -0.0 in output


def tripartite_series(rhos) -> np.ndarray:
    """Vectorized :func:`tripartite_negativity` over 8x8 atomic states."""
    layout = DimensionLayout((2, 2, 2))
    factors = np.stack(
        [negativity_series(rhos, layout, PartitionSpec.one_vs_rest(i, 3)) for i in range(3)]
    )
    out = np.cbrt(np.prod(factors, axis=0))
    out[np.min(factors, axis=0) == 0.0] = 0.0
    return out
