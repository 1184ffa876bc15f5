"""Tensor-product structure: layouts, embedded operators, partial trace/transpose.

Subsystem order is always atoms first, then cavity mode A, then mode B.
Atom basis index 0 is |g>, index 1 is |e>; mode basis index n is the n-photon
Fock state.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

__all__ = [
    "DimensionLayout",
    "make_layout",
    "subsystem_operator",
    "partial_trace",
    "partial_transpose",
    "hermitian_eigenvalues",
    "HERMITIAN_TOL",
]

HERMITIAN_TOL = 1e-10

_ATOM_KINDS = {"lower", "raise"}
_MODE_KINDS = {"annihilate", "create", "number"}


@dataclass(frozen=True)
class DimensionLayout:
    """Ordered subsystem dimensions of a composite Hilbert space.

    ``mode_indices`` marks which subsystems are bosonic modes; everything else
    is treated as a two-level atom.
    """

    dims: tuple[int, ...]
    mode_indices: tuple[int, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mode_indices", tuple(sorted(set(self.mode_indices))))
        if not dims:
            raise ValueError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise ValueError(f"every subsystem dimension must be >= 2, got {dims}")
        for i in self.mode_indices:
            if not 0 <= i < len(dims):
                raise ValueError(f"mode index {i} out of range")
        for i in self.atom_indices:
            if dims[i] != 2:
                raise ValueError(f"atom subsystem {i} must have dimension 2, got {dims[i]}")

    @property
    def total(self) -> int:
        return prod(self.dims)

    @property
    def atom_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.dims)) if i not in self.mode_indices)

    def __len__(self) -> int:
        return len(self.dims)


def make_layout(atom_count: int, photon_cutoff: int = 1) -> DimensionLayout:
    """Layout for ``atom_count`` qubits followed by the two cavity modes A and B."""
    if atom_count < 1:
        raise ValueError("atom_count must be >= 1")
    if photon_cutoff < 1:
        # a cutoff of 0 gives one-dimensional modes, which the layout forbids
        raise ValueError("photon_cutoff must be >= 1")
    n = photon_cutoff + 1
    return DimensionLayout((2,) * atom_count + (n, n), (atom_count, atom_count + 1))


def _local_factor(kind: str, dim: int) -> np.ndarray:
    if kind == "identity":
        return np.eye(dim, dtype=complex)
    if kind == "lower":
        return np.array([[0, 1], [0, 0]], dtype=complex)
    if kind == "raise":
        return np.array([[0, 0], [1, 0]], dtype=complex)
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    if kind == "annihilate":
        return a
    if kind == "create":
        return a.conj().T
    if kind == "number":
        return np.diag(np.arange(dim)).astype(complex)
    raise ValueError(f"unknown operator kind {kind!r}")


def subsystem_operator(kind: str, index: int, layout: DimensionLayout) -> np.ndarray:
    """Embed a local operator on subsystem ``index`` into the full space.

    ``kind`` is one of lower, raise (atoms), annihilate, create, number (modes)
    or identity (any subsystem).
    """
    if not 0 <= index < len(layout):
        raise IndexError(f"subsystem index {index} out of range for {layout.dims}")
    if kind in _ATOM_KINDS and index in layout.mode_indices:
        raise ValueError(f"{kind!r} acts on atoms, subsystem {index} is a mode")
    if kind in _MODE_KINDS and index not in layout.mode_indices:
        raise ValueError(f"{kind!r} acts on modes, subsystem {index} is an atom")
    d = layout.dims
    local = _local_factor(kind, d[index])
    left = np.eye(prod(d[:index]), dtype=complex)
    right = np.eye(prod(d[index + 1:]), dtype=complex)
    return np.kron(np.kron(left, local), right)


def _check_square(rho: np.ndarray, layout: DimensionLayout) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = layout.total
    if rho.shape != (n, n):
        raise ValueError(f"matrix shape {rho.shape} does not match layout {layout.dims}")
    return rho


def partial_trace(rho, layout: DimensionLayout, keep) -> tuple[np.ndarray, DimensionLayout]:
    """Trace out every subsystem not in ``keep``.

    Kept subsystems stay in their original relative order. Returns the reduced
    matrix together with its layout.
    """
    rho = _check_square(rho, layout)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(layout):
        raise IndexError(f"keep {keep} out of range for {layout.dims}")
    k = len(layout)
    t = rho.reshape(layout.dims * 2)
    traced = [i for i in range(k) if i not in keep]
    # einsum labels: rows 0..k-1, columns k..2k-1, traced columns share row labels
    row = list(range(k))
    col = [i if i in traced else k + i for i in range(k)]
    out = keep + [k + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    dims = tuple(layout.dims[i] for i in keep)
    modes = tuple(j for j, i in enumerate(keep) if i in layout.mode_indices)
    m = prod(dims)
    return reduced.reshape(m, m), DimensionLayout(dims, modes)


def partial_transpose(rho, layout: DimensionLayout, transposed) -> np.ndarray:
    """Swap row and column indices of the subsystems in ``transposed``."""
    rho = _check_square(rho, layout)
    k = len(layout)
    transposed = set(transposed)
    if any(not 0 <= i < k for i in transposed):
        raise IndexError(f"transposed {sorted(transposed)} out of range for {layout.dims}")
    axes = [k + i if i in transposed else i for i in range(k)]
    axes += [i if i in transposed else k + i for i in range(k)]
    n = layout.total
    return rho.reshape(layout.dims * 2).transpose(axes).reshape(n, n)


def hermitian_eigenvalues(m) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    The input is symmetrized as (m + m^H)/2 first; a deviation from
    Hermiticity above ``HERMITIAN_TOL`` (max-abs entry) raises ValueError.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))
