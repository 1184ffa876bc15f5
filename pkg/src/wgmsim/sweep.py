"""Experiment engine: time sweeps, parameter x time grids and max-negativity scans."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynamics import TimeGrid, evolve_closed, evolve_master, DEFAULT_STEP_SCALE
from .entanglement import PartitionSpec, negativity_series, tripartite_series
from .errors import SolverGuardError
from .hilbert import DimensionLayout, subsystem_operator
from .model import (
    SystemParams,
    build_collapse_channels,
    build_hamiltonian,
    excitation_number,
    uniform_ddi,
)

__all__ = [
    "SweepSpec",
    "ResultTable",
    "initial_density",
    "initial_vector",
    "with_value",
    "run_time_sweep",
    "run_grid_sweep",
    "max_negativity_scan",
    "LEAKAGE_TOL",
]

INITIAL_STATES = ("superposition", "w_state", "product_three", "custom")
MEASURES = ("negativity", "tripartite_negativity", "max_negativity_over_window")
VARY_PARAMS = ("omega", "scatter_j", "g2", "theta")
LEAKAGE_TOL = 1e-6


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one experiment.

    ``vary``/``values`` define the scanned axis of a grid sweep. For a
    max-negativity scan ``vary`` must be ``"theta"`` and the second axis is
    either ``param``/``param_values`` (omega or scatter_j) or explicit
    ``pairs`` of (omega, scatter_j).
    """

    base: SystemParams
    grid: TimeGrid
    initial_state: str = "superposition"
    theta: float = math.pi / 4
    measure: str = "negativity"
    vary: str | None = None
    values: tuple[float, ...] = ()
    param: str | None = None
    param_values: tuple[float, ...] = ()
    pairs: tuple[tuple[float, float], ...] = ()
    custom_rho: np.ndarray | None = field(default=None, compare=False, repr=False)
    step_scale: float = DEFAULT_STEP_SCALE

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "param_values", tuple(float(v) for v in self.param_values))
        object.__setattr__(self, "pairs", tuple((float(a), float(b)) for a, b in self.pairs))
        if self.initial_state not in INITIAL_STATES:
            raise ValueError(f"initial_state must be one of {INITIAL_STATES}")
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")
        if self.vary is not None and self.vary not in VARY_PARAMS:
            raise ValueError(f"vary must be one of {VARY_PARAMS}")
        if self.vary is not None and not self.values:
            raise ValueError("vary needs at least one value")
        if self.param is not None and self.param not in ("omega", "scatter_j"):
            raise ValueError("scan parameter must be omega or scatter_j")
        finite = [self.theta, *self.values, *self.param_values] + [x for p in self.pairs for x in p]
        if not all(math.isfinite(v) for v in finite):
            raise ValueError("sweep values must be finite")
        n = self.base.atom_count
        if self.measure == "tripartite_negativity" and n != 3:
            raise ValueError("tripartite_negativity requires three atoms")
        if self.measure in ("negativity", "max_negativity_over_window") and n != 2:
            raise ValueError(f"{self.measure} requires two atoms")
        if self.initial_state == "superposition" and n != 2:
            raise ValueError("superposition initial state is defined for two atoms")
        if self.initial_state in ("w_state", "product_three") and n != 3:
            raise ValueError(f"{self.initial_state} is a three-atom state")
        if self.initial_state == "custom" and self.custom_rho is None:
            raise ValueError("custom initial state needs custom_rho")
        if self.vary == "g2" and n != 2:
            raise ValueError("g2 scans use the two-atom asymmetric preset")

    def describe(self) -> dict:
        d = {
            "base": self.base.as_dict(),
            "grid": dataclasses.asdict(self.grid),
            "initial_state": self.initial_state,
            "theta": self.theta,
            "measure": self.measure,
            "vary": self.vary,
            "values": list(self.values),
            "param": self.param,
            "param_values": list(self.param_values),
            "pairs": [list(p) for p in self.pairs],
            "step_scale": self.step_scale,
        }
        if self.custom_rho is not None:
            rho = np.ascontiguousarray(self.custom_rho, dtype=complex)
            d["custom_rho_sha256"] = hashlib.sha256(rho.tobytes()).hexdigest()
        return d

    def digest(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))
        if not np.all(np.isfinite(self.rows)):
            raise SolverGuardError("non-finite values in result table")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def _atom_ket(excited: tuple[int, ...]) -> np.ndarray:
    v = np.zeros(2 ** len(excited), dtype=complex)
    v[int("".join(map(str, excited)), 2)] = 1.0
    return v


def initial_vector(kind: str, theta: float, params: SystemParams) -> np.ndarray:
    """Pure initial state (atoms tensor two-mode vacuum).

    ``superposition`` is cos(theta)|eg> + sin(theta)|ge>, so theta = 0 is the
    product state |eg>.
    """
    if kind == "superposition":
        atoms = math.cos(theta) * _atom_ket((1, 0)) + math.sin(theta) * _atom_ket((0, 1))
    elif kind == "w_state":
        atoms = (_atom_ket((1, 0, 0)) + _atom_ket((0, 1, 0)) + _atom_ket((0, 0, 1))) / math.sqrt(3)
    elif kind == "product_three":
        atoms = _atom_ket((1, 0, 0))
    else:
        raise ValueError(f"no pure state for initial_state {kind!r}")
    if len(atoms) != 2 ** params.atom_count:
        raise ValueError(f"{kind} does not fit {params.atom_count} atoms")
    vacuum = np.zeros((params.photon_cutoff + 1) ** 2, dtype=complex)
    vacuum[0] = 1.0
    return np.kron(atoms, vacuum)


def initial_density(spec: SweepSpec, params: SystemParams, theta: float) -> np.ndarray:
    if spec.initial_state == "custom":
        return np.asarray(spec.custom_rho, dtype=complex)
    psi = initial_vector(spec.initial_state, theta, params)
    return np.outer(psi, psi.conj())


def with_value(spec: SweepSpec, name: str | None, value: float) -> tuple[SystemParams, float]:
    """Resolve ``spec`` with one parameter overridden; returns (params, theta)."""
    base, theta = spec.base, spec.theta
    if name is None:
        return base, theta
    if name == "theta":
        return base, float(value)
    if name == "omega":
        return dataclasses.replace(base, ddi=uniform_ddi(base.atom_count, value)), theta
    if name == "scatter_j":
        return dataclasses.replace(base, scatter_j=float(value)), theta
    if name == "g2":
        g1 = base.couplings[0]
        v = abs(float(value))
        # atom 2 sits at kx = 5pi/4: both normal-mode couplings negative; DDI negligible
        return dataclasses.replace(base, couplings=(g1, (-v, -v)), ddi=uniform_ddi(2, 0.0)), theta
    raise ValueError(f"cannot vary {name!r}")


def _leakage_guard(layout: DimensionLayout, rho0: np.ndarray, cutoff: int):
    """Guard against truncation error in the photon space.

    The dynamics never raise the excitation number, so truncation is exact
    whenever rho0 carries at most ``cutoff`` excitations. Otherwise the
    population of each mode's top Fock level must stay below LEAKAGE_TOL.
    """
    N = excitation_number(layout).diagonal().real
    over = N > cutoff + 0.5
    if np.sum(np.abs(rho0.diagonal()[over])) <= 1e-12:
        return None
    tops = []
    for i in layout.mode_indices:
        n_op = subsystem_operator("number", i, layout).diagonal().real
        tops.append(np.isclose(n_op, cutoff))

    def guard(rho):
        pops = rho.diagonal().real
        for mask in tops:
            p = float(pops[mask].sum())
            if p > LEAKAGE_TOL:
                raise SolverGuardError(
                    f"top Fock level population {p:.3e} exceeds {LEAKAGE_TOL}; raise photon_cutoff"
                )

    return guard


def _evolve(spec: SweepSpec, params: SystemParams, theta: float, grid: TimeGrid, *,
            diagnostics: bool = True):
    """Atomic reduced states plus trace and min-eigenvalue series on ``grid``.

    With ``diagnostics=False`` the closed path skips the full-state
    eigenvalues (the series come back as None); grid sweeps and scans do not
    report them.
    """
    layout = params.layout()
    H = build_hamiltonian(params, layout)
    da = 2 ** params.atom_count
    dm = layout.total // da
    rho0 = initial_density(spec, params, theta)
    guard = _leakage_guard(layout, rho0, params.photon_cutoff)

    if params.closed and spec.initial_state != "custom":
        psi0 = initial_vector(spec.initial_state, theta, params)
        traj = evolve_closed(H, psi0, grid)
        psi = traj.states.reshape(len(traj.states), da, dm)
        reduced = np.einsum("tam,tbm->tab", psi, psi.conj())
        trace = min_eig = None
        if guard is not None or diagnostics:
            full = np.einsum("ti,tj->tij", traj.states, traj.states.conj())
            if guard is not None:
                for r in full:
                    guard(r)
            if diagnostics:
                trace = traj.scalars["norm"] ** 2
                min_eig = np.linalg.eigvalsh(full)[:, 0]
    else:
        channels = build_collapse_channels(params, layout)
        traj = evolve_master(rho0, H, channels, grid, step_scale=spec.step_scale,
                             leakage_guard=guard)
        t = traj.states.reshape(len(traj.states), da, dm, da, dm)
        reduced = np.einsum("tambm->tab", t)
        trace = traj.scalars["trace"]
        min_eig = traj.scalars["min_eigenvalue"]
    return reduced, trace, min_eig


def _measure(spec: SweepSpec, reduced: np.ndarray) -> np.ndarray:
    if spec.measure == "tripartite_negativity":
        return tripartite_series(reduced)
    return negativity_series(reduced, DimensionLayout((2, 2)), PartitionSpec({0}, {1}))


def _time_rows(spec: SweepSpec, name, value, diagnostics=True):
    params, theta = with_value(spec, name, value)
    reduced, trace, min_eig = _evolve(spec, params, theta, spec.grid, diagnostics=diagnostics)
    return spec.grid.points(), _measure(spec, reduced), trace, min_eig


def _provenance(spec: SweepSpec, **extra) -> dict:
    prov = {
        "tool": f"wgmsim {__version__}",
        "spec_sha256": spec.digest(),
        "spec": spec.describe(),
        "solver": "closed (eigendecomposition)" if spec.base.closed else "master (RK4)",
    }
    prov.update(extra)
    return prov


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # Executor.map yields in submission order, so the merge is deterministic
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def run_time_sweep(spec: SweepSpec) -> ResultTable:
    """Columns: tau, <measure>, trace, min_eigenvalue."""
    if spec.vary is not None:
        raise ValueError("run_time_sweep takes no vary axis; use run_grid_sweep")
    if spec.measure == "max_negativity_over_window":
        raise ValueError("max_negativity_over_window belongs to max_negativity_scan")
    tau, meas, trace, min_eig = _time_rows(spec, None, 0.0)
    rows = np.column_stack([tau, meas, trace, min_eig])
    return ResultTable(("tau", spec.measure, "trace", "min_eigenvalue"), rows, _provenance(spec))


class _GridTask:
    def __init__(self, spec):
        self.spec = spec

    def __call__(self, value):
        return _time_rows(self.spec, self.spec.vary, value, diagnostics=False)


def run_grid_sweep(spec: SweepSpec, *, workers: int = 1) -> ResultTable:
    """Long format: <vary>, tau, <measure>, one block of rows per scanned value."""
    if spec.vary is None:
        raise ValueError("run_grid_sweep needs a vary axis")
    if spec.measure == "max_negativity_over_window":
        raise ValueError("max_negativity_over_window belongs to max_negativity_scan")
    results = _map(_GridTask(spec), spec.values, workers)
    blocks = [
        np.column_stack([np.full(len(tau), v), tau, meas])
        for v, (tau, meas, _, _) in zip(spec.values, results)
    ]
    extra = {}
    if spec.vary == "g2":
        extra["note"] = "atom 2 at kx=5pi/4: couplings (-|g2|, -|g2|); DDI forced to 0"
    return ResultTable((spec.vary, "tau", spec.measure), np.vstack(blocks),
                       _provenance(spec, **extra))


class _ScanTask:
    def __init__(self, spec, window):
        self.spec = spec
        self.window = window

    def __call__(self, point):
        theta, overrides = point
        params = self.spec.base
        for name, value in overrides:
            params, _ = with_value(dataclasses.replace(self.spec, base=params), name, value)
        reduced, _, _ = _evolve(self.spec, params, theta, self.window, diagnostics=False)
        return float(np.max(_measure(self.spec, reduced)))


def max_negativity_scan(spec: SweepSpec, window: TimeGrid | None = None, *,
                        workers: int = 1) -> ResultTable:
    """Maximum negativity over ``window`` for every (theta, parameter) point.

    Columns are theta, param_value, max_negativity; in paired mode
    (``spec.pairs``) they are theta, omega, scatter_j, max_negativity.
    The default window is tau in [0, 30] with 3000 intervals.
    """
    if window is None:
        window = TimeGrid(0.0, 30.0, 3000)
    if spec.vary != "theta":
        raise ValueError("max_negativity_scan varies theta")
    if spec.initial_state != "superposition":
        raise ValueError("max_negativity_scan uses the superposition initial state")
    if spec.pairs and spec.param:
        raise ValueError("give either a scan parameter or (omega, J) pairs, not both")
    if spec.pairs:
        points = [(th, (("omega", om), ("scatter_j", j))) for th in spec.values for om, j in spec.pairs]
        columns = ("theta", "omega", "scatter_j", "max_negativity")
        keys = [(th, om, j) for th in spec.values for om, j in spec.pairs]
    elif spec.param:
        if not spec.param_values:
            raise ValueError("scan parameter needs values")
        points = [(th, ((spec.param, v),)) for th in spec.values for v in spec.param_values]
        columns = ("theta", "param_value", "max_negativity")
        keys = [(th, v) for th in spec.values for v in spec.param_values]
    else:
        raise ValueError("max_negativity_scan needs a scan parameter or (omega, J) pairs")
    maxima = _map(_ScanTask(spec, window), points, workers)
    rows = [list(k) + [m] for k, m in zip(keys, maxima)]
    prov = _provenance(spec, window=dataclasses.asdict(window),
                       window_samples=window.steps + 1, scan_param=spec.param)
    return ResultTable(columns, np.array(rows, dtype=float), prov)
