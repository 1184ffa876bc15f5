"""Named experiments and the flat key = value settings that resolve them.

Every preset is a set of fixed settings, defaults and required keys. A run
resolves to one of three kinds: a time sweep, a parameter x time grid, or a
max-negativity scan over (theta, parameter).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_STEP_SCALE, TimeGrid
from .errors import ConfigError
from .model import SystemParams, asymmetric_params, symmetric_params
from .sweep import SweepSpec

__all__ = ["EXPERIMENTS", "KEYS", "Resolved", "resolve", "parse_value"]

# key -> type tag
KEYS = {
    "experiment": "name",
    "output": "path",
    "format": "format",
    "atom_count": "int",
    "photon_cutoff": "int",
    "initial_state": "state",
    "measure": "measure",
    "theta": "float",
    "g": "float",
    "g1": "float",
    "omega": "float",
    "scatter_j": "float",
    "delta": "float",
    "kappa": "float",
    "gamma": "float",
    "tau_start": "float",
    "tau_stop": "float",
    "tau_steps": "int",
    "vary": "vary",
    "vary_start": "float",
    "vary_stop": "float",
    "vary_samples": "int",
    "theta_start": "float",
    "theta_stop": "float",
    "theta_samples": "int",
    "param": "param",
    "param_start": "float",
    "param_stop": "float",
    "param_samples": "int",
    "pairs": "pairs",
    "window_start": "float",
    "window_stop": "float",
    "window_steps": "int",
    "step_scale": "float",
}

_CHOICES = {
    "format": ("csv",),
    "state": ("superposition", "w_state", "product_three"),
    "measure": ("negativity", "tripartite_negativity", "max_negativity_over_window"),
    "vary": ("omega", "scatter_j", "g2", "theta"),
    "param": ("omega", "scatter_j"),
}

_IO = {"experiment", "output", "format", "step_scale"}
_PHYS = {"photon_cutoff", "delta", "kappa", "gamma", "omega", "scatter_j", "theta", "g"}
_TIME = {"tau_start", "tau_stop", "tau_steps"}
_VARY = {"vary_start", "vary_stop", "vary_samples"}
_SCAN = {"theta_start", "theta_stop", "theta_samples", "window_start", "window_stop", "window_steps"}
_PARAM = {"param_start", "param_stop", "param_samples"}

_COMMON = {
    "g": 1.0, "delta": 0.0, "kappa": 0.0, "gamma": 0.0, "photon_cutoff": 1,
    "tau_start": 0.0, "tau_stop": 20.0, "tau_steps": 400, "step_scale": DEFAULT_STEP_SCALE,
    "window_start": 0.0, "window_stop": 30.0, "window_steps": 3000,
    "format": "csv",
}


@dataclass(frozen=True)
class Preset:
    kind: str  # time | grid | scan
    fixed: dict
    defaults: dict
    required: tuple = ()
    allowed: frozenset = frozenset()
    help: str = ""


def _grid_preset(theta, vary, help_):
    other = "scatter_j" if vary == "omega" else "omega"
    return Preset(
        "grid",
        fixed={"atom_count": 2, "initial_state": "superposition", "measure": "negativity", "vary": vary},
        defaults={"theta": theta, other: 0.0, "vary_start": 0.0, "vary_stop": 5.0, "vary_samples": 51},
        allowed=frozenset(_IO | _PHYS | _TIME | _VARY) - {vary},
        help=help_,
    )


def _scan_preset(param, help_):
    other = "scatter_j" if param == "omega" else "omega"
    return Preset(
        "scan",
        fixed={"atom_count": 2, "initial_state": "superposition",
               "measure": "max_negativity_over_window", "vary": "theta", "param": param},
        defaults={other: 0.0, "theta_start": 0.0, "theta_stop": math.pi / 2, "theta_samples": 31,
                  "param_start": 0.0, "param_stop": 5.0, "param_samples": 26},
        allowed=frozenset(_IO | _PHYS | _SCAN | _PARAM) - {"theta", param},
        help=help_,
    )


EXPERIMENTS = {
    "fig2a": _grid_preset(math.pi / 4, "omega", "Bell state, J = 0, negativity vs (Omega, tau)"),
    "fig2b": _grid_preset(math.pi / 4, "scatter_j", "Bell state, Omega = 0, negativity vs (J, tau)"),
    "fig2c": _grid_preset(0.0, "omega", "|eg>, J = 0, negativity vs (Omega, tau)"),
    "fig2d": _grid_preset(0.0, "scatter_j", "|eg>, Omega = 0, negativity vs (J, tau)"),
    "fig3a": _scan_preset("omega", "max negativity vs (theta, Omega), J = 0"),
    "fig3b": _scan_preset("scatter_j", "max negativity vs (theta, J), Omega = 0"),
    "fig3c": Preset(
        "scan",
        fixed={"atom_count": 2, "initial_state": "superposition",
               "measure": "max_negativity_over_window", "vary": "theta"},
        defaults={"theta_start": 0.0, "theta_stop": math.pi / 2, "theta_samples": 31},
        required=("pairs",),
        allowed=frozenset(_IO | _PHYS | _SCAN | {"pairs"}) - {"theta", "omega", "scatter_j"},
        help="max negativity vs theta for three (Omega, J) pairs",
    ),
    "fig4": Preset(
        "grid",
        fixed={"atom_count": 2, "initial_state": "superposition", "measure": "negativity",
               "vary": "g2", "omega": 0.0},
        defaults={"theta": math.pi / 4, "scatter_j": 0.0, "g1": 1.0},
        required=("vary_start", "vary_stop", "vary_samples", "tau_stop"),
        allowed=frozenset(_IO | _PHYS | _TIME | _VARY | {"g1"}) - {"omega", "g"},
        help="asymmetric coupling, negativity vs (g2, tau); g2 range and tau_stop required",
    ),
    "fig5": Preset(
        "time",
        fixed={"atom_count": 2, "initial_state": "superposition", "measure": "negativity"},
        defaults={"theta": math.pi / 4, "omega": 0.2, "scatter_j": 0.0, "kappa": 0.5,
                  "gamma": 0.1, "tau_stop": 30.0, "tau_steps": 600},
        allowed=frozenset(_IO | _PHYS | _TIME),
        help="dissipative two-atom negativity vs tau",
    ),
    "fig6": Preset(
        "time",
        fixed={"atom_count": 3, "initial_state": "w_state", "measure": "tripartite_negativity"},
        defaults={"omega": 0.1, "scatter_j": 0.1, "gamma": 0.1, "kappa": 0.5,
                  "tau_stop": 30.0, "tau_steps": 300},
        allowed=frozenset(_IO | _PHYS | _TIME) - {"theta"},
        help="dissipative three-atom tripartite negativity vs tau",
    ),
    "custom": Preset(
        "custom",
        fixed={},
        defaults={"atom_count": 2, "theta": math.pi / 4, "omega": 0.0, "scatter_j": 0.0,
                  "theta_start": 0.0, "theta_stop": math.pi / 2, "theta_samples": 31},
        allowed=frozenset(KEYS) - {"g1"},
        help="any combination of the keys above",
    ),
}

_PI_RE = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?$")


def _parse_float(text: str) -> float:
    s = text.strip().lower()
    m = _PI_RE.match(s)
    if m:
        coef = m.group(1)
        if coef in ("", "+"):
            c = 1.0
        elif coef == "-":
            c = -1.0
        else:
            c = float(coef)
        value = c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    else:
        value = float(s)
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    return value


def parse_value(key: str, text: str):
    """Convert the raw text of ``key`` to its typed value (ValueError on mismatch)."""
    tag = KEYS[key]
    if tag == "float":
        return _parse_float(text)
    if tag == "int":
        s = text.strip()
        if not re.fullmatch(r"[+-]?\d+", s):
            raise ValueError(f"expected an integer, got {s!r}")
        return int(s)
    if tag == "pairs":
        pairs = []
        for chunk in text.split(","):
            if not chunk.strip():
                continue
            parts = chunk.split(":")
            if len(parts) != 2:
                raise ValueError(f"pair {chunk.strip()!r} is not omega:J")
            pairs.append((_parse_float(parts[0]), _parse_float(parts[1])))
        if not pairs:
            raise ValueError("pairs is empty")
        return tuple(pairs)
    value = text.strip()
    if not value:
        raise ValueError("empty value")
    if tag in _CHOICES and value not in _CHOICES[tag]:
        raise ValueError(f"expected one of {', '.join(_CHOICES[tag])}, got {value!r}")
    return value


@dataclass(frozen=True)
class Resolved:
    """A fully validated run: what to execute and every setting that went into it."""

    kind: str
    spec: SweepSpec
    window: TimeGrid | None
    settings: dict


def _linspace(start, stop, samples, name):
    if samples < 1:
        raise ConfigError(f"{name}_samples must be >= 1")
    if samples == 1:
        return (float(start),)
    return tuple(float(v) for v in np.linspace(start, stop, samples))


def resolve(experiment: str, overrides: dict, lines: dict | None = None) -> Resolved:
    """Merge preset fixed/default values with ``overrides`` into a Resolved run."""
    lines = lines or {}
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}",
            lines.get("experiment"),
        )
    preset = EXPERIMENTS[experiment]
    for key in overrides:
        if key in preset.fixed:
            raise ConfigError(f"{key!r} is fixed by experiment {experiment}", lines.get(key))
        if key not in preset.allowed and key not in ("experiment", "output"):
            raise ConfigError(f"key {key!r} is not used by experiment {experiment}", lines.get(key))

    missing = [k for k in preset.required if k not in overrides]
    if missing:
        if "pairs" in missing:
            raise ConfigError(
                f"experiment {experiment} requires 'pairs': the (Omega, J) pairs to compare, "
                "written as pairs = omega:J, omega:J, omega:J"
            )
        raise ConfigError(f"experiment {experiment} requires {', '.join(missing)}")

    s = dict(_COMMON)
    s.update(preset.defaults)
    s.update(preset.fixed)
    s.update(overrides)
    s["experiment"] = experiment

    kind = preset.kind
    if kind == "custom":
        if s.get("measure") == "max_negativity_over_window":
            kind = "scan"
        elif "vary" in s:
            kind = "grid"
        else:
            kind = "time"
    if kind != "scan":
        stray = sorted((_SCAN | _PARAM | {"pairs", "param"}) & set(overrides))
        if stray:
            raise ConfigError(f"key {stray[0]!r} only applies to a max-negativity scan",
                              lines.get(stray[0]))
        for key in _SCAN:
            s.pop(key, None)
    s.setdefault("initial_state", "w_state" if s["atom_count"] == 3 else "superposition")
    s.setdefault("measure", "tripartite_negativity" if s["atom_count"] == 3 else "negativity")

    try:
        spec, window = _build(kind, s)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"experiment {experiment}: {exc}") from None
    return Resolved(kind, spec, window, s)


def _base_params(s: dict) -> SystemParams:
    # a scanned axis is absent from the settings; the sweep fills it per point
    omega, scatter_j = s.get("omega", 0.0), s.get("scatter_j", 0.0)
    if s.get("vary") == "g2" or "g1" in s:
        return asymmetric_params(
            s.get("g1", 1.0), s.get("g1", 1.0), scatter_j=scatter_j, kappa=s["kappa"],
            gamma=s["gamma"], delta=s["delta"], photon_cutoff=s["photon_cutoff"],
        )
    return symmetric_params(
        s["atom_count"], g=s["g"], omega=omega, scatter_j=scatter_j, kappa=s["kappa"],
        gamma=s["gamma"], delta=s["delta"], photon_cutoff=s["photon_cutoff"],
    )


def _build(kind: str, s: dict):
    base = _base_params(s)
    grid = TimeGrid(s["tau_start"], s["tau_stop"], s["tau_steps"])
    common = dict(base=base, grid=grid, initial_state=s["initial_state"],
                  theta=s.get("theta", math.pi / 4), measure=s["measure"], step_scale=s["step_scale"])
    if kind == "time":
        if "vary" in s:
            raise ConfigError("a time sweep takes no vary axis")
        return SweepSpec(**common), None
    if kind == "grid":
        if "vary" not in s:
            raise ConfigError("grid sweep needs 'vary'")
        for k in ("vary_start", "vary_stop", "vary_samples"):
            if k not in s:
                raise ConfigError(f"grid sweep needs {k!r}")
        values = _linspace(s["vary_start"], s["vary_stop"], s["vary_samples"], "vary")
        return SweepSpec(vary=s["vary"], values=values, **common), None
    # scan
    thetas = _linspace(s["theta_start"], s["theta_stop"], s["theta_samples"], "theta")
    window = TimeGrid(s["window_start"], s["window_stop"], s["window_steps"])
    if "pairs" in s:
        return SweepSpec(vary="theta", values=thetas, pairs=s["pairs"], **common), window
    if "param" not in s:
        raise ConfigError("a max-negativity scan needs 'param' or 'pairs'")
    values = _linspace(s.get("param_start", 0.0), s.get("param_stop", 5.0),
                       s.get("param_samples", 26), "param")
    return SweepSpec(vary="theta", values=thetas, param=s["param"], param_values=values,
                     **common), window
