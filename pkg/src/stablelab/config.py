"""Experiment configuration: loading, validation, resolution.

A config file (JSON or YAML, picked by suffix) describes one experiment.
`validate_config` walks the whole document and returns every problem it
can find in one pass rather than stopping at the first, so a user fixes
a bad file in one round trip.  `resolve_config` assumes a clean document
and turns it into the runtime objects the command line drivers consume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coefficients import FIELD_PRESETS, build_field
from .drivers import StableIndexSet
from .errors import ConfigurationError
from .estimators import ConstantPayoff, IndicatorPayoff, RampPayoff
from .geometry import AnisotropicBox, AxisAlignedSet

EXPERIMENT_NAMES = (
    "exit-time",
    "jump-exit",
    "targeted-jump",
    "tube",
    "hit",
    "harmonic",
    "holder",
    "oscillation",
    "levy-system",
    "dynkin",
    "driver-selftest",
)

# keys shared by every experiment that simulates the system
_COMMON_KEYS = {"experiment", "alphas", "x0", "field", "seed", "n_paths",
                "n_threads"}

_EXTRA_KEYS = {
    "exit-time": {"r_list", "k", "dt_steps", "horizon_steps"},
    "jump-exit": {"r", "R_list", "k", "dt_steps", "horizon_steps"},
    "targeted-jump": {"driver_axis", "jump_size", "tube", "horizon", "dt",
                      "jump_threshold"},
    "tube": {"phi_times", "phi_points", "eps", "dt", "jump_threshold"},
    "hit": {"box", "target", "dt_steps", "horizon_steps", "jump_threshold"},
    "harmonic": {"domain", "payoff", "points", "dt_steps", "horizon_steps",
                 "jump_threshold"},
    "holder": {"domain", "payoff", "grid_r", "points_per_axis", "min_pairs",
               "snr", "dt_steps", "horizon_steps", "jump_threshold"},
    "oscillation": {"payoff", "rho", "k_max", "domain_r", "k",
                    "points_per_axis", "dt_steps", "horizon_steps"},
    "levy-system": {"box", "target", "dt", "horizon", "jump_threshold"},
    "dynkin": {"w", "t_list", "jump_threshold", "steps_per_horizon"},
    "driver-selftest": {"experiment", "seed", "gammas", "xi_list",
                        "n_samples"},
}


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def load_config(path) -> dict:
    """Parse a JSON or YAML experiment file into a plain dict."""
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() in (".yaml", ".yml"):
        import yaml

        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"invalid YAML in {p}: {exc}") from exc
    elif p.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON in {p}: {exc}") from exc
    else:
        raise ConfigurationError(
            f"unsupported config suffix {p.suffix!r}; use .json or .yaml")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a mapping")
    return data


# ---------------------------------------------------------------------------
# field-level helpers; each returns the parsed value or None after recording
# a diagnostic, so validation keeps going

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _get_number(cfg, key, diags, *, required=False, default=None,
                minimum=None, maximum=None, open_min=False, open_max=False):
    if key not in cfg:
        if required:
            diags.append(Diagnostic(key, "required field is missing"))
            return None
        return default
    v = cfg[key]
    if not _is_num(v) or not math.isfinite(v):
        diags.append(Diagnostic(key, f"expected a finite number, got {v!r}"))
        return None
    if minimum is not None and (v < minimum or (open_min and v == minimum)):
        op = ">" if open_min else ">="
        diags.append(Diagnostic(key, f"must be {op} {minimum}, got {v}"))
        return None
    if maximum is not None and (v > maximum or (open_max and v == maximum)):
        op = "<" if open_max else "<="
        diags.append(Diagnostic(key, f"must be {op} {maximum}, got {v}"))
        return None
    return float(v)


def _get_integer(cfg, key, diags, *, required=False, default=None,
                 minimum=None, maximum=None):
    if key not in cfg:
        if required:
            diags.append(Diagnostic(key, "required field is missing"))
            return None
        return default
    v = cfg[key]
    if not _is_int(v):
        diags.append(Diagnostic(key, f"expected an integer, got {v!r}"))
        return None
    if minimum is not None and v < minimum:
        diags.append(Diagnostic(key, f"must be >= {minimum}, got {v}"))
        return None
    if maximum is not None and v > maximum:
        diags.append(Diagnostic(key, f"must be <= {maximum}, got {v}"))
        return None
    return int(v)


def _get_number_list(cfg, key, diags, *, required=False, default=None,
                     min_len=1):
    if key not in cfg:
        if required:
            diags.append(Diagnostic(key, "required field is missing"))
            return None
        return default
    v = cfg[key]
    if (not isinstance(v, (list, tuple)) or len(v) < min_len
            or not all(_is_num(x) and math.isfinite(x) for x in v)):
        diags.append(Diagnostic(
            key, f"expected a list of at least {min_len} finite numbers"))
        return None
    return [float(x) for x in v]


def _check_alphas(cfg, diags):
    alphas = _get_number_list(cfg, "alphas", diags, required=True, min_len=2)
    if alphas is None:
        return None
    ok = True
    for i, a in enumerate(alphas):
        if not (0.0 < a < 2.0):
            diags.append(Diagnostic(
                "alphas",
                f"alphas[{i}] = {a} lies outside the allowed open "
                f"interval (0, 2)"))
            ok = False
        elif not (1e-3 <= a <= 2.0 - 1e-3):
            diags.append(Diagnostic(
                "alphas",
                f"alphas[{i}] = {a} is inside (0, 2) but outside the "
                f"numerically supported range [0.001, 1.999]"))
            ok = False
    return alphas if ok else None


def _check_point(cfg, key, diags, dim, *, required=False, default=None):
    pt = _get_number_list(cfg, key, diags, required=required, min_len=1)
    if pt is None:
        return default if key not in cfg and not required else None
    if dim is not None and len(pt) != dim:
        diags.append(Diagnostic(
            key, f"expected {dim} coordinates to match alphas, got {len(pt)}"))
        return None
    return pt


def _check_field(cfg, diags, dim):
    spec = cfg.get("field")
    if spec is None:
        return build_field("identity", {}, dim) if dim else None
    if not isinstance(spec, dict):
        diags.append(Diagnostic("field", "expected a mapping with a preset"))
        return None
    unknown = set(spec) - {"preset", "params"}
    if unknown:
        diags.append(Diagnostic(
            "field", f"unknown keys: {sorted(unknown)}"))
    preset = spec.get("preset")
    if preset not in FIELD_PRESETS:
        diags.append(Diagnostic(
            "field",
            f"unknown preset {preset!r}; choose from "
            f"{sorted(FIELD_PRESETS)}"))
        return None
    params = spec.get("params", {})
    if not isinstance(params, dict):
        diags.append(Diagnostic("field", "params must be a mapping"))
        return None
    if dim is None:
        return None
    try:
        return build_field(preset, params, dim)
    except (ConfigurationError, TypeError, ValueError) as exc:
        diags.append(Diagnostic("field", str(exc)))
        return None


def _check_box(cfg, key, diags, dim, *, required=True):
    spec = cfg.get(key)
    if spec is None:
        if required:
            diags.append(Diagnostic(key, "required field is missing"))
        return None
    if not isinstance(spec, dict):
        diags.append(Diagnostic(key, "expected a mapping with keys r, k, "
                                     "center"))
        return None
    unknown = set(spec) - {"r", "k", "center"}
    if unknown:
        diags.append(Diagnostic(key, f"unknown keys: {sorted(unknown)}"))
    sub = []
    r = _get_number(spec, "r", sub, required=True, minimum=0.0, maximum=1.0,
                    open_min=True)
    k = _get_number(spec, "k", sub, default=1.0, minimum=0.0, open_min=True)
    for d in sub:
        diags.append(Diagnostic(f"{key}.{d.field}", d.message))
    center = spec.get("center")
    if center is not None:
        sub = []
        center = _get_number_list(spec, "center", sub, min_len=1)
        for d in sub:
            diags.append(Diagnostic(f"{key}.center", d.message))
        if center is not None and dim is not None and len(center) != dim:
            diags.append(Diagnostic(
                f"{key}.center", f"expected {dim} coordinates, "
                                 f"got {len(center)}"))
            center = None
    if r is None or k is None or dim is None:
        return None
    if center is None:
        center = [0.0] * dim
    return {"center": center, "r": r, "k": k}


def _build_box(box_spec, indices):
    return AnisotropicBox(np.asarray(box_spec["center"], dtype=float),
                          box_spec["r"], indices, k=box_spec["k"])


def _check_target(cfg, key, diags, dim):
    """Either a box mapping (anisotropic target) or {lo, hi} / half-space."""
    spec = cfg.get(key)
    if spec is None:
        diags.append(Diagnostic(key, "required field is missing"))
        return None
    if not isinstance(spec, dict):
        diags.append(Diagnostic(key, "expected a mapping"))
        return None
    if "r" in spec:
        box = _check_box(cfg, key, diags, dim)
        return None if box is None else ("box", box)
    if "axis" in spec or "side" in spec or "threshold" in spec:
        unknown = set(spec) - {"axis", "threshold", "side"}
        if unknown:
            diags.append(Diagnostic(key, f"unknown keys: {sorted(unknown)}"))
        sub = []
        axis = _get_integer(spec, "axis", sub, required=True, minimum=0)
        threshold = _get_number(spec, "threshold", sub, required=True)
        for d in sub:
            diags.append(Diagnostic(f"{key}.{d.field}", d.message))
        side = spec.get("side", "above")
        if side not in ("above", "below"):
            diags.append(Diagnostic(
                f"{key}.side", f"must be 'above' or 'below', got {side!r}"))
            return None
        if axis is None or threshold is None:
            return None
        if dim is not None and axis >= dim:
            diags.append(Diagnostic(
                f"{key}.axis", f"axis {axis} out of range for dimension "
                               f"{dim}"))
            return None
        return ("halfspace", {"axis": axis, "threshold": threshold,
                              "side": side})
    if "lo" in spec or "hi" in spec:
        unknown = set(spec) - {"lo", "hi"}
        if unknown:
            diags.append(Diagnostic(key, f"unknown keys: {sorted(unknown)}"))
        sub = []
        lo = _get_number_list(spec, "lo", sub, required=True)
        hi = _get_number_list(spec, "hi", sub, required=True)
        for d in sub:
            diags.append(Diagnostic(f"{key}.{d.field}", d.message))
        if lo is None or hi is None:
            return None
        if len(lo) != len(hi) or (dim is not None and len(lo) != dim):
            diags.append(Diagnostic(
                key, "lo and hi must both have one bound per coordinate"))
            return None
        if any(a > b for a, b in zip(lo, hi)):
            diags.append(Diagnostic(key, "each lo must be <= the matching "
                                         "hi"))
            return None
        return ("rect", {"lo": lo, "hi": hi})
    diags.append(Diagnostic(
        key, "expected box keys {center, r, k}, half-space keys "
             "{axis, threshold, side}, or bounds {lo, hi}"))
    return None


def _build_target_set(kind, spec, indices) -> AxisAlignedSet:
    if kind == "box":
        return AxisAlignedSet.from_box(_build_box(spec, indices))
    if kind == "halfspace":
        return AxisAlignedSet.half_space(spec["axis"], spec["threshold"],
                                         indices.dim, side=spec["side"])
    return AxisAlignedSet.from_bounds(np.asarray(spec["lo"], dtype=float),
                                      np.asarray(spec["hi"], dtype=float))


_PAYOFF_KEYS = {
    "halfspace": {"kind", "axis", "threshold", "side"},
    "ramp": {"kind", "axis", "lo", "hi"},
    "constant": {"kind", "level"},
    "box": {"kind", "center", "r", "k"},
}


def _check_payoff(cfg, diags, dim, key="payoff"):
    spec = cfg.get(key)
    if spec is None:
        diags.append(Diagnostic(key, "required field is missing"))
        return None
    if not isinstance(spec, dict) or "kind" not in spec:
        diags.append(Diagnostic(
            key, "expected a mapping with a 'kind' of "
                 "halfspace, ramp, constant, or box"))
        return None
    kind = spec["kind"]
    if kind not in _PAYOFF_KEYS:
        diags.append(Diagnostic(
            f"{key}.kind", f"unknown payoff kind {kind!r}; choose from "
                           f"{sorted(_PAYOFF_KEYS)}"))
        return None
    unknown = set(spec) - _PAYOFF_KEYS[kind]
    if unknown:
        diags.append(Diagnostic(key, f"unknown keys: {sorted(unknown)}"))
    sub: list[Diagnostic] = []
    out = None
    if kind == "halfspace":
        axis = _get_integer(spec, "axis", sub, required=True, minimum=0)
        threshold = _get_number(spec, "threshold", sub, required=True)
        side = spec.get("side", "above")
        if side not in ("above", "below"):
            sub.append(Diagnostic("side", f"must be 'above' or 'below', "
                                          f"got {side!r}"))
        elif axis is not None and threshold is not None:
            if dim is not None and axis >= dim:
                sub.append(Diagnostic("axis", f"axis {axis} out of range"))
            else:
                out = ("halfspace", {"axis": axis, "threshold": threshold,
                                     "side": side})
    elif kind == "ramp":
        axis = _get_integer(spec, "axis", sub, required=True, minimum=0)
        lo = _get_number(spec, "lo", sub, required=True)
        hi = _get_number(spec, "hi", sub, required=True)
        if axis is not None and lo is not None and hi is not None:
            if hi <= lo:
                sub.append(Diagnostic("hi", f"must exceed lo = {lo}"))
            elif dim is not None and axis >= dim:
                sub.append(Diagnostic("axis", f"axis {axis} out of range"))
            else:
                out = ("ramp", {"axis": axis, "lo": lo, "hi": hi})
    elif kind == "constant":
        level = _get_number(spec, "level", sub, required=True)
        if level is not None:
            out = ("constant", {"level": level})
    else:  # box indicator
        box = _check_box({"payoff_box": {k: v for k, v in spec.items()
                                         if k != "kind"}},
                         "payoff_box", sub, dim)
        if box is not None:
            out = ("box", box)
    for d in sub:
        diags.append(Diagnostic(f"{key}.{d.field}", d.message))
    return out


def _build_payoff(kind, spec, indices):
    if kind == "halfspace":
        region = AxisAlignedSet.half_space(spec["axis"], spec["threshold"],
                                           indices.dim, side=spec["side"])
        return IndicatorPayoff(region)
    if kind == "ramp":
        return RampPayoff(spec["axis"], spec["lo"], spec["hi"])
    if kind == "constant":
        return ConstantPayoff(spec["level"])
    return IndicatorPayoff(_build_box(spec, indices))


# ---------------------------------------------------------------------------
# per-experiment validation

def _validate_common(cfg, diags):
    """Shared simulation fields.  Returns (alphas, x0, field)."""
    alphas = _check_alphas(cfg, diags)
    dim = len(alphas) if alphas else None
    x0 = _check_point(cfg, "x0", diags, dim,
                      default=[0.0] * dim if dim else None)
    field = _check_field(cfg, diags, dim)
    _get_integer(cfg, "seed", diags, default=0, minimum=0)
    _get_integer(cfg, "n_paths", diags, required=True, minimum=1)
    _get_integer(cfg, "n_threads", diags, default=1, minimum=1)
    return alphas, x0, field


def _validate_exit_time(cfg, diags):
    alphas, _, _ = _validate_common(cfg, diags)
    r_list = _get_number_list(cfg, "r_list", diags, required=True, min_len=2)
    if r_list is not None:
        for r in r_list:
            if not (0.0 < r <= 1.0):
                diags.append(Diagnostic(
                    "r_list", f"each radius must lie in (0, 1], got {r}"))
        if len(set(r_list)) < 2:
            diags.append(Diagnostic(
                "r_list", "need at least two distinct radii for a slope"))
    _get_number(cfg, "k", diags, default=1.0, minimum=0.0, open_min=True)
    _get_integer(cfg, "dt_steps", diags, default=128, minimum=2)
    _get_integer(cfg, "horizon_steps", diags, default=32, minimum=1)
    return alphas


def _validate_jump_exit(cfg, diags):
    _validate_common(cfg, diags)
    r = _get_number(cfg, "r", diags, required=True, minimum=0.0, maximum=1.0,
                    open_min=True)
    outer = _get_number_list(cfg, "R_list", diags, required=True, min_len=2)
    if outer is not None and r is not None:
        for R in outer:
            if R < 2.0 * r:
                diags.append(Diagnostic(
                    "R_list",
                    f"every outer radius must satisfy R >= 2r = {2.0 * r}; "
                    f"got {R}"))
        if len(set(outer)) < 2:
            diags.append(Diagnostic(
                "R_list", "need at least two distinct outer radii"))
    _get_number(cfg, "k", diags, default=1.0, minimum=0.0, open_min=True)
    _get_integer(cfg, "dt_steps", diags, default=64, minimum=2)
    _get_integer(cfg, "horizon_steps", diags, default=32, minimum=1)


def _validate_targeted_jump(cfg, diags):
    alphas, _, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    axis = _get_integer(cfg, "driver_axis", diags, required=True, minimum=0)
    if axis is not None and dim is not None and axis >= dim:
        diags.append(Diagnostic(
            "driver_axis", f"axis {axis} out of range for dimension {dim}"))
    _get_number(cfg, "jump_size", diags, required=True)
    _get_number(cfg, "tube", diags, required=True, minimum=0.0, open_min=True)
    horizon = _get_number(cfg, "horizon", diags, required=True, minimum=0.0,
                          open_min=True)
    dt = _get_number(cfg, "dt", diags, minimum=0.0, open_min=True,
                     default=None if horizon is None else horizon / 256.0)
    if dt is not None and horizon is not None and dt > horizon:
        diags.append(Diagnostic("dt", f"must not exceed horizon {horizon}"))
    _get_number(cfg, "jump_threshold", diags, default=1.0, minimum=0.0,
                open_min=True)


def _validate_tube(cfg, diags):
    alphas, x0, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    times = _get_number_list(cfg, "phi_times", diags, required=True,
                             min_len=2)
    if times is not None:
        if times[0] != 0.0:
            diags.append(Diagnostic("phi_times", "first time must be 0"))
        if any(b <= a for a, b in zip(times, times[1:])):
            diags.append(Diagnostic("phi_times",
                                    "times must be strictly increasing"))
    pts = cfg.get("phi_points")
    if pts is None:
        diags.append(Diagnostic("phi_points", "required field is missing"))
        pts = None
    elif (not isinstance(pts, list)
          or not all(isinstance(p, (list, tuple))
                     and all(_is_num(v) for v in p) for p in pts)):
        diags.append(Diagnostic("phi_points", "expected a list of points"))
        pts = None
    else:
        if times is not None and len(pts) != len(times):
            diags.append(Diagnostic(
                "phi_points", f"need one point per time: "
                              f"{len(times)} times, {len(pts)} points"))
        if dim is not None and any(len(p) != dim for p in pts):
            diags.append(Diagnostic(
                "phi_points", f"each point needs {dim} coordinates"))
    eps = _get_number(cfg, "eps", diags, required=True, minimum=0.0,
                      open_min=True)
    if (eps is not None and pts and x0 is not None and dim is not None
            and len(pts[0]) == dim):
        start_gap = math.dist(pts[0], x0)
        if start_gap >= eps:
            diags.append(Diagnostic(
                "phi_points", f"path must start inside the tube: "
                              f"|phi(0) - x0| = {start_gap:.3g} >= eps"))
    horizon = times[-1] if times else None
    _get_number(cfg, "dt", diags, minimum=0.0, open_min=True,
                default=None if horizon is None else horizon / 256.0)
    _get_number(cfg, "jump_threshold", diags, default=1.0, minimum=0.0,
                open_min=True)


def _validate_hit(cfg, diags):
    alphas, x0, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    box = _check_box(cfg, "box", diags, dim)
    _check_target(cfg, "target", diags, dim)
    if box is not None and x0 is not None and alphas is not None:
        indices = StableIndexSet(alphas)
        domain = _build_box(box, indices)
        if not domain.dilated(0.5).contains(np.asarray(x0)):
            diags.append(Diagnostic(
                "x0", "start point must lie in the half-dilation of the "
                      "box"))
    _get_integer(cfg, "dt_steps", diags, default=64, minimum=2)
    _get_integer(cfg, "horizon_steps", diags, default=32, minimum=1)
    _get_number(cfg, "jump_threshold", diags, minimum=0.0, open_min=True)


def _validate_harmonic(cfg, diags):
    alphas, _, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    box = _check_box(cfg, "domain", diags, dim)
    _check_payoff(cfg, diags, dim)
    pts = cfg.get("points")
    if pts is None:
        diags.append(Diagnostic("points", "required field is missing"))
    elif (not isinstance(pts, list) or not pts
          or not all(isinstance(p, (list, tuple))
                     and all(_is_num(v) for v in p) for p in pts)):
        diags.append(Diagnostic("points", "expected a nonempty list of "
                                          "points"))
    else:
        if dim is not None and any(len(p) != dim for p in pts):
            diags.append(Diagnostic("points",
                                    f"each point needs {dim} coordinates"))
        elif box is not None and alphas is not None:
            indices = StableIndexSet(alphas)
            domain = _build_box(box, indices)
            for i, p in enumerate(pts):
                if not domain.contains(np.asarray(p, dtype=float)):
                    diags.append(Diagnostic(
                        "points", f"points[{i}] lies outside the domain"))
    _get_integer(cfg, "dt_steps", diags, default=64, minimum=2)
    _get_integer(cfg, "horizon_steps", diags, default=32, minimum=1)
    _get_number(cfg, "jump_threshold", diags, minimum=0.0, open_min=True)


def _validate_holder(cfg, diags):
    alphas, _, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    box = _check_box(cfg, "domain", diags, dim)
    _check_payoff(cfg, diags, dim)
    grid_r = _get_number(cfg, "grid_r", diags, required=True, minimum=0.0,
                         maximum=1.0, open_min=True)
    if grid_r is not None and box is not None and grid_r >= box["r"]:
        diags.append(Diagnostic(
            "grid_r", f"evaluation lattice radius must be smaller than the "
                      f"domain radius {box['r']}"))
    _get_integer(cfg, "points_per_axis", diags, default=4, minimum=2)
    _get_integer(cfg, "min_pairs", diags, default=10, minimum=2)
    _get_number(cfg, "snr", diags, default=3.0, minimum=0.0)
    _get_integer(cfg, "dt_steps", diags, default=64, minimum=2)
    _get_integer(cfg, "horizon_steps", diags, default=32, minimum=1)
    _get_number(cfg, "jump_threshold", diags, minimum=0.0, open_min=True)


def _validate_oscillation(cfg, diags):
    alphas, _, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    _check_payoff(cfg, diags, dim)
    rho = _get_number(cfg, "rho", diags, required=True, minimum=0.0,
                      maximum=1.0, open_min=True, open_max=True)
    _get_integer(cfg, "k_max", diags, required=True, minimum=2)
    domain_r = _get_number(cfg, "domain_r", diags, default=1.0, minimum=0.0,
                           maximum=1.0, open_min=True)
    if rho is not None and domain_r is not None and rho >= domain_r:
        diags.append(Diagnostic(
            "rho", f"largest oscillation scale rho = {rho} must sit inside "
                   f"the domain radius {domain_r}"))
    _get_number(cfg, "k", diags, default=1.0, minimum=0.0, open_min=True)
    _get_integer(cfg, "points_per_axis", diags, default=3, minimum=2)
    _get_integer(cfg, "dt_steps", diags, default=64, minimum=2)
    _get_integer(cfg, "horizon_steps", diags, default=32, minimum=1)


def _validate_levy_system(cfg, diags):
    alphas, x0, field = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    box = _check_box(cfg, "box", diags, dim)
    target = _check_target(cfg, "target", diags, dim)
    _get_number(cfg, "dt", diags, required=True, minimum=0.0, open_min=True)
    _get_number(cfg, "horizon", diags, required=True, minimum=0.0,
                open_min=True)
    threshold = _get_number(cfg, "jump_threshold", diags, minimum=0.0,
                            open_min=True)
    if (box is not None and target is not None and alphas is not None
            and x0 is not None and field is not None):
        indices = StableIndexSet(alphas)
        domain = _build_box(box, indices)
        if not domain.contains(np.asarray(x0)):
            diags.append(Diagnostic("x0", "start point must lie inside the "
                                          "box"))
        source = AxisAlignedSet.from_box(domain)
        tset = _build_target_set(target[0], target[1], indices)
        gap = source.gap_to(tset)
        if gap <= 0.0:
            diags.append(Diagnostic(
                "target", "target must be separated from the box by a "
                          "positive gap"))
        else:
            beta = threshold
            if beta is None:
                beta = 0.1 * float(np.min(domain.halfwidths))
            reach = beta * field.column_bound(domain)
            if reach >= gap:
                diags.append(Diagnostic(
                    "jump_threshold",
                    f"small-jump reach {reach:.3g} crosses the gap "
                    f"{gap:.3g}; lower jump_threshold below "
                    f"{gap / field.column_bound(domain):.3g}"))


def _validate_dynkin(cfg, diags):
    alphas, _, _ = _validate_common(cfg, diags)
    dim = len(alphas) if alphas else None
    w = _check_point(cfg, "w", diags, dim, required=True)
    if w is not None and all(v == 0.0 for v in w):
        diags.append(Diagnostic("w", "direction vector must be nonzero"))
    t_list = _get_number_list(cfg, "t_list", diags, required=True, min_len=1)
    if t_list is not None and any(t <= 0.0 for t in t_list):
        diags.append(Diagnostic("t_list", "every horizon must be positive"))
    _get_number(cfg, "jump_threshold", diags, default=1.0, minimum=0.0,
                open_min=True)
    _get_integer(cfg, "steps_per_horizon", diags, default=64, minimum=2)


def _validate_driver_selftest(cfg, diags):
    _get_integer(cfg, "seed", diags, default=0, minimum=0)
    gammas = _get_number_list(cfg, "gammas", diags,
                              default=[0.5, 1.0, 1.5], min_len=1)
    if gammas is not None:
        for g in gammas:
            if not (1e-3 <= g <= 2.0 - 1e-3):
                diags.append(Diagnostic(
                    "gammas", f"index {g} lies outside the allowed open "
                              f"interval (0, 2)"))
    xi = _get_number_list(cfg, "xi_list", diags, default=[0.5, 1.0, 2.0],
                          min_len=1)
    if xi is not None and any(v <= 0.0 for v in xi):
        diags.append(Diagnostic("xi_list", "frequencies must be positive"))
    _get_integer(cfg, "n_samples", diags, default=1_000_000, minimum=1000)


_VALIDATORS = {
    "exit-time": _validate_exit_time,
    "jump-exit": _validate_jump_exit,
    "targeted-jump": _validate_targeted_jump,
    "tube": _validate_tube,
    "hit": _validate_hit,
    "harmonic": _validate_harmonic,
    "holder": _validate_holder,
    "oscillation": _validate_oscillation,
    "levy-system": _validate_levy_system,
    "dynkin": _validate_dynkin,
    "driver-selftest": _validate_driver_selftest,
}


def validate_config(cfg: dict) -> list[Diagnostic]:
    """Collect every diagnostic for the document; empty list means valid."""
    diags: list[Diagnostic] = []
    if not isinstance(cfg, dict):
        return [Diagnostic("config", "config root must be a mapping")]
    name = cfg.get("experiment")
    if name is None:
        diags.append(Diagnostic("experiment", "required field is missing"))
        # without an experiment the universally required fields are still
        # worth reporting so an empty file lists everything at once
        if "alphas" not in cfg:
            diags.append(Diagnostic("alphas", "required field is missing"))
        if "n_paths" not in cfg:
            diags.append(Diagnostic("n_paths", "required field is missing"))
        return diags
    if name not in EXPERIMENT_NAMES:
        diags.append(Diagnostic(
            "experiment", f"unknown experiment {name!r}; choose from "
                          f"{list(EXPERIMENT_NAMES)}"))
        return diags
    allowed = _EXTRA_KEYS[name]
    if name != "driver-selftest":
        allowed = _COMMON_KEYS | allowed
    unknown = sorted(set(cfg) - allowed)
    for key in unknown:
        diags.append(Diagnostic(key, f"unknown key for experiment "
                                     f"{name!r}"))
    _VALIDATORS[name](cfg, diags)
    return diags


# ---------------------------------------------------------------------------
# resolution: assumes a clean document (validate first)

def resolve_config(cfg: dict, *, seed=None, n_threads=None) -> dict:
    """Fill defaults and build runtime objects.

    `seed` and `n_threads` override the document when given (command line
    flags win).  The returned mapping carries both the constructed objects
    and `resolved`, a plain-JSON echo of every effective setting.
    """
    diags = validate_config(cfg)
    if diags:
        raise ConfigurationError(
            "invalid config: " + "; ".join(str(d) for d in diags))
    name = cfg["experiment"]
    out: dict = {"experiment": name}
    resolved: dict = {"experiment": name}

    if name == "driver-selftest":
        out["seed"] = resolved["seed"] = int(
            seed if seed is not None else cfg.get("seed", 0))
        out["gammas"] = resolved["gammas"] = [
            float(g) for g in cfg.get("gammas", [0.5, 1.0, 1.5])]
        out["xi_list"] = resolved["xi_list"] = [
            float(v) for v in cfg.get("xi_list", [0.5, 1.0, 2.0])]
        out["n_samples"] = resolved["n_samples"] = int(
            cfg.get("n_samples", 1_000_000))
        out["resolved"] = resolved
        return out

    alphas = [float(a) for a in cfg["alphas"]]
    indices = StableIndexSet(alphas)
    dim = indices.dim
    x0 = np.asarray(cfg.get("x0", [0.0] * dim), dtype=float)
    field_spec = cfg.get("field", {"preset": "identity"})
    field = build_field(field_spec.get("preset", "identity"),
                        field_spec.get("params", {}), dim)
    out.update(indices=indices, x0=x0, field=field)
    out["seed"] = int(seed if seed is not None else cfg.get("seed", 0))
    out["n_paths"] = int(cfg["n_paths"])
    out["n_threads"] = int(
        n_threads if n_threads is not None else cfg.get("n_threads", 1))
    resolved.update(
        alphas=alphas, x0=x0.tolist(),
        field={"preset": field_spec.get("preset", "identity"),
               "params": field_spec.get("params", {})},
        seed=out["seed"], n_paths=out["n_paths"],
        n_threads=out["n_threads"])

    def put(key, value):
        out[key] = value
        resolved[key] = value

    if name == "exit-time":
        put("r_list", [float(r) for r in cfg["r_list"]])
        put("k", float(cfg.get("k", 1.0)))
        put("dt_steps", int(cfg.get("dt_steps", 128)))
        put("horizon_steps", int(cfg.get("horizon_steps", 32)))
    elif name == "jump-exit":
        put("r", float(cfg["r"]))
        put("R_list", [float(R) for R in cfg["R_list"]])
        put("k", float(cfg.get("k", 1.0)))
        put("dt_steps", int(cfg.get("dt_steps", 64)))
        put("horizon_steps", int(cfg.get("horizon_steps", 32)))
    elif name == "targeted-jump":
        put("driver_axis", int(cfg["driver_axis"]))
        put("jump_size", float(cfg["jump_size"]))
        put("tube", float(cfg["tube"]))
        put("horizon", float(cfg["horizon"]))
        put("dt", float(cfg.get("dt", out["horizon"] / 256.0)))
        put("jump_threshold", float(cfg.get("jump_threshold", 1.0)))
    elif name == "tube":
        put("phi_times", [float(t) for t in cfg["phi_times"]])
        put("phi_points", [[float(v) for v in p] for p in cfg["phi_points"]])
        put("eps", float(cfg["eps"]))
        put("dt", float(cfg.get("dt", out["phi_times"][-1] / 256.0)))
        put("jump_threshold", float(cfg.get("jump_threshold", 1.0)))
    elif name == "hit":
        box_spec = _checked_box(cfg, "box", dim)
        target = _checked_target(cfg, "target", dim)
        out["box"] = _build_box(box_spec, indices)
        resolved["box"] = box_spec
        kind, spec = target
        if kind == "box":
            out["target"] = _build_box(spec, indices)
        else:
            out["target"] = _build_target_set(kind, spec, indices)
        resolved["target"] = {"kind": kind, **spec}
        put("dt_steps", int(cfg.get("dt_steps", 64)))
        put("horizon_steps", int(cfg.get("horizon_steps", 32)))
        jt = cfg.get("jump_threshold")
        put("jump_threshold", None if jt is None else float(jt))
    elif name in ("harmonic", "holder"):
        box_spec = _checked_box(cfg, "domain", dim)
        out["domain"] = _build_box(box_spec, indices)
        resolved["domain"] = box_spec
        kind, spec = _checked_payoff(cfg, dim)
        out["payoff"] = _build_payoff(kind, spec, indices)
        resolved["payoff"] = {"kind": kind, **spec}
        put("dt_steps", int(cfg.get("dt_steps", 64)))
        put("horizon_steps", int(cfg.get("horizon_steps", 32)))
        jt = cfg.get("jump_threshold")
        put("jump_threshold", None if jt is None else float(jt))
        if name == "harmonic":
            put("points", [[float(v) for v in p] for p in cfg["points"]])
        else:
            put("grid_r", float(cfg["grid_r"]))
            put("points_per_axis", int(cfg.get("points_per_axis", 4)))
            put("min_pairs", int(cfg.get("min_pairs", 10)))
            put("snr", float(cfg.get("snr", 3.0)))
    elif name == "oscillation":
        kind, spec = _checked_payoff(cfg, dim)
        out["payoff"] = _build_payoff(kind, spec, indices)
        resolved["payoff"] = {"kind": kind, **spec}
        put("rho", float(cfg["rho"]))
        put("k_max", int(cfg["k_max"]))
        put("domain_r", float(cfg.get("domain_r", 1.0)))
        put("k", float(cfg.get("k", 1.0)))
        put("points_per_axis", int(cfg.get("points_per_axis", 3)))
        put("dt_steps", int(cfg.get("dt_steps", 64)))
        put("horizon_steps", int(cfg.get("horizon_steps", 32)))
    elif name == "levy-system":
        box_spec = _checked_box(cfg, "box", dim)
        out["box"] = _build_box(box_spec, indices)
        resolved["box"] = box_spec
        kind, spec = _checked_target(cfg, "target", dim)
        out["target"] = _build_target_set(kind, spec, indices)
        resolved["target"] = {"kind": kind, **spec}
        put("dt", float(cfg["dt"]))
        put("horizon", float(cfg["horizon"]))
        jt = cfg.get("jump_threshold")
        put("jump_threshold", None if jt is None else float(jt))
    elif name == "dynkin":
        put("w", [float(v) for v in cfg["w"]])
        put("t_list", [float(t) for t in cfg["t_list"]])
        put("jump_threshold", float(cfg.get("jump_threshold", 1.0)))
        put("steps_per_horizon", int(cfg.get("steps_per_horizon", 64)))

    out["resolved"] = resolved
    return out


def _checked_box(cfg, key, dim):
    scratch: list[Diagnostic] = []
    box = _check_box(cfg, key, scratch, dim)
    if box is None:
        raise ConfigurationError(f"invalid {key}: "
                                 + "; ".join(map(str, scratch)))
    return box


def _checked_target(cfg, key, dim):
    scratch: list[Diagnostic] = []
    target = _check_target(cfg, key, scratch, dim)
    if target is None:
        raise ConfigurationError(f"invalid {key}: "
                                 + "; ".join(map(str, scratch)))
    return target


def _checked_payoff(cfg, dim):
    scratch: list[Diagnostic] = []
    payoff = _check_payoff(cfg, scratch, dim)
    if payoff is None:
        raise ConfigurationError("invalid payoff: "
                                 + "; ".join(map(str, scratch)))
    return payoff
