"""Scenario files: strict schema, validation with field paths, model building.

A scenario is a JSON object with the keys below; unknown keys are errors
anywhere in the tree (silent typos would invalidate the claims a run makes).

    name          str
    operator      {"kind": "explicit", "eigenvalues": [...]}
                  {"kind": "power", "scale": a, "exponent": g, "n_modes"?: N}
                  {"kind": "dirichlet", "length": L, "n_modes"?: N}
    data          {"kind": "explicit", "coefficients": [...]}
                  {"kind": "power", "amplitude": c, "exponent": b}
                  {"kind": "profile", "name": "one"|"sine"|"hat"}
                  {"kind": "csv", "path": "samples.csv"}
    queries       {"alphas": [...], "horizon": T, "theta_mode": "theorem"|"smr"}
    sweep?        {"n_list": [...ascending...], "stability_tol": tol}
    monte_carlo?  {"n_paths": P, "grid_steps": n, "seed": s, "k_sigma": k,
                   "bias": "expected-discrete"|"doubling"|float,
                   "dump_ensemble": bool}
    tolerance?    quadrature tolerance (default 1e-8)
    output_dir?   str

The model truncation is the explicit length, the operator's ``n_modes``, or
the top of the sweep list, in that order of preference.  Profile and csv
data require the dirichlet operator.  A seed is required whenever the
monte_carlo block is present.
"""

from __future__ import annotations

import json
import math
import numbers
from importlib import resources

import numpy as np

from .dirichlet import (
    GridFunction,
    IntervalDomain,
    PROFILES,
    dirichlet_operator,
    profile_coefficients,
    sine_coefficients,
)
from .errors import ScenarioError
from .spectral import SpectralOperator, SpectralVector, make_operator, make_vector

__all__ = [
    "load_scenario",
    "parse_scenario",
    "bundled_scenarios",
    "build_model",
    "THETA_MODES",
]

THETA_MODES = ("theorem", "smr")
_BIAS_MODES = ("expected-discrete", "doubling")


def _require(cond, field, message):
    if not cond:
        raise ScenarioError(field, message)


def _check_keys(obj, field, allowed, required):
    _require(isinstance(obj, dict), field, "must be an object")
    unknown = sorted(set(obj) - set(allowed))
    _require(not unknown, field, f"unknown key(s): {', '.join(unknown)}")
    missing = sorted(set(required) - set(obj))
    _require(not missing, field, f"missing required key(s): {', '.join(missing)}")


def _real(value, field, *, minimum=None, exclusive=False, maximum=None, max_exclusive=False):
    _require(
        isinstance(value, numbers.Real) and not isinstance(value, bool)
        and math.isfinite(float(value)),
        field, "must be a finite number",
    )
    value = float(value)
    if minimum is not None:
        ok = value > minimum if exclusive else value >= minimum
        _require(ok, field, f"must be {'>' if exclusive else '>='} {minimum}")
    if maximum is not None:
        ok = value < maximum if max_exclusive else value <= maximum
        _require(ok, field, f"must be {'<' if max_exclusive else '<='} {maximum}")
    return value


def _integer(value, field, *, minimum=None):
    _require(
        isinstance(value, numbers.Integral) and not isinstance(value, bool),
        field, "must be an integer",
    )
    value = int(value)
    if minimum is not None:
        _require(value >= minimum, field, f"must be >= {minimum}")
    return value


def _parse_operator(spec):
    _require(isinstance(spec, dict) and "kind" in spec, "operator", "must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "explicit":
        _check_keys(spec, "operator", {"kind", "eigenvalues"}, {"kind", "eigenvalues"})
        eig = spec["eigenvalues"]
        _require(isinstance(eig, list) and eig, "operator.eigenvalues", "must be a nonempty list")
        vals = [_real(v, f"operator.eigenvalues[{i}]", minimum=0.0, exclusive=True)
                for i, v in enumerate(eig)]
        return {"kind": "explicit", "eigenvalues": vals}
    if kind == "power":
        _check_keys(spec, "operator", {"kind", "scale", "exponent", "n_modes"}, {"kind", "scale", "exponent"})
        out = {
            "kind": "power",
            "scale": _real(spec["scale"], "operator.scale", minimum=0.0, exclusive=True),
            "exponent": _real(spec["exponent"], "operator.exponent", minimum=0.0, exclusive=True),
        }
        if "n_modes" in spec:
            out["n_modes"] = _integer(spec["n_modes"], "operator.n_modes", minimum=1)
        return out
    if kind == "dirichlet":
        _check_keys(spec, "operator", {"kind", "length", "n_modes"}, {"kind", "length"})
        out = {"kind": "dirichlet",
               "length": _real(spec["length"], "operator.length", minimum=0.0, exclusive=True)}
        if "n_modes" in spec:
            out["n_modes"] = _integer(spec["n_modes"], "operator.n_modes", minimum=1)
        return out
    raise ScenarioError("operator.kind", f"unknown kind {kind!r}")


def _parse_data(spec):
    _require(isinstance(spec, dict) and "kind" in spec, "data", "must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "explicit":
        _check_keys(spec, "data", {"kind", "coefficients"}, {"kind", "coefficients"})
        coef = spec["coefficients"]
        _require(isinstance(coef, list) and coef, "data.coefficients", "must be a nonempty list")
        vals = [_real(v, f"data.coefficients[{i}]") for i, v in enumerate(coef)]
        return {"kind": "explicit", "coefficients": vals}
    if kind == "power":
        _check_keys(spec, "data", {"kind", "amplitude", "exponent"}, {"kind", "amplitude", "exponent"})
        return {
            "kind": "power",
            "amplitude": _real(spec["amplitude"], "data.amplitude", minimum=0.0, exclusive=True),
            "exponent": _real(spec["exponent"], "data.exponent", minimum=0.0),
        }
    if kind == "profile":
        _check_keys(spec, "data", {"kind", "name"}, {"kind", "name"})
        _require(spec["name"] in PROFILES, "data.name",
                 f"unknown profile; choose from {sorted(PROFILES)}")
        return {"kind": "profile", "name": spec["name"]}
    if kind == "csv":
        _check_keys(spec, "data", {"kind", "path"}, {"kind", "path"})
        _require(isinstance(spec["path"], str) and spec["path"], "data.path", "must be a path")
        return {"kind": "csv", "path": spec["path"]}
    raise ScenarioError("data.kind", f"unknown kind {kind!r}")


def parse_scenario(raw: dict) -> dict:
    """Validate a raw scenario object and return its normalized form."""
    _check_keys(raw, "scenario",
                {"name", "operator", "data", "queries", "sweep", "monte_carlo",
                 "tolerance", "output_dir"},
                {"name", "operator", "data", "queries"})
    _require(isinstance(raw["name"], str) and raw["name"], "name", "must be a nonempty string")

    out = {"name": raw["name"],
           "operator": _parse_operator(raw["operator"]),
           "data": _parse_data(raw["data"])}

    q = raw["queries"]
    _check_keys(q, "queries", {"alphas", "horizon", "theta_mode"}, {"alphas", "horizon"})
    _require(isinstance(q["alphas"], list) and q["alphas"], "queries.alphas", "must be a nonempty list")
    alphas = [
        _real(a, f"queries.alphas[{i}]", minimum=0.0, maximum=0.5, max_exclusive=True)
        for i, a in enumerate(q["alphas"])
    ]
    mode = q.get("theta_mode", "theorem")
    _require(mode in THETA_MODES, "queries.theta_mode", f"must be one of {THETA_MODES}")
    out["queries"] = {
        "alphas": alphas,
        "horizon": _real(q["horizon"], "queries.horizon", minimum=0.0, exclusive=True),
        "theta_mode": mode,
    }

    if "sweep" in raw:
        sw = raw["sweep"]
        _check_keys(sw, "sweep", {"n_list", "stability_tol"}, {"n_list"})
        _require(isinstance(sw["n_list"], list) and len(sw["n_list"]) >= 2,
                 "sweep.n_list", "must list at least two truncations")
        n_list = [_integer(n, f"sweep.n_list[{i}]", minimum=1) for i, n in enumerate(sw["n_list"])]
        _require(n_list == sorted(n_list) and len(set(n_list)) == len(n_list),
                 "sweep.n_list", "must be strictly ascending")
        out["sweep"] = {
            "n_list": n_list,
            "stability_tol": _real(sw.get("stability_tol", 0.05), "sweep.stability_tol",
                                   minimum=0.0, exclusive=True),
        }

    if "monte_carlo" in raw:
        mc = raw["monte_carlo"]
        _check_keys(mc, "monte_carlo",
                    {"n_paths", "grid_steps", "seed", "k_sigma", "bias", "dump_ensemble"},
                    {"n_paths", "grid_steps", "seed"})
        bias = mc.get("bias", "expected-discrete")
        if isinstance(bias, str):
            _require(bias in _BIAS_MODES, "monte_carlo.bias",
                     f"must be a number or one of {_BIAS_MODES}")
        else:
            bias = _real(bias, "monte_carlo.bias", minimum=0.0)
        seed = _integer(mc["seed"], "monte_carlo.seed", minimum=0)
        _require(seed < 2**64, "monte_carlo.seed", "must fit in 64 bits")
        out["monte_carlo"] = {
            "n_paths": _integer(mc["n_paths"], "monte_carlo.n_paths", minimum=1),
            "grid_steps": _integer(mc["grid_steps"], "monte_carlo.grid_steps", minimum=2),
            "seed": seed,
            "k_sigma": _real(mc.get("k_sigma", 3.0), "monte_carlo.k_sigma", minimum=0.0, exclusive=True),
            "bias": bias,
            "dump_ensemble": bool(mc.get("dump_ensemble", False)),
        }

    out["tolerance"] = _real(raw.get("tolerance", 1e-8), "tolerance", minimum=0.0, exclusive=True)
    if "output_dir" in raw:
        _require(isinstance(raw["output_dir"], str) and raw["output_dir"],
                 "output_dir", "must be a nonempty string")
        out["output_dir"] = raw["output_dir"]
    return out


def bundled_scenarios() -> dict[str, dict]:
    """Scenarios shipped with the package, keyed by name."""
    out = {}
    root = resources.files("spdelab") / "scenarios"
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = json.loads(entry.read_text())
    return out


def load_scenario(source: str) -> dict:
    """Load and validate a scenario from a file path or a bundled name."""
    bundled = bundled_scenarios()
    if source in bundled:
        return parse_scenario(bundled[source])
    try:
        with open(source) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(
            "scenario",
            f"{source!r} is neither a file nor a bundled scenario "
            f"(bundled: {', '.join(sorted(bundled))})",
        )
    except json.JSONDecodeError as exc:
        raise ScenarioError("scenario", f"invalid JSON in {source!r}: {exc}")
    return parse_scenario(raw)


def _resolve_n_modes(scn: dict) -> int:
    data = scn["data"]
    if data["kind"] == "explicit":
        return len(data["coefficients"])
    op = scn["operator"]
    if op["kind"] == "explicit":
        return len(op["eigenvalues"])
    if "n_modes" in op:
        return op["n_modes"]
    if "sweep" in scn:
        return scn["sweep"]["n_list"][-1]
    raise ScenarioError(
        "operator.n_modes",
        "model size is undetermined: give explicit data/eigenvalues, "
        "operator.n_modes, or a sweep",
    )


def _load_csv_samples(path: str) -> tuple[np.ndarray, float]:
    rows = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if rows.shape[1] != 2:
        raise ScenarioError("data.path", f"{path!r} must have two columns (position, value)")
    pos, val = rows[:, 0], rows[:, 1]
    order = np.argsort(pos)
    pos, val = pos[order], val[order]
    spacing = np.diff(pos)
    if pos[0] != 0.0 or spacing.size == 0 or not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
        raise ScenarioError("data.path", f"{path!r} must sample [0, L] uniformly starting at 0")
    return val, float(pos[-1])


def build_model(scn: dict) -> tuple[SpectralOperator, SpectralVector, int]:
    """Materialize (operator, data vector, truncation) from a normalized scenario."""
    n_modes = _resolve_n_modes(scn)
    op = scn["operator"]
    data = scn["data"]

    if op["kind"] == "explicit":
        operator = make_operator(op["eigenvalues"])
    elif op["kind"] == "power":
        k = np.arange(1, n_modes + 1, dtype=np.float64)
        operator = make_operator(op["scale"] * k ** op["exponent"])
    else:
        operator = dirichlet_operator(IntervalDomain(op["length"]), n_modes)
    if operator.n_modes != n_modes:
        raise ScenarioError("operator", f"operator has {operator.n_modes} modes, model needs {n_modes}")

    if data["kind"] == "explicit":
        vector = make_vector(data["coefficients"])
    elif data["kind"] == "power":
        k = np.arange(1, n_modes + 1, dtype=np.float64)
        vector = make_vector(data["amplitude"] * k ** -data["exponent"])
    elif data["kind"] == "profile":
        if op["kind"] != "dirichlet":
            raise ScenarioError("data.kind", "profile data requires the dirichlet operator")
        vector = profile_coefficients(data["name"], IntervalDomain(op["length"]), n_modes)
    else:  # csv
        if op["kind"] != "dirichlet":
            raise ScenarioError("data.kind", "csv data requires the dirichlet operator")
        samples, length = _load_csv_samples(data["path"])
        if abs(length - op["length"]) > 1e-9 * op["length"]:
            raise ScenarioError("data.path", f"sample interval length {length} does not match "
                                             f"operator length {op['length']}")
        vector = sine_coefficients(GridFunction(values=samples, length=length), n_modes)

    if vector.n_modes != n_modes:
        raise ScenarioError("data", f"data has {vector.n_modes} modes, model needs {n_modes}")
    if "sweep" in scn and scn["sweep"]["n_list"][-1] > n_modes:
        raise ScenarioError("sweep.n_list", f"top truncation exceeds model size {n_modes}")
    return operator, vector, n_modes
