"""Scenario execution and machine-readable reports.

``run_scenario`` evaluates the oracle (certificates, truncation sweeps) and
the optional Monte Carlo block and assembles one JSON-serializable report.
The report is a pure function of the normalized scenario (seeded Monte Carlo
included): rerunning a scenario reproduces the artifacts byte-for-byte.
Wall-clock timings are therefore written to a separate sidecar file,
``timing.json``, which is excluded from any reproducibility comparison.

Artifacts written by ``write_artifacts``:

    report.json   the full report (deterministic)
    moments.csv   one row per alpha: norms, moments, ratio, verdict
    sweep.csv     one row per (alpha, truncation)
    plot.csv      log-log plot data (truncation vs seminorm moment)
    mc.csv        one row per Monte Carlo gate
    ensemble.bin  optional binary path dump (see spdelab.sampling)
    timing.json   wall times, non-deterministic side channel
"""

from __future__ import annotations

import csv
import json
import math
import os
import time

from . import __version__ as _version
from .estimators import (
    expected_discrete_seminorm,
    expected_l2_trapezoid,
    mc_l2,
    mc_seminorm,
    oracle_gate,
)
from .oracle import (
    RegularityQuery,
    certificate,
    l2_second_moment,
    seminorm_second_moment,
)
from .sampling import TimeGrid, sample_paths, save_ensemble
from .scenario import build_model
from .sweeps import stability_verdict, truncation_sweep

__all__ = ["run_scenario", "write_artifacts", "rerender_csv", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

MOMENTS_COLUMNS = [
    "alpha", "theta", "horizon", "n_modes", "frac_norm", "x_norm",
    "seminorm_moment", "l2_moment", "total_moment", "ratio",
    "verdict", "slope", "top_rel_diff",
]
SWEEP_COLUMNS = [
    "alpha", "theta", "n_modes", "seminorm_moment", "l2_moment", "frac_norm", "ratio",
]
PLOT_COLUMNS = ["alpha", "n_modes", "log10_n_modes", "seminorm_moment", "log10_seminorm_moment"]
MC_COLUMNS = [
    "gate", "alpha", "theta", "n_paths", "grid_steps", "seed",
    "estimate", "std_error", "oracle", "bias", "k_sigma", "threshold", "margin", "passed",
]


def _theta_for(mode: str, alpha: float) -> float:
    return 0.5 if mode == "theorem" else 0.5 - alpha


def _certificate_dict(report) -> dict:
    return {
        "alpha": report.alpha,
        "horizon": report.horizon,
        "seminorm_moment": report.seminorm_moment,
        "l2_moment": report.l2_moment,
        "frac_norm": report.frac_norm,
        "x_norm": report.x_norm,
        "c_alpha": report.c_alpha,
        "k_alpha": report.k_alpha,
        "theta_alpha_t": report.theta_alpha_t,
        "c_delta_t": report.c_delta_t,
        "epsilon": report.epsilon,
        "seminorm_lower_rhs": report.seminorm_lower_rhs,
        "l2_lower_rhs": report.l2_lower_rhs,
        "lower_bound_rhs": report.lower_bound_rhs,
        "upper_bound_rhs": report.upper_bound_rhs,
        "quadrature_tol": report.quadrature_tol,
        "seminorm_bound_holds": report.seminorm_bound_holds,
        "l2_bound_holds": report.l2_bound_holds,
        "combined_bound_holds": report.combined_bound_holds,
        "upper_bound_holds": report.upper_bound_holds,
    }


def _run_query(operator, vector, alpha, theta, horizon, scn, timings):
    """Oracle results for one alpha: moments, certificate, sweep, verdict."""
    tol = scn["tolerance"]
    out = {"alpha": alpha, "theta": theta}
    t0 = time.perf_counter()

    if alpha > 0.0:
        query = RegularityQuery(alpha=alpha, horizon=horizon, theta=theta)
        sem = seminorm_second_moment(operator, vector, query, tol=tol)
    else:
        sem = None
    l2 = l2_second_moment(operator, vector, horizon, theta=theta)
    from .spectral import fractional_norm

    frac = fractional_norm(operator, vector, alpha)
    out["moments"] = {
        "n_modes": operator.n_modes,
        "seminorm_moment": sem,
        "l2_moment": l2,
        "total_moment": (sem or 0.0) + l2,
        "frac_norm": frac,
        "x_norm": fractional_norm(operator, vector, 0.0),
        "ratio": math.sqrt((sem or 0.0) + l2) / frac if frac else None,
    }

    if theta == 0.5 and alpha > 0.0:
        out["certificate"] = _certificate_dict(certificate(operator, vector, query, tol=tol))

    if "sweep" in scn:
        n_list = scn["sweep"]["n_list"]
        if alpha > 0.0:
            rows = truncation_sweep(operator, vector, query, n_list, tol=tol)
            values = [r.seminorm_moment for r in rows]
            out["sweep"] = [
                {"n_modes": r.n_modes, "seminorm_moment": r.seminorm_moment,
                 "l2_moment": r.l2_moment, "frac_norm": r.frac_norm, "ratio": r.ratio}
                for r in rows
            ]
        else:
            values = []
            out["sweep"] = []
            for n in n_list:
                op_n, vec_n = operator.truncated(n), vector.truncated(n)
                l2_n = l2_second_moment(op_n, vec_n, horizon, theta=theta)
                frac_n = fractional_norm(op_n, vec_n, alpha)
                values.append(l2_n)
                out["sweep"].append(
                    {"n_modes": n, "seminorm_moment": None, "l2_moment": l2_n,
                     "frac_norm": frac_n,
                     "ratio": math.sqrt(l2_n) / frac_n if frac_n else None}
                )
        verdict = stability_verdict(n_list, values, scn["sweep"]["stability_tol"])
        out["verdict"] = {"status": verdict.status, "top_rel_diff": verdict.top_rel_diff,
                          "slope": verdict.slope, "tol": verdict.tol}
    timings[f"oracle.alpha={alpha:g}"] = time.perf_counter() - t0
    return out


def _gate_dict(name, alpha, theta, mc, gate):
    return {
        "gate": name, "alpha": alpha, "theta": theta,
        "n_paths": mc["n_paths"], "grid_steps": mc["grid_steps"], "seed": mc["seed"],
        "estimate": gate.estimate, "std_error": gate.std_error, "oracle": gate.oracle,
        "bias": gate.bias, "k_sigma": gate.k_sigma,
        "threshold": gate.threshold, "margin": gate.margin, "passed": gate.passed,
    }


def _mc_bias(scn, kind, oracle_value, exact_discrete, doubling_pair):
    policy = scn["monte_carlo"]["bias"]
    if isinstance(policy, float):
        return policy
    if policy == "expected-discrete":
        return abs(exact_discrete - oracle_value) / abs(oracle_value) if oracle_value else 0.0
    coarse, fine = doubling_pair()
    return abs(fine - coarse) / abs(oracle_value) if oracle_value else 0.0


def run_monte_carlo(operator, vector, scn, workers=1, ensemble=None, timings=None):
    """Sample (or reuse) an ensemble and evaluate every configured gate."""
    timings = timings if timings is not None else {}
    mc = scn["monte_carlo"]
    horizon = scn["queries"]["horizon"]
    mode = scn["queries"]["theta_mode"]
    tol = scn["tolerance"]
    grid = TimeGrid(horizon=horizon, steps=mc["grid_steps"])

    t0 = time.perf_counter()
    if ensemble is None:
        ensemble = sample_paths(operator, vector, grid, mc["n_paths"], mc["seed"], workers=workers)
    timings["monte_carlo.sampling"] = time.perf_counter() - t0

    gates = []
    t0 = time.perf_counter()
    x = vector.coefficients

    for alpha in scn["queries"]["alphas"]:
        theta = _theta_for(mode, alpha)
        if alpha > 0.0:
            query = RegularityQuery(alpha=alpha, horizon=horizon, theta=theta)
            oracle_value = seminorm_second_moment(operator, vector, query, tol=tol)
            estimate = mc_seminorm(ensemble, alpha, operator, theta=theta)
            exact_disc = expected_discrete_seminorm(operator, x, ensemble.grid, alpha, theta=theta)

            def doubling():
                fine_grid = TimeGrid(horizon=horizon, steps=2 * ensemble.grid.steps)
                fine = sample_paths(operator, vector, fine_grid, ensemble.n_paths,
                                    ensemble.seed, workers=workers)
                return (estimate.mean, mc_seminorm(fine, alpha, operator, theta=theta).mean)

            bias = _mc_bias(scn, "seminorm", oracle_value, exact_disc, doubling)
            gate = oracle_gate(estimate, oracle_value, k_sigma=mc["k_sigma"], bias=bias)
            gates.append(_gate_dict(f"seminorm@alpha={alpha:g}", alpha, theta, mc, gate))

        l2_oracle = l2_second_moment(operator, vector, horizon, theta=theta)
        l2_est = mc_l2(ensemble, operator, theta=theta)
        l2_disc = expected_l2_trapezoid(operator, x, ensemble.grid, theta=theta)

        def l2_doubling():
            fine_grid = TimeGrid(horizon=horizon, steps=2 * ensemble.grid.steps)
            fine = sample_paths(operator, vector, fine_grid, ensemble.n_paths,
                                ensemble.seed, workers=workers)
            return (l2_est.mean, mc_l2(fine, operator, theta=theta).mean)

        bias = _mc_bias(scn, "l2", l2_oracle, l2_disc, l2_doubling)
        gate = oracle_gate(l2_est, l2_oracle, k_sigma=mc["k_sigma"], bias=bias)
        gates.append(_gate_dict(f"l2@alpha={alpha:g}", alpha, _theta_for(mode, alpha), mc, gate))

    timings["monte_carlo.gates"] = time.perf_counter() - t0
    return ensemble, gates


def run_scenario(scn, workers=1, parts=("oracle", "monte_carlo"), ensemble=None):
    """Execute a normalized scenario; returns (report dict, ensemble or None, timings)."""
    timings = {}
    operator, vector, n_modes = build_model(scn)
    horizon = scn["queries"]["horizon"]
    mode = scn["queries"]["theta_mode"]

    report = {
        "schema_version": SCHEMA_VERSION,
        "package_version": _version,
        "scenario": scn,
        "n_modes": n_modes,
        "queries": [],
        "monte_carlo": None,
        "gates_passed": True,
    }

    if "oracle" in parts:
        for alpha in scn["queries"]["alphas"]:
            theta = _theta_for(mode, alpha)
            report["queries"].append(
                _run_query(operator, vector, alpha, theta, horizon, scn, timings)
            )

    out_ensemble = None
    if "monte_carlo" in parts and "monte_carlo" in scn:
        out_ensemble, gates = run_monte_carlo(
            operator, vector, scn, workers=workers, ensemble=ensemble, timings=timings
        )
        report["monte_carlo"] = {
            "n_paths": scn["monte_carlo"]["n_paths"],
            "grid_steps": scn["monte_carlo"]["grid_steps"],
            "seed": scn["monte_carlo"]["seed"],
            "gates": gates,
        }
        report["gates_passed"] = all(g["passed"] for g in gates)

    return report, out_ensemble, timings


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                             for v in row])


def _moment_rows(report):
    rows = []
    for q in report["queries"]:
        m = q.get("moments")
        if m is None:
            continue
        verdict = q.get("verdict") or {}
        rows.append([
            q["alpha"], q["theta"], report["scenario"]["queries"]["horizon"], m["n_modes"],
            m["frac_norm"], m["x_norm"], m["seminorm_moment"], m["l2_moment"],
            m["total_moment"], m["ratio"],
            verdict.get("status"), verdict.get("slope"), verdict.get("top_rel_diff"),
        ])
    return rows


def _sweep_rows(report):
    rows = []
    for q in report["queries"]:
        for r in q.get("sweep", []) or []:
            rows.append([q["alpha"], q["theta"], r["n_modes"], r["seminorm_moment"],
                         r["l2_moment"], r["frac_norm"], r["ratio"]])
    return rows


def _plot_rows(report):
    rows = []
    for q in report["queries"]:
        for r in q.get("sweep", []) or []:
            sem = r["seminorm_moment"]
            rows.append([
                q["alpha"], r["n_modes"], math.log10(r["n_modes"]),
                sem, math.log10(sem) if sem else None,
            ])
    return rows


def _mc_rows(report):
    mc = report.get("monte_carlo")
    if not mc:
        return []
    return [[g[c] for c in MC_COLUMNS] for g in mc["gates"]]


def rerender_csv(report, outdir):
    """Regenerate the CSV tables from a stored report (no recomputation)."""
    _write_csv(os.path.join(outdir, "moments.csv"), MOMENTS_COLUMNS, _moment_rows(report))
    _write_csv(os.path.join(outdir, "sweep.csv"), SWEEP_COLUMNS, _sweep_rows(report))
    _write_csv(os.path.join(outdir, "plot.csv"), PLOT_COLUMNS, _plot_rows(report))
    _write_csv(os.path.join(outdir, "mc.csv"), MC_COLUMNS, _mc_rows(report))


def write_artifacts(report, outdir, ensemble=None, timings=None, dump_ensemble=False):
    """Write report.json, the CSV tables, and optional ensemble/timing files."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    rerender_csv(report, outdir)
    if dump_ensemble and ensemble is not None:
        save_ensemble(os.path.join(outdir, "ensemble.bin"), ensemble)
    if timings is not None:
        with open(os.path.join(outdir, "timing.json"), "w") as fh:
            json.dump(timings, fh, indent=2, sort_keys=True)
            fh.write("\n")
