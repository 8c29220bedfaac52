"""Command-line front end.

Usage:
    cusplab <field|kernel|norms|certify|fall|dichotomy|pd>
            --config <path> [--out <dir>] [--override key=value]...

One JSON config document drives every command; overrides use dotted paths
(e.g. --override geometry.alpha=0.3).  Reports are written atomically as
canonical JSON (sorted keys) plus CSV where the result is tabular, and are
byte-identical across reruns and worker counts.  Exit codes: 0 success,
2 validation error, 3 numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .errors import NumericalError, ParameterError
from .geometry import CuspGeometry, GapPoint
from .testfield import Quantity, eval_cusp_field
from .quadrature import (
    QuadratureConfig,
    default_h_grid,
    kernel_sweep,
    norm_sweep,
)
from .certify import (
    InitialData,
    PhysicalParams,
    c0_empirical,
    final_inequality,
    hdot_bound,
    mass_threshold,
    pd_guarantee,
)
from .lubrication import FallConfig, contact_dichotomy, log_law_check, simulate_fall
from .reports import (
    canonical_json,
    config_digest,
    format_csv,
    resolve_workers,
    write_text_atomic,
)

COMMANDS = ("field", "kernel", "norms", "certify", "fall", "dichotomy", "pd")

_FIELD_COLUMNS = [
    "r",
    "x3",
    "w_r",
    "w_3",
    "div",
    "wr_over_r",
    "dr_wr",
    "d3_wr",
    "dr_w3",
    "d3_w3",
    "dh_wr",
    "dh_w3",
]


def _load_schema(name: str) -> dict:
    with resources.files("cusplab.schemas").joinpath(name).open("r") as handle:
        return json.load(handle)


def _apply_override(config: dict, spec: str) -> None:
    if "=" not in spec:
        raise ParameterError(f"override must look like key=value, got {spec!r}")
    path, raw = spec.split("=", 1)
    keys = path.split(".")
    if not all(keys):
        raise ParameterError(f"empty key in override path {path!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ParameterError(f"override path {path!r} crosses a non-object value")
    node[keys[-1]] = value


def _load_config(path: str, overrides) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        config = json.load(handle)
    if not isinstance(config, dict):
        raise ParameterError("config must be a JSON object")
    for spec in overrides:
        _apply_override(config, spec)
    jsonschema.validate(config, _load_schema("config.schema.json"))
    return config


def _require(config: dict, section: str) -> dict:
    if section not in config:
        raise ParameterError(f"command needs the {section!r} config section")
    return config[section]


def _geometry(config: dict) -> CuspGeometry:
    sec = _require(config, "geometry")
    return CuspGeometry(alpha=sec["alpha"], r0=sec["r0"], d0=sec["d0"])


def _quadrature(config: dict) -> QuadratureConfig:
    sec = config.get("quadrature", {})
    return QuadratureConfig(
        rel_tol=sec.get("rel_tol", 1e-8),
        max_subdivisions=sec.get("max_subdivisions", 10**6),
        substitution=sec.get("substitution", True),
    )


def _run_field(config: dict, workers: int):
    geom = _geometry(config)
    sec = _require(config, "field")
    h, n_r, n_x3 = sec["h"], sec["n_r"], sec["n_x3"]
    if n_r < 1 or n_x3 < 1:
        raise ParameterError("field grid sizes must be positive")
    rows = []
    max_div = 0.0
    for i in range(n_r):
        r = geom.r0 * (i + 0.5) / n_r
        psi_val = h + r ** (1.0 + geom.alpha)
        for j in range(n_x3):
            x3 = psi_val * (j + 0.5) / n_x3
            s = eval_cusp_field(GapPoint(r, x3), h, geom)
            rows.append(
                (
                    r, x3, s.w_r, s.w_3, s.divergence, s.wr_over_r, s.dr_wr,
                    s.d3_wr, s.dr_w3, s.d3_w3, s.dh_wr, s.dh_w3,
                )
            )
            max_div = max(max_div, abs(s.divergence))
    payload = {
        "h": float(h),
        "n_r": n_r,
        "n_x3": n_x3,
        "rows": len(rows),
        "columns": _FIELD_COLUMNS,
        "max_abs_divergence": max_div,
        "csv": "field.csv",
    }
    return payload, format_csv(_FIELD_COLUMNS, rows), "field.csv"


def _run_kernel(config: dict, workers: int):
    geom = _geometry(config)
    sec = _require(config, "kernel")
    cfg = _quadrature(config)
    r0 = sec.get("r0", geom.r0)
    h_grid = sec.get("h_grid", [10.0**-k for k in range(1, 7)])
    sweep = kernel_sweep(sec["p"], sec["q"], geom.alpha, r0, h_grid, cfg, workers)
    payload = {
        "p": sweep.p,
        "q": sweep.q,
        "alpha": sweep.alpha,
        "r0": sweep.r0,
        "h_grid": list(sweep.h_grid),
        "values": list(sweep.values),
        # log-log slope of value vs h (negative for blow-up)
        "fitted_exponent": -sweep.fitted_exponent,
        "predicted_exponent": -sweep.predicted_exponent,
        "fitted_blowup_exponent": sweep.fitted_exponent,
        "predicted_blowup_exponent": sweep.predicted_exponent,
        "verdict": sweep.verdict.value,
        "predicted_verdict": sweep.predicted_verdict.value,
        "csv": "kernel.csv",
    }
    csv = format_csv(["h", "value"], zip(sweep.h_grid, sweep.values))
    return payload, csv, "kernel.csv"


def _run_norms(config: dict, workers: int):
    geom = _geometry(config)
    sec = _require(config, "norms")
    cfg = _quadrature(config)
    h_grid = sec.get("h_grid", list(default_h_grid()))
    sweep = norm_sweep(Quantity(sec["quantity"]), sec["p"], geom, h_grid, cfg, workers)
    payload = {
        "quantity": sweep.quantity.value,
        "p": sweep.p,
        "h_grid": list(sweep.h_grid),
        "values": list(sweep.values),
        "fitted_exponent": sweep.fitted_exponent,
        "verdict": sweep.verdict.value,
        "non_monotone": list(sweep.non_monotone),
        "csv": "norms.csv",
    }
    csv = format_csv(["h", "value"], zip(sweep.h_grid, sweep.values))
    return payload, csv, "norms.csv"


def _run_certify(config: dict, workers: int):
    geom = _geometry(config)
    phys_sec = _require(config, "physics")
    init_sec = _require(config, "initial")
    sec = _require(config, "certify")
    params = PhysicalParams(
        gamma=phys_sec["gamma"],
        mu=phys_sec["mu"],
        lam=phys_sec["lambda"],
        g=phys_sec["g"],
        rho_s=phys_sec["rho_s"],
        m=phys_sec["m"],
        diam_omega=phys_sec["diam_omega"],
    )
    data = InitialData(
        kinetic_fluid=init_sec["kinetic_fluid"],
        pressure_potential=init_sec["pressure_potential"],
        v0=init_sec["v0"],
    )
    c0_spec = sec["c0"]
    if isinstance(c0_spec, dict):
        c0 = c0_empirical(
            geom,
            params.gamma,
            c0_spec["reference_h"],
            _quadrature(config),
            scale=c0_spec.get("scale", 1.0),
        )
        c0_mode = "empirical"
    else:
        c0 = float(c0_spec)
        c0_mode = "input"
    cert = final_inequality(params, data, c0, geom.alpha)
    m_star = None
    if "mass_threshold" in sec:
        mt = sec["mass_threshold"]
        m_star = mass_threshold(
            params,
            data,
            c0,
            mt["v0_coefficient"],
            lo=mt.get("lo", 1e-6),
            hi=mt.get("hi", 1e12),
        )
    payload = {
        "gamma": cert.gamma,
        "alpha": cert.alpha,
        "g": cert.g,
        "thresholds": cert.thresholds,
        "alpha_max": cert.alpha_max,
        "e0": cert.e0,
        "l_const": cert.l_const,
        "c_gamma": cert.c_gamma,
        "c0": cert.c0,
        "c0_mode": c0_mode,
        "lhs": cert.lhs,
        "applicable": cert.applicable,
        "reason": cert.reason,
        "satisfied": cert.satisfied,
        "time_bound": cert.time_bound,
        "time_bound_label": "DERIVED",
        "hdot_bound": hdot_bound(params.m, cert.e0, cert.l_const),
        "mass_threshold": m_star,
    }
    return payload, None, None


def _run_fall(config: dict, workers: int):
    sec = _require(config, "fall")
    cfg = FallConfig(
        m=sec["m"],
        g=sec["g"],
        c_d=sec["c_d"],
        beta=sec["beta"],
        h0=sec["h0"],
        mode=sec["mode"],
        t_max=sec["t_max"],
        v0=sec.get("v0", 0.0),
        h_stop=sec.get("h_stop", 1e-12),
        tol=sec.get("tol", 1e-9),
    )
    traj = simulate_fall(cfg)
    log_law = None
    if cfg.beta >= 1.0 and traj.verdict.value == "NO_CONTACT_BY_HORIZON":
        try:
            fit = log_law_check(traj, cfg)
            log_law = {"slope": fit.slope, "residual": fit.residual}
        except ParameterError:
            log_law = None
    payload = {
        "mode": cfg.mode.value,
        "beta": cfg.beta,
        "m": cfg.m,
        "g": cfg.g,
        "c_d": cfg.c_d,
        "h0": cfg.h0,
        "v0": cfg.v0,
        "h_stop": cfg.h_stop,
        "t_max": cfg.t_max,
        "tol": cfg.tol,
        "verdict": traj.verdict.value,
        "contact_time": traj.contact_time,
        "samples": len(traj.times),
        "final_time": traj.times[-1],
        "final_height": traj.heights[-1],
        "log_law": log_law,
        "csv": "fall.csv",
    }
    csv = format_csv(["t", "h", "hdot"], zip(traj.times, traj.heights, traj.velocities))
    return payload, csv, "fall.csv"


def _run_dichotomy(config: dict, workers: int):
    sec = _require(config, "dichotomy")
    template = FallConfig(
        m=sec["m"],
        g=sec["g"],
        c_d=sec["c_d"],
        beta=0.0,
        h0=sec["h0"],
        mode="QUASI_STATIC",
        t_max=sec["t_max"],
        h_stop=sec.get("h_stop", 1e-12),
        tol=sec.get("tol", 1e-9),
    )
    rows = contact_dichotomy(sec["alpha_grid"], template, workers)
    payload = {
        "rows": [
            {
                "alpha": row.alpha,
                "beta": row.beta,
                "verdict": row.verdict.value,
                "expected": row.expected.value,
                "matches": row.matches,
            }
            for row in rows
        ],
        "all_match": all(row.matches for row in rows),
        "csv": "dichotomy.csv",
    }
    csv = format_csv(
        ["alpha", "beta", "verdict", "expected", "matches"],
        (
            (r.alpha, r.beta, r.verdict.value, r.expected.value, r.matches)
            for r in rows
        ),
    )
    return payload, csv, "dichotomy.csv"


def _run_pd(config: dict, workers: int):
    sec = _require(config, "pd")
    c_energy = sec.get("c_energy", 1.0)
    result = pd_guarantee(
        sec["e_init"], sec["k_p"], sec["k_d"], sec["dist_g1"], c_energy
    )
    payload = {
        "e_init": float(sec["e_init"]),
        "k_p": float(sec["k_p"]),
        "k_d": float(sec["k_d"]),
        "dist_g1": float(sec["dist_g1"]),
        "c_energy": float(c_energy),
        "displacement_bound": result.displacement_bound,
        "epsilon": result.epsilon,
        "guaranteed": result.guaranteed,
    }
    return payload, None, None


_RUNNERS = {
    "field": _run_field,
    "kernel": _run_kernel,
    "norms": _run_norms,
    "certify": _run_certify,
    "fall": _run_fall,
    "dichotomy": _run_dichotomy,
    "pd": _run_pd,
}


def _fail(kind: str, message: str) -> None:
    line = " ".join(str(message).split())
    print(f"cusplab: error: {kind}: {line}", file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cusplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="cusplab-out")
        p.add_argument("--override", action="append", default=[])
    args = parser.parse_args(argv)

    try:
        workers = resolve_workers()
        config = _load_config(args.config, args.override)
    except (
        ParameterError,
        ValueError,
        OSError,
        json.JSONDecodeError,
        jsonschema.ValidationError,
    ) as exc:
        if isinstance(exc, jsonschema.ValidationError):
            _fail("config", f"{'/'.join(str(k) for k in exc.absolute_path)}: {exc.message}")
        else:
            _fail("config", str(exc))
        return 2

    started = time.perf_counter()
    try:
        payload, csv_text, csv_name = _RUNNERS[args.command](config, workers)
    except ParameterError as exc:
        _fail("validation", str(exc))
        return 2
    except NumericalError as exc:
        _fail("numerical", str(exc))
        return 3

    report = {
        "command": args.command,
        "config_digest": config_digest(config),
        "schema_version": 1,
        "version": __version__,
        "payload": payload,
    }
    try:
        jsonschema.validate(report, _load_schema(f"report-{args.command}.schema.json"))
    except jsonschema.ValidationError as exc:
        _fail("internal", f"report failed its schema: {exc.message}")
        return 3

    out_dir = Path(config.get("output", {}).get("dir", args.out))
    try:
        write_text_atomic(out_dir / f"{args.command}.json", canonical_json(report))
        if csv_text is not None:
            write_text_atomic(out_dir / csv_name, csv_text)
    except (OSError, ValueError) as exc:
        _fail("io", f"{out_dir}: {exc}")
        return 3

    elapsed = time.perf_counter() - started
    print(f"cusplab: {args.command} completed in {elapsed:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
