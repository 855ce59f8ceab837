"""JSON-configured benchmark harness.

Subcommands::

    uapd solve   config.json [--out DIR]
    uapd compare config.json [--out DIR]
    uapd flow    config.json [--out DIR]
    uapd bounds  config.json [--out DIR]

A config names an instance (inline recipe dict, inline serialized
instance, or a path to a JSON file holding either), an optional
``solver`` section with SolverConfig fields, a ``variant`` ("uapd" or
"fixed_tolerance" with an ``eps``), and an ``output`` file prefix.
``flow`` runs need a ``flow`` section with ``t_end`` and ``dt``;
``bounds`` accepts a ``bounds`` section (nu, M_nu, fit_window).

Outputs are CSV (UTF-8, header row, '.' decimal separator) plus a
summary JSON for solve/compare runs.  With a fixed seed the CSVs are
reproducible byte for byte except for the wall-clock column.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .analysis import (decay_spec_for_solver, envelope, fit_rate,
                       rate_bound_preconditions)
from .flow import integrate, trajectory_to_csv
from .problems import InstanceRecipe, instance_from_dict
from .solver import SolverConfig, SolverError, solve, solve_fixed_tolerance, trace_to_csv

__all__ = ["main", "ConfigError", "cmd_solve", "cmd_compare", "cmd_flow", "cmd_bounds"]

_MATRIX_KEYS = ("P", "A", "H", "anchors")


class ConfigError(Exception):
    """Malformed or incomplete run configuration (exit code 2)."""


def _load_json(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _require(cfg, field):
    if field not in cfg:
        raise ConfigError(f"config is missing the field '{field}'")
    return cfg[field]


def _resolve_instance(spec, base_dir):
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        if not os.path.exists(path):
            raise ConfigError(f"instance file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    if not isinstance(spec, dict):
        raise ConfigError("'instance' must be a dict or a path string")
    try:
        if any(key in spec for key in _MATRIX_KEYS):
            return instance_from_dict(spec)
        return InstanceRecipe.from_dict(spec).generate()
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad instance description: {exc}") from exc


def _solver_config(cfg):
    section = cfg.get("solver", {})
    if not isinstance(section, dict):
        raise ConfigError("'solver' must be a dict of SolverConfig fields")
    known = set(SolverConfig.__dataclass_fields__)
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown solver fields {sorted(unknown)}")
    try:
        return SolverConfig(**section)
    except ValueError as exc:
        raise ConfigError(f"bad solver section: {exc}") from exc


def _variant(cfg, default_eps=None):
    raw = cfg.get("variant", "uapd")
    eps = cfg.get("eps", default_eps)
    if isinstance(raw, dict):
        name = raw.get("name")
        eps = raw.get("eps", eps)
    else:
        name = raw
    if name not in ("uapd", "fixed_tolerance"):
        raise ConfigError(f"unknown variant {name!r} (expected 'uapd' or 'fixed_tolerance')")
    if name == "fixed_tolerance":
        if eps is None:
            raise ConfigError("config is missing the field 'eps' "
                              "(required by the fixed_tolerance variant)")
        eps = float(eps)
        if eps <= 0:
            raise ConfigError("eps must be positive")
    return name, eps


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _out_path(out_dir, prefix, suffix):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, f"{prefix}_{suffix}")


def _run(instance, config, name, eps):
    t0 = time.perf_counter()
    if name == "fixed_tolerance":
        state, trace = solve_fixed_tolerance(instance, config, eps=eps)
    else:
        state, trace = solve(instance, config)
    return state, trace, time.perf_counter() - t0


def _summary(instance, state, trace, wall, name, eps):
    last = trace[-1]
    out = {
        "variant": name,
        "iterations": last.k,
        "objective": last.objective,
        "feasibility": last.feasibility,
        "f_residual": last.f_residual,
        "final_M": state.M,
        "final_beta": state.beta,
        "final_gamma": state.gamma,
        "line_search_total": state.line_search_total,
        "wall_time_s": wall,
        "instance_kind": instance.metadata.get("kind"),
        "seed": instance.metadata.get("seed"),
    }
    if eps is not None:
        out["eps"] = eps
    return out


def cmd_solve(cfg, base_dir, out_dir):
    instance = _resolve_instance(_require(cfg, "instance"), base_dir)
    config = _solver_config(cfg)
    name, eps = _variant(cfg)
    prefix = cfg.get("output", "run")
    state, trace, wall = _run(instance, config, name, eps)
    trace_to_csv(trace, _out_path(out_dir, prefix, "trace.csv"))
    with open(_out_path(out_dir, prefix, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_summary(instance, state, trace, wall, name, eps), fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _f_value(record):
    """Objective residual when the optimum is known, raw objective otherwise."""
    if record is None:
        return None
    return record.objective if record.f_residual is None else record.f_residual


def _merged_rows(trace_a, trace_b):
    """Align two traces on k; blank cells where one run stopped earlier."""
    rows = []
    for i in range(max(len(trace_a), len(trace_b))):
        ra = trace_a[i] if i < len(trace_a) else None
        rb = trace_b[i] if i < len(trace_b) else None
        k = ra.k if ra is not None else rb.k
        rows.append((
            k,
            _f_value(ra), _f_value(rb),
            ra.M_k if ra else None, rb.M_k if rb else None,
            ra.i_k if ra else None, rb.i_k if rb else None,
        ))
    return rows


def cmd_compare(cfg, base_dir, out_dir):
    instance = _resolve_instance(_require(cfg, "instance"), base_dir)
    config = _solver_config(cfg)
    _, eps = _variant({"variant": "fixed_tolerance", "eps": cfg.get("eps", 1e-3)})
    prefix = cfg.get("output", "run")
    _, trace_u, wall_u = _run(instance, config, "uapd", None)
    state_b, trace_b, wall_b = _run(instance, config, "fixed_tolerance", eps)
    path = _out_path(out_dir, prefix, "compare.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,f_UAPD,f_base,M_UAPD,M_base,ik_UAPD,ik_base\n")
        for row in _merged_rows(trace_u, trace_b):
            fh.write(",".join(_fmt(c) for c in row) + "\n")
    summary = {
        "eps": eps,
        "uapd": {"iterations": trace_u[-1].k, "wall_time_s": wall_u,
                 "line_search_total": sum(r.i_k for r in trace_u)},
        "fixed_tolerance": {"iterations": trace_b[-1].k, "wall_time_s": wall_b,
                            "line_search_total": state_b.line_search_total},
    }
    with open(_out_path(out_dir, prefix, "compare_summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_flow(cfg, base_dir, out_dir):
    instance = _resolve_instance(_require(cfg, "instance"), base_dir)
    section = _require(cfg, "flow")
    if not isinstance(section, dict):
        raise ConfigError("'flow' must be a dict with 't_end' and 'dt'")
    if "t_end" not in section:
        raise ConfigError("config is missing the field 'flow.t_end'")
    if "dt" not in section:
        raise ConfigError("config is missing the field 'flow.dt'")
    t_end = float(section["t_end"])
    dt = float(section["dt"])
    gamma0 = cfg.get("solver", {}).get("gamma0")
    prefix = cfg.get("output", "run")
    trajectory = integrate(instance, t_end=t_end, dt=dt, gamma0=gamma0)
    trajectory_to_csv(trajectory, instance, _out_path(out_dir, prefix, "flow.csv"))
    return 0


def _bounds_m_nu(section, instance):
    if "M_nu" in section:
        return float(section["M_nu"])
    meta = instance.metadata
    for key in ("lipschitz", "lipschitz_ref", "subgradient_diameter"):
        if key in meta:
            return float(meta[key])
    raise ConfigError("config is missing the field 'bounds.M_nu' "
                      "(no smoothness constant in instance metadata)")


def cmd_bounds(cfg, base_dir, out_dir):
    instance = _resolve_instance(_require(cfg, "instance"), base_dir)
    config = _solver_config(cfg)
    section = cfg.get("bounds", {})
    if not isinstance(section, dict):
        raise ConfigError("'bounds' must be a dict")
    nu = float(section.get("nu", 1.0 if instance.differentiable else 0.0))
    m_nu = _bounds_m_nu(section, instance)
    prefix = cfg.get("output", "run")

    state, trace, _ = _run(instance, config, "uapd", None)
    resolved = config.resolved(instance)
    mu = resolved.mu
    gamma_min = min(resolved.gamma0, mu) if mu > 0 else resolved.gamma0
    spec = decay_spec_for_solver(nu, mu, resolved.gamma0, gamma_min,
                                 resolved.A_norm, m_nu)
    k_hi_default = min(100, trace[-1].k)
    window = section.get("fit_window", [10, k_hi_default])
    k_lo, k_hi = int(window[0]), int(window[1])
    raw = {r.k: envelope(spec, r.k) for r in trace}
    fits = [r.beta_k / raw[r.k] for r in trace if k_lo <= r.k <= k_hi]
    if not fits:
        raise ConfigError(f"fit_window [{k_lo}, {k_hi}] selects no iterations")
    scale = max(fits)

    path = _out_path(out_dir, prefix, "bounds.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,beta,envelope\n")
        for r in trace:
            fh.write(f"{r.k},{r.beta_k!r},{scale * raw[r.k]!r}\n")
    summary = {
        "nu": nu,
        "M_nu": m_nu,
        "gamma0": resolved.gamma0,
        "gamma_min": gamma_min,
        "fit_window": [k_lo, k_hi],
        "fit_constant": scale,
        "precondition_issues": rate_bound_preconditions(
            nu, mu, resolved.gamma0, resolved.A_norm, m_nu, resolved.M0),
    }
    try:
        summary["beta_slope"] = fit_rate(trace, "beta_k", k_lo, max(k_hi, k_lo + 1))
    except ValueError:
        pass
    with open(_out_path(out_dir, prefix, "bounds_summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "flow": cmd_flow,
    "bounds": cmd_bounds,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="uapd",
        description="Accelerated primal-dual solver benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("solve", "run one variant, write trace + summary"),
                      ("compare", "run both variants, write a merged CSV"),
                      ("flow", "integrate the continuous-time system"),
                      ("bounds", "overlay observed beta decay with its envelope")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("config", help="path to a JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
    args = parser.parse_args(argv)
    try:
        cfg = _load_json(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        base_dir = os.path.dirname(os.path.abspath(args.config))
        return _COMMANDS[args.command](cfg, base_dir, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
