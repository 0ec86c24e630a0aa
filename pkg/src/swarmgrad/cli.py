"""Command-line experiment runner.

Every subcommand reads a flat dotted-key JSON config (``--config``), applies
command-line overrides, validates the result, then writes ``<name>.csv``
and ``<name>.manifest.json`` into ``--out``.  CSV floats use the shortest
round-trip representation, so identical inputs give identical bytes.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 failed ``check-fi --assert``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy

from . import __version__
from .diagnostics import (
    asymptotic_slope,
    check_talagrand,
    lyapunov_bound,
    random_perturbation,
    sweep_functional_inequality,
)
from .landscape import builtin
from .pde1d import DtPolicy, StabilityError, evolve, uniform
from .potentials import PotentialSpec, omega_big
from .schedules import (
    c_of_beta_bound,
    constant,
    default_exponent,
    power,
    power_law_c,
    validate_schedule,
)
from .stationary import BracketError, gap, solve_stationary
from .swarm import BandwidthPolicy, DuplicationPolicy, Kernel, init_uniform, run_swarm

log = logging.getLogger("swarmgrad")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


# key -> (type, default); "floats" is a list of floats
_COMMON = {
    "landscape.name": (str, "two_well"),
    "landscape.dim": (int, 1),
    "landscape.period": (float, 1.0),
    "landscape.a": (float, None),
    "landscape.b": (float, None),
    "landscape.u0": (float, None),
    "landscape.seed": (int, None),
    "landscape.order": (int, None),
    "potential.m": (float, 0.25),
    "potential.boltzmann": (bool, False),
    "seed": (int, 0),
    "threads": (int, 1),
}

_SCHEDULE = {
    "schedule.kind": (str, "power"),
    "schedule.k": (float, 1.0),
    "schedule.alpha": (float, None),
    "schedule.gamma": (float, None),
    "schedule.t0": (float, 1.0),
}

_SPECIFIC = {
    "stationary": {
        "beta": (float, 5.0),
        "grid.n": (int, 2048),
    },
    "pde": {
        **_SCHEDULE,
        "grid.n": (int, 2048),
        "t_end": (float, 50.0),
        "dt.method": (str, "implicit"),
        "dt.initial": (float, 1e-5),
        "dt.growth": (float, 1.1),
        "dt.max": (float, 0.05),
        "record.count": (int, 41),
        "record.times": ("floats", None),
        "profile.times": ("floats", []),
    },
    "swarm": {
        **_SCHEDULE,
        "t_end": (float, 5.0),
        "swarm.N": (int, 4000),
        "swarm.h": (float, 0.02),
        "swarm.h_decay": (float, 0.0),
        "swarm.dt": (float, 1e-3),
        "swarm.alpha_cap": (float, 1e3),
        "swarm.diffusion_factor": (float, 2.0),
        "swarm.growth.every": (int, 0),
        "swarm.growth.fraction": (float, 0.1),
        "swarm.growth.max_n": (int, 100_000),
        "swarm.compare_mu": (bool, True),
        "seeds": (int, 1),
        "record.count": (int, 11),
        "grid.n": (int, 1024),
        "dump.times": ("floats", []),
    },
    "check-fi": {
        "fi.count": (int, 1000),
        "fi.betas": ("floats", [1.0, 5.0, 20.0]),
        "fi.ms": ("floats", [0.1, 0.25, 0.4]),
        "fi.slack": (float, 1e-3),
        "grid.n": (int, 2048),
    },
    "talagrand": {
        "fi.count": (int, 200),
        "fi.betas": ("floats", [1.0, 5.0, 20.0]),
        "fi.ms": ("floats", [0.1, 0.25, 0.4]),
        "talagrand.kappa": (float, 1.0),
        "grid.n": (int, 1024),
    },
    "lyapunov": {
        **_SCHEDULE,
        "v0": (float, 1.0),
        "delta": (float, 2.0),
        "t_end": (float, 1e6),
        "c.model": (str, "power_law"),
        "c.kappa": (float, 1.0),
        "points": (int, 200),
    },
    "schedule-validate": {
        **_SCHEDULE,
        "horizon": (float, 1e9),
        "c.model": (str, "power_law"),
        "c.kappa": (float, 1.0),
        "points": (int, 40),
    },
}

# command-line flag -> dotted key
_FLAGS = {
    "landscape": "landscape.name",
    "dim": "landscape.dim",
    "period": "landscape.period",
    "m": "potential.m",
    "beta": "beta",
    "n": "grid.n",
    "t_end": "t_end",
    "schedule": "schedule.kind",
    "k": "schedule.k",
    "alpha": "schedule.alpha",
    "gamma": "schedule.gamma",
    "N": "swarm.N",
    "h": "swarm.h",
    "dt": "swarm.dt",
    "seeds": "seeds",
    "count": "fi.count",
    "v0": "v0",
    "delta": "delta",
    "horizon": "horizon",
}


def _coerce(key, kind, value):
    try:
        if value is None:
            return None
        if kind == "floats":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return [float(v) for v in value]
        if kind is bool:
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
                return value.lower() in ("true", "1")
            raise TypeError
        if kind is int:
            if isinstance(value, bool):
                raise TypeError
            f = float(value)
            if f != int(f):
                raise TypeError
            return int(f)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise TypeError
            return out
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r} as {getattr(kind, '__name__', kind)}") from None


def build_config(command: str, file_values: dict, overrides: dict) -> dict:
    """Merge defaults, file values and overrides; reject unknown keys."""
    schema = {**_COMMON, **_SPECIFIC[command]}
    cfg = {k: v[1] for k, v in schema.items()}
    for source in (file_values, overrides):
        for key, value in source.items():
            if key not in schema:
                raise ConfigError(f"unknown config key {key!r} for {command}")
            cfg[key] = _coerce(key, schema[key][0], value)
    _validate(command, cfg)
    return cfg


def _validate(command, cfg):
    def positive(*keys):
        for key in keys:
            if key in cfg and cfg[key] is not None and not cfg[key] > 0:
                raise ConfigError(f"{key} must be positive")

    positive("landscape.dim", "landscape.period", "beta", "grid.n", "t_end", "schedule.k", "schedule.t0",
             "dt.initial", "dt.max", "swarm.N", "swarm.h", "swarm.dt", "swarm.alpha_cap", "seeds",
             "record.count", "fi.count", "fi.slack", "talagrand.kappa", "horizon", "points", "c.kappa",
             "threads", "swarm.diffusion_factor")
    if not cfg["potential.boltzmann"] and not 0.0 < cfg["potential.m"] < 0.5:
        raise ConfigError("potential.m must lie in (0, 1/2)")
    if "schedule.kind" in cfg:
        if cfg["schedule.kind"] not in ("constant", "power"):
            raise ConfigError("schedule.kind must be 'constant' or 'power'")
        if cfg["schedule.alpha"] is not None and cfg["schedule.gamma"] is not None:
            raise ConfigError("give at most one of schedule.alpha and schedule.gamma")
    if "grid.n" in cfg and cfg["grid.n"] < 16:
        raise ConfigError("grid.n must be at least 16")
    if cfg.get("c.model", "power_law") not in ("power_law", "bound"):
        raise ConfigError("c.model must be 'power_law' or 'bound'")
    if cfg.get("dt.method", "implicit") not in ("implicit", "explicit"):
        raise ConfigError("dt.method must be 'implicit' or 'explicit'")
    if "swarm.h" in cfg and not cfg["swarm.h"] < 0.5:
        raise ConfigError("swarm.h must be below 1/2")
    if "fi.ms" in cfg and any(not 0 < m < 0.5 for m in cfg["fi.ms"]):
        raise ConfigError("fi.ms entries must lie in (0, 1/2)")
    if command != "swarm" and cfg["landscape.dim"] != 1:
        raise ConfigError(f"{command} works on the circle only (landscape.dim = 1)")


# ---------------------------------------------------------------------------
# helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, preamble=None):
    with open(path, "w", newline="\n") as fh:
        if preamble is not None:
            fh.write("# " + json.dumps(preamble, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _landscape(cfg):
    params = {}
    for key in ("a", "b", "u0", "seed", "order"):
        v = cfg.get(f"landscape.{key}")
        if v is not None:
            params[key] = v
    try:
        return builtin(cfg["landscape.name"], cfg["landscape.dim"], cfg["landscape.period"], **params)
    except TypeError as exc:
        raise ConfigError(f"bad landscape parameters: {exc}") from None


def _spec(cfg):
    if cfg["potential.boltzmann"]:
        return PotentialSpec.boltzmann_mode()
    return PotentialSpec(cfg["potential.m"])


def _schedule(cfg, spec):
    if cfg["schedule.kind"] == "constant":
        return constant(cfg["schedule.k"])
    if cfg["schedule.alpha"] is not None:
        exponent = cfg["schedule.alpha"]
    elif cfg["schedule.gamma"] is not None:
        exponent = 1.0 / cfg["schedule.gamma"]
    else:
        exponent = default_exponent(spec if not spec.boltzmann else PotentialSpec())
    return power(cfg["schedule.k"], exponent, t0=cfg["schedule.t0"])


def _c_model(cfg, spec, land):
    if cfg["c.model"] == "bound":
        return c_of_beta_bound(spec, land.osc, land.period)
    return power_law_c(cfg["c.kappa"], spec.gamma)


def _record_times(t_start, t_end, count):
    if count < 2:
        return [t_end]
    lo = max(t_start, t_end * 1e-6)
    return [float(t) for t in np.geomspace(lo, t_end, count)]


# ---------------------------------------------------------------------------
# subcommands; each returns (csv files, extra manifest entries, exit status)


def run_stationary(cfg, out):
    spec, land = _spec(cfg), _landscape(cfg)
    mu = solve_stationary(spec, land, cfg["beta"], cfg["grid.n"])
    g = gap(spec, land, cfg["beta"], cfg["grid.n"])
    meta = {"beta": mu.beta, "c_star": mu.c_star, "mu_min": mu.mu_min, "mu_max": mu.mu_max, "gap": g,
            "grid_n": mu.grid_n, "L": mu.L}
    path = os.path.join(out, "stationary.csv")
    write_csv(path, ("x", "U", "mu"), zip(mu.x, mu.u, mu.values), preamble=meta)
    return [path], {"summary": meta}, EXIT_OK


def run_pde(cfg, out):
    spec, land = _spec(cfg), _landscape(cfg)
    sched = _schedule(cfg, spec)
    state = uniform(cfg["grid.n"], land.period)
    times = cfg["record.times"] or _record_times(0.0, cfg["t_end"], cfg["record.count"])
    policy = DtPolicy(cfg["dt.method"], cfg["dt.initial"], cfg["dt.growth"], cfg["dt.max"])
    traj = evolve(state, spec, land, sched, cfg["t_end"], policy, record_times=times,
                  profile_times=cfg["profile.times"])
    path = os.path.join(out, "pde.csv")
    write_csv(path, ("t", "beta", "I", "J", "mean_U", "L1_dist_to_mu"), traj.rows())
    files = [path]
    if traj.profiles:
        ppath = os.path.join(out, "pde_profiles.csv")
        rows = ((t, x, r) for t in sorted(traj.profiles) for x, r in zip(state.x, traj.profiles[t]))
        write_csv(ppath, ("t", "x", "rho"), rows)
        files.append(ppath)
    extra = {"steps": traj.steps, "max_energy_increase": traj.max_energy_increase,
             "final_mass": traj.final.mass}
    return files, extra, EXIT_OK


def _swarm_one(cfg, seed):
    spec, land = _spec(cfg), _landscape(cfg)
    sched = _schedule(cfg, spec)
    state = init_uniform(cfg["swarm.N"], land.dim, land.period, cfg["swarm.h"], seed)
    hp = BandwidthPolicy(cfg["swarm.h"], cfg["swarm.h_decay"]) if cfg["swarm.h_decay"] > 0 else None
    growth = None
    if cfg["swarm.growth.every"] > 0:
        growth = DuplicationPolicy(cfg["swarm.growth.every"], cfg["swarm.growth.fraction"],
                                   cfg["swarm.growth.max_n"])
    traj = run_swarm(state, spec, land, Kernel(land.dim), sched, cfg["t_end"], cfg["swarm.dt"], hp,
                     record_times=_record_times(0.0, cfg["t_end"], cfg["record.count"]), growth_policy=growth,
                     mu_grid_n=cfg["grid.n"], compare_mu=cfg["swarm.compare_mu"] and land.dim == 1,
                     dump_times=cfg["dump.times"], diffusion_factor=cfg["swarm.diffusion_factor"],
                     alpha_cap=cfg["swarm.alpha_cap"])
    dumps = {t: traj.dumps[t] for t in sorted(traj.dumps)}
    return list(traj.rows()), dumps


def run_swarm_cmd(cfg, out):
    seeds = [cfg["seed"] + i for i in range(cfg["seeds"])]
    if cfg["threads"] > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg["threads"]) as pool:
            results = list(pool.map(_swarm_one, [cfg] * len(seeds), seeds))
    else:
        results = [_swarm_one(cfg, s) for s in seeds]
    header = ("seed", "t", "beta", "h", "N", "mean_U", "basin_fraction", "kde_l1_to_mu", "alpha_cap_hits")
    path = os.path.join(out, "swarm.csv")
    write_csv(path, header, ((s, *row) for s, (rows, _) in zip(seeds, results) for row in rows))
    spath = os.path.join(out, "swarm_summary.csv")
    write_csv(spath, ("seed", "t_end", "beta", "mean_U", "basin_fraction", "alpha_cap_hits"),
              ((s, rows[-1][0], rows[-1][1], rows[-1][4], rows[-1][5], rows[-1][7]) for s, (rows, _) in
               zip(seeds, results)))
    files = [path, spath]
    if any(d for _, d in results):
        dpath = os.path.join(out, "swarm_particles.csv")
        dim = cfg["landscape.dim"]
        write_csv(dpath, ("seed", "t", "index", *[f"x{i}" for i in range(dim)]),
                  ((s, t, i, *p) for s, (_, d) in zip(seeds, results) for t, pos in d.items()
                   for i, p in enumerate(pos)))
        files.append(dpath)
    fractions = [rows[-1][5] for rows, _ in results]
    return files, {"seeds": seeds, "mean_basin_fraction": float(np.mean(fractions))}, EXIT_OK


def _fi_grid(cfg):
    land = _landscape(cfg)
    for m in cfg["fi.ms"]:
        for beta in cfg["fi.betas"]:
            yield land, PotentialSpec(m), beta


def run_check_fi(cfg, out, assert_pass=False):
    rows = []
    seeds = range(cfg["seed"], cfg["seed"] + cfg["fi.count"])
    for land, spec, beta in _fi_grid(cfg):
        for rec in sweep_functional_inequality(spec, land, beta, seeds, cfg["grid.n"], cfg["fi.slack"]):
            r = rec.result
            rows.append((rec.seed, rec.beta, rec.m, r.I, r.J, r.rhs, r.ratio, rec.passed, r.ratio_bound,
                         r.chain_passed, rec.refined))
    path = os.path.join(out, "check_fi.csv")
    write_csv(path, ("seed", "beta", "m", "I", "J", "rhs", "ratio", "pass", "ratio_bound", "chain_pass", "refined"),
              rows)
    failures = sum(1 for r in rows if not (r[7] and r[9]))
    extra = {"checks": len(rows), "failures": failures, "min_ratio": min(r[6] for r in rows)}
    status = EXIT_ASSERT if assert_pass and failures else EXIT_OK
    return [path], extra, status


def run_talagrand(cfg, out):
    rows = []
    seeds = range(cfg["seed"], cfg["seed"] + cfg["fi.count"])
    for land, spec, beta in _fi_grid(cfg):
        mu = solve_stationary(spec, land, beta, cfg["grid.n"])
        for seed in seeds:
            rho = random_perturbation(np.random.default_rng(seed)).density(mu)
            r = check_talagrand(rho, mu, spec, kappa_tal=cfg["talagrand.kappa"])
            rows.append((seed, beta, spec.m, r.lhs, r.rhs, r.w2, r.passed))
    path = os.path.join(out, "talagrand.csv")
    write_csv(path, ("seed", "beta", "m", "I", "rhs", "W2", "pass"), rows)
    return [path], {"checks": len(rows), "pass_rate": float(np.mean([r[6] for r in rows]))}, EXIT_OK


def run_lyapunov(cfg, out):
    spec, land = _spec(cfg), _landscape(cfg)
    sched = _schedule(cfg, spec)
    t, v, beta = lyapunov_bound(cfg["v0"], sched, _c_model(cfg, spec, land),
                                lambda x: float(omega_big(spec, x)), cfg["delta"], cfg["t_end"],
                                t_start=max(sched.t0, 1.0), n_out=cfg["points"])
    path = os.path.join(out, "lyapunov.csv")
    write_csv(path, ("t", "v", "beta"), zip(t, v, beta))
    return [path], {"v_end": float(v[-1])}, EXIT_OK


def run_schedule_validate(cfg, out):
    spec, land = _spec(cfg), _landscape(cfg)
    sched = _schedule(cfg, spec)
    rep = validate_schedule(sched, _c_model(cfg, spec, land), cfg["horizon"], cfg["points"])
    path = os.path.join(out, "schedule_validate.csv")
    rows = zip(rep.times, rep.ratio, rep.partial_times, rep.partial_integrals)
    write_csv(path, ("t", "ratio", "T", "integral"), rows)
    extra = {"verdict": rep.verdict, "flag": rep.flag, "condition1": rep.condition1,
             "condition2": rep.condition2, "ratio_slope": rep.ratio_slope,
             "increment_slope": rep.increment_slope, "exponent": sched.exponent,
             "asymptotic_c_slope": asymptotic_slope(spec, land.osc) if not spec.boltzmann else None}
    return [path], extra, EXIT_OK


COMMANDS = {
    "stationary": run_stationary,
    "pde": run_pde,
    "swarm": run_swarm_cmd,
    "check-fi": run_check_fi,
    "talagrand": run_talagrand,
    "lyapunov": run_lyapunov,
    "schedule-validate": run_schedule_validate,
}


def _parser():
    p = argparse.ArgumentParser(prog="swarmgrad", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with flat dotted keys")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
        for flag in _FLAGS:
            if _FLAGS[flag] in {**_COMMON, **_SPECIFIC[name]}:
                sp.add_argument("--" + flag.replace("_", "-"), dest=flag)
        if name == "pde":
            sp.add_argument("--fixed-beta", dest="fixed_beta", help="constant schedule at this beta")
        if name == "check-fi":
            sp.add_argument("--assert", dest="assert_pass", action="store_true",
                            help="exit with status 4 if any check fails")
    return p


def _overrides(args):
    out = {}
    for flag, key in _FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            out[key] = v
    if getattr(args, "fixed_beta", None) is not None:
        out["schedule.kind"] = "constant"
        out["schedule.k"] = args.fixed_beta
    if args.seed is not None:
        out["seed"] = args.seed
    if args.threads is not None:
        out["threads"] = args.threads
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value
    return out


def _error(out, kind, message, code):
    record = {"error": kind, "message": message, "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    try:
        with open(os.path.join(out, "error.json"), "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
    except OSError:
        pass
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = args.out
    try:
        file_values = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    file_values = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = build_config(args.command, file_values, _overrides(args))
        os.makedirs(out, exist_ok=True)
    except (ConfigError, ValueError, OSError) as exc:
        return _error(out if os.path.isdir(out) else ".", "config", str(exc), EXIT_CONFIG)

    start = time.perf_counter()
    try:
        if args.command == "check-fi":
            files, extra, status = run_check_fi(cfg, out, args.assert_pass)
        else:
            files, extra, status = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        return _error(out, "config", str(exc), EXIT_CONFIG)
    except (StabilityError, BracketError, FloatingPointError, ArithmeticError, RuntimeError) as exc:
        return _error(out, "numerical", f"{type(exc).__name__}: {exc}", EXIT_NUMERIC)
    except ValueError as exc:
        return _error(out, "config", str(exc), EXIT_CONFIG)

    manifest = {
        "command": args.command,
        "config": cfg,
        "files": [os.path.basename(f) for f in files],
        "versions": {"swarmgrad": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "seed": cfg["seed"],
        "wall_time_s": time.perf_counter() - start,
        "exit_code": status,
        **extra,
    }
    name = args.command.replace("-", "_")
    with open(os.path.join(out, f"{name}.manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
    return status


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


if __name__ == "__main__":
    sys.exit(main())
