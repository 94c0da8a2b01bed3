"""Command-line front end.

Every subcommand reads an optional INI file (``--config``), applies flag
overrides, runs, and writes its outputs plus ``manifest.ini`` into
``--outdir``. ``rerun MANIFEST --outdir DIR`` replays a run and produces
byte-identical files.

Random streams: the master seed feeds ``SeedSequence(seed,
spawn_key=(crc32(name),))`` for each named component, so adding a
component never shifts another's stream.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure or a
failed cross-check.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__, analysis, dynamics, event_stream as es, ou_exit, photovoltage

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

MODEL_KEYS = ("omega", "rho", "theta_minus", "theta_plus")
FRONTEND_KEYS = ("beta1", "beta2", "beta3", "sigma", "xi1", "xi2", "radiance",
                 "theta_minus_v", "theta_plus_v")


class ConfigError(ValueError):
    pass


class CrossCheckFailed(RuntimeError):
    pass


def component_rng(seed: int, name: str) -> np.random.Generator:
    """Independent generator for component ``name`` under master ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),))
    return np.random.default_rng(ss)


# --------------------------------------------------------------------------
# configuration

# run-section keys: (type, default)
RUN_KEYS = {
    "seed": (int, 1),
    "start": (float, 0.0),
    "n": (int, 100_000),
    "sigma_alpha_mode": (str, "paper_literal"),
    "sampler": (str, "pathfree"),
    "oracle_dt": (float, None),
    "cache_spacing": (float, 0.01),
    "format": (str, "jsonl"),
    "bins_per_decade": (int, 10),
    "workers": (int, None),
    # exit-stats
    "lower": (float, -0.5),
    "upper": (float, 1.0),
    "crosscheck": (bool, False),
    # conditionals
    "z_min": (float, -1.0),
    "z_max": (float, 1.0),
    "z_points": (int, 401),
    "overlay_n": (int, 0),
    "level": (float, 0.99),
    # dynamics
    "z0": (float, 0.0),
    "iterations": (int, 50),
    # mstep
    "m_list": (str, "0,1,2,3,4,5,6,7,200"),
    "replicas": (int, 100_000),
}


@dataclass
class RunConfig:
    """Resolved run settings; ``model`` or ``frontend`` carries the parameters."""

    command: str
    model: dict = field(default_factory=dict)
    frontend: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    def model_params(self) -> es.ModelParams:
        mode = self.run["sigma_alpha_mode"]
        try:
            mode = es.SigmaAlphaMode(mode)
        except ValueError:
            raise ConfigError(f"sigma_alpha_mode: unknown value {mode!r}") from None
        if self.frontend and ("theta_minus" in self.model or "theta_plus" in self.model):
            raise ConfigError("give either normalized model parameters or front-end "
                              "parameters, not both")
        if self.frontend:
            return self._from_frontend(mode)
        missing = [k for k in MODEL_KEYS if k not in self.model]
        if missing and self.command != "exit-stats":
            raise ConfigError(f"missing model parameter(s): {', '.join(missing)}")
        try:
            return es.ModelParams(self.model["omega"], self.model["rho"],
                                  self.model["theta_minus"], self.model["theta_plus"], mode)
        except ValueError as e:
            raise ConfigError(_field_message(str(e))) from None

    def _from_frontend(self, mode):
        fe = self.frontend
        missing = [k for k in FRONTEND_KEYS if k not in fe]
        for k in ("omega", "rho"):
            if k not in self.model:
                missing.append(k)
        if missing:
            raise ConfigError(f"missing front-end parameter(s): {', '.join(missing)}")
        try:
            fp = photovoltage.FrontEndParams(fe["beta1"], fe["beta2"], fe["beta3"], fe["sigma"],
                                             fe["xi1"], fe["xi2"], fe["radiance"])
            g = photovoltage.asymptotic_params(fp)
            th = photovoltage.normalize(g, self.model["omega"], fe["theta_plus_v"],
                                        fe["theta_minus_v"])
            return es.ModelParams(self.model["omega"], self.model["rho"],
                                  th.theta_minus_tilde, th.theta_plus_tilde, mode)
        except ValueError as e:
            raise ConfigError(_field_message(str(e))) from None

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["meta"] = {"command": self.command, "version": __version__}
        if self.model:
            cp["model"] = {k: _fmt(v) for k, v in sorted(self.model.items())}
        if self.frontend:
            cp["frontend"] = {k: _fmt(v) for k, v in sorted(self.frontend.items())}
        cp["run"] = {k: _fmt(v) for k, v in sorted(self.run.items()) if v is not None}
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp[sec].items()]
            lines.append("")
        return "\n".join(lines)


_FIELD_NAMES = {
    "theta_minus_tilde": "theta_minus",
    "theta_plus_tilde": "theta_plus",
}


def _field_message(msg):
    for k, v in _FIELD_NAMES.items():
        msg = msg.replace(k, v)
    return msg


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(key, raw, typ):
    if raw is None:
        return None
    try:
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if typ is int:
            try:
                return int(raw)
            except ValueError:
                f = float(raw)
                if not f.is_integer():
                    raise
                return int(f)
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def _float_field(key, raw):
    v = _parse_value(key, raw, float)
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def load_config(command: str, path: str | None, overrides: dict) -> RunConfig:
    cfg = RunConfig(command)
    run = {k: d for k, (_, d) in RUN_KEYS.items()}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        if not cp.read(path, encoding="utf-8"):
            raise ConfigError(f"config: cannot read {path}")
        for sec in cp.sections():
            if sec not in ("meta", "model", "frontend", "run"):
                raise ConfigError(f"config: unknown section [{sec}]")
        if cp.has_section("model"):
            for k, v in cp["model"].items():
                if k not in MODEL_KEYS:
                    raise ConfigError(f"config: unknown model key {k!r}")
                cfg.model[k] = _float_field(k, v)
        if cp.has_section("frontend"):
            for k, v in cp["frontend"].items():
                if k not in FRONTEND_KEYS:
                    raise ConfigError(f"config: unknown frontend key {k!r}")
                cfg.frontend[k] = _float_field(k, v)
        if cp.has_section("run"):
            for k, v in cp["run"].items():
                if k not in RUN_KEYS:
                    raise ConfigError(f"config: unknown run key {k!r}")
                run[k] = _parse_value(k, v, RUN_KEYS[k][0])
    for k, v in overrides.items():
        if v is None:
            continue
        if k in MODEL_KEYS:
            cfg.model[k] = _float_field(k, v)
        elif k in FRONTEND_KEYS:
            cfg.frontend[k] = _float_field(k, v)
        elif k in RUN_KEYS:
            run[k] = _parse_value(k, v, RUN_KEYS[k][0])
    cfg.run = run
    _validate_run(cfg)
    return cfg


def _validate_run(cfg):
    r = cfg.run
    if r["seed"] < 0 or r["seed"] >= 2**64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    if r["n"] < 1:
        raise ConfigError("n: must be >= 1")
    if cfg.command == "stream" and r["n"] < 2:
        raise ConfigError("n: a stream needs at least 2 events")
    if r["sampler"] not in ("pathfree", "oracle"):
        raise ConfigError(f"sampler: unknown value {r['sampler']!r}")
    if r["format"] not in ("jsonl", "csv", "both"):
        raise ConfigError(f"format: unknown value {r['format']!r}")
    if r["z_points"] < 2 or not r["z_max"] > r["z_min"]:
        raise ConfigError("z grid: need z_max > z_min and z_points >= 2")
    if r["replicas"] < 10_000:
        raise ConfigError("replicas: must be >= 10000")
    if r["iterations"] < 1:
        raise ConfigError("iterations: must be >= 1")
    if not 0.5 < r["level"] < 1:
        raise ConfigError("level: must lie in (0.5, 1)")
    if r["cache_spacing"] is not None and not r["cache_spacing"] > 0:
        raise ConfigError("cache_spacing: must be > 0")
    omega = cfg.model.get("omega")
    if r["oracle_dt"] is not None:
        if not r["oracle_dt"] > 0:
            raise ConfigError("oracle_dt: must be > 0")
        if omega is not None and omega > 0 and r["oracle_dt"] > 0.01 / omega:
            raise ConfigError("oracle_dt: must be <= 0.01 / omega")
    try:
        ms = [int(m) for m in str(r["m_list"]).split(",") if m.strip()]
    except ValueError:
        raise ConfigError("m_list: comma-separated integers expected") from None
    if not ms or min(ms) < 0:
        raise ConfigError("m_list: nonnegative integers expected")


# --------------------------------------------------------------------------
# output helpers


def _json_dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _params_dict(p: es.ModelParams) -> dict:
    return {"omega_rad_s": p.omega, "rho_s": p.rho, "theta_minus_tilde": p.theta_minus_tilde,
            "theta_plus_tilde": p.theta_plus_tilde, "sigma_alpha_mode": p.sigma_alpha_mode.value,
            "alpha": p.alpha, "sigma_alpha": p.sigma_alpha}


def _workers(cfg):
    w = cfg.run["workers"]
    if w is None:
        return os.cpu_count() or 1
    return w


# --------------------------------------------------------------------------
# subcommands


def cmd_stream(cfg: RunConfig, outdir: str, out=sys.stdout) -> int:
    p = cfg.model_params()
    r = cfg.run
    rng = component_rng(r["seed"], "stream")
    cache = ou_exit.ExitTimeCache(p.omega, p.theta_minus_tilde, p.theta_plus_tilde,
                                  spacing=r["cache_spacing"])
    s = es.simulate_event_stream(p, r["start"], r["n"], rng, sampler=r["sampler"], cache=cache,
                                 oracle_dt=r["oracle_dt"], seed=r["seed"])
    if r["format"] in ("jsonl", "both"):
        es.write_jsonl(s, os.path.join(outdir, "events.jsonl"))
    if r["format"] in ("csv", "both"):
        es.write_csv(s, os.path.join(outdir, "events.csv"))
    table = analysis.summarize(s)
    with open(os.path.join(outdir, "summary.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table.to_text())
    _json_dump({"params": _params_dict(p), "seed": r["seed"], "summary": table.to_dict()},
               os.path.join(outdir, "summary.json"))
    analysis.isi_histograms(s, r["bins_per_decade"]).to_csv(
        os.path.join(outdir, "isi_histograms.csv"))
    out.write(table.to_text())
    return EXIT_OK


def _conditional_densities(table: ou_exit.ExitTimeTable):
    t = table.grid_t
    return t, table._pchip(True).derivative()(t), table._pchip(False).derivative()(t)


def cmd_exit_stats(cfg: RunConfig, outdir: str, out=sys.stdout) -> int:
    r = cfg.run
    omega = cfg.model.get("omega")
    if omega is None:
        raise ConfigError("missing model parameter(s): omega")
    try:
        prob = ou_exit.ExitProblem(omega, r["lower"], r["upper"], r["start"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    p_lo, p_up = ou_exit.exit_side_probs(prob)
    report = {
        "problem": {"omega_rad_s": omega, "lower": prob.lower, "upper": prob.upper,
                    "start": prob.start},
        "p_lower": p_lo,
        "p_upper": p_up,
        "expected_exit_time_s": ou_exit.expected_exit_time(prob),
        "expected_exit_position": ou_exit.expected_exit_position(prob),
    }
    if prob.on_boundary:
        report["immediate_exit"] = True
        _json_dump(report, os.path.join(outdir, "exit_stats.json"))
        out.write(f"start on the boundary: immediate exit through the "
                  f"{'lower' if p_lo == 1 else 'upper'} side, tau = 0\n")
        return EXIT_OK
    report["immediate_exit"] = False
    sol = ou_exit.solve_exit_pdes(prob)
    table = ou_exit.exit_time_table(sol)
    t, f_lo, f_up = _conditional_densities(table)
    with open(os.path.join(outdir, "exit_densities.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("# t in seconds; densities of tau given the exit side, in 1/s\n")
        fh.write("t_s,density_lower,density_upper\n")
        for row in zip(t, f_lo, f_up):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    n = r["n"]
    pf = ou_exit.sample_exit_pathfree(prob, table, component_rng(r["seed"], "exit-pathfree"),
                                      size=n)
    report["pathfree"] = {"n": n, "mean_s": float(pf.times.mean()),
                          "lower_fraction": float(pf.lower.mean())}
    ok = True
    if r["crosscheck"]:
        dt = r["oracle_dt"] if r["oracle_dt"] is not None else ou_exit.default_oracle_dt(prob)
        orc = ou_exit.sample_exit_path_oracle(prob, dt, component_rng(r["seed"], "exit-oracle"),
                                              size=n)
        ks = stats.ks_2samp(pf.times, orc.times)
        z_side = (orc.lower.mean() - p_lo) / math.sqrt(max(p_lo * p_up, 1e-300) / n)
        report["oracle"] = {"n": n, "dt_s": dt, "mean_s": float(orc.times.mean()),
                            "lower_fraction": float(orc.lower.mean())}
        report["crosscheck"] = {"ks_statistic": float(ks.statistic),
                                "ks_pvalue": float(ks.pvalue), "side_z": float(z_side)}
        ok = ks.pvalue >= 0.01 and abs(z_side) <= 3
        report["crosscheck"]["passed"] = bool(ok)
    _json_dump(report, os.path.join(outdir, "exit_stats.json"))
    out.write(f"P(exit lower) = {p_lo:.6f}  P(exit upper) = {p_up:.6f}\n")
    out.write(f"E tau = {report['expected_exit_time_s']:.6f} s\n")
    out.write(f"path-free mean = {report['pathfree']['mean_s']:.6f} s (n = {n})\n")
    if r["crosscheck"]:
        c = report["crosscheck"]
        out.write(f"oracle mean = {report['oracle']['mean_s']:.6f} s; KS p = "
                  f"{c['ks_pvalue']:.4f}; side z = {c['side_z']:.2f}\n")
        if not ok:
            raise CrossCheckFailed("samplers disagree")
    return EXIT_OK


def cmd_conditionals(cfg: RunConfig, outdir: str, out=sys.stdout) -> int:
    p = cfg.model_params()
    r = cfg.run
    z = np.linspace(r["z_min"], r["z_max"], r["z_points"])
    p_off, p_on = es.conditional_event_probs(p, z)
    isi = es.conditional_expected_isi(p, z)
    ez = es.conditional_expected_z(p, z)
    with open(os.path.join(outdir, "conditionals.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("# z normalized voltage; E_isi in seconds\n")
        fh.write("z,p_on,p_off,E_isi_s,E_z_next\n")
        for row in zip(z, p_on, p_off, isi, ez):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    cp = dynamics.critical_point(p)
    a, b = dynamics.determinism_interval(p, r["level"])
    report = {"params": _params_dict(p), "z_star": cp.z_star, "isi_argmax": cp.isi_argmax,
              "expectation_root": cp.expectation_root, "spread": cp.spread,
              "determinism_level": r["level"], "determinism_interval": [a, b]}
    if r["overlay_n"] > 0:
        s = es.simulate_event_stream(p, r["start"], r["overlay_n"],
                                     component_rng(r["seed"], "conditionals-overlay"))
        bc = analysis.binned_conditionals(s)
        bc.to_csv(os.path.join(outdir, "overlay.csv"))
        analytic = es.conditional_expected_isi(p, bc.z_mean)
        report["overlay_max_rel_isi_error"] = float(np.max(np.abs(bc.isi_mean / analytic - 1)))
    _json_dump(report, os.path.join(outdir, "critical_point.json"))
    out.write(f"z* = {cp.z_star:.6f} (ISI argmax {cp.isi_argmax:.6f}, E[Z] root "
              f"{cp.expectation_root:.6f})\n")
    out.write(f"p > {r['level']} outside ({a:.6f}, {b:.6f})\n")
    return EXIT_OK


def _classification_dict(c):
    if isinstance(c, dynamics.FixedPoint):
        return {"type": "fixed_point", "z": c.z, "stable": c.stable}
    if isinstance(c, dynamics.LimitCycle):
        return {"type": "limit_cycle", "points": list(c.points)}
    return {"type": "undetermined", "tail": list(c.tail)}


def cmd_dynamics(cfg: RunConfig, outdir: str, out=sys.stdout) -> int:
    p = cfg.model_params()
    r = cfg.run
    tr = dynamics.iterate_conditionals(p, r["z0"], r["iterations"])
    tr.to_csv(os.path.join(outdir, "trace.csv"))
    dynamics.write_cobweb_csv(dynamics.lemeray_trace(p, r["z0"], r["iterations"]),
                              os.path.join(outdir, "cobweb.csv"))
    fps = dynamics.find_fixed_points(p)
    report = {
        "params": _params_dict(p),
        "z0": r["z0"],
        "iterations": r["iterations"],
        "classification": _classification_dict(tr.classification),
        "refined": tr.refined,
        "fixed_points": [{"location": f.location, "derivative": f.derivative,
                          "stable": f.stable, "marginal": f.marginal,
                          "residual": f.residual} for f in fps],
    }
    _json_dump(report, os.path.join(outdir, "dynamics.json"))
    for f in fps:
        out.write(f"fixed point {f.location:.6f}: f' = {f.derivative:.4f} "
                  f"({'stable' if f.stable else 'unstable'})\n")
    out.write(f"recursion from z0 = {r['z0']}: {_classification_dict(tr.classification)}\n")
    return EXIT_OK


def cmd_mstep(cfg: RunConfig, outdir: str, out=sys.stdout) -> int:
    p = cfg.model_params()
    r = cfg.run
    ms = [int(m) for m in str(r["m_list"]).split(",") if m.strip()]
    curves = es.m_step_density_kde(p, r["start"], ms, r["replicas"],
                                   component_rng(r["seed"], "mstep"), workers=_workers(cfg))
    zs = dynamics.critical_point(p).z_star
    with open(os.path.join(outdir, "mstep.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# start z = {r['start']!r}; z* = {zs!r}; z normalized voltage\n")
        fh.write("m,z,density\n")
        for m in sorted(curves):
            grid, dens = curves[m]
            for g, d in zip(grid, dens):
                fh.write(f"{m},{float(g)!r},{float(d)!r}\n")
    _json_dump({"params": _params_dict(p), "start": r["start"], "m_list": sorted(curves),
                "replicas": r["replicas"], "z_star": zs}, os.path.join(outdir, "mstep.json"))
    out.write(f"wrote {len(curves)} density curves; z* = {zs:.6f}\n")
    return EXIT_OK


COMMANDS = {
    "stream": cmd_stream,
    "exit-stats": cmd_exit_stats,
    "conditionals": cmd_conditionals,
    "dynamics": cmd_dynamics,
    "mstep": cmd_mstep,
}


# --------------------------------------------------------------------------
# argument parsing


def _add_common(sp):
    sp.add_argument("--config", help="INI file with [model], [frontend] and [run] sections")
    sp.add_argument("--outdir", default=".", help="output directory (created if missing)")
    sp.add_argument("--seed", type=int)
    g = sp.add_argument_group("model (normalized)")
    g.add_argument("--omega", type=float, help="filter bandwidth [rad/s]")
    g.add_argument("--rho", type=float, help="refractory period [s]")
    g.add_argument("--theta-minus", dest="theta_minus", type=float)
    g.add_argument("--theta-plus", dest="theta_plus", type=float)
    g.add_argument("--sigma-alpha-mode", dest="sigma_alpha_mode",
                   choices=[m.value for m in es.SigmaAlphaMode])
    fe = sp.add_argument_group("front end (alternative to the normalized thresholds)")
    for k in FRONTEND_KEYS:
        fe.add_argument("--" + k.replace("_", "-"), dest=k, type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eventpixel", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stream", help="simulate an event stream")
    _add_common(sp)
    sp.add_argument("--start", type=float)
    sp.add_argument("--n", type=int, help="number of events")
    sp.add_argument("--sampler", choices=["pathfree", "oracle"])
    sp.add_argument("--oracle-dt", dest="oracle_dt", type=float)
    sp.add_argument("--cache-spacing", dest="cache_spacing", type=float)
    sp.add_argument("--format", choices=["jsonl", "csv", "both"])
    sp.add_argument("--bins-per-decade", dest="bins_per_decade", type=int)

    sp = sub.add_parser("exit-stats", help="OU exit statistics and sampler comparison")
    _add_common(sp)
    sp.add_argument("--lower", type=float)
    sp.add_argument("--upper", type=float)
    sp.add_argument("--start", type=float)
    sp.add_argument("--n", type=int, help="Monte Carlo samples per sampler")
    sp.add_argument("--oracle-dt", dest="oracle_dt", type=float)
    sp.add_argument("--crosscheck", action="store_const", const=True)

    sp = sub.add_parser("conditionals", help="conditional curves and the critical point")
    _add_common(sp)
    sp.add_argument("--z-min", dest="z_min", type=float)
    sp.add_argument("--z-max", dest="z_max", type=float)
    sp.add_argument("--z-points", dest="z_points", type=int)
    sp.add_argument("--overlay-n", dest="overlay_n", type=int,
                    help="events for a binned Monte Carlo overlay (0: none)")
    sp.add_argument("--level", type=float)
    sp.add_argument("--start", type=float)

    sp = sub.add_parser("dynamics", help="deterministic recursion, fixed points, cobweb")
    _add_common(sp)
    sp.add_argument("--z0", type=float)
    sp.add_argument("--iterations", type=int)

    sp = sub.add_parser("mstep", help="m-step transition density estimates")
    _add_common(sp)
    sp.add_argument("--start", type=float)
    sp.add_argument("--m-list", dest="m_list")
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("rerun", help="replay a run from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("--outdir", required=True)
    return ap


def _config_from_manifest(path) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    if not cp.read(path, encoding="utf-8"):
        raise ConfigError(f"manifest: cannot read {path}")
    if not cp.has_section("meta") or "command" not in cp["meta"]:
        raise ConfigError("manifest: missing [meta] command")
    command = cp["meta"]["command"]
    if command not in COMMANDS:
        raise ConfigError(f"manifest: unknown command {command!r}")
    return load_config(command, path, {})


def run(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            cfg = _config_from_manifest(args.manifest)
        else:
            overrides = {k: v for k, v in vars(args).items()
                         if k not in ("command", "config", "outdir")}
            cfg = load_config(args.command, args.config, overrides)
            if cfg.command != "exit-stats":
                cfg.model_params()
        os.makedirs(args.outdir, exist_ok=True)
        with open(os.path.join(args.outdir, "manifest.ini"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(cfg.to_ini())
        return COMMANDS[cfg.command](cfg, args.outdir, out)
    except ConfigError as e:
        err.write(f"error: {e}\n")
        return EXIT_INVALID
    except CrossCheckFailed as e:
        err.write(f"cross-check failed: {e}\n")
        return EXIT_NUMERICAL
    except ArithmeticError as e:
        err.write(f"numerical failure: {type(e).__name__}: {e}\n")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
