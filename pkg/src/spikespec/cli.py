"""Command-line front end.

Every subcommand reads one TOML-style config (``--config``), applies
``--set section.key=value`` overrides, validates the result and writes its
artifacts plus ``manifest.json`` into ``<output.dir>/<subcommand>/``.

Exit status: 0 on success, 1 on invalid configuration, 2 on numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import math
import platform
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .corrector import GeometryData, projection_identities, residual_order_test, w1_solve
from .errors import ConfigError, ToolkitError
from .fiber import FiberDomain, branch_sweep, find_alpha_bar
from .geometry import build_spectra, circle_spectrum, flat_torus_spectrum, weyl_check
from .golden import case_key, parse_case, regen_golden
from .ground_state import ProblemParams, compute_constants, decay_diagnostics, solve_profile
from .io import (load_spectra, save_corrector, save_model_spectrum, save_plot_data, save_profile,
                 save_spectra, write_columns, write_json)
from .model_operator import (assemble_model_spectrum, branch_curves, gap_report, invertibility_sweep,
                             kato_flow, morse_report)

REQUIRED = object()  # marker: key must be supplied
OPTIONAL = object()  # marker: key may be absent (resolves to None)

TWO_PI = 2.0 * math.pi

# section -> key -> (type, default). Types: float, int, str, list, "floats", "ints".
SCHEMA: dict[str, dict[str, tuple]] = {
    "problem": {"p": (float, REQUIRED), "d": (int, REQUIRED)},
    "solver": {"r_max": (float, 15.0), "step": (float, 1e-3), "tol": (float, 1e-10),
               "fiber_r_max": (float, 15.0), "fiber_step": (float, 0.01), "curve_points": (int, 2000),
               "gamma": (float, 0.5)},
    "branches": {"alpha_max": (float, 5.0), "alpha_step": (float, 0.1)},
    "model": {"name": (str, "circle"), "length": (float, TWO_PI), "lengths": ("floats", [TWO_PI, TWO_PI]),
              "count": (int, 10000), "file": (str, ""), "n": (int, 1), "kappa": (float, 0.5),
              "epsilon": (float, 0.01)},
    "sweep": {"epsilons": ("floats", [0.02, 0.01, 0.005]), "eps_lo": (float, 0.004),
              "eps_hi": (float, 0.032), "samples": (int, 1000)},
    "thresholds": {"sigma_mode": (str, "refined"), "threshold": (float, OPTIONAL), "c": (float, 0.1),
                   "window": (float, OPTIONAL), "gap_statistic": (str, "median")},
    "kato": {"branch_indices": ("ints", [5, 9, 15]), "eps_lo": (float, OPTIONAL),
             "eps_hi": (float, OPTIONAL), "samples": (int, 7), "rel_step": (float, 1e-4)},
    "corrector": {"R": (float, 12.0), "step": (float, 0.08), "H_diag": ("floats", [0.3, -0.7]),
                  "eps_list": ("floats", [0.1, 0.05, 0.025, 0.0125])},
    "golden": {"path": (str, "golden.json"), "cases": (list, [])},
    "output": {"dir": (str, REQUIRED)},
}

SUBCOMMANDS = ("ground-state", "branches", "alpha-bar", "model-spectrum", "morse", "gaps", "sweep",
               "kato", "corrector", "identities", "weyl", "regen-golden")


@dataclass
class RunConfig:
    """Validated configuration; ``raw`` is the resolved section/key table."""

    raw: dict
    source: str | None = None

    def __getitem__(self, section: str) -> dict:
        return self.raw[section]

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.raw["problem"]["p"], self.raw["problem"]["d"])

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output"]["dir"])


# ---------------------------------------------------------------------------
# Parsing and validation


def _coerce(section: str, key: str, kind, value):
    where = f"{section}.{key}"
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where} must be finite")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if kind in ("floats", "ints"):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where} must be a non-empty list")
        inner = float if kind == "floats" else int
        return [_coerce(section, key, inner, v) for v in value]
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return list(value)
    raise AssertionError(kind)


def _parse_override(text: str) -> tuple[str, str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    lhs, rhs = text.split("=", 1)
    parts = lhs.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"override key {lhs!r} must look like section.key")
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    return parts[0], parts[1], value


def load_config(path: str | None, overrides=()) -> RunConfig:
    """Read, merge and validate a config; raises ConfigError on any problem."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
    data = copy.deepcopy(data)
    for item in overrides:
        section, key, value = _parse_override(item)
        data.setdefault(section, {})
        if not isinstance(data[section], dict):
            raise ConfigError(f"[{section}] must be a table")
        data[section][key] = value

    resolved: dict = {}
    for section, table in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in table:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, keys in SCHEMA.items():
        table = data.get(section, {})
        out = {}
        for key, (kind, default) in keys.items():
            if key in table:
                out[key] = _coerce(section, key, kind, table[key])
            elif default is REQUIRED:
                raise ConfigError(f"missing required key {section}.{key}")
            elif default is OPTIONAL:
                out[key] = None
            else:
                out[key] = copy.deepcopy(default)
        resolved[section] = out
    cfg = RunConfig(resolved, path)
    validate(cfg)
    return cfg


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def validate(cfg: RunConfig) -> None:
    pr, so, mo, sw, th, ka, co = (cfg[s] for s in
                                  ("problem", "solver", "model", "sweep", "thresholds", "kato", "corrector"))
    _require(pr["p"] > 1, "problem.p must exceed 1")
    _require(pr["d"] >= 1, "problem.d must be a positive integer")
    _require(cfg.params.subcritical, f"problem.p = {pr['p']:g} is not subcritical for d = {pr['d']}")
    _require(so["r_max"] >= 10, "solver.r_max must be at least 10")
    _require(0 < so["step"] <= 0.01, "solver.step must lie in (0, 0.01]")
    _require(0 < so["tol"] <= 1e-8, "solver.tol must lie in (0, 1e-8]")
    _require(so["fiber_r_max"] >= 5, "solver.fiber_r_max must be at least 5")
    _require(0 < so["fiber_step"] <= 0.1, "solver.fiber_step must lie in (0, 0.1]")
    _require(so["curve_points"] >= 100, "solver.curve_points must be at least 100")
    _require(0 < so["gamma"] < 1, "solver.gamma must lie in (0, 1)")
    br = cfg["branches"]
    _require(br["alpha_max"] >= 0 and br["alpha_step"] > 0, "branches.alpha_max >= 0 and alpha_step > 0")
    _require(mo["name"] in ("circle", "torus", "file"), "model.name must be circle, torus or file")
    _require(mo["length"] > 0 and min(mo["lengths"]) > 0, "model lengths must be positive")
    _require(mo["count"] >= 1, "model.count must be positive")
    _require(mo["n"] >= 1, "model.n must be positive")
    _require(mo["epsilon"] > 0, "model.epsilon must be positive")
    if mo["name"] == "file":
        _require(bool(mo["file"]), "model.file is required when model.name = 'file'")
        _require(Path(mo["file"]).is_file(), f"model.file {mo['file']} not found")
    _require(min(sw["epsilons"]) > 0, "sweep.epsilons must be positive")
    _require(0 < sw["eps_lo"] < sw["eps_hi"], "need 0 < sweep.eps_lo < sweep.eps_hi")
    _require(sw["samples"] >= 100, "sweep.samples must be at least 100")
    _require(th["sigma_mode"] in ("refined", "fiber"), "thresholds.sigma_mode must be refined or fiber")
    _require(th["gap_statistic"] in ("median", "mean"), "thresholds.gap_statistic must be median or mean")
    _require(th["c"] > 0, "thresholds.c must be positive")
    _require(th["threshold"] is None or th["threshold"] > 0, "thresholds.threshold must be positive")
    _require(th["window"] is None or th["window"] > 0, "thresholds.window must be positive")
    _require(min(ka["branch_indices"]) >= 0, "kato.branch_indices must be non-negative")
    _require(ka["samples"] >= 2 and 0 < ka["rel_step"] < 0.1, "kato.samples >= 2 and 0 < kato.rel_step < 0.1")
    if ka["eps_lo"] is not None or ka["eps_hi"] is not None:
        _require(ka["eps_lo"] is not None and ka["eps_hi"] is not None and 0 < ka["eps_lo"] < ka["eps_hi"],
                 "kato.eps_lo and kato.eps_hi must be given together with 0 < eps_lo < eps_hi")
    _require(co["R"] > 2 and 0 < co["step"] < co["R"] / 10, "corrector.R > 2 and 0 < step < R/10")
    eps = co["eps_list"]
    _require(len(eps) >= 4 and all(a > b > 0 for a, b in zip(eps, eps[1:])),
             "corrector.eps_list must be positive, decreasing, with at least 4 entries")
    for case in cfg["golden"]["cases"]:
        try:
            p, d = parse_case(str(case))
            _require(ProblemParams(p, d).subcritical, f"golden case {case!r} is not subcritical")
        except ValueError as exc:
            raise ConfigError(f"golden.cases: {exc}") from None


# ---------------------------------------------------------------------------
# Shared builders


class Context:
    """Lazily computed objects shared by the subcommands of one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._profile = self._curves = self._spectra = None

    @property
    def profile(self):
        if self._profile is None:
            s = self.cfg["solver"]
            self._profile = solve_profile(self.cfg.params, s["r_max"], s["step"], s["tol"])
        return self._profile

    @property
    def constants(self):
        return compute_constants(self.profile)

    @property
    def domain(self) -> FiberDomain:
        s = self.cfg["solver"]
        return FiberDomain(r_max=s["fiber_r_max"], step=s["fiber_step"])

    @property
    def curves(self):
        if self._curves is None:
            self._curves = branch_curves(self.profile, self.domain, self.cfg["solver"]["curve_points"])
        return self._curves

    @property
    def spectra(self):
        if self._spectra is None:
            m = self.cfg["model"]
            if m["name"] == "circle":
                base = circle_spectrum(m["length"], m["count"])
            elif m["name"] == "torus":
                base = flat_torus_spectrum(m["lengths"], m["count"])
            else:
                base = load_spectra(m["file"])
            if base.mu is None:
                base = build_spectra(base, m["n"], m["kappa"])
            self._spectra = base
        return self._spectra


def _sigma_mode(cfg):
    return cfg["thresholds"]["sigma_mode"]


# ---------------------------------------------------------------------------
# Subcommands. Each returns (artifact paths, summary dict).


def cmd_ground_state(ctx: Context, out: Path):
    prof = ctx.profile
    consts = ctx.constants
    decay = decay_diagnostics(prof)
    summary = {"w0": prof.w0, "constants": consts.to_dict(), "tail_amplitude": prof.tail_amplitude(),
               "decay": {"amplitude_limit": decay.amplitude_limit, "slope_limit": decay.slope_limit,
                         "amplitude_variation": decay.amplitude_variation, "converged": decay.converged}}
    return [save_profile(out / "profile.csv", prof), write_json(out / "constants.json", summary)], summary


def cmd_branches(ctx: Context, out: Path):
    b = ctx.cfg["branches"]
    alphas = np.round(np.arange(0.0, b["alpha_max"] + 0.5 * b["alpha_step"], b["alpha_step"]), 12)
    sweep = branch_sweep(ctx.profile, alphas, ctx.domain)
    cols = {k: sweep[k] for k in ("alpha", "eta", "sigma", "tau", "deta_dalpha")}
    paths = [write_columns(out / "branches.csv", cols)]
    for name in ("eta", "sigma", "tau"):
        paths.append(save_plot_data(out / f"plot_{name}.csv", "alpha", alphas, name, sweep[name]))
    summary = {"points": int(alphas.size), "eta_at_0": float(sweep["eta"][0]), "sigma_at_0": float(sweep["sigma"][0]),
               "tau_at_0": float(sweep["tau"][0])}
    return paths, summary


def cmd_alpha_bar(ctx: Context, out: Path):
    res = find_alpha_bar(ctx.profile, domain=ctx.domain)
    summary = dict(res.to_dict(), F_bar_model=2.0 * res.alpha_bar * res.eta_slope)
    return [write_json(out / "alpha_bar.json", summary)], summary


def cmd_model_spectrum(ctx: Context, out: Path):
    cfg = ctx.cfg
    model = assemble_model_spectrum(ctx.profile, ctx.constants, ctx.spectra, cfg["model"]["epsilon"],
                                    _sigma_mode(cfg), cfg["thresholds"]["threshold"], curves=ctx.curves)
    summary = {"epsilon": model.epsilon, "entries": len(model), "morse_index": model.morse_index(),
               "threshold": model.threshold, "discarded": model.discarded, "sigma_mode": model.sigma_mode}
    paths = [save_model_spectrum(out / "model_spectrum.csv", model), write_json(out / "model_spectrum.json", summary)]
    return paths, summary


def cmd_morse(ctx: Context, out: Path):
    cfg = ctx.cfg
    rep = morse_report(ctx.profile, ctx.constants, ctx.spectra, cfg["sweep"]["epsilons"],
                       sigma_mode=_sigma_mode(cfg), curves=ctx.curves)
    paths = [write_json(out / "morse.json", rep.to_dict()),
             write_columns(out / "morse.csv", {"epsilon": rep.epsilons, "count": rep.counts, "ratio": rep.ratios}),
             save_plot_data(out / "plot_ratio.csv", "epsilon", rep.epsilons, "ratio", rep.ratios)]
    return paths, rep.to_dict()


def cmd_gaps(ctx: Context, out: Path):
    cfg = ctx.cfg
    th = cfg["thresholds"]
    rep = gap_report(ctx.profile, ctx.constants, ctx.spectra, cfg["sweep"]["epsilons"], th["window"],
                     sigma_mode=th["sigma_mode"], statistic=th["gap_statistic"], curves=ctx.curves)
    eps = [s.epsilon for s in rep.samples]
    paths = [write_json(out / "gaps.json", rep.to_dict()),
             write_columns(out / "gaps.csv", {"epsilon": eps, "median_gap": [s.median_gap for s in rep.samples],
                                              "mean_gap": [s.mean_gap for s in rep.samples],
                                              "sigma_min_abs": [s.sigma_min_abs for s in rep.samples]})]
    return paths, {"eta_slope": rep.eta_slope, "sigma_slope": rep.sigma_slope, "degenerate": rep.degenerate}


def cmd_sweep(ctx: Context, out: Path):
    cfg = ctx.cfg
    sw = cfg["sweep"]
    rep = invertibility_sweep(ctx.profile, ctx.constants, ctx.spectra, sw["eps_lo"], sw["eps_hi"], sw["samples"],
                              cfg["thresholds"]["c"], sigma_mode=_sigma_mode(cfg), curves=ctx.curves)
    ivs = rep.intervals
    paths = [write_json(out / "sweep.json", rep.to_dict()),
             write_columns(out / "intervals.csv", {"lo": [i.lo for i in ivs], "hi": [i.hi for i in ivs],
                                                   "midpoint": [i.midpoint for i in ivs],
                                                   "best_epsilon": [i.best_epsilon for i in ivs],
                                                   "best_score": [i.best_score for i in ivs]}),
             save_plot_data(out / "plot_score.csv", "epsilon", rep.trace[0], "score", rep.trace[1])]
    summary = {"intervals": len(ivs), "length_slope": rep.length_slope,
               "blocks": [{"lo": b.lo, "hi": b.hi, "intervals": b.intervals} for b in rep.blocks]}
    return paths, summary


def cmd_kato(ctx: Context, out: Path):
    cfg = ctx.cfg
    ka = cfg["kato"]
    reports = []
    for j in ka["branch_indices"]:
        if ka["eps_lo"] is None:
            rho = float(ctx.spectra.rho[j])
            star = math.sqrt(ctx.curves.alpha_bar / rho) if rho > 0 else 1.0
            lo, hi = 0.8 * star, 1.25 * star
        else:
            lo, hi = ka["eps_lo"], ka["eps_hi"]
        reports.append(kato_flow(ctx.profile, ctx.constants, ctx.spectra, j, lo, hi, samples=ka["samples"],
                                 rel_step=ka["rel_step"], curves=ctx.curves, domain=ctx.domain))
    fbar = [r.F_bar_model for r in reports]
    summary = {"branches": [r.to_dict() for r in reports],
               "F_bar_model": fbar, "F_bar_spread": float((max(fbar) - min(fbar)) / abs(np.mean(fbar))),
               "max_relative_difference": max(r.max_relative_difference for r in reports)}
    paths = [write_json(out / "kato.json", summary)]
    for r in reports:
        paths.append(write_columns(out / f"kato_branch_{r.branch_index}.csv",
                                   {"epsilon": r.epsilons, "chain_rule": r.chain_rule,
                                    "finite_difference": r.finite_difference}))
    return paths, summary


def cmd_corrector(ctx: Context, out: Path):
    co = ctx.cfg["corrector"]
    geom = GeometryData.diagonal(co["H_diag"], k=len(co["H_diag"]) - 1, n=1)
    field_ = w1_solve(ctx.profile, geom, co["R"], co["step"])
    order = residual_order_test(ctx.profile, geom, field_, co["eps_list"])
    summary = {"field": field_.to_dict(), "order": order.to_dict()}
    paths = [save_corrector(out / "w1.csv", field_), write_json(out / "corrector.json", summary),
             write_columns(out / "residual_order.csv", {"epsilon": order.epsilons, "r0": order.r0, "r1": order.r1})]
    return paths, summary


def cmd_identities(ctx: Context, out: Path):
    rep = projection_identities(ctx.profile)
    return [write_json(out / "identities.json", rep.to_dict())], rep.to_dict()


def cmd_weyl(ctx: Context, out: Path):
    sp = ctx.spectra
    reports = {w: weyl_check(sp, w).to_dict() for w in ("rho", "omega", "mu")}
    j = np.arange(sp.rho.size)
    paths = [write_json(out / "weyl.json", reports), save_spectra(out / "spectra.json", sp),
             save_plot_data(out / "plot_counting.csv", "index", j, "rho", sp.rho)]
    return paths, reports


def cmd_regen_golden(ctx: Context, out: Path):
    cfg = ctx.cfg
    cases = [parse_case(str(c)) for c in cfg["golden"]["cases"]] or [(cfg.params.p, cfg.params.d)]
    path = Path(cfg["golden"]["path"])
    if not path.is_absolute():
        path = out / path
    data = regen_golden(path, cases)
    return [path], {case_key(p, d): data[case_key(p, d)] for p, d in cases}


COMMANDS = {
    "ground-state": cmd_ground_state, "branches": cmd_branches, "alpha-bar": cmd_alpha_bar,
    "model-spectrum": cmd_model_spectrum, "morse": cmd_morse, "gaps": cmd_gaps, "sweep": cmd_sweep,
    "kato": cmd_kato, "corrector": cmd_corrector, "identities": cmd_identities, "weyl": cmd_weyl,
    "regen-golden": cmd_regen_golden,
}

HELP = {
    "ground-state": "solve the radial ground state; write profile.csv and constants.json",
    "branches": "sweep eta, sigma, tau over alpha; write branches.csv",
    "alpha-bar": "locate the root alpha_bar of eta; write alpha_bar.json",
    "model-spectrum": "assemble the model spectrum at model.epsilon",
    "morse": "Morse index against Theta/eps^k over sweep.epsilons",
    "gaps": "smallest eta and sigma gaps with log-log slopes",
    "sweep": "admissible epsilon intervals over dyadic blocks",
    "kato": "eigenvalue flow of single eta branches through zero",
    "corrector": "solve the half-plane corrector and the residual-order test",
    "identities": "check the projection identities",
    "weyl": "build spectra for the chosen model and fit Weyl's law",
    "regen-golden": "regenerate golden values with the adaptive oracle",
}


# ---------------------------------------------------------------------------
# Driver


def run(subcommand: str, cfg: RunConfig, overrides=()) -> dict:
    """Run one subcommand and write its artifacts and manifest; returns the manifest."""
    out = cfg.output_dir / subcommand
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        paths, summary = COMMANDS[subcommand](ctx, out)
    elapsed = time.perf_counter() - start
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config_file": cfg.source,
        "overrides": list(overrides),
        "config": cfg.raw,
        "timings": {"total_seconds": elapsed},
        "artifacts": sorted(str(Path(p).relative_to(out)) if Path(p).is_relative_to(out) else str(p)
                            for p in paths),
        "warnings": [f"{w.category.__name__}: {w.message}" for w in caught],
        "environment": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "summary": summary,
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikespec", description="Spectral toolkit for spike-layer model problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config key (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"spikespec: config error: {exc}", file=sys.stderr)
        return 1
    try:
        manifest = run(args.command, cfg, args.overrides)
    except ToolkitError as exc:
        print(f"spikespec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"spikespec: invalid input: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: wrote {len(manifest['artifacts'])} artifacts to {cfg.output_dir / args.command}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
