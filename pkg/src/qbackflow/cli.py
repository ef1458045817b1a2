"""Command-line front end.

Subcommands: eigen, cbm, sweep, flux, prob, equiv. Every run writes a
table (CSV with ``# key=value`` metadata lines, or JSON with ``meta`` and
``rows``) whose bytes depend only on the configuration.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .eigen import (
    DEFAULT_CBM_GRIDS,
    DIAG_EPS,
    RESIDUAL_TOL,
    estimate_cbm,
    fit_exponential,
    max_probability,
    sweep_alpha,
)
from .exceptions import BackflowError, ParameterError
from .grid import DEFAULT_N, DEFAULT_Z_MAX, PANEL_NODES, RULES, build_grid
from .params import (
    BackflowParams,
    ReentryParams,
    alpha_from,
    beta_from,
    match_reentry_to_backflow,
)
from . import states as st
from .wavepacket import (
    TAIL_TOL,
    equivalence_check,
    flux_series,
    phi_from_f,
    prob_backflow,
    prob_backflow_time,
    prob_reentry,
    prob_reentry_time,
    psi_from_f,
)

MAX_N = 10000
EXIT_CONFIG, EXIT_NUMERIC = 2, 3

DEFAULTS = {
    "out": None,
    "format": "csv",
    "seed": 0,
    "quiet": False,
    "n": DEFAULT_N,
    "zmax": DEFAULT_Z_MAX,
    "rule": "gauss-legendre-composite",
    "scenario": None,
    "alpha": None,
    "beta": None,
    "mass": 1.0,
    "hbar": 1.0,
    "g": None,
    "ell": None,
    "T1": 0.0,
    "T2": 1.0,
    "tau1": 1.0,
    "tau2": 2.0,
    "state": None,
    "state_out": None,
    "t": None,
    "nu_grid": False,
    "grids": None,
    "alphas": "0,0.25,0.5,0.75,1",
    "rtol": 1e-6,
}


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["options"][name]
        except KeyError:
            raise AttributeError(name) from None


# -- parsing helpers ----------------------------------------------------------

def _float(text, what):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{what}: must be finite, got {text!r}")
    return value


def parse_state_spec(spec):
    """``family:key=val,key=val`` -> (family, {key: float})."""
    family, _, rest = str(spec).partition(":")
    family = family.strip()
    if not family:
        raise ConfigError(f"state: empty family in {spec!r}")
    values = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"state: expected key=value, got {item!r}")
        values[key.strip()] = _float(val, f"state.{key.strip()}")
    return family, values


def parse_time_range(spec, nu_grid=False):
    """``start:stop:count`` -> times, uniform in t or (with nu_grid) in 1/t."""
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise ConfigError(f"t: expected start:stop:count, got {spec!r}")
    start, stop = _float(parts[0], "t.start"), _float(parts[1], "t.stop")
    try:
        count = int(parts[2])
    except ValueError:
        raise ConfigError(f"t.count: expected an integer, got {parts[2]!r}") from None
    if count < 2 or not stop > start or start < 0:
        raise ConfigError(f"t: need 0 <= start < stop and count >= 2, got {spec!r}")
    if nu_grid:
        if start <= 0:
            raise ConfigError("t: a 1/t grid needs start > 0")
        return np.sort(1.0 / np.linspace(1.0 / stop, 1.0 / start, count))
    return np.linspace(start, stop, count)


def parse_grid_sequence(spec):
    """``n:zmax,n:zmax,...``"""
    configs = []
    for item in filter(None, (s.strip() for s in str(spec).split(","))):
        n, sep, z = item.partition(":")
        if not sep:
            raise ConfigError(f"grids: expected n:zmax, got {item!r}")
        try:
            configs.append((int(n), _float(z, "grids.zmax")))
        except ValueError:
            raise ConfigError(f"grids: bad node count in {item!r}") from None
    return configs


def _opt(values, key, default, cast=float):
    return cast(values.pop(key)) if key in values else default


def _reject_unknown(family, values):
    if values:
        raise ConfigError(f"state {family}: unknown keys {sorted(values)}")


# -- configuration --------------------------------------------------------------

def _check_grid(cfg, allow_degenerate=False):
    n = cfg.n
    if isinstance(n, float) and not n.is_integer():
        raise ConfigError(f"n: expected an integer, got {n}")
    n = int(n)
    if n < (1 if allow_degenerate else 2) or n > MAX_N:
        raise ConfigError(f"n: must lie in [{1 if allow_degenerate else 2}, {MAX_N}], got {n}")
    if not cfg.zmax > 0:
        raise ConfigError(f"zmax: must be > 0, got {cfg.zmax}")
    if cfg.rule not in RULES:
        raise ConfigError(f"rule: choose from {RULES}, got {cfg.rule!r}")
    cfg.options["n"] = n
    return build_grid(n, cfg.zmax, cfg.rule, allow_degenerate=allow_degenerate)


def _scenario(cfg):
    direct = [k for k in ("alpha", "beta") if cfg.options.get(k) is not None]
    physical = [k for k in ("g", "ell") if cfg.options.get(k) is not None]
    if len(direct) + len(physical) != 1:
        raise ConfigError("provide exactly one of --alpha, --beta, --g, --ell "
                          f"(got {direct + physical or 'none'})")
    key = (direct + physical)[0]
    scenario = cfg.scenario or {"alpha": "backflow", "g": "backflow",
                                "beta": "reentry", "ell": "reentry"}[key]
    if scenario not in ("backflow", "reentry", "dimensionless"):
        raise ConfigError(f"scenario: unknown value {scenario!r}")
    if scenario == "backflow" and key in ("beta", "ell") or \
            scenario == "reentry" and key in ("alpha", "g"):
        raise ConfigError(f"--{key} does not belong to scenario {scenario}")
    return scenario, key


def _check_units(cfg):
    if not cfg.mass > 0 or not cfg.hbar > 0:
        raise ConfigError(f"mass and hbar must be > 0, got {cfg.mass}, {cfg.hbar}")


def _backflow_params(cfg, alpha=None):
    """Backflow parameters from flags; when ``alpha`` is given, g is solved for."""
    _check_units(cfg)
    m, hbar, t1, t2 = cfg.mass, cfg.hbar, cfg.T1, cfg.T2
    if alpha is not None:
        if not t1 + t2 > 0 or not t2 > t1:
            raise ConfigError("T1/T2: need T2 > T1 >= 0")
        g = alpha / (math.sqrt(m * (t2 - t1) / hbar) * (t1 + t2) / 2.0)
    else:
        g = cfg.g
    return BackflowParams(m, hbar, g, t1, t2)


def _reentry_params(cfg, beta=None):
    _check_units(cfg)
    m, hbar, tau1, tau2 = cfg.mass, cfg.hbar, cfg.tau1, cfg.tau2
    if beta is not None:
        if not tau1 > 0 or not tau2 > tau1:
            raise ConfigError("tau1/tau2: need tau2 > tau1 > 0")
        ell = beta / math.sqrt(m * (1.0 / tau1 - 1.0 / tau2) / hbar)
    else:
        ell = cfg.ell
    return ReentryParams(m, hbar, ell, tau1, tau2)


def _physical_params(cfg):
    scenario, key = _scenario(cfg)
    if scenario == "dimensionless":
        raise ConfigError(f"command {cfg.command} needs a physical scenario")
    value = cfg.options[key]
    if scenario == "backflow":
        return scenario, _backflow_params(cfg, value if key == "alpha" else None)
    return scenario, _reentry_params(cfg, value if key == "beta" else None)


def _dimensionless_state(family, values, grid, alpha, seed):
    if family == "eigen":
        _reject_unknown(family, values)
        return max_probability(alpha, grid).state
    if family == "gaussian":
        center, width = _opt(values, "center", 1.0), _opt(values, "width", 0.5)
        kick = _opt(values, "k", 0.0)
        _reject_unknown(family, values)
        return st.dimensionless_gaussian(grid, center, width, kick)
    if family == "exponential":
        decay = _opt(values, "decay", 1.0)
        _reject_unknown(family, values)
        return st.dimensionless_exponential(grid, decay)
    if family == "random":
        modes = _opt(values, "modes", 4, int)
        _reject_unknown(family, values)
        return st.random_dimensionless_state(grid, seed, modes)
    raise ConfigError(f"state: unknown dimensionless family {family!r}")


def _physical_state(cfg, scenario, params, grid):
    family, values = parse_state_spec(cfg.state or "eigen")
    n = _opt(values, "n", None, int)
    kw = {} if n is None else {"n": n}
    if family in ("eigen", "random"):
        value = alpha_from(params) if scenario == "backflow" else beta_from(params)
        f = _dimensionless_state(family, values, grid, value, cfg.seed)
        return phi_from_f(f, params) if scenario == "backflow" else psi_from_f(f, params)
    hbar = params.planck
    if scenario == "backflow":
        if family == "gaussian":
            p0, sigma = _opt(values, "p0", 3.0), _opt(values, "sigma", 0.5)
            x0 = _opt(values, "x0", 0.0)
            _reject_unknown(family, values)
            return st.momentum_gaussian(p0, sigma, x0, planck=hbar, **kw)
        if family == "exponential":
            sigma = _opt(values, "sigma", 1.0)
            _reject_unknown(family, values)
            return st.momentum_exponential(sigma, **kw)
        if family == "mixture":
            p1, p2 = _opt(values, "p1", 1.0), _opt(values, "p2", 2.0)
            width = _opt(values, "width", 0.05)
            _reject_unknown(family, values)
            return st.momentum_mixture([p1, p2], width, **kw)
    else:
        if family == "gaussian":
            x0, sigma = _opt(values, "x0", -5.0), _opt(values, "sigma", 1.0)
            p0 = _opt(values, "p0", 3.0)
            _reject_unknown(family, values)
            return st.position_gaussian(x0, sigma, p0, planck=hbar, **kw)
        if family == "exponential":
            sigma = _opt(values, "sigma", 1.0)
            _reject_unknown(family, values)
            return st.position_exponential(sigma, **kw)
        if family == "chopped":
            k, length = _opt(values, "k", 1.0), _opt(values, "L", 50.0)
            _reject_unknown(family, values)
            return st.chopped_beam(k, length, **kw)
    raise ConfigError(f"state: unknown {scenario} family {family!r}")


# -- output -------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.17g}")
    return value


def _check_finite(rows):
    for row in rows:
        for value in row:
            if isinstance(value, (float, np.floating)) and not math.isfinite(value):
                raise NumericalFailure(f"non-finite value in output row {row}")


def render(meta, columns, rows, fmt):
    _check_finite(rows)
    if fmt == "json":
        doc = {"meta": {k: _jsonable(v) for k, v in meta.items()},
               "rows": [{c: _jsonable(v) for c, v in zip(columns, row)} for row in rows]}
        return json.dumps(doc, indent=2) + "\n"
    lines = [f"# {k}={_fmt(v)}" for k, v in meta.items()]
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _meta(cfg, grid=None, **extra):
    meta = {"software": "qbackflow", "version": __version__, "command": cfg.command}
    if grid is not None:
        meta.update({"grid_n": grid.n, "grid_z_max": grid.z_max, "grid_rule": grid.rule})
    meta.update({"diag_eps": DIAG_EPS, "residual_tol": RESIDUAL_TOL,
                 "tail_tol": TAIL_TOL, "seed": cfg.seed})
    meta.update(extra)
    return meta


def _say(cfg, message):
    if not cfg.quiet:
        print(message, file=sys.stderr)


# -- commands -------------------------------------------------------------------

def cmd_eigen(cfg):
    scenario, key = _scenario(cfg)
    _check_units(cfg)
    if key in ("alpha", "beta"):
        value = cfg.options[key]
        if value < 0:
            raise ConfigError(f"{key}: must be >= 0, got {value}")
    elif scenario == "backflow":
        value = alpha_from(_backflow_params(cfg))
    else:
        value = beta_from(_reentry_params(cfg))
    grid = _check_grid(cfg, allow_degenerate=True)
    result = max_probability(value, grid)
    sub = grid.n < PANEL_NODES
    meta = _meta(cfg, grid, scenario=scenario, residual=result.residual)
    text = render(meta, ["alpha", "lambda_max", "sub_resolution"],
                  [(result.alpha, result.lambda_max, sub)], cfg.format)
    if cfg.state_out:
        rows = [(z, w, f.real, f.imag) for z, w, f in
                zip(grid.nodes, grid.weights, result.f.astype(complex))]
        _write(render(meta, ["z", "weight", "f_real", "f_imag"], rows, cfg.format),
               cfg.state_out)
    _say(cfg, f"lambda_max({value:g}) = {result.lambda_max:.10g}"
         + (" [sub-resolution grid]" if sub else ""))
    return text


def cmd_cbm(cfg):
    configs = parse_grid_sequence(cfg.grids) if cfg.grids else list(DEFAULT_CBM_GRIDS)
    for n, z in configs:
        if not 2 <= n <= MAX_N or z <= 0:
            raise ConfigError(f"grids: bad configuration ({n}, {z})")
    if len(configs) < 3:
        raise ConfigError("grids: need at least 3 configurations")
    est = estimate_cbm(configs, cfg.rule)
    meta = _meta(cfg, None, grid_rule=cfg.rule, c_bm=est.value, error=est.error,
                 exponent=est.exponent, trend=est.trend, degenerate=est.degenerate)
    rows = [(r["n"], r["z_max"], r["lambda_max"], r.get("lambda_n_extrapolated", r["lambda_max"]))
            for r in est.table]
    _say(cfg, f"c_bm ~ {est.value:.8g} +/- {est.error:.2g}")
    return render(meta, ["n", "z_max", "lambda_max", "lambda_n_extrapolated"], rows, cfg.format)


def cmd_sweep(cfg):
    alphas = [_float(a, "alphas") for a in str(cfg.alphas).split(",") if a.strip()]
    if any(a < 0 for a in alphas) or alphas != sorted(alphas):
        raise ConfigError("alphas: must be non-negative and ascending")
    grid = _check_grid(cfg)
    table = sweep_alpha(alphas, grid)
    meta = _meta(cfg, grid)
    if len(alphas) >= 3 and np.all(table[:, 1] > 0):
        law = fit_exponential(table)
        meta.update(prefactor=law.prefactor, rate=law.rate, fit_residual=law.residual)
        _say(cfg, f"lambda_max ~ {law.prefactor:.6g} exp(-{law.rate:.4g} alpha)")
    return render(meta, ["alpha", "lambda_max"], [tuple(r) for r in table], cfg.format)


def cmd_flux(cfg):
    scenario, params = _physical_params(cfg)
    grid = _check_grid(cfg)
    state = _physical_state(cfg, scenario, params, grid)
    window = (params.window_start, params.window_end)
    spec = cfg.t or f"{window[0]}:{window[1]}:101"
    times = parse_time_range(spec, cfg.nu_grid)
    if scenario == "reentry" and times[0] <= 0:
        raise ConfigError("t: reentry flux needs t > 0")
    series = flux_series(state, params, times)
    meta = _meta(cfg, grid, scenario=scenario, state=cfg.state or "eigen",
                 state_nodes=state.grid.n, state_extent=state.grid.z_max,
                 transfer=series.transfer, imag_residue=series.imag_residue,
                 nu_grid=bool(cfg.nu_grid))
    _say(cfg, f"{len(times)} flux samples; integrated transfer {series.transfer:.6g}")
    return render(meta, ["t", "flux"], list(zip(series.times, series.values)), cfg.format)


def cmd_prob(cfg):
    scenario, params = _physical_params(cfg)
    grid = _check_grid(cfg)
    state = _physical_state(cfg, scenario, params, grid)
    if scenario == "backflow":
        value = alpha_from(params)
        kernel, timed = prob_backflow(state, params), prob_backflow_time(state, params)
    else:
        value = beta_from(params)
        kernel, timed = prob_reentry(state, params), prob_reentry_time(state, params)
    rel = abs(kernel - timed) / max(abs(kernel), abs(timed), 1e-300)
    meta = _meta(cfg, grid, scenario=scenario, state=cfg.state or "eigen",
                 state_nodes=state.grid.n, state_extent=state.grid.z_max)
    _say(cfg, f"P = {kernel:.10g} (kernel), {timed:.10g} (time integral)")
    return render(meta, ["parameter", "kernel_route", "time_route", "rel_diff"],
                  [(value, kernel, timed, rel)], cfg.format)


def cmd_equiv(cfg):
    scenario, key = _scenario(cfg)
    if key in ("alpha", "beta"):
        if cfg.options[key] < 0:
            raise ConfigError(f"{key}: must be >= 0")
        bf = _backflow_params(cfg, cfg.options[key])
    elif key == "g":
        bf = _backflow_params(cfg)
    else:
        bf = _backflow_params(cfg, beta_from(_reentry_params(cfg)))
    re = match_reentry_to_backflow(bf, cfg.tau1, cfg.tau2)
    grid = _check_grid(cfg)
    family, values = parse_state_spec(cfg.state or "eigen")
    f = _dimensionless_state(family, values, grid, alpha_from(bf), cfg.seed)
    report = equivalence_check(f, bf, re, rtol=cfg.rtol)
    meta = _meta(cfg, grid, state=cfg.state or "eigen", rtol=report.rtol,
                 acceleration=bf.acceleration, observation_point=re.observation_point)
    _say(cfg, f"P = {report.backflow:.12g}, reentry = {report.reentry:.12g}: "
         + ("pass" if report.passed else "FAIL"))
    return render(meta, ["alpha", "beta", "backflow", "reentry", "abs_diff", "rel_diff", "pass"],
                  [(report.alpha, report.beta, report.backflow, report.reentry,
                    report.abs_diff, report.rel_diff, report.passed)], cfg.format)


COMMANDS = {"eigen": cmd_eigen, "cbm": cmd_cbm, "sweep": cmd_sweep,
            "flux": cmd_flux, "prob": cmd_prob, "equiv": cmd_equiv}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("--seed", type=int, help="seed for randomized states")
    common.add_argument("--quiet", action="store_true", default=None)
    common.add_argument("--n", type=int, help="quadrature nodes")
    common.add_argument("--zmax", type=float, help="half-line cutoff")
    common.add_argument("--rule", choices=RULES)

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenario", choices=("backflow", "reentry", "dimensionless"))
    scen.add_argument("--alpha", type=float)
    scen.add_argument("--beta", type=float)
    scen.add_argument("--mass", type=float)
    scen.add_argument("--hbar", type=float)
    scen.add_argument("--g", type=float, help="acceleration (backflow)")
    scen.add_argument("--ell", type=float, help="observation point (reentry)")
    scen.add_argument("--T1", type=float)
    scen.add_argument("--T2", type=float)
    scen.add_argument("--tau1", type=float)
    scen.add_argument("--tau2", type=float)
    scen.add_argument("--state", help="family:key=val,...")

    parser = argparse.ArgumentParser(prog="qbackflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eigen", parents=[common, scen], help="largest eigenvalue and optimal state")
    p.add_argument("--state-out", help="also write the optimal state samples here")
    p = sub.add_parser("cbm", parents=[common], help="extrapolated free-space constant")
    p.add_argument("--grids", help="n:zmax,n:zmax,... (default 750:20,1500:30,3000:40)")
    p = sub.add_parser("sweep", parents=[common], help="lambda_max over alpha with decay fit")
    p.add_argument("--alphas", help="comma-separated ascending alphas")
    p = sub.add_parser("flux", parents=[common, scen], help="flux time series")
    p.add_argument("--t", help="start:stop:count")
    p.add_argument("--nu-grid", action="store_true", default=None,
                   help="space the samples uniformly in 1/t")
    sub.add_parser("prob", parents=[common, scen], help="transfer probability, two routes")
    p = sub.add_parser("equiv", parents=[common, scen], help="backflow/reentry equivalence report")
    p.add_argument("--rtol", type=float)
    return parser


def load_config(argv):
    args = build_parser().parse_args(argv)
    options = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_options = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(file_options, dict):
            raise ConfigError("config: top level must be an object")
        unknown = set(file_options) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"config: unknown keys {sorted(unknown)}")
        options.update({k.replace("-", "_"): v for k, v in file_options.items()})
    options.update({k: v for k, v in vars(args).items()
                    if v is not None and k not in ("command", "config")})
    return RunConfig(args.command, options)


def main(argv=None):
    try:
        cfg = load_config(argv)
        text = COMMANDS[cfg.command](cfg)
        _write(text, cfg.out)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, BackflowError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
