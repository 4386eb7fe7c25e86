"""Command line front end.

Configuration is layered: built-in defaults, then a flat ``key = value``
config file (``--config`` flag or the TWINPROBE_CONFIG variable), then
``TWINPROBE_<KEY>`` environment variables, then command line flags.
Later layers win.  Unknown config keys and unknown TWINPROBE_* variables
are rejected rather than ignored.

Exit codes: 0 success, 2 configuration error, 3 physics domain error
(unstable regime, vanishing signal, diverged integration), 4 closed-form
verification failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields, replace

from . import sweep as sweep_mod
from .dynamics import (
    ProbeParams,
    UnstableRegimeError,
    occupation_from_temperature,
    prepare,
    relative_mode_frequency,
    thermal_covariance,
)
from .gaussian import direct_sum, vacuum
from .metrology import (
    SIGNAL_CONSISTENT,
    SIGNAL_VARIANTS,
    FminPoint,
    MeterParams,
    UndetectableForceError,
    decoherence_budget,
    f_min,
    noise,
    phi_opt,
    signal_coeff,
    sql,
)
from .oracle import (
    IntegrationDivergedError,
    build_entangler_system,
    integrate_moments,
    verify_closed_forms,
)

__all__ = ["ConfigError", "RunConfig", "build_parser", "main"]

ENV_PREFIX = "TWINPROBE_"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_VERIFY = 4


class ConfigError(ValueError):
    """Invalid or contradictory configuration input."""


@dataclass(frozen=True)
class RunConfig:
    """Merged configuration seen by every subcommand."""

    omega: float = 1.0
    coupling_chi: float | None = None
    g_opt: float | None = None
    beta_abs: float | None = None
    delta: float | None = None
    r: float | None = None
    temperature: float | None = None
    hbar_over_kb: float = 1.0
    n_th: float = 20.0
    gamma_mech: float = 0.0
    kappa: float = 1.0
    tau_scaled: float = math.pi / 2.0
    phi: str = "opt"
    signal_variant: str = SIGNAL_CONSISTENT
    r_list: str = "1,2,10"
    points: int = 512
    axis_lo: float | None = None
    axis_hi: float | None = None
    include_sql: bool = True
    out: str | None = None
    tolerance: float = 1e-6
    include_printed_signal: bool = False
    full_model: bool = False
    jobs: int = 1
    step: float | None = None
    gnuplot: str | None = None


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_PARSERS = {
    "omega": float,
    "coupling_chi": float,
    "g_opt": float,
    "beta_abs": float,
    "delta": float,
    "r": float,
    "temperature": float,
    "hbar_over_kb": float,
    "n_th": float,
    "gamma_mech": float,
    "kappa": float,
    "tau_scaled": float,
    "phi": str,
    "signal_variant": str,
    "r_list": str,
    "points": int,
    "axis_lo": float,
    "axis_hi": float,
    "include_sql": _parse_bool,
    "out": str,
    "tolerance": float,
    "include_printed_signal": _parse_bool,
    "full_model": _parse_bool,
    "jobs": int,
    "step": float,
    "gnuplot": str,
}


def _convert(key: str, raw: str, source: str):
    try:
        return _PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from None


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip().replace("-", "_")
        if key not in _PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _env_overrides(environ) -> dict[str, str]:
    out: dict[str, str] = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key == "config":
            continue
        if key not in _PARSERS:
            raise ConfigError(f"unknown environment variable {name}")
        out[key] = value
    return out


def build_config(args: argparse.Namespace, environ=None) -> RunConfig:
    """Layer defaults, config file, environment, and flags into a RunConfig."""
    environ = os.environ if environ is None else environ
    values = {f.name: f.default for f in fields(RunConfig)}
    path = getattr(args, "config", None) or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        for key, raw in _read_config_file(path).items():
            values[key] = _convert(key, raw, path)
    for key, raw in _env_overrides(environ).items():
        values[key] = _convert(key, raw, ENV_PREFIX + key.upper())
    for key in _PARSERS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    cfg = RunConfig(**values)
    if cfg.signal_variant not in SIGNAL_VARIANTS:
        raise ConfigError(
            f"signal_variant must be one of {SIGNAL_VARIANTS}, got {cfg.signal_variant!r}"
        )
    if cfg.phi != "opt":
        try:
            float(cfg.phi)
        except ValueError:
            raise ConfigError(f"phi must be 'opt' or a number, got {cfg.phi!r}") from None
    if cfg.jobs < 1:
        raise ConfigError(f"jobs must be at least 1, got {cfg.jobs}")
    return cfg


def _resolve_n_th(cfg: RunConfig) -> float:
    if cfg.temperature is not None:
        return occupation_from_temperature(
            cfg.temperature, cfg.omega, hbar_over_kb=cfg.hbar_over_kb
        )
    return cfg.n_th


def _resolve_phi(cfg: RunConfig, tau_scaled: float) -> float:
    if cfg.phi == "opt":
        return phi_opt(tau_scaled)
    return float(cfg.phi)


def _parse_ratio_list(cfg: RunConfig) -> tuple[float, ...]:
    items = [piece.strip() for piece in cfg.r_list.split(",") if piece.strip()]
    if not items:
        raise ConfigError(f"r_list is empty: {cfg.r_list!r}")
    try:
        return tuple(float(piece) for piece in items)
    except ValueError:
        raise ConfigError(f"r_list must be comma-separated numbers, got {cfg.r_list!r}") from None


def _probe_params(cfg: RunConfig) -> ProbeParams:
    """Resolve the entangler parametrization; exactly one route is allowed."""
    n_th = _resolve_n_th(cfg)
    routes = [
        cfg.r is not None,
        cfg.coupling_chi is not None,
        cfg.g_opt is not None or cfg.beta_abs is not None,
    ]
    if sum(routes) > 1:
        raise ConfigError(
            "give only one of --r, --coupling-chi, or --g-opt/--beta-abs/--delta"
        )
    if cfg.r is not None:
        return ProbeParams.from_squeeze_ratio(
            cfg.omega, cfg.r, delta=cfg.delta, n_th=n_th, gamma_mech=cfg.gamma_mech
        )
    if cfg.coupling_chi is not None:
        return ProbeParams.from_coupling(
            cfg.omega,
            cfg.coupling_chi,
            delta=cfg.delta,
            n_th=n_th,
            gamma_mech=cfg.gamma_mech,
        )
    if cfg.g_opt is not None or cfg.beta_abs is not None:
        if cfg.g_opt is None or cfg.beta_abs is None or cfg.delta is None:
            raise ConfigError("raw coupling needs all of --g-opt, --beta-abs, --delta")
        return ProbeParams(
            omega=cfg.omega,
            g_opt=cfg.g_opt,
            beta_abs=cfg.beta_abs,
            delta=cfg.delta,
            n_th=n_th,
            gamma_mech=cfg.gamma_mech,
        )
    raise ConfigError("entangler needs --r, --coupling-chi, or --g-opt/--beta-abs/--delta")


def _g(x: float) -> str:
    return format(float(x), ".12g")


def _write_csv(path: str, axis: str, rows: list[FminPoint]) -> None:
    lines = ["axis,r,phi_opt,signal,noise,f_min,f_sql"]
    for pt in rows:
        axis_value = pt.tau_scaled if axis == "tau_scaled" else pt.kappa
        lines.append(
            ",".join(
                _g(v)
                for v in (
                    axis_value,
                    pt.ratio,
                    pt.phi,
                    pt.signal,
                    pt.noise,
                    pt.f_min,
                    pt.f_sql,
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_gnuplot(path: str, csv_path: str, spec: sweep_mod.SweepSpec) -> None:
    lines = [
        "set datafile separator ','",
        f"set xlabel '{spec.axis}'",
        "set ylabel 'f_min'",
        "set logscale y",
    ]
    if spec.log_spaced:
        lines.append("set logscale x")
    plots = [
        f"'{csv_path}' using 1:($2=={ratio:g}?$6:1/0) with lines title 'r={ratio:g}'"
        for ratio in spec.ratios
    ]
    if spec.include_sql:
        first = spec.ratios[0]
        plots.append(
            f"'{csv_path}' using 1:($2=={first:g}?$7:1/0) "
            "with lines dashtype 2 title 'SQL'"
        )
    lines.append("plot \\\n  " + ", \\\n  ".join(plots))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _full_model_deviation(p: ProbeParams, step: float | None) -> tuple[float, float]:
    """Relative probe-covariance deviation of the full cavity model.

    Propagates the six-dimensional model (cavity kept) from the thermal
    initial state to the switch-off time and compares the probe block
    against the adiabatic closed form.  Returns (deviation, delta).
    """
    if p.delta is None:
        p = replace(p, delta=100.0 * p.omega)
    system = build_entangler_system(p, adiabatic=False)
    theta = relative_mode_frequency(p)
    t_star = math.pi / (2.0 * theta)
    if step is None:
        step = (2.0 * math.pi / abs(p.delta)) / 300.0
    c0 = direct_sum(thermal_covariance(p.n_th), vacuum(1))
    _, c = integrate_moments(system, None, c0, 0.0, t_star, step)
    target = prepare(p).covariance.matrix
    dev = float(
        abs(c.matrix[:4, :4] - target).max() / max(1.0, abs(target).max())
    )
    return dev, p.delta


def cmd_entangle(cfg: RunConfig) -> int:
    p = _probe_params(cfg)
    out = prepare(p)
    rep = out.report
    print(f"relative mode frequency = {_g(out.mode_frequency)}")
    print(f"squeeze ratio           = {_g(out.ratio)}")
    print(f"switch-off time         = {_g(out.switch_off_time)}")
    print("covariance (q1, p1, q2, p2):")
    for row in out.covariance.matrix:
        print("  " + "  ".join(f"{v: .9e}" for v in row))
    print(f"relative q variance     = {_g(rep.relative_q_variance)}")
    print(f"total p variance        = {_g(rep.total_p_variance)}")
    print(f"EPR variance product    = {_g(rep.variance_product)}")
    print(f"squeeze margin          = {_g(rep.squeeze_margin)}")
    print(f"entangled               = {'yes' if rep.entangled else 'no'}")
    if cfg.full_model:
        dev, delta = _full_model_deviation(p, cfg.step)
        print(
            f"full-model deviation    = {dev:.3e} "
            f"(relative, delta/omega = {_g(delta / p.omega)})"
        )
    return EXIT_OK


def _run_sweep(cfg: RunConfig, base: sweep_mod.SweepSpec, default_out: str) -> int:
    overrides = {
        "kappa": cfg.kappa,
        "tau_scaled": cfg.tau_scaled,
        "n_th": _resolve_n_th(cfg),
        "ratios": _parse_ratio_list(cfg),
        "points": cfg.points,
        "include_sql": cfg.include_sql,
        "signal_variant": cfg.signal_variant,
    }
    if cfg.axis_lo is not None:
        overrides["lo"] = cfg.axis_lo
    if cfg.axis_hi is not None:
        overrides["hi"] = cfg.axis_hi
    spec = replace(base, **overrides)
    rows = sweep_mod.fmin_curve(spec, jobs=cfg.jobs)
    out_path = cfg.out or default_out
    _write_csv(out_path, spec.axis, rows)
    print(f"wrote {len(rows)} rows to {out_path}")
    if cfg.gnuplot:
        _write_gnuplot(cfg.gnuplot, out_path, spec)
        print(f"wrote gnuplot script to {cfg.gnuplot}")
    return EXIT_OK


def cmd_fig1(cfg: RunConfig) -> int:
    return _run_sweep(cfg, sweep_mod.fig1_spec(), "fig1.csv")


def cmd_fig2(cfg: RunConfig) -> int:
    return _run_sweep(cfg, sweep_mod.fig2_spec(), "fig2.csv")


def cmd_fmin(cfg: RunConfig) -> int:
    ratio = cfg.r if cfg.r is not None else 1.0
    n_th = _resolve_n_th(cfg)
    phi = _resolve_phi(cfg, cfg.tau_scaled)
    meter = MeterParams(
        kappa=cfg.kappa,
        tau_scaled=cfg.tau_scaled,
        phi=phi,
        signal_variant=cfg.signal_variant,
    )
    point = FminPoint(
        tau_scaled=cfg.tau_scaled,
        kappa=cfg.kappa,
        ratio=ratio,
        n_th=n_th,
        phi=phi,
        signal=signal_coeff(meter),
        noise=noise(meter, ratio, n_th),
        f_min=f_min(meter, ratio, n_th),
        f_sql=sql(meter),
    )
    for name in ("tau_scaled", "kappa", "ratio", "n_th", "phi"):
        print(f"{name} = {_g(getattr(point, name))}")
    print(f"signal = {_g(point.signal)}")
    print(f"noise = {_g(point.noise)}")
    print(f"f_min = {_g(point.f_min)}")
    print(f"f_sql = {_g(point.f_sql)}")
    if cfg.out:
        _write_csv(cfg.out, "tau_scaled", [point])
        print(f"wrote 1 row to {cfg.out}")
    return EXIT_OK


def cmd_optimize_kappa(cfg: RunConfig) -> int:
    ratio = cfg.r if cfg.r is not None else 1.0
    best = sweep_mod.optimal_kappa(
        cfg.tau_scaled,
        ratio,
        _resolve_n_th(cfg),
        signal_variant=cfg.signal_variant,
    )
    print(f"kappa_opt = {_g(best.kappa)}")
    print(f"f_min = {_g(best.f_min)}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    report = verify_closed_forms(
        tolerance=cfg.tolerance,
        include_printed_signal=cfg.include_printed_signal,
    )
    for check in report.checks:
        print(check.summary())
        shown = check.failures[:10]
        for line in shown:
            print(f"  {line}")
        if len(check.failures) > len(shown):
            print(f"  ... ({len(check.failures) - len(shown)} more)")
    print(f"VERIFY: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_budget(cfg: RunConfig) -> int:
    p = ProbeParams(
        omega=cfg.omega, n_th=_resolve_n_th(cfg), gamma_mech=cfg.gamma_mech
    )
    phi = _resolve_phi(cfg, cfg.tau_scaled)
    budget = decoherence_budget(p, phi, cfg.tau_scaled / cfg.omega)
    print(f"coherence budget = {_g(budget.budget)}")
    print(f"rotation time = {_g(budget.rotation_time)}")
    print(f"force time = {_g(budget.force_time)}")
    print(f"time used = {_g(budget.time_used)}")
    print(f"feasible = {'yes' if budget.feasible else 'no'}")
    return EXIT_OK


def cmd_dump_config(cfg: RunConfig) -> int:
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        print(f"{f.name} = {text}")
    return EXIT_OK


_FLOAT_FLAGS = [
    ("--omega", "mechanical frequency (sets the time unit)"),
    ("--coupling-chi", "composite coupling of the eliminated cavity"),
    ("--g-opt", "single-photon optomechanical coupling"),
    ("--beta-abs", "cavity amplitude magnitude"),
    ("--delta", "cavity detuning"),
    ("--r", "squeeze ratio of the entangler"),
    ("--temperature", "bath temperature (overrides --n-th)"),
    ("--hbar-over-kb", "unit factor for the temperature conversion"),
    ("--n-th", "thermal occupation of each probe"),
    ("--gamma-mech", "mechanical damping rate"),
    ("--kappa", "readout coupling g*gamma in units of omega"),
    ("--tau-scaled", "readout duration in units of 1/omega"),
    ("--axis-lo", "sweep axis lower end"),
    ("--axis-hi", "sweep axis upper end"),
    ("--tolerance", "relative tolerance for the readout verification"),
    ("--step", "integrator step override"),
]

_STR_FLAGS = [
    ("--phi", "interference phase in radians, or 'opt'"),
    ("--signal-variant", "force transfer convention: consistent or printed"),
    ("--r-list", "comma-separated squeeze ratios for sweeps"),
    ("--out", "output CSV path"),
    ("--gnuplot", "also write a gnuplot script to this path"),
]

_INT_FLAGS = [
    ("--points", "grid points per sweep"),
    ("--jobs", "worker threads for sweeps"),
]

_BOOL_FLAGS = [
    ("--include-sql", "emit the uncoupled ground-state reference column"),
    ("--include-printed-signal", "also check the printed signal variant"),
    ("--full-model", "propagate the full cavity model for comparison"),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration")
    group.add_argument("--config", help="flat key = value config file")
    for flag, help_text in _FLOAT_FLAGS:
        group.add_argument(flag, type=float, default=None, help=help_text)
    for flag, help_text in _STR_FLAGS:
        group.add_argument(flag, default=None, help=help_text)
    for flag, help_text in _INT_FLAGS:
        group.add_argument(flag, type=int, default=None, help=help_text)
    for flag, help_text in _BOOL_FLAGS:
        group.add_argument(
            flag, action=argparse.BooleanOptionalAction, default=None, help=help_text
        )


_COMMANDS = [
    ("entangle", cmd_entangle, "prepare the two-probe state and report entanglement"),
    ("fig1", cmd_fig1, "sweep f_min over the readout duration (CSV)"),
    ("fig2", cmd_fig2, "sweep f_min over the readout coupling (CSV)"),
    ("fmin", cmd_fmin, "evaluate one sensitivity point"),
    ("optimize-kappa", cmd_optimize_kappa, "find the coupling minimizing f_min"),
    ("verify", cmd_verify, "check closed forms against the moment oracle"),
    ("budget", cmd_budget, "compare protocol time against the coherence time"),
    ("dump-config", cmd_dump_config, "print the merged configuration"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinprobe",
        description="Force sensing with a pair of entangled mechanical probes.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, fn, help_text in _COMMANDS:
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return args.func(cfg)
    except (UnstableRegimeError, UndetectableForceError, IntegrationDivergedError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
