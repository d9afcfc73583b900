"""Command-line entry point: ``ksbesov <command> ...``.

Commands
--------
simulate   integrate KS and write a KSB1 snapshot
norms      rescaled Besov norms of a snapshot, as CSV
verify     run a named verification suite; exit status 0 iff it passes
sweep      L-sweep of KS runs reduced to one CSV row per (L, seed)
spectrum   time-averaged power spectrum of a snapshot, as plot-data CSV
structure  ||D^h u||^3_{L^3} / h against h for a snapshot, as plot-data CSV

Every command accepts ``--config FILE``, a flat ``key = value`` file whose
keys match the long option names (``t-burn`` or ``t_burn``).  Options given
on the command line override the file.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .besov import besov_norm_fd, besov_norm_lp, structure_function
from .evolution import ConfigurationError, DivergenceError, EquationSpec, StepperConfig, integrate
from .evolution import random_initial_condition
from .spectral import DomainError, GridSpec
from .verify import ROW_HEADER, SUITES, run_suite

NORMS = {
    "b_third_3_inf": harness.NORM_THIRD_INF,
    "b_third_3_3": harness.NORM_THIRD_3,
    "b_two_2_2": harness.NORM_TWO,
    "b_half_2_2": harness.NORM_HALF,
}


def _add_config(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file; command-line options override it")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ksbesov", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate KS and write a snapshot")
    _add_config(p)
    p.add_argument("--L", type=float, help="domain length (default 100)")
    p.add_argument("--N", type=int, help="grid points (default: next power of two >= 8L/pi)")
    p.add_argument("--dt", type=float, help="time step (default 0.1, refined to the stiffness limit when not given)")
    p.add_argument("--t-burn", type=float, help="discarded transient (default 200)")
    p.add_argument("--t-avg", type=float, help="recorded duration (default 1000)")
    p.add_argument("--dt-rec", type=float, help="recording interval (default 1)")
    p.add_argument("--seed", type=int, help="initial-condition seed (default 0)")
    p.add_argument("--scheme", choices=("ETDRK4", "IMEX"), help="time stepper (default ETDRK4)")
    p.add_argument("--dealias", choices=("on", "off"), help="2/3-rule truncation (default on)")
    p.add_argument("--out", help="snapshot path (required)")

    p = sub.add_parser("norms", help="rescaled Besov norms of a snapshot")
    _add_config(p)
    p.add_argument("snapshot")
    p.add_argument("--method", choices=("auto", "fd", "lp"),
                   help="finite-difference or dyadic form; auto uses dyadic for s >= 1 (default auto)")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("verify", help="run a verification suite")
    _add_config(p)
    p.add_argument("suite", choices=list(SUITES))
    p.add_argument("--L", type=float, help="domain length, where the suite takes one")
    p.add_argument("--N", type=int, help="grid points")
    p.add_argument("--dt", type=float, help="time step, where the suite takes one")
    p.add_argument("--dealias", choices=("on", "off"), help="energy suite only")
    p.add_argument("--divisions", type=int, help="q-decomp only: dv = range / divisions")
    p.add_argument("--csv", help="also write the checks as CSV")

    p = sub.add_parser("sweep", help="L-sweep of KS runs")
    _add_config(p)
    p.add_argument("--L", help="comma-separated system sizes (default 50,100,200,400)")
    p.add_argument("--seeds", help="comma-separated run labels, or a count (default 4)")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-burn", type=float)
    p.add_argument("--t-avg", type=float)
    p.add_argument("--dt-rec", type=float)
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${harness.WORKERS_ENV} or all CPUs)")
    p.add_argument("--out", help="CSV path (required)")

    p = sub.add_parser("spectrum", help="power spectrum plot data")
    _add_config(p)
    p.add_argument("snapshot")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("structure", help="||D^h u||^3 / h plot data")
    _add_config(p)
    p.add_argument("snapshot")
    p.add_argument("--points", type=int, help="number of offsets, log-spaced on [dx, L/2] (default 64)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    return ap


def _merge(args: argparse.Namespace) -> dict:
    """Config-file values overridden by explicitly given options."""
    opts = {}
    if getattr(args, "config", None):
        opts.update(harness.load_config(args.config))
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command"):
            opts[k] = v
    return opts


def _get(opts: dict, key: str, kind, default=None):
    v = opts.get(key)
    if v is None:
        return default
    return kind(v)


def _flag(value) -> bool:
    text = str(value).strip().lower()
    if text in ("on", "true", "yes", "1"):
        return True
    if text in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {value!r}")


def _write_rows(path, header, rows, timestamp=True):
    if path:
        harness.write_table(path, header, rows, timestamp=timestamp)
    else:
        sys.stdout.write(",".join(header) + "\n")
        for r in rows:
            sys.stdout.write(",".join(harness.format_value(v) for v in r) + "\n")


def cmd_simulate(opts: dict) -> int:
    out = opts.get("out")
    if not out:
        raise ValueError("simulate needs --out")
    L = _get(opts, "L", float, 100.0)
    N = _get(opts, "N", int, harness.resolution_for(L))
    dt = _get(opts, "dt", float, 0.1)
    explicit_dt = "dt" in opts
    t_burn = _get(opts, "t_burn", float, 200.0)
    t_avg = _get(opts, "t_avg", float, 1000.0)
    dt_rec = _get(opts, "dt_rec", float, 1.0)
    seed = _get(opts, "seed", int, 0)
    scheme = opts.get("scheme", "ETDRK4")
    dealias = _flag(opts.get("dealias", "on"))
    every = int(round(dt_rec / dt))
    if every < 1 or abs(every * dt - dt_rec) > 1e-9 * dt_rec:
        raise ValueError("dt-rec must be a positive multiple of dt")
    grid = GridSpec(L, N)
    if scheme == "ETDRK4" and not explicit_dt:
        dt, every = harness.stable_dt(grid, dt, dt_rec)
    u = random_initial_condition(grid, seed)
    t0 = 0.0
    if t_burn > 0:
        burn = integrate(EquationSpec(), u, StepperConfig(scheme, dt, dealias, int(round(t_burn / dt))), t_burn)
        u = burn.trajectory.frame(burn.trajectory.n_frames - 1)
        t0 = t_burn
    run = integrate(EquationSpec(), u, StepperConfig(scheme, dt, dealias, every), t_avg, t0=t0)
    harness.save_trajectory(run.trajectory, out)
    print(f"wrote {run.trajectory.n_frames} frames (L={L:g}, N={N}) to {out}")
    return 0


def cmd_norms(opts: dict) -> int:
    traj = harness.load_trajectory(opts["snapshot"])
    choice = opts.get("method", "auto")
    scale = traj.grid.L * traj.duration
    rows = []
    for name, bp in NORMS.items():
        method = choice if choice != "auto" else ("lp" if bp.s >= 1 else "fd")
        est = besov_norm_fd(traj, bp) if method == "fd" else besov_norm_lp(traj, bp)
        rescaled = est.value * scale ** (-1.0 / bp.p)
        rows.append([name, bp.s, bp.p, bp.r, float(est.value), float(rescaled),
                     float(est.tail_fraction), "yes" if est.flagged else "no", method])
    header = ["norm", "s", "p", "r", "value", "rescaled", "tail_fraction", "flagged", "method"]
    _write_rows(opts.get("out"), header, rows)
    return 0


def cmd_verify(opts: dict) -> int:
    name = opts["suite"]
    fn = SUITES[name]
    accepted = fn.__code__.co_varnames[: fn.__code__.co_argcount]
    kwargs = {}
    for key, kind in (("L", float), ("N", int), ("dt", float), ("divisions", int)):
        if key in opts:
            if key not in accepted:
                raise ValueError(f"suite {name} takes no --{key} option")
            kwargs[key] = kind(opts[key])
    if "dealias" in opts:
        if "dealias" not in accepted:
            raise ValueError(f"suite {name} takes no --dealias option")
        kwargs["dealias"] = _flag(opts["dealias"])
    res = run_suite(name, **kwargs)
    print(res.text())
    if opts.get("csv"):
        harness.write_table(opts["csv"], ROW_HEADER, res.rows())
    return 0 if res.passed else 1


def _seeds(text) -> tuple:
    vals = harness.parse_list(str(text), int)
    if len(vals) == 1 and "," not in str(text):
        return tuple(range(vals[0]))
    return vals


def cmd_sweep(opts: dict) -> int:
    out = opts.get("out")
    if not out:
        raise ValueError("sweep needs --out")
    defaults = harness.SweepConfig()
    cfg = harness.SweepConfig(
        L_list=harness.parse_list(str(opts["L"])) if "L" in opts else defaults.L_list,
        seeds=_seeds(opts["seeds"]) if "seeds" in opts else defaults.seeds,
        dt=_get(opts, "dt", float, defaults.dt),
        t_burn=_get(opts, "t_burn", float, defaults.t_burn),
        t_avg=_get(opts, "t_avg", float, defaults.t_avg),
        dt_rec=_get(opts, "dt_rec", float, defaults.dt_rec),
        master_seed=_get(opts, "seed", int, defaults.master_seed),
        out=out,
    )
    records = harness.run_sweep(cfg, _get(opts, "workers", int))
    failed = [r for r in records if not r.ok]
    print(f"wrote {len(records)} rows to {out} ({len(failed)} failed)")
    if len({r.L for r in records if r.ok}) >= 3:
        for col in ("b_third_3_inf", "b_third_3_3"):
            fit = harness.fit_log_exponent(records, col)
            print(f"  {col} ~ ln^kappa(L): kappa = {fit.kappa:.4g} +- {fit.stderr:.2g}")
    return 0 if not failed else 1


def cmd_spectrum(opts: dict) -> int:
    traj = harness.load_trajectory(opts["snapshot"])
    sp = harness.power_spectrum(traj)
    rows = [[float(x), float(p)] for x, p in zip(sp.xi, sp.power)]
    _write_rows(opts.get("out"), ["xi", "power"], rows)
    print(f"plateau [{sp.plateau_band[0]:.4g}, {sp.plateau_band[1]:.4g}] flatness {sp.plateau_flatness:.4g}; "
          f"tail [{sp.tail_band[0]:.4g}, {sp.tail_band[1]:.4g}] rate {sp.tail_rate:.4g} R^2 {sp.tail_r2:.4g}",
          file=sys.stderr)
    return 0


def cmd_structure(opts: dict) -> int:
    traj = harness.load_trajectory(opts["snapshot"])
    g = traj.grid
    n = _get(opts, "points", int, 64)
    hs = np.geomspace(g.dx, g.L / 2.0, n)
    m = structure_function(traj, hs, 3.0) / (g.L * traj.duration)
    rows = [[float(h), float(v / h)] for h, v in zip(hs, m)]
    _write_rows(opts.get("out"), ["h", "increment_cube_over_h"], rows)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "norms": cmd_norms,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "structure": cmd_structure,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        opts = _merge(args)
        return COMMANDS[args.command](opts)
    except (ValueError, KeyError, OSError, ConfigurationError, DivergenceError, DomainError) as exc:
        print(f"ksbesov {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
