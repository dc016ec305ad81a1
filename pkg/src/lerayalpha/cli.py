"""Command-line front end.

    lerayalpha simulate --config run.cfg [--out DIR] [--seed S] [--threads N]
    lerayalpha bounds   --config run.cfg
    lerayalpha analyze  --config run.cfg
    lerayalpha sweep    --config run.cfg
    lerayalpha verify

Exit codes: 0 success, 2 configuration error, 3 numerical abort (NaN or
CFL), 4 verification failure.  Errors are reported on stderr as a single
``error code=<n> kind=<kind> message=<text>`` line.
"""
import argparse
import dataclasses
import os
import sys

import numpy as np
import scipy.fft

from . import __version__, bounds, kernels, singular
from .config import ConfigError, config_items, parse_config
from .fields import random_band, taylor_green
from .io import header_lines, read_snapshot, read_trace, write_snapshot, write_trace
from .solver import FluidParams, NumericalAbort, SolverConfig, l2_time_integral, simulate
from .spectral import FilterSpec, SpectralField, make_lattice

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_VERIFY = 0, 2, 3, 4


class VerificationFailed(RuntimeError):
    pass


def _error(code, kind, message):
    message = " ".join(str(message).split())
    print(f"error code={code} kind={kind} message={message}", file=sys.stderr)
    return code


def seeds(seed):
    """Independent generators for the initial condition and the forcing."""
    ic, forcing = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(ic), np.random.default_rng(forcing)


def metadata(cfg):
    meta = {"code_version": __version__, "kernel_backend": kernels.BACKEND}
    meta.update(config_items(cfg))
    return meta


def _snapshot_input(path, N, what):
    u, _, _ = read_snapshot(path)
    if u.N != N:
        raise ConfigError(f"{what}: snapshot has N={u.N}, config has N={N}")
    return u


def initial_field(cfg, rng):
    N = cfg.N
    if cfg.ic == "taylor-green":
        return taylor_green(N, cfg.ic_amplitude)
    if cfg.ic == "random-band":
        return random_band(N, rng, cfg.ic_kmin, cfg.ic_kmax, cfg.ic_slope, cfg.ic_energy)
    if cfg.ic == "snapshot":
        return _snapshot_input(cfg.ic_file, N, "ic_file")
    return SpectralField.zeros(make_lattice(N))


def forcing_field(cfg, rng):
    N = cfg.N
    if cfg.forcing == "none":
        return None
    if cfg.forcing == "taylor-green":
        return taylor_green(N, cfg.forcing_amplitude)
    if cfg.forcing == "random-band":
        return random_band(N, rng, cfg.ic_kmin, cfg.ic_kmax, cfg.ic_slope, cfg.forcing_amplitude**2)
    return _snapshot_input(cfg.forcing_file, N, "forcing_file")


def setup(cfg):
    """Initial field, fluid parameters and solver configuration for a run."""
    ic_rng, f_rng = seeds(cfg.seed)
    u0 = initial_field(cfg, ic_rng)
    try:
        params = FluidParams(cfg.nu, FilterSpec(cfg.alpha, cfg.theta), forcing_field(cfg, f_rng))
        scfg = SolverConfig(cfg.N, cfg.dt, cfg.T, cfg.integrator, cfg.stride)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return u0, params, scfg


def _write_text(path, meta, body):
    with open(path, "w") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write(body)


def run_simulate(cfg, out):
    """Integrate, write ``trace.csv``, ``final.bin`` and optional snapshots."""
    u0, params, scfg = setup(cfg)
    meta = metadata(cfg)
    os.makedirs(out, exist_ok=True)
    try:
        trace = simulate(u0, params, scfg, snapshot_every=cfg.snapshot_every)
    except NumericalAbort as exc:
        if exc.trace is not None:
            write_trace(os.path.join(out, "trace.csv"), exc.trace, meta)
        raise
    write_trace(os.path.join(out, "trace.csv"), trace, meta)
    write_snapshot(os.path.join(out, "final.bin"), trace.final, cfg.alpha, cfg.theta)
    if trace.snapshots:
        sdir = os.path.join(out, "snapshots")
        os.makedirs(sdir, exist_ok=True)
        rows = ["index,t,file\n"]
        for i, (t, u) in enumerate(trace.snapshots):
            name = f"snap_{i:05d}.bin"
            write_snapshot(os.path.join(sdir, name), u, cfg.alpha, cfg.theta)
            rows.append(f"{i},{t:.17g},{name}\n")
        # the binary layout has no room for provenance, so the index carries it
        _write_text(os.path.join(sdir, "index.csv"), meta, "".join(rows))
    return u0, params, trace


def bound_report_for(cfg, u0=None, params=None):
    if cfg.theta == 0:
        raise ConfigError("theta: the comparison constant needs 0 < θ ≤ 1/4")
    if u0 is None:
        u0, params, _ = setup(cfg)
    return bounds.report_for_run(u0, params, cfg.T, cfg.sobolev_constant, cfg.C_override)


def run_bounds(cfg, out, u0=None, params=None, echo=True):
    rep = bound_report_for(cfg, u0, params)
    meta = metadata(cfg)
    os.makedirs(out, exist_ok=True)
    _write_text(os.path.join(out, "bounds.txt"), meta, rep.to_text() + "\n")
    _write_text(os.path.join(out, "bounds.csv"), meta, rep.csv_header() + "\n" + rep.csv_row() + "\n")
    if echo:
        print(rep.to_text())
    return rep


def _analysis_source(cfg, out, rep):
    """Return ``(family, (t, V) or None)`` for the configured source."""
    src = cfg.analyze_source
    if src.startswith("cantor:"):
        return singular.cantor_family(int(src.split(":", 1)[1]), cfg.T), None
    if cfg.threshold is None:
        raise ConfigError(f"threshold: required when analyze_source = {src}")
    if src == "ode-blowup":
        t, v = singular.ode_blowup_trace(rep.Y0, rep.C, rep.gamma)
    elif src.startswith("trace:"):
        tr, _ = read_trace(src.split(":", 1)[1])
        t, v = tr.t, tr.norm_V
    else:
        u0, params, trace = run_simulate(cfg, out)
        t, v = trace.t, trace.norm_V
    return singular.good_components(t, cfg.threshold, values=v), (t, v)


def run_analyze(cfg, out, rep=None, echo=True):
    """Pre-measure table, dimension estimate and blow-up margins."""
    os.makedirs(out, exist_ok=True)
    if rep is None:
        rep = bound_report_for(cfg)
    fam, tv = _analysis_source(cfg, out, rep)
    meta = metadata(cfg)
    span = fam.T - fam.start
    eps = singular.eps_schedule(cfg.eps0 or span, cfg.eps_factor, cfg.eps_levels)
    agrid = singular.default_a_grid(cfg.a_grid)
    rows = ["a,epsilon,premeasure\n"]
    for a in agrid:
        for e in eps:
            rows.append(f"{a:.17g},{e:.17g},{singular.premeasure(fam, a, e).value:.17g}\n")
    _write_text(os.path.join(out, "analysis.csv"), meta, "".join(rows))

    est = singular.hausdorff_dimension_estimate(fam, agrid, eps)
    delta = (1.0 - 4.0 * cfg.theta) / 2.0
    summary = {
        "components": len(fam),
        "singular_measure": repr(span - fam.measure),
        "dimension_estimate": repr(est.dimension),
        "dimension_status": est.status,
        "critical_exponent_bound": repr(delta),
        "dimension_within_bound": str(bool(est.dimension <= delta + 1.0 / cfg.a_grid)).lower(),
    }
    if tv is not None:
        t, v = tv
        blow = singular.blowup_lb_check(t, fam, rep.C, rep.gamma, values=v)
        summary.update({
            "blowup_components_checked": blow.n_components,
            "blowup_worst_margin": repr(blow.worst_margin),
            "blowup_pointwise_passed": str(blow.passed).lower(),
            "blowup_integrated_lhs": repr(blow.integrated_lhs),
            "blowup_integrated_rhs": repr(blow.integrated_rhs),
            "blowup_integrated_passed": str(blow.integrated_passed).lower(),
        })
    body = "".join(f"{k} = {v}\n" for k, v in summary.items())
    _write_text(os.path.join(out, "analysis_summary.txt"), meta, body)
    if echo:
        print(body, end="")
    return summary


def _theta_tag(theta):
    return f"theta_{theta:.6g}"


def run_sweep(cfg, out):
    """simulate + bounds + analyze for each theta, and a joint summary."""
    cols = ["theta", "status", "gamma", "C", "t_star", "blowup_time", "K1", "K2",
            "int_V2", "sup_H2", "dimension_estimate", "global_regime", "gronwall_holds"]
    rows = [",".join(cols) + "\n"]
    worst = EXIT_OK
    for theta in cfg.sweep_thetas:
        sub = dataclasses.replace(cfg, theta=theta)
        sdir = os.path.join(out, _theta_tag(theta))
        rec = dict.fromkeys(cols, "")
        rec["theta"] = repr(theta)
        try:
            u0, params, trace = run_simulate(sub, sdir)
            rep = run_bounds(sub, sdir, u0, params, echo=False)
            if sub.analyze_source == "simulate":
                sub = dataclasses.replace(sub, analyze_source="trace:" + os.path.join(sdir, "trace.csv"))
            summ = run_analyze(sub, sdir, rep, echo=False) if sub.threshold is not None or \
                sub.analyze_source.startswith("cantor:") else {}
        except NumericalAbort as exc:
            rec["status"] = "abort"
            _error(EXIT_ABORT, "numerical-abort", f"theta={theta}: {exc}")
            worst = EXIT_ABORT
            rows.append(",".join(rec[c] for c in cols) + "\n")
            continue
        y = 1.0 + trace.norm_V**2
        rec.update(
            status="ok", gamma=repr(rep.gamma), C=repr(rep.C), t_star=repr(rep.t_star),
            blowup_time=repr(rep.blowup_time), K1=repr(rep.K1), K2=repr(rep.K2),
            int_V2=repr(l2_time_integral(trace, "norm_V")),
            sup_H2=repr(float(np.max(trace.norm_H**2))),
            dimension_estimate=summ.get("dimension_estimate", ""),
            global_regime=str(rep.global_regime).lower(),
        )
        if rep.global_regime:
            qc = bounds.quarter_case(theta, rep.Y0, rep.C, trace.t, y)
            rec["gronwall_holds"] = str(qc.holds).lower()
        rows.append(",".join(rec[c] for c in cols) + "\n")
    _write_text(os.path.join(out, "sweep_summary.csv"), metadata(cfg), "".join(rows))
    print("".join(rows), end="")
    return worst


def run_verify(out=None):
    from .verify import run_checks

    results = run_checks()
    n_fail = sum(not r.passed for r in results)
    print(f"{'PASS' if n_fail == 0 else 'FAIL'} all: {len(results) - n_fail}/{len(results)} checks passed")
    if out:
        os.makedirs(out, exist_ok=True)
        meta = {"code_version": __version__, "kernel_backend": kernels.BACKEND}
        _write_text(os.path.join(out, "verify.txt"), meta, "".join(r.line() + "\n" for r in results))
    if n_fail:
        failed = ",".join(r.key for r in results if not r.passed)
        raise VerificationFailed(f"{n_fail} check(s) failed: {failed}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration")
    common.add_argument("--out", help="output directory (overrides the config's out)")
    common.add_argument("--seed", type=int, help="64-bit seed (overrides the config's seed)")
    common.add_argument("--threads", type=int, help="FFT worker threads")
    p = argparse.ArgumentParser(prog="lerayalpha", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate and write the norm trace",
        "bounds": "evaluate the a priori constants",
        "analyze": "estimate singular-set pre-measures and dimension",
        "verify": "run the self-check suite",
        "sweep": "simulate, bound and analyze over a list of theta values",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return p


def _load(args):
    if args.config is None:
        raise ConfigError(f"{args.command} needs --config <path>")
    if not os.path.exists(args.config):
        raise ConfigError(f"config file not found: {args.config}")
    cfg = parse_config(args.config)
    over = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        over["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        over["threads"] = args.threads
    if args.out is not None:
        over["out"] = args.out
    return dataclasses.replace(cfg, **over)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            with scipy.fft.set_workers(args.threads or 1):
                run_verify(args.out)
            return EXIT_OK
        cfg = _load(args)
        with scipy.fft.set_workers(cfg.threads):
            if args.command == "simulate":
                run_simulate(cfg, cfg.out)
                return EXIT_OK
            if args.command == "bounds":
                run_bounds(cfg, cfg.out)
                return EXIT_OK
            if args.command == "analyze":
                run_analyze(cfg, cfg.out)
                return EXIT_OK
            return run_sweep(cfg, cfg.out)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, "config-error", exc)
    except NumericalAbort as exc:
        return _error(EXIT_ABORT, "numerical-abort", exc)
    except VerificationFailed as exc:
        return _error(EXIT_VERIFY, "verification-failure", exc)
    except (OSError, ValueError) as exc:
        return _error(EXIT_CONFIG, "input-error", exc)


if __name__ == "__main__":
    sys.exit(main())
