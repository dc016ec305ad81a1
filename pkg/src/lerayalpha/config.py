"""Flat ``key = value`` run configuration.

Lines starting with ``#`` and blank lines are ignored; trailing ``# ...``
comments are stripped.  Unknown keys, duplicates, malformed values and range
violations raise :class:`ConfigError` carrying the offending line number.
"""
import math
import os
from dataclasses import dataclass, fields
from typing import Optional, Tuple

from .solver import INTEGRATORS


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        where = f"{path or '<config>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


IC_KINDS = ("taylor-green", "random-band", "snapshot", "zero")
FORCING_KINDS = ("none", "taylor-green", "random-band", "snapshot")


@dataclass
class RunConfig:
    N: int
    nu: float
    alpha: float
    theta: float
    dt: float
    T: float
    ic: str
    integrator: str = "IF-RK4"
    stride: int = 1
    seed: int = 0
    ic_file: Optional[str] = None
    ic_amplitude: float = 1.0
    ic_energy: float = 0.5
    ic_kmin: float = 1.0
    ic_kmax: Optional[float] = None
    ic_slope: float = -5.0 / 3.0
    forcing: str = "none"
    forcing_amplitude: float = 0.0
    forcing_file: Optional[str] = None
    snapshot_every: int = 0
    threshold: Optional[float] = None
    analyze_source: str = "simulate"
    a_grid: int = 64
    eps0: Optional[float] = None
    eps_factor: float = 0.5
    eps_levels: int = 20
    sweep_thetas: Tuple[float, ...] = (0.05, 0.15, 0.25)
    sobolev_constant: float = 1.0
    C_override: Optional[float] = None
    out: str = "out"
    threads: int = 1

    MANDATORY = ("N", "nu", "alpha", "theta", "dt", "T", "ic")


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"not a finite number: {s}")
    return v


def _int(s):
    v = int(s, 0)
    return v


def _opt(conv):
    def f(s):
        return None if s.lower() in ("none", "") else conv(s)

    return f


def _float_list(s):
    return tuple(_float(x) for x in s.replace(",", " ").split())


_CONVERTERS = {
    "N": _int, "nu": _float, "alpha": _float, "theta": _float, "dt": _float, "T": _float,
    "ic": str, "integrator": str, "stride": _int, "seed": _int, "ic_file": _opt(str),
    "ic_amplitude": _float, "ic_energy": _float, "ic_kmin": _float, "ic_kmax": _opt(_float),
    "ic_slope": _float, "forcing": str, "forcing_amplitude": _float,
    "forcing_file": _opt(str), "snapshot_every": _int, "threshold": _opt(_float),
    "analyze_source": str, "a_grid": _int, "eps0": _opt(_float), "eps_factor": _float,
    "eps_levels": _int, "sweep_thetas": _float_list, "sobolev_constant": _float,
    "C_override": _opt(_float), "out": str, "threads": _int,
}


def _check_ranges(cfg, lines, path, base_dir):
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", lines.get(key), path)

    if cfg.N < 4 or cfg.N % 2:
        fail("N", f"must be an even integer >= 4, got {cfg.N}")
    if not cfg.nu > 0:
        fail("nu", "must be > 0")
    if not cfg.alpha > 0:
        fail("alpha", "must be > 0")
    if not 0 <= cfg.theta <= 0.25:
        fail("theta", f"range error: 0 ≤ θ ≤ 1/4 required, got {cfg.theta}")
    if not cfg.dt > 0:
        fail("dt", "must be > 0")
    if not cfg.T > cfg.dt:
        fail("T", "must exceed dt")
    if cfg.integrator not in INTEGRATORS:
        fail("integrator", f"must be one of {', '.join(INTEGRATORS)}")
    if cfg.stride < 1:
        fail("stride", "must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        fail("seed", "must be an unsigned 64-bit integer")
    if cfg.ic not in IC_KINDS:
        fail("ic", f"must be one of {', '.join(IC_KINDS)}")
    if cfg.forcing not in FORCING_KINDS:
        fail("forcing", f"must be one of {', '.join(FORCING_KINDS)}")
    for kind, key in ((cfg.ic, "ic_file"), (cfg.forcing, "forcing_file")):
        if kind == "snapshot":
            p = getattr(cfg, key)
            if p is None:
                fail(key, "required for snapshot input")
            full = p if os.path.isabs(p) else os.path.join(base_dir, p)
            if not os.path.exists(full):
                fail(key, f"file not found: {p}")
            setattr(cfg, key, full)
    if cfg.ic_energy < 0 or cfg.ic_kmin < 0:
        fail("ic_energy", "must be nonnegative")
    if cfg.snapshot_every < 0:
        fail("snapshot_every", "must be >= 0")
    if cfg.threshold is not None and not cfg.threshold > 0:
        fail("threshold", "must be > 0")
    if cfg.a_grid < 2:
        fail("a_grid", "need at least 2 grid points")
    if cfg.eps0 is not None and not cfg.eps0 > 0:
        fail("eps0", "must be > 0")
    if not 0 < cfg.eps_factor < 1:
        fail("eps_factor", "must lie in (0, 1)")
    if cfg.eps_levels < 2:
        fail("eps_levels", "need at least 2 levels")
    if any(not 0 <= th <= 0.25 for th in cfg.sweep_thetas):
        fail("sweep_thetas", "range error: 0 ≤ θ ≤ 1/4 required")
    if not cfg.sobolev_constant > 0:
        fail("sobolev_constant", "must be > 0")
    if cfg.C_override is not None and not cfg.C_override > 0:
        fail("C_override", "must be > 0")
    if cfg.threads < 1:
        fail("threads", "must be >= 1")
    src = cfg.analyze_source
    if not (src in ("simulate", "ode-blowup") or src.startswith("cantor:") or src.startswith("trace:")):
        fail("analyze_source", "must be simulate, ode-blowup, cantor:<n> or trace:<path>")
    if src.startswith("cantor:"):
        try:
            if int(src.split(":", 1)[1]) < 1:
                raise ValueError
        except ValueError:
            fail("analyze_source", "cantor generation must be a positive integer")


def parse_config_text(text, path=None, base_dir="."):
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", lineno, path)
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"malformed value for {key}: {val!r} ({exc})", lineno, path) from None
        lines[key] = lineno
    missing = [k for k in RunConfig.MANDATORY if k not in values]
    if missing:
        raise ConfigError(f"missing mandatory key(s): {', '.join(missing)}", None, path)
    cfg = RunConfig(**values)
    _check_ranges(cfg, lines, path, base_dir)
    return cfg


def parse_config(path):
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, path=path, base_dir=os.path.dirname(os.path.abspath(path)))


def _emit_value(v):
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_items(cfg):
    return [(f.name, _emit_value(getattr(cfg, f.name))) for f in fields(cfg)]


def emit_config(cfg):
    """Serialize every field; :func:`parse_config_text` reads it back unchanged."""
    return "".join(f"{k} = {v}\n" for k, v in config_items(cfg))
