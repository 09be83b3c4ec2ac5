"""Deterministic command-line front end.

Subcommands: obstruction | profile | check-gc | optimize | realize | verify.
Exit codes: 0 success, 1 usage/config error, 2 inadmissible parameters,
3 numerical failure.  Identical (argv, config, seed) produce byte-identical
output files; parameters that feed the exact kernel are parsed as exact
rationals (decimal literals are scaled integers, never binary floats).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import algebra, fields, optimize, profile, realize
from .errors import (
    EXIT_INADMISSIBLE,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    ConfigError,
    FormatError,
    HcmuError,
    InadmissibleParams,
    NumericalFailure,
)
from .textio import write_kv_lines

_CONFIG_KEYS = {
    "k1", "k2", "c", "k0", "k2_init", "grid", "origin", "seed", "tol",
    "max_iter", "step", "x_min", "x_max", "h", "constraint", "threads",
    "out", "h11", "h12", "h22",
}


@dataclass
class Config:
    """Raw parameter bag: CLI flags override config-file entries."""

    values: dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"missing required parameter {key!r}")
        return self.values[key]

    def fraction(self, key: str, default=None) -> Fraction:
        raw = self.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing required parameter {key!r}")
            return Fraction(default)
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(
                f"value for {key!r} is neither decimal nor rational: {raw!r}"
            ) from None

    def real(self, key: str, default=None) -> float:
        return float(self.fraction(key, default))

    def integer(self, key: str, default=None) -> int:
        raw = self.get(key, default)
        if raw is None:
            raise ConfigError(f"missing required parameter {key!r}")
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"value for {key!r} is not an integer: {raw!r}") from None


def parse_config(path) -> Config:
    """Read ``key = value`` lines; '#' comments; unknown or duplicate keys fail."""
    values: dict[str, str] = {}
    try:
        fh = open(path)
    except OSError as e:
        raise ConfigError(f"cannot open config file: {e}") from None
    with fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key = value, got {line!r}", ln)
            key, value = (t.strip() for t in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown key {key!r}", ln)
            if key in values:
                raise ConfigError(f"duplicate key {key!r}", ln)
            if not value:
                raise ConfigError(f"empty value for key {key!r}", ln)
            values[key] = value
    return Config(values)


def _merge(args: argparse.Namespace, flag_names: list[str]) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        cfg = parse_config(args.config)
    for name in flag_names:
        val = getattr(args, name, None)
        if val is not None:
            cfg.values[name] = str(val)
    return cfg


def _params_from(cfg: Config) -> profile.HcmuParams:
    k1 = cfg.real("k1")
    k2 = cfg.real("k2")
    c = cfg.real("c", "0")
    return profile.validate_params(k1, k2, c)


def _grid_from(cfg: Config, params, k0) -> fields.GridDomain:
    raw = cfg.get("grid", "32,32,0.05,0.05")
    try:
        nx_s, ny_s, hx_s, hy_s = raw.split(",")
        nx, ny, hx, hy = int(nx_s), int(ny_s), float(Fraction(hx_s)), float(Fraction(hy_s))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"grid must be nx,ny,hx,hy, got {raw!r}") from None
    origin_raw = cfg.get("origin")
    if origin_raw is None:
        x0 = -0.5 * (nx - 1) * hx
        y0 = 0.0
    else:
        try:
            x0_s, y0_s = origin_raw.split(",")
            x0, y0 = float(Fraction(x0_s)), float(Fraction(y0_s))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"origin must be x0,y0, got {origin_raw!r}") from None
    return fields.GridDomain.create(params, k0, nx, ny, hx, hy, (x0, y0))


def _default_k0(cfg: Config, params) -> float:
    if cfg.get("k0") is not None:
        k0 = cfg.real("k0")
    else:
        k0 = 0.5 * (params.k1 + params.k2)
    if not params.k2 < k0 < params.k1:
        raise InadmissibleParams(
            f"K0 = {k0} violates K2 < K0 < K1", "K2 < K0 < K1"
        )
    return k0


def _out_path(cfg: Config) -> str:
    return cfg.require("out")


# -- subcommands -----------------------------------------------------------------


def _cmd_obstruction(args) -> int:
    cfg = _merge(args, ["k1", "k2", "c", "out"])
    k1 = cfg.fraction("k1")
    k2 = cfg.fraction("k2")
    c = cfg.fraction("c", "0")
    cubic = algebra.CubicData.from_extremes(k1, k2)
    phi = algebra.obstruction_poly(cubic, c)
    cert = algebra.certify_nonvanishing(phi, (cubic.k2, cubic.k1))
    algebra.write_obstruction_file(phi, cert, _out_path(cfg))
    print(f"obstruction: {algebra.poly_to_line(phi)}; {cert}")
    return EXIT_OK


def _cmd_profile(args) -> int:
    cfg = _merge(args, ["k1", "k2", "c", "k0", "x_min", "x_max", "step", "out"])
    params = _params_from(cfg)
    k0 = _default_k0(cfg, params)
    x_min = cfg.real("x_min", "-5")
    x_max = cfg.real("x_max", "5")
    step = cfg.real("step", "0.001")
    prof = profile.solve_curvature_ode(params, k0, (x_min, x_max), step)
    profile.write_profile_csv(prof, _out_path(cfg))
    print(f"profile: {prof.xs.size} samples, K in "
          f"[{prof.Ks[0]:.6g}, {prof.Ks[-1]:.6g}]")
    return EXIT_OK


def _cmd_check_gc(args) -> int:
    cfg = _merge(args, ["k1", "k2", "c", "k0", "h11", "h12", "h22", "out"])
    params = _params_from(cfg)
    k0 = _default_k0(cfg, params)
    comps = {}
    meta = None
    for name in ("h11", "h12", "h22"):
        arr, m = fields.read_field_csv(cfg.require(name))
        comps[name] = arr
        if meta is None:
            meta = m
        elif (m["nx"], m["ny"]) != (meta["nx"], meta["ny"]):
            raise ConfigError("field components disagree on grid shape")
    grid = fields.GridDomain.create(
        params, k0, meta["nx"], meta["ny"], meta["hx"], meta["hy"],
        (meta.get("x0", 0.0), meta.get("y0", 0.0)),
    )
    fld = fields.ShapeField(grid, comps["h11"], comps["h12"], comps["h22"])
    rg = fields.gauss_residual(fld, params.c)
    c1, c2 = fields.codazzi_residual(fld)
    area = grid.cell_area()
    pairs = [
        ("gauss_max", "%.17g" % float(np.max(np.abs(rg)))),
        ("gauss_l2", "%.17g" % float(np.sqrt(area * np.sum(rg * rg)))),
        ("codazzi_max", "%.17g" % float(max(np.max(np.abs(c1)), np.max(np.abs(c2))))),
        ("codazzi_l2", "%.17g" % float(np.sqrt(area * (np.sum(c1 * c1) + np.sum(c2 * c2))))),
    ]
    write_kv_lines(pairs, _out_path(cfg))
    print("check-gc: " + ", ".join(f"{k}={v}" for k, v in pairs))
    return EXIT_OK


def _cmd_optimize(args) -> int:
    cfg = _merge(args, ["k1", "k2", "c", "k0", "grid", "origin", "seed",
                        "tol", "max_iter", "constraint", "out"])
    params = _params_from(cfg)
    k0 = _default_k0(cfg, params)
    grid = _grid_from(cfg, params, k0)
    try:
        constraint = fields.TraceConstraint.parse(cfg.get("constraint", "none"))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    seed = cfg.integer("seed", "0")
    tol = cfg.real("tol", "1e-8")
    max_iter = cfg.integer("max_iter", "60")
    _, report = optimize.optimize_shape_field(grid, params.c, constraint,
                                              seed=seed, tol=tol,
                                              max_iter=max_iter)
    with open(_out_path(cfg), "w") as fh:
        for line in report.to_lines():
            fh.write(line + "\n")
    print(f"optimize: converged={str(report.converged).lower()} "
          f"floor_l2={report.floor_l2:.6g}")
    return EXIT_OK


def _cmd_realize(args) -> int:
    cfg = _merge(args, ["k1", "k2", "c", "k0", "k2_init", "grid", "origin",
                        "step", "x_min", "x_max", "out"])
    params = _params_from(cfg)
    k0 = _default_k0(cfg, params)
    x_min = cfg.real("x_min", "-2")
    x_max = cfg.real("x_max", "2")
    step = cfg.real("step", "0.001")
    prof = profile.solve_curvature_ode(params, k0, (x_min, x_max), step)
    family = realize.solve_codazzi_family(prof, params.c, cfg.real("k2_init", "1"))
    grid = _grid_from(cfg, params, k0)
    mesh = realize.integrate_frame(family, grid)
    realize.export_mesh(mesh, _out_path(cfg))
    print(f"realize: {mesh.vertices.shape[0]} vertices, "
          f"{mesh.faces.shape[0]} faces, ambient dim {mesh.vertices.shape[1]}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _merge(args, ["k1", "k2", "c", "k0", "k2_init", "mesh", "step",
                        "x_min", "x_max", "out"])
    params = _params_from(cfg)
    k0 = _default_k0(cfg, params)
    mesh = realize.parse_mesh(cfg.require("mesh"))
    x_pad = abs(mesh.x0) + mesh.nx * mesh.hx + 0.5
    x_min = cfg.real("x_min", str(-x_pad))
    x_max = cfg.real("x_max", str(x_pad))
    step = cfg.real("step", "0.001")
    prof = profile.solve_curvature_ode(params, k0, (x_min, x_max), step)
    family = realize.solve_codazzi_family(prof, params.c, cfg.real("k2_init", "1"))
    report = realize.verify_immersion(mesh, family)
    with open(_out_path(cfg), "w") as fh:
        for line in report.to_lines():
            fh.write(line + "\n")
    print(f"verify: metric_rel_err={report.metric_rel_err:.3e} "
          f"weingarten_spread={report.weingarten_spread:.3e} "
          f"cmc={str(report.cmc_flag).lower()}")
    return EXIT_OK


_COMMANDS = {
    "obstruction": _cmd_obstruction,
    "profile": _cmd_profile,
    "check-gc": _cmd_check_gc,
    "optimize": _cmd_optimize,
    "realize": _cmd_realize,
    "verify": _cmd_verify,
}


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="hcmu-lab",
        description="Extremal-metric curvature profiles, integrability "
                    "certificates, and hypersurface realization.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, *names):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--threads", type=int,
                       help="cap internal parallelism (currently 1)")
        p.add_argument("--out", help="output file (required, never implicit)")
        for n in names:
            flag = "--" + n.replace("_", "-")
            p.add_argument(flag, dest=n)

    p = sub.add_parser("obstruction", help="emit obstruction cubic + certificate")
    common(p, "k1", "k2", "c")
    p = sub.add_parser("profile", help="emit curvature profile CSV")
    common(p, "k1", "k2", "c", "k0", "x_min", "x_max", "step")
    p = sub.add_parser("check-gc", help="residual report for a shape field")
    common(p, "k1", "k2", "c", "k0", "h11", "h12", "h22")
    p = sub.add_parser("optimize", help="constrained residual minimization")
    common(p, "k1", "k2", "c", "k0", "grid", "origin", "seed", "tol",
           "max_iter", "constraint")
    p = sub.add_parser("realize", help="integrate a frame into a mesh")
    common(p, "k1", "k2", "c", "k0", "k2_init", "grid", "origin", "step",
           "x_min", "x_max")
    p = sub.add_parser("verify", help="re-check a realized mesh")
    common(p, "k1", "k2", "c", "k0", "k2_init", "mesh", "step", "x_min",
           "x_max")
    return top


def run(argv: list[str]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        env = os.environ.get("HCMU_LAB_THREADS")
        if env is not None:
            try:
                args.threads = int(env)
            except ValueError:
                raise ConfigError(
                    f"HCMU_LAB_THREADS is not an integer: {env!r}"
                ) from None
    return _COMMANDS[args.command](args)


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        return run(argv)
    except SystemExit as e:
        # argparse exits 2 on usage problems and 0 on --help
        return EXIT_OK if (e.code in (0, None)) else EXIT_USAGE
    except InadmissibleParams as e:
        print(f"error: inadmissible parameters: {e}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except NumericalFailure as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except HcmuError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
