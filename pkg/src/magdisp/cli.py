"""Command-line front end.

Subcommands: specfun, resolvent, kernel, sweep, selftest.  Tabular results
go out as CSV, reports as JSON that embeds the resolved configuration.
Exit codes: 0 success, 2 invalid input, 3 numerical budget exhausted,
4 a sweep or self-test assertion failed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .flux import FluxProfile, reduced_flux
from .oscquad import Cutoff, DyadicBump, phi0
from .propagator import KernelConfig, TruncationUncertified, free_kernel, kernel
from .quadrature import BudgetExceeded
from .resolvent import (DegenerateInput, PolarPoint, SIntegralSpec, SingularDenominator,
                        distance, resolvent2, resolvent4)
from .specfun import (DomainError, bessel_j0, bessel_j0_y0_derivs, bessel_k0, bessel_y0,
                      hankel0, omega)
from .verify import (b_l1_growth, b_l1_sweep, decay_sweep, default_sample_set,
                     envelope_sweep, pointwise_free_check, vdc_check)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_ASSERT = 0, 2, 3, 4


class ConfigError(ValueError):
    """The run configuration failed validation."""


class CheckFailed(Exception):
    """A sweep or self-test assertion did not hold."""

    def __init__(self, message, payload):
        super().__init__(message)
        self.payload = payload


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------

DEFAULTS = {
    "kernel": {"tol": 1e-6, "j_min": None, "j_max": None, "a_cap": 1e4,
               "panel_cap": 200_000, "cheb_tol": 1e-11, "cheb_max_degree": 256,
               "strict": False},
    "cutoff": {"inner": 0.5, "outer": 1.0, "dilation": 1.0},
    "s_integral": {"tol": 1e-11, "s_max_cap": 60.0, "initial_panels": 1,
                   "wavelengths": 4.0, "tail_decay": 40.0, "flux_orientation": "x_to_y"},
    "decay": {"t_min": 0.5, "t_max": 50.0, "n_t": 12, "r_max": 20.0, "density": 1,
              "target_slope": -0.5, "slope_tol": 0.1},
    "envelope": {"n_draws": 200, "seed": 20240531, "log10_a": [-2.0, 2.0],
                 "j_range": [-2, 3], "r_range": [0.05, 50.0]},
    "free": {"t_min": 0.1, "t_max": 100.0, "n_t": 20, "r_max": 50.0, "n_r": 25,
             "target_slope": -0.5, "slope_tol": 0.03, "refine": False,
             "refine_tol": 0.05},
    "vdc": {"k": [1, 4], "lam_min": 100.0, "lam_max": 1e5, "n_lam": 13, "slope_tol": 0.03},
    "bl1": {"alphas": [0.1, 0.3, 0.5, 0.7, 0.9], "n_grid": 64, "refine_tol": None},
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _load_json(text_or_path: str) -> dict:
    text = text_or_path.strip()
    try:
        if not text.startswith("{"):
            text = Path(text_or_path).read_text(encoding="utf-8")
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {text_or_path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _apply_set(cfg: dict, assignment: str) -> dict:
    """Apply one ``section.key=value`` override (value parsed as JSON)."""
    if "=" not in assignment or "." not in assignment.split("=", 1)[0]:
        raise ConfigError(f"--set expects section.key=value, got {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    override: dict = {}
    node = override
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return _merge(cfg, override)


def resolve_config(config_arg: str | None, sets) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if config_arg:
        cfg = _merge(cfg, _load_json(config_arg))
    for s in sets or ():
        cfg = _apply_set(cfg, s)
    return cfg


def kernel_config(cfg: dict) -> KernelConfig:
    try:
        spec = SIntegralSpec(**cfg["s_integral"])
        cutoff = Cutoff(**cfg["cutoff"])
        return KernelConfig(spec=spec, cutoff=cutoff, **cfg["kernel"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _emit(text: str, out: str | None, stdout):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def _emit_tables(tables: dict, out: str | None, stdout):
    """Side tables go next to ``out`` as <stem>_<name>.csv; skipped on stdout."""
    if not out:
        return
    base = Path(out)
    for name, (header, rows) in tables.items():
        base.with_name(f"{base.stem}_{name}.csv").write_text(csv_text(header, rows),
                                                             encoding="utf-8")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _branch(text: str) -> int:
    if text in ("+", "plus", "1", "+1"):
        return 1
    if text in ("-", "minus", "-1"):
        return -1
    raise ConfigError(f"branch must be '+' or '-', got {text!r}")


def _point(text: str) -> PolarPoint:
    try:
        return PolarPoint.parse(text)
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}: expected r,theta ({exc})") from None


def _flux(args) -> FluxProfile:
    if not args.flux:
        raise ConfigError("--flux is required for this command")
    try:
        return FluxProfile.from_json(args.flux)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad flux profile: {exc}") from None


def cmd_specfun(args, cfg, stdout):
    x = args.x
    axis = "imaginary" if args.axis in ("imag", "imaginary") else "real"
    if axis == "imaginary" and args.fn not in ("h0p", "h0m"):
        raise ConfigError("--axis imag applies only to h0p and h0m")
    if args.fn == "j0":
        v = complex(bessel_j0(x))
    elif args.fn == "y0":
        v = complex(bessel_y0(x))
    elif args.fn == "k0":
        v = complex(bessel_k0(x))
    elif args.fn in ("h0p", "h0m"):
        v = complex(hankel0(1 if args.fn == "h0p" else -1, axis, x))
    else:
        v = complex(omega(_branch(args.branch), x))
    _emit(csv_text(["x", "re", "im"], [[float(x), v.real, v.imag]]), args.out, stdout)


def cmd_resolvent(args, cfg, stdout):
    p = _flux(args)
    x, y = _point(args.x), _point(args.y)
    spec = kernel_config(cfg).spec
    fn = resolvent2 if args.order == 2 else resolvent4
    v = complex(fn(_branch(args.branch), p, args.lam, x, y, spec))
    _emit(csv_text(["lambda", "re", "im", "abs"], [[float(args.lam), v.real, v.imag, abs(v)]]),
          args.out, stdout)


def cmd_kernel(args, cfg, stdout):
    p = _flux(args)
    x, y = _point(args.x), _point(args.y)
    res = kernel(args.t, x, y, p, kernel_config(cfg), with_terms=args.dump_dyadic)
    v = res.value
    text = csv_text(["t", "re", "im", "abs", "trunc_err"],
                    [[float(args.t), v.real, v.imag, abs(v), res.trunc_err]])
    if args.dump_dyadic:
        rows = [[d.ell, d.branch, d.j, d.value.real, d.value.imag, abs(d.value),
                 d.envelope, d.ratio] for d in res.terms]
        text += "\n" + csv_text(["l", "branch", "j", "re", "im", "abs", "envelope", "ratio"],
                                rows)
    _emit(text, args.out, stdout)


def _finite(*values) -> bool:
    return all(math.isfinite(v) for v in values)


def sweep_decay(p, cfg, threads):
    c = cfg["decay"]
    t_grid = np.geomspace(c["t_min"], c["t_max"], int(c["n_t"]))
    samples = default_sample_set(c["r_max"], int(c["density"]))
    rep = decay_sweep(p, t_grid, samples, kernel_config(cfg), threads)
    ok = (_finite(rep.slope, *rep.sup_abs) and not rep.failures
          and abs(rep.slope - c["target_slope"]) <= c["slope_tol"])
    report = rep.to_dict()
    table = (["t", "sup_abs"], list(zip(rep.t_grid, rep.sup_abs)))
    return ok, report, {"decay": table}


def sweep_envelope(p, cfg, threads):
    c = cfg["envelope"]
    rep = envelope_sweep(p, int(c["n_draws"]), int(c["seed"]), kernel_config(cfg),
                         tuple(c["log10_a"]), tuple(c["j_range"]), tuple(c["r_range"]),
                         threads=threads)
    finite = all(math.isfinite(d["ratio"]) for d in rep.draws)
    ok = finite and all(rep.within_factor_two.values())
    rows = [[d["ell"], d["branch"], d["t"], d["j"], d["j0"], d["x"][0], d["x"][1],
             d["y"][0], d["y"][1], d["a"], d["regime"], d["ratio"]] for d in rep.draws]
    header = ["l", "branch", "t", "j", "j0", "rx", "theta_x", "ry", "theta_y", "a",
              "regime", "ratio"]
    return ok, rep.to_dict(), {"draws": (header, rows)}


def sweep_free(p, cfg, threads):
    c = cfg["free"]
    t_grid = np.geomspace(c["t_min"], c["t_max"], int(c["n_t"]))
    r_grid = np.linspace(0.0, c["r_max"], int(c["n_r"]))
    kc = kernel_config(cfg)
    rep = pointwise_free_check(t_grid, r_grid, kc, threads)
    report = rep.to_dict()
    ok = (_finite(rep.max_ratio, rep.sup_slope)
          and abs(rep.sup_slope - c["target_slope"]) <= c["slope_tol"])
    if c["refine"]:
        fine = pointwise_free_check(np.geomspace(c["t_min"], c["t_max"], 2 * int(c["n_t"]) - 1),
                                    np.linspace(0.0, c["r_max"], 2 * int(c["n_r"]) - 1),
                                    kc, threads)
        change = abs(fine.max_ratio / rep.max_ratio - 1.0)
        report["refined_max_ratio"] = fine.max_ratio
        report["refinement_change"] = change
        ok = ok and change <= c["refine_tol"]
    rows = [[t, r, report["ratios"][i][k]] for i, t in enumerate(t_grid)
            for k, r in enumerate(r_grid)]
    return ok, report, {"ratios": (["t", "r", "ratio"], rows)}


def sweep_vdc(p, cfg, threads):
    c = cfg["vdc"]
    lams = np.geomspace(c["lam_min"], c["lam_max"], int(c["n_lam"]))
    report, rows, ok = {"lambda": lams.tolist(), "slopes": {}, "slope_se": {}}, [], True
    for k in c["k"]:
        slope, mags, fit = vdc_check(int(k), lams, full_output=True)
        report["slopes"][str(k)] = slope
        report["slope_se"][str(k)] = fit.slope_se if fit else float("nan")
        ok = ok and math.isfinite(slope) and abs(slope + 1.0 / int(k)) <= c["slope_tol"]
        rows.extend([int(k), lam, m] for lam, m in zip(lams, mags))
    return ok, report, {"vdc": (["k", "lambda", "abs_integral"], rows)}


def sweep_bl1(p, cfg, threads):
    c = cfg["bl1"]
    spec = kernel_config(cfg).spec
    best, per = b_l1_sweep(c["alphas"], int(c["n_grid"]), spec, full_output=True)
    report = {"max": best, "per_alpha": {repr(k): v for k, v in per.items()},
              "growth_times_distance": b_l1_growth(per)}
    ok = _finite(best, *per.values())
    if c["refine_tol"] is not None:
        # refinement means a tighter s-quadrature on the same angle grid; a
        # doubled grid samples new differences and is reported for reference
        fine = b_l1_sweep(c["alphas"], int(c["n_grid"]), replace(spec, tol=spec.tol / 100))
        report["refined_max"] = fine
        report["doubled_grid_max"] = b_l1_sweep(c["alphas"], 2 * int(c["n_grid"]), spec)
        ok = ok and abs(fine - best) <= c["refine_tol"]
    return ok, report, {"bl1": (["alpha", "max_b_l1"], sorted(per.items()))}


SWEEPS = {"decay": sweep_decay, "envelope": sweep_envelope, "free": sweep_free,
          "vdc": sweep_vdc, "bl1": sweep_bl1}


def cmd_sweep(args, cfg, stdout):
    p = _flux(args) if args.mode in ("decay", "envelope") else None
    ok, report, tables = SWEEPS[args.mode](p, cfg, args.threads)
    doc = {"mode": args.mode, "passed": bool(ok), "flux": p.to_dict() if p else None,
           "config": cfg, "report": report}
    _emit(json_text(doc), args.out, stdout)
    _emit_tables(tables, args.out, stdout)
    if not ok:
        raise CheckFailed(f"sweep '{args.mode}' assertion failed", doc)


def selftest_checks(threads=None):
    """Quick composite checks; returns a dict name -> {passed, detail}."""
    checks = {}
    x = np.geomspace(0.1, 50.0, 200)
    j0, y0, dj0, dy0 = bessel_j0_y0_derivs(x)
    wr = np.max(np.abs((j0 * dy0 - dj0 * y0) * (math.pi * x / 2.0) - 1.0))
    checks["wronskian"] = {"passed": bool(wr <= 1e-10), "max_rel_residual": float(wr)}

    bump = DyadicBump()
    s = np.geomspace(1e-3, 1e3, 400)
    total = sum(phi0(bump, s / 2.0 ** j) for j in range(-12, 14))
    pu = float(np.max(np.abs(total - 1.0)))
    checks["partition_of_unity"] = {"passed": pu <= 1e-14, "max_error": pu}

    lams = np.geomspace(1e2, 1e5, 7)
    slopes = {k: vdc_check(k, lams) for k in (1, 4)}
    checks["van_der_corput"] = {
        "passed": all(abs(slopes[k] + 1.0 / k) <= 0.03 for k in slopes),
        "slopes": {str(k): v for k, v in slopes.items()}}

    p = FluxProfile(1.0)
    cfg = KernelConfig(tol=1e-6)
    pairs = [(0.7, PolarPoint(1.0, 0.2), PolarPoint(1.6, 2.1)),
             (3.0, PolarPoint(0.5, 4.0), PolarPoint(2.0, 1.0))]
    worst = 0.0
    for t, a, b in pairs:
        k = abs(kernel(t, a, b, p, cfg).value)
        f = abs(free_kernel(t, distance(a, b), cfg))
        worst = max(worst, abs(k / f - 1.0))
    checks["gauge_invariance"] = {"passed": worst <= 1e-4, "max_rel_error": worst,
                                  "reduced_flux": reduced_flux(p)}
    return checks


def cmd_selftest(args, cfg, stdout):
    checks = selftest_checks(args.threads)
    ok = all(c["passed"] for c in checks.values())
    doc = {"passed": ok, "checks": checks, "version": __version__}
    _emit(json_text(doc), args.out, stdout)
    if not ok:
        raise CheckFailed("selftest failed", doc)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for sweeps (DK_THREADS overrides)")
    common.add_argument("--config", help="JSON run configuration (inline or path)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value; repeatable")

    parser = _Parser(prog="magdisp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("specfun", parents=[common], help="Bessel/Hankel values")
    sp.add_argument("--fn", required=True, choices=["j0", "y0", "k0", "h0p", "h0m", "omega"])
    sp.add_argument("--x", required=True, type=float)
    sp.add_argument("--axis", default="real", choices=["real", "imag", "imaginary"])
    sp.add_argument("--branch", default="+", help="branch for omega")

    rp = sub.add_parser("resolvent", parents=[common], help="resolvent kernel value")
    rp.add_argument("--order", required=True, type=int, choices=[2, 4])
    rp.add_argument("--branch", required=True)
    rp.add_argument("--lambda", dest="lam", required=True, type=float)
    rp.add_argument("--x", required=True)
    rp.add_argument("--y", required=True)
    rp.add_argument("--flux", required=True)

    kp = sub.add_parser("kernel", parents=[common], help="propagator kernel value")
    kp.add_argument("--t", required=True, type=float)
    kp.add_argument("--x", required=True)
    kp.add_argument("--y", required=True)
    kp.add_argument("--flux", required=True)
    kp.add_argument("--dump-dyadic", action="store_true",
                    help="append one row per dyadic term")

    wp = sub.add_parser("sweep", parents=[common], help="bound-verification sweeps")
    wp.add_argument("--mode", required=True, choices=sorted(SWEEPS))
    wp.add_argument("--flux", help="flux profile JSON (decay and envelope modes)")

    sub.add_parser("selftest", parents=[common], help="quick composite checks")
    return parser


COMMANDS = {"specfun": cmd_specfun, "resolvent": cmd_resolvent, "kernel": cmd_kernel,
            "sweep": cmd_sweep, "selftest": cmd_selftest}


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args.config, args.set)
        kernel_config(cfg)
        COMMANDS[args.command](args, cfg, stdout)
    except CheckFailed as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_ASSERT
    except (BudgetExceeded, TruncationUncertified, SingularDenominator) as exc:
        print(f"error: numerical budget: {exc}", file=stderr)
        return EXIT_BUDGET
    except (ConfigError, DegenerateInput, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
