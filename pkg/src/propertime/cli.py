"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration
error, 3 numeric failure (truncation overflow, phase unwrapping).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from . import constants
from .dynamics import VARIANTS, ClockParams, variant_name
from .errors import ConfigError, ProperTimeError
from .protocols import PREP_KINDS, Prep, QsodsConfig, RamseyConfig, entanglement_witness, run_qsods_protocol, run_ramsey
from .validation import Tolerances, run_all

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROTOCOL_COLUMNS = ("omega_t", "re_rho_eg", "im_rho_eg", "visibility", "phase_unwrapped", "success_prob")
SHIFT_COLUMNS = ("kind", "preset", "eps_c", "eps_m", "r", "beta", "nbar", "fractional_shift", "phase",
                 "visibility", "regime")
SWEEP_VARS = ("eps_c", "r", "beta", "omega_t", "nbar")
SWEEP_MODELS = ("squeezed", "thermal", "ground", "qsods", "ramsey")
DEFAULT_SWEEP_CAP = 100_000
DEFAULT_RATIO = 1e3

CONFIG_KEYS = {
    "params": {"preset", "trap_mhz", "eps_c", "eps_m", "ratio"},
    "prep": {"kind", "k", "nbar", "r", "theta"},
    "grid": {"start", "stop", "num"},
    "run": {"variant", "dim", "window"},
    "qsods": {"beta", "projector", "window", "dim", "variant"},
    "sweep": {"model", "max_points", "prep", "variant", "dim", *SWEEP_VARS},
}


def fmt(x) -> str:
    """17 significant digits: enough to round-trip a double."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x) + 0.0, ".17g")  # no "-0"


def _write_csv(rows, header, out) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    return text


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


# -- config -------------------------------------------------------------------

def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    for section, body in data.items():
        if section not in CONFIG_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        unknown = sorted(set(body) - CONFIG_KEYS[section])
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    return data


def parse_grid(spec) -> np.ndarray:
    """'start:stop:num' (inclusive) or a comma-separated list."""
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
    elif isinstance(spec, (int, float)):
        vals = [float(spec)]
    else:
        text = str(spec).strip()
        try:
            if ":" in text:
                parts = text.split(":")
                if len(parts) != 3:
                    raise ValueError
                start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
                if num < 1:
                    raise ValueError
                return np.linspace(start, stop, num)
            vals = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad grid spec {spec!r}; use start:stop:num or a comma list") from None
    if not vals:
        raise ConfigError("empty grid")
    return np.array(vals)


def _params_from(preset=None, trap_mhz=None, eps_c=None, eps_m=None, ratio=None) -> ClockParams:
    explicit = eps_c is not None or eps_m is not None
    if preset and explicit:
        raise ConfigError("give either a species preset or explicit eps values, not both")
    if preset:
        if ratio is not None:
            raise ConfigError("--ratio only applies to explicit eps values")
        trap = None if trap_mhz is None else trap_mhz * 1e6
        return ClockParams.from_species(preset, trap)
    if trap_mhz is not None:
        raise ConfigError("--trap-mhz needs a species preset")
    if not explicit:
        raise ConfigError("no parameters: give --preset or --eps-c/--eps-m")
    if eps_c is not None and eps_m is not None:
        if ratio is not None:
            raise ConfigError("--ratio is implied by --eps-c and --eps-m together")
        if eps_m <= 0:
            raise ConfigError("eps_m must be positive")
        return ClockParams(eps_c / eps_m, 1.0, eps_c, eps_m)
    r = DEFAULT_RATIO if ratio is None else ratio
    if eps_c is None:
        eps_c = eps_m * r
    return ClockParams.dimensionless(eps_c, r)


def _merged(cfg: dict, section: str, args, names) -> dict:
    out = dict(cfg.get(section, {}))
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    return out


# -- shift ----------------------------------------------------------------------

def cmd_shift(args) -> int:
    p = None
    if args.kind != "qsods" or args.preset:
        p = _params_from(args.preset, args.trap_mhz, args.eps_c, args.eps_m, args.ratio)
    preset = p.label if p is not None else ""
    table = []
    if args.kind in ("sods", "vsods"):
        nbar = 0.0 if args.kind == "vsods" else (args.nbar if args.nbar is not None else 0.0)
        res = cf.sods_thermal_first_order(nbar, p)
        row = (args.kind, preset, p.eps_c, p.eps_m, None, None, nbar, res.fractional_shift, None, None, res.regime)
        table.append(("fractional shift", res.fractional_shift))
        if args.kind == "sods" and p.mass is not None:
            temp = (nbar + 0.5) * constants.HBAR * p.omega / constants.K_B
            table.append(("equivalent temperature (K)", temp))
    elif args.kind == "sqsods":
        r = 0.0 if args.r is None else args.r
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", cf.RegimeWarning)
            res = cf.sqsods(r, p, args.t)
            v_approx = cf.visibility_squeezed(r, p.theta(args.t), "approx") if args.t is not None else None
        row = (args.kind, preset, p.eps_c, p.eps_m, r, None, None, res.fractional_shift, res.phase_offset,
               res.visibility, res.regime)
        table.append(("fractional shift", res.fractional_shift))
        if args.t is not None:
            table += [("theta (rad)", p.theta(args.t)), ("visibility exact", res.visibility),
                      ("visibility approx", v_approx), ("clock phase (rad)", res.phase_offset)]
            if caught:
                table.append(("warning", "small-theta visibility expansion breaks down here"))
    else:
        eps_c = p.eps_c if p is not None else args.eps_c
        if eps_c is None:
            raise ConfigError("qsods needs --eps-c (or a preset)")
        beta = 1.0 if args.beta is None else args.beta
        phase = cf.qsods_constant_phase(beta, eps_c)
        p_lead = cf.qsods_success_probability(beta)
        p_avg = cf.qsods_success_probability(beta, eps_c, "averaged")
        row = (args.kind, preset, eps_c, p.eps_m if p else None, None, beta, None, None, phase, None,
               "time-averaged")
        table += [("constant phase (rad)", phase), ("displacement arg offset (rad)", cf.displacement_arg_offset(beta)),
                  ("success probability (leading)", p_lead), ("success probability (averaged)", p_avg)]
    if not args.quiet:
        width = max(len(k) for k, _ in table)
        for k, v in table:
            print(f"{k:<{width}}  {v if isinstance(v, str) else format(v, '.6g')}")
        print(f"{'regime':<{width}}  {row[-1]}")
    if args.out:
        _write_csv([row], SHIFT_COLUMNS, args.out)
    return 0


# -- protocols ----------------------------------------------------------------

def _emit_protocol(result, args, extra: dict) -> int:
    rows = list(result.rows())
    summary = {**result.summary.to_dict(), **extra}
    if result.protocol == "ramsey" and result.pure_prep:
        loss, purity = entanglement_witness(result)
        summary["witness"] = {"max_visibility_loss": float(loss.max()), "min_clock_purity": float(purity.min())}
    if args.out:
        out = Path(args.out)
        _write_csv(rows, PROTOCOL_COLUMNS, out)
        out.with_suffix(".json").write_text(_json_dump(summary))
        if args.figures:
            from .plotting import protocol_figure

            protocol_figure(result, out.with_suffix(".png"), title=extra.get("label", ""))
    else:
        sys.stdout.write(_write_csv(rows, PROTOCOL_COLUMNS, None))
        if not args.quiet:
            sys.stderr.write(_json_dump(summary))
    return 0


def cmd_ramsey(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    pp = _merged(cfg, "params", args, ("preset", "trap_mhz", "eps_c", "eps_m", "ratio"))
    params = _params_from(**pp)
    prep_cfg = dict(cfg.get("prep", {}))
    if args.prep is not None:
        prep_cfg["kind"] = args.prep
    for name in ("k", "nbar", "r", "theta"):
        if getattr(args, name, None) is not None:
            prep_cfg[name] = getattr(args, name)
    if "kind" not in prep_cfg:
        prep_cfg["kind"] = "squeezed" if prep_cfg.get("r") else "thermal" if prep_cfg.get("nbar") else "vacuum"
    prep = Prep(**prep_cfg)
    grid = _grid_from(cfg, args, default="0:50:201")
    run = _merged(cfg, "run", args, ("variant", "dim", "window"))
    config = RamseyConfig(params, prep, grid, run.get("variant", "exact-decomposition"), run.get("dim"),
                          run.get("window"))
    result = run_ramsey(config)
    extra = {"protocol": "ramsey", "prep": prep.describe(), "variant": config.variant,
             "eps_c": params.eps_c, "eps_m": params.eps_m, "label": params.label or "dimensionless"}
    return _emit_protocol(result, args, extra)


def _grid_from(cfg, args, default):
    if args.grid is not None:
        return parse_grid(args.grid)
    g = cfg.get("grid")
    if g:
        missing = {"start", "stop", "num"} - set(g)
        if missing:
            raise ConfigError(f"[grid] is missing {', '.join(sorted(missing))}")
        return np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))
    return parse_grid(default)


def cmd_qsods_protocol(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    q = _merged(cfg, "qsods", args, ("beta", "projector", "window", "dim", "variant"))
    pp = _merged(cfg, "params", args, ("eps_c", "ratio"))
    if "eps_c" not in pp:
        raise ConfigError("qsods-protocol needs eps_c")
    grid = _grid_from(cfg, args, default=f"0:{16 * math.pi!r}:513")
    config = QsodsConfig(
        beta=float(q.get("beta", 1.0)),
        eps_c=float(pp["eps_c"]),
        omega_t=grid,
        projector=str(q.get("projector", "01")),
        window=int(q.get("window", 1)),
        variant=q.get("variant", "exact-decomposition"),
        dim=int(q.get("dim", 64)),
        ratio=float(pp.get("ratio", DEFAULT_RATIO)),
    )
    result = run_qsods_protocol(config)
    avg = result.summary.averaged_phase
    extra = {
        "protocol": "qsods",
        "beta": config.beta,
        "eps_c": config.eps_c,
        "projector": config.projector,
        "arg_offset": cf.displacement_arg_offset(config.beta),
        "constant_phase_closed_form": cf.qsods_constant_phase(config.beta, config.eps_c),
        "constant_phase_measured": None if avg is None else avg - cf.displacement_arg_offset(config.beta),
        "label": f"beta={config.beta}, eps_c={config.eps_c}",
    }
    return _emit_protocol(result, args, extra)


# -- sweep --------------------------------------------------------------------

def _sweep_point(model: str, point: dict, opts: dict):
    eps_c = point.get("eps_c", 1e-2)
    wt = point.get("omega_t", 1.0)
    if model == "squeezed":
        r, theta = point.get("r", 0.0), eps_c * wt
        z = cf.squeezed_offdiag_exact(r, theta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", cf.RegimeWarning)
            approx = cf.visibility_squeezed(r, theta, "approx")
        return [("visibility", abs(z)), ("visibility_approx", approx), ("phase", -np.angle(z))]
    if model == "thermal":
        nbar, eps = point.get("nbar", 0.0), eps_c * wt / 4
        z = cf.thermal_offdiag_exact(nbar, eps)
        return [("visibility", abs(z)), ("phase", cf.thermal_phase_exact(nbar, eps)),
                ("visibility_high_T", cf.thermal_high_T(nbar, eps).visibility)]
    if model == "ground":
        z = cf.ground_state_offdiag_full(eps_c, wt)
        return [("visibility", abs(z)), ("phase", -np.angle(z))]
    if model == "qsods":
        beta = point.get("beta", 1.0)
        return [("phase", float(cf.qsods_protocol_phase(beta, eps_c, wt))),
                ("constant_phase", cf.qsods_constant_phase(beta, eps_c)),
                ("success_prob", float(cf.qsods_success_probability(beta, eps_c, "pointwise", wt)))]
    # numeric Ramsey at a single time
    kind = opts.get("prep") or ("squeezed" if point.get("r") else "thermal" if point.get("nbar") else "vacuum")
    prep = Prep(kind, nbar=point.get("nbar", 0.0), r=point.get("r", 0.0))
    params = ClockParams.dimensionless(eps_c, DEFAULT_RATIO)
    res = run_ramsey(RamseyConfig(params, prep, (wt,), opts.get("variant", "exact-decomposition"), opts.get("dim")))
    return [("visibility", float(res.visibility[0])), ("phase", float(-np.angle(res.rho_eg[0])))]


def _sweep_task(task):
    model, point, opts = task
    return _sweep_point(model, point, opts)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if set(cfg) - {"sweep"}:
        raise ConfigError("a sweep config holds only a [sweep] table")
    s = dict(cfg.get("sweep", {}))
    model = s.pop("model", None)
    if model not in SWEEP_MODELS:
        raise ConfigError(f"[sweep] model must be one of {SWEEP_MODELS}")
    cap = int(s.pop("max_points", DEFAULT_SWEEP_CAP))
    opts = {k: s.pop(k) for k in ("prep", "variant", "dim") if k in s}
    if "prep" in opts and opts["prep"] not in PREP_KINDS:
        raise ConfigError(f"[sweep] prep must be one of {PREP_KINDS}")
    grids = {k: parse_grid(s[k]) for k in SWEEP_VARS if k in s}
    if not grids:
        raise ConfigError("[sweep] needs at least one grid variable")
    total = math.prod(len(g) for g in grids.values())
    if total > cap:
        raise ConfigError(f"sweep has {total} points, above the cap of {cap}")
    names = list(grids)
    points = [dict(zip(names, (float(v) for v in combo))) for combo in itertools.product(*grids.values())]
    tasks = [(model, pt, opts) for pt in points]
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (4 * args.jobs))))
    else:
        outputs = [_sweep_task(t) for t in tasks]
    rows, records = [], []
    for pt, outs in zip(points, outputs):
        for quantity, value in outs:
            rows.append([model, *[pt[n] for n in names], quantity, value])
            records.append({"inputs": pt, "quantity": quantity, "value": value})
    header = ["model", *names, "quantity", "value"]
    text = _write_csv(rows, header, args.out)
    if args.out is None:
        sys.stdout.write(text)
    elif args.figures:
        from .plotting import sweep_figure

        x = names[-1] if len(names) > 1 else names[0]
        sweep_figure(records, Path(args.out).with_suffix(".png"), x, outputs[0][0][0])
    return 0


# -- validate -----------------------------------------------------------------

def cmd_validate(args) -> int:
    tol = Tolerances.load(args.tolerances) if args.tolerances else Tolerances()
    if args.scale != 1.0:
        tol = tol.scaled(args.scale)
    results = run_all(tol, replay=not args.no_replay)
    for r in results:
        if not args.quiet:
            print(r.line())
    ok = all(r.passed for r in results)
    if args.out:
        report = {"passed": ok, "tolerances": tol.to_dict(),
                  "checks": [{"name": r.name, "passed": r.passed, "details": r.details} for r in results]}
        Path(args.out).write_text(_json_dump(report))
    if not args.quiet:
        print("all checks passed" if ok else "validation FAILED")
    return 0 if ok else 1


# -- parser -------------------------------------------------------------------

def _add_param_flags(p, preset=True):
    if preset:
        p.add_argument("--preset", choices=("al+", "b+"), type=str.lower, help="ion species preset")
        p.add_argument("--trap-mhz", type=float, help="trap frequency for a preset (MHz)")
    p.add_argument("--eps-c", type=float, help="clock energy over rest energy")
    p.add_argument("--eps-m", type=float, help="trap quantum over rest energy")
    p.add_argument("--ratio", type=float, help="omega_c/omega for explicit eps values (default 1000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="propertime",
                                     description="Proper-time shifts and coherence of trapped-ion clocks.")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress the printed table")
    sub = parser.add_subparsers(dest="command", required=True)

    sh = sub.add_parser("shift", help="closed-form frequency shifts")
    sh.add_argument("kind", choices=("sods", "vsods", "sqsods", "qsods"))
    _add_param_flags(sh)
    sh.add_argument("--r", type=float, help="squeezing magnitude")
    sh.add_argument("--beta", type=float, help="displacement strength")
    sh.add_argument("--nbar", type=float, help="mean thermal occupation")
    sh.add_argument("--t", type=float, help="interrogation time (s for presets, 1/omega otherwise)")
    sh.add_argument("--out", help="CSV output path")
    sh.set_defaults(func=cmd_shift)

    ra = sub.add_parser("ramsey", help="simulate a Ramsey sequence")
    ra.add_argument("--config", help="TOML config file")
    _add_param_flags(ra)
    ra.add_argument("--prep", choices=PREP_KINDS, help="initial motional state")
    ra.add_argument("--k", type=int, help="Fock level for --prep fock")
    ra.add_argument("--r", type=float, help="squeezing magnitude")
    ra.add_argument("--theta", type=float, help="squeezing angle")
    ra.add_argument("--nbar", type=float, help="mean thermal occupation")
    ra.add_argument("--variant", type=variant_name, choices=VARIANTS, help="propagator")
    ra.add_argument("--dim", type=int, help="Fock truncation (adaptive if omitted)")
    ra.add_argument("--window", type=int, help="trap periods for the averaged phase")
    ra.add_argument("--grid", help="omega*t grid, start:stop:num")
    ra.add_argument("--out", help="CSV output path (JSON summary written alongside)")
    ra.add_argument("--figures", action="store_true", help="also render a PNG next to the CSV")
    ra.set_defaults(func=cmd_ramsey)

    qp = sub.add_parser("qsods-protocol", help="simulate displacement and motional projection")
    qp.add_argument("--config", help="TOML config file")
    qp.add_argument("--eps-c", type=float, help="clock energy over rest energy (inflated)")
    qp.add_argument("--ratio", type=float, help="omega_c/omega (default 1000)")
    qp.add_argument("--beta", type=float, help="displacement strength")
    qp.add_argument("--projector", choices=("01", "02"), help="(|0>+|1>)/sqrt2 or (|0>+|2>)/sqrt2")
    qp.add_argument("--window", type=int, help="trap periods for the averaged phase")
    qp.add_argument("--dim", type=int, help="Fock truncation (default 64)")
    qp.add_argument("--variant", type=variant_name, choices=("oracle", "exact-decomposition"), help="propagator")
    qp.add_argument("--grid", help="omega*t grid, start:stop:num")
    qp.add_argument("--out", help="CSV output path (JSON summary written alongside)")
    qp.add_argument("--figures", action="store_true", help="also render a PNG next to the CSV")
    qp.set_defaults(func=cmd_qsods_protocol)

    sw = sub.add_parser("sweep", help="cartesian parameter sweep to long-format CSV")
    sw.add_argument("--config", required=True, help="TOML file with a [sweep] table")
    sw.add_argument("--out", help="CSV output path")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    sw.add_argument("--figures", action="store_true", help="also render a PNG next to the CSV")
    sw.set_defaults(func=cmd_sweep)

    va = sub.add_parser("validate", help="run the acceptance checks")
    va.add_argument("--tolerances", help="TOML tolerance spec")
    va.add_argument("--scale", type=float, default=1.0, help="loosen (>1) or tighten (<1) every tolerance")
    va.add_argument("--out", help="JSON report path")
    va.add_argument("--no-replay", action="store_true", help="skip the CLI replay check")
    va.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, quiet: bool = False) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.quiet = args.quiet or quiet
    try:
        return args.func(args)
    except ProperTimeError as exc:
        print(f"propertime: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"propertime: error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
