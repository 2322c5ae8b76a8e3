"""Command-line front end: configuration, dispatch, and deterministic
JSON/CSV report emission.

Commands: flow-orbit, fixed-points, invariance, period, spectrum, shoot,
fk-params, weyl, generator-check, refine, certify-nonequivalence, all.
Configuration comes from flags, optionally seeded from a flat key=value
file (# comments); flags override the file. Reports are byte-stable for a
fixed configuration: numbers are printed with 17 significant digits and
wall-clock timings go to stderr, never into the payload.

Exit codes: 0 when every check in the run passed, 2 on configuration
errors, 3 on numerical failures (or unwritable output).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import acceptance, flow, models, spectra, weylcheck
from .affine import Scaling, Translation, subgroup_eval
from .errors import ExtflowError, IncompatibleModelGroup, ParseError
from .flow import Verdict

COMMANDS = (
    "flow-orbit", "fixed-points", "invariance", "period", "spectrum",
    "shoot", "fk-params", "weyl", "generator-check", "refine",
    "certify-nonequivalence", "all",
)

_MODEL_GROUPS = {
    "interval": {"translation"},
    "inverse-square": {"scaling"},
    "halfline": {"translation", "scaling"},
}


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    length: float = 1.0
    gamma: float = 0.0
    group: str | None = None
    t_values: list = field(default_factory=lambda: [1.0])
    n_values: list = field(default_factory=lambda: [256])
    tol: float | None = None
    jobs: int = 1
    out: str | None = None
    fmt: str = "json"
    seed: int = 0
    theta: float | None = None
    rho: complex | None = None
    window: tuple = (-20.0, 20.0)
    count: int = 3
    on_grid: bool = False
    length2: float | None = None
    v0: complex = 0.3 + 0j
    t_max: float | None = None

    def echo(self) -> dict:
        return {
            "command": self.command,
            "model": self.model,
            "l": self.length,
            "gamma": self.gamma,
            "group": self.group,
            "t": list(self.t_values),
            "n": list(self.n_values),
            "tol": self.tol,
            "jobs": self.jobs,
            "format": self.fmt,
            "seed": self.seed,
            "theta": self.theta,
            "rho": self.rho,
            "window": list(self.window),
            "count": self.count,
            "on_grid": self.on_grid,
            "l2": self.length2,
            "v0": self.v0,
            "t_max": self.t_max,
        }


@dataclass
class RunReport:
    command: str
    config: dict
    results: dict
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def payload(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "checks": self.checks,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_float_list(text) -> list:
    return [float(part) for part in str(text).split(",") if part != ""]


def _parse_int_list(text) -> list:
    return [int(part) for part in str(text).split(",") if part != ""]


def _parse_complex(text) -> complex:
    return complex(str(text).replace(" ", ""))


def read_config_file(path: str) -> dict:
    """Flat key = value lines; # starts a comment."""
    values = {}
    try:
        with open(path) as handle:
            for lineno, raw in enumerate(handle, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParseError(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    return values


_FILE_KEYS = {
    "model": str, "l": float, "gamma": float, "group": str,
    "t": _parse_float_list, "n": _parse_int_list, "tol": float, "jobs": int,
    "out": str, "format": str, "seed": int, "theta": float,
    "rho": _parse_complex, "window": _parse_float_list, "count": int,
    "on_grid": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "l2": float, "v0": _parse_complex, "t_max": float,
}


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file (if any) with flags; flags win. Validates model
    and group compatibility before dispatch."""
    file_values = {}
    if args.config:
        raw = read_config_file(args.config)
        for key, value in raw.items():
            if key not in _FILE_KEYS:
                raise ParseError(f"unknown config key {key!r}")
            try:
                file_values[key] = _FILE_KEYS[key](value)
            except (ValueError, TypeError) as exc:
                raise ParseError(f"bad value for {key!r}: {value!r}") from exc

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return file_values[key]
        return default

    cfg = RunConfig(
        command=args.command,
        model=pick(args.model, "model", None),
        length=pick(args.l, "l", 1.0),
        gamma=pick(args.gamma, "gamma", 0.0),
        group=pick(args.group, "group", None),
        t_values=pick(args.t, "t", [1.0]),
        n_values=pick(args.n, "n", [256]),
        tol=pick(args.tol, "tol", None),
        jobs=pick(args.jobs, "jobs", 1),
        out=pick(args.out, "out", None),
        fmt=pick(args.format, "format", "json"),
        seed=pick(args.seed, "seed", 0),
        theta=pick(args.theta, "theta", None),
        rho=pick(args.rho, "rho", None),
        window=tuple(pick(args.window, "window", [-20.0, 20.0])),
        count=pick(args.count, "count", 3),
        on_grid=pick(args.on_grid or None, "on_grid", False),
        length2=pick(args.l2, "l2", None),
        v0=pick(args.v0, "v0", 0.3 + 0j),
        t_max=pick(args.t_max, "t_max", None),
    )
    _validate(cfg)
    return cfg


_NEEDS_MODEL = {"flow-orbit", "fixed-points", "invariance", "period",
                "generator-check"}


def _validate(cfg: RunConfig):
    if cfg.command in _NEEDS_MODEL:
        if cfg.model is None:
            raise ParseError(f"{cfg.command}: missing required field 'model'")
        if cfg.model not in _MODEL_GROUPS:
            raise ParseError(f"unknown model {cfg.model!r}")
        group = cfg.group or _default_group(cfg.model)
        if group not in ("translation", "scaling"):
            raise ParseError(f"unknown group {group!r}")
        if group not in _MODEL_GROUPS[cfg.model]:
            raise IncompatibleModelGroup(
                f"model {cfg.model!r} is not invariant under {group!r}")
        cfg.group = group
    if cfg.length <= 0:
        raise ParseError("l must be positive")
    if cfg.tol is not None and cfg.tol <= 0:
        raise ParseError("tol must be positive")
    if len(cfg.window) != 2 or not cfg.window[0] < cfg.window[1]:
        raise ParseError("window must be lo,hi with lo < hi")
    if cfg.fmt not in ("json", "csv"):
        raise ParseError(f"unknown format {cfg.fmt!r}")
    if cfg.jobs < 1:
        raise ParseError("jobs must be >= 1")


def _default_group(model: str) -> str:
    return "translation" if model in ("interval", "halfline") else "scaling"


def _build_model(cfg: RunConfig):
    return models.by_name(cfg.model, length=cfg.length, gamma=cfg.gamma)


def _subgroup(cfg: RunConfig):
    return Translation(1.0) if cfg.group == "translation" else Scaling(math.e, 0.0)


def _flow_tol(cfg: RunConfig) -> float:
    if cfg.tol is not None:
        return cfg.tol
    return 1e-6 if cfg.model == "inverse-square" else 1e-8


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def dispatch(cfg: RunConfig) -> RunReport:
    handler = _HANDLERS[cfg.command]
    results, checks = handler(cfg)
    return RunReport(cfg.command, cfg.echo(), results, checks)


def _cmd_flow_orbit(cfg):
    model = _build_model(cfg)
    group = _subgroup(cfg)
    rows = []
    worst = 0.0
    values = flow.orbit(model, group, cfg.v0, cfg.t_values)
    for t, v in zip(cfg.t_values, values):
        rows.append({"t": t, "re": v.real, "im": v.imag, "modulus": abs(v)})
        worst = max(worst, abs(v))
    return ({"rows": rows, "worst_modulus": worst},
            {"contraction": worst <= 1.0 + 1e-10})


def _cmd_fixed_points(cfg):
    model = _build_model(cfg)
    group = _subgroup(cfg)
    tol = _flow_tol(cfg)
    sa_tol = 1e-6 if cfg.model == "inverse-square" else 1e-9
    rows = []
    worst = 0.0
    for t in cfg.t_values:
        g = subgroup_eval(group, t)
        fps = flow.fixed_points_flow(model, g, sa_tol=sa_tol)
        if fps is flow.ALL_POINTS:
            rows.append({"t": t, "kind": "all-points", "re": None, "im": None,
                         "residual": 0.0})
            continue
        for v, kind in fps:
            if v is None:
                rows.append({"t": t, "kind": kind, "re": None, "im": None,
                             "residual": 0.0})
                continue
            res = abs(flow.gamma_apply(model, g, v) - v)
            worst = max(worst, res)
            rows.append({"t": t, "kind": kind, "re": v.real, "im": v.imag,
                         "residual": res})
    return ({"rows": rows, "worst_residual": worst},
            {f"fixed-point residual <= {tol:g}": worst <= tol})


def _cmd_invariance(cfg):
    model = _build_model(cfg)
    group = _subgroup(cfg)
    kwargs = {}
    if cfg.model == "inverse-square":
        kwargs = {"fp_tol": 1e-6, "sa_tol": 1e-6, "eps_class": 1e-6}
    if cfg.t_max is not None:
        kwargs["period_t_max"] = cfg.t_max
    rep = flow.invariant_extensions(model, group, **kwargs)
    results = {
        "verdict": rep.group_verdict.value,
        "fixed_points": [
            {"re": None if v is None else v.real,
             "im": None if v is None else v.imag, "kind": kind}
            for v, kind in rep.fixed_points
        ],
        "flow_class": {f"{t:g}": cls.tag.value
                       for t, cls in sorted(rep.flow_class.items())},
        "cyclic_period": rep.cyclic_period,
        "notes": rep.notes,
    }
    return results, {"verdict determined": rep.group_verdict is not Verdict.NONE_FOUND}


def _cmd_period(cfg):
    model = _build_model(cfg)
    group = _subgroup(cfg)
    tol = cfg.tol or (1e-5 if cfg.model == "inverse-square" else 1e-8)
    if cfg.t_max is not None:
        t_max = cfg.t_max
    elif cfg.model == "interval":
        t_max = 1.4 * 2 * math.pi / cfg.length
    else:
        t_max = 8.0
    period = flow.period_detect(model, group, t_max=t_max, tol=tol)
    results = {"period": period, "t_max": t_max, "tol": tol}
    return results, {"period found": period is not None}


def _cmd_spectrum(cfg):
    if cfg.rho is not None:
        eig = spectra.interval_dissipative_lattice(cfg.length, cfg.rho, cfg.window)
        bound = 1e-10 * max(1.0, 1.0 / max(abs(cfg.rho), 1e-10))
    else:
        eig = spectra.interval_sa_spectrum(cfg.length, cfg.theta or 0.0, cfg.window)
        bound = 1e-10
    rows = [{"index": i, "re": v.real, "im": v.imag, "residual": r}
            for i, (v, r) in enumerate(zip(eig.values, eig.residuals))]
    worst = max(eig.residuals, default=0.0)
    return ({"rows": rows, "count": len(eig)},
            {f"eigencondition residuals <= {bound:g}": worst <= bound})


def _cmd_shoot(cfg):
    eig = spectra.shoot_negative_eigenvalues(cfg.gamma, cfg.theta or 0.0, cfg.count)
    rows = [{"index": i, "re": v.real, "im": v.imag, "residual": r}
            for i, (v, r) in enumerate(zip(eig.values, eig.residuals))]
    results = {"rows": rows, "nu": eig.meta["nu"]}
    checks = {"eigenvalues found": len(eig) >= min(2, cfg.count)}
    if len(eig) >= 2:
        rep = spectra.progression_ratio(eig)
        results["progression"] = {
            "ratio": rep.ratio,
            "generator": rep.generator,
            "kappa": rep.kappa,
            "generator_deviation": rep.generator_deviation,
            "kappa_deviation": rep.kappa_deviation,
        }
        checks["consecutive ratio within 5% of exp(2pi/nu)"] = (
            rep.generator_deviation <= 0.05)
    return results, checks


def _cmd_fk_params(cfg):
    fk = spectra.friedrichs_krein_params(cfg.gamma)
    results = {
        "v_friedrichs": fk.v_friedrichs,
        "v_krein": fk.v_krein,
        "exponents": list(fk.exponents),
    }
    checks = {
        "friedrichs parameter unimodular": abs(abs(fk.v_friedrichs) - 1) <= 1e-6,
        "krein parameter unimodular": abs(abs(fk.v_krein) - 1) <= 1e-6,
    }
    return results, checks


def _weyl_cell(length, n, t, on_grid):
    gen, pos = weylcheck.build_interval_grid(length, n)
    s = (n // 3 + (0.0 if on_grid else 0.5)) * gen.h
    v = weylcheck.semigroup(gen, s)
    u = weylcheck.unitary_group(pos, t)
    res = weylcheck.weyl_residual(u, v, t, s, Translation(1.0))
    return {"n": n, "h": gen.h, "t": t, "s": s,
            "variant": "on-grid" if on_grid else "off-grid", "residual": res}


def _cmd_weyl(cfg):
    cells = [(cfg.length, n, t, cfg.on_grid)
             for n in sorted(cfg.n_values) for t in cfg.t_values]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(lambda c: _weyl_cell(*c), cells))
    else:
        rows = [_weyl_cell(*c) for c in cells]
    rows.sort(key=lambda r: (r["n"], r["t"]))
    worst = max((r["residual"] for r in rows), default=0.0)
    checks = {}
    if cfg.on_grid:
        checks["on-grid residual <= 1e-12"] = worst <= 1e-12
    else:
        checks["residuals finite"] = all(np.isfinite(r["residual"]) for r in rows)
    return {"rows": rows, "worst_residual": worst}, checks


def _cmd_generator_check(cfg):
    model = _build_model(cfg)
    rep_kind = cfg.group
    rows = []
    checks = {}
    scaling = rep_kind == "scaling"
    bound = cfg.tol or (1e-6 if scaling else 1e-8)
    for t in cfg.t_values:
        chk = weylcheck.generator_invariance_residual(model, rep_kind, t)
        rows.append({
            "t": t,
            "residual": chk.residual,
            "scale": chk.scale,
            "offset": chk.offset,
            "phase_factor": chk.phase_factor,
        })
        ok = chk.residual <= bound
        if scaling:
            ok = ok and abs(chk.scale - math.exp(-t)) <= 1e-6
            ok = ok and abs(chk.phase_factor - 1.0) <= 1e-6
        checks[f"t={t:g}"] = ok
    return {"rows": rows}, checks


def _cmd_refine(cfg):
    if len(cfg.n_values) < 3:
        raise ParseError("refine: need at least three grid sizes in 'n'")
    res = weylcheck.refinement_study(cfg.length, cfg.n_values, cfg.t_values,
                                     on_grid=cfg.on_grid)
    variant, order = next(iter(res.orders.items()))
    results = {"rows": res.table.sorted_rows(), "orders": res.orders}
    if order == "exact":
        checks = {"residuals at rounding floor": True}
    else:
        checks = {"convergence order >= 0.9": order >= 0.9}
    return results, checks


def _cmd_certify(cfg):
    if cfg.length2 is None:
        raise ParseError("certify-nonequivalence: missing required field 'l2'")
    rep = weylcheck.nonequivalence_certificate(cfg.length, cfg.length2,
                                               n=cfg.n_values[0])
    results = {
        "sstar_1": rep.sstar_1, "sstar_2": rep.sstar_2,
        "h1": rep.h1, "h2": rep.h2, "message": rep.message,
    }
    return results, {"certified": rep.certified}


def _cmd_all(cfg):
    results = acceptance.run_all(echo=lambda line: print(line, file=sys.stderr))
    payload = {
        r.name: {"passed": r.passed, "budget_s": r.budget_s,
                 "checks": r.details["checks"], "notes": r.notes}
        for r in results
    }
    checks = {r.name: r.passed for r in results}
    return {"criteria": payload}, checks


_HANDLERS = {
    "flow-orbit": _cmd_flow_orbit,
    "fixed-points": _cmd_fixed_points,
    "invariance": _cmd_invariance,
    "period": _cmd_period,
    "spectrum": _cmd_spectrum,
    "shoot": _cmd_shoot,
    "fk-params": _cmd_fk_params,
    "weyl": _cmd_weyl,
    "generator-check": _cmd_generator_check,
    "refine": _cmd_refine,
    "certify-nonequivalence": _cmd_certify,
    "all": _cmd_all,
}


# ---------------------------------------------------------------------------
# emission: deterministic JSON / CSV
# ---------------------------------------------------------------------------

def _format_number(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if x != x:
        return '"nan"'
    if x in (math.inf, -math.inf):
        return f'"{x}"'
    if isinstance(x, int):
        return str(x)
    return f"{x:.17g}"


def to_json(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits and sorted keys; complex
    numbers become {"im": ..., "re": ...} objects."""
    pad = " " * indent
    inner = " " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _format_number(float(obj) if isinstance(obj, np.floating) else obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json({"re": float(obj.real), "im": float(obj.imag)}, indent)
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj, key=str)
        parts = [f'{inner}{to_json(str(k))}: {to_json(obj[k], indent + 1)}'
                 for k in keys]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{to_json(item, indent + 1)}" for item in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def to_csv(report: RunReport) -> str:
    """Rows when the command produced a table, otherwise flattened checks."""
    rows = report.results.get("rows")
    lines = []
    if rows:
        keys = list(rows[0].keys())
        lines.append(",".join(keys))
        for row in rows:
            cells = []
            for key in keys:
                val = row[key]
                if isinstance(val, complex):
                    val = val.real if val.imag == 0 else f"{val.real}+{val.imag}j"
                if isinstance(val, float):
                    cells.append(f"{val:.17g}")
                else:
                    cells.append("" if val is None else str(val))
            lines.append(",".join(cells))
    else:
        lines.append("check,passed")
        for name, ok in sorted(report.checks.items()):
            lines.append(f"\"{name}\",{ok}")
    return "\n".join(lines) + "\n"


def emit(report: RunReport, fmt: str, out: str | None) -> str:
    text = to_json(report.payload()) + "\n" if fmt == "json" else to_csv(report)
    if out:
        with open(out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return text


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extflow",
        description="Extension flows, their fixed points, spectra, and "
                    "commutation-relation checks for the bundled operator models.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--model", choices=sorted(_MODEL_GROUPS))
    parser.add_argument("--l", type=float, help="interval length")
    parser.add_argument("--gamma", type=float, help="inverse-square coupling")
    parser.add_argument("--group", choices=["translation", "scaling"])
    parser.add_argument("--t", type=_parse_float_list,
                        help="group parameter(s), comma separated")
    parser.add_argument("--n", type=_parse_int_list,
                        help="grid size(s), comma separated")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--theta", type=float, help="boundary phase angle")
    parser.add_argument("--rho", type=_parse_complex,
                        help="interval boundary multiplier, e.g. 0.36 or 0.3+0.1j")
    parser.add_argument("--window", type=_parse_float_list, help="lo,hi")
    parser.add_argument("--count", type=int, help="eigenvalue count for shoot")
    parser.add_argument("--on-grid", action="store_true", dest="on_grid")
    parser.add_argument("--l2", type=float, help="second interval length")
    parser.add_argument("--v0", type=_parse_complex, help="orbit start parameter")
    parser.add_argument("--t-max", type=float, dest="t_max",
                        help="period scan upper bound")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    start = time.time()
    try:
        cfg = load_config(args)
    except ParseError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        report = dispatch(cfg)
        emit(report, cfg.fmt, cfg.out)
    except ParseError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ExtflowError, OSError) as exc:
        print(f"numerical/runtime failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    print(f"{cfg.command}: {'pass' if report.passed else 'FAIL'} "
          f"({time.time() - start:.2f}s)", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
