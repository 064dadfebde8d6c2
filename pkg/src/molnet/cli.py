"""Command-line front end: parameter sweeps written as CSV data files.

Config files are flat ``key = value`` text with units in the key names::

    # reference point, T sweep
    y0_um = 17.5
    x2 = 120
    sweep_var = T
    sweep_values = 0.5:3.0:0.1
    methods = exact,upper

Omitted keys take the defaults of ``SystemParams``.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy

from molnet import __version__, kernels
from molnet.analysis import ErrorReport, error_prob_exact, error_prob_ook, error_prob_upper
from molnet.detector import RegimeError, compute_thresholds, ook_regime_threshold_xi
from molnet.geometry import DistanceDistribution, distance_pdf_general, distance_pdf_tcp, gaussian_offspring
from molnet.interference import interference_stats, lt_total
from molnet.params import SystemParams
from molnet.simulator import MODES, SimResult, TrialConfig, estimate_interference_stats, run_error_trials

log = logging.getLogger("molnet")

METHODS = ("exact", "upper", "ook", "mc")
SWEEP_VARS = ("L", "T", "lambda_p", "x2", "sigma", "D", "mu", "y0_norm")

# config key -> SystemParams field
PARAM_KEYS = {
    "lambda_p_per_um3": "lambda_p",
    "r0_um": "r0",
    "sigma_um": "sigma",
    "D_um2_per_s": "D",
    "mu_per_s": "mu",
    "T_s": "T",
    "L": "L",
    "lambda_0_per_s": "lambda_0",
    "y0_um": "y0_norm",
}
OTHER_KEYS = {"constellation", "x2", "sweep_var", "sweep_values", "methods", "seed", "trials",
              "box_half_width_um", "exclusion_mode", "workers", "chunk_size", "lt_s",
              "parent_um", "y_max_um", "n_points"}
PARAM_COLUMNS = ("lambda_p", "r0", "sigma", "D", "mu", "T", "L", "constellation", "lambda_0", "y0_norm")


@dataclass
class ExperimentConfig:
    params: SystemParams = field(default_factory=SystemParams)
    sweep_var: str = ""
    sweep_values: tuple = ()
    methods: tuple = ("exact", "upper")
    mc: TrialConfig | None = None
    output_path: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sweep_var and self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARS}")
        if not self.methods:
            raise ValueError("at least one method is required")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        if self.mc is None:
            self.mc = TrialConfig(self.params)

    def points(self):
        """``(value, params)`` for each sweep point (a single point without a sweep)."""
        if not self.sweep_var:
            return [("", self.params)]
        return [(v, apply_sweep(self.params, self.sweep_var, v)) for v in self.sweep_values]


def apply_sweep(params: SystemParams, var: str, value) -> SystemParams:
    if var == "x2":
        xs = list(params.constellation)
        xs[1] = float(value)
        return params.with_(constellation=tuple(xs))
    if var == "L":
        return params.with_(L=int(value))
    return params.with_(**{var: float(value)})


# ---------------------------------------------------------------------------
# config parsing

def _number_list(text: str):
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        # round away accumulated binary error so 0.1 steps print cleanly
        return tuple(float(round(start + i * step, 12)) for i in range(n))
    return tuple(float(t) for t in text.split(",") if t.strip())


def read_config_text(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARAM_KEYS and key not in OTHER_KEYS:
            raise ValueError(f"config line {n}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    raw = {**raw, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    kw = {}
    for key, name in PARAM_KEYS.items():
        if key in raw:
            kw[name] = int(raw[key]) if name == "L" else float(raw[key])
    if "constellation" in raw:
        kw["constellation"] = _number_list(str(raw["constellation"]))
    params = SystemParams(**kw)
    if "x2" in raw:
        params = apply_sweep(params, "x2", float(raw["x2"]))

    methods = tuple(m.strip() for m in str(raw.get("methods", "exact,upper")).split(",") if m.strip())
    mc_kw = dict(
        trials=int(raw.get("trials", 50_000)),
        seed=int(raw.get("seed", 20230501)),
        exclusion_mode=str(raw.get("exclusion_mode", "analysis_matched")),
        workers=int(raw.get("workers", 1)),
        chunk_size=int(raw.get("chunk_size", 1000)),
    )
    if "box_half_width_um" in raw:
        mc_kw["box_half_width"] = float(raw["box_half_width_um"])
    if "lt_s" in raw:
        mc_kw["lt_s"] = _number_list(str(raw["lt_s"]))
    sweep_var = str(raw.get("sweep_var", ""))
    values = _number_list(str(raw["sweep_values"])) if "sweep_values" in raw else ()
    if sweep_var == "L":
        values = tuple(int(v) for v in values)
    extra = {k: raw[k] for k in ("parent_um", "y_max_um", "n_points") if k in raw}
    return ExperimentConfig(params, sweep_var, values, methods, TrialConfig(params, **mc_kw),
                            raw.get("out"), extra)


# ---------------------------------------------------------------------------
# emission

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def header(params: SystemParams) -> list:
    th = [f"th_{j + 1}" for j in range(params.M - 1)]
    return ["sweep_var", "value", "method", "p_error", "stderr", "e_intra", "e_inter", *th,
            "status", *PARAM_COLUMNS]


def emit_summary(report: ErrorReport | SimResult, params: SystemParams, stats=None,
                 sweep_var: str = "", value="", status: str = "ok") -> dict:
    """One result row in the common column schema (values as strings)."""
    row = dict.fromkeys(header(params), "")
    row.update(sweep_var=sweep_var, value=_fmt(value), status=status)
    if isinstance(report, SimResult):
        row.update(method="mc", p_error=_fmt(report.error_rate), stderr=_fmt(report.stderr),
                   e_intra=_fmt(report.mean_intra), e_inter=_fmt(report.mean_inter))
        th = report.thresholds
    elif report is not None:
        row.update(method=report.method, p_error=_fmt(report.total))
        th = report.thresholds
        if report.derivative_budget_hit:
            row["status"] = "budget_hit"
    else:
        th = None
    if stats is not None and row["e_intra"] == "":
        row.update(e_intra=_fmt(stats.e_intra), e_inter=_fmt(stats.e_inter))
    if th is not None:
        for j, t in enumerate(th.th):
            row[f"th_{j + 1}"] = str(t)
    for name in PARAM_COLUMNS:
        row[name] = _fmt(getattr(params, name))
    return row


def write_rows(rows, params, stream):
    w = csv.DictWriter(stream, fieldnames=header(params), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def parse_results(text: str) -> list:
    """Read an emitted CSV back; numeric fields become floats (empty -> None)."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for k, v in row.items():
            if k in ("p_error", "stderr", "e_intra", "e_inter"):
                parsed[k] = float(v) if v else None
            else:
                parsed[k] = v
        out.append(parsed)
    return out


def metadata_text(cfg: ExperimentConfig, command: str) -> str:
    mc = cfg.mc
    items = [("command", command)]
    items += [(f"param.{k}", _fmt(v)) for k, v in cfg.params.as_dict().items()]
    items += [
        ("lambda_0_note", "noise rate is an assumption, not a published value"),
        ("sweep_var", cfg.sweep_var),
        ("sweep_values", _fmt(tuple(cfg.sweep_values))),
        ("methods", ",".join(cfg.methods)),
        ("seed", str(mc.seed)),
        ("trials", str(mc.trials)),
        ("box_half_width_um", _fmt(mc.box_half_width)),
        ("exclusion_mode", mc.exclusion_mode),
        ("chunk_size", str(mc.chunk_size)),
        ("molnet_version", __version__),
        ("kernel_backend", kernels.BACKEND),
        ("numpy_version", np.__version__),
        ("scipy_version", scipy.__version__),
        ("python_version", platform.python_version()),
    ]
    return "".join(f"{k} = {v}\n" for k, v in items)


# ---------------------------------------------------------------------------
# experiments

def _point_rows(cfg: ExperimentConfig, value, params: SystemParams, workers: int) -> list:
    rows = []
    try:
        stats = interference_stats(params)
    except Exception as exc:   # record and continue with the sweep
        return [emit_summary(None, params, None, cfg.sweep_var, value, f"error: {exc}")
                | {"method": m} for m in cfg.methods]
    for m in cfg.methods:
        try:
            if m == "exact":
                rep = error_prob_exact(params)
            elif m == "upper":
                rep = error_prob_upper(params)
            elif m == "ook":
                rep = error_prob_ook(params)
            else:
                rep = run_error_trials(replace(cfg.mc, params=params, workers=workers))
            row = emit_summary(rep, params, stats, cfg.sweep_var, value)
            row["method"] = m
            rows.append(row)
        except Exception as exc:
            row = emit_summary(None, params, stats, cfg.sweep_var, value, f"error: {exc}")
            row["method"] = m
            rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, stream=None, command: str = "error-sweep") -> int:
    """Evaluate every method at every sweep point; rows come out in sweep order."""
    pts = cfg.points()
    outer = min(cfg.mc.workers, len(pts))
    inner = 1 if outer > 1 else cfg.mc.workers
    if outer > 1:
        with ThreadPoolExecutor(max_workers=outer) as pool:
            blocks = list(pool.map(lambda p: _point_rows(cfg, p[0], p[1], inner), pts))
    else:
        blocks = [_point_rows(cfg, v, p, inner) for v, p in pts]
    rows = [r for b in blocks for r in b]
    _write_output(cfg, command, lambda s: write_rows(rows, cfg.params, s), stream)
    return 0 if all(r["status"] in ("ok", "budget_hit") for r in rows) else 1


def _write_output(cfg, command, writer, stream):
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            writer(fh)
        with open(cfg.output_path + ".meta", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(metadata_text(cfg, command))
    else:
        writer(stream or sys.stdout)


def _simple_table(cfg, command, columns, rows, stream):
    def writer(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows([[_fmt(v) for v in r] for r in rows])
    _write_output(cfg, command, writer, stream)


def run_interference(cfg: ExperimentConfig, stream=None) -> int:
    s_vals = tuple(cfg.mc.lt_s)
    cols = ["sweep_var", "value", "method", "e_intra", "e_inter", "stderr_intra", "stderr_inter",
            *[f"lt_{s!r}" for s in s_vals], "status"]
    rows = []
    for value, params in cfg.points():
        try:
            st = interference_stats(params)
            lts = [float(x) for x in np.atleast_1d(lt_total(np.array(s_vals), params))]
            rows.append([cfg.sweep_var, value, "analytic", st.e_intra, st.e_inter, None, None, *lts, "ok"])
        except Exception as exc:
            rows.append([cfg.sweep_var, value, "analytic", *[None] * (4 + len(s_vals)), f"error: {exc}"])
        if "mc" in cfg.methods:
            _, _, lt, res = estimate_interference_stats(replace(cfg.mc, params=params))
            rows.append([cfg.sweep_var, value, "mc", res.mean_intra, res.mean_inter,
                         res.stderr_intra, res.stderr_inter, *[lt[s][0] for s in s_vals], "ok"])
    _simple_table(cfg, "interference", cols, rows, stream)
    return 0


def run_thresholds(cfg: ExperimentConfig, stream=None) -> int:
    m = cfg.params.M
    cols = ["sweep_var", "value", *[f"th_{j + 1}" for j in range(m - 1)],
            "p_ll", "mean_interference", "noise_mean", "xi0", "status"]
    rows = []
    for value, params in cfg.points():
        st = interference_stats(params)
        th = compute_thresholds(params, st)
        status, xi0 = "ok", None
        if params.M == 2 and params.constellation[0] == 0:
            try:
                xi0 = ook_regime_threshold_xi(params, st)
            except RegimeError as exc:
                status = f"no_ook_regime: {exc}"
        rows.append([cfg.sweep_var, value, *th.th, th.p_ll, th.mean_interference, th.noise_mean, xi0, status])
    _simple_table(cfg, "thresholds", cols, rows, stream)
    return 0


def run_distance_pdf(cfg: ExperimentConfig, stream=None) -> int:
    prm = cfg.params
    x = float(cfg.extra.get("parent_um", 50.0))
    y_max = float(cfg.extra.get("y_max_um", 5 * prm.sigma))
    n = int(cfg.extra.get("n_points", 101))
    dist = DistanceDistribution(x, prm.sigma, prm.r0)
    dens = gaussian_offspring(prm.sigma)
    rows = []
    for y in np.linspace(0.0, y_max, n):
        y = float(y)
        rows.append([y, float(distance_pdf_tcp(y, x, prm.sigma)),
                     float(distance_pdf_general(y, x, dens)) if y > 0 else 0.0,
                     float(dist.conditional_pdf(y))])
    _simple_table(cfg, "distance-pdf", ["y_um", "pdf_tcp", "pdf_general", "pdf_beyond_r0"], rows, stream)
    return 0


def run_mc_validate(cfg: ExperimentConfig, stream=None) -> int:
    """Analytic quantities against simulator estimates, |z| < 3 to pass."""
    rows = []
    ok = True
    for value, params in cfg.points():
        st = interference_stats(params)
        res = run_error_trials(replace(cfg.mc, params=params))
        lts = np.atleast_1d(lt_total(np.array(cfg.mc.lt_s), params))
        checks = [("e_intra", st.e_intra, res.mean_intra, res.stderr_intra),
                  ("e_inter", st.e_inter, res.mean_inter, res.stderr_inter)]
        checks += [(f"lt_{s!r}", float(a), *res.lt_estimates[s]) for s, a in zip(cfg.mc.lt_s, lts)]
        checks.append(("p_error", error_prob_exact(params).total, res.error_rate, res.stderr))
        for name, a, m, se in checks:
            z = (m - a) / se if se > 0 else (0.0 if m == a else math.inf)
            passed = abs(z) < 3
            ok &= passed
            rows.append([cfg.sweep_var, value, name, a, m, se, z, "pass" if passed else "FAIL"])
    _simple_table(cfg, "mc-validate", ["sweep_var", "value", "quantity", "analytic", "mc", "stderr", "z", "result"],
                  rows, stream)
    return 0 if ok else 1


COMMANDS = {
    "error-sweep": run_experiment,
    "interference": run_interference,
    "thresholds": run_thresholds,
    "distance-pdf": run_distance_pdf,
    "mc-validate": run_mc_validate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="molnet", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value parameter file")
        p.add_argument("--out", help="output CSV (metadata goes to <out>.meta)")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
        p.add_argument("--workers", type=int)
        p.add_argument("--exclusion-mode", choices=MODES)
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = read_config_text(fh.read())
    try:
        cfg = build_config(raw, {"seed": args.seed, "trials": args.trials, "methods": args.methods,
                                 "workers": args.workers, "exclusion_mode": args.exclusion_mode,
                                 "out": args.out})
    except (ValueError, TypeError) as exc:
        print(f"molnet: invalid configuration: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
