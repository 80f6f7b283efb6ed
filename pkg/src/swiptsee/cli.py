"""``see`` command-line tool: optimisation and outage sweeps written as CSV.

Commands::

    see optimize|outage|mc|sweep|verify --config PATH [--seed U64] [--trials N]
        [--out PATH] [--workers N]

Exit codes: 0 success, 1 usage or config error, 2 infeasible allocation
problem, 3 numerical failure (including a failed ``verify``).
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import GENERATOR_ID
from .config import ExperimentConfig, load_config
from .errors import ConfigError, NumericalRangeError, QuadratureError
from .model import harvested_energy_eve
from .montecarlo import mc_outage, mc_outage_worst_case
from .optimizer import INFEASIBLE, OPTIMAL, solve_p1
from .outage import (eve_cdf_term, outage_closed_form, outage_worst_case_exact,
                     outage_worst_case_quadrature)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3

SCENARIO_COLUMNS = ["n_ports", "port_power", "circuit_power", "ps_bob", "ps_eve",
                    "noise_bob", "noise_eve", "threshold", "n_eves"]
OUTAGE_COLUMNS = ["closed_form", "worst_case_series", "worst_case_product", "worst_case_exact",
                  "mc_value", "mc_stderr", "seed", "trials"]
OPTIMIZE_COLUMNS = ["see", "see_wos", "status", "kkt_residual", "total_power",
                    "eve_harvest", "infeasible_constraints", "allocation", "seed"]


def fmt(v) -> str:
    """Locale-free, round-trip text for one CSV cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ";".join(fmt(x) for x in v)
    return str(v)


def sweep_points(cfg: ExperimentConfig, target: str) -> list[dict]:
    """Axis assignments in sweep order (first axis slowest); ``[{}]`` without a sweep."""
    sw = cfg.sweep
    if sw is None or sw.target != target:
        return [{}]
    if not sw.axes:
        return []
    names = sw.names
    return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in sw.axes))]


def axis_names(cfg: ExperimentConfig, target: str) -> list[str]:
    sw = cfg.sweep
    return sw.names if sw is not None and sw.target == target else []


def _map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def outage_row(cfg: ExperimentConfig, point: dict, with_mc: bool) -> dict:
    s = cfg.outage_scenario(**point)
    row = {c: getattr(s, c) for c in SCENARIO_COLUMNS}
    row["closed_form"] = outage_closed_form(s)
    try:
        row["worst_case_series"] = 1.0 - eve_cdf_term(s).value ** s.n_eves
    except NumericalRangeError:
        row["worst_case_series"] = math.nan
    row["worst_case_product"] = outage_worst_case_quadrature(s)
    row["worst_case_exact"] = outage_worst_case_exact(s)
    if with_mc:
        est = (mc_outage(s, cfg.trials, cfg.seed) if s.n_eves == 1
               else mc_outage_worst_case(s, cfg.trials, cfg.seed))
        row.update(mc_value=est.value, mc_stderr=est.stderr, seed=cfg.seed, trials=cfg.trials)
    else:
        row.update(mc_value=None, mc_stderr=None, seed=cfg.seed, trials=None)
    return row


def optimize_row(cfg: ExperimentConfig, point: dict) -> dict:
    point = dict(point)
    draw = point.pop("draw_index", None)
    sys_cfg = cfg.system_config(**point)
    ch = cfg.channel.realize(sys_cfg, draw)
    rep = solve_p1(sys_cfg, ch, cfg.solver)
    row = {"status": rep.status, "seed": cfg.channel.seed,
           "infeasible_constraints": rep.infeasible_constraints or None}
    if rep.status == INFEASIBLE:
        return row
    wos = solve_p1(sys_cfg, ch, cfg.solver, secure=False)
    p = rep.allocation
    row.update(
        see=rep.see_value,
        see_wos=wos.see_value,
        kkt_residual=rep.kkt_residual,
        total_power=p.total,
        eve_harvest=max(harvested_energy_eve(sys_cfg, ch, p, m) for m in range(sys_cfg.n_eves)),
        allocation=[float(x) for x in p.p.ravel()],
    )
    return row


def render_csv(command: str, cfg: ExperimentConfig, header: list[str], rows: list[dict],
               trials: int | None = None) -> str:
    buf = io.StringIO()
    meta = [f"tool: swiptsee {__version__}", f"command: {command}", f"seed: {cfg.seed}",
            f"channel_seed: {cfg.channel.seed}", f"generator: {GENERATOR_ID}"]
    if trials is not None:
        meta.append(f"trials: {trials}")
    for line in meta:
        buf.write(f"# {line}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in header])
    return buf.getvalue()


def write_output(text: str, path) -> None:
    """Write atomically to ``path``, or to stdout when ``path`` is None."""
    if path is None:
        sys.stdout.write(text)
        return
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".see-", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ConfigError(f"cannot write output {path}: {exc}") from exc


@dataclass
class RunResult:
    exit_code: int
    csv_text: str
    rows: list = field(default_factory=list)


def execute(command: str, cfg: ExperimentConfig) -> RunResult:
    """Compute the CSV for ``command`` without writing it anywhere."""
    if cfg.kind is not None and command != cfg.kind:
        raise ConfigError(f"config kind {cfg.kind!r} does not match command {command!r}")
    if command == "sweep":
        if cfg.sweep is None:
            raise ConfigError("sweep command needs a 'sweep' section")
        target = cfg.sweep.target
    else:
        target = "optimize" if command == "optimize" else "outage"
    if target == "optimize" and cfg.system is None:
        raise ConfigError(f"{command} needs a 'system' section")
    if target == "outage" and cfg.scenario is None:
        raise ConfigError(f"{command} needs a 'scenario' section")

    points = sweep_points(cfg, target)
    names = axis_names(cfg, target)
    with_mc = False
    if target == "optimize":
        rows = _map(lambda pt: optimize_row(cfg, pt), points, cfg.workers)
        header = names + OPTIMIZE_COLUMNS
    else:
        with_mc = command == "mc" or (command == "sweep" and cfg.sweep.mc)
        rows = _map(lambda pt: outage_row(cfg, pt, with_mc), points, cfg.workers)
        header = names + SCENARIO_COLUMNS + OUTAGE_COLUMNS
    for pt, row in zip(points, rows):
        for k, v in pt.items():
            row[k] = v
    code = EXIT_OK
    if command == "optimize":
        statuses = {r["status"] for r in rows}
        if statuses - {OPTIMAL, INFEASIBLE}:
            code = EXIT_NUMERICAL
        elif INFEASIBLE in statuses:
            code = EXIT_INFEASIBLE
    return RunResult(code, render_csv(command, cfg, header, rows, cfg.trials if with_mc else None), rows)


def run(cfg: ExperimentConfig, command: str | None = None) -> int:
    """Run one experiment and write its CSV; returns the process exit code."""
    command = command or cfg.kind
    if command is None:
        raise ConfigError("no command given and config has no 'kind'")
    res = execute(command, cfg)
    write_output(res.csv_text, cfg.output_path)
    return res.exit_code


@dataclass
class VerifyPoint:
    point: dict
    quantity: str
    closed_form: float
    mc_value: float
    stderr: float
    tolerance: float
    gating: bool = True

    @property
    def deviation(self) -> float:
        return abs(self.closed_form - self.mc_value)

    @property
    def sigmas(self) -> float:
        if self.stderr > 0:
            return self.deviation / self.stderr
        return 0.0 if self.deviation == 0 else math.inf

    @property
    def ok(self) -> bool:
        return self.deviation <= self.tolerance


@dataclass
class VerifyReport:
    points: list
    warnings: list
    trials: int

    @property
    def passed(self) -> bool:
        return all(p.ok for p in self.points if p.gating)

    @property
    def max_sigmas(self) -> float:
        return max((p.sigmas for p in self.points if p.gating), default=0.0)

    def lines(self) -> list[str]:
        out = [f"warning: {w}" for w in self.warnings]
        for p in self.points:
            where = ", ".join(f"{k}={fmt(v)}" for k, v in p.point.items()) or "base scenario"
            tag = ("ok  " if p.ok else "FAIL") if p.gating else "info"
            out.append(f"{tag} [{where}] {p.quantity}: closed={p.closed_form:.6f} "
                       f"mc={p.mc_value:.6f} dev={p.sigmas:.2f} stderr (tol {p.tolerance:.2e})")
        n = sum(p.gating for p in self.points)
        out.append(f"max deviation: {self.max_sigmas:.3f} stderr over {n} comparisons "
                   f"at {self.trials} trials")
        out.append("PASS" if self.passed else "FAIL")
        return out


def verify(cfg: ExperimentConfig, n_sigma: float = 3.0, abs_floor: float = 1e-3,
           _alpha_scale: float = 1.0) -> VerifyReport:
    """Closed-form outage vs Monte Carlo on every outage grid point.

    A point passes when ``|closed - mc| <= max(n_sigma * stderr, abs_floor)``.
    With several eavesdroppers the worst-case outage is checked against the
    worst-case simulation as well.  The shared-Bob integral gates; the
    independent-Eve product form is listed as ``info`` only, since every Eve
    event depends on the same Bob channel.  ``_alpha_scale`` corrupts Bob's
    ``alpha`` on the closed-form side only (fault injection for tests).
    """
    if cfg.scenario is None:
        raise ConfigError("verify needs a 'scenario' section")
    pts = sweep_points(cfg, "outage")
    results, worst_floor = [], 0.0
    for pt in pts:
        s = cfg.outage_scenario(**pt)
        s_cf = s.replace(noise_bob=s.noise_bob * _alpha_scale) if _alpha_scale != 1.0 else s
        checks = [("closed_form", outage_closed_form(s_cf), mc_outage(s.replace(n_eves=1), cfg.trials, cfg.seed,
                                                                      cfg.workers))]
        if s.n_eves > 1:
            worst = mc_outage_worst_case(s, cfg.trials, cfg.seed, cfg.workers)
            checks.append(("worst_case_exact", outage_worst_case_exact(s_cf), worst))
            checks.append(("worst_case_product", outage_worst_case_quadrature(s_cf), worst))
        for name, cf, est in checks:
            tol = max(n_sigma * est.stderr, abs_floor)
            worst_floor = max(worst_floor, n_sigma * est.stderr)
            results.append(VerifyPoint(pt, name, cf, est.value, est.stderr, tol, name != "worst_case_product"))
    warnings = []
    if worst_floor > abs_floor:
        warnings.append(f"stderr dominates tolerance at {cfg.trials} trials: "
                        f"{n_sigma:g}*stderr reaches {worst_floor:.3g} > absolute floor {abs_floor:g}")
    return VerifyReport(results, warnings, cfg.trials)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="see", description="Secure energy efficiency of SWIPT distributed antenna systems.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=["optimize", "outage", "mc", "sweep", "verify"])
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed", type=_u64, help="override the config seed")
    ap.add_argument("--trials", type=_positive, help="Monte Carlo trials per point")
    ap.add_argument("--out", help="CSV output path (default: config output_path, else stdout)")
    ap.add_argument("--workers", type=_positive, help="sweep points evaluated concurrently")
    ap.add_argument("--inject-alpha-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.trials, args.out, args.workers)
        if args.command == "verify":
            rep = verify(cfg, _alpha_scale=args.inject_alpha_scale)
            text = "\n".join(rep.lines()) + "\n"
            if cfg.output_path is not None:
                write_output(text, cfg.output_path)
            sys.stdout.write(text)
            return EXIT_OK if rep.passed else EXIT_NUMERICAL
        res = execute(args.command, cfg)
        write_output(res.csv_text, cfg.output_path)
        if args.command == "optimize":
            for r in res.rows:
                extra = f" conflicting={';'.join(r['infeasible_constraints'])}" if r.get("infeasible_constraints") else ""
                print(f"status={r['status']} see={fmt(r.get('see'))}{extra}", file=sys.stderr)
        return res.exit_code
    except ConfigError as exc:
        print(f"see: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalRangeError, QuadratureError, ArithmeticError) as exc:
        print(f"see: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"see: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
