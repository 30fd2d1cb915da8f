"""Command-line entry point: ``so32bec {verify,solve,sweep}``.

Exit codes: 0 success, 1 verification or solve failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .catalog import verify_extended_structure, verify_structure
from .config import SWEEP_NAMES, RunConfig, load_config, with_overrides
from .correlations import (
    CSV_COLUMNS,
    CorrelationReport,
    brute_force_correlations,
    closed_form_report,
    csi_test,
    g2_special_B,
    report_difference,
)
from .errors import (
    CaseMismatchError,
    ConfigurationError,
    CutoffTooSmallError,
    IterationLimitError,
    So32Error,
    UnstableSectorError,
)
from .meanfield import PhysicalParams, self_consistent_solve, verify_diagonal
from .states import CoherentParams, DisplacementParams, dw_state, sector_cfg
from .verification import (
    CheckLine,
    adjoint_transform_errors,
    f_function_errors,
    lift_agreement,
    moment_errors,
    random_coefficients,
    random_params,
    transform_errors,
    transform_oracle,
)

log = logging.getLogger("so32bec")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# printed extended relations that hold with the opposite sign (checked exactly)
SIGN_ERRATA = {"[N3,D+]": "-E+", "[N3,D-]": "E-", "[D+,D-]": "-E3"}


@dataclass
class ReportBundle:
    command: str
    sections: dict[str, list[CheckLine]] = field(default_factory=dict)
    result: dict | None = None
    rows: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for lines in self.sections.values() for c in lines)

    def metadata(self) -> dict:
        return {
            "command": self.command,
            "versions": {"so32bec": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "timings_s": {k: round(v, 3) for k, v in self.timings.items()},
            "config": self.config,
        }

    def verify_text(self) -> str:
        out = []
        for name, lines in self.sections.items():
            out.append(f"== {name}")
            out += [c.line() for c in lines]
        n_fail = sum(not c.ok for lines in self.sections.values() for c in lines)
        n_all = sum(len(lines) for lines in self.sections.values())
        out.append(f"== {n_all} checks, {n_fail} failed")
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# formatting


def fmt_value(x) -> str:
    """Deterministic text for one CSV cell: floats to 9 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return "nan"
        s = f"{float(x):.9g}"
        return "0" if s == "-0" else s
    return str(x)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([fmt_value(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        return None if not math.isfinite(x) else float(f"{float(x):.9g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return {"re": _json_safe(x.real), "im": _json_safe(x.imag)}
    return x


def dumps(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2) + "\n"


# ---------------------------------------------------------------------------
# verify


def _timed(bundle: ReportBundle, name: str, fn: Callable[[], list[CheckLine]]) -> None:
    t0 = time.perf_counter()
    try:
        lines = fn()
    except CutoffTooSmallError as exc:
        lines = [CheckLine(f"{name}: leakage gate ({exc})", exc.leakage, 0.0, "FAIL")]
    bundle.sections[name] = lines
    bundle.timings[name] = time.perf_counter() - t0
    log.info("%s: %d checks, %d failed (%.1fs)", name, len(lines), sum(not c.ok for c in lines), bundle.timings[name])


def _structure_lines(q: int) -> list[CheckLine]:
    rep = verify_structure(q)
    return [CheckLine(f"q={q} {r.lhs} = {r.expected}", float(len(r.residual)), 0.0)
            for r in rep.relations + rep.vanishing]


def _extended_lines(k: int) -> list[CheckLine]:
    out = []
    for r in verify_extended_structure(k).relations:
        if r.ok:
            out.append(CheckLine(f"k={k} {r.lhs} = {r.expected}", 0.0, 0.0))
        elif SIGN_ERRATA.get(r.lhs) == r.holds_as:
            out.append(CheckLine(f"k={k} {r.lhs} = {r.expected} (printed); holds as {r.holds_as}", 0.0, 0.0, "sign-erratum"))
        else:
            out.append(CheckLine(f"k={k} {r.lhs} = {r.expected}", float(len(r.residual)), 0.0))
    return out


def _lift_lines(cfg: RunConfig) -> list[CheckLine]:
    out = []
    for q in (0, cfg.numeric.k):
        errs = lift_agreement(q, cfg.numeric.cutoffk, cfg.numeric.margin)
        worst = max(errs, key=errs.get)
        out.append(CheckLine(f"q={q} {len(errs)} pairs, worst {worst}", errs[worst], 1e-10))
    return out


def _transform_lines(cfg: RunConfig) -> list[CheckLine]:
    rng = np.random.default_rng(cfg.numeric.seed)
    out = []
    for i in range(cfg.numeric.draws):
        for q in (0, cfg.numeric.k):
            v = random_params(rng, cfg.state.r0)
            oracle = transform_oracle(v, q, cfg.numeric.transform_cutoff, cfg.numeric.margin)
            working = transform_errors(v, q, oracle)
            printed = transform_errors(v, q, oracle, "printed")
            adj = adjoint_transform_errors(v, q)
            for n, err in working.items():
                out.append(CheckLine(f"draw {i} q={q} W^+ {n} W vs oracle", err, 1e-6))
                out.append(CheckLine(f"draw {i} q={q} W^+ {n} W vs adjoint action", adj[n], 1e-10))
                if printed[n] > 1e-6:
                    out.append(CheckLine(f"draw {i} q={q} {n} printed form differs", printed[n], 1e-6, "printed-differs"))
    return out


def _f_lines(cfg: RunConfig) -> list[CheckLine]:
    rng = np.random.default_rng(cfg.numeric.seed + 1)
    out = []
    for i in range(cfg.numeric.draws):
        for q in (0, cfg.numeric.k):
            c = random_coefficients(rng, q)
            v = random_params(rng, cfg.state.r0)
            oracle = transform_oracle(v, q, cfg.numeric.transform_cutoff, cfg.numeric.margin)
            errs = f_function_errors(q, c, v, oracle)
            out.append(CheckLine(f"draw {i} q={q} f1..f10 vs adjoint action", errs["adjoint"], 1e-10))
            out.append(CheckLine(f"draw {i} q={q} f1..f10 vs oracle decomposition", errs["oracle"], 1e-8))
            if q != 0:
                printed = f_function_errors(q, c, v, form="printed")["adjoint"]
                if printed > 1e-8:
                    out.append(CheckLine(f"draw {i} q={q} printed f7 differs", printed, 1e-8, "printed-differs"))
    return out


def _moment_lines(cfg: RunConfig) -> list[CheckLine]:
    v = replace(cfg.state.coherent(), theta=0.0)
    d = cfg.state.displacement()
    _, _, err = moment_errors(v, d, cfg.numeric.cutoff0, cfg.numeric.leakage_gate)
    return [CheckLine(f"moments z0={d.za_abs:g} r0={v.r:g} Theta0=0 cutoff {cfg.numeric.cutoff0}", err, cfg.numeric.oracle_tol)]


def _correlation_lines(cfg: RunConfig) -> list[CheckLine]:
    s = cfg.state
    v, d = CoherentParams(s.r0, s.psi0), DisplacementParams.symmetric(s.z0, s.delta0)
    closed = closed_form_report(v, d, cfg.numeric.tol)
    g2, q, gab, i0 = g2_special_B(s.z0, s.r0, s.psi0 - 2 * s.delta0, check=False)
    special = max(abs(g2 - closed.g2_a), abs(q - closed.Q_a), abs(gab - closed.g2_ab), abs(i0 - closed.I0))
    _, i0_def = csi_test(g2, g2, gab)
    state = dw_state(v, d, sector_cfg(0, cfg.numeric.cutoff0), cfg.numeric.leakage_gate)
    oracle = brute_force_correlations(state, cfg.numeric.oracle_tol)
    return [
        CheckLine("finite-field forms vs general forms", special, 1e-9),
        CheckLine("I(0) closed form vs definition", abs(i0 - i0_def), 1e-10),
        CheckLine(f"oracle vs closed form at cutoff {cfg.numeric.cutoff0}", report_difference(oracle, closed), cfg.numeric.oracle_tol),
    ]


def _diagonal_lines(cfg: RunConfig) -> list[CheckLine]:
    try:
        result, _, coeffs = self_consistent_solve(cfg.physical, {0: cfg.state.coherent()}, cfg.solver)
    except (IterationLimitError, UnstableSectorError, CaseMismatchError) as exc:
        return [CheckLine(f"self-consistent solve: {type(exc).__name__}: {exc}", math.inf, 0.0, "FAIL")]
    rep = verify_diagonal(result, coeffs, cfg.numeric.diag_cutoff, cfg.numeric.margin, cfg.numeric.diag_tol)
    out = [CheckLine(f"self-consistent solve ({result.iterations} iterations)", result.residual, cfg.solver.tol)]
    out += [CheckLine(f"sector {q} off-diagonal residual", x, cfg.numeric.diag_tol) for q, x in rep.off_diagonal.items()]
    out += [CheckLine(f"sector {q} |[H, Q]|", x, 1e-10) for q, x in rep.charge_commutator.items()]
    return out


def cmd_verify(cfg: RunConfig) -> tuple[int, ReportBundle]:
    bundle = ReportBundle("verify", config=cfg.echo())
    k = cfg.numeric.k
    _timed(bundle, "structure q=0", lambda: _structure_lines(0))
    _timed(bundle, f"structure q={k}", lambda: _structure_lines(k))
    _timed(bundle, f"extended relations k={k}", lambda: _extended_lines(k))
    _timed(bundle, "lifted commutators", lambda: _lift_lines(cfg))
    _timed(bundle, "similarity transforms", lambda: _transform_lines(cfg))
    _timed(bundle, "transformed Hamiltonian", lambda: _f_lines(cfg))
    _timed(bundle, "moments", lambda: _moment_lines(cfg))
    _timed(bundle, "correlations", lambda: _correlation_lines(cfg))
    _timed(bundle, "diagonalization", lambda: _diagonal_lines(cfg))
    return (EXIT_OK if bundle.ok else EXIT_FAIL), bundle


# ---------------------------------------------------------------------------
# solve


def _report_dict(rep: CorrelationReport) -> dict:
    return rep.as_dict()


def cmd_solve(cfg: RunConfig) -> tuple[int, ReportBundle]:
    bundle = ReportBundle("solve", config=cfg.echo())
    t0 = time.perf_counter()
    try:
        result, _, coeffs = self_consistent_solve(cfg.physical, {0: cfg.state.coherent()}, cfg.solver)
    except (IterationLimitError, UnstableSectorError, CaseMismatchError) as exc:
        diag = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, UnstableSectorError):
            diag["sector"] = exc.sector
        if isinstance(exc, IterationLimitError):
            diag.update(residual=exc.residual, iterations=exc.iterations)
        bundle.result = diag
        bundle.timings["solve"] = time.perf_counter() - t0
        return EXIT_FAIL, bundle
    bundle.timings["solve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    diag = verify_diagonal(result, coeffs, cfg.numeric.diag_cutoff, cfg.numeric.margin, cfg.numeric.diag_tol)
    bundle.timings["verify_diagonal"] = time.perf_counter() - t0
    sectors = []
    for q, sol in sorted(result.sectors.items()):
        p = sol.params
        sectors.append({"q": q, "E_q": sol.energy, "r": p.r, "psi": p.psi, "theta": p.theta, "phi": p.phi,
                        "beta": sol.beta, "f10": sol.f10, "case": sol.case, "notes": list(sol.notes)})
    zero = result.sectors[0].params
    try:
        corr = _report_dict(closed_form_report(zero, cfg.state.displacement(), cfg.numeric.tol))
        corr_error = None
    except So32Error as exc:
        corr, corr_error = None, f"{type(exc).__name__}: {exc}"
    bundle.result = {
        "status": "ok" if diag.ok else "failed",
        "sectors": sectors,
        "E_star": result.e_star,
        "iterations": result.iterations,
        "residual": result.residual,
        "diagonal": {"off_diagonal": diag.off_diagonal, "charge_commutator": diag.charge_commutator,
                     "failures": diag.failures},
        "correlations": corr,
        "correlations_error": corr_error,
    }
    return (EXIT_OK if diag.ok else EXIT_FAIL), bundle


# ---------------------------------------------------------------------------
# sweep


def _grid(cfg: RunConfig) -> tuple[list[str], list[tuple[float, ...]]]:
    names = [n for n in SWEEP_NAMES if n in cfg.sweep]
    if not names:
        raise ConfigurationError("sweep needs at least one sweep.<parameter> grid")
    for n in names:
        if not cfg.sweep[n]:
            raise ConfigurationError(f"sweep.{n} grid is empty")
    return names, list(itertools.product(*(cfg.sweep[n] for n in names)))


def _point_state(cfg: RunConfig, point: dict[str, float]) -> tuple[CoherentParams, DisplacementParams]:
    s = cfg.state
    z0, delta0 = point.get("z0", s.z0), point.get("delta0", s.delta0)
    d = DisplacementParams.symmetric(z0, delta0)
    if "B" in point or "g2V0" in point:
        phys: PhysicalParams = cfg.physical
        kw = {}
        if "B" in point:
            kw["B"] = point["B"]
        if "g2V0" in point:
            kw.update(g_n=point["g2V0"] / phys.V0, g_s=0.0)
        phys = replace(phys, **kw)
        seed = CoherentParams(point.get("r0", s.r0), point.get("Psi0", s.psi0), point.get("Theta0", s.theta0), s.phi0)
        result, _, _ = self_consistent_solve(phys, {0: seed}, cfg.solver)
        return result.sectors[0].params, d
    v = CoherentParams(point.get("r0", s.r0), point.get("Psi0", s.psi0), point.get("Theta0", s.theta0), s.phi0)
    return v, d


def _error_row(point_v: dict, exc: Exception) -> dict:
    return {**point_v, "provenance": f"error:{type(exc).__name__}"}


def _point_columns(cfg: RunConfig, point: dict[str, float]) -> dict:
    s = cfg.state
    return {
        "z0": point.get("z0", s.z0),
        "r0": point.get("r0", s.r0),
        "theta0": point.get("Theta0", s.theta0),
        "psi0_minus_2delta0": point.get("Psi0", s.psi0) - 2 * point.get("delta0", s.delta0),
    }


def cmd_sweep(cfg: RunConfig) -> tuple[int, ReportBundle]:
    """Closed-form report per grid point, plus an oracle row every ``oracle_every`` points.

    Points are evaluated in grid order (last parameter fastest).  Oracle rows
    that disagree with their closed-form row by more than ``oracle_tol`` carry
    provenance ``oracle-flagged``; failed points carry ``error:<kind>``.
    """
    names, points = _grid(cfg)
    bundle = ReportBundle("sweep", config=cfg.echo())
    t0 = time.perf_counter()
    n_err = 0
    for idx, values in enumerate(points):
        point = dict(zip(names, values))
        cols = _point_columns(cfg, point)
        try:
            v, d = _point_state(cfg, point)
            closed = closed_form_report(v, d, cfg.numeric.tol)
        except (So32Error, ValueError) as exc:
            bundle.rows.append(_error_row(cols, exc))
            n_err += 1
            continue
        bundle.rows.append(closed.csv_fields())
        if idx % cfg.oracle_every:
            continue
        try:
            state = dw_state(v, d, sector_cfg(0, cfg.numeric.cutoff0), cfg.numeric.leakage_gate)
            oracle = replace(brute_force_correlations(state, cfg.numeric.oracle_tol), z0=closed.z0, r0=closed.r0,
                             theta0=closed.theta0, psi0_minus_2delta0=closed.psi0_minus_2delta0)
        except (So32Error, ValueError) as exc:
            bundle.rows.append(_error_row(cols, exc))
            n_err += 1
            continue
        if report_difference(oracle, closed) > cfg.numeric.oracle_tol:
            oracle = replace(oracle, provenance="oracle-flagged")
        bundle.rows.append(oracle.csv_fields())
    bundle.timings["sweep"] = time.perf_counter() - t0
    bundle.result = {"points": len(points), "rows": len(bundle.rows), "errors": n_err}
    return EXIT_OK, bundle


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--out", metavar="DIR", help="directory for report files")
    common.add_argument("--oracle-every", type=int, metavar="N", help="oracle row every N grid points (default 10)")
    common.add_argument("--format", choices=("csv", "json"), help="sweep output format")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p = argparse.ArgumentParser(prog="so32bec", description="SO(3,2) mean-field toolkit for two-component condensates")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the verification suites")
    sub.add_parser("solve", parents=[common], help="self-consistent solve and correlations")
    sub.add_parser("sweep", parents=[common], help="correlation sweep over parameter grids")
    return p


def _emit(bundle: ReportBundle, cfg: RunConfig, out: Path | None) -> None:
    if bundle.command == "verify":
        text = bundle.verify_text()
        payload = {"ok": bundle.ok, "sections": {k: [c.__dict__ for c in v] for k, v in bundle.sections.items()}}
        files = {"verify.txt": text, "verify.json": dumps(payload)}
        sys.stdout.write(text)
    elif bundle.command == "solve":
        text = dumps(bundle.result)
        files = {"solve.json": text}
        sys.stdout.write(text)
    else:
        if cfg.output_format == "csv":
            text, name = rows_to_csv(bundle.rows), "sweep.csv"
        else:
            text, name = dumps([{c: r.get(c) for c in CSV_COLUMNS} for r in bundle.rows]), "sweep.json"
        files = {name: text}
        if out is None:
            sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        files["metadata.json"] = dumps(bundle.metadata())
        for name, text in files.items():
            (out / name).write_text(text)


COMMANDS = {"verify": cmd_verify, "solve": cmd_solve, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, oracle_every=args.oracle_every, output_format=args.format)
        code, bundle = COMMANDS[args.command](cfg)
    except ConfigurationError as exc:
        print(f"so32bec: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(bundle, cfg, Path(args.out) if args.out else None)
    if code != EXIT_OK:
        msg = bundle.result.get("message") if bundle.result else None
        print(f"so32bec {args.command}: failed" + (f": {msg}" if msg else ""), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
