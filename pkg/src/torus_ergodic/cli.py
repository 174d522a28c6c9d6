"""Config-driven experiment runner.

    torus-ergodic all --config exp.yaml --out runs/

Each invocation writes a fresh ``run-NNNN`` directory under ``--out`` holding
``report.json``, the validated ``config.yaml`` and plot-ready ``.dat`` tables.

Exit codes: 0 all checks pass, 2 invalid config, 3 a bound was violated,
4 a box is too small for the requested energy shells.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config, serialize_config
from .dynamics import (
    averaging_defect,
    conjugate_operator,
    ergodic_average,
    evolve_symbol,
)
from .errors import BoundViolation, BoxTooSmallError, DimensionError
from .lattice import shell_radius
from .operators import operator_norm, quantize
from .semiclassical import decompose_average, n1_rank_certificate, sn_scan
from .symbols import bessel_constant, norm_r, sobolev_sup, sup_norm, synthesize_grid

EXIT_OK, EXIT_CONFIG, EXIT_BOUND, EXIT_RESOURCE = 0, 2, 3, 4

DETERMINISM_NOTE = "no random numbers are drawn; results do not depend on --threads"


def _num(x: Any) -> Any:
    if isinstance(x, complex):
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    return x


@dataclass
class Section:
    name: str
    checks: list[dict] = field(default_factory=list)
    files: dict[str, str] = field(default_factory=dict)
    status: str = "ran"

    def record(self, name: str, digest: str, measured: Any, bound: Any = None,
               passed: bool | None = None, inequality: str | None = None, **extra: Any):
        rec = {"name": name, "inputs_digest": digest, "measured": _num(measured),
               "bound": _num(bound), "passed": passed}
        if inequality is not None:
            rec["inequality"] = inequality
        rec.update({k: _num(v) for k, v in extra.items()})
        self.checks.append(rec)

    @property
    def failures(self) -> list[dict]:
        return [c for c in self.checks if c["passed"] is False]

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "checks": self.checks,
                "files": sorted(self.files)}


def _table(header: str, rows: list[tuple]) -> str:
    lines = [f"# {header}"] + [" ".join(repr(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def run_norm_check(cfg: ExperimentConfig) -> Section:
    """||Q(F)|| against C_r ||F||_r, plus the two-sided sup-norm sandwich."""
    sec = Section("norm-check")
    F = cfg.coefficients()
    tol = cfg.tolerances
    digest = cfg.digest("dimension", "frequency_radius", "momentum_radius", "regularity", "symbol", "tolerances")
    r, N = cfg.regularity, cfg.dimension
    enc = bessel_constant(r, N, tol["bessel_tail"])
    nr = norm_r(F, r)
    norm = operator_norm(quantize(F), tol=tol["power_tol"], max_iter=int(tol["power_max_iter"]))
    bound = enc.upper * nr + tol["norm_slack"]
    sec.record("operator_norm_bound", digest, norm, bound, norm <= bound,
               "||Q(F)|| <= C_r ||F||_r", norm_r=nr, C_r_lower=enc.lower, C_r_upper=enc.upper)
    grid = synthesize_grid(F)
    lower = sup_norm(grid) / enc.upper
    upper = sobolev_sup(grid, r)
    slack = tol["norm_slack"]
    sec.record("sandwich_lower", digest, nr, lower, lower <= nr + slack,
               "sup|F| / C_r <= ||F||_r")
    sec.record("sandwich_upper", digest, nr, upper, nr <= upper + slack,
               "||F||_r <= sup|(1 - Delta)^(r/2) F|")
    return sec


def run_average_convergence(cfg: ExperimentConfig) -> Section:
    """Conjugation identity at the configured times and the 4||F||_r/T law."""
    sec = Section("average-convergence")
    F = cfg.coefficients()
    r = cfg.regularity
    digest = cfg.digest("dimension", "frequency_radius", "momentum_radius", "regularity", "symbol")
    Q = quantize(F)
    phase_tol = cfg.tolerances["phase"]
    for t in cfg.times:
        err = conjugate_operator(Q, t).max_abs_difference(quantize(evolve_symbol(F, t)))
        sec.record(f"conjugation_identity[t={t!r}]", digest, err, phase_tol, err <= phase_tol,
                   "e^{itH} Q(F) e^{-itH} = Q(F_t)")
        drift = abs(norm_r(evolve_symbol(F, t), r) - norm_r(F, r))
        iso_tol = phase_tol * max(1.0, norm_r(F, r))
        sec.record(f"isometry[t={t!r}]", digest, drift, iso_tol, drift <= iso_tol, "||F_t||_r = ||F||_r")
    rows = []
    for T in cfg.averaging_times:
        try:
            rep = averaging_defect(F, T, r)
            defect, bound, ok = rep.defect, rep.bound, True
        except BoundViolation as exc:
            defect, bound, ok = exc.lhs, exc.rhs, False
        rows.append((T, defect, bound))
        sec.record(f"averaging_bound[T={T!r}]", digest, defect, bound, ok,
                   "||avg_T(F) - <F>||_r <= 4 ||F||_r / T")
    sec.files["average_convergence.dat"] = _table("T defect bound", rows)
    avg = ergodic_average(F)
    idem = float(np.max(np.abs(ergodic_average(avg).table - avg.table), initial=0.0))
    sec.record("ergodic_average_idempotent", digest, idem, 0.0, idem == 0.0, "<<F>> = <F>")
    return sec


def run_sn_scan(cfg: ExperimentConfig) -> Section:
    """Decay of tau_E for the remainder a_F and for Q(F_bar)."""
    sec = Section("sn-scan")
    F = cfg.coefficients()
    digest = cfg.digest("dimension", "frequency_radius", "momentum_radius", "symbol", "energy_grid")
    energies = cfg.energies()
    need = shell_radius(energies[-1])
    if cfg.momentum_radius < need:
        raise BoxTooSmallError(need, cfg.momentum_radius, energies[-1])
    dec = decompose_average(F)
    exact = dec.total().max_abs_difference(quantize(ergodic_average(F)))
    sec.record("decomposition_exact", digest, exact, 0.0, exact == 0.0, "<Q(F)> = Q(F_bar) + a_F")
    diag = float(np.max(np.abs(dec.remainder.diagonal_values()), initial=0.0))
    sec.record("remainder_zero_diagonal", digest, diag, 0.0, diag == 0.0, "diag(a_F) = 0")
    for label, op in (("remainder", dec.remainder), ("classical", dec.classical_part)):
        curve = sn_scan(op, energies)
        sec.files[f"sn_{label}.dat"] = curve.to_text()
        sec.record(f"{label}_fitted_slope", digest, curve.fitted_slope, None, None,
                   slope_stderr=curve.slope_stderr, final_value=curve.values[-1])
    return sec


def run_rank_certificate(cfg: ExperimentConfig) -> Section:
    """Finite rank of the averaged remainder on the circle."""
    sec = Section("rank-certificate")
    F = cfg.coefficients()
    digest = cfg.digest("dimension", "frequency_radius", "momentum_radius", "symbol", "tolerances")
    cert = n1_rank_certificate(F, cfg.tolerances["rank_rel"])
    for e in cert.entries:
        sec.record(f"rank[k={e.frequency}]", digest, e.rank, e.bound, e.passed,
                   "rank <Q(e^{ikx} g)> <= (0 if k odd else 1)")
    sec.record("remainder_total_rank", digest, cert.total_rank, cert.total_bound,
               cert.total_rank <= cert.total_bound, "rank a_F <= #even frequencies")
    return sec


SECTIONS: dict[str, Callable[[ExperimentConfig], Section]] = {
    "norm-check": run_norm_check,
    "average-convergence": run_average_convergence,
    "sn-scan": run_sn_scan,
    "rank-certificate": run_rank_certificate,
}


def _run_section(name: str, cfg: ExperimentConfig, in_all: bool) -> Section:
    try:
        return SECTIONS[name](cfg)
    except DimensionError:
        if not in_all:
            raise
        return Section(name, status="skipped: requires dimension 1")


def run_checks(cfg: ExperimentConfig, command: str, threads: int = 1) -> dict:
    """Run the requested sections and assemble the report payload."""
    names = list(SECTIONS) if command == "all" else [command]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(names)))) as pool:
        futures = [pool.submit(_run_section, n, cfg, command == "all") for n in names]
        sections = [f.result() for f in futures]
    failures = [c for s in sections for c in s.failures]
    report = {
        "tool": "torus-ergodic",
        "version": __version__,
        "determinism": DETERMINISM_NOTE,
        "command": command,
        "config_digest": cfg.digest(),
        "sections": [s.to_dict() for s in sections],
        "passed": not failures,
    }
    files = {name: text for s in sections for name, text in s.files.items()}
    return {"report": report, "files": files, "failures": failures}


def _next_run_dir(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    n = 1
    while True:
        run = out / f"run-{n:04d}"
        try:
            run.mkdir()
            return run
        except FileExistsError:
            n += 1


def write_run(out: Path, cfg: ExperimentConfig, result: dict) -> Path:
    run = _next_run_dir(out)
    payload = json.dumps(result["report"], indent=2, sort_keys=True, allow_nan=False) + "\n"
    (run / "report.json").write_text(payload)
    (run / "config.yaml").write_text(serialize_config(cfg))
    for name, text in result["files"].items():
        (run / name).write_text(text)
    return run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torus-ergodic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*SECTIONS, "all"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", default=None, help="run directory root (default: config 'output' or ./runs)")
        p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        result = run_checks(cfg, args.command, args.threads)
    except (ConfigError, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BoxTooSmallError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    out = Path(args.out or cfg.output or "runs")
    run = write_run(out, cfg, result)
    print(f"wrote {run}")
    if result["failures"]:
        for c in result["failures"]:
            print(f"FAILED {c['name']}: violated {c.get('inequality', '?')} "
                  f"(measured {c['measured']}, bound {c['bound']})", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
