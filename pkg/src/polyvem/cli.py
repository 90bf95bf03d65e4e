"""Command line interface.

Commands::

    polyvem patch     --method nonconforming --k 3 --m 3
    polyvem converge  --method both --k 1,2,3,4 --family m1 --levels 1-4 --out results
    polyvem mesh      --family m3 --n 5 --out mesh.txt
    polyvem quaddeg-study --method conforming --k 2,3 --family m1 --levels 1-4

Options may also come from ``--config FILE`` holding flat ``key = value``
lines (``#`` starts a comment); command-line flags win.  Exit status is 0
on success, 1 for invalid configuration or unwritable output, 2 for
numerical failures (singular systems, failed residual or patch checks).
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .analysis import run_convergence_study, run_patch_test
from .local import METHODS, DegenerateElementError
from .mesh import FAMILIES, MeshError, generate_m1, generate_m2, generate_m3, mesh_family, write_mesh
from .problem import get_problem
from .quadrature import DEFAULT_MARGIN, QuadratureError
from .solver import SolverError
from .svg import Series, write_loglog

COMMANDS = ("patch", "converge", "mesh", "quaddeg-study")
CSV_COLUMNS = ("method", "k", "family", "level", "h", "dofs", "rel_l2", "rel_h1")


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def patch_tolerance(k: int) -> float:
    """Pass threshold for the patch test at degree ``k``."""
    return {1: 1e-10, 2: 1e-10, 3: 1e-9}.get(k, 1e-8)


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str
    method: tuple = METHODS
    k: tuple = (1,)
    family: str = "m1"
    levels: tuple = (1, 2, 3, 4)
    level: int = 2
    n: int = 5
    m: int | None = None
    seed: int = 0
    margin: int = DEFAULT_MARGIN
    margins: tuple = (-2, 0, 2)
    problem: str = "benchmark"
    out: str = "polyvem-out"
    jobs: int = 1
    tol: float | None = None

    def manifest(self) -> str:
        lines = [f"version = {__version__}"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"


def _int_list(text: str) -> tuple:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            i = part.index("-", 1)
            lo, hi = int(part[:i]), int(part[i + 1:])
            if hi < lo:
                raise ConfigError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError("empty list")
    return tuple(out)


def _signed_list(text: str) -> tuple:
    """Comma list of possibly negative integers (no ranges)."""
    try:
        out = tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"expected a comma list of integers, got {text!r}") from None
    if not out:
        raise ConfigError("empty list")
    return out


def _methods(text: str) -> tuple:
    text = str(text).strip()
    if text == "both":
        return METHODS
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in parts if p not in METHODS]
    if bad or not parts:
        raise ConfigError(f"unknown method {text!r}; use conforming, nonconforming or both")
    return parts


_PARSERS = {
    "method": _methods,
    "k": _int_list,
    "family": str,
    "levels": _int_list,
    "level": int,
    "n": int,
    "m": int,
    "seed": int,
    "margin": int,
    "margins": _signed_list,
    "problem": str,
    "out": str,
    "jobs": int,
    "tol": float,
}


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _PARSERS and key != "command":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_config(command: str | None, file_values: dict, cli_values: dict) -> RunConfig:
    raw = dict(file_values)
    raw.update({k: v for k, v in cli_values.items() if v is not None})
    command = command or raw.pop("command", None)
    raw.pop("command", None)
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")
    values = {}
    for key, value in raw.items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    cfg = RunConfig(command=command, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.family not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}")
    if any(k < 1 for k in cfg.k):
        raise ConfigError("k must be >= 1")
    if any(not 1 <= lv <= 5 for lv in cfg.levels) or not 1 <= cfg.level <= 5:
        raise ConfigError("levels must lie in 1..5")
    if len(set(cfg.levels)) != len(cfg.levels) or list(cfg.levels) != sorted(cfg.levels):
        raise ConfigError("levels must be strictly increasing")
    if cfg.command in ("converge", "quaddeg-study") and len(cfg.levels) < 2:
        raise ConfigError("a convergence study needs at least two levels")
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.m is not None and (cfg.m < 1 or any(cfg.m > k for k in cfg.k)):
        raise ConfigError("patch degree m must satisfy 1 <= m <= k")
    try:
        get_problem(cfg.problem)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- outputs -------------------------------------------------------------------


def errors_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for r in rep.records:
            w.writerow([r.method, r.k, r.family, r.level, f"{r.h:.10g}", r.dofs,
                        f"{r.rel_l2:.10e}", f"{r.rel_h1:.10e}"])
    return buf.getvalue()


def rates_table(reports, extra: dict | None = None) -> str:
    """Aligned text table: pairwise rates per refinement step, then the fit."""
    lines = []
    head = f"{'method':<14} {'k':>2} {'family':<6} {'step':<8} {'rate L2':>8} {'rate H1':>8}"
    if extra:
        head = f"{'margin':>6} " + head
    lines.append(head)
    lines.append("-" * len(head))
    for i, rep in enumerate(reports):
        recs = rep.records
        r0 = recs[0]
        prefix = f"{extra[i]:>6} " if extra else ""
        for j in range(len(recs) - 1):
            step = f"{recs[j].level}->{recs[j + 1].level}"
            lines.append(f"{prefix}{r0.method:<14} {r0.k:>2} {r0.family:<6} {step:<8} "
                         f"{rep.pair_l2[j]:8.3f} {rep.pair_h1[j]:8.3f}")
        if len(recs) > 1:
            lines.append(f"{prefix}{r0.method:<14} {r0.k:>2} {r0.family:<6} {'fit':<8} "
                         f"{rep.slope_l2:8.3f} {rep.slope_h1:8.3f}")
    return "\n".join(lines) + "\n"


def emit_outputs(reports, out_dir, extra: dict | None = None, plots: bool = True) -> list[Path]:
    """Write ``errors.csv``, ``rates.txt`` and the two log-log plots."""
    reports = list(reports)
    if not reports or not any(rep.records for rep in reports):
        raise ConfigError("nothing to write: empty report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    (out / "errors.csv").write_text(errors_csv(reports), encoding="utf-8")
    (out / "rates.txt").write_text(rates_table(reports, extra), encoding="utf-8")
    written += [out / "errors.csv", out / "rates.txt"]
    if plots:
        for name, attr, offset in (("l2", "rel_l2", 1), ("h1", "rel_h1", 0)):
            series = []
            for rep in reports:
                r0 = rep.records[0]
                series.append(Series(
                    label=f"{r0.method[:4]}. k={r0.k}",
                    h=tuple(r.h for r in rep.records),
                    err=tuple(getattr(r, attr) for r in rep.records),
                    marker="circle" if r0.method == METHODS[0] else "triangle",
                    slope=r0.k + offset if r0.method == METHODS[0] else None))
            label = "L2" if name == "l2" else "H1"
            write_loglog(out / f"{name}.svg", series, title=f"{label} approximation errors",
                         ylabel=f"relative {label} error")
            written.append(out / f"{name}.svg")
    return written


# -- commands --------------------------------------------------------------------


def _study(args):
    method, k, family, levels, problem, seed, margin = args
    return run_convergence_study(method, k, family, levels, problem, seed=seed, margin=margin)


def _run_studies(cfg: RunConfig, tasks):
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(_study, tasks))
    return [_study(t) for t in tasks]


def _write_manifest(cfg: RunConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cfg.manifest(), encoding="utf-8")


def cmd_patch(cfg: RunConfig, out) -> int:
    mesh = mesh_family(cfg.family, cfg.level, seed=cfg.seed)
    failed = 0
    for method in cfg.method:
        for k in cfg.k:
            m = k if cfg.m is None else cfg.m
            tol = cfg.tol if cfg.tol is not None else patch_tolerance(k)
            err = run_patch_test(method, k, mesh, m)
            ok = err <= tol
            failed += not ok
            print(f"patch {method} k={k} m={m} {cfg.family} level {cfg.level}: "
                  f"max error {err:.3e} {'PASS' if ok else 'FAIL'} (tol {tol:.0e})", file=out)
    _write_manifest(cfg, Path(cfg.out) / "manifest.txt")
    if failed:
        raise NumericalFailure(f"{failed} patch test(s) failed")
    return 0


def cmd_converge(cfg: RunConfig, out) -> int:
    tasks = [(mth, k, cfg.family, cfg.levels, cfg.problem, cfg.seed, cfg.margin)
             for mth in cfg.method for k in cfg.k]
    reports = _run_studies(cfg, tasks)
    files = emit_outputs(reports, cfg.out)
    _write_manifest(cfg, Path(cfg.out) / "manifest.txt")
    out.write(rates_table(reports))
    for f in files:
        print(f"wrote {f}", file=out)
    return 0


def cmd_quaddeg(cfg: RunConfig, out) -> int:
    tasks, margins = [], []
    for margin in cfg.margins:
        for mth in cfg.method:
            for k in cfg.k:
                tasks.append((mth, k, cfg.family, cfg.levels, cfg.problem, cfg.seed, margin))
                margins.append(margin)
    reports = _run_studies(cfg, tasks)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = errors_csv(reports).splitlines()
    lines = ["margin," + rows[0]]
    i = 0
    for rep, margin in zip(reports, margins):
        for _ in rep.records:
            i += 1
            lines.append(f"{margin},{rows[i]}")
    (out_dir / "quaddeg.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    table = rates_table(reports, extra=margins)
    (out_dir / "rates.txt").write_text(table, encoding="utf-8")
    _write_manifest(cfg, out_dir / "manifest.txt")
    out.write(table)
    return 0


def cmd_mesh(cfg: RunConfig, out) -> int:
    gen = {"m1": lambda n: generate_m1(n, seed=cfg.seed), "m2": generate_m2, "m3": generate_m3}
    mesh = gen[cfg.family](cfg.n)
    path = Path(cfg.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_mesh(mesh, path)
    _write_manifest(cfg, path.with_name(path.name + ".manifest"))
    nel, ne, nv = mesh.counts
    print(f"{cfg.family} n={cfg.n}: {nel} elements, {ne} edges, {nv} vertices, h={mesh.h:.4f}; "
          f"wrote {path}", file=out)
    return 0


_COMMANDS = {"patch": cmd_patch, "converge": cmd_converge, "mesh": cmd_mesh,
             "quaddeg-study": cmd_quaddeg}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyvem", description="Virtual element solver for convection-"
                "reaction-diffusion problems on polygonal meshes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="file with flat 'key = value' lines")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    opt = p.add_argument_group("options (any may also be given in the config file)")
    opt.add_argument("--method", help="conforming, nonconforming or both")
    opt.add_argument("--k", help="degrees, e.g. 1,2,3 or 1-4")
    opt.add_argument("--family", help="m1, m2 or m3")
    opt.add_argument("--levels", help="mesh levels for studies, e.g. 1-4")
    opt.add_argument("--level", help="mesh level for the patch test")
    opt.add_argument("--n", help="grid resolution for the mesh command")
    opt.add_argument("--m", help="patch solution degree (default k)")
    opt.add_argument("--seed", help="random seed for m1 meshes")
    opt.add_argument("--margin", help="quadrature margin above 2k")
    opt.add_argument("--margins", help="margins swept by quaddeg-study, e.g. --margins=-2,0,2")
    opt.add_argument("--problem", help="benchmark or patch-mN")
    opt.add_argument("--out", help="output directory (file for the mesh command)")
    opt.add_argument("--jobs", help="worker processes for studies")
    opt.add_argument("--tol", help="patch test tolerance override")
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        ns = build_parser().parse_args(argv)
        file_values = read_config_file(ns.config) if ns.config else {}
        cli_values = {k: v for k, v in vars(ns).items() if k not in ("config", "command")}
        cfg = resolve_config(ns.command, file_values, cli_values)
        if cfg.command == "mesh" and cfg.out == RunConfig.out:
            cfg = RunConfig(**{**cfg.__dict__, "out": f"{cfg.family}_n{cfg.n}.txt"})
        return _COMMANDS[cfg.command](cfg, out)
    except (ConfigError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, SolverError, DegenerateElementError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
