"""Study orchestration and the command-line surface.

A study sweeps refinement levels of one domain/degree configuration,
solves each level, measures errors against the manufactured solution of
the domain, and emits one row per level as CSV and/or JSON.  Apart from
wall-clock times the output is byte-reproducible.
"""

import argparse
import json
import sys
import time
import warnings
from dataclasses import dataclass, field
from math import ceil
from pathlib import Path

import numpy as np

from bdmdarcy import mesh as meshmod
from bdmdarcy.analysis import case_circle, case_ring, compute_eoc, error_norms
from bdmdarcy.assembly import Assembler
from bdmdarcy.solver import postprocess_pressure, solve

__all__ = ["StudyConfig", "parse_config", "run_study", "export_fields", "main"]

CSV_COLUMNS = [
    "level",
    "h",
    "n_u",
    "n_p",
    "E_u_hdiv",
    "E_penalty",
    "E_p",
    "E_total",
    "eoc_total",
    "residual",
    "wall_time",
]

_DOMAINS = ("circle", "ring")
_MODES = ("corrected", "uncorrected-strong")


class ConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    domain: str = "circle"
    k: int = 1
    m: int = None  # defaults to k
    mode: str = "corrected"
    level_first: int = 1
    level_last: int = 4
    quad_volume: int = None  # override of the stiffness quadrature degree
    quad_boundary: int = None  # override of the boundary rule point count
    solver: str = "auto"
    report: str = None
    json_path: str = None
    export_fields: str = None
    dump_system: str = None
    seed: int = 0
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    r_inner: float = 0.5
    r_outer: float = 1.0
    warnings: list = field(default_factory=list)


_KEYS = {
    "domain": str,
    "k": int,
    "m": int,
    "mode": str,
    "levels": str,
    "quad_volume": int,
    "quad_boundary": int,
    "solver": str,
    "report": str,
    "json": str,
    "export_fields": str,
    "dump_system": str,
    "seed": int,
    "center": str,
    "radius": float,
    "r_inner": float,
    "r_outer": float,
}


def _read_config_file(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _KEYS[key](value.strip())
    return values


def _parse_levels(text):
    if ".." not in text:
        raise ConfigError("levels must be given as A..B")
    first, _, last = text.partition("..")
    try:
        first, last = int(first), int(last)
    except ValueError as exc:
        raise ConfigError(f"bad level range {text!r}") from exc
    if first < 0 or last < first:
        raise ConfigError("levels must satisfy 0 <= A <= B")
    return first, last


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bdmdarcy",
        description="Convergence studies for the boundary-corrected mixed "
        "Darcy discretization on curved domains.",
    )
    parser.add_argument("config", nargs="?", help="plain-text 'key = value' config file")
    parser.add_argument("--domain", choices=_DOMAINS)
    parser.add_argument("--k", type=int, help="velocity polynomial degree (>= 1)")
    parser.add_argument("--m", type=int, help="Taylor extension order (default: k)")
    parser.add_argument("--mode", choices=_MODES)
    parser.add_argument("--levels", help="refinement range A..B (default 1..4)")
    parser.add_argument("--report", help="CSV output path")
    parser.add_argument("--json", dest="json_path", help="JSON output path")
    parser.add_argument("--export-fields", dest="export_fields", help="directory for field files")
    parser.add_argument("--dump-system", dest="dump_system", help="directory for matrix dumps")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quad-volume", dest="quad_volume", type=int)
    parser.add_argument("--quad-boundary", dest="quad_boundary", type=int)
    parser.add_argument("--solver", choices=("auto", "direct", "iterative"))
    parser.add_argument("--radius", type=float)
    parser.add_argument("--r-inner", dest="r_inner", type=float)
    parser.add_argument("--r-outer", dest="r_outer", type=float)
    return parser


def parse_config(argv=None, file_values=None):
    """Merge config-file values and command-line flags (flags win) into a
    validated StudyConfig."""
    parser = build_parser()
    args = parser.parse_args(argv)
    values = dict(file_values or {})
    if args.config:
        values.update(_read_config_file(args.config))
    for key in (
        "domain", "k", "m", "mode", "report", "json_path", "export_fields",
        "dump_system", "seed", "quad_volume", "quad_boundary", "solver",
        "radius", "r_inner", "r_outer",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key if key != "json_path" else "json"] = flag
    if args.levels is not None:
        values["levels"] = args.levels

    cfg = StudyConfig()
    cfg.domain = values.get("domain", cfg.domain)
    if cfg.domain not in _DOMAINS:
        raise ConfigError(f"domain must be one of {_DOMAINS}")
    cfg.k = int(values.get("k", cfg.k))
    if cfg.k < 1:
        raise ConfigError("k must be at least 1")
    cfg.m = int(values["m"]) if "m" in values and values["m"] is not None else cfg.k
    if cfg.m < 0 or cfg.m > cfg.k:
        raise ConfigError("m must satisfy 0 <= m <= k")
    # advisory lower bound for optimal-order accuracy
    lower = max(0, ceil(cfg.k / 2.0 - 3.0 / 4.0))
    if cfg.m < lower:
        msg = (
            f"m = {cfg.m} is below the optimal-accuracy bound {lower} for "
            f"k = {cfg.k}; the study may converge suboptimally"
        )
        cfg.warnings.append(msg)
        warnings.warn(msg)
    cfg.mode = values.get("mode", cfg.mode)
    if cfg.mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}")
    if cfg.mode == "uncorrected-strong" and cfg.domain != "circle":
        raise ConfigError(
            "uncorrected-strong mode needs homogeneous Neumann data; only the "
            "circle case provides it"
        )
    if "levels" in values:
        cfg.level_first, cfg.level_last = _parse_levels(values["levels"])
    for key, attr in (
        ("report", "report"), ("json", "json_path"), ("export_fields", "export_fields"),
        ("dump_system", "dump_system"), ("seed", "seed"), ("quad_volume", "quad_volume"),
        ("quad_boundary", "quad_boundary"), ("solver", "solver"), ("radius", "radius"),
        ("r_inner", "r_inner"), ("r_outer", "r_outer"),
    ):
        if key in values and values[key] is not None:
            setattr(cfg, attr, values[key])
    if "center" in values:
        parts = [float(x) for x in str(values["center"]).replace(",", " ").split()]
        if len(parts) != 2:
            raise ConfigError("center must be two numbers")
        cfg.center = tuple(parts)
    return cfg


def _domain_curves(cfg):
    if cfg.domain == "circle":
        return meshmod.disk_domain(center=cfg.center, radius=cfg.radius)
    return meshmod.ring_domain(center=cfg.center, r_inner=cfg.r_inner, r_outer=cfg.r_outer)


def _domain_case(cfg):
    if cfg.domain == "circle":
        case = case_circle()
        if cfg.center != (0.0, 0.0) or cfg.radius != 1.0:
            # the manufactured flux is homogeneous only on the unit circle
            case.homogeneous_neumann = False
        return case
    return case_ring()


def run_study(cfg, progress=None):
    """Run one study; returns the list of per-level row dicts."""
    curves = _domain_curves(cfg)
    case = _domain_case(cfg)
    mesh = meshmod.coarse_mesh(curves)
    for _ in range(cfg.level_first):
        mesh = meshmod.refine_project(mesh, curves)
    rows = []
    errors, hs = [], []
    level = cfg.level_first
    while level <= cfg.level_last:
        t0 = time.perf_counter()
        asm = Assembler(
            mesh, curves, cfg.k, m=cfg.m, mode=cfg.mode,
            quad_volume=cfg.quad_volume, quad_boundary=cfg.quad_boundary,
        )
        system = asm.system(case)
        u, p, lam, rep = solve(system, method=cfg.solver)
        if not rep.success:
            raise RuntimeError(
                f"solve failed at level {level}: residual {rep.residual:.3e}"
            )
        p = postprocess_pressure(p, asm)
        err = error_norms(u, p, case, asm)
        errors.append(err.e_total)
        hs.append(err.h)
        eoc = compute_eoc(errors[-2:], hs[-2:])[0] if len(errors) >= 2 else None
        row = {
            "level": level,
            "h": err.h,
            "n_u": asm.dofmap.n_u,
            "n_p": asm.dofmap.n_p,
            "E_u_hdiv": err.e_u_hdiv,
            "E_penalty": err.e_penalty,
            "E_p": err.e_p,
            "E_total": err.e_total,
            "eoc_total": eoc,
            "residual": rep.residual,
            "wall_time": time.perf_counter() - t0,
        }
        rows.append(row)
        if progress:
            progress(row)
        if cfg.export_fields:
            outdir = Path(cfg.export_fields)
            outdir.mkdir(parents=True, exist_ok=True)
            export_fields(mesh, asm, u, p, outdir / f"fields_level{level}.vtk")
        if cfg.dump_system:
            outdir = Path(cfg.dump_system)
            outdir.mkdir(parents=True, exist_ok=True)
            dump_system(system, outdir / f"system_level{level}.txt")
        if level < cfg.level_last:
            mesh = meshmod.refine_project(mesh, curves)
        level += 1
    return rows


def _format_value(key, value):
    if value is None:
        return ""
    if key == "level" or key.startswith("n_"):
        return str(int(value))
    return f"{value:.17g}"


def write_csv(rows, path):
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_value(c, row[c]) for c in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(rows, cfg, path):
    payload = {
        "config": {
            "domain": cfg.domain,
            "k": cfg.k,
            "m": cfg.m,
            "mode": cfg.mode,
            "levels": [cfg.level_first, cfg.level_last],
            "seed": cfg.seed,
        },
        "rows": [{c: row[c] for c in CSV_COLUMNS} for row in rows],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def export_fields(mesh, assembler, u, p, path):
    """Legacy ASCII unstructured-grid file: points, triangle cells, cellwise
    pressure means, and vertex-sampled velocity vectors."""
    w = assembler.local_coeffs(u)
    tables = assembler.tables
    # velocity at each vertex, sampled from its lowest-index adjacent triangle
    owner = np.full(mesh.n_vertices, -1, dtype=np.int64)
    for t in range(mesh.n_triangles - 1, -1, -1):
        owner[mesh.triangles[t]] = t
    velocity = np.zeros((mesh.n_vertices, 2))
    for v in range(mesh.n_vertices):
        t = owner[v]
        velocity[v] = assembler.local_field(t, w[t]).eval(mesh.vertices[v])[0]
    p_loc = p.reshape(mesh.n_triangles, -1)
    cell_mean = p_loc[:, 0] * tables.p_const_value

    lines = [
        "# vtk DataFile Version 3.0",
        "bdmdarcy fields",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for v in mesh.vertices:
        lines.append(f"{v[0]:.17g} {v[1]:.17g} 0")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    for t in mesh.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend(["5"] * mesh.n_triangles)
    lines.append(f"CELL_DATA {mesh.n_triangles}")
    lines.append("SCALARS pressure_mean double 1")
    lines.append("LOOKUP_TABLE default")
    for val in cell_mean:
        lines.append(f"{val:.17g}")
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append("VECTORS velocity double")
    for vel in velocity:
        lines.append(f"{vel[0]:.17g} {vel[1]:.17g} 0")
    Path(path).write_text("\n".join(lines) + "\n")


def dump_system(system, path, max_entries=20_000_000):
    """Coordinate-format text dump (row col value) of the full operator."""
    mat = system.operator_coo(max_entries=max_entries)
    order = np.lexsort((mat.col, mat.row))
    lines = [f"{mat.shape[0]} {mat.shape[1]} {mat.nnz}"]
    for r, c, v in zip(mat.row[order], mat.col[order], mat.data[order]):
        lines.append(f"{r} {c} {v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def main(argv=None):
    try:
        cfg = parse_config(argv)
    except (ConfigError, SystemExit) as exc:
        if isinstance(exc, SystemExit):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 2

    def progress(row):
        eoc = "  --" if row["eoc_total"] is None else f"{row['eoc_total']:5.2f}"
        print(
            f"level {row['level']}  h={row['h']:.5f}  n_u={row['n_u']:7d}  "
            f"E_total={row['E_total']:.6e}  eoc={eoc}  "
            f"res={row['residual']:.1e}  {row['wall_time']:.1f}s",
            flush=True,
        )

    print(
        f"domain={cfg.domain} k={cfg.k} m={cfg.m} mode={cfg.mode} "
        f"levels={cfg.level_first}..{cfg.level_last}",
        flush=True,
    )
    try:
        rows = run_study(cfg, progress=progress)
    except Exception as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return 1
    if cfg.report:
        write_csv(rows, cfg.report)
    if cfg.json_path:
        write_json(rows, cfg, cfg.json_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
