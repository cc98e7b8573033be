"""Command line front end: ``run``, ``sweep``, ``decay-study`` and ``compare-collision``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .adaptive_solver import run
from .config import PRESETS, RunConfig, build_config, load_config_file
from .diagnostics import cached_reference, compare_collision, detail_decay_study, epsilon_sweep
from .dyadic_mesh import MAX_LEVEL

logger = logging.getLogger("mrlbm")

DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5)
COLLISION_EPSILONS = (1e-4, 1e-5, 1e-6, 1e-7)


def fmt(value) -> str:
    """Fixed CSV formatting: integers as is, floats in 12-digit scientific notation, ``None`` empty."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.11e}"


def write_csv(path: Path, header, rows, footer=()) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        for line in footer:
            fh.write(f"# {line}\n")
    return path


def errors_rows(report, q: int):
    for n in range(report.n_steps + 1):
        e = list(report.e[n]) if report.e is not None else [None] * q
        E = list(report.E[n]) if report.E is not None else [None] * q
        yield [n, report.t[n], *e, *E, report.compression[n], int(report.leaves[n])]


def solution_rows(report):
    state = report.final_state
    tree = state.tree
    g = tree.geometry
    js, ks = tree.leaf_arrays
    moments = state.spec.conserved(state.field.values)
    for j, k, m in zip(js, ks, moments):
        width = (g.b - g.a) / g.n_cells(int(j))
        yield [int(j), int(k), g.a + (k + 0.5) * width, width, *m]


def sweep_rows(result):
    for eps, e, c in zip(result.epsilons, result.e_final, result.compression_final):
        yield [eps, *e, c]


def slope_footer(result) -> list[str]:
    return ["slope " + " ".join(f"h{h}={fmt(s)}" for h, s in enumerate(result.slopes))]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(cfg: RunConfig, out: Path) -> int:
    report = run(cfg, reference=cached_reference(cfg))
    q = report.e.shape[1]
    header = ["n", "t", *(f"e_h{h}" for h in range(q)), *(f"E_h{h}" for h in range(q)), "compression", "leaves"]
    write_csv(out / "errors.csv", header, errors_rows(report, q))
    write_csv(out / "solution.csv", ["j", "k", "x_center", "width", *(f"m{h}" for h in range(q))],
              solution_rows(report))
    print(f"steps            {report.n_steps}")
    print(f"e_final          {' '.join(fmt(x) for x in report.e_final)}")
    if report.E is not None:
        print(f"E_final          {' '.join(fmt(x) for x in report.E_final)}")
        print(f"E/e              {' '.join(fmt(x) for x in report.ratio_final)}")
    print(f"compression      {report.compression[-1]:.4f}%")
    print(f"leaves           {int(report.leaves[-1])}")
    print(f"adaptive==reference {str(report.adaptive_equals_reference).lower()}")
    print(f"wrote {out / 'errors.csv'} and {out / 'solution.csv'}")
    return 0


def _sweep_header(q: int) -> list[str]:
    return ["epsilon", *(f"e_final_h{h}" for h in range(q)), "compression_final"]


def cmd_sweep(cfg: RunConfig, out: Path, epsilons, s_values, workers) -> int:
    s_values = s_values or [cfg.s]
    for s in s_values:
        c = cfg.replace(s=float(s)).validate()
        result = epsilon_sweep(c, epsilons, workers)
        name = "sweep.csv" if len(s_values) == 1 else f"sweep_s{float(s):g}.csv"
        path = write_csv(out / name, _sweep_header(result.e_final.shape[1]), sweep_rows(result), slope_footer(result))
        print(f"s={float(s):g}: {slope_footer(result)[0]} -> {path}")
    return 0


def cmd_decay_study(fields, gamma: int, min_level: int, max_level: int, out: Path) -> int:
    rows = []
    for field in fields:
        for r in detail_decay_study(field, gamma, min_level, max_level):
            rows.append([field, r.level, r.detail, None if np.isnan(r.ratio) else r.ratio])
    write_csv(out / "decay.csv", ["field", "level", "detail", "ratio"], rows)
    print(f"{'field':>5} {'j':>3} {'max detail':>14} {'ratio':>7}")
    for field, j, d, ratio in rows:
        print(f"{field:>5} {j:>3} {d:>14.6e} {'' if ratio is None else f'{ratio:.2f}':>7}")
    return 0


def cmd_compare_collision(cfg: RunConfig, out: Path, epsilons, workers) -> int:
    results = compare_collision(cfg, epsilons, workers)
    for mode, result in results.items():
        path = write_csv(out / f"sweep_{mode}.csv", _sweep_header(result.e_final.shape[1]), sweep_rows(result),
                         slope_footer(result))
        print(f"{mode:>13}: e_final_h0 " + " ".join(fmt(x) for x in result.e_final[:, 0]) + f" -> {path}")
    return 0


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value file, applied after the preset")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--scheme", choices=("d1q2", "d1q3", "d1q5", "euler"))
    p.add_argument("--flux", choices=("advection", "burgers"))
    p.add_argument("--datum")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--s", type=float, help="relaxation rate of the first non-conserved moment")
    p.add_argument("--mu-bar", dest="mu_bar", help="regularity guess, a number or 'inf'")
    p.add_argument("--gamma", type=int)
    p.add_argument("--min-level", dest="min_level", type=int)
    p.add_argument("--max-level", dest="max_level", type=int)
    p.add_argument("--root-cells", dest="root_cells", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--g", type=float, help="gravity for shallow water")
    p.add_argument("--collision", choices=("leaves", "reconstructed"))
    p.add_argument("--boundary", choices=("copy", "periodic"))
    p.add_argument("--T", type=float)
    p.add_argument("--out", type=Path, default=Path("out"))


_CONFIG_KEYS = ("preset", "scheme", "flux", "datum", "epsilon", "s", "mu_bar", "gamma", "min_level", "max_level",
                "root_cells", "lam", "g", "collision", "boundary", "T")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrlbm", description="Adaptive multiresolution lattice Boltzmann runs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one adaptive run; writes errors.csv and solution.csv")
    _config_flags(p)

    p = sub.add_parser("sweep", help="threshold sweep; writes sweep.csv")
    _config_flags(p)
    p.add_argument("--eps", type=float, nargs="+", default=list(DEFAULT_EPSILONS))
    p.add_argument("--s-list", dest="s_list", type=float, nargs="+")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("decay-study", help="largest detail per level for the regularity probes")
    p.add_argument("--field", type=int, nargs="+", default=[0, 1, 2, 3], choices=(0, 1, 2, 3))
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--min-level", dest="min_level", type=int, default=2)
    p.add_argument("--max-level", dest="max_level", type=int, default=17)
    p.add_argument("--out", type=Path, default=Path("out"))

    p = sub.add_parser("compare-collision", help="leaves against reconstructed collision over a sweep")
    _config_flags(p)
    p.set_defaults(preset="V")
    p.add_argument("--eps", type=float, nargs="+", default=list(COLLISION_EPSILONS))
    p.add_argument("--workers", type=int)
    return parser


def config_from_args(args) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS}
    if "preset" in file_values and overrides["preset"] is None:
        overrides.pop("preset")
    return build_config(file_values, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "decay-study":
            if not 0 <= args.min_level < args.max_level <= MAX_LEVEL:
                raise ValueError(f"levels must satisfy 0 <= min_level < max_level <= {MAX_LEVEL}")
            return cmd_decay_study(args.field, args.gamma, args.min_level, args.max_level, args.out)
        cfg = config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.eps, args.s_list, args.workers)
        return cmd_compare_collision(cfg, args.out, args.eps, args.workers)
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"mrlbm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
