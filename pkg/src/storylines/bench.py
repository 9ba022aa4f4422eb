"""Benchmark harness: instance x algorithm x seed grids into diffable CSV.

A manifest is a JSON object::

    {
      "instances": ["a.json", "b.json"],
      "algorithms": [
        {"name": "plo", "formulation": "plo", "sbc": true, "init": true, "rnd": true},
        {"name": "lin-nosbc", "formulation": "lin", "sbc": false}
      ],
      "seeds": [0, 1, 2, 3, 4],
      "time_limit": 60,
      "jobs": 1
    }

Every run yields one CSV row.  The summary selects, per instance and
algorithm, the seed with the median runtime; an instance counts as solved
when the majority of its seeds finished optimally.  Pairwise speedups are
geometric means of runtime ratios over the instances both algorithms
solved.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .fileio import ParseError, parse_instance
from .solver import SolveOptions, solve_exact

RUN_COLUMNS = (
    "instance",
    "algorithm",
    "formulation",
    "sbc",
    "init",
    "rnd",
    "seed",
    "status",
    "crossings",
    "bound",
    "time",
    "separation_rounds",
    "lop_added",
)

MEDIAN_COLUMNS = RUN_COLUMNS + ("solved_majority",)

SPEEDUP_COLUMNS = ("algorithm_a", "algorithm_b", "common_solved", "geomean_time_a_over_b")


def _algo_fields(algo: dict) -> dict:
    return {
        "name": str(algo.get("name") or algo.get("formulation", "plo")),
        "formulation": str(algo.get("formulation", "plo")),
        "sbc": bool(algo.get("sbc", True)),
        "init": bool(algo.get("init", True)),
        "rnd": bool(algo.get("rnd", True)),
    }


def run_single(instance_path: str, algo: dict, seed: int, time_limit: float, backend: str = "auto") -> dict:
    """One benchmark run; errors become rows so partial results survive."""
    fields = _algo_fields(algo)
    row = {
        "instance": Path(instance_path).name,
        "algorithm": fields["name"],
        "formulation": fields["formulation"],
        "sbc": int(fields["sbc"]),
        "init": int(fields["init"]),
        "rnd": int(fields["rnd"]),
        "seed": seed,
        "status": "error",
        "crossings": "",
        "bound": "",
        "time": "",
        "separation_rounds": "",
        "lop_added": "",
    }
    try:
        inst = parse_instance(instance_path)
    except (OSError, ParseError):
        return row
    opts = SolveOptions(
        sbc=fields["sbc"],
        init=fields["init"],
        rnd=fields["rnd"],
        time_limit=time_limit,
        seed=seed,
        backend=backend,
    )
    _, report = solve_exact(inst, fields["formulation"], opts)
    row.update(
        status=report.status,
        crossings=report.best_crossings,
        bound=f"{report.bound:.6f}",
        time=f"{report.wall_time:.6f}",
        separation_rounds=report.separation_rounds,
        lop_added=report.lop_added,
    )
    return row


def run_manifest(manifest: dict, base_dir: Path) -> list[dict]:
    instances = [str(base_dir / p) for p in manifest.get("instances", [])]
    algorithms = [_algo_fields(a) for a in manifest.get("algorithms", [])]
    seeds = list(manifest.get("seeds", [0]))
    time_limit = float(manifest.get("time_limit", 3600.0))
    backend = str(manifest.get("backend", "auto"))
    jobs = int(manifest.get("jobs", 1))

    tasks = [
        (path, algo, seed, time_limit, backend)
        for path in instances
        for algo in algorithms
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_single, *zip(*tasks))) if tasks else []
    else:
        rows = [run_single(*task) for task in tasks]
    rows.sort(key=lambda r: (r["instance"], r["algorithm"], r["seed"]))
    return rows


def median_rows(rows: list[dict]) -> list[dict]:
    """Per (instance, algorithm): the run with the median time, plus solved flag."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["instance"], row["algorithm"]), []).append(row)
    out = []
    for key in sorted(groups):
        runs = groups[key]
        finished = [r for r in runs if r["status"] in ("optimal", "feasible-timeout")]
        solved = sum(1 for r in runs if r["status"] == "optimal") * 2 > len(runs)
        pick_from = finished or runs
        pick = sorted(pick_from, key=lambda r: float(r["time"] or "inf"))[len(pick_from) // 2]
        row = dict(pick)
        row["solved_majority"] = int(solved)
        out.append(row)
    return out


def speedup_rows(medians: list[dict]) -> list[dict]:
    """Geometric-mean runtime ratios over commonly solved instances."""
    algos = sorted({r["algorithm"] for r in medians})
    per_algo: dict[str, dict[str, dict]] = {a: {} for a in algos}
    for row in medians:
        per_algo[row["algorithm"]][row["instance"]] = row
    out = []
    for a in algos:
        for b in algos:
            if a == b:
                continue
            ratios = []
            for instance, row_a in per_algo[a].items():
                row_b = per_algo[b].get(instance)
                if row_b is None:
                    continue
                if row_a["solved_majority"] and row_b["solved_majority"]:
                    ta = max(float(row_a["time"]), 1e-9)
                    tb = max(float(row_b["time"]), 1e-9)
                    ratios.append(math.log(ta / tb))
            out.append(
                {
                    "algorithm_a": a,
                    "algorithm_b": b,
                    "common_solved": len(ratios),
                    "geomean_time_a_over_b": f"{math.exp(sum(ratios) / len(ratios)):.6f}"
                    if ratios
                    else "",
                }
            )
    return out


def _write_csv(path: str | Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def run_bench(
    manifest_path: str | Path,
    out_csv: str | Path,
    summary_csv: str | Path | None = None,
) -> tuple[list[dict], list[dict]]:
    """Execute a manifest; write the run CSV and an optional summary CSV."""
    path = Path(manifest_path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid manifest JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    rows = run_manifest(manifest, path.parent)
    _write_csv(out_csv, RUN_COLUMNS, rows)
    medians = median_rows(rows)
    speedups = speedup_rows(medians)
    if summary_csv is not None:
        _write_csv(summary_csv, MEDIAN_COLUMNS, medians)
        summary_path = Path(summary_csv)
        pair_path = summary_path.with_name(summary_path.stem + "_speedups" + summary_path.suffix)
        _write_csv(pair_path, SPEEDUP_COLUMNS, speedups)
    return rows, speedups
