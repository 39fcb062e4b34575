"""Batch runner for estimator sweeps and the deterministic verification suite.

    python -m positivity_lab --config sweep.json --out results/
    python -m positivity_lab --demo --out demo/
    python -m positivity_lab --verify

Exit codes: 0 success, 1 invalid configuration, 2 failed check, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .disorder_field import BACKENDS, FieldSpec
from .estimators import (
    CSV_FIELDS,
    EstimateReport,
    TestFunction,
    estimate_concentration,
    estimate_fn,
    estimate_gg_residual,
    estimate_lemma1,
    estimate_positivity,
)
from .sphere_measure import (
    DiscreteMeasure,
    all_overlaps_leq,
    antipodal,
    point_mass,
    random_measure,
    simplex,
)

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RUNTIME = 0, 1, 2, 3

ESTIMATORS = ("positivity", "gg_residual", "fn", "lemma1", "concentration")

DEMO_CONFIG = {
    "measure": {"generator": "antipodal", "N": 8},
    "v_grid": [0, 1, 2, 5, 10, 20],
    "eps_grid": [0.2],
    "n_grid": [2],
    "p_max": 12,
    "backend": "covariance",
    "reps": 64,
    "field_draws": 256,
    "seed": 0,
    "estimators": ["positivity", "gg_residual"],
    "psi": "monomial:1",
    "output": "demo_results",
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class SweepConfig:
    measure: DiscreteMeasure
    measure_source: dict
    v_grid: list[float]
    eps_grid: list[float]
    n_grid: list[int]
    p_max: int = 12
    backend: str = "covariance"
    jitter: float = 1e-10
    reps: int = 64
    field_draws: int = 256
    seed: int = 0
    output: str = "results"
    estimators: list[str] = field(default_factory=lambda: ["positivity"])
    psi: str = "monomial:1"
    lemma_p: int = 1
    workers: int = 1

    def echo(self) -> dict:
        return {
            "measure": self.measure_source, "v_grid": self.v_grid, "eps_grid": self.eps_grid,
            "n_grid": self.n_grid, "p_max": self.p_max, "backend": self.backend,
            "jitter": self.jitter, "reps": self.reps, "field_draws": self.field_draws,
            "seed": self.seed, "output": self.output, "estimators": self.estimators,
            "psi": self.psi, "lemma_p": self.lemma_p,
        }


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _build_measure(src, base_dir: Path | None) -> DiscreteMeasure:
    if not isinstance(src, dict):
        raise ValueError("measure must be an object")
    if "inline" in src:
        return DiscreteMeasure.from_dict(src["inline"])
    if "atoms" in src:
        return DiscreteMeasure.from_dict(src)
    if "file" in src:
        path = Path(src["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return DiscreteMeasure.from_json(path.read_text())
    gen = src.get("generator")
    if gen == "point_mass":
        return point_mass(int(src.get("N", 1)))
    if gen == "antipodal":
        return antipodal(int(src["N"]))
    if gen == "simplex":
        return simplex(int(src["N"]))
    if gen == "random":
        return random_measure(int(src["N"]), int(src["M"]), int(src.get("seed", 0)))
    raise ValueError(f"unknown measure source {src!r}")


def parse_config(doc: dict, text: str | None = None, base_dir: Path | None = None) -> SweepConfig:
    """Validate a config document; errors carry the line of the offending key."""

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", _line_of(text, key))

    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", 1)
    known = set(SweepConfig.__dataclass_fields__) - {"measure_source", "measure"} | {"measure"}
    for key in doc:
        if key not in known:
            fail(key, "unknown key")
    if "measure" not in doc:
        raise ConfigError("measure: missing", None)
    try:
        measure = _build_measure(doc["measure"], base_dir)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        fail("measure", str(exc))

    def grid(key, conv, check, default=None):
        vals = doc.get(key, default)
        if not isinstance(vals, list) or not vals:
            fail(key, "must be a nonempty list")
        try:
            vals = [conv(v) for v in vals]
        except (TypeError, ValueError):
            fail(key, "non-numeric entry")
        for v in vals:
            if not check(v):
                fail(key, f"entry {v!r} out of range")
        return vals

    v_grid = grid("v_grid", float, lambda v: v >= 0 and np.isfinite(v))
    eps_grid = grid("eps_grid", float, lambda e: 0 < e < 1, [0.5])
    n_grid = grid("n_grid", int, lambda n: n >= 1, [2])
    estimators = doc.get("estimators", ["positivity"])
    if not isinstance(estimators, list) or not estimators:
        fail("estimators", "must be a nonempty list")
    for e in estimators:
        if e not in ESTIMATORS:
            fail("estimators", f"unknown estimator {e!r}; choose from {ESTIMATORS}")
    reps = doc.get("reps", 64)
    if not isinstance(reps, int) or reps < 2:
        fail("reps", "must be an integer >= 2")
    field_draws = doc.get("field_draws", 256)
    if not isinstance(field_draws, int) or field_draws < 1:
        fail("field_draws", "must be a positive integer")
    if "concentration" in estimators and field_draws < 100:
        fail("field_draws", "concentration needs at least 100 field draws")
    backend = doc.get("backend", "covariance")
    if backend not in BACKENDS:
        fail("backend", f"must be one of {BACKENDS}")
    try:
        FieldSpec(0.0, doc.get("p_max", 12), backend, doc.get("jitter", 1e-10))
    except (ValueError, TypeError) as exc:
        fail("p_max" if "p_max" in str(exc) else "jitter", str(exc))
    psi = doc.get("psi", "monomial:1")
    try:
        _parse_psi(psi, eps_grid[0])
    except ValueError as exc:
        fail("psi", str(exc))
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        fail("seed", "must be a nonnegative integer")
    lemma_p = doc.get("lemma_p", 1)
    if not isinstance(lemma_p, int) or not 1 <= lemma_p <= doc.get("p_max", 12):
        fail("lemma_p", "must be an integer in 1..p_max")
    return SweepConfig(
        measure=measure, measure_source=doc["measure"], v_grid=v_grid, eps_grid=eps_grid,
        n_grid=n_grid, p_max=int(doc.get("p_max", 12)), backend=backend,
        jitter=float(doc.get("jitter", 1e-10)), reps=reps, field_draws=field_draws, seed=seed,
        output=str(doc.get("output", "results")), estimators=list(estimators), psi=psi,
        lemma_p=lemma_p, workers=int(doc.get("workers", 1)),
    )


def load_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return parse_config(doc, text, path.parent)


def _parse_psi(text: str, eps: float) -> TestFunction:
    kind, _, arg = text.partition(":")
    if kind == "monomial":
        return TestFunction.monomial(int(arg or 1))
    if kind == "indicator":
        return TestFunction.indicator_leq(float(arg) if arg else eps)
    if kind == "smoothed":
        return TestFunction.smoothed_indicator(float(arg) if arg else eps)
    raise ValueError(f"unknown test function {text!r}")


def cell_seed(master: int, estimator: str, *indices: int) -> int:
    """Deterministic per-cell seed; independent of the v index so v-grids share disorder."""
    ss = np.random.SeedSequence(master, spawn_key=(zlib.crc32(estimator.encode()), *indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _cells(cfg: SweepConfig) -> list[tuple[str, float, float | None, int | None, int]]:
    """Grid cells in output order: (estimator, v, eps, n, seed)."""
    out = []
    for name in cfg.estimators:
        if name == "positivity":
            for (ie, eps), v in product(enumerate(cfg.eps_grid), cfg.v_grid):
                out.append((name, v, eps, 2, cell_seed(cfg.seed, name, ie)))
        elif name in ("gg_residual", "fn"):
            for (ie, eps), (i_n, n), v in product(enumerate(cfg.eps_grid), enumerate(cfg.n_grid), cfg.v_grid):
                out.append((name, v, eps, n, cell_seed(cfg.seed, name, ie, i_n)))
        else:
            for v in cfg.v_grid:
                out.append((name, v, None, None, cell_seed(cfg.seed, name)))
    return out


def _run_cell(cfg: SweepConfig, cell) -> EstimateReport:
    name, v, eps, n, seed = cell
    spec = FieldSpec(v, cfg.p_max, cfg.backend, cfg.jitter)
    nu = cfg.measure
    try:
        if name == "positivity":
            return estimate_positivity(nu, spec, eps, cfg.reps, cfg.field_draws, seed)
        if name == "fn":
            return estimate_fn(nu, spec, n, eps, cfg.reps, cfg.field_draws, seed)
        if name == "gg_residual":
            report = estimate_gg_residual(nu, spec, n, all_overlaps_leq(eps, n),
                                          _parse_psi(cfg.psi, eps), cfg.reps, cfg.field_draws, seed)
            report.meta["epsilon"] = eps
            return report
        if name == "lemma1":
            return estimate_lemma1(nu, spec, cfg.lemma_p, cfg.reps, cfg.field_draws, seed)
        return estimate_concentration(nu, spec, cfg.reps, cfg.field_draws, seed)
    except Exception as exc:  # one bad cell must not sink the sweep
        meta = {"v": v, "n": n, "epsilon": eps, "p_max": cfg.p_max, "backend": cfg.backend,
                "error": f"{type(exc).__name__}: {exc}"}
        return EstimateReport(name, float("nan"), float("nan"), cfg.reps, seed, "exact", meta, "error")


def reports_to_csv(reports: Iterable[EstimateReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in reports:
        writer.writerow(r.to_csv_cells())
    return buf.getvalue()


def reports_from_csv(text: str) -> list[EstimateReport]:
    return [EstimateReport.from_row(row) for row in csv.DictReader(io.StringIO(text))]


def run_sweep(cfg: SweepConfig, out_dir: str | Path | None = None, workers: int | None = None) -> list[EstimateReport]:
    """Evaluate every grid cell and write ``results.csv`` and ``manifest.json``.

    Rows come out in grid order whatever the completion order of the workers.
    """
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    cells = _cells(cfg)
    start = time.perf_counter()
    n_workers = max(1, workers or cfg.workers)
    if n_workers == 1:
        reports = [_run_cell(cfg, c) for c in cells]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            reports = list(pool.map(lambda c: _run_cell(cfg, c), cells))
    (out / "results.csv").write_text(reports_to_csv(reports))
    manifest = {
        "config": cfg.echo(),
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "rows": len(reports),
        "errors": sum(r.status != "ok" for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable))
    return reports


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# verification suite


Check = tuple[str, Callable[[], tuple[bool, str]]]


def default_checks() -> list[Check]:
    from . import suite

    return suite.deterministic_checks() + suite.zero_v_checks()


def verify_all(checks: Sequence[Check] | None = None, stream=None) -> int:
    """Run every check, print one line per check, return the exit status."""
    stream = stream or sys.stdout
    checks = default_checks() if checks is None else checks
    failed = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}", file=stream)
        if not ok:
            failed.append(name)
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed: {', '.join(failed)}", file=stream)
        return EXIT_CHECK
    print(f"all {len(checks)} checks passed", file=stream)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="positivity_lab", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="sweep configuration (JSON)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--workers", type=int, default=None, help="concurrent grid cells")
    p.add_argument("--demo", action="store_true", help="run the shipped demo sweep")
    p.add_argument("--verify", action="store_true", help="run the deterministic verification suite")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verify:
        return verify_all()
    try:
        if args.demo:
            cfg = parse_config(dict(DEMO_CONFIG))
        elif args.config:
            cfg = load_config(args.config)
        else:
            print("error: one of --config, --demo, --verify is required", file=sys.stderr)
            return EXIT_CONFIG
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed: must be nonnegative")
            cfg.seed = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        reports = run_sweep(cfg, args.out, args.workers)
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = Path(args.out or cfg.output)
    bad = sum(r.status != "ok" for r in reports)
    print(f"wrote {len(reports)} rows to {out / 'results.csv'} ({bad} errors)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
