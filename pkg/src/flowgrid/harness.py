"""Experiment orchestration: config files, the grid-comparison sweep, CSV.

The sweep reproduces the benchmark protocol: a low-rank Gaussian target
(mean 8 on every coordinate, unit variance on the first k), exact-oracle
sampling stopped at the grid's last interior time, and a classifier-TV
score against an independent reference batch drawn from the blurred target
``(1−δ)X₁ + δZ`` with the δ belonging to the grid under test.

Everything is a pure function of the :class:`ExperimentSpec`: cell seeds derive from
``(seed, d, N, sampler, grid)`` addresses, rows are written in spec order
regardless of the execution schedule, and float columns are serialized via
``repr`` — two runs of the same spec must produce byte-identical CSVs.
Wall-clock times are therefore kept out of the CSV; they live on the
returned rows and in the optional JSON manifest.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError
from .metrics import estimate_tv
from .rng import child_seed
from .samplers import ddim_rf, ddpm_sample, langevin_rf, rf_euler, stoc_rf
from .schedules import (
    TimeGrid,
    build_ddpm_schedule,
    build_uniform_grid,
    build_ushaped_grid,
    ddpm_induced_rf_grid,
)
from .targets import ExactOracle, Target, blur_samples, sample_target

__all__ = [
    "DeltaRule",
    "ExperimentSpec",
    "ResultRow",
    "SAMPLER_NAMES",
    "GRID_NAMES",
    "sampler_fits_grid",
    "run_fig2_experiment",
    "parse_config",
    "CSV_HEADER",
]

SAMPLER_NAMES = ("rf", "ddim-rf", "stoc-rf", "ddpm", "langevin")
GRID_NAMES = ("uniform", "ushaped", "ddpm-induced")
CSV_HEADER = "d,k,N,sampler,grid_kind,seed,tv,tv_stderr"

_DEFAULT_DIMS = (10, 50, 100, 200, 400, 800)
_DEFAULT_STEPS = (100, 200)
_DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class DeltaRule:
    """Terminal-gap rule for grids parameterized by δ.

    ``fixed=None`` selects min{1/N, 1/d} (the benchmark default); a number
    pins δ for every cell.
    """

    fixed: float | None = None

    def __post_init__(self) -> None:
        if self.fixed is not None and not 0.0 < self.fixed < 0.5:
            raise DomainError(f"fixed delta must lie in (0, 1/2); got {self.fixed!r}")

    def resolve(self, n_steps: int, dim: int) -> float:
        if self.fixed is not None:
            return self.fixed
        return min(1.0 / n_steps, 1.0 / dim)

    def describe(self) -> str:
        return "min(1/N,1/d)" if self.fixed is None else f"fixed({self.fixed:g})"


@dataclass(frozen=True)
class ExperimentSpec:
    """One grid-comparison sweep, fully determining its output."""

    dims: tuple[int, ...] = _DEFAULT_DIMS
    intrinsic_dim: int = 8
    n_steps: tuple[int, ...] = _DEFAULT_STEPS
    samplers: tuple[str, ...] = ("rf",)
    grids: tuple[str, ...] = ("uniform", "ushaped")
    num_samples: int = 2000
    seeds: tuple[int, ...] = _DEFAULT_SEEDS
    rounds: int = 10
    delta_rule: DeltaRule = DeltaRule()
    out: str = "fig2.csv"

    def __post_init__(self) -> None:
        for name, values in (
            ("dims", self.dims),
            ("n_steps", self.n_steps),
            ("samplers", self.samplers),
            ("grids", self.grids),
            ("seeds", self.seeds),
        ):
            if len(values) == 0:
                raise DomainError(f"{name} must be nonempty")
        if any(d < 1 for d in self.dims):
            raise DomainError("dimensions must be positive")
        if not 1 <= self.intrinsic_dim <= min(self.dims):
            raise DomainError(
                f"intrinsic_dim={self.intrinsic_dim} must lie in [1, min(dims)={min(self.dims)}]"
            )
        if any(n < 2 for n in self.n_steps):
            raise DomainError("each n_steps must be at least 2")
        unknown = [s for s in self.samplers if s not in SAMPLER_NAMES]
        if unknown:
            raise DomainError(f"unknown samplers {unknown}; choose from {SAMPLER_NAMES}")
        unknown = [g for g in self.grids if g not in GRID_NAMES]
        if unknown:
            raise DomainError(f"unknown grids {unknown}; choose from {GRID_NAMES}")
        if self.num_samples < 200:
            raise DomainError("num_samples must be at least 200 for the TV probe")
        if self.rounds < 1:
            raise DomainError("need at least one TV round")


@dataclass(frozen=True)
class ResultRow:
    """One sweep cell: a (d, N, sampler, grid, seed) combination scored once."""

    d: int
    k: int
    n_steps: int
    sampler: str
    grid_kind: str
    seed: int
    tv: float
    tv_stderr: float
    wall_ms: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.tv <= 1.0:
            raise DomainError(f"tv must lie in [0, 1]; got {self.tv!r}")
        if self.wall_ms <= 0.0:
            raise DomainError("wall_ms must be positive")

    def csv_line(self) -> str:
        return (
            f"{self.d},{self.k},{self.n_steps},{self.sampler},{self.grid_kind},"
            f"{self.seed},{self.tv!r},{self.tv_stderr!r}"
        )


def sampler_fits_grid(sampler: str, grid_kind: str) -> bool:
    """Whether the sampler can run on the grid kind.

    The plain flow integrator handles any grid; every other sampler needs
    t_0 > 0 (score evaluations or the chain's own schedule), which only the
    schedule-induced grid provides.
    """
    return sampler == "rf" or grid_kind == "ddpm-induced"


def _build_cell_grid(
    grid_kind: str, n_steps: int, dim: int, rule: DeltaRule
) -> tuple[TimeGrid, float]:
    """Grid plus the blur level δ its samples are scored against."""
    if grid_kind == "uniform":
        return build_uniform_grid(n_steps), rule.resolve(n_steps, dim)
    if grid_kind == "ushaped":
        delta = rule.resolve(n_steps, dim)
        return build_ushaped_grid(n_steps, delta), delta
    schedule = build_ddpm_schedule(n_steps)
    grid = ddpm_induced_rf_grid(schedule)
    return grid, grid.delta


def _run_cell(
    spec: ExperimentSpec,
    d: int,
    n_steps: int,
    sampler: str,
    grid_kind: str,
    seed: int,
    sampler_idx: int,
    grid_idx: int,
) -> ResultRow:
    start = time.perf_counter()
    target = Target.low_rank(d, spec.intrinsic_dim)
    oracle = ExactOracle(target)
    grid, blur_delta = _build_cell_grid(grid_kind, n_steps, d, spec.delta_rule)

    def cell_seed(role: int) -> int:
        return child_seed(seed, d, n_steps, sampler_idx, grid_idx, role)

    if sampler == "rf":
        batch = rf_euler(oracle, grid, spec.num_samples, cell_seed(0))
    elif sampler == "ddim-rf":
        batch = ddim_rf(oracle, grid, spec.num_samples, cell_seed(0))
    elif sampler == "stoc-rf":
        batch = stoc_rf(oracle, grid, spec.num_samples, cell_seed(0))
    elif sampler == "langevin":
        batch = langevin_rf(oracle, grid, spec.num_samples, cell_seed(0))
    elif sampler == "ddpm":
        batch = ddpm_sample(
            oracle, build_ddpm_schedule(n_steps), spec.num_samples, cell_seed(0)
        )
    else:  # pragma: no cover - spec validation rejects these
        raise DomainError(f"unknown sampler {sampler!r}")

    reference = blur_samples(
        sample_target(target, spec.num_samples, cell_seed(1)),
        blur_delta,
        cell_seed(2),
    )
    estimate = estimate_tv(batch, reference, rounds=spec.rounds, seed=cell_seed(3))
    wall_ms = (time.perf_counter() - start) * 1000.0
    return ResultRow(
        d=d,
        k=spec.intrinsic_dim,
        n_steps=n_steps,
        sampler=sampler,
        grid_kind=grid_kind,
        seed=seed,
        tv=estimate.value,
        tv_stderr=estimate.std_error,
        wall_ms=max(wall_ms, 1e-3),
    )


def _cells(spec: ExperimentSpec):
    for d in spec.dims:
        for n_steps in spec.n_steps:
            for sampler_idx, sampler in enumerate(spec.samplers):
                for grid_idx, grid_kind in enumerate(spec.grids):
                    if not sampler_fits_grid(sampler, grid_kind):
                        continue
                    for seed in spec.seeds:
                        yield d, n_steps, sampler, grid_kind, seed, sampler_idx, grid_idx


def _git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()


def run_fig2_experiment(
    spec: ExperimentSpec,
    *,
    threads: int = 1,
    write_manifest: bool = False,
) -> list[ResultRow]:
    """Run the sweep, streaming rows to ``spec.out`` as cells finish.

    Cells execute in parallel when ``threads > 1``, but rows always land in
    spec order, so the CSV is identical either way.  If a cell raises, the
    rows finished so far are already flushed, a marker row naming the cell
    and the exception type is appended (its tv column reads ``error``), and
    the exception propagates.

    With ``write_manifest=True`` a JSON file next to the CSV records the
    spec, the CSV's git-style blob hash, and per-cell wall times — the one
    place timing information is persisted.
    """
    if threads < 1:
        raise DomainError("need at least one worker thread")
    out_path = Path(spec.out)
    if out_path.parent and not out_path.parent.exists():
        raise DomainError(f"output directory {out_path.parent} does not exist")

    cells = list(_cells(spec))
    rows: list[ResultRow] = []
    total_start = time.perf_counter()
    with open(out_path, "w", encoding="utf-8") as sink:
        sink.write(CSV_HEADER + "\n")
        sink.flush()

        def finish(row: ResultRow) -> None:
            rows.append(row)
            sink.write(row.csv_line() + "\n")
            sink.flush()

        if threads == 1:
            for cell in cells:
                try:
                    finish(_run_cell(spec, *cell))
                except Exception as exc:
                    d, n_steps, sampler, grid_kind, seed = cell[:5]
                    sink.write(
                        f"{d},{spec.intrinsic_dim},{n_steps},{sampler},{grid_kind},"
                        f"{seed},error,{type(exc).__name__}\n"
                    )
                    raise
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_run_cell, spec, *cell) for cell in cells]
                for cell, future in zip(cells, futures):
                    try:
                        finish(future.result())
                    except Exception as exc:
                        d, n_steps, sampler, grid_kind, seed = cell[:5]
                        sink.write(
                            f"{d},{spec.intrinsic_dim},{n_steps},{sampler},{grid_kind},"
                            f"{seed},error,{type(exc).__name__}\n"
                        )
                        for pending in futures:
                            pending.cancel()
                        raise

    if write_manifest:
        manifest = {
            "spec": asdict(spec),
            "csv_blob_sha1": _git_blob_sha1(out_path.read_bytes()),
            "row_count": len(rows),
            "total_wall_ms": (time.perf_counter() - total_start) * 1000.0,
            "wall_ms_by_cell": {
                f"d={r.d},N={r.n_steps},{r.sampler},{r.grid_kind},seed={r.seed}": r.wall_ms
                for r in rows
            },
        }
        out_path.with_suffix(".json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return rows


# ---------------------------------------------------------------------------
# config files


def _fail(path: str, lineno: int, message: str) -> ParseError:
    return ParseError(f"{path}:{lineno}: {message}")


def _parse_lines(path: str | Path) -> list[tuple[int, str, str | None]]:
    """(lineno, key, value) triples; value None marks a bare block opener."""
    entries: list[tuple[int, str, str | None]] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            if line == "component":
                entries.append((lineno, "component", None))
                continue
            raise _fail(str(path), lineno, f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise _fail(str(path), lineno, "empty key")
        entries.append((lineno, key, value))
    return entries


def _to_int(path: str, lineno: int, key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise _fail(path, lineno, f"key '{key}' needs an integer, got {value!r}") from None


def _to_float(path: str, lineno: int, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise _fail(path, lineno, f"key '{key}' needs a number, got {value!r}") from None


def _to_int_list(path: str, lineno: int, key: str, value: str) -> tuple[int, ...]:
    return tuple(_to_int(path, lineno, key, part) for part in value.split(","))


def _to_float_list(path: str, lineno: int, key: str, value: str) -> tuple[float, ...]:
    return tuple(_to_float(path, lineno, key, part) for part in value.split(","))


def _to_str_list(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(","))


_EXPERIMENT_KEYS = {
    "kind",
    "dims",
    "intrinsic_dim",
    "n_steps",
    "samplers",
    "grids",
    "num_samples",
    "seeds",
    "rounds",
    "delta",
    "out",
}
_TARGET_KEYS = {"kind", "dim", "intrinsic_dim", "mean", "var", "component", "weight"}


def _broadcast(path, lineno, key, values: tuple[float, ...], dim: int) -> np.ndarray:
    if len(values) == 1:
        return np.full(dim, values[0])
    if len(values) != dim:
        raise _fail(
            path, lineno, f"key '{key}' needs 1 or {dim} values, got {len(values)}"
        )
    return np.asarray(values)


def _parse_target(path: str, entries) -> Target:
    scalars: dict[str, tuple[int, str]] = {}
    components: list[dict[str, tuple[int, str]]] = []
    in_block = False
    for lineno, key, value in entries:
        if key == "component":
            if value is not None:
                raise _fail(path, lineno, "'component' opens a block and takes no value")
            components.append({})
            in_block = True
            continue
        if key not in _TARGET_KEYS:
            raise _fail(path, lineno, f"unknown key '{key}'")
        if in_block and key in ("weight", "mean", "var"):
            if key in components[-1]:
                raise _fail(path, lineno, f"duplicate key '{key}' in component block")
            components[-1][key] = (lineno, value)
            continue
        if key == "weight":
            raise _fail(path, lineno, "'weight' is only valid inside a component block")
        if key in scalars:
            raise _fail(path, lineno, f"duplicate key '{key}'")
        scalars[key] = (lineno, value)

    if "dim" not in scalars:
        raise _fail(path, 1, "target config needs a 'dim' key")
    dim_line, dim_raw = scalars["dim"]
    dim = _to_int(path, dim_line, "dim", dim_raw)
    if dim < 1:
        raise _fail(path, dim_line, f"dim must be positive, got {dim}")

    if components:
        for forbidden in ("mean", "var", "intrinsic_dim"):
            if forbidden in scalars:
                lineno = scalars[forbidden][0]
                raise _fail(
                    path, lineno, f"'{forbidden}' belongs inside component blocks here"
                )
        weights, means, variances = [], [], []
        for block in components:
            if "weight" not in block:
                raise _fail(path, 1, "every component block needs a 'weight'")
            w_line, w_raw = block["weight"]
            weights.append(_to_float(path, w_line, "weight", w_raw))
            m_line, m_raw = block.get("mean", (w_line, "0"))
            means.append(
                _broadcast(path, m_line, "mean", _to_float_list(path, m_line, "mean", m_raw), dim)
            )
            v_line, v_raw = block.get("var", (w_line, "1"))
            variances.append(
                _broadcast(path, v_line, "var", _to_float_list(path, v_line, "var", v_raw), dim)
            )
        try:
            return Target(
                weights=np.asarray(weights),
                means=np.stack(means),
                variances=np.stack(variances),
            )
        except DomainError as exc:
            raise ParseError(f"{path}: invalid mixture: {exc}") from exc

    mean_line, mean_raw = scalars.get("mean", (1, "0"))
    mean_values = _to_float_list(path, mean_line, "mean", mean_raw)
    var_line, var_raw = scalars.get("var", (1, "1"))
    var_values = _to_float_list(path, var_line, "var", var_raw)
    if "intrinsic_dim" in scalars:
        k_line, k_raw = scalars["intrinsic_dim"]
        k = _to_int(path, k_line, "intrinsic_dim", k_raw)
        if len(mean_values) != 1 or len(var_values) != 1:
            raise _fail(
                path, k_line, "'intrinsic_dim' requires scalar 'mean' and 'var'"
            )
        if not 1 <= k <= dim:
            raise _fail(path, k_line, f"intrinsic_dim must lie in [1, {dim}], got {k}")
        return Target.low_rank(dim, k, mean_value=mean_values[0], var_value=var_values[0])
    mean = _broadcast(path, mean_line, "mean", mean_values, dim)
    var = _broadcast(path, var_line, "var", var_values, dim)
    try:
        return Target.gaussian(mean, var)
    except DomainError as exc:
        raise ParseError(f"{path}: invalid target: {exc}") from exc


def parse_config(path: str | Path) -> ExperimentSpec | Target:
    """Parse a key = value config file into a spec or a target.

    The optional ``kind`` key ('experiment' or 'target') selects the schema;
    it defaults to 'experiment', whose keys all carry defaults, so an empty
    file is the default sweep.  Mixture targets use bare ``component`` lines
    to open blocks of weight/mean/var keys; scalar ``mean``/``var`` values
    broadcast across ``dim`` coordinates.  Unknown or duplicate keys, bad
    numbers, and malformed lines raise :class:`~flowgrid.errors.ParseError`
    naming the file, line, and key.
    """
    entries = _parse_lines(path)
    path_str = str(path)
    kind = "experiment"
    for lineno, key, value in entries:
        if key == "kind":
            if value not in ("experiment", "target"):
                raise _fail(path_str, lineno, f"kind must be experiment|target, got {value!r}")
            kind = value
            break
    if kind == "target":
        body = [e for e in entries if e[1] != "kind"]
        return _parse_target(path_str, body)

    seen: dict[str, tuple[int, str]] = {}
    for lineno, key, value in entries:
        if key == "kind":
            continue
        if key not in _EXPERIMENT_KEYS:
            raise _fail(path_str, lineno, f"unknown key '{key}'")
        if value is None:
            raise _fail(path_str, lineno, f"key '{key}' needs a value")
        if key in seen:
            raise _fail(path_str, lineno, f"duplicate key '{key}'")
        seen[key] = (lineno, value)

    kwargs: dict = {}
    if "dims" in seen:
        kwargs["dims"] = _to_int_list(path_str, seen["dims"][0], "dims", seen["dims"][1])
    if "intrinsic_dim" in seen:
        kwargs["intrinsic_dim"] = _to_int(
            path_str, seen["intrinsic_dim"][0], "intrinsic_dim", seen["intrinsic_dim"][1]
        )
    if "n_steps" in seen:
        kwargs["n_steps"] = _to_int_list(
            path_str, seen["n_steps"][0], "n_steps", seen["n_steps"][1]
        )
    if "samplers" in seen:
        kwargs["samplers"] = _to_str_list(seen["samplers"][1])
    if "grids" in seen:
        normalized = tuple(
            "ddpm-induced" if g == "ddpm" else g for g in _to_str_list(seen["grids"][1])
        )
        kwargs["grids"] = normalized
    if "num_samples" in seen:
        kwargs["num_samples"] = _to_int(
            path_str, seen["num_samples"][0], "num_samples", seen["num_samples"][1]
        )
    if "seeds" in seen:
        kwargs["seeds"] = _to_int_list(path_str, seen["seeds"][0], "seeds", seen["seeds"][1])
    if "rounds" in seen:
        kwargs["rounds"] = _to_int(path_str, seen["rounds"][0], "rounds", seen["rounds"][1])
    if "delta" in seen:
        lineno, raw = seen["delta"]
        if raw == "auto":
            kwargs["delta_rule"] = DeltaRule()
        else:
            value = _to_float(path_str, lineno, "delta", raw)
            if not 0.0 < value < 0.5:
                raise _fail(path_str, lineno, f"delta must lie in (0, 1/2), got {raw!r}")
            kwargs["delta_rule"] = DeltaRule(fixed=value)
    if "out" in seen:
        kwargs["out"] = seen["out"][1]
    try:
        return ExperimentSpec(**kwargs)
    except DomainError as exc:
        raise ParseError(f"{path_str}: invalid experiment spec: {exc}") from exc
