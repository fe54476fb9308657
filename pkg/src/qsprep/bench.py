"""Experiment sweeps, CSV records, and scaling-exponent fits."""

from __future__ import annotations

import csv
import io
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .amplify import Schedule
from .baseline import naive_k_copies_detailed
from .core import WeightVector, make_rng, read_weights, state_from_weights, tv_distance
from .classical import empirical_tv
from .errors import ConfigError, InvalidInputError
from .pipeline import importance_sample, prepare_k_copies, reduction_run
from .topk import top_k_positions

MODES = ("pipeline", "baseline", "topk", "sampling", "reduction-demo")
GENERATORS = ("uniform", "random", "zipf", "binary", "single-spike")
CSV_HEADER = ("mode", "N", "K", "delta", "seed", "trial", "prep_q", "copy_q_mean", "total_q", "fid_min", "tv", "wall_ms")


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    param: float | None = None

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        name, _, raw = text.partition(":")
        name = name.strip()
        if name not in GENERATORS:
            raise ConfigError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
        param = None
        if raw:
            try:
                param = float(raw)
            except ValueError:
                raise ConfigError(f"bad generator parameter {raw!r}") from None
        if name == "zipf" and param is not None and not param > 0:
            raise ConfigError("zipf exponent must be positive")
        if name == "binary" and param is not None and (param < 1 or param != int(param)):
            raise ConfigError("binary needs a positive integer number of ones")
        if name in ("uniform", "random", "single-spike") and param is not None:
            raise ConfigError(f"generator {name!r} takes no parameter")
        return cls(name, param)

    def __str__(self) -> str:
        return self.name if self.param is None else f"{self.name}:{self.param:g}"


def generate_weights(gen: GeneratorSpec, N: int, rng: np.random.Generator, K: int | None = None) -> WeightVector:
    """Draw one weight vector.  Positions are shuffled so H is not a prefix."""
    if gen.name == "uniform":
        return WeightVector(np.ones(N))
    if gen.name == "random":
        return WeightVector(rng.random(N))
    if gen.name == "zipf":
        s = 1.0 if gen.param is None else gen.param
        return WeightVector(rng.permutation(1.0 / np.arange(1, N + 1) ** s))
    if gen.name == "binary":
        m = int(gen.param) if gen.param is not None else 2 * (K or 1)
        if m > N:
            raise ConfigError(f"binary:{m} needs N >= {m}, got N={N}")
        bits = np.zeros(N)
        bits[rng.choice(N, size=m, replace=False)] = 1.0
        return WeightVector(bits)
    spike = np.zeros(N)
    spike[rng.integers(N)] = 1.0
    return WeightVector(spike)


@dataclass
class ExperimentConfig:
    mode: str
    Ns: list = field(default_factory=list)
    Ks: list = field(default_factory=lambda: [1])
    delta: float = 0.1
    trials: int = 1
    seed: int = 0
    weights_path: str | None = None
    generator: GeneratorSpec | None = None
    out: str | None = None
    timing: bool = False
    growth: float = 1.2
    threads: int = 1

    def validate(self) -> WeightVector | None:
        """Check the config; returns the file weights when a path is given."""
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        file_weights = None
        if self.weights_path is not None and self.generator is not None:
            raise ConfigError("give either a weights file or a generator, not both")
        if self.weights_path is not None:
            file_weights = read_weights(self.weights_path)
            if not self.Ns:
                self.Ns = [file_weights.N]
            if any(n != file_weights.N for n in self.Ns):
                raise ConfigError(f"weights file has N={file_weights.N}, sweep asks for N={self.Ns}")
        if not self.Ns:
            raise ConfigError("no N given")
        if not self.Ks:
            raise ConfigError("no K given")
        for name, values in (("N", self.Ns), ("K", self.Ks)):
            if any(int(v) != v or v < 1 for v in values):
                raise ConfigError(f"every {name} must be a positive integer, got {values}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not self.growth > 1:
            raise ConfigError("schedule growth must exceed 1")
        for N in self.Ns:
            for K in self.Ks:
                if K > N:
                    raise ConfigError(f"K={K} exceeds N={N}")
                if self.mode == "reduction-demo" and self.generator is not None:
                    if self.generator.name != "binary":
                        raise ConfigError("reduction-demo needs binary weights")
                    m = 2 * K if self.generator.param is None else int(self.generator.param)
                    if m < 2 * K or m > N:
                        raise ConfigError(f"reduction-demo needs 2K <= ones <= N (K={K}, N={N}, ones={m})")
                if self.generator is not None and self.generator.name == "binary" and self.generator.param:
                    if self.generator.param > N:
                        raise ConfigError(f"binary:{self.generator.param:g} needs N >= {self.generator.param:g}")
        return file_weights

    @property
    def schedule(self) -> Schedule:
        return Schedule(growth=self.growth)


@dataclass
class RunRecord:
    mode: str
    N: int
    K: int
    delta: float
    seed: int
    trial: int
    preprocessing_queries: int
    per_copy_queries_mean: float
    total_queries: int
    fidelity_min: float | None = None
    tv_distance: float | None = None
    wall_time_ms: float | None = None

    def row(self) -> list[str]:
        def fmt(x):
            return "" if x is None else repr(float(x)) if isinstance(x, float) else str(x)

        return [
            self.mode,
            str(self.N),
            str(self.K),
            fmt(float(self.delta)),
            str(self.seed),
            str(self.trial),
            str(self.preprocessing_queries),
            fmt(float(self.per_copy_queries_mean)),
            str(self.total_queries),
            fmt(self.fidelity_min),
            fmt(self.tv_distance),
            fmt(self.wall_time_ms),
        ]

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        def opt(key):
            return float(row[key]) if row[key] != "" else None

        record = cls(
            mode=row["mode"],
            N=int(row["N"]),
            K=int(row["K"]),
            delta=float(row["delta"]),
            seed=int(row["seed"]),
            trial=int(row["trial"]),
            preprocessing_queries=int(row["prep_q"]),
            per_copy_queries_mean=float(row["copy_q_mean"]),
            total_queries=int(row["total_q"]),
            fidelity_min=opt("fid_min"),
            tv_distance=opt("tv"),
            wall_time_ms=opt("wall_ms"),
        )
        record.check()
        return record

    def check(self) -> None:
        """Total must equal preprocessing plus the per-copy sum."""
        copies = copies_for(self.mode, self.K)
        expected = self.preprocessing_queries + self.per_copy_queries_mean * copies
        if abs(expected - self.total_queries) > 1e-6 * max(1, self.total_queries):
            raise InvalidInputError(
                f"inconsistent record: total_q={self.total_queries} but parts sum to {expected}"
            )


def copies_for(mode: str, K: int) -> int:
    if mode == "topk":
        return 0
    if mode == "reduction-demo":
        return 3 * K
    return K


def trial_seed(seed: int, N: int, K: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, N, K, trial]).generate_state(1, np.uint64)[0])


def _run_one(config: ExperimentConfig, file_weights, N: int, K: int, trial: int) -> RunRecord:
    seed = trial_seed(config.seed, N, K, trial)
    rng = make_rng(seed)
    started = time.perf_counter()
    if file_weights is not None:
        w = file_weights
    else:
        default = GeneratorSpec("binary") if config.mode == "reduction-demo" else GeneratorSpec("zipf", 1.0)
        w = generate_weights(config.generator or default, N, rng, K)
    schedule = config.schedule
    fid_min = tv = None
    mode = config.mode
    if mode == "pipeline":
        states, stats = prepare_k_copies(w, K, config.delta, rng, schedule)
        prep, costs = stats.preprocessing_queries, stats.per_copy_queries
        fid_min = min(stats.fidelities)
        tv = max(tv_distance(np.square(s.amplitudes), w.probabilities) for s in states)
    elif mode == "baseline":
        # gamma_bound comes from one classical pass over w, charged as N queries
        prep = N
        results = naive_k_copies_detailed(w, K, float(w.entries.max()), rng, schedule)
        costs = [r.queries_used for r in results]
        target = state_from_weights(w)
        fid_min = min(float(np.dot(r.state.amplitudes, target.amplitudes)) ** 2 for r in results)
        tv = max(tv_distance(np.square(r.state.amplitudes), w.probabilities) for r in results)
    elif mode == "topk":
        found = top_k_positions(w, K, config.delta, rng, schedule=schedule)
        prep, costs = found.queries_used, []
    elif mode == "sampling":
        samples, stats = importance_sample(w, K, config.delta, rng, schedule=schedule)
        prep, costs = stats.preprocessing_queries, stats.per_copy_queries
        fid_min = min(stats.fidelities)
        tv = empirical_tv(samples, w)
    else:
        found, stats = reduction_run(w.entries, K, 3 * K, rng, config.delta)
        prep, costs = stats.preprocessing_queries, stats.per_copy_queries
        fid_min = min(stats.fidelities)
    elapsed = (time.perf_counter() - started) * 1000.0
    total = prep + sum(costs)
    mean = sum(costs) / len(costs) if costs else 0.0
    return RunRecord(
        mode, N, K, config.delta, seed, trial, prep, mean, total, fid_min, tv,
        elapsed if config.timing else None,
    )


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """One record per (N, K, trial), in sweep order; writes the CSV if ``config.out`` is set."""
    file_weights = config.validate()
    cells = [(N, K, t) for N in config.Ns for K in config.Ks for t in range(config.trials)]
    workers = max(1, config.threads)
    if workers == 1:
        records = [_run_one(config, file_weights, *cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda cell: _run_one(config, file_weights, *cell), cells))
    if config.out is not None:
        write_records(config.out, records)
    return records


def render_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerow(record.row())
    return buf.getvalue()


def write_records(path: str | os.PathLike, records) -> None:
    """Write the whole CSV to a temporary sibling, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_csv(records))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_records(path: str | os.PathLike) -> list[RunRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise InvalidInputError(f"unexpected CSV header {reader.fieldnames}")
        return [RunRecord.from_row(row) for row in reader]


def fit_exponent(points) -> tuple[float, float]:
    """Least-squares slope of log y against log x, with its r^2."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise InvalidInputError("need at least 3 points to fit an exponent")
    if any(not (x > 0 and y > 0) for x, y in pts):
        raise InvalidInputError("fit points must be positive")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    if np.ptp(lx) == 0:
        raise InvalidInputError("need at least two distinct x values")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def _cell_means(records, attr: str) -> dict:
    sums: dict = {}
    for r in records:
        key = (r.mode, r.N, r.K)
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + getattr(r, attr), count + 1)
    return {key: total / count for key, (total, count) in sums.items()}


def summarize_fits(records) -> dict:
    """Exponent fits for every series with at least three distinct x values.

    ``prep_vs_N`` and ``total_vs_N`` hold K fixed; ``copy_vs_K`` holds N fixed.
    """
    out = {"prep_vs_N": [], "total_vs_N": [], "copy_vs_K": []}
    series = (
        ("prep_vs_N", "preprocessing_queries", lambda m, N, K: (m, K), lambda N, K: N),
        ("total_vs_N", "total_queries", lambda m, N, K: (m, K), lambda N, K: N),
        ("copy_vs_K", "per_copy_queries_mean", lambda m, N, K: (m, N), lambda N, K: K),
    )
    for name, attr, group_of, x_of in series:
        groups: dict = {}
        for (mode, N, K), mean in sorted(_cell_means(records, attr).items()):
            groups.setdefault(group_of(mode, N, K), []).append((x_of(N, K), mean))
        for (mode, fixed), pts in sorted(groups.items()):
            if len(pts) < 3 or any(y <= 0 for _, y in pts):
                continue
            slope, r2 = fit_exponent(pts)
            fixed_name = "K" if name != "copy_vs_K" else "N"
            out[name].append(
                {"mode": mode, fixed_name: fixed, "points": [[x, y] for x, y in pts], "slope": slope, "r2": r2}
            )
    return out

