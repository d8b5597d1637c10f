"""Reproducible Monte Carlo outage sweeps.

Trials are split into fixed-size chunks; each chunk's random stream is keyed
by (master_seed, scheme index, grid index, chunk index), so every draw is
pinned regardless of execution order or worker count.  Aggregation is a sum
of integer event counts - commutative and associative - which makes the
whole sweep a pure function of (params, spec): rerunning it, or running it
on a different number of workers, produces identical results bit for bit.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm

from . import analysis
from .channel import db_to_linear, sample_gains, substream
from .schemes import Scheme, SystemParams, evaluate_frames

DEFAULT_CHUNK_SIZE = 65536

#: Canonical scheme order used for stream keying; independent of which
#: subset a sweep requests, so a scheme's draws never depend on its company.
_SCHEME_ORDER = tuple(Scheme)


class PartialResultError(RuntimeError):
    """A sweep died partway; carries the results completed so far."""

    def __init__(self, message: str, results: tuple["SweepResult", ...]):
        super().__init__(message)
        self.results = results


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: SNR grid, trial budget, seed, and scheme set."""

    snr_grid_db: tuple[float, ...] = tuple(float(db) for db in range(0, 41, 2))
    trials_per_point: int = 100_000
    master_seed: int = 42
    schemes: tuple[Scheme, ...] = _SCHEME_ORDER
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self) -> None:
        if len(self.snr_grid_db) == 0:
            raise ValueError("snr_grid_db must be non-empty")
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise ValueError(f"snr_grid_db must be strictly increasing: {self.snr_grid_db}")
        if self.trials_per_point < 1:
            raise ValueError(f"trials_per_point must be >= 1, got {self.trials_per_point}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        if len(self.schemes) == 0:
            raise ValueError("schemes must be non-empty")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError(f"duplicate schemes in {self.schemes}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")


@dataclass(frozen=True)
class LinkEstimate:
    """Monte Carlo outage estimate for one link at one grid point."""

    mc_estimate: float
    ci_low: float
    ci_high: float
    analytic: Optional[float]  # None where no closed form applies


@dataclass(frozen=True)
class OutagePoint:
    snr_db: float
    trials: int
    links: Mapping[str, LinkEstimate] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    scheme: Scheme
    points: tuple[OutagePoint, ...]
    throughput_mc: tuple[float, ...]
    throughput_analytic: tuple[Optional[float], ...]


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Chosen over the plain normal (Wald) interval because outage counts at
    high SNR sit near zero, where Wald coverage collapses.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p_hat = successes / trials
    z2_n = z * z / trials
    denom = 1.0 + z2_n
    center = (p_hat + z2_n / 2.0) / denom
    half = z * np.sqrt(p_hat * (1.0 - p_hat) / trials + z2_n / (4.0 * trials)) / denom
    # at the empirical endpoints one root of the score equation is exact;
    # evaluate it as such rather than through a cancellation-prone difference
    low = 0.0 if successes == 0 else max(0.0, float(center - half))
    high = 1.0 if successes == trials else min(1.0, float(center + half))
    return (low, high)


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: explicit request, capped by NOMA_LAB_WORKERS, else
    hardware default.  Never affects results, only wall-clock time."""
    if requested is not None and requested < 1:
        raise ValueError(f"worker count must be >= 1, got {requested}")
    env = os.environ.get("NOMA_LAB_WORKERS")
    cap: Optional[int] = None
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"NOMA_LAB_WORKERS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ValueError(f"NOMA_LAB_WORKERS must be positive, got {cap}")
    workers = requested if requested is not None else (os.cpu_count() or 1)
    if cap is not None:
        workers = min(workers, cap)
    return workers


@dataclass(frozen=True)
class _ChunkTask:
    """One independently schedulable unit of Monte Carlo work."""

    params: SystemParams
    scheme: Scheme
    scheme_pos: int  # position in the sweep's scheme tuple
    stream_scheme_idx: int  # canonical scheme index used for seeding
    grid_idx: int
    chunk_idx: int
    n_frames: int
    rho: float
    master_seed: int


def _chunk_outage_counts(task: _ChunkTask) -> tuple[int, int, np.ndarray]:
    """Count outage events per link in one chunk.

    Returns (scheme position, grid index, int64 counts aligned with the
    scheme's link tuple).
    """
    rng = substream(
        task.master_seed, task.stream_scheme_idx, task.grid_idx, task.chunk_idx
    )
    gains = sample_gains(task.params.stats, rng, task.n_frames)
    th = task.params.thresholds(task.scheme)
    outcome = evaluate_frames(task.scheme, task.params.power, th, gains, task.rho)
    counts = np.array(
        [task.n_frames - int(np.sum(outcome.flag(link))) for link in task.scheme.links],
        dtype=np.int64,
    )
    return task.scheme_pos, task.grid_idx, counts


def _iter_tasks(params: SystemParams, spec: SweepSpec) -> Iterable[_ChunkTask]:
    for scheme_pos, scheme in enumerate(spec.schemes):
        stream_idx = _SCHEME_ORDER.index(scheme)
        for grid_idx, snr_db in enumerate(spec.snr_grid_db):
            rho = db_to_linear(snr_db)
            remaining = spec.trials_per_point
            chunk_idx = 0
            while remaining > 0:
                n = min(spec.chunk_size, remaining)
                yield _ChunkTask(
                    params=params,
                    scheme=scheme,
                    scheme_pos=scheme_pos,
                    stream_scheme_idx=stream_idx,
                    grid_idx=grid_idx,
                    chunk_idx=chunk_idx,
                    n_frames=n,
                    rho=rho,
                    master_seed=spec.master_seed,
                )
                remaining -= n
                chunk_idx += 1


def _assemble_result(
    params: SystemParams,
    trials: int,
    scheme: Scheme,
    grid_db: Sequence[float],
    counts_per_point: Sequence[np.ndarray],
    quad: analysis.QuadratureConfig,
) -> SweepResult:
    points = []
    throughput_mc = []
    throughput_analytic: list[Optional[float]] = []
    attach_analytic = scheme in (Scheme.HDU_CNOMA, Scheme.CNOMA)
    for grid_idx, snr_db in enumerate(grid_db):
        rho = db_to_linear(snr_db)
        aset = analysis.outage_set(scheme, params, rho, quad) if attach_analytic else None
        links: dict[str, LinkEstimate] = {}
        estimates: dict[str, float] = {}
        for k, link in enumerate(scheme.links):
            fails = int(counts_per_point[grid_idx][k])
            p_hat = fails / trials
            lo, hi = wilson_interval(fails, trials)
            links[link] = LinkEstimate(
                mc_estimate=p_hat,
                ci_low=lo,
                ci_high=hi,
                analytic=aset.value(link) if aset is not None else None,
            )
            estimates[link] = p_hat
        points.append(OutagePoint(snr_db=snr_db, trials=trials, links=links))
        mc_set = analysis.mc_outage_set(scheme, estimates)
        throughput_mc.append(analysis.outage_throughput(mc_set, params.rates, scheme))
        # Closed-form throughput is only assembled for the hybrid scheme;
        # the baselines are simulation-driven end to end.
        if scheme is Scheme.HDU_CNOMA and aset is not None and all(
            aset.applicable(link) for link in scheme.links
        ):
            throughput_analytic.append(
                analysis.outage_throughput(aset, params.rates, scheme)
            )
        else:
            throughput_analytic.append(None)
    return SweepResult(
        scheme=scheme,
        points=tuple(points),
        throughput_mc=tuple(throughput_mc),
        throughput_analytic=tuple(throughput_analytic),
    )


def run_sweep(
    params: SystemParams,
    spec: SweepSpec,
    *,
    quad: analysis.QuadratureConfig = analysis.QuadratureConfig(),
    workers: Optional[int] = None,
) -> tuple[SweepResult, ...]:
    """Run the full Monte Carlo sweep and attach analytic values.

    Output is bit-identical for identical (params, spec) regardless of the
    worker count or how chunks are scheduled.  On a mid-sweep failure the
    schemes and grid points whose chunks all completed are packaged into a
    PartialResultError.
    """
    n_grid = len(spec.snr_grid_db)
    n_links = {pos: len(s.links) for pos, s in enumerate(spec.schemes)}
    counts = {
        pos: [np.zeros(n_links[pos], dtype=np.int64) for _ in range(n_grid)]
        for pos in range(len(spec.schemes))
    }
    chunks_done = {pos: [0] * n_grid for pos in range(len(spec.schemes))}
    n_chunks = -(-spec.trials_per_point // spec.chunk_size)

    tasks = list(_iter_tasks(params, spec))
    workers = resolve_workers(workers)
    try:
        if workers == 1 or len(tasks) == 1:
            for task in tasks:
                pos, g, c = _chunk_outage_counts(task)
                counts[pos][g] += c
                chunks_done[pos][g] += 1
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                batch = max(1, len(tasks) // (workers * 4))
                for pos, g, c in pool.map(_chunk_outage_counts, tasks, chunksize=batch):
                    counts[pos][g] += c
                    chunks_done[pos][g] += 1
    except Exception as exc:
        completed = []
        for pos, scheme in enumerate(spec.schemes):
            done_idx = [g for g in range(n_grid) if chunks_done[pos][g] == n_chunks]
            if done_idx:
                completed.append(
                    _assemble_result(
                        params,
                        spec.trials_per_point,
                        scheme,
                        [spec.snr_grid_db[g] for g in done_idx],
                        [counts[pos][g] for g in done_idx],
                        quad,
                    )
                )
        raise PartialResultError(
            f"sweep aborted after {sum(sum(d) for d in chunks_done.values())} "
            f"of {len(tasks)} chunks: {exc}",
            tuple(completed),
        ) from exc

    return tuple(
        _assemble_result(
            params, spec.trials_per_point, scheme, spec.snr_grid_db, counts[pos], quad
        )
        for pos, scheme in enumerate(spec.schemes)
    )
