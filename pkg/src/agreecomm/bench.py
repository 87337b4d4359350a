"""Benchmark sweeps over generated graphs with known communities."""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .detection import DetectionParams, detect
from .generators import ConfigError, LfrLikeConfig, PlantedConfig, gen_lfr_like, gen_planted
from .metrics import ari, nmi

CSV_HEADER = ("sweep", "tau", "repeats", "nmi_mean", "nmi_std", "ari_mean", "ari_std", "ms_mean")

SUITES = {
    "planted": ("z_out", PlantedConfig, gen_planted),
    "lfr-like": ("mu", LfrLikeConfig, gen_lfr_like),
}

DEFAULT_SWEEPS = {
    "planted": tuple(float(z) for z in range(1, 9)),
    "lfr-like": tuple(round(0.1 * i, 1) for i in range(1, 9)),
}


@dataclass(frozen=True)
class BenchRow:
    """Aggregate of ``repeats`` runs at one sweep value and one tau.

    Standard deviations are population deviations (``ddof=0``).
    ``ms_mean`` is the mean detection wall time in milliseconds, or NaN
    when timing is disabled.
    """

    sweep: float
    tau: float
    repeats: int
    nmi_mean: float
    nmi_std: float
    ari_mean: float
    ari_std: float
    ms_mean: float

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("a row aggregates at least one run")
        if self.nmi_std < 0 or self.ari_std < 0:
            raise ValueError("standard deviations are non-negative")

    def as_csv(self) -> list[str]:
        return [
            f"{self.sweep:g}",
            f"{self.tau:g}",
            str(self.repeats),
            f"{self.nmi_mean:.6f}",
            f"{self.nmi_std:.6f}",
            f"{self.ari_mean:.6f}",
            f"{self.ari_std:.6f}",
            "nan" if np.isnan(self.ms_mean) else f"{self.ms_mean:.3f}",
        ]


def run_seeds(master_seed: int, value: float, index: int) -> tuple[int, int]:
    """Generator seed and detection seed of run ``index`` at sweep ``value``."""
    seq = np.random.SeedSequence([master_seed, int(round(value * 1e6)), index])
    gen_seed, det_seed = seq.generate_state(2)
    return int(gen_seed), int(det_seed)


def _make_config(suite: str, value: float, seed: int, overrides: dict):
    name, cls, _ = SUITES[suite]
    return cls(**{**overrides, name: value, "seed": seed})


def run_sweep(
    suite: str = "planted",
    values: Sequence[float] | None = None,
    repeats: int = 10,
    taus: Sequence[float] = (0.2,),
    master_seed: int = 0,
    *,
    workers: int = 1,
    timing: bool = True,
    **overrides,
) -> list[BenchRow]:
    """Detect communities on ``repeats`` generated graphs per sweep value.

    Parameters
    ----------
    suite : {"planted", "lfr-like"}
        Which generator to sweep. The swept field is ``z_out`` for the
        planted partition and ``mu`` for the LFR-like graphs.
    values : sequence of float, optional
        Sweep values; defaults to :data:`DEFAULT_SWEEPS`.
    repeats : int
        Graphs generated per sweep value. Every tau is run on the same
        graphs.
    taus : sequence of float
    master_seed : int
        Run ``i`` at value ``s`` draws its seeds from :func:`run_seeds`.
    workers : int
        Runs are spread over this many threads. Rows do not depend on it
        (apart from ``ms_mean``).
    timing : bool
        Record detection wall time.
    **overrides
        Extra generator config fields, e.g. ``n=256``.

    Returns
    -------
    list of BenchRow
        Ordered by sweep value, then tau.
    """
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    values = DEFAULT_SWEEPS[suite] if values is None else tuple(float(v) for v in values)
    if not values:
        raise ConfigError("empty sweep")
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    params = [DetectionParams(tau=t) for t in taus]
    # fail fast on a bad sweep before any work is done
    for v in values:
        _make_config(suite, v, 0, overrides)
    generate = SUITES[suite][2]

    def one(job):
        value, i = job
        gen_seed, det_seed = run_seeds(master_seed, value, i)
        graph, truth = generate(_make_config(suite, value, gen_seed, overrides))
        out = []
        for p in params:
            p = DetectionParams(tau=p.tau, seed=det_seed)
            start = time.perf_counter()
            found, _ = detect(graph, p)
            ms = (time.perf_counter() - start) * 1e3
            out.append((nmi(found, truth), ari(found, truth), ms))
        return out

    jobs = [(v, i) for v in values for i in range(repeats)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = dict(zip(jobs, pool.map(one, jobs)))
    else:
        results = {job: one(job) for job in jobs}

    rows = []
    for v in values:
        for t_idx, p in enumerate(params):
            stats = np.array([results[(v, i)][t_idx] for i in range(repeats)])
            rows.append(
                BenchRow(
                    sweep=v,
                    tau=p.tau,
                    repeats=repeats,
                    nmi_mean=float(stats[:, 0].mean()),
                    nmi_std=float(stats[:, 0].std()),
                    ari_mean=float(stats[:, 1].mean()),
                    ari_std=float(stats[:, 1].std()),
                    ms_mean=float(stats[:, 2].mean()) if timing else float("nan"),
                )
            )
    return rows


def write_csv(rows: Sequence[BenchRow], stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(row.as_csv() for row in rows)
