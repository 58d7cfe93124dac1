"""Monte Carlo estimation of the population difference <sigma_z(t)>.

Runs an ensemble of weighted trajectories and reduces their contributions
into a mean curve with standard errors.  Reproducibility contract: every
trajectory i gets its own generator seeded from (master_seed, i), work is
split into fixed-size chunks whose partial sums are combined in chunk
order, so the result is bit-identical for any worker count.  Workers are
threads; with the compiled kernel holding the GIL this buys bookkeeping
overlap at best, but the interface (and its determinism) is what matters
at desk scale.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import model
from .backends import get_backend
from .filters import FilterScheme
from .model import BathMode, ModelParams, discretize_bath, mode_arrays
from .sampling import draw_initial

__all__ = [
    "RunConfig",
    "PopulationSeries",
    "CompareReport",
    "AbortFractionError",
    "estimate",
    "compare_schemes",
]

# trajectories per reduction chunk; fixed so the partial-sum boundaries
# (and therefore the fp result) never depend on the worker count
CHUNK_SIZE = 256

ABORT_FRACTION_LIMIT = 0.01


class AbortFractionError(RuntimeError):
    """Raised when more than 1% of trajectories went non-finite."""

    def __init__(self, n_aborted: int, n_traj: int):
        self.n_aborted = n_aborted
        self.n_traj = n_traj
        super().__init__(
            f"{n_aborted} of {n_traj} trajectories aborted "
            f"({n_aborted / n_traj:.2%} > {ABORT_FRACTION_LIMIT:.0%}); "
            "results discarded")


@dataclass(frozen=True)
class RunConfig:
    """Everything one estimate() call needs.

    modes overrides the Ohmic discretization with an explicit bath (used
    to compare against the exact oracle on the same small bath); backend
    picks the trajectory engine (None = auto).  record_stride decimates
    the observable grid to every stride-th step.
    """

    model: ModelParams
    scheme: FilterScheme
    n_traj: int
    tau: float
    t_max: float
    max_hops: int
    master_seed: int
    n_workers: int = 1
    record_stride: int = 1
    modes: Optional[tuple[BathMode, ...]] = None
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.t_max < self.tau:
            raise ValueError("t_max must be at least tau")
        if self.n_traj < 1:
            raise ValueError("n_traj must be at least 1")
        if self.max_hops < 0:
            raise ValueError("max_hops must be non-negative")
        if self.n_workers < 1:
            raise ValueError("n_workers must be at least 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be at least 1")


@dataclass
class PopulationSeries:
    """Estimated Re<sigma_z> on a time grid with 1-sigma standard errors.

    n_aborted counts discarded non-finite trajectories (excluded from the
    averages); max_weight is the largest |W| seen after cutting, the
    instrumented check that observable cutting really bounds the weight.
    """

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_aborted: int
    n_traj: int = 0
    max_weight: float = 0.0
    backend: str = ""


@dataclass
class CompareReport:
    """compare_schemes output: one series per scheme plus per-time variance
    ratios against the first scheme (0/0 counts as 1.0)."""

    schemes: list[FilterScheme]
    series: list[PopulationSeries]
    variance_ratio: np.ndarray  # shape (n_schemes, n_times)


def _grid_steps(config: RunConfig) -> tuple[int, int]:
    n_steps = int(round(config.t_max / config.tau))
    if abs(n_steps * config.tau - config.t_max) > 1e-9 * max(1.0, config.t_max):
        raise ValueError("t_max must be an integer multiple of tau")
    if n_steps % config.record_stride != 0:
        raise ValueError("step count must be a multiple of record_stride")
    return n_steps, n_steps // config.record_stride + 1


def _bath_table(config: RunConfig):
    if config.modes is not None:
        if len(config.modes) < 1:
            raise ValueError("explicit bath must have at least one mode")
        tab = mode_arrays(config.modes)
    else:
        tab = mode_arrays(discretize_bath(config.model))
    if not np.all(tab.mass == tab.mass[0]):
        raise ValueError("bath modes must share a common mass")
    return tab


def _run_chunk(runner, params, tab, n_steps, n_rec, master_seed, lo, hi):
    """Run trajectories [lo, hi); return this chunk's partial sums."""
    contrib = np.empty((hi - lo, n_rec), dtype=complex)
    aborted = np.zeros(hi - lo, dtype=bool)
    max_ws = np.zeros(hi - lo, dtype=float)
    for i, idx in enumerate(range(lo, hi)):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((master_seed, idx))))
        draw = draw_initial(rng, params, tab)
        uniforms = rng.random(2 * n_steps)
        a, ap = draw.pair0
        _, ab, mw = runner(draw.r0, draw.p0, a, ap, draw.w0, uniforms,
                           contrib[i])
        aborted[i] = ab
        max_ws[i] = mw
    kept = contrib.real[~aborted]
    sum_re = kept.sum(axis=0) if kept.shape[0] else np.zeros(n_rec)
    sum_sq = (kept**2).sum(axis=0) if kept.shape[0] else np.zeros(n_rec)
    n_ab = int(aborted.sum())
    max_w = float(max_ws[~aborted].max()) if n_ab < hi - lo else 0.0
    return sum_re, sum_sq, n_ab, max_w


def estimate(config: RunConfig) -> PopulationSeries:
    """Run the configured ensemble and average it.

    mean(t_k) is the sample mean of Re[w0 W(t_k) sigma_z^{aa'}(t_k)] over
    kept trajectories, stderr the sample standard deviation over sqrt(N).
    Aborted trajectories are dropped from N; more than 1% of them raises
    AbortFractionError.
    """
    n_steps, n_rec = _grid_steps(config)
    tab = _bath_table(config)
    backend = get_backend(config.backend)
    runner = backend.make_runner(config.model, tab, config.scheme,
                                 config.tau, n_steps, config.record_stride,
                                 config.max_hops, model.EIGENVECTOR_SIGN)

    bounds = [(lo, min(lo + CHUNK_SIZE, config.n_traj))
              for lo in range(0, config.n_traj, CHUNK_SIZE)]
    args = (runner, config.model, tab, n_steps, n_rec, config.master_seed)
    if config.n_workers == 1:
        partials = [_run_chunk(*args, lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=config.n_workers) as pool:
            partials = list(pool.map(lambda b: _run_chunk(*args, *b), bounds))

    # reduce in chunk order: the sums are identical for any worker count
    sum_re = np.zeros(n_rec)
    sum_sq = np.zeros(n_rec)
    n_aborted = 0
    max_w = 0.0
    for p_re, p_sq, p_ab, p_mw in partials:
        sum_re += p_re
        sum_sq += p_sq
        n_aborted += p_ab
        max_w = max(max_w, p_mw)

    if n_aborted / config.n_traj > ABORT_FRACTION_LIMIT:
        raise AbortFractionError(n_aborted, config.n_traj)
    n_kept = config.n_traj - n_aborted
    mean = sum_re / n_kept
    if n_kept > 1:
        var = (sum_sq - sum_re**2 / n_kept) / (n_kept - 1)
        np.clip(var, 0.0, None, out=var)
        stderr = np.sqrt(var / n_kept)
    else:
        stderr = np.zeros(n_rec)
    times = config.tau * config.record_stride * np.arange(n_rec)
    return PopulationSeries(times=times, mean=mean, stderr=stderr,
                            n_aborted=n_aborted, n_traj=config.n_traj,
                            max_weight=max_w, backend=backend.name)


def compare_schemes(config: RunConfig,
                    schemes: Sequence[FilterScheme]) -> CompareReport:
    """Estimate under each scheme with identical seed and bath; report
    per-time variance ratios relative to the first scheme."""
    schemes = list(schemes)
    if len(schemes) < 2:
        raise ValueError("compare_schemes needs at least 2 schemes")
    series = [estimate(replace(config, scheme=s)) for s in schemes]
    base = series[0].stderr**2
    ratios = np.empty((len(schemes), base.shape[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, s in enumerate(series):
            var = s.stderr**2
            ratio = var / base
            ratio[(var == 0.0) & (base == 0.0)] = 1.0
            ratios[i] = ratio
    return CompareReport(schemes=schemes, series=series,
                         variance_ratio=ratios)
