"""Head-to-head timing of the compiled kernel against the Python fallback.

Run as `python -m sstpsim.benchmark`.  Executes the same small ensemble on
each available backend, reports trajectories/second and the speedup, and
cross-checks that the two mean curves agree to solver roundoff.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from .backends import available_backends
from .estimator import RunConfig, estimate
from .filters import FilterScheme
from .model import ModelParams

_PRESETS = {
    # omega, xi, beta
    "weak": (1.0 / 3.0, 0.007, 0.3),
    "mid": (0.4, 0.09, 12.5),
    "strong": (1.2, 2.0, 0.25),
}


def run_benchmark(preset: str = "mid", n_traj: int = 256, t_max: float = 10.0,
                  n_modes: int = 200, stream=sys.stdout) -> dict:
    omega, xi, beta = _PRESETS[preset]
    model = ModelParams(omega=omega, xi=xi, beta=beta, n_modes=n_modes)
    config = RunConfig(model=model, scheme=FilterScheme("none"),
                       n_traj=n_traj, tau=0.1, t_max=t_max, max_hops=2,
                       master_seed=123)
    results = {}
    for backend in available_backends():
        t0 = time.perf_counter()
        series = estimate(replace(config, backend=backend))
        elapsed = time.perf_counter() - t0
        results[backend] = (elapsed, series)
        print(f"{backend:>7}: {elapsed:8.3f} s "
              f"({n_traj / elapsed:10.1f} traj/s)", file=stream)
    if "cython" in results and "python" in results:
        speedup = results["python"][0] / results["cython"][0]
        dev = float(np.max(np.abs(results["cython"][1].mean
                                  - results["python"][1].mean)))
        print(f"speedup: {speedup:.1f}x   max |Delta mean|: {dev:.2e}",
              file=stream)
    else:
        print("compiled kernel unavailable; timed the Python backend only",
              file=stream)
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="compare trajectory backends on a small ensemble")
    parser.add_argument("--preset", choices=sorted(_PRESETS), default="mid")
    parser.add_argument("--n-traj", type=int, default=256)
    parser.add_argument("--t-max", type=float, default=10.0)
    parser.add_argument("--n-modes", type=int, default=200)
    args = parser.parse_args(argv)
    run_benchmark(args.preset, args.n_traj, args.t_max, args.n_modes)
    return 0


if __name__ == "__main__":
    sys.exit(main())
