"""Numerically exact reference dynamics for tiny baths.

For one or two harmonic modes the full quantum problem fits in a truncated
number basis: build H = -Omega sigma_x - sum_i c_i sigma_z R_i + H_bath,
diagonalize once, and evolve the factorized initial state |up><up| (x)
thermal bath exactly.  For this model the mixed quantum-classical dynamics
the simulator samples is formally exact, so this curve is the ground truth
the trajectory estimate must reproduce within its error bars.

Truncation is verified by rerunning at twice n_max: if the curves differ
anywhere by 1e-4 or more, a TruncationError suggests the larger basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import PopulationSeries
from .model import BathMode, mode_arrays

__all__ = [
    "OracleConfig",
    "TruncationError",
    "exact_population",
    "build_hamiltonian",
    "bath_thermal_weights",
]

MAX_DIMENSION = 5000


class TruncationError(RuntimeError):
    """Number-basis truncation too small for the requested dynamics."""

    def __init__(self, deviation: float, suggested_n_max: int):
        self.deviation = deviation
        self.suggested_n_max = suggested_n_max
        super().__init__(
            f"doubling n_max moved the curve by {deviation:.3e} (>= 1e-4); "
            f"rerun with n_max >= {suggested_n_max}")


@dataclass
class OracleConfig:
    """Exact-propagation request: small bath, truncation, grid."""

    modes: tuple[BathMode, ...]
    n_max: int
    beta: float
    omega: float
    t_grid: np.ndarray

    def __post_init__(self):
        self.modes = tuple(self.modes)
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if not 1 <= len(self.modes) <= 2:
            raise ValueError("oracle supports 1 or 2 bath modes")
        if self.n_max < 10:
            raise ValueError("n_max must be at least 10")
        dim = 2 * (self.n_max + 1) ** len(self.modes)
        if dim > MAX_DIMENSION:
            raise ValueError(f"basis dimension {dim} exceeds "
                             f"{MAX_DIMENSION}; lower n_max")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.t_grid.ndim != 1 or self.t_grid.shape[0] < 1:
            raise ValueError("t_grid must be a non-empty 1-D array")


def _ladder(n_max: int) -> np.ndarray:
    a = np.zeros((n_max + 1, n_max + 1))
    ns = np.arange(1, n_max + 1, dtype=float)
    a[np.arange(n_max), np.arange(1, n_max + 1)] = np.sqrt(ns)
    return a


def _kron_chain(mats) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def build_hamiltonian(modes, n_max: int, omega: float) -> np.ndarray:
    """Full Hamiltonian in the spin (x) number-product basis, real
    symmetric.  Spin basis order: index 0 is the sigma_z = +1 state."""
    tab = mode_arrays(modes)
    m = tab.freq.shape[0]
    nb = n_max + 1
    dim_b = nb**m
    eye_b = np.eye(nb)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])

    h_bath = np.zeros(dim_b)  # sum_i w_i (n_i + 1/2), diagonal
    coupling = np.zeros((2 * dim_b, 2 * dim_b))
    a = _ladder(n_max)
    for i in range(m):
        w, c, mass = tab.freq[i], tab.coup[i], tab.mass[i]
        r_i = (a + a.T) / math.sqrt(2.0 * mass * w)
        r_full = _kron_chain([r_i if j == i else eye_b for j in range(m)])
        coupling += np.kron(np.diag([-c, c]), r_full)  # -c sigma_z (x) R_i
        levels = w * (np.arange(nb) + 0.5)
        h_bath += _kron_chain([levels if j == i else np.ones(nb)
                               for j in range(m)])

    h = coupling
    h += np.kron(-omega * sx, np.eye(dim_b))
    h += np.kron(np.eye(2), np.diag(h_bath))
    return h


def bath_thermal_weights(modes, n_max: int, beta: float) -> np.ndarray:
    """Diagonal of the truncated, renormalized thermal bath density in the
    number-product basis (the zero-point halves cancel against Z)."""
    tab = mode_arrays(modes)
    weights = np.ones(1)
    for i in range(tab.freq.shape[0]):
        w = np.exp(-beta * tab.freq[i] * np.arange(n_max + 1, dtype=float))
        w /= w.sum()
        weights = np.kron(weights, w)
    return weights


def _population_curve(modes, n_max, beta, omega, t_grid) -> np.ndarray:
    tab = mode_arrays(modes)
    nb = n_max + 1
    dim_b = nb ** tab.freq.shape[0]
    h = build_hamiltonian(tab, n_max, omega)
    energies, vecs = np.linalg.eigh(h)

    rho_diag = np.concatenate([bath_thermal_weights(tab, n_max, beta),
                               np.zeros(dim_b)])
    sz_diag = np.concatenate([np.ones(dim_b), -np.ones(dim_b)])
    rho_t = vecs.T @ (rho_diag[:, None] * vecs)
    o_t = vecs.T @ (sz_diag[:, None] * vecs)
    c = o_t * rho_t  # both symmetric, so C is too and the sine terms cancel

    de = energies[:, None] - energies[None, :]
    curve = np.empty(t_grid.shape[0])
    for k, t in enumerate(t_grid):
        curve[k] = float(np.sum(c * np.cos(de * t)))
    return curve


def exact_population(config: OracleConfig) -> PopulationSeries:
    """Exact <sigma_z(t)> on config.t_grid (stderr identically zero).

    The returned curve is computed at config.n_max; its convergence is
    checked against a doubled basis before returning.
    """
    base = _population_curve(config.modes, config.n_max, config.beta,
                             config.omega, config.t_grid)
    check = _population_curve(config.modes, 2 * config.n_max, config.beta,
                              config.omega, config.t_grid)
    deviation = float(np.max(np.abs(base - check)))
    if deviation >= 1e-4:
        raise TruncationError(deviation, 2 * config.n_max)
    return PopulationSeries(times=config.t_grid.copy(), mean=base,
                            stderr=np.zeros(config.t_grid.shape[0]),
                            n_aborted=0, n_traj=0, max_weight=0.0,
                            backend="oracle")
