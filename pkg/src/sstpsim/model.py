"""Spin-boson model in adimensional units.

A two-level system with tunneling frequency Omega is coupled through its
sigma_z channel to a bath of harmonic oscillators, linearly in the bath
coordinates.  All quantities are expressed in units of the bath cutoff
frequency (hbar = omega_c = 1), so the free physical parameters are Omega,
the Kondo parameter xi, the inverse temperature beta, and the bath
discretization (mode count and spectral cutoff).

The adiabatic basis diagonalizes h(R) = -Omega sigma_x - gamma(R) sigma_z
at fixed bath configuration, with gamma(R) = sum_j c_j R_j.  Eigenvectors
are taken real with positive first component; under that convention the
nonadiabatic coupling vector is d12_j = -Omega c_j / (2 (Omega^2 + gamma^2))
and sigma_z in the adiabatic basis has diagonal (+gamma, -gamma)/sqrt(Omega^2
+ gamma^2) and off-diagonal Omega/sqrt(Omega^2 + gamma^2).  Observable
estimates do not depend on this sign choice (the convention-invariance test
flips it and checks bit-equality).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ModelParams",
    "BathMode",
    "SurfaceData",
    "ModeTable",
    "mode_arrays",
    "discretize_bath",
    "coupling_gamma",
    "surface_eval",
    "bohr_frequency",
    "sigma_z_adiabatic",
]

# Global eigenvector sign convention (see module docstring).  +1.0 is the
# documented choice; the invariance test flips it to -1.0 temporarily.
EIGENVECTOR_SIGN = 1.0


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters and bath-discretization controls.

    Attributes
    ----------
    omega : float
        Subsystem tunneling frequency Omega (> 0).
    xi : float
        Kondo (friction) parameter of the Ohmic spectral density (>= 0).
    beta : float
        Inverse temperature (> 0).
    n_modes : int
        Number of discrete bath oscillators (default 200).
    omega_max : float
        Spectral cutoff of the discretization (default 3.0).
    mass : float
        Bath particle mass, common to all modes (default 1.0).
    """

    omega: float
    xi: float
    beta: float
    n_modes: int = 200
    omega_max: float = 3.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.xi < 0:
            raise ValueError("xi must be non-negative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.n_modes < 1:
            raise ValueError("n_modes must be at least 1")
        if not self.omega_max > 0:
            raise ValueError("omega_max must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class BathMode:
    """One harmonic bath oscillator: frequency, coupling, mass."""

    freq: float
    coupling: float
    mass: float = 1.0

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("mode frequency must be positive")
        if not self.mass > 0:
            raise ValueError("mode mass must be positive")


class ModeTable(NamedTuple):
    """Bath modes unpacked into arrays (freq, coup, mass)."""

    freq: np.ndarray
    coup: np.ndarray
    mass: np.ndarray


def mode_arrays(modes) -> ModeTable:
    """Return the bath as a ModeTable of float64 arrays.

    Accepts either a sequence of BathMode or an existing ModeTable (which is
    passed through unchanged, so hot paths can pre-convert once).
    """
    if isinstance(modes, ModeTable):
        return modes
    freq = np.array([m.freq for m in modes], dtype=float)
    coup = np.array([m.coupling for m in modes], dtype=float)
    mass = np.array([m.mass for m in modes], dtype=float)
    return ModeTable(freq, coup, mass)


@dataclass(frozen=True)
class SurfaceData:
    """Adiabatic surfaces and couplings at one bath configuration.

    e1 <= e2 include the bath potential; gap = e2 - e1 >= 2 Omega; d12 is the
    nonadiabatic coupling vector (d21 = -d12, stored once); f1, f2 are the
    Hellmann-Feynman forces on the lower and upper surface.
    """

    e1: float
    e2: float
    gap: float
    d12: np.ndarray
    f1: np.ndarray
    f2: np.ndarray


def discretize_bath(params: ModelParams) -> list[BathMode]:
    """Discretize the Ohmic bath J(w) = (pi/2) xi w e^{-w} into modes.

    Uses the logarithmic-density scheme: with w0 = (1 - e^{-omega_max})/N,
    mode j (1-based) has frequency w_j = -ln(1 - j w0) and coupling
    c_j = w_j sqrt(xi w0 M_j).  Frequencies increase strictly with j and the
    reorganization sum sum_j c_j^2/(2 M_j w_j^2) equals
    (xi/2)(1 - e^{-omega_max}) exactly.
    """
    n = params.n_modes
    w0 = (1.0 - math.exp(-params.omega_max)) / n
    j = np.arange(1, n + 1, dtype=float)
    if not 1.0 - n * w0 > 0.0:
        raise ValueError("discretization density too coarse: log argument "
                         "must stay positive")
    freqs = -np.log1p(-j * w0)
    coups = freqs * math.sqrt(params.xi * w0 * params.mass)
    return [BathMode(float(w), float(c), params.mass)
            for w, c in zip(freqs, coups)]


def coupling_gamma(r, modes) -> float:
    """Collective bath coordinate gamma(R) = sum_j c_j R_j."""
    tab = mode_arrays(modes)
    r = np.asarray(r, dtype=float)
    if r.shape != tab.coup.shape:
        raise ValueError(f"expected {tab.coup.shape[0]} bath positions, "
                         f"got shape {r.shape}")
    return float(tab.coup @ r)


def surface_eval(r, params: ModelParams, modes) -> SurfaceData:
    """Adiabatic energies, gap, coupling vector and forces at R = r.

    e1 = V_b - sqrt(Omega^2 + gamma^2), e2 = V_b + sqrt(Omega^2 + gamma^2)
    with V_b the bath harmonic potential.  Forces follow Hellmann-Feynman:
    f_{alpha,j} = -M_j w_j^2 R_j +/- c_j gamma / sqrt(Omega^2 + gamma^2),
    upper sign on the lower surface.
    """
    tab = mode_arrays(modes)
    r = np.asarray(r, dtype=float)
    g = float(tab.coup @ r)
    root = math.sqrt(params.omega * params.omega + g * g)
    vb = 0.5 * float((tab.mass * tab.freq**2) @ (r * r))
    gap = 2.0 * root
    # Omega > 0 forbids degeneracy; the minimum gap sits at gamma = 0.
    assert gap >= 2.0 * params.omega * (1.0 - 1e-12)
    d12 = (-EIGENVECTOR_SIGN * params.omega / (2.0 * root * root)) * tab.coup
    harm = -(tab.mass * tab.freq**2) * r
    tilt = (g / root) * tab.coup
    return SurfaceData(e1=vb - root, e2=vb + root, gap=gap, d12=d12,
                       f1=harm + tilt, f2=harm - tilt)


def bohr_frequency(alpha: int, alpha_prime: int, surface: SurfaceData) -> float:
    """Bohr frequency w_{alpha alpha'} = E_alpha - E_alpha' (hbar = 1).

    States are indexed 0 (lower surface) and 1 (upper surface).  The result
    is antisymmetric under index exchange and zero on diagonal pairs; it is
    computed from the gap so that (0,1)/(1,0) pairs get exactly opposite
    values.
    """
    if alpha not in (0, 1) or alpha_prime not in (0, 1):
        raise ValueError("adiabatic indices must be 0 (lower) or 1 (upper)")
    return (alpha - alpha_prime) * surface.gap


def sigma_z_adiabatic(r, params: ModelParams, modes) -> np.ndarray:
    """Pauli sigma_z expressed in the adiabatic basis at R = r.

    Hermitian, traceless and involutive; diagonal (+gamma, -gamma)/G and
    off-diagonal Omega/G with G = sqrt(Omega^2 + gamma^2), under the module
    sign convention.
    """
    g = coupling_gamma(r, modes)
    root = math.sqrt(params.omega * params.omega + g * g)
    cz = g / root
    cx = EIGENVECTOR_SIGN * params.omega / root
    return np.array([[cz, cx], [cx, -cz]], dtype=complex)
