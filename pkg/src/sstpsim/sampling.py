"""Initial-condition sampling for the mixed quantum-classical run.

Bath phase-space points come from the Wigner transform of the uncoupled
thermal bath density (a product of Gaussians per mode).  The subsystem
starts in the upper adiabatic-free state through the matrix
rho_s = (I + sigma_z)/2 expressed in the adiabatic basis at the sampled
bath configuration; the discrete pair of adiabatic indices is drawn
uniformly from the four combinations and compensated by the weight
w0 = 4 * rho_s[a', a], which is real under the eigenvector convention
used in the model module.

Draw-order contract (relied on by replay tests and both backends): for each
trajectory the generator is consumed as
  1. standard_normal(n_modes) -> positions,
  2. standard_normal(n_modes) -> momenta,
  3. integers(4)              -> index pair,
leaving the generator ready for the propagation uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, coupling_gamma, mode_arrays

__all__ = [
    "InitialDraw",
    "wigner_widths",
    "sample_bath",
    "initial_subsystem_matrix",
    "draw_initial",
]

# Order matches integers(4): (a, a') with a the bra-side propagation index.
_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class InitialDraw:
    """One sampled starting point: bath coordinates, index pair, weight."""

    r0: np.ndarray
    p0: np.ndarray
    pair0: tuple[int, int]
    w0: float


def wigner_widths(modes, beta: float):
    """Per-mode standard deviations (sigma_R, sigma_P) of the thermal Wigner
    function: sigma_R^2 = 1/(2 M w tanh(beta w / 2)), sigma_P^2 = M w /
    (2 tanh(beta w / 2))."""
    tab = mode_arrays(modes)
    th = np.tanh(0.5 * beta * tab.freq)
    sig_r = np.sqrt(1.0 / (2.0 * tab.mass * tab.freq * th))
    sig_p = np.sqrt(tab.mass * tab.freq / (2.0 * th))
    return sig_r, sig_p


def sample_bath(rng: np.random.Generator, modes, beta: float):
    """Draw (R, P) from the product thermal Wigner distribution."""
    tab = mode_arrays(modes)
    sig_r, sig_p = wigner_widths(tab, beta)
    n = tab.freq.shape[0]
    r = rng.standard_normal(n) * sig_r
    p = rng.standard_normal(n) * sig_p
    return r, p


def initial_subsystem_matrix(r, params: ModelParams, modes) -> np.ndarray:
    """rho_s = (I + sigma_z)/2 in the adiabatic basis at bath point r.

    This is the subsystem projector onto the +1 eigenstate of sigma_z
    (the "up"/donor state), rotated into the basis the trajectories run in.
    """
    from .model import sigma_z_adiabatic

    sz = sigma_z_adiabatic(r, params, modes)
    return 0.5 * (np.eye(2, dtype=complex) + sz)


def draw_initial(rng: np.random.Generator, params: ModelParams,
                 modes) -> InitialDraw:
    """Sample one trajectory start: bath point, index pair, weight.

    The pair (a, a') is uniform over the four combinations; the factor 4
    in w0 = 4 rho_s[a', a] removes the sampling bias.  Under the real
    eigenvector convention rho_s is real symmetric, so w0 is returned as a
    plain float: 1 +/- gamma/G on the diagonal pairs, Omega/G off-diagonal.
    """
    tab = mode_arrays(modes)
    r, p = sample_bath(rng, tab, params.beta)
    k = int(rng.integers(4))
    a, ap = _PAIRS[k]
    g = coupling_gamma(r, tab)
    root = math.sqrt(params.omega * params.omega + g * g)
    # 4 * rho[ap, a] written out per pair; keeps the hot path free of the
    # 2x2 complex matrix build.
    if a == ap:
        w0 = 2.0 * (1.0 + (g / root if a == 0 else -g / root))
    else:
        from .model import EIGENVECTOR_SIGN
        w0 = 2.0 * EIGENVECTOR_SIGN * params.omega / root
    return InitialDraw(r0=r, p0=p, pair0=(a, ap), w0=w0)
